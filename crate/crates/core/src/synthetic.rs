//! Seeded synthetic data whose labels are known by construction: a gazetteer
//! NER corpus, an assertion cue corpus, documents with planted entities and a
//! word-vector store whose vectors cluster by word category.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::annotation::{Annotation, AnnotationKind, Record};
use crate::assertion::{AssertionExample, AssertionLabel};
use crate::embeddings::EmbeddingStore;
use crate::ner::{NerDataset, TaggedSentence};
use crate::tags::{encode, Chunk, TagScheme};

pub const DRUGS: &[&str] = &[
    "aspirin", "ibuprofen", "metformin", "lisinopril", "atorvastatin", "amoxicillin", "warfarin",
    "insulin", "omeprazole", "prednisone", "heparin", "morphine", "acetaminophen", "gabapentin",
    "losartan", "albuterol", "clopidogrel", "furosemide", "sertraline", "levothyroxine",
];

pub const PROBLEMS: &[&str] = &[
    "fever", "cough", "headache", "nausea", "chest pain", "stomach pain", "sore throat",
    "short of breath", "high blood pressure", "diabetes", "pneumonia", "asthma", "anemia",
    "hypertension", "migraine", "back pain", "kidney failure", "heart failure", "rash",
    "dizziness", "fatigue", "Alzheimer", "SARS",
];

pub const DRUG: &str = "DRUG";
pub const PROBLEM: &str = "PROBLEM";

const SUBJECTS: &[&str] = &["he", "she", "the patient"];

/// A sentence frame. `{D}` is a drug slot, `{P}` a problem slot and `{S}` a
/// subject; each entity slot carries the assertion status the frame implies.
struct Template {
    text: &'static str,
    labels: &'static [AssertionLabel],
}

use AssertionLabel::*;

const NER_TEMPLATES: &[Template] = &[
    Template { text: "the patient took {D} for {P} .", labels: &[Present, Present] },
    Template { text: "{P} was treated with {D} .", labels: &[Present, Present] },
    Template { text: "{S} was started on {D} .", labels: &[Present] },
    Template { text: "{S} reports {P} after taking {D} .", labels: &[Present, Present] },
    Template { text: "patient took {D} daily .", labels: &[Present] },
    Template { text: "prescribed {D} and {D} .", labels: &[Present, Present] },
    Template { text: "complains of {P} and {P} .", labels: &[Present, Present] },
    Template { text: "{D} was given for {P} overnight .", labels: &[Present, Present] },
    Template { text: "{S} denies {P} .", labels: &[Absent] },
    Template { text: "no change in {P} since starting {D} .", labels: &[Present, Present] },
];

const CUE_TEMPLATES: &[Template] = &[
    Template { text: "{S} shows {P}", labels: &[Present] },
    Template { text: "{S} has {P}", labels: &[Present] },
    Template { text: "patient with severe {P}", labels: &[Present] },
    Template { text: "{S} became {P} last night", labels: &[Present] },
    Template { text: "{S} was admitted for {P}", labels: &[Present] },
    Template { text: "{S} shows no {P}", labels: &[Absent] },
    Template { text: "{S} denies {P}", labels: &[Absent] },
    Template { text: "no {P} was found", labels: &[Absent] },
    Template { text: "{S} has no {P}", labels: &[Absent] },
    Template { text: "negative for {P}", labels: &[Absent] },
    Template { text: "possible {P}", labels: &[Possible] },
    Template { text: "{S} has suspected {P}", labels: &[Possible] },
    Template { text: "{P} is suspected", labels: &[Possible] },
    Template { text: "cannot rule out {P}", labels: &[Possible] },
    Template { text: "{S} may have {P}", labels: &[Possible] },
    Template { text: "{S} became {P} with climbing a flight of stairs", labels: &[Conditional] },
    Template { text: "{S} gets {P} while walking", labels: &[Conditional] },
    Template { text: "{S} has {P} when lying down", labels: &[Conditional] },
    Template { text: "{S} becomes {P} with exertion", labels: &[Conditional] },
    Template { text: "{P} occurs only while running", labels: &[Conditional] },
    Template { text: "if {P} occurs , call the clinic", labels: &[Hypothetical] },
    Template { text: "return if {S} develops {P}", labels: &[Hypothetical] },
    Template { text: "{S} should watch for {P}", labels: &[Hypothetical] },
    Template { text: "in case of {P} , take medication", labels: &[Hypothetical] },
    Template { text: "father with {P}", labels: &[AssociatedWithSomeoneElse] },
    Template { text: "family history of {P}", labels: &[AssociatedWithSomeoneElse] },
    Template { text: "mother had {P}", labels: &[AssociatedWithSomeoneElse] },
    Template { text: "his brother has {P}", labels: &[AssociatedWithSomeoneElse] },
    Template { text: "sister diagnosed with {P}", labels: &[AssociatedWithSomeoneElse] },
];

/// A filled-in template: tokens plus entity spans (token indices, inclusive).
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSentence {
    pub tokens: Vec<String>,
    pub entities: Vec<SyntheticEntity>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticEntity {
    pub first: usize,
    pub last: usize,
    pub entity: &'static str,
    pub assertion: AssertionLabel,
}

fn fill<R: Rng>(template: &Template, capitalize: bool, rng: &mut R) -> SyntheticSentence {
    let mut tokens = Vec::new();
    let mut entities = Vec::new();
    let mut slot = 0;
    for word in template.text.split(' ') {
        let (phrase, entity) = match word {
            "{D}" => (*DRUGS.choose(rng).unwrap(), Some(DRUG)),
            "{P}" => (*PROBLEMS.choose(rng).unwrap(), Some(PROBLEM)),
            "{S}" => (*SUBJECTS.choose(rng).unwrap(), None),
            w => (w, None),
        };
        let first = tokens.len();
        tokens.extend(phrase.split(' ').map(str::to_string));
        if let Some(entity) = entity {
            entities.push(SyntheticEntity {
                first,
                last: tokens.len() - 1,
                entity,
                assertion: template.labels[slot],
            });
            slot += 1;
        }
    }
    if capitalize {
        let t = &mut tokens[0];
        let mut c = t.chars();
        if let Some(f) = c.next() {
            *t = f.to_uppercase().chain(c).collect();
        }
    }
    SyntheticSentence { tokens, entities }
}

/// Templated "patient took <DRUG> for <PROBLEM>" sentences tagged with `scheme`.
pub fn ner_corpus(sentences: usize, scheme: TagScheme, seed: u64) -> NerDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tagged = (0..sentences)
        .map(|_| {
            let t = NER_TEMPLATES.choose(&mut rng).unwrap();
            let s = fill(t, rng.random_bool(0.5), &mut rng);
            let chunks: Vec<Chunk> = s.entities.iter().map(|e| Chunk::new(e.first, e.last, e.entity)).collect();
            let tags = encode(&chunks, s.tokens.len(), scheme).expect("template chunks are disjoint");
            TaggedSentence { tokens: s.tokens, tags }
        })
        .collect();
    NerDataset::new(tagged, scheme).expect("generated tags are well formed")
}

/// Cue-rule assertion examples, balanced over the six labels.
///
/// Rules: "no"/"denies"/"negative for" mark absent; "father"/"mother"/"family
/// history of" mark someone else; "while"/"when"/"with climbing" mark
/// conditional; "if"/"in case of"/"watch for" mark hypothetical;
/// "possible"/"suspected"/"may have" mark possible; anything else is present.
pub fn assertion_corpus(examples: usize, seed: u64) -> Vec<AssertionExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<AssertionExample> = (0..examples)
        .map(|i| {
            let label = AssertionLabel::ALL[i % AssertionLabel::ALL.len()];
            let frames: Vec<&Template> = CUE_TEMPLATES.iter().filter(|t| t.labels[0] == label).collect();
            let s = fill(frames.choose(&mut rng).unwrap(), rng.random_bool(0.5), &mut rng);
            let e = &s.entities[0];
            AssertionExample::new(&s.tokens, e.first, e.last, label)
        })
        .collect();
    out.shuffle(&mut rng);
    out
}

/// Every word the generators can emit, lowercased.
pub fn vocabulary() -> BTreeSet<String> {
    let mut words = BTreeSet::new();
    let templates = NER_TEMPLATES.iter().chain(CUE_TEMPLATES);
    for t in templates {
        words.extend(t.text.split(' ').filter(|w| !w.starts_with('{')).map(str::to_string));
    }
    for phrase in DRUGS.iter().chain(PROBLEMS).chain(SUBJECTS) {
        words.extend(phrase.split(' ').map(str::to_lowercase));
    }
    words.insert(".".into());
    words
}

const CUE_GROUPS: &[&[&str]] = &[
    &["no", "denies", "negative"],
    &["father", "mother", "brother", "sister", "family", "his"],
    &["possible", "suspected", "may", "rule", "cannot"],
    &["while", "when", "climbing", "exertion", "walking", "running", "lying", "stairs"],
    &["if", "case", "watch", "should", "return", "develops"],
];

fn uniform(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Word vectors for [`vocabulary`]. Drugs, problem words and each cue group
/// share a centroid plus small per-word noise; other words get their own
/// random vector.
pub fn embedding_store(dim: usize, seed: u64) -> EmbeddingStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let drug_words: BTreeSet<&str> = DRUGS.iter().copied().collect();
    let problem_words: BTreeSet<String> = PROBLEMS
        .iter()
        .flat_map(|p| p.split(' ').map(str::to_lowercase))
        .filter(|w| w != "of")
        .collect();
    let mut centroids: Vec<Vec<f64>> = (0..CUE_GROUPS.len() + 2).map(|_| uniform(&mut rng, dim, 1.0)).collect();
    let problem_centroid = centroids.pop().unwrap();
    let drug_centroid = centroids.pop().unwrap();
    let entries = vocabulary().into_iter().map(|w| {
        let centroid = if drug_words.contains(w.as_str()) {
            Some(&drug_centroid)
        } else if problem_words.contains(&w) {
            Some(&problem_centroid)
        } else {
            CUE_GROUPS.iter().position(|g| g.contains(&w.as_str())).map(|i| &centroids[i])
        };
        let v = match centroid {
            Some(c) => {
                let noise = uniform(&mut rng, dim, 0.3);
                c.iter().zip(noise).map(|(a, b)| a + b).collect()
            }
            None => uniform(&mut rng, dim, 1.0),
        };
        (w, v)
    });
    EmbeddingStore::from_entries(dim, entries).expect("vectors have the declared dimension")
}

/// A generated document with the entities planted in it.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedDocument {
    pub id: String,
    pub text: String,
    pub entities: Vec<PlantedEntity>,
}

/// Character span (inclusive) of a planted entity and its known labels.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedEntity {
    pub begin: usize,
    pub end: usize,
    pub text: String,
    pub entity: &'static str,
    pub assertion: AssertionLabel,
}

impl PlantedDocument {
    pub fn record(&self) -> Record {
        Record::new(&self.id, &self.text)
    }

    /// Record with gold `ner_chunk` and `assertion` columns built from the plan.
    pub fn gold_record(&self) -> Record {
        let mut r = self.record();
        let chunks = self
            .entities
            .iter()
            .map(|e| Annotation::new(AnnotationKind::Chunk, e.begin, e.end, &e.text).with_meta("entity", e.entity))
            .collect();
        let assertions = self
            .entities
            .iter()
            .map(|e| {
                Annotation::new(AnnotationKind::Assertion, e.begin, e.end, e.assertion.as_str())
                    .with_meta("assertion", e.assertion.as_str())
                    .with_meta("chunk", &e.text)
                    .with_meta("entity", e.entity)
            })
            .collect();
        r.columns.insert("ner_chunk".into(), chunks);
        r.columns.insert("assertion".into(), assertions);
        r
    }
}

fn planted_document(id: String, sentences: usize, rng: &mut ChaCha8Rng) -> PlantedDocument {
    let mut text = String::new();
    let mut chars = 0;
    let mut entities = Vec::new();
    for i in 0..sentences {
        let cue = rng.random_bool(0.5);
        let template = if cue { CUE_TEMPLATES.choose(rng) } else { NER_TEMPLATES.choose(rng) }.unwrap();
        let mut s = fill(template, true, rng);
        if cue {
            s.tokens.push(".".into());
        }
        if i > 0 {
            text.push(' ');
            chars += 1;
        }
        let mut starts = Vec::with_capacity(s.tokens.len());
        for (t, token) in s.tokens.iter().enumerate() {
            if t > 0 {
                text.push(' ');
                chars += 1;
            }
            starts.push(chars);
            text.push_str(token);
            chars += token.chars().count();
        }
        for e in &s.entities {
            let begin = starts[e.first];
            let end = starts[e.last] + s.tokens[e.last].chars().count() - 1;
            entities.push(PlantedEntity {
                begin,
                end,
                text: s.tokens[e.first..=e.last].join(" "),
                entity: e.entity,
                assertion: e.assertion,
            });
        }
    }
    PlantedDocument { id, text, entities }
}

/// `documents` documents of `sentences` sentences each, ids `doc-00000`, ...
pub fn planted_corpus(documents: usize, sentences: usize, seed: u64) -> Vec<PlantedDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..documents)
        .map(|i| planted_document(format!("doc-{i:05}"), sentences, &mut rng))
        .collect()
}

/// Plain records totalling at least `min_bytes` of text.
pub fn corpus_of_size(min_bytes: usize, sentences_per_document: usize, seed: u64) -> Vec<Record> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut bytes = 0;
    while bytes < min_bytes {
        let doc = planted_document(format!("doc-{:06}", out.len()), sentences_per_document, &mut rng);
        bytes += doc.text.len();
        out.push(doc.record());
    }
    out
}
