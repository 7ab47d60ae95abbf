use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotation::{Annotation, AnnotationKind, Record};
use crate::pipeline::InputColumn;
use crate::tags::{decode, TagScheme};
use crate::{Error, Result};

/// Column holding gold tags in records built from CoNLL data.
pub const LABEL_COLUMN: &str = "label";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

impl TaggedSentence {
    pub fn new<S: Into<String>>(pairs: impl IntoIterator<Item = (S, S)>) -> Self {
        let (tokens, tags) = pairs.into_iter().map(|(a, b)| (a.into(), b.into())).unzip();
        TaggedSentence { tokens, tags }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Tagged sentences plus the label and character vocabularies built from them.
#[derive(Clone, Debug, PartialEq)]
pub struct NerDataset {
    pub sentences: Vec<TaggedSentence>,
    pub scheme: TagScheme,
    /// `O` first, then the remaining tags sorted.
    pub label_vocab: Vec<String>,
    /// Known characters, sorted. Character id `i + 1` maps to `char_vocab[i]`; id 0 is OOV.
    pub char_vocab: Vec<char>,
}

impl NerDataset {
    /// Validates every sentence with the strict decoder of `scheme`.
    pub fn new(sentences: Vec<TaggedSentence>, scheme: TagScheme) -> Result<Self> {
        let mut labels = BTreeSet::new();
        let mut chars = BTreeSet::new();
        for (i, s) in sentences.iter().enumerate() {
            if s.tokens.len() != s.tags.len() {
                return Err(Error::Data(format!(
                    "sentence {i}: {} tokens but {} tags",
                    s.tokens.len(),
                    s.tags.len()
                )));
            }
            decode(&s.tags, scheme).map_err(|e| Error::Data(format!("sentence {i}: {e}")))?;
            labels.extend(s.tags.iter().filter(|t| *t != "O").cloned());
            chars.extend(s.tokens.iter().flat_map(|t| t.chars()));
        }
        let mut label_vocab = vec!["O".to_string()];
        label_vocab.extend(labels);
        Ok(NerDataset {
            sentences,
            scheme,
            label_vocab,
            char_vocab: chars.into_iter().collect(),
        })
    }

    pub fn read_conll(path: impl AsRef<Path>, scheme: TagScheme) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        Self::parse_conll(BufReader::new(file), scheme)
    }

    /// Token per line, last column is the tag, blank lines end sentences,
    /// `-DOCSTART-` lines are skipped.
    pub fn parse_conll<R: BufRead>(reader: R, scheme: TagScheme) -> Result<Self> {
        let mut sentences = Vec::new();
        let mut current = TaggedSentence::new(Vec::<(String, String)>::new());
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.starts_with("-DOCSTART-") {
                continue;
            }
            if trimmed.is_empty() {
                if !current.is_empty() {
                    sentences.push(std::mem::replace(
                        &mut current,
                        TaggedSentence::new(Vec::<(String, String)>::new()),
                    ));
                }
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() < 2 {
                return Err(Error::Data(format!("line {}: tag column missing", i + 1)));
            }
            current.tokens.push(fields[0].to_string());
            current.tags.push(fields[fields.len() - 1].to_string());
        }
        if !current.is_empty() {
            sentences.push(current);
        }
        Self::new(sentences, scheme)
    }

    pub fn write_conll<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for s in &self.sentences {
            for (token, tag) in s.tokens.iter().zip(&s.tags) {
                writeln!(w, "{token} {tag}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// One record per sentence, tokens joined by single spaces, with
    /// `document`, `sentence`, `token` and `label` columns already filled in.
    pub fn to_records(&self) -> Vec<Record> {
        self.sentences
            .iter()
            .enumerate()
            .map(|(i, s)| sentence_record(format!("s{i:06}"), s))
            .collect()
    }

    /// Columns carried by [`to_records`](Self::to_records) output.
    pub fn provided_columns() -> Vec<InputColumn> {
        vec![
            InputColumn::new("document", AnnotationKind::Document),
            InputColumn::new("sentence", AnnotationKind::Sentence),
            InputColumn::new("token", AnnotationKind::Token),
            InputColumn::new(LABEL_COLUMN, AnnotationKind::NamedEntityTag),
        ]
    }
}

fn sentence_record(id: String, s: &TaggedSentence) -> Record {
    let text = s.tokens.join(" ");
    let mut tokens = Vec::with_capacity(s.len());
    let mut labels = Vec::with_capacity(s.len());
    let mut begin = 0;
    for (token, tag) in s.tokens.iter().zip(&s.tags) {
        let end = begin + token.chars().count() - 1;
        tokens.push(Annotation::new(AnnotationKind::Token, begin, end, token).with_meta("sentence", 0));
        labels.push(Annotation::new(AnnotationKind::NamedEntityTag, begin, end, tag).with_meta("sentence", 0));
        begin = end + 2;
    }
    let last = text.chars().count().saturating_sub(1);
    let mut record = Record::new(id, text.clone());
    record.columns.insert(
        "document".into(),
        vec![Annotation::new(AnnotationKind::Document, 0, last, &text).with_meta("trim_offset", 0)],
    );
    record.columns.insert(
        "sentence".into(),
        vec![Annotation::new(AnnotationKind::Sentence, 0, last, &text).with_meta("sentence", 0)],
    );
    record.columns.insert("token".into(), tokens);
    record.columns.insert(LABEL_COLUMN.into(), labels);
    record
}
