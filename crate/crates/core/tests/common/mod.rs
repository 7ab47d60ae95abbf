#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::path::{Path, PathBuf};

use clinlp::assertion::{extract_scope, train_assertion, AssertionConfig, AssertionLabel, Scope};
use clinlp::eval::{prf, EvalReport};
use clinlp::ner::{train, NerConfig};
use clinlp::nn::{
    grad_check, softmax_xent, BiLstm, CharConv, Dense, Dropout, EmbeddingTable, GradCheckConfig, GradCheckReport,
    Lstm, Parameter, Parameterized, Tensor,
};
use clinlp::synthetic::{self, PlantedDocument};
use clinlp::tags::{Chunk, TagScheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// A layer plus its input, so input gradients are checked along with weights.
struct Probe<L> {
    layer: L,
    input: Parameter,
}

impl<L: Parameterized> Parameterized for Probe<L> {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut p = self.layer.parameters();
        p.push(&self.input);
        p
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p = self.layer.parameters_mut();
        p.push(&mut self.input);
        p
    }
}

struct NoParams;

impl Parameterized for NoParams {
    fn parameters(&self) -> Vec<&Parameter> {
        Vec::new()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        Vec::new()
    }
}

fn weighted_sum(out: &Tensor, weights: &Tensor) -> f64 {
    out.data().iter().zip(weights.data()).map(|(a, b)| a * b).sum()
}

fn accumulate(into: &mut Tensor, grad: &Tensor) {
    for (a, b) in into.data_mut().iter_mut().zip(grad.data()) {
        *a += b;
    }
}

/// Central-difference checks for every layer, each against a random linear
/// objective `sum(out * W)`.
pub fn layer_checks() -> Vec<(&'static str, GradCheckReport)> {
    let mut r = rng(101);
    let cfg = GradCheckConfig::default;
    let mut out = Vec::new();

    let mut dense = Probe { layer: Dense::new("dense", 4, 3, &mut r), input: Parameter::new("x", random_tensor(&[5, 4], &mut r)) };
    let w = random_tensor(&[5, 3], &mut r);
    out.push((
        "dense",
        grad_check(
            &mut dense,
            |p, g| {
                let (y, cache) = p.layer.forward(&p.input.value).unwrap();
                if g {
                    let dx = p.layer.backward(&cache, &w);
                    accumulate(&mut p.input.grad, &dx);
                }
                weighted_sum(&y, &w)
            },
            cfg(),
        ),
    ));

    let mut table = EmbeddingTable::new("emb", 6, 3, &mut r);
    let ids = [1, 4, 1, 0, 9, 5];
    let w = random_tensor(&[ids.len(), 3], &mut r);
    out.push((
        "embedding",
        grad_check(
            &mut table,
            |t, g| {
                let y = t.forward(&ids);
                if g {
                    t.backward(&ids, &w);
                }
                weighted_sum(&y, &w)
            },
            cfg(),
        ),
    ));

    let mut conv = Probe { layer: CharConv::new("conv", 3, 4, 5, &mut r), input: Parameter::new("chars", random_tensor(&[6, 4], &mut r)) };
    let w = random_tensor(&[5], &mut r);
    out.push((
        "char_conv_maxpool",
        grad_check(
            &mut conv,
            |p, g| {
                let (y, cache) = p.layer.forward(&p.input.value).unwrap();
                if g {
                    let dx = p.layer.backward(&cache, w.data());
                    accumulate(&mut p.input.grad, &dx);
                }
                weighted_sum(&y, &w)
            },
            cfg(),
        ),
    ));

    let mut lstm = Probe { layer: Lstm::new("lstm", 3, 4, &mut r), input: Parameter::new("x", random_tensor(&[5, 3], &mut r)) };
    let w = random_tensor(&[5, 4], &mut r);
    out.push((
        "lstm",
        grad_check(
            &mut lstm,
            |p, g| {
                let cache = p.layer.forward(&p.input.value).unwrap();
                let loss = weighted_sum(cache.hidden(), &w);
                if g {
                    let dx = p.layer.backward(&cache, &w);
                    accumulate(&mut p.input.grad, &dx);
                }
                loss
            },
            cfg(),
        ),
    ));

    let mut bilstm = Probe { layer: BiLstm::new("bilstm", 3, 4, &mut r), input: Parameter::new("x", random_tensor(&[4, 3], &mut r)) };
    let w = random_tensor(&[4, 8], &mut r);
    out.push((
        "bilstm",
        grad_check(
            &mut bilstm,
            |p, g| {
                let (y, cache) = p.layer.forward(&p.input.value).unwrap();
                if g {
                    let dx = p.layer.backward(&cache, &w);
                    accumulate(&mut p.input.grad, &dx);
                }
                weighted_sum(&y, &w)
            },
            cfg(),
        ),
    ));

    let mut drop = Probe { layer: NoParams, input: Parameter::new("x", random_tensor(&[3, 4], &mut r)) };
    let w = random_tensor(&[3, 4], &mut r);
    let dropout = Dropout::new(0.4);
    out.push((
        "dropout",
        grad_check(
            &mut drop,
            |p, g| {
                let mut y = p.input.value.clone();
                let mask = dropout.forward_train(&mut y, &mut rng(7));
                if g {
                    let mut dx = w.clone();
                    Dropout::backward(mask.as_deref(), &mut dx);
                    accumulate(&mut p.input.grad, &dx);
                }
                weighted_sum(&y, &w)
            },
            cfg(),
        ),
    ));

    let mut logits = Probe { layer: NoParams, input: Parameter::new("logits", random_tensor(&[4, 5], &mut r)) };
    let targets = [0, 3, 4, 1];
    let mask = [true, false, true, true];
    out.push((
        "softmax_xent",
        grad_check(
            &mut logits,
            |p, g| {
                let (loss, dl) = softmax_xent(&p.input.value, &targets, &mask).unwrap();
                if g {
                    accumulate(&mut p.input.grad, &dl);
                }
                loss
            },
            cfg(),
        ),
    ));
    out
}

/// Whole-network checks: NER on a three-sentence batch, assertion on one example.
pub fn network_checks() -> Vec<(&'static str, GradCheckReport)> {
    use clinlp::assertion::{AssertionDims, AssertionNetwork, ScopeInput};
    use clinlp::ner::{EncodedSentence, NerDims, NerNetwork};

    let mut r = rng(202);
    let dims = NerDims { chars: 6, char_dim: 3, char_filters: 4, char_window: 3, word_dim: 2, hidden: 3, labels: 3 };
    let mut ner = NerNetwork::new(dims, 0.0, &mut r);
    let sentence = |ids: &[&[usize]], r: &mut ChaCha8Rng| EncodedSentence {
        char_ids: ids.iter().map(|i| i.to_vec()).collect(),
        words: random_tensor(&[ids.len(), 2], r),
    };
    let data = [
        (sentence(&[&[1, 2, 3], &[5]], &mut r), vec![0, 1]),
        (sentence(&[&[2, 2], &[3, 1, 4, 1, 5], &[0]], &mut r), vec![1, 2, 0]),
        (sentence(&[&[4]], &mut r), vec![2]),
    ];
    let batch: Vec<(&EncodedSentence, &[usize])> = data.iter().map(|(s, t)| (s, t.as_slice())).collect();
    let ner_report = grad_check(
        &mut ner,
        |n, g| n.loss(&batch, None::<&mut ChaCha8Rng>, g).unwrap(),
        GradCheckConfig::default(),
    );

    let dims = AssertionDims { word_dim: 3, flag_dim: 2, hidden: 4, labels: 6 };
    let mut net = AssertionNetwork::new(dims, 0.0, &mut r);
    let x = ScopeInput { words: random_tensor(&[5, 3], &mut r), flags: vec![false, true, true, false, false] };
    let assertion_report = grad_check(
        &mut net,
        |n, g| n.loss(&[(&x, 4)], None::<&mut ChaCha8Rng>, g).unwrap(),
        GradCheckConfig::default(),
    );
    vec![("ner_network", ner_report), ("assertion_network", assertion_report)]
}

/// Non-overlapping chunks over `n` tokens with labels from `labels`.
pub fn random_chunks(n: usize, labels: &[&str], rng: &mut ChaCha8Rng) -> Vec<Chunk> {
    let mut chunks = Vec::new();
    let mut i = 0;
    while i < n {
        if rng.random_bool(0.4) {
            let len = rng.random_range(1..=3.min(n - i));
            let label = labels[rng.random_range(0..labels.len())];
            chunks.push(Chunk::new(i, i + len - 1, label));
            i += len;
        } else {
            i += 1;
        }
    }
    chunks
}

/// Every tag of `scheme` over labels `A` and `B`.
pub fn tag_alphabet(scheme: TagScheme) -> Vec<String> {
    let prefixes: &[&str] = match scheme {
        TagScheme::Bio => &["B", "I"],
        TagScheme::Bioes => &["B", "I", "E", "S"],
    };
    let mut tags = vec!["O".to_string()];
    for label in ["A", "B"] {
        tags.extend(prefixes.iter().map(|p| format!("{p}-{label}")));
    }
    tags
}

/// All sequences over `alphabet` of length exactly `len`.
pub fn sequences(alphabet: &[String], len: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<String>| {
                alphabet.iter().map(move |t| {
                    let mut s = prefix.clone();
                    s.push(t.clone());
                    s
                })
            })
            .collect();
    }
    out
}

/// Chunks are in bounds, non-empty, sorted and disjoint.
pub fn chunks_well_formed(chunks: &[Chunk], n: usize) -> bool {
    chunks.iter().all(|c| c.first_token <= c.last_token && c.last_token < n)
        && chunks.windows(2).all(|w| w[0].last_token < w[1].first_token)
}

/// The clipped window, computed position by position.
pub fn scope_oracle(n: usize, first: usize, last: usize, left: usize, right: usize) -> (usize, usize, Vec<bool>) {
    let inside: Vec<usize> = (0..n)
        .filter(|&i| i as i64 >= first as i64 - left as i64 && i as i64 <= (last + right) as i64)
        .collect();
    let flags = inside.iter().map(|&i| i >= first && i <= last).collect();
    (inside[0], *inside.last().unwrap(), flags)
}

/// Number of mismatches between `extract_scope` and the oracle for every
/// sentence length up to `max_n` and every target span.
pub fn scope_mismatches(max_n: usize, config: &AssertionConfig) -> (usize, usize) {
    let (mut cases, mut bad) = (0, 0);
    for n in 1..=max_n {
        for first in 0..n {
            for last in first..n {
                cases += 1;
                let Scope { begin, end, flags } = extract_scope(n, first, last, config);
                if (begin, end, flags) != scope_oracle(n, first, last, config.left_window, config.right_window) {
                    bad += 1;
                }
            }
        }
    }
    (cases, bad)
}

/// Per-label (tp, fp, fn) by pairwise comparison.
pub fn chunk_counts_oracle(gold: &[Vec<Chunk>], pred: &[Vec<Chunk>]) -> BTreeMap<String, (usize, usize, usize)> {
    let mut counts: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for (g, p) in gold.iter().zip(pred) {
        for c in p {
            let e = counts.entry(c.label.clone()).or_default();
            if g.iter().any(|x| x == c) {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
        for c in g {
            if !p.iter().any(|x| x == c) {
                counts.entry(c.label.clone()).or_default().2 += 1;
            }
        }
    }
    counts
}

/// Compares a report against per-label counts, recomputing every metric.
pub fn report_matches(report: &EvalReport, counts: &[(String, (usize, usize, usize))]) -> Result<(), String> {
    if report.per_label.len() != counts.len() {
        return Err(format!("{} rows, expected {}", report.per_label.len(), counts.len()));
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    let mut f1s = Vec::new();
    for (row, (label, (t, p, n))) in report.per_label.iter().zip(counts) {
        let (precision, recall, f1) = prf(*t, *p, *n);
        let expected = (label.as_str(), *t, *p, *n, precision, recall, f1);
        let got = (row.label.as_str(), row.tp, row.fp, row.fn_, row.precision, row.recall, row.f1);
        if got != expected {
            return Err(format!("row {got:?}, expected {expected:?}"));
        }
        tp += t;
        fp += p;
        fn_ += n;
        if t + p + n > 0 {
            f1s.push(f1);
        }
    }
    let (mp, mr, mf) = prf(tp, fp, fn_);
    let macro_f1 = if f1s.is_empty() { 0.0 } else { f1s.iter().sum::<f64>() / f1s.len() as f64 };
    let got = (report.micro_precision, report.micro_recall, report.micro_f1, report.macro_f1);
    if got != (mp, mr, mf, macro_f1) {
        return Err(format!("aggregates {got:?}, expected {:?}", (mp, mr, mf, macro_f1)));
    }
    Ok(())
}

/// Confusion-matrix counts in the fixed report order.
pub fn assertion_counts_oracle(gold: &[AssertionLabel], pred: &[AssertionLabel]) -> Vec<(String, (usize, usize, usize))> {
    let mut m = [[0usize; 6]; 6];
    for (g, p) in gold.iter().zip(pred) {
        m[g.index()][p.index()] += 1;
    }
    clinlp::eval::ASSERTION_REPORT_ORDER
        .iter()
        .map(|l| {
            let i = l.index();
            let tp = m[i][i];
            let row: usize = m[i].iter().sum();
            let col: usize = (0..6).map(|g| m[g][i]).sum();
            (l.display_name().to_string(), (tp, col - tp, row - tp))
        })
        .collect()
}

pub fn tiny_ner_config() -> NerConfig {
    NerConfig {
        max_epochs: 3,
        lstm_hidden: 12,
        char_filters: 6,
        char_embedding_dim: 6,
        ..NerConfig::default()
    }
}

pub fn tiny_assertion_config() -> AssertionConfig {
    AssertionConfig { epochs: 3, lstm_hidden: 12, ..AssertionConfig::default() }
}

pub const EMBEDDING_DIM: usize = 16;

/// Writes vectors, a small NER model, a small assertion model and two
/// pipeline configs (`ner.toml` without assertion, `full.toml` with it)
/// into `dir`. Returns the path of `full.toml`.
pub fn model_fixture(dir: &Path) -> PathBuf {
    let store = synthetic::embedding_store(EMBEDDING_DIM, 5);
    store.write(File::create(dir.join("vectors.txt")).unwrap()).unwrap();
    let ner = train(&tiny_ner_config(), &synthetic::ner_corpus(200, TagScheme::Bio, 6), &store).unwrap();
    ner.save(dir.join("ner.model")).unwrap();
    let assertion = train_assertion(&tiny_assertion_config(), &synthetic::assertion_corpus(120, 7), &store).unwrap();
    assertion.save(dir.join("assertion.model")).unwrap();
    let ner_stages = r#"[[stages]]
type = "document_assembler"

[[stages]]
type = "sentence_detector"

[[stages]]
type = "tokenizer"

[[stages]]
type = "word_embeddings"
path = "vectors.txt"

[[stages]]
type = "ner"
model = "ner.model"

[[stages]]
type = "ner_converter"
"#;
    std::fs::write(dir.join("ner.toml"), ner_stages).unwrap();
    let full = format!("{ner_stages}\n[[stages]]\ntype = \"assertion\"\nmodel = \"assertion.model\"\n");
    std::fs::write(dir.join("full.toml"), full).unwrap();
    dir.join("full.toml")
}

/// Expected top terms computed straight from the planted entities.
pub fn planted_top_terms(docs: &[PlantedDocument], entity: &str, k: usize) -> Vec<(String, usize)> {
    let mut by_key: HashMap<String, HashMap<String, usize>> = HashMap::new();
    for e in docs.iter().flat_map(|d| &d.entities).filter(|e| e.entity == entity) {
        *by_key.entry(e.text.to_lowercase()).or_default().entry(e.text.clone()).or_default() += 1;
    }
    let mut rows: Vec<(String, usize, String)> = by_key
        .into_iter()
        .map(|(key, forms)| {
            let total = forms.values().sum();
            let best = forms.values().copied().max().unwrap();
            let shown = forms.iter().filter(|(_, &c)| c == best).map(|(s, _)| s.clone()).min().unwrap();
            (key, total, shown)
        })
        .collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    rows.into_iter().take(k).map(|(_, n, s)| (s, n)).collect()
}

pub fn planted_matrix(docs: &[PlantedDocument], types: &[&str]) -> Vec<(String, Vec<usize>)> {
    docs.iter()
        .map(|d| {
            let row = types.iter().map(|t| d.entities.iter().filter(|e| e.entity == *t).count()).collect();
            (d.id.clone(), row)
        })
        .collect()
}

pub fn planted_filter(docs: &[PlantedDocument], entity: &str, labels: &BTreeSet<AssertionLabel>) -> Vec<(String, String, AssertionLabel)> {
    docs.iter()
        .flat_map(|d| d.entities.iter().map(move |e| (d, e)))
        .filter(|(_, e)| e.entity == entity && labels.contains(&e.assertion))
        .map(|(d, e)| (d.id.clone(), e.text.clone(), e.assertion))
        .collect()
}
