//! Corpus ingestion, batch annotation, reports and the scaling benchmark.

mod bench;
mod report;

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use indexmap::IndexMap;
use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::annotation::{write_jsonl, Record, ERRORS_COLUMN};
use crate::config::PipelineConfig;
use crate::pipeline::PipelineModel;
use crate::{Error, Result};

pub use bench::{benchmark, record_digest, BenchmarkReport, BenchmarkRow};
pub use report::{
    assertion_filter, entity_matrix, top_terms, AssertionFilter, AssertionRow, EntityMatrix, TermCount, TopTerms,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    /// One UTF-8 text file per document; the id is the file stem.
    Dir,
    /// One JSON object per line.
    Jsonl,
}

impl FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dir" => Ok(SourceKind::Dir),
            "jsonl" => Ok(SourceKind::Jsonl),
            _ => Err(Error::Config(format!("unknown input format '{s}' (expected dir or jsonl)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSource {
    pub kind: SourceKind,
    pub path: PathBuf,
    pub text_field: String,
    pub id_field: String,
}

/// An input document that could not be read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceError {
    /// File name or `line N`.
    pub location: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub records: Vec<Record>,
    pub errors: Vec<SourceError>,
}

impl CorpusSource {
    pub fn new(kind: SourceKind, path: impl Into<PathBuf>) -> Self {
        CorpusSource {
            kind,
            path: path.into(),
            text_field: "text".into(),
            id_field: "id".into(),
        }
    }

    pub fn directory(path: impl Into<PathBuf>) -> Self {
        Self::new(SourceKind::Dir, path)
    }

    pub fn jsonl(path: impl Into<PathBuf>) -> Self {
        Self::new(SourceKind::Jsonl, path)
    }

    /// Reads every document. Unreadable documents become [`SourceError`]s;
    /// an unreadable source is an error.
    pub fn read(&self) -> Result<Corpus> {
        match self.kind {
            SourceKind::Dir => self.read_dir(),
            SourceKind::Jsonl => self.read_jsonl(),
        }
    }

    fn read_dir(&self) -> Result<Corpus> {
        let mut paths: Vec<PathBuf> = fs::read_dir(&self.path)
            .map_err(|e| Error::Data(format!("cannot read directory {}: {e}", self.path.display())))?
            .map(|entry| entry.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        paths.retain(|p| p.is_file());
        paths.sort();
        let mut corpus = Corpus::default();
        for path in paths {
            let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
            match fs::read_to_string(&path) {
                Ok(text) => {
                    let id = path.file_stem().unwrap_or_default().to_string_lossy();
                    corpus.records.push(Record::new(id, text));
                }
                Err(e) => corpus.errors.push(SourceError { location: name, message: e.to_string() }),
            }
        }
        Ok(corpus)
    }

    fn read_jsonl(&self) -> Result<Corpus> {
        let file = File::open(&self.path)
            .map_err(|e| Error::Data(format!("cannot open {}: {e}", self.path.display())))?;
        let mut corpus = Corpus::default();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match self.parse_line(&line, i + 1) {
                Ok(r) => corpus.records.push(r),
                Err(message) => corpus.errors.push(SourceError { location: format!("line {}", i + 1), message }),
            }
        }
        Ok(corpus)
    }

    fn parse_line(&self, line: &str, number: usize) -> std::result::Result<Record, String> {
        let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let Value::Object(object) = value else {
            return Err("not a JSON object".into());
        };
        let text = match object.get(&self.text_field) {
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(format!("field '{}' is not a string", self.text_field)),
            None => return Err(format!("missing field '{}'", self.text_field)),
        };
        let id = match object.get(&self.id_field) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            Some(_) => return Err(format!("field '{}' is not a string or number", self.id_field)),
            None => format!("line-{number:06}"),
        };
        Ok(Record::new(id, text))
    }
}

/// Sorts by id; with `sample`, keeps a seeded random subset of that size first.
pub fn select(mut records: Vec<Record>, sample: Option<usize>, seed: u64) -> Vec<Record> {
    if let Some(k) = sample.filter(|&k| k < records.len()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keep = rand::seq::index::sample(&mut rng, records.len(), k).into_vec();
        keep.sort_unstable();
        let mut all: Vec<Option<Record>> = records.into_iter().map(Some).collect();
        records = keep.into_iter().map(|i| all[i].take().unwrap()).collect();
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    records
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub pipeline: PathBuf,
    pub workers: usize,
    pub seed: u64,
    /// Annotate a random subset of this many documents.
    pub sample: Option<usize>,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn new(pipeline: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        RunConfig {
            pipeline: pipeline.into(),
            workers: 1,
            seed: 42,
            sample: None,
            output: output.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub documents: usize,
    pub annotations: IndexMap<String, usize>,
    pub documents_with_errors: usize,
    pub source_errors: usize,
    pub workers: usize,
    pub wall_seconds: f64,
}

/// Annotates records sorted by id with `model` on `workers` threads.
pub fn annotate_records(model: &PipelineModel, records: Vec<Record>, workers: usize) -> Result<Vec<Record>> {
    let mut records = records;
    records.sort_by(|a, b| a.id.cmp(&b.id));
    model.transform_parallel(records, workers)
}

pub fn summarize(records: &[Record], source_errors: usize, workers: usize, wall_seconds: f64) -> Summary {
    let mut annotations = IndexMap::new();
    for r in records {
        for (name, column) in &r.columns {
            *annotations.entry(name.clone()).or_insert(0) += column.len();
        }
    }
    annotations.sort_keys();
    Summary {
        documents: records.len(),
        annotations,
        documents_with_errors: records.iter().filter(|r| r.has_errors()).count(),
        source_errors,
        workers,
        wall_seconds,
    }
}

/// Reads `source`, runs the configured pipeline and writes `annotations.jsonl`,
/// `errors.jsonl` and `summary.json` into the output directory.
pub fn annotate_corpus(source: &CorpusSource, run: &RunConfig) -> Result<Summary> {
    if run.workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    let model = PipelineConfig::load(&run.pipeline)?.build()?;
    let corpus = source.read()?;
    for e in &corpus.errors {
        warn!("skipping {}: {}", e.location, e.message);
    }
    let records = select(corpus.records, run.sample, run.seed);
    let start = Instant::now();
    let annotated = annotate_records(&model, records, run.workers)?;
    let summary = summarize(&annotated, corpus.errors.len(), run.workers, start.elapsed().as_secs_f64());
    write_outputs(&run.output, &annotated, &corpus.errors, &summary)?;
    let failed = summary.documents_with_errors;
    if failed > 0 {
        warn!("{failed} documents have entries in their '{ERRORS_COLUMN}' column");
    }
    Ok(summary)
}

fn write_outputs(dir: &Path, records: &[Record], errors: &[SourceError], summary: &Summary) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_jsonl(BufWriter::new(File::create(dir.join("annotations.jsonl"))?), records)?;
    let mut w = BufWriter::new(File::create(dir.join("errors.jsonl"))?);
    for e in errors {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join("summary.json"))?);
    serde_json::to_writer_pretty(&mut w, summary)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
