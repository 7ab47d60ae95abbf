//! The `clinlp` command line.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::annotation::read_jsonl;
use crate::assertion::{load_examples, train_assertion, AssertionConfig, AssertionLabel};
use crate::config::PipelineConfig;
use crate::corpus::{
    annotate_corpus, assertion_filter, benchmark, entity_matrix, select, top_terms, CorpusSource, RunConfig,
    SourceKind,
};
use crate::embeddings::EmbeddingStore;
use crate::ner::{train, NerConfig, NerDataset};
use crate::synthetic;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "clinlp", version, about = "Clinical text annotation pipelines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a configured pipeline over a corpus.
    Annotate {
        #[arg(long)]
        pipeline: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Defaults to `dir` for directories and `jsonl` otherwise.
        #[arg(long)]
        input_format: Option<SourceKind>,
        #[arg(long, default_value = "text")]
        text_field: String,
        #[arg(long, default_value = "id")]
        id_field: String,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Annotate a seeded random sample of this many documents.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train a NER model from a CoNLL file.
    TrainNer {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        /// TOML file with NER hyperparameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train an assertion model from JSONL examples.
    TrainAssertion {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Summarize an annotations file.
    Report {
        kind: ReportKind,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',')]
        entity_types: Vec<String>,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        #[arg(long, value_delimiter = ',')]
        labels: Vec<String>,
        /// Directory for the TSV and JSON files; the TSV is always printed.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Time the tokenization stages and the configured pipeline at several worker counts.
    Bench {
        #[arg(long)]
        pipeline: PathBuf,
        #[arg(long, required_unless_present = "synthetic_bytes")]
        input: Option<PathBuf>,
        #[arg(long)]
        input_format: Option<SourceKind>,
        /// Generate a synthetic corpus of at least this many bytes instead of reading one.
        #[arg(long, conflicts_with = "input")]
        synthetic_bytes: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        worker_counts: Vec<usize>,
        #[arg(long, default_value_t = 256)]
        batch: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    TopTerms,
    EntityMatrix,
    AssertionFilter,
}

impl ValueEnum for SourceKind {
    fn value_variants<'a>() -> &'a [Self] {
        &[SourceKind::Dir, SourceKind::Jsonl]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            SourceKind::Dir => "dir",
            SourceKind::Jsonl => "jsonl",
        }))
    }
}

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_EQUIVALENCE: u8 = 3;

pub fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Config(_) | Error::InvalidPipeline(_) => EXIT_USAGE,
        Error::Equivalence(_) => EXIT_EQUIVALENCE,
        _ => EXIT_DATA,
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn source(input: &Path, format: Option<SourceKind>, text_field: &str, id_field: &str) -> CorpusSource {
    let kind = format.unwrap_or(if input.is_dir() { SourceKind::Dir } else { SourceKind::Jsonl });
    let mut s = CorpusSource::new(kind, input);
    s.text_field = text_field.into();
    s.id_field = id_field.into();
    s
}

fn read_toml<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn write_report<T: Serialize>(dir: Option<&Path>, name: &str, tsv: &str, value: &T) -> Result<()> {
    print!("{tsv}");
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{name}.tsv")), tsv)?;
        let mut json = serde_json::to_vec_pretty(value)?;
        json.push(b'\n');
        fs::write(dir.join(format!("{name}.json")), json)?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Annotate { pipeline, input, input_format, text_field, id_field, workers, seed, sample, output } => {
            let run = RunConfig { pipeline, workers, seed, sample, output };
            let summary = annotate_corpus(&source(&input, input_format, &text_field, &id_field), &run)?;
            if summary.source_errors > 0 {
                warn!("{} input documents could not be read; see errors.jsonl", summary.source_errors);
            }
            println!(
                "{} documents annotated in {:.2}s with {} workers",
                summary.documents, summary.wall_seconds, summary.workers
            );
        }
        Command::TrainNer { input, embeddings, config, seed, output } => {
            let mut config: NerConfig = read_toml(config.as_deref())?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            config.validate()?;
            let dataset = NerDataset::read_conll(&input, config.tag_scheme)?;
            let store = EmbeddingStore::load(&embeddings)?;
            info!("{} sentences, embedding coverage {:.3}", dataset.sentences.len(), dataset_coverage(&dataset, &store));
            let model = train(&config, &dataset, &store)?;
            println!("epoch\tbatch_loss\ttrain_loss\tval_token_accuracy\tval_micro_f1");
            for e in model.history() {
                let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
                println!(
                    "{}\t{:.4}\t{:.4}\t{}\t{}",
                    e.epoch,
                    e.batch_loss,
                    e.train_loss,
                    opt(e.validation_token_accuracy),
                    opt(e.validation_micro_f1)
                );
            }
            model.save(&output)?;
        }
        Command::TrainAssertion { input, embeddings, config, seed, output } => {
            let mut config: AssertionConfig = read_toml(config.as_deref())?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            config.validate()?;
            let examples = load_examples(&input)?;
            let store = EmbeddingStore::load(&embeddings)?;
            let model = train_assertion(&config, &examples, &store)?;
            println!("epoch\tloss\taccuracy");
            for e in model.history() {
                println!("{}\t{:.4}\t{:.4}", e.epoch, e.loss, e.accuracy);
            }
            model.save(&output)?;
        }
        Command::Report { kind, input, entity_types, top_k, labels, output } => {
            let file = fs::File::open(&input).map_err(|e| Error::Data(format!("cannot open {}: {e}", input.display())))?;
            let records = read_jsonl(std::io::BufReader::new(file))?;
            let out = output.as_deref();
            match kind {
                ReportKind::TopTerms => {
                    let r = top_terms(&records, &entity_types, top_k);
                    write_report(out, "top_terms", &r.to_tsv(), &r)?;
                }
                ReportKind::EntityMatrix => {
                    let r = entity_matrix(&records, &entity_types);
                    write_report(out, "entity_matrix", &r.to_tsv(), &r)?;
                    if let Some(dir) = out {
                        fs::write(dir.join("entity_totals.tsv"), r.column_totals_tsv())?;
                    }
                }
                ReportKind::AssertionFilter => {
                    let labels = labels
                        .iter()
                        .map(|l| l.parse::<AssertionLabel>().map_err(|e| Error::Config(e.to_string())))
                        .collect::<Result<Vec<_>>>()?;
                    let r = assertion_filter(&records, &entity_types, &labels);
                    write_report(out, "assertion_filter", &r.to_tsv(), &r)?;
                }
            }
        }
        Command::Bench { pipeline, input, input_format, synthetic_bytes, worker_counts, batch, seed, output } => {
            let full = PipelineConfig::load(&pipeline)?.build()?;
            let tokenization = PipelineConfig::tokenization().build()?;
            let records = match (input, synthetic_bytes) {
                (Some(input), _) => {
                    let corpus = source(&input, input_format, "text", "id").read()?;
                    select(corpus.records, None, seed)
                }
                (None, Some(bytes)) => synthetic::corpus_of_size(bytes, 20, seed),
                (None, None) => return Err(Error::Config("either --input or --synthetic-bytes is required".into())),
            };
            let report = benchmark(
                &records,
                &[("tokenization", &tokenization), ("pipeline", &full)],
                &worker_counts,
                batch,
            )?;
            for &w in &worker_counts {
                if let (Some(t), Some(p)) = (report.speedup("tokenization", w), report.speedup("pipeline", w)) {
                    if p > t {
                        warn!("at {w} workers the pipeline speedup {p:.2} exceeds the tokenization speedup {t:.2}");
                    }
                }
            }
            write_report(output.as_deref(), "benchmark", &report.to_tsv(), &report)?;
        }
    }
    std::io::stdout().flush()?;
    Ok(())
}

fn dataset_coverage(dataset: &NerDataset, store: &EmbeddingStore) -> f64 {
    let tokens: Vec<&str> = dataset.sentences.iter().flat_map(|s| s.tokens.iter().map(String::as_str)).collect();
    store.coverage(&tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from([
            "clinlp", "report", "top-terms", "--input", "a.jsonl", "--entity-types", "DRUG,PROBLEM", "--top-k", "3",
        ])
        .unwrap();
        match cli.command {
            Command::Report { kind, entity_types, top_k, .. } => {
                assert_eq!(kind, ReportKind::TopTerms);
                assert_eq!(entity_types, ["DRUG", "PROBLEM"]);
                assert_eq!(top_k, 3);
            }
            other => panic!("{other:?}"),
        }
        let cli = Cli::try_parse_from(["clinlp", "bench", "--pipeline", "p.toml", "--synthetic-bytes", "1000"]).unwrap();
        match cli.command {
            Command::Bench { worker_counts, .. } => assert_eq!(worker_counts, [1, 2, 4]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with(["clinlp", "frobnicate"]), ExitCode::from(EXIT_USAGE));
        assert_eq!(main_with(["clinlp", "--help"]), ExitCode::SUCCESS);
        assert_eq!(exit_code(&Error::Equivalence("x".into())), EXIT_EQUIVALENCE);
        assert_eq!(exit_code(&Error::Data("x".into())), EXIT_DATA);
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_USAGE);
    }
}
