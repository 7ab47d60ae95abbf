//! Train a NER model and an assertion model on synthetic data, describe a
//! pipeline in TOML, then annotate a short clinical note.

use std::fs::{self, File};

use clinlp::annotation::Record;
use clinlp::assertion::{train_assertion, AssertionConfig};
use clinlp::config::PipelineConfig;
use clinlp::ner::{train, NerConfig};
use clinlp::synthetic;
use clinlp::tags::TagScheme;

const PIPELINE: &str = r#"
[[stages]]
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

[[stages]]
type = "assertion"
model = "assertion.model"
"#;

fn main() -> clinlp::Result<()> {
    let dir = tempfile::tempdir()?;
    let store = synthetic::embedding_store(50, 11);
    store.write(File::create(dir.path().join("vectors.txt"))?)?;

    let ner_config = NerConfig { lstm_hidden: 64, ..NerConfig::default() };
    let ner = train(&ner_config, &synthetic::ner_corpus(400, TagScheme::Bio, 7), &store)?;
    ner.save(dir.path().join("ner.model"))?;
    let assertion = train_assertion(&AssertionConfig::default(), &synthetic::assertion_corpus(600, 21), &store)?;
    assertion.save(dir.path().join("assertion.model"))?;

    fs::write(dir.path().join("pipeline.toml"), PIPELINE)?;
    let model = PipelineConfig::load(dir.path().join("pipeline.toml"))?.build()?;
    println!("stages: {}", model.stage_names().join(" -> "));

    let note = "Patient with severe fever and sore throat. He shows no stomach pain. \
                He became short of breath with climbing a flight of stairs. \
                Father with Alzheimer. She was started on metformin.";
    let record = model.transform_record(Record::new("note", note));
    if record.has_errors() {
        eprintln!("{:?}", record.column("errors"));
    }
    println!("{:<20} {:<8} {:<30} confidence", "chunk", "entity", "assertion");
    for a in record.column("assertion").unwrap_or_default() {
        println!(
            "{:<20} {:<8} {:<30} {}",
            a.meta("chunk").unwrap_or(""),
            a.meta("entity").unwrap_or(""),
            a.result,
            a.meta("confidence").unwrap_or("")
        );
    }
    Ok(())
}
