//! Document assembly, sentence detection, tokenization and normalization as
//! pipeline stages, printing every annotation column.

use clinlp::annotation::Record;
use clinlp::pipeline::{Pipeline, Stage};
use clinlp::stages::{DocumentAssembler, Normalizer, SentenceDetector, Tokenizer};

fn main() -> clinlp::Result<()> {
    let model = Pipeline::new(vec![
        Stage::fixed(DocumentAssembler::default()),
        Stage::fixed(SentenceDetector::default()),
        Stage::fixed(Tokenizer::default()),
        Stage::fixed(Normalizer::default()),
    ])
    .fit(&[])?;
    let text = "  Seen by Dr. Smith on 3.5 mg of warfarin. COVID-19 test was \"negative\"!  ";
    let record = model.transform_record(Record::new("note-1", text));
    for (column, annotations) in &record.columns {
        println!("{column}:");
        for a in annotations {
            println!("  [{:>2}, {:>2}] {:?} {:?}", a.begin, a.end, a.result, a.metadata);
        }
    }
    Ok(())
}
