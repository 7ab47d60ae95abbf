//! Train the BiLSTM-CNN tagger with its default hyperparameters on a
//! templated corpus and print the per-epoch history.
//!
//! cargo run --release --example train_ner -- 400

use std::time::Instant;

use clinlp::ner::{train, NerConfig};
use clinlp::synthetic;
use clinlp::tags::TagScheme;

fn main() -> clinlp::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(400);
    let dataset = synthetic::ner_corpus(n, TagScheme::Bio, 7);
    let store = synthetic::embedding_store(50, 11);
    let start = Instant::now();
    let model = train(&NerConfig::default(), &dataset, &store)?;
    for e in model.history() {
        println!(
            "epoch {:>2}  batch loss {:.4}  train loss {:.4}  val acc {:.4}  val f1 {:.4}",
            e.epoch,
            e.batch_loss,
            e.train_loss,
            e.validation_token_accuracy.unwrap_or(f64::NAN),
            e.validation_micro_f1.unwrap_or(f64::NAN)
        );
    }
    println!("trained in {:.1}s", start.elapsed().as_secs_f64());
    let tokens = ["Patient", "took", "ibuprofen", "for", "back", "pain", "."];
    println!("{:?}", tokens.iter().zip(model.predict(&tokens, &store)?).collect::<Vec<_>>());
    Ok(())
}
