//! Train the windowed assertion classifier on rule-generated examples,
//! score a held-out set and run three behavioural probes.

use std::time::Instant;

use clinlp::assertion::{train_assertion, AssertionConfig};
use clinlp::synthetic;

fn main() -> clinlp::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(600);
    let train = synthetic::assertion_corpus(n, 21);
    let test = synthetic::assertion_corpus(300, 22);
    let store = synthetic::embedding_store(50, 11);
    let start = Instant::now();
    let model = train_assertion(&AssertionConfig::default(), &train, &store)?;
    for e in model.history() {
        println!("epoch {:>2}  loss {:.4}  accuracy {:.4}", e.epoch, e.loss, e.accuracy);
    }
    let mut correct = 0;
    for e in &test {
        let p = model.predict(&e.tokens, e.target_first, e.target_last, &store)?;
        correct += usize::from(Some(p.label) == e.label);
    }
    println!("held-out accuracy {:.4}", correct as f64 / test.len() as f64);
    for (sentence, first, last) in [
        ("He shows no stomach pain", 3, 4),
        ("Father with Alzheimer", 2, 2),
        ("He became short of breath with climbing a flight of stairs", 2, 4),
    ] {
        let tokens: Vec<&str> = sentence.split(' ').collect();
        let p = model.predict(&tokens, first, last, &store)?;
        println!("{sentence} -> {}", p.label.display_name());
    }
    println!("{:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
