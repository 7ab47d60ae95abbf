//! Load word vectors from the text format and resolve tokens, including the
//! lowercase fallback and out-of-vocabulary zeros.

use clinlp::embeddings::EmbeddingStore;

const VECTORS: &str = "\
4 3
fever 0.9 0.1 0.0
cough 0.8 0.2 0.1
aspirin -0.5 0.7 0.3
Aspirin -0.4 0.6 0.2
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut store = EmbeddingStore::read(VECTORS.as_bytes())?;
    println!("{} words, dimension {}", store.len(), store.dimension());
    for token in ["fever", "FEVER", "Aspirin", "ibuprofen"] {
        let hit = store.lookup(token);
        println!("{token:<10} covered={:<5} {:?}", hit.covered, hit.vector);
    }
    store.case_fallback = false;
    println!("without case fallback, FEVER covered={}", store.lookup("FEVER").covered);
    println!("coverage of a sentence: {:.2}", store.coverage(&["Fever", "and", "cough"]));
    Ok(())
}
