//! Encode chunks as BIO and BIOES tags, decode them back, and repair a
//! malformed tag sequence with the lenient decoder.

use clinlp::tags::{decode, decode_lenient, encode, Chunk, TagScheme};

fn main() {
    let tokens = ["Patient", "took", "aspirin", "for", "sore", "throat", "."];
    let chunks = vec![Chunk::new(2, 2, "DRUG"), Chunk::new(4, 5, "PROBLEM")];
    for scheme in [TagScheme::Bio, TagScheme::Bioes] {
        let tags = encode(&chunks, tokens.len(), scheme).unwrap();
        println!("{scheme:?}");
        for (t, tag) in tokens.iter().zip(&tags) {
            println!("  {t:<8} {tag}");
        }
        assert_eq!(decode(&tags, scheme).unwrap(), chunks);
    }

    let broken = ["O", "I-DRUG", "O", "B-PROBLEM", "I-DRUG"];
    println!("strict decode of {broken:?}: {}", decode(&broken, TagScheme::Bio).unwrap_err());
    println!("lenient decode: {:?}", decode_lenient(&broken, TagScheme::Bio));
}
