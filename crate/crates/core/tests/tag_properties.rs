mod common;

use clinlp::tags::{decode, decode_lenient, encode, Chunk, TagScheme};
use common::{chunks_well_formed, tag_alphabet};
use proptest::prelude::*;

fn chunk_set() -> impl Strategy<Value = (Vec<Chunk>, usize)> {
    prop::collection::vec((0usize..3, 1usize..4, prop::sample::select(vec!["A", "B", "PROBLEM"])), 0..8).prop_map(
        |spans| {
            let mut chunks = Vec::new();
            let mut pos = 0;
            for (gap, len, label) in spans {
                let first = pos + gap;
                chunks.push(Chunk::new(first, first + len - 1, label));
                pos = first + len;
            }
            (chunks, pos + 2)
        },
    )
}

fn scheme() -> impl Strategy<Value = TagScheme> {
    prop_oneof![Just(TagScheme::Bio), Just(TagScheme::Bioes)]
}

proptest! {
    #[test]
    fn round_trip((chunks, n) in chunk_set(), scheme in scheme()) {
        let tags = encode(&chunks, n, scheme).unwrap();
        prop_assert_eq!(tags.len(), n);
        prop_assert_eq!(decode(&tags, scheme).unwrap(), chunks);
    }

    #[test]
    fn encode_output_passes_strict_decode((chunks, n) in chunk_set(), scheme in scheme()) {
        prop_assert!(decode(&encode(&chunks, n, scheme).unwrap(), scheme).is_ok());
    }

    #[test]
    fn lenient_decode_is_total(scheme in scheme(), picks in prop::collection::vec(0usize..9, 0..30)) {
        let alphabet = tag_alphabet(scheme);
        let tags: Vec<&String> = picks.iter().map(|&i| &alphabet[i % alphabet.len()]).collect();
        let chunks = decode_lenient(&tags, scheme);
        prop_assert!(chunks_well_formed(&chunks, tags.len()), "{:?} -> {:?}", tags, chunks);
    }

    #[test]
    fn lenient_agrees_with_strict_on_valid_input((chunks, n) in chunk_set(), scheme in scheme()) {
        let tags = encode(&chunks, n, scheme).unwrap();
        prop_assert_eq!(decode_lenient(&tags, scheme), chunks);
    }

    #[test]
    fn schemes_carry_the_same_chunks((chunks, n) in chunk_set()) {
        let bio = encode(&chunks, n, TagScheme::Bio).unwrap();
        let bioes = encode(&chunks, n, TagScheme::Bioes).unwrap();
        prop_assert_eq!(decode(&bio, TagScheme::Bio).unwrap(), decode(&bioes, TagScheme::Bioes).unwrap());
    }
}

#[test]
fn exhaustive_short_sequences() {
    for scheme in [TagScheme::Bio, TagScheme::Bioes] {
        let alphabet = tag_alphabet(scheme);
        for len in 0..=4 {
            for seq in common::sequences(&alphabet, len) {
                assert!(chunks_well_formed(&decode_lenient(&seq, scheme), len), "{seq:?}");
            }
        }
    }
}
