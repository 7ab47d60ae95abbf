use clinlp::embeddings::EmbeddingStore;
use proptest::prelude::*;

fn lines() -> impl Strategy<Value = Vec<(String, Vec<i32>)>> {
    prop::collection::btree_map("[a-zA-Z]{1,6}", prop::collection::vec(-9i32..9, 3), 1..12)
        .prop_map(|m| m.into_iter().collect())
}

fn file(entries: &[(String, Vec<i32>)]) -> String {
    entries
        .iter()
        .map(|(w, v)| format!("{w} {}\n", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")))
        .collect()
}

proptest! {
    #[test]
    fn lookup_always_has_the_dimension(entries in lines(), probe in "\\PC{0,10}") {
        let store = EmbeddingStore::read(file(&entries).as_bytes()).unwrap();
        prop_assert_eq!(store.lookup(&probe).vector.len(), 3);
        for (w, _) in &entries {
            let hit = store.lookup(w);
            prop_assert!(hit.covered);
        }
    }

    #[test]
    fn line_order_does_not_matter(entries in lines(), seed in any::<u64>(), probes in prop::collection::vec("[a-zA-Z]{1,6}", 0..10)) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = entries.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = EmbeddingStore::read(file(&entries).as_bytes()).unwrap();
        let b = EmbeddingStore::read(file(&shuffled).as_bytes()).unwrap();
        for p in probes.iter().chain(entries.iter().map(|e| &e.0)) {
            prop_assert_eq!(a.lookup(p).vector, b.lookup(p).vector);
        }
    }
}
