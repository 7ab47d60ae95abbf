use std::sync::Arc;

use clinlp::annotation::Record;
use clinlp::pipeline::{Pipeline, PipelineModel, Stage};
use clinlp::stages::{DocumentAssembler, Normalizer, SentenceDetector, Tokenizer, WordEmbeddings};
use clinlp::synthetic;
use proptest::prelude::*;

fn text_model() -> PipelineModel {
    let store = Arc::new(synthetic::embedding_store(4, 1));
    Pipeline::new(vec![
        Stage::fixed(DocumentAssembler::default()),
        Stage::fixed(SentenceDetector::default()),
        Stage::fixed(Tokenizer::default()),
        Stage::fixed(Normalizer::default()),
        Stage::fixed(WordEmbeddings::new(store)),
    ])
    .fit(&[])
    .unwrap()
}

fn text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9é .,!?()\n-]{0,60}"
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_is_append_only(texts in prop::collection::vec(text(), 1..5)) {
        let model = text_model();
        for (i, t) in texts.iter().enumerate() {
            let mut r = Record::new(format!("{i}"), t.clone());
            r.columns.insert("given".into(), Vec::new());
            let before = r.clone();
            let after = model.transform_record(r);
            prop_assert_eq!(&after.id, &before.id);
            prop_assert_eq!(&after.text, &before.text);
            for (name, column) in &before.columns {
                prop_assert_eq!(after.column(name), Some(column.as_slice()));
            }
            prop_assert!(!after.has_errors());
            prop_assert_eq!(after.check(), Ok(()));
        }
    }

    #[test]
    fn parallel_output_equals_sequential(texts in prop::collection::vec(text(), 0..12), workers in 2usize..5) {
        let model = text_model();
        let records: Vec<Record> = texts.iter().enumerate().map(|(i, t)| Record::new(format!("{i}"), t.clone())).collect();
        prop_assert_eq!(model.transform_parallel(records.clone(), workers).unwrap(), model.transform(records));
    }

}
