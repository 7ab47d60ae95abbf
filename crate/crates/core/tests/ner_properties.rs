mod common;

use std::sync::Arc;

use clinlp::annotation::Record;
use clinlp::ner::{train, NerConfig, NerTagger};
use clinlp::pipeline::{Pipeline, Stage};
use clinlp::stages::{DocumentAssembler, SentenceDetector, Tokenizer, WordEmbeddings};
use clinlp::synthetic;
use clinlp::tags::TagScheme;

#[test]
fn tagging_a_sentence_alone_equals_tagging_it_in_a_document() {
    let store = synthetic::embedding_store(common::EMBEDDING_DIM, 5);
    let model = train(&common::tiny_ner_config(), &synthetic::ner_corpus(60, TagScheme::Bio, 3), &store).unwrap();
    let store = Arc::new(store);
    let pipeline = Pipeline::new(vec![
        Stage::fixed(DocumentAssembler::default()),
        Stage::fixed(SentenceDetector::default()),
        Stage::fixed(Tokenizer::default()),
        Stage::fixed(WordEmbeddings::new(store.clone())),
        Stage::fixed(NerTagger::new(Arc::new(model.clone()))),
    ])
    .fit(&[])
    .unwrap();
    let sentences = [
        "The patient took aspirin for fever .",
        "She denies chest pain .",
        "Prescribed warfarin and heparin .",
    ];
    let together = pipeline.transform_record(Record::new("all", sentences.join(" ")));
    let tags: Vec<&str> = together.column("ner").unwrap().iter().map(|a| a.result.as_str()).collect();
    let mut alone = Vec::new();
    for s in sentences {
        let tokens: Vec<&str> = s.split(' ').collect();
        alone.extend(model.predict(&tokens, &store).unwrap());
    }
    assert_eq!(tags, alone);
}

#[test]
fn training_loss_falls_over_the_first_three_epochs() {
    let dataset = synthetic::ner_corpus(5, TagScheme::Bio, 9);
    let store = synthetic::embedding_store(50, 11);
    let model = train(&NerConfig { max_epochs: 3, ..NerConfig::default() }, &dataset, &store).unwrap();
    let losses: Vec<f64> = model.history().iter().map(|e| e.train_loss).collect();
    assert_eq!(losses.len(), 3);
    assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
}
