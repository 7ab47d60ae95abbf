use std::sync::Arc;

use super::dataset::{NerDataset, TaggedSentence, LABEL_COLUMN};
use super::model::{train_with_vectors, NerModel};
use super::NerConfig;
use crate::annotation::{Annotation, AnnotationKind, Record};
use crate::nn::Tensor;
use crate::pipeline::{input_column, Estimator, InputColumn, StageBuilder, StageSpec, Transformer};
use crate::{Error, Result};

/// Consecutive runs of annotations sharing a `sentence` metadata value.
pub(crate) fn sentence_runs(annotations: &[Annotation]) -> Vec<std::ops::Range<usize>> {
    let mut runs = Vec::new();
    let mut start = 0;
    while start < annotations.len() {
        let s = annotations[start].sentence_index();
        let mut end = start + 1;
        while end < annotations.len() && annotations[end].sentence_index() == s {
            end += 1;
        }
        runs.push(start..end);
        start = end;
    }
    runs
}

fn stacked_vectors(embeddings: &[Annotation], dim: usize) -> Result<Tensor> {
    let mut data = Vec::with_capacity(embeddings.len() * dim);
    for e in embeddings {
        match &e.vector {
            Some(v) if v.len() == dim => data.extend_from_slice(v),
            Some(v) => {
                return Err(Error::Data(format!(
                    "embedding for '{}' has dimension {}, expected {dim}",
                    e.result,
                    v.len()
                )))
            }
            None => return Err(Error::Data(format!("embedding for '{}' has no vector", e.result))),
        }
    }
    Ok(Tensor::from_vec(&[embeddings.len(), dim], data)?)
}

fn aligned<'r>(record: &'r Record, spec: &StageSpec) -> Result<(&'r [Annotation], &'r [Annotation])> {
    let tokens = input_column(record, spec, 0)?;
    let embeddings = input_column(record, spec, 1)?;
    if tokens.len() != embeddings.len() {
        return Err(Error::Data(format!(
            "{} tokens but {} embeddings",
            tokens.len(),
            embeddings.len()
        )));
    }
    Ok((tokens, embeddings))
}

/// Applies a trained [`NerModel`]: one tag annotation per token.
#[derive(Clone, Debug)]
pub struct NerTagger {
    spec: StageSpec,
    model: Arc<NerModel>,
}

impl NerTagger {
    pub fn new(model: Arc<NerModel>) -> Self {
        NerTagger {
            spec: StageSpec::new(
                "ner",
                vec![
                    InputColumn::new("token", AnnotationKind::Token),
                    InputColumn::new("embeddings", AnnotationKind::WordEmbedding),
                ],
                "ner",
                AnnotationKind::NamedEntityTag,
            ),
            model,
        }
    }

    pub fn model(&self) -> &Arc<NerModel> {
        &self.model
    }
}

impl StageBuilder for NerTagger {
    fn spec_mut(&mut self) -> &mut StageSpec {
        &mut self.spec
    }
}

impl Transformer for NerTagger {
    fn spec(&self) -> &StageSpec {
        &self.spec
    }

    fn annotate(&self, record: &Record) -> Result<Vec<Annotation>> {
        let (tokens, embeddings) = aligned(record, &self.spec)?;
        let mut out = Vec::with_capacity(tokens.len());
        for run in sentence_runs(tokens) {
            let words: Vec<&str> = tokens[run.clone()].iter().map(|t| t.result.as_str()).collect();
            let vectors = stacked_vectors(&embeddings[run.clone()], self.model.word_dim())?;
            let tags = self.model.predict_scored(&words, vectors)?;
            for (token, (tag, p)) in tokens[run].iter().zip(tags) {
                let mut a = Annotation::new(AnnotationKind::NamedEntityTag, token.begin, token.end, tag)
                    .with_meta("confidence", format!("{p:.4}"));
                if let Some(s) = token.meta("sentence") {
                    a = a.with_meta("sentence", s);
                }
                out.push(a);
            }
        }
        Ok(out)
    }
}

/// Trainable NER stage. Reads tokens, their word vectors and gold tags
/// aligned with the tokens.
#[derive(Clone, Debug)]
pub struct NerApproach {
    spec: StageSpec,
    pub config: NerConfig,
}

impl NerApproach {
    pub fn new(config: NerConfig) -> Self {
        NerApproach {
            spec: StageSpec::new(
                "ner",
                vec![
                    InputColumn::new("token", AnnotationKind::Token),
                    InputColumn::new("embeddings", AnnotationKind::WordEmbedding),
                    InputColumn::new(LABEL_COLUMN, AnnotationKind::NamedEntityTag),
                ],
                "ner",
                AnnotationKind::NamedEntityTag,
            ),
            config,
        }
    }
}

impl StageBuilder for NerApproach {
    fn spec_mut(&mut self) -> &mut StageSpec {
        &mut self.spec
    }
}

impl Estimator for NerApproach {
    fn spec(&self) -> &StageSpec {
        &self.spec
    }

    fn fit(&self, dataset: &[Record]) -> Result<Arc<dyn Transformer>> {
        let mut sentences = Vec::new();
        let mut vectors = Vec::new();
        let mut dim = None;
        for record in dataset {
            let (tokens, embeddings) = aligned(record, &self.spec)?;
            let labels = input_column(record, &self.spec, 2)?;
            if labels.len() != tokens.len() {
                return Err(Error::Data(format!(
                    "record '{}': {} tokens but {} labels",
                    record.id,
                    tokens.len(),
                    labels.len()
                )));
            }
            for run in sentence_runs(tokens) {
                let d = *dim.get_or_insert_with(|| {
                    embeddings[run.start].vector.as_ref().map_or(0, Vec::len)
                });
                vectors.push(stacked_vectors(&embeddings[run.clone()], d)?);
                sentences.push(TaggedSentence {
                    tokens: tokens[run.clone()].iter().map(|t| t.result.clone()).collect(),
                    tags: labels[run].iter().map(|t| t.result.clone()).collect(),
                });
            }
        }
        let data = NerDataset::new(sentences, self.config.tag_scheme)?;
        let model = train_with_vectors(&self.config, &data, vectors)?;
        let (token, embeddings, output) = (self.spec.input(0), self.spec.input(1), &self.spec.output_column);
        Ok(Arc::new(
            NerTagger::new(Arc::new(model))
                .with_inputs(&[token, embeddings])
                .with_output(output)
                .with_name(&self.spec.name),
        ))
    }
}
