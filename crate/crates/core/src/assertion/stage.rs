use std::sync::Arc;

use super::model::AssertionModel;
use crate::annotation::{Annotation, AnnotationKind, Record};
use crate::nn::Tensor;
use crate::pipeline::{input_column, InputColumn, StageBuilder, StageSpec, Transformer};
use crate::{Error, Result};

/// One assertion annotation per chunk, over the chunk's span.
#[derive(Clone, Debug)]
pub struct AssertionStage {
    spec: StageSpec,
    model: Arc<AssertionModel>,
}

impl AssertionStage {
    pub fn new(model: Arc<AssertionModel>) -> Self {
        AssertionStage {
            spec: StageSpec::new(
                "assertion",
                vec![
                    InputColumn::new("token", AnnotationKind::Token),
                    InputColumn::new("embeddings", AnnotationKind::WordEmbedding),
                    InputColumn::new("ner_chunk", AnnotationKind::Chunk),
                ],
                "assertion",
                AnnotationKind::Assertion,
            ),
            model,
        }
    }

    pub fn model(&self) -> &Arc<AssertionModel> {
        &self.model
    }
}

impl StageBuilder for AssertionStage {
    fn spec_mut(&mut self) -> &mut StageSpec {
        &mut self.spec
    }
}

impl Transformer for AssertionStage {
    fn spec(&self) -> &StageSpec {
        &self.spec
    }

    fn annotate(&self, record: &Record) -> Result<Vec<Annotation>> {
        let tokens = input_column(record, &self.spec, 0)?;
        let embeddings = input_column(record, &self.spec, 1)?;
        let chunks = input_column(record, &self.spec, 2)?;
        if tokens.len() != embeddings.len() {
            return Err(Error::Data(format!(
                "{} tokens but {} embeddings",
                tokens.len(),
                embeddings.len()
            )));
        }
        let dim = self.model.word_dim();
        let mut out = Vec::with_capacity(chunks.len());
        for chunk in chunks {
            let first = tokens.iter().position(|t| t.begin == chunk.begin);
            let last = tokens.iter().position(|t| t.end == chunk.end);
            let (Some(first), Some(last)) = (first, last) else {
                return Err(Error::Data(format!(
                    "chunk '{}' [{}, {}] does not align with token boundaries",
                    chunk.result, chunk.begin, chunk.end
                )));
            };
            let sentence = tokens[first].sentence_index();
            if last < first || tokens[last].sentence_index() != sentence {
                return Err(Error::Data(format!("chunk '{}' crosses a sentence boundary", chunk.result)));
            }
            let mut lo = first;
            while lo > 0 && tokens[lo - 1].sentence_index() == sentence {
                lo -= 1;
            }
            let mut hi = last;
            while hi + 1 < tokens.len() && tokens[hi + 1].sentence_index() == sentence {
                hi += 1;
            }
            let mut data = Vec::with_capacity((hi - lo + 1) * dim);
            for e in &embeddings[lo..=hi] {
                match &e.vector {
                    Some(v) if v.len() == dim => data.extend_from_slice(v),
                    _ => {
                        return Err(Error::Data(format!(
                            "embedding for '{}' is missing or not of dimension {dim}",
                            e.result
                        )))
                    }
                }
            }
            let words = Tensor::from_vec(&[hi - lo + 1, dim], data)?;
            let p = self.model.predict_with_vectors(&words, first - lo, last - lo)?;
            let mut a = Annotation::new(AnnotationKind::Assertion, chunk.begin, chunk.end, p.label.as_str())
                .with_meta("assertion", p.label.as_str())
                .with_meta("chunk", &chunk.result)
                .with_meta("confidence", format!("{:.4}", p.scores[p.label.index()]));
            if let Some(entity) = chunk.meta("entity") {
                a = a.with_meta("entity", entity);
            }
            if let Some(s) = sentence {
                a = a.with_meta("sentence", s);
            }
            out.push(a);
        }
        Ok(out)
    }
}
