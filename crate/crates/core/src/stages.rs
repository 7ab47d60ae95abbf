//! Fixed pipeline stages: the text stages, word embeddings and the NER converter.

use std::sync::Arc;

use crate::annotation::{Annotation, AnnotationKind, CharText, Record};
use crate::embeddings::EmbeddingStore;
use crate::pipeline::{input_column, InputColumn, StageBuilder, StageSpec, Transformer};
use crate::tags::{convert_ner, TagScheme};
use crate::text::{self, SentenceRules, TokenizerRules};
use crate::Result;

macro_rules! impl_builder {
    ($($ty:ty),*) => {
        $(impl StageBuilder for $ty {
            fn spec_mut(&mut self) -> &mut StageSpec {
                &mut self.spec
            }
        })*
    };
}

#[derive(Clone, Debug)]
pub struct DocumentAssembler {
    spec: StageSpec,
}

impl Default for DocumentAssembler {
    fn default() -> Self {
        DocumentAssembler {
            spec: StageSpec::new(
                "document_assembler",
                vec![InputColumn::text()],
                "document",
                AnnotationKind::Document,
            ),
        }
    }
}

impl Transformer for DocumentAssembler {
    fn spec(&self) -> &StageSpec {
        &self.spec
    }

    fn annotate(&self, record: &Record) -> Result<Vec<Annotation>> {
        Ok(vec![text::assemble(&record.text)])
    }
}

#[derive(Clone, Debug)]
pub struct SentenceDetector {
    spec: StageSpec,
    pub rules: SentenceRules,
}

impl Default for SentenceDetector {
    fn default() -> Self {
        SentenceDetector::new(SentenceRules::default())
    }
}

impl SentenceDetector {
    pub fn new(rules: SentenceRules) -> Self {
        SentenceDetector {
            spec: StageSpec::new(
                "sentence_detector",
                vec![InputColumn::new("document", AnnotationKind::Document)],
                "sentence",
                AnnotationKind::Sentence,
            ),
            rules,
        }
    }
}

impl Transformer for SentenceDetector {
    fn spec(&self) -> &StageSpec {
        &self.spec
    }

    fn annotate(&self, record: &Record) -> Result<Vec<Annotation>> {
        let text = CharText::new(&record.text);
        let mut out = Vec::new();
        for doc in input_column(record, &self.spec, 0)? {
            out.extend(text::detect_sentences(&text, doc, &self.rules));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct Tokenizer {
    spec: StageSpec,
    pub rules: TokenizerRules,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::new(TokenizerRules::default())
    }
}

impl Tokenizer {
    pub fn new(rules: TokenizerRules) -> Self {
        Tokenizer {
            spec: StageSpec::new(
                "tokenizer",
                vec![InputColumn::new("sentence", AnnotationKind::Sentence)],
                "token",
                AnnotationKind::Token,
            ),
            rules,
        }
    }
}

impl Transformer for Tokenizer {
    fn spec(&self) -> &StageSpec {
        &self.spec
    }

    fn annotate(&self, record: &Record) -> Result<Vec<Annotation>> {
        let text = CharText::new(&record.text);
        let sentences = input_column(record, &self.spec, 0)?;
        Ok(text::tokenize(&text, sentences, &self.rules))
    }
}

#[derive(Clone, Debug)]
pub struct Normalizer {
    spec: StageSpec,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer {
            spec: StageSpec::new(
                "normalizer",
                vec![InputColumn::new("token", AnnotationKind::Token)],
                "normalized",
                AnnotationKind::Token,
            ),
        }
    }
}

impl Transformer for Normalizer {
    fn spec(&self) -> &StageSpec {
        &self.spec
    }

    fn annotate(&self, record: &Record) -> Result<Vec<Annotation>> {
        Ok(text::normalize(input_column(record, &self.spec, 0)?))
    }
}

/// Attaches a word vector to every token. Metadata `covered` tells whether
/// the store knew the token.
#[derive(Clone, Debug)]
pub struct WordEmbeddings {
    spec: StageSpec,
    store: Arc<EmbeddingStore>,
}

impl WordEmbeddings {
    pub fn new(store: Arc<EmbeddingStore>) -> Self {
        WordEmbeddings {
            spec: StageSpec::new(
                "word_embeddings",
                vec![InputColumn::new("token", AnnotationKind::Token)],
                "embeddings",
                AnnotationKind::WordEmbedding,
            ),
            store,
        }
    }

    pub fn store(&self) -> &Arc<EmbeddingStore> {
        &self.store
    }
}

impl Transformer for WordEmbeddings {
    fn spec(&self) -> &StageSpec {
        &self.spec
    }

    fn annotate(&self, record: &Record) -> Result<Vec<Annotation>> {
        Ok(input_column(record, &self.spec, 0)?
            .iter()
            .map(|t| {
                let hit = self.store.lookup(&t.result);
                let mut a = Annotation::new(AnnotationKind::WordEmbedding, t.begin, t.end, &t.result)
                    .with_meta("covered", hit.covered);
                if let Some(s) = t.meta("sentence") {
                    a = a.with_meta("sentence", s);
                }
                a.vector = Some(hit.vector.to_vec());
                a
            })
            .collect())
    }
}

/// Groups per-token tags into character-offset chunks.
#[derive(Clone, Debug)]
pub struct NerConverter {
    spec: StageSpec,
    pub scheme: TagScheme,
    /// Reject ill-formed tag sequences instead of repairing them.
    pub strict: bool,
}

impl NerConverter {
    pub fn new(scheme: TagScheme, strict: bool) -> Self {
        NerConverter {
            spec: StageSpec::new(
                "ner_converter",
                vec![
                    InputColumn::new("token", AnnotationKind::Token),
                    InputColumn::new("ner", AnnotationKind::NamedEntityTag),
                ],
                "ner_chunk",
                AnnotationKind::Chunk,
            ),
            scheme,
            strict,
        }
    }
}

impl Default for NerConverter {
    fn default() -> Self {
        NerConverter::new(TagScheme::Bio, false)
    }
}

impl Transformer for NerConverter {
    fn spec(&self) -> &StageSpec {
        &self.spec
    }

    fn annotate(&self, record: &Record) -> Result<Vec<Annotation>> {
        let text = CharText::new(&record.text);
        let tokens = input_column(record, &self.spec, 0)?;
        let tags = input_column(record, &self.spec, 1)?;
        Ok(convert_ner(&text, tokens, tags, self.scheme, self.strict)?)
    }
}

impl_builder!(DocumentAssembler, SentenceDetector, Tokenizer, Normalizer, WordEmbeddings, NerConverter);
