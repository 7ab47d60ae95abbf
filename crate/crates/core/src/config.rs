//! TOML pipeline configuration.
//!
//! ```toml
//! [[stages]]
//! type = "document_assembler"
//!
//! [[stages]]
//! type = "word_embeddings"
//! path = "vectors.txt"
//!
//! [[stages]]
//! type = "ner"
//! model = "ner.model"
//! output = "ner_drug"
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assertion::{AssertionModel, AssertionStage};
use crate::embeddings::EmbeddingStore;
use crate::ner::{NerModel, NerTagger};
use crate::pipeline::{PipelineModel, StageBuilder, Transformer};
use crate::stages::{DocumentAssembler, NerConverter, Normalizer, SentenceDetector, Tokenizer, WordEmbeddings};
use crate::tags::TagScheme;
use crate::text::{SentenceRules, TokenizerRules};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub stages: Vec<StageConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    #[serde(flatten)]
    pub kind: StageKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StageKind {
    DocumentAssembler,
    SentenceDetector {
        #[serde(default)]
        rules: SentenceRules,
    },
    Tokenizer {
        #[serde(default)]
        rules: TokenizerRules,
    },
    Normalizer,
    WordEmbeddings {
        path: PathBuf,
        #[serde(default = "yes")]
        case_fallback: bool,
    },
    Ner {
        model: PathBuf,
    },
    NerConverter {
        #[serde(default)]
        scheme: TagScheme,
        #[serde(default)]
        strict: bool,
    },
    Assertion {
        model: PathBuf,
    },
}

fn yes() -> bool {
    true
}

impl StageConfig {
    pub fn new(kind: StageKind) -> Self {
        StageConfig { kind, name: None, inputs: None, output: None }
    }
}

fn customized<B: StageBuilder + Transformer + 'static>(mut stage: B, c: &StageConfig) -> Arc<dyn Transformer> {
    if let Some(name) = &c.name {
        stage = stage.with_name(name);
    }
    if let Some(inputs) = &c.inputs {
        let inputs: Vec<&str> = inputs.iter().map(String::as_str).collect();
        stage = stage.with_inputs(&inputs);
    }
    if let Some(output) = &c.output {
        stage = stage.with_output(output);
    }
    Arc::new(stage)
}

/// Shares loaded embedding stores and models between stages that name the same file.
#[derive(Default)]
struct Loaded {
    stores: HashMap<(PathBuf, bool), Arc<EmbeddingStore>>,
    ner: HashMap<PathBuf, Arc<NerModel>>,
    assertion: HashMap<PathBuf, Arc<AssertionModel>>,
}

impl PipelineConfig {
    /// Document assembler, sentence detector and tokenizer.
    pub fn tokenization() -> Self {
        PipelineConfig {
            stages: vec![
                StageConfig::new(StageKind::DocumentAssembler),
                StageConfig::new(StageKind::SentenceDetector { rules: SentenceRules::default() }),
                StageConfig::new(StageKind::Tokenizer { rules: TokenizerRules::default() }),
            ],
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file and resolves its relative paths against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        config.resolve(path.parent().unwrap_or(Path::new("")));
        Ok(config)
    }

    pub fn resolve(&mut self, base: &Path) {
        for stage in &mut self.stages {
            let path = match &mut stage.kind {
                StageKind::WordEmbeddings { path, .. } => path,
                StageKind::Ner { model } | StageKind::Assertion { model } => model,
                _ => continue,
            };
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    /// Loads every referenced store and model, then builds and validates the pipeline.
    pub fn build(&self) -> Result<PipelineModel> {
        let mut loaded = Loaded::default();
        let mut stages = Vec::with_capacity(self.stages.len());
        for c in &self.stages {
            let stage = match &c.kind {
                StageKind::DocumentAssembler => customized(DocumentAssembler::default(), c),
                StageKind::SentenceDetector { rules } => customized(SentenceDetector::new(rules.clone()), c),
                StageKind::Tokenizer { rules } => {
                    rules.validate()?;
                    customized(Tokenizer::new(rules.clone()), c)
                }
                StageKind::Normalizer => customized(Normalizer::default(), c),
                StageKind::WordEmbeddings { path, case_fallback } => {
                    let key = (path.clone(), *case_fallback);
                    let store = match loaded.stores.get(&key) {
                        Some(s) => s.clone(),
                        None => {
                            let mut store = EmbeddingStore::load(path)?;
                            store.case_fallback = *case_fallback;
                            let store = Arc::new(store);
                            loaded.stores.insert(key, store.clone());
                            store
                        }
                    };
                    customized(WordEmbeddings::new(store), c)
                }
                StageKind::Ner { model } => {
                    let m = match loaded.ner.get(model) {
                        Some(m) => m.clone(),
                        None => {
                            let m = Arc::new(NerModel::load(model)?);
                            loaded.ner.insert(model.clone(), m.clone());
                            m
                        }
                    };
                    customized(NerTagger::new(m), c)
                }
                StageKind::NerConverter { scheme, strict } => customized(NerConverter::new(*scheme, *strict), c),
                StageKind::Assertion { model } => {
                    let m = match loaded.assertion.get(model) {
                        Some(m) => m.clone(),
                        None => {
                            let m = Arc::new(AssertionModel::load(model)?);
                            loaded.assertion.insert(model.clone(), m.clone());
                            m
                        }
                    };
                    customized(AssertionStage::new(m), c)
                }
            };
            stages.push(stage);
        }
        PipelineModel::new(stages, Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::Record;

    const CONFIG: &str = r#"
[[stages]]
type = "document_assembler"

[[stages]]
type = "sentence_detector"

[[stages]]
type = "tokenizer"
rules = { keep_internal_hyphens = false }

[[stages]]
type = "word_embeddings"
path = "vectors.txt"
case_fallback = false

[[stages]]
type = "word_embeddings"
path = "vectors.txt"
case_fallback = false
name = "second"
output = "embeddings_2"
"#;

    #[test]
    fn parses_and_resolves_paths() {
        let mut c = PipelineConfig::parse(CONFIG).unwrap();
        assert_eq!(c.stages.len(), 5);
        c.resolve(Path::new("/data"));
        assert_eq!(
            c.stages[3].kind,
            StageKind::WordEmbeddings { path: "/data/vectors.txt".into(), case_fallback: false }
        );
        assert_eq!(c.stages[4].output.as_deref(), Some("embeddings_2"));
        let again = PipelineConfig::parse(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn builds_and_shares_stores() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("vectors.txt"), "Fever 1 0\n").unwrap();
        std::fs::write(dir.path().join("p.toml"), CONFIG).unwrap();
        let model = PipelineConfig::load(dir.path().join("p.toml")).unwrap().build().unwrap();
        assert_eq!(
            model.stage_names(),
            ["document_assembler", "sentence_detector", "tokenizer", "word_embeddings", "second"]
        );
        let r = model.transform_record(Record::new("a", "fever"));
        assert_eq!(r.column("embeddings").unwrap()[0].meta("covered"), Some("false"));
        assert_eq!(r.column("embeddings_2").unwrap().len(), 1);
    }

    #[test]
    fn rejects_unknown_type_and_missing_files() {
        let err = PipelineConfig::parse("[[stages]]\ntype = \"parser\"\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let c = PipelineConfig::parse("[[stages]]\ntype = \"ner\"\nmodel = \"/nonexistent.model\"\n").unwrap();
        assert!(c.build().is_err());
    }

    #[test]
    fn invalid_wiring_is_reported() {
        let c = PipelineConfig::parse("[[stages]]\ntype = \"tokenizer\"\n").unwrap();
        assert!(matches!(c.build(), Err(Error::InvalidPipeline(_))));
    }
}
