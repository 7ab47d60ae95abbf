use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{AssertionDims, AssertionNetwork, ScopeInput};
use super::{extract_scope, truncate_around, AssertionConfig, AssertionExample, AssertionLabel};
use crate::embeddings::EmbeddingStore;
use crate::ner::word_vectors;
use crate::nn::io::{read_params, restore, save_model};
use crate::nn::{softmax, AdamConfig, AdamState, NnError, Parameterized, Tensor};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssertionEpoch {
    pub epoch: usize,
    /// Mean minibatch loss during the epoch.
    pub loss: f64,
    /// Accuracy on the training examples after the epoch, dropout off.
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub label: AssertionLabel,
    /// Probabilities in [`AssertionLabel::ALL`] order.
    pub scores: [f64; 6],
}

#[derive(Clone, Debug)]
pub struct AssertionModel {
    config: AssertionConfig,
    network: AssertionNetwork,
    history: Vec<AssertionEpoch>,
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    format: String,
    config: AssertionConfig,
    dims: AssertionDims,
    history: Vec<AssertionEpoch>,
}

const FORMAT: &str = "assertion";

/// Truncates the sentence around the target and cuts out the scope window.
fn scope_input(config: &AssertionConfig, words: &Tensor, first: usize, last: usize) -> Result<ScopeInput> {
    let n = words.rows();
    if first > last || last >= n {
        return Err(Error::Data(format!("target [{first}, {last}] is not a span of {n} tokens")));
    }
    let (start, len, first, last) = truncate_around(n, first, last, config.max_sentence_length);
    let scope = extract_scope(len, first, last, config);
    let d = words.row_len();
    let rows = (scope.begin + start)..=(scope.end + start);
    let data = words.data()[rows.start() * d..(rows.end() + 1) * d].to_vec();
    Ok(ScopeInput {
        words: Tensor::from_vec(&[scope.len(), d], data)?,
        flags: scope.flags,
    })
}

pub fn train_assertion(
    config: &AssertionConfig,
    examples: &[AssertionExample],
    store: &EmbeddingStore,
) -> Result<AssertionModel> {
    let vectors = examples.iter().map(|e| word_vectors(store, &e.tokens)).collect();
    train_assertion_with_vectors(config, examples, vectors)
}

/// Trains with one `[tokens x D]` word-vector tensor per example.
pub fn train_assertion_with_vectors(
    config: &AssertionConfig,
    examples: &[AssertionExample],
    vectors: Vec<Tensor>,
) -> Result<AssertionModel> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if vectors.len() != examples.len() {
        return Err(Error::Data(format!(
            "{} word-vector matrices for {} examples",
            vectors.len(),
            examples.len()
        )));
    }
    let word_dim = vectors[0].row_len();
    let mut inputs = Vec::with_capacity(examples.len());
    for (i, (e, words)) in examples.iter().zip(&vectors).enumerate() {
        let label = e
            .label
            .ok_or_else(|| Error::Data(format!("example {i}: missing label")))?;
        if words.row_len() != word_dim {
            return Err(Error::Data(format!("example {i}: word vectors do not have dimension {word_dim}")));
        }
        let input = scope_input(config, words, e.target_first, e.target_last)
            .map_err(|err| Error::Data(format!("example {i}: {err}")))?;
        inputs.push((input, label.index()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dims = AssertionDims {
        word_dim,
        flag_dim: config.flag_dim,
        hidden: config.lstm_hidden,
        labels: AssertionLabel::ALL.len(),
    };
    let mut model = AssertionModel {
        config: config.clone(),
        network: AssertionNetwork::new(dims, config.dropout, &mut rng),
        history: Vec::new(),
    };
    info!("training assertion model on {} examples", inputs.len());
    let mut adam = AdamState::new(AdamConfig::new(config.learning_rate, 0.0));
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let items: Vec<(&ScopeInput, usize)> = batch.iter().map(|&i| (&inputs[i].0, inputs[i].1)).collect();
            model.network.zero_grad();
            let loss = model.network.loss(&items, Some(&mut rng), true)?;
            adam.step(model.network.parameters_mut(), epoch)?;
            loss_sum += loss * batch.len() as f64;
        }
        let mut correct = 0;
        for (input, target) in &inputs {
            if model.classify(input)?.label.index() == *target {
                correct += 1;
            }
        }
        let stats = AssertionEpoch {
            epoch: epoch + 1,
            loss: loss_sum / inputs.len() as f64,
            accuracy: correct as f64 / inputs.len() as f64,
        };
        debug!("{stats:?}");
        model.history.push(stats);
    }
    model.network.zero_grad();
    Ok(model)
}

impl AssertionModel {
    pub fn config(&self) -> &AssertionConfig {
        &self.config
    }

    pub fn history(&self) -> &[AssertionEpoch] {
        &self.history
    }

    pub fn network(&self) -> &AssertionNetwork {
        &self.network
    }

    pub fn network_mut(&mut self) -> &mut AssertionNetwork {
        &mut self.network
    }

    pub fn word_dim(&self) -> usize {
        self.network.dims().word_dim
    }

    fn classify(&self, input: &ScopeInput) -> Result<Prediction> {
        let logits = self.network.logits(input)?;
        let probs = softmax(logits.row(0));
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        let mut scores = [0.0; 6];
        scores.copy_from_slice(&probs);
        Ok(Prediction {
            label: AssertionLabel::ALL[best],
            scores,
        })
    }

    /// Classifies a target span given the word vectors of the whole sentence.
    pub fn predict_with_vectors(&self, words: &Tensor, target_first: usize, target_last: usize) -> Result<Prediction> {
        self.classify(&scope_input(&self.config, words, target_first, target_last)?)
    }

    pub fn predict<S: AsRef<str>>(
        &self,
        tokens: &[S],
        target_first: usize,
        target_last: usize,
        store: &EmbeddingStore,
    ) -> Result<Prediction> {
        self.predict_with_vectors(&word_vectors(store, tokens), target_first, target_last)
    }

    /// Loss of the network on a single example with dropout off.
    pub fn example_loss<S: AsRef<str>>(
        &mut self,
        tokens: &[S],
        target_first: usize,
        target_last: usize,
        label: AssertionLabel,
        store: &EmbeddingStore,
    ) -> Result<f64> {
        let input = scope_input(&self.config, &word_vectors(store, tokens), target_first, target_last)?;
        Ok(self
            .network
            .loss(&[(&input, label.index())], None::<&mut ChaCha8Rng>, false)?)
    }

    fn metadata(&self) -> Metadata {
        Metadata {
            format: FORMAT.to_string(),
            config: self.config.clone(),
            dims: self.network.dims(),
            history: self.history.clone(),
        }
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let meta = serde_json::to_vec(&self.metadata())?;
        save_model(w, &self.network, &meta)?;
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let (params, meta) = read_params(r)?;
        let meta: Metadata =
            serde_json::from_slice(&meta).map_err(|e| NnError::Corrupt(format!("metadata: {e}")))?;
        if meta.format != FORMAT {
            return Err(NnError::Corrupt(format!("expected a {FORMAT} model, found '{}'", meta.format)).into());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut network = AssertionNetwork::new(meta.dims, meta.config.dropout, &mut rng);
        restore(&mut network, params)?;
        Ok(AssertionModel {
            config: meta.config,
            network,
            history: meta.history,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }

    pub fn manifest(&self) -> serde_json::Value {
        let meta = self.metadata();
        serde_json::json!({
            "model": FORMAT,
            "config": meta.config,
            "dims": meta.dims,
            "labels": AssertionLabel::ALL.iter().map(|l| l.as_str()).collect::<Vec<_>>(),
            "parameters": self.network.parameter_count(),
            "history": meta.history,
        })
    }
}
