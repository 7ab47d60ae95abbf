use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::NerDataset;
use super::network::{EncodedSentence, NerDims, NerNetwork};
use super::NerConfig;
use crate::embeddings::EmbeddingStore;
use crate::eval::{chunk_prf, token_accuracy};
use crate::nn::io::{read_params, restore, save_model};
use crate::nn::{AdamConfig, AdamState, NnError, Parameterized, Tensor};
use crate::tags::{decode, decode_lenient, Chunk};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean of the minibatch losses seen during the epoch (dropout active).
    pub batch_loss: f64,
    /// Loss over the training split after the epoch, dropout off.
    pub train_loss: f64,
    pub validation_token_accuracy: Option<f64>,
    pub validation_micro_f1: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct NerModel {
    config: NerConfig,
    labels: Vec<String>,
    chars: Vec<char>,
    char_index: HashMap<char, usize>,
    network: NerNetwork,
    history: Vec<EpochStats>,
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    format: String,
    config: NerConfig,
    labels: Vec<String>,
    chars: String,
    dims: NerDims,
    history: Vec<EpochStats>,
}

const FORMAT: &str = "ner";

/// `[tokens x dimension]` word vectors from a store.
pub fn word_vectors<S: AsRef<str>>(store: &EmbeddingStore, tokens: &[S]) -> Tensor {
    let d = store.dimension();
    let mut out = Tensor::zeros(&[tokens.len(), d]);
    for (t, token) in tokens.iter().enumerate() {
        out.row_mut(t).copy_from_slice(store.lookup(token.as_ref()).vector);
    }
    out
}

/// Trains on `dataset` with word vectors looked up in `store`.
pub fn train(config: &NerConfig, dataset: &NerDataset, store: &EmbeddingStore) -> Result<NerModel> {
    let vectors = dataset
        .sentences
        .iter()
        .map(|s| word_vectors(store, &s.tokens))
        .collect();
    train_with_vectors(config, dataset, vectors)
}

/// Trains with precomputed word vectors, one `[tokens x D]` tensor per sentence.
pub fn train_with_vectors(config: &NerConfig, dataset: &NerDataset, vectors: Vec<Tensor>) -> Result<NerModel> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if vectors.len() != dataset.len() {
        return Err(Error::Data(format!(
            "{} word-vector matrices for {} sentences",
            vectors.len(),
            dataset.len()
        )));
    }
    let word_dim = vectors[0].row_len();
    if let Some(i) = vectors.iter().position(|v| v.row_len() != word_dim && v.rows() > 0) {
        return Err(Error::Data(format!("sentence {i}: word vectors do not have dimension {word_dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dims = NerDims {
        chars: dataset.char_vocab.len() + 1,
        char_dim: config.char_embedding_dim,
        char_filters: config.char_filters,
        char_window: config.char_window,
        word_dim,
        hidden: config.lstm_hidden,
        labels: dataset.label_vocab.len(),
    };
    let mut model = NerModel::from_parts(
        config.clone(),
        dataset.label_vocab.clone(),
        dataset.char_vocab.clone(),
        NerNetwork::new(dims, config.dropout, &mut rng),
    );
    let label_index: HashMap<&str, usize> = model
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let examples: Vec<(EncodedSentence, Vec<usize>)> = dataset
        .sentences
        .iter()
        .zip(vectors)
        .filter(|(s, _)| !s.is_empty())
        .map(|(s, words)| {
            let tags = s.tags.iter().map(|t| label_index[t.as_str()]).collect();
            (model.encode_with_vectors(&s.tokens, words), tags)
        })
        .collect();
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut rng);
    let n_val = (examples.len() as f64 * config.validation_split).floor() as usize;
    let n_val = n_val.min(examples.len() - 1);
    let mut train_idx = order[..examples.len() - n_val].to_vec();
    let val_idx = order[examples.len() - n_val..].to_vec();
    info!(
        "training NER on {} sentences, validating on {}",
        train_idx.len(),
        val_idx.len()
    );

    let mut adam = AdamState::new(AdamConfig::new(config.learning_rate, config.decay_po));
    for epoch in 0..config.max_epochs {
        train_idx.shuffle(&mut rng);
        train_idx.sort_by_key(|&i| examples[i].0.len());
        let mut batches: Vec<&[usize]> = train_idx.chunks(config.batch_size).collect();
        batches.shuffle(&mut rng);
        let (mut loss_sum, mut tokens) = (0.0, 0usize);
        for batch in batches {
            let items: Vec<(&EncodedSentence, &[usize])> =
                batch.iter().map(|&i| (&examples[i].0, examples[i].1.as_slice())).collect();
            let n: usize = items.iter().map(|(s, _)| s.len()).sum();
            model.network.zero_grad();
            let loss = model.network.loss(&items, Some(&mut rng), true)?;
            adam.step(model.network.parameters_mut(), epoch)?;
            loss_sum += loss * n as f64;
            tokens += n;
        }
        let train_items: Vec<(&EncodedSentence, &[usize])> = train_idx
            .iter()
            .map(|&i| (&examples[i].0, examples[i].1.as_slice()))
            .collect();
        let train_loss = model.network.loss(&train_items, None::<&mut ChaCha8Rng>, false)?;
        let (accuracy, f1) = if val_idx.is_empty() {
            (None, None)
        } else {
            let (a, f) = model.validate(val_idx.iter().map(|&i| &examples[i]))?;
            (Some(a), Some(f))
        };
        let stats = EpochStats {
            epoch: epoch + 1,
            batch_loss: loss_sum / tokens as f64,
            train_loss,
            validation_token_accuracy: accuracy,
            validation_micro_f1: f1,
        };
        debug!("{stats:?}");
        model.history.push(stats);
    }
    model.network.zero_grad();
    Ok(model)
}

impl NerModel {
    fn from_parts(config: NerConfig, labels: Vec<String>, chars: Vec<char>, network: NerNetwork) -> Self {
        let char_index = chars.iter().enumerate().map(|(i, &c)| (c, i + 1)).collect();
        NerModel {
            config,
            labels,
            chars,
            char_index,
            network,
            history: Vec::new(),
        }
    }

    pub fn config(&self) -> &NerConfig {
        &self.config
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn history(&self) -> &[EpochStats] {
        &self.history
    }

    pub fn network(&self) -> &NerNetwork {
        &self.network
    }

    pub fn network_mut(&mut self) -> &mut NerNetwork {
        &mut self.network
    }

    pub fn word_dim(&self) -> usize {
        self.network.dims().word_dim
    }

    /// Character ids per token (unknown characters map to the OOV id 0).
    pub fn encode_with_vectors<S: AsRef<str>>(&self, tokens: &[S], words: Tensor) -> EncodedSentence {
        let char_ids = tokens
            .iter()
            .map(|t| {
                let ids: Vec<usize> = t
                    .as_ref()
                    .chars()
                    .map(|c| self.char_index.get(&c).copied().unwrap_or(0))
                    .collect();
                if ids.is_empty() {
                    vec![0]
                } else {
                    ids
                }
            })
            .collect();
        EncodedSentence { char_ids, words }
    }

    /// Best tag index and its probability per token; ties go to the lowest index.
    fn decode_scores(&self, logits: &Tensor) -> Vec<(usize, f64)> {
        (0..logits.rows())
            .map(|r| {
                let probs = crate::nn::softmax(logits.row(r));
                let mut best = 0;
                for (i, &p) in probs.iter().enumerate() {
                    if p > probs[best] {
                        best = i;
                    }
                }
                (best, probs[best])
            })
            .collect()
    }

    /// Tags with their probabilities, using precomputed word vectors.
    pub fn predict_scored<S: AsRef<str>>(&self, tokens: &[S], words: Tensor) -> Result<Vec<(String, f64)>> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let logits = self.network.logits(&self.encode_with_vectors(tokens, words))?;
        Ok(self
            .decode_scores(&logits)
            .into_iter()
            .map(|(i, p)| (self.labels[i].clone(), p))
            .collect())
    }

    /// One tag per token. Fails only if the store's dimension differs from the model's.
    pub fn predict<S: AsRef<str>>(&self, tokens: &[S], store: &EmbeddingStore) -> Result<Vec<String>> {
        let scored = self.predict_scored(tokens, word_vectors(store, tokens))?;
        Ok(scored.into_iter().map(|(t, _)| t).collect())
    }

    /// Token accuracy and chunk micro F1 over encoded sentences.
    fn validate<'a, I>(&self, examples: I) -> Result<(f64, f64)>
    where
        I: Iterator<Item = &'a (EncodedSentence, Vec<usize>)>,
    {
        let (mut gold_tags, mut pred_tags) = (Vec::new(), Vec::new());
        let (mut gold_chunks, mut pred_chunks) = (Vec::<Vec<Chunk>>::new(), Vec::new());
        for (sentence, gold) in examples {
            let logits = self.network.logits(sentence)?;
            let pred: Vec<&str> = self
                .decode_scores(&logits)
                .into_iter()
                .map(|(i, _)| self.labels[i].as_str())
                .collect();
            let gold: Vec<&str> = gold.iter().map(|&i| self.labels[i].as_str()).collect();
            gold_chunks.push(decode(&gold, self.config.tag_scheme)?);
            pred_chunks.push(decode_lenient(&pred, self.config.tag_scheme));
            gold_tags.extend(gold);
            pred_tags.extend(pred);
        }
        let accuracy = token_accuracy(&gold_tags, &pred_tags)?;
        let report = chunk_prf(&gold_chunks, &pred_chunks)?;
        Ok((accuracy, report.micro_f1))
    }

    /// Token accuracy and chunk micro F1 on a labelled dataset.
    pub fn evaluate(&self, dataset: &NerDataset, store: &EmbeddingStore) -> Result<(f64, f64)> {
        let index: HashMap<&str, usize> = self.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut examples = Vec::new();
        for (i, s) in dataset.sentences.iter().enumerate().filter(|(_, s)| !s.is_empty()) {
            let tags = s
                .tags
                .iter()
                .map(|t| {
                    index
                        .get(t.as_str())
                        .copied()
                        .ok_or_else(|| Error::Data(format!("sentence {i}: tag '{t}' unknown to the model")))
                })
                .collect::<Result<Vec<_>>>()?;
            examples.push((self.encode_with_vectors(&s.tokens, word_vectors(store, &s.tokens)), tags));
        }
        if examples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        self.validate(examples.iter())
    }

    fn metadata(&self) -> Metadata {
        Metadata {
            format: FORMAT.to_string(),
            config: self.config.clone(),
            labels: self.labels.clone(),
            chars: self.chars.iter().collect(),
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
        let mut network = NerNetwork::new(meta.dims, meta.config.dropout, &mut rng);
        restore(&mut network, params)?;
        let mut model = NerModel::from_parts(meta.config, meta.labels, meta.chars.chars().collect(), network);
        model.history = meta.history;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }

    /// JSON echo of config, vocabulary and training history.
    pub fn manifest(&self) -> serde_json::Value {
        let meta = self.metadata();
        serde_json::json!({
            "model": FORMAT,
            "config": meta.config,
            "labels": meta.labels,
            "dims": meta.dims,
            "parameters": self.network.parameter_count(),
            "history": meta.history,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ner::TaggedSentence;
    use crate::tags::TagScheme;

    fn tiny() -> (NerDataset, EmbeddingStore, NerConfig) {
        let sentences = vec![
            TaggedSentence::new([("took", "O"), ("aspirin", "B-DRUG")]),
            TaggedSentence::new([("took", "O"), ("ibuprofen", "B-DRUG"), ("daily", "O")]),
            TaggedSentence::new([("had", "O"), ("chest", "B-PROBLEM"), ("pain", "I-PROBLEM")]),
            TaggedSentence::new([("denies", "O"), ("fever", "B-PROBLEM")]),
            TaggedSentence::new([("aspirin", "B-DRUG"), ("helped", "O")]),
        ];
        let ds = NerDataset::new(sentences, TagScheme::Bio).unwrap();
        let store = EmbeddingStore::read(
            "took 1 0 0\naspirin 0 1 0\nibuprofen 0 1 0.1\nchest 0 0 1\npain 0 0.2 1\nfever 0.1 0 1\n".as_bytes(),
        )
        .unwrap();
        let config = NerConfig {
            max_epochs: 3,
            lstm_hidden: 8,
            char_filters: 5,
            char_embedding_dim: 4,
            ..Default::default()
        };
        (ds, store, config)
    }

    #[test]
    fn same_seed_same_bytes() {
        let (ds, store, config) = tiny();
        let bytes = |m: &NerModel| {
            let mut b = Vec::new();
            m.write(&mut b).unwrap();
            b
        };
        let a = train(&config, &ds, &store).unwrap();
        let b = train(&config, &ds, &store).unwrap();
        assert_eq!(bytes(&a), bytes(&b));
        let c = train(&NerConfig { seed: 7, ..config }, &ds, &store).unwrap();
        assert_ne!(bytes(&a), bytes(&c));
    }

    #[test]
    fn validation_split_zero_has_no_validation_entries() {
        let (ds, store, config) = tiny();
        let m = train(&NerConfig { validation_split: 0.0, ..config.clone() }, &ds, &store).unwrap();
        assert_eq!(m.history().len(), 3);
        assert!(m.history().iter().all(|h| h.validation_micro_f1.is_none()));
        let m = train(&config, &ds, &store).unwrap();
        assert!(m.history().iter().all(|h| h.validation_token_accuracy.is_some()));
    }

    #[test]
    fn predictions_have_input_shape() {
        let (ds, store, config) = tiny();
        let m = train(&config, &ds, &store).unwrap();
        for tokens in [vec!["x"], vec!["took", "zzz", "Aspirin", "é"]] {
            let tags = m.predict(&tokens, &store).unwrap();
            assert_eq!(tags.len(), tokens.len());
            assert!(tags.iter().all(|t| m.labels().contains(t)));
        }
        assert!(m.predict::<&str>(&[], &store).unwrap().is_empty());
    }

    #[test]
    fn save_load_predicts_identically() {
        let (ds, store, config) = tiny();
        let m = train(&config, &ds, &store).unwrap();
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let back = NerModel::read(&buf[..]).unwrap();
        let tokens = ["had", "aspirin", "pain", "qq"];
        assert_eq!(
            m.predict_scored(&tokens, word_vectors(&store, &tokens)).unwrap(),
            back.predict_scored(&tokens, word_vectors(&store, &tokens)).unwrap()
        );
        assert_eq!(back.history(), m.history());
        let err = NerModel::read(&buf[..buf.len() - 3]).unwrap_err();
        assert_eq!(err.to_string(), "unexpected end of model file");
        buf[0] = b'X';
        assert_eq!(NerModel::read(&buf[..]).unwrap_err().to_string(), "not a model file");
    }

    #[test]
    fn empty_dataset() {
        let (_, store, config) = tiny();
        let ds = NerDataset::new(vec![], TagScheme::Bio).unwrap();
        assert!(matches!(train(&config, &ds, &store), Err(Error::EmptyDataset)));
    }

    #[test]
    fn batch_loss_is_token_weighted() {
        let (ds, store, config) = tiny();
        let mut m = train(&config, &ds, &store).unwrap();
        let a = m.encode_with_vectors(&["took", "aspirin"], word_vectors(&store, &["took", "aspirin"]));
        let b = m.encode_with_vectors(&["chest", "pain", "x"], word_vectors(&store, &["chest", "pain", "x"]));
        let (ta, tb): (&[usize], &[usize]) = (&[0, 1], &[2, 3, 0]);
        let net = m.network_mut();
        let la = net.loss(&[(&a, ta)], None::<&mut ChaCha8Rng>, false).unwrap();
        let lb = net.loss(&[(&b, tb)], None::<&mut ChaCha8Rng>, false).unwrap();
        let both = net.loss(&[(&b, tb), (&a, ta)], None::<&mut ChaCha8Rng>, false).unwrap();
        assert!((both - (2.0 * la + 3.0 * lb) / 5.0).abs() < 1e-12);
    }
}
