use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{
    softmax_xent, BiLstm, BiLstmCache, CharConv, CharConvCache, Dense, DenseCache, Dropout,
    EmbeddingTable, NnError, Parameter, Parameterized, Tensor,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NerDims {
    /// Character vocabulary size including the OOV slot.
    pub chars: usize,
    pub char_dim: usize,
    pub char_filters: usize,
    pub char_window: usize,
    pub word_dim: usize,
    pub hidden: usize,
    pub labels: usize,
}

/// A sentence ready for the network: character ids per token and the word vectors.
#[derive(Clone, Debug)]
pub struct EncodedSentence {
    pub char_ids: Vec<Vec<usize>>,
    /// `[tokens x word_dim]`.
    pub words: Tensor,
}

impl EncodedSentence {
    pub fn len(&self) -> usize {
        self.char_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.char_ids.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct NerNetwork {
    pub char_embedding: EmbeddingTable,
    pub char_conv: CharConv,
    pub lstm: BiLstm,
    pub output: Dense,
    pub dropout: Dropout,
}

struct Cache {
    chars: Vec<CharConvCache>,
    input_mask: Option<Vec<f64>>,
    lstm: BiLstmCache,
    hidden_mask: Option<Vec<f64>>,
    output: DenseCache,
}

impl NerNetwork {
    pub fn new<R: Rng + ?Sized>(dims: NerDims, dropout: f64, rng: &mut R) -> Self {
        NerNetwork {
            char_embedding: EmbeddingTable::new("char_embedding", dims.chars, dims.char_dim, rng),
            char_conv: CharConv::new(
                "char_conv",
                dims.char_window,
                dims.char_dim,
                dims.char_filters,
                rng,
            ),
            lstm: BiLstm::new("bilstm", dims.char_filters + dims.word_dim, dims.hidden, rng),
            output: Dense::new("output", 2 * dims.hidden, dims.labels, rng),
            dropout: Dropout::new(dropout),
        }
    }

    pub fn dims(&self) -> NerDims {
        NerDims {
            chars: self.char_embedding.vocab_size(),
            char_dim: self.char_embedding.dim(),
            char_filters: self.char_conv.n_filters(),
            char_window: self.char_conv.window(),
            word_dim: self.lstm.forward.input_dim() - self.char_conv.n_filters(),
            hidden: self.lstm.hidden_dim(),
            labels: self.output.output_dim(),
        }
    }

    fn forward<R: Rng + ?Sized>(
        &self,
        sentence: &EncodedSentence,
        rng: Option<&mut R>,
    ) -> Result<(Tensor, Cache), NnError> {
        let k = self.char_conv.n_filters();
        let word_dim = self.dims().word_dim;
        if sentence.words.rows() != sentence.len() || sentence.words.row_len() != word_dim {
            return Err(NnError::Shape(format!(
                "word vectors {:?} for {} tokens, expected dimension {}",
                sentence.words.shape(),
                sentence.len(),
                word_dim
            )));
        }
        let mut x = Tensor::zeros(&[sentence.len(), k + word_dim]);
        let mut chars = Vec::with_capacity(sentence.len());
        for (t, ids) in sentence.char_ids.iter().enumerate() {
            let (pooled, cache) = self.char_conv.forward(&self.char_embedding.forward(ids))?;
            let row = x.row_mut(t);
            row[..k].copy_from_slice(pooled.data());
            row[k..].copy_from_slice(sentence.words.row(t));
            chars.push(cache);
        }
        let (input_mask, lstm, hidden_mask, output, logits);
        match rng {
            Some(rng) => {
                input_mask = self.dropout.forward_train(&mut x, rng);
                let (mut h, c) = self.lstm.forward(&x)?;
                hidden_mask = self.dropout.forward_train(&mut h, rng);
                (logits, output) = self.output.forward(&h)?;
                lstm = c;
            }
            None => {
                input_mask = None;
                hidden_mask = None;
                let (h, c) = self.lstm.forward(&x)?;
                (logits, output) = self.output.forward(&h)?;
                lstm = c;
            }
        }
        Ok((
            logits,
            Cache {
                chars,
                input_mask,
                lstm,
                hidden_mask,
                output,
            },
        ))
    }

    fn backward(&mut self, sentence: &EncodedSentence, cache: &Cache, dlogits: &Tensor) {
        let mut dh = self.output.backward(&cache.output, dlogits);
        Dropout::backward(cache.hidden_mask.as_deref(), &mut dh);
        let mut dx = self.lstm.backward(&cache.lstm, &dh);
        Dropout::backward(cache.input_mask.as_deref(), &mut dx);
        let k = self.char_conv.n_filters();
        for (t, ids) in sentence.char_ids.iter().enumerate() {
            let dchars = self.char_conv.backward(&cache.chars[t], &dx.row(t)[..k]);
            self.char_embedding.backward(ids, &dchars);
        }
    }

    /// Tag scores `[tokens x labels]` with dropout disabled.
    pub fn logits(&self, sentence: &EncodedSentence) -> Result<Tensor, NnError> {
        Ok(self.forward(sentence, None::<&mut rand_chacha::ChaCha8Rng>)?.0)
    }

    /// Mean token cross-entropy over a batch. Every token of every sentence
    /// counts once, as with a padded batch and a mask over the padding.
    ///
    /// With `rng` set dropout is active. With `with_grad` gradients are
    /// accumulated into the parameters.
    pub fn loss<R: Rng + ?Sized>(
        &mut self,
        batch: &[(&EncodedSentence, &[usize])],
        mut rng: Option<&mut R>,
        with_grad: bool,
    ) -> Result<f64, NnError> {
        let labels = self.output.output_dim();
        let total: usize = batch.iter().map(|(s, _)| s.len()).sum();
        let mut stacked = Tensor::zeros(&[total, labels]);
        let mut targets = Vec::with_capacity(total);
        let mut caches = Vec::with_capacity(batch.len());
        let mut row = 0;
        for (sentence, tags) in batch {
            if tags.len() != sentence.len() {
                return Err(NnError::Shape(format!(
                    "{} tags for {} tokens",
                    tags.len(),
                    sentence.len()
                )));
            }
            let (logits, cache) = self.forward(sentence, rng.as_deref_mut())?;
            for t in 0..sentence.len() {
                stacked.row_mut(row + t).copy_from_slice(logits.row(t));
            }
            row += sentence.len();
            targets.extend_from_slice(tags);
            caches.push(cache);
        }
        let (loss, grad) = softmax_xent(&stacked, &targets, &vec![true; total])?;
        if with_grad {
            let mut row = 0;
            for ((sentence, _), cache) in batch.iter().zip(&caches) {
                let n = sentence.len();
                let dlogits =
                    Tensor::from_vec(&[n, labels], grad.data()[row * labels..(row + n) * labels].to_vec())?;
                self.backward(sentence, cache, &dlogits);
                row += n;
            }
        }
        Ok(loss)
    }
}

impl Parameterized for NerNetwork {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut p = self.char_embedding.parameters();
        p.extend(self.char_conv.parameters());
        p.extend(self.lstm.parameters());
        p.extend(self.output.parameters());
        p
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p = self.char_embedding.parameters_mut();
        p.extend(self.char_conv.parameters_mut());
        p.extend(self.lstm.parameters_mut());
        p.extend(self.output.parameters_mut());
        p
    }
}
