use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{
    softmax_xent, BiLstm, BiLstmCache, Dense, DenseCache, Dropout, EmbeddingTable, NnError,
    Parameter, Parameterized, Tensor,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionDims {
    pub word_dim: usize,
    pub flag_dim: usize,
    pub hidden: usize,
    pub labels: usize,
}

/// The scope window of one example: word vectors and target flags.
#[derive(Clone, Debug)]
pub struct ScopeInput {
    /// `[scope x word_dim]`.
    pub words: Tensor,
    pub flags: Vec<bool>,
}

/// Word vector and target-flag embedding per position, a BiLSTM over the
/// window, and a dense softmax head over the final forward and backward states.
#[derive(Clone, Debug)]
pub struct AssertionNetwork {
    pub flag_embedding: EmbeddingTable,
    pub lstm: BiLstm,
    pub output: Dense,
    pub dropout: Dropout,
}

struct Cache {
    flag_ids: Vec<usize>,
    input_mask: Option<Vec<f64>>,
    lstm: BiLstmCache,
    feature_mask: Option<Vec<f64>>,
    output: DenseCache,
}

impl AssertionNetwork {
    pub fn new<R: Rng + ?Sized>(dims: AssertionDims, dropout: f64, rng: &mut R) -> Self {
        AssertionNetwork {
            flag_embedding: EmbeddingTable::new("flag_embedding", 2, dims.flag_dim, rng),
            lstm: BiLstm::new("bilstm", dims.word_dim + dims.flag_dim, dims.hidden, rng),
            output: Dense::new("output", 2 * dims.hidden, dims.labels, rng),
            dropout: Dropout::new(dropout),
        }
    }

    pub fn dims(&self) -> AssertionDims {
        AssertionDims {
            word_dim: self.lstm.forward.input_dim() - self.flag_embedding.dim(),
            flag_dim: self.flag_embedding.dim(),
            hidden: self.lstm.hidden_dim(),
            labels: self.output.output_dim(),
        }
    }

    fn forward<R: Rng + ?Sized>(&self, input: &ScopeInput, mut rng: Option<&mut R>) -> Result<(Tensor, Cache), NnError> {
        let dims = self.dims();
        let steps = input.flags.len();
        if steps == 0 || input.words.rows() != steps || input.words.row_len() != dims.word_dim {
            return Err(NnError::Shape(format!(
                "scope words {:?} with {} flags, expected dimension {}",
                input.words.shape(),
                steps,
                dims.word_dim
            )));
        }
        let flag_ids: Vec<usize> = input.flags.iter().map(|&f| usize::from(f)).collect();
        let flags = self.flag_embedding.forward(&flag_ids);
        let mut x = Tensor::zeros(&[steps, dims.word_dim + dims.flag_dim]);
        for t in 0..steps {
            let row = x.row_mut(t);
            row[..dims.word_dim].copy_from_slice(input.words.row(t));
            row[dims.word_dim..].copy_from_slice(flags.row(t));
        }
        let input_mask = match rng.as_deref_mut() {
            Some(r) => self.dropout.forward_train(&mut x, r),
            None => None,
        };
        let (h, lstm) = self.lstm.forward(&x)?;
        let hd = dims.hidden;
        let mut feature = Tensor::zeros(&[1, 2 * hd]);
        feature.row_mut(0)[..hd].copy_from_slice(&h.row(steps - 1)[..hd]);
        feature.row_mut(0)[hd..].copy_from_slice(&h.row(0)[hd..]);
        let feature_mask = match rng {
            Some(r) => self.dropout.forward_train(&mut feature, r),
            None => None,
        };
        let (logits, output) = self.output.forward(&feature)?;
        Ok((
            logits,
            Cache {
                flag_ids,
                input_mask,
                lstm,
                feature_mask,
                output,
            },
        ))
    }

    fn backward(&mut self, steps: usize, cache: &Cache, dlogits: &Tensor) {
        let hd = self.lstm.hidden_dim();
        let word_dim = self.dims().word_dim;
        let mut dfeature = self.output.backward(&cache.output, dlogits);
        Dropout::backward(cache.feature_mask.as_deref(), &mut dfeature);
        let mut dh = Tensor::zeros(&[steps, 2 * hd]);
        dh.row_mut(steps - 1)[..hd].copy_from_slice(&dfeature.row(0)[..hd]);
        dh.row_mut(0)[hd..].copy_from_slice(&dfeature.row(0)[hd..]);
        let mut dx = self.lstm.backward(&cache.lstm, &dh);
        Dropout::backward(cache.input_mask.as_deref(), &mut dx);
        let mut dflags = Tensor::zeros(&[steps, self.flag_embedding.dim()]);
        for t in 0..steps {
            dflags.row_mut(t).copy_from_slice(&dx.row(t)[word_dim..]);
        }
        self.flag_embedding.backward(&cache.flag_ids, &dflags);
    }

    /// Class scores `[1 x labels]` with dropout disabled.
    pub fn logits(&self, input: &ScopeInput) -> Result<Tensor, NnError> {
        Ok(self.forward(input, None::<&mut rand_chacha::ChaCha8Rng>)?.0)
    }

    /// Mean cross-entropy over a batch of examples.
    pub fn loss<R: Rng + ?Sized>(
        &mut self,
        batch: &[(&ScopeInput, usize)],
        mut rng: Option<&mut R>,
        with_grad: bool,
    ) -> Result<f64, NnError> {
        let labels = self.output.output_dim();
        let mut stacked = Tensor::zeros(&[batch.len(), labels]);
        let mut caches = Vec::with_capacity(batch.len());
        for (i, (input, _)) in batch.iter().enumerate() {
            let (logits, cache) = self.forward(input, rng.as_deref_mut())?;
            stacked.row_mut(i).copy_from_slice(logits.row(0));
            caches.push(cache);
        }
        let targets: Vec<usize> = batch.iter().map(|(_, t)| *t).collect();
        let (loss, grad) = softmax_xent(&stacked, &targets, &vec![true; batch.len()])?;
        if with_grad {
            for (i, ((input, _), cache)) in batch.iter().zip(&caches).enumerate() {
                let dlogits = Tensor::from_vec(&[1, labels], grad.row(i).to_vec())?;
                self.backward(input.flags.len(), cache, &dlogits);
            }
        }
        Ok(loss)
    }
}

impl Parameterized for AssertionNetwork {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut p = self.flag_embedding.parameters();
        p.extend(self.lstm.parameters());
        p.extend(self.output.parameters());
        p
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p = self.flag_embedding.parameters_mut();
        p.extend(self.lstm.parameters_mut());
        p.extend(self.output.parameters_mut());
        p
    }
}
