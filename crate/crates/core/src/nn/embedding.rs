use rand::Rng;

use super::{axpy, Parameter, Parameterized, Tensor};

/// Trainable lookup table `[vocab x dim]`.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    pub table: Parameter,
}

impl EmbeddingTable {
    pub fn new<R: Rng + ?Sized>(name: &str, vocab: usize, dim: usize, rng: &mut R) -> Self {
        EmbeddingTable {
            table: Parameter::glorot(format!("{name}.table"), &[vocab, dim], vocab, dim, rng),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.table.value.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.table.value.shape()[1]
    }

    /// Gathers rows; ids out of range are clamped to row 0 (the OOV slot).
    pub fn forward(&self, ids: &[usize]) -> Tensor {
        let dim = self.dim();
        let mut out = Tensor::zeros(&[ids.len(), dim]);
        for (r, &id) in ids.iter().enumerate() {
            let id = if id < self.vocab_size() { id } else { 0 };
            out.row_mut(r).copy_from_slice(self.table.value.row(id));
        }
        out
    }

    pub fn backward(&mut self, ids: &[usize], dout: &Tensor) {
        for (r, &id) in ids.iter().enumerate() {
            let id = if id < self.vocab_size() { id } else { 0 };
            axpy(1.0, dout.row(r), self.table.grad.row_mut(id));
        }
    }
}

impl Parameterized for EmbeddingTable {
    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.table]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.table]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn backward_scatters_into_repeated_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut emb = EmbeddingTable::new("e", 3, 2, &mut rng);
        let ids = [1, 1, 2];
        let out = emb.forward(&ids);
        assert_eq!(out.row(0), emb.table.value.row(1));
        let dout = Tensor::from_vec(&[3, 2], vec![1.0, 1.0, 2.0, 2.0, 5.0, 5.0]).unwrap();
        emb.backward(&ids, &dout);
        assert_eq!(emb.table.grad.row(0), &[0.0, 0.0]);
        assert_eq!(emb.table.grad.row(1), &[3.0, 3.0]);
        assert_eq!(emb.table.grad.row(2), &[5.0, 5.0]);
    }
}
