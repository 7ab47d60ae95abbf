use rand::Rng;

use super::Tensor;

/// Inverted dropout: survivors are scaled by `1 / (1 - p)` so inference is the identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dropout {
    pub p: f64,
}

impl Dropout {
    pub fn new(p: f64) -> Self {
        assert!((0.0..1.0).contains(&p), "dropout probability must be in [0, 1)");
        Dropout { p }
    }

    /// Applies a fresh mask in place and returns it for the backward pass.
    /// Returns `None` when the layer is inactive (`p == 0`).
    pub fn forward_train<R: Rng + ?Sized>(&self, x: &mut Tensor, rng: &mut R) -> Option<Vec<f64>> {
        if self.p == 0.0 {
            return None;
        }
        let scale = 1.0 / (1.0 - self.p);
        let mask: Vec<f64> = (0..x.len())
            .map(|_| if rng.random::<f64>() < self.p { 0.0 } else { scale })
            .collect();
        for (v, m) in x.data_mut().iter_mut().zip(&mask) {
            *v *= m;
        }
        Some(mask)
    }

    pub fn backward(mask: Option<&[f64]>, grad: &mut Tensor) {
        if let Some(mask) = mask {
            for (g, m) in grad.data_mut().iter_mut().zip(mask) {
                *g *= m;
            }
        }
    }
}
