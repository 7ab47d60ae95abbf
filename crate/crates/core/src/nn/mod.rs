//! Small neural-network substrate with hand-derived backward passes.
//!
//! Every layer exposes a `forward` that returns its output together with a
//! cache, and a `backward` that consumes the cache, accumulates parameter
//! gradients in place and returns the gradient with respect to its input.
//! Everything is `f64` so analytic gradients can be checked against central
//! finite differences (see [`gradcheck`]).

mod adam;
mod conv;
mod dense;
mod dropout;
mod embedding;
pub mod gradcheck;
pub mod io;
mod loss;
mod lstm;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use conv::{char_conv_maxpool, CharConv, CharConvCache};
pub use dense::{Dense, DenseCache};
pub use dropout::Dropout;
pub use embedding::EmbeddingTable;
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport};
pub use loss::{softmax, softmax_xent};
pub use lstm::{BiLstm, BiLstmCache, Lstm, LstmCache};
pub use tensor::Tensor;

pub(crate) use tensor::{axpy, dot, sigmoid};

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite gradient in parameter '{0}'")]
    NonFiniteGradient(String),
    #[error("no active positions")]
    NoActivePositions,
    #[error("target {target} out of range for {classes} classes")]
    TargetOutOfRange { target: usize, classes: usize },
    #[error("not a model file")]
    BadMagic,
    #[error("unsupported model file version {0}")]
    BadVersion(u32),
    #[error("unexpected end of model file")]
    Truncated,
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A named trainable tensor and its accumulated gradient.
#[derive(Clone, Debug)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Parameter {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        Parameter::new(name, Tensor::zeros(shape))
    }

    /// Glorot-uniform initialization for a `fan_in x fan_out` weight.
    pub fn glorot<R: Rng + ?Sized>(
        name: impl Into<String>,
        shape: &[usize],
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut value = Tensor::zeros(shape);
        for v in value.data_mut() {
            *v = rng.random_range(-limit..limit);
        }
        Parameter::new(name, value)
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Anything that owns trainable parameters.
///
/// Parameters must be returned in a stable order; optimizer state and the
/// binary model format both rely on it.
pub trait Parameterized {
    fn parameters(&self) -> Vec<&Parameter>;
    fn parameters_mut(&mut self) -> Vec<&mut Parameter>;

    fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }

    fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.value.len()).sum()
    }
}
