use rand::Rng;

use super::{axpy, dot, NnError, Parameter, Parameterized, Tensor};

/// Affine layer `y = x W + b` applied row-wise. `W` is stored `[in x out]`.
#[derive(Clone, Debug)]
pub struct Dense {
    pub weight: Parameter,
    pub bias: Parameter,
}

#[derive(Clone, Debug)]
pub struct DenseCache {
    input: Tensor,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(name: &str, input: usize, output: usize, rng: &mut R) -> Self {
        Dense {
            weight: Parameter::glorot(
                format!("{name}.weight"),
                &[input, output],
                input,
                output,
                rng,
            ),
            bias: Parameter::zeros(format!("{name}.bias"), &[output]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn output_dim(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, DenseCache), NnError> {
        let (n_in, n_out) = (self.input_dim(), self.output_dim());
        if input.row_len() != n_in {
            return Err(NnError::Shape(format!(
                "dense layer '{}' expects {} inputs, got {}",
                self.weight.name,
                n_in,
                input.row_len()
            )));
        }
        let rows = input.rows();
        let mut out = Tensor::zeros(&[rows, n_out]);
        let w = self.weight.value.data();
        for r in 0..rows {
            let y = out.row_mut(r);
            y.copy_from_slice(self.bias.value.data());
            for (k, &xk) in input.row(r).iter().enumerate() {
                if xk != 0.0 {
                    axpy(xk, &w[k * n_out..(k + 1) * n_out], y);
                }
            }
        }
        Ok((
            out,
            DenseCache {
                input: input.clone(),
            },
        ))
    }

    pub fn backward(&mut self, cache: &DenseCache, dout: &Tensor) -> Tensor {
        let (n_in, n_out) = (self.input_dim(), self.output_dim());
        let rows = cache.input.rows();
        let mut dx = Tensor::zeros(&[rows, n_in]);
        for r in 0..rows {
            let dy = dout.row(r);
            axpy(1.0, dy, self.bias.grad.data_mut());
            let x = cache.input.row(r);
            let dw = self.weight.grad.data_mut();
            for (k, &xk) in x.iter().enumerate() {
                if xk != 0.0 {
                    axpy(xk, dy, &mut dw[k * n_out..(k + 1) * n_out]);
                }
            }
            let w = self.weight.value.data();
            let dxr = dx.row_mut(r);
            for (k, d) in dxr.iter_mut().enumerate() {
                *d = dot(&w[k * n_out..(k + 1) * n_out], dy);
            }
        }
        dx
    }
}

impl Parameterized for Dense {
    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.weight, &self.bias]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.weight, &mut self.bias]
    }
}
