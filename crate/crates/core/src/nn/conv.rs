use rand::Rng;

use super::{axpy, NnError, Parameter, Parameterized, Tensor};

/// Character-level 1-d convolution followed by max-over-time pooling.
///
/// Filters are stored `[window x dim x filters]`. Inputs shorter than the
/// window are zero-padded (centered) to exactly one window; longer inputs use
/// a valid convolution. There is no bias, so an all-zero input pools to zero.
#[derive(Clone, Debug)]
pub struct CharConv {
    pub filters: Parameter,
}

#[derive(Clone, Debug)]
pub struct CharConvCache {
    padded: Tensor,
    argmax: Vec<usize>,
    left_pad: usize,
    input_len: usize,
}

impl CharConv {
    pub fn new<R: Rng + ?Sized>(
        name: &str,
        window: usize,
        dim: usize,
        n_filters: usize,
        rng: &mut R,
    ) -> Self {
        CharConv {
            filters: Parameter::glorot(
                format!("{name}.filters"),
                &[window, dim, n_filters],
                window * dim,
                n_filters,
                rng,
            ),
        }
    }

    pub fn from_filters(name: &str, filters: Tensor) -> Result<Self, NnError> {
        if filters.shape().len() != 3 {
            return Err(NnError::Shape(format!(
                "filters must be [window x dim x filters], got {:?}",
                filters.shape()
            )));
        }
        Ok(CharConv {
            filters: Parameter::new(format!("{name}.filters"), filters),
        })
    }

    pub fn window(&self) -> usize {
        self.filters.value.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.filters.value.shape()[1]
    }

    pub fn n_filters(&self) -> usize {
        self.filters.value.shape()[2]
    }

    pub fn forward(&self, chars: &Tensor) -> Result<(Tensor, CharConvCache), NnError> {
        let (w, d, k) = (self.window(), self.dim(), self.n_filters());
        let len = chars.rows();
        if chars.shape().len() != 2 || chars.row_len() != d {
            return Err(NnError::Shape(format!(
                "char vectors must be [L x {}], got {:?}",
                d,
                chars.shape()
            )));
        }
        if len == 0 {
            return Err(NnError::Shape("empty character sequence".into()));
        }
        let (padded, left_pad) = if len < w {
            let left = (w - len) / 2;
            let mut p = Tensor::zeros(&[w, d]);
            for r in 0..len {
                p.row_mut(left + r).copy_from_slice(chars.row(r));
            }
            (p, left)
        } else {
            (chars.clone(), 0)
        };
        let positions = padded.rows() - w + 1;
        let f = self.filters.value.data();
        let mut pooled = vec![f64::NEG_INFINITY; k];
        let mut argmax = vec![0usize; k];
        let mut out = vec![0.0; k];
        for p in 0..positions {
            out.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..w {
                let x = padded.row(p + j);
                for (c, &xc) in x.iter().enumerate() {
                    if xc != 0.0 {
                        let base = (j * d + c) * k;
                        axpy(xc, &f[base..base + k], &mut out);
                    }
                }
            }
            for (fi, &v) in out.iter().enumerate() {
                if v > pooled[fi] {
                    pooled[fi] = v;
                    argmax[fi] = p;
                }
            }
        }
        Ok((
            Tensor::from_vec(&[k], pooled)?,
            CharConvCache {
                padded,
                argmax,
                left_pad,
                input_len: len,
            },
        ))
    }

    /// Gradient flows only through the winning position of each filter.
    pub fn backward(&mut self, cache: &CharConvCache, dpooled: &[f64]) -> Tensor {
        let (w, d, k) = (self.window(), self.dim(), self.n_filters());
        let mut dpadded = Tensor::zeros(cache.padded.shape());
        let f = self.filters.value.data();
        let df = self.filters.grad.data_mut();
        for (fi, &g) in dpooled.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let p = cache.argmax[fi];
            for j in 0..w {
                let x = cache.padded.row(p + j);
                let dx = dpadded.row_mut(p + j);
                for c in 0..d {
                    let idx = (j * d + c) * k + fi;
                    df[idx] += x[c] * g;
                    dx[c] += f[idx] * g;
                }
            }
        }
        let mut dx = Tensor::zeros(&[cache.input_len, d]);
        for r in 0..cache.input_len {
            dx.row_mut(r)
                .copy_from_slice(dpadded.row(cache.left_pad + r));
        }
        dx
    }
}

impl Parameterized for CharConv {
    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.filters]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.filters]
    }
}

/// Stateless form: convolve `char_vectors [L x d]` with `filters [w x d x k]` and max-pool.
pub fn char_conv_maxpool(char_vectors: &Tensor, filters: &Tensor) -> Result<Tensor, NnError> {
    let conv = CharConv::from_filters("conv", filters.clone())?;
    conv.forward(char_vectors).map(|(out, _)| out)
}
