use rand::Rng;

use super::{axpy, dot, sigmoid, NnError, Parameter, Parameterized, Tensor};

/// Single-direction LSTM.
///
/// Gate pre-activations are laid out `[input | forget | candidate | output]`
/// along the `4h` axis. `input_weight` is `[d x 4h]`, `recurrent_weight`
/// `[h x 4h]`. Initial hidden and cell states are zero.
#[derive(Clone, Debug)]
pub struct Lstm {
    pub input_weight: Parameter,
    pub recurrent_weight: Parameter,
    pub bias: Parameter,
}

#[derive(Clone, Debug)]
pub struct LstmCache {
    inputs: Tensor,
    /// Post-activation gates per step, `[T x 4h]`.
    gates: Tensor,
    cells: Tensor,
    cell_tanh: Tensor,
    hidden: Tensor,
}

impl LstmCache {
    /// Hidden states `[T x h]`.
    pub fn hidden(&self) -> &Tensor {
        &self.hidden
    }
}

impl Lstm {
    /// Glorot-uniform weights, zero biases except the forget gate at +1.
    pub fn new<R: Rng + ?Sized>(name: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut bias = Parameter::zeros(format!("{name}.bias"), &[4 * hidden]);
        bias.value.data_mut()[hidden..2 * hidden]
            .iter_mut()
            .for_each(|b| *b = 1.0);
        Lstm {
            input_weight: Parameter::glorot(
                format!("{name}.input_weight"),
                &[input, 4 * hidden],
                input,
                4 * hidden,
                rng,
            ),
            recurrent_weight: Parameter::glorot(
                format!("{name}.recurrent_weight"),
                &[hidden, 4 * hidden],
                hidden,
                4 * hidden,
                rng,
            ),
            bias,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_weight.value.shape()[0]
    }

    pub fn hidden_dim(&self) -> usize {
        self.recurrent_weight.value.shape()[0]
    }

    pub fn forward(&self, inputs: &Tensor) -> Result<LstmCache, NnError> {
        let (d, h) = (self.input_dim(), self.hidden_dim());
        if inputs.shape().len() != 2 || inputs.row_len() != d {
            return Err(NnError::Shape(format!(
                "lstm '{}' expects [T x {}] input, got {:?}",
                self.bias.name,
                d,
                inputs.shape()
            )));
        }
        let steps = inputs.rows();
        if steps == 0 {
            return Err(NnError::Shape("lstm input has no time steps".into()));
        }
        let h4 = 4 * h;
        let wx = self.input_weight.value.data();
        let wh = self.recurrent_weight.value.data();
        let mut gates = Tensor::zeros(&[steps, h4]);
        let mut cells = Tensor::zeros(&[steps, h]);
        let mut cell_tanh = Tensor::zeros(&[steps, h]);
        let mut hidden = Tensor::zeros(&[steps, h]);
        let mut z = vec![0.0; h4];
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for t in 0..steps {
            z.copy_from_slice(self.bias.value.data());
            for (k, &xk) in inputs.row(t).iter().enumerate() {
                if xk != 0.0 {
                    axpy(xk, &wx[k * h4..(k + 1) * h4], &mut z);
                }
            }
            for (k, &hk) in h_prev.iter().enumerate() {
                if hk != 0.0 {
                    axpy(hk, &wh[k * h4..(k + 1) * h4], &mut z);
                }
            }
            let g = gates.row_mut(t);
            for j in 0..h {
                g[j] = sigmoid(z[j]);
                g[h + j] = sigmoid(z[h + j]);
                g[2 * h + j] = z[2 * h + j].tanh();
                g[3 * h + j] = sigmoid(z[3 * h + j]);
            }
            let g = gates.row(t).to_vec();
            let c = cells.row_mut(t);
            for j in 0..h {
                c[j] = g[h + j] * c_prev[j] + g[j] * g[2 * h + j];
            }
            c_prev.copy_from_slice(c);
            let ct = cell_tanh.row_mut(t);
            for j in 0..h {
                ct[j] = c_prev[j].tanh();
            }
            let hr = hidden.row_mut(t);
            for j in 0..h {
                hr[j] = g[3 * h + j] * ct[j];
            }
            h_prev.copy_from_slice(hr);
        }
        Ok(LstmCache {
            inputs: inputs.clone(),
            gates,
            cells,
            cell_tanh,
            hidden,
        })
    }

    /// Backpropagation through time. `dhidden` is `[T x h]`; returns `[T x d]`.
    pub fn backward(&mut self, cache: &LstmCache, dhidden: &Tensor) -> Tensor {
        let (d, h) = (self.input_dim(), self.hidden_dim());
        let h4 = 4 * h;
        let steps = cache.inputs.rows();
        let mut dx = Tensor::zeros(&[steps, d]);
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; h4];
        let zeros = vec![0.0; h];
        for t in (0..steps).rev() {
            let g = cache.gates.row(t);
            let ct = cache.cell_tanh.row(t);
            let c_prev = if t > 0 { cache.cells.row(t - 1) } else { &zeros };
            let h_prev = if t > 0 { cache.hidden.row(t - 1) } else { &zeros };
            let dh_out = dhidden.row(t);
            for j in 0..h {
                let (i, f, cand, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let dh = dh_out[j] + dh_next[j];
                let d_o = dh * ct[j];
                let dc = dh * o * (1.0 - ct[j] * ct[j]) + dc_next[j];
                dz[j] = dc * cand * i * (1.0 - i);
                dz[h + j] = dc * c_prev[j] * f * (1.0 - f);
                dz[2 * h + j] = dc * i * (1.0 - cand * cand);
                dz[3 * h + j] = d_o * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            axpy(1.0, &dz, self.bias.grad.data_mut());
            {
                let dwx = self.input_weight.grad.data_mut();
                for (k, &xk) in cache.inputs.row(t).iter().enumerate() {
                    if xk != 0.0 {
                        axpy(xk, &dz, &mut dwx[k * h4..(k + 1) * h4]);
                    }
                }
            }
            {
                let dwh = self.recurrent_weight.grad.data_mut();
                for (k, &hk) in h_prev.iter().enumerate() {
                    if hk != 0.0 {
                        axpy(hk, &dz, &mut dwh[k * h4..(k + 1) * h4]);
                    }
                }
            }
            let wx = self.input_weight.value.data();
            for (k, v) in dx.row_mut(t).iter_mut().enumerate() {
                *v = dot(&wx[k * h4..(k + 1) * h4], &dz);
            }
            let wh = self.recurrent_weight.value.data();
            for (k, v) in dh_next.iter_mut().enumerate() {
                *v = dot(&wh[k * h4..(k + 1) * h4], &dz);
            }
        }
        dx
    }
}

impl Parameterized for Lstm {
    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.input_weight, &self.recurrent_weight, &self.bias]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![
            &mut self.input_weight,
            &mut self.recurrent_weight,
            &mut self.bias,
        ]
    }
}

/// Forward and backward LSTMs whose outputs are concatenated per position.
#[derive(Clone, Debug)]
pub struct BiLstm {
    pub forward: Lstm,
    pub backward: Lstm,
}

#[derive(Clone, Debug)]
pub struct BiLstmCache {
    forward: LstmCache,
    backward: LstmCache,
}

fn reverse_rows(t: &Tensor) -> Tensor {
    let rows = t.rows();
    let mut out = Tensor::zeros(t.shape());
    for r in 0..rows {
        out.row_mut(r).copy_from_slice(t.row(rows - 1 - r));
    }
    out
}

impl BiLstm {
    pub fn new<R: Rng + ?Sized>(name: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        BiLstm {
            forward: Lstm::new(&format!("{name}.fw"), input, hidden, rng),
            backward: Lstm::new(&format!("{name}.bw"), input, hidden, rng),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.forward.hidden_dim()
    }

    /// `[T x d]` to `[T x 2h]`; columns `0..h` are the forward pass.
    pub fn forward(&self, inputs: &Tensor) -> Result<(Tensor, BiLstmCache), NnError> {
        let fw = self.forward.forward(inputs)?;
        let bw = self.backward.forward(&reverse_rows(inputs))?;
        let (steps, h) = (inputs.rows(), self.hidden_dim());
        let mut out = Tensor::zeros(&[steps, 2 * h]);
        for t in 0..steps {
            let row = out.row_mut(t);
            row[..h].copy_from_slice(fw.hidden.row(t));
            row[h..].copy_from_slice(bw.hidden.row(steps - 1 - t));
        }
        Ok((
            out,
            BiLstmCache {
                forward: fw,
                backward: bw,
            },
        ))
    }

    pub fn backward(&mut self, cache: &BiLstmCache, dout: &Tensor) -> Tensor {
        let (steps, h) = (dout.rows(), self.hidden_dim());
        let mut dfw = Tensor::zeros(&[steps, h]);
        let mut dbw = Tensor::zeros(&[steps, h]);
        for t in 0..steps {
            let row = dout.row(t);
            dfw.row_mut(t).copy_from_slice(&row[..h]);
            dbw.row_mut(steps - 1 - t).copy_from_slice(&row[h..]);
        }
        let mut dx = self.forward.backward(&cache.forward, &dfw);
        let dx_bw = reverse_rows(&self.backward.backward(&cache.backward, &dbw));
        axpy(1.0, dx_bw.data(), dx.data_mut());
        dx
    }
}

impl Parameterized for BiLstm {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut p = self.forward.parameters();
        p.extend(self.backward.parameters());
        p
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p = self.forward.parameters_mut();
        p.extend(self.backward.parameters_mut());
        p
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naive_sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    /// Per-gate scalar reference, written against explicit weight indexing.
    fn reference_lstm(lstm: &Lstm, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let h = lstm.hidden_dim();
        let d = lstm.input_dim();
        let wx = |k: usize, col: usize| lstm.input_weight.value.data()[k * 4 * h + col];
        let wh = |k: usize, col: usize| lstm.recurrent_weight.value.data()[k * 4 * h + col];
        let b = |col: usize| lstm.bias.value.data()[col];
        let mut hs = vec![0.0; h];
        let mut cs = vec![0.0; h];
        let mut out = Vec::new();
        for x in xs {
            let pre = |gate: usize, j: usize, hs: &[f64]| {
                let col = gate * h + j;
                let mut s = b(col);
                for k in 0..d {
                    s += x[k] * wx(k, col);
                }
                for k in 0..h {
                    s += hs[k] * wh(k, col);
                }
                s
            };
            let mut new_h = vec![0.0; h];
            let mut new_c = vec![0.0; h];
            for j in 0..h {
                let i = naive_sigmoid(pre(0, j, &hs));
                let f = naive_sigmoid(pre(1, j, &hs));
                let g = pre(2, j, &hs).tanh();
                let o = naive_sigmoid(pre(3, j, &hs));
                new_c[j] = f * cs[j] + i * g;
                new_h[j] = o * new_c[j].tanh();
            }
            hs = new_h;
            cs = new_c;
            out.push(hs.clone());
        }
        out
    }

    #[test]
    fn zero_parameters_give_zero_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut bi = BiLstm::new("b", 3, 4, &mut rng);
        for p in bi.parameters_mut() {
            p.value.fill(0.0);
        }
        let x = Tensor::from_vec(&[2, 3], vec![1.0, -2.0, 0.5, 3.0, 0.1, 0.2]).unwrap();
        let (out, _) = bi.forward(&x).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_halves_match_with_shared_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut bi = BiLstm::new("b", 3, 4, &mut rng);
        bi.backward = bi.forward.clone();
        let x = Tensor::from_vec(&[1, 3], vec![0.3, -0.7, 1.1]).unwrap();
        let (out, _) = bi.forward(&x).unwrap();
        assert_eq!(&out.data()[..4], &out.data()[4..]);
    }

    #[test]
    fn matches_scalar_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let lstm = Lstm::new("l", 3, 5, &mut rng);
        let xs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let cache = lstm.forward(&Tensor::from_rows(&xs).unwrap()).unwrap();
        let expected = reference_lstm(&lstm, &xs);
        for (t, row) in expected.iter().enumerate() {
            for (a, b) in cache.hidden().row(t).iter().zip(row) {
                assert!((a - b).abs() < 1e-12, "step {t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn bilstm_backward_half_is_reference_on_reversed_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let bi = BiLstm::new("b", 2, 3, &mut rng);
        let xs: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let (out, _) = bi.forward(&Tensor::from_rows(&xs).unwrap()).unwrap();
        let reversed: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
        let expected = reference_lstm(&bi.backward, &reversed);
        for t in 0..4 {
            for j in 0..3 {
                let a = out.row(t)[3 + j];
                let b = expected[3 - t][j];
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let lstm = Lstm::new("l", 2, 3, &mut rng);
        assert_eq!(&lstm.bias.value.data()[3..6], &[1.0, 1.0, 1.0]);
        assert!(lstm.bias.value.data()[..3].iter().all(|&b| b == 0.0));
    }

    #[test]
    fn rejects_mismatched_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let lstm = Lstm::new("l", 2, 3, &mut rng);
        assert!(lstm.forward(&Tensor::zeros(&[2, 3])).is_err());
    }
}
