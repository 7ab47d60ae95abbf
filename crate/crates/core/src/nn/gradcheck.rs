//! Central finite-difference verification of analytic gradients.

use serde::Serialize;

use super::Parameterized;

/// Denominator floor for the relative error, so entries whose true gradient
/// is essentially zero are compared on an absolute scale instead of dividing
/// rounding noise by a vanishing number.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-4;

#[derive(Clone, Copy, Debug)]
pub struct GradCheckConfig {
    pub step: f64,
    pub tolerance: f64,
    /// Check at most this many entries per parameter (evenly strided). `None` checks all.
    pub max_entries_per_param: Option<usize>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-5,
            tolerance: 1e-5,
            max_entries_per_param: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ParamCheck {
    pub name: String,
    pub checked: usize,
    pub max_relative_error: f64,
    pub max_abs_analytic: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.params
            .iter()
            .map(|p| p.max_relative_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_relative_error() <= self.tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// Compares analytic gradients against central differences.
///
/// `objective(model, with_grad)` must return the scalar loss and, when
/// `with_grad` is true, accumulate gradients into the model's parameters. It
/// must be deterministic (dropout off).
pub fn grad_check<M, F>(model: &mut M, mut objective: F, config: GradCheckConfig) -> GradCheckReport
where
    M: Parameterized,
    F: FnMut(&mut M, bool) -> f64,
{
    model.zero_grad();
    objective(model, true);
    let analytic: Vec<Vec<f64>> = model
        .parameters()
        .iter()
        .map(|p| p.grad.data().to_vec())
        .collect();
    let names: Vec<String> = model.parameters().iter().map(|p| p.name.clone()).collect();

    let mut params = Vec::with_capacity(names.len());
    for (pi, name) in names.into_iter().enumerate() {
        let len = analytic[pi].len();
        let stride = match config.max_entries_per_param {
            Some(max) if max > 0 && len > max => len.div_ceil(max),
            _ => 1,
        };
        let mut worst = 0.0f64;
        let mut checked = 0;
        let mut max_abs = 0.0f64;
        for i in (0..len).step_by(stride) {
            let original = model.parameters()[pi].value.data()[i];
            model.parameters_mut()[pi].value.data_mut()[i] = original + config.step;
            let plus = objective(model, false);
            model.parameters_mut()[pi].value.data_mut()[i] = original - config.step;
            let minus = objective(model, false);
            model.parameters_mut()[pi].value.data_mut()[i] = original;
            let numeric = (plus - minus) / (2.0 * config.step);
            let a = analytic[pi][i];
            worst = worst.max(relative_error(a, numeric));
            max_abs = max_abs.max(a.abs());
            checked += 1;
        }
        params.push(ParamCheck {
            name,
            checked,
            max_relative_error: worst,
            max_abs_analytic: max_abs,
        });
    }
    model.zero_grad();
    GradCheckReport {
        tolerance: config.tolerance,
        params,
    }
}
