use super::{NnError, Tensor};

/// Numerically stable softmax of one row.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    out
}

/// Mean masked softmax cross-entropy over the rows of `logits [T x C]`.
///
/// Returns the loss and `dlogits`, which is `(softmax - onehot) / active` on
/// active rows and zero on masked-out rows.
pub fn softmax_xent(
    logits: &Tensor,
    targets: &[usize],
    mask: &[bool],
) -> Result<(f64, Tensor), NnError> {
    let (rows, classes) = (logits.rows(), logits.row_len());
    if targets.len() != rows || mask.len() != rows {
        return Err(NnError::Shape(format!(
            "{} logit rows but {} targets and {} mask flags",
            rows,
            targets.len(),
            mask.len()
        )));
    }
    let active = mask.iter().filter(|&&m| m).count();
    if active == 0 {
        return Err(NnError::NoActivePositions);
    }
    let scale = 1.0 / active as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(logits.shape());
    for r in 0..rows {
        if !mask[r] {
            continue;
        }
        let target = targets[r];
        if target >= classes {
            return Err(NnError::TargetOutOfRange { target, classes });
        }
        let probs = softmax(logits.row(r));
        loss -= probs[target].max(f64::MIN_POSITIVE).ln();
        let g = grad.row_mut(r);
        for (c, p) in probs.iter().enumerate() {
            g[c] = (p - if c == target { 1.0 } else { 0.0 }) * scale;
        }
    }
    Ok((loss * scale, grad))
}
