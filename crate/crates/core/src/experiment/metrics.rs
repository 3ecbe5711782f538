use crate::error::{FedError, Result};
use crate::nn::{predict, Example, ModelArch, ParamVector};

/// Fraction of `holdout` classified correctly; argmax ties go to the lowest
/// class index.
pub fn evaluate_main(params: &ParamVector, arch: &ModelArch, holdout: &[Example]) -> Result<f64> {
    if holdout.is_empty() {
        return Err(FedError::Precondition("main-task holdout is empty".into()));
    }
    let refs: Vec<&Example> = holdout.iter().collect();
    let preds = predict(params, arch, &refs)?;
    let correct = preds.iter().zip(holdout).filter(|(p, e)| **p == e.label).count();
    Ok(correct as f64 / holdout.len() as f64)
}

/// Fraction of `mal_eval` inputs predicted as `target_label`.
pub fn evaluate_backdoor(
    params: &ParamVector,
    arch: &ModelArch,
    mal_eval: &[Example],
    target_label: usize,
) -> Result<f64> {
    if mal_eval.is_empty() {
        return Err(FedError::Precondition("backdoor evaluation set is empty".into()));
    }
    let refs: Vec<&Example> = mal_eval.iter().collect();
    let preds = predict(params, arch, &refs)?;
    Ok(preds.iter().filter(|&&p| p == target_label).count() as f64 / mal_eval.len() as f64)
}

/// `out[i] = mean(series[..=i])`
pub fn cumulative_mean(series: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    series
        .iter()
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            sum / (i + 1) as f64
        })
        .collect()
}

/// Linear-interpolation percentile (`q` in `[0, 100]`); `None` when empty.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}
