//! Forward and backward passes for the fixed architectures.

use super::arch::{LayerSpec, ModelArch};
use super::batch::{Batch, Example};
use super::params::ParamVector;
use crate::error::{FedError, Result};

/// Logits for a batch, `batch × classes`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    pub rows: usize,
    pub classes: usize,
    pub values: Vec<f64>,
}

impl Logits {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.classes..(i + 1) * self.classes]
    }

    /// Index of the largest logit in row `i`; ties go to the lowest index.
    pub fn argmax(&self, i: usize) -> usize {
        argmax(self.row(i))
    }
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

pub(crate) fn check_params(params: &ParamVector, arch: &ModelArch) -> Result<()> {
    if params.len() != arch.param_count() {
        return Err(FedError::Config(format!(
            "parameter vector has length {}, architecture expects {}",
            params.len(),
            arch.param_count()
        )));
    }
    Ok(())
}

fn check_example(ex: &Example, arch: &ModelArch) -> Result<()> {
    if ex.input.len() != arch.input_len() {
        return Err(FedError::Config(format!(
            "input has {} pixels, architecture expects {}",
            ex.input.len(),
            arch.input_len()
        )));
    }
    if ex.label >= arch.classes() {
        return Err(FedError::Config(format!(
            "label {} outside [0, {})",
            ex.label,
            arch.classes()
        )));
    }
    Ok(())
}

fn check_batch(params: &ParamVector, arch: &ModelArch, batch: Batch<'_>) -> Result<()> {
    check_params(params, arch)?;
    if batch.is_empty() {
        return Err(FedError::Precondition("batch is empty".into()));
    }
    batch
        .examples()
        .iter()
        .try_for_each(|ex| check_example(ex, arch))
}

/// Per-example scratch: activations after every layer plus pool argmaxes.
struct Trace {
    acts: Vec<Vec<f64>>,
    pool_idx: Vec<Vec<usize>>,
}

fn layer_forward(
    layer: &LayerSpec,
    w: &[f64],
    input: &[f64],
    out: &mut Vec<f64>,
    pool_idx: &mut Vec<usize>,
) {
    out.clear();
    match *layer {
        LayerSpec::Conv {
            in_channels,
            out_channels,
            kernel: k,
            in_h,
            in_w,
        } => {
            let (oh, ow) = (in_h + 1 - k, in_w + 1 - k);
            let bias = &w[out_channels * in_channels * k * k..];
            out.resize(out_channels * oh * ow, 0.0);
            for o in 0..out_channels {
                let plane = &mut out[o * oh * ow..(o + 1) * oh * ow];
                plane.fill(bias[o]);
                for i in 0..in_channels {
                    let src = &input[i * in_h * in_w..(i + 1) * in_h * in_w];
                    let ker = &w[(o * in_channels + i) * k * k..(o * in_channels + i + 1) * k * k];
                    for ky in 0..k {
                        for kx in 0..k {
                            let wv = ker[ky * k + kx];
                            for y in 0..oh {
                                let srow = &src[(y + ky) * in_w + kx..(y + ky) * in_w + kx + ow];
                                let drow = &mut plane[y * ow..(y + 1) * ow];
                                for (d, s) in drow.iter_mut().zip(srow) {
                                    *d += wv * s;
                                }
                            }
                        }
                    }
                }
                for v in plane.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
        }
        LayerSpec::MaxPool {
            channels,
            size,
            in_h,
            in_w,
        } => {
            let (oh, ow) = (in_h / size, in_w / size);
            pool_idx.clear();
            for c in 0..channels {
                for y in 0..oh {
                    for x in 0..ow {
                        let mut best = c * in_h * in_w + (y * size) * in_w + x * size;
                        for dy in 0..size {
                            for dx in 0..size {
                                let idx = c * in_h * in_w + (y * size + dy) * in_w + x * size + dx;
                                if input[idx] > input[best] {
                                    best = idx;
                                }
                            }
                        }
                        out.push(input[best]);
                        pool_idx.push(best);
                    }
                }
            }
        }
        LayerSpec::Dense {
            inputs,
            outputs,
            relu,
        } => {
            let bias = &w[inputs * outputs..];
            for o in 0..outputs {
                let row = &w[o * inputs..(o + 1) * inputs];
                let mut acc = bias[o];
                for (a, b) in row.iter().zip(input) {
                    acc += a * b;
                }
                if relu && acc < 0.0 {
                    acc = 0.0;
                }
                out.push(acc);
            }
        }
    }
}

/// Backpropagates `dout` (gradient w.r.t. this layer's post-activation
/// output) into `grad` (this layer's parameter slice) and `din`.
#[allow(clippy::too_many_arguments)]
fn layer_backward(
    layer: &LayerSpec,
    w: &[f64],
    grad: &mut [f64],
    input: &[f64],
    output: &[f64],
    pool_idx: &[usize],
    dout: &mut [f64],
    din: &mut Vec<f64>,
    need_din: bool,
) {
    din.clear();
    din.resize(layer.input_len(), 0.0);
    match *layer {
        LayerSpec::Conv {
            in_channels,
            out_channels,
            kernel: k,
            in_h,
            in_w,
        } => {
            let (oh, ow) = (in_h + 1 - k, in_w + 1 - k);
            for (d, &o) in dout.iter_mut().zip(output) {
                if o <= 0.0 {
                    *d = 0.0;
                }
            }
            let wcount = out_channels * in_channels * k * k;
            for o in 0..out_channels {
                let plane = &dout[o * oh * ow..(o + 1) * oh * ow];
                grad[wcount + o] += plane.iter().sum::<f64>();
                for i in 0..in_channels {
                    let src = &input[i * in_h * in_w..(i + 1) * in_h * in_w];
                    let base = (o * in_channels + i) * k * k;
                    for ky in 0..k {
                        for kx in 0..k {
                            let mut acc = 0.0;
                            let wv = w[base + ky * k + kx];
                            for y in 0..oh {
                                let off = (y + ky) * in_w + kx;
                                let srow = &src[off..off + ow];
                                let drow = &plane[y * ow..(y + 1) * ow];
                                for (s, d) in srow.iter().zip(drow) {
                                    acc += s * d;
                                }
                                if need_din {
                                    let dst = &mut din[i * in_h * in_w + off..i * in_h * in_w + off + ow];
                                    for (t, d) in dst.iter_mut().zip(drow) {
                                        *t += wv * d;
                                    }
                                }
                            }
                            grad[base + ky * k + kx] += acc;
                        }
                    }
                }
            }
        }
        LayerSpec::MaxPool { .. } => {
            for (&idx, &d) in pool_idx.iter().zip(dout.iter()) {
                din[idx] += d;
            }
        }
        LayerSpec::Dense {
            inputs,
            outputs,
            relu,
        } => {
            if relu {
                for (d, &o) in dout.iter_mut().zip(output) {
                    if o <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            for o in 0..outputs {
                let d = dout[o];
                if d == 0.0 {
                    continue;
                }
                grad[inputs * outputs + o] += d;
                let grow = &mut grad[o * inputs..(o + 1) * inputs];
                for (g, x) in grow.iter_mut().zip(input) {
                    *g += d * x;
                }
                if need_din {
                    let wrow = &w[o * inputs..(o + 1) * inputs];
                    for (t, wv) in din.iter_mut().zip(wrow) {
                        *t += d * wv;
                    }
                }
            }
        }
    }
}

/// Parameter-slice offsets for each layer.
fn offsets(arch: &ModelArch) -> Vec<(usize, usize)> {
    let mut start = 0;
    arch.layers()
        .iter()
        .map(|l| {
            let r = (start, start + l.param_count());
            start = r.1;
            r
        })
        .collect()
}

fn run_forward(params: &[f64], arch: &ModelArch, offs: &[(usize, usize)], input: &[f64], trace: &mut Trace) {
    trace.acts[0].clear();
    trace.acts[0].extend_from_slice(input);
    for (l, layer) in arch.layers().iter().enumerate() {
        let (a, b) = offs[l];
        let (head, tail) = trace.acts.split_at_mut(l + 1);
        layer_forward(layer, &params[a..b], &head[l], &mut tail[0], &mut trace.pool_idx[l]);
    }
}

fn new_trace(arch: &ModelArch) -> Trace {
    let n = arch.layers().len();
    Trace {
        acts: vec![Vec::new(); n + 1],
        pool_idx: vec![Vec::new(); n],
    }
}

/// Logits for every row of `batch`.
pub fn forward(params: &ParamVector, arch: &ModelArch, batch: Batch<'_>) -> Result<Logits> {
    check_batch(params, arch, batch)?;
    let offs = offsets(arch);
    let mut trace = new_trace(arch);
    let classes = arch.classes();
    let mut values = Vec::with_capacity(batch.len() * classes);
    for ex in batch.examples() {
        run_forward(params.as_slice(), arch, &offs, &ex.input, &mut trace);
        values.extend_from_slice(trace.acts.last().unwrap());
    }
    Ok(Logits {
        rows: batch.len(),
        classes,
        values,
    })
}

/// Predicted class for each example, ties to the lowest index.
pub fn predict(params: &ParamVector, arch: &ModelArch, examples: &[&Example]) -> Result<Vec<usize>> {
    if examples.is_empty() {
        return Ok(Vec::new());
    }
    let logits = forward(params, arch, Batch::new(examples))?;
    Ok((0..logits.rows).map(|i| logits.argmax(i)).collect())
}

/// Writes softmax(logits) − onehot(label) into `dlogits` and returns the
/// cross-entropy of that example.
fn softmax_xent(logits: &[f64], label: usize, dlogits: &mut Vec<f64>) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    dlogits.clear();
    dlogits.extend(logits.iter().map(|z| (z - max).exp()));
    let sum: f64 = dlogits.iter().sum();
    for p in dlogits.iter_mut() {
        *p /= sum;
    }
    let loss = sum.ln() + max - logits[label];
    dlogits[label] -= 1.0;
    loss
}

/// Mean softmax cross-entropy over `batch` and its gradient.
pub fn loss_and_grad(params: &ParamVector, arch: &ModelArch, batch: Batch<'_>) -> Result<(f64, ParamVector)> {
    check_batch(params, arch, batch)?;
    let offs = offsets(arch);
    let mut trace = new_trace(arch);
    let mut grad = vec![0.0; params.len()];
    let mut total = 0.0;
    let mut dcur = Vec::new();
    let mut dnext = Vec::new();
    let p = params.as_slice();
    let layers = arch.layers();

    for ex in batch.examples() {
        run_forward(p, arch, &offs, &ex.input, &mut trace);
        total += softmax_xent(trace.acts.last().unwrap(), ex.label, &mut dcur);
        for l in (0..layers.len()).rev() {
            let (a, b) = offs[l];
            layer_backward(
                &layers[l],
                &p[a..b],
                &mut grad[a..b],
                &trace.acts[l],
                &trace.acts[l + 1],
                &trace.pool_idx[l],
                &mut dcur,
                &mut dnext,
                l > 0,
            );
            std::mem::swap(&mut dcur, &mut dnext);
        }
    }

    let n = batch.len() as f64;
    for g in grad.iter_mut() {
        *g /= n;
    }
    let loss = total / n;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(FedError::Internal("non-finite loss or gradient".into()));
    }
    Ok((loss, ParamVector::from_vec(grad)))
}

/// Mean loss only.
pub fn loss(params: &ParamVector, arch: &ModelArch, batch: Batch<'_>) -> Result<f64> {
    let logits = forward(params, arch, batch)?;
    let mut scratch = Vec::new();
    let total: f64 = batch
        .examples()
        .iter()
        .enumerate()
        .map(|(i, ex)| softmax_xent(logits.row(i), ex.label, &mut scratch))
        .sum();
    Ok(total / batch.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use rand::Rng;

    fn random_examples(arch: &ModelArch, n: usize, seed: u64) -> Vec<Example> {
        let mut rng = rng_from(seed);
        (0..n)
            .map(|_| {
                let input = (0..arch.input_len()).map(|_| rng.random::<f64>()).collect();
                Example::new(input, rng.random_range(0..arch.classes()))
            })
            .collect()
    }

    #[test]
    fn zero_params_give_zero_logits_and_uniform_loss() {
        let arch = ModelArch::mlp_small(4, 4, 10);
        let ex = random_examples(&arch, 3, 1);
        let refs: Vec<&Example> = ex.iter().collect();
        let params = ParamVector::zeros(arch.param_count());
        let logits = forward(&params, &arch, Batch::new(&refs)).unwrap();
        assert!(logits.values.iter().all(|&v| v == 0.0));
        let (l, _) = loss_and_grad(&params, &arch, Batch::new(&refs)).unwrap();
        assert!((l - 10f64.ln()).abs() < 1e-12);

        let cnn = ModelArch::cnn_with_widths(8, 8, 10, 2, 2, 4);
        let ex = random_examples(&cnn, 2, 2);
        let refs: Vec<&Example> = ex.iter().collect();
        let logits = forward(&ParamVector::zeros(cnn.param_count()), &cnn, Batch::new(&refs)).unwrap();
        assert!(logits.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn permuting_rows_permutes_logits() {
        let arch = ModelArch::cnn_with_widths(8, 8, 3, 2, 3, 5);
        let params = arch.init_params(&mut rng_from(3));
        let ex = random_examples(&arch, 4, 4);
        let fwd: Vec<&Example> = ex.iter().collect();
        let rev: Vec<&Example> = ex.iter().rev().collect();
        let a = forward(&params, &arch, Batch::new(&fwd)).unwrap();
        let b = forward(&params, &arch, Batch::new(&rev)).unwrap();
        for i in 0..4 {
            assert_eq!(a.row(i), b.row(3 - i));
        }
    }

    #[test]
    fn duplicated_batch_has_same_loss_and_grad() {
        let arch = ModelArch::mlp_small(5, 5, 4);
        let params = arch.init_params(&mut rng_from(5));
        let ex = random_examples(&arch, 3, 6);
        let once: Vec<&Example> = ex.iter().collect();
        let twice: Vec<&Example> = ex.iter().chain(ex.iter()).collect();
        let (l1, g1) = loss_and_grad(&params, &arch, Batch::new(&once)).unwrap();
        let (l2, g2) = loss_and_grad(&params, &arch, Batch::new(&twice)).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        assert!(g1.max_abs_diff(&g2) < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_config_error() {
        let arch = ModelArch::mlp_small(4, 4, 3);
        let bad = Example::new(vec![0.0; 15], 0);
        let refs = [&bad];
        let params = ParamVector::zeros(arch.param_count());
        assert!(matches!(forward(&params, &arch, Batch::new(&refs)), Err(FedError::Config(_))));
        let good = Example::new(vec![0.0; 16], 0);
        let refs = [&good];
        let short = ParamVector::zeros(3);
        assert!(matches!(forward(&short, &arch, Batch::new(&refs)), Err(FedError::Config(_))));
        let mislabeled = Example::new(vec![0.0; 16], 3);
        let refs = [&mislabeled];
        assert!(loss_and_grad(&params, &arch, Batch::new(&refs)).is_err());
    }

    #[test]
    fn loss_matches_loss_and_grad() {
        let arch = ModelArch::cnn_with_widths(7, 7, 3, 2, 2, 4);
        let params = arch.init_params(&mut rng_from(8));
        let ex = random_examples(&arch, 3, 9);
        let refs: Vec<&Example> = ex.iter().collect();
        let (l, _) = loss_and_grad(&params, &arch, Batch::new(&refs)).unwrap();
        assert!((l - loss(&params, &arch, Batch::new(&refs)).unwrap()).abs() < 1e-12);
    }
}
