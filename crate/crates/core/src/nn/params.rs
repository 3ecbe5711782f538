use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

/// Flat vector holding every parameter of a model, or a delta between two
/// such vectors. All weights, updates and attacks are expressed in this form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        ParamVector(vec![0.0; len])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &ParamVector) -> ParamVector {
        debug_assert_eq!(self.len(), other.len());
        ParamVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self + other`, elementwise.
    pub fn add(&self, other: &ParamVector) -> ParamVector {
        debug_assert_eq!(self.len(), other.len());
        ParamVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, c: f64) -> ParamVector {
        ParamVector(self.0.iter().map(|v| v * c).collect())
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &ParamVector) {
        debug_assert_eq!(self.len(), x.len());
        for (s, v) in self.0.iter_mut().zip(&x.0) {
            *s += alpha * v;
        }
    }

    pub fn max_abs_diff(&self, other: &ParamVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ParamVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

/// Euclidean norm. Scaled by the largest magnitude first so huge boosted
/// updates do not overflow the sum of squares.
pub fn l2_norm(v: &ParamVector) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let sum: f64 = v.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * sum.sqrt()
}

/// Projects `point` onto the closed ℓ₂ ball of `radius` around `center`.
/// Points already inside the ball are returned unchanged.
pub fn project_l2_ball(point: &ParamVector, center: &ParamVector, radius: f64) -> ParamVector {
    assert_eq!(point.len(), center.len(), "project_l2_ball: length mismatch");
    let diff = point.sub(center);
    let dist = l2_norm(&diff);
    if dist <= radius {
        return point.clone();
    }
    let mut out = center.clone();
    out.axpy(radius / dist, &diff);
    // Rounding can leave the result a hair outside. Pull it back in with a
    // backoff that doubles, since adding a tiny offset to a large center can
    // round the change away. Reaching the center itself always terminates.
    let mut d = l2_norm(&out.sub(center));
    let mut backoff = f64::EPSILON;
    while d > radius {
        let shrink = (radius / d * (1.0 - backoff)).max(0.0);
        let diff = out.sub(center);
        out = center.clone();
        out.axpy(shrink, &diff);
        d = l2_norm(&out.sub(center));
        backoff = (backoff * 2.0).min(1.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_examples() {
        assert_eq!(l2_norm(&ParamVector::zeros(4)), 0.0);
        let v = ParamVector::from_vec(vec![3.0, 4.0, 0.0, 0.0]);
        assert_eq!(l2_norm(&v), 5.0);
        assert!((l2_norm(&v.scale(2.5)) - 12.5).abs() < 1e-12);
    }

    #[test]
    fn norm_does_not_overflow() {
        let v = ParamVector::from_vec(vec![1e200, 1e200]);
        assert!((l2_norm(&v) / (1e200 * 2f64.sqrt()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let p = ParamVector::from_vec(vec![3.0, 4.0]);
        let c = ParamVector::zeros(2);
        let out = project_l2_ball(&p, &c, 1.0);
        assert!((out[0] - 0.6).abs() < 1e-12);
        assert!((out[1] - 0.8).abs() < 1e-12);

        let inside = ParamVector::from_vec(vec![0.1, -0.2]);
        assert_eq!(project_l2_ball(&inside, &c, 1.0), inside);
    }

    #[test]
    fn projection_radius_for_boosted_bound() {
        // M = 10, beta = 30: pre-boost radius 1/3
        let c = ParamVector::from_vec(vec![1.0; 50]);
        let p = ParamVector::from_vec((0..50).map(|i| i as f64).collect());
        let out = project_l2_ball(&p, &c, 10.0 / 30.0);
        assert!(l2_norm(&out.sub(&c)) <= 0.3334);
    }
}
