//! Closed-form two-class linear discriminant between two Gaussian blobs.
//!
//! For blobs `a` and `b` with pooled covariance `S` and prior `p = n_a / (n_a + n_b)`:
//!
//! ```text
//! w = S^-1 (mu_a - mu_b)
//! b = 1/2 mu_b' S^-1 mu_b - 1/2 mu_a' S^-1 mu_a + log(p / (1 - p))
//! ```
//!
//! and `w.x + b > 0` selects blob `a`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::GaussianBlob;
use crate::linalg::{backward_substitute, cholesky_lower, dot, forward_substitute, regularize, weighted_moments};

/// First and second moments of one blob plus the number of samples behind
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobStats {
    pub id: usize,
    pub class_label: usize,
    pub mean: DVector<f64>,
    /// Unregularized covariance.
    pub covariance: DMatrix<f64>,
    pub count: f64,
}

impl BlobStats {
    /// Sample mean and maximum-likelihood covariance of row-major samples.
    pub fn from_samples(id: usize, class_label: usize, rows: &[f64], dim: usize) -> Result<Self> {
        let n = rows.len() / dim;
        if n < 2 || !rows.len().is_multiple_of(dim) {
            return Err(Error::data(format!("blob {id} needs at least 2 samples, got {n}")));
        }
        let (mean, covariance, count) = weighted_moments(rows, dim, None);
        Ok(Self {
            id,
            class_label,
            mean,
            covariance,
            count,
        })
    }

    /// Analytic blob parameters with an explicit sample count.
    pub fn from_blob(id: usize, blob: &GaussianBlob, count: f64) -> Self {
        Self {
            id,
            class_label: blob.class_label,
            mean: blob.mean.clone(),
            covariance: blob.covariance.clone(),
            count,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Oriented hyperplane `normal . x + bias = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub id: usize,
    #[serde(rename = "w")]
    pub normal: Vec<f64>,
    #[serde(rename = "b")]
    pub bias: f64,
    /// Blob ids `(positive side, negative side)`.
    pub source: (usize, usize),
}

impl Hyperplane {
    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// `w . x + b`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::param(format!(
                "point has dimension {}, hyperplane has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(self.value(x))
    }

    #[inline]
    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) + self.bias
    }

    /// Same plane with the opposite orientation.
    pub fn negated(&self) -> Self {
        Self {
            id: self.id,
            normal: self.normal.iter().map(|v| -v).collect(),
            bias: -self.bias,
            source: (self.source.1, self.source.0),
        }
    }
}

/// Two-class LDA between blobs `a` and `b`; the result is positive towards `a`.
///
/// The pooled covariance is the count-weighted average of both covariances
/// plus `reg * (trace / d) * I`, and the prior is taken from the two counts.
/// Swapping the arguments negates the weights and the bias exactly.
pub fn fit_lda(a: &BlobStats, b: &BlobStats, reg: f64) -> Result<Hyperplane> {
    let d = a.dim();
    if b.dim() != d {
        return Err(Error::param(format!("blob dimensions differ: {} vs {}", d, b.dim())));
    }
    if !(reg >= 0.0 && reg.is_finite()) {
        return Err(Error::param("LDA ridge must be finite and >= 0"));
    }
    for s in [a, b] {
        if s.count.is_nan() || s.count < 2.0 {
            return Err(Error::data(format!(
                "blob {} needs at least 2 samples, has {}",
                s.id, s.count
            )));
        }
    }
    if a.mean == b.mean && a.covariance == b.covariance {
        return Err(Error::DegeneratePair(a.id, b.id));
    }
    let total = a.count + b.count;
    let mut pooled = (&a.covariance * a.count + &b.covariance * b.count) / total;
    regularize(&mut pooled, reg, 0.0);
    let chol = cholesky_lower(&pooled).ok_or_else(|| {
        Error::numeric(format!(
            "pooled covariance of blobs {} and {} is singular",
            a.id, b.id
        ))
    })?;

    let mut normal: Vec<f64> = a.mean.iter().zip(b.mean.iter()).map(|(x, y)| x - y).collect();
    forward_substitute(&chol, &mut normal);
    backward_substitute(&chol, &mut normal);
    if normal.iter().all(|v| *v == 0.0) {
        return Err(Error::DegeneratePair(a.id, b.id));
    }
    let quad = |m: &DVector<f64>| {
        let mut y = m.as_slice().to_vec();
        forward_substitute(&chol, &mut y);
        dot(&y, &y)
    };
    let bias = 0.5 * (quad(&b.mean) - quad(&a.mean)) + (a.count.ln() - b.count.ln());
    if !bias.is_finite() || normal.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric(format!(
            "LDA between blobs {} and {} produced non-finite weights",
            a.id, b.id
        )));
    }
    Ok(Hyperplane {
        id: 0,
        normal,
        bias,
        source: (a.id, b.id),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(id: usize, mean: &[f64], cov: &[f64], count: f64) -> BlobStats {
        let d = mean.len();
        BlobStats {
            id,
            class_label: id,
            mean: DVector::from_column_slice(mean),
            covariance: DMatrix::from_row_slice(d, d, cov),
            count,
        }
    }

    #[test]
    fn symmetric_pair() {
        let a = stats(0, &[1.0, 0.0], &[1.0, 0.0, 0.0, 1.0], 50.0);
        let b = stats(1, &[-1.0, 0.0], &[1.0, 0.0, 0.0, 1.0], 50.0);
        let h = fit_lda(&a, &b, 0.0).unwrap();
        assert_eq!(h.normal, vec![2.0, 0.0]);
        assert_eq!(h.bias, 0.0);
        assert_eq!(h.source, (0, 1));
    }

    #[test]
    fn unbalanced_prior_shifts_bias() {
        let a = stats(0, &[1.0, 0.0], &[1.0, 0.0, 0.0, 1.0], 75.0);
        let b = stats(1, &[-1.0, 0.0], &[1.0, 0.0, 0.0, 1.0], 25.0);
        let h = fit_lda(&a, &b, 0.0).unwrap();
        assert_eq!(h.normal, vec![2.0, 0.0]);
        assert!((h.bias - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn evaluate_examples() {
        let h = Hyperplane {
            id: 0,
            normal: vec![2.0, 0.0],
            bias: 0.0,
            source: (0, 1),
        };
        assert_eq!(h.evaluate(&[3.0, 5.0]).unwrap(), 6.0);
        assert!(matches!(h.evaluate(&[1.0]), Err(Error::Parameter(_))));
        let g = Hyperplane {
            id: 1,
            normal: vec![0.3, -1.7],
            bias: 2.5,
            source: (0, 1),
        };
        let nn = dot(&g.normal, &g.normal);
        let on_plane: Vec<f64> = g.normal.iter().map(|w| -g.bias * w / nn).collect();
        assert!(g.evaluate(&on_plane).unwrap().abs() < 1e-12);
    }

    #[test]
    fn positive_on_first_mean() {
        let a = stats(3, &[0.5, 2.0], &[1.0, 0.4, 0.4, 2.0], 30.0);
        let b = stats(7, &[-1.0, 0.0], &[0.5, 0.1, 0.1, 1.0], 40.0);
        let h = fit_lda(&a, &b, 1e-6).unwrap();
        assert!(h.evaluate(a.mean.as_slice()).unwrap() > 0.0);
        assert!(h.evaluate(b.mean.as_slice()).unwrap() < 0.0);
    }

    #[test]
    fn identical_blobs_are_degenerate() {
        let a = stats(0, &[1.0, 1.0], &[1.0, 0.0, 0.0, 1.0], 10.0);
        let b = stats(1, &[1.0, 1.0], &[1.0, 0.0, 0.0, 1.0], 10.0);
        assert!(matches!(fit_lda(&a, &b, 1e-6), Err(Error::DegeneratePair(0, 1))));
    }

    #[test]
    fn zero_spread_is_singular() {
        let a = stats(0, &[0.0, 0.0], &[0.0; 4], 2.0);
        let b = stats(1, &[1.0, 0.0], &[0.0; 4], 2.0);
        assert!(matches!(fit_lda(&a, &b, 1e-6), Err(Error::Numeric(_))));
    }

    #[test]
    fn coincident_samples_rejected() {
        let rows = [0.0, 0.0];
        assert!(matches!(
            BlobStats::from_samples(0, 0, &rows, 2),
            Err(Error::Data(_))
        ));
    }
}
