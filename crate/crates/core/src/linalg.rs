//! Small dense helpers shared by the mixture fit and the LDA solver.

use nalgebra::{DMatrix, DVector};

/// Weighted mean and (maximum likelihood) covariance of row-major samples.
///
/// Weights multiply each row's contribution and the sums are divided by the
/// total weight, so unit weights give the plain sample mean and covariance.
pub(crate) fn weighted_moments(rows: &[f64], dim: usize, weights: Option<&[f64]>) -> (DVector<f64>, DMatrix<f64>, f64) {
    let n = rows.len() / dim;
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut total = 0.0;
    let mut mean = DVector::zeros(dim);
    for (i, x) in rows.chunks_exact(dim).enumerate() {
        let wi = w(i);
        total += wi;
        for j in 0..dim {
            mean[j] += wi * x[j];
        }
    }
    if total > 0.0 {
        mean /= total;
    }
    let mut cov = DMatrix::zeros(dim, dim);
    let mut centered = vec![0.0; dim];
    for (i, x) in rows.chunks_exact(dim).enumerate().take(n) {
        let wi = w(i);
        for j in 0..dim {
            centered[j] = x[j] - mean[j];
        }
        for a in 0..dim {
            let ca = wi * centered[a];
            for b in 0..=a {
                cov[(a, b)] += ca * centered[b];
            }
        }
    }
    if total > 0.0 {
        cov /= total;
    }
    for a in 0..dim {
        for b in 0..a {
            cov[(b, a)] = cov[(a, b)];
        }
    }
    (mean, cov, total)
}

/// Mean diagonal entry.
pub(crate) fn scale_of(cov: &DMatrix<f64>) -> f64 {
    cov.trace() / cov.nrows() as f64
}

/// Adds `reg * (trace / d) * I`, falling back to `fallback_scale` when the
/// matrix has no spread of its own.
pub(crate) fn regularize(cov: &mut DMatrix<f64>, reg: f64, fallback_scale: f64) {
    let mut s = scale_of(cov);
    if !(s.is_finite() && s > 0.0) {
        s = fallback_scale;
    }
    let ridge = reg * s;
    for i in 0..cov.nrows() {
        cov[(i, i)] += ridge;
    }
}

/// Lower Cholesky factor, or `None` when the matrix is not positive definite.
pub(crate) fn cholesky_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let l = m.clone().cholesky()?.unpack();
    if l.diagonal().iter().all(|v| v.is_finite() && *v > 0.0) {
        Some(l)
    } else {
        None
    }
}

/// Solves `L y = b` in place for lower triangular `L`.
pub(crate) fn forward_substitute(l: &DMatrix<f64>, b: &mut [f64]) {
    let d = b.len();
    for i in 0..d {
        let mut s = b[i];
        for j in 0..i {
            s -= l[(i, j)] * b[j];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solves `L^T x = b` in place for lower triangular `L`.
pub(crate) fn backward_substitute(l: &DMatrix<f64>, b: &mut [f64]) {
    let d = b.len();
    for i in (0..d).rev() {
        let mut s = b[i];
        for j in i + 1..d {
            s -= l[(j, i)] * b[j];
        }
        b[i] = s / l[(i, i)];
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Serde adapters storing vectors as flat arrays and matrices as arrays of rows.
pub(crate) mod serde_dense {
    use nalgebra::{DMatrix, DVector};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub mod vector {
        use super::*;

        pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
            v.as_slice().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
            Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
        }
    }

    pub mod matrix {
        use super::*;

        pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
            let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
            rows.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
            let rows = Vec::<Vec<f64>>::deserialize(d)?;
            let n = rows.len();
            let m = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != m) {
                return Err(serde::de::Error::custom("ragged matrix rows"));
            }
            Ok(DMatrix::from_row_iterator(n, m, rows.into_iter().flatten()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_two_points() {
        let (m, c, n) = weighted_moments(&[0.0, 0.0, 2.0, 4.0], 2, None);
        assert_eq!(n, 2.0);
        assert_eq!(m.as_slice(), &[1.0, 2.0]);
        assert_eq!(c[(0, 0)], 1.0);
        assert_eq!(c[(1, 1)], 4.0);
        assert_eq!(c[(0, 1)], 2.0);
        assert_eq!(c[(1, 0)], 2.0);
    }

    #[test]
    fn triangular_solves_invert_cholesky() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let l = cholesky_lower(&a).unwrap();
        let mut x = vec![1.0, 2.0];
        forward_substitute(&l, &mut x);
        backward_substitute(&l, &mut x);
        let back = &a * DVector::from_column_slice(&x);
        assert!((back[0] - 1.0).abs() < 1e-14 && (back[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_has_no_factor() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(cholesky_lower(&a).is_none());
    }
}
