//! Per-class Gaussian mixtures fitted by expectation maximization.
//!
//! Every class is modeled independently with full-covariance components; the
//! components become the Gaussian blobs that the hyperplane construction
//! separates. Initialization is k-means++ seeding followed by one hard
//! assignment pass.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, forward_substitute, regularize, scale_of, serde_dense, weighted_moments};
use crate::rng::{derive_seed, rng_from};

/// One Gaussian modality tagged with the class it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianBlob {
    #[serde(with = "serde_dense::vector")]
    pub mean: DVector<f64>,
    /// Regularized covariance.
    #[serde(with = "serde_dense::matrix")]
    pub covariance: DMatrix<f64>,
    pub weight: f64,
    pub class_label: usize,
    /// Effective number of samples the component is responsible for.
    pub support_count: f64,
}

impl GaussianBlob {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Precomputes the Cholesky factor for repeated density evaluation.
    pub fn density(&self) -> Result<GaussianDensity> {
        GaussianDensity::new(&self.mean, &self.covariance)
    }
}

/// Multivariate normal with a cached Cholesky factor.
#[derive(Debug, Clone)]
pub struct GaussianDensity {
    mean: Vec<f64>,
    chol: DMatrix<f64>,
    log_norm: f64,
}

impl GaussianDensity {
    pub fn new(mean: &DVector<f64>, covariance: &DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::param("covariance shape does not match mean"));
        }
        let chol = cholesky_lower(covariance)
            .ok_or_else(|| Error::numeric("covariance is not positive definite"))?;
        let log_det_half: f64 = chol.diagonal().iter().map(|v| v.ln()).sum();
        Ok(Self {
            mean: mean.as_slice().to_vec(),
            chol,
            log_norm: -0.5 * d as f64 * (2.0 * PI).ln() - log_det_half,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Log density at `x`; `scratch` must hold `dim` values.
    fn logpdf_with(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        for ((s, xi), mi) in scratch.iter_mut().zip(x).zip(&self.mean) {
            *s = xi - mi;
        }
        forward_substitute(&self.chol, scratch);
        let q: f64 = scratch.iter().map(|v| v * v).sum();
        self.log_norm - 0.5 * q
    }

    pub fn logpdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::param(format!(
                "point has dimension {}, density has {}",
                x.len(),
                self.dim()
            )));
        }
        let mut scratch = vec![0.0; x.len()];
        Ok(self.logpdf_with(x, &mut scratch))
    }

    /// Draws one sample `mean + L z`.
    fn sample_into<R: Rng>(&self, rng: &mut R, z: &mut [f64], out: &mut Vec<f64>) {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for i in 0..z.len() {
            let mut acc = self.mean[i];
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                acc += self.chol[(i, j)] * zj;
            }
            out.push(acc);
        }
    }
}

/// Exact multivariate normal log density of `x` under `blob`.
pub fn gaussian_logpdf(blob: &GaussianBlob, x: &[f64]) -> Result<f64> {
    if x.len() != blob.dim() {
        return Err(Error::param(format!(
            "point has dimension {}, blob has {}",
            x.len(),
            blob.dim()
        )));
    }
    blob.density()?.logpdf(x)
}

/// Fitted mixture of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMixture {
    pub class_label: usize,
    pub components: Vec<GaussianBlob>,
    /// Training log-likelihood of the returned parameters.
    pub log_likelihood: f64,
    /// Number of M-steps performed.
    pub iterations: usize,
    /// Log-likelihood observed before each M-step, plus the final value.
    pub log_likelihood_trace: Vec<f64>,
    /// Trace positions that directly follow a component re-seed.
    pub reseed_steps: Vec<usize>,
}

impl ClassMixture {
    pub fn reseeds(&self) -> usize {
        self.reseed_steps.len()
    }

    /// True when the log-likelihood never drops by more than
    /// `slack * max(1, |previous|)` between consecutive EM steps, ignoring
    /// steps that follow a re-seed.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.log_likelihood_trace.windows(2).enumerate().all(|(i, w)| {
            self.reseed_steps.contains(&(i + 1)) || w[1] >= w[0] - slack * w[0].abs().max(1.0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Relative log-likelihood change below which EM stops.
    pub tol: f64,
    /// Covariance ridge, relative to the mean diagonal entry.
    pub reg: f64,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-6,
            reg: 1e-6,
            seed: 0,
        }
    }
}

/// Fits one mixture per class, independently.
///
/// `components_per_class[c]` components are used for class `c`; each class
/// draws its random stream from `(seed, c)` only, so a class's fit does not
/// depend on any other class.
pub fn fit_gmm(ds: &LabeledDataset, components_per_class: &[usize], cfg: &EmConfig) -> Result<Vec<ClassMixture>> {
    if components_per_class.len() != ds.class_count() {
        return Err(Error::param(format!(
            "{} component counts given for {} classes",
            components_per_class.len(),
            ds.class_count()
        )));
    }
    if !(cfg.reg >= 0.0 && cfg.reg.is_finite()) {
        return Err(Error::param("reg must be finite and >= 0"));
    }
    if cfg.max_iters == 0 {
        return Err(Error::param("max_iters must be at least 1"));
    }
    (0..ds.class_count())
        .into_par_iter()
        .map(|class| {
            let idx = ds.indices_of_class(class);
            let rows = ds.gather(&idx);
            fit_class(&rows, ds.dim(), class, components_per_class[class], cfg)
        })
        .collect()
}

/// EM for the samples of a single class.
pub fn fit_class(rows: &[f64], dim: usize, class: usize, k: usize, cfg: &EmConfig) -> Result<ClassMixture> {
    let n = rows.len() / dim;
    if n == 0 {
        return Err(Error::data(format!("class {class} has no samples")));
    }
    if k == 0 {
        return Err(Error::param(format!("class {class}: component count must be at least 1")));
    }
    if n < k {
        return Err(Error::data(format!(
            "class {class} has {n} samples for {k} components"
        )));
    }
    let mut em = Em::new(rows, dim, class, k, cfg);
    em.run()
}

struct Em<'a> {
    rows: &'a [f64],
    dim: usize,
    n: usize,
    k: usize,
    class: usize,
    cfg: EmConfig,
    rng: ChaCha8Rng,
    /// Class-wide covariance, the inflated covariance used for re-seeds.
    broad_cov: DMatrix<f64>,
    broad_scale: f64,
    means: Vec<DVector<f64>>,
    covs: Vec<DMatrix<f64>>,
    weights: Vec<f64>,
    support: Vec<f64>,
    resp: Vec<f64>,
}

impl<'a> Em<'a> {
    fn new(rows: &'a [f64], dim: usize, class: usize, k: usize, cfg: &EmConfig) -> Self {
        let n = rows.len() / dim;
        let (_, mut broad_cov, _) = weighted_moments(rows, dim, None);
        let mut broad_scale = scale_of(&broad_cov);
        if !(broad_scale.is_finite() && broad_scale > 0.0) {
            broad_scale = 1.0;
        }
        regularize(&mut broad_cov, cfg.reg.max(1e-9), broad_scale);
        Self {
            rows,
            dim,
            n,
            k,
            class,
            cfg: *cfg,
            rng: rng_from(derive_seed(cfg.seed, class as u64)),
            broad_cov,
            broad_scale,
            means: Vec::new(),
            covs: Vec::new(),
            weights: Vec::new(),
            support: Vec::new(),
            resp: vec![0.0; n * k],
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    /// k-means++ seeding and one hard-assignment pass.
    fn initialize(&mut self) -> bool {
        let mut centers: Vec<usize> = vec![self.rng.random_range(0..self.n)];
        let mut d2: Vec<f64> = (0..self.n)
            .map(|i| Self::sq_dist(self.row(i), self.row(centers[0])))
            .collect();
        while centers.len() < self.k {
            let total: f64 = d2.iter().sum();
            let next = if total > 0.0 {
                let mut u = self.rng.random::<f64>() * total;
                let mut pick = self.n - 1;
                for (i, &w) in d2.iter().enumerate() {
                    if u < w {
                        pick = i;
                        break;
                    }
                    u -= w;
                }
                pick
            } else {
                self.rng.random_range(0..self.n)
            };
            centers.push(next);
            for (i, d) in d2.iter_mut().enumerate() {
                *d = d.min(Self::sq_dist(self.row(i), self.row(next)));
            }
        }
        self.resp.iter_mut().for_each(|r| *r = 0.0);
        for i in 0..self.n {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, &ci) in centers.iter().enumerate() {
                let dd = Self::sq_dist(self.row(i), self.row(ci));
                if dd < best_d {
                    best_d = dd;
                    best = c;
                }
            }
            self.resp[i * self.k + best] = 1.0;
        }
        self.means = centers.iter().map(|&c| DVector::from_column_slice(self.row(c))).collect();
        self.covs = vec![self.broad_cov.clone(); self.k];
        self.weights = vec![1.0 / self.k as f64; self.k];
        self.support = vec![0.0; self.k];
        self.maximize()
    }

    /// Weighted moment updates from the current responsibilities. Components
    /// with fewer than `dim + 1` effective points, or whose covariance cannot
    /// be factored, are re-seeded from a random datum with the broad
    /// covariance. Returns whether any re-seed happened.
    fn maximize(&mut self) -> bool {
        let mut reseeded = false;
        let mut w = vec![0.0; self.n];
        for c in 0..self.k {
            for (i, wi) in w.iter_mut().enumerate() {
                *wi = self.resp[i * self.k + c];
            }
            let (mean, mut cov, nk) = weighted_moments(self.rows, self.dim, Some(&w));
            regularize(&mut cov, self.cfg.reg, self.broad_scale);
            if nk < (self.dim + 1) as f64 || cholesky_lower(&cov).is_none() {
                let pick = self.rng.random_range(0..self.n);
                self.means[c] = DVector::from_column_slice(self.row(pick));
                self.covs[c] = self.broad_cov.clone();
                self.weights[c] = 1.0 / self.k as f64;
                self.support[c] = nk;
                reseeded = true;
            } else {
                self.means[c] = mean;
                self.covs[c] = cov;
                self.weights[c] = nk / self.n as f64;
                self.support[c] = nk;
            }
        }
        if reseeded {
            let total: f64 = self.weights.iter().sum();
            self.weights.iter_mut().for_each(|w| *w /= total);
        }
        reseeded
    }

    /// Responsibilities and log-likelihood of the current parameters.
    fn expect(&mut self) -> Result<f64> {
        let densities: Vec<GaussianDensity> = self
            .means
            .iter()
            .zip(&self.covs)
            .map(|(m, c)| GaussianDensity::new(m, c))
            .collect::<Result<_>>()?;
        let log_w: Vec<f64> = self.weights.iter().map(|w| w.ln()).collect();
        let mut scratch = vec![0.0; self.dim];
        let mut ll = 0.0;
        for i in 0..self.n {
            let x = &self.rows[i * self.dim..(i + 1) * self.dim];
            let r = &mut self.resp[i * self.k..(i + 1) * self.k];
            let mut mx = f64::NEG_INFINITY;
            for c in 0..self.k {
                r[c] = log_w[c] + densities[c].logpdf_with(x, &mut scratch);
                mx = mx.max(r[c]);
            }
            let mut s = 0.0;
            for v in r.iter_mut() {
                *v = (*v - mx).exp();
                s += *v;
            }
            for v in r.iter_mut() {
                *v /= s;
            }
            ll += mx + s.ln();
        }
        if !ll.is_finite() {
            return Err(Error::numeric(format!(
                "class {}: EM log-likelihood is not finite",
                self.class
            )));
        }
        Ok(ll)
    }

    fn run(&mut self) -> Result<ClassMixture> {
        let mut reseed_steps = Vec::new();
        if self.initialize() {
            reseed_steps.push(0);
        }
        let mut trace: Vec<f64> = Vec::new();
        let mut iterations = 0;
        loop {
            let ll = self.expect()?;
            trace.push(ll);
            let converged = match trace.len() {
                0 | 1 => false,
                t => {
                    let prev = trace[t - 2];
                    !reseed_steps.contains(&(t - 1)) && (ll - prev).abs() <= self.cfg.tol * prev.abs()
                }
            };
            if converged || iterations == self.cfg.max_iters {
                break;
            }
            if self.maximize() {
                reseed_steps.push(trace.len());
            }
            iterations += 1;
        }
        let components = (0..self.k)
            .map(|c| GaussianBlob {
                mean: self.means[c].clone(),
                covariance: self.covs[c].clone(),
                weight: self.weights[c],
                class_label: self.class,
                support_count: self.support[c],
            })
            .collect();
        Ok(ClassMixture {
            class_label: self.class,
            components,
            log_likelihood: *trace.last().unwrap(),
            iterations,
            log_likelihood_trace: trace,
            reseed_steps,
        })
    }
}

/// Draws `n` samples from one blob into a row-major buffer.
pub fn sample_blob<R: Rng>(blob: &GaussianBlob, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let density = blob.density().map_err(|_| {
        Error::Consistency("blob covariance is not positive definite after regularization".into())
    })?;
    let mut out = Vec::with_capacity(n * blob.dim());
    let mut z = vec![0.0; blob.dim()];
    for _ in 0..n {
        density.sample_into(rng, &mut z, &mut out);
    }
    Ok(out)
}

/// `n` i.i.d. draws from a mixture: component by weight, then
/// `mean + L z` with `L` the Cholesky factor of the covariance.
pub fn sample_mixture(mix: &ClassMixture, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::param("sample count must be at least 1"));
    }
    let densities: Vec<GaussianDensity> = mix
        .components
        .iter()
        .map(|b| b.density())
        .collect::<Result<_>>()
        .map_err(|_| {
            Error::Consistency("mixture covariance is not positive definite after regularization".into())
        })?;
    let pick = WeightedIndex::new(mix.components.iter().map(|b| b.weight))
        .map_err(|e| Error::param(format!("invalid mixture weights: {e}")))?;
    let dim = densities[0].dim();
    let mut rng = rng_from(seed);
    let mut out = Vec::with_capacity(n * dim);
    let mut z = vec![0.0; dim];
    for _ in 0..n {
        let c = pick.sample(&mut rng);
        densities[c].sample_into(&mut rng, &mut z, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn standard_blob(d: usize) -> GaussianBlob {
        GaussianBlob {
            mean: DVector::zeros(d),
            covariance: DMatrix::identity(d, d),
            weight: 1.0,
            class_label: 0,
            support_count: 1.0,
        }
    }

    #[test]
    fn standard_normal_at_origin() {
        let v = gaussian_logpdf(&standard_blob(2), &[0.0, 0.0]).unwrap();
        assert!(close(v, -(2.0 * PI).ln(), 1e-15));
        assert!(close(v, -1.837877, 1e-6));
    }

    #[test]
    fn logpdf_dimension_mismatch() {
        assert!(matches!(
            gaussian_logpdf(&standard_blob(2), &[0.0]),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn logpdf_mean_shift_invariance() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]);
        let mut blob = standard_blob(2);
        blob.covariance = cov;
        let zero = gaussian_logpdf(&blob, &[0.4, -1.0]).unwrap();
        blob.mean = DVector::from_column_slice(&[3.0, -2.0]);
        let shifted = gaussian_logpdf(&blob, &[3.4, -3.0]).unwrap();
        assert!(close(zero, shifted, 1e-12));
    }

    #[test]
    fn single_component_is_sample_moments() {
        let rows: Vec<f64> = (0..40).flat_map(|i| [i as f64 * 0.1, (i * i % 7) as f64]).collect();
        let mix = fit_class(&rows, 2, 0, 1, &EmConfig::default()).unwrap();
        let (mean, mut cov, _) = weighted_moments(&rows, 2, None);
        regularize(&mut cov, 1e-6, 1.0);
        assert_eq!(mix.components[0].mean, mean);
        assert_eq!(mix.components[0].covariance, cov);
        assert_eq!(mix.iterations, 1);
        assert_eq!(mix.components[0].weight, 1.0);
    }

    #[test]
    fn too_few_samples_for_components() {
        let rows = vec![0.0, 1.0, 2.0];
        assert!(matches!(
            fit_class(&rows, 1, 0, 4, &EmConfig::default()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn sample_mixture_is_deterministic_and_single_component() {
        let mix = ClassMixture {
            class_label: 0,
            components: vec![GaussianBlob {
                mean: DVector::from_column_slice(&[5.0, -5.0]),
                ..standard_blob(2)
            }],
            log_likelihood: 0.0,
            iterations: 0,
            log_likelihood_trace: vec![0.0],
            reseed_steps: vec![],
        };
        let a = sample_mixture(&mix, 50, 3).unwrap();
        assert_eq!(a, sample_mixture(&mix, 50, 3).unwrap());
        assert_eq!(a.len(), 100);
        let mean_x: f64 = a.chunks(2).map(|r| r[0]).sum::<f64>() / 50.0;
        assert!((mean_x - 5.0).abs() < 1.0);
    }

    #[test]
    fn collapsed_components_are_reseeded() {
        // 12 points, 3 components in 3-D: at most a handful of points each
        let rows: Vec<f64> = (0..12)
            .flat_map(|i| [i as f64, (i % 3) as f64, (i % 2) as f64])
            .collect();
        let mix = fit_class(&rows, 3, 0, 3, &EmConfig::default()).unwrap();
        assert!(mix.reseeds() > 0);
        assert_eq!(mix.components.len(), 3);
        let total: f64 = mix.components.iter().map(|c| c.weight).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}
