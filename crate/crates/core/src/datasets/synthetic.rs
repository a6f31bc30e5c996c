//! Two-dimensional toy distributions.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::rng_from;

fn check_sigma(name: &str, v: f64, allow_zero: bool) -> Result<()> {
    let ok = v.is_finite() && if allow_zero { v >= 0.0 } else { v > 0.0 };
    if ok {
        Ok(())
    } else {
        let bound = if allow_zero { ">= 0" } else { "> 0" };
        Err(Error::param(format!("{name} must be finite and {bound}, got {v}")))
    }
}

/// Isotropic Gaussian blobs around arbitrary 2-D centers.
///
/// Blob `k` contributes `n_per_blob` consecutive samples labeled
/// `class_map[k]`; the blob index is recorded on every sample.
pub fn gen_gauss_blobs(
    centers: &[[f64; 2]],
    class_map: &[usize],
    n_per_blob: usize,
    sigma: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if centers.len() != class_map.len() {
        return Err(Error::param(format!(
            "class map has {} entries for {} blobs",
            class_map.len(),
            centers.len()
        )));
    }
    if n_per_blob == 0 {
        return Err(Error::param("n_per_blob must be at least 1"));
    }
    check_sigma("sigma", sigma, false)?;
    let class_count = class_map.iter().max().map_or(0, |&m| m + 1);
    let mut rng = rng_from(seed);
    let n = centers.len() * n_per_blob;
    let mut samples = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    let mut blob_ids = Vec::with_capacity(n);
    for (k, (center, &class)) in centers.iter().zip(class_map).enumerate() {
        for _ in 0..n_per_blob {
            let zx: f64 = rng.sample(StandardNormal);
            let zy: f64 = rng.sample(StandardNormal);
            samples.push(center[0] + sigma * zx);
            samples.push(center[1] + sigma * zy);
            labels.push(class);
            blob_ids.push(k);
        }
    }
    LabeledDataset::new(samples, 2, labels, class_count)?.with_blob_ids(blob_ids)
}

/// XOR pattern: four blobs at `(±offset, ±offset)`; class 0 where the
/// coordinate signs agree, class 1 otherwise.
///
/// Blob order is (+,+), (−,−), (+,−), (−,+).
pub fn gen_xor(n_per_blob: usize, center_offset: f64, sigma: f64, seed: u64) -> Result<LabeledDataset> {
    if !center_offset.is_finite() {
        return Err(Error::param("center_offset must be finite"));
    }
    let o = center_offset;
    gen_gauss_blobs(&[[o, o], [-o, -o], [o, -o], [-o, o]], &[0, 0, 1, 1], n_per_blob, sigma, seed)
}

/// `rows x cols` blobs on the lattice `{0, spacing, ..} x {0, spacing, ..}`.
///
/// Blob `r * cols + c` sits at `(c * spacing, r * spacing)` with class
/// `class_map[r * cols + c]`.
pub fn gen_gauss_grid(
    rows: usize,
    cols: usize,
    n_per_blob: usize,
    spacing: f64,
    sigma: f64,
    class_map: &[usize],
    seed: u64,
) -> Result<LabeledDataset> {
    if rows * cols != class_map.len() {
        return Err(Error::param(format!(
            "class map has {} entries for a {rows}x{cols} grid",
            class_map.len()
        )));
    }
    if !spacing.is_finite() {
        return Err(Error::param("spacing must be finite"));
    }
    let centers: Vec<[f64; 2]> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| [c as f64 * spacing, r as f64 * spacing]))
        .collect();
    gen_gauss_blobs(&centers, class_map, n_per_blob, sigma, seed)
}

/// Inner circle (class 0, radius `factor`) inside the unit circle (class 1).
///
/// Angles are uniform; `n / 2` samples go to the outer ring and the rest to
/// the inner circle.
pub fn gen_circle_ring(n: usize, factor: f64, noise: f64, seed: u64) -> Result<LabeledDataset> {
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::param(format!("factor must lie in (0, 1), got {factor}")));
    }
    check_sigma("noise", noise, true)?;
    if n < 2 {
        return Err(Error::param("circle-and-ring needs n >= 2"));
    }
    let n_outer = n / 2;
    let n_inner = n - n_outer;
    let mut rng = rng_from(seed);
    let mut samples = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for (class, radius, count) in [(0usize, factor, n_inner), (1, 1.0, n_outer)] {
        for _ in 0..count {
            let t = rng.random_range(0.0..2.0 * PI);
            let zx: f64 = rng.sample(StandardNormal);
            let zy: f64 = rng.sample(StandardNormal);
            samples.push(radius * t.cos() + noise * zx);
            samples.push(radius * t.sin() + noise * zy);
            labels.push(class);
        }
    }
    LabeledDataset::new(samples, 2, labels, 2)
}

/// Placement of the moon pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoonsLayout {
    /// 1 (two classes) or 2 (four classes).
    pub pairs: usize,
    /// Translation of the second pair relative to the first.
    pub pair_offset: [f64; 2],
}

/// Interleaving half circles.
///
/// Each pair is the classic construction: an upper arc `(cos t, sin t)` and a
/// lower arc `(1 - cos t, 0.5 - sin t)` for `t` uniform in `[0, pi]`. The second
/// pair, when present, is translated by `pair_offset` and labeled 2 and 3.
pub fn gen_new_moons(layout: MoonsLayout, n_per_moon: usize, noise: f64, seed: u64) -> Result<LabeledDataset> {
    if !matches!(layout.pairs, 1 | 2) {
        return Err(Error::param(format!("moon pairs must be 1 or 2, got {}", layout.pairs)));
    }
    if n_per_moon == 0 {
        return Err(Error::param("n_per_moon must be at least 1"));
    }
    check_sigma("noise", noise, true)?;
    if layout.pair_offset.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("pair_offset must be finite"));
    }
    let mut rng = rng_from(seed);
    let n = 2 * layout.pairs * n_per_moon;
    let mut samples = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for pair in 0..layout.pairs {
        let shift = if pair == 0 { [0.0, 0.0] } else { layout.pair_offset };
        for moon in 0..2 {
            for _ in 0..n_per_moon {
                let t = rng.random_range(0.0..=PI);
                let (x, y) = if moon == 0 {
                    (t.cos(), t.sin())
                } else {
                    (1.0 - t.cos(), 0.5 - t.sin())
                };
                let zx: f64 = rng.sample(StandardNormal);
                let zy: f64 = rng.sample(StandardNormal);
                samples.push(x + shift[0] + noise * zx);
                samples.push(y + shift[1] + noise * zy);
                labels.push(2 * pair + moon);
            }
        }
    }
    LabeledDataset::new(samples, 2, labels, 2 * layout.pairs)
}
