//! The six synthetic benchmark layouts with their default geometry and
//! train/test sizes.

use std::fmt;
use std::str::FromStr;

use super::synthetic::{gen_circle_ring, gen_gauss_blobs, gen_gauss_grid, gen_new_moons, gen_xor, MoonsLayout};
use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Xor,
    Blobs3,
    Blobs9,
    Circle,
    Moons2,
    Moons4,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Xor,
        Preset::Blobs3,
        Preset::Blobs9,
        Preset::Circle,
        Preset::Moons2,
        Preset::Moons4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Xor => "xor",
            Preset::Blobs3 => "blobs3",
            Preset::Blobs9 => "blobs9",
            Preset::Circle => "circle",
            Preset::Moons2 => "moons2",
            Preset::Moons4 => "moons4",
        }
    }

    /// Whether samples come from known Gaussian blobs, so no mixture fit is
    /// needed.
    pub fn is_native_gaussian(self) -> bool {
        matches!(self, Preset::Xor | Preset::Blobs3 | Preset::Blobs9)
    }

    /// Independent train and test draws. The two sides use streams derived
    /// from `seed`.
    pub fn generate(self, params: &SyntheticParams, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
        let train = self.draw(params, true, derive_seed(seed, 1))?;
        let test = self.draw(params, false, derive_seed(seed, 2))?;
        Ok((train, test))
    }

    fn draw(self, p: &SyntheticParams, train: bool, seed: u64) -> Result<LabeledDataset> {
        let pick = |(tr, te): (usize, usize)| if train { tr } else { te };
        match self {
            Preset::Xor => gen_xor(pick(p.xor_per_blob), p.xor_offset, p.xor_sigma, seed),
            Preset::Blobs3 => {
                // equilateral triangle, so the three separating lines meet in one point
                let s = p.blobs3_side;
                let h = s * 3f64.sqrt() / 2.0;
                let centers = [[0.0, 2.0 * h / 3.0], [-s / 2.0, -h / 3.0], [s / 2.0, -h / 3.0]];
                gen_gauss_blobs(&centers, &[0, 1, 2], pick(p.blobs3_per_blob), p.blobs3_sigma, seed)
            }
            Preset::Blobs9 => gen_gauss_grid(
                3,
                3,
                pick(p.blobs9_per_blob),
                p.blobs9_spacing,
                p.blobs9_sigma,
                &p.blobs9_class_map,
                seed,
            ),
            Preset::Circle => gen_circle_ring(pick(p.circle_n), p.circle_factor, p.circle_noise, seed),
            Preset::Moons2 => gen_new_moons(
                MoonsLayout {
                    pairs: 1,
                    pair_offset: [0.0, 0.0],
                },
                pick(p.moons2_per_moon),
                p.moons2_noise,
                seed,
            ),
            Preset::Moons4 => gen_new_moons(
                MoonsLayout {
                    pairs: 2,
                    pair_offset: p.moons4_offset,
                },
                pick(p.moons4_per_moon),
                p.moons4_noise,
                seed,
            ),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::param(format!("unknown dataset '{s}'")))
    }
}

/// Geometry and sizes of the synthetic presets. Sizes are `(train, test)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub xor_per_blob: (usize, usize),
    pub xor_offset: f64,
    pub xor_sigma: f64,
    pub blobs3_per_blob: (usize, usize),
    pub blobs3_side: f64,
    pub blobs3_sigma: f64,
    pub blobs9_per_blob: (usize, usize),
    pub blobs9_spacing: f64,
    pub blobs9_sigma: f64,
    pub blobs9_class_map: Vec<usize>,
    pub circle_n: (usize, usize),
    pub circle_factor: f64,
    pub circle_noise: f64,
    pub moons2_per_moon: (usize, usize),
    pub moons2_noise: f64,
    pub moons4_per_moon: (usize, usize),
    pub moons4_noise: f64,
    pub moons4_offset: [f64; 2],
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            xor_per_blob: (150, 150),
            xor_offset: 2.0,
            xor_sigma: 0.5,
            blobs3_per_blob: (200, 200),
            blobs3_side: 5.5,
            blobs3_sigma: 1.0,
            blobs9_per_blob: (100, 100),
            blobs9_spacing: 3.25,
            blobs9_sigma: 1.0,
            // no two edge-adjacent blobs share a class
            blobs9_class_map: vec![0, 1, 2, 2, 0, 1, 0, 1, 2],
            circle_n: (600, 400),
            circle_factor: 0.5,
            circle_noise: 0.18,
            moons2_per_moon: (300, 200),
            moons2_noise: 0.26,
            moons4_per_moon: (200, 200),
            moons4_noise: 0.07,
            moons4_offset: [1.0, -1.5],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_sizes() {
        let p = SyntheticParams::default();
        let expect = [
            (Preset::Xor, 600, 600),
            (Preset::Blobs3, 600, 600),
            (Preset::Blobs9, 900, 900),
            (Preset::Circle, 600, 400),
            (Preset::Moons2, 600, 400),
            (Preset::Moons4, 800, 800),
        ];
        for (preset, n_train, n_test) in expect {
            let (train, test) = preset.generate(&p, 7).unwrap();
            assert_eq!((train.len(), test.len()), (n_train, n_test), "{preset}");
            assert_ne!(train.samples()[..2], test.samples()[..2]);
        }
    }

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("nope".parse::<Preset>().is_err());
    }
}
