//! End-to-end construction: blobs, hyperplanes, pruning, regions, weights.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datasets::{LabeledDataset, Preset};
use crate::error::{Error, Result};
use crate::gmm::{fit_gmm, sample_blob, ClassMixture, EmConfig};
use crate::lda::BlobStats;
use crate::network::{assemble, FFNetwork, DEFAULT_P};
use crate::partition::{build_planes, build_region_table, prune, PruneReport, RegionTable};
use crate::rng::{derive_seed, rng_from};

/// Where the Gaussian blobs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlobSource {
    /// Blob ids recorded by the generator when present, otherwise a mixture fit.
    Auto,
    Native,
    Mixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Components {
    Uniform(usize),
    PerClass(Vec<usize>),
}

impl Components {
    pub fn resolve(&self, class_count: usize) -> Result<Vec<usize>> {
        match self {
            Components::Uniform(k) => Ok(vec![*k; class_count]),
            Components::PerClass(v) if v.len() == class_count => Ok(v.clone()),
            Components::PerClass(v) => Err(Error::param(format!(
                "{} component counts given for {class_count} classes",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub blobs: BlobSource,
    pub components: Components,
    pub em_max_iters: usize,
    pub em_tol: f64,
    pub gmm_reg: f64,
    pub gmm_seed: u64,
    pub lda_reg: f64,
    /// `None` disables pruning.
    pub threshold: Option<f64>,
    pub p: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        let em = EmConfig::default();
        Self {
            blobs: BlobSource::Auto,
            components: Components::Uniform(1),
            em_max_iters: em.max_iters,
            em_tol: em.tol,
            gmm_reg: em.reg,
            gmm_seed: 0,
            lda_reg: 1e-6,
            threshold: Some(0.05),
            p: DEFAULT_P,
        }
    }
}

impl FitConfig {
    /// Defaults tuned per synthetic layout.
    pub fn for_preset(preset: Preset) -> Self {
        let base = Self::default();
        match preset {
            Preset::Xor | Preset::Blobs9 => Self {
                threshold: Some(0.1),
                ..base
            },
            Preset::Blobs3 => base,
            Preset::Circle => Self {
                components: Components::PerClass(vec![1, 4]),
                ..base
            },
            Preset::Moons2 => Self {
                components: Components::Uniform(2),
                threshold: Some(0.1),
                ..base
            },
            Preset::Moons4 => Self {
                components: Components::Uniform(4),
                ..base
            },
        }
    }

    fn em(&self) -> EmConfig {
        EmConfig {
            max_iters: self.em_max_iters,
            tol: self.em_tol,
            reg: self.gmm_reg,
            seed: self.gmm_seed,
        }
    }
}

/// Wall-clock seconds per construction stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub gmm_s: f64,
    /// LDA fits and pruning.
    pub boundary_s: f64,
    pub region_s: f64,
    pub assign_s: f64,
    pub total_s: f64,
}

/// Training samples that violate the isolation condition or disagree with
/// the region table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MarginSummary {
    pub checked: usize,
    pub violators: Vec<usize>,
    pub mismatches: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub network: FFNetwork,
    pub region_table: RegionTable,
    pub blobs: Vec<BlobStats>,
    pub initial_planes: usize,
    /// Blob pairs whose discriminant was degenerate.
    pub skipped_pairs: Vec<(usize, usize)>,
    pub timings: StageTimings,
}

impl FitOutcome {
    pub fn prune_report(&self) -> Option<&PruneReport> {
        self.network.prune_report.as_ref()
    }

    pub fn mixtures(&self) -> &[ClassMixture] {
        &self.network.mixtures
    }
}

fn uses_native(train: &LabeledDataset, source: BlobSource) -> Result<bool> {
    match source {
        BlobSource::Auto => Ok(train.blob_ids().is_some()),
        BlobSource::Mixture => Ok(false),
        BlobSource::Native if train.blob_ids().is_some() => Ok(true),
        BlobSource::Native => Err(Error::param("dataset has no generator blob ids; use a mixture fit")),
    }
}

fn native_blobs(train: &LabeledDataset) -> Result<Vec<BlobStats>> {
    let ids = train.blob_ids().expect("checked by caller");
    let count = ids.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (i, &b) in ids.iter().enumerate() {
        members[b].push(i);
    }
    members
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(id, m)| {
            let class = train.labels()[m[0]];
            if m.iter().any(|&i| train.labels()[i] != class) {
                return Err(Error::data(format!("blob {id} mixes classes")));
            }
            BlobStats::from_samples(id, class, &train.gather(m), train.dim())
        })
        .collect()
}

/// Draws `round(weight * class size)` samples (at least `2d`) from every
/// mixture component and summarizes them.
fn mixture_blobs(train: &LabeledDataset, mixtures: &[ClassMixture], seed: u64) -> Result<Vec<BlobStats>> {
    let sizes = train.class_sizes();
    let d = train.dim();
    let mut out = Vec::new();
    for mix in mixtures {
        for comp in &mix.components {
            let id = out.len();
            let n = ((comp.weight * sizes[mix.class_label] as f64).round() as usize).max(2 * d);
            let mut rng = rng_from(derive_seed(seed, 1_000 + id as u64));
            let rows = sample_blob(comp, n, &mut rng)?;
            out.push(BlobStats::from_samples(id, mix.class_label, &rows, d)?);
        }
    }
    Ok(out)
}

/// Builds the network from training data and records stage timings.
pub fn fit_pipeline(train: &LabeledDataset, cfg: &FitConfig) -> Result<FitOutcome> {
    let native = uses_native(train, cfg.blobs)?;
    let clock = Instant::now();
    let (blobs, mixtures) = if native {
        (native_blobs(train)?, Vec::new())
    } else {
        let ks = cfg.components.resolve(train.class_count())?;
        let mixtures = fit_gmm(train, &ks, &cfg.em())?;
        (mixture_blobs(train, &mixtures, cfg.gmm_seed)?, mixtures)
    };
    let gmm_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let planes = build_planes(&blobs, cfg.lda_reg)?;
    let initial_planes = planes.len();
    let skipped_pairs = planes.skipped_pairs.clone();
    let (planes, report) = match cfg.threshold {
        Some(t) => {
            let (hs, r) = prune(&planes, train, t)?;
            (hs, Some(r))
        }
        None => (planes, None),
    };
    let boundary_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let table = build_region_table(&planes, train)?;
    let region_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let mut network = assemble(&planes, &table, cfg.p)?;
    let assign_s = clock.elapsed().as_secs_f64();

    network.prune_report = report;
    network.mixtures = mixtures;
    Ok(FitOutcome {
        network,
        region_table: table,
        blobs,
        initial_planes,
        skipped_pairs,
        timings: StageTimings {
            gmm_s,
            boundary_s,
            region_s,
            assign_s,
            total_s: gmm_s + boundary_s + region_s + assign_s,
        },
    })
}

/// Compares the network with the region table on every sample and checks the
/// isolation condition.
pub fn margin_summary(net: &FFNetwork, table: &RegionTable, ds: &LabeledDataset) -> Result<MarginSummary> {
    let mut s = MarginSummary::default();
    for (i, x) in ds.rows().enumerate() {
        let code = crate::partition::code_unchecked(&net.planes, x);
        let Some(expected) = table.majority_of(&code) else {
            continue;
        };
        s.checked += 1;
        if net.isolation_holds(x)? != Some(true) {
            s.violators.push(i);
        } else if net.predict(x)? != expected {
            s.mismatches.push(i);
        }
    }
    Ok(s)
}

/// `confusion[true][predicted]`.
pub fn confusion(pred: &[usize], truth: &[usize], classes: usize) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0; classes]; classes];
    for (p, t) in pred.iter().zip(truth) {
        if *p < classes && *t < classes {
            m[*t][*p] += 1;
        }
    }
    m
}
