//! Labeled sample matrices: synthetic generators, CSV ingestion and
//! stratified train/test splitting.

mod csv;
mod presets;
mod split;
mod synthetic;

pub use self::csv::{load_csv, ColumnRef};
pub use presets::{Preset, SyntheticParams};
pub use split::{split, SplitSpec};
pub use synthetic::{
    gen_circle_ring, gen_gauss_blobs, gen_gauss_grid, gen_new_moons, gen_xor, MoonsLayout,
};

use crate::error::{Error, Result};

/// Sample matrix with dense integer class labels.
///
/// Samples are stored row-major, one row of `dim` features per sample.
/// Synthetic Gaussian datasets additionally remember which generating blob
/// produced each sample so the construction can use the native blobs
/// instead of fitting a mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    class_count: usize,
    blob_ids: Option<Vec<usize>>,
    class_names: Option<Vec<String>>,
}

impl LabeledDataset {
    pub fn new(samples: Vec<f64>, dim: usize, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::data("feature dimension must be at least 1"));
        }
        if samples.len() != labels.len() * dim {
            return Err(Error::data(format!(
                "sample buffer holds {} values, expected {} rows x {} columns",
                samples.len(),
                labels.len(),
                dim
            )));
        }
        if labels.len() < 2 {
            return Err(Error::data(format!("need at least 2 samples, got {}", labels.len())));
        }
        if class_count < 2 {
            return Err(Error::data(format!("need at least 2 classes, got {class_count}")));
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!(
                "non-finite value in row {} column {}",
                pos / dim,
                pos % dim
            )));
        }
        let mut seen = vec![false; class_count];
        for (i, &y) in labels.iter().enumerate() {
            if y >= class_count {
                return Err(Error::data(format!(
                    "label {y} of row {i} is outside [0, {class_count})"
                )));
            }
            seen[y] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::data(format!("class {missing} has no samples")));
        }
        Ok(Self {
            samples,
            dim,
            labels,
            class_count,
            blob_ids: None,
            class_names: None,
        })
    }

    /// Attaches the generating-blob index of every sample.
    pub fn with_blob_ids(mut self, blob_ids: Vec<usize>) -> Result<Self> {
        if blob_ids.len() != self.labels.len() {
            return Err(Error::data("blob id vector length differs from sample count"));
        }
        self.blob_ids = Some(blob_ids);
        Ok(self)
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.class_count {
            return Err(Error::data("class name count differs from class count"));
        }
        self.class_names = Some(names);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Row-major sample buffer.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.samples.chunks_exact(self.dim)
    }

    pub fn blob_ids(&self) -> Option<&[usize]> {
        self.blob_ids.as_deref()
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.class_count];
        for &y in &self.labels {
            sizes[y] += 1;
        }
        sizes
    }

    /// Most frequent class, lowest index on ties.
    pub fn majority_class(&self) -> usize {
        argmax_count(&self.class_sizes())
    }

    /// Row indices of the samples of class `class`.
    pub fn indices_of_class(&self, class: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == class).collect()
    }

    /// Row-major copy of the given rows.
    pub fn gather(&self, indices: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            out.extend_from_slice(self.sample(i));
        }
        out
    }

    /// Dataset restricted to `indices`, keeping the class count and names.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let mut out = Self::new(self.gather(indices), self.dim, labels, self.class_count)?;
        if let Some(ids) = &self.blob_ids {
            out.blob_ids = Some(indices.iter().map(|&i| ids[i]).collect());
        }
        out.class_names = self.class_names.clone();
        Ok(out)
    }

    /// Renames every class `c` to `permutation[c]`.
    pub fn permute_labels(&self, permutation: &[usize]) -> Result<Self> {
        let mut check = permutation.to_vec();
        check.sort_unstable();
        if permutation.len() != self.class_count || check.iter().enumerate().any(|(i, &c)| i != c) {
            return Err(Error::param("label permutation is not a permutation of the classes"));
        }
        let mut out = self.clone();
        for y in &mut out.labels {
            *y = permutation[*y];
        }
        if let Some(names) = &self.class_names {
            let mut renamed = names.clone();
            for (c, name) in names.iter().enumerate() {
                renamed[permutation[c]] = name.clone();
            }
            out.class_names = Some(renamed);
        }
        Ok(out)
    }
}

/// Index of the largest count, lowest index on ties.
pub(crate) fn argmax_count(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}
