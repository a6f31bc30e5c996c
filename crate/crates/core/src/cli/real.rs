//! Settings for the four tabular benchmarks.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::pipeline::{Components, FitConfig};
use crate::datasets::{load_csv, split, ColumnRef, LabeledDataset, SplitSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealDataset {
    Iris,
    Wine,
    BreastCancer,
    Pima,
}

impl RealDataset {
    pub const ALL: [RealDataset; 4] = [
        RealDataset::Iris,
        RealDataset::Wine,
        RealDataset::BreastCancer,
        RealDataset::Pima,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RealDataset::Iris => "iris",
            RealDataset::Wine => "wine",
            RealDataset::BreastCancer => "bcw",
            RealDataset::Pima => "pima",
        }
    }

    /// Expected file name inside a data directory.
    pub fn file_name(self) -> &'static str {
        match self {
            RealDataset::Iris => "iris.csv",
            RealDataset::Wine => "wine.csv",
            RealDataset::BreastCancer => "breast_cancer.csv",
            RealDataset::Pima => "pima.csv",
        }
    }

    pub fn label(self) -> ColumnRef {
        ColumnRef::Name(
            match self {
                RealDataset::Iris => "species",
                RealDataset::Wine => "class",
                RealDataset::BreastCancer => "diagnosis",
                RealDataset::Pima => "Outcome",
            }
            .into(),
        )
    }

    /// Columns in which a zero marks a missing measurement.
    pub fn drop_zero(self) -> Vec<ColumnRef> {
        match self {
            RealDataset::Pima => ["Glucose", "BloodPressure", "SkinThickness", "Insulin", "BMI"]
                .into_iter()
                .map(|c| ColumnRef::Name(c.into()))
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn test_fraction(self) -> f64 {
        match self {
            RealDataset::Wine => 0.2,
            _ => 0.4,
        }
    }

    pub fn fit_config(self) -> FitConfig {
        let components = match self {
            RealDataset::Pima => 4,
            _ => 1,
        };
        let threshold = match self {
            RealDataset::Wine => None,
            RealDataset::Pima => Some(0.1),
            _ => Some(0.05),
        };
        FitConfig {
            components: Components::Uniform(components),
            threshold,
            ..FitConfig::default()
        }
    }

    /// [`Self::drop_zero`] restricted to the columns present in the header
    /// of `path`, so reduced copies without an insulin column still load.
    pub fn drop_zero_for(self, path: &Path) -> Result<Vec<ColumnRef>> {
        let io = |e: csv::Error| Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(io)?;
        let header: Vec<String> = match reader.records().next() {
            Some(rec) => rec.map_err(io)?.iter().map(str::to_string).collect(),
            None => Vec::new(),
        };
        Ok(self
            .drop_zero()
            .into_iter()
            .filter(|c| matches!(c, ColumnRef::Name(n) if header.contains(n)))
            .collect())
    }

    pub fn load(self, path: &Path) -> Result<LabeledDataset> {
        load_csv(path, &self.label(), &self.drop_zero_for(path)?)
    }

    /// Loads and splits with the stratified test fraction of this dataset.
    pub fn load_split(self, path: &Path, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
        split(&self.load(path)?, SplitSpec::stratified(self.test_fraction(), seed))
    }
}

impl fmt::Display for RealDataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RealDataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RealDataset::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::param(format!("unknown tabular dataset '{s}'")))
    }
}
