//! The constructed three-stage ReLU network and its model file.
//!
//! Layer `l1` holds one antisymmetric neuron pair per hyperplane, layer `l2`
//! one neuron per observed region code, and the output layer connects each
//! region neuron to the majority class of its region. Only the first layer has
//! nonzero biases.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{argmax_count, LabeledDataset};
use crate::error::{Error, Result};
use crate::gmm::ClassMixture;
use crate::lda::Hyperplane;
use crate::linalg::serde_dense;
use crate::partition::{max_regions, HyperplaneSet, PruneReport, RegionCode, RegionTable};

pub const DEFAULT_P: f64 = 1000.0;
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FFNetwork {
    pub dim: usize,
    pub class_count: usize,
    /// Isolation constant.
    pub p: f64,
    pub planes: Vec<Hyperplane>,
    /// Region code of each `l2` neuron, in lexicographic order.
    pub code_order: Vec<RegionCode>,
    /// `2L x d`.
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    /// `D2 x 2L`, entries in `{1, -P}`.
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
    /// `C x D2`, one-hot columns.
    pub w3: DMatrix<f64>,
    pub b3: DVector<f64>,
    /// Answer when no region neuron fires.
    pub fallback_class: usize,
    pub prune_report: Option<PruneReport>,
    pub mixtures: Vec<ClassMixture>,
}

/// Every intermediate of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    pub z1: Vec<f64>,
    pub a1: Vec<f64>,
    pub z2: Vec<f64>,
    pub a2: Vec<f64>,
    pub logits: Vec<f64>,
}

#[inline]
fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// `out = W x + b`, accumulating each row left to right.
pub(crate) fn affine(w: &DMatrix<f64>, b: &DVector<f64>, x: &[f64], out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, xc) in x.iter().enumerate() {
            acc += w[(r, c)] * xc;
        }
        *o = acc + b[r];
    }
}

/// Index of the largest value, lowest index on ties; `fallback` when every
/// value is exactly zero.
pub fn decide(logits: &[f64], fallback: usize) -> usize {
    if logits.iter().all(|v| *v == 0.0) {
        return fallback;
    }
    let mut best = 0;
    for (i, v) in logits.iter().enumerate() {
        if *v > logits[best] {
            best = i;
        }
    }
    best
}

/// Builds the network for a hyperplane set and the region table derived from it.
pub fn assemble(hs: &HyperplaneSet, rt: &RegionTable, p: f64) -> Result<FFNetwork> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::param(format!("P must be positive and finite, got {p}")));
    }
    let l = hs.len();
    let d = hs.dim;
    if rt.code_len != l {
        return Err(Error::Consistency(format!(
            "region codes have length {}, but there are {l} hyperplanes",
            rt.code_len
        )));
    }
    if rt.is_empty() {
        return Err(Error::Consistency("region table is empty".into()));
    }
    let c = rt.class_count;
    let code_order: Vec<RegionCode> = rt.codes().cloned().collect();
    if let Some(bad) = code_order.iter().find(|code| code.len() != l) {
        return Err(Error::Consistency(format!(
            "region code {bad} has length {}, expected {l}",
            bad.len()
        )));
    }
    let d2 = code_order.len();

    let mut w1 = DMatrix::zeros(2 * l, d);
    let mut b1 = DVector::zeros(2 * l);
    for (k, plane) in hs.planes.iter().enumerate() {
        for j in 0..d {
            w1[(2 * k, j)] = plane.normal[j];
            w1[(2 * k + 1, j)] = -plane.normal[j];
        }
        b1[2 * k] = plane.bias;
        b1[2 * k + 1] = -plane.bias;
    }

    let mut w2 = DMatrix::zeros(d2, 2 * l);
    let mut w3 = DMatrix::zeros(c, d2);
    let mut totals = vec![0usize; c];
    for (r, code) in code_order.iter().enumerate() {
        for k in 0..l {
            let (on, off) = if code.get(k) { (2 * k, 2 * k + 1) } else { (2 * k + 1, 2 * k) };
            w2[(r, on)] = 1.0;
            w2[(r, off)] = -p;
        }
        let entry = rt.get(code).expect("code taken from the table");
        w3[(entry.majority_class, r)] = 1.0;
        for (t, n) in totals.iter_mut().zip(&entry.counts) {
            *t += n;
        }
    }

    let net = FFNetwork {
        dim: d,
        class_count: c,
        p,
        planes: hs.planes.clone(),
        code_order,
        w1,
        b1,
        w2,
        b2: DVector::zeros(d2),
        w3,
        b3: DVector::zeros(c),
        fallback_class: argmax_count(&totals),
        prune_report: None,
        mixtures: Vec::new(),
    };
    net.check_structure()
        .map_err(|(at, msg)| Error::Consistency(format!("{at}: {msg}")))?;
    Ok(net)
}

impl FFNetwork {
    pub fn plane_count(&self) -> usize {
        self.planes.len()
    }

    /// Width of the first hidden layer, `2L`.
    pub fn d1(&self) -> usize {
        self.w1.nrows()
    }

    /// Width of the second hidden layer, one neuron per region.
    pub fn d2(&self) -> usize {
        self.w2.nrows()
    }

    /// Layer widths `(d, D1, D2, C)`.
    pub fn architecture(&self) -> [usize; 4] {
        [self.dim, self.d1(), self.d2(), self.class_count]
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::param(format!(
                "input has dimension {}, network expects {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, LayerTrace)> {
        self.check_dim(x)?;
        let mut z1 = vec![0.0; self.d1()];
        affine(&self.w1, &self.b1, x, &mut z1);
        let a1: Vec<f64> = z1.iter().copied().map(relu).collect();
        let mut z2 = vec![0.0; self.d2()];
        affine(&self.w2, &self.b2, &a1, &mut z2);
        let a2: Vec<f64> = z2.iter().copied().map(relu).collect();
        let mut logits = vec![0.0; self.class_count];
        affine(&self.w3, &self.b3, &a2, &mut logits);
        let trace = LayerTrace {
            z1,
            a1,
            z2,
            a2,
            logits: logits.clone(),
        };
        Ok((logits, trace))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let (logits, _) = self.forward(x)?;
        Ok(decide(&logits, self.fallback_class))
    }

    pub fn predict_all(&self, ds: &LabeledDataset) -> Result<Vec<usize>> {
        self.check_dim(&vec![0.0; ds.dim()])?;
        let rows: Vec<&[f64]> = ds.rows().collect();
        rows.par_iter().map(|x| self.predict(x)).collect()
    }

    /// Fraction of correctly classified samples.
    pub fn accuracy(&self, ds: &LabeledDataset) -> Result<f64> {
        let pred = self.predict_all(ds)?;
        let hits = pred.iter().zip(ds.labels()).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / ds.len() as f64)
    }

    /// Majority class of a stored region.
    pub fn region_class(&self, r: usize) -> usize {
        (0..self.class_count).find(|&c| self.w3[(c, r)] == 1.0).unwrap_or(self.fallback_class)
    }

    /// Checks the isolation condition at `x`.
    ///
    /// Returns `None` when the code of `x` is not a stored region, otherwise
    /// whether every other region neuron is pushed below zero, i.e.
    /// `P * sum_{mismatch} r_l > sum_{match} r_l` for each other stored code,
    /// and the own neuron is strictly positive.
    pub fn isolation_holds(&self, x: &[f64]) -> Result<Option<bool>> {
        self.check_dim(x)?;
        let r: Vec<f64> = self.planes.iter().map(|h| h.value(x).abs()).collect();
        let code = crate::partition::code_unchecked(&self.planes, x);
        let Ok(own) = self.code_order.binary_search(&code) else {
            return Ok(None);
        };
        if r.iter().all(|v| *v == 0.0) {
            return Ok(Some(false));
        }
        let holds = self.code_order.iter().enumerate().all(|(i, other)| {
            if i == own {
                return true;
            }
            let (mut matched, mut mismatched) = (0.0, 0.0);
            for (k, rk) in r.iter().enumerate() {
                if other.get(k) == code.get(k) {
                    matched += rk;
                } else {
                    mismatched += rk;
                }
            }
            self.p * mismatched > matched
        });
        Ok(Some(holds))
    }

    /// Checks every stored invariant. Errors carry a location such as `W2[3][4]`.
    pub(crate) fn check_structure(&self) -> std::result::Result<(), (String, String)> {
        let fail = |at: String, msg: String| Err((at, msg));
        let l = self.planes.len();
        let d2 = self.code_order.len();
        let c = self.class_count;
        if !(self.p > 0.0 && self.p.is_finite()) {
            return fail("P".into(), format!("must be positive, got {}", self.p));
        }
        if c < 2 {
            return fail("C".into(), "need at least two classes".into());
        }
        if l == 0 || d2 == 0 {
            return fail("planes".into(), "network has no planes or regions".into());
        }
        let shapes = [
            ("W1", self.w1.shape(), (2 * l, self.dim)),
            ("b1", self.b1.shape(), (2 * l, 1)),
            ("W2", self.w2.shape(), (d2, 2 * l)),
            ("b2", self.b2.shape(), (d2, 1)),
            ("W3", self.w3.shape(), (c, d2)),
            ("b3", self.b3.shape(), (c, 1)),
        ];
        for (name, got, want) in shapes {
            if got != want {
                return fail(name.into(), format!("shape {got:?}, expected {want:?}"));
            }
        }
        for (k, plane) in self.planes.iter().enumerate() {
            if plane.id != k || plane.dim() != self.dim {
                return fail(format!("planes[{k}]"), "id or dimension mismatch".into());
            }
            for j in 0..self.dim {
                if self.w1[(2 * k, j)] != plane.normal[j] || self.w1[(2 * k + 1, j)] != -plane.normal[j] {
                    return fail(format!("W1[{}][{j}]", 2 * k + 1), "neuron pair is not antisymmetric".into());
                }
            }
            if self.b1[2 * k] != plane.bias || self.b1[2 * k + 1] != -plane.bias {
                return fail(format!("b1[{}]", 2 * k + 1), "bias pair is not antisymmetric".into());
            }
        }
        if d2 as u128 > max_regions(l, self.dim) {
            return fail(
                "code_order".into(),
                format!("{d2} regions exceed the bound for {l} planes in {} dimensions", self.dim),
            );
        }
        for (r, code) in self.code_order.iter().enumerate() {
            if code.len() != l {
                return fail(format!("code_order[{r}]"), format!("code length {}, expected {l}", code.len()));
            }
            if r > 0 && self.code_order[r - 1] >= *code {
                return fail(format!("code_order[{r}]"), "codes must be distinct and sorted".into());
            }
            for k in 0..l {
                let (on, off) = if code.get(k) { (2 * k, 2 * k + 1) } else { (2 * k + 1, 2 * k) };
                if self.w2[(r, on)] != 1.0 {
                    return fail(format!("W2[{r}][{on}]"), format!("expected 1, got {}", self.w2[(r, on)]));
                }
                if self.w2[(r, off)] != -self.p {
                    return fail(
                        format!("W2[{r}][{off}]"),
                        format!("expected {}, got {}", -self.p, self.w2[(r, off)]),
                    );
                }
            }
            let mut ones = 0;
            for k in 0..c {
                match self.w3[(k, r)] {
                    0.0 => {}
                    1.0 => ones += 1,
                    v => return fail(format!("W3[{k}][{r}]"), format!("expected 0 or 1, got {v}")),
                }
            }
            if ones != 1 {
                return fail(format!("W3[*][{r}]"), format!("column has {ones} ones, expected 1"));
            }
        }
        if let Some(i) = self.b2.iter().position(|v| *v != 0.0) {
            return fail(format!("b2[{i}]"), "must be zero".into());
        }
        if let Some(i) = self.b3.iter().position(|v| *v != 0.0) {
            return fail(format!("b3[{i}]"), "must be zero".into());
        }
        if self.fallback_class >= c {
            return fail("fallback_class".into(), format!("{} is not a class", self.fallback_class));
        }
        Ok(())
    }

    /// Validates every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        self.check_structure()
            .map_err(|(at, msg)| Error::Consistency(format!("{at}: {msg}")))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            version: MODEL_VERSION,
            d: self.dim,
            c: self.class_count,
            p: self.p,
            planes: self.planes.clone(),
            code_order: self.code_order.clone(),
            w1: self.w1.clone(),
            b1: self.b1.clone(),
            w2: self.w2.clone(),
            w3: self.w3.clone(),
            fallback_class: self.fallback_class,
            prune_report: self.prune_report.clone(),
            mixtures: self.mixtures.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::format("model", e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::format(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == MODEL_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::UnsupportedVersion {
                    found: v.min(u32::MAX as u64) as u32,
                    expected: MODEL_VERSION,
                })
            }
            None => return Err(Error::format("version", "missing or not an unsigned integer")),
        }
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::format(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
        let d2 = file.code_order.len();
        let net = FFNetwork {
            dim: file.d,
            class_count: file.c,
            p: file.p,
            planes: file.planes,
            code_order: file.code_order,
            w1: file.w1,
            b1: file.b1,
            w2: file.w2,
            b2: DVector::zeros(d2),
            w3: file.w3,
            b3: DVector::zeros(file.c),
            fallback_class: file.fallback_class,
            prune_report: file.prune_report,
            mixtures: file.mixtures,
        };
        net.check_structure().map_err(|(at, msg)| Error::format(at, msg))?;
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Format { location, message } => Error::Format {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    d: usize,
    #[serde(rename = "C")]
    c: usize,
    #[serde(rename = "P")]
    p: f64,
    planes: Vec<Hyperplane>,
    code_order: Vec<RegionCode>,
    #[serde(rename = "W1", with = "serde_dense::matrix")]
    w1: DMatrix<f64>,
    #[serde(with = "serde_dense::vector")]
    b1: DVector<f64>,
    #[serde(rename = "W2", with = "serde_dense::matrix")]
    w2: DMatrix<f64>,
    #[serde(rename = "W3", with = "serde_dense::matrix")]
    w3: DMatrix<f64>,
    fallback_class: usize,
    prune_report: Option<PruneReport>,
    #[serde(default)]
    mixtures: Vec<ClassMixture>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::build_region_table;

    fn xor_net() -> (FFNetwork, LabeledDataset) {
        let planes = vec![
            Hyperplane {
                id: 0,
                normal: vec![1.0, 0.0],
                bias: 0.0,
                source: (0, 2),
            },
            Hyperplane {
                id: 1,
                normal: vec![0.0, 1.0],
                bias: 0.0,
                source: (0, 3),
            },
        ];
        let hs = HyperplaneSet::new(planes, 2).unwrap();
        let pts = [[1.0, 1.0], [2.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]];
        let ds = LabeledDataset::new(pts.concat(), 2, vec![0, 0, 0, 1, 1], 2).unwrap();
        let rt = build_region_table(&hs, &ds).unwrap();
        (assemble(&hs, &rt, DEFAULT_P).unwrap(), ds)
    }

    #[test]
    fn xor_shapes() {
        let (net, _) = xor_net();
        assert_eq!(net.architecture(), [2, 4, 4, 2]);
        assert_eq!(net.w1.row(1)[0], -1.0);
        let first = net.code_order.iter().position(|c| c.to_string() == "11").unwrap();
        assert_eq!(net.w2[(first, 0)], 1.0);
        assert_eq!(net.w2[(first, 1)], -1000.0);
    }

    #[test]
    fn first_quadrant_isolated() {
        let (net, _) = xor_net();
        let (logits, trace) = net.forward(&[3.0, 2.0]).unwrap();
        let positive: Vec<String> = trace
            .a2
            .iter()
            .zip(&net.code_order)
            .filter(|(a, _)| **a > 0.0)
            .map(|(_, c)| c.to_string())
            .collect();
        assert_eq!(positive, vec!["11"]);
        assert_eq!(decide(&logits, 1), 0);
        assert!(trace.a1.iter().all(|v| *v >= 0.0));
        assert_eq!(trace.a1, vec![3.0, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn decide_rules() {
        assert_eq!(decide(&[0.0, 5.2], 0), 1);
        assert_eq!(decide(&[0.0, 0.0], 0), 0);
        assert_eq!(decide(&[0.0, 0.0], 1), 1);
        assert_eq!(decide(&[2.0, 2.0, 1.0], 2), 0);
    }

    #[test]
    fn training_points_match_table() {
        let (net, ds) = xor_net();
        for (x, y) in ds.rows().zip(ds.labels()) {
            assert_eq!(net.predict(x).unwrap(), *y);
            assert_eq!(net.isolation_holds(x).unwrap(), Some(true));
        }
        assert!(net.predict(&[1.0]).is_err());
    }

    #[test]
    fn code_length_mismatch() {
        let (net, ds) = xor_net();
        let hs = HyperplaneSet::new(net.planes[..1].to_vec(), 2).unwrap();
        let full = HyperplaneSet::new(net.planes.clone(), 2).unwrap();
        let rt = build_region_table(&full, &ds).unwrap();
        assert!(matches!(assemble(&hs, &rt, 1000.0), Err(Error::Consistency(_))));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let (mut net, _) = xor_net();
        net.planes[0].bias = 0.1 + 0.2;
        net.b1[0] = 0.1 + 0.2;
        net.b1[1] = -(0.1 + 0.2);
        let back = FFNetwork::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn rejects_bad_w2_entry() {
        let (net, _) = xor_net();
        let mut v: serde_json::Value = serde_json::from_str(&net.to_json().unwrap()).unwrap();
        v["W2"][0][0] = serde_json::json!(0.5);
        let err = FFNetwork::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::Format { ref location, .. } if location.starts_with("W2[0]")), "{err}");
    }

    #[test]
    fn rejects_other_version() {
        let (net, _) = xor_net();
        let mut v: serde_json::Value = serde_json::from_str(&net.to_json().unwrap()).unwrap();
        v["version"] = serde_json::json!(2);
        assert!(matches!(
            FFNetwork::from_json(&v.to_string()),
            Err(Error::UnsupportedVersion { found: 2, expected: 1 })
        ));
        assert!(matches!(FFNetwork::from_json("{"), Err(Error::Format { .. })));
    }
}
