//! Hyperplane set construction, sign-code regions and greedy pruning.
//!
//! Every training sample is mapped to the length-`L` bit code of the half
//! spaces it lies in. Regions (distinct observed codes) are labeled by their
//! majority class, and pruning repeatedly removes the plane whose removal
//! hurts this region classifier the least.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::datasets::{argmax_count, LabeledDataset};
use crate::error::{Error, Result};
use crate::lda::{fit_lda, BlobStats, Hyperplane};

/// Bit string `c_1 .. c_L`; bit `l` is set when the point lies strictly on the
/// positive side of plane `l`.
///
/// Bits are packed most-significant first so that the derived ordering is the
/// lexicographic order of the string form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegionCode {
    len: usize,
    words: Vec<u64>,
}

impl RegionCode {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut c = Self::zeros(bits.len());
        for (l, &b) in bits.iter().enumerate() {
            c.set(l, b);
        }
        c
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, l: usize) -> bool {
        self.words[l / 64] >> (63 - l % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, l: usize, bit: bool) {
        let mask = 1u64 << (63 - l % 64);
        if bit {
            self.words[l / 64] |= mask;
        } else {
            self.words[l / 64] &= !mask;
        }
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|l| self.get(l))
    }

    /// Number of positions where the two codes differ.
    pub fn hamming(&self, other: &Self) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }
}

impl fmt::Display for RegionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for RegionCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::format("region code", format!("unexpected character '{other}'"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_bits(&bits))
    }
}

impl Serialize for RegionCode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RegionCode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ordered partitioning hyperplanes with ids `0..L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneSet {
    pub planes: Vec<Hyperplane>,
    pub dim: usize,
    /// Blob pairs whose LDA was degenerate and skipped.
    pub skipped_pairs: Vec<(usize, usize)>,
}

impl HyperplaneSet {
    /// Wraps planes and renumbers their ids to positions.
    pub fn new(mut planes: Vec<Hyperplane>, dim: usize) -> Result<Self> {
        if planes.is_empty() {
            return Err(Error::data("a hyperplane set needs at least one plane"));
        }
        for (i, p) in planes.iter_mut().enumerate() {
            if p.dim() != dim {
                return Err(Error::param(format!("plane {i} has dimension {}, expected {dim}", p.dim())));
            }
            p.id = i;
        }
        Ok(Self {
            planes,
            dim,
            skipped_pairs: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim {
            return Err(Error::param(format!(
                "data has dimension {d}, hyperplanes have {}",
                self.dim
            )));
        }
        Ok(())
    }
}

/// One LDA hyperplane per pair of blobs from different classes.
///
/// Pairs `(i, j)` with `i < j` are visited in order and the plane is oriented
/// towards blob `i`. Degenerate pairs are skipped and recorded.
pub fn build_planes(blobs: &[BlobStats], reg: f64) -> Result<HyperplaneSet> {
    if blobs.len() < 2 {
        return Err(Error::data("need at least two blobs"));
    }
    let dim = blobs[0].dim();
    if blobs.iter().any(|b| b.dim() != dim) {
        return Err(Error::param("blobs have different dimensions"));
    }
    let pairs: Vec<(usize, usize)> = (0..blobs.len())
        .flat_map(|i| (i + 1..blobs.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| blobs[i].class_label != blobs[j].class_label)
        .collect();
    if pairs.is_empty() {
        return Err(Error::data("blobs span a single class"));
    }
    let fitted: Vec<Result<Hyperplane>> = pairs
        .par_iter()
        .map(|&(i, j)| fit_lda(&blobs[i], &blobs[j], reg))
        .collect();
    let mut planes = Vec::with_capacity(pairs.len());
    let mut skipped = Vec::new();
    for (r, &(i, j)) in fitted.into_iter().zip(&pairs) {
        match r {
            Ok(p) => planes.push(p),
            Err(Error::DegeneratePair(..)) => skipped.push((blobs[i].id, blobs[j].id)),
            Err(e) => return Err(e),
        }
    }
    if planes.is_empty() {
        return Err(Error::data(format!(
            "all {} blob pairs are degenerate; no hyperplane could be built",
            pairs.len()
        )));
    }
    let mut hs = HyperplaneSet::new(planes, dim)?;
    hs.skipped_pairs = skipped;
    Ok(hs)
}

/// Sign code of `x`; a point exactly on a plane gets bit 0.
pub fn code_of(hs: &HyperplaneSet, x: &[f64]) -> Result<RegionCode> {
    hs.check_dim(x.len())?;
    Ok(code_unchecked(&hs.planes, x))
}

pub(crate) fn code_unchecked(planes: &[Hyperplane], x: &[f64]) -> RegionCode {
    let mut c = RegionCode::zeros(planes.len());
    for (l, p) in planes.iter().enumerate() {
        if p.value(x) > 0.0 {
            c.set(l, true);
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionEntry {
    pub majority_class: usize,
    pub counts: Vec<usize>,
}

impl RegionEntry {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn errors(&self) -> usize {
        self.total() - self.counts[self.majority_class]
    }
}

/// Nonempty regions observed in the training data, in lexicographic code
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTable {
    pub code_len: usize,
    pub class_count: usize,
    pub entries: BTreeMap<RegionCode, RegionEntry>,
}

impl RegionTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, code: &RegionCode) -> Option<&RegionEntry> {
        self.entries.get(code)
    }

    pub fn majority_of(&self, code: &RegionCode) -> Option<usize> {
        self.entries.get(code).map(|e| e.majority_class)
    }

    pub fn codes(&self) -> impl Iterator<Item = &RegionCode> {
        self.entries.keys()
    }

    /// Training samples not in their region's majority class.
    pub fn error_count(&self) -> usize {
        self.entries.values().map(RegionEntry::errors).sum()
    }

    pub fn sample_count(&self) -> usize {
        self.entries.values().map(RegionEntry::total).sum()
    }
}

/// Tabulates every observed code with per-class counts; the majority class
/// breaks ties towards the lowest index.
pub fn build_region_table(hs: &HyperplaneSet, train: &LabeledDataset) -> Result<RegionTable> {
    hs.check_dim(train.dim())?;
    let mut counts: BTreeMap<RegionCode, Vec<usize>> = BTreeMap::new();
    for (x, &y) in train.rows().zip(train.labels()) {
        let code = code_unchecked(&hs.planes, x);
        counts.entry(code).or_insert_with(|| vec![0; train.class_count()])[y] += 1;
    }
    let entries = counts
        .into_iter()
        .map(|(code, counts)| {
            let majority_class = argmax_count(&counts);
            (code, RegionEntry { majority_class, counts })
        })
        .collect();
    Ok(RegionTable {
        code_len: hs.len(),
        class_count: train.class_count(),
        entries,
    })
}

/// Fraction of training samples whose label differs from the majority class
/// of their region.
pub fn region_error(hs: &HyperplaneSet, train: &LabeledDataset) -> Result<f64> {
    hs.check_dim(train.dim())?;
    let signs = SignTable::new(&hs.planes, train);
    let all: Vec<usize> = (0..hs.len()).collect();
    Ok(signs.error_count(&all, None) as f64 / train.len() as f64)
}

/// Per-sample sign bits for every plane, packed by sample.
struct SignTable<'a> {
    words: usize,
    bits: Vec<u64>,
    labels: &'a [usize],
    class_count: usize,
}

impl<'a> SignTable<'a> {
    fn new(planes: &[Hyperplane], ds: &'a LabeledDataset) -> Self {
        let words = planes.len().div_ceil(64).max(1);
        let mut bits = vec![0u64; ds.len() * words];
        for (i, x) in ds.rows().enumerate() {
            let row = &mut bits[i * words..(i + 1) * words];
            for (l, p) in planes.iter().enumerate() {
                if p.value(x) > 0.0 {
                    row[l / 64] |= 1u64 << (63 - l % 64);
                }
            }
        }
        Self {
            words,
            bits,
            labels: ds.labels(),
            class_count: ds.class_count(),
        }
    }

    fn mask(&self, active: &[usize], skip: Option<usize>) -> Vec<u64> {
        let mut mask = vec![0u64; self.words];
        for &l in active {
            if Some(l) != skip {
                mask[l / 64] |= 1u64 << (63 - l % 64);
            }
        }
        mask
    }

    /// Region-classifier error count using the planes in `active` except `skip`.
    fn error_count(&self, active: &[usize], skip: Option<usize>) -> usize {
        let mask = self.mask(active, skip);
        let n = self.labels.len();
        let mut keyed = vec![0u64; n * self.words];
        for i in 0..n {
            for w in 0..self.words {
                keyed[i * self.words + w] = self.bits[i * self.words + w] & mask[w];
            }
        }
        let mut region_of: HashMap<&[u64], usize> = HashMap::new();
        let mut counts: Vec<usize> = Vec::new();
        for (i, &y) in self.labels.iter().enumerate() {
            let key = &keyed[i * self.words..(i + 1) * self.words];
            let next = region_of.len();
            let r = *region_of.entry(key).or_insert(next);
            if r == next {
                counts.extend(std::iter::repeat_n(0, self.class_count));
            }
            counts[r * self.class_count + y] += 1;
        }
        counts
            .chunks_exact(self.class_count)
            .map(|c| c.iter().sum::<usize>() - c.iter().max().unwrap())
            .sum()
    }
}

/// One accepted deletion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneStep {
    /// Id of the plane in the set given to [`prune`].
    pub plane_id: usize,
    pub source: (usize, usize),
    /// Training error of the region classifier after the deletion.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub threshold: f64,
    pub initial_planes: usize,
    pub initial_error: f64,
    pub deletions: Vec<PruneStep>,
    /// Smallest error among the candidates of the round that stopped pruning,
    /// if it stopped because of the threshold.
    pub rejected_error: Option<f64>,
    pub final_error: f64,
}

impl PruneReport {
    pub fn final_planes(&self) -> usize {
        self.initial_planes - self.deletions.len()
    }
}

/// Greedy backward elimination of hyperplanes.
///
/// Each round tentatively removes every remaining plane, measures the
/// training error of the resulting region classifier, and deletes the plane
/// with the smallest error (lowest id on ties) if that error is strictly below
/// `threshold`. Stops at the first rejected round or when one plane remains.
/// Surviving planes keep their relative order and are renumbered.
pub fn prune(hs: &HyperplaneSet, train: &LabeledDataset, threshold: f64) -> Result<(HyperplaneSet, PruneReport)> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::param(format!("threshold must lie in [0, 1], got {threshold}")));
    }
    hs.check_dim(train.dim())?;
    let n = train.len() as f64;
    let signs = SignTable::new(&hs.planes, train);
    let mut active: Vec<usize> = (0..hs.len()).collect();
    let initial_error = signs.error_count(&active, None) as f64 / n;
    let mut deletions = Vec::new();
    let mut rejected_error = None;
    let mut current_error = initial_error;
    while active.len() > 1 {
        let errors: Vec<usize> = active
            .par_iter()
            .map(|&l| signs.error_count(&active, Some(l)))
            .collect();
        let (pos, &best) = errors
            .iter()
            .enumerate()
            .min_by_key(|&(pos, e)| (*e, active[pos]))
            .expect("at least two active planes");
        let err = best as f64 / n;
        if err < threshold {
            let removed = active.remove(pos);
            deletions.push(PruneStep {
                plane_id: removed,
                source: hs.planes[removed].source,
                error: err,
            });
            current_error = err;
        } else {
            rejected_error = Some(err);
            break;
        }
    }
    let planes = active.iter().map(|&l| hs.planes[l].clone()).collect();
    let mut pruned = HyperplaneSet::new(planes, hs.dim)?;
    pruned.skipped_pairs = hs.skipped_pairs.clone();
    Ok((
        pruned,
        PruneReport {
            threshold,
            initial_planes: hs.len(),
            initial_error,
            deletions,
            rejected_error,
            final_error: current_error,
        },
    ))
}

/// Maximum number of regions `L` hyperplanes can cut `R^d` into:
/// `sum_{i=0}^{d} C(L, i)`, saturating.
pub fn max_regions(planes: usize, dim: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for i in 0..=dim.min(planes) {
        if i > 0 {
            binom = binom.saturating_mul((planes - i + 1) as u128) / i as u128;
        }
        total = total.saturating_add(binom);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(w: &[f64], b: f64) -> Hyperplane {
        Hyperplane {
            id: 0,
            normal: w.to_vec(),
            bias: b,
            source: (0, 1),
        }
    }

    fn axis_planes() -> HyperplaneSet {
        HyperplaneSet::new(vec![plane(&[1.0, 0.0], 0.0), plane(&[0.0, 1.0], 0.0)], 2).unwrap()
    }

    fn xor_points() -> LabeledDataset {
        let pts = [
            ([1.0, 1.0], 0),
            ([2.0, 1.5], 0),
            ([-1.0, -1.0], 0),
            ([1.0, -1.0], 1),
            ([-1.0, 1.0], 1),
            ([-2.0, 0.5], 1),
        ];
        let samples = pts.iter().flat_map(|(x, _)| *x).collect();
        let labels = pts.iter().map(|(_, y)| *y).collect();
        LabeledDataset::new(samples, 2, labels, 2).unwrap()
    }

    #[test]
    fn code_string_and_order() {
        let a: RegionCode = "0110".parse().unwrap();
        assert_eq!(a.to_string(), "0110");
        let b: RegionCode = "1000".parse().unwrap();
        assert!(a < b);
        assert_eq!(a.hamming(&b), 3);
        let long: RegionCode = "1".repeat(70).parse().unwrap();
        assert_eq!(long.to_string().len(), 70);
        assert!("012".parse::<RegionCode>().is_err());
    }

    #[test]
    fn first_quadrant_code() {
        let hs = axis_planes();
        assert_eq!(code_of(&hs, &[1.0, 1.0]).unwrap().to_string(), "11");
        assert_eq!(code_of(&hs, &[0.0, 1.0]).unwrap().to_string(), "01");
        let flipped = HyperplaneSet::new(hs.planes.iter().map(Hyperplane::negated).collect(), 2).unwrap();
        assert_eq!(code_of(&flipped, &[1.0, 1.0]).unwrap().to_string(), "00");
        assert!(code_of(&hs, &[1.0]).is_err());
    }

    #[test]
    fn xor_region_table() {
        let rt = build_region_table(&axis_planes(), &xor_points()).unwrap();
        assert_eq!(rt.len(), 4);
        let maj = |s: &str| rt.majority_of(&s.parse().unwrap()).unwrap();
        assert_eq!((maj("11"), maj("00"), maj("10"), maj("01")), (0, 0, 1, 1));
        assert_eq!(rt.error_count(), 0);
    }

    #[test]
    fn region_error_counts_minority() {
        let hs = HyperplaneSet::new(vec![plane(&[1.0], -100.0)], 1).unwrap();
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i >= 60)).collect();
        let ds = LabeledDataset::new((0..100).map(f64::from).collect(), 1, labels, 2).unwrap();
        assert!((region_error(&hs, &ds).unwrap() - 0.4).abs() < 1e-15);
        let split = HyperplaneSet::new(vec![plane(&[1.0], -59.5)], 1).unwrap();
        assert_eq!(region_error(&split, &ds).unwrap(), 0.0);
        assert_eq!(build_region_table(&split, &ds).unwrap().len(), 2);
    }

    #[test]
    fn zero_threshold_never_prunes() {
        let hs = axis_planes();
        let (out, report) = prune(&hs, &xor_points(), 0.0).unwrap();
        assert_eq!(out, hs);
        assert!(report.deletions.is_empty());
    }

    #[test]
    fn redundant_plane_is_pruned_first() {
        let mut planes = axis_planes().planes;
        planes.insert(0, plane(&[1.0, 0.0], 0.01));
        let hs = HyperplaneSet::new(planes, 2).unwrap();
        let (out, report) = prune(&hs, &xor_points(), 0.1).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(report.deletions.len(), 1);
        assert_eq!(report.deletions[0].plane_id, 0);
        assert_eq!(report.final_error, 0.0);
        assert_eq!(out.planes[0].id, 0);
        assert_eq!(out.planes[1].id, 1);
    }

    #[test]
    fn threshold_out_of_range() {
        assert!(matches!(
            prune(&axis_planes(), &xor_points(), 1.5),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn region_bound() {
        assert_eq!(max_regions(3, 2), 7);
        assert_eq!(max_regions(2, 2), 4);
        assert_eq!(max_regions(1, 30), 2);
        assert_eq!(max_regions(27, 2), 1 + 27 + 351);
        assert_eq!(max_regions(4, 1), 5);
    }

    #[test]
    fn build_planes_skips_same_class() {
        let mk = |id: usize, class: usize, m: [f64; 2]| BlobStats {
            id,
            class_label: class,
            mean: nalgebra::DVector::from_column_slice(&m),
            covariance: nalgebra::DMatrix::identity(2, 2),
            count: 10.0,
        };
        let blobs = [
            mk(0, 0, [1.0, 1.0]),
            mk(1, 0, [-1.0, -1.0]),
            mk(2, 1, [1.0, -1.0]),
            mk(3, 1, [-1.0, 1.0]),
        ];
        let hs = build_planes(&blobs, 1e-6).unwrap();
        assert_eq!(hs.len(), 4);
        let sources: Vec<_> = hs.planes.iter().map(|p| p.source).collect();
        assert_eq!(sources, vec![(0, 2), (0, 3), (1, 2), (1, 3)]);
        let one = build_planes(&blobs[1..3], 1e-6).unwrap();
        assert_eq!(one.len(), 1);
        assert!(build_planes(&blobs[..2], 1e-6).is_err());
    }
}
