//! Deterministic division of `n` rows into `S` subsets.
//!
//! Three strategies are available:
//!
//! * **sequential**: contiguous row ranges in file order. Subset sizes are
//!   `⌊n/S⌋ + 1` for the first `n mod S` subsets and `⌊n/S⌋` for the rest.
//! * **replicate**: a seeded random permutation of `0..n`, cut into the same
//!   size profile as the sequential plan.
//! * **stratified**: one group per distinct value of a column (levels in
//!   byte order, rows in file order within a level); groups larger than
//!   `max_subset_rows` are cut sequentially.
//!
//! The replicate permutation is a Fisher–Yates shuffle driven by ChaCha8
//! (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`), drawing each swap index
//! with Lemire's nearly-divisionless rejection method on `next_u64`. Both
//! pieces are fixed here rather than taken from `rand`'s shuffle so plans do
//! not change across library versions or platforms.
//!
//! Subset indices are 0-based inside this module; fits and reports number
//! subsets from 1.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "lowercase")]
pub enum Strategy {
    Sequential,
    Replicate { seed: u64 },
    Stratified { column: String },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Sequential => "sequential",
            Strategy::Replicate { .. } => "replicate",
            Strategy::Stratified { .. } => "stratified",
        }
    }
}

/// Immutable assignment of rows `0..n` to subsets.
///
/// `ranges[k]` indexes into `order` (or directly into the rows when the plan
/// is contiguous and `order` is `None`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    total_rows: usize,
    strategy: Strategy,
    ranges: Vec<Range<usize>>,
    order: Option<Vec<usize>>,
    warnings: Vec<String>,
}

/// Sizes `⌊n/S⌋ + 1` for the first `n mod S` subsets, `⌊n/S⌋` after.
pub fn balanced_sizes(n: usize, subsets: usize) -> Vec<usize> {
    let base = n / subsets;
    let extra = n % subsets;
    (0..subsets)
        .map(|k| base + usize::from(k < extra))
        .collect()
}

fn ranges_from_sizes(sizes: &[usize], offset: usize) -> Vec<Range<usize>> {
    let mut start = offset;
    sizes
        .iter()
        .map(|&len| {
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

fn check_counts(n: usize, subsets: usize) -> Result<()> {
    if subsets == 0 {
        return Err(Error::InvalidPartition(
            "number of subsets must be at least 1".into(),
        ));
    }
    if subsets > n {
        return Err(Error::InvalidPartition(format!(
            "cannot split {n} rows into {subsets} non-empty subsets"
        )));
    }
    Ok(())
}

/// Contiguous ranges starting from the first row.
pub fn sequential_plan(n: usize, subsets: usize) -> Result<PartitionPlan> {
    check_counts(n, subsets)?;
    Ok(PartitionPlan {
        total_rows: n,
        strategy: Strategy::Sequential,
        ranges: ranges_from_sizes(&balanced_sizes(n, subsets), 0),
        order: None,
        warnings: Vec::new(),
    })
}

/// Uniform draw from `0..bound` (Lemire's method).
fn uniform_below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let mut m = u128::from(rng.next_u64()) * u128::from(bound);
    let mut low = m as u64;
    if low < bound {
        let threshold = bound.wrapping_neg() % bound;
        while low < threshold {
            m = u128::from(rng.next_u64()) * u128::from(bound);
            low = m as u64;
        }
    }
    (m >> 64) as u64
}

/// Seeded permutation of `0..n` (Fisher–Yates, ChaCha8).
pub fn seeded_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = uniform_below(&mut rng, i as u64 + 1) as usize;
        order.swap(i, j);
    }
    order
}

/// Random division without replacement.
pub fn replicate_plan(n: usize, subsets: usize, seed: u64) -> Result<PartitionPlan> {
    check_counts(n, subsets)?;
    Ok(PartitionPlan {
        total_rows: n,
        strategy: Strategy::Replicate { seed },
        ranges: ranges_from_sizes(&balanced_sizes(n, subsets), 0),
        order: Some(seeded_permutation(n, seed)),
        warnings: Vec::new(),
    })
}

/// Conditioning-variable division on a single column.
pub fn stratified_plan<S: AsRef<str>>(
    column: &str,
    values: &[S],
    max_subset_rows: usize,
) -> Result<PartitionPlan> {
    if values.is_empty() {
        return Err(Error::InvalidPartition(format!(
            "column {column:?} has no values to stratify on"
        )));
    }
    if max_subset_rows == 0 {
        return Err(Error::InvalidPartition(
            "max_subset_rows must be at least 1".into(),
        ));
    }
    let mut groups: BTreeMap<&[u8], Vec<usize>> = BTreeMap::new();
    for (i, v) in values.iter().enumerate() {
        groups.entry(v.as_ref().as_bytes()).or_default().push(i);
    }
    let mut order = Vec::with_capacity(values.len());
    let mut ranges = Vec::new();
    for rows in groups.into_values() {
        let pieces = rows.len().div_ceil(max_subset_rows);
        ranges.extend(ranges_from_sizes(
            &balanced_sizes(rows.len(), pieces),
            order.len(),
        ));
        order.extend(rows);
    }
    Ok(PartitionPlan {
        total_rows: values.len(),
        strategy: Strategy::Stratified {
            column: column.to_string(),
        },
        ranges,
        order: Some(order),
        warnings: Vec::new(),
    })
}

impl PartitionPlan {
    pub fn total_rows(&self) -> usize {
        self.total_rows
    }

    pub fn num_subsets(&self) -> usize {
        self.ranges.len()
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// True when every subset is a contiguous block of rows in file order.
    pub fn is_contiguous(&self) -> bool {
        self.order.is_none()
    }

    /// Ranges into [`Self::order`] (or into the rows for contiguous plans).
    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn order(&self) -> Option<&[usize]> {
        self.order.as_deref()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ranges.iter().map(|r| r.len()).collect()
    }

    /// Source rows of subset `k` (0-based), in plan order.
    pub fn subset_rows(&self, k: usize) -> Vec<usize> {
        let r = self.ranges[k].clone();
        match &self.order {
            Some(order) => order[r].to_vec(),
            None => r.collect(),
        }
    }

    /// Row-to-subset lookup table (0-based subset per row).
    pub fn assignment(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.total_rows];
        for (k, r) in self.ranges.iter().enumerate() {
            for pos in r.clone() {
                let row = self.order.as_ref().map_or(pos, |o| o[pos]);
                out[row] = k as u32;
            }
        }
        out
    }

    /// SHA-256 of the permutation as little-endian `u64`s, for permuted plans.
    pub fn permutation_digest(&self) -> Option<String> {
        self.order.as_ref().map(|order| {
            let mut h = Sha256::new();
            for &i in order {
                h.update((i as u64).to_le_bytes());
            }
            hex::encode(h.finalize())
        })
    }

    /// Record a warning for every subset with fewer rows than `params`.
    pub fn flag_small_subsets(&mut self, params: usize) {
        for (k, r) in self.ranges.iter().enumerate() {
            if r.len() < params {
                self.warnings.push(format!(
                    "subset {} has {} rows but the model has {} parameters",
                    k + 1,
                    r.len(),
                    params
                ));
            }
        }
    }

    /// Serializable summary.
    pub fn document(&self) -> PlanDocument {
        let (seed, column) = match &self.strategy {
            Strategy::Sequential => (None, None),
            Strategy::Replicate { seed } => (Some(*seed), None),
            Strategy::Stratified { column } => (None, Some(column.clone())),
        };
        PlanDocument {
            n: self.total_rows,
            subsets: self.num_subsets(),
            strategy: self.strategy.name().to_string(),
            seed,
            column,
            sizes: self.sizes(),
            ranges: self.ranges.iter().map(|r| [r.start, r.end]).collect(),
            permutation_digest: self.permutation_digest(),
            warnings: self.warnings.clone(),
        }
    }
}

/// JSON form of a plan. For permuted plans `ranges` index positions of the
/// permutation, which is identified by its digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub n: usize,
    #[serde(rename = "S")]
    pub subsets: usize,
    pub strategy: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub column: Option<String>,
    pub sizes: Vec<usize>,
    pub ranges: Vec<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub permutation_digest: Option<String>,
    pub warnings: Vec<String>,
}
