//! Ground truth for the indexes: an exhaustive range scan and a sampled check
//! of the planar lower bound.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{DataError, Dataset};
use crate::metrics::{Metric, MetricError};
use crate::planar::{planar_lower_bound, project_unchecked};
use crate::space::MetricSpace;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleAnswer {
    /// Ids within the threshold, ascending.
    pub result_ids: Vec<u32>,
    /// Always the dataset size.
    pub distance_count: u64,
}

/// Scans every row, measuring with [`Metric::distance`] on the raw vectors.
pub fn exhaustive_range(dataset: &Dataset, metric: &Metric, query: &[f64], t: f64) -> Result<OracleAnswer, MetricError> {
    let mut result_ids = Vec::new();
    for (i, row) in dataset.rows().enumerate() {
        if metric.distance(query, row)? <= t {
            result_ids.push(i as u32);
        }
    }
    Ok(OracleAnswer { result_ids, distance_count: dataset.len() as u64 })
}

/// Relative slack before a planar distance counts as exceeding the original.
pub const VIOLATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub p1: u32,
    pub p2: u32,
    pub a: u32,
    pub b: u32,
    pub planar: f64,
    pub original: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub metric: String,
    pub samples: usize,
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for v in &self.violations {
            w.serialize(v)?;
        }
        if self.violations.is_empty() {
            w.write_record(["p1", "p2", "a", "b", "planar", "original"])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples `samples` quadruples `(p1, p2, a, b)` and reports every one where
/// the planar distance between the projections of `a` and `b` exceeds
/// `d(a, b)` beyond [`VIOLATION_TOLERANCE`]. Quadruples whose pivots coincide
/// are redrawn.
pub fn quadruple_check(metric: &Metric, dataset: &Dataset, samples: usize, seed: u64) -> Result<ViolationReport, DataError> {
    if samples == 0 {
        return Err(DataError::TooFewPairs { needed: 1, got: 0 });
    }
    if dataset.len() < 2 {
        return Err(DataError::TooSmall);
    }
    let space = MetricSpace::new(dataset, metric.clone())?;
    let n = dataset.len() as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let mut drawn = 0;
    let mut degenerate = 0usize;
    while drawn < samples {
        let (p1, p2) = (rng.random_range(0..n), rng.random_range(0..n));
        let delta = space.distance(p1, p2);
        if delta <= 0.0 {
            degenerate += 1;
            if degenerate > 1000 * samples.max(1) {
                return Err(DataError::DegenerateSpace);
            }
            continue;
        }
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        drawn += 1;
        let pa = project_unchecked(space.distance(a, p1), space.distance(a, p2), delta);
        let pb = project_unchecked(space.distance(b, p1), space.distance(b, p2), delta);
        let planar = planar_lower_bound(pa, pb);
        let original = space.distance(a, b);
        if planar > original + VIOLATION_TOLERANCE * original {
            violations.push(Violation { p1, p2, a, b, planar, original });
        }
    }
    Ok(ViolationReport { metric: metric.to_string(), samples, violations })
}
