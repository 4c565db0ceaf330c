//! Tree benchmarks with repetition until the standard error of the per-build
//! mean distance count falls below a target.

use std::io::Write;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use supermetric::data::{calibrate_threshold_empirical, split_queries, ThresholdSpec, MIN_CALIBRATION_PAIRS};
use supermetric::oracle::exhaustive_range;
use supermetric::{Dataset, Exclusion, Index, IndexConfig, Metric, MetricSpace, Variant};

use crate::stats::Samples;
use crate::{derive_seed, CliError};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub metric: Metric,
    pub structures: Vec<Variant>,
    pub exclusions: Vec<Exclusion>,
    pub thresholds: Vec<ThresholdSpec>,
    pub query_fraction: f64,
    /// Stop once every cell's SEM is at most this fraction of its mean.
    pub sem_target: f64,
    pub min_repeats: usize,
    pub max_repeats: usize,
    pub seed: u64,
    /// Cross-check 1% of the queries of every build against an exhaustive scan.
    pub verify: bool,
    /// Use only the first `n` queries of the split, for quick runs.
    pub max_queries: Option<usize>,
    pub calibration_pairs: usize,
}

impl BenchConfig {
    pub fn new(metric: Metric, structures: Vec<Variant>, exclusions: Vec<Exclusion>, thresholds: Vec<ThresholdSpec>) -> Self {
        BenchConfig {
            metric,
            structures,
            exclusions,
            thresholds,
            query_fraction: 0.10,
            sem_target: 0.01,
            min_repeats: 3,
            max_repeats: 30,
            seed: 0,
            verify: false,
            max_queries: None,
            calibration_pairs: 200_000,
        }
    }

    /// Rejects inconsistent settings before any work is done.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.structures.is_empty() || self.exclusions.is_empty() || self.thresholds.is_empty() {
            return Err(CliError::Usage("at least one structure, exclusion and threshold is required".into()));
        }
        if self.exclusions.contains(&Exclusion::Hilbert) && !self.metric.has_four_point() {
            return Err(CliError::Usage(format!(
                "hilbert exclusion needs a metric with the four-point property; `{}` lacks it",
                self.metric
            )));
        }
        if !(self.sem_target > 0.0) {
            return Err(CliError::Usage("sem target must be positive".into()));
        }
        if self.min_repeats < 2 || self.max_repeats < self.min_repeats {
            return Err(CliError::Usage("repeats must satisfy 2 <= min <= max".into()));
        }
        if !(self.query_fraction > 0.0 && self.query_fraction < 1.0) {
            return Err(CliError::Usage(format!("query fraction {} outside (0, 1)", self.query_fraction)));
        }
        Ok(())
    }
}

/// One benchmark cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub structure: String,
    pub selection: String,
    pub exclusion: String,
    pub metric: String,
    pub threshold: f64,
    pub mean_distances: f64,
    /// Standard error of the per-build means, relative to their mean.
    pub sem: f64,
    pub repeats: usize,
    /// Mean distances evaluated per build.
    pub build_distances: u64,
    pub queries: usize,
    pub seed: u64,
}

/// Resolves threshold specifications against `data`.
pub fn resolve_thresholds(
    data: &Dataset,
    metric: &Metric,
    specs: &[ThresholdSpec],
    pairs: usize,
    seed: u64,
) -> Result<Vec<f64>, CliError> {
    specs
        .iter()
        .map(|s| match *s {
            ThresholdSpec::Absolute(t) => Ok(t),
            ThresholdSpec::Fraction(f) => {
                let pairs = pairs.max(MIN_CALIBRATION_PAIRS).max((100.0 / f).ceil() as usize);
                Ok(calibrate_threshold_empirical(data, metric, f, pairs, seed)?)
            }
        })
        .collect()
}

/// Runs every (structure x exclusion x threshold) cell. Each repeat shuffles
/// the data, builds one tree per structure and issues the whole query set for
/// every exclusion and threshold on that same tree.
pub fn run_bench(dataset: &Dataset, config: &BenchConfig) -> Result<Vec<BenchRow>, CliError> {
    config.validate()?;
    let (data, mut queries) = split_queries(dataset, config.query_fraction, derive_seed(config.seed, "split"))?;
    if let Some(m) = config.max_queries {
        if m < queries.len() {
            queries = queries.select(&(0..m).collect::<Vec<_>>());
        }
    }
    if queries.is_empty() {
        return Err(CliError::Usage("the query split is empty".into()));
    }
    let thresholds = resolve_thresholds(&data, &config.metric, &config.thresholds, config.calibration_pairs, config.seed)?;
    let prepared: Vec<Vec<f64>> = queries.rows().map(|q| config.metric.normalize(q)).collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    for &variant in &config.structures {
        let cell_seed = derive_seed(config.seed, variant.name());
        let cells = config.exclusions.len() * thresholds.len();
        let mut samples = vec![Samples::default(); cells];
        let mut build = Samples::default();
        for r in 0..config.max_repeats {
            let build_seed = derive_seed(cell_seed, &format!("build{r}"));
            let shuffled = data.shuffled(build_seed);
            let space = MetricSpace::new(&shuffled, config.metric.clone())?;
            let idx = Index::build(&space, IndexConfig::new(variant, build_seed))?;
            build.push(idx.build_distances() as f64);
            let checked = if config.verify { verification_sample(prepared.len(), build_seed) } else { Vec::new() };
            for (e, &exclusion) in config.exclusions.iter().enumerate() {
                for (k, &t) in thresholds.iter().enumerate() {
                    let mut total = 0u64;
                    for (qi, q) in prepared.iter().enumerate() {
                        let report = idx.range_query_prepared(q, t, exclusion)?;
                        total += report.distance_count;
                        if checked.binary_search(&qi).is_ok() {
                            let truth = exhaustive_range(&shuffled, &config.metric, queries.row(qi), t)?;
                            if truth.result_ids != report.result_ids {
                                return Err(CliError::Verification(format!(
                                    "{variant} {exclusion} t={t}: query {qi} returned {} results, exhaustive scan {}",
                                    report.result_ids.len(),
                                    truth.result_ids.len()
                                )));
                            }
                        }
                    }
                    samples[e * thresholds.len() + k].push(total as f64 / prepared.len() as f64);
                }
            }
            if r + 1 >= config.min_repeats && samples.iter().all(|s| s.relative_sem() <= config.sem_target) {
                break;
            }
        }
        for (e, &exclusion) in config.exclusions.iter().enumerate() {
            for (k, &t) in thresholds.iter().enumerate() {
                let s = &samples[e * thresholds.len() + k];
                rows.push(BenchRow {
                    structure: variant.name().to_string(),
                    selection: variant.selection().to_string(),
                    exclusion: exclusion.name().to_string(),
                    metric: config.metric.to_string(),
                    threshold: t,
                    mean_distances: s.mean(),
                    sem: s.relative_sem(),
                    repeats: s.len(),
                    build_distances: build.mean().round() as u64,
                    queries: prepared.len(),
                    seed: cell_seed,
                });
            }
        }
    }
    Ok(rows)
}

/// Sorted positions of a 1% sample (at least one) of `n` queries.
fn verification_sample(n: usize, seed: u64) -> Vec<usize> {
    let k = n.div_ceil(100).max(1).min(n);
    let mut v = sample(&mut ChaCha8Rng::seed_from_u64(seed), n, k).into_vec();
    v.sort_unstable();
    v
}

pub fn write_rows<W: Write, R: Serialize>(rows: &[R], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
