//! Synthetic sweeps over dimension and dataset size.

use serde::Serialize;
use supermetric::data::{calibrate_radius, calibrate_threshold_empirical, generate_uniform};
use supermetric::{Dataset, Exclusion, Index, IndexConfig, Metric, MetricSpace, Variant};

use crate::{derive_seed, CliError};

/// Mean distance count per query of `idx` over `queries` at threshold `t`.
pub fn mean_cost(idx: &Index<'_>, queries: &Dataset, t: f64, exclusion: Exclusion) -> Result<f64, CliError> {
    let mut total = 0u64;
    for q in queries.rows() {
        total += idx.range_query(q, t, exclusion)?.distance_count;
    }
    Ok(total as f64 / queries.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimSweepConfig {
    pub dims: Vec<usize>,
    pub n: usize,
    pub queries: usize,
    pub structures: Vec<Variant>,
    pub exclusions: Vec<Exclusion>,
    pub seed: u64,
}

impl DimSweepConfig {
    /// Dimensions 2 to 14 at 10^5 points with 1000 queries, comparing
    /// farthest-first and random pivots under both exclusions.
    pub fn desk_scale() -> Self {
        DimSweepConfig {
            dims: (2..=14).collect(),
            n: 100_000,
            queries: 1_000,
            structures: vec![Variant::HptFftLog, Variant::HptRandomLog],
            exclusions: Exclusion::ALL.to_vec(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimRow {
    pub dim: usize,
    pub n: usize,
    pub threshold: f64,
    pub structure: String,
    pub exclusion: String,
    pub fraction_accessed: f64,
    pub mean_distances: f64,
    pub queries: usize,
}

/// Uniform data per dimension, queried at the radius of a ball holding `1/n`
/// of the cube's volume.
pub fn run_dim_sweep(config: &DimSweepConfig) -> Result<Vec<DimRow>, CliError> {
    if config.n < 2 || config.queries == 0 || config.dims.contains(&0) {
        return Err(CliError::Usage("dimension sweep needs n >= 2, dims >= 1 and at least one query".into()));
    }
    let mut rows = Vec::new();
    for &dim in &config.dims {
        let seed = derive_seed(config.seed, &format!("dim{dim}"));
        let data = generate_uniform(config.n, dim, seed);
        let queries = generate_uniform(config.queries, dim, derive_seed(seed, "queries"));
        let t = calibrate_radius(dim, 1.0 / config.n as f64);
        let space = MetricSpace::new(&data, Metric::Euclidean)?;
        for &variant in &config.structures {
            let idx = Index::build(&space, IndexConfig::new(variant, derive_seed(seed, variant.name())))?;
            for &exclusion in &config.exclusions {
                let mean = mean_cost(&idx, &queries, t, exclusion)?;
                rows.push(DimRow {
                    dim,
                    n: config.n,
                    threshold: t,
                    structure: variant.name().to_string(),
                    exclusion: exclusion.name().to_string(),
                    fraction_accessed: mean / config.n as f64,
                    mean_distances: mean,
                    queries: config.queries,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConfig {
    pub sizes: Vec<usize>,
    pub structures: Vec<Variant>,
    pub exclusions: Vec<Exclusion>,
    /// Fractions of the data a query should return; thresholds are calibrated
    /// once on the largest size and held fixed.
    pub fractions: Vec<f64>,
    pub queries: usize,
    pub metric: Metric,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub size: usize,
    pub structure: String,
    pub exclusion: String,
    pub fraction: f64,
    pub threshold: f64,
    pub proportion_accessed: f64,
    pub mean_distances: f64,
    pub queries: usize,
}

/// Builds each structure on growing prefixes of a shuffled pool. The first
/// `queries` rows of the shuffled source are held out as queries.
pub fn run_scaling(source: &Dataset, config: &ScalingConfig) -> Result<Vec<ScalingRow>, CliError> {
    let largest = config.sizes.iter().copied().max().ok_or_else(|| CliError::Usage("no sizes given".into()))?;
    if config.exclusions.contains(&Exclusion::Hilbert) && !config.metric.has_four_point() {
        return Err(CliError::Usage(format!("hilbert exclusion needs a four-point metric, not `{}`", config.metric)));
    }
    let available = source.len().saturating_sub(config.queries);
    if largest > available {
        return Err(CliError::Usage(format!(
            "size {largest} exceeds the {available} points available after holding out {} queries",
            config.queries
        )));
    }
    let shuffled = source.shuffled(derive_seed(config.seed, "scaling"));
    let queries = shuffled.select(&(0..config.queries).collect::<Vec<_>>());
    let pool: Vec<usize> = (config.queries..config.queries + largest).collect();
    let full = shuffled.select(&pool);
    let thresholds: Vec<f64> = config
        .fractions
        .iter()
        .map(|&f| {
            let pairs = 200_000usize.max((100.0 / f).ceil() as usize);
            calibrate_threshold_empirical(&full, &config.metric, f, pairs, config.seed)
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for &size in &config.sizes {
        let data = full.select(&(0..size).collect::<Vec<_>>());
        let space = MetricSpace::new(&data, config.metric.clone())?;
        for &variant in &config.structures {
            let idx = Index::build(&space, IndexConfig::new(variant, derive_seed(config.seed, variant.name())))?;
            for &exclusion in &config.exclusions {
                for (&fraction, &t) in config.fractions.iter().zip(&thresholds) {
                    let mean = mean_cost(&idx, &queries, t, exclusion)?;
                    rows.push(ScalingRow {
                        size,
                        structure: variant.name().to_string(),
                        exclusion: exclusion.name().to_string(),
                        fraction,
                        threshold: t,
                        proportion_accessed: mean / size as f64,
                        mean_distances: mean,
                        queries: config.queries,
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_dimensions_are_cheap() {
        let config = DimSweepConfig { dims: vec![2], n: 20_000, queries: 200, ..DimSweepConfig::desk_scale() };
        let rows = run_dim_sweep(&config).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert!(r.fraction_accessed < 0.01, "{r:?}");
        }
    }

    #[test]
    fn scaling_rejects_oversized_requests() {
        let data = generate_uniform(1_000, 3, 1);
        let config = ScalingConfig {
            sizes: vec![500, 2_000],
            structures: vec![Variant::Vpt],
            exclusions: vec![Exclusion::Hyperbolic],
            fractions: vec![0.01],
            queries: 50,
            metric: Metric::Euclidean,
            seed: 0,
        };
        assert_eq!(run_scaling(&data, &config).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn proportion_accessed_falls_with_size() {
        let data = generate_uniform(41_000, 6, 3);
        let config = ScalingConfig {
            sizes: vec![2_500, 10_000, 40_000],
            structures: vec![Variant::HptFftLog, Variant::Vpt],
            exclusions: Exclusion::ALL.to_vec(),
            fractions: vec![0.0005],
            queries: 200,
            metric: Metric::Euclidean,
            seed: 2,
        };
        let rows = run_scaling(&data, &config).unwrap();
        for s in ["hpt_fft_log", "vpt"] {
            for e in ["hilbert", "hyperbolic"] {
                let p: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.structure == s && r.exclusion == e)
                    .map(|r| r.proportion_accessed)
                    .collect();
                assert!(p.windows(2).all(|w| w[1] < w[0]), "{s} {e} {p:?}");
            }
        }
    }
}
