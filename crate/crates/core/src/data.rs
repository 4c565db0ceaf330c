//! Datasets: ascii ingestion, synthetic generation, query splits and
//! threshold calibration.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::metrics::{Metric, MetricError};
use crate::space::MetricSpace;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected {expected} values, found {found}")]
    Ragged { line: usize, expected: usize, found: usize },
    #[error("header declares {declared} vectors but {found} were read")]
    CountMismatch { declared: usize, found: usize },
    #[error("dataset is empty")]
    Empty,
    #[error("values length {len} is not a multiple of dimension {dim}")]
    Shape { len: usize, dim: usize },
    #[error("vector {row} has a non-finite value")]
    NonFinite { row: usize },
    #[error("fraction {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("fraction {fraction} is below the resolution 1/{pairs} of the pair sample")]
    InsufficientResolution { fraction: f64, pairs: usize },
    #[error("need at least {needed} sampled pairs, got {got}")]
    TooFewPairs { needed: usize, got: usize },
    #[error("sampled distances have zero variance; the space is degenerate")]
    DegenerateSpace,
    #[error("need at least 2 vectors to sample pairs")]
    TooSmall,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// A set of equal-length real vectors stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    dim: usize,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, dim: usize, values: Vec<f64>) -> Result<Self, DataError> {
        if dim == 0 || values.is_empty() {
            return Err(DataError::Empty);
        }
        if !values.len().is_multiple_of(dim) {
            return Err(DataError::Shape { len: values.len(), dim });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { row: pos / dim });
        }
        Ok(Dataset { name: name.into(), dim, values })
    }

    pub fn from_rows(name: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self, DataError> {
        let dim = rows.first().ok_or(DataError::Empty)?.len();
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(DataError::Ragged { line: i + 1, expected: dim, found: r.len() });
            }
            values.extend_from_slice(r);
        }
        Dataset::new(name, dim, values)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select(&self, ids: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(ids.len() * self.dim);
        for &i in ids {
            values.extend_from_slice(self.row(i));
        }
        Dataset { name: self.name.clone(), dim: self.dim, values }
    }

    /// Random subset of `n` rows (all rows if `n >= len`), in original order.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        let mut ids: Vec<usize> = (0..self.len()).collect();
        if n < ids.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ids.shuffle(&mut rng);
            ids.truncate(n);
            ids.sort_unstable();
        }
        self.select(&ids)
    }

    /// Same rows in a seeded random order.
    pub fn shuffled(&self, seed: u64) -> Dataset {
        let mut ids: Vec<usize> = (0..self.len()).collect();
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        self.select(&ids)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn load_ascii(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| DataError::Io { path: path.into(), source })?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        read_ascii(BufReader::new(file), name).map_err(|e| match e {
            DataError::Io { source, .. } => DataError::Io { path: path.into(), source },
            other => other,
        })
    }

    pub fn save_ascii(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let path = path.as_ref();
        let io_err = |source| DataError::Io { path: path.into(), source };
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        self.write_ascii(&mut out).map_err(io_err)?;
        out.flush().map_err(io_err)
    }

    /// Writes a `count dim` header and one vector per line. Values use the
    /// shortest representation that parses back to the identical `f64`.
    pub fn write_ascii<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for row in self.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    out.write_all(b" ")?;
                }
                first = false;
                write!(out, "{v:?}")?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn parse_line(line: &str, lineno: usize) -> Result<Vec<f64>, DataError> {
    line.split_whitespace()
        .map(|tok| {
            let v: f64 = tok.parse().map_err(|_| DataError::Parse {
                line: lineno,
                message: format!("`{tok}` is not a number"),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(DataError::Parse { line: lineno, message: format!("`{tok}` is not finite") })
            }
        })
        .collect()
}

fn integer_tokens(line: &str) -> Option<Vec<usize>> {
    line.split_whitespace().map(|t| t.parse::<usize>().ok()).collect()
}

/// Parses whitespace-separated vectors. A first line of two integers is a
/// `count dim` header (the order is taken from the width of the next line); a
/// first line of three integers whose first equals the next line's width is
/// the native SISAP `dim count norm` header. Anything else is data.
pub fn read_ascii<R: BufRead>(reader: R, name: impl Into<String>) -> Result<Dataset, DataError> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
    let io_err = |source| DataError::Io { path: PathBuf::new(), source };

    let Some((first_no, first)) = lines.next() else { return Err(DataError::Empty) };
    let first = first.map_err(io_err)?;
    let second = lines.next().map(|(n, l)| l.map(|l| (n, l))).transpose().map_err(io_err)?;
    let next_width = second.as_ref().map(|(_, l)| l.split_whitespace().count());

    let mut declared_count = None;
    let mut pending: Vec<(usize, String)> = Vec::new();
    match (integer_tokens(&first).as_deref(), next_width) {
        (Some(&[a, b]), Some(w)) if w == b => declared_count = Some(a),
        (Some(&[a, b]), Some(w)) if w == a => declared_count = Some(b),
        (Some(&[d, c, _]), Some(w)) if w == d => declared_count = Some(c),
        _ => pending.push((first_no, first)),
    }
    pending.extend(second);

    let mut values = Vec::new();
    let mut dim = 0;
    let mut rows = 0;
    let mut push = |lineno: usize, line: &str| -> Result<(), DataError> {
        let v = parse_line(line, lineno)?;
        if rows == 0 {
            dim = v.len();
        } else if v.len() != dim {
            return Err(DataError::Ragged { line: lineno, expected: dim, found: v.len() });
        }
        values.extend(v);
        rows += 1;
        Ok(())
    };
    for (n, l) in pending {
        push(n, &l)?;
    }
    for (n, l) in lines {
        push(n, &l.map_err(io_err)?)?;
    }
    if let Some(declared) = declared_count {
        if declared != rows {
            return Err(DataError::CountMismatch { declared, found: rows });
        }
    }
    if rows == 0 {
        return Err(DataError::Empty);
    }
    Dataset::new(name, dim, values)
}

/// `n` points drawn i.i.d. uniformly from the unit hypercube.
pub fn generate_uniform(n: usize, dim: usize, seed: u64) -> Dataset {
    assert!(n >= 1 && dim >= 1, "generate_uniform needs n, dim >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n * dim).map(|_| rng.random::<f64>()).collect();
    Dataset { name: format!("uniform{dim}d"), dim, values }
}

/// Removes `round(fraction * n)` random rows to serve as queries. Returns
/// `(data, queries)`, each in original order.
pub fn split_queries(
    dataset: &Dataset,
    fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DataError::InvalidFraction(fraction));
    }
    let n = dataset.len();
    let n_queries = ((fraction * n as f64).round() as usize).min(n);
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (q, d) = ids.split_at_mut(n_queries);
    q.sort_unstable();
    d.sort_unstable();
    Ok((dataset.select(d), dataset.select(q)))
}

/// How a query threshold is specified on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdSpec {
    Absolute(f64),
    /// Fraction of the data a query should return; calibrated empirically.
    Fraction(f64),
}

impl FromStr for ThresholdSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(f) = s.strip_prefix("frac:") {
            let v: f64 = f.parse().map_err(|_| format!("bad fraction `{f}`"))?;
            if v > 0.0 && v < 1.0 {
                Ok(ThresholdSpec::Fraction(v))
            } else {
                Err(format!("fraction {v} outside (0, 1)"))
            }
        } else {
            let v: f64 = s.parse().map_err(|_| format!("bad threshold `{s}`"))?;
            if v >= 0.0 && v.is_finite() {
                Ok(ThresholdSpec::Absolute(v))
            } else {
                Err(format!("threshold {v} must be a nonnegative number"))
            }
        }
    }
}

/// Radius of the Euclidean ball whose volume is `fraction` of the unit
/// hypercube: `(fraction * Gamma(dim/2 + 1) / pi^(dim/2))^(1/dim)`.
pub fn calibrate_radius(dim: usize, fraction: f64) -> f64 {
    let d = dim as f64;
    let ln_r = (fraction.ln() + libm::lgamma(d / 2.0 + 1.0) - d / 2.0 * std::f64::consts::PI.ln()) / d;
    ln_r.exp()
}

pub const MIN_CALIBRATION_PAIRS: usize = 10_000;
pub const MIN_IDIM_PAIRS: usize = 1_000;

fn sample_pair_distances(space: &MetricSpace<'_>, pairs: usize, seed: u64) -> Result<Vec<f64>, DataError> {
    let n = space.len();
    if n < 2 {
        return Err(DataError::TooSmall);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..pairs)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            space.distance(i as u32, j as u32)
        })
        .collect())
}

/// The `fraction`-quantile of randomly sampled pairwise distances: the radius
/// at which a query returns about `fraction` of the data.
pub fn calibrate_threshold_empirical(
    dataset: &Dataset,
    metric: &Metric,
    fraction: f64,
    sample_pairs: usize,
    seed: u64,
) -> Result<f64, DataError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DataError::InvalidFraction(fraction));
    }
    if sample_pairs < MIN_CALIBRATION_PAIRS {
        return Err(DataError::TooFewPairs { needed: MIN_CALIBRATION_PAIRS, got: sample_pairs });
    }
    if fraction < 1.0 / sample_pairs as f64 {
        return Err(DataError::InsufficientResolution { fraction, pairs: sample_pairs });
    }
    let space = MetricSpace::new(dataset, metric.clone())?;
    let mut d = sample_pair_distances(&space, sample_pairs, seed)?;
    let k = ((fraction * sample_pairs as f64).ceil() as usize).clamp(1, sample_pairs) - 1;
    let (_, v, _) = d.select_nth_unstable_by(k, f64::total_cmp);
    Ok(*v)
}

/// Intrinsic dimensionality `mu^2 / (2 sigma^2)` of sampled pairwise distances.
pub fn idim(dataset: &Dataset, metric: &Metric, sample_pairs: usize, seed: u64) -> Result<f64, DataError> {
    if sample_pairs < MIN_IDIM_PAIRS {
        return Err(DataError::TooFewPairs { needed: MIN_IDIM_PAIRS, got: sample_pairs });
    }
    let space = MetricSpace::new(dataset, metric.clone())?;
    let d = sample_pair_distances(&space, sample_pairs, seed)?;
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if var <= 1e-12 * mean * mean {
        return Err(DataError::DegenerateSpace);
    }
    Ok(mean * mean / (2.0 * var))
}
