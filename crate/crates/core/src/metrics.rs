//! Distance functions over dense vectors.
//!
//! Every [`Metric`] knows whether it has the four-point property, which decides
//! whether Hilbert exclusion (and planar lower bounds in general) may be used
//! over it. Divergence-based metrics work on probability vectors and cosine on
//! unit vectors; [`Metric::normalize`] maps raw input into that canonical form
//! and [`Metric::prepared_distance`] evaluates on already-canonical vectors.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("incompatible vectors: dimension {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("empty vector")]
    Empty,
    #[error("non-finite component at position {index}")]
    NonFinite { index: usize },
    #[error("negative component {value} at position {index}; divergence metrics need nonnegative input")]
    NegativeComponent { index: usize, value: f64 },
    #[error("vector sums to zero and cannot be normalized to a distribution")]
    ZeroSum,
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("power exponent {0} outside (0, 1]")]
    InvalidExponent(f64),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
}

/// Exponent of a power-transformed metric, restricted to `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerExponent(f64);

impl PowerExponent {
    pub fn new(alpha: f64) -> Result<Self, MetricError> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(PowerExponent(alpha))
        } else {
            Err(MetricError::InvalidExponent(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Name and geometric capabilities of a metric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricDescriptor {
    pub name: String,
    pub four_point: bool,
    pub requires_probability_normalization: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Euclidean,
    /// Euclidean distance between the l2-normalized inputs, i.e. the chord
    /// `2 sin(theta / 2)` on the unit sphere.
    Cosine,
    /// Square root of the base-2 Jensen-Shannon divergence.
    JensenShannon,
    /// `sqrt(1/2 * sum (p_i - q_i)^2 / (p_i + q_i))` over probability vectors.
    Triangular,
    Manhattan,
    Chebyshev,
    /// `base(x, y)^alpha`.
    Power { base: Box<Metric>, alpha: PowerExponent },
}

impl Metric {
    pub fn descriptor(&self) -> MetricDescriptor {
        MetricDescriptor {
            name: self.to_string(),
            four_point: self.has_four_point(),
            requires_probability_normalization: self.requires_probability_normalization(),
        }
    }

    pub fn has_four_point(&self) -> bool {
        match self {
            Metric::Euclidean | Metric::Cosine | Metric::JensenShannon | Metric::Triangular => {
                true
            }
            Metric::Manhattan | Metric::Chebyshev => false,
            Metric::Power { alpha, .. } => alpha.value() <= 0.5,
        }
    }

    pub fn requires_probability_normalization(&self) -> bool {
        match self {
            Metric::JensenShannon | Metric::Triangular => true,
            Metric::Power { base, .. } => base.requires_probability_normalization(),
            _ => false,
        }
    }

    /// Validates `v` and maps it into the canonical form the metric is
    /// evaluated on (unit sum for divergences, unit length for cosine).
    pub fn normalize(&self, v: &[f64]) -> Result<Vec<f64>, MetricError> {
        if v.is_empty() {
            return Err(MetricError::Empty);
        }
        if let Some(index) = v.iter().position(|x| !x.is_finite()) {
            return Err(MetricError::NonFinite { index });
        }
        match self {
            Metric::Euclidean | Metric::Manhattan | Metric::Chebyshev => Ok(v.to_vec()),
            Metric::Cosine => {
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(MetricError::ZeroVector);
                }
                Ok(v.iter().map(|x| x / norm).collect())
            }
            Metric::JensenShannon | Metric::Triangular => {
                if let Some(index) = v.iter().position(|&x| x < 0.0) {
                    return Err(MetricError::NegativeComponent { index, value: v[index] });
                }
                let sum: f64 = v.iter().sum();
                if sum == 0.0 {
                    return Err(MetricError::ZeroSum);
                }
                Ok(v.iter().map(|x| x / sum).collect())
            }
            Metric::Power { base, .. } => base.normalize(v),
        }
    }

    /// Distance between two raw vectors, validating and normalizing both.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
        if a.len() != b.len() {
            return Err(MetricError::DimensionMismatch { left: a.len(), right: b.len() });
        }
        if self.normalizes() {
            let a = self.normalize(a)?;
            let b = self.normalize(b)?;
            Ok(self.prepared_distance(&a, &b))
        } else {
            // still validates finiteness and emptiness
            self.normalize(a)?;
            self.normalize(b)?;
            Ok(self.prepared_distance(a, b))
        }
    }

    /// Distance between two vectors already in canonical form (see
    /// [`Metric::normalize`]) and of equal length. No validation is done.
    #[inline]
    pub fn prepared_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::Euclidean | Metric::Cosine => l2(a, b),
            Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::Chebyshev => a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs())),
            Metric::JensenShannon => jensen_shannon_prepared(a, b),
            Metric::Triangular => triangular_prepared(a, b),
            Metric::Power { base, alpha } => base.prepared_distance(a, b).powf(alpha.value()),
        }
    }

    fn normalizes(&self) -> bool {
        match self {
            Metric::Cosine | Metric::JensenShannon | Metric::Triangular => true,
            Metric::Power { base, .. } => base.normalizes(),
            _ => false,
        }
    }
}

#[inline]
fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn jensen_shannon_prepared(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&x, &y) in p.iter().zip(q) {
        let m = x + y;
        let term = |v: f64| if v > 0.0 { v * (2.0 * v / m).log2() } else { 0.0 };
        acc += term(x) + term(y);
    }
    (0.5 * acc).clamp(0.0, 1.0).sqrt()
}

fn triangular_prepared(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&x, &y) in p.iter().zip(q) {
        let m = x + y;
        if m > 0.0 {
            let d = x - y;
            acc += d * d / m;
        }
    }
    (0.5 * acc).clamp(0.0, 1.0).sqrt()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    Metric::Euclidean.distance(a, b)
}

pub fn cosine_variant(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    Metric::Cosine.distance(a, b)
}

pub fn jensen_shannon(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    Metric::JensenShannon.distance(a, b)
}

pub fn triangular(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    Metric::Triangular.distance(a, b)
}

pub fn manhattan(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    Metric::Manhattan.distance(a, b)
}

pub fn chebyshev(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    Metric::Chebyshev.distance(a, b)
}

/// `d'(x, y) = d(x, y)^alpha`. The result has the four-point property when
/// `alpha <= 1/2`, whatever the base.
pub fn power_transform(base: Metric, alpha: f64) -> Result<Metric, MetricError> {
    Ok(Metric::Power { base: Box::new(base), alpha: PowerExponent::new(alpha)? })
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Euclidean => f.write_str("euclidean"),
            Metric::Cosine => f.write_str("cosine"),
            Metric::JensenShannon => f.write_str("jsd"),
            Metric::Triangular => f.write_str("triangular"),
            Metric::Manhattan => f.write_str("manhattan"),
            Metric::Chebyshev => f.write_str("chebyshev"),
            Metric::Power { base, alpha } => write!(f, "pow:{}:{}", alpha.value(), base),
        }
    }
}

impl FromStr for Metric {
    type Err = MetricError;

    /// Accepts `euclidean`, `cosine`, `jsd`, `triangular`, `manhattan`,
    /// `chebyshev` and `pow:<alpha>:<base>` (bases may nest).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("pow:") {
            let (alpha, base) = rest
                .split_once(':')
                .ok_or_else(|| MetricError::UnknownMetric(s.to_string()))?;
            let alpha: f64 =
                alpha.parse().map_err(|_| MetricError::UnknownMetric(s.to_string()))?;
            return power_transform(base.parse()?, alpha);
        }
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(Metric::Euclidean),
            "cosine" | "cosine_variant" => Ok(Metric::Cosine),
            "jsd" | "jensen_shannon" | "jensen-shannon" => Ok(Metric::JensenShannon),
            "triangular" => Ok(Metric::Triangular),
            "manhattan" | "l1" => Ok(Metric::Manhattan),
            "chebyshev" | "linf" => Ok(Metric::Chebyshev),
            _ => Err(MetricError::UnknownMetric(s.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_l2(a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..a.len() {
            s += (a[i] - b[i]) * (a[i] - b[i]);
        }
        s.sqrt()
    }

    fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn trivial_values() {
        assert_eq!(euclidean(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(manhattan(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 7.0);
        assert_eq!(chebyshev(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 4.0);
        assert_relative_eq!(cosine_variant(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2f64.sqrt());
        assert_eq!(jensen_shannon(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(triangular(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn identical_inputs_are_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = random_vec(&mut rng, 7);
            for m in ["euclidean", "cosine", "jsd", "triangular", "manhattan", "chebyshev"] {
                let m: Metric = m.parse().unwrap();
                assert_eq!(m.distance(&x, &x).unwrap(), 0.0, "{m}");
            }
        }
    }

    #[test]
    fn cosine_ignores_positive_scaling() {
        let a = [0.3, 1.2, 4.0];
        let b: Vec<f64> = a.iter().map(|x| x * 2.5).collect();
        assert!(cosine_variant(&a, &b).unwrap() < 1e-15);
    }

    #[test]
    fn matches_naive_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = random_vec(&mut rng, 8);
            let b = random_vec(&mut rng, 8);
            let oracle = naive_l2(&a, &b);
            assert_relative_eq!(euclidean(&a, &b).unwrap(), oracle, max_relative = 1e-12);
            let mut l1 = 0.0;
            let mut linf: f64 = 0.0;
            for i in 0..8 {
                l1 += (a[i] - b[i]).abs();
                linf = linf.max((a[i] - b[i]).abs());
            }
            assert_relative_eq!(manhattan(&a, &b).unwrap(), l1, max_relative = 1e-12);
            assert_eq!(chebyshev(&a, &b).unwrap(), linf);
        }
    }

    #[test]
    fn divergences_symmetric_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let a = random_vec(&mut rng, 6);
            let b = random_vec(&mut rng, 6);
            for m in [Metric::JensenShannon, Metric::Triangular] {
                let ab = m.distance(&a, &b).unwrap();
                assert_eq!(ab, m.distance(&b, &a).unwrap());
                assert!((0.0..=1.0).contains(&ab));
            }
        }
    }

    #[test]
    fn divergences_normalize_internally() {
        let p = [1.0, 3.0];
        let q = [2.0, 6.0];
        assert_eq!(jensen_shannon(&p, &q).unwrap(), 0.0);
        assert_eq!(triangular(&[0.0, 0.0, 2.0], &[0.0, 0.0, 5.0]).unwrap(), 0.0);
    }

    #[test]
    fn error_paths() {
        assert_eq!(
            euclidean(&[1.0], &[1.0, 2.0]),
            Err(MetricError::DimensionMismatch { left: 1, right: 2 })
        );
        assert_eq!(cosine_variant(&[0.0, 0.0], &[1.0, 0.0]), Err(MetricError::ZeroVector));
        assert_eq!(jensen_shannon(&[0.0, 0.0], &[1.0, 0.0]), Err(MetricError::ZeroSum));
        assert!(matches!(
            triangular(&[-1.0, 2.0], &[1.0, 0.0]),
            Err(MetricError::NegativeComponent { index: 0, .. })
        ));
        assert!(matches!(euclidean(&[f64::NAN], &[1.0]), Err(MetricError::NonFinite { .. })));
        assert!(power_transform(Metric::Euclidean, 0.0).is_err());
        assert!(power_transform(Metric::Euclidean, 1.5).is_err());
        assert!("hamming".parse::<Metric>().is_err());
        assert!("pow:2:euclidean".parse::<Metric>().is_err());
    }

    #[test]
    fn power_transform_values_and_flags() {
        let id = power_transform(Metric::Manhattan, 1.0).unwrap();
        assert_eq!(id.distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 7.0);
        let root = power_transform(Metric::Euclidean, 0.5).unwrap();
        assert_eq!(root.distance(&[0.0], &[4.0]).unwrap(), 2.0);
        assert!(root.has_four_point());
        assert!(!power_transform(Metric::Manhattan, 0.6).unwrap().has_four_point());
        assert!(power_transform(Metric::Manhattan, 0.5).unwrap().has_four_point());
    }

    #[test]
    fn descriptor_flags() {
        for (name, fp) in [
            ("euclidean", true),
            ("cosine", true),
            ("jsd", true),
            ("triangular", true),
            ("manhattan", false),
            ("chebyshev", false),
            ("pow:0.5:chebyshev", true),
        ] {
            let m: Metric = name.parse().unwrap();
            let d = m.descriptor();
            assert_eq!(d.four_point, fp, "{name}");
            assert_eq!(d.name, name);
        }
        assert!(Metric::JensenShannon.descriptor().requires_probability_normalization);
        assert!(!Metric::Cosine.descriptor().requires_probability_normalization);
    }

    #[test]
    fn nested_power_parses() {
        let m: Metric = "pow:0.5:pow:0.5:manhattan".parse().unwrap();
        assert_relative_eq!(m.distance(&[0.0], &[16.0]).unwrap(), 2.0);
        assert_eq!(m.to_string(), "pow:0.5:pow:0.5:manhattan");
    }
}
