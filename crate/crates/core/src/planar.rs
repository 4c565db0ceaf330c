//! Tetrahedral projection onto the plane of a pivot pair.
//!
//! A point `s` with distances `d1 = d(s, p1)` and `d2 = d(s, p2)` is drawn as
//! the apex of the triangle on the baseline from `p1 = (-delta/2, 0)` to
//! `p2 = (delta/2, 0)`. In a space with the four-point property the Euclidean
//! distance between two such apexes never exceeds the original distance, which
//! is what every exclusion rule in this module relies on (apart from the
//! hyperbolic and cover-radius rules, which only need the triangle inequality).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Relative slack allowed when checking that three distances form a triangle.
pub const TRIANGLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanarError {
    #[error("pivot separation must be positive, got {0}")]
    NonPositiveBaseline(f64),
    #[error("distances ({d1}, {d2}, {delta}) violate the triangle inequality; input is not metric")]
    TriangleViolation { d1: f64, d2: f64, delta: f64 },
    #[error("negative distance")]
    NegativeDistance,
    #[error("line fit needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("unknown partition strategy `{0}`")]
    UnknownStrategy(String),
}

/// Two reference points of a dataset and their separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotPair {
    pub p1: u32,
    pub p2: u32,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub fn new(x: f64, y: f64) -> Self {
        PlanarPoint { x, y }
    }
}

/// Which pivot's semispace a query may skip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    ExcludeP1Side,
    ExcludeP2Side,
    None,
}

impl Verdict {
    pub fn excludes(self) -> bool {
        self != Verdict::None
    }
}

/// Query-time exclusion mechanism for hyperplane partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Exclusion {
    /// `|d1 - d2| > 2t`; valid in any metric space.
    Hyperbolic,
    /// `(d1^2 - d2^2) / delta > 2t`; requires the four-point property.
    Hilbert,
}

impl Exclusion {
    pub const ALL: [Exclusion; 2] = [Exclusion::Hyperbolic, Exclusion::Hilbert];

    pub fn name(self) -> &'static str {
        match self {
            Exclusion::Hyperbolic => "hyperbolic",
            Exclusion::Hilbert => "hilbert",
        }
    }
}

impl fmt::Display for Exclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Exclusion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hyperbolic" => Ok(Exclusion::Hyperbolic),
            "hilbert" => Ok(Exclusion::Hilbert),
            other => Err(format!("unknown exclusion `{other}` (expected hyperbolic or hilbert)")),
        }
    }
}

/// Projects a point at distances `d1`, `d2` from the pivots onto the plane.
pub fn project(d1: f64, d2: f64, delta: f64) -> Result<PlanarPoint, PlanarError> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(PlanarError::NonPositiveBaseline(delta));
    }
    if d1 < 0.0 || d2 < 0.0 {
        return Err(PlanarError::NegativeDistance);
    }
    let slack = TRIANGLE_TOLERANCE * d1.max(d2).max(delta);
    if d1 > d2 + delta + slack || d2 > d1 + delta + slack || delta > d1 + d2 + slack {
        return Err(PlanarError::TriangleViolation { d1, d2, delta });
    }
    Ok(project_unchecked(d1, d2, delta))
}

/// [`project`] without validation, for distances known to come from a metric.
/// `delta` must be positive.
#[inline]
pub fn project_unchecked(d1: f64, d2: f64, delta: f64) -> PlanarPoint {
    let x = planar_offset(d1, d2, delta);
    let along = x + delta / 2.0;
    PlanarPoint { x, y: (d1 * d1 - along * along).max(0.0).sqrt() }
}

/// Signed offset of the projected point from the perpendicular bisector of the
/// pivots: `(d1^2 - d2^2) / (2 delta)`.
#[inline]
pub fn planar_offset(d1: f64, d2: f64, delta: f64) -> f64 {
    (d1 * d1 - d2 * d2) / (2.0 * delta)
}

pub fn planar_lower_bound(a: PlanarPoint, b: PlanarPoint) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Hyperbolic exclusion: the side of the pivot farther from the query can be
/// skipped when `|d1 - d2| > 2t`.
pub fn hyperbolic_excludes(d1: f64, d2: f64, t: f64) -> Verdict {
    if d1 - d2 > 2.0 * t {
        Verdict::ExcludeP1Side
    } else if d2 - d1 > 2.0 * t {
        Verdict::ExcludeP2Side
    } else {
        Verdict::None
    }
}

/// Hilbert exclusion: the side of `p1` can be skipped when
/// `(d1^2 - d2^2) / delta > 2t`, and symmetrically for `p2`.
pub fn hilbert_excludes(d1: f64, d2: f64, delta: f64, t: f64) -> Result<Verdict, PlanarError> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(PlanarError::NonPositiveBaseline(delta));
    }
    let diff = d1 * d1 - d2 * d2;
    Ok(if diff / delta > 2.0 * t {
        Verdict::ExcludeP1Side
    } else if -diff / delta > 2.0 * t {
        Verdict::ExcludeP2Side
    } else {
        Verdict::None
    })
}

/// Ball exclusion: nothing within `t` of the query lies inside a partition of
/// cover radius `cr` (maximum pivot-to-member distance) when `dq > cr + t`.
pub fn cover_radius_excludes(dq: f64, cr: f64, t: f64) -> bool {
    dq > cr + t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    Finite(f64),
    Vertical,
}

/// Least-squares line through a planar point cloud, expressed as the rotation
/// that maps it onto the X-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationParams {
    /// Angle of the line, `arctan(m)`, in `(-pi/2, pi/2]`.
    pub theta: f64,
    /// X-intercept of the line.
    pub h: f64,
    pub slope: Slope,
}

impl RotationParams {
    pub fn identity() -> Self {
        RotationParams { theta: 0.0, h: 0.0, slope: Slope::Finite(0.0) }
    }
}

/// Fits `y = m x + b` by ordinary least squares on the y-residuals.
///
/// A near-horizontal fit (`|m| < 1e-12`) rotates about `(x_mean, 0)` with
/// `theta = 0`; a cloud with identical x coordinates gives a vertical line
/// through that x.
pub fn fit_line(points: &[PlanarPoint]) -> Result<RotationParams, PlanarError> {
    if points.len() < 2 {
        return Err(PlanarError::TooFewPoints(points.len()));
    }
    let n = points.len() as f64;
    let x0 = points[0].x;
    if points.iter().all(|p| p.x == x0) {
        return Ok(RotationParams { theta: std::f64::consts::FRAC_PI_2, h: x0, slope: Slope::Vertical });
    }
    let x_mean = points.iter().map(|p| p.x).sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.y).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for p in points {
        let dx = p.x - x_mean;
        sxy += dx * (p.y - y_mean);
        sxx += dx * dx;
    }
    let m = sxy / sxx;
    if m.abs() < 1e-12 {
        return Ok(RotationParams { theta: 0.0, h: x_mean, slope: Slope::Finite(m) });
    }
    Ok(RotationParams { theta: m.atan(), h: x_mean - y_mean / m, slope: Slope::Finite(m) })
}

/// Rotates `p` about `(h, 0)` so that the fitted line becomes the X-axis.
/// The returned x runs along the line and y is the signed perpendicular offset.
#[inline]
pub fn rotate(p: PlanarPoint, params: &RotationParams) -> (f64, f64) {
    let (sin, cos) = params.theta.sin_cos();
    let dx = p.x - params.h;
    (dx * cos + p.y * sin, -dx * sin + p.y * cos)
}

/// Scalar scores used to bisect a projected point cloud for plotting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionStrategy {
    SplitXMedian,
    SplitYMedian,
    PcaMajor,
    PcaMinor,
    LrOrthogonal,
    LrParallel,
    RadialCentre,
    RadialCorner,
}

impl PartitionStrategy {
    pub const ALL: [PartitionStrategy; 8] = [
        PartitionStrategy::SplitXMedian,
        PartitionStrategy::SplitYMedian,
        PartitionStrategy::PcaMajor,
        PartitionStrategy::PcaMinor,
        PartitionStrategy::LrOrthogonal,
        PartitionStrategy::LrParallel,
        PartitionStrategy::RadialCentre,
        PartitionStrategy::RadialCorner,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PartitionStrategy::SplitXMedian => "split_x_median",
            PartitionStrategy::SplitYMedian => "split_y_median",
            PartitionStrategy::PcaMajor => "pca_major",
            PartitionStrategy::PcaMinor => "pca_minor",
            PartitionStrategy::LrOrthogonal => "lr_orthogonal",
            PartitionStrategy::LrParallel => "lr_parallel",
            PartitionStrategy::RadialCentre => "radial_centre",
            PartitionStrategy::RadialCorner => "radial_corner",
        }
    }

    /// The value each point is ranked by; the median of it separates the classes.
    pub fn scores(self, points: &[PlanarPoint]) -> Vec<f64> {
        match self {
            PartitionStrategy::SplitXMedian => points.iter().map(|p| p.x).collect(),
            PartitionStrategy::SplitYMedian => points.iter().map(|p| p.y).collect(),
            PartitionStrategy::PcaMajor | PartitionStrategy::PcaMinor => {
                let (major, minor) = principal_axes(points);
                let axis = if self == PartitionStrategy::PcaMajor { major } else { minor };
                points.iter().map(|p| p.x * axis.0 + p.y * axis.1).collect()
            }
            PartitionStrategy::LrOrthogonal | PartitionStrategy::LrParallel => {
                let params = fit_line(points).unwrap_or_else(|_| RotationParams::identity());
                points
                    .iter()
                    .map(|&p| {
                        let (rx, ry) = rotate(p, &params);
                        if self == PartitionStrategy::LrOrthogonal {
                            rx
                        } else {
                            ry
                        }
                    })
                    .collect()
            }
            PartitionStrategy::RadialCentre | PartitionStrategy::RadialCorner => {
                let (min_x, max_x, min_y, max_y) = bounds(points);
                let anchor = if self == PartitionStrategy::RadialCentre {
                    PlanarPoint::new((min_x + max_x) / 2.0, (min_y + max_y) / 2.0)
                } else {
                    PlanarPoint::new(min_x, max_y)
                };
                points.iter().map(|&p| planar_lower_bound(p, anchor)).collect()
            }
        }
    }
}

impl FromStr for PartitionStrategy {
    type Err = PlanarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PartitionStrategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| PlanarError::UnknownStrategy(s.to_string()))
    }
}

impl fmt::Display for PartitionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn bounds(points: &[PlanarPoint]) -> (f64, f64, f64, f64) {
    points.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), p| (a.min(p.x), b.max(p.x), c.min(p.y), d.max(p.y)),
    )
}

/// Unit eigenvectors of the 2x2 covariance matrix, major first.
fn principal_axes(points: &[PlanarPoint]) -> ((f64, f64), (f64, f64)) {
    let n = points.len().max(1) as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.y).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.x - mx, p.y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let phi = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (s, c) = phi.sin_cos();
    ((c, s), (-s, c))
}

/// Splits the cloud into two classes at the median of the strategy's score.
/// `false` marks the lower `floor(n/2)` points, `true` the rest; ties are broken
/// by position so the class sizes never differ by more than one.
pub fn partition_strategies(points: &[PlanarPoint], strategy: PartitionStrategy) -> Vec<bool> {
    let scores = strategy.scores(points);
    let mut order: Vec<usize> = (0..points.len()).collect();
    let half = points.len() / 2;
    if half > 0 {
        order.select_nth_unstable_by(half, |&a, &b| {
            scores[a].total_cmp(&scores[b]).then(a.cmp(&b))
        });
    }
    let mut labels = vec![true; points.len()];
    for &i in &order[..half] {
        labels[i] = false;
    }
    labels
}
