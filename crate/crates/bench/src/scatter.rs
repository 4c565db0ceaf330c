//! Exclusion scatter studies: project a sample against one pivot pair and
//! mark which sample points, used as queries, could exclude a semispace.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use supermetric::index::is_exclusive;
use supermetric::planar::{partition_strategies, project_unchecked, PartitionStrategy};
use supermetric::{Dataset, Exclusion, Metric, MetricSpace, PivotPair, PlanarPoint};

use crate::CliError;

/// How the pivot pair is drawn from the points outside the sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotMode {
    Random,
    /// The most separated of `k` random pairs.
    FarOf(usize),
    /// The least separated of `k` random pairs.
    NearOf(usize),
}

impl FromStr for PivotMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "random" {
            return Ok(PivotMode::Random);
        }
        let parse = |k: &str| k.parse::<usize>().ok().filter(|&k| k > 0).ok_or_else(|| format!("bad pair count in `{s}`"));
        if let Some(k) = s.strip_prefix("far-of-") {
            Ok(PivotMode::FarOf(parse(k)?))
        } else if let Some(k) = s.strip_prefix("near-of-") {
            Ok(PivotMode::NearOf(parse(k)?))
        } else {
            Err(format!("unknown pivot mode `{s}`; expected random, far-of-K or near-of-K"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterConfig {
    pub metric: Metric,
    pub points: usize,
    pub pivot_mode: PivotMode,
    pub t: f64,
    pub strategy: PartitionStrategy,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub point_id: u32,
    pub x: f64,
    pub y: f64,
    /// Half assigned by the partition strategy: 0 for the lower-scoring half.
    pub side: u8,
    pub hilbert_exclusive: bool,
    pub hyperbolic_exclusive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterResult {
    pub pivots: PivotPair,
    pub t: f64,
    pub points: Vec<ScatterPoint>,
}

impl ScatterResult {
    pub fn non_exclusive(&self, exclusion: Exclusion) -> usize {
        self.points
            .iter()
            .filter(|p| match exclusion {
                Exclusion::Hilbert => !p.hilbert_exclusive,
                Exclusion::Hyperbolic => !p.hyperbolic_exclusive,
            })
            .count()
    }
}

/// Draws `config.points` sample rows from `data`, picks a pivot pair among the
/// remaining rows and labels every sample point.
pub fn run_scatter(data: &Dataset, config: &ScatterConfig) -> Result<ScatterResult, CliError> {
    if !config.metric.has_four_point() {
        return Err(CliError::Usage(format!("planar projection needs a four-point metric, not `{}`", config.metric)));
    }
    if !(config.t >= 0.0 && config.t.is_finite()) {
        return Err(CliError::Usage(format!("threshold {} must be a nonnegative number", config.t)));
    }
    if data.len() < config.points + 2 {
        return Err(CliError::Usage(format!(
            "need at least {} points for a {}-point sample plus pivots",
            config.points + 2,
            config.points
        )));
    }
    let space = MetricSpace::new(data, config.metric.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<u32> = sample(&mut rng, data.len(), data.len()).into_iter().map(|i| i as u32).collect();
    let rest = order.split_off(config.points);
    let pivots = choose_pivots(&space, &rest, config.pivot_mode, &mut rng);
    if !(pivots.delta > 0.0) {
        return Err(CliError::Usage("the chosen pivots coincide (zero separation)".into()));
    }
    let projected: Vec<(f64, f64, PlanarPoint)> = order
        .iter()
        .map(|&s| {
            let (d1, d2) = (space.distance(s, pivots.p1), space.distance(s, pivots.p2));
            (d1, d2, project_unchecked(d1, d2, pivots.delta))
        })
        .collect();
    let planar: Vec<PlanarPoint> = projected.iter().map(|p| p.2).collect();
    let sides = partition_strategies(&planar, config.strategy);
    let points = order
        .iter()
        .zip(&projected)
        .zip(&sides)
        .map(|((&id, &(d1, d2, p)), &side)| ScatterPoint {
            point_id: id,
            x: p.x,
            y: p.y,
            side: u8::from(side),
            hilbert_exclusive: is_exclusive(d1, d2, pivots.delta, config.t, Exclusion::Hilbert),
            hyperbolic_exclusive: is_exclusive(d1, d2, pivots.delta, config.t, Exclusion::Hyperbolic),
        })
        .collect();
    Ok(ScatterResult { pivots, t: config.t, points })
}

fn choose_pivots(space: &MetricSpace<'_>, pool: &[u32], mode: PivotMode, rng: &mut ChaCha8Rng) -> PivotPair {
    let draw = |rng: &mut ChaCha8Rng| {
        let two = sample(rng, pool.len(), 2);
        let (p1, p2) = (pool[two.index(0)], pool[two.index(1)]);
        PivotPair { p1, p2, delta: space.distance(p1, p2) }
    };
    match mode {
        PivotMode::Random => draw(rng),
        PivotMode::FarOf(k) | PivotMode::NearOf(k) => {
            let far = matches!(mode, PivotMode::FarOf(_));
            let mut best = draw(rng);
            for _ in 1..k {
                let c = draw(rng);
                let better = if far { c.delta > best.delta } else { c.delta > 0.0 && (c.delta < best.delta || best.delta == 0.0) };
                if better {
                    best = c;
                }
            }
            best
        }
    }
}

/// Non-exclusive counts `(hilbert, hyperbolic)` for each of `trials`
/// independently seeded runs.
pub fn repeated_counts(
    data_for_trial: impl Fn(u64) -> Dataset,
    config: &ScatterConfig,
    trials: u64,
) -> Result<Vec<(usize, usize)>, CliError> {
    (0..trials)
        .map(|i| {
            let seed = crate::derive_seed(config.seed, &format!("trial{i}"));
            let data = data_for_trial(seed);
            let r = run_scatter(&data, &ScatterConfig { seed, ..config.clone() })?;
            Ok((r.non_exclusive(Exclusion::Hilbert), r.non_exclusive(Exclusion::Hyperbolic)))
        })
        .collect()
}

pub const SVG_SIZE: f64 = 800.0;
const MARGIN: f64 = 50.0;
const SIDE_COLOURS: [&str; 2] = ["#1f5fa8", "#c0392b"];

/// Scatter plot in a fixed 800x800 viewport with equal axis scaling. Points
/// that can exclude under `exclusion` are solid, the rest hollow; the dashed
/// curves bound the non-exclusive region.
pub fn render_svg(result: &ScatterResult, exclusion: Exclusion) -> String {
    let half = result.pivots.delta / 2.0;
    let (mut x0, mut x1, mut y1) = (-half, half, 0.0f64);
    for p in &result.points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let y0 = 0.0;
    let span = (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
    let scale = (SVG_SIZE - 2.0 * MARGIN) / span;
    let sx = |x: f64| MARGIN + (x - x0) * scale;
    let sy = |y: f64| SVG_SIZE - MARGIN - (y - y0) * scale;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="800" viewBox="0 0 800 800">"#);
    let _ = writeln!(s, r##"<rect width="800" height="800" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888888" stroke-width="1"/>"##,
        sx(x0),
        sy(0.0),
        sx(x1),
        sy(0.0)
    );
    for path in boundary(result, exclusion, y1) {
        let pts: Vec<String> = path.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#444444" stroke-width="1" stroke-dasharray="6 4"/>"##,
            pts.join(" ")
        );
    }
    for p in &result.points {
        let colour = SIDE_COLOURS[usize::from(p.side)];
        let solid = match exclusion {
            Exclusion::Hilbert => p.hilbert_exclusive,
            Exclusion::Hyperbolic => p.hyperbolic_exclusive,
        };
        let fill = if solid { colour } else { "none" };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{fill}" stroke="{colour}" stroke-width="1"/>"#,
            sx(p.x),
            sy(p.y)
        );
    }
    for x in [-half, half] {
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="#000000"/>"##,
            sx(x) - 5.0,
            sy(0.0) - 5.0
        );
    }
    let r = result.t * scale;
    let _ = writeln!(
        s,
        r##"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="#000000" stroke-width="1"/>"##,
        MARGIN + r,
        MARGIN + r,
        r
    );
    let _ = writeln!(
        s,
        r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" fill="#000000">t = {} ({}: {} of {} non-exclusive)</text>"##,
        MARGIN + 2.0 * r + 10.0,
        MARGIN + r + 5.0,
        result.t,
        exclusion.name(),
        result.non_exclusive(exclusion),
        result.points.len()
    );
    s.push_str("</svg>\n");
    s
}

/// Planar curves separating exclusive from non-exclusive queries: the lines
/// `x = +-t` for Hilbert exclusion, the hyperbola `|d1 - d2| = 2t` otherwise.
fn boundary(result: &ScatterResult, exclusion: Exclusion, y_max: f64) -> Vec<Vec<(f64, f64)>> {
    let t = result.t;
    match exclusion {
        Exclusion::Hilbert => vec![vec![(-t, 0.0), (-t, y_max)], vec![(t, 0.0), (t, y_max)]],
        Exclusion::Hyperbolic => {
            let c = result.pivots.delta / 2.0;
            if t >= c {
                return Vec::new();
            }
            let b2 = c * c - t * t;
            let steps = 64;
            let branch: Vec<(f64, f64)> = (0..=steps)
                .map(|i| {
                    let y = y_max * i as f64 / steps as f64;
                    (t * (1.0 + y * y / b2).sqrt(), y)
                })
                .collect();
            let mirrored = branch.iter().map(|&(x, y)| (-x, y)).collect();
            vec![mirrored, branch]
        }
    }
}

/// Uniform data for one trial: `points + extra` rows in `dim` dimensions.
pub fn uniform_trial_data(points: usize, extra: usize, dim: usize) -> impl Fn(u64) -> Dataset {
    move |seed| supermetric::data::generate_uniform(points + extra, dim, seed)
}

/// Share of sample points that can exclude a semispace.
pub fn exclusion_probability(result: &ScatterResult, exclusion: Exclusion) -> f64 {
    1.0 - result.non_exclusive(exclusion) as f64 / result.points.len().max(1) as f64
}
