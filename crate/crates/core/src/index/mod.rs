//! Exact range-search trees over a [`MetricSpace`], with a choice of
//! hyperbolic or Hilbert exclusion at query time and counted distance
//! evaluations.

mod lrt;
mod monotone;
mod partition;
pub mod select;
mod vpt;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::metrics::MetricError;
use crate::planar::{hilbert_excludes, hyperbolic_excludes, planar_offset, project_unchecked, rotate, Exclusion, PivotPair};
use crate::space::MetricSpace;
use partition::{HptSelection, Kind, SatScan};
use select::Meter;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("Hilbert exclusion requires a metric with the four-point property; `{0}` lacks it")]
    NotFourPoint(String),
    #[error("query threshold must be finite and nonnegative, got {0}")]
    InvalidThreshold(f64),
    #[error("leaf capacity must be at least 1")]
    ZeroLeafCapacity,
    #[error("pivot separation must be positive, got {0}")]
    DegeneratePivots(f64),
    #[error("unknown index variant `{0}`")]
    UnknownVariant(String),
}

/// Branching policy of multi-way trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Binary,
    Fixed,
    Log,
}

impl Arity {
    pub const FIXED: usize = 4;

    /// Arity of a node built over `n` points: 2, 4, or `max(2, floor(ln n))`.
    pub fn of(self, n: usize) -> usize {
        match self {
            Arity::Binary => 2,
            Arity::Fixed => Self::FIXED,
            Arity::Log => ((n.max(1) as f64).ln().floor() as usize).max(2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Arity::Binary => "binary",
            Arity::Fixed => "fixed",
            Arity::Log => "log",
        }
    }
}

/// How the second pivot of a monotone or regression tree node is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoPivotChoice {
    /// Uniformly from the node's subset.
    Rand,
    /// The member farthest from the inherited pivot.
    Far,
}

macro_rules! variants {
    ($($v:ident => $name:literal),* $(,)?) => {
        /// The index structures available for benchmarking.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Variant { $($v),* }

        impl Variant {
            pub const ALL: [Variant; 19] = [$(Variant::$v),*];

            pub fn name(self) -> &'static str {
                match self { $(Variant::$v => $name),* }
            }
        }

        impl FromStr for Variant {
            type Err = IndexError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s { $($name => Ok(Variant::$v),)* _ => Err(IndexError::UnknownVariant(s.to_string())) }
            }
        }
    };
}

variants! {
    SatPure => "sat_pure",
    SatDistalPure => "sat_distal_pure",
    SatDistalFixed => "sat_distal_fixed",
    SatDistalLog => "sat_distal_log",
    SatGlobalFixed => "sat_global_fixed",
    SatGlobalLog => "sat_global_log",
    HptFftBinary => "hpt_fft_binary",
    HptFftFixed => "hpt_fft_fixed",
    HptFftLog => "hpt_fft_log",
    HptRandomBinary => "hpt_random_binary",
    HptRandomFixed => "hpt_random_fixed",
    HptRandomLog => "hpt_random_log",
    MonptRand => "monpt_rand",
    MonptFar => "monpt_far",
    BalancedMonptRand => "balanced_monpt_rand",
    BalancedMonptFar => "balanced_monpt_far",
    LrtRand => "lrt_rand",
    LrtFar => "lrt_far",
    Vpt => "vpt",
}

impl Variant {
    /// Tree family: `sat`, `hpt`, `monpt`, `balanced_monpt`, `lrt` or `vpt`.
    pub fn family(self) -> &'static str {
        use Variant::*;
        match self {
            SatPure | SatDistalPure | SatDistalFixed | SatDistalLog | SatGlobalFixed | SatGlobalLog => "sat",
            HptFftBinary | HptFftFixed | HptFftLog | HptRandomBinary | HptRandomFixed | HptRandomLog => "hpt",
            MonptRand | MonptFar => "monpt",
            BalancedMonptRand | BalancedMonptFar => "balanced_monpt",
            LrtRand | LrtFar => "lrt",
            Vpt => "vpt",
        }
    }

    /// Pivot selection part of the name, e.g. `fft_log` or `distal_pure`.
    pub fn selection(self) -> &'static str {
        let name = self.name();
        let family = self.family();
        name.strip_prefix(family).map(|s| s.trim_start_matches('_')).filter(|s| !s.is_empty()).unwrap_or("random")
    }

    /// Branching policy for multi-way trees; `None` for binary structures
    /// and for the pure SATs, whose width is data dependent.
    pub fn arity(self) -> Option<Arity> {
        use Variant::*;
        match self {
            SatDistalFixed | SatGlobalFixed | HptFftFixed | HptRandomFixed => Some(Arity::Fixed),
            SatDistalLog | SatGlobalLog | HptFftLog | HptRandomLog => Some(Arity::Log),
            HptFftBinary | HptRandomBinary => Some(Arity::Binary),
            _ => None,
        }
    }

    pub fn is_pure_sat(self) -> bool {
        matches!(self, Variant::SatPure | Variant::SatDistalPure)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexConfig {
    pub variant: Variant,
    pub seed: u64,
    /// Largest subset stored as a leaf. Defaults to the node arity for
    /// multi-way trees and to 2 otherwise.
    pub leaf_capacity: Option<usize>,
    /// Upper bound on the points used to fit each regression-tree line; all
    /// points are used when `None`.
    pub fit_sample_cap: Option<usize>,
}

impl IndexConfig {
    pub fn new(variant: Variant, seed: u64) -> Self {
        IndexConfig { variant, seed, leaf_capacity: None, fit_sample_cap: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryReport {
    /// Ids within the threshold, ascending.
    pub result_ids: Vec<u32>,
    /// Every distance evaluated, pivots included.
    pub distance_count: u64,
    pub nodes_visited: u64,
}

/// Per-query state shared by every tree's search routine.
pub(crate) struct QueryCtx<'q> {
    space: &'q MetricSpace<'q>,
    query: &'q [f64],
    pub t: f64,
    pub exclusion: Exclusion,
    pub distances: u64,
    pub visited: u64,
    pub results: Vec<u32>,
}

impl QueryCtx<'_> {
    /// Measures the query's distance to `id`, reporting it when in range.
    #[inline]
    pub(crate) fn probe(&mut self, id: u32) -> f64 {
        let d = self.space.distance_to(self.query, id);
        self.distances += 1;
        if d <= self.t {
            self.results.push(id);
        }
        d
    }
}

/// Whether the partition of pivot `i` (members no farther from `p_i` than from
/// `p_j`) can be skipped. Hilbert mode also applies the hyperbolic rule, so it
/// never prunes less.
#[inline]
pub(crate) fn side_excluded(di: f64, dj: f64, delta: f64, t: f64, exclusion: Exclusion) -> bool {
    if di - dj > 2.0 * t {
        return true;
    }
    exclusion == Exclusion::Hilbert && delta > 0.0 && (di * di - dj * dj) / delta > 2.0 * t
}

/// Position of the largest value, first on ties.
pub(crate) fn far_position(d: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in d.iter().enumerate() {
        if v > d[best] {
            best = i;
        }
    }
    best
}

enum Tree {
    Partition(partition::PartitionTree),
    Monotone(monotone::MonotoneTree),
    Lrt(lrt::LrtTree),
    Vpt(vpt::Node),
}

/// A built search tree borrowing its metric space.
pub struct Index<'a> {
    space: &'a MetricSpace<'a>,
    config: IndexConfig,
    tree: Tree,
    build_distances: u64,
}

impl<'a> Index<'a> {
    /// Builds the configured tree over every point of `space`.
    pub fn build(space: &'a MetricSpace<'a>, config: IndexConfig) -> Result<Self, IndexError> {
        if config.leaf_capacity == Some(0) {
            return Err(IndexError::ZeroLeafCapacity);
        }
        let meter = Meter::new(space);
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        let ids: Vec<u32> = (0..space.len() as u32).collect();
        let leaf = config.leaf_capacity.unwrap_or(2);
        use Variant::*;
        let v = config.variant;
        let tree = match v {
            SatPure | SatDistalPure | SatDistalFixed | SatDistalLog | SatGlobalFixed | SatGlobalLog => {
                let scan = match v {
                    SatPure => SatScan::Proximal,
                    SatGlobalFixed | SatGlobalLog => SatScan::Global,
                    _ => SatScan::Distal,
                };
                let arity = v.arity().unwrap_or(Arity::Binary);
                let b = partition::Builder::new(&meter, rng, arity, config.leaf_capacity);
                Tree::Partition(b.build(ids, Kind::Sat { scan, pure: v.is_pure_sat() }))
            }
            HptFftBinary | HptFftFixed | HptFftLog | HptRandomBinary | HptRandomFixed | HptRandomLog => {
                let sel = if v.selection().starts_with("fft") { HptSelection::Fft } else { HptSelection::Random };
                let arity = v.arity().expect("hpt variants have an arity");
                let b = partition::Builder::new(&meter, rng, arity, config.leaf_capacity);
                Tree::Partition(b.build(ids, Kind::Hpt(sel)))
            }
            MonptRand | MonptFar | BalancedMonptRand | BalancedMonptFar => {
                let choice = if matches!(v, MonptFar | BalancedMonptFar) { TwoPivotChoice::Far } else { TwoPivotChoice::Rand };
                let balanced = matches!(v, BalancedMonptRand | BalancedMonptFar);
                let b = monotone::Builder { meter: &meter, rng, choice, balanced, leaf_capacity: leaf };
                Tree::Monotone(b.build(ids))
            }
            LrtRand | LrtFar => {
                let choice = if v == LrtFar { TwoPivotChoice::Far } else { TwoPivotChoice::Rand };
                let b = lrt::Builder {
                    meter: &meter,
                    rng,
                    choice,
                    leaf_capacity: leaf,
                    fit_sample_cap: config.fit_sample_cap,
                };
                Tree::Lrt(b.build(ids))
            }
            Vpt => Tree::Vpt(vpt::Builder { meter: &meter, rng, leaf_capacity: leaf }.build(ids)),
        };
        Ok(Index { space, config, tree, build_distances: meter.count() })
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn space(&self) -> &'a MetricSpace<'a> {
        self.space
    }

    /// Distances evaluated while building.
    pub fn build_distances(&self) -> u64 {
        self.build_distances
    }

    /// All stored ids (pivots and leaf members), ascending.
    pub fn members(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.space.len());
        match &self.tree {
            Tree::Partition(p) => p.members(&mut out),
            Tree::Monotone(m) => m.members(&mut out),
            Tree::Lrt(l) => l.members(&mut out),
            Tree::Vpt(n) => vpt::collect(n, &mut out),
        }
        out.sort_unstable();
        out
    }

    /// Number of pivots at the root of a multi-way tree.
    pub fn root_arity(&self) -> Option<usize> {
        match &self.tree {
            Tree::Partition(p) => p.root_arity(),
            _ => None,
        }
    }

    /// Exact range query for a raw query vector, which is validated and
    /// normalized for the space's metric first.
    pub fn range_query(&self, query: &[f64], t: f64, exclusion: Exclusion) -> Result<QueryReport, IndexError> {
        let q = self.space.prepare_query(query)?;
        self.range_query_prepared(&q, t, exclusion)
    }

    /// Exact range query for a vector already in the space's canonical form
    /// (see [`MetricSpace::prepare_query`]).
    pub fn range_query_prepared(&self, query: &[f64], t: f64, exclusion: Exclusion) -> Result<QueryReport, IndexError> {
        if !t.is_finite() || t < 0.0 {
            return Err(IndexError::InvalidThreshold(t));
        }
        if query.len() != self.space.dim() {
            return Err(MetricError::DimensionMismatch { left: query.len(), right: self.space.dim() }.into());
        }
        check_exclusion(self.space, exclusion)?;
        let mut ctx = QueryCtx { space: self.space, query, t, exclusion, distances: 0, visited: 0, results: Vec::new() };
        match &self.tree {
            Tree::Partition(p) => p.query(&mut ctx),
            Tree::Monotone(m) => m.query(&mut ctx),
            Tree::Lrt(l) => l.query(&mut ctx),
            Tree::Vpt(n) => vpt::query(n, &mut ctx),
        }
        ctx.results.sort_unstable();
        Ok(QueryReport { result_ids: ctx.results, distance_count: ctx.distances, nodes_visited: ctx.visited })
    }

    /// Re-derives every stored split, radius and pivot distance from the data
    /// and reports the first inconsistency found.
    pub fn verify_structure(&self) -> Result<(), String> {
        let s = self.space;
        match &self.tree {
            Tree::Partition(p) => {
                let chain: Vec<u32> = p.centre.into_iter().collect();
                verify_partition(s, p.root(), p.pure, &chain)
            }
            Tree::Monotone(m) => match m.root_pivot {
                Some(p1) => verify_monotone(s, &m.root, p1, m.balanced),
                None => Ok(()),
            },
            Tree::Lrt(l) => match l.p1 {
                Some(p1) => verify_lrt(s, &l.root, p1),
                None => Ok(()),
            },
            Tree::Vpt(n) => verify_vpt(s, n),
        }
    }
}

fn check_exclusion(space: &MetricSpace<'_>, exclusion: Exclusion) -> Result<(), IndexError> {
    if exclusion == Exclusion::Hilbert && !space.metric().has_four_point() {
        return Err(IndexError::NotFourPoint(space.metric().to_string()));
    }
    Ok(())
}

fn subtree<N>(node: &N, collect: fn(&N, &mut Vec<u32>)) -> Vec<u32> {
    let mut out = Vec::new();
    collect(node, &mut out);
    out
}

fn collect_partition(node: &partition::Node, out: &mut Vec<u32>) {
    match node {
        partition::Node::Leaf(ids) => out.extend_from_slice(ids),
        partition::Node::Internal(n) => {
            out.extend_from_slice(&n.pivots);
            for c in &n.children {
                collect_partition(c, out);
            }
        }
    }
}

fn verify_partition(s: &MetricSpace<'_>, node: &partition::Node, pure: bool, chain: &[u32]) -> Result<(), String> {
    let partition::Node::Internal(n) = node else { return Ok(()) };
    let k = n.pivots.len();
    for i in 0..k {
        for j in i + 1..k {
            if n.inter_pivot[partition::packed(k, i, j)] != s.distance(n.pivots[i], n.pivots[j]) {
                return Err(format!("stale pivot distance {}-{}", n.pivots[i], n.pivots[j]));
            }
        }
        if pure {
            for (a, &c) in chain.iter().enumerate() {
                if n.ancestors[i * chain.len() + a] != s.distance(n.pivots[i], c) {
                    return Err(format!("stale ancestor distance {}-{c}", n.pivots[i]));
                }
            }
        }
    }
    for (i, child) in n.children.iter().enumerate() {
        let p = n.pivots[i];
        for m in subtree(child, collect_partition) {
            let d = s.distance(m, p);
            if d > n.cover_radii[i] {
                return Err(format!("{m} lies outside the cover radius of {p}"));
            }
            if let Some(&q) = n.pivots.iter().find(|&&q| s.distance(m, q) < d) {
                return Err(format!("{m} is closer to pivot {q} than to its own pivot {p}"));
            }
            if pure {
                if let Some(&c) = chain.iter().find(|&&c| s.distance(m, c) < d) {
                    return Err(format!("{m} is closer to ancestor centre {c} than to pivot {p}"));
                }
            }
        }
        let mut next = chain.to_vec();
        next.push(p);
        verify_partition(s, child, pure, &next)?;
    }
    Ok(())
}

fn collect_monotone(node: &monotone::Node, out: &mut Vec<u32>) {
    match node {
        monotone::Node::Leaf(ids) => out.extend_from_slice(ids),
        monotone::Node::Internal(n) => {
            out.push(n.p2);
            collect_monotone(&n.left, out);
            collect_monotone(&n.right, out);
        }
    }
}

fn verify_monotone(s: &MetricSpace<'_>, node: &monotone::Node, p1: u32, balanced: bool) -> Result<(), String> {
    let monotone::Node::Internal(n) = node else { return Ok(()) };
    if n.delta != s.distance(p1, n.p2) {
        return Err(format!("stale pivot distance {p1}-{}", n.p2));
    }
    for (side, child, pivot) in [(0, &n.left, p1), (1, &n.right, n.p2)] {
        for m in subtree(child, collect_monotone) {
            let (d1, d2) = (s.distance(m, p1), s.distance(m, n.p2));
            let d = if side == 0 { d1 } else { d2 };
            if d > n.cover[side] {
                return Err(format!("{m} lies outside the cover radius of {pivot}"));
            }
            if n.split.is_nan() {
                continue;
            }
            let left = if balanced { planar_offset(d1, d2, n.delta) < n.split } else { d1 <= d2 };
            if left != (side == 0) {
                return Err(format!("{m} is on the wrong side of the split under {p1}-{}", n.p2));
            }
        }
        verify_monotone(s, child, pivot, balanced)?;
    }
    Ok(())
}

fn collect_lrt(node: &lrt::Node, out: &mut Vec<u32>) {
    match node {
        lrt::Node::Leaf(ids) => out.extend_from_slice(ids),
        lrt::Node::Internal(n) => {
            out.push(n.p2);
            collect_lrt(&n.left, out);
            collect_lrt(&n.right, out);
        }
    }
}

fn verify_lrt(s: &MetricSpace<'_>, node: &lrt::Node, p1: u32) -> Result<(), String> {
    let lrt::Node::Internal(n) = node else { return Ok(()) };
    if !n.split.is_nan() {
        for (side, child) in [(0, &n.left), (1, &n.right)] {
            for m in subtree(child, collect_lrt) {
                let p = project_unchecked(s.distance(m, p1), s.distance(m, n.p2), n.delta);
                if (rotate(p, &n.params).0 < n.split) != (side == 0) {
                    return Err(format!("{m} is on the wrong side of the regression split"));
                }
            }
        }
    }
    verify_lrt(s, &n.left, p1)?;
    verify_lrt(s, &n.right, p1)
}

fn verify_vpt(s: &MetricSpace<'_>, node: &vpt::Node) -> Result<(), String> {
    let vpt::Node::Internal(n) = node else { return Ok(()) };
    for m in subtree(&n.inside, vpt::collect) {
        if s.distance(m, n.pivot) > n.mu {
            return Err(format!("{m} lies outside the ball of {}", n.pivot));
        }
    }
    for m in subtree(&n.outside, vpt::collect) {
        if s.distance(m, n.pivot) < n.mu {
            return Err(format!("{m} lies inside the ball of {}", n.pivot));
        }
    }
    verify_vpt(s, &n.inside)?;
    verify_vpt(s, &n.outside)
}

/// Tally of sample points, used as queries, for which a pivot pair's
/// exclusion rule can skip one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExclusiveCount {
    pub exclusive: usize,
    pub non_exclusive: usize,
}

/// Whether a query at distances `d1`, `d2` from pivots `delta` apart can
/// exclude either semispace at threshold `t`.
pub fn is_exclusive(d1: f64, d2: f64, delta: f64, t: f64, exclusion: Exclusion) -> bool {
    match exclusion {
        Exclusion::Hyperbolic => hyperbolic_excludes(d1, d2, t).excludes(),
        Exclusion::Hilbert => hilbert_excludes(d1, d2, delta, t).is_ok_and(|v| v.excludes()),
    }
}

/// Counts the sample points that could (and could not) exclude a semispace
/// of `pivots` if issued as queries with threshold `t`.
pub fn count_exclusive_queries(
    space: &MetricSpace<'_>,
    sample: &[u32],
    pivots: PivotPair,
    t: f64,
    exclusion: Exclusion,
) -> Result<ExclusiveCount, IndexError> {
    if !t.is_finite() || t < 0.0 {
        return Err(IndexError::InvalidThreshold(t));
    }
    if pivots.delta.is_nan() || pivots.delta <= 0.0 {
        return Err(IndexError::DegeneratePivots(pivots.delta));
    }
    check_exclusion(space, exclusion)?;
    let exclusive = sample
        .iter()
        .filter(|&&s| is_exclusive(space.distance(s, pivots.p1), space.distance(s, pivots.p2), pivots.delta, t, exclusion))
        .count();
    Ok(ExclusiveCount { exclusive, non_exclusive: sample.len() - exclusive })
}
