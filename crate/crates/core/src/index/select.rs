//! Pivot selection: uniform random, farthest-first traversal and the
//! spatial-approximation scan.

use std::cell::Cell;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::space::MetricSpace;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectError {
    #[error("cannot select {k} pivots from {available} candidates")]
    TooFewCandidates { k: usize, available: usize },
    #[error("pivot count must be at least 1")]
    ZeroPivots,
}

/// Distance evaluator that counts every call.
pub(crate) struct Meter<'a> {
    space: &'a MetricSpace<'a>,
    count: Cell<u64>,
}

impl<'a> Meter<'a> {
    pub(crate) fn new(space: &'a MetricSpace<'a>) -> Self {
        Meter { space, count: Cell::new(0) }
    }

    #[inline]
    pub(crate) fn d(&self, a: u32, b: u32) -> f64 {
        self.count.set(self.count.get() + 1);
        self.space.distance(a, b)
    }

    pub(crate) fn count(&self) -> u64 {
        self.count.get()
    }

    pub(crate) fn len(&self) -> usize {
        self.space.len()
    }
}

/// Pivots chosen from a candidate list, plus each remaining candidate's
/// nearest pivot (lowest pivot index on ties) and the distance to it.
pub(crate) struct Assignment {
    pub pivots: Vec<u32>,
    /// Candidate position of each pivot.
    pub pivot_pos: Vec<usize>,
    /// Parallel to the candidate list; `None` for candidates chosen as pivots.
    pub nearest: Vec<Option<(usize, f64)>>,
}

impl Assignment {
    /// Members of each pivot's partition with their distances to that pivot.
    pub(crate) fn groups(&self, ids: &[u32]) -> Vec<(Vec<u32>, Vec<f64>)> {
        let mut groups = vec![(Vec::new(), Vec::new()); self.pivots.len()];
        for (pos, near) in self.nearest.iter().enumerate() {
            if let Some((p, d)) = *near {
                groups[p].0.push(ids[pos]);
                groups[p].1.push(d);
            }
        }
        groups
    }
}

/// Running nearest-pivot state for one candidate.
#[derive(Clone, Copy)]
struct Nearest {
    upto: usize,
    best: usize,
    dist: f64,
}

impl Nearest {
    const NONE: Nearest = Nearest { upto: 0, best: usize::MAX, dist: f64::INFINITY };

    fn extend(&mut self, meter: &Meter<'_>, id: u32, pivots: &[u32]) {
        for (i, &p) in pivots.iter().enumerate().skip(self.upto) {
            let d = meter.d(id, p);
            if d < self.dist {
                self.dist = d;
                self.best = i;
            }
        }
        self.upto = pivots.len();
    }
}

fn finish(meter: &Meter<'_>, ids: &[u32], pivot_pos: Vec<usize>, is_pivot: &[bool], mut near: Vec<Nearest>) -> Assignment {
    let pivots: Vec<u32> = pivot_pos.iter().map(|&p| ids[p]).collect();
    let nearest = ids
        .iter()
        .enumerate()
        .map(|(pos, &id)| {
            if is_pivot[pos] {
                None
            } else {
                near[pos].extend(meter, id, &pivots);
                Some((near[pos].best, near[pos].dist))
            }
        })
        .collect();
    Assignment { pivots, pivot_pos, nearest }
}

/// Assigns every non-pivot candidate to its nearest pivot.
pub(crate) fn assign(meter: &Meter<'_>, ids: &[u32], pivot_positions: &[usize]) -> Assignment {
    let mut is_pivot = vec![false; ids.len()];
    for &p in pivot_positions {
        is_pivot[p] = true;
    }
    finish(meter, ids, pivot_positions.to_vec(), &is_pivot, vec![Nearest::NONE; ids.len()])
}

/// Farthest-first traversal starting at `first`; the distances it measures
/// double as the nearest-pivot assignment.
pub(crate) fn fft_assign(meter: &Meter<'_>, ids: &[u32], k: usize, first: usize) -> Assignment {
    let k = k.min(ids.len());
    let mut is_pivot = vec![false; ids.len()];
    let mut near = vec![Nearest::NONE; ids.len()];
    let mut pivots = Vec::with_capacity(k);
    let mut pivot_pos = Vec::with_capacity(k);
    let mut next = first;
    loop {
        is_pivot[next] = true;
        pivots.push(ids[next]);
        pivot_pos.push(next);
        let mut far = None::<(usize, f64)>;
        for (pos, &id) in ids.iter().enumerate() {
            if is_pivot[pos] {
                continue;
            }
            near[pos].extend(meter, id, &pivots);
            if far.is_none_or(|(_, d)| near[pos].dist > d) {
                far = Some((pos, near[pos].dist));
            }
        }
        match far {
            Some((pos, _)) if pivots.len() < k => next = pos,
            _ => break,
        }
    }
    finish(meter, ids, pivot_pos, &is_pivot, near)
}

/// Order in which the spatial-approximation scan considers candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatOrder {
    /// Ascending distance from the node centre.
    Proximal,
    /// Descending distance from the node centre.
    Distal,
    /// Descending distance from the centre of the whole tree.
    Global,
}

/// The spatial-approximation scan: visit candidates in `order` and keep each
/// one that is strictly closer to the centre than to every pivot kept so far,
/// stopping once `cap` pivots are kept.
///
/// `centre_dist[pos]` is the distance of candidate `pos` to the node centre and
/// `order` lists candidate positions in scan order.
pub(crate) fn sat_assign(
    meter: &Meter<'_>,
    ids: &[u32],
    centre_dist: &[f64],
    order: &[usize],
    cap: Option<usize>,
) -> Assignment {
    let mut is_pivot = vec![false; ids.len()];
    let mut near = vec![Nearest::NONE; ids.len()];
    let mut pivots = Vec::new();
    let mut pivot_pos = Vec::new();
    for &pos in order {
        if cap.is_some_and(|c| pivots.len() >= c) {
            break;
        }
        near[pos].extend(meter, ids[pos], &pivots);
        if near[pos].dist > centre_dist[pos] {
            is_pivot[pos] = true;
            pivots.push(ids[pos]);
            pivot_pos.push(pos);
        }
    }
    finish(meter, ids, pivot_pos, &is_pivot, near)
}

/// Candidate positions sorted by `key` (ascending, or descending when
/// `descending`), ties broken by position.
pub(crate) fn scan_order(key: impl Fn(usize) -> f64, n: usize, descending: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let c = key(a).total_cmp(&key(b));
        (if descending { c.reverse() } else { c }).then(a.cmp(&b))
    });
    order
}

pub(crate) fn random_positions(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    sample(rng, n, k).into_vec()
}

/// `k` distinct candidates drawn uniformly under `seed`.
pub fn select_random(candidates: &[u32], k: usize, seed: u64) -> Result<Vec<u32>, SelectError> {
    check(candidates.len(), k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(random_positions(&mut rng, candidates.len(), k).into_iter().map(|p| candidates[p]).collect())
}

/// Greedy farthest-first traversal with a seeded random first pivot.
pub fn select_fft(space: &MetricSpace<'_>, candidates: &[u32], k: usize, seed: u64) -> Result<Vec<u32>, SelectError> {
    check(candidates.len(), k)?;
    let first = ChaCha8Rng::seed_from_u64(seed).random_range(0..candidates.len());
    select_fft_from(space, candidates, k, first)
}

/// Farthest-first traversal starting from `candidates[first]`.
pub fn select_fft_from(
    space: &MetricSpace<'_>,
    candidates: &[u32],
    k: usize,
    first: usize,
) -> Result<Vec<u32>, SelectError> {
    check(candidates.len(), k)?;
    let meter = Meter::new(space);
    Ok(fft_assign(&meter, candidates, k, first).pivots)
}

/// Spatial-approximation pivot selection around `centre`. For
/// [`SatOrder::Global`], `global_centre` is the centre of the whole tree (it
/// defaults to `centre`).
pub fn select_sat(
    space: &MetricSpace<'_>,
    candidates: &[u32],
    centre: u32,
    order: SatOrder,
    global_centre: Option<u32>,
    cap: Option<usize>,
) -> Vec<u32> {
    if candidates.is_empty() {
        return Vec::new();
    }
    let meter = Meter::new(space);
    let centre_dist: Vec<f64> = candidates.iter().map(|&c| meter.d(c, centre)).collect();
    let scan = match order {
        SatOrder::Proximal => scan_order(|p| centre_dist[p], candidates.len(), false),
        SatOrder::Distal => scan_order(|p| centre_dist[p], candidates.len(), true),
        SatOrder::Global => {
            let g = global_centre.unwrap_or(centre);
            let gd: Vec<f64> = candidates.iter().map(|&c| space.distance(c, g)).collect();
            scan_order(|p| gd[p], candidates.len(), true)
        }
    };
    sat_assign(&meter, candidates, &centre_dist, &scan, cap).pivots
}

fn check(available: usize, k: usize) -> Result<(), SelectError> {
    if k == 0 {
        Err(SelectError::ZeroPivots)
    } else if k > available {
        Err(SelectError::TooFewCandidates { k, available })
    } else {
        Ok(())
    }
}
