//! Monotone hyperplane trees, unbalanced (nearer-pivot split) and balanced
//! (median split of the planar X offset). Each child reuses one pivot of its
//! parent: the left child keeps `p1`, the right child keeps `p2`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::select::Meter;
use super::{far_position, QueryCtx, TwoPivotChoice};
use crate::planar::{cover_radius_excludes, planar_offset, Exclusion};

pub(crate) enum Node {
    Leaf(Vec<u32>),
    Internal(Box<Internal>),
}

pub(crate) struct Internal {
    pub p2: u32,
    pub delta: f64,
    /// Split value on the planar X offset; members with offset `< split` go
    /// left. Zero for the unbalanced tree, whose split is the bisector itself.
    pub split: f64,
    /// Cover radii of the left child around `p1` and the right child around `p2`.
    pub cover: [f64; 2],
    pub left: Node,
    pub right: Node,
}

pub(crate) struct MonotoneTree {
    pub root_pivot: Option<u32>,
    pub root: Node,
    pub balanced: bool,
}

pub(crate) struct Builder<'m, 'a> {
    pub meter: &'m Meter<'a>,
    pub rng: ChaCha8Rng,
    pub choice: TwoPivotChoice,
    pub balanced: bool,
    pub leaf_capacity: usize,
}

impl Builder<'_, '_> {
    pub(crate) fn build(mut self, ids: Vec<u32>) -> MonotoneTree {
        if ids.is_empty() {
            return MonotoneTree { root_pivot: None, root: Node::Leaf(ids), balanced: self.balanced };
        }
        let p1 = ids[self.rng.random_range(0..ids.len())];
        let rest: Vec<u32> = ids.into_iter().filter(|&s| s != p1).collect();
        let d1: Vec<f64> = rest.iter().map(|&s| self.meter.d(s, p1)).collect();
        let root = self.node(rest, d1);
        MonotoneTree { root_pivot: Some(p1), root, balanced: self.balanced }
    }

    /// `d1` holds each point's distance to the pivot inherited from the parent.
    fn node(&mut self, ids: Vec<u32>, d1: Vec<f64>) -> Node {
        if ids.len() <= self.leaf_capacity {
            return Node::Leaf(ids);
        }
        let pos = match self.choice {
            TwoPivotChoice::Rand => self.rng.random_range(0..ids.len()),
            TwoPivotChoice::Far => far_position(&d1),
        };
        let p2 = ids[pos];
        let delta = d1[pos];
        let mut rest = Vec::with_capacity(ids.len() - 1);
        let mut rd1 = Vec::with_capacity(ids.len() - 1);
        let mut rd2 = Vec::with_capacity(ids.len() - 1);
        for (i, (&s, &a)) in ids.iter().zip(&d1).enumerate() {
            if i != pos {
                rest.push(s);
                rd1.push(a);
                rd2.push(self.meter.d(s, p2));
            }
        }
        let (left_side, split) = if delta == 0.0 {
            // Coincident pivots give no hyperplane; split by position.
            let half = rest.len() / 2;
            ((0..rest.len()).map(|i| i < half).collect::<Vec<_>>(), f64::NAN)
        } else if self.balanced {
            let x: Vec<f64> = rd1.iter().zip(&rd2).map(|(&a, &b)| planar_offset(a, b, delta)).collect();
            let m = upper_median(&x);
            (x.iter().map(|&v| v < m).collect(), m)
        } else {
            (rd1.iter().zip(&rd2).map(|(a, b)| a <= b).collect(), 0.0)
        };
        let (mut l, mut ld, mut r, mut rdist) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..rest.len() {
            if left_side[i] {
                l.push(rest[i]);
                ld.push(rd1[i]);
            } else {
                r.push(rest[i]);
                rdist.push(rd2[i]);
            }
        }
        let cover = [max(&ld), max(&rdist)];
        let left = self.node(l, ld);
        let right = self.node(r, rdist);
        Node::Internal(Box::new(Internal { p2, delta, split, cover, left, right }))
    }
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Element at index `len / 2` of the sorted values.
pub(crate) fn upper_median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    let mid = s.len() / 2;
    *s.select_nth_unstable_by(mid, f64::total_cmp).1
}

impl MonotoneTree {
    pub(crate) fn query(&self, ctx: &mut QueryCtx<'_>) {
        if let Some(p1) = self.root_pivot {
            let dq1 = ctx.probe(p1);
            query_node(&self.root, ctx, dq1, self.balanced);
        }
    }

    pub(crate) fn members(&self, out: &mut Vec<u32>) {
        out.extend(self.root_pivot);
        collect(&self.root, out);
    }
}

fn collect(node: &Node, out: &mut Vec<u32>) {
    match node {
        Node::Leaf(ids) => out.extend_from_slice(ids),
        Node::Internal(n) => {
            out.push(n.p2);
            collect(&n.left, out);
            collect(&n.right, out);
        }
    }
}

/// Which children of a monotone node may hold results, given the query's
/// distances to the two pivots.
pub(crate) fn monotone_sides(
    dq1: f64,
    dq2: f64,
    delta: f64,
    split: f64,
    balanced: bool,
    t: f64,
    exclusion: Exclusion,
) -> (bool, bool) {
    if split.is_nan() {
        return (true, true);
    }
    let (mut skip_left, mut skip_right);
    if !balanced {
        skip_left = dq1 - dq2 > 2.0 * t;
        skip_right = dq2 - dq1 > 2.0 * t;
    } else {
        // Bounds of the planar offset over the annulus intersection that can
        // hold results; valid in any metric space.
        let (lo1, hi1) = ((dq1 - t).max(0.0), dq1 + t);
        let (lo2, hi2) = ((dq2 - t).max(0.0), dq2 + t);
        skip_right = (hi1 * hi1 - lo2 * lo2) / (2.0 * delta) < split;
        skip_left = (lo1 * lo1 - hi2 * hi2) / (2.0 * delta) > split;
    }
    if exclusion == Exclusion::Hilbert {
        let qx = planar_offset(dq1, dq2, delta);
        skip_right |= qx < split - t;
        skip_left |= qx > split + t;
    }
    (!skip_left, !skip_right)
}

fn query_node(node: &Node, ctx: &mut QueryCtx<'_>, dq1: f64, balanced: bool) {
    ctx.visited += 1;
    let n = match node {
        Node::Leaf(ids) => {
            for &s in ids {
                ctx.probe(s);
            }
            return;
        }
        Node::Internal(n) => n,
    };
    let dq2 = ctx.probe(n.p2);
    let (left, right) = monotone_sides(dq1, dq2, n.delta, n.split, balanced, ctx.t, ctx.exclusion);
    if left && n.cover[0] != f64::NEG_INFINITY && !cover_radius_excludes(dq1, n.cover[0], ctx.t) {
        query_node(&n.left, ctx, dq1, balanced);
    }
    if right && n.cover[1] != f64::NEG_INFINITY && !cover_radius_excludes(dq2, n.cover[1], ctx.t) {
        query_node(&n.right, ctx, dq2, balanced);
    }
}
