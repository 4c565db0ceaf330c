//! Linear regression tree: each node projects its subset onto the plane of
//! two pivots, fits a least-squares line, rotates the line onto the X-axis and
//! splits at the median rotated X. Both children inherit `p1`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::monotone::upper_median;
use super::select::{random_positions, Meter};
use super::{far_position, QueryCtx, TwoPivotChoice};
use crate::planar::{fit_line, project_unchecked, rotate, Exclusion, PlanarPoint, RotationParams};

pub(crate) enum Node {
    Leaf(Vec<u32>),
    Internal(Box<Internal>),
}

pub(crate) struct Internal {
    pub p2: u32,
    pub delta: f64,
    pub params: RotationParams,
    /// Members with rotated X `< split` go left; NaN when the pivots coincide.
    pub split: f64,
    pub left: Node,
    pub right: Node,
}

pub(crate) struct LrtTree {
    pub p1: Option<u32>,
    pub root: Node,
}

pub(crate) struct Builder<'m, 'a> {
    pub meter: &'m Meter<'a>,
    pub rng: ChaCha8Rng,
    pub choice: TwoPivotChoice,
    pub leaf_capacity: usize,
    pub fit_sample_cap: Option<usize>,
}

impl Builder<'_, '_> {
    pub(crate) fn build(mut self, ids: Vec<u32>) -> LrtTree {
        if ids.is_empty() {
            return LrtTree { p1: None, root: Node::Leaf(ids) };
        }
        let p1 = ids[self.rng.random_range(0..ids.len())];
        let rest: Vec<u32> = ids.into_iter().filter(|&s| s != p1).collect();
        let d1: Vec<f64> = rest.iter().map(|&s| self.meter.d(s, p1)).collect();
        let root = self.node(rest, d1);
        LrtTree { p1: Some(p1), root }
    }

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
        let mut points = Vec::with_capacity(ids.len() - 1);
        for (i, (&s, &a)) in ids.iter().zip(&d1).enumerate() {
            if i == pos {
                continue;
            }
            let b = self.meter.d(s, p2);
            rest.push(s);
            rd1.push(a);
            if delta > 0.0 {
                points.push(project_unchecked(a, b, delta));
            }
        }
        let (params, left_side, split) = if delta == 0.0 {
            let half = rest.len() / 2;
            (RotationParams::identity(), (0..rest.len()).map(|i| i < half).collect::<Vec<_>>(), f64::NAN)
        } else {
            let params = self.fit(&points);
            let rx: Vec<f64> = points.iter().map(|p| rotate(*p, &params).0).collect();
            let m = upper_median(&rx);
            (params, rx.iter().map(|&v| v < m).collect(), m)
        };
        let (mut l, mut ld, mut r, mut rdist) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..rest.len() {
            if left_side[i] {
                l.push(rest[i]);
                ld.push(rd1[i]);
            } else {
                r.push(rest[i]);
                rdist.push(rd1[i]);
            }
        }
        let left = self.node(l, ld);
        let right = self.node(r, rdist);
        Node::Internal(Box::new(Internal { p2, delta, params, split, left, right }))
    }

    fn fit(&mut self, points: &[PlanarPoint]) -> RotationParams {
        let fitted = match self.fit_sample_cap {
            Some(cap) if points.len() > cap => {
                let sample: Vec<PlanarPoint> =
                    random_positions(&mut self.rng, points.len(), cap).into_iter().map(|i| points[i]).collect();
                fit_line(&sample)
            }
            _ => fit_line(points),
        };
        fitted.unwrap_or_else(|_| RotationParams::identity())
    }
}

impl LrtTree {
    pub(crate) fn query(&self, ctx: &mut QueryCtx<'_>) {
        if let Some(p1) = self.p1 {
            let dq1 = ctx.probe(p1);
            query_node(&self.root, ctx, dq1);
        }
    }

    pub(crate) fn members(&self, out: &mut Vec<u32>) {
        out.extend(self.p1);
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

fn query_node(node: &Node, ctx: &mut QueryCtx<'_>, dq1: f64) {
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
    let (mut left, mut right) = (true, true);
    // The rotated-plane split carries no guarantee without the four-point
    // property, so the hyperbolic mode searches both sides.
    if ctx.exclusion == Exclusion::Hilbert && !n.split.is_nan() {
        let (qx, _) = rotate(project_unchecked(dq1, dq2, n.delta), &n.params);
        if qx < n.split - ctx.t {
            right = false;
        } else if qx > n.split + ctx.t {
            left = false;
        }
    }
    if left {
        query_node(&n.left, ctx, dq1);
    }
    if right {
        query_node(&n.right, ctx, dq1);
    }
}
