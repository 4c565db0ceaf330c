//! Multi-way partition trees: hyperplane trees and spatial-approximation trees.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::select::{assign, fft_assign, random_positions, sat_assign, scan_order, Assignment, Meter};
use super::{side_excluded, Arity, QueryCtx};
use crate::planar::cover_radius_excludes;

/// Member ids of one child with their distances to its pivot.
type ChildSet = (Vec<u32>, Vec<f64>);

pub(crate) enum Node {
    Leaf(Vec<u32>),
    Internal(Box<Internal>),
}

pub(crate) struct Internal {
    pub pivots: Vec<u32>,
    pub children: Vec<Node>,
    /// Maximum distance from each pivot to the members of its partition;
    /// `-inf` for an empty partition.
    pub cover_radii: Vec<f64>,
    /// Pivot-pair distances, packed upper triangle in row order.
    pub inter_pivot: Vec<f64>,
    /// Pure SATs only: row `i` holds the distances from pivot `i` to the chain
    /// of centres from the root down to this node.
    pub ancestors: Vec<f64>,
}

#[inline]
pub(crate) fn packed(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl Internal {
    fn pair(&self, i: usize, j: usize) -> f64 {
        let n = self.pivots.len();
        if i < j {
            self.inter_pivot[packed(n, i, j)]
        } else {
            self.inter_pivot[packed(n, j, i)]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum HptSelection {
    Fft,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SatScan {
    Proximal,
    Distal,
    Global,
}

pub(crate) enum Kind {
    Hpt(HptSelection),
    Sat { scan: SatScan, pure: bool },
}

pub(crate) struct PartitionTree {
    /// SAT root centre, tested before the root node.
    pub centre: Option<u32>,
    pub root: Node,
    pub pure: bool,
}

pub(crate) struct Builder<'m, 'a> {
    pub meter: &'m Meter<'a>,
    pub rng: ChaCha8Rng,
    pub arity: Arity,
    pub leaf_capacity: Option<usize>,
    /// Distance of every point to the SAT root centre (global scan order).
    global: Vec<f64>,
}

const OUTLIER_SAMPLE: usize = 100;

impl<'m, 'a> Builder<'m, 'a> {
    pub(crate) fn new(meter: &'m Meter<'a>, rng: ChaCha8Rng, arity: Arity, leaf_capacity: Option<usize>) -> Self {
        Builder { meter, rng, arity, leaf_capacity, global: Vec::new() }
    }

    fn is_leaf(&self, len: usize, arity: usize) -> bool {
        len <= self.leaf_capacity.unwrap_or(arity)
    }

    pub(crate) fn build(mut self, ids: Vec<u32>, kind: Kind) -> PartitionTree {
        match kind {
            Kind::Hpt(sel) => PartitionTree { centre: None, root: self.hpt(ids, sel), pure: false },
            Kind::Sat { scan, pure } => {
                if ids.is_empty() {
                    return PartitionTree { centre: None, root: Node::Leaf(ids), pure };
                }
                let centre = self.outlier(&ids);
                let rest: Vec<u32> = ids.into_iter().filter(|&i| i != centre).collect();
                let dc: Vec<f64> = rest.iter().map(|&s| self.meter.d(s, centre)).collect();
                if scan == SatScan::Global {
                    self.global = vec![0.0; self.meter.len()];
                    for (&s, &d) in rest.iter().zip(&dc) {
                        self.global[s as usize] = d;
                    }
                }
                let mut chain = vec![centre];
                let root = self.sat(rest, dc, &mut chain, scan, pure);
                PartitionTree { centre: Some(centre), root, pure }
            }
        }
    }

    /// A point far from a random one, judged over a bounded sample.
    fn outlier(&mut self, ids: &[u32]) -> u32 {
        let r = ids[self.rng.random_range(0..ids.len())];
        let k = OUTLIER_SAMPLE.min(ids.len());
        let mut best = (r, f64::NEG_INFINITY);
        for pos in random_positions(&mut self.rng, ids.len(), k) {
            let s = ids[pos];
            if s == r {
                continue;
            }
            let d = self.meter.d(r, s);
            if d > best.1 {
                best = (s, d);
            }
        }
        best.0
    }

    fn hpt(&mut self, ids: Vec<u32>, sel: HptSelection) -> Node {
        let arity = self.arity.of(ids.len());
        if self.is_leaf(ids.len(), arity) {
            return Node::Leaf(ids);
        }
        let arity = arity.min(ids.len());
        let a = match sel {
            HptSelection::Fft => {
                let first = self.rng.random_range(0..ids.len());
                fft_assign(self.meter, &ids, arity, first)
            }
            HptSelection::Random => {
                let pos = random_positions(&mut self.rng, ids.len(), arity);
                assign(self.meter, &ids, &pos)
            }
        };
        let (mut internal, groups) = self.internal(&ids, a, &[]);
        internal.children = groups.into_iter().map(|(g, _)| self.hpt(g, sel)).collect();
        Node::Internal(Box::new(internal))
    }

    fn sat(&mut self, ids: Vec<u32>, dc: Vec<f64>, chain: &mut Vec<u32>, scan: SatScan, pure: bool) -> Node {
        let cap = if pure { None } else { Some(self.arity.of(ids.len())) };
        if self.is_leaf(ids.len(), cap.unwrap_or(2)) {
            return Node::Leaf(ids);
        }
        let order = match scan {
            SatScan::Proximal => scan_order(|p| dc[p], ids.len(), false),
            SatScan::Distal => scan_order(|p| dc[p], ids.len(), true),
            SatScan::Global => scan_order(|p| self.global[ids[p] as usize], ids.len(), true),
        };
        let a = sat_assign(self.meter, &ids, &dc, &order, cap);
        let anc: &[u32] = if pure { &chain[..] } else { &[] };
        let centre_dist: Vec<Option<f64>> = a.pivot_pos.iter().map(|&pos| Some(dc[pos])).collect();
        let (mut internal, groups) = self.internal_with(&ids, a, anc, &centre_dist);
        let mut children = Vec::with_capacity(groups.len());
        for (i, (g, gd)) in groups.into_iter().enumerate() {
            chain.push(internal.pivots[i]);
            children.push(self.sat(g, gd, chain, scan, pure));
            chain.pop();
        }
        internal.children = children;
        Node::Internal(Box::new(internal))
    }

    fn internal(&mut self, ids: &[u32], a: Assignment, anc: &[u32]) -> (Internal, Vec<ChildSet>) {
        let none = vec![None; a.pivots.len()];
        self.internal_with(ids, a, anc, &none)
    }

    /// Shared node assembly. `known[i]` is pivot `i`'s already measured
    /// distance to the last entry of `anc`.
    fn internal_with(
        &mut self,
        ids: &[u32],
        a: Assignment,
        anc: &[u32],
        known: &[Option<f64>],
    ) -> (Internal, Vec<ChildSet>) {
        let groups = a.groups(ids);
        let cover_radii = groups.iter().map(|(_, d)| d.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
        let n = a.pivots.len();
        let mut inter_pivot = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                inter_pivot.push(self.meter.d(a.pivots[i], a.pivots[j]));
            }
        }
        let mut ancestors = Vec::with_capacity(n * anc.len());
        for (i, &p) in a.pivots.iter().enumerate() {
            for (k, &c) in anc.iter().enumerate() {
                let d = match known[i] {
                    Some(d) if k + 1 == anc.len() => d,
                    _ => self.meter.d(p, c),
                };
                ancestors.push(d);
            }
        }
        let internal = Internal { pivots: a.pivots, children: Vec::new(), cover_radii, inter_pivot, ancestors };
        (internal, groups)
    }
}

impl PartitionTree {
    pub(crate) fn query(&self, ctx: &mut QueryCtx<'_>) {
        let mut chain = Vec::new();
        if let Some(c) = self.centre {
            let d = ctx.probe(c);
            chain.push(d);
        }
        query_node(&self.root, ctx, self.pure, &mut chain);
    }

    pub(crate) fn members(&self, out: &mut Vec<u32>) {
        out.extend(self.centre);
        collect(&self.root, out);
    }

    pub(crate) fn root_arity(&self) -> Option<usize> {
        match &self.root {
            Node::Leaf(_) => None,
            Node::Internal(n) => Some(n.pivots.len()),
        }
    }

    pub(crate) fn root(&self) -> &Node {
        &self.root
    }
}

fn collect(node: &Node, out: &mut Vec<u32>) {
    match node {
        Node::Leaf(ids) => out.extend_from_slice(ids),
        Node::Internal(n) => {
            out.extend_from_slice(&n.pivots);
            for c in &n.children {
                collect(c, out);
            }
        }
    }
}

fn query_node(node: &Node, ctx: &mut QueryCtx<'_>, pure: bool, chain: &mut Vec<f64>) {
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
    let k = n.pivots.len();
    let dq: Vec<f64> = n.pivots.iter().map(|&p| ctx.probe(p)).collect();
    let depth = chain.len();
    for i in 0..k {
        if n.cover_radii[i] == f64::NEG_INFINITY || cover_radius_excludes(dq[i], n.cover_radii[i], ctx.t) {
            continue;
        }
        let by_sibling = (0..k).any(|j| j != i && side_excluded(dq[i], dq[j], n.pair(i, j), ctx.t, ctx.exclusion));
        if by_sibling {
            continue;
        }
        if pure {
            let row = &n.ancestors[i * depth..(i + 1) * depth];
            if chain.iter().zip(row).any(|(&da, &delta)| side_excluded(dq[i], da, delta, ctx.t, ctx.exclusion)) {
                continue;
            }
            chain.push(dq[i]);
            query_node(&n.children[i], ctx, pure, chain);
            chain.pop();
        } else {
            query_node(&n.children[i], ctx, pure, chain);
        }
    }
}
