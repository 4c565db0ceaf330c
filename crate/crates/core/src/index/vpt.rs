//! Vantage-point tree with random vantage points and a median-ball split.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::select::Meter;
use super::QueryCtx;

pub(crate) enum Node {
    Leaf(Vec<u32>),
    Internal(Box<Internal>),
}

pub(crate) struct Internal {
    pub pivot: u32,
    /// Largest pivot distance inside the ball; the inside half holds members
    /// with distance `<= mu`, the outside half those with distance `>= mu`.
    pub mu: f64,
    pub inside: Node,
    pub outside: Node,
}

pub(crate) struct Builder<'m, 'a> {
    pub meter: &'m Meter<'a>,
    pub rng: ChaCha8Rng,
    pub leaf_capacity: usize,
}

impl Builder<'_, '_> {
    pub(crate) fn build(mut self, ids: Vec<u32>) -> Node {
        self.node(ids)
    }

    fn node(&mut self, ids: Vec<u32>) -> Node {
        if ids.len() <= self.leaf_capacity {
            return Node::Leaf(ids);
        }
        let pos = self.rng.random_range(0..ids.len());
        let pivot = ids[pos];
        let mut rest: Vec<(f64, u32)> = ids
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != pos)
            .map(|(_, &s)| (self.meter.d(s, pivot), s))
            .collect();
        let k = rest.len().div_ceil(2);
        rest.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mu = rest[k - 1].0;
        let outside = rest.split_off(k);
        let inside = self.node(rest.into_iter().map(|(_, s)| s).collect());
        let outside = self.node(outside.into_iter().map(|(_, s)| s).collect());
        Node::Internal(Box::new(Internal { pivot, mu, inside, outside }))
    }
}

pub(crate) fn query(node: &Node, ctx: &mut QueryCtx<'_>) {
    ctx.visited += 1;
    match node {
        Node::Leaf(ids) => {
            for &s in ids {
                ctx.probe(s);
            }
        }
        Node::Internal(n) => {
            let dq = ctx.probe(n.pivot);
            if dq - ctx.t <= n.mu {
                query(&n.inside, ctx);
            }
            if dq + ctx.t >= n.mu {
                query(&n.outside, ctx);
            }
        }
    }
}

pub(crate) fn collect(node: &Node, out: &mut Vec<u32>) {
    match node {
        Node::Leaf(ids) => out.extend_from_slice(ids),
        Node::Internal(n) => {
            out.push(n.pivot);
            collect(&n.inside, out);
            collect(&n.outside, out);
        }
    }
}
