//! Storage needed for the pivot-to-pivot distance tables of a multi-way
//! hyperplane tree, at 4 bytes per stored distance.

use supermetric::index::Arity;

pub const BYTES_PER_DISTANCE: f64 = 4.0;

/// Pivots per node over `n` objects: `max(2, floor(ln n))` for the log policy.
pub fn pivots_per_node(n: f64, arity: Arity) -> usize {
    match arity {
        Arity::Log => (n.ln().floor().max(2.0)) as usize,
        other => other.of(2),
    }
}

/// Bytes of a single node's table: `C(p, 2) * 4`.
pub fn node_bytes(p: usize) -> f64 {
    (p * p.saturating_sub(1) / 2) as f64 * BYTES_PER_DISTANCE
}

/// Total table bytes for a tree over `n` objects:
/// `0` for `n <= 2`, else `C(p,2)*4 + p * overhead((n - p) / p)`.
pub fn overhead(n: f64, arity: Arity) -> f64 {
    if n <= 2.0 {
        return 0.0;
    }
    let p = pivots_per_node(n, arity);
    node_bytes(p) + p as f64 * overhead((n - p as f64) / p as f64, arity)
}

pub fn overhead_per_object(n: f64, arity: Arity) -> f64 {
    overhead(n, arity) / n
}
