//! Exact similarity search in metric and supermetric spaces.
//!
//! Points are projected onto the plane of two reference points; in spaces with
//! the four-point property the planar distance bounds the true distance from
//! below, which licenses the Hilbert exclusion rule used by the trees in
//! [`index`].

pub mod data;
pub mod index;
pub mod metrics;
pub mod oracle;
pub mod planar;
pub mod space;

pub use data::{DataError, Dataset};
pub use index::{Index, IndexConfig, IndexError, QueryReport, Variant};
pub use metrics::{Metric, MetricError};
pub use planar::{Exclusion, PivotPair, PlanarPoint};
pub use space::MetricSpace;
