//! A dataset paired with a metric, in the canonical form the metric is
//! evaluated on.

use std::borrow::Cow;

use crate::data::Dataset;
use crate::metrics::{Metric, MetricError};

/// Dataset rows validated and normalized for one metric.
///
/// Rows are addressed by `u32` ids, their position in the source dataset.
#[derive(Debug, Clone)]
pub struct MetricSpace<'a> {
    metric: Metric,
    dim: usize,
    values: Cow<'a, [f64]>,
}

impl<'a> MetricSpace<'a> {
    pub fn new(dataset: &'a Dataset, metric: Metric) -> Result<Self, MetricError> {
        assert!(dataset.len() <= u32::MAX as usize, "dataset too large for u32 ids");
        let dim = dataset.dim();
        let values = if metric.requires_probability_normalization() || needs_unit_length(&metric) {
            let mut out = Vec::with_capacity(dataset.values().len());
            for row in dataset.rows() {
                out.extend(metric.normalize(row)?);
            }
            Cow::Owned(out)
        } else {
            Cow::Borrowed(dataset.values())
        };
        Ok(MetricSpace { metric, dim, values })
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn point(&self, i: u32) -> &[f64] {
        let i = i as usize;
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn distance(&self, i: u32, j: u32) -> f64 {
        self.metric.prepared_distance(self.point(i), self.point(j))
    }

    /// Distance from a query prepared with [`MetricSpace::prepare_query`].
    #[inline]
    pub fn distance_to(&self, query: &[f64], i: u32) -> f64 {
        self.metric.prepared_distance(query, self.point(i))
    }

    pub fn prepare_query(&self, query: &[f64]) -> Result<Vec<f64>, MetricError> {
        if query.len() != self.dim {
            return Err(MetricError::DimensionMismatch { left: query.len(), right: self.dim });
        }
        self.metric.normalize(query)
    }
}

fn needs_unit_length(metric: &Metric) -> bool {
    match metric {
        Metric::Cosine => true,
        Metric::Power { base, .. } => needs_unit_length(base),
        _ => false,
    }
}
