//! Knowledge-graph connectivity prior.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::FusionConfig;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("relation {u} -- {v} has invalid weight {weight}")]
    NegativeWeight { u: String, v: String, weight: f64 },
}

/// One knowledge-graph relation between two chunks. A missing weight counts as 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Relation<T> {
    pub u: String,
    pub v: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<T>,
}

impl<T> Relation<T> {
    pub fn new(u: impl Into<String>, v: impl Into<String>, weight: Option<T>) -> Self {
        Self {
            u: u.into(),
            v: v.into(),
            weight,
        }
    }
}

/// Aggregated relation weight per unordered chunk pair.
///
/// Each pair is stored under both orientations so lookups borrow.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphEdgeStore<T> {
    adjacency: HashMap<String, HashMap<String, T>>,
    pairs: usize,
}

impl<T: Scalar> GraphEdgeStore<T> {
    /// Aggregated weight of the pair; zero when no relation connects them.
    pub fn lookup(&self, u: &str, v: &str) -> T {
        self.adjacency
            .get(u)
            .and_then(|row| row.get(v))
            .copied()
            .unwrap_or_else(T::zero)
    }

    /// Number of distinct unordered pairs with at least one relation.
    pub fn len(&self) -> usize {
        self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs == 0
    }

    fn add(&mut self, u: &str, v: &str, w: T) {
        let row = self.adjacency.entry(u.to_string()).or_default();
        if !row.contains_key(v) {
            self.pairs += 1;
        }
        let slot = row.entry(v.to_string()).or_insert_with(T::zero);
        *slot = *slot + w;
        if u != v {
            let back = self.adjacency.entry(v.to_string()).or_default();
            let slot = back.entry(u.to_string()).or_insert_with(T::zero);
            *slot = *slot + w;
        }
    }
}

/// Sums relation weights per unordered chunk pair.
pub fn aggregate_relation_weights<T: Scalar>(
    relations: impl IntoIterator<Item = Relation<T>>,
) -> Result<GraphEdgeStore<T>, GraphError> {
    let mut store = GraphEdgeStore::default();
    for r in relations {
        let w = r.weight.unwrap_or_else(T::one);
        if !w.is_finite() || w < T::zero() {
            return Err(GraphError::NegativeWeight {
                u: r.u,
                v: r.v,
                weight: w.to_f64().unwrap_or(f64::NAN),
            });
        }
        store.add(&r.u, &r.v, w);
    }
    Ok(store)
}

/// Saturating map from aggregated weight to connection probability, `1 - exp(-kappa * s_uv)`.
///
/// Stays strictly below one even where `exp` underflows.
pub fn edge_probability<T: Scalar>(s_uv: T, config: &FusionConfig<T>) -> T {
    let below_one = T::one() - T::epsilon() * T::half();
    let p = -(-(config.kappa * s_uv)).exp_m1();
    p.max(T::zero()).min(below_one)
}

/// Mean pairwise edge probability over the three chunks of a tuple.
pub fn graph_prior<T: Scalar>(
    e1: &str,
    e2: &str,
    e3: &str,
    store: &GraphEdgeStore<T>,
    config: &FusionConfig<T>,
) -> T {
    let p = |a: &str, b: &str| edge_probability(store.lookup(a, b), config);
    mean_sorted(&mut [p(e1, e2), p(e2, e3), p(e1, e3)])
}

/// Mean with the terms summed in ascending order, so any permutation of the
/// inputs gives the same bits.
pub(crate) fn mean_sorted<T: Scalar>(values: &mut [T]) -> T {
    values.sort_by(|a, b| a.order(b));
    let sum = values.iter().fold(T::zero(), |acc, &v| acc + v);
    sum / T::from_usize(values.len()).expect("small length")
}
