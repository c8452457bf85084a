//! Query-independent consistency priors for evidence tuples.
//!
//! Two alternative structural signals are available: pairwise connectivity in
//! a knowledge graph built over the chunks ([`graph`]) and geometric proximity
//! on the page ([`layout`]). [`PriorMode::None`] gives every tuple the same
//! prior, which reduces the posterior to the likelihood.

pub mod graph;
pub mod layout;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::FusionConfig;
use crate::scalar::Scalar;
use crate::types::Slots;

pub use graph::{aggregate_relation_weights, edge_probability, graph_prior, GraphEdgeStore, Relation};
pub use layout::{layout_prior, LayoutPrior, LayoutRecord, LayoutStore};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorMode {
    #[default]
    Graph,
    Layout,
    None,
}

impl std::fmt::Display for PriorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PriorMode::Graph => "graph",
            PriorMode::Layout => "layout",
            PriorMode::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PriorError {
    #[error("prior mode '{0}' needs its store, but none was supplied")]
    MissingStore(PriorMode),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct PriorValue<T> {
    pub value: T,
    /// The structural signal could not be evaluated and a fallback was used.
    pub signal_missing: bool,
}

impl<T> PriorValue<T> {
    fn known(value: T) -> Self {
        Self {
            value,
            signal_missing: false,
        }
    }
}

/// Read-only stores the priors draw from.
#[derive(Debug, Clone, Copy)]
pub struct PriorStores<'a, T> {
    pub graph: Option<&'a GraphEdgeStore<T>>,
    pub layout: Option<&'a LayoutStore<T>>,
}

impl<T> Default for PriorStores<'_, T> {
    fn default() -> Self {
        Self {
            graph: None,
            layout: None,
        }
    }
}

impl<'a, T> PriorStores<'a, T> {
    pub fn check(&self, mode: PriorMode) -> Result<(), PriorError> {
        match mode {
            PriorMode::Graph if self.graph.is_none() => Err(PriorError::MissingStore(mode)),
            PriorMode::Layout if self.layout.is_none() => Err(PriorError::MissingStore(mode)),
            _ => Ok(()),
        }
    }
}

/// Prior of a tuple under the selected strategy.
///
/// Tuples with fewer than two present slots have no structure to score and
/// get `config.default_prior`. A two-slot tuple in graph mode uses the single
/// edge probability between its slots. In layout mode a missing screenshot
/// makes the text page the pagination reference, and a missing text or image
/// box yields epsilon with `signal_missing` set.
pub fn prior_of_tuple<T: Scalar>(
    slots: &Slots<'_, T>,
    mode: PriorMode,
    stores: &PriorStores<'_, T>,
    config: &FusionConfig<T>,
) -> Result<PriorValue<T>, PriorError> {
    stores.check(mode)?;
    if mode == PriorMode::None {
        return Ok(PriorValue::known(T::one()));
    }
    if slots.len() < 2 {
        return Ok(PriorValue::known(config.default_prior));
    }
    match mode {
        PriorMode::Graph => {
            let store = stores.graph.expect("checked");
            let ids: Vec<&str> = slots.present().map(|c| c.chunk_id.as_str()).collect();
            let value = match ids.as_slice() {
                [a, b, c] => graph_prior(a, b, c, store, config),
                [a, b] => edge_probability(store.lookup(a, b), config),
                _ => unreachable!("two or three slots"),
            };
            Ok(PriorValue::known(value))
        }
        PriorMode::Layout => {
            let store = stores.layout.expect("checked");
            let unavailable = PriorValue {
                value: config.epsilon,
                signal_missing: true,
            };
            let (Some(t), Some(v)) = (slots.text, slots.image) else {
                return Ok(unavailable);
            };
            let (Some(t), Some(v)) = (store.get(&t.chunk_id), store.get(&v.chunk_id)) else {
                return Ok(unavailable);
            };
            let reference_page = match slots.screenshot {
                Some(s) => store.get(&s.chunk_id).map_or(s.page, |r| r.page),
                None => t.page,
            };
            let p = layout::layout_check(t, v, reference_page, config);
            Ok(PriorValue {
                value: p.value,
                signal_missing: p.bbox_missing,
            })
        }
        PriorMode::None => unreachable!(),
    }
}

/// Anything that can assign a prior to a tuple.
pub trait TuplePrior<T>: Sync {
    fn prior(&self, slots: &Slots<'_, T>, config: &FusionConfig<T>) -> PriorValue<T>;
}

/// [`prior_of_tuple`] bound to a mode and stores that were checked up front.
#[derive(Debug, Clone, Copy)]
pub struct ModePrior<'a, T> {
    mode: PriorMode,
    stores: PriorStores<'a, T>,
}

impl<'a, T> ModePrior<'a, T> {
    pub fn new(mode: PriorMode, stores: PriorStores<'a, T>) -> Result<Self, PriorError> {
        stores.check(mode)?;
        Ok(Self { mode, stores })
    }

    pub fn uniform() -> Self {
        Self {
            mode: PriorMode::None,
            stores: PriorStores::default(),
        }
    }

    pub fn mode(&self) -> PriorMode {
        self.mode
    }
}

impl<T: Scalar> TuplePrior<T> for ModePrior<'_, T> {
    fn prior(&self, slots: &Slots<'_, T>, config: &FusionConfig<T>) -> PriorValue<T> {
        prior_of_tuple(slots, self.mode, &self.stores, config).expect("stores checked at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BBox, Candidate, Modality};

    fn cand(id: &str, m: Modality, page: u32) -> Candidate<f64> {
        Candidate::new(id, "d", m, page, 0.5)
    }

    fn layout(id: &str, page: u32, x: f64) -> LayoutRecord<f64> {
        LayoutRecord::new(id, "d", page, Some(BBox::new(x, 0.0, x + 1.0, 1.0).unwrap()), 10.0, 10.0).unwrap()
    }

    #[test]
    fn uniform_ignores_tuple() {
        let t = cand("t", Modality::Text, 0);
        let slots = Slots::new(Some(&t), None, None);
        let p = prior_of_tuple(&slots, PriorMode::None, &PriorStores::default(), &FusionConfig::default()).unwrap();
        assert_eq!(p.value, 1.0);
    }

    #[test]
    fn missing_store_is_an_error() {
        let t = cand("t", Modality::Text, 0);
        let slots = Slots::new(Some(&t), None, None);
        let cfg = FusionConfig::default();
        assert_eq!(
            prior_of_tuple(&slots, PriorMode::Graph, &PriorStores::default(), &cfg),
            Err(PriorError::MissingStore(PriorMode::Graph))
        );
        assert!(ModePrior::<f64>::new(PriorMode::Layout, PriorStores::default()).is_err());
    }

    #[test]
    fn graph_modes() {
        let g = aggregate_relation_weights(vec![Relation::new("t", "v", Some(10.0))]).unwrap();
        let stores = PriorStores { graph: Some(&g), layout: None };
        let cfg = FusionConfig::default();
        let (t, v, s) = (cand("t", Modality::Text, 0), cand("v", Modality::Image, 0), cand("s", Modality::Screenshot, 0));
        let e = 1.0 - (-1.0f64).exp();

        let full = prior_of_tuple(&Slots::new(Some(&t), Some(&v), Some(&s)), PriorMode::Graph, &stores, &cfg).unwrap();
        assert!((full.value - e / 3.0).abs() < 1e-12);
        let pair = prior_of_tuple(&Slots::new(Some(&t), Some(&v), None), PriorMode::Graph, &stores, &cfg).unwrap();
        assert!((pair.value - e).abs() < 1e-12);
        let single = prior_of_tuple(&Slots::new(None, None, Some(&s)), PriorMode::Graph, &stores, &cfg).unwrap();
        assert_eq!(single.value, cfg.default_prior);

        let empty = GraphEdgeStore::default();
        let stores = PriorStores { graph: Some(&empty), layout: None };
        let none = prior_of_tuple(&Slots::new(Some(&t), Some(&v), Some(&s)), PriorMode::Graph, &stores, &cfg).unwrap();
        assert_eq!(none.value, 0.0);
    }

    #[test]
    fn layout_modes() {
        let store = LayoutStore::from_records(vec![layout("t", 1, 0.0), layout("v", 1, 2.0), layout("far", 7, 0.0)]).unwrap();
        let stores = PriorStores { graph: None, layout: Some(&store) };
        let cfg = FusionConfig::default();
        let t = cand("t", Modality::Text, 1);
        let v = cand("v", Modality::Image, 1);
        let s_near = cand("s", Modality::Screenshot, 2);
        let s_far = cand("far", Modality::Screenshot, 0);

        let p = prior_of_tuple(&Slots::new(Some(&t), Some(&v), Some(&s_near)), PriorMode::Layout, &stores, &cfg).unwrap();
        assert_eq!(p, PriorValue { value: 1.0, signal_missing: false });
        // The store's page (7) wins over the candidate's page (0).
        let p = prior_of_tuple(&Slots::new(Some(&t), Some(&v), Some(&s_far)), PriorMode::Layout, &stores, &cfg).unwrap();
        assert_eq!(p.value, 0.1);
        let p = prior_of_tuple(&Slots::new(Some(&t), Some(&v), None), PriorMode::Layout, &stores, &cfg).unwrap();
        assert_eq!(p.value, 1.0);
        let p = prior_of_tuple(&Slots::new(Some(&t), None, Some(&s_near)), PriorMode::Layout, &stores, &cfg).unwrap();
        assert_eq!(p, PriorValue { value: 0.1, signal_missing: true });
        let unknown = cand("nowhere", Modality::Image, 1);
        let p = prior_of_tuple(&Slots::new(Some(&t), Some(&unknown), None), PriorMode::Layout, &stores, &cfg).unwrap();
        assert!(p.signal_missing);
    }
}
