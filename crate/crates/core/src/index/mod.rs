//! Exact per-modality vector search.

pub mod provider;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::types::{BBox, Candidate, Modality};

pub use provider::{embed, EmbedError, HttpTransport, OfflineProvider, ProviderConfig, RemoteProvider, Transport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error("vector of {chunk_id} has {found} dimensions, expected {expected}")]
    DimensionMismatch {
        chunk_id: String,
        expected: usize,
        found: usize,
    },
    #[error("chunk {0} appears more than once")]
    DuplicateChunk(String),
    #[error("vector of {0} has zero norm or non-finite components")]
    ZeroVector(String),
    #[error("record {chunk_id} is {found}, index holds {expected}")]
    ModalityMismatch {
        chunk_id: String,
        expected: Modality,
        found: Modality,
    },
    #[error("index is empty")]
    EmptyIndex,
    #[error("k must be at least 1")]
    InvalidK,
}

/// A chunk with its embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct EmbeddingRecord<T> {
    pub chunk_id: String,
    pub doc_id: String,
    pub modality: Modality,
    pub page: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox<T>>,
    pub vector: Vec<T>,
}

/// Brute-force cosine index over one modality. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct ModalityIndex<T> {
    modality: Modality,
    dimensionality: usize,
    records: Vec<EmbeddingRecord<T>>,
}

fn norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

/// Cosine similarity of two equal-length vectors. Zero when either has zero norm.
pub fn cosine_similarity<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let dot = a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    let denom = norm(a) * norm(b);
    if denom > T::zero() {
        dot / denom
    } else {
        T::zero()
    }
}

fn check_vector<T: Scalar>(chunk_id: &str, v: &[T]) -> Result<(), IndexError> {
    let n = norm(v);
    if !n.is_finite() || n <= T::zero() {
        return Err(IndexError::ZeroVector(chunk_id.to_string()));
    }
    Ok(())
}

/// Validates and indexes records of a single modality, keeping their order.
pub fn build_index<T: Scalar>(records: Vec<EmbeddingRecord<T>>) -> Result<ModalityIndex<T>, IndexError> {
    let first = records.first().ok_or(IndexError::EmptyIndex)?;
    let modality = first.modality;
    let dimensionality = first.vector.len();
    let mut seen = HashSet::with_capacity(records.len());
    for r in &records {
        if r.modality != modality {
            return Err(IndexError::ModalityMismatch {
                chunk_id: r.chunk_id.clone(),
                expected: modality,
                found: r.modality,
            });
        }
        if r.vector.len() != dimensionality {
            return Err(IndexError::DimensionMismatch {
                chunk_id: r.chunk_id.clone(),
                expected: dimensionality,
                found: r.vector.len(),
            });
        }
        check_vector(&r.chunk_id, &r.vector)?;
        if !seen.insert(r.chunk_id.as_str()) {
            return Err(IndexError::DuplicateChunk(r.chunk_id.clone()));
        }
    }
    Ok(ModalityIndex {
        modality,
        dimensionality,
        records,
    })
}

impl<T: Scalar> ModalityIndex<T> {
    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn dimensionality(&self) -> usize {
        self.dimensionality
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EmbeddingRecord<T>] {
        &self.records
    }

    /// The `k` most similar chunks by cosine similarity, best first.
    ///
    /// Equal scores keep ingestion order. Returned candidates carry the raw
    /// cosine score; `norm_score` is left at zero for the normalizer.
    pub fn search_top_k(&self, query: &[T], k: usize) -> Result<Vec<Candidate<T>>, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        if self.records.is_empty() {
            return Err(IndexError::EmptyIndex);
        }
        if query.len() != self.dimensionality {
            return Err(IndexError::DimensionMismatch {
                chunk_id: "<query>".to_string(),
                expected: self.dimensionality,
                found: query.len(),
            });
        }
        check_vector("<query>", query)?;
        let mut scored: Vec<(usize, T)> = self
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| (i, cosine_similarity(query, &r.vector)))
            .collect();
        // Stable: ties stay in ingestion order.
        scored.sort_by(|a, b| b.1.order(&a.1));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(i, score)| {
                let r = &self.records[i];
                Candidate {
                    chunk_id: r.chunk_id.clone(),
                    doc_id: r.doc_id.clone(),
                    modality: r.modality,
                    page: r.page,
                    bbox: r.bbox,
                    raw_score: score,
                    norm_score: T::zero(),
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: &str, v: Vec<f64>) -> EmbeddingRecord<f64> {
        EmbeddingRecord {
            chunk_id: id.into(),
            doc_id: "d".into(),
            modality: Modality::Text,
            page: 0,
            bbox: None,
            vector: v,
        }
    }

    #[test]
    fn build_examples() {
        let idx = build_index(vec![rec("a", vec![1.0, 0.0]), rec("b", vec![0.0, 1.0]), rec("c", vec![1.0, 1.0])]).unwrap();
        assert_eq!(idx.len(), 3);
        assert_eq!(idx.dimensionality(), 2);

        let err = build_index(vec![rec("a", vec![1.0; 4]), rec("b", vec![1.0; 5])]).unwrap_err();
        assert!(matches!(err, IndexError::DimensionMismatch { expected: 4, found: 5, .. }));

        let err = build_index(vec![rec("a", vec![1.0]), rec("a", vec![2.0])]).unwrap_err();
        assert_eq!(err, IndexError::DuplicateChunk("a".into()));

        let err = build_index(vec![rec("z", vec![0.0, 0.0])]).unwrap_err();
        assert_eq!(err, IndexError::ZeroVector("z".into()));

        assert_eq!(build_index::<f64>(vec![]).unwrap_err(), IndexError::EmptyIndex);

        let mut img = rec("i", vec![1.0]);
        img.modality = Modality::Image;
        assert!(matches!(build_index(vec![rec("a", vec![1.0]), img]), Err(IndexError::ModalityMismatch { .. })));
    }

    #[test]
    fn self_similarity_first() {
        let idx = build_index(vec![rec("a", vec![0.6, 0.8, 0.0]), rec("b", vec![0.0, 0.0, 1.0])]).unwrap();
        let hits = idx.search_top_k(&[0.6, 0.8, 0.0], 2).unwrap();
        assert_eq!(hits[0].chunk_id, "a");
        assert!((hits[0].raw_score - 1.0).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_query_keeps_ingestion_order() {
        let idx = build_index(vec![rec("x", vec![1.0, 0.0, 0.0]), rec("y", vec![0.0, 1.0, 0.0]), rec("w", vec![1.0, 1.0, 0.0])]).unwrap();
        let hits = idx.search_top_k(&[0.0, 0.0, 1.0], 3).unwrap();
        let ids: Vec<_> = hits.iter().map(|c| c.chunk_id.as_str()).collect();
        assert_eq!(ids, ["x", "y", "w"]);
        assert!(hits.iter().all(|c| c.raw_score == 0.0));
    }

    #[test]
    fn top_k_matches_brute_force() {
        let vs = [[0.1, 0.9], [0.8, 0.3], [-0.5, 0.5], [0.7, 0.7], [1.0, -0.2]];
        let idx = build_index(vs.iter().enumerate().map(|(i, v)| rec(&format!("c{i}"), v.to_vec())).collect()).unwrap();
        let q = [0.9, 0.4];
        let hits = idx.search_top_k(&q, 3).unwrap();
        assert_eq!(hits.len(), 3);

        let mut oracle: Vec<(String, f64)> = vs
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let dot = v[0] * q[0] + v[1] * q[1];
                let n = (v[0] * v[0] + v[1] * v[1]).sqrt() * (q[0] * q[0] + q[1] * q[1]).sqrt();
                (format!("c{i}"), dot / n)
            })
            .collect();
        oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        for (hit, (id, s)) in hits.iter().zip(&oracle) {
            assert_eq!(&hit.chunk_id, id);
            assert!((hit.raw_score - s).abs() < 1e-12);
        }
        assert!(hits.windows(2).all(|w| w[0].raw_score >= w[1].raw_score));
    }

    #[test]
    fn search_errors() {
        let idx = build_index(vec![rec("a", vec![1.0, 0.0])]).unwrap();
        assert!(matches!(idx.search_top_k(&[1.0], 1), Err(IndexError::DimensionMismatch { .. })));
        assert_eq!(idx.search_top_k(&[1.0, 0.0], 0), Err(IndexError::InvalidK));
        assert!(matches!(idx.search_top_k(&[0.0, 0.0], 1), Err(IndexError::ZeroVector(_))));
    }

    fn index_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
        (1usize..12).prop_flat_map(|n| {
            (
                proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), n),
                proptest::collection::vec(-1.0f64..1.0, 3),
            )
        })
    }

    proptest! {
        #[test]
        fn full_k_is_sorted_permutation((vs, q) in index_strategy()) {
            prop_assume!(vs.iter().all(|v| norm(v) > 1e-6) && norm(&q) > 1e-6);
            let idx = build_index(vs.iter().enumerate().map(|(i, v)| rec(&format!("c{i}"), v.clone())).collect()).unwrap();
            let all = idx.search_top_k(&q, vs.len()).unwrap();
            prop_assert_eq!(all.len(), vs.len());
            let mut ids: Vec<_> = all.iter().map(|c| c.chunk_id.clone()).collect();
            prop_assert!(all.windows(2).all(|w| w[0].raw_score >= w[1].raw_score));
            ids.sort();
            ids.dedup();
            prop_assert_eq!(ids.len(), vs.len());
            for k in 1..=vs.len() {
                let part = idx.search_top_k(&q, k).unwrap();
                prop_assert_eq!(&part[..], &all[..k]);
            }
        }

        #[test]
        fn cosine_symmetric(a in proptest::collection::vec(-1.0f64..1.0, 4), b in proptest::collection::vec(-1.0f64..1.0, 4)) {
            prop_assert!((cosine_similarity(&a, &b) - cosine_similarity(&b, &a)).abs() < 1e-12);
            if norm(&a) > 1e-6 {
                prop_assert!((cosine_similarity(&a, &a) - 1.0).abs() < 1e-9);
            }
        }
    }
}
