//! Recall@k against page-level relevance judgments.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ranker::EvidenceTuple;
use crate::scalar::Scalar;

/// A `(doc_id, page)` location.
pub type PageRef = (String, u32);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("query '{0}' has no relevance judgments")]
    UnknownQuery(String),
    #[error("k grids differ: {0:?} vs {1:?}")]
    GridMismatch(Vec<usize>, Vec<usize>),
    #[error("runs cover different query sets")]
    QuerySetMismatch,
    #[error("k grid must be non-empty and contain only positive cutoffs")]
    InvalidGrid,
}

/// Relevant pages per query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    relevant: BTreeMap<String, BTreeSet<PageRef>>,
}

impl Qrels {
    pub fn from_judgments<I, Q, D>(judgments: I) -> Self
    where
        I: IntoIterator<Item = (Q, D, u32)>,
        Q: Into<String>,
        D: Into<String>,
    {
        let mut relevant: BTreeMap<String, BTreeSet<PageRef>> = BTreeMap::new();
        for (q, d, page) in judgments {
            relevant.entry(q.into()).or_default().insert((d.into(), page));
        }
        Self { relevant }
    }

    pub fn relevant(&self, query_id: &str) -> Option<&BTreeSet<PageRef>> {
        self.relevant.get(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.relevant.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.relevant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relevant.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecallMode {
    /// A query scores 1 at k when any top-k result touches a relevant page.
    #[default]
    Hit,
    /// Fraction of the query's relevant pages covered by the top-k results.
    Set,
}

/// Union of the `(doc_id, page)` locations of the tuple's present slots.
pub fn tuple_pages<T: Scalar>(t: &EvidenceTuple<T>) -> BTreeSet<PageRef> {
    t.slots().present().map(|c| (c.doc_id.clone(), c.page)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecall {
    pub query_id: String,
    /// 1-based rank of the first result touching a relevant page.
    pub first_hit_rank: Option<usize>,
    /// Recall at each cutoff of the report's grid.
    pub recall: Vec<f64>,
}

fn check_grid(ks: &[usize]) -> Result<(), EvalError> {
    if ks.is_empty() || ks.contains(&0) {
        Err(EvalError::InvalidGrid)
    } else {
        Ok(())
    }
}

/// Per-cutoff recall of one ranked list of page sets.
pub fn recall_of_pages(
    query_id: &str,
    ranked: &[BTreeSet<PageRef>],
    relevant: &BTreeSet<PageRef>,
    ks: &[usize],
    mode: RecallMode,
) -> QueryRecall {
    let first_hit_rank = ranked
        .iter()
        .position(|pages| !pages.is_disjoint(relevant))
        .map(|i| i + 1);
    let recall = ks
        .iter()
        .map(|&k| match mode {
            RecallMode::Hit => match first_hit_rank {
                Some(r) if r <= k => 1.0,
                _ => 0.0,
            },
            RecallMode::Set => {
                if relevant.is_empty() {
                    return 0.0;
                }
                let covered: BTreeSet<&PageRef> = ranked
                    .iter()
                    .take(k)
                    .flatten()
                    .filter(|p| relevant.contains(*p))
                    .collect();
                covered.len() as f64 / relevant.len() as f64
            }
        })
        .collect();
    QueryRecall {
        query_id: query_id.to_string(),
        first_hit_rank,
        recall,
    }
}

/// Recall of one query's ranked tuples.
pub fn recall_at_k<T: Scalar>(
    query_id: &str,
    ranked: &[EvidenceTuple<T>],
    qrels: &Qrels,
    ks: &[usize],
    mode: RecallMode,
) -> Result<QueryRecall, EvalError> {
    check_grid(ks)?;
    let relevant = qrels
        .relevant(query_id)
        .ok_or_else(|| EvalError::UnknownQuery(query_id.to_string()))?;
    let pages: Vec<_> = ranked.iter().map(tuple_pages).collect();
    Ok(recall_of_pages(query_id, &pages, relevant, ks, mode))
}

/// A ranked run reduced to the page sets of its results, per query.
pub type PageRun = BTreeMap<String, Vec<BTreeSet<PageRef>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallReport {
    pub mode: RecallMode,
    pub ks: Vec<usize>,
    /// Mean recall over the judged queries, aligned with `ks`.
    pub recall: Vec<f64>,
    pub queries: Vec<QueryRecall>,
}

impl RecallReport {
    pub fn at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|i| self.recall[i])
    }
}

/// Mean recall over every judged query.
///
/// A judged query missing from the run counts as an empty ranking. A run query
/// without judgments is an error.
pub fn evaluate_run(run: &PageRun, qrels: &Qrels, ks: &[usize], mode: RecallMode) -> Result<RecallReport, EvalError> {
    check_grid(ks)?;
    if let Some(q) = run.keys().find(|q| qrels.relevant(q).is_none()) {
        return Err(EvalError::UnknownQuery(q.clone()));
    }
    let empty = Vec::new();
    let queries: Vec<QueryRecall> = qrels
        .relevant
        .iter()
        .map(|(q, rel)| recall_of_pages(q, run.get(q).unwrap_or(&empty), rel, ks, mode))
        .collect();
    let n = queries.len().max(1) as f64;
    let recall = (0..ks.len())
        .map(|i| queries.iter().map(|q| q.recall[i]).sum::<f64>() / n)
        .collect();
    Ok(RecallReport {
        mode,
        ks: ks.to_vec(),
        recall,
        queries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallDelta {
    pub k: usize,
    pub a: f64,
    pub b: f64,
    /// `b - a`
    pub delta: f64,
}

/// Per-cutoff differences `b - a` between two reports over the same grid and queries.
pub fn compare_runs(a: &RecallReport, b: &RecallReport) -> Result<Vec<RecallDelta>, EvalError> {
    if a.ks != b.ks {
        return Err(EvalError::GridMismatch(a.ks.clone(), b.ks.clone()));
    }
    let ids = |r: &RecallReport| r.queries.iter().map(|q| q.query_id.clone()).collect::<Vec<_>>();
    if ids(a) != ids(b) {
        return Err(EvalError::QuerySetMismatch);
    }
    Ok(a.ks
        .iter()
        .enumerate()
        .map(|(i, &k)| RecallDelta {
            k,
            a: a.recall[i],
            b: b.recall[i],
            delta: b.recall[i] - a.recall[i],
        })
        .collect())
}
