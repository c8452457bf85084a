//! Evidence-tuple enumeration, posterior scoring and top-k ranking.
//!
//! A tuple holds at most one text, image and screenshot candidate, all from
//! the same document. Its posterior is `likelihood * prior`; the marginal
//! probability of the query is a per-query constant and is not computed.
//!
//! Enumeration is grouped by document, so the work is the sum over documents
//! of `|text_d| * |image_d| * |screenshot_d|` rather than the dense product of
//! the three pools. A document that lacks one of the modalities contributes a
//! single partial tuple made of its best candidate in each modality it has.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::FusionConfig;
use crate::fusion::{estimate_likelihood, FusionError, FusionMode, LikelihoodResult};
use crate::normalize::{normalize_candidates, NormalizeError, StatsSource};
use crate::priors::{PriorValue, TuplePrior};
use crate::scalar::Scalar;
use crate::types::{Candidate, Modality, Slots};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RankError {
    #[error("all candidate pools are empty")]
    EmptyPools,
    #[error("k must be at least 1")]
    InvalidK,
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

/// Per-modality candidate lists for one query, each sorted best first.
///
/// Order within a pool is `norm_score` descending, then `chunk_id` ascending.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidatePool<T> {
    text: Vec<Candidate<T>>,
    image: Vec<Candidate<T>>,
    screenshot: Vec<Candidate<T>>,
}

fn pool_order<T: Scalar>(a: &Candidate<T>, b: &Candidate<T>) -> Ordering {
    b.norm_score
        .order(&a.norm_score)
        .then_with(|| a.chunk_id.cmp(&b.chunk_id))
}

impl<T: Scalar> CandidatePool<T> {
    /// Splits already-normalized candidates by modality and sorts each pool.
    pub fn new(candidates: impl IntoIterator<Item = Candidate<T>>) -> Self {
        let mut pool = Self {
            text: Vec::new(),
            image: Vec::new(),
            screenshot: Vec::new(),
        };
        for c in candidates {
            match c.modality {
                Modality::Text => pool.text.push(c),
                Modality::Image => pool.image.push(c),
                Modality::Screenshot => pool.screenshot.push(c),
            }
        }
        for p in [&mut pool.text, &mut pool.image, &mut pool.screenshot] {
            p.sort_by(pool_order);
        }
        pool
    }

    /// Normalizes raw scores per modality, then builds the pool.
    pub fn from_raw(mut candidates: Vec<Candidate<T>>, source: &StatsSource<T>) -> Result<Self, NormalizeError> {
        normalize_candidates(&mut candidates, source)?;
        Ok(Self::new(candidates))
    }

    pub fn get(&self, modality: Modality) -> &[Candidate<T>] {
        match modality {
            Modality::Text => &self.text,
            Modality::Image => &self.image,
            Modality::Screenshot => &self.screenshot,
        }
    }

    pub fn len(&self) -> usize {
        self.text.len() + self.image.len() + self.screenshot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Candidate<T>> {
        self.text.iter().chain(&self.image).chain(&self.screenshot)
    }
}

/// A scored evidence tuple.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct EvidenceTuple<T> {
    pub text: Option<Candidate<T>>,
    pub image: Option<Candidate<T>>,
    pub screenshot: Option<Candidate<T>>,
    pub likelihood: T,
    pub prior: T,
    pub posterior: T,
    pub conflict_trace: Vec<T>,
    /// Extreme conflict zeroed the likelihood.
    pub aborted: bool,
    /// The prior fell back because its structural signal was unavailable.
    pub prior_signal_missing: bool,
}

impl<T: Scalar> EvidenceTuple<T> {
    pub fn slots(&self) -> Slots<'_, T> {
        Slots::new(self.text.as_ref(), self.image.as_ref(), self.screenshot.as_ref())
    }

    pub fn doc_id(&self) -> Option<&str> {
        self.slots().doc_id()
    }

    /// Wraps a lone candidate as a single-slot tuple whose scores all equal its normalized score.
    pub fn single(candidate: Candidate<T>) -> Self {
        let s = candidate.norm_score;
        let mut t = Self {
            text: None,
            image: None,
            screenshot: None,
            likelihood: s,
            prior: T::one(),
            posterior: s,
            conflict_trace: Vec::new(),
            aborted: false,
            prior_signal_missing: false,
        };
        match candidate.modality {
            Modality::Text => t.text = Some(candidate),
            Modality::Image => t.image = Some(candidate),
            Modality::Screenshot => t.screenshot = Some(candidate),
        }
        t
    }
}

/// Likelihood estimator, prior model and hyperparameters used to score tuples.
#[derive(Clone, Copy)]
pub struct Scorer<'a, T> {
    pub fusion: FusionMode,
    pub prior: &'a dyn TuplePrior<T>,
    pub config: &'a FusionConfig<T>,
}

impl<'a, T> Scorer<'a, T> {
    pub fn new(fusion: FusionMode, prior: &'a dyn TuplePrior<T>, config: &'a FusionConfig<T>) -> Self {
        Self { fusion, prior, config }
    }
}

#[derive(Debug, Clone)]
struct Scored<'p, T> {
    slots: Slots<'p, T>,
    likelihood: LikelihoodResult<T>,
    prior: PriorValue<T>,
    posterior: T,
}

impl<T: Scalar> Scored<'_, T> {
    fn materialize(self) -> EvidenceTuple<T> {
        EvidenceTuple {
            text: self.slots.text.cloned(),
            image: self.slots.image.cloned(),
            screenshot: self.slots.screenshot.cloned(),
            likelihood: self.likelihood.value,
            prior: self.prior.value,
            posterior: self.posterior,
            conflict_trace: self.likelihood.conflict_trace,
            aborted: self.likelihood.aborted,
            prior_signal_missing: self.prior.signal_missing,
        }
    }
}

fn chunk_ids<'a, T>(s: &Slots<'a, T>) -> [Option<&'a str>; 3] {
    [s.text, s.image, s.screenshot].map(|c| c.map(|c| c.chunk_id.as_str()))
}

/// Ranking order: posterior, then likelihood (both descending), then chunk ids
/// of the text, image and screenshot slots, then document id.
fn rank_order<T: Scalar>(a: &Scored<'_, T>, b: &Scored<'_, T>) -> Ordering {
    b.posterior
        .order(&a.posterior)
        .then_with(|| b.likelihood.value.order(&a.likelihood.value))
        .then_with(|| chunk_ids(&a.slots).cmp(&chunk_ids(&b.slots)))
        .then_with(|| a.slots.doc_id().cmp(&b.slots.doc_id()))
}

fn score<'p, T: Scalar>(slots: Slots<'p, T>, scorer: &Scorer<'_, T>) -> Result<Scored<'p, T>, RankError> {
    let scores: Vec<(Modality, T)> = slots.present().map(|c| (c.modality, c.norm_score)).collect();
    let likelihood = estimate_likelihood(scorer.fusion, &scores, scorer.config)?;
    let prior = scorer.prior.prior(&slots, scorer.config);
    let posterior = likelihood.value * prior.value;
    Ok(Scored {
        slots,
        likelihood,
        prior,
        posterior,
    })
}

/// Scores one tuple: likelihood from the present slots' normalized scores,
/// prior from the scorer's prior model, posterior as their product.
pub fn score_tuple<T: Scalar>(slots: Slots<'_, T>, scorer: &Scorer<'_, T>) -> Result<EvidenceTuple<T>, RankError> {
    Ok(score(slots, scorer)?.materialize())
}

type DocGroup<'p, T> = [Vec<&'p Candidate<T>>; 3];

fn group_by_doc<T: Scalar>(pool: &CandidatePool<T>) -> BTreeMap<&str, DocGroup<'_, T>> {
    let mut docs: BTreeMap<&str, DocGroup<'_, T>> = BTreeMap::new();
    for (slot, modality) in Modality::ALL.into_iter().enumerate() {
        for c in pool.get(modality) {
            docs.entry(c.doc_id.as_str()).or_default()[slot].push(c);
        }
    }
    docs
}

fn doc_tuples<'p, T>(group: &DocGroup<'p, T>) -> Vec<Slots<'p, T>> {
    let [texts, images, shots] = group;
    if texts.is_empty() || images.is_empty() || shots.is_empty() {
        return vec![Slots::new(
            texts.first().copied(),
            images.first().copied(),
            shots.first().copied(),
        )];
    }
    let mut out = Vec::with_capacity(texts.len() * images.len() * shots.len());
    for &t in texts {
        for &v in images {
            for &s in shots {
                out.push(Slots::new(Some(t), Some(v), Some(s)));
            }
        }
    }
    out
}

/// All same-document tuples of the pool, grouped by document id.
pub fn enumerate_tuples<T: Scalar>(pool: &CandidatePool<T>) -> Result<Vec<Slots<'_, T>>, RankError> {
    if pool.is_empty() {
        return Err(RankError::EmptyPools);
    }
    Ok(group_by_doc(pool).values().flat_map(doc_tuples).collect())
}

/// Keeps the best `k` items under `rank_order` with bounded memory.
struct TopK<'p, T> {
    k: usize,
    items: Vec<Scored<'p, T>>,
}

impl<'p, T: Scalar> TopK<'p, T> {
    fn new(k: usize) -> Self {
        Self { k, items: Vec::new() }
    }

    fn push(&mut self, item: Scored<'p, T>) {
        self.items.push(item);
        if self.items.len() >= 2 * self.k + 64 {
            self.shrink();
        }
    }

    fn shrink(&mut self) {
        if self.items.len() > self.k {
            self.items.select_nth_unstable_by(self.k - 1, rank_order);
            self.items.truncate(self.k);
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for item in other.items {
            self.push(item);
        }
        self
    }

    fn finish(mut self) -> Vec<Scored<'p, T>> {
        self.items.sort_by(rank_order);
        self.items.truncate(self.k);
        self.items
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankOptions {
    /// Score documents on the rayon pool. Output is identical either way.
    pub parallel: bool,
}

impl Default for RankOptions {
    fn default() -> Self {
        Self { parallel: true }
    }
}

fn rank_doc<'p, T: Scalar>(
    group: &DocGroup<'p, T>,
    k: usize,
    scorer: &Scorer<'_, T>,
) -> Result<TopK<'p, T>, RankError> {
    let mut top = TopK::new(k);
    let cfg = scorer.config;
    for slots in doc_tuples(group) {
        let s = score(slots, scorer)?;
        if s.prior.value < cfg.prior_floor || s.likelihood.value < cfg.likelihood_floor {
            continue;
        }
        top.push(s);
    }
    Ok(top)
}

/// Best `k` tuples by posterior, after dropping tuples below the configured
/// prior or likelihood floors.
pub fn rank_top_k<T: Scalar>(
    pool: &CandidatePool<T>,
    k: usize,
    scorer: &Scorer<'_, T>,
    options: RankOptions,
) -> Result<Vec<EvidenceTuple<T>>, RankError> {
    if k == 0 {
        return Err(RankError::InvalidK);
    }
    if pool.is_empty() {
        return Err(RankError::EmptyPools);
    }
    let groups: Vec<DocGroup<'_, T>> = group_by_doc(pool).into_values().collect();
    let top = if options.parallel {
        groups
            .par_iter()
            .map(|g| rank_doc(g, k, scorer))
            .try_reduce(|| TopK::new(k), |a, b| Ok(a.merge(b)))?
    } else {
        groups
            .iter()
            .map(|g| rank_doc(g, k, scorer))
            .try_fold(TopK::new(k), |acc, t| t.map(|t| acc.merge(t)))?
    };
    Ok(top.finish().into_iter().map(Scored::materialize).collect())
}

/// Reference ranking by exhaustive search over every slot combination.
///
/// Every `(t?, v?, s?)` choice across the whole pool is visited, including
/// mixed-document ones, and kept only if it is admissible: all present slots
/// share a document; a document with all three modalities only yields full
/// tuples; any other document yields exactly the tuple of its best candidate
/// per modality it has. No floors are applied. Desk-scale pools only.
pub fn brute_force_rank<T: Scalar>(
    pool: &CandidatePool<T>,
    k: usize,
    scorer: &Scorer<'_, T>,
) -> Result<Vec<EvidenceTuple<T>>, RankError> {
    let options = |m: Modality| -> Vec<Option<&Candidate<T>>> {
        std::iter::once(None).chain(pool.get(m).iter().map(Some)).collect()
    };
    let (ts, vs, ss) = (options(Modality::Text), options(Modality::Image), options(Modality::Screenshot));

    let modalities_of = |doc: &str| -> BTreeSet<Modality> {
        pool.iter().filter(|c| c.doc_id == doc).map(|c| c.modality).collect()
    };
    let is_best = |c: &Candidate<T>| -> bool {
        pool.iter()
            .filter(|o| o.doc_id == c.doc_id && o.modality == c.modality)
            .all(|o| {
                c.norm_score > o.norm_score || (c.norm_score == o.norm_score && c.chunk_id <= o.chunk_id)
            })
    };

    let mut scored = Vec::new();
    for &t in &ts {
        for &v in &vs {
            for &s in &ss {
                let slots = Slots::new(t, v, s);
                let present: Vec<&Candidate<T>> = slots.present().collect();
                let Some(first) = present.first() else { continue };
                if present.iter().any(|c| c.doc_id != first.doc_id) {
                    continue;
                }
                let has = modalities_of(&first.doc_id);
                let present_modalities: BTreeSet<Modality> = present.iter().map(|c| c.modality).collect();
                let admissible = if has.len() == 3 {
                    present.len() == 3
                } else {
                    present_modalities == has && present.iter().all(|c| is_best(c))
                };
                if admissible {
                    scored.push(score(slots, scorer)?);
                }
            }
        }
    }
    scored.sort_by(rank_order);
    scored.truncate(k);
    Ok(scored.into_iter().map(Scored::materialize).collect())
}

/// Flat merge of all candidates by normalized score, the no-fusion baseline.
///
/// Ties go to text before image before screenshot, then to the smaller chunk id.
pub fn rank_baseline_raw<T: Scalar>(pool: &CandidatePool<T>, k: usize) -> Result<Vec<Candidate<T>>, RankError> {
    if k == 0 {
        return Err(RankError::InvalidK);
    }
    if pool.is_empty() {
        return Err(RankError::EmptyPools);
    }
    let mut all: Vec<Candidate<T>> = pool.iter().cloned().collect();
    all.sort_by(|a, b| {
        b.norm_score
            .order(&a.norm_score)
            .then_with(|| a.modality.cmp(&b.modality))
            .then_with(|| a.chunk_id.cmp(&b.chunk_id))
    });
    all.truncate(k);
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::ModePrior;

    fn c(id: &str, doc: &str, m: Modality, s: f64) -> Candidate<f64> {
        Candidate::new(id, doc, m, 0, s).with_norm_score(s)
    }

    struct FixedPrior(f64);

    impl TuplePrior<f64> for FixedPrior {
        fn prior(&self, _: &Slots<'_, f64>, _: &FusionConfig<f64>) -> PriorValue<f64> {
            PriorValue { value: self.0, signal_missing: false }
        }
    }

    fn toy() -> CandidatePool<f64> {
        CandidatePool::new(vec![
            c("a_t1", "A", Modality::Text, 0.9),
            c("a_t2", "A", Modality::Text, 0.4),
            c("a_v", "A", Modality::Image, 0.7),
            c("a_s", "A", Modality::Screenshot, 0.6),
            c("b_t", "B", Modality::Text, 1.0),
        ])
    }

    #[test]
    fn enumeration_counts() {
        let pool = toy();
        let tuples = enumerate_tuples(&pool).unwrap();
        // 2 full tuples from A, one partial text-only tuple from B.
        assert_eq!(tuples.len(), 3);
        assert_eq!(tuples.iter().filter(|s| s.len() == 3).count(), 2);
        assert!(tuples.iter().all(|s| s.doc_id().is_some()));
    }

    #[test]
    fn single_candidate_gives_single_tuple() {
        let pool = CandidatePool::new(vec![c("x", "D", Modality::Image, 0.3)]);
        let tuples = enumerate_tuples(&pool).unwrap();
        assert_eq!(tuples.len(), 1);
        assert_eq!(tuples[0].len(), 1);
    }

    #[test]
    fn disjoint_documents_only_partials() {
        let pool = CandidatePool::new(vec![
            c("t", "A", Modality::Text, 0.3),
            c("v", "B", Modality::Image, 0.3),
            c("s", "C", Modality::Screenshot, 0.3),
            c("t2", "A", Modality::Text, 0.1),
        ]);
        let tuples = enumerate_tuples(&pool).unwrap();
        assert_eq!(tuples.len(), 3);
        assert!(tuples.iter().all(|s| s.len() == 1));
        assert_eq!(tuples[0].text.unwrap().chunk_id, "t");
    }

    #[test]
    fn empty_pool_errors() {
        let pool = CandidatePool::<f64>::default();
        assert_eq!(enumerate_tuples(&pool).unwrap_err(), RankError::EmptyPools);
        let cfg = FusionConfig::default();
        let prior = ModePrior::uniform();
        let scorer = Scorer::new(FusionMode::Ds, &prior, &cfg);
        assert_eq!(rank_top_k(&pool, 3, &scorer, RankOptions::default()).unwrap_err(), RankError::EmptyPools);
        assert!(brute_force_rank(&pool, 3, &scorer).unwrap().is_empty());
        assert_eq!(rank_baseline_raw(&pool, 3).unwrap_err(), RankError::EmptyPools);
    }

    #[test]
    fn score_tuple_examples() {
        let cfg = FusionConfig::default();
        let half = FixedPrior(0.5);
        let scorer = Scorer::new(FusionMode::Ds, &half, &cfg);
        let (t, v) = (c("t", "A", Modality::Text, 1.0), c("v", "A", Modality::Image, 1.0));
        let e = score_tuple(Slots::new(Some(&t), Some(&v), None), &scorer).unwrap();
        assert!((e.likelihood - 0.955).abs() < 1e-12);
        assert!((e.posterior - 0.4775).abs() < 1e-12);
        assert!((e.posterior - e.likelihood * e.prior).abs() < 1e-12);

        let mut harsh = cfg.clone();
        harsh.alpha = 1.0;
        harsh.beta = 1.0;
        let scorer = Scorer::new(FusionMode::Ds, &half, &harsh);
        let n = c("n", "A", Modality::Image, 0.0);
        let e = score_tuple(Slots::new(Some(&t), Some(&n), None), &scorer).unwrap();
        assert!(e.aborted);
        assert_eq!(e.posterior, 0.0);

        let uniform = ModePrior::uniform();
        let scorer = Scorer::new(FusionMode::Ds, &uniform, &cfg);
        let e = score_tuple(Slots::new(Some(&t), Some(&v), None), &scorer).unwrap();
        assert_eq!(e.posterior, e.likelihood);
    }

    #[test]
    fn ranking_orders_by_posterior() {
        let cfg = FusionConfig::default();
        let prior = ModePrior::uniform();
        let scorer = Scorer::new(FusionMode::Ds, &prior, &cfg);
        let pool = toy();
        let ranked = rank_top_k(&pool, 10, &scorer, RankOptions::default()).unwrap();
        assert_eq!(ranked.len(), 3);
        assert!(ranked.windows(2).all(|w| w[0].posterior >= w[1].posterior));
        assert_eq!(ranked, brute_force_rank(&pool, 10, &scorer).unwrap());
        let top1 = rank_top_k(&pool, 1, &scorer, RankOptions { parallel: false }).unwrap();
        assert_eq!(top1[0], ranked[0]);
        assert_eq!(rank_top_k(&pool, 0, &scorer, RankOptions::default()).unwrap_err(), RankError::InvalidK);
    }

    #[test]
    fn floors_prune() {
        let mut cfg = FusionConfig::default();
        cfg.likelihood_floor = 0.8;
        let prior = ModePrior::uniform();
        let scorer = Scorer::new(FusionMode::Ds, &prior, &cfg);
        let ranked = rank_top_k(&toy(), 10, &scorer, RankOptions::default()).unwrap();
        assert!(ranked.iter().all(|t| t.likelihood >= 0.8));
        assert!(ranked.len() < 3);
    }

    #[test]
    fn bounded_selection_matches_full_sort() {
        let cands: Vec<_> = (0..8)
            .flat_map(|i| {
                let s = (i as f64 * 0.37).fract();
                [
                    c(&format!("t{i}"), "A", Modality::Text, s),
                    c(&format!("v{i}"), "A", Modality::Image, 1.0 - s),
                    c(&format!("s{i}"), "A", Modality::Screenshot, (s * 3.0).fract()),
                ]
            })
            .collect();
        let pool = CandidatePool::new(cands);
        let cfg = FusionConfig::default();
        let prior = ModePrior::uniform();
        let scorer = Scorer::new(FusionMode::Ds, &prior, &cfg);
        // 512 tuples in one document; k small enough to force repeated shrinking.
        for k in [1, 5, 100, 600] {
            assert_eq!(
                rank_top_k(&pool, k, &scorer, RankOptions::default()).unwrap(),
                brute_force_rank(&pool, k, &scorer).unwrap()
            );
        }
    }

    #[test]
    fn baseline_order() {
        let pool = CandidatePool::new(vec![c("v", "A", Modality::Image, 0.7), c("t", "A", Modality::Text, 0.9)]);
        assert_eq!(rank_baseline_raw(&pool, 5).unwrap()[0].chunk_id, "t");

        let pool = CandidatePool::new(vec![
            c("s", "A", Modality::Screenshot, 0.5),
            c("v", "A", Modality::Image, 0.5),
            c("t2", "A", Modality::Text, 0.5),
            c("t1", "A", Modality::Text, 0.5),
        ]);
        let ids: Vec<_> = rank_baseline_raw(&pool, 5).unwrap().into_iter().map(|c| c.chunk_id).collect();
        assert_eq!(ids, ["t1", "t2", "v", "s"]);

        let pool = CandidatePool::new((0..100).map(|i| c(&format!("c{i:03}"), "A", Modality::Text, i as f64 / 100.0)));
        let top = rank_baseline_raw(&pool, 1).unwrap();
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].chunk_id, "c099");
    }

    #[test]
    fn single_wraps_candidate() {
        let t = EvidenceTuple::single(c("v", "A", Modality::Image, 0.4));
        assert_eq!(t.posterior, 0.4);
        assert!(t.image.is_some() && t.text.is_none());
        assert_eq!(t.doc_id(), Some("A"));
    }
}
