//! Min-max score normalization per modality.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::types::{Candidate, Modality};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormalizeError {
    #[error("no {0} candidates to derive normalization statistics from")]
    EmptyPool(Modality),
    #[error("normalization bounds for {modality} are invalid: s_min={s_min} > s_max={s_max} or non-finite")]
    InvalidBounds { modality: Modality, s_min: f64, s_max: f64 },
}

/// Observed score range of one modality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct NormalizationStats<T> {
    modality: Modality,
    s_min: T,
    s_max: T,
}

impl<T: Scalar> NormalizationStats<T> {
    pub fn new(modality: Modality, s_min: T, s_max: T) -> Result<Self, NormalizeError> {
        if !s_min.is_finite() || !s_max.is_finite() || s_min > s_max {
            return Err(NormalizeError::InvalidBounds {
                modality,
                s_min: s_min.to_f64().unwrap_or(f64::NAN),
                s_max: s_max.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { modality, s_min, s_max })
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn s_min(&self) -> T {
        self.s_min
    }

    pub fn s_max(&self) -> T {
        self.s_max
    }
}

/// Maps `raw` into `[0, 1]` using the modality's observed range.
///
/// A degenerate range (`s_min == s_max`) carries no ranking information and maps to 0.5.
pub fn normalize_score<T: Scalar>(raw: T, stats: &NormalizationStats<T>) -> T {
    let span = stats.s_max - stats.s_min;
    if span <= T::zero() {
        return T::half();
    }
    ((raw - stats.s_min) / span).max(T::zero()).min(T::one())
}

/// Min and max `raw_score` over the candidates of `modality`.
pub fn compute_stats<T: Scalar>(
    pool: &[Candidate<T>],
    modality: Modality,
) -> Result<NormalizationStats<T>, NormalizeError> {
    let mut scores = pool
        .iter()
        .filter(|c| c.modality == modality)
        .map(|c| c.raw_score);
    let first = scores.next().ok_or(NormalizeError::EmptyPool(modality))?;
    let (lo, hi) = scores.fold((first, first), |(lo, hi), s| (lo.min(s), hi.max(s)));
    NormalizationStats::new(modality, lo, hi)
}

/// Where the normalization range comes from.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum StatsSource<T> {
    /// Range observed over the query's own candidate pool, per modality.
    #[default]
    PerQuery,
    /// Fixed corpus-level ranges; modalities without an entry fall back to the per-query range.
    Fixed(BTreeMap<Modality, NormalizationStats<T>>),
}

/// Fills `norm_score` on every candidate.
pub fn normalize_candidates<T: Scalar>(
    candidates: &mut [Candidate<T>],
    source: &StatsSource<T>,
) -> Result<BTreeMap<Modality, NormalizationStats<T>>, NormalizeError> {
    let mut used = BTreeMap::new();
    for modality in Modality::ALL {
        if !candidates.iter().any(|c| c.modality == modality) {
            continue;
        }
        let stats = match source {
            StatsSource::Fixed(map) if map.contains_key(&modality) => map[&modality],
            _ => compute_stats(candidates, modality)?,
        };
        for c in candidates.iter_mut().filter(|c| c.modality == modality) {
            c.norm_score = normalize_score(c.raw_score, &stats);
        }
        used.insert(modality, stats);
    }
    Ok(used)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stats(lo: f64, hi: f64) -> NormalizationStats<f64> {
        NormalizationStats::new(Modality::Text, lo, hi).unwrap()
    }

    fn pool(scores: &[f64]) -> Vec<Candidate<f64>> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &s)| Candidate::new(format!("c{i}"), "d", Modality::Image, 0, s))
            .collect()
    }

    #[test]
    fn examples() {
        assert!((normalize_score(0.5, &stats(0.0, 1.0)) - 0.5).abs() < 1e-9);
        assert!((normalize_score(0.9, &stats(0.1, 0.9)) - 1.0).abs() < 1e-9);
        assert!((normalize_score(0.1, &stats(0.1, 0.9)) - 0.0).abs() < 1e-9);
        assert!((normalize_score(0.2, &stats(-0.1, 0.9)) - 0.3).abs() < 1e-9);
        assert_eq!(normalize_score(7.0, &stats(0.3, 0.3)), 0.5);
        assert_eq!(normalize_score(2.0, &stats(0.0, 1.0)), 1.0);
        assert_eq!(normalize_score(-2.0, &stats(0.0, 1.0)), 0.0);
    }

    #[test]
    fn stats_examples() {
        let s = compute_stats(&pool(&[0.1, 0.4, 0.9]), Modality::Image).unwrap();
        assert_eq!((s.s_min(), s.s_max()), (0.1, 0.9));
        let s = compute_stats(&pool(&[0.3]), Modality::Image).unwrap();
        assert_eq!((s.s_min(), s.s_max()), (0.3, 0.3));
        assert_eq!(normalize_score(0.3, &s), 0.5);
        let s = compute_stats(&pool(&[-0.2, 0.0, 0.6]), Modality::Image).unwrap();
        assert_eq!((s.s_min(), s.s_max()), (-0.2, 0.6));
        assert_eq!(
            compute_stats(&pool(&[0.1]), Modality::Text),
            Err(NormalizeError::EmptyPool(Modality::Text))
        );
    }

    #[test]
    fn inverted_bounds_rejected() {
        assert!(NormalizationStats::new(Modality::Text, 1.0, 0.0).is_err());
        assert!(NormalizationStats::new(Modality::Text, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn fixed_source_overrides_per_query() {
        let mut c = pool(&[0.2, 0.4]);
        let fixed = StatsSource::Fixed(
            [(Modality::Image, NormalizationStats::new(Modality::Image, 0.0, 1.0).unwrap())].into(),
        );
        normalize_candidates(&mut c, &fixed).unwrap();
        assert_eq!((c[0].norm_score, c[1].norm_score), (0.2, 0.4));
        normalize_candidates(&mut c, &StatsSource::PerQuery).unwrap();
        assert_eq!((c[0].norm_score, c[1].norm_score), (0.0, 1.0));
    }

    proptest! {
        #[test]
        fn output_in_unit_interval(raw in -1e6f64..1e6, a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let s = stats(a.min(b), a.max(b));
            let v = normalize_score(raw, &s);
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn non_decreasing(x in -5.0f64..5.0, y in -5.0f64..5.0, a in -2.0f64..2.0, w in 0.0f64..3.0) {
            let s = stats(a, a + w);
            let (lo, hi) = (x.min(y), x.max(y));
            prop_assert!(normalize_score(lo, &s) <= normalize_score(hi, &s));
        }
    }
}
