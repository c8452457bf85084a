//! Likelihood estimation from per-modality similarity scores.
//!
//! The Dempster-Shafer route turns every normalized score into a basic
//! probability assignment, folds the assignments with Dempster's rule starting
//! from total ignorance, and projects the fused belief onto the relevant
//! hypothesis with the pignistic transform. Strongly contradicting modalities
//! drive the conflict coefficient up and the likelihood down; past the
//! configured threshold the likelihood is forced to zero.
//!
//! [`likelihood_linear`] is the weighted-average ablation baseline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::FusionConfig;
use crate::mass::{combine_dempster, pignistic, Combination, MassFunction};
use crate::scalar::Scalar;
use crate::types::Modality;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("normalized score {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("no scores to fuse")]
    EmptyScores,
    #[error("no linear weight configured for {0}")]
    MissingWeight(Modality),
    #[error("linear weights of the present modalities sum to zero")]
    ZeroWeight,
}

/// Which likelihood estimator scores a tuple.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    #[default]
    Ds,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct LikelihoodResult<T> {
    pub value: T,
    /// Conflict coefficient of every combination step, in fold order.
    pub conflict_trace: Vec<T>,
    /// Set when extreme conflict stopped the fold; `value` is then zero.
    pub aborted: bool,
}

/// Basic probability assignment for one normalized score.
///
/// `m(Y) = alpha * s`, `m(N) = beta * (1 - s)`, `m(Omega) = max(0, 1 - m(Y) - m(N))`.
/// When `alpha * s + beta * (1 - s)` exceeds one (only possible with
/// `alpha + beta > 1`), `m(Y)` and `m(N)` are scaled down proportionally so the
/// triple stays a valid mass function with `m(Omega) = 0`.
pub fn bpa_from_score<T: Scalar>(
    norm_score: T,
    config: &FusionConfig<T>,
) -> Result<MassFunction<T>, FusionError> {
    if !(norm_score >= T::zero() && norm_score <= T::one()) {
        return Err(FusionError::OutOfRange(norm_score.to_f64().unwrap_or(f64::NAN)));
    }
    let mut m_y = config.alpha * norm_score;
    let mut m_n = config.beta * (T::one() - norm_score);
    let committed = m_y + m_n;
    let m_omega = if committed > T::one() {
        m_y = m_y / committed;
        m_n = m_n / committed;
        T::zero()
    } else {
        (T::one() - committed).max(T::zero())
    };
    Ok(MassFunction::new(m_y, m_n, m_omega).expect("clipped BPA is a valid mass function"))
}

fn fold_order<T: Scalar>(scores: &[(Modality, T)]) -> Vec<(Modality, T)> {
    let mut ordered = scores.to_vec();
    ordered.sort_by_key(|&(m, _)| m);
    ordered
}

/// Dempster-Shafer likelihood of a tuple given its present modalities' scores.
///
/// Scores are folded in text, image, screenshot order. Absent modalities
/// contribute nothing.
pub fn likelihood_ds<T: Scalar>(
    scores: &[(Modality, T)],
    config: &FusionConfig<T>,
) -> Result<LikelihoodResult<T>, FusionError> {
    if scores.is_empty() {
        return Err(FusionError::EmptyScores);
    }
    let mut acc = MassFunction::vacuous();
    let mut conflict_trace = Vec::with_capacity(scores.len());
    for (_, score) in fold_order(scores) {
        let incoming = bpa_from_score(score, config)?;
        match combine_dempster(&acc, &incoming, config) {
            Combination::Combined { mass, conflict } => {
                conflict_trace.push(conflict);
                acc = mass;
            }
            Combination::ExtremeConflict { conflict } => {
                conflict_trace.push(conflict);
                return Ok(LikelihoodResult {
                    value: T::zero(),
                    conflict_trace,
                    aborted: true,
                });
            }
        }
    }
    Ok(LikelihoodResult {
        value: pignistic(&acc),
        conflict_trace,
        aborted: false,
    })
}

/// Weighted average `sum(w_i * s_i) / sum(w_i)` over the present modalities.
pub fn likelihood_linear<T: Scalar>(
    scores: &[(Modality, T)],
    config: &FusionConfig<T>,
) -> Result<T, FusionError> {
    if scores.is_empty() {
        return Err(FusionError::EmptyScores);
    }
    let mut num = T::zero();
    let mut den = T::zero();
    for &(modality, score) in scores {
        if !(score >= T::zero() && score <= T::one()) {
            return Err(FusionError::OutOfRange(score.to_f64().unwrap_or(f64::NAN)));
        }
        let w = *config
            .linear_weights
            .get(&modality)
            .ok_or(FusionError::MissingWeight(modality))?;
        num = num + w * score;
        den = den + w;
    }
    if den <= T::zero() {
        return Err(FusionError::ZeroWeight);
    }
    Ok(num / den)
}

/// Dispatches to the estimator selected by `mode`.
pub fn estimate_likelihood<T: Scalar>(
    mode: FusionMode,
    scores: &[(Modality, T)],
    config: &FusionConfig<T>,
) -> Result<LikelihoodResult<T>, FusionError> {
    match mode {
        FusionMode::Ds => likelihood_ds(scores, config),
        FusionMode::Linear => Ok(LikelihoodResult {
            value: likelihood_linear(scores, config)?,
            conflict_trace: Vec::new(),
            aborted: false,
        }),
    }
}
