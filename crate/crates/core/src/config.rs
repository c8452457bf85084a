//! Fusion hyperparameters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::types::Modality;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field} = {value} is outside {range}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("linear weight for {0} is negative")]
    NegativeWeight(Modality),
    #[error("linear weights sum to {0}, expected 1")]
    WeightSum(f64),
}

/// Every tunable of the scoring pipeline.
///
/// All fields are optional when deserialized; missing ones take the defaults
/// listed on [`FusionConfig::default`]. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct FusionConfig<T> {
    /// Trust in positive evidence, `m(Y) = alpha * s`.
    pub alpha: T,
    /// Trust in negative evidence, `m(N) = beta * (1 - s)`.
    pub beta: T,
    /// Conflict coefficient at or above which the likelihood collapses to zero.
    pub conflict_threshold: T,
    /// Saturation rate of the graph edge probability `1 - exp(-kappa * S)`.
    pub kappa: T,
    /// Bounding-box center distance limit as a multiple of the page diagonal.
    pub tau: T,
    /// Page window: text and image must lie strictly closer than this to the screenshot page.
    pub tau_page: u32,
    /// Layout prior assigned when either layout condition fails.
    pub epsilon: T,
    pub linear_weights: BTreeMap<Modality, T>,
    pub prior_floor: T,
    pub likelihood_floor: T,
    /// Prior for tuples whose structure cannot be scored (fewer than two slots).
    pub default_prior: T,
}

impl<T: Scalar> Default for FusionConfig<T> {
    fn default() -> Self {
        let third = T::one() / T::lit(3.0);
        Self {
            alpha: T::lit(0.7),
            beta: T::lit(0.6),
            conflict_threshold: T::lit(0.999),
            kappa: T::lit(0.1),
            tau: T::lit(2.0),
            tau_page: 2,
            epsilon: T::lit(0.1),
            linear_weights: Modality::ALL.iter().map(|&m| (m, third)).collect(),
            prior_floor: T::zero(),
            likelihood_floor: T::zero(),
            default_prior: T::lit(0.1),
        }
    }
}

fn check<T: Scalar>(
    field: &'static str,
    value: T,
    range: &'static str,
    ok: impl Fn(T) -> bool,
) -> Result<(), ConfigError> {
    if value.is_finite() && ok(value) {
        Ok(())
    } else {
        Err(ConfigError::OutOfRange {
            field,
            value: value.to_f64().unwrap_or(f64::NAN),
            range,
        })
    }
}

impl<T: Scalar> FusionConfig<T> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let (zero, one) = (T::zero(), T::one());
        let unit = |v: T| v >= zero && v <= one;
        check("alpha", self.alpha, "[0, 1]", unit)?;
        check("beta", self.beta, "[0, 1]", unit)?;
        check("conflict_threshold", self.conflict_threshold, "(0, 1]", |v| {
            v > zero && v <= one
        })?;
        check("kappa", self.kappa, "(0, inf)", |v| v > zero)?;
        check("tau", self.tau, "(0, inf)", |v| v > zero)?;
        if self.tau_page == 0 {
            return Err(ConfigError::OutOfRange {
                field: "tau_page",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        check("epsilon", self.epsilon, "(0, 1)", |v| v > zero && v < one)?;
        check("prior_floor", self.prior_floor, "[0, 1]", unit)?;
        check("likelihood_floor", self.likelihood_floor, "[0, 1]", unit)?;
        check("default_prior", self.default_prior, "(0, 1]", |v| {
            v > zero && v <= one
        })?;
        let mut sum = zero;
        for (&m, &w) in &self.linear_weights {
            if !w.is_finite() || w < zero {
                return Err(ConfigError::NegativeWeight(m));
            }
            sum = sum + w;
        }
        if (sum - one).abs() > T::lit(1e-6) {
            return Err(ConfigError::WeightSum(sum.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(())
    }
}
