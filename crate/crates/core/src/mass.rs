//! Mass functions over the binary frame {relevant, irrelevant} and Dempster's rule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::FusionConfig;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid mass triple (Y={m_y}, N={m_n}, Omega={m_omega}): masses must be non-negative and sum to 1")]
pub struct InvalidMass {
    pub m_y: f64,
    pub m_n: f64,
    pub m_omega: f64,
}

/// Belief triple `(m(Y), m(N), m(Omega))`.
///
/// Construction rejects negative masses and triples that do not sum to one
/// within [`Scalar::mass_tolerance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct MassFunction<T> {
    m_y: T,
    m_n: T,
    m_omega: T,
}

impl<T: Scalar> MassFunction<T> {
    pub fn new(m_y: T, m_n: T, m_omega: T) -> Result<Self, InvalidMass> {
        let zero = T::zero();
        let sum = m_y + m_n + m_omega;
        let ok = m_y >= zero
            && m_n >= zero
            && m_omega >= zero
            && (sum - T::one()).abs() <= T::mass_tolerance();
        if !ok {
            return Err(InvalidMass {
                m_y: m_y.to_f64().unwrap_or(f64::NAN),
                m_n: m_n.to_f64().unwrap_or(f64::NAN),
                m_omega: m_omega.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { m_y, m_n, m_omega })
    }

    /// Total ignorance, the neutral element of [`combine_dempster`].
    pub fn vacuous() -> Self {
        Self {
            m_y: T::zero(),
            m_n: T::zero(),
            m_omega: T::one(),
        }
    }

    pub fn m_y(&self) -> T {
        self.m_y
    }

    pub fn m_n(&self) -> T {
        self.m_n
    }

    pub fn m_omega(&self) -> T {
        self.m_omega
    }

    /// Mass assigned to contradictory singleton pairs when combined with `other`.
    pub fn conflict_with(&self, other: &Self) -> T {
        self.m_y * other.m_n + self.m_n * other.m_y
    }
}

/// Outcome of one application of Dempster's rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Combination<T> {
    Combined { mass: MassFunction<T>, conflict: T },
    /// The sources contradict each other at or beyond the configured threshold.
    ExtremeConflict { conflict: T },
}

impl<T: Scalar> Combination<T> {
    pub fn conflict(&self) -> T {
        match *self {
            Combination::Combined { conflict, .. } | Combination::ExtremeConflict { conflict } => {
                conflict
            }
        }
    }

    pub fn mass(&self) -> Option<MassFunction<T>> {
        match *self {
            Combination::Combined { mass, .. } => Some(mass),
            Combination::ExtremeConflict { .. } => None,
        }
    }
}

const MIN_DENOMINATOR: f64 = 1e-12;

/// `current ⊕ incoming`.
///
/// Each numerator groups its cross terms so that swapping the operands yields
/// bit-identical output.
pub fn combine_dempster<T: Scalar>(
    current: &MassFunction<T>,
    incoming: &MassFunction<T>,
    config: &FusionConfig<T>,
) -> Combination<T> {
    let (a, b) = (current, incoming);
    let conflict = a.conflict_with(b);
    let denom = T::one() - conflict;
    if conflict >= config.conflict_threshold || denom < T::lit(MIN_DENOMINATOR) {
        return Combination::ExtremeConflict { conflict };
    }
    let y = a.m_y * b.m_y + (a.m_y * b.m_omega + a.m_omega * b.m_y);
    let n = a.m_n * b.m_n + (a.m_n * b.m_omega + a.m_omega * b.m_n);
    let omega = a.m_omega * b.m_omega;
    Combination::Combined {
        mass: MassFunction {
            m_y: y / denom,
            m_n: n / denom,
            m_omega: omega / denom,
        },
        conflict,
    }
}

/// Pignistic probability of the relevant hypothesis, `m(Y) + m(Omega) / 2`.
pub fn pignistic<T: Scalar>(m: &MassFunction<T>) -> T {
    m.m_y + m.m_omega * T::half()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(y: f64, n: f64, o: f64) -> MassFunction<f64> {
        MassFunction::new(y, n, o).unwrap()
    }

    fn cfg() -> FusionConfig<f64> {
        FusionConfig::default()
    }

    fn close(a: &MassFunction<f64>, b: (f64, f64, f64), tol: f64) -> bool {
        (a.m_y() - b.0).abs() <= tol && (a.m_n() - b.1).abs() <= tol && (a.m_omega() - b.2).abs() <= tol
    }

    #[test]
    fn constructor_rejects_invalid() {
        assert!(MassFunction::new(0.5, 0.5, 0.1).is_err());
        assert!(MassFunction::new(-0.1, 0.6, 0.5).is_err());
        assert!(MassFunction::new(0.2, 0.3, 0.5 + 5e-10).is_ok());
        assert!(MassFunction::<f64>::new(f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn self_combination_of_full_bpa() {
        let r = combine_dempster(&m(0.7, 0.0, 0.3), &m(0.7, 0.0, 0.3), &cfg());
        assert_eq!(r.conflict(), 0.0);
        assert!(close(&r.mass().unwrap(), (0.91, 0.0, 0.09), 1e-12));
    }

    #[test]
    fn partial_conflict_example() {
        let r = combine_dempster(&m(0.6, 0.2, 0.2), &m(0.3, 0.5, 0.2), &cfg());
        assert!((r.conflict() - 0.36).abs() < 1e-12);
        assert!(close(&r.mass().unwrap(), (0.5625, 0.375, 0.0625), 1e-12));
    }

    #[test]
    fn total_conflict() {
        let r = combine_dempster(&m(1.0, 0.0, 0.0), &m(0.0, 1.0, 0.0), &cfg());
        assert_eq!(r, Combination::ExtremeConflict { conflict: 1.0 });
    }

    #[test]
    fn threshold_is_inclusive_and_configurable() {
        // K = 0.9 * 1.0 = 0.9
        let a = m(0.9, 0.0, 0.1);
        let b = m(0.0, 1.0, 0.0);
        assert!(combine_dempster(&a, &b, &cfg()).mass().is_some());
        let mut strict = cfg();
        strict.conflict_threshold = 0.9;
        assert!(combine_dempster(&a, &b, &strict).mass().is_none());
    }

    #[test]
    fn vacuous_is_neutral() {
        let x = m(0.35, 0.3, 0.35);
        let v = MassFunction::vacuous();
        assert_eq!(combine_dempster(&x, &v, &cfg()).mass().unwrap(), x);
        assert_eq!(combine_dempster(&v, &x, &cfg()).mass().unwrap(), x);
    }

    #[test]
    fn pignistic_examples() {
        assert!((pignistic(&m(0.5, 0.3, 0.2)) - 0.6).abs() < 1e-12);
        assert_eq!(pignistic(&MassFunction::<f64>::vacuous()), 0.5);
        assert!((pignistic(&m(0.91, 0.0, 0.09)) - 0.955).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let a = MassFunction::<f32>::new(0.7, 0.0, 0.3).unwrap();
        let r = combine_dempster(&a, &a, &FusionConfig::<f32>::default());
        assert!((r.mass().unwrap().m_y() - 0.91).abs() < 1e-6);
    }

    fn mass_strategy() -> impl Strategy<Value = MassFunction<f64>> {
        (0.0f64..1.0, 0.0f64..1.0).prop_map(|(u, v)| {
            let (lo, hi) = (u.min(v), u.max(v));
            MassFunction::new(lo, hi - lo, 1.0 - hi).unwrap()
        })
    }

    proptest! {
        #[test]
        fn commutative_bitwise(a in mass_strategy(), b in mass_strategy()) {
            prop_assert_eq!(combine_dempster(&a, &b, &cfg()), combine_dempster(&b, &a, &cfg()));
        }

        #[test]
        fn closure(a in mass_strategy(), b in mass_strategy()) {
            if let Some(c) = combine_dempster(&a, &b, &cfg()).mass() {
                prop_assert!(c.m_y() >= 0.0 && c.m_n() >= 0.0 && c.m_omega() >= 0.0);
                prop_assert!((c.m_y() + c.m_n() + c.m_omega() - 1.0).abs() <= 1e-9);
            }
        }

        #[test]
        fn pignistic_complements(a in mass_strategy()) {
            let bet_n = a.m_n() + a.m_omega() / 2.0;
            prop_assert!((pignistic(&a) + bet_n - 1.0).abs() <= 1e-12);
        }
    }
}
