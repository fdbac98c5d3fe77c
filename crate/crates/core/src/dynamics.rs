//! Forward iteration of the map and the closed-form solution.

use num::BigUint;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{monomial_eval, HomogeneousSystem, StateVector};
use crate::scalar::{BigExponent, Scalar, ScalarError};

/// Cap on exact-regime growth, in bits of the largest numerator or
/// denominator of any state component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeBudget {
    pub max_bits: u64,
}

impl Default for SizeBudget {
    fn default() -> Self {
        SizeBudget { max_bits: 1_000_000 }
    }
}

impl SizeBudget {
    pub fn unlimited() -> Self {
        SizeBudget { max_bits: u64::MAX }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationReason {
    Overflow,
    SizeBudget,
}

/// Step that could not be produced, and why.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Truncation {
    pub step: u64,
    pub reason: TruncationReason,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<StateVector>,
    pub truncation: Option<Truncation>,
}

impl Trajectory {
    pub fn truncated_at(&self) -> Option<u64> {
        self.truncation.map(|t| t.step)
    }

    /// Last step actually computed.
    pub fn horizon_achieved(&self) -> u64 {
        self.states.len().saturating_sub(1) as u64
    }
}

fn check_state(sys: &HomogeneousSystem, z: &StateVector) -> Result<()> {
    if z.len() != sys.n_vars() {
        return Err(Error::LengthMismatch {
            expected: sys.n_vars(),
            found: z.len(),
        });
    }
    for c in &z.z {
        if c.regime() != sys.regime() {
            return Err(Error::RegimeMismatch {
                expected: sys.regime(),
                found: c.regime(),
            });
        }
    }
    Ok(())
}

/// One application of the map: `z_n(s+1) = sum_m c_{n,m} prod_l z_l(s)^{m_l}`.
pub fn eval_rhs(sys: &HomogeneousSystem, z: &StateVector) -> Result<StateVector> {
    check_state(sys, z)?;
    let mut next = Vec::with_capacity(sys.n_vars());
    for n in 1..=sys.n_vars() {
        let mut acc = Scalar::zero(sys.regime());
        for (index, c) in sys.terms(n) {
            acc = acc.checked_add(&c.checked_mul(&monomial_eval(index, &z.z)?)?)?;
        }
        next.push(acc);
    }
    Ok(StateVector::at_step(z.step + 1, next))
}

/// Iterate the map `horizon` times from `z0` without a size budget.
pub fn iterate(sys: &HomogeneousSystem, z0: &StateVector, horizon: u64) -> Result<Trajectory> {
    iterate_with_budget(sys, z0, horizon, SizeBudget::unlimited())
}

/// Iterate the map, stopping early (in-band) on float overflow or when the
/// next exact state would exceed `budget`. States predicted to exceed it
/// (`M * bits(current)`, the growth rate of a degree-`M` map) are not
/// computed at all.
pub fn iterate_with_budget(
    sys: &HomogeneousSystem,
    z0: &StateVector,
    horizon: u64,
    budget: SizeBudget,
) -> Result<Trajectory> {
    check_state(sys, z0)?;
    let mut current = StateVector::at_step(0, z0.z.clone());
    let mut states = vec![current.clone()];
    let mut truncation = None;
    for s in 1..=horizon {
        let predicted = current.bit_size().saturating_mul(u64::from(sys.degree()));
        if predicted > budget.max_bits {
            truncation = Some(Truncation {
                step: s,
                reason: TruncationReason::SizeBudget,
            });
            break;
        }
        match eval_rhs(sys, &current) {
            Ok(next) if next.bit_size() > budget.max_bits => {
                truncation = Some(Truncation {
                    step: s,
                    reason: TruncationReason::SizeBudget,
                });
                break;
            }
            Ok(next) => {
                states.push(next.clone());
                current = next;
            }
            Err(Error::Scalar(ScalarError::Overflow { .. })) => {
                truncation = Some(Truncation {
                    step: s,
                    reason: TruncationReason::Overflow,
                });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Trajectory { states, truncation })
}

/// `1 + M + ... + M^(s-1)`, i.e. `(M^s - 1)/(M - 1)`.
pub fn geometric_exponent(degree: u32, s: u64) -> BigExponent {
    let m = BigUint::from(degree);
    let mut acc = BigUint::from(0u32);
    for _ in 0..s {
        acc = acc * &m + 1u32;
    }
    BigExponent(acc)
}

/// `M^s - 1`.
pub fn power_exponent(degree: u32, s: u64) -> BigExponent {
    let p = num::pow::pow(BigUint::from(degree), s as usize);
    BigExponent(p - 1u32)
}

/// `z_n(s) = z_n(0) * z_N(0)^(M^s - 1) * Z^((M^s - 1)/(M - 1))`.
pub fn closed_form_state(z0: &StateVector, z: &Scalar, degree: u32, s: u64) -> Result<StateVector> {
    let last = z0.last().ok_or(Error::LengthMismatch { expected: 1, found: 0 })?;
    let factor = last
        .pow(&power_exponent(degree, s))?
        .checked_mul(&z.pow(&geometric_exponent(degree, s))?)?;
    let components =
        z0.z.iter()
            .map(|c| c.checked_mul(&factor))
            .collect::<Result<Vec<_>, _>>()?;
    Ok(StateVector::at_step(s, components))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MultiIndex;
    use crate::scalar::Regime;

    fn g(re: i64) -> Scalar {
        Scalar::gaussian(re, 0)
    }

    fn hand_system() -> HomogeneousSystem {
        HomogeneousSystem::from_dense(2, 2, &[vec![g(1), g(1), g(1)], vec![g(2), g(0), g(1)]]).unwrap()
    }

    #[test]
    fn single_term_rhs() {
        let mut sys = HomogeneousSystem::new(3, 3, Regime::Exact);
        sys.insert(1, MultiIndex::pure_first(3, 3), g(1));
        let out = eval_rhs(&sys, &StateVector::new(vec![g(2), g(5), g(7)])).unwrap();
        assert_eq!(out.z, vec![g(8), g(0), g(0)]);
        assert_eq!(out.step, 1);
    }

    #[test]
    fn hand_checked_rhs() {
        let out = eval_rhs(&hand_system(), &StateVector::new(vec![g(1), g(1)])).unwrap();
        assert_eq!(out.z, vec![g(3), g(3)]);
    }

    #[test]
    fn zero_state_maps_to_zero() {
        let out = eval_rhs(&hand_system(), &StateVector::new(vec![g(0), g(0)])).unwrap();
        assert!(out.z.iter().all(Scalar::is_zero));
    }

    #[test]
    fn rhs_rejects_wrong_length_and_regime() {
        let sys = hand_system();
        assert!(matches!(
            eval_rhs(&sys, &StateVector::new(vec![g(1)])),
            Err(Error::LengthMismatch { .. })
        ));
        let f = Scalar::float(1.0, 0.0).unwrap();
        assert!(matches!(
            eval_rhs(&sys, &StateVector::new(vec![f.clone(), f])),
            Err(Error::RegimeMismatch { .. })
        ));
    }

    #[test]
    fn iterate_horizon_zero() {
        let z0 = StateVector::new(vec![g(1), g(1)]);
        let t = iterate(&hand_system(), &z0, 0).unwrap();
        assert_eq!(t.states, vec![z0]);
        assert_eq!(t.truncation, None);
    }

    #[test]
    fn iterate_hand_instance() {
        let t = iterate(&hand_system(), &StateVector::new(vec![g(1), g(1)]), 2).unwrap();
        let z: Vec<_> = t.states.iter().map(|s| s.z.clone()).collect();
        assert_eq!(z, vec![vec![g(1), g(1)], vec![g(3), g(3)], vec![g(27), g(27)]]);
        let steps: Vec<_> = t.states.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 1, 2]);
    }

    #[test]
    fn float_overflow_truncates() {
        let sys = hand_system().to_float().unwrap();
        let huge = Scalar::float(1e60, 0.0).unwrap();
        let t = iterate(&sys, &StateVector::new(vec![huge.clone(), huge]), 3).unwrap();
        assert_eq!(t.truncated_at(), Some(1));
        assert_eq!(t.states.len(), 1);
        assert_eq!(t.truncation.unwrap().reason, TruncationReason::Overflow);
    }

    #[test]
    fn size_budget_truncates() {
        let z0 = StateVector::new(vec![g(1000), g(3)]);
        let t = iterate_with_budget(&hand_system(), &z0, 10, SizeBudget { max_bits: 200 }).unwrap();
        let cut = t.truncation.expect("budget should cut the trajectory");
        assert_eq!(cut.reason, TruncationReason::SizeBudget);
        assert_eq!(t.horizon_achieved() + 1, cut.step);
        assert!(t.states.iter().all(|s| s.bit_size() <= 200));
    }

    #[test]
    fn geometric_exponents() {
        assert_eq!(geometric_exponent(4, 1), BigExponent::from(1));
        assert_eq!(geometric_exponent(4, 2), BigExponent::from(5));
        assert_eq!(geometric_exponent(7, 0), BigExponent::from(0));
        assert_eq!(geometric_exponent(3, 4), BigExponent::from(40));
        assert_eq!(power_exponent(4, 0), BigExponent::from(0));
        assert_eq!(power_exponent(4, 3), BigExponent::from(63));
    }

    #[test]
    fn closed_form_at_zero_is_initial_data() {
        let z0 = StateVector::new(vec![g(0), g(0)]);
        assert_eq!(closed_form_state(&z0, &g(0), 4, 0).unwrap(), z0);
        let z0 = StateVector::new(vec![Scalar::ratio(3, 7), Scalar::gaussian(2, -1)]);
        assert_eq!(closed_form_state(&z0, &Scalar::gaussian(5, 5), 3, 0).unwrap(), z0);
    }

    #[test]
    fn closed_form_hand_instance() {
        let z0 = StateVector::new(vec![g(1), g(1)]);
        let s2 = closed_form_state(&z0, &g(3), 2, 2).unwrap();
        assert_eq!(s2.z, vec![g(27), g(27)]);
        assert_eq!(s2.step, 2);
    }

    #[test]
    fn closed_form_degree_four_shape() {
        // z_n(s) = z_n(0) z_2(0)^(4^s - 1) Z^((4^s - 1)/3)
        let z0 = StateVector::new(vec![g(3), g(2)]);
        let z = Scalar::ratio(1, 2);
        for s in 0..4u32 {
            let p = 4i64.pow(s) - 1;
            let factor = g(2)
                .pow_u64(p as u64)
                .unwrap()
                .checked_mul(&z.pow_u64((p / 3) as u64).unwrap())
                .unwrap();
            let want = vec![g(3).checked_mul(&factor).unwrap(), g(2).checked_mul(&factor).unwrap()];
            assert_eq!(closed_form_state(&z0, &z, 4, u64::from(s)).unwrap().z, want);
        }
    }
}
