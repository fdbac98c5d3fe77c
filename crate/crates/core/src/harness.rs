//! Verification of the closed form against direct iteration, and the
//! built-in two-variable, degree-four demonstration.

use num::{BigRational, One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constraints::{
    draw_nonzero, solve_designated_coefficients, solve_z_pivot, ConstructionMode, Designation, RatioVector,
    SolvableInstance,
};
use crate::dynamics::{closed_form_state, iterate_with_budget, SizeBudget, Truncation, TruncationReason};
use crate::error::{Error, Result};
use crate::model::{enumerate_multi_indices, HomogeneousSystem, MultiIndex};
use crate::scalar::{Regime, Scalar, ScalarError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ExactMatch,
    WithinTolerance,
    Mismatch,
    Truncated,
}

/// Largest deviation over the components of one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepDeviation {
    pub step: u64,
    pub max_abs: f64,
    /// `|a - b| / max(1, |a|, |b|)`.
    pub max_rel: f64,
}

/// First step and (1-based) component where iterate and closed form disagree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MismatchLocation {
    pub step: u64,
    pub component: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub regime: Regime,
    pub horizon_requested: u64,
    pub horizon_achieved: u64,
    pub tol: f64,
    pub steps: Vec<StepDeviation>,
    pub truncation: Option<Truncation>,
    pub first_mismatch: Option<MismatchLocation>,
    /// `Z = 0`: every state from step 1 on is zero.
    pub degenerate: bool,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn truncated_at(&self) -> Option<u64> {
        self.truncation.map(|t| t.step)
    }

    pub fn is_success(&self) -> bool {
        matches!(self.verdict, Verdict::ExactMatch | Verdict::WithinTolerance)
    }
}

fn exact_deviation(a: &Scalar, b: &Scalar) -> (bool, f64, f64) {
    let (a, b) = (a.as_exact().expect("exact"), b.as_exact().expect("exact"));
    let d = a - b;
    let d2 = d.norm_sqr();
    if d2.is_zero() {
        return (true, 0.0, 0.0);
    }
    let scale = [BigRational::one(), a.norm_sqr(), b.norm_sqr()]
        .into_iter()
        .max()
        .expect("nonempty");
    let rel = (&d2 / scale).to_f64().map(f64::sqrt).unwrap_or(f64::INFINITY);
    let abs = d2.to_f64().map(f64::sqrt).unwrap_or(f64::INFINITY);
    (false, abs, rel)
}

fn float_deviation(a: &Scalar, b: &Scalar) -> (f64, f64) {
    let (a, b) = (a.as_float().expect("float"), b.as_float().expect("float"));
    let abs = (a - b).norm();
    let rel = abs / 1f64.max(a.norm()).max(b.norm());
    (abs, rel)
}

/// [`verify_instance_with_budget`] with the default size budget.
pub fn verify_instance(inst: &SolvableInstance, horizon: u64, tol: f64) -> Result<VerificationReport> {
    verify_instance_with_budget(inst, horizon, tol, SizeBudget::default())
}

/// Iterate the instance's map and compare every achieved step with the
/// closed form. Exact instances must agree exactly; float instances must
/// agree to relative deviation `tol` per component.
///
/// Float overflow stops the comparison in-band (reported in `truncation`
/// without changing the verdict); hitting the exact size budget before
/// `horizon` yields [`Verdict::Truncated`] unless a mismatch came first.
pub fn verify_instance_with_budget(
    inst: &SolvableInstance,
    horizon: u64,
    tol: f64,
    budget: SizeBudget,
) -> Result<VerificationReport> {
    let regime = inst.regime();
    let traj = iterate_with_budget(&inst.system, &inst.z0, horizon, budget)?;
    let mut truncation = traj.truncation;
    let mut steps = Vec::with_capacity(traj.states.len());
    let mut first_mismatch = None;

    'steps: for state in &traj.states {
        let closed = match closed_form_state(&inst.z0, &inst.z, inst.degree(), state.step) {
            Ok(c) => c,
            Err(Error::Scalar(ScalarError::Overflow { .. })) => {
                truncation = Some(Truncation {
                    step: state.step,
                    reason: TruncationReason::Overflow,
                });
                break 'steps;
            }
            Err(e) => return Err(e),
        };
        let mut dev = StepDeviation {
            step: state.step,
            max_abs: 0.0,
            max_rel: 0.0,
        };
        for (k, (a, b)) in state.z.iter().zip(&closed.z).enumerate() {
            let (equal, abs, rel) = match regime {
                Regime::Exact => exact_deviation(a, b),
                Regime::Float => {
                    let (abs, rel) = float_deviation(a, b);
                    (rel <= tol, abs, rel)
                }
            };
            dev.max_abs = dev.max_abs.max(abs);
            dev.max_rel = dev.max_rel.max(rel);
            if !equal && first_mismatch.is_none() {
                first_mismatch = Some(MismatchLocation {
                    step: state.step,
                    component: k + 1,
                });
            }
        }
        steps.push(dev);
        if first_mismatch.is_some() {
            break;
        }
    }

    let horizon_achieved = steps.last().map(|d| d.step).unwrap_or(0);
    let verdict = if first_mismatch.is_some() {
        Verdict::Mismatch
    } else if matches!(truncation, Some(t) if t.reason == TruncationReason::SizeBudget) {
        Verdict::Truncated
    } else {
        match regime {
            Regime::Exact => Verdict::ExactMatch,
            Regime::Float => Verdict::WithinTolerance,
        }
    };
    Ok(VerificationReport {
        regime,
        horizon_requested: horizon,
        horizon_achieved,
        tol,
        steps,
        truncation,
        first_mismatch,
        degenerate: inst.is_degenerate(),
        verdict,
    })
}

pub const EXAMPLE_SEED: u64 = 2021;
pub const EXAMPLE_HORIZON: u64 = 4;

/// One solve of the demonstration system and its verification.
#[derive(Clone, Debug)]
pub struct ExampleCase {
    pub instance: SolvableInstance,
    pub report: VerificationReport,
    /// Coefficients (and `Z`) that were solved for rather than drawn.
    pub solved: Vec<Designation>,
}

#[derive(Clone, Debug)]
pub struct ExampleRun {
    /// Two coefficients solved for, given `Z`, `r` and the other eight.
    pub coefficients: ExampleCase,
    /// `Z` and one coefficient solved for, given `r` and the other nine.
    pub z_pivot: ExampleCase,
}

/// The two-variable, degree-four system: ten seeded coefficients, seeded
/// `r = z_1(0)/z_2(0)` and `Z`, solved both ways and verified exactly to
/// [`EXAMPLE_HORIZON`].
pub fn run_example(seed: u64) -> Result<ExampleRun> {
    const N: usize = 2;
    const M: u32 = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = RatioVector::from_free(vec![draw_nonzero(&mut rng)], Regime::Exact);
    let z = draw_nonzero(&mut rng);
    let scale = draw_nonzero(&mut rng);
    let mut sys = HomogeneousSystem::new(N, M, Regime::Exact);
    for n in 1..=N {
        for index in enumerate_multi_indices(N, M) {
            sys.insert(n, index, draw_nonzero(&mut rng));
        }
    }
    let z0 = r.to_state().scaled(&scale)?;

    let middle = MultiIndex::new(vec![2, 2]);
    let designated = vec![
        Designation::new(1, middle.clone()),
        Designation::new(2, MultiIndex::pure_last(N, M)),
    ];
    let solved = solve_designated_coefficients(&sys, &z, &r, &designated)?;
    let instance = SolvableInstance::certify(solved, z0.clone(), z, ConstructionMode::Coefficients)?;
    let report = verify_instance(&instance, EXAMPLE_HORIZON, 0.0)?;
    let coefficients = ExampleCase {
        instance,
        report,
        solved: designated,
    };

    let designated = vec![Designation::new(1, middle)];
    let (z, solved) = solve_z_pivot(&sys, &r, N, &designated)?;
    let instance = SolvableInstance::certify(solved, z0, z, ConstructionMode::ZPivot)?;
    let report = verify_instance(&instance, EXAMPLE_HORIZON, 0.0)?;
    let z_pivot = ExampleCase {
        instance,
        report,
        solved: designated,
    };

    Ok(ExampleRun { coefficients, z_pivot })
}
