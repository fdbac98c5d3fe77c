//! The `N` algebraic constraints tying coefficients, `Z` and the ratios of
//! the initial data, with linear and Newton solvers and a seeded generator of
//! solvable instances.
//!
//! Residuals use the polynomial form
//! `res_n = Z r_n - sum_m c_{n,m} prod_l r_l^{m_l}` (with `r_N = 1`), so no
//! division by `r_n` is ever needed.

use nalgebra::{DMatrix, DVector};
use num::{BigInt, BigRational, Complex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{enumerate_multi_indices, monomial_eval, HomogeneousSystem, MultiIndex, StateVector};
use crate::scalar::{Regime, Scalar};

type C64 = Complex<f64>;

/// `r_n = z_n(0) / z_N(0)`, with `r_N = 1` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioVector(Vec<Scalar>);

impl RatioVector {
    /// From `r_1, ..., r_{N-1}`; appends `r_N = 1` in `regime`.
    pub fn from_free(free: Vec<Scalar>, regime: Regime) -> Self {
        let mut r = free;
        r.push(Scalar::one(regime));
        RatioVector(r)
    }

    pub fn as_slice(&self) -> &[Scalar] {
        &self.0
    }

    /// `r_1, ..., r_{N-1}`.
    pub fn free(&self) -> &[Scalar] {
        &self.0[..self.0.len() - 1]
    }

    /// 1-based access.
    pub fn get(&self, n: usize) -> Option<&Scalar> {
        n.checked_sub(1).and_then(|i| self.0.get(i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn regime(&self) -> Regime {
        self.0.last().map(Scalar::regime).unwrap_or(Regime::Exact)
    }

    /// `(r_1, ..., r_{N-1}, 1)` as a state vector at step 0.
    pub fn to_state(&self) -> StateVector {
        StateVector::new(self.0.clone())
    }
}

pub fn ratios_from_init(z0: &StateVector) -> Result<RatioVector> {
    let last = z0.last().ok_or(Error::LengthMismatch { expected: 1, found: 0 })?;
    if last.is_zero() {
        return Err(Error::ZeroLastComponent);
    }
    let n = z0.len();
    let mut r = z0.z[..n - 1]
        .iter()
        .map(|c| c.checked_div(last))
        .collect::<Result<Vec<_>, _>>()?;
    r.push(Scalar::one(last.regime()));
    Ok(RatioVector(r))
}

fn check_ratios(sys: &HomogeneousSystem, r: &RatioVector) -> Result<()> {
    if r.len() != sys.n_vars() {
        return Err(Error::LengthMismatch {
            expected: sys.n_vars(),
            found: r.len(),
        });
    }
    Ok(())
}

/// `sum_m c_{n,m} prod_l r_l^{m_l}` over the stored terms of equation `n`,
/// optionally leaving one index out.
fn equation_sum(sys: &HomogeneousSystem, n: usize, r: &RatioVector, skip: Option<&MultiIndex>) -> Result<Scalar> {
    let mut acc = Scalar::zero(sys.regime());
    for (index, c) in sys.terms(n) {
        if Some(index) == skip {
            continue;
        }
        acc = acc.checked_add(&c.checked_mul(&monomial_eval(index, r.as_slice())?)?)?;
    }
    Ok(acc)
}

/// Residual of each constraint, `Z r_n - sum_m c_{n,m} prod_l r_l^{m_l}`.
pub fn constraint_residuals(sys: &HomogeneousSystem, z: &Scalar, r: &RatioVector) -> Result<Vec<Scalar>> {
    check_ratios(sys, r)?;
    (1..=sys.n_vars())
        .map(|n| {
            let lhs = z.checked_mul(&r.as_slice()[n - 1])?;
            Ok(lhs.checked_sub(&equation_sum(sys, n, r, None)?)?)
        })
        .collect()
}

/// The coefficient of equation `equation` at `index`, chosen as an unknown.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Designation {
    pub equation: usize,
    #[serde(rename = "exponents")]
    pub index: MultiIndex,
}

impl Designation {
    pub fn new(equation: usize, index: MultiIndex) -> Self {
        Designation { equation, index }
    }
}

/// Exactly one designation per equation, except `pivot` which has none.
fn check_designations(sys: &HomogeneousSystem, designated: &[Designation], pivot: Option<usize>) -> Result<()> {
    let n_vars = sys.n_vars();
    let mut seen = vec![false; n_vars + 1];
    for d in designated {
        if d.equation == 0 || d.equation > n_vars {
            return Err(Error::InvalidSolveSpec(format!(
                "designated equation {} out of range 1..={n_vars}",
                d.equation
            )));
        }
        if Some(d.equation) == pivot {
            return Err(Error::InvalidSolveSpec(format!(
                "pivot equation {} cannot also carry a designated coefficient",
                d.equation
            )));
        }
        if seen[d.equation] {
            return Err(Error::InvalidSolveSpec(format!(
                "equation {} designated more than once",
                d.equation
            )));
        }
        seen[d.equation] = true;
        if d.index.arity() != n_vars || d.index.degree() != u64::from(sys.degree()) {
            return Err(Error::InvalidSolveSpec(format!(
                "designated exponents {} are not a degree-{} index in {n_vars} variables",
                d.index,
                sys.degree()
            )));
        }
    }
    for (n, hit) in seen.iter().enumerate().skip(1) {
        if !hit && Some(n) != pivot {
            return Err(Error::InvalidSolveSpec(format!(
                "equation {n} has no designated coefficient"
            )));
        }
    }
    Ok(())
}

fn checked_system(sys: &HomogeneousSystem) -> Result<()> {
    sys.validate().map_err(Error::InvalidSystem)
}

/// Replace each designated coefficient with the value that zeroes its
/// equation's residual: `(Z r_n - sum_other) / monomial(r)`.
pub fn solve_designated_coefficients(
    sys: &HomogeneousSystem,
    z: &Scalar,
    r: &RatioVector,
    designated: &[Designation],
) -> Result<HomogeneousSystem> {
    checked_system(sys)?;
    check_ratios(sys, r)?;
    check_designations(sys, designated, None)?;
    solve_rows(sys, z, r, designated)
}

fn solve_rows(
    sys: &HomogeneousSystem,
    z: &Scalar,
    r: &RatioVector,
    designated: &[Designation],
) -> Result<HomogeneousSystem> {
    let mut out = sys.clone();
    for d in designated {
        let mono = monomial_eval(&d.index, r.as_slice())?;
        if mono.is_zero() {
            return Err(Error::ZeroMonomial {
                equation: d.equation,
                index: d.index.clone(),
            });
        }
        let others = equation_sum(sys, d.equation, r, Some(&d.index))?;
        let target = z.checked_mul(&r.as_slice()[d.equation - 1])?;
        let c = target.checked_sub(&others)?.checked_div(&mono)?;
        if c.is_zero() {
            out.remove(d.equation, &d.index);
        } else {
            out.insert(d.equation, d.index.clone(), c);
        }
    }
    Ok(out)
}

/// Resolve `Z` from the fully specified pivot equation, then solve the
/// remaining equations' designated coefficients against it.
pub fn solve_z_pivot(
    sys: &HomogeneousSystem,
    r: &RatioVector,
    pivot_equation: usize,
    designated: &[Designation],
) -> Result<(Scalar, HomogeneousSystem)> {
    checked_system(sys)?;
    check_ratios(sys, r)?;
    if pivot_equation == 0 || pivot_equation > sys.n_vars() {
        return Err(Error::InvalidSolveSpec(format!(
            "pivot equation {pivot_equation} out of range 1..={}",
            sys.n_vars()
        )));
    }
    check_designations(sys, designated, Some(pivot_equation))?;
    let r_pivot = &r.as_slice()[pivot_equation - 1];
    if r_pivot.is_zero() {
        return Err(Error::ZeroPivotRatio {
            equation: pivot_equation,
        });
    }
    let z = equation_sum(sys, pivot_equation, r, None)?.checked_div(r_pivot)?;
    let solved = solve_rows(sys, &z, r, designated)?;
    Ok((z, solved))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonControls {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonControls {
    fn default() -> Self {
        NewtonControls {
            tol: 1e-12,
            max_iter: 50,
            max_halvings: 30,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOutcome {
    pub z: Scalar,
    pub ratios: RatioVector,
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
}

/// Which unknowns a solve determines.
#[derive(Clone, Debug, PartialEq)]
pub enum SolveSpec {
    Coefficients {
        designated: Vec<Designation>,
    },
    ZPivot {
        pivot_equation: usize,
        designated: Vec<Designation>,
    },
    Newton {
        z: Scalar,
        free_ratios: Vec<Scalar>,
        controls: NewtonControls,
    },
}

impl SolveSpec {
    pub fn mode(&self) -> ConstructionMode {
        match self {
            SolveSpec::Coefficients { .. } => ConstructionMode::Coefficients,
            SolveSpec::ZPivot { .. } => ConstructionMode::ZPivot,
            SolveSpec::Newton { .. } => ConstructionMode::Newton,
        }
    }
}

/// Polynomial terms of one equation with float coefficients.
struct FloatTerms(Vec<Vec<(Vec<i32>, C64)>>);

impl FloatTerms {
    fn new(sys: &HomogeneousSystem) -> Result<Self> {
        let mut rows = Vec::with_capacity(sys.n_vars());
        for n in 1..=sys.n_vars() {
            let mut row = Vec::new();
            for (index, c) in sys.terms(n) {
                let c = c.to_float()?.as_float().expect("float after conversion");
                let e = index.exponents().iter().map(|&m| m as i32).collect();
                row.push((e, c));
            }
            rows.push(row);
        }
        Ok(FloatTerms(rows))
    }

    fn ratios(unknowns: &[C64]) -> Vec<C64> {
        let mut r: Vec<C64> = unknowns[1..].to_vec();
        r.push(C64::new(1.0, 0.0));
        r
    }

    fn residual(&self, unknowns: &[C64]) -> Vec<C64> {
        let z = unknowns[0];
        let r = Self::ratios(unknowns);
        self.0
            .iter()
            .enumerate()
            .map(|(n, row)| {
                let sum: C64 = row
                    .iter()
                    .map(|(e, c)| e.iter().zip(&r).fold(*c, |acc, (&m, rl)| acc * rl.powi(m)))
                    .sum();
                z * r[n] - sum
            })
            .collect()
    }

    fn jacobian(&self, unknowns: &[C64]) -> DMatrix<C64> {
        let n_vars = self.0.len();
        let z = unknowns[0];
        let r = Self::ratios(unknowns);
        let mut jac = DMatrix::<C64>::zeros(n_vars, n_vars);
        for (n, row) in self.0.iter().enumerate() {
            jac[(n, 0)] = r[n];
            for k in 0..n_vars - 1 {
                let mut d = if n == k { z } else { C64::new(0.0, 0.0) };
                for (e, c) in row {
                    if e[k] == 0 {
                        continue;
                    }
                    let mut term = *c * f64::from(e[k]);
                    for (l, (&m, rl)) in e.iter().zip(&r).enumerate() {
                        let p = if l == k { m - 1 } else { m };
                        term *= rl.powi(p);
                    }
                    d -= term;
                }
                jac[(n, k + 1)] = d;
            }
        }
        jac
    }
}

fn inf_norm(v: &[C64]) -> f64 {
    let mut worst = 0.0f64;
    for x in v {
        let a = x.norm();
        if !a.is_finite() {
            return f64::INFINITY;
        }
        worst = worst.max(a);
    }
    worst
}

fn newton_unknowns(sys: &HomogeneousSystem, z: &Scalar, free_ratios: &[Scalar]) -> Result<Vec<C64>> {
    if free_ratios.len() + 1 != sys.n_vars() {
        return Err(Error::LengthMismatch {
            expected: sys.n_vars() - 1,
            found: free_ratios.len(),
        });
    }
    std::iter::once(z)
        .chain(free_ratios)
        .map(|s| Ok(s.to_float()?.as_float().expect("float after conversion")))
        .collect()
}

/// Newton residual `F(Z, r_1..r_{N-1})` at float unknowns `[Z, r_1, ..]`.
pub fn newton_residual(sys: &HomogeneousSystem, unknowns: &[C64]) -> Result<Vec<C64>> {
    if unknowns.len() != sys.n_vars() {
        return Err(Error::LengthMismatch {
            expected: sys.n_vars(),
            found: unknowns.len(),
        });
    }
    Ok(FloatTerms::new(sys)?.residual(unknowns))
}

/// Analytic complex Jacobian of [`newton_residual`]; column 0 is `d/dZ`,
/// column `k` is `d/dr_k`.
pub fn newton_jacobian(sys: &HomogeneousSystem, unknowns: &[C64]) -> Result<DMatrix<C64>> {
    if unknowns.len() != sys.n_vars() {
        return Err(Error::LengthMismatch {
            expected: sys.n_vars(),
            found: unknowns.len(),
        });
    }
    Ok(FloatTerms::new(sys)?.jacobian(unknowns))
}

/// Below this ratio of smallest to largest singular value the real-stacked
/// Jacobian is treated as singular.
const SINGULAR_RCOND: f64 = 1e-14;

/// Solve `J delta = -F` through the real `2N x 2N` embedding
/// `[[A, -B], [B, A]]` of `J = A + iB`.
fn newton_step(jac: &DMatrix<C64>, f: &[C64]) -> Result<Vec<C64>> {
    let n = f.len();
    let mut real = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut rhs = DVector::<f64>::zeros(2 * n);
    for i in 0..n {
        for j in 0..n {
            let a = jac[(i, j)];
            real[(i, j)] = a.re;
            real[(i, j + n)] = -a.im;
            real[(i + n, j)] = a.im;
            real[(i + n, j + n)] = a.re;
        }
        rhs[i] = -f[i].re;
        rhs[i + n] = -f[i].im;
    }
    let sv = real.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if smax.is_nan() || smax <= 0.0 || !condition.is_finite() || smin <= smax * SINGULAR_RCOND {
        return Err(Error::SingularJacobian { condition });
    }
    let x = real.lu().solve(&rhs).ok_or(Error::SingularJacobian { condition })?;
    Ok((0..n).map(|i| C64::new(x[i], x[i + n])).collect())
}

/// Damped Newton for `(Z, r_1, ..., r_{N-1})` with all coefficients fixed.
///
/// Converged when `||F||_inf <= tol * (1 + |Z|)`. A step is halved up to
/// `max_halvings` times until the residual norm decreases; if it never does,
/// or `max_iter` is reached, the best iterate comes back in
/// [`Error::NotConverged`].
pub fn newton_solve(
    sys: &HomogeneousSystem,
    guess_z: &Scalar,
    guess_free_ratios: &[Scalar],
    controls: &NewtonControls,
) -> Result<NewtonOutcome> {
    checked_system(sys)?;
    let terms = FloatTerms::new(sys)?;
    let mut x = newton_unknowns(sys, guess_z, guess_free_ratios)?;
    let mut f = terms.residual(&x);
    let mut norm = inf_norm(&f);

    let outcome = |x: &[C64], iterations, residual_norm, converged| -> Result<NewtonOutcome> {
        let z = Scalar::float(x[0].re, x[0].im)?;
        let free = x[1..]
            .iter()
            .map(|c| Scalar::float(c.re, c.im))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(NewtonOutcome {
            z,
            ratios: RatioVector::from_free(free, Regime::Float),
            iterations,
            residual_norm,
            converged,
        })
    };

    let mut iterations = 0;
    loop {
        if norm <= controls.tol * (1.0 + x[0].norm()) {
            return outcome(&x, iterations, norm, true);
        }
        if iterations >= controls.max_iter {
            break;
        }
        let delta = newton_step(&terms.jacobian(&x), &f)?;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=controls.max_halvings {
            let trial: Vec<C64> = x.iter().zip(&delta).map(|(a, d)| a + d * scale).collect();
            let ft = terms.residual(&trial);
            let nt = inf_norm(&ft);
            if nt < norm {
                accepted = Some((trial, ft, nt));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((trial, ft, nt)) => {
                x = trial;
                f = ft;
                norm = nt;
                iterations += 1;
            }
            None => break,
        }
    }
    Err(Error::NotConverged(Box::new(outcome(&x, iterations, norm, false)?)))
}

/// How a solvable instance was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructionMode {
    Coefficients,
    ZPivot,
    Newton,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    /// Largest residual modulus; exactly `0.0` iff every residual vanishes.
    pub max_residual: f64,
    pub mode: ConstructionMode,
}

/// A system, initial data and `Z` together with the residual certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct SolvableInstance {
    pub system: HomogeneousSystem,
    pub z0: StateVector,
    pub z: Scalar,
    pub certificate: Certificate,
}

impl SolvableInstance {
    /// Bundle and measure the constraint residuals. Fails on invalid systems,
    /// mismatched lengths or regimes, or `z_N(0) = 0`; a nonzero residual is
    /// recorded, not rejected.
    pub fn certify(system: HomogeneousSystem, z0: StateVector, z: Scalar, mode: ConstructionMode) -> Result<Self> {
        checked_system(&system)?;
        if z0.len() != system.n_vars() {
            return Err(Error::LengthMismatch {
                expected: system.n_vars(),
                found: z0.len(),
            });
        }
        for c in z0.z.iter().chain(std::iter::once(&z)) {
            if c.regime() != system.regime() {
                return Err(Error::RegimeMismatch {
                    expected: system.regime(),
                    found: c.regime(),
                });
            }
        }
        let r = ratios_from_init(&z0)?;
        let residuals = constraint_residuals(&system, &z, &r)?;
        let max_residual = residuals
            .iter()
            .filter(|c| !c.is_zero())
            .map(|c| c.magnitude().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        Ok(SolvableInstance {
            system,
            z0,
            z,
            certificate: Certificate { max_residual, mode },
        })
    }

    pub fn regime(&self) -> Regime {
        self.system.regime()
    }

    pub fn n_vars(&self) -> usize {
        self.system.n_vars()
    }

    pub fn degree(&self) -> u32 {
        self.system.degree()
    }

    /// `Z = 0`: the trajectory collapses to zero from step 1 on.
    pub fn is_degenerate(&self) -> bool {
        self.z.is_zero()
    }

    pub fn ratios(&self) -> Result<RatioVector> {
        ratios_from_init(&self.z0)
    }

    pub fn residuals(&self) -> Result<Vec<Scalar>> {
        constraint_residuals(&self.system, &self.z, &self.ratios()?)
    }

    /// Float copy with a freshly computed certificate.
    pub fn to_float(&self) -> Result<SolvableInstance> {
        SolvableInstance::certify(
            self.system.to_float()?,
            self.z0.to_float()?,
            self.z.to_float()?,
            self.certificate.mode,
        )
    }
}

/// Dyadic Gaussian rationals with parts in `[-1, 1]` and denominator 8.
const POOL_DENOMINATOR: i64 = 8;

pub(crate) fn draw(rng: &mut ChaCha8Rng) -> Scalar {
    let mut part = || {
        let k: i64 = rng.gen_range(-POOL_DENOMINATOR..=POOL_DENOMINATOR);
        BigRational::new(BigInt::from(k), BigInt::from(POOL_DENOMINATOR))
    };
    let re = part();
    let im = part();
    Scalar::exact(re, im)
}

pub(crate) fn draw_nonzero(rng: &mut ChaCha8Rng) -> Scalar {
    loop {
        let s = draw(rng);
        if !s.is_zero() {
            return s;
        }
    }
}

/// Seeded random solvable instance.
///
/// Coefficients are populated with probability `density` from the pool; each
/// non-pivot equation's `(0,...,0,M)` coefficient is then solved for, since
/// its monomial value `r_N^M = 1` is never zero. In `ZPivot` mode `Z` is read
/// off a fully random last equation instead of being drawn. The exact instance
/// is converted when `regime` is `Float`.
pub fn random_solvable_instance(
    n_vars: usize,
    degree: u32,
    seed: u64,
    mode: ConstructionMode,
    density: f64,
    regime: Regime,
) -> Result<SolvableInstance> {
    if n_vars == 0 || degree < 2 {
        return Err(Error::InvalidSolveSpec(format!(
            "generator needs N >= 1 and M >= 2 (got N = {n_vars}, M = {degree})"
        )));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidSolveSpec(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free: Vec<Scalar> = (1..n_vars).map(|_| draw_nonzero(&mut rng)).collect();
    let r = RatioVector::from_free(free, Regime::Exact);
    let drawn_z = draw_nonzero(&mut rng);

    let mut sys = HomogeneousSystem::new(n_vars, degree, Regime::Exact);
    let basis = enumerate_multi_indices(n_vars, degree);
    for n in 1..=n_vars {
        for index in &basis {
            if rng.gen_bool(density) {
                let c = draw(&mut rng);
                if !c.is_zero() {
                    sys.insert(n, index.clone(), c);
                }
            }
        }
    }

    let pure_last = MultiIndex::pure_last(n_vars, degree);
    let (z, solved) = match mode {
        ConstructionMode::ZPivot => {
            // Z must be nonzero; the pure z_N^M term shifts it freely.
            while equation_sum(&sys, n_vars, &r, None)?.is_zero() {
                sys.insert(n_vars, pure_last.clone(), draw_nonzero(&mut rng));
            }
            let designated: Vec<_> = (1..n_vars).map(|n| Designation::new(n, pure_last.clone())).collect();
            solve_z_pivot(&sys, &r, n_vars, &designated)?
        }
        ConstructionMode::Newton => {
            return Err(Error::InvalidSolveSpec(
                "the generator builds instances in coefficients or z-pivot mode".into(),
            ))
        }
        ConstructionMode::Coefficients => {
            let designated: Vec<_> = (1..=n_vars).map(|n| Designation::new(n, pure_last.clone())).collect();
            let solved = solve_designated_coefficients(&sys, &drawn_z, &r, &designated)?;
            (drawn_z, solved)
        }
    };

    let lambda = draw_nonzero(&mut rng);
    let z0 = r.to_state().scaled(&lambda)?;
    let exact = SolvableInstance::certify(solved, z0, z, mode)?;
    match regime {
        Regime::Exact => Ok(exact),
        Regime::Float => exact.to_float(),
    }
}
