//! Multi-indices, state vectors and the sparse homogeneous system.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Regime, Scalar, ScalarError};

/// Exponent vector `(m_1, ..., m_N)` of a monomial.
///
/// Ordered descending-lexicographically, so `(M,0,...,0)` sorts first and
/// `(0,...,0,M)` last.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    /// `(0, ..., 0, degree)` with `n_vars` entries.
    pub fn pure_last(n_vars: usize, degree: u32) -> Self {
        let mut e = vec![0; n_vars];
        if let Some(last) = e.last_mut() {
            *last = degree;
        }
        MultiIndex(e)
    }

    /// `(degree, 0, ..., 0)` with `n_vars` entries.
    pub fn pure_first(n_vars: usize, degree: u32) -> Self {
        let mut e = vec![0; n_vars];
        if let Some(first) = e.first_mut() {
            *first = degree;
        }
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&m| u64::from(m)).sum()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.cmp(&self.0)
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str(")")
    }
}

/// All exponent vectors of length `n_vars` summing to `degree`, in
/// descending lexicographic order.
pub fn enumerate_multi_indices(n_vars: usize, degree: u32) -> Vec<MultiIndex> {
    fn fill(prefix: &mut Vec<u32>, slots: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for m in (0..=remaining).rev() {
            prefix.push(m);
            fill(prefix, slots - 1, remaining - m, out);
            prefix.pop();
        }
    }

    let mut out = Vec::new();
    if n_vars == 0 {
        if degree == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return out;
    }
    fill(&mut Vec::with_capacity(n_vars), n_vars, degree, &mut out);
    out
}

/// `C(degree + n_vars - 1, n_vars - 1)`.
pub fn multi_index_count(n_vars: usize, degree: u32) -> u64 {
    if n_vars == 0 {
        return u64::from(degree == 0);
    }
    let n = n_vars as u64;
    num::integer::binomial(u64::from(degree) + n - 1, n - 1)
}

/// `prod_l z_l^{m_l}` with `0^0 = 1`.
pub fn monomial_eval(index: &MultiIndex, z: &[Scalar]) -> Result<Scalar> {
    if index.arity() != z.len() {
        return Err(Error::LengthMismatch {
            expected: index.arity(),
            found: z.len(),
        });
    }
    let regime = z.first().map(Scalar::regime).unwrap_or(Regime::Exact);
    let mut acc = Scalar::one(regime);
    for (zl, &m) in z.iter().zip(index.exponents()) {
        if m == 0 {
            continue;
        }
        acc = acc.checked_mul(&zl.pow_u64(u64::from(m))?)?;
    }
    Ok(acc)
}

/// Values `z_1(s), ..., z_N(s)` at step `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub step: u64,
    pub z: Vec<Scalar>,
}

impl StateVector {
    pub fn new(z: Vec<Scalar>) -> Self {
        StateVector { step: 0, z }
    }

    pub fn at_step(step: u64, z: Vec<Scalar>) -> Self {
        StateVector { step, z }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Regime of the components; `None` for an empty or mixed vector.
    pub fn regime(&self) -> Option<Regime> {
        let first = self.z.first()?.regime();
        self.z.iter().all(|c| c.regime() == first).then_some(first)
    }

    pub fn last(&self) -> Option<&Scalar> {
        self.z.last()
    }

    pub fn scaled(&self, factor: &Scalar) -> Result<StateVector, ScalarError> {
        let z = self.z.iter().map(|c| c.checked_mul(factor)).collect::<Result<_, _>>()?;
        Ok(StateVector { step: self.step, z })
    }

    pub fn to_float(&self) -> Result<StateVector, ScalarError> {
        let z = self.z.iter().map(Scalar::to_float).collect::<Result<_, _>>()?;
        Ok(StateVector { step: self.step, z })
    }

    /// Largest exact bit size among the components.
    pub fn bit_size(&self) -> u64 {
        self.z.iter().map(Scalar::bit_size).max().unwrap_or(0)
    }
}

/// A problem found by [`HomogeneousSystem::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoVariables,
    DegreeTooLow { degree: u32 },
    EquationOutOfRange { equation: usize, index: MultiIndex },
    ArityMismatch { equation: usize, index: MultiIndex },
    DegreeMismatch { equation: usize, index: MultiIndex },
    RegimeMismatch { equation: usize, index: MultiIndex },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoVariables => f.write_str("n_vars must be >= 1"),
            Violation::DegreeTooLow { degree } => {
                write!(f, "degree must be >= 2 (got {degree})")
            }
            Violation::EquationOutOfRange { equation, index } => {
                write!(f, "equation out of range at equation {equation}, exponents {index}")
            }
            Violation::ArityMismatch { equation, index } => {
                write!(f, "exponent count mismatch at equation {equation}, exponents {index}")
            }
            Violation::DegreeMismatch { equation, index } => {
                write!(f, "degree mismatch at equation {equation}, exponents {index}")
            }
            Violation::RegimeMismatch { equation, index } => {
                write!(f, "regime mismatch at equation {equation}, exponents {index}")
            }
        }
    }
}

/// `N` difference equations whose right-hand sides are homogeneous
/// polynomials of degree `M`, stored sparsely. Equations are numbered from 1;
/// absent coefficients are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousSystem {
    n_vars: usize,
    degree: u32,
    regime: Regime,
    coeffs: BTreeMap<(usize, MultiIndex), Scalar>,
}

impl HomogeneousSystem {
    pub fn new(n_vars: usize, degree: u32, regime: Regime) -> Self {
        HomogeneousSystem {
            n_vars,
            degree,
            regime,
            coeffs: BTreeMap::new(),
        }
    }

    /// Build from per-equation dense coefficient lists in descending-lex
    /// basis order (`rows[n-1][k]` is the coefficient of the `k`-th basis
    /// monomial in equation `n`). Zero entries are not stored.
    pub fn from_dense(n_vars: usize, degree: u32, rows: &[Vec<Scalar>]) -> Result<Self> {
        if rows.len() != n_vars {
            return Err(Error::LengthMismatch {
                expected: n_vars,
                found: rows.len(),
            });
        }
        let basis = enumerate_multi_indices(n_vars, degree);
        let regime = rows
            .iter()
            .flatten()
            .next()
            .map(Scalar::regime)
            .unwrap_or(Regime::Exact);
        let mut sys = HomogeneousSystem::new(n_vars, degree, regime);
        for (n, row) in rows.iter().enumerate() {
            if row.len() != basis.len() {
                return Err(Error::LengthMismatch {
                    expected: basis.len(),
                    found: row.len(),
                });
            }
            for (index, c) in basis.iter().zip(row) {
                if !c.is_zero() {
                    sys.insert(n + 1, index.clone(), c.clone());
                }
            }
        }
        Ok(sys)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Store a coefficient, returning the previous one. No validation.
    pub fn insert(&mut self, equation: usize, index: MultiIndex, c: Scalar) -> Option<Scalar> {
        self.coeffs.insert((equation, index), c)
    }

    pub fn remove(&mut self, equation: usize, index: &MultiIndex) -> Option<Scalar> {
        self.coeffs.remove(&(equation, index.clone()))
    }

    pub fn coefficient(&self, equation: usize, index: &MultiIndex) -> Option<&Scalar> {
        self.coeffs.get(&(equation, index.clone()))
    }

    /// Coefficient, or zero when absent.
    pub fn coefficient_or_zero(&self, equation: usize, index: &MultiIndex) -> Scalar {
        self.coefficient(equation, index)
            .cloned()
            .unwrap_or_else(|| Scalar::zero(self.regime))
    }

    /// Stored terms of one equation, in canonical order.
    pub fn terms(&self, equation: usize) -> impl Iterator<Item = (&MultiIndex, &Scalar)> {
        self.coeffs
            .iter()
            .filter(move |((n, _), _)| *n == equation)
            .map(|((_, index), c)| (index, c))
    }

    /// All stored `(equation, index, coefficient)` triples, in canonical order.
    pub fn coefficients(&self) -> impl Iterator<Item = (usize, &MultiIndex, &Scalar)> {
        self.coeffs.iter().map(|((n, index), c)| (*n, index, c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The monomial basis `enumerate_multi_indices(N, M)`.
    pub fn basis(&self) -> Vec<MultiIndex> {
        enumerate_multi_indices(self.n_vars, self.degree)
    }

    /// Every invariant violation, each located by equation and exponents.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n_vars == 0 {
            out.push(Violation::NoVariables);
        }
        if self.degree < 2 {
            out.push(Violation::DegreeTooLow { degree: self.degree });
        }
        for ((equation, index), c) in &self.coeffs {
            let located = (*equation, index.clone());
            if *equation == 0 || *equation > self.n_vars {
                out.push(Violation::EquationOutOfRange {
                    equation: located.0,
                    index: located.1.clone(),
                });
            }
            if index.arity() != self.n_vars {
                out.push(Violation::ArityMismatch {
                    equation: located.0,
                    index: located.1.clone(),
                });
            }
            if index.degree() != u64::from(self.degree) {
                out.push(Violation::DegreeMismatch {
                    equation: located.0,
                    index: located.1.clone(),
                });
            }
            if c.regime() != self.regime {
                out.push(Violation::RegimeMismatch {
                    equation: located.0,
                    index: located.1,
                });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    pub fn to_float(&self) -> Result<HomogeneousSystem, ScalarError> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| Ok((k.clone(), c.to_float()?)))
            .collect::<Result<_, ScalarError>>()?;
        Ok(HomogeneousSystem {
            n_vars: self.n_vars,
            degree: self.degree,
            regime: Regime::Float,
            coeffs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    #[test]
    fn enumerate_two_by_four() {
        let got = enumerate_multi_indices(2, 4);
        let want: Vec<_> = [[4, 0], [3, 1], [2, 2], [1, 3], [0, 4]].iter().map(|e| mi(e)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn enumerate_single_variable() {
        assert_eq!(enumerate_multi_indices(1, 3), vec![mi(&[3])]);
    }

    #[test]
    fn enumerate_three_by_two() {
        let got = enumerate_multi_indices(3, 2);
        assert_eq!(got.len(), 6);
        assert_eq!(got.first(), Some(&mi(&[2, 0, 0])));
        assert_eq!(got.last(), Some(&mi(&[0, 0, 2])));
    }

    #[test]
    fn counts() {
        assert_eq!(multi_index_count(2, 4), 5);
        assert_eq!(multi_index_count(1, 9), 1);
        assert_eq!(multi_index_count(4, 3), 20);
    }

    #[test]
    fn canonical_order_is_descending_lex() {
        assert!(mi(&[4, 0]) < mi(&[3, 1]));
        assert!(mi(&[0, 3, 0]) < mi(&[0, 0, 3]));
    }

    #[test]
    fn monomials() {
        let z = [Scalar::gaussian(3, 0), Scalar::gaussian(1, 0)];
        assert_eq!(monomial_eval(&mi(&[0, 5]), &z).unwrap(), Scalar::gaussian(1, 0));
        let z = [Scalar::gaussian(3, 0), Scalar::gaussian(2, 0)];
        assert_eq!(monomial_eval(&mi(&[2, 1]), &z).unwrap(), Scalar::gaussian(18, 0));
        let z = [Scalar::gaussian(2, 0), Scalar::gaussian(1, 1)];
        assert_eq!(monomial_eval(&mi(&[1, 3]), &z).unwrap(), Scalar::gaussian(-4, 4));
        let zero = [Scalar::gaussian(0, 0), Scalar::gaussian(7, 0)];
        assert_eq!(monomial_eval(&mi(&[0, 2]), &zero).unwrap(), Scalar::gaussian(49, 0));
        assert!(matches!(
            monomial_eval(&mi(&[1, 1, 0]), &zero),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn validation_reports_each_problem() {
        let mut sys = HomogeneousSystem::new(2, 4, Regime::Exact);
        for n in 1..=2 {
            for index in enumerate_multi_indices(2, 4) {
                sys.insert(n, index, Scalar::gaussian(1, 0));
            }
        }
        assert_eq!(sys.len(), 10);
        assert!(sys.validate().is_ok());

        sys.insert(1, mi(&[3, 0]), Scalar::gaussian(1, 0));
        let v = sys.validate().unwrap_err();
        assert_eq!(
            v,
            vec![Violation::DegreeMismatch {
                equation: 1,
                index: mi(&[3, 0])
            }]
        );
        assert!(v[0].to_string().contains("degree mismatch"));

        let linear = HomogeneousSystem::new(2, 1, Regime::Exact);
        assert_eq!(
            linear.validate().unwrap_err(),
            vec![Violation::DegreeTooLow { degree: 1 }]
        );

        let mut bad = HomogeneousSystem::new(2, 2, Regime::Exact);
        bad.insert(3, mi(&[1, 1]), Scalar::gaussian(1, 0));
        bad.insert(1, mi(&[1, 1]), Scalar::float(1.0, 0.0).unwrap());
        bad.insert(2, mi(&[1, 0, 1]), Scalar::gaussian(1, 0));
        let v = bad.validate().unwrap_err();
        assert!(v.contains(&Violation::EquationOutOfRange {
            equation: 3,
            index: mi(&[1, 1])
        }));
        assert!(v.contains(&Violation::RegimeMismatch {
            equation: 1,
            index: mi(&[1, 1])
        }));
        assert!(v.contains(&Violation::ArityMismatch {
            equation: 2,
            index: mi(&[1, 0, 1])
        }));
    }

    #[test]
    fn dense_construction_skips_zeros() {
        let g = Scalar::gaussian;
        let sys = HomogeneousSystem::from_dense(
            2,
            2,
            &[vec![g(1, 0), g(1, 0), g(1, 0)], vec![g(2, 0), g(0, 0), g(1, 0)]],
        )
        .unwrap();
        assert_eq!(sys.len(), 5);
        assert_eq!(sys.coefficient(2, &mi(&[2, 0])), Some(&g(2, 0)));
        assert_eq!(sys.coefficient(2, &mi(&[1, 1])), None);
        let order: Vec<_> = sys.terms(1).map(|(i, _)| i.clone()).collect();
        assert_eq!(order, vec![mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])]);
    }
}
