//! JSON documents and trajectory CSV.
//!
//! Exact scalar parts are written as strings (`"p/q"` or `"p"`), float parts
//! as JSON numbers.

use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::constraints::{Certificate, Designation, NewtonControls, SolvableInstance, SolveSpec};
use crate::error::{Error, Result};
use crate::harness::VerificationReport;
use crate::model::{HomogeneousSystem, MultiIndex, StateVector};
use crate::scalar::{format_decimal, parse_rational, Regime, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartText {
    Text(String),
    Number(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarDoc {
    pub re: PartText,
    pub im: PartText,
}

impl ScalarDoc {
    pub fn from_scalar(s: &Scalar) -> Self {
        match s {
            Scalar::Exact(c) => ScalarDoc {
                re: PartText::Text(c.re.to_string()),
                im: PartText::Text(c.im.to_string()),
            },
            Scalar::Float(c) => ScalarDoc {
                re: PartText::Number(c.re),
                im: PartText::Number(c.im),
            },
        }
    }

    pub fn to_scalar(&self, regime: Regime) -> Result<Scalar> {
        match regime {
            Regime::Exact => {
                let part = |p: &PartText| match p {
                    PartText::Text(t) => Ok(parse_rational(t)?),
                    PartText::Number(x) => Err(Error::Document(format!(
                        "exact values must be written as \"p/q\" strings, found number {x}"
                    ))),
                };
                Ok(Scalar::exact(part(&self.re)?, part(&self.im)?))
            }
            Regime::Float => {
                let part = |p: &PartText| match p {
                    PartText::Number(x) => Ok(*x),
                    PartText::Text(t) => Err(Error::Document(format!(
                        "float values must be JSON numbers, found string {t:?}"
                    ))),
                };
                Ok(Scalar::float(part(&self.re)?, part(&self.im)?)?)
            }
        }
    }
}

fn scalars_from_docs(docs: &[ScalarDoc], regime: Regime) -> Result<Vec<Scalar>> {
    docs.iter().map(|d| d.to_scalar(regime)).collect()
}

fn docs_from_scalars(values: &[Scalar]) -> Vec<ScalarDoc> {
    values.iter().map(ScalarDoc::from_scalar).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientDoc {
    pub equation: usize,
    pub exponents: MultiIndex,
    pub re: PartText,
    pub im: PartText,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    pub n_vars: usize,
    pub degree: u32,
    pub regime: Regime,
    pub coefficients: Vec<CoefficientDoc>,
}

impl SystemDoc {
    pub fn from_system(sys: &HomogeneousSystem) -> Self {
        let coefficients = sys
            .coefficients()
            .map(|(equation, index, c)| {
                let ScalarDoc { re, im } = ScalarDoc::from_scalar(c);
                CoefficientDoc {
                    equation,
                    exponents: index.clone(),
                    re,
                    im,
                }
            })
            .collect();
        SystemDoc {
            n_vars: sys.n_vars(),
            degree: sys.degree(),
            regime: sys.regime(),
            coefficients,
        }
    }

    /// Build and validate the system; duplicate `(equation, exponents)`
    /// entries are rejected.
    pub fn to_system(&self) -> Result<HomogeneousSystem> {
        let mut sys = HomogeneousSystem::new(self.n_vars, self.degree, self.regime);
        let mut seen = HashSet::new();
        for entry in &self.coefficients {
            if !seen.insert((entry.equation, entry.exponents.clone())) {
                return Err(Error::Document(format!(
                    "duplicate coefficient for equation {}, exponents {}",
                    entry.equation, entry.exponents
                )));
            }
            let c = ScalarDoc {
                re: entry.re.clone(),
                im: entry.im.clone(),
            }
            .to_scalar(self.regime)?;
            sys.insert(entry.equation, entry.exponents.clone(), c);
        }
        sys.validate().map_err(Error::InvalidSystem)?;
        Ok(sys)
    }
}

pub fn system_from_json(text: &str) -> Result<HomogeneousSystem> {
    serde_json::from_str::<SystemDoc>(text)?.to_system()
}

pub fn system_to_json(sys: &HomogeneousSystem) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SystemDoc::from_system(sys))?)
}

/// Initial data file: a JSON array of `{"re": .., "im": ..}` objects.
pub fn state_from_json(text: &str, regime: Regime) -> Result<StateVector> {
    let docs: Vec<ScalarDoc> = serde_json::from_str(text)?;
    Ok(StateVector::new(scalars_from_docs(&docs, regime)?))
}

pub fn state_to_json(state: &StateVector) -> Result<String> {
    Ok(serde_json::to_string_pretty(&docs_from_scalars(&state.z))?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub system: SystemDoc,
    pub z0: Vec<ScalarDoc>,
    #[serde(rename = "Z")]
    pub z: ScalarDoc,
    pub certificate: Certificate,
}

impl InstanceDoc {
    pub fn from_instance(inst: &SolvableInstance) -> Self {
        InstanceDoc {
            system: SystemDoc::from_system(&inst.system),
            z0: docs_from_scalars(&inst.z0.z),
            z: ScalarDoc::from_scalar(&inst.z),
            certificate: inst.certificate,
        }
    }

    /// Rebuild the instance. The stored certificate is kept as written so
    /// that deliberately broken instances can still be verified.
    pub fn to_instance(&self) -> Result<SolvableInstance> {
        let system = self.system.to_system()?;
        let regime = system.regime();
        let z0 = StateVector::new(scalars_from_docs(&self.z0, regime)?);
        let z = self.z.to_scalar(regime)?;
        let mut inst = SolvableInstance::certify(system, z0, z, self.certificate.mode)?;
        inst.certificate = self.certificate;
        Ok(inst)
    }
}

pub fn instance_from_json(text: &str) -> Result<SolvableInstance> {
    serde_json::from_str::<InstanceDoc>(text)?.to_instance()
}

pub fn instance_to_json(inst: &SolvableInstance) -> Result<String> {
    Ok(serde_json::to_string_pretty(&InstanceDoc::from_instance(inst))?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveModeDoc {
    Coefficients,
    ZPivot,
    Newton,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuessDoc {
    #[serde(rename = "Z")]
    pub z: ScalarDoc,
    /// `r_1, ..., r_{N-1}`.
    pub ratios: Vec<ScalarDoc>,
}

/// Solve request. `Z` and `init` carry the data the linear modes treat as
/// given: `Z` (coefficients mode) and the initial data whose ratios enter the
/// constraints (both linear modes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpecDoc {
    pub mode: SolveModeDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designated: Option<Vec<Designation>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot_equation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guess: Option<GuessDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_halvings: Option<usize>,
    #[serde(rename = "Z", default, skip_serializing_if = "Option::is_none")]
    pub z: Option<ScalarDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<ScalarDoc>>,
}

/// A parsed solve request: what to solve for, plus the given data.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveRequest {
    pub spec: SolveSpec,
    pub z: Option<Scalar>,
    pub init: Option<StateVector>,
}

impl SolveSpecDoc {
    pub fn to_request(&self, regime: Regime) -> Result<SolveRequest> {
        let missing = |what: &str| Error::InvalidSolveSpec(format!("{what} is required in this mode"));
        let spec = match self.mode {
            SolveModeDoc::Coefficients => SolveSpec::Coefficients {
                designated: self.designated.clone().ok_or_else(|| missing("designated"))?,
            },
            SolveModeDoc::ZPivot => SolveSpec::ZPivot {
                pivot_equation: self.pivot_equation.ok_or_else(|| missing("pivot_equation"))?,
                designated: self.designated.clone().unwrap_or_default(),
            },
            SolveModeDoc::Newton => {
                let guess = self.guess.as_ref().ok_or_else(|| missing("guess"))?;
                let defaults = NewtonControls::default();
                SolveSpec::Newton {
                    z: guess.z.to_scalar(Regime::Float)?,
                    free_ratios: scalars_from_docs(&guess.ratios, Regime::Float)?,
                    controls: NewtonControls {
                        tol: self.tol.unwrap_or(defaults.tol),
                        max_iter: self.max_iter.unwrap_or(defaults.max_iter),
                        max_halvings: self.max_halvings.unwrap_or(defaults.max_halvings),
                    },
                }
            }
        };
        let z = self.z.as_ref().map(|d| d.to_scalar(regime)).transpose()?;
        let init = self
            .init
            .as_ref()
            .map(|docs| Ok::<_, Error>(StateVector::new(scalars_from_docs(docs, regime)?)))
            .transpose()?;
        Ok(SolveRequest { spec, z, init })
    }
}

pub fn solve_request_from_json(text: &str, regime: Regime) -> Result<SolveRequest> {
    serde_json::from_str::<SolveSpecDoc>(text)?.to_request(regime)
}

pub fn report_to_json(report: &VerificationReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// Parse a scalar given on the command line as `re` or `re,im`; exact parts
/// use `p/q` syntax, float parts decimal notation.
pub fn parse_scalar_arg(text: &str, regime: Regime) -> Result<Scalar> {
    let (re, im) = match text.split_once(',') {
        Some((re, im)) => (re.trim(), im.trim()),
        None => (text.trim(), "0"),
    };
    match regime {
        Regime::Exact => Ok(Scalar::exact(parse_rational(re)?, parse_rational(im)?)),
        Regime::Float => {
            let parse = |t: &str| {
                t.parse::<f64>()
                    .map_err(|e| Error::Document(format!("invalid float {t:?}: {e}")))
            };
            Ok(Scalar::float(parse(re)?, parse(im)?)?)
        }
    }
}

/// Cell format for exact values in trajectory CSV.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactFormat {
    Decimal { digits: usize },
    Rational,
}

fn cells(s: &Scalar, format: ExactFormat) -> [String; 2] {
    match s {
        Scalar::Float(c) => [c.re.to_string(), c.im.to_string()],
        Scalar::Exact(c) => match format {
            ExactFormat::Rational => [c.re.to_string(), c.im.to_string()],
            ExactFormat::Decimal { digits } => [format_decimal(&c.re, digits), format_decimal(&c.im, digits)],
        },
    }
}

/// `step,re_z1,im_z1,...,re_zN,im_zN`, one row per state.
pub fn write_trajectory_csv<W: Write>(out: W, states: &[StateVector], format: ExactFormat) -> Result<()> {
    let n = states.first().map(StateVector::len).unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_string()];
    for k in 1..=n {
        header.push(format!("re_z{k}"));
        header.push(format!("im_z{k}"));
    }
    w.write_record(&header)?;
    for state in states {
        let mut row = vec![state.step.to_string()];
        for c in &state.z {
            row.extend(cells(c, format));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
