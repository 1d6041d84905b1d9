//! JSON run configuration: system, bounds, envelopes and numeric overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{BoundQuadruple, BoundsError};
use crate::cases::{CaseError, CaseStudy};
use crate::certify::{CertificationConfig, CertifyError, EnvelopeError, NagumoEnvelope};
use crate::expr::ParseError;
use crate::homotopy::RConfig;
use crate::solver::{ContinuationConfig, ContinuationSchedule, IntegratorConfig, Method, NewtonConfig, SolveError};
use crate::system::{vdp_system, Builtin, CoupledSystem, Rhs, SystemError, VdpParams, Which};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("invalid config JSON: {0}")]
    Json(String),
    #[error("missing required field `{0}`")]
    Missing(&'static str),
    #[error("cannot parse {which}: {source}")]
    Expression {
        which: Which,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Solver(#[from] SolveError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub builtin: Option<String>,
    pub params: Option<VdpParams>,
    pub name: Option<String>,
    pub f: Option<String>,
    pub g: Option<String>,
    #[serde(rename = "T")]
    pub period: Option<f64>,
    pub monotone_f_w0: Option<bool>,
    pub monotone_g_z0: Option<bool>,
    pub cross_env_f: Option<f64>,
    pub cross_env_g: Option<f64>,
}

/// Ascending-degree coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub alpha1: Vec<f64>,
    pub alpha2: Vec<f64>,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
}

impl BoundsSpec {
    pub fn arrays(&self) -> [&[f64]; 4] {
        [&self.alpha1, &self.alpha2, &self.beta1, &self.beta2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub f: NagumoEnvelope,
    pub g: NagumoEnvelope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub method: Method,
    /// Points on the diagonal continuation schedule.
    pub steps: usize,
    /// Newton tolerance on the periodic residual.
    pub tol: f64,
    pub segments: usize,
    pub step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub fd_eps: f64,
    pub min_step: f64,
    /// Rows of the trajectory CSV.
    pub output_samples: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let i = IntegratorConfig::default();
        let n = NewtonConfig::default();
        SolverSettings {
            method: i.method,
            steps: 11,
            tol: n.residual_tol,
            segments: 1,
            step: i.step,
            abs_tol: i.abs_tol,
            rel_tol: i.rel_tol,
            max_iter: n.max_iter,
            fd_eps: n.fd_eps,
            min_step: 1.0 / 64.0,
            output_samples: 8001,
        }
    }
}

impl SolverSettings {
    pub fn continuation(&self) -> ContinuationConfig {
        ContinuationConfig {
            integrator: IntegratorConfig {
                method: self.method,
                step: self.step,
                abs_tol: self.abs_tol,
                rel_tol: self.rel_tol,
                ..IntegratorConfig::default()
            },
            newton: NewtonConfig {
                max_iter: self.max_iter,
                residual_tol: self.tol,
                fd_eps: self.fd_eps,
                ..NewtonConfig::default()
            },
            segments: self.segments,
            min_step: self.min_step,
            ..ContinuationConfig::default()
        }
    }

    pub fn schedule(&self) -> Result<ContinuationSchedule, SolveError> {
        ContinuationSchedule::diagonal(self.steps)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = self.continuation();
        c.integrator.validate()?;
        c.newton.validate()?;
        self.schedule()?;
        if self.segments == 0 {
            return Err(ConfigError::Invalid("solver.segments must be >= 1".into()));
        }
        if !(self.min_step > 0.0 && self.min_step <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "solver.min_step must lie in (0, 1], got {}",
                self.min_step
            )));
        }
        if self.output_samples < 2 {
            return Err(ConfigError::Invalid("solver.output_samples must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub trajectory: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: Option<SystemSpec>,
    pub bounds: Option<BoundsSpec>,
    pub envelopes: Option<EnvelopeSpec>,
    pub certification: Option<CertificationConfig>,
    pub solver: Option<SolverSettings>,
    pub constants: Option<RConfig>,
    pub outputs: Option<OutputSpec>,
}

/// Everything a command needs, validated.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub system: CoupledSystem,
    pub bounds: BoundQuadruple,
    pub bound_coeffs: [Vec<f64>; 4],
    pub env_f: NagumoEnvelope,
    pub env_g: NagumoEnvelope,
    pub certification: CertificationConfig,
    pub solver: SolverSettings,
    pub constants: RConfig,
    pub outputs: OutputSpec,
    /// The built-in case the run derives from, if any.
    pub case: Option<CaseStudy>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    /// Config for a built-in case with every default.
    pub fn builtin(name: &str) -> Self {
        RunConfig {
            system: Some(SystemSpec {
                builtin: Some(name.to_string()),
                ..SystemSpec::default()
            }),
            ..RunConfig::default()
        }
    }

    /// Validates and builds the system, bounds and envelopes. `builtin`
    /// (from the command line) takes precedence over `system.builtin`.
    pub fn resolve(&self, builtin: Option<&str>) -> Result<ResolvedRun, ConfigError> {
        let spec = self.system.clone().unwrap_or_default();
        let builtin_name = builtin.map(str::to_string).or_else(|| spec.builtin.clone());
        let (system, case) = match builtin_name {
            Some(name) => {
                let case = CaseStudy::by_name(&name)?;
                let system = match (case.builtin, spec.params) {
                    (Builtin::Vdp, Some(p)) => vdp_system(p)?,
                    (_, Some(_)) => {
                        return Err(ConfigError::Invalid(format!(
                            "system.params only applies to vdp, not {name}"
                        )))
                    }
                    _ => case.system.clone(),
                };
                (system, Some(case))
            }
            None => (expression_system(&spec)?, None),
        };

        let (bounds, bound_coeffs) = match (&self.bounds, &case) {
            (Some(b), _) => {
                let [a1, a2, b1, b2] = b.arrays();
                (
                    BoundQuadruple::from_coeffs(a1, a2, b1, b2, system.period())?,
                    [a1.to_vec(), a2.to_vec(), b1.to_vec(), b2.to_vec()],
                )
            }
            (None, Some(c)) => (c.bounds.clone(), c.exact_bounds.clone().map(|p| p.to_f64())),
            (None, None) => return Err(ConfigError::Missing("bounds")),
        };
        if bounds.period() != system.period() {
            return Err(ConfigError::Invalid(format!(
                "bounds period {} differs from system period {}",
                bounds.period(),
                system.period()
            )));
        }

        let (env_f, env_g) = match (&self.envelopes, &case) {
            (Some(e), _) => (e.f.clone(), e.g.clone()),
            (None, Some(c)) => (c.env_f.clone(), c.env_g.clone()),
            (None, None) => return Err(ConfigError::Missing("envelopes")),
        };
        env_f.validate()?;
        env_g.validate()?;

        let certification = self.certification.clone().unwrap_or_default();
        certification.validate()?;
        let solver = self.solver.clone().unwrap_or_default();
        solver.validate()?;
        let constants = self.constants.clone().unwrap_or_default();

        Ok(ResolvedRun {
            system,
            bounds,
            bound_coeffs,
            env_f,
            env_g,
            certification,
            solver,
            constants,
            outputs: self.outputs.clone().unwrap_or_default(),
            // a config that replaces the bounds is no longer the reference case
            case: case.filter(|_| self.bounds.is_none()),
        })
    }
}

fn expression_system(spec: &SystemSpec) -> Result<CoupledSystem, ConfigError> {
    let f_src = spec.f.as_deref().ok_or(ConfigError::Missing("system.f"))?;
    let g_src = spec.g.as_deref().ok_or(ConfigError::Missing("system.g"))?;
    let parse = |which, src: &str| Rhs::parse(src).map_err(|source| ConfigError::Expression { which, source });
    let f = parse(Which::F, f_src)?;
    let g = parse(Which::G, g_src)?;
    let name = spec.name.clone().unwrap_or_else(|| "custom".to_string());
    Ok(CoupledSystem::new(name, f, g, spec.period.unwrap_or(1.0))?
        .with_monotonicity(spec.monotone_f_w0.unwrap_or(false), spec.monotone_g_z0.unwrap_or(false))
        .with_cross_envelopes(spec.cross_env_f, spec.cross_env_g)?)
}
