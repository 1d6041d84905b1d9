use serde::{Deserialize, Serialize};

use super::shooting::{newton_solve, NewtonConfig, ShootingProblem};
use super::{IntegratorConfig, SolveError, StatePoint, Trajectory};
use crate::bounds::BoundQuadruple;
use crate::homotopy::AuxiliarySystem;
use crate::system::CoupledSystem;

/// Ordered `(λ, μ)` points starting at `(0, 0)`, non-decreasing in each coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSchedule {
    path: Vec<(f64, f64)>,
}

impl ContinuationSchedule {
    pub fn new(path: Vec<(f64, f64)>) -> Result<Self, SolveError> {
        let bad = |m: String| Err(SolveError::Config(m));
        match path.first() {
            None => return bad("empty continuation schedule".into()),
            Some(&p) if p != (0.0, 0.0) => return bad(format!("schedule must start at (0, 0), got {p:?}")),
            _ => {}
        }
        for &(l, m) in &path {
            if !((0.0..=1.0).contains(&l) && (0.0..=1.0).contains(&m)) {
                return bad(format!("schedule point ({l}, {m}) outside [0, 1]²"));
            }
        }
        for w in path.windows(2) {
            if w[1].0 < w[0].0 || w[1].1 < w[0].1 {
                return bad(format!("schedule decreases between {:?} and {:?}", w[0], w[1]));
            }
        }
        Ok(ContinuationSchedule { path })
    }

    /// `n` equally spaced points `k/(n−1)` on the diagonal; `n = 1` is `[(0, 0)]`.
    pub fn diagonal(n: usize) -> Result<Self, SolveError> {
        match n {
            0 => Err(SolveError::Config("schedule needs at least one point".into())),
            1 => Self::new(vec![(0.0, 0.0)]),
            _ => Self::new(
                (0..n)
                    .map(|k| {
                        let s = if k == n - 1 { 1.0 } else { k as f64 / (n - 1) as f64 };
                        (s, s)
                    })
                    .collect(),
            ),
        }
    }

    pub fn path(&self) -> &[(f64, f64)] {
        &self.path
    }

    pub fn ends_at_target(&self) -> bool {
        self.path.last() == Some(&(1.0, 1.0))
    }
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        Self::diagonal(11).expect("valid default schedule")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationConfig {
    pub integrator: IntegratorConfig,
    pub newton: NewtonConfig,
    pub segments: usize,
    /// Smallest allowed step (max-norm in `(λ, μ)`) after halving.
    pub min_step: f64,
    pub initial_guess: StatePoint,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            integrator: IntegratorConfig::default(),
            newton: NewtonConfig::default(),
            segments: 1,
            min_step: 1.0 / 64.0,
            initial_guess: StatePoint::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub lambda: f64,
    pub mu: f64,
    pub accepted: bool,
    pub iterations: usize,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub converged: bool,
    /// Whether the last accepted point is `(1, 1)`.
    pub reached_target: bool,
    /// Accepted `(λ, μ)` points in order.
    pub lambda_mu_path: Vec<(f64, f64)>,
    pub attempts: Vec<StepRecord>,
    /// Schedule points that could not be solved and were jumped over.
    pub skipped: Vec<(f64, f64)>,
    pub last_good: Option<(f64, f64)>,
    pub residual: f64,
    pub final_state: Option<StatePoint>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ContinuationOutcome {
    /// Trajectory at the last accepted point.
    pub trajectory: Option<Trajectory>,
    pub report: ContinuationReport,
}

/// Tracks the periodic solution of the auxiliary problem along `schedule`,
/// warm-starting each Newton solve and halving steps on failure.
pub fn continuation_solve(
    base: &CoupledSystem,
    q: &BoundQuadruple,
    schedule: &ContinuationSchedule,
    cfg: &ContinuationConfig,
) -> Result<ContinuationOutcome, SolveError> {
    if !(cfg.min_step > 0.0 && cfg.min_step <= 1.0) {
        return Err(SolveError::Config(format!(
            "min_step must lie in (0, 1], got {}",
            cfg.min_step
        )));
    }
    let aux = AuxiliarySystem::new(base.clone(), q, 0.0, 0.0).map_err(|e| SolveError::Config(e.to_string()))?;
    let period = base.period();
    let solve_at = |lm: (f64, f64), guess: StatePoint| {
        let field = aux
            .with_parameters(lm.0, lm.1)
            .map_err(|e| SolveError::Config(e.to_string()))?;
        let prob = ShootingProblem {
            field,
            period,
            integrator: cfg.integrator.clone(),
            newton: cfg.newton.clone(),
            segments: cfg.segments,
        };
        newton_solve(&prob, guess)
    };

    let mut report = ContinuationReport {
        converged: false,
        reached_target: false,
        lambda_mu_path: Vec::new(),
        attempts: Vec::new(),
        skipped: Vec::new(),
        last_good: None,
        residual: f64::NAN,
        final_state: None,
        failure: None,
    };
    let record = |report: &mut ContinuationReport, lm: (f64, f64), r: &Result<super::NewtonOutcome, SolveError>| {
        report.attempts.push(match r {
            Ok(o) => StepRecord {
                lambda: lm.0,
                mu: lm.1,
                accepted: true,
                iterations: o.iterations,
                residual: o.residual,
                error: None,
            },
            Err(e) => StepRecord {
                lambda: lm.0,
                mu: lm.1,
                accepted: false,
                iterations: 0,
                residual: f64::NAN,
                error: Some(e.to_string()),
            },
        });
    };

    let start = schedule.path()[0];
    let first = solve_at(start, cfg.initial_guess);
    record(&mut report, start, &first);
    let mut current = match first {
        Ok(o) => o,
        Err(e) => {
            report.failure = Some(format!("initial solve at {start:?} failed: {e}"));
            return Ok(ContinuationOutcome {
                trajectory: None,
                report,
            });
        }
    };
    let mut at = start;
    report.lambda_mu_path.push(at);
    report.last_good = Some(at);

    let path = schedule.path();
    let mut idx = 1;
    'targets: while idx < path.len() {
        let target = path[idx];
        let mut frac = 1.0;
        while at != target {
            let span = (target.0 - at.0).abs().max((target.1 - at.1).abs());
            let cand = if frac >= 1.0 {
                target
            } else {
                (at.0 + frac * (target.0 - at.0), at.1 + frac * (target.1 - at.1))
            };
            let result = solve_at(cand, current.state);
            record(&mut report, cand, &result);
            match result {
                Ok(o) => {
                    current = o;
                    at = cand;
                    report.lambda_mu_path.push(at);
                    report.last_good = Some(at);
                    frac = 1.0;
                }
                Err(e) => {
                    frac *= 0.5;
                    if span * frac >= cfg.min_step {
                        continue;
                    }
                    // a singular point on the path: jump over it to a later
                    // schedule point from the last good state
                    for (j, &later) in path.iter().enumerate().skip(idx + 1) {
                        let jump = solve_at(later, current.state);
                        record(&mut report, later, &jump);
                        if let Ok(o) = jump {
                            report.skipped.push(target);
                            current = o;
                            at = later;
                            report.lambda_mu_path.push(at);
                            report.last_good = Some(at);
                            idx = j + 1;
                            continue 'targets;
                        }
                    }
                    report.failure = Some(format!(
                        "Newton failed approaching {target:?} from {at:?} with steps down to the minimum {}: {e}",
                        cfg.min_step
                    ));
                    break 'targets;
                }
            }
        }
        idx += 1;
    }

    report.residual = current.residual;
    report.final_state = Some(current.state);
    report.reached_target = at == (1.0, 1.0);
    report.converged = report.failure.is_none();
    Ok(ContinuationOutcome {
        trajectory: Some(current.trajectory),
        report,
    })
}
