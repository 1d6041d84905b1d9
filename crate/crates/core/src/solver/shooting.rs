use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrate::integrate_span;
use super::{Field, IntegratorConfig, SolveError, StatePoint, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonConfig {
    pub max_iter: usize,
    /// Convergence threshold on `‖residual‖∞`.
    pub residual_tol: f64,
    /// Relative forward-difference step, scaled by `max(1, |x_j|)`.
    pub fd_eps: f64,
    pub max_halvings: usize,
    /// Jacobians with a larger 2-norm condition number are reported singular,
    /// as are those whose smallest singular value is below the finite-difference
    /// noise floor `100 ε / fd_eps`.
    pub cond_limit: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            max_iter: 50,
            residual_tol: 1e-10,
            fd_eps: 1e-7,
            max_halvings: 30,
            cond_limit: 1e12,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if self.max_iter == 0 || !ok(self.residual_tol) || !ok(self.fd_eps) || !ok(self.cond_limit) {
            return Err(SolveError::Config(
                "max_iter must be >= 1 and tolerances positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// Periodic boundary-value problem `state(T) = state(0)` for a field,
/// solved by shooting over `segments` equal sub-intervals (1 = single shooting).
pub struct ShootingProblem<F> {
    pub field: F,
    pub period: f64,
    pub integrator: IntegratorConfig,
    pub newton: NewtonConfig,
    pub segments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonOutcome {
    pub state: StatePoint,
    pub iterations: usize,
    pub residual: f64,
    /// `‖residual‖∞` before each iteration and after the last.
    pub history: Vec<f64>,
    pub trajectory: Trajectory,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn block(x: &[f64], k: usize) -> StatePoint {
    StatePoint::new(x[4 * k], x[4 * k + 1], x[4 * k + 2], x[4 * k + 3])
}

impl<F: Field> ShootingProblem<F> {
    pub fn new(field: F, period: f64) -> Self {
        ShootingProblem {
            field,
            period,
            integrator: IntegratorConfig::default(),
            newton: NewtonConfig::default(),
            segments: 1,
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(SolveError::Config(format!(
                "period must be positive, got {}",
                self.period
            )));
        }
        if self.segments == 0 {
            return Err(SolveError::Config("segments must be >= 1".into()));
        }
        self.integrator.validate()?;
        self.newton.validate()
    }

    fn knot(&self, k: usize) -> f64 {
        if k == self.segments {
            self.period
        } else {
            self.period * k as f64 / self.segments as f64
        }
    }

    fn segment(&self, k: usize, s: StatePoint) -> Result<Trajectory, SolveError> {
        integrate_span(&self.field, s, self.knot(k), self.knot(k + 1), &self.integrator)
    }

    fn segment_end(&self, k: usize, s: StatePoint) -> Result<StatePoint, SolveError> {
        Ok(self.segment(k, s)?.last().state)
    }

    fn residual_from_ends(&self, x: &[f64], ends: &[StatePoint]) -> Vec<f64> {
        let m = self.segments;
        let mut r = Vec::with_capacity(4 * m);
        for (k, end) in ends.iter().enumerate() {
            let next = block(x, (k + 1) % m);
            r.extend(end.to_array().iter().zip(next.to_array().iter()).map(|(a, b)| a - b));
        }
        r
    }

    fn ends(&self, x: &[f64]) -> Result<Vec<StatePoint>, SolveError> {
        (0..self.segments)
            .into_par_iter()
            .map(|k| self.segment_end(k, block(x, k)))
            .collect()
    }

    /// Continuity residual for the stacked segment initial states `x`.
    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>, SolveError> {
        let ends = self.ends(x)?;
        Ok(self.residual_from_ends(x, &ends))
    }

    fn jacobian(&self, x: &[f64], ends: &[StatePoint], r0: &[f64]) -> Result<DMatrix<f64>, SolveError> {
        let n = x.len();
        let eps = self.newton.fd_eps;
        let cols = (0..n)
            .into_par_iter()
            .map(|j| -> Result<Vec<f64>, SolveError> {
                let h = eps * x[j].abs().max(1.0);
                let mut xp = x.to_vec();
                xp[j] += h;
                let k = j / 4;
                let mut ends_p = ends.to_vec();
                ends_p[k] = self.segment_end(k, block(&xp, k))?;
                let rp = self.residual_from_ends(&xp, &ends_p);
                Ok(rp.iter().zip(r0).map(|(a, b)| (a - b) / h).collect())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DMatrix::from_fn(n, n, |i, j| cols[j][i]))
    }

    /// Segment initial states obtained by integrating from `s0` across the knots.
    fn initial_unknowns(&self, s0: StatePoint) -> Result<Vec<f64>, SolveError> {
        let mut x = Vec::with_capacity(4 * self.segments);
        let mut s = s0;
        for k in 0..self.segments {
            x.extend(s.to_array());
            if k + 1 < self.segments {
                s = self.segment_end(k, s)?;
            }
        }
        Ok(x)
    }

    fn trajectory(&self, x: &[f64]) -> Result<Trajectory, SolveError> {
        let mut samples = Vec::new();
        let mut max_err = 0.0f64;
        for k in 0..self.segments {
            let seg = self.segment(k, block(x, k))?;
            max_err = max_err.max(seg.max_error_estimate);
            let skip = usize::from(k > 0);
            samples.extend(seg.samples().iter().skip(skip).copied());
        }
        Ok(Trajectory::new(samples, max_err))
    }
}

/// `state(T) − s0` for single shooting.
pub fn shoot_residual<F: Field>(prob: &ShootingProblem<F>, s0: StatePoint) -> Result<[f64; 4], SolveError> {
    prob.validate()?;
    let end = integrate_span(&prob.field, s0, 0.0, prob.period, &prob.integrator)?
        .last()
        .state;
    let (a, b) = (end.to_array(), s0.to_array());
    Ok([a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]])
}

/// Damped Newton iteration on the shooting residual with a forward-difference
/// Jacobian and halving line search on `‖R‖₂`.
pub fn newton_solve<F: Field>(prob: &ShootingProblem<F>, guess: StatePoint) -> Result<NewtonOutcome, SolveError> {
    prob.validate()?;
    let cfg = &prob.newton;
    let mut x = prob.initial_unknowns(guess)?;
    let mut ends = prob.ends(&x)?;
    let mut r = prob.residual_from_ends(&x, &ends);
    let mut history = vec![inf_norm(&r)];
    for iteration in 0..cfg.max_iter {
        let res = inf_norm(&r);
        if res <= cfg.residual_tol {
            return finish(prob, x, iteration, res, history);
        }
        let jac = prob.jacobian(&x, &ends, &r)?;
        let sv = jac.clone().singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        // forward differences carry roundoff of order ε/h, so smaller
        // singular values cannot be told apart from zero
        let noise_floor = 100.0 * f64::EPSILON / cfg.fd_eps * inf_norm(&x).max(1.0);
        if !(condition <= cfg.cond_limit) || smin <= noise_floor {
            return Err(SolveError::Singular { condition, iteration });
        }
        let rhs = -DVector::from_column_slice(&r);
        let dx = jac
            .lu()
            .solve(&rhs)
            .ok_or(SolveError::Singular { condition, iteration })?;
        let merit = two_norm(&r);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + alpha * d).collect();
            if let Ok(trial_ends) = prob.ends(&trial) {
                let tr = prob.residual_from_ends(&trial, &trial_ends);
                let m = two_norm(&tr);
                if m.is_finite() && m <= (1.0 - 1e-4 * alpha) * merit {
                    accepted = Some((trial, trial_ends, tr));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((nx, ne, nr)) => {
                x = nx;
                ends = ne;
                r = nr;
                history.push(inf_norm(&r));
            }
            None => {
                return Err(SolveError::LineSearch {
                    iteration,
                    residual: res,
                })
            }
        }
    }
    let res = inf_norm(&r);
    if res <= cfg.residual_tol {
        return finish(prob, x, cfg.max_iter, res, history);
    }
    Err(SolveError::MaxIter {
        iterations: cfg.max_iter,
        residual: res,
    })
}

fn finish<F: Field>(
    prob: &ShootingProblem<F>,
    x: Vec<f64>,
    iterations: usize,
    residual: f64,
    history: Vec<f64>,
) -> Result<NewtonOutcome, SolveError> {
    Ok(NewtonOutcome {
        state: block(&x, 0),
        iterations,
        residual,
        history,
        trajectory: prob.trajectory(&x)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::FnField;
    use crate::system::{builtin_system, manufactured_coefficients};
    use std::f64::consts::TAU;

    fn homogeneous() -> FnField<impl Fn(f64, &StatePoint) -> (f64, f64) + Sync> {
        FnField(|_t: f64, s: &StatePoint| (s.z, s.w))
    }

    #[test]
    fn homogeneous_residuals() {
        let prob = ShootingProblem::new(homogeneous(), 1.0);
        assert_eq!(shoot_residual(&prob, StatePoint::default()).unwrap(), [0.0; 4]);
        let r = shoot_residual(&prob, StatePoint::new(1.0, 0.0, 0.0, 0.0)).unwrap();
        assert!((r[0] - (1f64.cosh() - 1.0)).abs() < 1e-12);
        assert!((r[2] - 1f64.sinh()).abs() < 1e-12);
        assert_eq!((r[1], r[3]), (0.0, 0.0));
    }

    #[test]
    fn homogeneous_converges_to_zero() {
        let prob = ShootingProblem::new(homogeneous(), 1.0);
        let out = newton_solve(&prob, StatePoint::new(0.1, 0.1, 0.0, 0.0)).unwrap();
        assert!(out.residual <= 1e-10);
        assert!(out.state.max_abs() < 1e-9);
    }

    #[test]
    fn manufactured_single_and_multiple() {
        let sys = builtin_system("manufactured_linear").unwrap();
        let (a, b) = manufactured_coefficients();
        for segments in [1, 4] {
            let mut prob = ShootingProblem::new(&sys, 1.0);
            prob.segments = segments;
            let out = newton_solve(&prob, StatePoint::default()).unwrap();
            let expect = StatePoint::new(a, a, TAU * b, TAU * b);
            for (x, y) in out.state.to_array().iter().zip(expect.to_array()) {
                assert!((x - y).abs() < 1e-8, "{segments}: {:?}", out.state);
            }
            assert_eq!(out.trajectory.len(), 8001);
            assert!(out.trajectory.periodic_residual() <= 1e-10);
        }
    }

    #[test]
    fn converged_start_needs_at_most_one_iteration() {
        let sys = builtin_system("manufactured_linear").unwrap();
        let prob = ShootingProblem::new(&sys, 1.0);
        let first = newton_solve(&prob, StatePoint::default()).unwrap();
        let again = newton_solve(&prob, first.state).unwrap();
        assert!(again.iterations <= 1);
        assert!((again.state.z - first.state.z).abs() < 1e-10);
    }

    #[test]
    fn harmonic_family_is_singular() {
        // resonant forcing: the monodromy is the identity, so the Jacobian vanishes
        let prob = ShootingProblem::new(
            FnField(|t: f64, s: &StatePoint| (-TAU * TAU * s.z + (TAU * t).cos(), -TAU * TAU * s.w)),
            1.0,
        );
        let err = newton_solve(&prob, StatePoint::new(0.3, 0.1, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, SolveError::Singular { .. }), "{err:?}");
    }

    #[test]
    fn unreachable_tolerance_hits_max_iter_or_line_search() {
        let mut prob = ShootingProblem::new(homogeneous(), 1.0);
        prob.newton.residual_tol = 1e-300;
        prob.newton.max_iter = 3;
        let err = newton_solve(&prob, StatePoint::new(0.4, 0.0, 0.0, 0.0)).unwrap_err();
        assert!(matches!(
            err,
            SolveError::MaxIter { .. } | SolveError::LineSearch { .. }
        ));
    }
}
