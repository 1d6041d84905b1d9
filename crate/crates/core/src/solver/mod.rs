//! Periodic solutions by shooting and homotopy continuation.

mod continuation;
mod integrate;
mod localize;
mod shooting;
mod trajectory;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::system::{CoupledSystem, Point, RhsError};

pub use continuation::{
    continuation_solve, ContinuationConfig, ContinuationOutcome, ContinuationReport, ContinuationSchedule, StepRecord,
};
pub use integrate::{integrate_ivp, IntegratorConfig, Method};
pub use localize::{
    clamp_activity, localize_check, original_residual, ClampActivity, LocalizationReport, Margin, OriginalResidual,
    LOCALIZATION_TOL,
};
pub use shooting::{newton_solve, shoot_residual, NewtonConfig, NewtonOutcome, ShootingProblem};
pub use trajectory::{Sample, Trajectory, CSV_HEADER};

/// `(z, w, z', w')`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StatePoint {
    pub z: f64,
    pub w: f64,
    pub zp: f64,
    pub wp: f64,
}

impl StatePoint {
    pub fn new(z: f64, w: f64, zp: f64, wp: f64) -> Self {
        StatePoint { z, w, zp, wp }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.z, self.w, self.zp, self.wp]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        StatePoint::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Right-hand-side argument tuple at time `t`.
    pub fn at(&self, t: f64) -> Point {
        Point::new(t, self.z, self.w, self.zp, self.wp)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Rhs(#[from] RhsError),
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("exceeded {0} integration steps")]
    TooManySteps(usize),
    #[error("invalid solver config: {0}")]
    Config(String),
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    MaxIter { iterations: usize, residual: f64 },
    #[error("singular shooting Jacobian (condition estimate {condition:e}) at iteration {iteration}")]
    Singular { condition: f64, iteration: usize },
    #[error("line search failed at iteration {iteration} (residual {residual:e})")]
    LineSearch { iteration: usize, residual: f64 },
}

/// Second-order vector field `(z'', w'')` in first-order form.
pub trait Field: Sync {
    fn accel(&self, t: f64, s: &StatePoint) -> Result<(f64, f64), SolveError>;
}

impl Field for CoupledSystem {
    fn accel(&self, t: f64, s: &StatePoint) -> Result<(f64, f64), SolveError> {
        let p = s.at(t);
        Ok((self.f(&p)?, self.g(&p)?))
    }
}

/// Adapter for closures `(t, state) -> (z'', w'')`.
pub struct FnField<F>(pub F);

impl<F> Field for FnField<F>
where
    F: Fn(f64, &StatePoint) -> (f64, f64) + Sync,
{
    fn accel(&self, t: f64, s: &StatePoint) -> Result<(f64, f64), SolveError> {
        Ok((self.0)(t, s))
    }
}

impl<T: Field + ?Sized> Field for &T {
    fn accel(&self, t: f64, s: &StatePoint) -> Result<(f64, f64), SolveError> {
        (**self).accel(t, s)
    }
}
