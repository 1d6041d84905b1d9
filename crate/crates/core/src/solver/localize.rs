use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::bounds::BoundQuadruple;
use crate::system::{CoupledSystem, RhsError};

pub const LOCALIZATION_TOL: f64 = 1e-9;

/// Samples used when a trajectory is resampled for finite differences.
const DIFFERENCE_SAMPLES: usize = 8001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    /// Smallest slack; negative means the bound is violated.
    pub value: f64,
    pub t: f64,
}

impl Margin {
    fn new() -> Self {
        Margin {
            value: f64::INFINITY,
            t: 0.0,
        }
    }

    fn update(&mut self, v: f64, t: f64) {
        if v < self.value {
            self.value = v;
            self.t = t;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub pass: bool,
    /// `z − α1⁰`.
    pub z_lower: Margin,
    /// `β1⁰ − z`.
    pub z_upper: Margin,
    pub w_lower: Margin,
    pub w_upper: Margin,
    /// `N1 − |z'|`.
    pub zp: Margin,
    pub wp: Margin,
    pub n_star: (f64, f64),
    pub tolerance: f64,
    pub samples: usize,
}

impl LocalizationReport {
    pub fn worst(&self) -> f64 {
        [self.z_lower, self.z_upper, self.w_lower, self.w_upper, self.zp, self.wp]
            .iter()
            .fold(f64::INFINITY, |m, x| m.min(x.value))
    }
}

/// Pointwise strip membership `αi⁰ ≤ · ≤ βi⁰` and derivative bounds `|·'| ≤ Ni`.
pub fn localize_check(traj: &Trajectory, q: &BoundQuadruple, n_star: (f64, f64)) -> LocalizationReport {
    let mut m = [Margin::new(); 6];
    for s in traj.samples() {
        let t = s.t;
        let st = s.state;
        m[0].update(st.z - q.alpha0(0).value(t), t);
        m[1].update(q.beta0(0).value(t) - st.z, t);
        m[2].update(st.w - q.alpha0(1).value(t), t);
        m[3].update(q.beta0(1).value(t) - st.w, t);
        m[4].update(n_star.0 - st.zp.abs(), t);
        m[5].update(n_star.1 - st.wp.abs(), t);
    }
    LocalizationReport {
        pass: m.iter().all(|x| x.value >= -LOCALIZATION_TOL),
        z_lower: m[0],
        z_upper: m[1],
        w_lower: m[2],
        w_upper: m[3],
        zp: m[4],
        wp: m[5],
        n_star,
        tolerance: LOCALIZATION_TOL,
        samples: traj.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClampActivity {
    pub active: bool,
    pub z_active: bool,
    pub w_active: bool,
    /// Samples where at least one truncation changes the state.
    pub active_samples: usize,
    /// Largest distance outside a strip (0 when inactive).
    pub max_excursion: f64,
}

/// Whether either truncation is active anywhere along the trajectory.
pub fn clamp_activity(traj: &Trajectory, q: &BoundQuadruple) -> ClampActivity {
    let mut out = ClampActivity {
        active: false,
        z_active: false,
        w_active: false,
        active_samples: 0,
        max_excursion: 0.0,
    };
    for s in traj.samples() {
        let t = s.t;
        let ez = (q.alpha0(0).value(t) - s.state.z).max(s.state.z - q.beta0(0).value(t));
        let ew = (q.alpha0(1).value(t) - s.state.w).max(s.state.w - q.beta0(1).value(t));
        out.z_active |= ez > 0.0;
        out.w_active |= ew > 0.0;
        if ez > 0.0 || ew > 0.0 {
            out.active_samples += 1;
        }
        out.max_excursion = out.max_excursion.max(ez).max(ew);
    }
    out.active = out.z_active || out.w_active;
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginalResidual {
    /// `sup |D z' − f(t, z, w, z', w')|` over interior samples.
    pub z: f64,
    pub w: f64,
    pub max: f64,
}

/// Residual of the trajectory in the original equations, with `z''`, `w''`
/// replaced by central differences of the sampled `z'`, `w'`.
pub fn original_residual(traj: &Trajectory, sys: &CoupledSystem) -> Result<OriginalResidual, RhsError> {
    let tr = traj.resample(traj.len().max(DIFFERENCE_SAMPLES));
    let s = tr.samples();
    let mut out = OriginalResidual {
        z: 0.0,
        w: 0.0,
        max: 0.0,
    };
    for k in 1..s.len().saturating_sub(1) {
        let (a, b, c) = (&s[k - 1], &s[k], &s[k + 1]);
        let dt = c.t - a.t;
        let dzp = (c.state.zp - a.state.zp) / dt;
        let dwp = (c.state.wp - a.state.wp) / dt;
        let p = b.state.at(b.t);
        out.z = out.z.max((dzp - sys.f(&p)?).abs());
        out.w = out.w.max((dwp - sys.g(&p)?).abs());
    }
    out.max = out.z.max(out.w);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::StatePoint;

    fn example_q() -> BoundQuadruple {
        BoundQuadruple::from_coeffs(
            &[1.0, 0.0, 2.0, -2.0],
            &[0.0, 2.0, -2.0],
            &[1.2, 0.0, -2.0, 2.0],
            &[1.0, -3.0, 3.0],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_trajectory_is_localized() {
        let tr = Trajectory::constant(StatePoint::default(), (0.0, 0.0), 1.0, 101);
        let rep = localize_check(&tr, &example_q(), (1.0, 1.0));
        assert!(rep.pass);
        assert!(!clamp_activity(&tr, &example_q()).active);
    }

    #[test]
    fn constant_three_escapes_upper_strip() {
        let tr = Trajectory::constant(StatePoint::new(3.0, 0.0, 0.0, 0.0), (0.0, 0.0), 1.0, 101);
        let rep = localize_check(&tr, &example_q(), (1.0, 1.0));
        assert!(!rep.pass);
        // β1⁰ is smallest at t = 2/3, where it equals 12/5 − 8/27
        assert!((rep.z_upper.value + 0.6 + 8.0 / 27.0).abs() < 1e-4);
        assert!((rep.z_upper.t - 2.0 / 3.0).abs() < 0.01);
        let act = clamp_activity(&tr, &example_q());
        assert!(act.z_active && !act.w_active);
        assert_eq!(act.active_samples, 101);
    }

    #[test]
    fn derivative_bound_violation() {
        let tr = Trajectory::constant(StatePoint::new(0.0, 0.0, 2.0, 0.0), (0.0, 0.0), 1.0, 11);
        let rep = localize_check(&tr, &example_q(), (1.0, 1.0));
        assert!(!rep.pass);
        assert_eq!(rep.zp.value, -1.0);
    }
}
