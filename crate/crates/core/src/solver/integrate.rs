use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Field, Sample, SolveError, StatePoint, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4Fixed,
    Rk45Adaptive,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rk4" | "rk4_fixed" => Ok(Method::Rk4Fixed),
            "rk45" | "rk45_adaptive" => Ok(Method::Rk45Adaptive),
            other => Err(format!("unknown method {other:?} (expected rk4 or rk45)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4; initial step hint for RK45.
    pub step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk4Fixed,
            step: 1.25e-4,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk4Fixed,
            step,
            ..Self::default()
        }
    }

    pub fn rk45(abs_tol: f64, rel_tol: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk45Adaptive,
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.step) || !ok(self.abs_tol) || !ok(self.rel_tol) || self.max_steps == 0 {
            return Err(SolveError::Config(format!(
                "step and tolerances must be positive (step {}, abs {}, rel {})",
                self.step, self.abs_tol, self.rel_tol
            )));
        }
        Ok(())
    }

    /// Step count used by the fixed-step method over `period`.
    pub fn fixed_steps(&self, period: f64) -> usize {
        let ratio = period / self.step;
        // absorb representation error such as 1 / 1.25e-4 = 8000.000000000001
        let n = if (ratio - ratio.round()).abs() <= 1e-9 * ratio {
            ratio.round()
        } else {
            ratio.ceil()
        };
        (n as usize).max(1)
    }
}

type Vec4 = [f64; 4];

fn deriv(field: &impl Field, t: f64, y: &Vec4) -> Result<Vec4, SolveError> {
    let s = StatePoint::from_array(*y);
    let (a, b) = field.accel(t, &s)?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(SolveError::NonFinite { t });
    }
    Ok([y[2], y[3], a, b])
}

fn axpy(y: &Vec4, h: f64, terms: &[(f64, &Vec4)]) -> Vec4 {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..4 {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn sample(t: f64, y: &Vec4, dy: &Vec4) -> Sample {
    Sample {
        t,
        state: StatePoint::from_array(*y),
        accel: (dy[2], dy[3]),
    }
}

/// Integrates the first-order form of `field` from `s0` over `[0, period]`.
pub fn integrate_ivp(
    field: &impl Field,
    s0: StatePoint,
    period: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, SolveError> {
    cfg.validate()?;
    if !(period > 0.0 && period.is_finite()) {
        return Err(SolveError::Config(format!("period must be positive, got {period}")));
    }
    integrate_span(field, s0, 0.0, period, cfg)
}

/// Integration over `[t0, t1]`; samples carry absolute times.
pub(crate) fn integrate_span(
    field: &impl Field,
    s0: StatePoint,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, SolveError> {
    if !s0.is_finite() {
        return Err(SolveError::NonFinite { t: t0 });
    }
    match cfg.method {
        Method::Rk4Fixed => rk4(field, s0, t0, t1, cfg),
        Method::Rk45Adaptive => rk45(field, s0, t0, t1, cfg),
    }
}

fn rk4(field: &impl Field, s0: StatePoint, t0: f64, t1: f64, cfg: &IntegratorConfig) -> Result<Trajectory, SolveError> {
    let n = cfg.fixed_steps(t1 - t0);
    if n > cfg.max_steps {
        return Err(SolveError::TooManySteps(cfg.max_steps));
    }
    let h = (t1 - t0) / n as f64;
    let mut y = s0.to_array();
    let mut dy = deriv(field, t0, &y)?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(sample(t0, &y, &dy));
    for k in 0..n {
        let t = t0 + k as f64 * h;
        let k1 = dy;
        let k2 = deriv(field, t + 0.5 * h, &axpy(&y, 0.5 * h, &[(1.0, &k1)]))?;
        let k3 = deriv(field, t + 0.5 * h, &axpy(&y, 0.5 * h, &[(1.0, &k2)]))?;
        let k4 = deriv(field, t + h, &axpy(&y, h, &[(1.0, &k3)]))?;
        y = axpy(&y, h / 6.0, &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)]);
        let t_next = if k + 1 == n { t1 } else { t0 + (k + 1) as f64 * h };
        if !y.iter().all(|v| v.is_finite()) {
            return Err(SolveError::NonFinite { t: t_next });
        }
        dy = deriv(field, t_next, &y)?;
        out.push(sample(t_next, &y, &dy));
    }
    Ok(Trajectory::new(out, 0.0))
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn rk45(
    field: &impl Field,
    s0: StatePoint,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, SolveError> {
    let min_step = 1e-14 * (t1 - t0).max(t1.abs());
    let mut t = t0;
    let mut y = s0.to_array();
    let mut k1 = deriv(field, t0, &y)?;
    let mut h = cfg.step.min(t1 - t0);
    let mut out = vec![sample(t0, &y, &k1)];
    let mut max_err = 0.0f64;
    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > cfg.max_steps {
            return Err(SolveError::TooManySteps(cfg.max_steps));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let k2 = deriv(field, t + C[1] * h, &axpy(&y, h, &[(A2[0], &k1)]))?;
        let k3 = deriv(field, t + C[2] * h, &axpy(&y, h, &[(A3[0], &k1), (A3[1], &k2)]))?;
        let k4 = deriv(
            field,
            t + C[3] * h,
            &axpy(&y, h, &[(A4[0], &k1), (A4[1], &k2), (A4[2], &k3)]),
        )?;
        let k5 = deriv(
            field,
            t + C[4] * h,
            &axpy(&y, h, &[(A5[0], &k1), (A5[1], &k2), (A5[2], &k3), (A5[3], &k4)]),
        )?;
        let k6 = deriv(
            field,
            t + C[5] * h,
            &axpy(
                &y,
                h,
                &[(A6[0], &k1), (A6[1], &k2), (A6[2], &k3), (A6[3], &k4), (A6[4], &k5)],
            ),
        )?;
        let y5 = axpy(
            &y,
            h,
            &[(B5[0], &k1), (B5[2], &k3), (B5[3], &k4), (B5[4], &k5), (B5[5], &k6)],
        );
        let t_new = if last { t1 } else { t + h };
        let k7 = deriv(field, t_new, &y5)?;
        let ks = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
        let mut err = 0.0f64;
        for i in 0..4 {
            let e: f64 = (0..7).map(|j| (B5[j] - B4[j]) * ks[j][i]).sum::<f64>() * h;
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y5[i].abs());
            err = err.max(e.abs() / scale);
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }
        if err <= 1.0 {
            max_err = max_err.max(err);
            t = t_new;
            y = y5;
            k1 = k7;
            out.push(sample(t, &y, &k1));
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err > 1.0 || !last {
            h *= factor;
        }
        if h < min_step && t < t1 {
            return Err(SolveError::StepUnderflow { t, h });
        }
    }
    Ok(Trajectory::new(out, max_err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::FnField;
    use std::f64::consts::TAU;

    fn oscillator() -> FnField<impl Fn(f64, &StatePoint) -> (f64, f64) + Sync> {
        FnField(|_t: f64, s: &StatePoint| (-s.z, 0.0))
    }

    #[test]
    fn rk4_cosine_period() {
        let tr = integrate_ivp(
            &oscillator(),
            StatePoint::new(1.0, 0.0, 0.0, 0.0),
            TAU,
            &IntegratorConfig::rk4(1e-3),
        )
        .unwrap();
        assert_eq!(tr.len(), 6285);
        assert!((tr.last().state.z - 1.0).abs() < 1e-6);
        assert_eq!(tr.last().t, TAU);
    }

    #[test]
    fn default_step_count_on_unit_period() {
        let tr = integrate_ivp(&oscillator(), StatePoint::default(), 1.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(tr.len(), 8001);
        assert!(tr.samples().iter().all(|s| s.state == StatePoint::default()));
    }

    #[test]
    fn rk45_cosine_period() {
        let cfg = IntegratorConfig::rk45(1e-12, 1e-10);
        let tr = integrate_ivp(&oscillator(), StatePoint::new(1.0, 0.0, 0.0, 0.0), TAU, &cfg).unwrap();
        assert!((tr.last().state.z - 1.0).abs() < 1e-8);
        assert!((tr.eval(TAU / 4.0).z).abs() < 1e-7);
        assert!(tr.len() < 2000);
    }

    #[test]
    fn blow_up_is_reported() {
        let field = FnField(|_t: f64, s: &StatePoint| (s.z * s.z, 0.0));
        let r = integrate_ivp(
            &field,
            StatePoint::new(10.0, 0.0, 10.0, 0.0),
            1.0,
            &IntegratorConfig::default(),
        );
        assert!(matches!(r, Err(SolveError::NonFinite { .. })), "{r:?}");
        let r = integrate_ivp(
            &field,
            StatePoint::new(10.0, 0.0, 10.0, 0.0),
            1.0,
            &IntegratorConfig::rk45(1e-10, 1e-8),
        );
        assert!(r.is_err());
    }

    #[test]
    fn method_names() {
        assert_eq!("rk45".parse::<Method>().unwrap(), Method::Rk45Adaptive);
        assert_eq!("rk4_fixed".parse::<Method>().unwrap(), Method::Rk4Fixed);
        assert!("euler".parse::<Method>().is_err());
    }
}
