//! Coupled second-order systems `z'' = f(t, z, w, z', w')`, `w'' = g(...)`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse_expression, EvalError, Expr, ParseError};

/// Argument tuple `(t, z0, w0, z1, w1)` of a right-hand side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub t: f64,
    pub z0: f64,
    pub w0: f64,
    pub z1: f64,
    pub w1: f64,
}

impl Point {
    pub fn new(t: f64, z0: f64, w0: f64, z1: f64, w1: f64) -> Self {
        Point { t, z0, w0, z1, w1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    F,
    G,
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Which::F => "f",
            Which::G => "g",
        })
    }
}

type NativeFn = dyn Fn(&Point) -> f64 + Send + Sync;

/// One right-hand side: either a parsed expression or a native closure.
#[derive(Clone)]
pub enum Rhs {
    Expr(Expr),
    Native { label: String, func: Arc<NativeFn> },
}

impl Rhs {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        parse_expression(src).map(Rhs::Expr)
    }

    pub fn native(label: impl Into<String>, func: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Rhs::Native {
            label: label.into(),
            func: Arc::new(func),
        }
    }

    fn raw(&self, p: &Point) -> Result<f64, EvalError> {
        match self {
            Rhs::Expr(e) => e.eval(p),
            Rhs::Native { func, .. } => Ok(func(p)),
        }
    }
}

impl fmt::Debug for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rhs::Expr(e) => write!(f, "Expr({e})"),
            Rhs::Native { label, .. } => write!(f, "Native({label})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RhsErrorKind {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("non-finite value {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("evaluating {which} at (t={t}, z0={z0}, w0={w0}, z1={z1}, w1={w1}): {kind}",
    t = point.t, z0 = point.z0, w0 = point.w0, z1 = point.z1, w1 = point.w1)]
pub struct RhsError {
    pub which: Which,
    pub point: Point,
    pub kind: RhsErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("period must be positive and finite, got {0}")]
    BadPeriod(f64),
    #[error("unknown builtin system `{0}` (expected example, vdp or manufactured_linear)")]
    UnknownBuiltin(String),
    #[error("parameter {name} must be positive, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("cross envelope for {0} must be non-negative")]
    BadCrossEnvelope(Which),
}

/// A coupled system with its period and the structural declarations that
/// certification samples against.
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    name: String,
    f: Rhs,
    g: Rhs,
    period: f64,
    /// `f` declared non-increasing in `w0`.
    pub monotone_f_w0: bool,
    /// `g` declared non-increasing in `z0`.
    pub monotone_g_z0: bool,
    /// Declared bound on the range of the `w1`-dependent part of `f`.
    pub cross_env_f: Option<f64>,
    /// Declared bound on the range of the `z1`-dependent part of `g`.
    pub cross_env_g: Option<f64>,
}

impl CoupledSystem {
    pub fn new(name: impl Into<String>, f: Rhs, g: Rhs, period: f64) -> Result<Self, SystemError> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(SystemError::BadPeriod(period));
        }
        Ok(CoupledSystem {
            name: name.into(),
            f,
            g,
            period,
            monotone_f_w0: false,
            monotone_g_z0: false,
            cross_env_f: None,
            cross_env_g: None,
        })
    }

    pub fn with_monotonicity(mut self, f_w0: bool, g_z0: bool) -> Self {
        self.monotone_f_w0 = f_w0;
        self.monotone_g_z0 = g_z0;
        self
    }

    pub fn with_cross_envelopes(mut self, f: Option<f64>, g: Option<f64>) -> Result<Self, SystemError> {
        if f.is_some_and(|b| !(b >= 0.0)) {
            return Err(SystemError::BadCrossEnvelope(Which::F));
        }
        if g.is_some_and(|b| !(b >= 0.0)) {
            return Err(SystemError::BadCrossEnvelope(Which::G));
        }
        self.cross_env_f = f;
        self.cross_env_g = g;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn rhs(&self, which: Which) -> &Rhs {
        match which {
            Which::F => &self.f,
            Which::G => &self.g,
        }
    }

    pub fn cross_env(&self, which: Which) -> Option<f64> {
        match which {
            Which::F => self.cross_env_f,
            Which::G => self.cross_env_g,
        }
    }

    /// Evaluates the selected right-hand side; non-finite results are errors.
    pub fn eval_rhs(&self, which: Which, p: &Point) -> Result<f64, RhsError> {
        let wrap = |kind| RhsError { which, point: *p, kind };
        let v = self.rhs(which).raw(p).map_err(|e| wrap(e.into()))?;
        if !v.is_finite() {
            return Err(wrap(RhsErrorKind::NonFinite(v)));
        }
        Ok(v)
    }

    pub fn f(&self, p: &Point) -> Result<f64, RhsError> {
        self.eval_rhs(Which::F, p)
    }

    pub fn g(&self, p: &Point) -> Result<f64, RhsError> {
        self.eval_rhs(Which::G, p)
    }
}

/// Coefficients of the coupled forced Van der Pol pair
/// `z'' = z'(A1 - B1 z^2) - C1 z + D1 tanh(E1 z - F1 w) + G1 cos t`,
/// `w'' = w'(A2 - B2 w^2) - C2 w + D2 atan(E2 w - F2 z) + G2 cos t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct VdpParams {
    pub A1: f64,
    pub B1: f64,
    pub C1: f64,
    pub D1: f64,
    pub E1: f64,
    pub F1: f64,
    pub G1: f64,
    pub A2: f64,
    pub B2: f64,
    pub C2: f64,
    pub D2: f64,
    pub E2: f64,
    pub F2: f64,
    pub G2: f64,
}

impl Default for VdpParams {
    fn default() -> Self {
        VdpParams {
            A1: 1.0,
            B1: 0.5,
            C1: 1.0,
            D1: 6.0,
            E1: 3.0,
            F1: 2.0,
            G1: 1.0,
            A2: 1.0,
            B2: 0.5,
            C2: 1.0,
            D2: 8.0,
            E2: 2.0,
            F2: 1.0,
            G2: -1.0,
        }
    }
}

impl VdpParams {
    pub fn validate(&self) -> Result<(), SystemError> {
        let positive = [
            ("A1", self.A1),
            ("B1", self.B1),
            ("C1", self.C1),
            ("D1", self.D1),
            ("F1", self.F1),
            ("A2", self.A2),
            ("B2", self.B2),
            ("C2", self.C2),
            ("D2", self.D2),
            ("F2", self.F2),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SystemError::BadParameter { name, value });
            }
        }
        for (name, value) in [("E1", self.E1), ("G1", self.G1), ("E2", self.E2), ("G2", self.G2)] {
            if !value.is_finite() {
                return Err(SystemError::BadParameter { name, value });
            }
        }
        Ok(())
    }

    /// The same right-hand sides as expression text.
    pub fn expressions(&self) -> (String, String) {
        let f = format!(
            "z1*({} - {}*z0^2) - {}*z0 + {}*tanh({}*z0 - {}*w0) + {}*cos(t)",
            self.A1, self.B1, self.C1, self.D1, self.E1, self.F1, self.G1
        );
        let g = format!(
            "w1*({} - {}*w0^2) - {}*w0 + {}*atan({}*w0 - {}*z0) + {}*cos(t)",
            self.A2, self.B2, self.C2, self.D2, self.E2, self.F2, self.G2
        );
        (f, g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Example,
    Vdp,
    ManufacturedLinear,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [Builtin::Example, Builtin::Vdp, Builtin::ManufacturedLinear];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Example => "example",
            Builtin::Vdp => "vdp",
            Builtin::ManufacturedLinear => "manufactured_linear",
        }
    }

    /// Text form of `(f, g)`, for parity checks against the native closures.
    pub fn expressions(self) -> (String, String) {
        match self {
            Builtin::Example => (EXAMPLE_F.to_string(), EXAMPLE_G.to_string()),
            Builtin::Vdp => VdpParams::default().expressions(),
            Builtin::ManufacturedLinear => (
                "-z0 - z1 + cos(2*pi*t)".to_string(),
                "-w0 - w1 + cos(2*pi*t)".to_string(),
            ),
        }
    }

    pub fn system(self) -> CoupledSystem {
        match self {
            Builtin::Example => example_system(),
            Builtin::Vdp => vdp_system(VdpParams::default()).expect("default parameters are valid"),
            Builtin::ManufacturedLinear => manufactured_linear_system(),
        }
    }
}

impl FromStr for Builtin {
    type Err = SystemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| SystemError::UnknownBuiltin(s.to_string()))
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const EXAMPLE_F: &str = "2*z0^3 - w0 + 3*z1 - 2/(1+w1^2) - 10*t";
pub const EXAMPLE_G: &str = "-z0 + 10*w0^3 - exp(-z1^2) - 3*w1 - 12*t";

pub fn builtin_system(name: &str) -> Result<CoupledSystem, SystemError> {
    Ok(name.parse::<Builtin>()?.system())
}

fn example_system() -> CoupledSystem {
    let f = Rhs::native("example.f", |p: &Point| {
        2.0 * p.z0.powi(3) - p.w0 + 3.0 * p.z1 - 2.0 / (1.0 + p.w1.powi(2)) - 10.0 * p.t
    });
    let g = Rhs::native("example.g", |p: &Point| {
        -p.z0 + 10.0 * p.w0.powi(3) - (-p.z1.powi(2)).exp() - 3.0 * p.w1 - 12.0 * p.t
    });
    CoupledSystem::new("example", f, g, 1.0)
        .expect("positive period")
        .with_monotonicity(true, true)
        .with_cross_envelopes(Some(2.0), Some(1.0))
        .expect("non-negative envelopes")
}

pub fn vdp_system(params: VdpParams) -> Result<CoupledSystem, SystemError> {
    params.validate()?;
    let p = params;
    let f = Rhs::native("vdp.f", move |x: &Point| {
        x.z1 * (p.A1 - p.B1 * x.z0 * x.z0) - p.C1 * x.z0 + p.D1 * (p.E1 * x.z0 - p.F1 * x.w0).tanh() + p.G1 * x.t.cos()
    });
    let g = Rhs::native("vdp.g", move |x: &Point| {
        x.w1 * (p.A2 - p.B2 * x.w0 * x.w0) - p.C2 * x.w0 + p.D2 * (p.E2 * x.w0 - p.F2 * x.z0).atan() + p.G2 * x.t.cos()
    });
    // Neither right-hand side depends on the other component's derivative,
    // so the declared cross ranges are only the coupling-term amplitudes.
    CoupledSystem::new("vdp", f, g, 1.0)?
        .with_monotonicity(true, true)
        .with_cross_envelopes(Some(p.D1), Some(p.D2 * std::f64::consts::FRAC_PI_2))
}

fn manufactured_linear_system() -> CoupledSystem {
    use std::f64::consts::TAU;
    let f = Rhs::native("manufactured_linear.f", |p: &Point| -p.z0 - p.z1 + (TAU * p.t).cos());
    let g = Rhs::native("manufactured_linear.g", |p: &Point| -p.w0 - p.w1 + (TAU * p.t).cos());
    CoupledSystem::new("manufactured_linear", f, g, 1.0)
        .expect("positive period")
        .with_monotonicity(true, true)
        .with_cross_envelopes(Some(0.0), Some(0.0))
        .expect("non-negative envelopes")
}

/// Closed-form periodic solution `A cos 2πt + B sin 2πt` of `x'' + x' + x = cos 2πt`.
pub fn manufactured_coefficients() -> (f64, f64) {
    let w2 = 4.0 * std::f64::consts::PI.powi(2);
    let den = (1.0 - w2).powi(2) + w2;
    ((1.0 - w2) / den, std::f64::consts::TAU / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_at_origin() {
        let sys = builtin_system("example").unwrap();
        assert_eq!(sys.f(&Point::default()).unwrap(), -2.0);
    }

    #[test]
    fn vdp_at_origin() {
        let sys = builtin_system("vdp").unwrap();
        assert_eq!(sys.f(&Point::default()).unwrap(), 1.0);
        assert_eq!(sys.g(&Point::default()).unwrap(), -1.0);
    }

    #[test]
    fn manufactured_values() {
        let sys = builtin_system("manufactured_linear").unwrap();
        assert_eq!(sys.f(&Point::new(0.0, 1.0, 0.0, 1.0, 0.0)).unwrap(), -1.0);
        let vanishing = Rhs::native("zero", |_: &Point| 0.0);
        let zero = CoupledSystem::new("zero", vanishing.clone(), vanishing, 1.0).unwrap();
        assert_eq!(zero.f(&Point::new(0.3, 1.0, 2.0, 3.0, 4.0)).unwrap(), 0.0);
    }

    #[test]
    fn native_and_parsed_agree_at_a_point() {
        let sys = builtin_system("example").unwrap();
        let parsed = Rhs::parse(EXAMPLE_F).unwrap();
        let p = Point::new(1.0, -8.0 / 27.0, 0.25, -2.0, 3.0);
        let a = sys.f(&p).unwrap();
        let b = parsed.raw(&p).unwrap();
        assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
    }

    #[test]
    fn unknown_builtin() {
        assert_eq!(
            builtin_system("lorenz").unwrap_err(),
            SystemError::UnknownBuiltin("lorenz".into())
        );
    }

    #[test]
    fn bad_period_and_params() {
        let zero = Rhs::native("zero", |_: &Point| 0.0);
        assert!(CoupledSystem::new("x", zero.clone(), zero, 0.0).is_err());
        let p = VdpParams {
            B1: -1.0,
            ..VdpParams::default()
        };
        assert!(matches!(
            vdp_system(p),
            Err(SystemError::BadParameter { name: "B1", .. })
        ));
    }

    #[test]
    fn non_finite_is_reported_with_input() {
        let f = Rhs::parse("exp(z0)").unwrap();
        let sys = CoupledSystem::new("x", f.clone(), f, 1.0).unwrap();
        let p = Point::new(0.0, 1000.0, 0.0, 0.0, 0.0);
        let err = sys.f(&p).unwrap_err();
        assert_eq!(err.point, p);
        assert!(matches!(err.kind, RhsErrorKind::NonFinite(_)));
    }

    #[test]
    fn manufactured_coefficients_solve_the_linear_system() {
        // (1-w^2) A + w B = 1, (1-w^2) B - w A = 0 by undetermined coefficients.
        let (a, b) = manufactured_coefficients();
        let w = std::f64::consts::TAU;
        assert!(((1.0 - w * w) * a + w * b - 1.0).abs() < 1e-14);
        assert!(((1.0 - w * w) * b - w * a).abs() < 1e-14);
    }
}
