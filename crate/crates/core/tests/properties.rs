use perisolve::bounds::{shift_lower, shift_upper, BoundQuadruple, PolyFunction};
use perisolve::cases::CaseStudy;
use perisolve::certify::envelope::{derivative_bound, NagumoEnvelope};
use perisolve::certify::{certify_all, CertificationConfig};
use perisolve::expr::{parse_expression, BinOp, Expr, Func, Var};
use perisolve::homotopy::{AuxiliarySystem, TruncationBand};
use perisolve::solver::{integrate_ivp, newton_solve, IntegratorConfig, NewtonConfig, ShootingProblem, StatePoint};
use perisolve::system::Point;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0f64..1e3).prop_map(Expr::Num),
        (0usize..5).prop_map(|i| Expr::Var(Var::ALL[i])),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (0usize..5, inner.clone(), inner.clone()).prop_map(|(k, a, b)| {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Add][k];
                Expr::Bin(op, Box::new(a), Box::new(b))
            }),
            (inner.clone(), -3i32..=4).prop_map(|(b, n)| Expr::Pow(Box::new(b), n)),
            (0usize..8, inner).prop_map(|(k, a)| Expr::Call(Func::ALL[k], Box::new(a))),
        ]
    })
}

fn poly_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 1..6)
}

fn band(lo: &[f64], hi: &[f64]) -> TruncationBand {
    let q = BoundQuadruple::from_coeffs(lo, lo, hi, hi, 1.0).unwrap();
    TruncationBand::from_quadruple(&q, 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn display_parses_back_to_the_same_tree(e in expr_strategy()) {
        let text = e.to_string();
        let back = parse_expression(&text).unwrap();
        prop_assert_eq!(&back, &e, "{}", text);
    }

    #[test]
    fn evaluation_survives_round_trip(e in expr_strategy(), t in 0.0f64..1.0, z in -2.0f64..2.0) {
        let p = Point::new(t, z, -z, 0.5 * z, 1.0);
        let back = parse_expression(&e.to_string()).unwrap();
        match (e.eval(&p), back.eval(&p)) {
            (Ok(a), Ok(b)) => prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn sup_norm_dominates_every_sample(c in poly_strategy()) {
        let p = PolyFunction::new(c, 1.0).unwrap();
        let norm = p.sup_norm();
        for k in 0..=500 {
            let t = k as f64 / 500.0;
            prop_assert!(p.value(t).abs() <= norm.value * (1.0 + 1e-12) + 1e-12);
        }
        prop_assert!((p.value(norm.at).abs() - norm.value).abs() <= 1e-9 * norm.value.max(1.0));
    }

    #[test]
    fn shifted_bounds_straddle_zero(c in poly_strategy()) {
        let p = PolyFunction::new(c, 1.0).unwrap();
        let (lo, hi) = (shift_lower(&p), shift_upper(&p));
        for k in 0..=200 {
            let t = k as f64 / 200.0;
            prop_assert!(lo.value(t) <= 1e-12);
            prop_assert!(hi.value(t) >= -1e-12);
        }
    }

    #[test]
    fn truncation_is_a_projection(
        lo in poly_strategy(),
        hi in poly_strategy(),
        t in 0.0f64..=1.0,
        x in -50.0f64..50.0,
    ) {
        let b = band(&lo, &hi);
        let c = b.clamp(t, x);
        prop_assert_eq!(b.clamp(t, c), c);
        prop_assert!(b.lower.value(t) <= c && c <= b.upper.value(t));
        if b.contains(t, x) {
            prop_assert_eq!(c, x);
        }
        // monotone in x
        prop_assert!(b.clamp(t, x - 1.0) <= c && c <= b.clamp(t, x + 1.0));
    }

    #[test]
    fn derivative_bound_grows_with_the_envelope(
        a in 0.1f64..100.0,
        b in 0.0f64..10.0,
        da in 0.0f64..10.0,
        db in 0.0f64..1.0,
        period in 0.1f64..3.0,
    ) {
        let small = derivative_bound(&NagumoEnvelope::affine(a, b).unwrap(), period).unwrap();
        let large = derivative_bound(&NagumoEnvelope::affine(a + da, b + db).unwrap(), period).unwrap();
        prop_assert!(large >= small);
        let longer = derivative_bound(&NagumoEnvelope::affine(a, b).unwrap(), period * 1.5).unwrap();
        prop_assert!(longer > small);
    }

    #[test]
    fn tabulated_envelope_agrees_with_quadrature(
        a in 0.5f64..20.0,
        steps in prop::collection::vec((0.1f64..3.0, 0.0f64..5.0), 1..5),
        tail in 0.0f64..4.0,
    ) {
        let mut samples = vec![(0.0, a)];
        for (ds, dp) in steps {
            let (s, p) = *samples.last().unwrap();
            samples.push((s + ds, p + dp));
        }
        let env = NagumoEnvelope::tabulated(samples.clone(), tail).unwrap();
        let n = env.critical_level_numeric(1.0).unwrap();
        // ∫ ds / (p0 + m (s - s0)) = ln(1 + m (x - s0) / p0) / m on each linear piece
        let piece = |s0: f64, p0: f64, m: f64, x: f64| {
            if m == 0.0 { (x - s0) / p0 } else { (m * (x - s0) / p0).ln_1p() / m }
        };
        let mut integral = 0.0;
        for w in samples.windows(2) {
            let ((s0, p0), (s1, p1)) = (w[0], w[1]);
            integral += piece(s0, p0, (p1 - p0) / (s1 - s0), s1.min(n));
            if n <= s1 {
                break;
            }
        }
        let (s_last, p_last) = *samples.last().unwrap();
        if n > s_last {
            integral += piece(s_last, p_last, tail, n);
        }
        prop_assert!((integral - 1.0).abs() < 1e-10, "{} {}", integral, n);
    }
}

fn example_case() -> CaseStudy {
    CaseStudy::by_name("example").unwrap()
}

#[test]
fn auxiliary_field_reduces_at_the_endpoints() {
    let case = example_case();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let aux0 = AuxiliarySystem::new(case.system.clone(), &case.bounds, 0.0, 0.0).unwrap();
    let aux1 = AuxiliarySystem::new(case.system.clone(), &case.bounds, 1.0, 1.0).unwrap();
    for _ in 0..2000 {
        let t = rng.gen_range(0.0..=1.0);
        let p = Point::new(
            t,
            rng.gen_range(-9.0..9.0),
            rng.gen_range(-9.0..9.0),
            rng.gen_range(-9.0..9.0),
            rng.gen_range(-9.0..9.0),
        );
        assert_eq!(aux0.aux_rhs(&p).unwrap(), (p.z0, p.w0));
        let inside = Point::new(
            t,
            0.5 * (case.bounds.alpha0(0).value(t) + case.bounds.beta0(0).value(t)),
            0.0,
            p.z1,
            p.w1,
        );
        let (a, _) = aux1.aux_rhs(&inside).unwrap();
        let f = case.system.f(&inside).unwrap();
        assert!((a - f).abs() <= 1e-14 * f.abs().max(1.0));
    }
}

#[test]
fn homogeneous_problem_returns_to_zero() {
    let case = example_case();
    let prob = ShootingProblem {
        field: AuxiliarySystem::new(case.system.clone(), &case.bounds, 0.0, 0.0).unwrap(),
        period: 1.0,
        integrator: IntegratorConfig::default(),
        newton: NewtonConfig::default(),
        segments: 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let guess = StatePoint::from_array(std::array::from_fn(|_| rng.gen_range(-0.5..0.5)));
        let out = newton_solve(&prob, guess).unwrap();
        assert!(out.state.max_abs() < 1e-10, "{:?}", out.state);
    }
}

#[test]
fn reintegration_reproduces_a_converged_orbit() {
    let case = CaseStudy::by_name("vdp").unwrap();
    let prob = ShootingProblem {
        field: AuxiliarySystem::new(case.system.clone(), &case.bounds, 1.0, 1.0).unwrap(),
        period: 1.0,
        integrator: IntegratorConfig::default(),
        newton: NewtonConfig::default(),
        segments: 1,
    };
    let out = newton_solve(&prob, StatePoint::default()).unwrap();
    let again = integrate_ivp(&prob.field, out.state, 1.0, &prob.integrator).unwrap();
    let worst = out
        .trajectory
        .samples()
        .iter()
        .zip(again.samples())
        .map(|(a, b)| {
            let (x, y) = (a.state.to_array(), b.state.to_array());
            (0..4).map(|i| (x[i] - y[i]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    assert!(worst <= 10.0 * prob.newton.residual_tol, "{worst}");
}

#[test]
fn certification_is_independent_of_thread_count() {
    let case = example_case();
    let cfg = CertificationConfig {
        grid_t: 201,
        ..CertificationConfig::default()
    };
    let run = || certify_all(&case.system, &case.bounds, &case.env_f, &case.env_g, &cfg).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(run);
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(run);
    assert_eq!(
        serde_json::to_string(&single).unwrap(),
        serde_json::to_string(&many).unwrap()
    );
}
