//! `z'' + z' + z = cos 2πt` has the periodic solution `A cos 2πt + B sin 2πt`.
//! Solve it by Newton shooting and by the full continuation, then fit.
//!
//! ```text
//! cargo run --release --example manufactured_oracle
//! ```

use perisolve::cases::fit_harmonic;
use perisolve::cli::run_solve;
use perisolve::config::RunConfig;
use perisolve::solver::{newton_solve, IntegratorConfig, NewtonConfig, ShootingProblem, StatePoint};
use perisolve::system::{builtin_system, manufactured_coefficients};

fn main() {
    let (a, b) = manufactured_coefficients();
    println!("closed form: A = {a:.12}, B = {b:.12}");

    let prob = ShootingProblem {
        field: builtin_system("manufactured_linear").unwrap(),
        period: 1.0,
        integrator: IntegratorConfig::default(),
        newton: NewtonConfig::default(),
        segments: 1,
    };
    let out = newton_solve(&prob, StatePoint::default()).unwrap();
    let (fa, fb, err) = fit_harmonic(&out.trajectory);
    println!(
        "direct shooting: {} iterations, A = {fa:.12}, B = {fb:.12}, fit residual {err:.2e}",
        out.iterations
    );

    let run = RunConfig::builtin("manufactured_linear").resolve(None).unwrap();
    let solved = run_solve(&run, false).unwrap();
    let fit = solved.summary.manufactured_fit.unwrap();
    println!(
        "continuation: skipped {:?}, A = {:.12}, B = {:.12}, error {:.2e}",
        solved.summary.continuation.skipped, fit.a, fit.b, fit.coefficient_error
    );
}
