//! A user-defined system given entirely as JSON: expressions, bounds,
//! envelopes and solver settings.
//!
//! ```text
//! cargo run --release --example custom_system
//! ```

use perisolve::cli::{certification_lines, run_solve, solve_exit_code, solve_lines};
use perisolve::config::RunConfig;

const CONFIG: &str = r#"{
    "system": {
        "name": "damped_cubic",
        "f": "z0^3 + z1 - 0.5*w0 - cos(2*pi*t)",
        "g": "w0 + 0.2*w1 - 0.1*z0 + 0.1*tanh(z1) - 0.5*sin(2*pi*t)",
        "monotone_f_w0": true,
        "monotone_g_z0": true,
        "cross_env_f": 0,
        "cross_env_g": 0.2
    },
    "bounds": {"alpha1": [-1.5], "beta1": [1.5], "alpha2": [-1], "beta2": [1]},
    "envelopes": {"f": {"a": 30, "b": 1}, "g": {"a": 10, "b": 0.2}},
    "certification": {"grid_t": 401},
    "solver": {"method": "rk45_adaptive", "steps": 6}
}"#;

fn main() {
    let run = RunConfig::from_json(CONFIG).unwrap().resolve(None).unwrap();
    let solved = run_solve(&run, true).unwrap();
    print!("{}", certification_lines(solved.certification.as_ref().unwrap()));
    print!("{}", solve_lines(&solved.summary));
    println!("exit code: {}", solve_exit_code(&solved.summary));
}
