//! Full pipeline on the cubic example system: continuation from the linear
//! problem to the truncated system, then the a-posteriori checks.
//!
//! ```text
//! cargo run --release --example example_system_solve [out.csv]
//! ```

use std::fs::File;
use std::io::BufWriter;

use perisolve::cli::{run_solve, solve_lines};
use perisolve::config::RunConfig;

fn main() {
    let run = RunConfig::builtin("example").resolve(None).unwrap();
    let solved = run_solve(&run, false).unwrap();
    print!("{}", solve_lines(&solved.summary));
    for step in &solved.summary.continuation.attempts {
        println!(
            "  ({:.3}, {:.3}) accepted={} iterations={} residual={:.2e}",
            step.lambda, step.mu, step.accepted, step.iterations, step.residual
        );
    }
    if let (Some(path), Some(traj)) = (std::env::args().nth(1), &solved.trajectory) {
        traj.write_csv(BufWriter::new(File::create(&path).unwrap())).unwrap();
        println!("trajectory written to {path}");
    }
}
