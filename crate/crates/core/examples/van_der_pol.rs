//! Coupled forced oscillators with tanh coupling, with the default parameters
//! and with a stronger forcing supplied through a JSON config.
//!
//! ```text
//! cargo run --release --example van_der_pol
//! ```

use perisolve::cli::run_solve;
use perisolve::config::RunConfig;

fn report(label: &str, cfg: RunConfig) {
    let run = cfg.resolve(None).unwrap();
    let solved = run_solve(&run, true).unwrap();
    let s = &solved.summary;
    println!(
        "{label}: certification {:?}, converged {}, residual {:.2e}, std(z) {:.4}, clamps {:?}, localization {}",
        s.certification.unwrap(),
        s.converged,
        s.residual,
        s.z_std.unwrap_or(0.0),
        s.clamps_active,
        s.localization
            .as_ref()
            .map_or("n/a", |l| if l.pass { "PASS" } else { "FAIL" })
    );
}

fn main() {
    report("default", RunConfig::builtin("vdp"));
    let tuned = RunConfig::from_json(
        r#"{"system": {"builtin": "vdp", "params": {"G1": 1.5}}, "certification": {"grid_t": 501}}"#,
    )
    .unwrap();
    report("G1 = 1.5", tuned);
}
