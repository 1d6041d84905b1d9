//! Run every certification condition on both built-in cases and print the
//! worst margin and witness of each.
//!
//! ```text
//! cargo run --release --example certify_example
//! ```

use perisolve::cli::run_certify;
use perisolve::config::RunConfig;

fn main() {
    for name in ["vdp", "example"] {
        let run = RunConfig::builtin(name).resolve(None).unwrap();
        let report = run_certify(&run).unwrap();
        println!("== {name}: {}", report.overall.as_str());
        for c in &report.conditions {
            print!(
                "  {:<16} {:<12} {:+.4e}",
                c.name,
                c.verdict.as_str(),
                c.worst_margin + 0.0
            );
            let free: Vec<String> = c.witness.free.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
            println!("  at t={:.4} {}", c.witness.t, free.join(" "));
        }
        println!("  note: {}", report.bounds_note);
    }
}
