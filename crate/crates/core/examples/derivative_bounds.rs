//! A-priori derivative bounds from Nagumo envelopes: closed form against
//! quadrature plus bisection, and a tabulated envelope.
//!
//! ```text
//! cargo run --example derivative_bounds
//! ```

use perisolve::certify::envelope::{derivative_bound, NagumoEnvelope};

fn main() {
    let cases = [
        (94.0 / 5.0, 3.0, 1.0),
        (477.0 / 5.0, 3.0, 1.0),
        (2.0, 0.0, 3.0),
        (0.5, 4.0, 2.0),
    ];
    for (a, b, period) in cases {
        let env = NagumoEnvelope::affine(a, b).unwrap();
        let closed = env.critical_level_closed_form(period).unwrap();
        let numeric = env.critical_level_numeric(period).unwrap();
        println!(
            "phi = {a} + {b}s, T = {period}: closed {closed:.10}  numeric {numeric:.10}  rel {:.2e}  N* {:.6}",
            (numeric / closed - 1.0).abs(),
            derivative_bound(&env, period).unwrap()
        );
    }

    let tab = NagumoEnvelope::tabulated(vec![(0.0, 1.0), (2.0, 3.0), (5.0, 9.0)], 2.0).unwrap();
    println!(
        "tabulated envelope, T = 1: N* = {:.6}",
        derivative_bound(&tab, 1.0).unwrap()
    );
}
