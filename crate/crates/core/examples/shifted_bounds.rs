//! Shifted bounds `α⁰ = α − ‖α‖`, `β⁰ = β + ‖β‖` in exact rational arithmetic,
//! compared with the reference polynomials of both built-in cases.
//!
//! ```text
//! cargo run --example shifted_bounds
//! ```

use perisolve::cases::{format_poly, CaseStudy, CURVE_NAMES};

fn main() {
    for name in ["example", "vdp"] {
        let case = CaseStudy::by_name(name).unwrap();
        println!("== {name}");
        for (label, p) in CURVE_NAMES.iter().zip(&case.exact_bounds) {
            println!("  {label:<7} {}", format_poly(p));
        }
        for c in case.shift_comparison() {
            let mark = if c.matches { "ok" } else { "differs" };
            println!(
                "  {:<9} {:<28} reference {:<22} {mark}",
                c.name, c.computed, c.reference
            );
        }

        // the float path agrees with the exact one
        let q = &case.bounds;
        for t in [0.0, 0.5, 1.0] {
            println!(
                "  t={t:<4} alpha1_0={:+.6} beta1_0={:+.6} alpha2_0={:+.6} beta2_0={:+.6}",
                q.alpha0(0).value(t),
                q.beta0(0).value(t),
                q.alpha0(1).value(t),
                q.beta0(1).value(t)
            );
        }
    }
}
