//! Parse a right-hand side, evaluate it at a point and show how errors are located.
//!
//! ```text
//! cargo run --example parse_expression
//! ```

use perisolve::expr::parse_expression;
use perisolve::system::{Point, EXAMPLE_F};

fn main() {
    let f = parse_expression(EXAMPLE_F).expect("built-in expression parses");
    println!("f = {f}");

    let p = Point::new(0.25, 1.0, 0.5, -0.2, 3.0);
    println!(
        "f(t={}, z0={}, w0={}, z1={}, w1={}) = {}",
        p.t,
        p.z0,
        p.w0,
        p.z1,
        p.w1,
        f.eval(&p).unwrap()
    );

    for src in ["sin(pi*t) + w1^2", "-2^2", "z0 * (w0 +", "2 ^ 0.5", "cosh(z0)"] {
        match parse_expression(src) {
            Ok(e) => println!("{src:<22} -> {e} = {}", e.eval(&p).unwrap()),
            Err(err) => println!("{src:<22} -> error (byte {}): {err}", err.offset()),
        }
    }
}
