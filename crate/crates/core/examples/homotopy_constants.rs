//! The constants `r1, r2` and `N1*, N2*` that bound every solution of the
//! truncated auxiliary problem, and the truncation itself.
//!
//! ```text
//! cargo run --release --example homotopy_constants
//! ```

use perisolve::cases::CaseStudy;
use perisolve::homotopy::{apriori_constants, AuxiliarySystem, RConfig, TruncationBand};
use perisolve::system::Point;

fn main() {
    let case = CaseStudy::by_name("example").unwrap();
    let k = apriori_constants(
        &case.system,
        &case.bounds,
        &case.env_f,
        &case.env_g,
        &RConfig::default(),
    )
    .unwrap();
    println!("N* from the envelopes:      ({:.4}, {:.4})", k.n_base.0, k.n_base.1);
    println!("N* of the auxiliary problem: ({:.4}, {:.4})", k.n_star.0, k.n_star.1);
    println!(
        "r = ({:.4}, {:.4}), r* = ({:.4}, {:.4})",
        k.r.r1, k.r.r2, k.r.r1_star, k.r.r2_star
    );
    println!(
        "passes {}, settled {}, audit min margin {:.4e}",
        k.iterations,
        k.settled,
        k.r.audit.min_margin()
    );

    let band = TruncationBand::from_quadruple(&case.bounds, 0);
    for z in [-5.0, 0.0, 5.0] {
        println!("delta1(0.5, {z:+}) = {:+.6}", band.clamp(0.5, z));
    }

    let p = Point::new(0.5, 5.0, 0.0, 1.0, 0.0);
    for (l, m) in [(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)] {
        let aux = AuxiliarySystem::new(case.system.clone(), &case.bounds, l, m).unwrap();
        let (zz, ww) = aux.aux_rhs(&p).unwrap();
        println!("(lambda, mu) = ({l}, {m}): z'' = {zz:+.6}, w'' = {ww:+.6}");
    }
}
