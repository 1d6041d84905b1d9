//! Certification and numerical solution of periodic boundary-value problems
//! for coupled second-order systems
//!
//! ```text
//! z'' = f(t, z, w, z', w'),   w'' = g(t, z, w, z', w'),
//! z(0) = z(T), z'(0) = z'(T), w(0) = w(T), w'(0) = w'(T)
//! ```
//!
//! bracketed by shifted lower and upper solutions with Nagumo-type growth
//! control on `f` and `g`.

pub mod bounds;
pub mod cases;
pub mod certify;
pub mod cli;
pub mod config;
pub mod expr;
pub mod homotopy;
pub mod quadrature;
pub mod solver;
pub mod system;
