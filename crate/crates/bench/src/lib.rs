//! Shared fixtures for the benchmark targets.

use num_rational::BigRational;

use convlyap::polyalg::parse_system;
use convlyap::VectorField;

/// Reverse-time van der Pol oscillator, the standard nonlinear workload.
pub fn vdp() -> VectorField {
    parse_system("x1' = -x2; x2' = x1 - x2 + x1^2*x2").expect("fixed grammar")
}

/// One-dimensional cubic decay, the homogeneous workload.
pub fn cubic() -> VectorField {
    parse_system("x1' = -x1^3").expect("fixed grammar")
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}
