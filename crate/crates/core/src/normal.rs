//! Standard normal distribution helpers.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Natural log of the standard normal CDF, accurate far into the lower tail.
pub fn ln_phi(x: f64) -> f64 {
    if x > -30.0 {
        phi(x).ln()
    } else {
        // Mills ratio asymptotics; erfc underflows below about -38.
        let x2 = x * x;
        -0.5 * x2 - (-x * (2.0 * PI).sqrt()).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}
