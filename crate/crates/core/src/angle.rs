//! Angle conventions: particle directions live in `[-π, π)`, angles of lines
//! (defined modulo π) in `[-π/2, π/2)`.

use std::f64::consts::{FRAC_PI_2, PI};

const TAU: f64 = 2.0 * PI;

/// Fold an angle of vectors into `[-π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta - TAU * ((theta + PI) / TAU).floor();
    if t >= PI {
        t -= TAU;
    }
    if t < -PI {
        t = -PI;
    }
    t
}

/// Fold an angle of lines into `[-π/2, π/2)`.
pub fn wrap_line(theta: f64) -> f64 {
    let mut t = theta - PI * ((theta + FRAC_PI_2) / PI).floor();
    if t >= FRAC_PI_2 {
        t -= PI;
    }
    if t < -FRAC_PI_2 {
        t = -FRAC_PI_2;
    }
    t
}

/// Difference `a - b` of two angles of lines, taken to the nearest
/// representative in `[-π/2, π/2)`.
pub fn line_diff(a: f64, b: f64) -> f64 {
    wrap_line(a - b)
}
