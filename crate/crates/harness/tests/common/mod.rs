//! Composite-rule oracle for the kinetic coefficients, independent of the
//! quadrature and GCI code in the library.

#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

pub fn weight(kappa: f64, theta: f64) -> f64 {
    let c = theta.cos().abs();
    if c <= 0.0 || kappa / c > 700.0 {
        0.0
    } else {
        (-kappa / c).exp()
    }
}

/// Moments `∫ g φ w` over `[0, π/2]` for `φ ∈ {sin, tan, sin/cos², tan³}`,
/// with `g` from cumulative trapezoid sums of its flux form.
fn trapezoid_moments(kappa: f64, n: usize) -> [f64; 4] {
    let h = FRAC_PI_2 / n as f64;
    let th: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let w: Vec<f64> = th.iter().map(|&t| weight(kappa, t)).collect();
    let mut flux = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let a = (2.0 * th[i]).sin() * w[i];
        let b = (2.0 * th[i + 1]).sin() * w[i + 1];
        flux[i] = flux[i + 1] - 0.5 * h * (a + b);
    }
    let slope: Vec<f64> = (0..=n)
        .map(|i| {
            let c = th[i].cos();
            if w[i] == 0.0 || c * c * w[i] < 1e-250 {
                0.0
            } else {
                flux[i] / (c * c * w[i])
            }
        })
        .collect();
    let mut g = vec![0.0; n + 1];
    for i in 0..n {
        g[i + 1] = g[i] + 0.5 * h * (slope[i] + slope[i + 1]);
    }
    let phis: [fn(f64) -> f64; 4] = [f64::sin, f64::tan, |t| t.sin() / t.cos().powi(2), |t| t.tan().powi(3)];
    phis.map(|phi| {
        let vals: Vec<f64> = (0..=n)
            .map(|i| if w[i] == 0.0 { 0.0 } else { g[i] * phi(th[i]) * w[i] })
            .collect();
        h * (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[n]))
    })
}

pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    h / 3.0 * (f(a) + inner + f(b))
}

/// `[d1, d2, μ, d3, 𝒟]` from Richardson-extrapolated trapezoid sums.
pub fn oracle_coefficients(kappa: f64) -> [f64; 5] {
    let coarse = trapezoid_moments(kappa, 20_000);
    let fine = trapezoid_moments(kappa, 40_000);
    let m: Vec<f64> = (0..4).map(|j| (4.0 * fine[j] - coarse[j]) / 3.0).collect();
    let n = 200_000;
    let d1 = simpson(|t| t.cos() * weight(kappa, t), 0.0, FRAC_PI_2, n) / simpson(|t| weight(kappa, t), 0.0, FRAC_PI_2, n);
    let (d2, mu, d3) = (m[1] / m[2], m[0] / (kappa * m[2]), 2.0 * m[3] / m[2]);
    [d1, d2, mu, d3, d2 + d3 - mu - 2.0 / kappa]
}
