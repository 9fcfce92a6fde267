//! Flux matrices of the `(ρ, δ, θ̄)` system in time rescaled by `d1`, and
//! the sign of the discriminant of their characteristic cubic.
//!
//! With `c = cos²θ̄` and `X = (δ/ρ)²` the discriminant is the quadratic
//! `Δ(X) = α(c) X² + β(c) X + γ(c)`; the system is hyperbolic wherever
//! `Δ ≥ 0`.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::coefficients::CoefficientSet;
use crate::numerics::{cubic_roots, ComplexRoot, NumericsError};

pub type Matrix3 = [[f64; 3]; 3];

/// Tolerance on `min Δ` at the tangency `X = 1`.
pub const DISCRIMINANT_SLACK: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperbolicityError {
    #[error("MacroPoint invariant violated: rho must be finite and > 0 (got {0})")]
    InvalidDensity(f64),
    #[error("MacroPoint invariant violated: |delta| <= rho required (got delta={delta}, rho={rho})")]
    InvalidDifference { rho: f64, delta: f64 },
    #[error("MacroPoint invariant violated: theta_bar must be finite (got {0})")]
    InvalidAngle(f64),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Total density, signed difference `ρ+ - ρ-` and mean line angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroPoint {
    rho: f64,
    delta: f64,
    theta_bar: f64,
}

impl MacroPoint {
    pub fn new(rho: f64, delta: f64, theta_bar: f64) -> Result<Self, HyperbolicityError> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(HyperbolicityError::InvalidDensity(rho));
        }
        if !delta.is_finite() || delta.abs() > rho {
            return Err(HyperbolicityError::InvalidDifference { rho, delta });
        }
        if !theta_bar.is_finite() {
            return Err(HyperbolicityError::InvalidAngle(theta_bar));
        }
        Ok(Self { rho, delta, theta_bar })
    }

    /// A point with the given `c = cos²θ̄` and `X = (δ/ρ)²` at `ρ = 1`.
    pub fn from_cx(c: f64, x: f64) -> Result<Self, HyperbolicityError> {
        Self::new(1.0, x.clamp(0.0, 1.0).sqrt(), c.clamp(0.0, 1.0).sqrt().acos())
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn theta_bar(&self) -> f64 {
        self.theta_bar
    }

    pub fn c(&self) -> f64 {
        self.theta_bar.cos().powi(2)
    }

    pub fn x(&self) -> f64 {
        (self.delta / self.rho).powi(2)
    }

    fn rotated(&self, phi: f64) -> Self {
        Self {
            theta_bar: self.theta_bar - phi,
            ..*self
        }
    }
}

/// Flux matrix in the `x` direction.
pub fn flux_matrix_a(p: MacroPoint, d2_hat: f64, mu_hat: f64) -> Matrix3 {
    let (s, c) = p.theta_bar.sin_cos();
    let r = p.delta / p.rho;
    [
        [0.0, c, -p.delta * s],
        [c, 0.0, -p.rho * s],
        [0.0, -mu_hat / p.rho * s, d2_hat * r * c],
    ]
}

/// Flux matrix in the `y` direction, `B(θ̄) = A(θ̄ - π/2)`.
pub fn flux_matrix_b(p: MacroPoint, d2_hat: f64, mu_hat: f64) -> Matrix3 {
    flux_matrix_a(p.rotated(FRAC_PI_2), d2_hat, mu_hat)
}

/// Coefficients `[a3, a2, a1, a0]` of `det(z I - m)`.
pub fn characteristic_polynomial(m: &Matrix3) -> [f64; 4] {
    let trace = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    [1.0, -trace, minors, -det]
}

/// `-27a₃²a₀² + 18a₃a₂a₁a₀ + a₂²a₁² - 4a₂³a₀ - 4a₃a₁³`.
pub fn cubic_discriminant([a3, a2, a1, a0]: [f64; 4]) -> f64 {
    -27.0 * a3 * a3 * a0 * a0 + 18.0 * a3 * a2 * a1 * a0 + a2 * a2 * a1 * a1
        - 4.0 * a2 * a2 * a2 * a0
        - 4.0 * a3 * a1 * a1 * a1
}

pub fn alpha(c: f64, d2: f64, mu: f64) -> f64 {
    4.0 * d2.powi(3) * c * c * (c * (d2 + mu) - mu)
}

pub fn beta(c: f64, d2: f64, mu: f64) -> f64 {
    let (d22, mu2) = (d2 * d2, mu * mu);
    let quad = d22 * mu2 - 18.0 * d2 * mu2 - 27.0 * mu2 - 36.0 * d2 * mu - 8.0 * d22 - 20.0 * d22 * mu;
    let lin = 2.0 * mu * (-d22 * mu + 18.0 * d2 + 10.0 * d22 + 27.0 * mu + 18.0 * mu * d2);
    let cst = -mu2 * (18.0 * d2 - d22 + 27.0);
    c * (quad * c * c + lin * c + cst)
}

pub fn gamma(c: f64, mu: f64) -> f64 {
    4.0 * (c * (1.0 - mu) + mu).powi(3)
}

/// `Δ = α(c) X² + β(c) X + γ(c)`.
pub fn characteristic_discriminant(c: f64, x: f64, d2_hat: f64, mu_hat: f64) -> f64 {
    alpha(c, d2_hat, mu_hat) * x * x + beta(c, d2_hat, mu_hat) * x + gamma(c, mu_hat)
}

/// Discriminant of the characteristic polynomial of `A` at the point
/// reconstructed from `(c, X)`.
pub fn direct_discriminant(c: f64, x: f64, d2_hat: f64, mu_hat: f64) -> f64 {
    let p = MacroPoint::from_cx(c, x).expect("c and X are clamped into range");
    cubic_discriminant(characteristic_polynomial(&flux_matrix_a(p, d2_hat, mu_hat)))
}

pub fn eigenvalues(m: &Matrix3) -> Result<[ComplexRoot; 3], NumericsError> {
    let [a3, a2, a1, a0] = characteristic_polynomial(m);
    cubic_roots(a3, a2, a1, a0)
}

/// Above this `c` the quadratic `Δ(X)` has no real roots.
pub fn no_root_threshold(d2_hat: f64, mu_hat: f64) -> f64 {
    9.0 * (mu_hat + d2_hat) / (9.0 * mu_hat + mu_hat * d2_hat + 8.0 * d2_hat)
}

/// `α(c) < 0` exactly for `c` below this value.
pub fn tangency_threshold(d2_hat: f64, mu_hat: f64) -> f64 {
    mu_hat / (mu_hat + d2_hat)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSample {
    pub c: f64,
    pub x: f64,
    pub discriminant: f64,
    pub real_parts: [f64; 3],
    pub max_imag: f64,
}

/// Minimum of `Δ` along one grid row of constant `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub c: f64,
    pub min_discriminant: f64,
    pub argmin_x: f64,
    pub max_discriminant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicityReport {
    pub kappa: f64,
    pub d2_hat: f64,
    pub mu_hat: f64,
    pub n_c: usize,
    pub n_x: usize,
    pub min_discriminant: f64,
    pub argmin: (f64, f64),
    pub rows: Vec<ScanRow>,
    pub eigen_samples: Vec<EigenSample>,
}

impl HyperbolicityReport {
    pub fn is_hyperbolic(&self) -> bool {
        self.min_discriminant >= -DISCRIMINANT_SLACK
    }

    /// Largest imaginary part among samples with `Δ > threshold`.
    pub fn max_imag_where_positive(&self, threshold: f64) -> f64 {
        self.eigen_samples
            .iter()
            .filter(|s| s.discriminant > threshold)
            .map(|s| s.max_imag)
            .fold(0.0, f64::max)
    }
}

fn grid_point(i: usize, n: usize) -> f64 {
    if i + 1 == n {
        1.0
    } else {
        i as f64 / (n - 1) as f64
    }
}

/// Number of eigenvalue samples along each axis.
const SAMPLES_PER_AXIS: usize = 11;

/// Scan `Δ` over the `(c, X)` grid on `[0,1]²` including both ends.
pub fn scan(kappa: f64, d2_hat: f64, mu_hat: f64, n_c: usize, n_x: usize) -> Result<HyperbolicityReport, HyperbolicityError> {
    let (n_c, n_x) = (n_c.max(2), n_x.max(2));
    let mut rows = Vec::with_capacity(n_c);
    let mut min = (f64::INFINITY, (0.0, 0.0));
    for i in 0..n_c {
        let c = grid_point(i, n_c);
        let mut row = ScanRow {
            c,
            min_discriminant: f64::INFINITY,
            argmin_x: 0.0,
            max_discriminant: f64::NEG_INFINITY,
        };
        for j in 0..n_x {
            let x = grid_point(j, n_x);
            let d = characteristic_discriminant(c, x, d2_hat, mu_hat);
            if d < row.min_discriminant {
                row.min_discriminant = d;
                row.argmin_x = x;
            }
            row.max_discriminant = row.max_discriminant.max(d);
        }
        if row.min_discriminant < min.0 {
            min = (row.min_discriminant, (c, row.argmin_x));
        }
        rows.push(row);
    }

    let mut eigen_samples = Vec::new();
    let mut points: Vec<(f64, f64)> = Vec::new();
    for i in 0..SAMPLES_PER_AXIS {
        for j in 0..SAMPLES_PER_AXIS {
            points.push((grid_point(i, SAMPLES_PER_AXIS), grid_point(j, SAMPLES_PER_AXIS)));
        }
    }
    points.push(min.1);
    for (c, x) in points {
        let p = MacroPoint::from_cx(c, x)?;
        let roots = eigenvalues(&flux_matrix_a(p, d2_hat, mu_hat))?;
        eigen_samples.push(EigenSample {
            c,
            x,
            discriminant: characteristic_discriminant(c, x, d2_hat, mu_hat),
            real_parts: roots.map(|r| r.re),
            max_imag: roots.iter().map(|r| r.im.abs()).fold(0.0, f64::max),
        });
    }

    Ok(HyperbolicityReport {
        kappa,
        d2_hat,
        mu_hat,
        n_c,
        n_x,
        min_discriminant: min.0,
        argmin: min.1,
        rows,
        eigen_samples,
    })
}

/// [`scan`] with the rescaled coefficients of `coeffs`.
pub fn hyperbolicity_scan(coeffs: &CoefficientSet, n_c: usize, n_x: usize) -> Result<HyperbolicityReport, HyperbolicityError> {
    scan(coeffs.kappa, coeffs.d2_hat(), coeffs.mu_hat(), n_c, n_x)
}
