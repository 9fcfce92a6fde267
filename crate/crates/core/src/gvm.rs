//! Generalized von Mises distribution `M_θ0(θ) ∝ exp(-κ / |cos(θ - θ0)|)`,
//! its moments and the two-group equilibria built from it.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::angle::{wrap_angle, wrap_line};
use crate::numerics::{integrate_adaptive, Interval, NumericsError, RngStream, DEFAULT_ABS_TOL, DEFAULT_REL_TOL};

/// Exponents `κ/|cos|` beyond this value are treated as `exp(-∞) = 0`.
pub const EXP_GUARD: f64 = 700.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GvmError {
    #[error("GvmParams invariant violated: kappa must be a finite number > 0 (got {0})")]
    InvalidKappa(f64),
    #[error("GvmParams invariant violated: theta0 must be finite (got {0})")]
    InvalidAngle(f64),
    #[error("EquilibriumParams invariant violated: densities must be finite and >= 0 (got rho_plus={0}, rho_minus={1})")]
    InvalidDensity(f64, f64),
    #[error(transparent)]
    Quadrature(#[from] NumericsError),
}

pub(crate) fn check_kappa(kappa: f64) -> Result<(), GvmError> {
    if kappa.is_finite() && kappa > 0.0 {
        Ok(())
    } else {
        Err(GvmError::InvalidKappa(kappa))
    }
}

/// Unnormalized weight `exp(-κ/|c|)`, exactly zero once the exponent passes
/// [`EXP_GUARD`] (including `c = 0`).
#[inline]
pub fn boltzmann_weight(kappa: f64, cos: f64) -> f64 {
    let c = cos.abs();
    if c == 0.0 || kappa > EXP_GUARD * c {
        0.0
    } else {
        (-kappa / c).exp()
    }
}

/// Concentration and mean line angle of a GVM distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GvmParams {
    kappa: f64,
    theta0: f64,
}

impl GvmParams {
    /// `theta0` is folded into `[-π/2, π/2)`.
    pub fn new(kappa: f64, theta0: f64) -> Result<Self, GvmError> {
        check_kappa(kappa)?;
        if !theta0.is_finite() {
            return Err(GvmError::InvalidAngle(theta0));
        }
        Ok(Self {
            kappa,
            theta0: wrap_line(theta0),
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    /// Scaled angular diffusion `D = 1/κ`.
    pub fn diffusion(&self) -> f64 {
        1.0 / self.kappa
    }
}

/// `∫_0^{π/2} φ(θ) exp(-κ/cos θ) dθ`, without normalization.
pub fn weighted_half_integral<F: Fn(f64) -> f64>(kappa: f64, phi: F) -> Result<f64, GvmError> {
    check_kappa(kappa)?;
    let iv = Interval::new(0.0, FRAC_PI_2)?;
    let r = integrate_adaptive(
        |t| {
            let w = boltzmann_weight(kappa, t.cos());
            if w == 0.0 {
                0.0
            } else {
                phi(t) * w
            }
        },
        iv,
        DEFAULT_REL_TOL,
        DEFAULT_ABS_TOL,
    )?;
    Ok(r.value)
}

/// Normalization `Z_κ = ∫_{cos θ > 0} exp(-κ/cos θ) dθ`.
pub fn partition_function(kappa: f64) -> Result<f64, GvmError> {
    Ok(2.0 * weighted_half_integral(kappa, |_| 1.0)?)
}

/// Average `⟨φ⟩_M = (2/Z_κ) ∫_0^{π/2} φ(θ) exp(-κ/cos θ) dθ`.
pub fn moment<F: Fn(f64) -> f64>(kappa: f64, phi: F) -> Result<f64, GvmError> {
    let z = partition_function(kappa)?;
    Ok(2.0 * weighted_half_integral(kappa, phi)? / z)
}

/// A GVM distribution with its normalization precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gvm {
    params: GvmParams,
    z: f64,
}

impl Gvm {
    pub fn new(params: GvmParams) -> Result<Self, GvmError> {
        Ok(Self {
            params,
            z: partition_function(params.kappa)?,
        })
    }

    pub fn params(&self) -> GvmParams {
        self.params
    }

    pub fn partition(&self) -> f64 {
        self.z
    }

    /// `M_θ0(θ)`; zero on the lines `cos(θ - θ0) = 0`.
    pub fn density(&self, theta: f64) -> f64 {
        boltzmann_weight(self.params.kappa, (theta - self.params.theta0).cos()) / self.z
    }
}

/// Densities of the two counter-moving groups around the line `theta_bar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumParams {
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub theta_bar: f64,
}

impl EquilibriumParams {
    pub fn new(rho_plus: f64, rho_minus: f64, theta_bar: f64) -> Result<Self, GvmError> {
        if !(rho_plus.is_finite() && rho_minus.is_finite() && rho_plus >= 0.0 && rho_minus >= 0.0) {
            return Err(GvmError::InvalidDensity(rho_plus, rho_minus));
        }
        if !theta_bar.is_finite() {
            return Err(GvmError::InvalidAngle(theta_bar));
        }
        Ok(Self {
            rho_plus,
            rho_minus,
            theta_bar: wrap_line(theta_bar),
        })
    }
}

/// Equilibrium `ρ+ χ⁺ M + ρ- χ⁻ M` for a given concentration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub params: EquilibriumParams,
    gvm: Gvm,
}

impl Equilibrium {
    pub fn new(params: EquilibriumParams, kappa: f64) -> Result<Self, GvmError> {
        let gvm = Gvm::new(GvmParams::new(kappa, params.theta_bar)?)?;
        Ok(Self { params, gvm })
    }

    pub fn gvm(&self) -> &Gvm {
        &self.gvm
    }

    pub fn density(&self, theta: f64) -> f64 {
        let c = (theta - self.params.theta_bar).cos();
        let rho = if c > 0.0 {
            self.params.rho_plus
        } else if c < 0.0 {
            self.params.rho_minus
        } else {
            return 0.0;
        };
        rho * self.gvm.density(theta)
    }
}

/// Free-function form of [`Equilibrium::density`].
pub fn equilibrium_density(eq: EquilibriumParams, kappa: f64, theta: f64) -> Result<f64, GvmError> {
    Ok(Equilibrium::new(eq, kappa)?.density(theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// `n` i.i.d. angles from `M_θ0` restricted to `±cos(θ - θ0) > 0`, by
/// rejection against the uniform envelope on that half circle. Angles are
/// returned in `[-π, π)`.
pub fn sample(params: GvmParams, side: Side, n: usize, rng: &mut RngStream) -> Vec<f64> {
    let center = match side {
        Side::Plus => params.theta0,
        Side::Minus => params.theta0 + PI,
    };
    let kappa = params.kappa;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let offset = (rng.uniform() - 0.5) * PI;
        let accept = rng.uniform();
        let c = offset.cos();
        if c <= 0.0 || kappa > EXP_GUARD * c {
            continue;
        }
        // envelope maximum exp(-κ) sits at offset 0
        if accept < (kappa * (1.0 - 1.0 / c)).exp() {
            out.push(wrap_angle(center + offset));
        }
    }
    out
}
