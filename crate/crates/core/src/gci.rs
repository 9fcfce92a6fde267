//! The non-trivial generalized collision invariant `g`.
//!
//! On `[0, π/2]` it is
//! `g(θ) = -∫_0^θ I(β) / (cos²β e^{-κ/cos β}) dβ` with
//! `I(β) = ∫_β^{π/2} sin 2α e^{-κ/cos α} dα`, and it is extended to the
//! circle through `g(-θ) = -g(θ)` and `g(π - θ) = -g(θ)`.
//!
//! The ratio `I(β) e^{κ/cos β}` is never formed from two separately
//! underflowing factors: it is carried as the scaled tail
//! `S(β) = ∫_β^{π/2} sin 2α e^{κ(1/cos β - 1/cos α)} dα`, which obeys the
//! backward recurrence
//! `S(β_j) = S(β_{j+1}) e^{κ(1/cos β_j - 1/cos β_{j+1})} + ∫_{β_j}^{β_{j+1}} …`
//! with all exponents non-positive.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::gvm::{boltzmann_weight, check_kappa, GvmError};
use crate::numerics::{integrate_adaptive, Interval, NumericsError};

/// Default number of table nodes on `[0, π/2]`.
pub const DEFAULT_GCI_GRID: usize = 4001;
/// Inside `π/2 - β < GUARD_BAND` the outer integrand takes its limit value 0.
pub const GUARD_BAND: f64 = 1e-6;
/// Fraction of the grid next to `π/2` left out of [`ode_residual`].
pub const RESIDUAL_EXCLUDED_FRACTION: f64 = 0.02;

const SEGMENT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GciError {
    #[error(transparent)]
    Gvm(#[from] GvmError),
    #[error("GCI table needs at least 3 grid points (got {0})")]
    GridTooSmall(usize),
    #[error("quadrature failed while tabulating g: {0}")]
    Quadrature(#[from] NumericsError),
    #[error("non-finite value in GCI table at theta = {0}")]
    Overflow(f64),
}

/// Tabulated `g` on a uniform grid of `[0, π/2]`, with its exact slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct GciTable {
    kappa: f64,
    grid: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    step: f64,
}

/// `1/sin x - 1/sin y`, accurate for small `x` and `y`.
fn csc_diff(x: f64, y: f64) -> f64 {
    2.0 * (0.5 * (x + y)).cos() * (0.5 * (y - x)).sin() / (x.sin() * y.sin())
}

/// `sec a - sec b`, via the distances of `a` and `b` to `π/2`.
fn sec_diff(a: f64, b: f64) -> f64 {
    csc_diff(FRAC_PI_2 - a, FRAC_PI_2 - b)
}

/// `∫_lo^hi sin 2α e^{κ(1/cos lo - 1/cos α)} dα`, integrated in
/// `x = π/2 - α` so that nodes near `π/2` are resolved finely.
fn scaled_segment(kappa: f64, lo: f64, hi: f64) -> Result<f64, NumericsError> {
    if hi <= lo {
        return Ok(0.0);
    }
    let (x_lo, x_hi) = (FRAC_PI_2 - hi, FRAC_PI_2 - lo);
    let r = integrate_adaptive(
        |x| (2.0 * x).sin() * (kappa * csc_diff(x_hi, x)).exp(),
        Interval::new(x_lo.max(0.0), x_hi)?,
        SEGMENT_REL_TOL,
        1e-300,
    )?;
    Ok(r.value)
}

/// Outer integrand `h = S/cos²β` and its derivative, using
/// `S' = -sin 2β + κ sec β tan β · S`. Inside the guard band `h` takes its
/// limit 0 and `h'` the limit `-2/κ` of `h ≈ 2 cos β / κ`.
fn outer_integrand(kappa: f64, beta: f64, s: f64) -> (f64, f64) {
    if FRAC_PI_2 - beta < GUARD_BAND {
        return (0.0, -2.0 / kappa);
    }
    let (sn, c) = beta.sin_cos();
    let ds = -(2.0 * beta).sin() + kappa * sn / (c * c) * s;
    let h = s / (c * c);
    let dh = ds / (c * c) + 2.0 * s * sn / (c * c * c);
    (h, dh)
}

impl GciTable {
    /// Tabulate `g` for concentration `kappa` on `n_grid` uniform nodes.
    pub fn build(kappa: f64, n_grid: usize) -> Result<Self, GciError> {
        check_kappa(kappa)?;
        if n_grid < 3 {
            return Err(GciError::GridTooSmall(n_grid));
        }
        let step = FRAC_PI_2 / (n_grid - 1) as f64;
        let grid: Vec<f64> = (0..n_grid)
            .map(|i| if i == n_grid - 1 { FRAC_PI_2 } else { i as f64 * step })
            .collect();

        // scaled inner tails at the nodes, from π/2 downwards
        let mut tails = vec![0.0; n_grid];
        for i in (0..n_grid - 1).rev() {
            let beta = grid[i];
            tails[i] = if FRAC_PI_2 - beta < GUARD_BAND {
                0.0
            } else {
                let carried = tails[i + 1] * (kappa * sec_diff(beta, grid[i + 1])).exp();
                carried + scaled_segment(kappa, beta, grid[i + 1])?
            };
        }

        let outer: Vec<(f64, f64)> = grid
            .iter()
            .zip(&tails)
            .map(|(&b, &s)| outer_integrand(kappa, b, s))
            .collect();
        // Hermite-corrected trapezoid on each panel (exact for cubics).
        let mut values = vec![0.0; n_grid];
        for i in 0..n_grid - 1 {
            let dx = grid[i + 1] - grid[i];
            let (h0, dh0) = outer[i];
            let (h1, dh1) = outer[i + 1];
            let seg = 0.5 * dx * (h0 + h1) + dx * dx / 12.0 * (dh0 - dh1);
            values[i + 1] = values[i] - seg;
            if !values[i + 1].is_finite() {
                return Err(GciError::Overflow(grid[i + 1]));
            }
        }
        let slopes = outer.iter().map(|&(h, _)| -h).collect();
        Ok(Self {
            kappa,
            grid,
            values,
            slopes,
            step,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Cubic Hermite interpolation on `[0, π/2]`.
    fn interpolate(&self, theta: f64) -> (f64, f64) {
        let n = self.grid.len();
        let pos = (theta / self.step).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let h = self.grid[i + 1] - self.grid[i];
        let t = ((theta - self.grid[i]) / h).clamp(0.0, 1.0);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let deriv = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (value, deriv)
    }

    /// Fold `theta` into `[0, π/2]`; returns the folded angle and the sign
    /// picked up from the odd symmetries.
    fn fold(theta: f64) -> (f64, f64) {
        let t = crate::angle::wrap_angle(theta);
        let (t, sign) = if t < 0.0 { (-t, -1.0) } else { (t, 1.0) };
        if t > FRAC_PI_2 {
            ((PI - t).max(0.0), -sign)
        } else {
            (t, sign)
        }
    }

    /// `g(θ)` for any angle.
    pub fn eval(&self, theta: f64) -> f64 {
        let (t, sign) = Self::fold(theta);
        sign * self.interpolate(t).0
    }

    /// `g'(θ)` on `[0, π/2]`.
    pub fn derivative(&self, theta: f64) -> f64 {
        self.interpolate(theta.clamp(0.0, FRAC_PI_2)).1
    }

    /// Values are `≤ 0`, start at 0 and never increase along the grid.
    pub fn is_monotone_nonpositive(&self) -> bool {
        self.values[0] == 0.0
            && self.values.iter().all(|&v| v <= 0.0)
            && self.values.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Free-function form of [`GciTable::build`].
pub fn build_gci_table(kappa: f64, n_grid: usize) -> Result<GciTable, GciError> {
    GciTable::build(kappa, n_grid)
}

/// Free-function form of [`GciTable::eval`].
pub fn gci_eval(table: &GciTable, theta: f64) -> f64 {
    table.eval(theta)
}

/// Max relative residual of
/// `d/dθ(cos²θ e^{-κ/cos θ} g') = sin 2θ e^{-κ/cos θ}` using centered
/// differences of the tabulated values, normalized by the max of the
/// right-hand side. The last [`RESIDUAL_EXCLUDED_FRACTION`] of the grid is
/// skipped.
pub fn ode_residual(table: &GciTable) -> f64 {
    let kappa = table.kappa;
    let n = table.grid.len();
    let rhs = |t: f64| (2.0 * t).sin() * boltzmann_weight(kappa, t.cos());
    let coef = |t: f64| {
        let c = t.cos();
        c * c * boltzmann_weight(kappa, c)
    };
    let norm = table.grid.iter().map(|&t| rhs(t).abs()).fold(0.0, f64::max);
    let last = ((n - 1) as f64 * (1.0 - RESIDUAL_EXCLUDED_FRACTION)).floor() as usize;
    let mut worst: f64 = 0.0;
    for i in 1..last.min(n - 1) {
        let (tm, t0, tp) = (table.grid[i - 1], table.grid[i], table.grid[i + 1]);
        let (gm, g0, gp) = (table.values[i - 1], table.values[i], table.values[i + 1]);
        let f_right = coef(0.5 * (t0 + tp)) * (gp - g0) / (tp - t0);
        let f_left = coef(0.5 * (tm + t0)) * (g0 - gm) / (t0 - tm);
        let lhs = (f_right - f_left) / (0.5 * (tp - tm));
        worst = worst.max((lhs - rhs(t0)).abs());
    }
    worst / norm
}
