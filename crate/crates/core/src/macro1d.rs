//! Finite-volume solver for the nematic system in one space dimension:
//!
//! ```text
//! ∂t ρ± ± d1 ∂x(ρ± cos θ̄) = ±S
//! ∂t θ̄ + (d2 δ/ρ) cos θ̄ ∂x θ̄ - (μ/ρ) sin θ̄ ∂x δ = (2k𝒟/ρ) ∂x(ρ ∂x θ̄)
//! ```
//!
//! with `ρ = ρ+ + ρ-`, `δ = ρ+ - ρ-`, `S = λ(ρ+) ρ- - λ(ρ-) ρ+` and
//! `λ(ρ) = λ1 ρ² + λ0`, on a periodic interval. Steps are split as
//! transport, then diffusion, then reaction.

use thiserror::Error;

use crate::angle::{line_diff, wrap_line};
use crate::coefficients::CoefficientSet;
use crate::hyperbolicity::{eigenvalues, flux_matrix_a, MacroPoint};

/// Cells with `ρ` below this keep their angle.
pub const VACUUM_FLOOR: f64 = 1e-12;
/// Maximum number of `dt` halvings after a positivity failure.
pub const MAX_RETRIES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MacroError {
    #[error("MacroState invariant violated: {0}")]
    InvalidState(String),
    #[error("SolverParams invariant violated: {0}")]
    InvalidParams(String),
    #[error("wave speed is not finite at t = {time} (cell {cell})")]
    CflViolation { time: f64, cell: usize },
    #[error("negative density after {retries} dt halvings at t = {time} (cell {cell})")]
    Positivity { time: f64, cell: usize, retries: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroState {
    pub dx: f64,
    pub rho_plus: Vec<f64>,
    pub rho_minus: Vec<f64>,
    pub theta_bar: Vec<f64>,
    pub time: f64,
}

impl MacroState {
    pub fn new(dx: f64, rho_plus: Vec<f64>, rho_minus: Vec<f64>, theta_bar: Vec<f64>) -> Result<Self, MacroError> {
        let bad = |m: String| Err(MacroError::InvalidState(m));
        if !(dx.is_finite() && dx > 0.0) {
            return bad(format!("dx must be > 0 (got {dx})"));
        }
        let n = rho_plus.len();
        if n < 3 || rho_minus.len() != n || theta_bar.len() != n {
            return bad(format!(
                "need >= 3 cells and equal field lengths (got {n}, {}, {})",
                rho_minus.len(),
                theta_bar.len()
            ));
        }
        if rho_plus.iter().chain(&rho_minus).any(|r| !(r.is_finite() && *r >= 0.0)) {
            return bad("densities must be finite and >= 0".into());
        }
        if theta_bar.iter().any(|t| !t.is_finite()) {
            return bad("angles must be finite".into());
        }
        Ok(Self {
            dx,
            rho_plus,
            rho_minus,
            theta_bar: theta_bar.into_iter().map(wrap_line).collect(),
            time: 0.0,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.rho_plus.len()
    }

    pub fn length(&self) -> f64 {
        self.dx * self.n_cells() as f64
    }

    pub fn x_centers(&self) -> Vec<f64> {
        (0..self.n_cells()).map(|i| (i as f64 + 0.5) * self.dx).collect()
    }

    pub fn rho(&self) -> Vec<f64> {
        self.rho_plus.iter().zip(&self.rho_minus).map(|(a, b)| a + b).collect()
    }

    pub fn delta(&self) -> Vec<f64> {
        self.rho_plus.iter().zip(&self.rho_minus).map(|(a, b)| a - b).collect()
    }

    /// `Σ (ρ+ + ρ-) dx`.
    pub fn mass(&self) -> f64 {
        self.dx * self.rho_plus.iter().chain(&self.rho_minus).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub coefficients: CoefficientSet,
    pub k_nonlocal: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub cfl: f64,
    pub boundary: Boundary,
    pub t_end: f64,
    /// Stop after this many steps even if `t_end` is not reached.
    pub max_steps: Option<usize>,
    /// Keep every `snapshot_stride`-th state (the first and last are always kept).
    pub snapshot_stride: usize,
}

impl SolverParams {
    pub fn new(coefficients: CoefficientSet, t_end: f64) -> Self {
        Self {
            coefficients,
            k_nonlocal: 0.0,
            lambda0: 0.0,
            lambda1: 0.0,
            cfl: 0.45,
            boundary: Boundary::Periodic,
            t_end,
            max_steps: None,
            snapshot_stride: usize::MAX,
        }
    }

    pub fn validate(&self) -> Result<(), MacroError> {
        let bad = |m: String| Err(MacroError::InvalidParams(m));
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return bad(format!("cfl must lie in (0, 1) (got {})", self.cfl));
        }
        for (name, v) in [
            ("k_nonlocal", self.k_nonlocal),
            ("lambda0", self.lambda0),
            ("lambda1", self.lambda1),
            ("t_end", self.t_end),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0 (got {v})"));
            }
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be >= 1".into());
        }
        Ok(())
    }

    /// Diffusion coefficient `2k𝒟`.
    pub fn diffusivity(&self) -> f64 {
        2.0 * self.k_nonlocal * self.coefficients.diffusion_d.max(0.0)
    }

    fn reversals(&self) -> bool {
        self.lambda0 > 0.0 || self.lambda1 > 0.0
    }
}

/// `(S+, S-)` with `S+ = λ(ρ+) ρ- - λ(ρ-) ρ+` and `S- = -S+`.
pub fn reversal_source(rho_plus: f64, rho_minus: f64, lambda0: f64, lambda1: f64) -> (f64, f64) {
    let lam = |r: f64| lambda1 * r * r + lambda0;
    let s = lam(rho_plus) * rho_minus - lam(rho_minus) * rho_plus;
    (s, -s)
}

/// Fixed points of `dδ/dt = 2 S+` at fixed total density `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReversalFixedPoints {
    /// Only `δ = 0`, which is stable.
    StableZero,
    /// `δ = 0` is unstable; `±delta_star` are stable.
    Bistable { delta_star: f64 },
}

impl ReversalFixedPoints {
    /// Threshold `2√(λ0/λ1)` on the total density.
    pub fn threshold(lambda0: f64, lambda1: f64) -> f64 {
        2.0 * (lambda0 / lambda1).sqrt()
    }
}

pub fn local_reversal_fixed_points(s: f64, lambda0: f64, lambda1: f64) -> ReversalFixedPoints {
    if lambda1 <= 0.0 {
        return ReversalFixedPoints::StableZero;
    }
    let d2 = s * s - 4.0 * lambda0 / lambda1;
    if d2 > 0.0 {
        ReversalFixedPoints::Bistable { delta_star: d2.sqrt() }
    } else {
        ReversalFixedPoints::StableZero
    }
}

/// `dδ/dt` at total density `s`.
pub fn reversal_rate_of_change(s: f64, delta: f64, lambda0: f64, lambda1: f64) -> f64 {
    2.0 * reversal_source(0.5 * (s + delta), 0.5 * (s - delta), lambda0, lambda1).0
}

/// Per-cell quantities used by the transport step.
struct CellSpeeds {
    /// Rusanov speed for the density fluxes.
    transport: Vec<f64>,
    /// Advection coefficient `d2 δ/ρ cos θ̄` of the angle equation.
    advect: Vec<f64>,
    /// Coupling speed `√(d1 μ) |sin θ̄|`.
    pressure: Vec<f64>,
}

fn cell_speeds(state: &MacroState, p: &SolverParams) -> Result<CellSpeeds, MacroError> {
    let c = &p.coefficients;
    let n = state.n_cells();
    let (d2_hat, mu_hat) = (c.d2_hat(), c.mu_hat());
    let mut out = CellSpeeds {
        transport: vec![0.0; n],
        advect: vec![0.0; n],
        pressure: vec![0.0; n],
    };
    for i in 0..n {
        let rho = state.rho_plus[i] + state.rho_minus[i];
        let th = state.theta_bar[i];
        out.pressure[i] = (c.d1 * c.mu).sqrt() * th.sin().abs();
        if rho < VACUUM_FLOOR {
            out.transport[i] = c.d1 * th.cos().abs();
            continue;
        }
        let delta = (state.rho_plus[i] - state.rho_minus[i]).clamp(-rho, rho);
        out.advect[i] = c.d2 * delta / rho * th.cos();
        let point = MacroPoint::new(rho, delta, th).map_err(|_| MacroError::CflViolation {
            time: state.time,
            cell: i,
        })?;
        let radius = eigenvalues(&flux_matrix_a(point, d2_hat, mu_hat))
            .map(|roots| roots.iter().map(|z| z.re.hypot(z.im)).fold(0.0, f64::max))
            .unwrap_or(f64::NAN);
        let speed = c.d1 * radius;
        if !speed.is_finite() {
            return Err(MacroError::CflViolation {
                time: state.time,
                cell: i,
            });
        }
        out.transport[i] = speed.max(out.pressure[i]);
    }
    Ok(out)
}

/// Largest stable `dt` for the transport step.
fn transport_dt(speeds: &CellSpeeds, dx: f64, cfl: f64) -> f64 {
    let max = speeds
        .transport
        .iter()
        .chain(&speeds.advect)
        .chain(&speeds.pressure)
        .fold(0.0f64, |m, s| m.max(s.abs()));
    if max > 0.0 {
        cfl * dx / max
    } else {
        f64::INFINITY
    }
}

fn hyperbolic_update(state: &MacroState, p: &SolverParams, speeds: &CellSpeeds, dt: f64) -> MacroState {
    let n = state.n_cells();
    let d1 = p.coefficients.d1;
    let mu = p.coefficients.mu;
    let r = dt / state.dx;
    let right = |i: usize| if i + 1 == n { 0 } else { i + 1 };
    let left = |i: usize| if i == 0 { n - 1 } else { i - 1 };
    let cos: Vec<f64> = state.theta_bar.iter().map(|t| t.cos()).collect();

    // Rusanov fluxes on face i+1/2
    let mut f_plus = vec![0.0; n];
    let mut f_minus = vec![0.0; n];
    let mut theta_visc = vec![0.0; n];
    for i in 0..n {
        let j = right(i);
        let a = speeds.transport[i].max(speeds.transport[j]);
        let (up_l, up_r) = (state.rho_plus[i], state.rho_plus[j]);
        let (um_l, um_r) = (state.rho_minus[i], state.rho_minus[j]);
        f_plus[i] = 0.5 * d1 * (up_l * cos[i] + up_r * cos[j]) - 0.5 * a * (up_r - up_l);
        f_minus[i] = -0.5 * d1 * (um_l * cos[i] + um_r * cos[j]) - 0.5 * a * (um_r - um_l);
        let visc = speeds.advect[i]
            .abs()
            .max(speeds.advect[j].abs())
            .max(speeds.pressure[i])
            .max(speeds.pressure[j]);
        theta_visc[i] = visc * line_diff(state.theta_bar[j], state.theta_bar[i]);
    }

    let mut next = state.clone();
    for i in 0..n {
        let (l, rgt) = (left(i), right(i));
        next.rho_plus[i] = state.rho_plus[i] - r * (f_plus[i] - f_plus[l]);
        next.rho_minus[i] = state.rho_minus[i] - r * (f_minus[i] - f_minus[l]);

        let rho = state.rho_plus[i] + state.rho_minus[i];
        if rho < VACUUM_FLOOR {
            continue;
        }
        let dtheta = line_diff(state.theta_bar[rgt], state.theta_bar[l]);
        let ddelta = (state.rho_plus[rgt] - state.rho_minus[rgt]) - (state.rho_plus[l] - state.rho_minus[l]);
        let rhs = -speeds.advect[i] * dtheta / (2.0 * state.dx)
            + mu / rho * state.theta_bar[i].sin() * ddelta / (2.0 * state.dx)
            + (theta_visc[i] - theta_visc[l]) / (2.0 * state.dx);
        next.theta_bar[i] = wrap_line(state.theta_bar[i] + dt * rhs);
    }
    next.time = state.time + dt;
    next
}

/// One transport step of size `dt` (no CFL check; see [`stable_dt`]).
pub fn hyperbolic_step(state: &MacroState, params: &SolverParams, dt: f64) -> Result<MacroState, MacroError> {
    let speeds = cell_speeds(state, params)?;
    Ok(hyperbolic_update(state, params, &speeds, dt))
}

/// Largest explicit diffusion step `dx²/(4 ν_max)`, `ν_max = 2k𝒟 max ρ / min ρ`.
fn diffusion_dt(state: &MacroState, p: &SolverParams) -> f64 {
    let nu = p.diffusivity();
    if nu == 0.0 {
        return f64::INFINITY;
    }
    let rho = state.rho();
    let max = rho.iter().cloned().fold(0.0, f64::max);
    let min = rho.iter().cloned().filter(|&r| r >= VACUUM_FLOOR).fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return f64::INFINITY;
    }
    state.dx * state.dx / (4.0 * nu * max / min)
}

/// `θ̄ ← θ̄ + dt (2k𝒟/ρ) ∂x(ρ ∂x θ̄)` in flux form.
pub fn diffusion_step(state: &MacroState, params: &SolverParams, dt: f64) -> MacroState {
    let nu = params.diffusivity();
    let mut next = state.clone();
    if nu == 0.0 {
        return next;
    }
    let n = state.n_cells();
    let rho = state.rho();
    let flux: Vec<f64> = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            0.5 * (rho[i] + rho[j]) * line_diff(state.theta_bar[j], state.theta_bar[i]) / state.dx
        })
        .collect();
    for i in 0..n {
        if rho[i] < VACUUM_FLOOR {
            continue;
        }
        let l = if i == 0 { n - 1 } else { i - 1 };
        let inc = dt * nu / rho[i] * (flux[i] - flux[l]) / state.dx;
        next.theta_bar[i] = wrap_line(state.theta_bar[i] + inc);
    }
    next
}

fn reaction_dt(state: &MacroState, p: &SolverParams) -> f64 {
    if !p.reversals() {
        return f64::INFINITY;
    }
    let max = state.rho().into_iter().fold(0.0, f64::max);
    0.5 / (2.0 * (p.lambda0 + p.lambda1 * max * max))
}

/// Per-cell Heun integration of `dδ/dt = 2S+` at fixed `ρ`.
pub fn reaction_step(state: &MacroState, params: &SolverParams, dt: f64) -> MacroState {
    let mut next = state.clone();
    if !params.reversals() {
        return next;
    }
    let (l0, l1) = (params.lambda0, params.lambda1);
    for i in 0..state.n_cells() {
        let s = state.rho_plus[i] + state.rho_minus[i];
        let d = state.rho_plus[i] - state.rho_minus[i];
        let k1 = reversal_rate_of_change(s, d, l0, l1);
        let mid = (d + dt * k1).clamp(-s, s);
        let k2 = reversal_rate_of_change(s, mid, l0, l1);
        let d_new = (d + 0.5 * dt * (k1 + k2)).clamp(-s, s);
        next.rho_plus[i] = 0.5 * (s + d_new);
        next.rho_minus[i] = s - next.rho_plus[i];
    }
    next
}

/// Step size allowed by transport, diffusion and reaction.
pub fn stable_dt(state: &MacroState, params: &SolverParams) -> Result<f64, MacroError> {
    let speeds = cell_speeds(state, params)?;
    Ok(transport_dt(&speeds, state.dx, params.cfl)
        .min(diffusion_dt(state, params))
        .min(reaction_dt(state, params)))
}

/// One split step of at most `dt_max`; returns the new state.
pub fn split_step(state: &MacroState, params: &SolverParams, dt_max: f64) -> Result<MacroState, MacroError> {
    let speeds = cell_speeds(state, params)?;
    let mut dt = transport_dt(&speeds, state.dx, params.cfl)
        .min(diffusion_dt(state, params))
        .min(reaction_dt(state, params))
        .min(dt_max);
    for retry in 0..=MAX_RETRIES {
        let a = hyperbolic_update(state, params, &speeds, dt);
        let b = diffusion_step(&a, params, dt);
        let c = reaction_step(&b, params, dt);
        match c.rho_plus.iter().chain(&c.rho_minus).position(|&r| r < 0.0) {
            None => return Ok(c),
            Some(cell) if retry == MAX_RETRIES => {
                return Err(MacroError::Positivity {
                    time: state.time,
                    cell: cell % state.n_cells(),
                    retries: retry,
                })
            }
            Some(_) => dt *= 0.5,
        }
    }
    unreachable!("retry loop returns on its last pass")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedRecord {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub mass_plus: f64,
    pub mass_minus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub snapshots: Vec<MacroState>,
    pub conserved: Vec<ConservedRecord>,
    pub steps: usize,
}

impl RunOutput {
    pub fn final_state(&self) -> &MacroState {
        self.snapshots.last().expect("run keeps the initial state")
    }
}

fn record(step: usize, s: &MacroState) -> ConservedRecord {
    ConservedRecord {
        step,
        time: s.time,
        mass: s.mass(),
        mass_plus: s.dx * s.rho_plus.iter().sum::<f64>(),
        mass_minus: s.dx * s.rho_minus.iter().sum::<f64>(),
    }
}

/// Integrate to `t_end` (or `max_steps`).
pub fn run(initial: &MacroState, params: &SolverParams) -> Result<RunOutput, MacroError> {
    params.validate()?;
    let mut state = initial.clone();
    let mut snapshots = vec![state.clone()];
    let mut conserved = vec![record(0, &state)];
    let mut steps = 0;
    let max_steps = params.max_steps.unwrap_or(usize::MAX);
    let t_end = initial.time + params.t_end;
    while state.time < t_end && steps < max_steps {
        let remaining = t_end - state.time;
        state = split_step(&state, params, remaining)?;
        if t_end - state.time < 1e-12 * t_end.max(1.0) {
            state.time = t_end;
        }
        steps += 1;
        conserved.push(record(steps, &state));
        if steps % params.snapshot_stride == 0 {
            snapshots.push(state.clone());
        }
    }
    if snapshots.last() != Some(&state) {
        snapshots.push(state);
    }
    Ok(RunOutput {
        snapshots,
        conserved,
        steps,
    })
}

/// Initial-condition presets on a periodic interval `[0, length)`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Uniform {
        rho_plus: f64,
        rho_minus: f64,
        theta: f64,
    },
    /// `ρ+` jumps from `left` to `right` on `[x0, x1)`; uniform `ρ-`.
    Riemann {
        left: f64,
        right: f64,
        x0: f64,
        x1: f64,
        rho_minus: f64,
        theta: f64,
    },
    /// Uniform densities with `θ̄ = theta + amplitude sin(2π mode x / L)`.
    SinePerturbation {
        rho: f64,
        amplitude: f64,
        mode: usize,
        theta: f64,
    },
    /// Counter-propagating bands: `ρ±` raised by `amplitude` on two
    /// disjoint intervals of width `width` centered at `L/4` and `3L/4`.
    Bands {
        background: f64,
        amplitude: f64,
        width: f64,
        theta: f64,
    },
}

impl InitialCondition {
    pub fn build(&self, n_cells: usize, length: f64) -> Result<MacroState, MacroError> {
        let dx = length / n_cells as f64;
        let xs: Vec<f64> = (0..n_cells).map(|i| (i as f64 + 0.5) * dx).collect();
        let (rp, rm, th): (Vec<f64>, Vec<f64>, Vec<f64>) = match *self {
            Self::Uniform {
                rho_plus,
                rho_minus,
                theta,
            } => (vec![rho_plus; n_cells], vec![rho_minus; n_cells], vec![theta; n_cells]),
            Self::Riemann {
                left,
                right,
                x0,
                x1,
                rho_minus,
                theta,
            } => (
                xs.iter().map(|&x| if x >= x0 && x < x1 { right } else { left }).collect(),
                vec![rho_minus; n_cells],
                vec![theta; n_cells],
            ),
            Self::SinePerturbation {
                rho,
                amplitude,
                mode,
                theta,
            } => {
                let k = 2.0 * std::f64::consts::PI * mode as f64 / length;
                (
                    vec![0.5 * rho; n_cells],
                    vec![0.5 * rho; n_cells],
                    xs.iter().map(|&x| theta + amplitude * (k * x).sin()).collect(),
                )
            }
            Self::Bands {
                background,
                amplitude,
                width,
                theta,
            } => {
                let bump = |x: f64, c: f64| if (x - c).abs() < 0.5 * width { amplitude } else { 0.0 };
                (
                    xs.iter().map(|&x| background + bump(x, 0.25 * length)).collect(),
                    xs.iter().map(|&x| background + bump(x, 0.75 * length)).collect(),
                    vec![theta; n_cells],
                )
            }
        };
        MacroState::new(dx, rp, rm, th)
    }
}
