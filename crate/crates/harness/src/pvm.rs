//! Particle model against the 1D macroscopic solver on slab-uniform data.
//!
//! The particle system runs in its own units. The macroscopic system is
//! written for unit speed and unit alignment rate, so lengths are scaled by
//! `ν/v0` and times by `ν` before it is set up, and its answers are mapped
//! back.

use std::f64::consts::PI;

use nematic_core::coefficients::{coefficients_for, CoefficientSet};
use nematic_core::gvm::{sample, GvmParams, Side};
use nematic_core::macro1d::{run, InitialCondition, MacroState, SolverParams};
use nematic_core::numerics::RngStream;
use nematic_core::particles::{measure_fields_against, nematic_mean_angle, step, ParticleState, SimParams};

use crate::report::{ComparisonReport, Tolerance};
use crate::HarnessError;

/// Relative tolerance on the front displacement.
pub const FRONT_TOLERANCE: f64 = 0.10;
/// Sampling-noise multiple for the drift displacement.
pub const DRIFT_SIGMAS: f64 = 3.0;
/// Relative `L¹` distance allowed between slab-averaged and macroscopic `δ`.
pub const L1_TOLERANCE: f64 = 0.15;

/// Conversion between particle units and the unit-speed macroscopic frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub nu: f64,
    pub v0: f64,
}

impl Scaling {
    pub fn new(sim: &SimParams) -> Self {
        Self { nu: sim.nu, v0: sim.v0 }
    }

    pub fn to_macro_time(&self, t: f64) -> f64 {
        self.nu * t
    }

    pub fn to_macro_length(&self, x: f64) -> f64 {
        x * self.nu / self.v0
    }

    pub fn to_particle_length(&self, x: f64) -> f64 {
        x * self.v0 / self.nu
    }

    /// Rates per particle time become rates per macroscopic time.
    pub fn to_macro_rate(&self, lambda: f64) -> f64 {
        lambda / self.nu
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Uniform `ρ-`, sine-modulated `ρ+`: the `δ` profile drifts rigidly.
    Drift,
    /// `ρ+` confined to a band, uniform `ρ-`: the band front moves.
    Front,
    /// `ρ+ = ρ-` uniform: nothing moves in the mean.
    Balanced,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Drift => "drift",
            Self::Front => "front",
            Self::Balanced => "balanced",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "drift" => Some(Self::Drift),
            "front" => Some(Self::Front),
            "balanced" => Some(Self::Balanced),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvmSetup {
    pub sim: SimParams,
    pub scenario: Scenario,
    /// Fraction of particles in the `+` group.
    pub plus_fraction: f64,
    /// Relative sine amplitude of `ρ+` (drift scenario).
    pub amplitude: f64,
    /// Band `[x0, x1)` holding the `+` group, as fractions of the box (front scenario).
    pub band: (f64, f64),
    /// Particle time horizon; `None` means one crossing time `(L/4)/(v0 d1)`.
    pub t_end: Option<f64>,
    pub slabs: usize,
    pub cells: usize,
    /// Index batches for the sampling-noise estimate.
    pub batches: usize,
}

impl PvmSetup {
    pub fn new(scenario: Scenario) -> Self {
        let (n, radius) = match scenario {
            Scenario::Front => (50_000, 0.03),
            _ => (20_000, 0.05),
        };
        Self {
            sim: SimParams {
                n,
                box_length: 1.0,
                radius,
                v0: 0.02,
                nu: 1.0,
                d_noise: 0.5,
                dt: 0.02,
                ..SimParams::default()
            },
            scenario,
            plus_fraction: 0.5,
            amplitude: 0.5,
            band: (0.25, 0.75),
            t_end: None,
            slabs: 20,
            cells: 400,
            batches: 20,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.sim.validate()?;
        GvmParams::new(self.sim.kappa_eff(), 0.0)?;
        let bad = |m: String| Err(HarnessError::Setup(m));
        if !(0.0..=1.0).contains(&self.plus_fraction) {
            return bad(format!("plus_fraction must lie in [0, 1] (got {})", self.plus_fraction));
        }
        if !(0.0..=1.0).contains(&self.amplitude) {
            return bad(format!("amplitude must lie in [0, 1] (got {})", self.amplitude));
        }
        let (x0, x1) = self.band;
        if !(0.0 <= x0 && x0 < x1 && x1 <= 1.0) {
            return bad(format!("band must satisfy 0 <= x0 < x1 <= 1 (got {x0}, {x1})"));
        }
        if self.slabs == 0 || self.cells == 0 || self.batches < 2 {
            return bad("slabs and cells must be >= 1 and batches >= 2".into());
        }
        if let Some(t) = self.t_end {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("t_end must be > 0 (got {t})"));
            }
        }
        if self.sim.reversals {
            return bad("particle-vs-macro scenarios run without reversals".into());
        }
        Ok(())
    }

    /// Number densities `(ρ+(x), ρ-)` of the initial data.
    fn profile(&self) -> impl Fn(f64) -> f64 + '_ {
        let l = self.sim.box_length;
        let area = l * l;
        let n_plus = self.n_plus() as f64;
        move |x: f64| match self.scenario {
            Scenario::Drift => n_plus / area * (1.0 + self.amplitude * (2.0 * PI * x / l).sin()),
            Scenario::Front => {
                let (x0, x1) = (self.band.0 * l, self.band.1 * l);
                if x >= x0 && x < x1 {
                    n_plus / ((x1 - x0) * l)
                } else {
                    0.0
                }
            }
            Scenario::Balanced => n_plus / area,
        }
    }

    fn n_plus(&self) -> usize {
        match self.scenario {
            Scenario::Balanced => self.sim.n / 2,
            _ => ((self.plus_fraction * self.sim.n as f64).round() as usize).min(self.sim.n),
        }
    }

    fn rho_minus(&self) -> f64 {
        let l = self.sim.box_length;
        (self.sim.n - self.n_plus()) as f64 / (l * l)
    }
}

/// Particles sampled from the macroscopic initial data with local GVM
/// equilibria around `θ̄ = 0`. Plus-group particles come first.
pub fn sample_particles(setup: &PvmSetup, seed: u64) -> Result<ParticleState, HarnessError> {
    let sim = &setup.sim;
    let l = sim.box_length;
    let mut rng = RngStream::new(seed ^ 0x5851_f42d_4c95_7f2d);
    let gvm = GvmParams::new(sim.kappa_eff(), 0.0)?;
    let n_plus = setup.n_plus();
    let profile = setup.profile();
    let peak = (0..4096).map(|i| profile((i as f64 + 0.5) / 4096.0 * l)).fold(0.0, f64::max);
    let mut positions = Vec::with_capacity(sim.n);
    while positions.len() < n_plus {
        let x = rng.uniform() * l;
        let accept = rng.uniform() * peak;
        let y = rng.uniform() * l;
        if accept < profile(x) {
            positions.push([x, y]);
        }
    }
    while positions.len() < sim.n {
        positions.push([rng.uniform() * l, rng.uniform() * l]);
    }
    let mut angles = sample(gvm, Side::Plus, n_plus, &mut rng);
    angles.extend(sample(gvm, Side::Minus, sim.n - n_plus, &mut rng));
    Ok(ParticleState::new(positions, angles, l)?)
}

/// Macroscopic initial state matching [`sample_particles`], in macroscopic units.
pub fn macro_initial(setup: &PvmSetup, scaling: Scaling) -> Result<MacroState, HarnessError> {
    let l = scaling.to_macro_length(setup.sim.box_length);
    let rho_minus = setup.rho_minus();
    let state = match setup.scenario {
        Scenario::Front => {
            let hi = setup.profile()(0.5 * (setup.band.0 + setup.band.1) * setup.sim.box_length);
            InitialCondition::Riemann {
                left: 0.0,
                right: hi,
                x0: setup.band.0 * l,
                x1: setup.band.1 * l,
                rho_minus,
                theta: 0.0,
            }
            .build(setup.cells, l)?
        }
        _ => {
            let profile = setup.profile();
            let dx = l / setup.cells as f64;
            // cell averages of the sine profile
            let rho_plus = (0..setup.cells)
                .map(|i| {
                    let (a, b) = (i as f64 * dx, (i + 1) as f64 * dx);
                    let k = 16;
                    (0..k)
                        .map(|j| profile(scaling.to_particle_length(a + (j as f64 + 0.5) * (b - a) / k as f64)))
                        .sum::<f64>()
                        / k as f64
                })
                .collect();
            MacroState::new(dx, rho_plus, vec![rho_minus; setup.cells], vec![0.0; setup.cells])?
        }
    };
    Ok(state)
}

/// First Fourier coefficient `Σ w_k e^{-i q x_k}` of weighted points.
fn fourier(points: impl Iterator<Item = (f64, f64)>, q: f64) -> (f64, f64) {
    points.fold((0.0, 0.0), |(re, im), (x, w)| (re + w * (q * x).cos(), im - w * (q * x).sin()))
}

/// Displacement `s` with `F_after = F_before e^{-i q s}`, in `(-L/2, L/2]`.
fn displacement(before: (f64, f64), after: (f64, f64), q: f64) -> f64 {
    let d = after.1.atan2(after.0) - before.1.atan2(before.0);
    let d = (d + PI).rem_euclid(2.0 * PI) - PI;
    -d / q
}

/// Summary of one particle-vs-macro comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PvmOutcome {
    pub report: ComparisonReport,
    pub t_end: f64,
    pub particle_shift: f64,
    pub macro_shift: f64,
    pub shift_sigma: f64,
    pub l1_relative: f64,
}

pub fn run_particle_vs_macro(setup: &PvmSetup, seed: u64) -> Result<PvmOutcome, HarnessError> {
    setup.validate()?;
    let sim = SimParams {
        seed,
        ..setup.sim.clone()
    };
    let kappa = sim.kappa_eff();
    let coeffs: CoefficientSet = coefficients_for(kappa)?;
    let scaling = Scaling::new(&sim);
    let l = sim.box_length;
    let t_end = setup.t_end.unwrap_or(0.25 * l / (sim.v0 * coeffs.d1));
    let steps = (t_end / sim.dt).round().max(1.0) as usize;
    let t_end = steps as f64 * sim.dt;
    let q = 2.0 * PI / l;

    // particle level
    let initial = sample_particles(setup, seed)?;
    let sides = |s: &ParticleState| -> Vec<f64> {
        let line = nematic_mean_angle(&s.angles).unwrap_or(0.0);
        s.angles.iter().map(|&t| if (t - line).cos() >= 0.0 { 1.0 } else { -1.0 }).collect()
    };
    let w0 = sides(&initial);
    let mut state = initial.clone();
    for _ in 0..steps {
        state = step(&state, &sim);
    }
    let w1 = sides(&state);
    let batch_shift = |filter: &dyn Fn(usize) -> bool| {
        let f0 = fourier((0..sim.n).filter(|&k| filter(k)).map(|k| (initial.positions[k][0], w0[k])), q);
        let f1 = fourier((0..sim.n).filter(|&k| filter(k)).map(|k| (state.positions[k][0], w1[k])), q);
        displacement(f0, f1, q)
    };
    let particle_shift = batch_shift(&|_| true);
    let b = setup.batches;
    let per_batch: Vec<f64> = (0..b).map(|j| batch_shift(&|k| k % b == j)).collect();
    let mean = per_batch.iter().sum::<f64>() / b as f64;
    let var = per_batch.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (b - 1) as f64;
    let shift_sigma = (var / b as f64).sqrt();

    // macroscopic level
    let m0 = macro_initial(setup, scaling)?;
    let mut params = SolverParams::new(coeffs, scaling.to_macro_time(t_end));
    params.k_nonlocal = scaling.to_macro_length(sim.radius).powi(2) / 8.0;
    let out = run(&m0, &params)?;
    let m1 = out.final_state();
    let xs = m0.x_centers();
    let mode = |m: &MacroState| fourier(xs.iter().zip(m.delta()).map(|(&x, d)| (scaling.to_particle_length(x), d)), q);
    let macro_shift = match setup.scenario {
        Scenario::Balanced => 0.0,
        _ => displacement(mode(&m0), mode(m1), q),
    };

    // slab fields at the end
    let line = nematic_mean_angle(&state.angles).unwrap_or(0.0);
    let slabs = measure_fields_against(&state, &sim, setup.slabs, line);
    let width = l / setup.slabs as f64;
    let per_slab = setup.cells / setup.slabs.min(setup.cells);
    let macro_delta = m1.delta();
    let macro_rho = m1.rho();
    let (mut diff, mut total) = (0.0, 0.0);
    for slab in &slabs {
        let lo = ((slab.x - 0.5 * width) / l * setup.cells as f64).round() as usize;
        let hi = (lo + per_slab).min(setup.cells);
        let n = (hi - lo).max(1) as f64;
        let md = macro_delta[lo..hi].iter().sum::<f64>() / n;
        let mr = macro_rho[lo..hi].iter().sum::<f64>() / n;
        diff += ((slab.rho_plus - slab.rho_minus) - md).abs();
        total += mr;
    }
    let l1_relative = diff / total;

    let mut report = ComparisonReport::new(&format!("particle-vs-macro/{}", setup.scenario.name()));
    match setup.scenario {
        Scenario::Drift => {
            report.check(
                "delta_profile_shift",
                macro_shift,
                particle_shift,
                Tolerance::Sigma {
                    k: DRIFT_SIGMAS,
                    sigma: shift_sigma,
                },
                "macro1d: rho+ transported at speed d1 (hydrodynamic limit)",
            );
        }
        Scenario::Front => {
            report.check(
                "front_shift",
                macro_shift,
                particle_shift,
                Tolerance::Relative(FRONT_TOLERANCE),
                "macro1d: front of rho+ moves at speed d1 (hydrodynamic limit)",
            );
        }
        Scenario::Balanced => {
            let max_change = m1
                .rho_plus
                .iter()
                .zip(&m0.rho_plus)
                .chain(m1.rho_minus.iter().zip(&m0.rho_minus))
                .map(|(a, b)| (a - b).abs())
                .chain(m1.theta_bar.iter().zip(&m0.theta_bar).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            report.check(
                "macro_max_change",
                0.0,
                max_change,
                Tolerance::AtMost(1e-12),
                "macro1d: rho+ = rho- uniform state is stationary",
            );
            let f1 = fourier((0..sim.n).map(|k| (state.positions[k][0], w1[k])), q);
            let amplitude = (f1.0 * f1.0 + f1.1 * f1.1).sqrt() / (sim.n as f64).sqrt();
            report.check(
                "particle_delta_mode_amplitude",
                0.0,
                amplitude,
                Tolerance::AtMost(DRIFT_SIGMAS),
                "particles: rho+ = rho- uniform state is stationary in the mean",
            );
        }
    }
    report.check(
        "delta_l1_relative",
        0.0,
        l1_relative,
        Tolerance::AtMost(L1_TOLERANCE),
        "macro1d: slab-averaged particle delta follows the macroscopic delta",
    );
    Ok(PvmOutcome {
        report,
        t_end,
        particle_shift,
        macro_shift,
        shift_sigma,
        l1_relative,
    })
}
