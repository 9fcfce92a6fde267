//! Deterministic sweeps: hyperbolicity certificates, coefficient positivity
//! and the local reversal dynamics.

use nematic_core::coefficients::{
    coefficients_for, compute_coefficients, diffusion_by_substitution, interaction_k, POSITIVITY_SLACK,
};
use nematic_core::gci::{GciTable, DEFAULT_GCI_GRID};
use nematic_core::hyperbolicity::{
    alpha, beta, characteristic_discriminant, direct_discriminant, gamma, hyperbolicity_scan, HyperbolicityReport,
    DISCRIMINANT_SLACK,
};
use nematic_core::macro1d::{local_reversal_fixed_points, reaction_step, MacroState, ReversalFixedPoints, SolverParams};
use nematic_core::numerics::RngStream;

use crate::report::{ComparisonReport, Tolerance};
use crate::HarnessError;

/// Eigenvalues count as real when their imaginary parts stay below this.
pub const IMAG_TOLERANCE: f64 = 1e-7;
/// `Δ` above this is treated as strictly positive.
pub const POSITIVE_DISCRIMINANT: f64 = 1e-8;
/// Relative agreement of the closed-form and direct discriminants.
pub const DISCRIMINANT_AGREEMENT: f64 = 1e-9;
/// Agreement of the two expressions for `𝒟`.
pub const DIFFUSION_AGREEMENT: f64 = 1e-8;
/// Distance to the predicted fixed point after the reversal run.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicitySetup {
    pub kappas: Vec<f64>,
    pub n_c: usize,
    pub n_x: usize,
    /// Random `(c, X)` tuples for the discriminant cross-check.
    pub tuples: usize,
}

impl Default for HyperbolicitySetup {
    fn default() -> Self {
        Self {
            kappas: vec![0.5, 2.0, 10.0],
            n_c: 201,
            n_x: 201,
            tuples: 1000,
        }
    }
}

/// Largest `|closed - direct|` relative to the magnitude of the terms of
/// `αX² + βX + γ`, over `tuples` random points.
pub fn discriminant_agreement(d2_hat: f64, mu_hat: f64, tuples: usize, rng: &mut RngStream) -> f64 {
    (0..tuples)
        .map(|_| {
            let (c, x) = (rng.uniform(), rng.uniform());
            let closed = characteristic_discriminant(c, x, d2_hat, mu_hat);
            let direct = direct_discriminant(c, x, d2_hat, mu_hat);
            let scale = (alpha(c, d2_hat, mu_hat) * x * x).abs()
                + (beta(c, d2_hat, mu_hat) * x).abs()
                + gamma(c, mu_hat).abs();
            (closed - direct).abs() / scale.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// Scan reports per concentration together with the comparison rows.
pub fn run_hyperbolicity_scan(
    setup: &HyperbolicitySetup,
    seed: u64,
) -> Result<(ComparisonReport, Vec<HyperbolicityReport>), HarnessError> {
    let mut report = ComparisonReport::new("hyperbolicity-scan");
    let mut rng = RngStream::new(seed);
    let mut scans = Vec::new();
    for &kappa in &setup.kappas {
        let coeffs = coefficients_for(kappa)?;
        let scan = hyperbolicity_scan(&coeffs, setup.n_c, setup.n_x)?;
        report.check(
            &format!("min_discriminant[kappa={kappa}]"),
            0.0,
            scan.min_discriminant,
            Tolerance::AtLeast(-DISCRIMINANT_SLACK),
            "hyperbolicity: Delta(X) >= 0 on [0,1]^2",
        );
        report.check(
            &format!("max_imag_eigenvalue[kappa={kappa}]"),
            0.0,
            scan.max_imag_where_positive(POSITIVE_DISCRIMINANT),
            Tolerance::AtMost(IMAG_TOLERANCE),
            "hyperbolicity: eigenvalues of A are real where Delta > 0",
        );
        report.check(
            &format!("discriminant_agreement[kappa={kappa}]"),
            0.0,
            discriminant_agreement(scan.d2_hat, scan.mu_hat, setup.tuples, &mut rng),
            Tolerance::AtMost(DISCRIMINANT_AGREEMENT),
            "hyperbolicity: alpha/beta/gamma form equals the cubic discriminant",
        );
        scans.push(scan);
    }
    Ok((report, scans))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivitySetup {
    pub kappas: Vec<f64>,
    pub radii: Vec<f64>,
}

impl Default for PositivitySetup {
    fn default() -> Self {
        Self {
            kappas: vec![0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
            radii: vec![0.5, 1.0, 2.0],
        }
    }
}

pub fn run_positivity_scan(setup: &PositivitySetup) -> Result<ComparisonReport, HarnessError> {
    let mut report = ComparisonReport::new("positivity-scan");
    for &kappa in &setup.kappas {
        let table = GciTable::build(kappa, DEFAULT_GCI_GRID)?;
        let c = compute_coefficients(kappa, &table)?;
        let tag = |name: &str| format!("{name}[kappa={kappa}]");
        report.check(
            &tag("d1"),
            0.0,
            c.d1,
            Tolerance::Open { lo: 0.0, hi: 1.0 },
            "coefficients: 0 < d1 < 1",
        );
        for (name, v) in [("d2", c.d2), ("mu", c.mu), ("d3", c.d3)] {
            report.check(
                &tag(name),
                0.0,
                v,
                Tolerance::Open {
                    lo: 0.0,
                    hi: f64::INFINITY,
                },
                "coefficients: d2, mu, d3 > 0",
            );
        }
        report.check(
            &tag("diffusion_D"),
            0.0,
            c.diffusion_d,
            Tolerance::AtLeast(-POSITIVITY_SLACK),
            "coefficients: D = d2 + d3 - mu - 2/kappa >= 0",
        );
        report.check(
            &tag("diffusion_D_substitution"),
            c.diffusion_d,
            diffusion_by_substitution(kappa, &table)?,
            Tolerance::Absolute(DIFFUSION_AGREEMENT),
            "coefficients: D agrees with its integration-by-parts form",
        );
    }
    for &r in &setup.radii {
        let k = interaction_k(r)?;
        report.check(
            &format!("k[r={r}]"),
            r * r / 8.0,
            k.k,
            Tolerance::Absolute(0.0),
            "coefficients: k = r^2/8",
        );
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReversalSetup {
    pub lambda0: f64,
    pub lambda1: f64,
    /// Total densities below and above the threshold `2√(λ0/λ1)`.
    pub s_below: f64,
    pub s_above: f64,
    pub trials: usize,
    pub t_end: f64,
    pub dt: f64,
}

impl Default for ReversalSetup {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            lambda1: 1.0,
            s_below: 1.0,
            s_above: 4.0,
            trials: 10,
            t_end: 40.0,
            dt: 0.005,
        }
    }
}

impl ReversalSetup {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Setup(m));
        if !(self.lambda0 > 0.0 && self.lambda1 > 0.0) {
            return bad(format!(
                "lambda0 and lambda1 must be > 0 (got {}, {})",
                self.lambda0, self.lambda1
            ));
        }
        let th = ReversalFixedPoints::threshold(self.lambda0, self.lambda1);
        if !(self.s_below > 0.0 && self.s_below < th && self.s_above > th) {
            return bad(format!(
                "need 0 < s_below < {th} < s_above (got {}, {})",
                self.s_below, self.s_above
            ));
        }
        if self.trials == 0 || !(self.t_end > 0.0 && self.dt > 0.0) {
            return bad("trials, t_end and dt must be positive".into());
        }
        Ok(())
    }
}

/// Integrate the per-cell reaction from random initial `δ` for both regimes.
pub fn run_reversal_phase(setup: &ReversalSetup, seed: u64) -> Result<ComparisonReport, HarnessError> {
    setup.validate()?;
    let mut report = ComparisonReport::new("reversal-phase");
    let mut rng = RngStream::new(seed);
    let mut params = SolverParams::new(coefficients_for(2.0)?, setup.t_end);
    params.lambda0 = setup.lambda0;
    params.lambda1 = setup.lambda1;
    let steps = (setup.t_end / setup.dt).ceil() as usize;
    for (regime, s) in [("below", setup.s_below), ("above", setup.s_above)] {
        let deltas: Vec<f64> = (0..setup.trials)
            .map(|_| {
                // keep away from the unstable point δ = 0 above threshold
                let u = 0.05 + 0.9 * rng.uniform();
                if rng.uniform() < 0.5 {
                    -u * s
                } else {
                    u * s
                }
            })
            .collect();
        let n = deltas.len();
        let mut state = MacroState::new(
            1.0,
            deltas.iter().map(|d| 0.5 * (s + d)).collect(),
            deltas.iter().map(|d| 0.5 * (s - d)).collect(),
            vec![0.0; n],
        )?;
        for _ in 0..steps {
            state = reaction_step(&state, &params, setup.dt);
        }
        let predicted = local_reversal_fixed_points(s, setup.lambda0, setup.lambda1);
        let err = state
            .delta()
            .iter()
            .zip(&deltas)
            .map(|(d, d0)| {
                let target = match predicted {
                    ReversalFixedPoints::StableZero => 0.0,
                    ReversalFixedPoints::Bistable { delta_star } => delta_star.copysign(*d0),
                };
                (d - target).abs()
            })
            .fold(0.0, f64::max);
        report.check(
            &format!("fixed_point_error[{regime},s={s}]"),
            0.0,
            err,
            Tolerance::AtMost(FIXED_POINT_TOLERANCE),
            "macro1d: reversal ODE converges to the predicted stable fixed points",
        );
        let expected_star = match predicted {
            ReversalFixedPoints::StableZero => 0.0,
            ReversalFixedPoints::Bistable { delta_star } => delta_star,
        };
        let analytic = (s * s - 4.0 * setup.lambda0 / setup.lambda1).max(0.0).sqrt();
        report.check(
            &format!("delta_star[{regime},s={s}]"),
            analytic,
            expected_star,
            Tolerance::Absolute(1e-12),
            "macro1d: delta* = sqrt(s^2 - 4 lambda0/lambda1) above threshold, 0 below",
        );
        let mass_drift = state
            .rho()
            .iter()
            .map(|r| (r - s).abs())
            .fold(0.0, f64::max);
        report.check(
            &format!("cell_density_drift[{regime},s={s}]"),
            0.0,
            mass_drift,
            Tolerance::AtMost(1e-14 * s.max(1.0)),
            "macro1d: reaction conserves rho per cell",
        );
    }
    let at_threshold = local_reversal_fixed_points(
        ReversalFixedPoints::threshold(setup.lambda0, setup.lambda1),
        setup.lambda0,
        setup.lambda1,
    );
    report.check(
        "delta_star_at_threshold",
        0.0,
        match at_threshold {
            ReversalFixedPoints::StableZero => 0.0,
            ReversalFixedPoints::Bistable { delta_star } => delta_star,
        },
        Tolerance::Absolute(1e-6),
        "macro1d: the stable pair collapses to 0 at the threshold",
    );
    Ok(report)
}
