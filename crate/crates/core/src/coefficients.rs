//! Macroscopic coefficients `d1, d2, μ, d3`, the diffusion constant
//! `𝒟 = d2 + d3 - μ - 2/κ` and the non-locality constant `k = r²/8`.
//!
//! Every coefficient is a ratio of integrals against `e^{-κ/cos θ}` on
//! `[0, π/2]`, so `Z_κ` cancels.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::gci::{GciError, GciTable, DEFAULT_GCI_GRID, GUARD_BAND};
use crate::gvm::{boltzmann_weight, check_kappa, GvmError};
use crate::numerics::{gk21, integrate_adaptive, Interval, NumericsError};

/// Denominators closer to zero than this mark a corrupted table.
pub const DENOMINATOR_FLOOR: f64 = 1e-14;
/// Slack allowed below zero when checking `𝒟 ≥ 0`.
pub const POSITIVITY_SLACK: f64 = 1e-8;

const CACHE_HEADER: &str = "version,kappa,grid,d1,d2,mu,d3,diffusion_D,quad_error";

#[derive(Debug, Error)]
pub enum CoefficientError {
    #[error(transparent)]
    Gvm(#[from] GvmError),
    #[error(transparent)]
    Gci(#[from] GciError),
    #[error(transparent)]
    Quadrature(#[from] NumericsError),
    #[error("GCI table was built for kappa = {table} but kappa = {requested} was requested")]
    KappaMismatch { table: f64, requested: f64 },
    #[error("denominator <g sin/cos^2> = {0:e} is numerically zero; the GCI table is corrupted")]
    VanishingDenominator(f64),
    #[error("interaction radius must be finite and > 0 (got {0})")]
    InvalidRadius(f64),
    #[error("coefficient cache I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("coefficient cache line {line}: {reason}")]
    Cache { line: usize, reason: String },
}

/// The coefficient set at one concentration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    pub kappa: f64,
    pub d1: f64,
    pub d2: f64,
    pub mu: f64,
    pub d3: f64,
    pub diffusion_d: f64,
    /// Summed relative quadrature error estimate of the moments.
    pub quad_error: f64,
}

impl CoefficientSet {
    /// `d̂2 = d2 / d1`.
    pub fn d2_hat(&self) -> f64 {
        self.d2 / self.d1
    }

    /// `μ̂ = μ / d1`.
    pub fn mu_hat(&self) -> f64 {
        self.mu / self.d1
    }
}

impl fmt::Display for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = [
            ("kappa", self.kappa),
            ("d1", self.d1),
            ("d2", self.d2),
            ("mu", self.mu),
            ("d3", self.d3),
            ("diffusion_D", self.diffusion_d),
            ("d2_hat", self.d2_hat()),
            ("mu_hat", self.mu_hat()),
            ("quad_error", self.quad_error),
        ];
        for (i, (k, v)) in rows.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{k:<12}= {v:.17e}")?;
        }
        Ok(())
    }
}

/// `k = r²/8` for interaction radius `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlocalConstant {
    pub r: f64,
    pub k: f64,
}

pub fn interaction_k(r: f64) -> Result<NonlocalConstant, CoefficientError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(CoefficientError::InvalidRadius(r));
    }
    Ok(NonlocalConstant { r, k: r * r / 8.0 })
}

/// `∫_0^{π/2} g(θ) φ(θ) e^{-κ/cos θ} dθ`, one Gauss-Kronrod rule per table
/// panel. Returns the value and the summed error estimate.
fn g_moment<F: Fn(f64) -> f64>(table: &GciTable, phi: F) -> (f64, f64) {
    let kappa = table.kappa();
    let f = |t: f64| {
        if FRAC_PI_2 - t < GUARD_BAND {
            return 0.0;
        }
        let w = boltzmann_weight(kappa, t.cos());
        if w == 0.0 {
            0.0
        } else {
            table.eval(t) * phi(t) * w
        }
    };
    table.grid().windows(2).fold((0.0, 0.0), |(v, e), w| {
        let (dv, de, _) = gk21(&f, w[0], w[1]);
        (v + dv, e + de)
    })
}

/// Numerators and the shared denominator of the GCI moments.
#[derive(Debug, Clone, Copy)]
struct GciMoments {
    sin: f64,
    sin_cos: f64,
    sin_cos2: f64,
    sin3_cos3: f64,
    error: f64,
}

fn gci_moments(table: &GciTable) -> GciMoments {
    let (sin, e1) = g_moment(table, f64::sin);
    let (sin_cos, e2) = g_moment(table, f64::tan);
    let (sin_cos2, e3) = g_moment(table, |t| t.sin() / t.cos().powi(2));
    let (sin3_cos3, e4) = g_moment(table, |t| t.tan().powi(3));
    GciMoments {
        sin,
        sin_cos,
        sin_cos2,
        sin3_cos3,
        error: e1 + e2 + e3 + e4,
    }
}

fn check_table(kappa: f64, table: &GciTable) -> Result<(), CoefficientError> {
    check_kappa(kappa)?;
    if table.kappa() != kappa {
        return Err(CoefficientError::KappaMismatch {
            table: table.kappa(),
            requested: kappa,
        });
    }
    Ok(())
}

/// Coefficients from a prebuilt GCI table for the same `kappa`.
pub fn compute_coefficients(kappa: f64, table: &GciTable) -> Result<CoefficientSet, CoefficientError> {
    check_table(kappa, table)?;
    let iv = Interval::new(0.0, FRAC_PI_2)?;
    let weight = |t: f64| boltzmann_weight(kappa, t.cos());
    let z = integrate_adaptive(weight, iv, 1e-12, 1e-300)?;
    let c = integrate_adaptive(|t| t.cos() * weight(t), iv, 1e-12, 1e-300)?;
    let m = gci_moments(table);
    // normalized average ⟨g sin/cos²⟩_M
    let denominator = m.sin_cos2 / z.value;
    if denominator.abs() < DENOMINATOR_FLOOR {
        return Err(CoefficientError::VanishingDenominator(denominator));
    }

    let d1 = c.value / z.value;
    let d2 = m.sin_cos / m.sin_cos2;
    let mu = m.sin / (kappa * m.sin_cos2);
    let d3 = 2.0 * m.sin3_cos3 / m.sin_cos2;
    let rel = m.error / m.sin_cos2.abs() + (z.abs_error / z.value + c.abs_error / c.value.abs());
    Ok(CoefficientSet {
        kappa,
        d1,
        d2,
        mu,
        d3,
        diffusion_d: d2 + d3 - mu - 2.0 / kappa,
        quad_error: rel,
    })
}

/// Build the default GCI table and evaluate the coefficients.
pub fn coefficients_for(kappa: f64) -> Result<CoefficientSet, CoefficientError> {
    let table = GciTable::build(kappa, DEFAULT_GCI_GRID)?;
    compute_coefficients(kappa, &table)
}

/// `𝒟 = A/B` with `A = ∫_0^1 G(y) y^{-3} e^{-κ/y} [κ(2 - y²) - y(y² + 2)] dy`,
/// `G(y) = g(arccos y)`, and `B = κ ∫_0^{π/2} g sin/cos² e^{-κ/cos} dθ`.
pub fn diffusion_by_substitution(kappa: f64, table: &GciTable) -> Result<f64, CoefficientError> {
    check_table(kappa, table)?;
    let a = integrate_adaptive(
        |y| {
            let w = boltzmann_weight(kappa, y);
            if w == 0.0 {
                return 0.0;
            }
            let big_g = table.eval(y.clamp(-1.0, 1.0).acos());
            big_g / (y * y * y) * w * (kappa * (2.0 - y * y) - y * (y * y + 2.0))
        },
        Interval::new(0.0, 1.0)?,
        1e-12,
        1e-300,
    )?;
    let (b, _) = g_moment(table, |t| t.sin() / t.cos().powi(2));
    Ok(a.value / (kappa * b))
}

/// `(κ, 𝒟)` pairs over a grid with the minimum and any points below
/// `-POSITIVITY_SLACK`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub points: Vec<(f64, f64)>,
    pub min: (f64, f64),
    pub violations: Vec<f64>,
}

impl PositivityReport {
    pub fn all_nonnegative(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn positivity_report(kappa_grid: &[f64]) -> Result<PositivityReport, CoefficientError> {
    let mut points = Vec::with_capacity(kappa_grid.len());
    for &kappa in kappa_grid {
        check_kappa(kappa)?;
        points.push((kappa, coefficients_for(kappa)?.diffusion_d));
    }
    let min = points
        .iter()
        .copied()
        .fold((f64::NAN, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
    let violations = points
        .iter()
        .filter(|p| p.1 < -POSITIVITY_SLACK)
        .map(|p| p.0)
        .collect();
    Ok(PositivityReport { points, min, violations })
}

/// On-disk CSV of coefficient sets keyed by `(κ, grid size, code version)`.
#[derive(Debug, Clone, Default)]
pub struct CoefficientCache {
    rows: Vec<(String, f64, usize, CoefficientSet)>,
}

impl CoefficientCache {
    pub const VERSION: &'static str = env!("CARGO_PKG_VERSION");

    /// Load a cache file; a missing file gives an empty cache.
    pub fn load(path: &Path) -> Result<Self, CoefficientError> {
        if !path.exists() {
            return Ok(Self::default());
        }
        let mut rows = Vec::new();
        for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            let line_no = i + 1;
            if line.trim().is_empty() || line == CACHE_HEADER {
                continue;
            }
            let bad = |reason: String| CoefficientError::Cache { line: line_no, reason };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(bad(format!("expected 9 fields, found {}", fields.len())));
            }
            let num = |j: usize| -> Result<f64, CoefficientError> {
                fields[j]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| bad(format!("field {}: {e}", j + 1)))
            };
            let grid = fields[2]
                .trim()
                .parse::<usize>()
                .map_err(|e| bad(format!("field 3: {e}")))?;
            let set = CoefficientSet {
                kappa: num(1)?,
                d1: num(3)?,
                d2: num(4)?,
                mu: num(5)?,
                d3: num(6)?,
                diffusion_d: num(7)?,
                quad_error: num(8)?,
            };
            rows.push((fields[0].trim().to_string(), set.kappa, grid, set));
        }
        Ok(Self { rows })
    }

    pub fn lookup(&self, kappa: f64, grid: usize) -> Option<CoefficientSet> {
        self.rows
            .iter()
            .find(|(v, k, g, _)| v == Self::VERSION && *k == kappa && *g == grid)
            .map(|r| r.3)
    }

    /// Append a row to `path`, writing the header for a new file.
    pub fn append(&mut self, path: &Path, grid: usize, set: CoefficientSet) -> Result<(), CoefficientError> {
        let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            writeln!(f, "{CACHE_HEADER}")?;
        }
        writeln!(
            f,
            "{},{:e},{},{:e},{:e},{:e},{:e},{:e},{:e}",
            Self::VERSION,
            set.kappa,
            grid,
            set.d1,
            set.d2,
            set.mu,
            set.d3,
            set.diffusion_d,
            set.quad_error
        )?;
        self.rows.push((Self::VERSION.to_string(), set.kappa, grid, set));
        Ok(())
    }

    /// Cached value if present, otherwise compute and append.
    pub fn get_or_compute(&mut self, path: &Path, kappa: f64) -> Result<CoefficientSet, CoefficientError> {
        if let Some(set) = self.lookup(kappa, DEFAULT_GCI_GRID) {
            return Ok(set);
        }
        let set = coefficients_for(kappa)?;
        self.append(path, DEFAULT_GCI_GRID, set)?;
        Ok(set)
    }
}
