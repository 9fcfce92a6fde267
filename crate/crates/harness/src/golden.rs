//! Regression tables of the kinetic coefficients.

use std::fs;
use std::path::{Path, PathBuf};

use nematic_core::coefficients::{coefficients_for, CoefficientCache, CoefficientSet, DENOMINATOR_FLOOR, POSITIVITY_SLACK};
use nematic_core::gci::{DEFAULT_GCI_GRID, GUARD_BAND};
use nematic_core::numerics::{DEFAULT_ABS_TOL, DEFAULT_REL_TOL};

use crate::report::{fmt_num, ComparisonReport, Tolerance};
use crate::runner::{create_dir, write_file, VERSION};
use crate::HarnessError;

pub const GOLDEN_FILE: &str = "coefficients.csv";
pub const CACHE_FILE: &str = "coefficient_cache.csv";
pub const METADATA_FILE: &str = "metadata.txt";
pub const GOLDEN_HEADER: &str = "kappa,d1,d2,mu,d3,diffusion_D,quad_error";
/// Agreement required when a later run re-derives a table.
pub const REPRODUCTION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct GoldenTables {
    pub sets: Vec<CoefficientSet>,
    pub files: Vec<PathBuf>,
}

pub fn golden_csv(sets: &[CoefficientSet]) -> String {
    let mut s = format!("{GOLDEN_HEADER}\n");
    for c in sets {
        let row = [c.kappa, c.d1, c.d2, c.mu, c.d3, c.diffusion_d, c.quad_error].map(fmt_num);
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn metadata(kappas: &[f64]) -> String {
    let grid: Vec<String> = kappas.iter().map(|k| k.to_string()).collect();
    format!(
        "version = {VERSION}\n\
         kappa_grid = {}\n\
         gci_grid_points = {DEFAULT_GCI_GRID}\n\
         gci_guard_band = {GUARD_BAND:e}\n\
         quadrature_rel_tol = {DEFAULT_REL_TOL:e}\n\
         quadrature_abs_tol = {DEFAULT_ABS_TOL:e}\n\
         denominator_floor = {DENOMINATOR_FLOOR:e}\n\
         positivity_slack = {POSITIVITY_SLACK:e}\n\
         reproduction_tolerance = {REPRODUCTION_TOLERANCE:e}\n",
        grid.join(", ")
    )
}

/// Compute the coefficients on `kappa_grid` and write the table, a fresh
/// coefficient cache and the run metadata into `dir`.
pub fn emit_golden_tables(kappa_grid: &[f64], dir: &Path) -> Result<GoldenTables, HarnessError> {
    if kappa_grid.is_empty() {
        return Err(HarnessError::Setup("kappa grid must not be empty".into()));
    }
    create_dir(dir)?;
    let sets = kappa_grid
        .iter()
        .map(|&k| coefficients_for(k))
        .collect::<Result<Vec<_>, _>>()?;

    let golden = dir.join(GOLDEN_FILE);
    write_file(&golden, &golden_csv(&sets))?;

    let cache_path = dir.join(CACHE_FILE);
    if cache_path.exists() {
        fs::remove_file(&cache_path).map_err(|source| HarnessError::Io {
            path: cache_path.display().to_string(),
            source,
        })?;
    }
    let mut cache = CoefficientCache::default();
    for set in &sets {
        cache.append(&cache_path, DEFAULT_GCI_GRID, *set)?;
    }

    let meta = dir.join(METADATA_FILE);
    write_file(&meta, &metadata(kappa_grid))?;
    Ok(GoldenTables {
        sets,
        files: vec![golden, cache_path, meta],
    })
}

fn parse_golden(text: &str) -> Result<Vec<CoefficientSet>, HarnessError> {
    let mut lines = text.lines();
    if lines.next() != Some(GOLDEN_HEADER) {
        return Err(HarnessError::Setup(format!("golden table must start with `{GOLDEN_HEADER}`")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| HarnessError::Setup(format!("golden table line {}: {e}", i + 2)))?;
            if v.len() != 7 {
                return Err(HarnessError::Setup(format!(
                    "golden table line {}: expected 7 fields, found {}",
                    i + 2,
                    v.len()
                )));
            }
            Ok(CoefficientSet {
                kappa: v[0],
                d1: v[1],
                d2: v[2],
                mu: v[3],
                d3: v[4],
                diffusion_d: v[5],
                quad_error: v[6],
            })
        })
        .collect()
}

/// Recompute every row of a stored golden table and compare.
pub fn check_golden_tables(dir: &Path) -> Result<ComparisonReport, HarnessError> {
    let path = dir.join(GOLDEN_FILE);
    let text = fs::read_to_string(&path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut report = ComparisonReport::new("golden-tables");
    for stored in parse_golden(&text)? {
        let fresh = coefficients_for(stored.kappa)?;
        let k = stored.kappa;
        for (name, a, b) in [
            ("d1", stored.d1, fresh.d1),
            ("d2", stored.d2, fresh.d2),
            ("mu", stored.mu, fresh.mu),
            ("d3", stored.d3, fresh.d3),
            ("diffusion_D", stored.diffusion_d, fresh.diffusion_d),
        ] {
            report.check(
                &format!("{name}[kappa={k}]"),
                a,
                b,
                Tolerance::Absolute(REPRODUCTION_TOLERANCE),
                "coefficients: golden table reproduces",
            );
        }
    }
    Ok(report)
}
