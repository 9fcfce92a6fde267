//! Particle equilibria against the GVM mixture `ρ+ χ⁺ M + ρ- χ⁻ M`.

use std::f64::consts::{FRAC_PI_2, PI};

use nematic_core::angle::wrap_angle;
use nematic_core::gvm::{boltzmann_weight, moment, partition_function, GvmParams};
use nematic_core::numerics::{integrate_adaptive, Interval, RngStream};
use nematic_core::particles::{nematic_mean_angle, nematic_order, step, ParticleState, SimParams};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::report::{ComparisonReport, Tolerance};
use crate::HarnessError;

pub const ORDER_TOLERANCE: f64 = 0.05;
pub const CHI_SQUARE_LEVEL: f64 = 0.01;
pub const STATIONARITY_SLOPE: f64 = 1e-3;
pub const MIN_EXPECTED_COUNT: f64 = 5.0;
/// Fraction of the run, at its end, used for time averages and the drift check.
pub const TAIL_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSetup {
    pub sim: SimParams,
    /// Concentration of the GVM the initial angles are drawn from.
    pub init_kappa: f64,
    /// Initial fraction of particles on the `+` side.
    pub plus_fraction: f64,
    pub t_end: f64,
    /// Histogram bins over `[-π, π)`; a multiple of 4 so that `±π/2` are edges.
    pub bins: usize,
}

impl Default for EquilibriumSetup {
    fn default() -> Self {
        let sim = SimParams {
            n: 10_000,
            box_length: 1.0,
            radius: 0.45,
            v0: 0.05,
            nu: 1.0,
            d_noise: 0.5,
            dt: 0.02,
            ..SimParams::default()
        };
        Self {
            init_kappa: 1.0,
            plus_fraction: 0.7,
            t_end: 30.0,
            bins: 40,
            sim,
        }
    }
}

impl EquilibriumSetup {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.sim.validate()?;
        GvmParams::new(self.init_kappa, 0.0)?;
        GvmParams::new(self.sim.kappa_eff(), 0.0)?;
        if !(0.0..=1.0).contains(&self.plus_fraction) {
            return Err(HarnessError::Setup(format!(
                "plus_fraction must lie in [0, 1] (got {})",
                self.plus_fraction
            )));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(HarnessError::Setup(format!("t_end must be > 0 (got {})", self.t_end)));
        }
        if self.bins < 4 || !self.bins.is_multiple_of(4) {
            return Err(HarnessError::Setup(format!("bins must be a positive multiple of 4 (got {})", self.bins)));
        }
        Ok(())
    }
}

/// Time series and final state of a relaxation run.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub times: Vec<f64>,
    pub order: Vec<f64>,
    pub final_state: ParticleState,
}

pub fn relax(setup: &EquilibriumSetup, seed: u64) -> Result<Relaxation, HarnessError> {
    setup.validate()?;
    let sim = SimParams { seed, ..setup.sim.clone() };
    let mut rng = RngStream::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut state = ParticleState::homogeneous(&sim, GvmParams::new(setup.init_kappa, 0.0)?, setup.plus_fraction, &mut rng);
    let steps = (setup.t_end / sim.dt).round().max(1.0) as usize;
    let mut times = vec![state.time];
    let mut order = vec![nematic_order(&state.angles)];
    for _ in 0..steps {
        state = step(&state, &sim);
        times.push(state.time);
        order.push(nematic_order(&state.angles));
    }
    Ok(Relaxation {
        times,
        order,
        final_state: state,
    })
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Result of a binned goodness-of-fit test.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Observed and expected counts after merging.
    pub observed: Vec<f64>,
    pub expected: Vec<f64>,
}

/// Merge adjacent bins until each expected count reaches `min_expected`.
/// The last group absorbs any remainder.
pub fn merge_bins(observed: &[f64], expected: &[f64], min_expected: f64) -> (Vec<f64>, Vec<f64>) {
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let (mut acc_o, mut acc_e) = (0.0, 0.0);
    for (&ob, &ex) in observed.iter().zip(expected) {
        acc_o += ob;
        acc_e += ex;
        if acc_e >= min_expected {
            o.push(acc_o);
            e.push(acc_e);
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        match (o.last_mut(), e.last_mut()) {
            (Some(lo), Some(le)) => {
                *lo += acc_o;
                *le += acc_e;
            }
            _ => {
                o.push(acc_o);
                e.push(acc_e);
            }
        }
    }
    (o, e)
}

/// Pearson chi-square with `fitted` parameters estimated from the data.
pub fn chi_square(observed: &[f64], expected: &[f64], fitted: usize) -> Result<ChiSquare, HarnessError> {
    let (o, e) = merge_bins(observed, expected, MIN_EXPECTED_COUNT);
    let statistic: f64 = o.iter().zip(&e).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = o.len().checked_sub(1 + fitted).filter(|&d| d > 0).ok_or_else(|| {
        HarnessError::Setup(format!("only {} bins after merging; too few for {fitted} fitted parameters", o.len()))
    })?;
    let dist = ChiSquared::new(dof as f64).map_err(|e| HarnessError::Setup(e.to_string()))?;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        observed: o,
        expected: e,
    })
}

/// Expected bin probabilities of the mixture on `bins` equal bins of
/// `[-π, π)` (angles measured from the mean line), given the side weights.
pub fn mixture_bin_probabilities(kappa: f64, bins: usize, plus_weight: f64) -> Result<Vec<f64>, HarnessError> {
    let z_half = partition_function(kappa)?;
    let w = 2.0 * PI / bins as f64;
    (0..bins)
        .map(|b| {
            let (a, c) = (-PI + b as f64 * w, -PI + (b + 1) as f64 * w);
            let mid = 0.5 * (a + c);
            let side = if mid.cos() >= 0.0 { plus_weight } else { 1.0 - plus_weight };
            let r = integrate_adaptive(|t| boltzmann_weight(kappa, t.cos()), Interval::new(a, c)?, 1e-12, 1e-300)?;
            Ok(side * r.value / z_half)
        })
        .collect()
}

/// Counts of `angles - line` folded to `[-π, π)` in `bins` equal bins.
pub fn folded_histogram(angles: &[f64], line: f64, bins: usize) -> Vec<f64> {
    let w = 2.0 * PI / bins as f64;
    let mut h = vec![0.0; bins];
    for &t in angles {
        let phi = wrap_angle(t - line);
        h[(((phi + PI) / w) as usize).min(bins - 1)] += 1.0;
    }
    h
}

pub fn run_equilibrium_experiment(setup: &EquilibriumSetup, seed: u64) -> Result<ComparisonReport, HarnessError> {
    let relax = relax(setup, seed)?;
    let kappa = setup.sim.kappa_eff();
    let mut report = ComparisonReport::new("equilibrium");

    let ys = check_stationary(&mut report, "order_parameter_slope", &relax);

    check_order(&mut report, "nematic_order", kappa, &ys)?;

    let angles = &relax.final_state.angles;
    let n = angles.len() as f64;
    let line = nematic_mean_angle(angles).unwrap_or(0.0);
    let n_plus = angles.iter().filter(|&&t| (t - line).cos() >= 0.0).count() as f64;
    let (n_plus_ref, invariant) = if setup.sim.reversals {
        ((0.5 * n).round(), "particles: reversals below threshold equalize the side counts")
    } else {
        ((setup.plus_fraction * n).round(), "particles: side counts conserved without reversals")
    };
    let p = n_plus_ref / n;
    report.check(
        "plus_side_count",
        n_plus_ref,
        n_plus,
        Tolerance::Sigma {
            k: 3.0,
            sigma: (n * p * (1.0 - p)).sqrt().max(1.0),
        },
        invariant,
    );

    let observed = folded_histogram(angles, line, setup.bins);
    let expected: Vec<f64> = mixture_bin_probabilities(kappa, setup.bins, n_plus / n)?
        .into_iter()
        .map(|q| q * n)
        .collect();
    // the mean line and the side split are fitted
    let chi = chi_square(&observed, &expected, 2)?;
    report.check(
        "histogram_chi_square_p",
        CHI_SQUARE_LEVEL,
        chi.p_value,
        Tolerance::AtLeast(CHI_SQUARE_LEVEL),
        "gvm: stationary angle law is the GVM mixture",
    );
    Ok(report)
}

/// Checks the drift of the order parameter over the tail of the run and
/// returns the tail samples. A drifting run marks the report inconclusive.
fn check_stationary(report: &mut ComparisonReport, statistic: &str, relax: &Relaxation) -> Vec<f64> {
    let t_tail = relax.times.last().copied().unwrap_or(0.0) * (1.0 - TAIL_FRACTION);
    let tail: Vec<usize> = (0..relax.times.len()).filter(|&i| relax.times[i] >= t_tail).collect();
    let xs: Vec<f64> = tail.iter().map(|&i| relax.times[i]).collect();
    let ys: Vec<f64> = tail.iter().map(|&i| relax.order[i]).collect();
    let slope = ols_slope(&xs, &ys);
    let stationary = report.check(
        statistic,
        0.0,
        slope.abs(),
        Tolerance::AtMost(STATIONARITY_SLOPE),
        "particles: statistical stationarity before comparison",
    );
    if !stationary {
        report.mark_inconclusive(format!(
            "{statistic}: order parameter still drifting, slope {slope:.3e} per unit time over the last {:.0}% of the run",
            TAIL_FRACTION * 100.0
        ));
    }
    ys
}

fn check_order(report: &mut ComparisonReport, statistic: &str, kappa: f64, tail: &[f64]) -> Result<bool, HarnessError> {
    let order_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let order_theory = moment(kappa, |t| (2.0 * t).cos())?;
    Ok(report.check(
        statistic,
        order_theory,
        order_mean,
        Tolerance::Relative(ORDER_TOLERANCE),
        "gvm: stationary nematic order equals <cos 2theta>_M",
    ))
}

/// Stationary nematic order across several `κ = ν/d`, varying `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderParameterSetup {
    pub base: EquilibriumSetup,
    pub kappas: Vec<f64>,
}

impl Default for OrderParameterSetup {
    fn default() -> Self {
        Self {
            base: EquilibriumSetup::default(),
            kappas: vec![1.0, 2.0, 4.0],
        }
    }
}

impl OrderParameterSetup {
    fn at(&self, kappa: f64) -> EquilibriumSetup {
        let mut s = self.base.clone();
        s.sim.d_noise = s.sim.nu / kappa;
        s
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.kappas.is_empty() {
            return Err(HarnessError::Setup("kappas must not be empty".into()));
        }
        self.kappas.iter().try_for_each(|&k| {
            GvmParams::new(k, 0.0)?;
            self.at(k).validate()
        })
    }
}

pub fn run_order_parameter_experiment(setup: &OrderParameterSetup, seed: u64) -> Result<ComparisonReport, HarnessError> {
    setup.validate()?;
    let mut report = ComparisonReport::new("order-parameter");
    for (i, &kappa) in setup.kappas.iter().enumerate() {
        let relax = relax(&setup.at(kappa), seed.wrapping_add(i as u64))?;
        let tail = check_stationary(&mut report, &format!("order_parameter_slope[kappa={kappa}]"), &relax);
        check_order(&mut report, &format!("nematic_order[kappa={kappa}]"), kappa, &tail)?;
    }
    Ok(report)
}

/// Angles of a `d = 0` consensus run collapse onto one line.
pub fn consensus_spread(angles: &[f64]) -> f64 {
    let line = nematic_mean_angle(angles).unwrap_or(0.0);
    angles
        .iter()
        .map(|&t| {
            let phi = wrap_angle(t - line);
            if phi.abs() <= FRAC_PI_2 {
                phi.abs()
            } else {
                PI - phi.abs()
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merging_reaches_minimum() {
        let (o, e) = merge_bins(&[1.0, 2.0, 10.0, 0.0, 1.0], &[1.0, 3.0, 9.0, 0.5, 0.5], 5.0);
        assert_eq!(e, vec![14.0]);
        assert_eq!(o, vec![14.0]);
        let (o, e) = merge_bins(&[3.0, 4.0, 6.0], &[5.0, 5.0, 5.0], 5.0);
        assert_eq!((o, e), (vec![3.0, 4.0, 6.0], vec![5.0, 5.0, 5.0]));
    }

    #[test]
    fn mixture_probabilities_sum_to_one() {
        let p = mixture_bin_probabilities(2.0, 40, 0.7).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let plus: f64 = (10..30).map(|b| p[b]).sum();
        assert!((plus - 0.7).abs() < 1e-10);
    }

    #[test]
    fn chi_square_accepts_exact_samples() {
        let kappa = 2.0;
        let mut rng = RngStream::new(3);
        let g = GvmParams::new(kappa, 0.0).unwrap();
        let mut angles = nematic_core::gvm::sample(g, nematic_core::gvm::Side::Plus, 7000, &mut rng);
        angles.extend(nematic_core::gvm::sample(g, nematic_core::gvm::Side::Minus, 3000, &mut rng));
        let obs = folded_histogram(&angles, 0.0, 40);
        let exp: Vec<f64> = mixture_bin_probabilities(kappa, 40, 0.7).unwrap().iter().map(|q| q * 1e4).collect();
        let chi = chi_square(&obs, &exp, 0).unwrap();
        assert!(chi.p_value > 0.01, "{chi:?}");
        // a wrong concentration is rejected
        let wrong: Vec<f64> = mixture_bin_probabilities(1.5, 40, 0.7).unwrap().iter().map(|q| q * 1e4).collect();
        assert!(chi_square(&obs, &wrong, 0).unwrap().p_value < 1e-6);
    }

    #[test]
    fn slope_of_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        assert!((ols_slope(&xs, &ys) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn order_parameter_small_run() {
        let mut setup = OrderParameterSetup::default();
        setup.base.sim.n = 1000;
        setup.base.t_end = 60.0;
        setup.kappas = vec![1.0, 2.0];
        let r = run_order_parameter_experiment(&setup, 5).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert!(r.all_pass(), "{}", r.summary());
    }

    #[test]
    fn order_parameter_rejects_bad_kappa() {
        let setup = OrderParameterSetup {
            kappas: vec![2.0, -1.0],
            ..OrderParameterSetup::default()
        };
        assert!(setup.validate().is_err());
    }
}
