//! Experiment configurations: parsing, manifest echo, execution and output.
//!
//! Keys are grouped by section:
//!
//! | section | keys |
//! |---|---|
//! | `experiment` | `kind` (required), `seed`, `output` |
//! | `particles` | `n`, `box_length`, `radius`, `v0`, `nu`, `d_noise` or `kappa`, `dt`, `reversals`, `lambda0`, `lambda1`, `noise` |
//! | `init` | `kappa`, `plus_fraction` |
//! | `equilibrium` | `t_end`, `bins`, `kappas` (order-parameter only) |
//! | `pvm` | `scenario`, `plus_fraction`, `amplitude`, `band`, `t_end`, `slabs`, `cells`, `batches` |
//! | `hyperbolicity` | `kappas`, `n_c`, `n_x`, `tuples` |
//! | `positivity` | `kappas`, `radii` |
//! | `reversal` | `lambda0`, `lambda1`, `s_below`, `s_above`, `trials`, `t_end`, `dt` |

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nematic_core::gvm::GvmParams;
use nematic_core::particles::{NoiseConvention, SimParams};

use crate::config::{ConfigError, ConfigWriter, RawConfig};
use crate::equilibrium::{run_equilibrium_experiment, run_order_parameter_experiment, EquilibriumSetup, OrderParameterSetup};
use crate::pvm::{run_particle_vs_macro, PvmSetup, Scenario};
use crate::report::ComparisonReport;
use crate::scans::{
    run_hyperbolicity_scan, run_positivity_scan, run_reversal_phase, HyperbolicitySetup, PositivitySetup,
    ReversalSetup,
};
use crate::HarnessError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Equilibrium,
    OrderParameter,
    ParticleVsMacro,
    HyperbolicityScan,
    PositivityScan,
    ReversalPhase,
}

impl ExperimentKind {
    pub const ALL: [Self; 6] = [
        Self::Equilibrium,
        Self::OrderParameter,
        Self::ParticleVsMacro,
        Self::HyperbolicityScan,
        Self::PositivityScan,
        Self::ReversalPhase,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Equilibrium => "equilibrium",
            Self::OrderParameter => "order-parameter",
            Self::ParticleVsMacro => "particle-vs-macro",
            Self::HyperbolicityScan => "hyperbolicity-scan",
            Self::PositivityScan => "positivity-scan",
            Self::ReversalPhase => "reversal-phase",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentSpec {
    Equilibrium(EquilibriumSetup),
    OrderParameter(OrderParameterSetup),
    ParticleVsMacro(PvmSetup),
    HyperbolicityScan(HyperbolicitySetup),
    PositivityScan(PositivitySetup),
    ReversalPhase(ReversalSetup),
}

impl ExperimentSpec {
    pub fn defaults(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::Equilibrium => Self::Equilibrium(EquilibriumSetup::default()),
            ExperimentKind::OrderParameter => Self::OrderParameter(OrderParameterSetup::default()),
            ExperimentKind::ParticleVsMacro => Self::ParticleVsMacro(PvmSetup::new(Scenario::Drift)),
            ExperimentKind::HyperbolicityScan => Self::HyperbolicityScan(HyperbolicitySetup::default()),
            ExperimentKind::PositivityScan => Self::PositivityScan(PositivitySetup::default()),
            ExperimentKind::ReversalPhase => Self::ReversalPhase(ReversalSetup::default()),
        }
    }

    pub fn kind(&self) -> ExperimentKind {
        match self {
            Self::Equilibrium(_) => ExperimentKind::Equilibrium,
            Self::OrderParameter(_) => ExperimentKind::OrderParameter,
            Self::ParticleVsMacro(_) => ExperimentKind::ParticleVsMacro,
            Self::HyperbolicityScan(_) => ExperimentKind::HyperbolicityScan,
            Self::PositivityScan(_) => ExperimentKind::PositivityScan,
            Self::ReversalPhase(_) => ExperimentKind::ReversalPhase,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spec: ExperimentSpec,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

const SIM_FIELDS: &[&str] = &[
    "n",
    "box_length",
    "radius",
    "v0",
    "nu",
    "d_noise",
    "dt",
    "lambda0",
    "lambda1",
    "kappa",
];

/// Overlay `particles.*` keys on `base` and validate the result.
pub fn parse_sim(raw: &mut RawConfig, base: SimParams) -> Result<SimParams, ConfigError> {
    let mut sim = SimParams {
        n: raw.get_or("particles.n", base.n)?,
        box_length: raw.get_or("particles.box_length", base.box_length)?,
        radius: raw.get_or("particles.radius", base.radius)?,
        v0: raw.get_or("particles.v0", base.v0)?,
        nu: raw.get_or("particles.nu", base.nu)?,
        d_noise: base.d_noise,
        dt: raw.get_or("particles.dt", base.dt)?,
        reversals: raw.get_or("particles.reversals", base.reversals)?,
        lambda0: raw.get_or("particles.lambda0", base.lambda0)?,
        lambda1: raw.get_or("particles.lambda1", base.lambda1)?,
        ..base
    };
    let d_noise: Option<f64> = raw.get("particles.d_noise")?;
    let kappa: Option<f64> = raw.get("particles.kappa")?;
    sim.d_noise = match (d_noise, kappa) {
        (Some(_), Some(_)) => {
            return Err(raw.range_error("particles.kappa", "set either particles.d_noise or particles.kappa, not both"))
        }
        (Some(d), None) => d,
        (None, Some(k)) => {
            GvmParams::new(k, 0.0).map_err(|e| raw.range_error("particles.kappa", e.to_string()))?;
            sim.nu / k
        }
        (None, None) => base.d_noise,
    };
    if let Some(noise) = raw.get::<String>("particles.noise")? {
        sim.noise = match noise.as_str() {
            "kinetic" => NoiseConvention::Kinetic,
            "ito" => NoiseConvention::Ito,
            other => {
                return Err(raw.range_error(
                    "particles.noise",
                    format!("noise must be `kinetic` or `ito` (got `{other}`)"),
                ))
            }
        };
    }
    sim.validate().map_err(|e| raw.attribute("particles", SIM_FIELDS, e.to_string()))?;
    Ok(sim)
}

pub fn write_sim(w: &mut ConfigWriter, sim: &SimParams) {
    w.set("particles.n", sim.n)
        .set("particles.box_length", sim.box_length)
        .set("particles.radius", sim.radius)
        .set("particles.v0", sim.v0)
        .set("particles.nu", sim.nu)
        .set("particles.d_noise", sim.d_noise)
        .set("particles.dt", sim.dt)
        .set("particles.reversals", sim.reversals)
        .set("particles.lambda0", sim.lambda0)
        .set("particles.lambda1", sim.lambda1)
        .set(
            "particles.noise",
            match sim.noise {
                NoiseConvention::Kinetic => "kinetic",
                NoiseConvention::Ito => "ito",
            },
        );
}

fn parse_equilibrium(raw: &mut RawConfig, base: EquilibriumSetup) -> Result<EquilibriumSetup, ConfigError> {
    let sim = parse_sim(raw, base.sim.clone())?;
    let init_kappa = raw.get_or("init.kappa", base.init_kappa)?;
    GvmParams::new(init_kappa, 0.0).map_err(|e| raw.range_error("init.kappa", e.to_string()))?;
    let setup = EquilibriumSetup {
        sim,
        init_kappa,
        plus_fraction: raw.get_or("init.plus_fraction", base.plus_fraction)?,
        t_end: raw.get_or("equilibrium.t_end", base.t_end)?,
        bins: raw.get_or("equilibrium.bins", base.bins)?,
    };
    if !(0.0..=1.0).contains(&setup.plus_fraction) {
        return Err(raw.range_error(
            "init.plus_fraction",
            format!("plus_fraction must lie in [0, 1] (got {})", setup.plus_fraction),
        ));
    }
    setup.validate().map_err(|e| match e {
        HarnessError::Setup(_) => raw.attribute("equilibrium", &["t_end", "bins"], e.to_string()),
        _ => raw.attribute("particles", SIM_FIELDS, e.to_string()),
    })?;
    Ok(setup)
}

fn write_equilibrium(w: &mut ConfigWriter, s: &EquilibriumSetup) {
    write_sim(w, &s.sim);
    w.set("init.kappa", s.init_kappa)
        .set("init.plus_fraction", s.plus_fraction)
        .set("equilibrium.t_end", s.t_end)
        .set("equilibrium.bins", s.bins);
}

fn positive_list(raw: &RawConfig, key: &str, values: &[f64]) -> Result<(), ConfigError> {
    if values.is_empty() {
        return Err(raw.range_error(key, "list must not be empty"));
    }
    match values.iter().find(|v| v.is_nan() || **v <= 0.0) {
        Some(v) => Err(raw.range_error(key, format!("entries must be > 0 (got {v})"))),
        None => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn new(spec: ExperimentSpec, seed: u64) -> Self {
        Self {
            spec,
            seed,
            output: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_raw(RawConfig::load(path)?)
    }

    /// Parse with `kind` forced, ignoring (but still checking) `experiment.kind`.
    pub fn parse_as(text: &str, kind: ExperimentKind) -> Result<Self, ConfigError> {
        let mut raw: RawConfig = text.parse()?;
        if let Some(k) = raw.get::<String>("experiment.kind")? {
            if k != kind.name() {
                return Err(raw.range_error(
                    "experiment.kind",
                    format!("config is for `{k}` but `{}` was requested", kind.name()),
                ));
            }
        }
        Self::parse_body(raw, kind)
    }

    pub fn from_raw(mut raw: RawConfig) -> Result<Self, ConfigError> {
        let name: String = raw.require("experiment.kind")?;
        let kind = ExperimentKind::parse(&name).ok_or_else(|| {
            let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            raw.range_error(
                "experiment.kind",
                format!("unknown experiment `{name}`; expected one of {}", names.join(", ")),
            )
        })?;
        Self::parse_body(raw, kind)
    }

    fn parse_body(mut raw: RawConfig, kind: ExperimentKind) -> Result<Self, ConfigError> {
        let seed = raw.get_or("experiment.seed", 0u64)?;
        let output = raw.get::<String>("experiment.output")?.map(PathBuf::from);
        let spec = match kind {
            ExperimentKind::Equilibrium => ExperimentSpec::Equilibrium(parse_equilibrium(&mut raw, EquilibriumSetup::default())?),
            ExperimentKind::OrderParameter => {
                let defaults = OrderParameterSetup::default();
                let kappas = raw.get_or("equilibrium.kappas", defaults.kappas)?;
                positive_list(&raw, "equilibrium.kappas", &kappas)?;
                let base = parse_equilibrium(&mut raw, defaults.base)?;
                let setup = OrderParameterSetup { base, kappas };
                setup
                    .validate()
                    .map_err(|e| raw.attribute("equilibrium", &["kappas", "t_end", "bins"], e.to_string()))?;
                ExperimentSpec::OrderParameter(setup)
            }
            ExperimentKind::ParticleVsMacro => {
                let name = raw.get_or("pvm.scenario", "drift".to_string())?;
                let scenario = Scenario::parse(&name).ok_or_else(|| {
                    raw.range_error(
                        "pvm.scenario",
                        format!("scenario must be drift, front or balanced (got `{name}`)"),
                    )
                })?;
                let d = PvmSetup::new(scenario);
                let sim = parse_sim(&mut raw, d.sim.clone())?;
                let band = match raw.get::<Vec<f64>>("pvm.band")? {
                    None => d.band,
                    Some(b) if b.len() == 2 => (b[0], b[1]),
                    Some(b) => {
                        return Err(raw.range_error("pvm.band", format!("band takes two values (got {})", b.len())))
                    }
                };
                let setup = PvmSetup {
                    sim,
                    scenario,
                    plus_fraction: raw.get_or("pvm.plus_fraction", d.plus_fraction)?,
                    amplitude: raw.get_or("pvm.amplitude", d.amplitude)?,
                    band,
                    t_end: raw.get("pvm.t_end")?.or(d.t_end),
                    slabs: raw.get_or("pvm.slabs", d.slabs)?,
                    cells: raw.get_or("pvm.cells", d.cells)?,
                    batches: raw.get_or("pvm.batches", d.batches)?,
                };
                setup.validate().map_err(|e| {
                    let fields = [
                        "plus_fraction",
                        "amplitude",
                        "band",
                        "t_end",
                        "slabs",
                        "cells",
                        "batches",
                    ];
                    match e {
                        HarnessError::Setup(_) => raw.attribute("pvm", &fields, e.to_string()),
                        _ => raw.attribute("particles", SIM_FIELDS, e.to_string()),
                    }
                })?;
                ExperimentSpec::ParticleVsMacro(setup)
            }
            ExperimentKind::HyperbolicityScan => {
                let d = HyperbolicitySetup::default();
                let setup = HyperbolicitySetup {
                    kappas: raw.get_or("hyperbolicity.kappas", d.kappas)?,
                    n_c: raw.get_or("hyperbolicity.n_c", d.n_c)?,
                    n_x: raw.get_or("hyperbolicity.n_x", d.n_x)?,
                    tuples: raw.get_or("hyperbolicity.tuples", d.tuples)?,
                };
                positive_list(&raw, "hyperbolicity.kappas", &setup.kappas)?;
                for (key, v) in [("hyperbolicity.n_c", setup.n_c), ("hyperbolicity.n_x", setup.n_x)] {
                    if v < 2 {
                        return Err(raw.range_error(key, format!("grid needs at least 2 points (got {v})")));
                    }
                }
                ExperimentSpec::HyperbolicityScan(setup)
            }
            ExperimentKind::PositivityScan => {
                let d = PositivitySetup::default();
                let setup = PositivitySetup {
                    kappas: raw.get_or("positivity.kappas", d.kappas)?,
                    radii: raw.get_or("positivity.radii", d.radii)?,
                };
                positive_list(&raw, "positivity.kappas", &setup.kappas)?;
                positive_list(&raw, "positivity.radii", &setup.radii)?;
                ExperimentSpec::PositivityScan(setup)
            }
            ExperimentKind::ReversalPhase => {
                let d = ReversalSetup::default();
                let setup = ReversalSetup {
                    lambda0: raw.get_or("reversal.lambda0", d.lambda0)?,
                    lambda1: raw.get_or("reversal.lambda1", d.lambda1)?,
                    s_below: raw.get_or("reversal.s_below", d.s_below)?,
                    s_above: raw.get_or("reversal.s_above", d.s_above)?,
                    trials: raw.get_or("reversal.trials", d.trials)?,
                    t_end: raw.get_or("reversal.t_end", d.t_end)?,
                    dt: raw.get_or("reversal.dt", d.dt)?,
                };
                setup.validate().map_err(|e| {
                    raw.attribute(
                        "reversal",
                        &["lambda0", "lambda1", "s_below", "s_above", "trials", "t_end", "dt"],
                        e.to_string(),
                    )
                })?;
                ExperimentSpec::ReversalPhase(setup)
            }
        };
        raw.finish()?;
        Ok(Self { spec, seed, output })
    }

    /// Fully resolved configuration; parsing it yields `self` again.
    pub fn to_manifest(&self) -> String {
        let mut w = ConfigWriter::default();
        w.comment(&format!(
            "nematic {VERSION} run manifest\nrerun with: nematic validate --experiment {} --config <this file>",
            self.spec.kind()
        ));
        w.set("experiment.kind", self.spec.kind()).set("experiment.seed", self.seed);
        if let Some(out) = &self.output {
            w.set("experiment.output", out.display());
        }
        match &self.spec {
            ExperimentSpec::Equilibrium(s) => write_equilibrium(&mut w, s),
            ExperimentSpec::OrderParameter(s) => {
                write_equilibrium(&mut w, &s.base);
                w.list("equilibrium.kappas", &s.kappas);
            }
            ExperimentSpec::ParticleVsMacro(s) => {
                write_sim(&mut w, &s.sim);
                w.set("pvm.scenario", s.scenario.name())
                    .set("pvm.plus_fraction", s.plus_fraction)
                    .set("pvm.amplitude", s.amplitude)
                    .list("pvm.band", &[s.band.0, s.band.1]);
                if let Some(t) = s.t_end {
                    w.set("pvm.t_end", t);
                }
                w.set("pvm.slabs", s.slabs).set("pvm.cells", s.cells).set("pvm.batches", s.batches);
            }
            ExperimentSpec::HyperbolicityScan(s) => {
                w.list("hyperbolicity.kappas", &s.kappas)
                    .set("hyperbolicity.n_c", s.n_c)
                    .set("hyperbolicity.n_x", s.n_x)
                    .set("hyperbolicity.tuples", s.tuples);
            }
            ExperimentSpec::PositivityScan(s) => {
                w.list("positivity.kappas", &s.kappas).list("positivity.radii", &s.radii);
            }
            ExperimentSpec::ReversalPhase(s) => {
                w.set("reversal.lambda0", s.lambda0)
                    .set("reversal.lambda1", s.lambda1)
                    .set("reversal.s_below", s.s_below)
                    .set("reversal.s_above", s.s_above)
                    .set("reversal.trials", s.trials)
                    .set("reversal.t_end", s.t_end)
                    .set("reversal.dt", s.dt);
            }
        }
        w.finish()
    }

    pub fn run(&self) -> Result<ComparisonReport, HarnessError> {
        match &self.spec {
            ExperimentSpec::Equilibrium(s) => run_equilibrium_experiment(s, self.seed),
            ExperimentSpec::OrderParameter(s) => run_order_parameter_experiment(s, self.seed),
            ExperimentSpec::ParticleVsMacro(s) => Ok(run_particle_vs_macro(s, self.seed)?.report),
            ExperimentSpec::HyperbolicityScan(s) => Ok(run_hyperbolicity_scan(s, self.seed)?.0),
            ExperimentSpec::PositivityScan(s) => run_positivity_scan(s),
            ExperimentSpec::ReversalPhase(s) => run_reversal_phase(s, self.seed),
        }
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(text.parse()?)
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.display().to_string(),
        source,
    })
}

/// Write `report.csv`, `summary.txt` and `manifest.cfg` into `dir`.
pub fn write_outputs(dir: &Path, config: &ExperimentConfig, report: &ComparisonReport) -> Result<(), HarnessError> {
    create_dir(dir)?;
    write_file(&dir.join("report.csv"), &report.to_csv())?;
    write_file(&dir.join("summary.txt"), &report.summary())?;
    write_file(&dir.join("manifest.cfg"), &config.to_manifest())
}

/// Run `config` and write its outputs to `dir`, falling back to
/// `experiment.output` and then to `./<kind>`.
pub fn run_and_write(config: &ExperimentConfig, dir: Option<&Path>) -> Result<(ComparisonReport, PathBuf), HarnessError> {
    let dir = dir
        .map(Path::to_path_buf)
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from(config.spec.kind().name()));
    let report = config.run()?;
    write_outputs(&dir, config, &report)?;
    Ok((report, dir))
}
