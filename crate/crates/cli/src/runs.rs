//! Standalone particle and macroscopic runs driven by flat config files.
//!
//! Particle runs read `particles.*` (as in the validation experiments),
//! `init.kappa`, `init.theta0`, `init.plus_fraction`, and `run.seed`,
//! `run.t_end`, `run.stride`, `run.slabs`.
//!
//! Macroscopic runs read `macro.kappa`, `macro.cells`, `macro.length`,
//! `macro.k_nonlocal`, `macro.lambda0`, `macro.lambda1`, `macro.cfl`,
//! `macro.t_end`, `macro.max_steps`, `macro.stride` and an initial condition
//! chosen by `init.preset`:
//!
//! | preset | keys |
//! |---|---|
//! | `uniform` | `rho_plus`, `rho_minus`, `theta` |
//! | `riemann` | `left`, `right`, `x0`, `x1`, `rho_minus`, `theta` |
//! | `sine` | `rho`, `amplitude`, `mode`, `theta` |
//! | `bands` | `background`, `amplitude`, `width`, `theta` |

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nematic_core::coefficients::coefficients_for;
use nematic_core::gvm::GvmParams;
use nematic_core::macro1d::{run, InitialCondition, RunOutput, SolverParams};
use nematic_core::numerics::RngStream;
use nematic_core::particles::{measure_fields, nematic_order, step, ParticleState, SimParams};
use nematic_harness::config::{ConfigError, ConfigWriter, RawConfig};
use nematic_harness::report::fmt_num;
use nematic_harness::runner::{parse_sim, write_sim, VERSION};
use serde_json::json;

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.cfg";

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleRun {
    pub sim: SimParams,
    pub init_kappa: f64,
    pub init_theta0: f64,
    pub plus_fraction: f64,
    pub t_end: f64,
    pub stride: usize,
    pub slabs: usize,
}

impl Default for ParticleRun {
    fn default() -> Self {
        Self {
            sim: SimParams::default(),
            init_kappa: 1.0,
            init_theta0: 0.0,
            plus_fraction: 0.5,
            t_end: 1.0,
            stride: 10,
            slabs: 10,
        }
    }
}

fn fraction(raw: &RawConfig, key: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(raw.range_error(key, format!("must lie in [0, 1] (got {v})")))
    }
}

fn positive(raw: &RawConfig, key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(raw.range_error(key, format!("must be finite and > 0 (got {v})")))
    }
}

fn at_least_one(raw: &RawConfig, key: &str, v: usize) -> Result<(), ConfigError> {
    if v >= 1 {
        Ok(())
    } else {
        Err(raw.range_error(key, "must be >= 1"))
    }
}

impl ParticleRun {
    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Self, ConfigError> {
        let mut raw: RawConfig = text.parse()?;
        let d = Self::default();
        let mut sim = parse_sim(&mut raw, d.sim)?;
        sim.seed = raw.get_or("run.seed", sim.seed)?;
        if let Some(s) = seed_override {
            sim.seed = s;
        }
        let run = Self {
            sim,
            init_kappa: raw.get_or("init.kappa", d.init_kappa)?,
            init_theta0: raw.get_or("init.theta0", d.init_theta0)?,
            plus_fraction: raw.get_or("init.plus_fraction", d.plus_fraction)?,
            t_end: raw.get_or("run.t_end", d.t_end)?,
            stride: raw.get_or("run.stride", d.stride)?,
            slabs: raw.get_or("run.slabs", d.slabs)?,
        };
        GvmParams::new(run.init_kappa, run.init_theta0).map_err(|e| raw.range_error("init.kappa", e.to_string()))?;
        fraction(&raw, "init.plus_fraction", run.plus_fraction)?;
        positive(&raw, "run.t_end", run.t_end)?;
        at_least_one(&raw, "run.stride", run.stride)?;
        at_least_one(&raw, "run.slabs", run.slabs)?;
        raw.finish()?;
        Ok(run)
    }

    pub fn to_manifest(&self) -> String {
        let mut w = ConfigWriter::default();
        w.comment(&format!(
            "nematic {VERSION} particle run manifest\nrerun with: nematic particles --config <this file>"
        ));
        write_sim(&mut w, &self.sim);
        w.set("init.kappa", self.init_kappa)
            .set("init.theta0", self.init_theta0)
            .set("init.plus_fraction", self.plus_fraction)
            .set("run.seed", self.sim.seed)
            .set("run.t_end", self.t_end)
            .set("run.stride", self.stride)
            .set("run.slabs", self.slabs);
        w.finish()
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.sim.dt - 1e-9).ceil() as usize
    }

    /// Run and return the trajectory NDJSON and the summary CSV.
    pub fn execute(&self) -> Result<(String, String), CliError> {
        let gvm = GvmParams::new(self.init_kappa, self.init_theta0)?;
        let mut rng = RngStream::new(self.sim.seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut state = ParticleState::homogeneous(&self.sim, gvm, self.plus_fraction, &mut rng);
        let mut trajectory = String::new();
        let mut summary = String::from("time,order,slab,x,count,rho_plus,rho_minus,theta_bar\n");
        let total = self.steps();
        for k in 0..=total {
            if k > 0 {
                state = step(&state, &self.sim);
            }
            if k % self.stride == 0 || k == total {
                self.record(&state, &mut trajectory, &mut summary);
            }
        }
        Ok((trajectory, summary))
    }

    fn record(&self, state: &ParticleState, trajectory: &mut String, summary: &mut String) {
        let particles: Vec<[f64; 3]> = state
            .positions
            .iter()
            .zip(&state.angles)
            .map(|(p, &t)| [p[0], p[1], t])
            .collect();
        let line = json!({ "time": state.time, "step": state.steps, "particles": particles });
        trajectory.push_str(&line.to_string());
        trajectory.push('\n');
        let order = nematic_order(&state.angles);
        for (i, slab) in measure_fields(state, &self.sim, self.slabs).iter().enumerate() {
            let theta = slab.theta_bar.map(fmt_num).unwrap_or_default();
            let _ = writeln!(
                summary,
                "{},{},{i},{},{},{},{},{theta}",
                fmt_num(state.time),
                fmt_num(order),
                fmt_num(slab.x),
                slab.count,
                fmt_num(slab.rho_plus),
                fmt_num(slab.rho_minus),
            );
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroRun {
    pub kappa: f64,
    pub cells: usize,
    pub length: f64,
    pub k_nonlocal: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub cfl: f64,
    pub t_end: f64,
    pub max_steps: Option<usize>,
    pub stride: usize,
    pub initial: InitialCondition,
}

impl Default for MacroRun {
    fn default() -> Self {
        Self {
            kappa: 2.0,
            cells: 200,
            length: 1.0,
            k_nonlocal: 0.0,
            lambda0: 0.0,
            lambda1: 0.0,
            cfl: 0.45,
            t_end: 1.0,
            max_steps: None,
            stride: 100,
            initial: InitialCondition::Uniform {
                rho_plus: 1.0,
                rho_minus: 1.0,
                theta: 0.0,
            },
        }
    }
}

fn preset_name(ic: &InitialCondition) -> &'static str {
    match ic {
        InitialCondition::Uniform { .. } => "uniform",
        InitialCondition::Riemann { .. } => "riemann",
        InitialCondition::SinePerturbation { .. } => "sine",
        InitialCondition::Bands { .. } => "bands",
    }
}

fn parse_initial(raw: &mut RawConfig) -> Result<InitialCondition, ConfigError> {
    let preset: String = raw.get_or("init.preset", "uniform".to_string())?;
    let theta = raw.get_or("init.theta", 0.0)?;
    Ok(match preset.as_str() {
        "uniform" => InitialCondition::Uniform {
            rho_plus: raw.get_or("init.rho_plus", 1.0)?,
            rho_minus: raw.get_or("init.rho_minus", 1.0)?,
            theta,
        },
        "riemann" => InitialCondition::Riemann {
            left: raw.get_or("init.left", 0.5)?,
            right: raw.get_or("init.right", 1.0)?,
            x0: raw.get_or("init.x0", 0.25)?,
            x1: raw.get_or("init.x1", 0.75)?,
            rho_minus: raw.get_or("init.rho_minus", 0.0)?,
            theta,
        },
        "sine" => InitialCondition::SinePerturbation {
            rho: raw.get_or("init.rho", 1.0)?,
            amplitude: raw.get_or("init.amplitude", 0.01)?,
            mode: raw.get_or("init.mode", 1)?,
            theta,
        },
        "bands" => InitialCondition::Bands {
            background: raw.get_or("init.background", 0.5)?,
            amplitude: raw.get_or("init.amplitude", 1.0)?,
            width: raw.get_or("init.width", 0.1)?,
            theta,
        },
        other => {
            return Err(raw.range_error(
                "init.preset",
                format!("preset must be one of uniform, riemann, sine, bands (got `{other}`)"),
            ))
        }
    })
}

fn write_initial(w: &mut ConfigWriter, ic: &InitialCondition) {
    w.set("init.preset", preset_name(ic));
    match *ic {
        InitialCondition::Uniform {
            rho_plus,
            rho_minus,
            theta,
        } => w
            .set("init.rho_plus", rho_plus)
            .set("init.rho_minus", rho_minus)
            .set("init.theta", theta),
        InitialCondition::Riemann {
            left,
            right,
            x0,
            x1,
            rho_minus,
            theta,
        } => w
            .set("init.left", left)
            .set("init.right", right)
            .set("init.x0", x0)
            .set("init.x1", x1)
            .set("init.rho_minus", rho_minus)
            .set("init.theta", theta),
        InitialCondition::SinePerturbation {
            rho,
            amplitude,
            mode,
            theta,
        } => w
            .set("init.rho", rho)
            .set("init.amplitude", amplitude)
            .set("init.mode", mode)
            .set("init.theta", theta),
        InitialCondition::Bands {
            background,
            amplitude,
            width,
            theta,
        } => w
            .set("init.background", background)
            .set("init.amplitude", amplitude)
            .set("init.width", width)
            .set("init.theta", theta),
    };
}

const SOLVER_FIELDS: &[&str] = &["cfl", "k_nonlocal", "lambda0", "lambda1", "t_end", "stride"];

impl MacroRun {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw: RawConfig = text.parse()?;
        let d = Self::default();
        let run = Self {
            kappa: raw.get_or("macro.kappa", d.kappa)?,
            cells: raw.get_or("macro.cells", d.cells)?,
            length: raw.get_or("macro.length", d.length)?,
            k_nonlocal: raw.get_or("macro.k_nonlocal", d.k_nonlocal)?,
            lambda0: raw.get_or("macro.lambda0", d.lambda0)?,
            lambda1: raw.get_or("macro.lambda1", d.lambda1)?,
            cfl: raw.get_or("macro.cfl", d.cfl)?,
            t_end: raw.get_or("macro.t_end", d.t_end)?,
            max_steps: raw.get("macro.max_steps")?,
            stride: raw.get_or("macro.stride", d.stride)?,
            initial: parse_initial(&mut raw)?,
        };
        GvmParams::new(run.kappa, 0.0).map_err(|e| raw.range_error("macro.kappa", e.to_string()))?;
        at_least_one(&raw, "macro.cells", run.cells)?;
        positive(&raw, "macro.length", run.length)?;
        let mut probe = SolverParams::new(coefficients_placeholder(), run.t_end);
        run.apply(&mut probe);
        probe
            .validate()
            .map_err(|e| raw.attribute("macro", SOLVER_FIELDS, e.to_string()))?;
        run.initial
            .build(run.cells, run.length)
            .map_err(|e| raw.attribute("init", &["rho_plus", "rho_minus", "theta"], e.to_string()))?;
        raw.finish()?;
        Ok(run)
    }

    fn apply(&self, p: &mut SolverParams) {
        p.k_nonlocal = self.k_nonlocal;
        p.lambda0 = self.lambda0;
        p.lambda1 = self.lambda1;
        p.cfl = self.cfl;
        p.t_end = self.t_end;
        p.max_steps = self.max_steps;
        p.snapshot_stride = self.stride;
    }

    pub fn to_manifest(&self) -> String {
        let mut w = ConfigWriter::default();
        w.comment(&format!(
            "nematic {VERSION} macroscopic run manifest\nrerun with: nematic macro --config <this file>"
        ));
        w.set("macro.kappa", self.kappa)
            .set("macro.cells", self.cells)
            .set("macro.length", self.length)
            .set("macro.k_nonlocal", self.k_nonlocal)
            .set("macro.lambda0", self.lambda0)
            .set("macro.lambda1", self.lambda1)
            .set("macro.cfl", self.cfl)
            .set("macro.t_end", self.t_end);
        if let Some(m) = self.max_steps {
            w.set("macro.max_steps", m);
        }
        w.set("macro.stride", self.stride);
        write_initial(&mut w, &self.initial);
        w.finish()
    }

    pub fn execute(&self) -> Result<RunOutput, CliError> {
        let mut params = SolverParams::new(coefficients_for(self.kappa)?, self.t_end);
        self.apply(&mut params);
        let initial = self.initial.build(self.cells, self.length)?;
        Ok(run(&initial, &params)?)
    }
}

/// Only the scalar solver settings are checked while parsing.
fn coefficients_placeholder() -> nematic_core::coefficients::CoefficientSet {
    nematic_core::coefficients::CoefficientSet {
        kappa: 1.0,
        d1: 0.5,
        d2: 0.5,
        mu: 0.5,
        d3: 0.5,
        diffusion_d: 0.0,
        quad_error: 0.0,
    }
}

pub fn snapshots_csv(out: &RunOutput) -> String {
    let mut s = String::from("time,x,rho_plus,rho_minus,theta_bar\n");
    for snap in &out.snapshots {
        for (i, x) in snap.x_centers().iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                fmt_num(snap.time),
                fmt_num(*x),
                fmt_num(snap.rho_plus[i]),
                fmt_num(snap.rho_minus[i]),
                fmt_num(snap.theta_bar[i]),
            );
        }
    }
    s
}

pub fn conserved_csv(out: &RunOutput) -> String {
    let mut s = String::from("step,time,mass,mass_plus,mass_minus\n");
    for r in &out.conserved {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.step,
            fmt_num(r.time),
            fmt_num(r.mass),
            fmt_num(r.mass_plus),
            fmt_num(r.mass_minus),
        );
    }
    s
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nematic_harness::config::ConfigErrorKind;

    #[test]
    fn particle_manifest_round_trips() {
        let run = ParticleRun::parse("particles.n = 20\nrun.seed = 9\ninit.kappa = 3\n", None).unwrap();
        assert_eq!(run.sim.n, 20);
        assert_eq!(run.sim.seed, 9);
        assert_eq!(ParticleRun::parse(&run.to_manifest(), None).unwrap(), run);
        assert_eq!(ParticleRun::parse("", Some(4)).unwrap().sim.seed, 4);
    }

    #[test]
    fn particle_run_is_reproducible() {
        let run = ParticleRun {
            sim: SimParams {
                n: 30,
                dt: 0.05,
                ..SimParams::default()
            },
            t_end: 0.2,
            stride: 2,
            slabs: 3,
            ..ParticleRun::default()
        };
        let (traj, summary) = run.execute().unwrap();
        assert_eq!(traj.lines().count(), 3);
        assert_eq!(summary.lines().count(), 1 + 3 * 3);
        let first: serde_json::Value = serde_json::from_str(traj.lines().next().unwrap()).unwrap();
        assert_eq!(first["particles"].as_array().unwrap().len(), 30);
        assert_eq!(run.execute().unwrap(), (traj, summary));
    }

    #[test]
    fn macro_presets_round_trip() {
        for preset in ["uniform", "riemann", "sine", "bands"] {
            let run = MacroRun::parse(&format!("init.preset = {preset}\nmacro.cells = 16\n")).unwrap();
            assert_eq!(preset_name(&run.initial), preset);
            assert_eq!(MacroRun::parse(&run.to_manifest()).unwrap(), run);
        }
    }

    #[test]
    fn macro_errors_name_their_lines() {
        let e = MacroRun::parse("macro.cells = 8\nmacro.cfl = 1.5\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(matches!(e.kind, ConfigErrorKind::Range { ref key, .. } if key == "macro.cfl"));
        let e = MacroRun::parse("macro.kappa = -1\n").unwrap_err();
        assert!(e.to_string().contains("GvmParams"), "{e}");
        let e = MacroRun::parse("init.preset = waves\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        assert!(MacroRun::parse("init.rho = 1\n").is_err());
    }

    #[test]
    fn macro_outputs_have_one_row_per_cell() {
        let run = MacroRun::parse("macro.cells = 10\nmacro.max_steps = 5\nmacro.stride = 2\n").unwrap();
        let out = run.execute().unwrap();
        let snaps = snapshots_csv(&out);
        assert_eq!(snaps.lines().count(), 1 + 10 * out.snapshots.len());
        assert_eq!(conserved_csv(&out).lines().count(), 1 + 6);
    }
}
