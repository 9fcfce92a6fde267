//! `nematic`: coefficients, GCI tables, hyperbolicity scans, particle and
//! macroscopic runs, and validation experiments.

mod runs;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nematic_core::coefficients::{coefficients_for, interaction_k, CoefficientCache, CoefficientError};
use nematic_core::gci::{GciError, GciTable, DEFAULT_GCI_GRID};
use nematic_core::gvm::GvmError;
use nematic_core::hyperbolicity::{hyperbolicity_scan, HyperbolicityError};
use nematic_core::macro1d::MacroError;
use nematic_harness::config::{ConfigError, ConfigWriter};
use nematic_harness::golden::emit_golden_tables;
use nematic_harness::report::fmt_num;
use nematic_harness::runner::{run_and_write, ExperimentConfig, ExperimentKind, ExperimentSpec, VERSION};
use nematic_harness::HarnessError;
use serde_json::json;
use thiserror::Error;

use runs::{conserved_csv, create_dir, snapshots_csv, write, MacroRun, ParticleRun, MANIFEST_FILE};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config { path: String, source: ConfigError },
    #[error(transparent)]
    Gvm(#[from] GvmError),
    #[error(transparent)]
    Gci(#[from] GciError),
    #[error(transparent)]
    Coefficients(#[from] CoefficientError),
    #[error(transparent)]
    Hyperbolicity(#[from] HyperbolicityError),
    #[error(transparent)]
    Macro(#[from] MacroError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("I/O on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "nematic", version, about = "Nematic alignment with reversals: kinetic coefficients, particle and macroscopic solvers", arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    global: GlobalOptions,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOptions {
    /// Output directory; for `gci-table`, the output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed override for stochastic commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report written files and progress on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the kinetic coefficients at one concentration.
    Coeffs {
        #[arg(long, allow_negative_numbers = true)]
        kappa: f64,
        /// Interaction radius; also prints the non-local constant k.
        #[arg(long, allow_negative_numbers = true)]
        r: Option<f64>,
        /// Coefficient cache CSV, read first and appended on a miss.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Write the GCI as `theta,g` CSV.
    GciTable {
        #[arg(long, allow_negative_numbers = true)]
        kappa: f64,
        #[arg(long, default_value_t = DEFAULT_GCI_GRID)]
        grid: usize,
    },
    /// Scan the discriminant on an N x N grid and emit NDJSON.
    Hyperbolicity {
        #[arg(long, allow_negative_numbers = true)]
        kappa: f64,
        #[arg(long, default_value_t = 201)]
        grid: usize,
    },
    /// Run the particle model from a config file.
    Particles {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the macroscopic solver from a config file.
    Macro {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a validation experiment; exits nonzero if any row fails.
    Validate {
        #[arg(long)]
        experiment: String,
        /// Experiment config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write the golden coefficient tables.
    Golden {
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 2.0, 10.0])]
        kappas: Vec<f64>,
    },
}

fn read_config(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn config_error(path: &Path) -> impl FnOnce(ConfigError) -> CliError + '_ {
    move |source| CliError::Config {
        path: path.display().to_string(),
        source,
    }
}

fn out_dir(global: &GlobalOptions, fallback: &str) -> PathBuf {
    global.out.clone().unwrap_or_else(|| PathBuf::from(fallback))
}

fn announce(global: &GlobalOptions, path: &Path) {
    if global.verbose > 0 {
        eprintln!("wrote {}", path.display());
    }
}

fn coeffs(kappa: f64, r: Option<f64>, cache: Option<&Path>) -> Result<String, CliError> {
    let set = match cache {
        Some(path) => CoefficientCache::load(path)?.get_or_compute(path, kappa)?,
        None => coefficients_for(kappa)?,
    };
    let mut rows = vec![
        ("kappa", set.kappa),
        ("d1", set.d1),
        ("d2", set.d2),
        ("mu", set.mu),
        ("d3", set.d3),
        ("diffusion_D", set.diffusion_d),
        ("quad_error", set.quad_error),
    ];
    if let Some(r) = r {
        rows.push(("r", r));
        rows.push(("k", interaction_k(r)?.k));
    }
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    Ok(rows
        .iter()
        .map(|(k, v)| format!("{k:<width$} = {}\n", fmt_num(*v)))
        .collect())
}

fn gci_csv(kappa: f64, grid: usize) -> Result<String, CliError> {
    let table = GciTable::build(kappa, grid)?;
    let mut s = String::from("theta,g\n");
    for (t, g) in table.grid().iter().zip(table.values()) {
        let _ = writeln!(s, "{},{}", fmt_num(*t), fmt_num(*g));
    }
    Ok(s)
}

fn gci_manifest(kappa: f64, grid: usize) -> String {
    let mut w = ConfigWriter::default();
    w.comment(&format!(
        "nematic {VERSION} GCI table manifest\nrerun with: nematic gci-table --kappa {kappa} --grid {grid} --out <file>"
    ));
    w.set("gci.kappa", kappa).set("gci.grid", grid);
    w.finish()
}

fn hyperbolicity_ndjson(kappa: f64, grid: usize) -> Result<String, CliError> {
    let scan = hyperbolicity_scan(&coefficients_for(kappa)?, grid, grid)?;
    let mut s = String::new();
    for row in &scan.rows {
        let rec = json!({
            "record": "row",
            "c": row.c,
            "min_discriminant": row.min_discriminant,
            "argmin_x": row.argmin_x,
            "max_discriminant": row.max_discriminant,
        });
        let _ = writeln!(s, "{rec}");
    }
    let summary = json!({
        "record": "summary",
        "kappa": scan.kappa,
        "d2_hat": scan.d2_hat,
        "mu_hat": scan.mu_hat,
        "n_c": scan.n_c,
        "n_x": scan.n_x,
        "min_discriminant": scan.min_discriminant,
        "argmin": [scan.argmin.0, scan.argmin.1],
        "hyperbolic": scan.is_hyperbolic(),
    });
    let _ = writeln!(s, "{summary}");
    Ok(s)
}

fn particles(global: &GlobalOptions, config: &Path) -> Result<PathBuf, CliError> {
    let run = ParticleRun::parse(&read_config(config)?, global.seed).map_err(config_error(config))?;
    let dir = out_dir(global, "particles");
    create_dir(&dir)?;
    let (trajectory, summary) = run.execute()?;
    for (name, body) in [
        ("trajectory.ndjson", trajectory),
        ("summary.csv", summary),
        (MANIFEST_FILE, run.to_manifest()),
    ] {
        let path = dir.join(name);
        write(&path, &body)?;
        announce(global, &path);
    }
    Ok(dir)
}

fn macro_run(global: &GlobalOptions, config: &Path) -> Result<PathBuf, CliError> {
    let run = MacroRun::parse(&read_config(config)?).map_err(config_error(config))?;
    let dir = out_dir(global, "macro");
    create_dir(&dir)?;
    let out = run.execute()?;
    for (name, body) in [
        ("snapshots.csv", snapshots_csv(&out)),
        ("conserved.csv", conserved_csv(&out)),
        (MANIFEST_FILE, run.to_manifest()),
    ] {
        let path = dir.join(name);
        write(&path, &body)?;
        announce(global, &path);
    }
    Ok(dir)
}

fn validate(global: &GlobalOptions, experiment: &str, config: Option<&Path>) -> Result<bool, CliError> {
    let kind = ExperimentKind::parse(experiment).ok_or_else(|| {
        let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
        CliError::Usage(format!(
            "unknown experiment `{experiment}`; expected one of {}",
            names.join(", ")
        ))
    })?;
    let mut cfg = match config {
        Some(path) => ExperimentConfig::parse_as(&read_config(path)?, kind).map_err(config_error(path))?,
        None => ExperimentConfig::new(ExperimentSpec::defaults(kind), 0),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    let (report, dir) = run_and_write(&cfg, global.out.as_deref())?;
    print!("{}", report.summary());
    announce(global, &dir);
    Ok(report.all_pass())
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    let global = &cli.global;
    match cli.command {
        Command::Coeffs { kappa, r, cache } => print!("{}", coeffs(kappa, r, cache.as_deref())?),
        Command::GciTable { kappa, grid } => {
            let csv = gci_csv(kappa, grid)?;
            match &global.out {
                Some(path) => {
                    write(path, &csv)?;
                    let manifest = path.with_extension("manifest.cfg");
                    write(&manifest, &gci_manifest(kappa, grid))?;
                    announce(global, path);
                    announce(global, &manifest);
                }
                None => std::io::stdout().write_all(csv.as_bytes()).map_err(|source| CliError::Io {
                    path: "stdout".into(),
                    source,
                })?,
            }
        }
        Command::Hyperbolicity { kappa, grid } => print!("{}", hyperbolicity_ndjson(kappa, grid)?),
        Command::Particles { config } => {
            particles(global, &config)?;
        }
        Command::Macro { config } => {
            macro_run(global, &config)?;
        }
        Command::Validate { experiment, config } => return validate(global, &experiment, config.as_deref()),
        Command::Golden { kappas } => {
            let dir = out_dir(global, "golden");
            let tables = emit_golden_tables(&kappas, &dir)?;
            for f in &tables.files {
                announce(global, f);
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.global.verbose > 1 {
        eprintln!("nematic {VERSION}");
    }
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
