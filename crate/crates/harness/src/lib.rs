//! Validation experiments tying the particle model, the kinetic
//! coefficients and the macroscopic solver together.

pub mod config;
pub mod equilibrium;
pub mod golden;
pub mod pvm;
pub mod report;
pub mod runner;
pub mod scans;

use thiserror::Error;

use nematic_core::coefficients::CoefficientError;
use nematic_core::gci::GciError;
use nematic_core::gvm::GvmError;
use nematic_core::hyperbolicity::HyperbolicityError;
use nematic_core::macro1d::MacroError;
use nematic_core::numerics::NumericsError;
use nematic_core::particles::ParticleError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
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
    Particles(#[from] ParticleError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("experiment setup: {0}")]
    Setup(String),
    #[error("I/O on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}
