use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigError, Format, Problem, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "pcyl", version, about = "Eigenvalues and resonances of perturbed cylinders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Lowest Dirichlet eigenvalue on the configured interval.
    Eig,
    /// Resonance of the radiating problem.
    Res,
    /// Reflection coefficient over a frequency band.
    Scatter,
    /// Finite-difference mesh-convergence study.
    RefFd,
    /// Resonances for the ten tabulated indentation depths.
    Table1,
    /// Gap between eigenvalue and resonance for the ten tabulated distances from the critical depth.
    Table2,
    /// Eigenvalue and resonance series over the configured depths, with an exponent fit.
    Sweep,
}

impl From<Command> for Problem {
    fn from(c: Command) -> Self {
        match c {
            Command::Eig => Problem::Eig,
            Command::Res => Problem::Res,
            Command::Scatter => Problem::Scatter,
            Command::RefFd => Problem::RefFd,
            Command::Table1 => Problem::Table1,
            Command::Table2 => Problem::Table2,
            Command::Sweep => Problem::Sweep,
        }
    }
}

/// Flags that take precedence over the configuration file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Indentation centre; defaults to 2.0.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Fixed number of transverse modes.
    #[arg(long, global = true, conflicts_with = "adaptive")]
    pub modes: Option<usize>,
    /// Increase the number of modes until ω changes by at most TOL.
    #[arg(long, global = true, value_name = "TOL")]
    pub adaptive: Option<f64>,
    /// Truncation point of the radiating domain; defaults to 5.4.
    #[arg(long, global = true, value_name = "X")]
    pub truncate_x: Option<f64>,
    /// Radius of the first contour in the λ-plane.
    #[arg(long, global = true)]
    pub contour_r0: Option<f64>,
    /// Final contour radius; defaults to 1e-4.
    #[arg(long, global = true)]
    pub target_r: Option<f64>,
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

impl Cli {
    /// Loads the configuration file, if any, and applies the subcommand and flags on top.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = match &self.overrides.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(c) = self.command {
            cfg.problem = Some(c.into());
        }
        let o = &self.overrides;
        if let Some(v) = o.alpha {
            cfg.profile.alpha = Some(v);
        }
        if let Some(v) = o.gamma {
            cfg.profile.gamma = v;
        }
        if let Some(v) = o.modes {
            cfg.modes.n_modes = Some(v);
        }
        if let Some(v) = o.adaptive {
            cfg.modes.n_modes = None;
            cfg.modes.adaptive_tol = v;
        }
        if let Some(v) = o.truncate_x {
            cfg.domain.truncate_x = v;
        }
        if let Some(v) = o.contour_r0 {
            cfg.tolerances.contour_r0 = v;
        }
        if let Some(v) = o.target_r {
            cfg.tolerances.target_r = v;
        }
        if let Some(v) = &o.out {
            cfg.output.path = Some(v.clone());
        }
        if let Some(v) = o.format {
            cfg.output.format = v;
        }
        Ok(cfg)
    }
}
