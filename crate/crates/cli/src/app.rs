//! Argument parsing and dispatch.

use std::path::PathBuf;
use std::sync::atomic::AtomicBool;

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::sweep;

#[derive(Debug, Parser)]
#[command(name = "rotolab", version, about = "Rotopulsator experiments on the unit 3-sphere")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate the full equations of motion.
    Simulate,
    /// Integrate the reduced fiber system.
    Reduce,
    /// Run every check on a shape and report a verdict.
    Verify,
    /// Decide whether positive masses satisfy the criterion.
    SolveMasses,
    /// Evaluate the mass solver over a grid of angle values.
    Sweep,
    /// Triangle rigidity, double-root identities and basis independence.
    CheckLemmas,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment file (TOML, or JSON with a .json extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides output.dir.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Comma-separated r values for criterion reports and the mass solver.
    #[arg(long, global = true, value_delimiter = ',')]
    pub r_grid: Option<Vec<f64>>,
    /// Angular clustering tolerance for polygon detection
    #[arg(long, global = true)]
    pub tol_angle: Option<f64>,
    /// Largest |A m| that counts as feasible
    #[arg(long, global = true)]
    pub tol_feas: Option<f64>,
    /// Smallest admissible mass, as a fraction of the total
    #[arg(long, global = true)]
    pub tol_mass_floor: Option<f64>,
    /// Relative singular-value threshold for numerical rank
    #[arg(long, global = true)]
    pub tol_rank: Option<f64>,
    /// Criterion violation allowed during reduced runs, per unit mass
    #[arg(long, global = true)]
    pub tol_criterion: Option<f64>,
    /// Pair denominators at or below this are singular
    #[arg(long, global = true)]
    pub tol_sing: Option<f64>,
    /// Relative error tolerance of the integrators
    #[arg(long, global = true)]
    pub tol_rtol: Option<f64>,
    /// Absolute error tolerance of the integrators
    #[arg(long, global = true)]
    pub tol_atol: Option<f64>,
}

impl Common {
    /// Folds command-line overrides into the config and re-validates it.
    pub fn apply(&self, mut cfg: ExperimentConfig) -> CliResult<ExperimentConfig> {
        let an = &mut cfg.analysis;
        if let Some(g) = &self.r_grid {
            an.r_grid = Some(g.clone());
        }
        for (flag, slot) in [
            (self.tol_angle, &mut an.angle_tol),
            (self.tol_feas, &mut an.feas_tol),
            (self.tol_mass_floor, &mut an.mass_floor),
            (self.tol_rank, &mut an.rank_tol),
            (self.tol_criterion, &mut an.criterion_tol),
            (self.tol_sing, &mut an.eps_sing),
        ] {
            if let Some(v) = flag {
                *slot = v;
            }
        }
        if self.tol_rtol.is_some() {
            cfg.integrator.rtol = self.tol_rtol;
        }
        if self.tol_atol.is_some() {
            cfg.integrator.atol = self.tol_atol;
        }
        if let Some(dir) = &self.out {
            cfg.output.dir = Some(dir.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(cli: &Cli, interrupt: &AtomicBool) -> CliResult<()> {
    let path = cli.common.config.as_ref().ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let cfg = cli.common.apply(ExperimentConfig::load(path)?)?;
    let out = commands::default_out_dir(&cfg);
    match cli.command {
        Command::Simulate => commands::simulate(&cfg, &out).map(drop),
        Command::Reduce => commands::reduce(&cfg, &out).map(drop),
        Command::Verify => commands::verify(&cfg, &out).map(drop),
        Command::SolveMasses => commands::solve(&cfg, &out).map(drop),
        Command::Sweep => sweep::sweep(&cfg, &out, cli.common.threads, interrupt).map(drop),
        Command::CheckLemmas => commands::check_lemmas(&cfg, &out).map(drop),
    }
}
