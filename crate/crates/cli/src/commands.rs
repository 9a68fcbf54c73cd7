//! The subcommands. Each one returns its report and writes its files under the
//! output directory.

use std::path::{Path, PathBuf};

use rotolab_core::analysis::{self, CancellationSignature};
use rotolab_core::solver::default_grid;
use rotolab_core::{
    criterion_residuals, embed, integrate, integrate_reduced, lemma1_residuals, lemma4_residuals,
    CriterionReport, FeasibilityResult, IntegratorOptions, Lemma1Residuals, Lemma4Report,
    ReducedOptions, ReducedTrajectory, RotopulsatorShape, SignatureOptions, SystemState, TheoremVerdict,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, MassRule};
use crate::error::{CliError, CliResult};
use crate::table::{reduced_table, trajectory_table, write_json_file, write_table_file};

/// Either a value or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome<T> {
    Ok(T),
    Error(String),
}

impl<T> From<rotolab_core::Result<T>> for Outcome<T> {
    fn from(r: rotolab_core::Result<T>) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => Outcome::Error(e.to_string()),
        }
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Shape with concrete masses, solving for them when the config asks to.
/// Returns the solver result alongside when it ran.
fn resolve_shape(cfg: &ExperimentConfig) -> CliResult<(Option<RotopulsatorShape>, Option<FeasibilityResult>)> {
    if cfg.mass_rule()? != MassRule::Solve {
        return Ok((cfg.shape()?, None));
    }
    let (a, b) = cfg.angles()?;
    let res = rotolab_core::solve_masses(&a, &b, &cfg.analysis.solver_options())?;
    let shape = match &res.masses {
        Some(m) => Some(RotopulsatorShape::new(a, b, m.clone())?),
        None => None,
    };
    Ok((shape, Some(res)))
}

fn require_shape(cfg: &ExperimentConfig) -> CliResult<RotopulsatorShape> {
    match resolve_shape(cfg)? {
        (Some(s), _) => Ok(s),
        (None, Some(res)) => Err(CliError::Config(format!(
            "shape.masses = \"solve\": no admissible masses ({:?}, residual {:e})",
            res.status, res.residual_norm
        ))),
        (None, None) => Err(CliError::Config("missing [shape] section".into())),
    }
}

fn reduced_options(cfg: &ExperimentConfig) -> ReducedOptions {
    let d = ReducedOptions::default();
    ReducedOptions {
        rtol: cfg.integrator.rtol.unwrap_or(d.rtol),
        atol: cfg.integrator.atol.unwrap_or(d.atol),
        dt_min: cfg.integrator.dt_min,
        criterion_tol: cfg.analysis.criterion_tol,
    }
}

fn integrator_options(cfg: &ExperimentConfig) -> IntegratorOptions {
    let d = IntegratorOptions::default();
    let it = &cfg.integrator;
    IntegratorOptions {
        rtol: it.rtol.unwrap_or(d.rtol),
        atol: it.atol.unwrap_or(d.atol),
        dt_min: it.dt_min,
        fixed_step: it.fixed_step,
        sample_interval: it.sample_interval,
        eps_sing: cfg.analysis.eps_sing,
        project: it.project,
        ..d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub bodies: usize,
    pub samples: usize,
    pub steps: usize,
    pub final_t: f64,
    pub max_drift: f64,
    pub angular_momentum_variation: f64,
}

pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> CliResult<SimulateSummary> {
    let state: SystemState = match cfg.explicit_state()? {
        Some(s) => s,
        None => embed(&require_shape(cfg)?, &cfg.fiber()?)?,
    };
    let tr = integrate(&state, cfg.integrator.dt, cfg.integrator.t_end, &integrator_options(cfg))?;
    let summary = SimulateSummary {
        bodies: state.bodies.len(),
        samples: tr.samples.len(),
        steps: tr.steps,
        final_t: tr.final_state().t,
        max_drift: tr.max_drift,
        angular_momentum_variation: tr.angular_momentum_variation(),
    };
    ensure_dir(out)?;
    write_table_file(&out.join("trajectory.csv"), &trajectory_table(&tr))?;
    write_json_file(&out.join("simulate.json"), "simulate", cfg, &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReduceSummary {
    pub masses: Vec<f64>,
    pub samples: usize,
    pub steps: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub max_delta_spread: f64,
    pub lemma1: Outcome<Lemma1Residuals>,
}

fn run_reduced(cfg: &ExperimentConfig, shape: &RotopulsatorShape) -> CliResult<ReducedTrajectory> {
    Ok(integrate_reduced(shape, &cfg.fiber()?, cfg.integrator.dt, cfg.integrator.t_end, &reduced_options(cfg))?)
}

pub fn reduce(cfg: &ExperimentConfig, out: &Path) -> CliResult<ReduceSummary> {
    let shape = require_shape(cfg)?;
    let tr = run_reduced(cfg, &shape)?;
    let rs = tr.samples.iter().map(|s| s.fiber.r());
    let summary = ReduceSummary {
        masses: shape.masses().to_vec(),
        samples: tr.samples.len(),
        steps: tr.steps,
        r_min: rs.clone().fold(f64::INFINITY, f64::min),
        r_max: rs.fold(f64::NEG_INFINITY, f64::max),
        max_delta_spread: tr.max_delta_spread,
        lemma1: lemma1_residuals(&tr.samples).into(),
    };
    ensure_dir(out)?;
    write_table_file(&out.join("reduced.csv"), &reduced_table(&tr))?;
    write_json_file(&out.join("reduce.json"), "reduce", cfg, &summary)?;
    Ok(summary)
}

pub fn solve(cfg: &ExperimentConfig, out: &Path) -> CliResult<FeasibilityResult> {
    let (a, b) = cfg.angles()?;
    let res = rotolab_core::solve_masses(&a, &b, &cfg.analysis.solver_options())?;
    ensure_dir(out)?;
    write_json_file(&out.join("solve.json"), "solve-masses", cfg, &res)?;
    Ok(res)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripleEntry<T> {
    pub triple: (usize, usize, usize),
    pub outcome: Outcome<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UltimateResiduals {
    pub res6: f64,
    pub res7: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignatureSummary {
    pub classes: usize,
    pub class_sizes: Vec<usize>,
    pub independence_rank: usize,
    pub full_rank: bool,
    pub singular_values: Vec<f64>,
}

impl From<&CancellationSignature> for SignatureSummary {
    fn from(s: &CancellationSignature) -> Self {
        SignatureSummary {
            classes: s.classes.len(),
            class_sizes: s.classes.iter().map(|c| c.pairs.len()).collect(),
            independence_rank: s.independence_rank,
            full_rank: s.independence_rank == s.classes.len(),
            singular_values: s.singular_values.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub lemma1: Option<Outcome<Lemma1Residuals>>,
    pub lemma4_grid: Vec<f64>,
    pub lemma4_max_residual: Option<f64>,
    pub lemma4: Vec<TripleEntry<Lemma4Report>>,
    pub ultimate: Vec<TripleEntry<UltimateResiduals>>,
    pub signature: Outcome<SignatureSummary>,
}

fn lemma_report(cfg: &ExperimentConfig, shape: &RotopulsatorShape, reduced: Option<&ReducedTrajectory>) -> LemmaReport {
    let n = shape.n();
    let grid = cfg.analysis.lemma4_grid();
    let mut lemma4 = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                lemma4.push(TripleEntry { triple: (i, j, k), outcome: lemma4_residuals(shape, (i, j, k), &grid).into() });
            }
        }
    }
    let lemma4_max_residual = lemma4
        .iter()
        .filter_map(|e| match &e.outcome {
            Outcome::Ok(r) => Some(r.max_residual()),
            Outcome::Error(_) => None,
        })
        .reduce(f64::max);
    let mut ultimate = Vec::new();
    for j in 0..n {
        for i in 0..n {
            for k in i + 1..n {
                if i == j || k == j {
                    continue;
                }
                let outcome = analysis::ultimate_identity_check(shape, (i, j, k))
                    .map(|(res6, res7)| UltimateResiduals { res6, res7 });
                ultimate.push(TripleEntry { triple: (i, j, k), outcome: outcome.into() });
            }
        }
    }
    let sig_opts = SignatureOptions { rank_tol: cfg.analysis.rank_tol, grid: None, eps_sing: cfg.analysis.eps_sing };
    let signature = analysis::cancellation_signature(shape, &sig_opts).map(|s| SignatureSummary::from(&s)).into();
    let lemma1 = reduced.map(|tr| lemma1_residuals(&tr.samples).into());
    LemmaReport { lemma1, lemma4_grid: grid, lemma4_max_residual, lemma4, ultimate, signature }
}

pub fn check_lemmas(cfg: &ExperimentConfig, out: &Path) -> CliResult<LemmaReport> {
    let shape = require_shape(cfg)?;
    let reduced = match &cfg.fiber {
        Some(_) => Some(run_reduced(cfg, &shape)?),
        None => None,
    };
    let report = lemma_report(cfg, &shape, reduced.as_ref());
    ensure_dir(out)?;
    write_json_file(&out.join("lemmas.json"), "check-lemmas", cfg, &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub masses_source: &'static str,
    pub masses: Option<Vec<f64>>,
    pub feasibility: FeasibilityResult,
    pub criterion_grid: Vec<f64>,
    pub criterion: Option<Vec<Outcome<CriterionReport>>>,
    pub reduced_run: Option<Outcome<ReducedRunSummary>>,
    pub lemmas: Option<LemmaReport>,
    pub verdict: TheoremVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedRunSummary {
    pub samples: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub max_delta_spread: f64,
}

pub fn verify(cfg: &ExperimentConfig, out: &Path) -> CliResult<VerifyReport> {
    let (a, b) = cfg.angles()?;
    RotopulsatorShape::angles_only(&a, &b)?;
    let rule = cfg.mass_rule()?;
    let feasibility = rotolab_core::solve_masses(&a, &b, &cfg.analysis.solver_options())?;
    let shape = match rule {
        MassRule::Solve => match &feasibility.masses {
            Some(m) => Some(RotopulsatorShape::new(a.clone(), b.clone(), m.clone())?),
            None => None,
        },
        _ => cfg.shape()?,
    };
    let criterion_grid = cfg.analysis.r_grid.clone().unwrap_or_else(default_grid);

    let (criterion, reduced, lemmas) = match &shape {
        Some(shape) => {
            let criterion = criterion_grid.iter().map(|&r| criterion_residuals(shape, r).into()).collect();
            let reduced: Option<Result<ReducedTrajectory, String>> =
                cfg.fiber.as_ref().map(|_| run_reduced(cfg, shape).map_err(|e| e.to_string()));
            let ok_run = reduced.as_ref().and_then(|r| r.as_ref().ok());
            let lemmas = lemma_report(cfg, shape, ok_run);
            (Some(criterion), reduced, Some(lemmas))
        }
        None => (None, None, None),
    };
    let ok_run = reduced.as_ref().and_then(|r| r.as_ref().ok());
    let verdict_shape = match &shape {
        Some(s) => s.clone(),
        None => RotopulsatorShape::equal_masses(a, b)?,
    };
    let verdict = analysis::theorem_verdict(&verdict_shape, ok_run, cfg.analysis.angle_tol)?;
    let reduced_run = reduced.map(|r| match r {
        Ok(tr) => Outcome::Ok(ReducedRunSummary {
            samples: tr.samples.len(),
            r_min: tr.samples.iter().map(|s| s.fiber.r()).fold(f64::INFINITY, f64::min),
            r_max: tr.samples.iter().map(|s| s.fiber.r()).fold(f64::NEG_INFINITY, f64::max),
            max_delta_spread: tr.max_delta_spread,
        }),
        Err(e) => Outcome::Error(e),
    });
    let report = VerifyReport {
        masses_source: match rule {
            MassRule::Given => "given",
            MassRule::Equal => "equal",
            MassRule::Solve => "solve",
        },
        masses: shape.as_ref().map(|s| s.masses().to_vec()),
        feasibility,
        criterion_grid,
        criterion,
        reduced_run,
        lemmas,
        verdict,
    };
    ensure_dir(out)?;
    write_json_file(&out.join("verify.json"), "verify", cfg, &report)?;
    Ok(report)
}

pub fn default_out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}
