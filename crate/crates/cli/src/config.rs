//! Experiment configuration: TOML by default, JSON when the file ends in `.json`.

use std::path::{Path, PathBuf};

use rotolab_core::analysis::{DEFAULT_ANGLE_TOL, DEFAULT_RANK_TOL};
use rotolab_core::dynamics::DEFAULT_EPS_SING;
use rotolab_core::rotopulse::DEFAULT_CRITERION_TOL;
use rotolab_core::solver::{DEFAULT_FEAS_TOL, DEFAULT_MASS_FLOOR};
use rotolab_core::{Body, CurvatureSign, FiberState, RotopulsatorShape, SolverOptions, SystemState, Vec4};
use serde::{Deserialize, Serialize};

use crate::angle::Angle;
use crate::error::{CliError, CliResult};

/// Upper bound on the number of sweep cells.
pub const MAX_SWEEP_CELLS: usize = 1_000_000;

/// Allowed violation of the sphere constraints in an explicit initial state.
const STATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bodies: Vec<BodyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber: Option<FiberConfig>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    /// Where files go does not affect results, so it is left out of the config echo.
    #[serde(default, skip_serializing)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub alphas: Vec<Angle>,
    pub betas: Vec<Angle>,
    /// A list of masses, `"equal"` (the default) or `"solve"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masses: Option<Masses>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Masses {
    Values(Vec<f64>),
    Keyword(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassRule {
    Given,
    Equal,
    Solve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    pub mass: f64,
    pub q: [f64; 4],
    pub v: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberConfig {
    pub r: f64,
    #[serde(default)]
    pub rdot: f64,
    #[serde(default = "zero_angle")]
    pub theta: Angle,
    #[serde(default = "zero_angle")]
    pub phi: Angle,
    pub c_theta: f64,
    pub c_phi: f64,
}

fn zero_angle() -> Angle {
    Angle::radians(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Defaults depend on the system: 1e-10 for the full equations, 1e-12 for the reduced one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    pub dt_min: f64,
    pub fixed_step: bool,
    pub project: bool,
    /// Output spacing of the full integration; every accepted step when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 1e-2,
            t_end: 1.0,
            rtol: None,
            atol: None,
            dt_min: 1e-12,
            fixed_step: false,
            project: true,
            sample_interval: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub angle_tol: f64,
    pub feas_tol: f64,
    pub mass_floor: f64,
    pub rank_tol: f64,
    pub criterion_tol: f64,
    pub eps_sing: f64,
    /// r values for criterion reports and the mass solver.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_grid: Option<Vec<f64>>,
    /// r values for the triangle rigidity check; nine points on [0.1, 0.9] by default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma4_grid: Option<Vec<f64>>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            angle_tol: DEFAULT_ANGLE_TOL,
            feas_tol: DEFAULT_FEAS_TOL,
            mass_floor: DEFAULT_MASS_FLOOR,
            rank_tol: DEFAULT_RANK_TOL,
            criterion_tol: DEFAULT_CRITERION_TOL,
            eps_sing: DEFAULT_EPS_SING,
            r_grid: None,
            lemma4_grid: None,
        }
    }
}

impl AnalysisConfig {
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            r_grid: self.r_grid.clone(),
            feas_tol: self.feas_tol,
            mass_floor: self.mass_floor,
            rank_tol: self.rank_tol,
            eps_sing: self.eps_sing,
        }
    }

    pub fn lemma4_grid(&self) -> Vec<f64> {
        self.lemma4_grid.clone().unwrap_or_else(|| (1..=9).map(|k| k as f64 / 10.0).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub ranges: Vec<RangeConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Alpha,
    Beta,
}

/// `count` values `start + k (end - start) / count`, `k = 0..count`, for one angle slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub family: Family,
    /// 1-based body index.
    pub index: usize,
    pub start: Angle,
    pub end: Angle,
    pub count: usize,
}

impl RangeConfig {
    pub fn value(&self, k: usize) -> f64 {
        let (a, b) = (self.start.radians, self.end.radians);
        a + (b - a) * k as f64 / self.count as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(field: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(cfg_err(format!("{field}: must be a positive number, got {v}")))
    }
}

fn grid_ok(field: &str, grid: &[f64]) -> CliResult<()> {
    for (k, r) in grid.iter().enumerate() {
        if !(*r > 0.0 && *r < 1.0) {
            return Err(cfg_err(format!("{field}[{k}]: r must lie in (0, 1), got {r}")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        };
        parsed.map_err(|e| match e {
            CliError::Config(m) => cfg_err(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Checks every field that the core would otherwise reject later, naming the field.
    pub fn validate(&self) -> CliResult<()> {
        if let Some(shape) = &self.shape {
            let n = shape.alphas.len();
            if shape.betas.len() != n {
                return Err(cfg_err(format!(
                    "shape.betas: expected {n} entries to match shape.alphas, got {}",
                    shape.betas.len()
                )));
            }
            if let Some(declared) = shape.n {
                if declared != n {
                    return Err(cfg_err(format!("shape.n: declared {declared} but {n} angles given")));
                }
            }
            if n < 2 {
                return Err(cfg_err(format!("shape.alphas: need at least 2 bodies, got {n}")));
            }
            for (fam, list) in [("alphas", &shape.alphas), ("betas", &shape.betas)] {
                if let Some(k) = list.iter().position(|a| !a.radians.is_finite()) {
                    return Err(cfg_err(format!("shape.{fam}[{k}]: angle must be finite")));
                }
            }
            match &shape.masses {
                Some(Masses::Values(m)) => {
                    if m.len() != n {
                        return Err(cfg_err(format!("shape.masses: expected {n} entries, got {}", m.len())));
                    }
                    for (k, x) in m.iter().enumerate() {
                        positive(&format!("shape.masses[{k}]"), *x)?;
                    }
                }
                Some(Masses::Keyword(k)) if k != "equal" && k != "solve" => {
                    return Err(cfg_err(format!("shape.masses: expected a list, \"equal\" or \"solve\", got {k:?}")));
                }
                _ => {}
            }
        }
        for (k, b) in self.bodies.iter().enumerate() {
            positive(&format!("bodies[{k}].mass"), b.mass)?;
            if b.q.iter().chain(&b.v).any(|x| !x.is_finite()) {
                return Err(cfg_err(format!("bodies[{k}]: coordinates must be finite")));
            }
        }
        if let Some(f) = &self.fiber {
            if !(f.r > 0.0 && f.r < 1.0) {
                return Err(cfg_err(format!("fiber.r: must lie in (0, 1), got {}", f.r)));
            }
            for (name, v) in [("rdot", f.rdot), ("c_theta", f.c_theta), ("c_phi", f.c_phi)] {
                if !v.is_finite() {
                    return Err(cfg_err(format!("fiber.{name}: must be finite")));
                }
            }
        }
        let it = &self.integrator;
        positive("integrator.dt", it.dt)?;
        positive("integrator.t_end", it.t_end)?;
        positive("integrator.dt_min", it.dt_min)?;
        if let Some(v) = it.rtol {
            positive("integrator.rtol", v)?;
        }
        if let Some(v) = it.atol {
            positive("integrator.atol", v)?;
        }
        if let Some(v) = it.sample_interval {
            positive("integrator.sample_interval", v)?;
        }
        let an = &self.analysis;
        for (name, v) in [
            ("angle_tol", an.angle_tol),
            ("feas_tol", an.feas_tol),
            ("rank_tol", an.rank_tol),
            ("criterion_tol", an.criterion_tol),
            ("eps_sing", an.eps_sing),
        ] {
            positive(&format!("analysis.{name}"), v)?;
        }
        if !(an.mass_floor >= 0.0 && an.mass_floor.is_finite()) {
            return Err(cfg_err(format!("analysis.mass_floor: must be non-negative, got {}", an.mass_floor)));
        }
        if let Some(g) = &an.r_grid {
            if g.len() < 3 {
                return Err(cfg_err(format!("analysis.r_grid: need at least 3 points, got {}", g.len())));
            }
            grid_ok("analysis.r_grid", g)?;
        }
        if let Some(g) = &an.lemma4_grid {
            if g.len() < 2 {
                return Err(cfg_err(format!("analysis.lemma4_grid: need at least 2 points, got {}", g.len())));
            }
            grid_ok("analysis.lemma4_grid", g)?;
        }
        if let Some(sw) = &self.sweep {
            let n = self.shape.as_ref().map(|s| s.alphas.len()).ok_or_else(|| cfg_err("sweep: requires a [shape] section"))?;
            let mut cells: usize = 1;
            for (k, r) in sw.ranges.iter().enumerate() {
                if r.index == 0 || r.index > n {
                    return Err(cfg_err(format!("sweep.ranges[{k}].index: must be in 1..={n}, got {}", r.index)));
                }
                cells = cells.saturating_mul(r.count);
            }
            if cells > MAX_SWEEP_CELLS {
                return Err(cfg_err(format!("sweep: {cells} cells exceeds the limit of {MAX_SWEEP_CELLS}")));
            }
        }
        Ok(())
    }

    pub fn shape_section(&self) -> CliResult<&ShapeConfig> {
        self.shape.as_ref().ok_or_else(|| cfg_err("missing [shape] section"))
    }

    pub fn angles(&self) -> CliResult<(Vec<f64>, Vec<f64>)> {
        let s = self.shape_section()?;
        Ok((s.alphas.iter().map(|a| a.radians).collect(), s.betas.iter().map(|a| a.radians).collect()))
    }

    pub fn mass_rule(&self) -> CliResult<MassRule> {
        Ok(match &self.shape_section()?.masses {
            Some(Masses::Values(_)) => MassRule::Given,
            Some(Masses::Keyword(k)) if k == "solve" => MassRule::Solve,
            _ => MassRule::Equal,
        })
    }

    /// Shape with given or equal masses; `None` when masses are to be solved for.
    pub fn shape(&self) -> CliResult<Option<RotopulsatorShape>> {
        let (a, b) = self.angles()?;
        Ok(match (&self.shape_section()?.masses, self.mass_rule()?) {
            (Some(Masses::Values(m)), _) => Some(RotopulsatorShape::new(a, b, m.clone())?),
            (_, MassRule::Solve) => None,
            _ => Some(RotopulsatorShape::equal_masses(a, b)?),
        })
    }

    pub fn fiber(&self) -> CliResult<FiberState> {
        let f = self.fiber.as_ref().ok_or_else(|| cfg_err("missing [fiber] section"))?;
        Ok(FiberState::new(f.r, f.rdot, f.theta.radians, f.phi.radians, f.c_theta, f.c_phi)?)
    }

    /// Explicit `[[bodies]]` state when given.
    pub fn explicit_state(&self) -> CliResult<Option<SystemState>> {
        if self.bodies.is_empty() {
            return Ok(None);
        }
        let bodies = self
            .bodies
            .iter()
            .map(|b| Body { mass: b.mass, q: Vec4(b.q), v: Vec4(b.v) })
            .collect();
        let state = SystemState::new(bodies, CurvatureSign::Positive, 0.0)?;
        for (i, b) in state.bodies.iter().enumerate() {
            let pos = (b.q.dot(&b.q) - 1.0).abs();
            let tan = b.q.dot(&b.v).abs();
            if pos > STATE_TOL || tan > STATE_TOL {
                return Err(cfg_err(format!(
                    "bodies[{i}]: q must be a unit vector and v orthogonal to it (|q.q - 1| = {pos:e}, |q.v| = {tan:e})"
                )));
            }
        }
        Ok(Some(state))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = r#"
[shape]
alphas = [0, "2/3 pi", "4/3 pi"]
betas = [0, 0, 0]

[fiber]
r = 0.5
rdot = 0.1
c_theta = 0.3
c_phi = 0.0
"#;

    #[test]
    fn parses_minimal_toml() {
        let cfg = ExperimentConfig::from_toml(TRIANGLE).unwrap();
        let (a, _) = cfg.angles().unwrap();
        assert_eq!(a[1], 2.0 * std::f64::consts::PI / 3.0);
        assert_eq!(cfg.mass_rule().unwrap(), MassRule::Equal);
        assert_eq!(cfg.integrator.dt, 1e-2);
        assert!(cfg.shape().unwrap().is_some());
    }

    #[test]
    fn toml_errors_carry_location() {
        let err = ExperimentConfig::from_toml("[shape]\nalphas = [0, \"2/0 pi\"]\nbetas = [0, 0]\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("2/0 pi"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let text = TRIANGLE.replace("betas = [0, 0, 0]", "betas = [0, 0]");
        let msg = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(msg.contains("shape.betas"), "{msg}");

        let text = TRIANGLE.replace("r = 0.5", "r = 1.5");
        let msg = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(msg.contains("fiber.r"), "{msg}");

        let text = format!("{TRIANGLE}\n[analysis]\nr_grid = [0.2, 0.5, 1.2]\n");
        let msg = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(msg.contains("analysis.r_grid[2]"), "{msg}");

        let msg = ExperimentConfig::from_toml("[shape]\nalphas=[0,1]\nbetas=[0,1]\nmasses=\"heavy\"\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("shape.masses"), "{msg}");

        let msg = ExperimentConfig::from_toml("[shpe]\n").unwrap_err().to_string();
        assert!(msg.contains("unknown field"), "{msg}");
    }

    #[test]
    fn json_is_accepted() {
        let cfg = ExperimentConfig::from_json(
            r#"{"shape": {"alphas": [0, "pi"], "betas": [0, 0], "masses": "solve"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.mass_rule().unwrap(), MassRule::Solve);
        assert!(cfg.shape().unwrap().is_none());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = ExperimentConfig::from_toml(TRIANGLE).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&json).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn sweep_limits() {
        let text = format!(
            "{TRIANGLE}\n[[sweep.ranges]]\nfamily = \"alpha\"\nindex = 4\nstart = 0\nend = \"2 pi\"\ncount = 10\n"
        );
        let msg = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(msg.contains("sweep.ranges[0].index"), "{msg}");

        let range = "[[sweep.ranges]]\nfamily = \"beta\"\nindex = 1\nstart = 0\nend = 1\ncount = 1001\n";
        let text = format!("{TRIANGLE}\n{range}{range}");
        let msg = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(msg.contains("exceeds"), "{msg}");
    }

    #[test]
    fn explicit_state_must_lie_on_the_sphere() {
        let body = |q: &str, v: &str| format!("[[bodies]]\nmass = 1.0\nq = {q}\nv = {v}\n");
        let ok = body("[1.0, 0.0, 0.0, 0.0]", "[0.0, 0.5, 0.0, 0.0]") + &body("[0.0, 0.0, 1.0, 0.0]", "[0.0; 4]");
        let ok = ok.replace("[0.0; 4]", "[0.0, 0.0, 0.0, 0.0]");
        assert!(ExperimentConfig::from_toml(&ok).unwrap().explicit_state().unwrap().is_some());

        let long = ok.replacen("[1.0, 0.0, 0.0, 0.0]", "[1.1, 0.0, 0.0, 0.0]", 1);
        let msg = ExperimentConfig::from_toml(&long).unwrap().explicit_state().unwrap_err().to_string();
        assert!(msg.contains("bodies[0]"), "{msg}");

        let radial = ok.replacen("[0.0, 0.5, 0.0, 0.0]", "[0.5, 0.0, 0.0, 0.0]", 1);
        assert!(ExperimentConfig::from_toml(&radial).unwrap().explicit_state().is_err());
    }
}
