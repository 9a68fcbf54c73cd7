//! Elliptic-elliptic rotopulsators on Clifford tori.
//!
//! Body `i` sits at `(r cos(θ+α_i), r sin(θ+α_i), ρ cos(φ+β_i), ρ sin(φ+β_i))` with
//! `r² + ρ² = 1`. The shape constants `α, β` and the masses decide whether such a
//! motion can solve the equations of motion; the fiber variables `(r, ṙ, θ, φ)`
//! then evolve by a one-degree-of-freedom system with two conserved rates
//! `c_θ = r²θ̇` and `c_φ = ρ²φ̇`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Body, SystemState, DEFAULT_EPS_SING};
use crate::error::{Error, Result};
use crate::manifold::{CurvatureSign, Vec4};
use crate::ode::{Control, Stepper};

/// Fiber-domain guard: `r` must stay inside `(EPS_R, 1 - EPS_R)`.
pub const EPS_R: f64 = 1e-6;

/// Default tolerance on `max(|res1|, |res2|, spread)` per unit total mass.
pub const DEFAULT_CRITERION_TOL: f64 = 1e-9;

/// Maps an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let x = a.rem_euclid(TAU);
    if x >= TAU {
        0.0
    } else {
        x
    }
}

/// Smallest distance between two angles on the circle.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotopulsatorShape {
    alphas: Vec<f64>,
    betas: Vec<f64>,
    masses: Vec<f64>,
}

impl RotopulsatorShape {
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        Self::angles_only(&alphas, &betas)?;
        if masses.len() != alphas.len() {
            return Err(Error::InvalidShape(format!(
                "{} masses for {} bodies",
                masses.len(),
                alphas.len()
            )));
        }
        if let Some((i, m)) = masses.iter().enumerate().find(|(_, m)| !(**m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidShape(format!("mass {i} must be positive, got {m}")));
        }
        Ok(RotopulsatorShape {
            alphas: alphas.into_iter().map(normalize_angle).collect(),
            betas: betas.into_iter().map(normalize_angle).collect(),
            masses,
        })
    }

    /// Shape with unit masses.
    pub fn equal_masses(alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        let n = alphas.len();
        Self::new(alphas, betas, vec![1.0; n])
    }

    /// Validates angle lists without masses (the solver's entry point).
    pub fn angles_only(alphas: &[f64], betas: &[f64]) -> Result<()> {
        let n = alphas.len();
        if n < 2 {
            return Err(Error::InvalidShape(format!("need at least two bodies, got {n}")));
        }
        if betas.len() != n {
            return Err(Error::InvalidShape(format!("{} betas for {n} alphas", betas.len())));
        }
        if alphas.iter().chain(betas).any(|a| !a.is_finite()) {
            return Err(Error::InvalidShape("angles must be finite".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if angular_distance(alphas[i], alphas[j]) < 1e-14
                    && angular_distance(betas[i], betas[j]) < 1e-14
                {
                    return Err(Error::CoincidentBodies { i, j });
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.alphas.len()
    }
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }
    pub fn betas(&self) -> &[f64] {
        &self.betas
    }
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `(cos(α_j-α_i), cos(β_j-β_i))` for a pair.
    pub fn pair_cosines(&self, i: usize, j: usize) -> (f64, f64) {
        pair_cosines(&self.alphas, &self.betas, i, j)
    }
}

pub(crate) fn pair_cosines(alphas: &[f64], betas: &[f64], i: usize, j: usize) -> (f64, f64) {
    ((alphas[j] - alphas[i]).cos(), (betas[j] - betas[i]).cos())
}

/// `1 - (cb + r²(ca - cb))²`, i.e. `1 - <q_i, q_j>²` on the torus of radius `r`.
pub fn pair_denominator(ca: f64, cb: f64, r: f64) -> f64 {
    let c = cb + r * r * (ca - cb);
    1.0 - c * c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberState {
    r: f64,
    pub rdot: f64,
    pub theta: f64,
    pub phi: f64,
    pub c_theta: f64,
    pub c_phi: f64,
}

impl FiberState {
    pub fn new(r: f64, rdot: f64, theta: f64, phi: f64, c_theta: f64, c_phi: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::FiberSingular { r });
        }
        if ![rdot, theta, phi, c_theta, c_phi].iter().all(|x| x.is_finite()) {
            return Err(Error::BadParameter("fiber variables must be finite".into()));
        }
        Ok(FiberState { r, rdot, theta, phi, c_theta, c_phi })
    }

    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn rho(&self) -> f64 {
        (1.0 - self.r * self.r).sqrt()
    }
    pub fn thetadot(&self) -> f64 {
        self.c_theta / (self.r * self.r)
    }
    pub fn phidot(&self) -> f64 {
        let rho2 = 1.0 - self.r * self.r;
        self.c_phi / rho2
    }
    pub fn rhodot(&self) -> f64 {
        -self.r * self.rdot / self.rho()
    }
}

/// Residuals of the three existence identities at one value of `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub r: f64,
    pub res1: Vec<f64>,
    pub res2: Vec<f64>,
    pub delta_rhs: Vec<f64>,
    pub delta_spread: f64,
}

impl CriterionReport {
    pub fn res1_max(&self) -> f64 {
        self.res1.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
    pub fn res2_max(&self) -> f64 {
        self.res2.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
    /// `max(|res1|, |res2|, spread)`.
    pub fn max_violation(&self) -> f64 {
        self.res1_max().max(self.res2_max()).max(self.delta_spread)
    }
}

/// Evaluates the angular identities and the candidate `δ` of every body.
pub fn criterion_residuals(shape: &RotopulsatorShape, r: f64) -> Result<CriterionReport> {
    criterion_residuals_with(shape, r, DEFAULT_EPS_SING)
}

pub fn criterion_residuals_with(shape: &RotopulsatorShape, r: f64, eps_sing: f64) -> Result<CriterionReport> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::BadParameter(format!("r must lie in (0, 1), got {r}")));
    }
    let n = shape.n();
    let rho2 = 1.0 - r * r;
    let mut res1 = vec![0.0; n];
    let mut res2 = vec![0.0; n];
    let mut delta_rhs = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (ca, cb) = shape.pair_cosines(i, j);
            let d = pair_denominator(ca, cb, r);
            if !(d >= eps_sing) {
                return Err(Error::SingularDenominator { i, j, r });
            }
            let w = shape.masses[j] / (d * d.sqrt());
            res1[i] += w * (shape.alphas[j] - shape.alphas[i]).sin();
            res2[i] += w * (shape.betas[j] - shape.betas[i]).sin();
            delta_rhs[i] += w * (ca - cb);
        }
        delta_rhs[i] *= r * rho2;
    }
    let (lo, hi) = delta_rhs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(CriterionReport { r, res1, res2, delta_rhs, delta_spread: hi - lo })
}

/// Places the bodies of `shape` on the torus described by `fiber`.
pub fn embed(shape: &RotopulsatorShape, fiber: &FiberState) -> Result<SystemState> {
    let r = fiber.r();
    let rho = fiber.rho();
    let thetadot = fiber.thetadot();
    let phidot = fiber.phidot();
    let rhodot = fiber.rhodot();
    let bodies: Vec<Body> = (0..shape.n())
        .map(|i| {
            let (sa, ca) = (fiber.theta + shape.alphas[i]).sin_cos();
            let (sb, cb) = (fiber.phi + shape.betas[i]).sin_cos();
            let q = Vec4::new(r * ca, r * sa, rho * cb, rho * sb);
            let v = Vec4::new(
                fiber.rdot * ca - r * thetadot * sa,
                fiber.rdot * sa + r * thetadot * ca,
                rhodot * cb - rho * phidot * sb,
                rhodot * sb + rho * phidot * cb,
            );
            Body { mass: shape.masses[i], q, v }
        })
        .collect();
    for i in 0..bodies.len() {
        for j in (i + 1)..bodies.len() {
            if (bodies[i].q - bodies[j].q).norm() < 1e-14 {
                return Err(Error::CoincidentBodies { i, j });
            }
        }
    }
    SystemState::new(bodies, CurvatureSign::Positive, 0.0)
}

/// Time derivative of the fiber variables: `(ṙ, r̈, θ̇, φ̇)`.
///
/// `δ` is taken from body 0; the spread across bodies is not checked here.
pub fn reduced_rhs(shape: &RotopulsatorShape, fiber: &FiberState) -> Result<(f64, f64, f64, f64)> {
    let r = fiber.r();
    if r <= EPS_R || r >= 1.0 - EPS_R {
        return Err(Error::FiberSingular { r });
    }
    let report = criterion_residuals(shape, r)?;
    Ok(fiber_rates(r, fiber, report.delta_rhs[0]))
}

fn fiber_rates(r: f64, fiber: &FiberState, delta: f64) -> (f64, f64, f64, f64) {
    let rho2 = 1.0 - r * r;
    let thetadot = fiber.c_theta / (r * r);
    let phidot = fiber.c_phi / rho2;
    let rddot = delta - r * rho2 * (phidot * phidot - thetadot * thetadot) - r * fiber.rdot * fiber.rdot / rho2;
    (fiber.rdot, rddot, thetadot, phidot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedOptions {
    pub rtol: f64,
    pub atol: f64,
    pub dt_min: f64,
    /// Tolerance on the criterion violation, multiplied by the total mass.
    pub criterion_tol: f64,
}

impl Default for ReducedOptions {
    fn default() -> Self {
        ReducedOptions { rtol: 1e-12, atol: 1e-14, dt_min: 1e-12, criterion_tol: DEFAULT_CRITERION_TOL }
    }
}

/// One uniformly spaced output point of the reduced system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedSample {
    pub t: f64,
    pub fiber: FiberState,
    pub delta_spread: f64,
    pub res1_max: f64,
    pub res2_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedTrajectory {
    pub samples: Vec<ReducedSample>,
    pub max_delta_spread: f64,
    pub steps: usize,
}

impl ReducedTrajectory {
    /// `max r - min r` over the samples.
    pub fn r_range(&self) -> f64 {
        let (lo, hi) = self
            .samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.fiber.r), hi.max(s.fiber.r)));
        hi - lo
    }
}

/// Integrates `(r, ṙ, θ, φ)` and returns samples on the grid `t0 + k·dt`.
pub fn integrate_reduced(
    shape: &RotopulsatorShape,
    fiber0: &FiberState,
    dt: f64,
    t_end: f64,
    opts: &ReducedOptions,
) -> Result<ReducedTrajectory> {
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::BadParameter(format!("need dt > 0 and t_end > 0, got {dt}, {t_end}")));
    }
    let tol = opts.criterion_tol * shape.total_mass();
    let check = |t: f64, r: f64| -> Result<CriterionReport> {
        if r <= EPS_R || r >= 1.0 - EPS_R {
            return Err(Error::FiberSingular { r });
        }
        let rep = criterion_residuals(shape, r)?;
        let v = rep.max_violation();
        if !(v <= tol) {
            return Err(Error::CriterionViolated { t, residual: v, tol });
        }
        Ok(rep)
    };
    let sample = |t: f64, fiber: FiberState, rep: &CriterionReport| ReducedSample {
        t,
        fiber,
        delta_spread: rep.delta_spread,
        res1_max: rep.res1_max(),
        res2_max: rep.res2_max(),
    };

    let rep0 = check(0.0, fiber0.r)?;
    let mut samples = vec![sample(0.0, *fiber0, &rep0)];
    let mut max_spread = rep0.delta_spread;
    let mut steps = 0usize;

    let base = *fiber0;
    let mut rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let r = y[0];
        if r <= EPS_R || r >= 1.0 - EPS_R {
            return Err(Error::FiberSingular { r });
        }
        let rep = criterion_residuals(shape, r)?;
        let f = FiberState { r, rdot: y[1], theta: y[2], phi: y[3], ..base };
        let (a, b, c, d) = fiber_rates(r, &f, rep.delta_rhs[0]);
        dy.copy_from_slice(&[a, b, c, d]);
        Ok(())
    };
    let mut on_accept = |t: f64, y: &mut [f64]| -> Result<()> {
        steps += 1;
        let rep = check(t, y[0])?;
        max_spread = max_spread.max(rep.delta_spread);
        Ok(())
    };

    let ctrl = Control { rtol: opts.rtol, atol: opts.atol, dt_min: opts.dt_min, dt_max: dt, fixed: false };
    let mut stepper = Stepper::new(4, dt, ctrl);
    let mut y = [fiber0.r, fiber0.rdot, fiber0.theta, fiber0.phi];
    let mut t = 0.0;
    let targets = crate::dynamics::sample_targets(0.0, t_end, dt);
    let mut reports = Vec::with_capacity(targets.len());
    for target in targets {
        stepper.advance_to(&mut rhs, &mut t, &mut y, target, &mut on_accept)?;
        reports.push((target, y));
    }
    for (target, y) in reports {
        let f = FiberState { r: y[0], rdot: y[1], theta: y[2], phi: y[3], ..base };
        let rep = criterion_residuals(shape, f.r)?;
        samples.push(sample(target, f, &rep));
    }
    Ok(ReducedTrajectory { samples, max_delta_spread: max_spread, steps })
}
