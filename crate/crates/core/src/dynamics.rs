//! Equations of motion of the curved n-body problem and a projected integrator.
//!
//! The right-hand side is evaluated literally, without renormalising positions,
//! so a slightly off-manifold state still sees the exact formula. Manifold
//! constraints are restored after every accepted step instead.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{project, sigma_inner, wedge, Bivector, CurvatureSign, Vec4};
use crate::ode::{Control, Stepper};

/// Pairs with `sigma - sigma*(q_i ⊙ q_j)^2` at or below this are treated as collisions.
pub const DEFAULT_EPS_SING: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub mass: f64,
    pub q: Vec4,
    pub v: Vec4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub bodies: Vec<Body>,
    pub sigma: CurvatureSign,
    pub t: f64,
}

impl SystemState {
    /// Builds a state after checking body count, masses, finiteness and pairwise separation.
    pub fn new(bodies: Vec<Body>, sigma: CurvatureSign, t: f64) -> Result<Self> {
        let state = SystemState { bodies, sigma, t };
        state.check_basic()?;
        state.check_separation(DEFAULT_EPS_SING)?;
        Ok(state)
    }

    fn check_basic(&self) -> Result<()> {
        if self.bodies.len() < 2 {
            return Err(Error::InvalidState(format!(
                "need at least two bodies, got {}",
                self.bodies.len()
            )));
        }
        for (i, b) in self.bodies.iter().enumerate() {
            if !(b.mass > 0.0) || !b.mass.is_finite() {
                return Err(Error::InvalidState(format!("body {i} has non-positive mass {}", b.mass)));
            }
            if !b.q.is_finite() || !b.v.is_finite() {
                return Err(Error::InvalidState(format!("body {i} has non-finite coordinates")));
            }
        }
        if !self.t.is_finite() {
            return Err(Error::InvalidState("time is not finite".into()));
        }
        Ok(())
    }

    fn check_separation(&self, eps_sing: f64) -> Result<()> {
        let s = self.sigma.value();
        for i in 0..self.bodies.len() {
            for j in (i + 1)..self.bodies.len() {
                let c = sigma_inner(&self.bodies[i].q, &self.bodies[j].q, self.sigma);
                let gap = s - s * c * c;
                if !(gap > eps_sing) {
                    return Err(Error::SingularConfiguration { i, j, gap, t: self.t });
                }
            }
        }
        Ok(())
    }

    /// Largest violation of `q⊙q = sigma` and `q⊙v = 0` over all bodies.
    pub fn constraint_drift(&self) -> f64 {
        let s = self.sigma.value();
        self.bodies
            .iter()
            .map(|b| {
                let pos = (sigma_inner(&b.q, &b.q, self.sigma) - s).abs();
                let tan = sigma_inner(&b.q, &b.v, self.sigma).abs();
                pos.max(tan)
            })
            .fold(0.0, f64::max)
    }

    pub fn masses(&self) -> Vec<f64> {
        self.bodies.iter().map(|b| b.mass).collect()
    }

    fn to_flat(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(8 * self.bodies.len());
        for b in &self.bodies {
            y.extend_from_slice(&b.q.0);
            y.extend_from_slice(&b.v.0);
        }
        y
    }

    fn with_flat(&self, t: f64, y: &[f64]) -> SystemState {
        let bodies = self
            .bodies
            .iter()
            .zip(y.chunks_exact(8))
            .map(|(b, c)| Body {
                mass: b.mass,
                q: Vec4([c[0], c[1], c[2], c[3]]),
                v: Vec4([c[4], c[5], c[6], c[7]]),
            })
            .collect();
        SystemState { bodies, sigma: self.sigma, t }
    }
}

/// Accelerations from the curved equations of motion for arbitrary arrays of bodies.
pub fn accelerations(
    masses: &[f64],
    q: &[Vec4],
    v: &[Vec4],
    sigma: CurvatureSign,
    eps_sing: f64,
    t: f64,
) -> Result<Vec<Vec4>> {
    let s = sigma.value();
    let n = masses.len();
    let mut out = vec![Vec4::ZERO; n];
    for i in 0..n {
        let mut acc = Vec4::ZERO;
        for j in 0..n {
            if i == j {
                continue;
            }
            let c = sigma_inner(&q[i], &q[j], sigma);
            let gap = s - s * c * c;
            if !(gap > eps_sing) {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                return Err(Error::SingularConfiguration { i: a, j: b, gap, t });
            }
            let w = masses[j] / (gap * gap.sqrt());
            acc += (q[j] - q[i] * (s * c)) * w;
        }
        acc += q[i] * (-s * sigma_inner(&v[i], &v[i], sigma));
        out[i] = acc;
    }
    Ok(out)
}

/// `q̈_i` for every body of `state`.
pub fn acceleration(state: &SystemState) -> Result<Vec<Vec4>> {
    let masses = state.masses();
    let q: Vec<Vec4> = state.bodies.iter().map(|b| b.q).collect();
    let v: Vec<Vec4> = state.bodies.iter().map(|b| b.v).collect();
    accelerations(&masses, &q, &v, state.sigma, DEFAULT_EPS_SING, state.t)
}

/// Total angular momentum `Σ m_j q_j ∧ q̇_j`.
pub fn angular_momentum(state: &SystemState) -> Bivector {
    state
        .bodies
        .iter()
        .fold(Bivector::ZERO, |acc, b| acc + wedge(&b.q, &b.v) * b.mass)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Take steps of exactly `dt` with no error control.
    pub fixed_step: bool,
    /// Record samples on this uniform grid instead of at every accepted step.
    pub sample_interval: Option<f64>,
    pub eps_sing: f64,
    /// Restore the manifold constraints after each accepted step.
    pub project: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-10,
            atol: 1e-12,
            dt_min: 1e-12,
            dt_max: f64::INFINITY,
            fixed_step: false,
            sample_interval: None,
            eps_sing: DEFAULT_EPS_SING,
            project: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub state: SystemState,
    pub angular_momentum: Bivector,
    /// Largest constraint violation observed before projection since the previous sample.
    pub drift: f64,
}

impl TrajectorySample {
    pub fn t(&self) -> f64 {
        self.state.t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub max_drift: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &SystemState {
        &self.samples.last().expect("trajectory always holds the initial sample").state
    }

    /// Largest componentwise departure of the angular momentum from its initial value.
    pub fn angular_momentum_variation(&self) -> f64 {
        let l0 = self.samples[0].angular_momentum;
        self.samples
            .iter()
            .map(|s| s.angular_momentum.max_abs_diff(&l0))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn sample_targets(t0: f64, t_end: f64, interval: f64) -> Vec<f64> {
    let span = t_end - t0;
    let whole = (span / interval).round();
    let count = if (whole * interval - span).abs() <= 1e-9 * interval {
        whole as usize
    } else {
        (span / interval).ceil() as usize
    };
    (1..count)
        .map(|k| t0 + k as f64 * interval)
        .chain(std::iter::once(t_end))
        .collect()
}

/// Integrate the full equations of motion from `state.t` to `t_end`.
///
/// `dt` is the initial step (adaptive mode) or the step (fixed mode).
pub fn integrate(state: &SystemState, dt: f64, t_end: f64, opts: &IntegratorOptions) -> Result<Trajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::BadParameter(format!("dt must be positive, got {dt}")));
    }
    if !(t_end > state.t) {
        return Err(Error::BadParameter(format!(
            "t_end = {t_end} must exceed the start time {}",
            state.t
        )));
    }
    if opts.project && state.sigma == CurvatureSign::Negative {
        return Err(Error::Unsupported("projected integration with sigma = -1".into()));
    }
    state.check_basic()?;
    state.check_separation(opts.eps_sing)?;

    let n = state.bodies.len();
    let masses = state.masses();
    let sigma = state.sigma;
    let eps_sing = opts.eps_sing;

    let mut q = vec![Vec4::ZERO; n];
    let mut v = vec![Vec4::ZERO; n];
    let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        for (k, c) in y.chunks_exact(8).enumerate() {
            q[k] = Vec4([c[0], c[1], c[2], c[3]]);
            v[k] = Vec4([c[4], c[5], c[6], c[7]]);
        }
        let a = accelerations(&masses, &q, &v, sigma, eps_sing, t)?;
        for (k, d) in dy.chunks_exact_mut(8).enumerate() {
            d[..4].copy_from_slice(&v[k].0);
            d[4..].copy_from_slice(&a[k].0);
        }
        Ok(())
    };

    let ctrl = Control {
        rtol: opts.rtol,
        atol: opts.atol,
        dt_min: opts.dt_min,
        dt_max: opts.dt_max,
        fixed: opts.fixed_step,
    };
    let mut stepper = Stepper::new(8 * n, dt, ctrl);
    let mut y = state.to_flat();
    let mut t = state.t;

    let rec = RefCell::new(Recorder::default());
    let every_step = opts.sample_interval.is_none();

    let mut on_accept = |ts: f64, y: &mut [f64]| -> Result<()> {
        let mut drift: f64 = 0.0;
        for c in y.chunks_exact_mut(8) {
            let qi = Vec4([c[0], c[1], c[2], c[3]]);
            let vi = Vec4([c[4], c[5], c[6], c[7]]);
            let pos = (sigma_inner(&qi, &qi, sigma) - sigma.value()).abs();
            let tan = sigma_inner(&qi, &vi, sigma).abs();
            drift = drift.max(pos).max(tan);
            if opts.project {
                let (qp, vp) = project(&qi, &vi, sigma)?;
                c[..4].copy_from_slice(&qp.0);
                c[4..].copy_from_slice(&vp.0);
            }
        }
        let mut r = rec.borrow_mut();
        r.steps += 1;
        r.max_drift = r.max_drift.max(drift);
        r.window_drift = r.window_drift.max(drift);
        if every_step {
            r.push(state.with_flat(ts, y));
        }
        Ok(())
    };

    match opts.sample_interval {
        None => {
            stepper.advance_to(&mut rhs, &mut t, &mut y, t_end, &mut on_accept)?;
        }
        Some(h) => {
            if !(h > 0.0) {
                return Err(Error::BadParameter(format!("sample interval must be positive, got {h}")));
            }
            for target in sample_targets(state.t, t_end, h) {
                stepper.advance_to(&mut rhs, &mut t, &mut y, target, &mut on_accept)?;
                rec.borrow_mut().push(state.with_flat(target, &y));
            }
        }
    }

    let rec = rec.into_inner();
    let mut samples = Vec::with_capacity(rec.samples.len() + 1);
    samples.push(TrajectorySample {
        state: state.clone(),
        angular_momentum: angular_momentum(state),
        drift: state.constraint_drift(),
    });
    samples.extend(rec.samples);
    Ok(Trajectory { samples, max_drift: rec.max_drift, steps: rec.steps })
}

#[derive(Default)]
struct Recorder {
    samples: Vec<TrajectorySample>,
    max_drift: f64,
    window_drift: f64,
    steps: usize,
}

impl Recorder {
    fn push(&mut self, state: SystemState) {
        let drift = std::mem::take(&mut self.window_drift);
        self.samples.push(TrajectorySample { angular_momentum: angular_momentum(&state), state, drift });
    }
}
