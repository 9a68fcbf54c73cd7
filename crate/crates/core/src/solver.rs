//! Mass feasibility: the criterion is linear in the masses, so sampling it on an
//! `r` grid gives a matrix `A` and the question becomes whether `A m = 0` has a
//! solution on the positive simplex.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analysis::{chebyshev_grid, numerical_rank, DEFAULT_RANK_TOL};
use crate::dynamics::DEFAULT_EPS_SING;
use crate::error::{Error, Result};
use crate::rotopulse::{criterion_residuals_with, pair_cosines, pair_denominator, RotopulsatorShape};

pub const DEFAULT_FEAS_TOL: f64 = 1e-10;
pub const DEFAULT_MASS_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
    Underdetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityResult {
    pub status: FeasibilityStatus,
    /// Simplex-normalized masses; present unless infeasible.
    pub masses: Option<Vec<f64>>,
    /// `‖A m‖∞` at the minimizer.
    pub residual_norm: f64,
    pub grid: Vec<f64>,
    /// Largest criterion violation on the grid, re-evaluated directly with the returned masses.
    pub max_violation: f64,
    pub rank: usize,
    pub null_dim: usize,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub r_grid: Option<Vec<f64>>,
    pub feas_tol: f64,
    pub mass_floor: f64,
    pub rank_tol: f64,
    pub eps_sing: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            r_grid: None,
            feas_tol: DEFAULT_FEAS_TOL,
            mass_floor: DEFAULT_MASS_FLOOR,
            rank_tol: DEFAULT_RANK_TOL,
            eps_sing: DEFAULT_EPS_SING,
        }
    }
}

/// Seven Chebyshev points on `(0.1, 0.9)`.
pub fn default_grid() -> Vec<f64> {
    chebyshev_grid(7, 0.1, 0.9)
}

/// Coefficients of `m_j` in the criterion residuals sampled on `r_grid`.
///
/// For each `r`, `n` rows of the first angular identity, `n` rows of the
/// second, then `n - 1` rows of `δ_i - δ_0`.
pub fn build_constraint_matrix(alphas: &[f64], betas: &[f64], r_grid: &[f64]) -> Result<DMatrix<f64>> {
    build_with(alphas, betas, r_grid, DEFAULT_EPS_SING)
}

fn build_with(alphas: &[f64], betas: &[f64], r_grid: &[f64], eps_sing: f64) -> Result<DMatrix<f64>> {
    RotopulsatorShape::angles_only(alphas, betas)?;
    if r_grid.len() < 3 {
        return Err(Error::BadParameter(format!("grid needs at least 3 points, got {}", r_grid.len())));
    }
    if let Some(r) = r_grid.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::BadParameter(format!("grid point {r} outside (0, 1)")));
    }
    let n = alphas.len();
    let per_r = 3 * n - 1;
    let mut a = DMatrix::<f64>::zeros(per_r * r_grid.len(), n);
    for (g, &r) in r_grid.iter().enumerate() {
        let base = g * per_r;
        let scale = r * (1.0 - r * r);
        // delta coefficients of body 0, subtracted from every consistency row
        let mut d0 = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (ca, cb) = pair_cosines(alphas, betas, i, j);
                let d = pair_denominator(ca, cb, r);
                if !(d >= eps_sing) {
                    return Err(Error::SingularDenominator { i, j, r });
                }
                let w = 1.0 / (d * d.sqrt());
                a[(base + i, j)] = w * (alphas[j] - alphas[i]).sin();
                a[(base + n + i, j)] = w * (betas[j] - betas[i]).sin();
                let delta = scale * w * (ca - cb);
                if i == 0 {
                    d0[j] = delta;
                } else {
                    a[(base + 2 * n + i - 1, j)] = delta;
                }
            }
        }
        for i in 1..n {
            for (j, d) in d0.iter().enumerate() {
                a[(base + 2 * n + i - 1, j)] -= d;
            }
        }
    }
    Ok(a)
}

/// Outcome of minimizing `‖A m‖` over `{m ≥ floor, Σm = 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexMinimum {
    pub masses: Vec<f64>,
    /// Indices pinned at the floor.
    pub at_floor: Vec<usize>,
    pub residual_inf: f64,
}

/// Orthonormal basis of `{x : Σx = 0}` in `R^k` (Helmert columns).
fn helmert(k: usize) -> DMatrix<f64> {
    let mut z = DMatrix::<f64>::zeros(k, k.saturating_sub(1));
    for c in 0..k.saturating_sub(1) {
        let m = (c + 1) as f64;
        let norm = (m * (m + 1.0)).sqrt();
        for r in 0..=c {
            z[(r, c)] = 1.0 / norm;
        }
        z[(c + 1, c)] = -m / norm;
    }
    z
}

/// Primal active-set method for `min ½‖A m‖²` on the floored simplex.
pub fn minimize_on_simplex(a: &DMatrix<f64>, mass_floor: f64) -> Result<SimplexMinimum> {
    let n = a.ncols();
    if n == 0 {
        return Err(Error::BadParameter("matrix has no columns".into()));
    }
    if !(mass_floor >= 0.0) || mass_floor * n as f64 >= 1.0 {
        return Err(Error::BadParameter(format!("mass floor {mass_floor} infeasible for {n} bodies")));
    }
    // m = floor + u with u ≥ 0, Σu = s
    let s = 1.0 - mass_floor * n as f64;
    let offset = a * DVector::from_element(n, mass_floor);
    let mut u = DVector::from_element(n, s / n as f64);
    let mut free = vec![true; n];
    let scale = a.amax().max(1.0);
    let tiny = 1e-14 * s;

    for _ in 0..(20 * n + 50) {
        let fidx: Vec<usize> = (0..n).filter(|&i| free[i]).collect();
        let k = fidx.len();
        let af = a.select_columns(&fidx);
        // subproblem: free entries sum to s, others zero
        let centre = DVector::from_element(k, s / k as f64);
        let mut p_free = centre.clone();
        if k > 1 {
            let z = helmert(k);
            let c = &af * &centre + &offset;
            let az = &af * &z;
            let eps = 1e-13 * az.amax().max(f64::MIN_POSITIVE);
            let pinv = az
                .pseudo_inverse(eps)
                .map_err(|e| Error::InvalidState(e.to_string()))?;
            p_free += z * (-(pinv * c));
        }
        let mut p = DVector::zeros(n);
        for (slot, &i) in fidx.iter().enumerate() {
            p[i] = p_free[slot];
        }

        if p_free.iter().all(|&x| x >= -tiny) {
            p.iter_mut().for_each(|x| *x = x.max(0.0));
            u = p;
            let g = a.transpose() * (a * &u + &offset);
            let g_mean = fidx.iter().map(|&i| g[i]).sum::<f64>() / k as f64;
            let entering = (0..n)
                .filter(|&i| !free[i])
                .map(|i| (i, g[i] - g_mean))
                .filter(|&(_, mu)| mu < -1e-14 * scale * scale)
                .min_by(|x, y| x.1.total_cmp(&y.1));
            match entering {
                Some((i, _)) => free[i] = true,
                None => {
                    let masses: Vec<f64> = u.iter().map(|x| x + mass_floor).collect();
                    let residual = a * DVector::from_column_slice(&masses);
                    return Ok(SimplexMinimum {
                        at_floor: (0..n).filter(|&i| u[i] <= 1e-10 * s).collect(),
                        masses,
                        residual_inf: residual.amax(),
                    });
                }
            }
        } else {
            // walk toward p until the first free coordinate hits zero
            let mut step = 1.0;
            let mut blocking = None;
            for &i in &fidx {
                if p[i] < u[i] && p[i] < 0.0 {
                    let t = u[i] / (u[i] - p[i]);
                    if t < step {
                        step = t;
                        blocking = Some(i);
                    }
                }
            }
            u = &u + (&p - &u) * step;
            if let Some(b) = blocking {
                free[b] = false;
                u[b] = 0.0;
            }
            for &i in &fidx {
                if u[i] <= tiny && free[i] && k > 1 {
                    free[i] = false;
                    u[i] = 0.0;
                }
            }
            let total: f64 = u.iter().sum();
            u *= s / total;
        }
    }
    Err(Error::InvalidState("active-set iteration did not terminate".into()))
}

fn classify(residual: f64, null_dim: usize, at_floor: &[usize], feas_tol: f64) -> (FeasibilityStatus, Option<String>) {
    if residual <= feas_tol {
        if !at_floor.is_empty() {
            let msg = format!("only degenerate solutions: bodies {at_floor:?} at the mass floor");
            (FeasibilityStatus::Infeasible, Some(msg))
        } else if null_dim >= 2 {
            (FeasibilityStatus::Underdetermined, None)
        } else {
            (FeasibilityStatus::Feasible, None)
        }
    } else if residual <= 10.0 * feas_tol {
        let msg = format!("inconclusive: residual {residual:e} between tolerance and its tenfold margin");
        (FeasibilityStatus::Infeasible, Some(msg))
    } else {
        (FeasibilityStatus::Infeasible, None)
    }
}

/// Decides whether positive masses exist that satisfy the criterion for every `r`.
pub fn solve_masses(alphas: &[f64], betas: &[f64], opts: &SolverOptions) -> Result<FeasibilityResult> {
    let mut grid = opts.r_grid.clone().unwrap_or_else(default_grid);
    let a = match build_with(alphas, betas, &grid, opts.eps_sing) {
        Ok(a) => a,
        Err(Error::SingularDenominator { .. }) => {
            let spacing = grid.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.1, f64::min);
            grid.iter_mut().for_each(|r| *r = (*r + 0.37 * spacing).min(1.0 - 1e-9));
            build_with(alphas, betas, &grid, opts.eps_sing)?
        }
        Err(e) => return Err(e),
    };
    let n = alphas.len();
    let (rank, _) = numerical_rank(&a, opts.rank_tol);
    let rank = if a.amax() <= opts.feas_tol { 0 } else { rank };
    let null_dim = n - rank;
    let min = minimize_on_simplex(&a, opts.mass_floor)?;

    let shape = RotopulsatorShape::new(alphas.to_vec(), betas.to_vec(), min.masses.clone())?;
    let mut max_violation: f64 = 0.0;
    for &r in &grid {
        max_violation = max_violation.max(criterion_residuals_with(&shape, r, opts.eps_sing)?.max_violation());
    }

    let residual_norm = min.residual_inf;
    let (status, warning) = classify(residual_norm, null_dim, &min.at_floor, opts.feas_tol);
    let masses = (status != FeasibilityStatus::Infeasible).then_some(min.masses);
    Ok(FeasibilityResult { status, masses, residual_norm, grid, max_violation, rank, null_dim, warning })
}
