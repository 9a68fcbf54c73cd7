//! Numerical checks of the structural facts about rotopulsators: regularity of the
//! projected polygons, the conserved rates along reduced motions, the rigidity
//! identities of vertex triangles, the double-root identities, and the
//! independence of the criterion's basis functions.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::DEFAULT_EPS_SING;
use crate::error::{Error, Result};
use crate::rotopulse::{normalize_angle, pair_denominator, ReducedSample, ReducedTrajectory, RotopulsatorShape};

/// Default clustering tolerance for angle constants (radians).
pub const DEFAULT_ANGLE_TOL: f64 = 1e-9;

/// Default relative singular-value threshold for numerical rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Pairs whose `|cos Δα - cos Δβ|` is at most this count as constant-size pairs.
pub const CONSTANT_SIZE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonReport {
    pub k: usize,
    /// Distinct vertex angles in increasing order.
    pub vertices: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub regular: bool,
    pub max_gap_deviation: f64,
    pub tol: f64,
}

/// Groups angles into distinct vertices and tests whether they are equally spaced.
pub fn polygon_report(angles: &[f64], tol: f64) -> Result<PolygonReport> {
    if angles.is_empty() {
        return Err(Error::BadParameter("polygon needs at least one angle".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::BadParameter(format!("tolerance must be positive, got {tol}")));
    }
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::BadParameter("angles must be finite".into()));
    }
    let mut sorted: Vec<f64> = angles.iter().map(|&a| normalize_angle(a)).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();

    // gap[i] runs from sorted[i] to its successor, wrapping at the end
    let gap = |i: usize| -> f64 {
        if i + 1 < n {
            sorted[i + 1] - sorted[i]
        } else {
            sorted[0] + TAU - sorted[n - 1]
        }
    };

    let start = (0..n).find(|&i| gap(i) > tol);
    let clusters: Vec<Vec<f64>> = match start {
        None => vec![sorted.clone()],
        Some(s) => {
            let mut out: Vec<Vec<f64>> = Vec::new();
            let mut current: Vec<f64> = Vec::new();
            for step in 1..=n {
                let i = (s + step) % n;
                // unwrap so members of one cluster are contiguous reals
                let a = if i <= s { sorted[i] + TAU } else { sorted[i] };
                current.push(a);
                if gap(i) > tol {
                    let adjacent = gap(i);
                    if adjacent <= 2.0 * tol {
                        return Err(Error::AmbiguousClustering { angle: normalize_angle(a), tol });
                    }
                    out.push(std::mem::take(&mut current));
                }
            }
            out
        }
    };

    let mut vertices = Vec::with_capacity(clusters.len());
    let mut multiplicities = Vec::with_capacity(clusters.len());
    for c in &clusters {
        let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > tol {
            return Err(Error::AmbiguousClustering { angle: normalize_angle(lo), tol });
        }
        let mean = c.iter().sum::<f64>() / c.len() as f64;
        vertices.push(normalize_angle(mean));
        multiplicities.push(c.len());
    }
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by(|&a, &b| vertices[a].total_cmp(&vertices[b]));
    let vertices: Vec<f64> = order.iter().map(|&i| vertices[i]).collect();
    let multiplicities: Vec<usize> = order.iter().map(|&i| multiplicities[i]).collect();

    let k = vertices.len();
    let ideal = TAU / k as f64;
    let max_gap_deviation = (0..k)
        .map(|i| {
            let g = if i + 1 < k { vertices[i + 1] - vertices[i] } else { vertices[0] + TAU - vertices[k - 1] };
            (g - ideal).abs()
        })
        .fold(0.0, f64::max);
    Ok(PolygonReport { k, vertices, multiplicities, regular: max_gap_deviation <= tol, max_gap_deviation, tol })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Residuals {
    /// `max |2ṙθ̇ + rθ̈|`
    pub theta: f64,
    /// `max |2ρ̇φ̇ + ρφ̈|`
    pub phi: f64,
}

/// Checks the conserved-rate identities on sampled output using fourth-order
/// central differences.
pub fn lemma1_residuals(samples: &[ReducedSample]) -> Result<Lemma1Residuals> {
    const NEED: usize = 5;
    if samples.len() < NEED {
        return Err(Error::InsufficientSamples { need: NEED, got: samples.len() });
    }
    let h = samples[1].t - samples[0].t;
    if !(h > 0.0) || samples.windows(2).any(|w| ((w[1].t - w[0].t) - h).abs() > 1e-9 * h.max(1e-300)) {
        return Err(Error::BadParameter("samples must be uniformly spaced in time".into()));
    }
    let r: Vec<f64> = samples.iter().map(|s| s.fiber.r()).collect();
    let rho: Vec<f64> = samples.iter().map(|s| s.fiber.rho()).collect();
    let theta: Vec<f64> = samples.iter().map(|s| s.fiber.theta).collect();
    let phi: Vec<f64> = samples.iter().map(|s| s.fiber.phi).collect();

    let d1 = |f: &[f64], k: usize| (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h);
    let d2 = |f: &[f64], k: usize| {
        (-f[k - 2] + 16.0 * f[k - 1] - 30.0 * f[k] + 16.0 * f[k + 1] - f[k + 2]) / (12.0 * h * h)
    };

    let mut out = Lemma1Residuals { theta: 0.0, phi: 0.0 };
    for k in 2..samples.len() - 2 {
        let th = (2.0 * d1(&r, k) * d1(&theta, k) + r[k] * d2(&theta, k)).abs();
        let ph = (2.0 * d1(&rho, k) * d1(&phi, k) + rho[k] * d2(&phi, k)).abs();
        out.theta = out.theta.max(th);
        out.phi = out.phi.max(ph);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma4Report {
    /// Vertex ordering actually used; the first entry is the apex of the angle.
    pub triple: (usize, usize, usize),
    /// True when the requested apex had a right angle and another vertex was used.
    pub switched_apex: bool,
    pub cos2_gamma: f64,
    pub res_eq9: Vec<f64>,
    pub res_eq10: Vec<f64>,
}

impl Lemma4Report {
    pub fn max_residual(&self) -> f64 {
        self.res_eq9.iter().chain(&self.res_eq10).fold(0.0, |a, x| a.max(*x))
    }
}

struct TriangleTerms {
    a: f64,
    b: f64,
    ca12: f64,
    cb12: f64,
    ca13: f64,
    cb13: f64,
}

impl TriangleTerms {
    fn new(shape: &RotopulsatorShape, (i1, i2, i3): (usize, usize, usize)) -> Self {
        let al = shape.alphas();
        let be = shape.betas();
        TriangleTerms {
            a: (al[i3] - al[i2]).cos() - (al[i2] - al[i1]).cos() - (al[i3] - al[i1]).cos(),
            b: (be[i3] - be[i2]).cos() - (be[i2] - be[i1]).cos() - (be[i3] - be[i1]).cos(),
            ca12: (al[i2] - al[i1]).cos(),
            cb12: (be[i2] - be[i1]).cos(),
            ca13: (al[i3] - al[i1]).cos(),
            cb13: (be[i3] - be[i1]).cos(),
        }
    }

    /// `(lhs, product of the two edge factors)` of the r-form identity.
    fn eq9(&self, r: f64) -> (f64, f64) {
        let r2 = r * r;
        let lhs = ((1.0 + self.b) + r2 * (self.a - self.b)).powi(2);
        let p2 = 1.0 - self.cb12 - r2 * (self.ca12 - self.cb12);
        let p3 = 1.0 - self.cb13 - r2 * (self.ca13 - self.cb13);
        (lhs, 4.0 * p2 * p3)
    }

    /// Same identity written with `ρ²` and the roles of the angle families swapped.
    fn eq10(&self, r: f64) -> (f64, f64) {
        let rho2 = 1.0 - r * r;
        let lhs = ((1.0 + self.a) + rho2 * (self.b - self.a)).powi(2);
        let p2 = 1.0 - self.ca12 - rho2 * (self.cb12 - self.ca12);
        let p3 = 1.0 - self.ca13 - rho2 * (self.cb13 - self.ca13);
        (lhs, 4.0 * p2 * p3)
    }

    /// Squared edge lengths `|q2-q1|², |q3-q1|²` on the torus of radius r.
    fn edges(&self, r: f64) -> (f64, f64) {
        let r2 = r * r;
        let e2 = 2.0 * (1.0 - (r2 * self.ca12 + (1.0 - r2) * self.cb12));
        let e3 = 2.0 * (1.0 - (r2 * self.ca13 + (1.0 - r2) * self.cb13));
        (e2, e3)
    }
}

/// Rigidity check for the triangle `(i1, i2, i3)`: calibrates `cos²γ` at the
/// first `r` sample and returns how far both identities drift at the others.
pub fn lemma4_residuals(
    shape: &RotopulsatorShape,
    triple: (usize, usize, usize),
    r_samples: &[f64],
) -> Result<Lemma4Report> {
    let (i1, i2, i3) = triple;
    let n = shape.n();
    if i1 >= n || i2 >= n || i3 >= n {
        return Err(Error::BadParameter(format!("triple {triple:?} out of range for {n} bodies")));
    }
    if i1 == i2 || i1 == i3 || i2 == i3 {
        return Err(Error::DegenerateTriangle { i1, i2, i3 });
    }
    if r_samples.len() < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: r_samples.len() });
    }
    if let Some(r) = r_samples.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::BadParameter(format!("r sample {r} outside (0, 1)")));
    }

    let orderings = [(i1, i2, i3), (i2, i3, i1), (i3, i1, i2)];
    let mut chosen = None;
    for (idx, &ord) in orderings.iter().enumerate() {
        let terms = TriangleTerms::new(shape, ord);
        for &r in r_samples {
            let (e2, e3) = terms.edges(r);
            if e2.max(0.0).sqrt() < 1e-12 || e3.max(0.0).sqrt() < 1e-12 {
                return Err(Error::DegenerateTriangle { i1: ord.0, i2: ord.1, i3: ord.2 });
            }
        }
        let (lhs, prod) = terms.eq9(r_samples[0]);
        let cos2 = lhs / prod;
        if cos2 > 1e-12 || idx == orderings.len() - 1 {
            chosen = Some((ord, idx > 0, terms, cos2));
            break;
        }
    }
    let (ord, switched, terms, cos2_gamma) = chosen.expect("at least one ordering is examined");

    let (lhs10, prod10) = terms.eq10(r_samples[0]);
    let cos2_gamma10 = lhs10 / prod10;
    let res_eq9 = r_samples[1..]
        .iter()
        .map(|&r| {
            let (lhs, prod) = terms.eq9(r);
            (lhs - cos2_gamma * prod).abs()
        })
        .collect();
    let res_eq10 = r_samples[1..]
        .iter()
        .map(|&r| {
            let (lhs, prod) = terms.eq10(r);
            (lhs - cos2_gamma10 * prod).abs()
        })
        .collect();
    Ok(Lemma4Report { triple: ord, switched_apex: switched, cos2_gamma, res_eq9, res_eq10 })
}

/// Differences between the two sides of the double-root identities for `(i, j, k)`.
pub fn ultimate_identity_check(shape: &RotopulsatorShape, (i, j, k): (usize, usize, usize)) -> Result<(f64, f64)> {
    let n = shape.n();
    if i >= n || j >= n || k >= n || i == j || i == k || j == k {
        return Err(Error::BadParameter(format!("need three distinct indices below {n}, got ({i}, {j}, {k})")));
    }
    let al = shape.alphas();
    let be = shape.betas();
    let ca_ij = (al[i] - al[j]).cos();
    let cb_ij = (be[i] - be[j]).cos();
    let ca_kj = (al[k] - al[j]).cos();
    let cb_kj = (be[k] - be[j]).cos();
    let den_ij = ca_ij - cb_ij;
    let den_kj = ca_kj - cb_kj;
    if den_ij.abs() < 1e-12 {
        return Err(Error::ZeroDenominator { i, j });
    }
    if den_kj.abs() < 1e-12 {
        return Err(Error::ZeroDenominator { i: k, j });
    }
    let res6 = ((1.0 - cb_ij) / den_ij - (1.0 - cb_kj) / den_kj).abs();
    let res7 = ((1.0 - ca_ij) / den_ij - (1.0 - ca_kj) / den_kj).abs();
    Ok((res6, res7))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSignature {
    pub ca: f64,
    pub cb: f64,
    /// Ordered pairs `(i, j)`, `i != j`, sharing these cosines.
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellationSignature {
    pub classes: Vec<PairSignature>,
    pub grid: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub independence_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureOptions {
    pub rank_tol: f64,
    /// Sample points for the basis matrix; Chebyshev points on (0.05, 0.95) when absent.
    pub grid: Option<Vec<f64>>,
    pub eps_sing: f64,
}

impl Default for SignatureOptions {
    fn default() -> Self {
        SignatureOptions { rank_tol: DEFAULT_RANK_TOL, grid: None, eps_sing: DEFAULT_EPS_SING }
    }
}

/// `count` Chebyshev points of the first kind mapped onto `(lo, hi)`, ascending.
pub fn chebyshev_grid(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut g: Vec<f64> = (0..count)
        .map(|k| mid + half * ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * count) as f64).cos())
        .collect();
    g.sort_by(f64::total_cmp);
    g
}

/// Numerical rank with a relative singular-value cut-off.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> (usize, Vec<f64>) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0, Vec::new());
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let top = sv[0];
    if top == 0.0 {
        return (0, sv);
    }
    let rank = sv.iter().filter(|&&s| s >= rel_tol * top).count();
    (rank, sv)
}

/// Partitions ordered pairs by `(cos Δα, cos Δβ)` and measures the linear
/// independence of the per-class functions `r ↦ D(r)^{-3/2}` on a grid.
pub fn cancellation_signature(shape: &RotopulsatorShape, opts: &SignatureOptions) -> Result<CancellationSignature> {
    let n = shape.n();
    let mut classes: Vec<PairSignature> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (ca, cb) = shape.pair_cosines(i, j);
            match classes.iter_mut().find(|c| (c.ca - ca).abs() <= 1e-12 && (c.cb - cb).abs() <= 1e-12) {
                Some(c) => c.pairs.push((i, j)),
                None => classes.push(PairSignature { ca, cb, pairs: vec![(i, j)] }),
            }
        }
    }

    let mut grid = match &opts.grid {
        Some(g) => g.clone(),
        None => chebyshev_grid((2 * classes.len()).max(2), 0.05, 0.95),
    };
    if grid.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(Error::BadParameter("grid points must lie in (0, 1)".into()));
    }
    let singular_at = |grid: &[f64]| -> Option<(usize, f64)> {
        for (ci, c) in classes.iter().enumerate() {
            for &r in grid {
                if !(pair_denominator(c.ca, c.cb, r) >= opts.eps_sing) {
                    return Some((ci, r));
                }
            }
        }
        None
    };
    if singular_at(&grid).is_some() {
        let spacing = grid.windows(2).map(|w| w[1] - w[0]).fold(0.1, f64::min);
        grid.iter_mut().for_each(|r| *r = (*r + 0.37 * spacing).min(1.0 - 1e-9));
        if let Some((ci, r)) = singular_at(&grid) {
            let (i, j) = classes[ci].pairs[0];
            return Err(Error::SingularDenominator { i, j, r });
        }
    }

    let mut m = DMatrix::<f64>::zeros(grid.len(), classes.len());
    for (ci, c) in classes.iter().enumerate() {
        for (ri, &r) in grid.iter().enumerate() {
            let d = pair_denominator(c.ca, c.cb, r);
            m[(ri, ci)] = 1.0 / (d * d.sqrt());
        }
        let norm = m.column(ci).norm();
        m.column_mut(ci).scale_mut(1.0 / norm);
    }
    let (independence_rank, singular_values) = numerical_rank(&m, opts.rank_tol);
    Ok(CancellationSignature { classes, grid, singular_values, independence_rank })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub nonconstant_size_possible: bool,
    /// Every pair has `cos Δα = cos Δβ`: the configuration can only rotate rigidly.
    pub constant_size_class: bool,
    /// `max r - min r` of a supplied reduced trajectory.
    pub size_variation: Option<f64>,
    pub alpha_polygon: PolygonReport,
    pub beta_polygon: PolygonReport,
    /// The regularity claim does not apply (constant-size class).
    pub vacuous: bool,
    pub pass: bool,
}

/// Evaluates the regular-polygon claim for `shape`.
pub fn theorem_verdict(
    shape: &RotopulsatorShape,
    trajectory: Option<&ReducedTrajectory>,
    angle_tol: f64,
) -> Result<TheoremVerdict> {
    let n = shape.n();
    let nonconstant_size_possible = (0..n).any(|i| {
        (0..n).any(|j| {
            let (ca, cb) = shape.pair_cosines(i, j);
            i != j && (ca - cb).abs() > CONSTANT_SIZE_TOL
        })
    });
    let alpha_polygon = polygon_report(shape.alphas(), angle_tol)?;
    let beta_polygon = polygon_report(shape.betas(), angle_tol)?;
    let size_variation = trajectory.map(|t| t.r_range());
    let pass = alpha_polygon.regular && beta_polygon.regular;
    Ok(TheoremVerdict {
        nonconstant_size_possible,
        constant_size_class: !nonconstant_size_possible,
        size_variation,
        alpha_polygon,
        beta_polygon,
        vacuous: !nonconstant_size_possible,
        pass,
    })
}
