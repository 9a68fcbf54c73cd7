//! Signed linear algebra on the ambient space R^4.
//!
//! Positions of the curved problem live on `x1^2 + x2^2 + x3^2 + sigma*x4^2 = sigma`.
//! Everything here is a plain value type so it can be shared freely between threads.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or vector of the ambient 4-space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vec4(pub [f64; 4]);

impl Vec4 {
    pub const ZERO: Vec4 = Vec4([0.0; 4]);

    pub const fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Self {
        Vec4([x1, x2, x3, x4])
    }

    /// Standard basis vector, `k` in `0..4`.
    pub fn basis(k: usize) -> Self {
        let mut v = [0.0; 4];
        v[k] = 1.0;
        Vec4(v)
    }

    pub fn dot(&self, other: &Vec4) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Index<usize> for Vec4 {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl Add for Vec4 {
    type Output = Vec4;
    fn add(self, rhs: Vec4) -> Vec4 {
        Vec4(std::array::from_fn(|k| self.0[k] + rhs.0[k]))
    }
}

impl AddAssign for Vec4 {
    fn add_assign(&mut self, rhs: Vec4) {
        for k in 0..4 {
            self.0[k] += rhs.0[k];
        }
    }
}

impl Sub for Vec4 {
    type Output = Vec4;
    fn sub(self, rhs: Vec4) -> Vec4 {
        Vec4(std::array::from_fn(|k| self.0[k] - rhs.0[k]))
    }
}

impl Neg for Vec4 {
    type Output = Vec4;
    fn neg(self) -> Vec4 {
        Vec4(self.0.map(|x| -x))
    }
}

impl Mul<f64> for Vec4 {
    type Output = Vec4;
    fn mul(self, s: f64) -> Vec4 {
        Vec4(self.0.map(|x| x * s))
    }
}

impl Mul<Vec4> for f64 {
    type Output = Vec4;
    fn mul(self, v: Vec4) -> Vec4 {
        v * self
    }
}

/// Sign of the curvature: `+1` for the 3-sphere, `-1` for the hyperbolic space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum CurvatureSign {
    Positive,
    Negative,
}

impl CurvatureSign {
    pub fn value(self) -> f64 {
        match self {
            CurvatureSign::Positive => 1.0,
            CurvatureSign::Negative => -1.0,
        }
    }
}

impl TryFrom<i8> for CurvatureSign {
    type Error = String;
    fn try_from(s: i8) -> std::result::Result<Self, String> {
        match s {
            1 => Ok(CurvatureSign::Positive),
            -1 => Ok(CurvatureSign::Negative),
            other => Err(format!("curvature sign must be +1 or -1, got {other}")),
        }
    }
}

impl From<CurvatureSign> for i8 {
    fn from(s: CurvatureSign) -> i8 {
        match s {
            CurvatureSign::Positive => 1,
            CurvatureSign::Negative => -1,
        }
    }
}

/// Bivector with components ordered `(12, 13, 14, 23, 24, 34)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bivector(pub [f64; 6]);

impl Bivector {
    pub const ZERO: Bivector = Bivector([0.0; 6]);
    pub const LABELS: [&'static str; 6] = ["L12", "L13", "L14", "L23", "L24", "L34"];

    /// Index pairs `(k, l)` (zero based) in storage order.
    pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

    pub fn max_abs_diff(&self, other: &Bivector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for Bivector {
    type Output = Bivector;
    fn add(self, rhs: Bivector) -> Bivector {
        Bivector(std::array::from_fn(|k| self.0[k] + rhs.0[k]))
    }
}

impl Mul<f64> for Bivector {
    type Output = Bivector;
    fn mul(self, s: f64) -> Bivector {
        Bivector(self.0.map(|x| x * s))
    }
}

/// `x1*y1 + x2*y2 + x3*y3 + sigma*x4*y4`.
pub fn sigma_inner(x: &Vec4, y: &Vec4, s: CurvatureSign) -> f64 {
    x.0[0] * y.0[0] + x.0[1] * y.0[1] + x.0[2] * y.0[2] + s.value() * x.0[3] * y.0[3]
}

/// Counter-clockwise rotation of a plane vector by `angle` radians.
pub fn rotation2(angle: f64, v: [f64; 2]) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [v[0] * c - v[1] * s, v[0] * s + v[1] * c]
}

/// `q ∧ v`, i.e. `L_kl = q_k v_l - q_l v_k` for `k < l`.
pub fn wedge(q: &Vec4, v: &Vec4) -> Bivector {
    Bivector(Bivector::PAIRS.map(|(k, l)| q.0[k] * v.0[l] - q.0[l] * v.0[k]))
}

/// Pull `(q, v)` back onto the unit sphere and its tangent space at the new point.
///
/// Only the positive curvature case is supported.
pub fn project(q: &Vec4, v: &Vec4, s: CurvatureSign) -> Result<(Vec4, Vec4)> {
    if s == CurvatureSign::Negative {
        return Err(Error::Unsupported(
            "projection onto the hyperboloid (sigma = -1)".into(),
        ));
    }
    let norm = q.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    let qn = *q * (1.0 / norm);
    let vn = *v - qn * sigma_inner(&qn, v, s);
    Ok((qn, vn))
}

/// Membership test for the Clifford torus `x1^2+x2^2 = a^2, x3^2+x4^2 = b^2`.
pub fn on_clifford_torus(q: &Vec4, a: f64, b: f64, tol: f64) -> Result<bool> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::BadParameter(format!(
            "torus radii must be positive, got a = {a}, b = {b}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::BadParameter(format!("tolerance must be positive, got {tol}")));
    }
    let first = q.0[0] * q.0[0] + q.0[1] * q.0[1];
    let second = q.0[2] * q.0[2] + q.0[3] * q.0[3];
    Ok((first - a * a).abs() <= tol && (second - b * b).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const POS: CurvatureSign = CurvatureSign::Positive;
    const NEG: CurvatureSign = CurvatureSign::Negative;

    #[test]
    fn sigma_inner_basis_values() {
        assert_eq!(sigma_inner(&Vec4::basis(0), &Vec4::basis(0), POS), 1.0);
        assert_eq!(sigma_inner(&Vec4::basis(3), &Vec4::basis(3), NEG), -1.0);
        assert_eq!(sigma_inner(&Vec4::basis(0), &Vec4::basis(1), POS), 0.0);
    }

    #[test]
    fn rotation2_examples() {
        assert_eq!(rotation2(0.0, [1.0, 0.0]), [1.0, 0.0]);
        let q = rotation2(PI / 2.0, [1.0, 0.0]);
        assert!(q[0].abs() < 1e-16 && (q[1] - 1.0).abs() < 1e-16);
        let a = rotation2(0.3, rotation2(0.4, [1.0, 0.0]));
        let b = rotation2(0.7, [1.0, 0.0]);
        assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
    }

    #[test]
    fn wedge_examples() {
        let l = wedge(&Vec4::basis(0), &Vec4::basis(1));
        assert_eq!(l.0, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let q = Vec4::new(0.3, 0.1, -0.2, 0.9);
        assert_eq!(wedge(&q, &q), Bivector::ZERO);
    }

    #[test]
    fn project_examples() {
        let (q, v) = project(&Vec4::new(2.0, 0.0, 0.0, 0.0), &Vec4::ZERO, POS).unwrap();
        assert_eq!(q, Vec4::basis(0));
        assert_eq!(v, Vec4::ZERO);

        let (_, v) = project(&Vec4::basis(0), &Vec4::new(0.1, 1.0, 0.0, 0.0), POS).unwrap();
        assert_eq!(v, Vec4::new(0.0, 1.0, 0.0, 0.0));

        let q0 = Vec4::new(0.6, 0.0, 0.8, 0.0);
        let v0 = Vec4::new(0.0, 0.3, 0.0, -0.2);
        let (q1, v1) = project(&q0, &v0, POS).unwrap();
        assert!((q1 - q0).norm() < 1e-16);
        assert!((v1 - v0).norm() < 1e-16);
    }

    #[test]
    fn project_errors() {
        assert_eq!(project(&Vec4::ZERO, &Vec4::ZERO, POS), Err(Error::ZeroVector));
        assert!(matches!(
            project(&Vec4::basis(3), &Vec4::ZERO, NEG),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn clifford_torus_examples() {
        let q = Vec4::new(0.6, 0.0, 0.8, 0.0);
        assert!(on_clifford_torus(&q, 0.6, 0.8, 1e-12).unwrap());
        assert!(!on_clifford_torus(&Vec4::basis(0), 0.6, 0.8, 1e-12).unwrap());
        assert!(matches!(
            on_clifford_torus(&q, 0.0, 0.8, 1e-12),
            Err(Error::BadParameter(_))
        ));
    }

    #[test]
    fn curvature_sign_serde() {
        assert_eq!(CurvatureSign::try_from(1i8), Ok(POS));
        assert!(CurvatureSign::try_from(0i8).is_err());
        assert_eq!(i8::from(NEG), -1);
    }

    fn vec4() -> impl Strategy<Value = Vec4> {
        prop::array::uniform4(-2.0f64..2.0).prop_map(Vec4)
    }

    proptest! {
        #[test]
        fn sigma_inner_symmetric_bilinear(x in vec4(), y in vec4(), z in vec4(), a in -3.0f64..3.0, neg in any::<bool>()) {
            let s = if neg { NEG } else { POS };
            prop_assert!((sigma_inner(&x, &y, s) - sigma_inner(&y, &x, s)).abs() < 1e-14);
            let lhs = sigma_inner(&(x * a + y), &z, s);
            let rhs = a * sigma_inner(&x, &z, s) + sigma_inner(&y, &z, s);
            prop_assert!((lhs - rhs).abs() < 1e-13);
        }

        #[test]
        fn rotation_preserves_norm(angle in -10.0f64..10.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let w = rotation2(angle, [a, b]);
            prop_assert!((w[0].hypot(w[1]) - a.hypot(b)).abs() < 1e-14);
        }

        #[test]
        fn wedge_antisymmetric(q in vec4(), v in vec4()) {
            let a = wedge(&q, &v);
            let b = wedge(&v, &q);
            for k in 0..6 {
                prop_assert_eq!(a.0[k], -b.0[k]);
            }
        }

        #[test]
        fn project_idempotent(q in vec4(), v in vec4()) {
            prop_assume!(q.norm() > 1e-3);
            let (q1, v1) = project(&q, &v, POS).unwrap();
            let (q2, v2) = project(&q1, &v1, POS).unwrap();
            prop_assert!((sigma_inner(&q1, &q1, POS) - 1.0).abs() < 1e-15);
            prop_assert!(sigma_inner(&q1, &v1, POS).abs() < 1e-14 * (1.0 + v.norm()));
            prop_assert!((q2 - q1).norm() < 1e-15);
            prop_assert!((v2 - v1).norm() < 1e-15 * (1.0 + v.norm()));
        }
    }
}
