//! Numerical tools for positive elliptic-elliptic rotopulsators of the curved
//! n-body problem on the unit 3-sphere.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod manifold;
mod ode;
pub mod rotopulse;
pub mod solver;

pub use analysis::{
    cancellation_signature, lemma1_residuals, lemma4_residuals, polygon_report, theorem_verdict,
    ultimate_identity_check, CancellationSignature, Lemma1Residuals, Lemma4Report, PolygonReport,
    SignatureOptions, TheoremVerdict,
};
pub use dynamics::{
    acceleration, angular_momentum, integrate, Body, IntegratorOptions, SystemState, Trajectory, TrajectorySample,
};
pub use error::{Error, Result};
pub use manifold::{Bivector, CurvatureSign, Vec4};
pub use rotopulse::{
    criterion_residuals, embed, integrate_reduced, reduced_rhs, CriterionReport, FiberState, ReducedOptions,
    ReducedSample, ReducedTrajectory, RotopulsatorShape,
};
pub use solver::{build_constraint_matrix, solve_masses, FeasibilityResult, FeasibilityStatus, SolverOptions};
