use std::f64::consts::TAU;

use rotolab_core::dynamics::integrate;
use rotolab_core::{
    embed, integrate_reduced, lemma1_residuals, FiberState, IntegratorOptions, ReducedOptions, RotopulsatorShape,
};

fn triangle() -> RotopulsatorShape {
    RotopulsatorShape::equal_masses((0..3).map(|i| TAU * i as f64 / 3.0).collect(), vec![0.0; 3]).unwrap()
}

fn square_twisted() -> RotopulsatorShape {
    // regular in both angle families, with a non-trivial β polygon
    RotopulsatorShape::equal_masses(
        (0..4).map(|i| TAU * i as f64 / 4.0).collect(),
        (0..4).map(|i| TAU * (i % 2) as f64 / 2.0 + 0.3).collect(),
    )
    .unwrap()
}

fn max_position_gap(shape: &RotopulsatorShape, fiber0: FiberState, dt: f64, t_end: f64) -> (f64, f64) {
    let reduced = integrate_reduced(shape, &fiber0, dt, t_end, &ReducedOptions::default()).unwrap();
    let opts = IntegratorOptions { sample_interval: Some(dt), ..Default::default() };
    let full = integrate(&embed(shape, &fiber0).unwrap(), dt, t_end, &opts).unwrap();
    assert_eq!(reduced.samples.len(), full.samples.len());

    let mut gap: f64 = 0.0;
    for (rs, fs) in reduced.samples.iter().zip(&full.samples) {
        assert!((rs.t - fs.t()).abs() < 1e-12);
        let lifted = embed(shape, &rs.fiber).unwrap();
        for (a, b) in lifted.bodies.iter().zip(&fs.state.bodies) {
            gap = gap.max((a.q - b.q).norm());
        }
    }
    (gap, reduced.r_range())
}

#[test]
fn triangle_breathing_matches_full_equations() {
    let fiber0 = FiberState::new(0.5, 0.1, 0.0, 0.0, 0.3, 0.0).unwrap();
    let (gap, range) = max_position_gap(&triangle(), fiber0, 1e-2, 2.0);
    assert!(gap < 1e-6, "gap {gap}");
    assert!(range > 0.05, "r range {range}");
}

#[test]
fn twisted_square_matches_full_equations() {
    let fiber0 = FiberState::new(0.6, -0.05, 0.2, 1.0, 0.25, 0.1).unwrap();
    let (gap, range) = max_position_gap(&square_twisted(), fiber0, 1e-2, 1.5);
    assert!(gap < 1e-6, "gap {gap}");
    assert!(range > 1e-3, "r range {range}");
}

#[test]
fn conserved_rates_from_sampled_output() {
    // keeps r above 0.28; deeper dives make θ̇ large and the stencil's h⁴ term dominate
    let fiber0 = FiberState::new(0.5, 0.1, 0.0, 0.0, 0.5, 0.2).unwrap();
    let tr = integrate_reduced(&triangle(), &fiber0, 1e-3, 1.0, &ReducedOptions::default()).unwrap();
    let res = lemma1_residuals(&tr.samples).unwrap();
    assert!(res.theta < 1e-8 && res.phi < 1e-8, "{res:?}");
}

#[test]
fn corrupted_angle_is_detected() {
    let fiber0 = FiberState::new(0.5, 0.1, 0.0, 0.0, 0.5, 0.2).unwrap();
    let mut tr = integrate_reduced(&triangle(), &fiber0, 1e-3, 1.0, &ReducedOptions::default()).unwrap();
    let mid = tr.samples.len() / 2;
    tr.samples[mid].fiber.theta += 1e-3;
    let res = lemma1_residuals(&tr.samples).unwrap();
    assert!(res.theta > 1e-2, "{res:?}");
}

#[test]
fn fixed_step_drift_converges_at_high_order() {
    let fiber0 = FiberState::new(0.5, 0.1, 0.0, 0.0, 0.3, 0.0).unwrap();
    let state = embed(&triangle(), &fiber0).unwrap();
    let drift = |dt: f64| {
        let opts = IntegratorOptions { fixed_step: true, ..Default::default() };
        integrate(&state, dt, 1.0, &opts).unwrap().max_drift
    };
    let (d1, d2, d3) = (drift(0.05), drift(0.025), drift(0.0125));
    assert!(d1 / d3 >= 16.0, "drifts {d1:e} {d2:e} {d3:e}");
    assert!(d1 > d2 && d2 > d3);
}
