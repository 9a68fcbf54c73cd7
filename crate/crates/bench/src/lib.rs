//! Fixtures shared by the benchmarks.

use std::f64::consts::TAU;

use rotolab_core::{embed, FiberState, RotopulsatorShape, SystemState};

pub fn regular_angles(n: usize) -> Vec<f64> {
    (0..n).map(|i| TAU * i as f64 / n as f64).collect()
}

/// Equal masses on a regular `n`-gon in the first plane, all `β` zero.
pub fn regular_shape(n: usize) -> RotopulsatorShape {
    RotopulsatorShape::equal_masses(regular_angles(n), vec![0.0; n]).expect("regular polygon is a valid shape")
}

/// A breathing orbit with `r` between roughly 0.3 and 0.7.
pub fn breathing_fiber() -> FiberState {
    FiberState::new(0.5, 0.1, 0.0, 0.0, 0.3, 0.0).expect("fiber inside the torus range")
}

pub fn breathing_state(n: usize) -> SystemState {
    embed(&regular_shape(n), &breathing_fiber()).expect("regular shape embeds")
}

/// Regular angles with every vertex after the first shifted by a fixed amount.
pub fn perturbed_angles(n: usize, shift: f64) -> Vec<f64> {
    regular_angles(n)
        .into_iter()
        .enumerate()
        .map(|(i, a)| if i == 0 { a } else { a + shift * if i % 2 == 0 { 1.0 } else { -1.0 } })
        .collect()
}
