//! Dormand–Prince 5(4) stepping on flat state vectors.
//!
//! Used by both the full equations of motion and the reduced fiber system. The
//! driver advances to caller-chosen targets exactly so that output samples land
//! on a uniform grid, and hands every accepted step to a hook that may modify
//! the state (projection, domain checks).

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Step-size policy.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Control {
    pub rtol: f64,
    pub atol: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub fixed: bool,
}

pub(crate) struct Stepper {
    ctrl: Control,
    h: f64,
    k: Vec<Vec<f64>>,
    stage: Vec<f64>,
    y_new: Vec<f64>,
}

impl Stepper {
    pub fn new(dim: usize, h0: f64, ctrl: Control) -> Self {
        Stepper {
            ctrl,
            h: h0.min(ctrl.dt_max),
            k: vec![vec![0.0; dim]; 7],
            stage: vec![0.0; dim],
            y_new: vec![0.0; dim],
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn attempt<F>(&mut self, rhs: &mut F, t: f64, y: &[f64], h: f64) -> Result<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        rhs(t, y, &mut self.k[0])?;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += a * self.k[j][i];
                }
                self.stage[i] = y[i] + h * acc;
            }
            rhs(t + C[s] * h, &self.stage, &mut self.k[s])?;
        }
        // stage 7 sits at the fifth-order solution
        self.y_new.copy_from_slice(&self.stage);

        let mut sum = 0.0;
        for i in 0..n {
            let mut err = 0.0;
            for (s, e) in E.iter().enumerate() {
                err += e * self.k[s][i];
            }
            err *= h;
            let scale = self.ctrl.atol + self.ctrl.rtol * y[i].abs().max(self.y_new[i].abs());
            sum += (err / scale).powi(2);
        }
        Ok((sum / n as f64).sqrt())
    }

    /// Advance `(t, y)` to exactly `target`, calling `on_accept` after each step.
    pub fn advance_to<F, G>(
        &mut self,
        rhs: &mut F,
        t: &mut f64,
        y: &mut [f64],
        target: f64,
        on_accept: &mut G,
    ) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
        G: FnMut(f64, &mut [f64]) -> Result<()>,
    {
        let eps = 1e-13 * target.abs().max(1.0);
        while target - *t > eps {
            let remaining = target - *t;
            let mut h = self.h.min(remaining);
            let last = remaining - h <= eps;
            if last {
                h = remaining;
            }
            if self.ctrl.fixed {
                self.attempt(rhs, *t, y, h)?;
                *t = if last { target } else { *t + h };
                y.copy_from_slice(&self.y_new);
                on_accept(*t, y)?;
                continue;
            }
            let err = self.attempt(rhs, *t, y, h)?;
            if err <= 1.0 {
                *t = if last { target } else { *t + h };
                y.copy_from_slice(&self.y_new);
                on_accept(*t, y)?;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a step clipped to hit the target says nothing about the natural size
                if !(last && h < self.h) {
                    self.h = (h * factor).min(self.ctrl.dt_max);
                }
            } else {
                let factor = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                self.h = h * factor;
                if self.h < self.ctrl.dt_min {
                    return Err(Error::StepUnderflow { t: *t, h: self.h });
                }
            }
        }
        *t = target;
        Ok(())
    }
}
