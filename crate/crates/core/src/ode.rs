//! Dormand–Prince 5(4) embedded Runge–Kutta pair with adaptive steps.

use std::ops::ControlFlow;

use crate::error::{FhdError, Result};

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
// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive stepper for `y' = f(t, y)` on `N` components.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    h: Option<f64>,
    pub accepted: usize,
    pub rejected: usize,
}

impl Dopri5 {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
            h: None,
            accepted: 0,
            rejected: 0,
        }
    }

    /// Advances `(t, y)` to `t_end`, calling `on_step` after every accepted
    /// step. `on_step` stops the integration early with `Break` (leaving
    /// `(t, y)` at the last accepted step) or aborts it with an error.
    pub fn advance<const N: usize>(
        &mut self,
        f: &impl Fn(f64, &[f64; N]) -> [f64; N],
        t: &mut f64,
        y: &mut [f64; N],
        t_end: f64,
        on_step: &mut impl FnMut(f64, &[f64; N]) -> Result<ControlFlow<()>>,
    ) -> Result<ControlFlow<()>> {
        let dir = (t_end - *t).signum();
        if dir == 0.0 {
            return Ok(ControlFlow::Continue(()));
        }
        let mut h = self
            .h
            .unwrap_or_else(|| self.initial_step(f, *t, y))
            .min(self.max_step)
            .abs();
        let mut k1 = f(*t, y);
        let mut steps = 0usize;
        while (t_end - *t) * dir > 0.0 {
            steps += 1;
            if steps > self.max_steps {
                return Err(FhdError::numerical(format!(
                    "ODE integration exceeded {} steps at t = {}",
                    self.max_steps, *t
                )));
            }
            let remaining = (t_end - *t).abs();
            let last = h >= remaining;
            let hs = if last { remaining } else { h } * dir;
            let (y_new, k7, err) = self.trial(f, *t, y, &k1, hs);
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                h *= 0.2;
                self.rejected += 1;
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(FhdError::numerical(format!(
                        "ODE solution blew up near t = {}",
                        *t
                    )));
                }
                continue;
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                *t = if last { t_end } else { *t + hs };
                *y = y_new;
                k1 = k7;
                self.accepted += 1;
                // A clipped final step says nothing about the natural step size.
                if !last {
                    h = (h * fac).min(self.max_step);
                }
                if on_step(*t, y)?.is_break() {
                    self.h = Some(h);
                    return Ok(ControlFlow::Break(()));
                }
            } else {
                self.rejected += 1;
                h *= fac.min(1.0);
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(FhdError::numerical(format!(
                        "ODE step size underflow at t = {}",
                        *t
                    )));
                }
            }
        }
        self.h = Some(h);
        Ok(ControlFlow::Continue(()))
    }

    fn trial<const N: usize>(
        &self,
        f: &impl Fn(f64, &[f64; N]) -> [f64; N],
        t: f64,
        y: &[f64; N],
        k1: &[f64; N],
        h: f64,
    ) -> ([f64; N], [f64; N], f64) {
        let mut k = [[0.0; N]; 7];
        k[0] = *k1;
        for s in 1..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        // Row 6 of A holds the 5th-order weights (FSAL), so stage 7 was
        // evaluated at the new solution.
        let mut y_new = *y;
        for (j, kj) in k.iter().enumerate().take(6) {
            for i in 0..N {
                y_new[i] += h * A[6][j] * kj[i];
            }
        }
        let mut acc = 0.0;
        for i in 0..N {
            let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * h;
            let sc = self.abs_tol + self.rel_tol * y[i].abs().max(y_new[i].abs());
            acc += (e / sc).powi(2);
        }
        (y_new, k[6], (acc / N as f64).sqrt())
    }

    fn initial_step<const N: usize>(
        &self,
        f: &impl Fn(f64, &[f64; N]) -> [f64; N],
        t: f64,
        y: &[f64; N],
    ) -> f64 {
        let f0 = f(t, y);
        let norm = |v: &[f64; N]| {
            (v.iter()
                .zip(y)
                .map(|(a, b)| (a / (self.abs_tol + self.rel_tol * b.abs())).powi(2))
                .sum::<f64>()
                / N as f64)
                .sqrt()
        };
        let d0 = norm(y);
        let d1 = norm(&f0);
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h.min(self.max_step).max(1e-10)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut s = Dopri5::new(1e-11, 1e-13);
        let mut t = 0.0;
        let mut y = [1.0, 0.0];
        let tau = 2.0 * std::f64::consts::PI;
        let _ = s
            .advance(&f, &mut t, &mut y, tau, &mut |_, _| {
                Ok(ControlFlow::Continue(()))
            })
            .unwrap();
        assert_eq!(t, tau);
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);
    }

    #[test]
    fn fifth_order_convergence_on_fixed_steps() {
        // Tolerances loose enough that max_step controls the step.
        let f = |t: f64, y: &[f64; 1]| [t.cos() * y[0]];
        let run = |h: f64| {
            let mut s = Dopri5::new(1.0, 1.0);
            s.max_step = h;
            s.h = Some(h);
            let (mut t, mut y) = (0.0, [1.0]);
            let _ = s
                .advance(&f, &mut t, &mut y, 2.0, &mut |_, _| {
                    Ok(ControlFlow::Continue(()))
                })
                .unwrap();
            (y[0] - 2f64.sin().exp()).abs()
        };
        let order = (run(0.1) / run(0.05)).log2();
        assert!(order > 4.5, "order {order}");
    }

    #[test]
    fn observer_can_abort() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let mut s = Dopri5::new(1e-8, 1e-10);
        let (mut t, mut y) = (0.0, [1.0]);
        let r = s.advance(&f, &mut t, &mut y, 10.0, &mut |_, y| {
            if y[0] > 100.0 {
                Err(FhdError::numerical("too big"))
            } else {
                Ok(ControlFlow::Continue(()))
            }
        });
        assert!(r.is_err());
        assert!(t < 10.0);
        let (mut t, mut y) = (0.0, [1.0]);
        let r = s
            .advance(&f, &mut t, &mut y, 10.0, &mut |_, y| {
                Ok(if y[0] > 2.0 {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                })
            })
            .unwrap();
        assert!(r.is_break());
        assert!(y[0] > 2.0 && t < 1.0);
    }
}
