//! Fourth-order central finite differences on uniform grids.

use crate::error::{FhdError, Result};
use crate::model::Field;

/// Supported derivative orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    First,
    Third,
}

impl TryFrom<u32> for Order {
    type Error = FhdError;

    fn try_from(k: u32) -> Result<Self> {
        match k {
            1 => Ok(Order::First),
            3 => Ok(Order::Third),
            _ => Err(FhdError::invalid(format!(
                "derivative order must be 1 or 3, got {k}"
            ))),
        }
    }
}

/// Derivative of the given order (1 or 3), fourth-order accurate.
///
/// Periodic grids wrap around. On non-periodic grids only the first
/// derivative is available; it switches to one-sided fourth-order stencils
/// at the two nodes next to each end.
pub fn derivative(field: &Field, order: u32) -> Result<Field> {
    let order = Order::try_from(order)?;
    let grid = *field.grid();
    let mut out = vec![0.0; grid.n()];
    match (order, grid.is_periodic()) {
        (Order::First, true) => d1_periodic(field.values(), grid.dx(), &mut out),
        (Order::Third, true) => d3_periodic(field.values(), grid.dx(), &mut out),
        (Order::First, false) => d1_bounded(field.values(), grid.dx(), &mut out),
        (Order::Third, false) => {
            return Err(FhdError::UnsupportedBoundary(
                "third derivative is only implemented on periodic grids".into(),
            ))
        }
    }
    Field::new(grid, out)
}

/// `out = d/dx f` with periodic wraparound.
///
/// Stencil `(f[i-2] - 8 f[i-1] + 8 f[i+1] - f[i+2]) / (12 dx)`.
// Edge nodes index through the wrap-around helper, so index loops read best.
#[allow(clippy::needless_range_loop)]
pub fn d1_periodic(f: &[f64], dx: f64, out: &mut [f64]) {
    let n = f.len();
    debug_assert!(n >= 5 && out.len() == n);
    let c = 1.0 / (12.0 * dx);
    let at = |i: isize| f[i.rem_euclid(n as isize) as usize];
    for i in 0..n.min(2) {
        let i_ = i as isize;
        out[i] = c * (at(i_ - 2) - 8.0 * at(i_ - 1) + 8.0 * at(i_ + 1) - at(i_ + 2));
    }
    for i in 2..n.saturating_sub(2) {
        out[i] = c * (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]);
    }
    for i in n.saturating_sub(2).max(2)..n {
        let i_ = i as isize;
        out[i] = c * (at(i_ - 2) - 8.0 * at(i_ - 1) + 8.0 * at(i_ + 1) - at(i_ + 2));
    }
}

/// `out = d³/dx³ f` with periodic wraparound.
///
/// Stencil `(f[i-3] - 8 f[i-2] + 13 f[i-1] - 13 f[i+1] + 8 f[i+2] - f[i+3]) / (8 dx³)`.
#[allow(clippy::needless_range_loop)]
pub fn d3_periodic(f: &[f64], dx: f64, out: &mut [f64]) {
    let n = f.len();
    debug_assert!(n >= 7 && out.len() == n);
    let c = 1.0 / (8.0 * dx * dx * dx);
    let stencil = |fm3: f64, fm2: f64, fm1: f64, fp1: f64, fp2: f64, fp3: f64| {
        c * ((fm3 - fp3) - 8.0 * (fm2 - fp2) + 13.0 * (fm1 - fp1))
    };
    let at = |i: isize| f[i.rem_euclid(n as isize) as usize];
    let wrapped = |i: usize| {
        let i = i as isize;
        stencil(
            at(i - 3),
            at(i - 2),
            at(i - 1),
            at(i + 1),
            at(i + 2),
            at(i + 3),
        )
    };
    for i in 0..3 {
        out[i] = wrapped(i);
    }
    for i in 3..n - 3 {
        out[i] = stencil(f[i - 3], f[i - 2], f[i - 1], f[i + 1], f[i + 2], f[i + 3]);
    }
    for i in n - 3..n {
        out[i] = wrapped(i);
    }
}

fn d1_bounded(f: &[f64], dx: f64, out: &mut [f64]) {
    let n = f.len();
    let c = 1.0 / (12.0 * dx);
    out[0] = c * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
    out[1] = c * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
    for i in 2..n - 2 {
        out[i] = c * (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]);
    }
    let m = n - 1;
    out[m] =
        -c * (-25.0 * f[m] + 48.0 * f[m - 1] - 36.0 * f[m - 2] + 16.0 * f[m - 3] - 3.0 * f[m - 4]);
    out[m - 1] = -c * (-3.0 * f[m] - 10.0 * f[m - 1] + 18.0 * f[m - 2] - 6.0 * f[m - 3] + f[m - 4]);
}
