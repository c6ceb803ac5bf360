//! Numerical laboratory for the financial Harry Dym equation
//! `v_t = v³ (v_xxx − v_x)`.
//!
//! * [`pseudopotential`]: the Sagdeev pseudopotential and soliton existence.
//! * [`tw_solver`]: travelling-wave profiles by quadrature and by shooting.
//! * [`pde`]: method-of-lines evolution, speed tracking, conservation.
//! * [`zero_curvature`]: Lax pair matrices and structure-equation residuals.

pub mod diff;
pub mod error;
pub mod model;
pub mod ode;
pub mod pde;
pub mod pseudopotential;
pub mod quadrature;
pub mod tw_solver;
pub mod zero_curvature;

pub use diff::derivative;
pub use error::{FhdError, Result};
pub use model::{Field, Grid1D, SolitonParams, Trajectory};

/// Builds a uniform grid; see [`Grid1D::new`].
pub fn make_grid(x_min: f64, x_max: f64, n: usize, periodic: bool) -> Result<Grid1D> {
    Grid1D::new(x_min, x_max, n, periodic)
}
