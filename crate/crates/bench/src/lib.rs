//! Shared fixtures for the benchmarks in `benches/`.

use fhd_core::tw_solver::QuadratureWave;
use fhd_core::{make_grid, Field, SolitonParams};

/// The Λ = 0.5, v0 = 1 soliton sampled on `n` nodes of the periodic
/// window `[−40, 40)`.
pub fn soliton_field(n: usize) -> Field {
    let params = SolitonParams::new(0.5, 1.0).expect("valid parameters");
    let grid = make_grid(-40.0, 40.0, n, true).expect("valid grid");
    QuadratureWave::with_defaults(&params)
        .and_then(|w| w.sample(&grid, 0.0))
        .expect("soliton samples")
}
