//! Method-of-lines integration of `v_t = v³ (v_xxx − v_x)` on a periodic
//! grid, plus the diagnostics used to check travelling-wave persistence.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::diff::{d1_periodic, d3_periodic};
use crate::error::{FhdError, Result};
use crate::model::{Field, Grid1D, SolitonParams, Trajectory};
use crate::tw_solver::QuadratureWave;

pub const DEFAULT_CFL: f64 = 0.1;
/// Default positivity floor relative to the background level.
pub const DEFAULT_FLOOR_REL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub t_final: f64,
    pub cfl_constant: f64,
    pub output_stride: usize,
    pub positivity_floor: f64,
}

impl EvolveConfig {
    /// Defaults for a background level `v0`: CFL 0.1, floor `0.01·v0`.
    pub fn new(t_final: f64, v0: f64) -> Self {
        Self {
            t_final,
            cfl_constant: DEFAULT_CFL,
            output_stride: 1000,
            positivity_floor: DEFAULT_FLOOR_REL * v0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(FhdError::invalid(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        if !(self.cfl_constant > 0.0 && self.cfl_constant <= 0.5) {
            return Err(FhdError::invalid(format!(
                "cfl_constant must lie in (0, 0.5], got {}",
                self.cfl_constant
            )));
        }
        if !(self.positivity_floor.is_finite() && self.positivity_floor > 0.0) {
            return Err(FhdError::invalid(format!(
                "positivity_floor must be positive, got {}",
                self.positivity_floor
            )));
        }
        if self.output_stride == 0 {
            return Err(FhdError::invalid("output_stride must be >= 1"));
        }
        Ok(())
    }
}

/// `v³ (v_xxx − v_x)` at every node.
pub fn rhs_fhd(field: &Field) -> Result<Field> {
    field.require_periodic("rhs_fhd")?;
    field.require_positive("rhs_fhd")?;
    let mut ws = Workspace::new(field.grid().n());
    let mut out = vec![0.0; field.grid().n()];
    ws.rhs(field.values(), field.grid().dx(), &mut out);
    Field::new(*field.grid(), out)
}

struct Workspace {
    d1: Vec<f64>,
    d3: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            d1: vec![0.0; n],
            d3: vec![0.0; n],
        }
    }

    fn rhs(&mut self, v: &[f64], dx: f64, out: &mut [f64]) {
        d1_periodic(v, dx, &mut self.d1);
        d3_periodic(v, dx, &mut self.d3);
        for (((o, &vi), &a), &b) in out.iter_mut().zip(v).zip(&self.d3).zip(&self.d1) {
            *o = vi * vi * vi * (a - b);
        }
    }
}

/// Trajectory plus step statistics.
#[derive(Debug, Clone)]
pub struct EvolveOutput {
    pub trajectory: Trajectory,
    pub steps: usize,
    pub dt_mean: f64,
    pub dt_min: f64,
    pub dt_max: f64,
}

/// Classical RK4 with `dt = cfl·dx³ / max(v)³`, recomputed every step.
pub fn evolve(field: &Field, config: &EvolveConfig) -> Result<Trajectory> {
    evolve_with_stats(field, config).map(|o| o.trajectory)
}

pub fn evolve_with_stats(field: &Field, config: &EvolveConfig) -> Result<EvolveOutput> {
    config.validate()?;
    field.require_periodic("evolve")?;
    field.require_positive("evolve")?;
    let grid = *field.grid();
    let n = grid.n();
    let dx = grid.dx();

    let mut traj = Trajectory::new(grid);
    traj.push(0.0, field.clone())?;

    let mut ws = Workspace::new(n);
    let mut v = field.values().to_vec();
    let mut stage = vec![0.0; n];
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];

    let mut t = 0.0;
    let mut steps = 0usize;
    let (mut dt_min, mut dt_max) = (f64::INFINITY, 0.0f64);
    let dx3 = dx * dx * dx;

    while t < config.t_final {
        let vmax = v.iter().copied().fold(0.0, f64::max);
        let mut dt = config.cfl_constant * dx3 / (vmax * vmax * vmax);
        let last = t + dt >= config.t_final;
        if last {
            dt = config.t_final - t;
        }

        ws.rhs(&v, dx, &mut k[0]);
        for ((s, &vi), &ki) in stage.iter_mut().zip(&v).zip(&k[0]) {
            *s = vi + 0.5 * dt * ki;
        }
        ws.rhs(&stage, dx, &mut k[1]);
        for ((s, &vi), &ki) in stage.iter_mut().zip(&v).zip(&k[1]) {
            *s = vi + 0.5 * dt * ki;
        }
        ws.rhs(&stage, dx, &mut k[2]);
        for ((s, &vi), &ki) in stage.iter_mut().zip(&v).zip(&k[2]) {
            *s = vi + dt * ki;
        }
        ws.rhs(&stage, dx, &mut k[3]);
        for (i, s) in stage.iter_mut().enumerate() {
            *s = v[i] + dt / 6.0 * (k[0][i] + 2.0 * (k[1][i] + k[2][i]) + k[3][i]);
        }

        let t_new = if last { config.t_final } else { t + dt };
        let bad = stage
            .iter()
            .position(|x| !x.is_finite() || *x < config.positivity_floor);
        if bad.is_some() || t_new <= t {
            let reason = if let Some(i) = bad.filter(|&i| stage[i].is_finite()) {
                format!(
                    "v = {} at node {i} fell below the positivity floor {}",
                    stage[i], config.positivity_floor
                )
            } else if let Some(i) = bad {
                format!("non-finite value at node {i}")
            } else {
                format!("time step {dt:e} underflows (max v = {vmax})")
            };
            if traj.times().last() != Some(&t) {
                traj.push(t, Field::new(grid, v.clone())?)?;
            }
            return Err(FhdError::EvolutionAborted {
                t: t_new,
                reason,
                partial: Box::new(traj),
            });
        }

        std::mem::swap(&mut v, &mut stage);
        t = t_new;
        steps += 1;
        dt_min = dt_min.min(dt);
        dt_max = dt_max.max(dt);
        if last || steps.is_multiple_of(config.output_stride) {
            traj.push(t, Field::new(grid, v.clone())?)?;
        }
    }

    Ok(EvolveOutput {
        trajectory: traj,
        steps,
        dt_mean: config.t_final / steps.max(1) as f64,
        dt_min,
        dt_max,
    })
}

/// Trapezoidal `∫ 1/v dx` over the periodic cell.
pub fn conserved_functional(field: &Field) -> Result<f64> {
    field.require_periodic("conserved_functional")?;
    field.require_positive("conserved_functional")?;
    let sum: f64 = field.values().iter().map(|v| 1.0 / v).sum();
    Ok(sum * field.grid().dx())
}

/// Largest relative change of `∫ 1/v dx` over the frames of a trajectory.
pub fn conservation_drift(traj: &Trajectory) -> Result<f64> {
    let frames = traj.frames();
    let first = frames
        .first()
        .ok_or_else(|| FhdError::invalid("empty trajectory"))?;
    let c0 = conserved_functional(first)?;
    frames.iter().try_fold(0.0f64, |m, f| {
        Ok(m.max((conserved_functional(f)? - c0).abs() / c0.abs()))
    })
}

/// Sub-grid position of the minimum from a parabola through the lowest node
/// and its two neighbours.
pub fn locate_minimum(field: &Field) -> Result<f64> {
    let v = field.values();
    let grid = field.grid();
    let n = v.len();
    let (lo, hi) = (field.min(), field.max());
    if hi - lo <= 1e-10 * hi.abs().max(1.0) {
        return Err(FhdError::numerical(
            "frame is flat: no localized minimum to track",
        ));
    }
    let i = v
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty");
    let (im, ip) = if grid.is_periodic() {
        ((i + n - 1) % n, (i + 1) % n)
    } else if i == 0 || i == n - 1 {
        return Ok(grid.x(i));
    } else {
        (i - 1, i + 1)
    };
    let (fm, f0, fp) = (v[im], v[i], v[ip]);
    let curv = fm - 2.0 * f0 + fp;
    let offset = if curv > 0.0 {
        (0.5 * (fm - fp) / curv).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Ok(grid.x(i) + offset * grid.dx())
}

/// Minimum positions of every frame, unwrapped across the periodic seam.
pub fn track_minimum(traj: &Trajectory) -> Result<Vec<f64>> {
    let len = traj.grid().length();
    let periodic = traj.grid().is_periodic();
    let mut out: Vec<f64> = Vec::with_capacity(traj.len());
    for frame in traj.frames() {
        let mut x = locate_minimum(frame)?;
        if let (true, Some(&prev)) = (periodic, out.last()) {
            x += len * ((prev - x) / len).round();
        }
        out.push(x);
    }
    Ok(out)
}

/// Least-squares slope of the tracked minimum position against time.
pub fn measure_speed(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 2 {
        return Err(FhdError::invalid("speed needs at least two frames"));
    }
    let xs = track_minimum(traj)?;
    let ts = traj.times();
    let m = ts.len() as f64;
    let t_mean = ts.iter().sum::<f64>() / m;
    let x_mean = xs.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, x) in ts.iter().zip(&xs) {
        sxy += (t - t_mean) * (x - x_mean);
        sxx += (t - t_mean) * (t - t_mean);
    }
    Ok(sxy / sxx)
}

/// Periodic band-limited shift: returns `g(x) = f(x + shift)`.
pub fn spectral_shift(field: &Field, shift: f64) -> Result<Field> {
    field.require_periodic("spectral_shift")?;
    let grid = *field.grid();
    let n = grid.n();
    let mut planner = FftPlanner::<f64>::new();
    let fwd: Arc<dyn Fft<f64>> = planner.plan_fft_forward(n);
    let inv: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<f64>> = field
        .values()
        .iter()
        .map(|&x| Complex::new(x, 0.0))
        .collect();
    fwd.process(&mut buf);
    let base = 2.0 * std::f64::consts::PI / grid.length();
    for (m, c) in buf.iter_mut().enumerate() {
        let wave = if m <= n / 2 {
            m as f64
        } else {
            m as f64 - n as f64
        };
        let phase = base * wave * shift;
        if n.is_multiple_of(2) && m == n / 2 {
            // Nyquist mode: keep the real, symmetric part.
            *c *= phase.cos();
        } else {
            *c *= Complex::from_polar(1.0, phase);
        }
    }
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    Field::new(grid, buf.iter().map(|c| c.re * scale).collect())
}

/// Relative L2 distance between `reference` and `moved` shifted back by
/// `displacement`, normalised by the L2 norm of `reference − background`.
pub fn shape_error(
    reference: &Field,
    moved: &Field,
    displacement: f64,
    background: f64,
) -> Result<f64> {
    if reference.grid() != moved.grid() {
        return Err(FhdError::invalid("fields live on different grids"));
    }
    let back = spectral_shift(moved, displacement)?;
    let diff: f64 = back
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let norm: f64 = reference
        .values()
        .iter()
        .map(|r| (r - background) * (r - background))
        .sum();
    if norm == 0.0 {
        return Err(FhdError::numerical("reference has no depression"));
    }
    Ok((diff / norm).sqrt())
}

/// Machine-readable record of a soliton evolution run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub lambda: f64,
    pub v0: f64,
    pub n: usize,
    pub dt_mean: f64,
    pub steps: usize,
    pub t_final: f64,
    pub speed_measured: f64,
    pub displacement: f64,
    pub conservation_drift: f64,
    pub shape_error: f64,
}

/// Evolves the soliton for `params` placed at the centre of `grid` and
/// measures speed, conservation and shape preservation.
pub fn run_soliton(
    params: &SolitonParams,
    grid: &Grid1D,
    config: &EvolveConfig,
) -> Result<(EvolveOutput, RunSummary)> {
    let wave = QuadratureWave::with_defaults(params)?;
    let center = 0.5 * (grid.x_min() + grid.x_max());
    let initial = wave.sample(grid, center)?;
    let out = evolve_with_stats(&initial, config)?;
    let traj = &out.trajectory;
    let speed = measure_speed(traj)?;
    let track = track_minimum(traj)?;
    let displacement = track[track.len() - 1] - track[0];
    let (_, last) = traj.last().expect("non-empty trajectory");
    let summary = RunSummary {
        lambda: params.lambda_speed,
        v0: params.v0,
        n: grid.n(),
        dt_mean: out.dt_mean,
        steps: out.steps,
        t_final: config.t_final,
        speed_measured: speed,
        displacement,
        conservation_drift: conservation_drift(traj)?,
        shape_error: shape_error(&initial, last, displacement, params.v0)?,
    };
    Ok((out, summary))
}
