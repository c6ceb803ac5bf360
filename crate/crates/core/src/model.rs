//! Shared domain types: soliton parameters, the uniform grid, sampled fields
//! and trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{FhdError, Result};

/// Minimum number of nodes a grid may have.
pub const MIN_NODES: usize = 8;

/// The two scalars that parameterize every travelling wave: the frame speed
/// `lambda_speed` and the asymptotic background level `v0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub lambda_speed: f64,
    pub v0: f64,
}

impl SolitonParams {
    pub fn new(lambda_speed: f64, v0: f64) -> Result<Self> {
        if !lambda_speed.is_finite() {
            return Err(FhdError::invalid(format!(
                "lambda must be finite, got {lambda_speed}"
            )));
        }
        if !(v0.is_finite() && v0 > 0.0) {
            return Err(FhdError::invalid(format!(
                "v0 must be finite and positive, got {v0}"
            )));
        }
        Ok(Self { lambda_speed, v0 })
    }

    /// Re-checks the invariants of a value that may have been deserialized.
    pub fn validate(&self) -> Result<()> {
        Self::new(self.lambda_speed, self.v0).map(|_| ())
    }

    /// Simple root of the pseudopotential, `Λ / v0²`.
    pub fn v_turn(&self) -> f64 {
        self.lambda_speed / (self.v0 * self.v0)
    }

    /// Linearized decay rate of the tails, `sqrt((v0³ − Λ) / v0³)`.
    pub fn decay_rate(&self) -> f64 {
        let v03 = self.v0.powi(3);
        ((v03 - self.lambda_speed) / v03).max(0.0).sqrt()
    }
}

/// Uniform 1-D mesh. Periodic grids exclude the right endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    periodic: bool,
    dx: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize, periodic: bool) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(FhdError::invalid(format!(
                "grid bounds must be finite, got [{x_min}, {x_max}]"
            )));
        }
        if x_max <= x_min {
            return Err(FhdError::invalid(format!(
                "grid requires x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        if n < MIN_NODES {
            return Err(FhdError::invalid(format!(
                "grid requires at least {MIN_NODES} nodes, got {n}"
            )));
        }
        let cells = if periodic { n } else { n - 1 };
        let dx = (x_max - x_min) / cells as f64;
        Ok(Self {
            x_min,
            x_max,
            n,
            periodic,
            dx,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Same domain and periodicity with twice the resolution.
    pub fn refined(&self) -> Self {
        let n = if self.periodic {
            2 * self.n
        } else {
            2 * self.n - 1
        };
        Self::new(self.x_min, self.x_max, n, self.periodic).expect("refining a valid grid")
    }

    /// Wraps `x` into `[x_min, x_max)`. Only meaningful on periodic grids.
    pub fn wrap(&self, x: f64) -> f64 {
        let len = self.length();
        let r = (x - self.x_min).rem_euclid(len);
        self.x_min + r
    }
}

/// Values of `v` sampled on the nodes of a grid at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(FhdError::invalid(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.n()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FhdError::invalid(format!(
                "field value at node {i} is not finite"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid1D, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.n()])
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn require_positive(&self, what: &str) -> Result<()> {
        match self.values.iter().position(|&v| v <= 0.0) {
            Some(i) => Err(FhdError::domain(format!(
                "{what} requires positive values, node {i} has {}",
                self.values[i]
            ))),
            None => Ok(()),
        }
    }

    pub(crate) fn require_periodic(&self, what: &str) -> Result<()> {
        if self.grid.is_periodic() {
            Ok(())
        } else {
            Err(FhdError::UnsupportedBoundary(format!(
                "{what} requires a periodic grid"
            )))
        }
    }
}

/// Time-ordered sequence of fields sharing one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    grid: Grid1D,
    times: Vec<f64>,
    frames: Vec<Field>,
}

impl Trajectory {
    pub fn new(grid: Grid1D) -> Self {
        Self {
            grid,
            times: Vec::new(),
            frames: Vec::new(),
        }
    }

    pub fn from_frames(times: Vec<f64>, frames: Vec<Field>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| FhdError::invalid("trajectory needs at least one frame"))?;
        let mut traj = Trajectory::new(*first.grid());
        if times.len() != frames.len() {
            return Err(FhdError::invalid(format!(
                "{} times for {} frames",
                times.len(),
                frames.len()
            )));
        }
        for (t, f) in times.into_iter().zip(frames) {
            traj.push(t, f)?;
        }
        Ok(traj)
    }

    pub fn push(&mut self, t: f64, frame: Field) -> Result<()> {
        if frame.grid() != &self.grid {
            return Err(FhdError::invalid("frame grid differs from trajectory grid"));
        }
        if !t.is_finite() {
            return Err(FhdError::invalid("frame time is not finite"));
        }
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(FhdError::invalid(format!(
                    "times must increase strictly: {t} after {last}"
                )));
            }
        }
        self.times.push(t);
        self.frames.push(frame);
        Ok(())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frames(&self) -> &[Field] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &Field)> {
        self.times.last().copied().zip(self.frames.last())
    }
}
