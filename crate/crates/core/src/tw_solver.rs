//! Travelling-wave profiles `v(ξ)`, built two independent ways.
//!
//! *Quadrature* inverts the first integral `dξ = dv / sqrt(−2 S(v))`. With
//! `a = Λ/v0²`, `U = sqrt(v0 − a)` and `v = a + u²` the integrand becomes
//! `2 sqrt(a + u²) / (U² − u²)`, analytic at the turning point. The simple
//! pole at `u = U` is subtracted in closed form:
//!
//! ```text
//! ξ(u) = ∫₀ᵘ G(s) ds + w/κ,   w = −ln(1 − u/U),   κ = U / sqrt(v0)
//! ```
//!
//! where `G` is the (bounded, smooth) remainder. The table is built on a
//! uniform `w` mesh, which is close to uniform in `ξ`.
//!
//! *Shooting* integrates `v'' = (Λ/2)(1/v² − 1/v0²) + (v − v0)` outward
//! from the minimum with an adaptive Dormand–Prince pair. Close to `v0` the
//! orbit approaches a saddle, so once `v0 − v` is small the solution is
//! continued by its two-term exponential tail.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{FhdError, Result};
use crate::model::{Field, Grid1D, SolitonParams, Trajectory};
use crate::ode::Dopri5;
use crate::pseudopotential::{require_soliton, s_unchecked};
use crate::quadrature;

/// Default `tail_cut` relative to the depth `v0 − v_turn`.
pub const DEFAULT_TAIL_CUT_REL: f64 = 1e-8;
pub const DEFAULT_QUADRATURE_POINTS: usize = 2000;
pub const SHOOTING_REL_TOL: f64 = 1e-10;
pub const SHOOTING_ABS_TOL: f64 = 1e-12;
/// Shooting hands over to the tail once `v0 − v` drops below this fraction
/// of the depth.
pub const SHOOTING_TAIL_SWITCH: f64 = 1e-3;
/// Shooting windows must reach this many decay lengths on each side.
pub const MIN_DECAY_LENGTHS: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Quadrature,
    Shooting,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Quadrature => "quadrature",
            Method::Shooting => "shooting",
        })
    }
}

/// Sampled even profile with its minimum at `ξ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub xi: Vec<f64>,
    pub v: Vec<f64>,
    pub params: SolitonParams,
    pub method: Method,
}

impl Profile {
    pub fn min_value(&self) -> f64 {
        self.v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest `|v(ξ) − v(−ξ)|` over sample pairs mirrored about zero.
    pub fn symmetry_defect(&self) -> f64 {
        let tol = 1e-12 * self.xi.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let mut worst = 0.0f64;
        for (i, &x) in self.xi.iter().enumerate() {
            if x <= 0.0 {
                continue;
            }
            let j = self
                .xi
                .partition_point(|&y| y < -x - tol)
                .min(self.xi.len() - 1);
            if (self.xi[j] + x).abs() <= tol {
                worst = worst.max((self.v[i] - self.v[j]).abs());
            }
        }
        worst
    }

    /// Cubic Hermite interpolation using the exact slopes
    /// `v' = sign(ξ) sqrt(−2 S(v))`; exponential tail outside the samples.
    pub fn value_at(&self, xi: f64) -> f64 {
        let p = &self.params;
        let n = self.xi.len();
        let (x0, xn) = (self.xi[0], self.xi[n - 1]);
        if xi <= x0 || xi >= xn {
            let (edge, v_edge) = if xi <= x0 {
                (x0, self.v[0])
            } else {
                (xn, self.v[n - 1])
            };
            return p.v0 - (p.v0 - v_edge) * (-p.decay_rate() * (xi - edge).abs()).exp();
        }
        let k = self.xi.partition_point(|&x| x <= xi).clamp(1, n - 1) - 1;
        let (xa, xb) = (self.xi[k], self.xi[k + 1]);
        let (va, vb) = (self.v[k], self.v[k + 1]);
        let slope = |x: f64, v: f64| {
            let s = s_unchecked(v, p).min(0.0);
            (-2.0 * s).sqrt() * x.signum()
        };
        let (da, db) = (slope(xa, va), slope(xb, vb));
        let h = xb - xa;
        let t = (xi - xa) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * va
            + (t3 - 2.0 * t2 + t) * h * da
            + (-2.0 * t3 + 3.0 * t2) * vb
            + (t3 - t2) * h * db
    }
}

/// Depth and full width at half depth of a depression profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileMetrics {
    pub depth: f64,
    pub fwhm: f64,
}

/// Metrics record as exported next to each profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub lambda: f64,
    pub v0: f64,
    pub depth: f64,
    pub fwhm: f64,
    pub method: Method,
}

impl MetricsRecord {
    pub fn new(profile: &Profile, metrics: ProfileMetrics) -> Self {
        Self {
            lambda: profile.params.lambda_speed,
            v0: profile.params.v0,
            depth: metrics.depth,
            fwhm: metrics.fwhm,
            method: profile.method,
        }
    }
}

/// `depth = v0 − min v`; `fwhm` is the width of `{ξ : v ≤ v0 − depth/2}`
/// with crossings located by linear interpolation.
pub fn profile_metrics(profile: &Profile) -> Result<ProfileMetrics> {
    let v0 = profile.params.v0;
    let (xi, v) = (&profile.xi, &profile.v);
    if xi.len() != v.len() || xi.len() < 3 {
        return Err(FhdError::invalid("profile needs >= 3 matching samples"));
    }
    let depth = v0 - profile.min_value();
    if depth < 1e-12 {
        return Err(FhdError::numerical(format!(
            "flat profile (depth {depth:e}): metrics undefined"
        )));
    }
    let level = v0 - 0.5 * depth;
    let crossing = |i: usize| xi[i] + (level - v[i]) * (xi[i + 1] - xi[i]) / (v[i + 1] - v[i]);
    let left = (0..v.len() - 1)
        .find(|&i| v[i] > level && v[i + 1] <= level)
        .map(crossing);
    let right = (0..v.len() - 1)
        .rev()
        .find(|&i| v[i] <= level && v[i + 1] > level)
        .map(crossing);
    match (left, right) {
        (Some(l), Some(r)) => Ok(ProfileMetrics { depth, fwhm: r - l }),
        _ => Err(FhdError::numerical(
            "half-depth level is not crossed on both flanks",
        )),
    }
}

/// Quadrature representation of the soliton; evaluates `v(ξ)` to near
/// machine precision anywhere.
#[derive(Debug, Clone)]
pub struct QuadratureWave {
    params: SolitonParams,
    a: f64,
    u_cap: f64,
    kappa: f64,
    sqrt_v0: f64,
    // Table on the w mesh: w_k, u_k, ξ_k, starting at the turning point.
    w: Vec<f64>,
    u: Vec<f64>,
    xi: Vec<f64>,
    tail_cut: f64,
}

impl QuadratureWave {
    pub fn new(params: &SolitonParams, n_points: usize, tail_cut: f64) -> Result<Self> {
        require_soliton(params)?;
        if n_points < 8 {
            return Err(FhdError::invalid(format!(
                "quadrature profile needs at least 8 points, got {n_points}"
            )));
        }
        let a = params.v_turn();
        let depth = params.v0 - a;
        if !(tail_cut > 0.0 && tail_cut < depth) {
            return Err(FhdError::invalid(format!(
                "tail_cut must lie in (0, {depth}), got {tail_cut}"
            )));
        }
        let u_cap = depth.sqrt();
        let sqrt_v0 = params.v0.sqrt();
        let mut wave = Self {
            params: *params,
            a,
            u_cap,
            kappa: u_cap / sqrt_v0,
            sqrt_v0,
            w: Vec::with_capacity(n_points),
            u: Vec::with_capacity(n_points),
            xi: Vec::with_capacity(n_points),
            tail_cut,
        };
        let u_cut = (depth - tail_cut).sqrt();
        let w_cut = -(-u_cut / u_cap).ln_1p();
        let h = w_cut / (n_points - 1) as f64;
        let mut xi = 0.0;
        let mut u_prev = 0.0;
        for k in 0..n_points {
            let w = if k + 1 == n_points {
                w_cut
            } else {
                k as f64 * h
            };
            let u = if k + 1 == n_points {
                u_cut
            } else {
                wave.u_of_w(w)
            };
            if k > 0 {
                let seg =
                    quadrature::integrate(|s| wave.remainder(s), u_prev, u, 1e-17, 1e-15, 200)
                        .map_err(|e| {
                            FhdError::numerical(format!(
                                "quadrature of xi(v) failed on u in [{u_prev}, {u}] \
                         (lambda = {}, v0 = {}): {e}",
                                params.lambda_speed, params.v0
                            ))
                        })?;
                xi += seg.value;
            }
            wave.w.push(w);
            wave.u.push(u);
            wave.xi.push(xi + w / wave.kappa);
            u_prev = u;
        }
        Ok(wave)
    }

    /// Default table density and tail cut.
    pub fn with_defaults(params: &SolitonParams) -> Result<Self> {
        let depth = params.v0 - params.v_turn();
        Self::new(
            params,
            DEFAULT_QUADRATURE_POINTS,
            DEFAULT_TAIL_CUT_REL * depth,
        )
    }

    pub fn params(&self) -> &SolitonParams {
        &self.params
    }

    /// `ξ` at which the table ends and the exponential tail takes over.
    pub fn xi_cut(&self) -> f64 {
        *self.xi.last().expect("non-empty table")
    }

    fn u_of_w(&self, w: f64) -> f64 {
        // u = U (1 − e^{−w})
        -self.u_cap * (-w).exp_m1()
    }

    /// Regular part `G(s) = (F(s) − F(U)) / (U − s)` of the integrand with
    /// `F(s) = 2 sqrt(a + s²) / (U + s)`, written without cancellation.
    fn remainder(&self, s: f64) -> f64 {
        let (a, uc, v0) = (self.a, self.u_cap, self.params.v0);
        let alpha = 4.0 * uc * uc - v0;
        let delta = uc * (v0 - 4.0 * a);
        let r = 2.0 * uc * (a + s * s).sqrt() + self.sqrt_v0 * (uc + s);
        -(alpha * s + delta) / (uc * (uc + s) * r)
    }

    /// `dξ/dw = 2 sqrt(a + u²) / (U + u)`.
    fn dxi_dw(&self, u: f64) -> f64 {
        2.0 * (self.a + u * u).sqrt() / (self.u_cap + u)
    }

    /// `ξ(w)` starting from table node `k`; the panel is short enough that
    /// one Gauss–Kronrod rule is exact to round-off.
    fn xi_from_node(&self, k: usize, w: f64) -> Result<(f64, f64)> {
        let u = self.u_of_w(w);
        let seg = quadrature::integrate(|s| self.remainder(s), self.u[k], u, 1e-17, 1e-15, 50)?;
        let xi = self.xi[k] - self.w[k] / self.kappa + seg.value + w / self.kappa;
        Ok((xi, u))
    }

    /// `v(ξ)` for the profile centred at `ξ = 0`.
    pub fn value_at(&self, xi: f64) -> Result<f64> {
        if !xi.is_finite() {
            return Err(FhdError::invalid("xi must be finite"));
        }
        let target = xi.abs();
        let v0 = self.params.v0;
        let n = self.xi.len();
        if target >= self.xi[n - 1] {
            let ext = (-self.kappa * (target - self.xi[n - 1])).exp();
            return Ok(v0 - self.tail_cut * ext);
        }
        let k = self.xi.partition_point(|&x| x <= target).clamp(1, n - 1) - 1;
        let (mut lo, mut hi) = (self.w[k], self.w[k + 1]);
        let frac = (target - self.xi[k]) / (self.xi[k + 1] - self.xi[k]);
        let mut w = lo + frac * (hi - lo);
        let mut u = self.u_of_w(w);
        for _ in 0..60 {
            let (x, uu) = self.xi_from_node(k, w)?;
            u = uu;
            let r = x - target;
            if r > 0.0 {
                hi = w;
            } else {
                lo = w;
            }
            let step = r / self.dxi_dw(u);
            let mut next = w - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - w).abs() <= 4.0 * f64::EPSILON * w.abs().max(1e-300) {
                w = next;
                u = self.u_of_w(w);
                break;
            }
            w = next;
        }
        Ok(self.a + u * u)
    }

    /// The tabulated profile, mirrored about `ξ = 0`.
    pub fn profile(&self) -> Profile {
        let n = self.xi.len();
        let mut xi = Vec::with_capacity(2 * n - 1);
        let mut v = Vec::with_capacity(2 * n - 1);
        for k in (1..n).rev() {
            xi.push(-self.xi[k]);
            v.push(self.a + self.u[k] * self.u[k]);
        }
        for k in 0..n {
            xi.push(self.xi[k]);
            v.push(self.a + self.u[k] * self.u[k]);
        }
        Profile {
            xi,
            v,
            params: self.params,
            method: Method::Quadrature,
        }
    }

    /// The soliton centred at `center`, sampled on `grid`. Periodic grids use
    /// the minimum-image distance to the centre.
    pub fn sample(&self, grid: &Grid1D, center: f64) -> Result<Field> {
        let len = grid.length();
        let values = grid
            .nodes()
            .into_iter()
            .map(|x| {
                let mut d = x - center;
                if grid.is_periodic() {
                    d -= len * (d / len).round();
                }
                self.value_at(d)
            })
            .collect::<Result<Vec<_>>>()?;
        Field::new(*grid, values)
    }

    /// Exact travelling solution `v(x − center − Λ t)` recorded at `times`.
    pub fn travelling_trajectory(
        &self,
        grid: &Grid1D,
        center: f64,
        times: &[f64],
    ) -> Result<Trajectory> {
        let mut traj = Trajectory::new(*grid);
        for &t in times {
            let frame = self.sample(grid, center + self.params.lambda_speed * t)?;
            traj.push(t, frame)?;
        }
        Ok(traj)
    }
}

/// Profile from the first integral, tabulated on `n_points` nodes per flank
/// up to `v0 − tail_cut`.
pub fn profile_by_quadrature(
    params: &SolitonParams,
    n_points: usize,
    tail_cut: f64,
) -> Result<Profile> {
    Ok(QuadratureWave::new(params, n_points, tail_cut)?.profile())
}

/// Diagnostics gathered along the shooting solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingReport {
    /// Largest `|v'²/2 + S(v)|` over accepted steps.
    pub max_energy_residual: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Where the exponential tail took over.
    pub xi_switch: f64,
}

/// Profile on `grid` from outward integration of the second-order ODE.
pub fn profile_by_shooting(params: &SolitonParams, grid: &Grid1D) -> Result<Profile> {
    shoot(params, grid).map(|(p, _)| p)
}

/// Travelling-wave ODE `v'' = (Λ/2)(1/v² − 1/v0²) + (v − v0)`.
pub fn tw_rhs(v: f64, params: &SolitonParams) -> f64 {
    let v0 = params.v0;
    0.5 * params.lambda_speed * (1.0 / (v * v) - 1.0 / (v0 * v0)) + (v - v0)
}

/// Like [`profile_by_shooting`], also returning integration diagnostics.
pub fn shoot(params: &SolitonParams, grid: &Grid1D) -> Result<(Profile, ShootingReport)> {
    require_soliton(params)?;
    let p = *params;
    let v0 = p.v0;
    let a = p.v_turn();
    let kappa = p.decay_rate();
    let nodes = grid.nodes();
    let dx = grid.dx();

    if !nodes.iter().any(|x| x.abs() <= 1e-9 * dx) {
        return Err(FhdError::invalid(
            "shooting grid must contain a node at xi = 0",
        ));
    }
    let reach = (-grid.x_min()).min(grid.x_max());
    if reach * kappa < MIN_DECAY_LENGTHS {
        return Err(FhdError::invalid(format!(
            "shooting window reaches {reach} on each side, need {} decay lengths ({})",
            MIN_DECAY_LENGTHS,
            MIN_DECAY_LENGTHS / kappa
        )));
    }

    let mut targets: Vec<f64> = nodes.iter().map(|x| x.abs()).filter(|&x| x > 0.0).collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * dx);

    let f = |_xi: f64, y: &[f64; 2]| [y[1], tw_rhs(y[0], &p)];
    let energy = |y: &[f64; 2]| 0.5 * y[1] * y[1] + s_unchecked(y[0], &p);
    let mut solver = Dopri5::new(SHOOTING_REL_TOL, SHOOTING_ABS_TOL);
    solver.max_step = dx;

    let switch_delta = SHOOTING_TAIL_SWITCH * (v0 - a);
    let mut t = 0.0;
    let mut y = [a, 0.0];
    let mut max_res = energy(&y).abs();
    let mut values: Vec<(f64, f64)> = vec![(0.0, a)];
    let mut switched = false;

    for &target in &targets {
        if !switched {
            let flow = solver.advance(&f, &mut t, &mut y, target, &mut |xi, y| {
                if y[0].is_nan() || y[0] <= 0.0 || y[0] > v0 || y[1] < 0.0 {
                    return Err(FhdError::numerical(format!(
                        "shooting left the orbit at xi = {xi}: v = {}, v' = {}",
                        y[0], y[1]
                    )));
                }
                max_res = max_res.max(energy(y).abs());
                Ok(if v0 - y[0] <= switch_delta {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                })
            })?;
            switched = flow.is_break();
            if !switched {
                values.push((target, y[0]));
                continue;
            }
        }
        values.push((target, v0 - tail_delta(&p, v0 - y[0], target - t)));
    }
    if !switched {
        // Window ended before the hand-over point; fine as long as it was wide.
        t = *targets.last().unwrap_or(&0.0);
    }

    let lookup = |x: f64| -> f64 {
        let ax = x.abs();
        let i = values.partition_point(|&(xi, _)| xi < ax - 1e-12 * dx);
        values[i.min(values.len() - 1)].1
    };
    let v: Vec<f64> = nodes.iter().map(|&x| lookup(x)).collect();
    Ok((
        Profile {
            xi: nodes,
            v,
            params: p,
            method: Method::Shooting,
        },
        ShootingReport {
            max_energy_residual: max_res,
            accepted_steps: solver.accepted,
            rejected_steps: solver.rejected,
            xi_switch: t,
        },
    ))
}

/// Continues `δ = v0 − v` from `delta_s` over a distance `s` along the
/// stable manifold: `δ = C e^{−κs} + β C² e^{−2κs}`, `β = S'''(v0)/(6κ²)`.
fn tail_delta(p: &SolitonParams, delta_s: f64, s: f64) -> f64 {
    let kappa = p.decay_rate();
    let s3 = -3.0 * p.lambda_speed / p.v0.powi(4);
    let beta = s3 / (6.0 * kappa * kappa);
    // Solve C + βC² = δ_s for the root that tends to δ_s as β → 0.
    let disc = 1.0 + 4.0 * beta * delta_s;
    let c = 2.0 * delta_s / (1.0 + disc.sqrt());
    let e = (-kappa * s).exp();
    c * e + beta * c * c * e * e
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(l: f64) -> SolitonParams {
        SolitonParams::new(l, 1.0).unwrap()
    }

    #[test]
    fn quadrature_anchors_at_turning_point() {
        let p = params(0.5);
        let prof = profile_by_quadrature(&p, 400, 1e-8 * 0.5).unwrap();
        assert_eq!(prof.min_value(), 0.5);
        let mid = prof.xi.iter().position(|&x| x == 0.0).unwrap();
        assert_eq!(prof.v[mid], 0.5);
        // Monotone flanks approaching but not reaching v0.
        assert!(prof.v[mid..].windows(2).all(|w| w[1] > w[0]));
        assert!(*prof.v.last().unwrap() < 1.0);
        assert_eq!(prof.symmetry_defect(), 0.0);
    }

    #[test]
    fn quadrature_rejects_bad_inputs() {
        assert!(profile_by_quadrature(&params(1.0), 100, 1e-9).is_err());
        assert!(profile_by_quadrature(&params(1.5), 100, 1e-9).is_err());
        assert!(profile_by_quadrature(&params(0.5), 4, 1e-9).is_err());
        assert!(profile_by_quadrature(&params(0.5), 100, 0.0).is_err());
    }

    #[test]
    fn tail_extension_grows_by_log_increment() {
        // Halving tail_cut extends the table by ln(2)/κ up to O(tail_cut).
        let p = params(0.5);
        let depth = 0.5;
        let a = QuadratureWave::new(&p, 500, 1e-6 * depth).unwrap();
        let b = QuadratureWave::new(&p, 500, 0.5e-6 * depth).unwrap();
        let inc = b.xi_cut() - a.xi_cut();
        let expected = 2f64.ln() / 0.5f64.sqrt();
        assert!((inc - expected).abs() < 1e-5, "{inc} vs {expected}");
    }

    #[test]
    fn evaluator_reproduces_table_nodes() {
        let p = params(0.3);
        let wave = QuadratureWave::new(&p, 300, 1e-9).unwrap();
        let prof = wave.profile();
        for (x, v) in prof.xi.iter().zip(&prof.v).step_by(7) {
            assert!((wave.value_at(*x).unwrap() - v).abs() < 1e-14);
        }
    }

    #[test]
    fn shooting_matches_quadrature() {
        let p = params(0.5);
        let grid = Grid1D::new(-40.0, 40.0, 1024, true).unwrap();
        let (prof, rep) = shoot(&p, &grid).unwrap();
        let wave = QuadratureWave::with_defaults(&p).unwrap();
        let err = prof
            .xi
            .iter()
            .zip(&prof.v)
            .map(|(&x, &v)| (v - wave.value_at(x).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "max discrepancy {err}");
        assert!(rep.max_energy_residual < 1e-9);
        assert!((prof.min_value() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn shooting_requires_wide_window_through_zero() {
        let p = params(0.5);
        let narrow = Grid1D::new(-10.0, 10.0, 256, true).unwrap();
        assert!(shoot(&p, &narrow).is_err());
        let shifted = Grid1D::new(-40.0 + 0.013, 40.0 + 0.013, 1024, true).unwrap();
        assert!(shoot(&p, &shifted).is_err());
    }

    #[test]
    fn metrics_of_known_depths() {
        for (l, d) in [(0.2, 0.8), (0.5, 0.5), (0.8, 0.2)] {
            let prof = profile_by_quadrature(&params(l), 500, 1e-9).unwrap();
            let m = profile_metrics(&prof).unwrap();
            assert!((m.depth - d).abs() < 1e-12);
            assert!(m.fwhm > 0.0);
        }
    }

    #[test]
    fn flat_profile_has_no_metrics() {
        let prof = Profile {
            xi: vec![-1.0, 0.0, 1.0],
            v: vec![1.0; 3],
            params: params(0.5),
            method: Method::Shooting,
        };
        assert!(profile_metrics(&prof).is_err());
    }

    #[test]
    fn hermite_interpolation_is_accurate() {
        let p = params(0.5);
        let wave = QuadratureWave::with_defaults(&p).unwrap();
        let prof = wave.profile();
        for x in [-3.3, -0.7, 0.01, 1.9, 12.0, 40.0] {
            let d = (prof.value_at(x) - wave.value_at(x).unwrap()).abs();
            assert!(d < 1e-8, "x = {x}: {d}");
        }
    }
}
