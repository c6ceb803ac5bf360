//! Cross-module checks against independent closed-form oracles.

use fhd_core::pde::{evolve, rhs_fhd, run_soliton, EvolveConfig};
use fhd_core::tw_solver::{profile_by_shooting, QuadratureWave};
use fhd_core::zero_curvature::{reduction_check, zc_convergence};
use fhd_core::{derivative, make_grid, Field, Grid1D, SolitonParams};

/// The orbit in closed form: `v = a cosh²θ`,
/// `ξ = (2/κ) artanh(tanh θ / κ) − 2θ` with `a = Λ/v0²`, `κ² = 1 − Λ/v0³`.
fn closed_form(p: &SolitonParams, theta: f64) -> (f64, f64) {
    let a = p.lambda_speed / (p.v0 * p.v0);
    let kappa = (1.0 - p.lambda_speed / p.v0.powi(3)).sqrt();
    let xi = 2.0 / kappa * (theta.tanh() / kappa).atanh() - 2.0 * theta;
    (xi, a * theta.cosh().powi(2))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn quadrature_wave_matches_closed_form_orbit() {
    for (l, v0) in [(0.2, 1.0), (0.5, 1.0), (0.8, 1.0), (0.5, 0.9), (3.0, 2.0)] {
        let p = SolitonParams::new(l, v0).unwrap();
        let wave = QuadratureWave::with_defaults(&p).unwrap();
        let kappa = p.decay_rate();
        let theta_max = kappa.atanh() * 0.999;
        for k in 0..=300 {
            let (xi, v) = closed_form(&p, theta_max * k as f64 / 300.0);
            let got = wave.value_at(xi).unwrap();
            assert!(
                (got - v).abs() < 1e-10 * v0,
                "({l}, {v0}) xi {xi}: {got} vs {v}"
            );
            let mirrored = wave.value_at(-xi).unwrap();
            assert_eq!(got, mirrored);
        }
    }
}

#[test]
fn shooting_matches_closed_form_orbit() {
    let p = SolitonParams::new(0.3, 1.0).unwrap();
    let grid = make_grid(-40.0, 40.0, 1601, false).unwrap();
    let shot = profile_by_shooting(&p, &grid).unwrap();
    let theta_end = p.decay_rate().atanh();
    for (&xi, &v) in shot.xi.iter().zip(&shot.v) {
        // ξ(θ) is increasing; invert it by bisection.
        let (mut lo, mut hi) = (0.0, theta_end);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if closed_form(&p, mid).0 < xi.abs() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let exact = closed_form(&p, 0.5 * (lo + hi)).1;
        assert!((v - exact).abs() < 1e-8, "xi {xi}: {v} vs {exact}");
    }
}

#[test]
fn travelling_wave_residual_is_fourth_order() {
    // v_t = −Λ v_ξ for the travelling wave, so rhs + Λ v_x vanishes up to
    // truncation error.
    let p = SolitonParams::new(0.5, 1.0).unwrap();
    let wave = QuadratureWave::with_defaults(&p).unwrap();
    let residual = |n: usize| {
        let g = make_grid(-30.0, 30.0, n, true).unwrap();
        let v = wave.sample(&g, 0.0).unwrap();
        let rhs = rhs_fhd(&v).unwrap();
        let vx = derivative(&v, 1).unwrap();
        rhs.values()
            .iter()
            .zip(vx.values())
            .map(|(r, d)| (r + p.lambda_speed * d).abs())
            .fold(0.0, f64::max)
    };
    let (r1, r2) = (residual(256), residual(512));
    assert!(r1 / r2 >= 12.0, "{r1:e} -> {r2:e}");
}

#[test]
fn evolution_converges_in_space_to_the_exact_wave() {
    let p = SolitonParams::new(0.5, 1.0).unwrap();
    let wave = QuadratureWave::with_defaults(&p).unwrap();
    let t_final = 0.5;
    let error = |n: usize| {
        let g = make_grid(-30.0, 30.0, n, true).unwrap();
        let v = wave.sample(&g, 0.0).unwrap();
        let cfg = EvolveConfig {
            output_stride: usize::MAX,
            ..EvolveConfig::new(t_final, 1.0)
        };
        let traj = evolve(&v, &cfg).unwrap();
        let (t, last) = traj.last().unwrap();
        assert_eq!(t, t_final);
        let exact = wave.sample(&g, p.lambda_speed * t_final).unwrap();
        max_abs_diff(last.values(), exact.values())
    };
    let (e1, e2) = (error(256), error(512));
    assert!(e1 / e2 >= 12.0, "{e1:e} -> {e2:e}");
}

#[test]
fn rk4_is_fourth_order_in_time() {
    let p = SolitonParams::new(0.5, 1.0).unwrap();
    let wave = QuadratureWave::with_defaults(&p).unwrap();
    let g = make_grid(-20.0, 20.0, 64, true).unwrap();
    let v = wave.sample(&g, 0.0).unwrap();
    let finals: Vec<Vec<f64>> = [0.4, 0.2, 0.1]
        .iter()
        .map(|&cfl| {
            let cfg = EvolveConfig {
                cfl_constant: cfl,
                output_stride: usize::MAX,
                ..EvolveConfig::new(1.0, 1.0)
            };
            evolve(&v, &cfg)
                .unwrap()
                .last()
                .unwrap()
                .1
                .values()
                .to_vec()
        })
        .collect();
    let order =
        (max_abs_diff(&finals[0], &finals[1]) / max_abs_diff(&finals[1], &finals[2])).log2();
    assert!(order >= 3.5, "{order}");
}

#[test]
fn short_soliton_run_keeps_speed_and_invariant() {
    let p = SolitonParams::new(0.5, 1.0).unwrap();
    let g = make_grid(-30.0, 30.0, 384, true).unwrap();
    let cfg = EvolveConfig {
        output_stride: 50,
        ..EvolveConfig::new(1.0, 1.0)
    };
    let (_, s) = run_soliton(&p, &g, &cfg).unwrap();
    assert!(
        (s.speed_measured - 0.5).abs() < 0.01,
        "{}",
        s.speed_measured
    );
    assert!(s.conservation_drift < 1e-12, "{}", s.conservation_drift);
    assert!(s.shape_error < 1e-2, "{}", s.shape_error);
    assert!((s.displacement - 0.5).abs() < 0.01, "{}", s.displacement);
}

fn lax_trajectories(
    wave: &QuadratureWave,
    grid: &Grid1D,
) -> (fhd_core::Trajectory, fhd_core::Trajectory) {
    let make = |g: &Grid1D| {
        let dt = 0.02 * g.dx();
        let times: Vec<f64> = (0..5).map(|k| k as f64 * dt).collect();
        wave.travelling_trajectory(g, 0.0, &times).unwrap()
    };
    (make(grid), make(&grid.refined()))
}

#[test]
fn structure_equation_holds_on_the_exact_wave() {
    let p = SolitonParams::new(0.5, 1.0).unwrap();
    let wave = QuadratureWave::with_defaults(&p).unwrap();
    let grid = make_grid(-30.0, 30.0, 256, true).unwrap();
    let (coarse, fine) = lax_trajectories(&wave, &grid);
    let mut orders = Vec::new();
    for lambda in [0.5, 1.0, 2.0] {
        let (rc, rf) = zc_convergence(&coarse, &fine, lambda).unwrap();
        assert!(rc.off_evolution_max() < 1e-10 && rf.off_evolution_max() < 1e-10);
        let order = rf.convergence_order.unwrap();
        assert!(order >= 2.0, "lambda {lambda}: order {order}");
        assert!(rf.pass());
        orders.push(order);
    }
    // The (2,1) entry is the PDE residual times 2λ/v³, so the fitted order
    // does not depend on λ.
    assert!((orders[0] - orders[2]).abs() < 0.1, "{orders:?}");
}

#[test]
fn reduction_is_independent_of_the_spectral_parameter() {
    let g = make_grid(0.0, 2.0 * std::f64::consts::PI, 96, true).unwrap();
    let v = Field::from_fn(g, |x| 1.0 + 0.3 * x.sin()).unwrap();
    let discrepancies: Vec<f64> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&l| {
            let r = reduction_check(&v, l).unwrap();
            assert!(r.pass && r.max_discrepancy < 1e-10);
            r.max_discrepancy
        })
        .collect();
    assert!(
        discrepancies.iter().all(|d| *d < 1e-12),
        "{discrepancies:?}"
    );
}
