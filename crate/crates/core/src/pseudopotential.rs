//! Sagdeev pseudopotential of the travelling-wave reduction.
//!
//! A travelling wave `v(ξ)`, `ξ = x − Λt`, with `v → v0` at both ends obeys
//! the energy relation `(1/2) v'² + S(v) = 0` with
//!
//! ```text
//! S(v) = (Λ − v v0²) (v − v0)² / (2 v v0²)
//! ```
//!
//! `v0` is a double root and `Λ/v0²` a simple root. A localized depression
//! exists iff `S(v0) = S'(v0) = 0` and `S''(v0) < 0`, i.e. `0 < Λ < v0³`.

use serde::{Deserialize, Serialize};

use crate::error::{FhdError, Result};
use crate::model::SolitonParams;

/// `|Λ − v0³| < DEGENERACY_TOL · v0³` collapses the two roots into a triple root.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Relative finite-difference step for the S′/S″ diagnostics.
pub const FD_STEP: f64 = 1e-5;

/// Tolerance when the bisected root is compared with `Λ/v0²`.
pub const ROOT_CONFIRM_TOL: f64 = 1e-12;

/// Evaluates the pseudopotential at `v > 0`.
pub fn eval_s(v: f64, params: &SolitonParams) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(FhdError::domain(format!(
            "pseudopotential needs finite v > 0, got {v}"
        )));
    }
    Ok(s_unchecked(v, params))
}

#[inline]
pub(crate) fn s_unchecked(v: f64, p: &SolitonParams) -> f64 {
    let v02 = p.v0 * p.v0;
    let dv = v - p.v0;
    (p.lambda_speed - v * v02) * dv * dv / (2.0 * v * v02)
}

/// Closed-form `S''(v0) = (Λ − v0³)/v0³`.
pub fn curvature_at_background(params: &SolitonParams) -> f64 {
    let v03 = params.v0.powi(3);
    (params.lambda_speed - v03) / v03
}

pub fn is_degenerate(params: &SolitonParams) -> bool {
    let v03 = params.v0.powi(3);
    (params.lambda_speed - v03).abs() < DEGENERACY_TOL * v03
}

/// Outcome of the soliton existence test with its finite-difference evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceReport {
    pub lambda_speed: f64,
    pub v0: f64,
    pub admissible: bool,
    pub degenerate: bool,
    pub s_at_v0: f64,
    /// Richardson-extrapolated central difference of S at v0.
    pub ds_at_v0: f64,
    /// Richardson-extrapolated second central difference of S at v0.
    pub d2s_at_v0: f64,
    pub d2s_closed_form: f64,
    pub reason: String,
}

/// Tests `0 < Λ < v0³` and reports S, S′, S″ at the background.
pub fn existence_check(params: &SolitonParams) -> Result<ExistenceReport> {
    params.validate()?;
    let v0 = params.v0;
    let lambda = params.lambda_speed;
    let s = |v: f64| s_unchecked(v, params);

    let h = FD_STEP * v0;
    let d1 = |h: f64| (s(v0 + h) - s(v0 - h)) / (2.0 * h);
    let d2 = |h: f64| (s(v0 + h) - 2.0 * s(v0) + s(v0 - h)) / (h * h);
    let ds = (4.0 * d1(h / 2.0) - d1(h)) / 3.0;
    let d2s = (4.0 * d2(h / 2.0) - d2(h)) / 3.0;

    let degenerate = is_degenerate(params);
    let v03 = v0.powi(3);
    let (admissible, reason) = if lambda <= 0.0 {
        (false, format!("lambda = {lambda} is not positive"))
    } else if degenerate {
        (
            false,
            format!("lambda = v0^3 = {v03}: triple root, no localized orbit"),
        )
    } else if lambda > v03 {
        (
            false,
            format!("lambda = {lambda} exceeds v0^3 = {v03}: S''(v0) > 0"),
        )
    } else {
        (true, format!("0 < lambda < v0^3 = {v03}"))
    };

    Ok(ExistenceReport {
        lambda_speed: lambda,
        v0,
        admissible,
        degenerate,
        s_at_v0: s(v0),
        ds_at_v0: ds,
        d2s_at_v0: d2s,
        d2s_closed_form: curvature_at_background(params),
        reason,
    })
}

/// Fails with [`FhdError::NoSoliton`] unless the parameters admit a soliton.
pub fn require_soliton(params: &SolitonParams) -> Result<ExistenceReport> {
    let report = existence_check(params)?;
    if report.admissible {
        Ok(report)
    } else {
        Err(FhdError::NoSoliton {
            lambda_speed: params.lambda_speed,
            v0: params.v0,
            reason: report.reason,
        })
    }
}

/// Roots of the pseudopotential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoints {
    pub v_equilibrium: f64,
    pub v_turn: f64,
    pub degenerate: bool,
}

/// Locates both roots. `v_turn = Λ/v0²` is confirmed by bisection on S over
/// `(0, v0)`.
pub fn turning_points(params: &SolitonParams) -> Result<TurningPoints> {
    params.validate()?;
    if is_degenerate(params) {
        return Ok(TurningPoints {
            v_equilibrium: params.v0,
            v_turn: params.v0,
            degenerate: true,
        });
    }
    require_soliton(params)?;
    let analytic = params.v_turn();
    let bisected = bisect_turn(params)?;
    let tol = ROOT_CONFIRM_TOL * params.v0.max(1.0);
    if (bisected - analytic).abs() > tol {
        return Err(FhdError::numerical(format!(
            "bisection found v_turn = {bisected}, closed form gives {analytic}"
        )));
    }
    Ok(TurningPoints {
        v_equilibrium: params.v0,
        v_turn: analytic,
        degenerate: false,
    })
}

fn bisect_turn(params: &SolitonParams) -> Result<f64> {
    let v0 = params.v0;
    let s = |v: f64| s_unchecked(v, params);
    // S > 0 below the simple root, S < 0 between it and v0.
    let mut hi = (1..=52)
        .map(|k| v0 * (1.0 - 0.5f64.powi(k)))
        .find(|&v| s(v) < 0.0)
        .ok_or_else(|| FhdError::numerical("no point with S < 0 found below v0"))?;
    let mut lo = v0 * 1e-300;
    if s(lo) <= 0.0 {
        return Err(FhdError::numerical("S is not positive near v = 0"));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if s(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Both branches `±sqrt(−2 S(v))` of the phase portrait.
pub fn phase_branch(v: f64, params: &SolitonParams) -> Result<(f64, f64)> {
    let s = eval_s(v, params)?;
    // Round-off bound on the product defining S.
    let v02 = params.v0 * params.v0;
    let dv = v - params.v0;
    let scale = (params.lambda_speed.abs() + v * v02) * dv * dv / (2.0 * v * v02);
    if s > 8.0 * f64::EPSILON * scale {
        return Err(FhdError::domain(format!(
            "S({v}) = {s} > 0: outside the separatrix"
        )));
    }
    let vp = (-2.0 * s).max(0.0).sqrt();
    Ok((vp, -vp))
}

/// `(v, S(v))` rows on `samples` equispaced points of `[v_min, v_max]`.
pub fn potential_table(
    params: &SolitonParams,
    v_min: f64,
    v_max: f64,
    samples: usize,
) -> Result<Vec<(f64, f64)>> {
    if samples < 2 || v_min <= 0.0 || v_max <= v_min {
        return Err(FhdError::invalid(format!(
            "potential table needs 0 < v_min < v_max and >= 2 samples, got [{v_min}, {v_max}] x {samples}"
        )));
    }
    linspace(v_min, v_max, samples)
        .map(|v| eval_s(v, params).map(|s| (v, s)))
        .collect()
}

/// Default plotting window around both roots `v_turn` and `v0`, whichever
/// order they come in.
pub fn potential_window(params: &SolitonParams) -> (f64, f64) {
    let v_turn = params.v_turn().max(0.0);
    let (a, b) = (v_turn.min(params.v0), v_turn.max(params.v0));
    let span = (b - a).max(0.05 * params.v0);
    let lo = (a - 0.25 * span).max(0.02 * params.v0);
    (lo, b + 0.25 * span)
}

/// `(v, v'₊, v'₋)` rows along the separatrix `v ∈ [v_turn, v0]`.
pub fn phase_table(params: &SolitonParams, samples: usize) -> Result<Vec<(f64, f64, f64)>> {
    let tp = turning_points(params)?;
    if tp.degenerate {
        return Err(FhdError::NoSoliton {
            lambda_speed: params.lambda_speed,
            v0: params.v0,
            reason: "degenerate turning points".into(),
        });
    }
    if samples < 2 {
        return Err(FhdError::invalid("phase table needs >= 2 samples"));
    }
    linspace(tp.v_turn, tp.v_equilibrium, samples)
        .map(|v| phase_branch(v, params).map(|(p, m)| (v, p, m)))
        .collect()
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { b } else { a + i as f64 * h })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lambda: f64, v0: f64) -> SolitonParams {
        SolitonParams::new(lambda, v0).unwrap()
    }

    #[test]
    fn eval_s_examples() {
        assert_eq!(eval_s(1.0, &p(0.5, 1.0)).unwrap(), 0.0);
        assert_eq!(eval_s(0.5, &p(0.5, 1.0)).unwrap(), 0.0);
        // (1/1.5)(-0.25)(0.0625)
        let expected = -0.25 * 0.0625 / 1.5;
        assert!((eval_s(0.75, &p(0.5, 1.0)).unwrap() - expected).abs() < 1e-16);
        assert!((expected + 0.010416666666666666).abs() < 1e-17);
    }

    #[test]
    fn eval_s_rejects_nonpositive_v() {
        assert!(eval_s(0.0, &p(0.5, 1.0)).is_err());
        assert!(eval_s(-1.0, &p(0.5, 1.0)).is_err());
    }

    #[test]
    fn existence_examples() {
        assert!(existence_check(&p(0.5, 1.0)).unwrap().admissible);
        let r = existence_check(&p(1.0, 1.0)).unwrap();
        assert!(!r.admissible && r.degenerate);
        let r = existence_check(&p(0.5, 0.5)).unwrap();
        assert!(!r.admissible && !r.degenerate);
        assert!(!existence_check(&p(0.0, 1.0)).unwrap().admissible);
        assert!(!existence_check(&p(-0.1, 1.0)).unwrap().admissible);
    }

    #[test]
    fn existence_diagnostics_match_conditions() {
        let r = existence_check(&p(0.5, 1.0)).unwrap();
        assert_eq!(r.s_at_v0, 0.0);
        assert!(r.ds_at_v0.abs() < 1e-10);
        assert!((r.d2s_at_v0 - (-0.5)).abs() < 1e-6);
        assert!(r.d2s_at_v0 < 0.0);
    }

    #[test]
    fn turning_point_examples() {
        let tp = turning_points(&p(0.5, 1.0)).unwrap();
        assert_eq!(tp.v_turn, 0.5);
        assert_eq!(tp.v_equilibrium, 1.0);
        assert!(!tp.degenerate);
        assert!((turning_points(&p(0.2, 1.0)).unwrap().v_turn - 0.2).abs() < 1e-15);
        assert!(turning_points(&p(1.0, 1.0)).unwrap().degenerate);
        assert!(turning_points(&p(2.0, 1.0)).is_err());
    }

    #[test]
    fn bisection_agrees_for_tiny_and_near_critical_lambda() {
        for &(l, v0) in &[(1e-6, 1.0), (0.999, 1.0), (0.3, 0.8), (5.0, 2.0)] {
            let params = p(l, v0);
            let b = bisect_turn(&params).unwrap();
            assert!((b - params.v_turn()).abs() < 1e-12, "{l} {v0}: {b}");
        }
    }

    #[test]
    fn phase_branch_examples() {
        let params = p(0.5, 1.0);
        assert_eq!(phase_branch(1.0, &params).unwrap(), (0.0, -0.0));
        assert_eq!(phase_branch(0.5, &params).unwrap().0, 0.0);
        let (vp, vm) = phase_branch(0.75, &params).unwrap();
        assert!((vp - 0.144_337_567_297_406_4).abs() < 1e-12);
        assert_eq!(vm, -vp);
        assert!(phase_branch(0.3, &params).is_err());
        // S < 0 above v0 as well: unbounded orbits, but a valid branch.
        assert!(phase_branch(1.3, &params).unwrap().0 > 0.0);
    }

    #[test]
    fn tables_cover_requested_ranges() {
        let params = p(0.5, 1.0);
        let t = phase_table(&params, 101).unwrap();
        assert_eq!(t.first().unwrap().0, 0.5);
        assert_eq!(t.last().unwrap().0, 1.0);
        let (lo, hi) = potential_window(&params);
        let pot = potential_table(&params, lo, hi, 50).unwrap();
        assert_eq!(pot.len(), 50);
        assert!(potential_table(&params, 0.0, 1.0, 10).is_err());
    }

    #[test]
    fn window_contains_both_roots() {
        for (l, v0) in [(0.5, 1.0), (1.5, 1.0), (1.0, 1.0), (0.0, 2.0)] {
            let params = p(l, v0);
            let (lo, hi) = potential_window(&params);
            assert!(0.0 < lo && lo < hi);
            assert!(lo <= params.v_turn().max(lo) && params.v_turn() <= hi);
            assert!(lo < v0 && v0 < hi);
        }
    }
}
