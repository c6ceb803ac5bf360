//! The workflows behind each subcommand. Each returns the fields of the
//! one-line summary.

use fhd_core::pde::{run_soliton, RunSummary};
use fhd_core::pseudopotential::{
    existence_check, phase_table, potential_table, potential_window, require_soliton,
    turning_points,
};
use fhd_core::tw_solver::{
    profile_metrics, shoot, MetricsRecord, Profile, QuadratureWave, MIN_DECAY_LENGTHS,
};
use fhd_core::zero_curvature::{
    b_ansatz, reduction_check, reduction_check_with, zc_convergence, LaxResidualReport,
    ROUND_OFF_TOL,
};
use fhd_core::{make_grid, FhdError, Field, Grid1D, SolitonParams, Trajectory};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::output::{num, OutputDir};

pub type Summary = Map<String, Value>;

/// Frames in each trajectory handed to the structure-equation check.
pub const LAX_FRAMES: usize = 5;
/// Frame spacing of the structure-equation check, in grid spacings. Small
/// enough that the second-order time difference stays below the spatial
/// error, so the fitted order reflects the spatial stencils.
pub const LAX_DT_PER_DX: f64 = 0.02;
/// Test fields used by the reduction check.
pub const REDUCTION_FIELDS: usize = 10;
/// Extra margin on the shooting window beyond the minimum decay lengths.
const SHOOTING_MARGIN: f64 = 1.25;

pub fn dispatch(cfg: &RunConfig, out: &mut OutputDir) -> Result<Summary, CliError> {
    match cfg.command {
        Command::ScanExistence => scan_existence(cfg, out),
        Command::Potential => potential(cfg, out),
        Command::Profile => profile(cfg, out),
        Command::Evolve => evolve(cfg, out),
        Command::VerifyLax => verify_lax(cfg, out),
        Command::ReduceCheck => reduce_check(cfg, out),
    }
}

fn to_map<T: Serialize>(value: &T) -> Summary {
    match serde_json::to_value(value).expect("report serializes") {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    }
}

/// `Λ` samples of the scan; computed as `lo + (hi − lo)·k/(steps − 1)` so
/// round values such as `Λ = 1` are hit exactly.
pub fn scan_lambdas(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    let last = (steps - 1) as f64;
    (0..steps)
        .map(|k| lo + (hi - lo) * k as f64 / last)
        .collect()
}

fn scan_existence(cfg: &RunConfig, out: &mut OutputDir) -> Result<Summary, CliError> {
    let v0 = cfg.params.v0;
    let hi = cfg.scan.lambda_max.expect("resolved");
    let reports = scan_lambdas(cfg.scan.lambda_min, hi, cfg.scan.steps)
        .into_iter()
        .map(|l| existence_check(&SolitonParams::new(l, v0)?))
        .collect::<Result<Vec<_>, FhdError>>()?;
    out.write_csv(
        "existence.csv",
        &[
            "lambda",
            "admissible",
            "degenerate",
            "s_at_v0",
            "ds_at_v0",
            "d2s_at_v0",
            "d2s_closed_form",
        ],
        reports.iter().map(|r| {
            vec![
                num(r.lambda_speed),
                u8::from(r.admissible).to_string(),
                u8::from(r.degenerate).to_string(),
                num(r.s_at_v0),
                num(r.ds_at_v0),
                num(r.d2s_at_v0),
                num(r.d2s_closed_form),
            ]
        }),
    )?;
    let admissible: Vec<f64> = reports
        .iter()
        .filter(|r| r.admissible)
        .map(|r| r.lambda_speed)
        .collect();
    let mut s = Summary::new();
    s.insert("v0".into(), json!(v0));
    s.insert("samples".into(), json!(reports.len()));
    s.insert("admissible_count".into(), json!(admissible.len()));
    s.insert("admissible_min".into(), json!(admissible.first()));
    s.insert("admissible_max".into(), json!(admissible.last()));
    Ok(s)
}

fn potential(cfg: &RunConfig, out: &mut OutputDir) -> Result<Summary, CliError> {
    let params = cfg.params;
    let samples = cfg.potential.samples;
    let (lo, hi) = potential_window(&params);
    let table = potential_table(&params, lo, hi, samples)?;
    out.write_csv(
        "potential.csv",
        &["v", "S"],
        table.iter().map(|&(v, s)| vec![num(v), num(s)]),
    )?;
    let report = existence_check(&params)?;
    let mut s = Summary::new();
    s.insert("lambda".into(), json!(params.lambda_speed));
    s.insert("v0".into(), json!(params.v0));
    s.insert("admissible".into(), json!(report.admissible));
    s.insert("d2s_at_v0".into(), json!(report.d2s_at_v0));
    if report.admissible {
        let phase = phase_table(&params, samples)?;
        out.write_csv(
            "phase.csv",
            &["v", "vp_plus", "vp_minus"],
            phase.iter().map(|&(v, p, m)| vec![num(v), num(p), num(m)]),
        )?;
        let tp = turning_points(&params)?;
        s.insert("v_turn".into(), json!(tp.v_turn));
        s.insert("v_equilibrium".into(), json!(tp.v_equilibrium));
    } else {
        s.insert(
            "note".into(),
            json!(format!("no phase portrait: {}", report.reason)),
        );
    }
    Ok(s)
}

/// Symmetric non-periodic window with the spacing of `grid`, wide enough for
/// the shooting tails.
pub fn shooting_grid(params: &SolitonParams, grid: &Grid1D) -> Result<Grid1D, CliError> {
    let dx = grid.dx();
    let reach = grid
        .x_min()
        .abs()
        .max(grid.x_max().abs())
        .max(SHOOTING_MARGIN * MIN_DECAY_LENGTHS / params.decay_rate());
    let m = (reach / dx).ceil() as usize;
    let half = m as f64 * dx;
    Ok(make_grid(-half, half, 2 * m + 1, false)?)
}

fn profile_rows(p: &Profile) -> impl Iterator<Item = Vec<String>> + '_ {
    p.xi.iter().zip(&p.v).map(|(&x, &v)| vec![num(x), num(v)])
}

#[derive(Debug, Serialize)]
struct Comparison {
    lambda: f64,
    v0: f64,
    expected_min: f64,
    min_quadrature: f64,
    min_shooting: f64,
    max_discrepancy: f64,
    fwhm_rel_diff: f64,
    symmetry_defect_quadrature: f64,
    symmetry_defect_shooting: f64,
    max_energy_residual: f64,
    shooting_dx: f64,
}

fn profile(cfg: &RunConfig, out: &mut OutputDir) -> Result<Summary, CliError> {
    let params = cfg.params;
    require_soliton(&params)?;
    let wave = QuadratureWave::with_defaults(&params)?;
    let quad = wave.profile();
    let quad_metrics = MetricsRecord::new(&quad, profile_metrics(&quad)?);

    let sgrid = shooting_grid(&params, &cfg.grid.build()?)?;
    let (shot, report) = shoot(&params, &sgrid)?;
    let shot_metrics = MetricsRecord::new(&shot, profile_metrics(&shot)?);

    let mut max_discrepancy = 0.0f64;
    for (&xi, &v) in shot.xi.iter().zip(&shot.v) {
        max_discrepancy = max_discrepancy.max((v - wave.value_at(xi)?).abs());
    }
    let cmp = Comparison {
        lambda: params.lambda_speed,
        v0: params.v0,
        expected_min: params.v_turn(),
        min_quadrature: quad.min_value(),
        min_shooting: shot.min_value(),
        max_discrepancy,
        fwhm_rel_diff: (shot_metrics.fwhm - quad_metrics.fwhm).abs() / quad_metrics.fwhm,
        symmetry_defect_quadrature: quad.symmetry_defect(),
        symmetry_defect_shooting: shot.symmetry_defect(),
        max_energy_residual: report.max_energy_residual,
        shooting_dx: sgrid.dx(),
    };

    out.write_csv("profile.csv", &["xi", "v"], profile_rows(&quad))?;
    out.write_csv("profile_shooting.csv", &["xi", "v"], profile_rows(&shot))?;
    out.write_json("metrics.json", &quad_metrics)?;
    out.write_json("metrics_shooting.json", &shot_metrics)?;
    out.write_json("comparison.json", &cmp)?;

    let mut s = to_map(&cmp);
    s.insert("depth".into(), json!(quad_metrics.depth));
    s.insert("fwhm".into(), json!(quad_metrics.fwhm));
    s.insert("fwhm_shooting".into(), json!(shot_metrics.fwhm));
    Ok(s)
}

fn write_trajectory(
    traj: &Trajectory,
    per_frame: bool,
    out: &mut OutputDir,
) -> Result<(), CliError> {
    let xs = traj.grid().nodes();
    let rows = |t: f64, f: &Field| -> Vec<Vec<String>> {
        xs.iter()
            .zip(f.values())
            .map(|(&x, &v)| vec![num(t), num(x), num(v)])
            .collect()
    };
    if per_frame {
        for (k, (&t, f)) in traj.times().iter().zip(traj.frames()).enumerate() {
            out.write_csv(
                &format!("trajectory_{k:05}.csv"),
                &["t", "x", "v"],
                rows(t, f),
            )?;
        }
        Ok(())
    } else {
        out.write_csv(
            "trajectory.csv",
            &["t", "x", "v"],
            traj.times()
                .iter()
                .zip(traj.frames())
                .flat_map(|(&t, f)| rows(t, f)),
        )
    }
}

#[derive(Debug, Serialize)]
struct EvolveSummary {
    #[serde(flatten)]
    run: RunSummary,
    dt_min: f64,
    dt_max: f64,
    frames: usize,
    speed_expected: f64,
    speed_rel_error: f64,
}

fn evolve(cfg: &RunConfig, out: &mut OutputDir) -> Result<Summary, CliError> {
    let params = cfg.params;
    require_soliton(&params)?;
    let grid = cfg.grid.build()?;
    let ec = cfg.evolve_config()?;
    match run_soliton(&params, &grid, &ec) {
        Ok((run, summary)) => {
            write_trajectory(&run.trajectory, cfg.evolve.per_frame, out)?;
            let lambda = params.lambda_speed;
            let es = EvolveSummary {
                dt_min: run.dt_min,
                dt_max: run.dt_max,
                frames: run.trajectory.len(),
                speed_expected: lambda,
                speed_rel_error: (summary.speed_measured - lambda).abs() / lambda,
                run: summary,
            };
            out.write_json("summary.json", &es)?;
            Ok(to_map(&es))
        }
        Err(FhdError::EvolutionAborted { t, reason, partial }) => {
            write_trajectory(&partial, cfg.evolve.per_frame, out)?;
            out.write_json(
                "summary.json",
                &json!({
                    "lambda": params.lambda_speed,
                    "v0": params.v0,
                    "n": grid.n(),
                    "aborted_at": t,
                    "reason": reason,
                    "frames": partial.len(),
                }),
            )?;
            Err(CliError::Numerical(format!(
                "evolution aborted at t = {t}: {reason}"
            )))
        }
        Err(e) => Err(e.into()),
    }
}

/// Exact translated-profile trajectory with `LAX_FRAMES` frames spaced by
/// `LAX_DT_PER_DX · dx`, centred on the domain.
pub fn lax_trajectory(wave: &QuadratureWave, grid: &Grid1D) -> Result<Trajectory, CliError> {
    let dt = LAX_DT_PER_DX * grid.dx();
    let times: Vec<f64> = (0..LAX_FRAMES).map(|k| k as f64 * dt).collect();
    let center = 0.5 * (grid.x_min() + grid.x_max());
    Ok(wave.travelling_trajectory(grid, center, &times)?)
}

#[derive(Debug, Serialize)]
struct LaxReport {
    lambda_spec: f64,
    entry_norms: [[f64; 2]; 2],
    dx: f64,
    dt: f64,
    convergence_order: Option<f64>,
    pass: bool,
    coarse: LaxResidualReport,
}

fn verify_lax(cfg: &RunConfig, out: &mut OutputDir) -> Result<Summary, CliError> {
    let params = cfg.params;
    require_soliton(&params)?;
    let grid = cfg.grid.build()?;
    let wave = QuadratureWave::with_defaults(&params)?;
    let coarse = lax_trajectory(&wave, &grid)?;
    let fine = lax_trajectory(&wave, &grid.refined())?;
    let (rc, rf) = zc_convergence(&coarse, &fine, cfg.lambda_spec)?;
    let pass = rf.pass() && rc.off_evolution_max() < ROUND_OFF_TOL;
    let report = LaxReport {
        lambda_spec: cfg.lambda_spec,
        entry_norms: rf.entry_norms,
        dx: rf.dx,
        dt: rf.dt,
        convergence_order: rf.convergence_order,
        pass,
        coarse: rc,
    };
    out.write_json("lax_report.json", &report)?;
    if !pass {
        return Err(CliError::Numerical(format!(
            "structure equation check failed: order {:?}, identity entries {:e}",
            report.convergence_order,
            rf.off_evolution_max()
                .max(report.coarse.off_evolution_max())
        )));
    }
    let mut s = to_map(&report);
    s.remove("coarse");
    Ok(s)
}

/// The `k`-th smooth positive test field on a periodic grid:
/// `v0 (1 + a sin θ + a²/2 cos(2θ + φ))` with `θ = 2π m (x − x_min)/L + φ`.
pub fn reduction_field(grid: &Grid1D, v0: f64, k: usize) -> Result<Field, CliError> {
    let a = 0.1 + 0.04 * k as f64;
    let m = (1 + k % 4) as f64;
    let phi = 0.7 * k as f64;
    let (x0, len) = (grid.x_min(), grid.length());
    Ok(Field::from_fn(*grid, |x| {
        let th = 2.0 * std::f64::consts::PI * m * (x - x0) / len + phi;
        v0 * (1.0 + a * th.sin() + 0.5 * a * a * (2.0 * th + phi).cos())
    })?)
}

#[derive(Debug, Serialize)]
struct ReductionSummary {
    lambda_spec: f64,
    fields: usize,
    max_discrepancy: f64,
    tolerance: f64,
    negative_control_discrepancy: f64,
    pass: bool,
}

fn reduce_check(cfg: &RunConfig, out: &mut OutputDir) -> Result<Summary, CliError> {
    let grid = cfg.grid.build()?;
    let lambda = cfg.lambda_spec;
    let (mut disc, mut tol, mut control, mut pass) = (0.0f64, f64::INFINITY, f64::INFINITY, true);
    for k in 0..REDUCTION_FIELDS {
        let v = reduction_field(&grid, cfg.params.v0, k)?;
        let r = reduction_check(&v, lambda)?;
        disc = disc.max(r.max_discrepancy);
        tol = tol.min(r.tolerance);
        pass &= r.pass;
        let perturbed = Field::new(
            grid,
            b_ansatz(&v, lambda)?
                .values()
                .iter()
                .map(|b| b + 1.0)
                .collect(),
        )?;
        let c = reduction_check_with(&v, &perturbed, lambda)?;
        control = control.min(c.max_discrepancy);
    }
    let summary = ReductionSummary {
        lambda_spec: lambda,
        fields: REDUCTION_FIELDS,
        max_discrepancy: disc,
        tolerance: tol,
        negative_control_discrepancy: control,
        pass,
    };
    out.write_json("reduction_report.json", &summary)?;
    if !pass {
        return Err(CliError::Numerical(format!(
            "reduction check failed: discrepancy {disc:e} exceeds {tol:e}"
        )));
    }
    Ok(to_map(&summary))
}
