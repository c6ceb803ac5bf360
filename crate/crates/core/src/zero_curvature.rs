//! Zero-curvature (Lax) structure behind the evolution equation.
//!
//! The spectral problem `ψ_xx − ψ_x = −(λ/v²) ψ` is written as
//! `Ψ_x = M Ψ` with `M = [[0, 1], [−λ/v², 1]]`, and the time flow as
//! `Ψ_t = N Ψ`. With `B = −4λv` the compatibility relations fix
//!
//! ```text
//! A = 2λ (v_x + v),  D = −A,  C = 2λ (v_xx + v_x) + 4λ²/v
//! ```
//!
//! and the structure equation `M_t + [M, N] − N_x = 0` holds identically in
//! the entries (1,1), (1,2), (2,2). Its (2,1) entry is `2λ/v³` times the
//! residual of `v_t = v³ (v_xxx − v_x)`.

use serde::{Deserialize, Serialize};

use crate::diff::{d1_periodic, d3_periodic};
use crate::error::{FhdError, Result};
use crate::model::{Field, Trajectory};

/// Row-major 2×2 matrix.
pub type Mat2 = [[f64; 2]; 2];

/// Spectral parameter used when none is given.
pub const DEFAULT_LAMBDA_SPEC: f64 = 1.0;
/// Entries other than (2,1) must stay below this in max norm.
pub const ROUND_OFF_TOL: f64 = 1e-10;
/// Minimum joint (dx, dt) order of the (2,1) residual.
pub const MIN_ORDER: f64 = 2.0;

fn check_v(v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(FhdError::domain(format!(
            "Lax matrices need v > 0, got {v}"
        )))
    }
}

/// `M = [[0, 1], [−λ/v², 1]]`.
pub fn build_m(v: f64, lambda_spec: f64) -> Result<Mat2> {
    check_v(v)?;
    Ok([[0.0, 1.0], [-lambda_spec / (v * v), 1.0]])
}

/// `N = [[A, B], [C, −A]]` for `B = −4λv`.
pub fn build_n(v: f64, v_x: f64, v_xx: f64, lambda_spec: f64) -> Result<Mat2> {
    check_v(v)?;
    Ok(n_unchecked(v, v_x, v_xx, lambda_spec))
}

#[inline]
fn n_unchecked(v: f64, v_x: f64, v_xx: f64, l: f64) -> Mat2 {
    let a = 2.0 * l * (v_x + v);
    let b = -4.0 * l * v;
    let c = 2.0 * l * (v_xx + v_x) + 4.0 * l * l / v;
    [[a, b], [c, -a]]
}

pub fn commutator(m: &Mat2, n: &Mat2) -> Mat2 {
    let mul = |p: &Mat2, q: &Mat2| -> Mat2 {
        [
            [
                p[0][0] * q[0][0] + p[0][1] * q[1][0],
                p[0][0] * q[0][1] + p[0][1] * q[1][1],
            ],
            [
                p[1][0] * q[0][0] + p[1][1] * q[1][0],
                p[1][0] * q[0][1] + p[1][1] * q[1][1],
            ],
        ]
    };
    let (mn, nm) = (mul(m, n), mul(n, m));
    [
        [mn[0][0] - nm[0][0], mn[0][1] - nm[0][1]],
        [mn[1][0] - nm[1][0], mn[1][1] - nm[1][1]],
    ]
}

/// The pair `(M, N)` at a fixed spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaxPair {
    pub lambda_spec: f64,
}

impl LaxPair {
    pub fn new(lambda_spec: f64) -> Result<Self> {
        if !lambda_spec.is_finite() || lambda_spec == 0.0 {
            return Err(FhdError::invalid(format!(
                "spectral parameter must be finite and non-zero, got {lambda_spec}"
            )));
        }
        Ok(Self { lambda_spec })
    }

    pub fn m(&self, v: f64) -> Result<Mat2> {
        build_m(v, self.lambda_spec)
    }

    pub fn n(&self, v: f64, v_x: f64, v_xx: f64) -> Result<Mat2> {
        build_n(v, v_x, v_xx, self.lambda_spec)
    }
}

/// Max-norms of `M_t + [M, N] − N_x` per entry over a space-time patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaxResidualReport {
    pub lambda_spec: f64,
    pub entry_norms: Mat2,
    pub dx: f64,
    pub dt: f64,
    /// Fitted from two resolutions; absent for a single run.
    pub convergence_order: Option<f64>,
}

impl LaxResidualReport {
    /// Largest of the three entries that vanish by construction.
    pub fn off_evolution_max(&self) -> f64 {
        let e = &self.entry_norms;
        e[0][0].max(e[0][1]).max(e[1][1])
    }

    pub fn evolution_norm(&self) -> f64 {
        self.entry_norms[1][0]
    }

    /// Identity entries at round-off and, when fitted, order ≥ 2.
    pub fn pass(&self) -> bool {
        self.off_evolution_max() < ROUND_OFF_TOL
            && self.convergence_order.is_none_or(|p| p >= MIN_ORDER)
    }
}

/// N entries and their x-derivatives along one frame.
struct FrameTerms {
    m21: Vec<f64>,
    n: [Vec<f64>; 4],
    n_x: [Vec<f64>; 4],
}

fn frame_terms(frame: &Field, lambda: f64) -> FrameTerms {
    let v = frame.values();
    let dx = frame.grid().dx();
    let len = v.len();
    let mut v_x = vec![0.0; len];
    let mut v_xx = vec![0.0; len];
    d1_periodic(v, dx, &mut v_x);
    // v_xx = D1(D1 v) keeps A_x consistent with C.
    d1_periodic(&v_x, dx, &mut v_xx);
    let mut n: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; len]);
    let mut m21 = vec![0.0; len];
    for i in 0..len {
        let nn = n_unchecked(v[i], v_x[i], v_xx[i], lambda);
        n[0][i] = nn[0][0];
        n[1][i] = nn[0][1];
        n[2][i] = nn[1][0];
        n[3][i] = nn[1][1];
        m21[i] = -lambda / (v[i] * v[i]);
    }
    let n_x = std::array::from_fn(|e| {
        let mut d = vec![0.0; len];
        d1_periodic(&n[e], dx, &mut d);
        d
    });
    FrameTerms { m21, n, n_x }
}

/// Residual of the structure equation on every interior frame of `traj`.
///
/// `M_t` uses the three-point second-order difference in time, `N_x` the
/// fourth-order first difference in space.
pub fn zc_residual(traj: &Trajectory, lambda_spec: f64) -> Result<LaxResidualReport> {
    LaxPair::new(lambda_spec)?;
    if traj.len() < 3 {
        return Err(FhdError::invalid(format!(
            "structure residual needs >= 3 frames, got {}",
            traj.len()
        )));
    }
    for f in traj.frames() {
        f.require_periodic("zc_residual")?;
        f.require_positive("zc_residual")?;
    }
    let times = traj.times();
    let terms: Vec<FrameTerms> = traj
        .frames()
        .iter()
        .map(|f| frame_terms(f, lambda_spec))
        .collect();
    let mut norms = [[0.0f64; 2]; 2];
    for k in 1..terms.len() - 1 {
        let (h1, h2) = (times[k] - times[k - 1], times[k + 1] - times[k]);
        let (wm, w0, wp) = (
            -h2 / (h1 * (h1 + h2)),
            (h2 - h1) / (h1 * h2),
            h1 / (h2 * (h1 + h2)),
        );
        let t = &terms[k];
        for i in 0..t.m21.len() {
            let m_t21 = wm * terms[k - 1].m21[i] + w0 * t.m21[i] + wp * terms[k + 1].m21[i];
            let m = [[0.0, 1.0], [t.m21[i], 1.0]];
            let n = [[t.n[0][i], t.n[1][i]], [t.n[2][i], t.n[3][i]]];
            let c = commutator(&m, &n);
            let r = [
                [c[0][0] - t.n_x[0][i], c[0][1] - t.n_x[1][i]],
                [m_t21 + c[1][0] - t.n_x[2][i], c[1][1] - t.n_x[3][i]],
            ];
            for a in 0..2 {
                for b in 0..2 {
                    norms[a][b] = norms[a][b].max(r[a][b].abs());
                }
            }
        }
    }
    let span = times[times.len() - 1] - times[0];
    Ok(LaxResidualReport {
        lambda_spec,
        entry_norms: norms,
        dx: traj.grid().dx(),
        dt: span / (times.len() - 1) as f64,
        convergence_order: None,
    })
}

/// Residual on `fine` with the joint order fitted against `coarse`.
pub fn zc_convergence(
    coarse: &Trajectory,
    fine: &Trajectory,
    lambda_spec: f64,
) -> Result<(LaxResidualReport, LaxResidualReport)> {
    let rc = zc_residual(coarse, lambda_spec)?;
    let mut rf = zc_residual(fine, lambda_spec)?;
    let ratio = rc.dx / rf.dx;
    if ratio.is_nan() || ratio <= 1.0 {
        return Err(FhdError::invalid(
            "the fine trajectory must have a smaller dx",
        ));
    }
    rf.convergence_order = Some((rc.evolution_norm() / rf.evolution_norm()).ln() / ratio.ln());
    Ok((rc, rf))
}

/// Outcome of comparing the general evolution law with the reduced equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub lambda_spec: f64,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Right side of the general evolution law for `v_t / v³`:
/// `−B_xxx/(4λ) + B_x/(4λ) + (v_x/v³) B − B_x/v²`.
pub fn general_evolution_rhs(v: &Field, b: &Field, lambda_spec: f64) -> Result<Field> {
    LaxPair::new(lambda_spec)?;
    v.require_periodic("general_evolution_rhs")?;
    v.require_positive("general_evolution_rhs")?;
    if v.grid() != b.grid() {
        return Err(FhdError::invalid("v and B live on different grids"));
    }
    let dx = v.grid().dx();
    let len = v.values().len();
    let (mut b_x, mut b_xxx, mut v_x) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    d1_periodic(b.values(), dx, &mut b_x);
    d3_periodic(b.values(), dx, &mut b_xxx);
    d1_periodic(v.values(), dx, &mut v_x);
    let q = 4.0 * lambda_spec;
    let out = (0..len)
        .map(|i| {
            let vi = v.values()[i];
            -b_xxx[i] / q + b_x[i] / q + v_x[i] / (vi * vi * vi) * b.values()[i]
                - b_x[i] / (vi * vi)
        })
        .collect();
    Field::new(*v.grid(), out)
}

/// The ansatz `B = −4λv`.
pub fn b_ansatz(v: &Field, lambda_spec: f64) -> Result<Field> {
    Field::new(
        *v.grid(),
        v.values().iter().map(|x| -4.0 * lambda_spec * x).collect(),
    )
}

/// Checks that the general law with `B = −4λv` reduces to `v_xxx − v_x`.
pub fn reduction_check(v: &Field, lambda_spec: f64) -> Result<ReductionReport> {
    let b = b_ansatz(v, lambda_spec)?;
    reduction_check_with(v, &b, lambda_spec)
}

/// Same comparison for an arbitrary `B` field.
pub fn reduction_check_with(v: &Field, b: &Field, lambda_spec: f64) -> Result<ReductionReport> {
    let general = general_evolution_rhs(v, b, lambda_spec)?;
    let dx = v.grid().dx();
    let len = v.values().len();
    let (mut v_x, mut v_xxx) = (vec![0.0; len], vec![0.0; len]);
    d1_periodic(v.values(), dx, &mut v_x);
    d3_periodic(v.values(), dx, &mut v_xxx);
    let mut disc = 0.0f64;
    let mut scale = 1.0f64;
    for i in 0..len {
        let reduced = v_xxx[i] - v_x[i];
        scale = scale.max(reduced.abs());
        disc = disc.max((general.values()[i] - reduced).abs());
    }
    let tolerance = ROUND_OFF_TOL * scale;
    Ok(ReductionReport {
        lambda_spec,
        max_discrepancy: disc,
        tolerance,
        pass: disc < tolerance,
    })
}
