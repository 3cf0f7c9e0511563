//! Implicit L1 solver for a single Fourier mode
//!
//! ```text
//! D_t^α u_k − (u_k)_xx + λ_k u_k = r_k(t, x),   u_k(t, 0) = u_k(t, 1) = 0,   u_k(0, x) = φ_k(x)
//! ```
//!
//! Each time level is one tridiagonal solve over the interior nodes; the
//! Dirichlet rows are eliminated. The right-hand side is taken at the new level.

use ndarray::{Array2, ArrayView2, Axis};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::fracops::{l1_weights, TimeGrid};

/// Uniform grid on `[0, 1]` with `nx` nodes including both walls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid {
    pub nx: usize,
}

impl SpaceGrid {
    pub fn new(nx: usize) -> Result<Self> {
        if nx < 3 {
            return Err(Error::Grid(format!(
                "space grid needs at least 3 nodes, got {nx}"
            )));
        }
        Ok(Self { nx })
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.nx - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            1.0
        } else {
            i as f64 * self.dx()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }
}

/// One Fourier mode `u_k(t, x)` sampled on the `(t, x)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    pub k: usize,
    pub time: TimeGrid,
    pub space: SpaceGrid,
    /// `nt × nx`, row `i` is time level `t_i`.
    pub values: Array2<f64>,
}

impl ModeField {
    pub fn zeros(k: usize, time: TimeGrid, space: SpaceGrid) -> Self {
        Self {
            k,
            time,
            space,
            values: Array2::zeros((time.nt, space.nx)),
        }
    }

    pub fn lambda(&self) -> f64 {
        (self.k * self.k) as f64
    }
}

/// Tridiagonal system `sub[i]·u[i−1] + diag[i]·u[i] + sup[i]·u[i+1] = rhs[i]`;
/// `sub[0]` and `sup[n−1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Strict row diagonal dominance.
    pub fn is_diagonally_dominant(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            let off = if i > 0 { self.sub[i].abs() } else { 0.0 }
                + if i + 1 < n { self.sup[i].abs() } else { 0.0 };
            self.diag[i].abs() > off
        })
    }
}

/// Thomas algorithm.
pub fn thomas_solve(sys: &TridiagonalSystem) -> Result<Vec<f64>> {
    let n = sys.len();
    if sys.sub.len() != n || sys.sup.len() != n || sys.rhs.len() != n {
        return Err(Error::Usage(
            "tridiagonal bands and rhs must share one length".into(),
        ));
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let lower = if i > 0 { sys.sub[i] } else { 0.0 };
        let pivot = sys.diag[i] - if i > 0 { lower * c[i - 1] } else { 0.0 };
        if pivot.abs() < 1e-300 || !pivot.is_finite() {
            return Err(Error::Singular { row: i });
        }
        c[i] = if i + 1 < n { sys.sup[i] / pivot } else { 0.0 };
        d[i] = (sys.rhs[i] - if i > 0 { lower * d[i - 1] } else { 0.0 }) / pivot;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Precomputed L1 stepping data shared by every mode on one grid pair.
#[derive(Debug, Clone)]
pub(crate) struct Stepper {
    time: TimeGrid,
    space: SpaceGrid,
    weights: Vec<f64>,
    /// `1 / (dt^α Γ(2−α))`
    scale: f64,
}

impl Stepper {
    pub(crate) fn new(time: TimeGrid, space: SpaceGrid, alpha: f64) -> Result<Self> {
        let weights = l1_weights(alpha, time.nt - 1)?.coefficients;
        let scale = 1.0 / (time.dt().powf(alpha) * gamma(2.0 - alpha));
        Ok(Self {
            time,
            space,
            weights,
            scale,
        })
    }

    /// Solves for level `m` given the level increments `diffs[i] = u^i − u^{i−1}`
    /// for `i = 1..m−1` and the previous level.
    fn level(
        &self,
        m: usize,
        prev: &[f64],
        diffs: ArrayView2<f64>,
        lambda: f64,
        rhs: &[f64],
    ) -> Result<Vec<f64>> {
        let nx = self.space.nx;
        let inner = nx - 2;
        let mut history = vec![0.0; nx];
        for i in 1..m {
            let b = self.weights[m - i];
            for (h, d) in history.iter_mut().zip(diffs.row(i).iter()) {
                *h += b * d;
            }
        }
        let inv_dx2 = 1.0 / (self.space.dx() * self.space.dx());
        let diag = self.scale + 2.0 * inv_dx2 + lambda;
        let sys = TridiagonalSystem {
            sub: vec![-inv_dx2; inner],
            diag: vec![diag; inner],
            sup: vec![-inv_dx2; inner],
            rhs: (1..nx - 1)
                .map(|j| rhs[j] + self.scale * (prev[j] - history[j]))
                .collect(),
        };
        let interior = thomas_solve(&sys)?;
        let mut out = vec![0.0; nx];
        out[1..nx - 1].copy_from_slice(&interior);
        Ok(out)
    }

    pub(crate) fn solve(
        &self,
        k: usize,
        lambda: f64,
        phi: &[f64],
        rhs: ArrayView2<f64>,
    ) -> Result<ModeField> {
        let (nt, nx) = (self.time.nt, self.space.nx);
        if phi.len() != nx || rhs.dim() != (nt, nx) {
            return Err(Error::Grid(format!(
                "mode {k}: initial profile or rhs does not match the {nt}x{nx} grid"
            )));
        }
        if rhs.iter().any(|v| !v.is_finite()) || phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "mode {k}: non-finite right-hand side or initial data"
            )));
        }
        let mut field = ModeField::zeros(k, self.time, self.space);
        let mut diffs = Array2::<f64>::zeros((nt, nx));
        {
            let mut row0 = field.values.row_mut(0);
            for j in 1..nx - 1 {
                row0[j] = phi[j];
            }
        }
        for m in 1..nt {
            let prev = field.values.row(m - 1).to_vec();
            let rhs_m = rhs.row(m).to_vec();
            let next = self.level(m, &prev, diffs.view(), lambda, &rhs_m)?;
            for j in 0..nx {
                diffs[[m, j]] = next[j] - prev[j];
                field.values[[m, j]] = next[j];
            }
        }
        Ok(field)
    }
}

/// Advances one mode by one level: given rows `0..m−1` in `history`, returns
/// level `m = history.nrows()`.
pub fn step_mode(
    history: ArrayView2<f64>,
    lambda_k: f64,
    rhs_m: &[f64],
    alpha: f64,
    time: &TimeGrid,
    space: &SpaceGrid,
) -> Result<Vec<f64>> {
    let m = history.nrows();
    if m == 0 || m >= time.nt {
        return Err(Error::Usage(format!(
            "history must hold 1..{} levels, got {m}",
            time.nt - 1
        )));
    }
    if history.ncols() != space.nx || rhs_m.len() != space.nx {
        return Err(Error::Grid(
            "history or rhs width does not match the space grid".into(),
        ));
    }
    let stepper = Stepper::new(*time, *space, alpha)?;
    let mut diffs = Array2::<f64>::zeros((m, space.nx));
    for i in 1..m {
        let d = &history.row(i) - &history.row(i - 1);
        diffs.row_mut(i).assign(&d);
    }
    let prev = history.index_axis(Axis(0), m - 1).to_vec();
    stepper.level(m, &prev, diffs.view(), lambda_k, rhs_m)
}

/// Solves mode `k` (`λ_k = k²`) over the whole time horizon. `rhs` is sampled
/// on the `nt × nx` grid; its row 0 is not used.
pub fn solve_mode(
    k: usize,
    phi_k: &[f64],
    rhs: ArrayView2<f64>,
    time: &TimeGrid,
    space: &SpaceGrid,
    alpha: f64,
) -> Result<ModeField> {
    let stepper = Stepper::new(*time, *space, alpha)?;
    stepper.solve(k, (k * k) as f64, phi_k, rhs)
}

/// Same as [`solve_mode`] with an arbitrary reaction coefficient.
pub fn solve_mode_with_lambda(
    lambda: f64,
    phi: &[f64],
    rhs: ArrayView2<f64>,
    time: &TimeGrid,
    space: &SpaceGrid,
    alpha: f64,
) -> Result<ModeField> {
    let stepper = Stepper::new(*time, *space, alpha)?;
    stepper.solve(0, lambda, phi, rhs)
}

/// Discrete `L²(0,1)` norm squared (trapezoid).
pub fn l2_sq(row: &[f64], dx: f64) -> f64 {
    let n = row.len();
    let inner: f64 = row[1..n - 1].iter().map(|v| v * v).sum();
    dx * (inner + 0.5 * (row[0] * row[0] + row[n - 1] * row[n - 1]))
}

/// Discrete `‖∂_x v‖²` from forward differences.
pub fn h1_semi_sq(row: &[f64], dx: f64) -> f64 {
    row.windows(2).map(|p| (p[1] - p[0]).powi(2)).sum::<f64>() / dx
}
