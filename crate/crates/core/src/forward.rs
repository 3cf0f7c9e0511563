//! Forward solve for a known source factor `h`: decompose the data into sine
//! modes, advance every mode, and sample the trace `u(t, x, l0)`.

use std::f64::consts::PI;

use ndarray::{Array2, Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fracops::TimeGrid;
use crate::modesolver::{SpaceGrid, Stepper};
use crate::problem::{ProblemParams, ProblemSpec};
use crate::spectral::{SineBasis, SpectralState};

/// Sine coefficients of the data at every `(t, x)` node, plus the traces at
/// `y = l0` and the `y`-integrals of the squared data.
#[derive(Debug, Clone)]
pub struct ModeData {
    pub time: TimeGrid,
    pub space: SpaceGrid,
    /// `(K, nt, nx)`, slab `k−1` is `f_k(t, x)`.
    pub f_k: Array3<f64>,
    pub g_k: Array3<f64>,
    /// `(K, nx)`
    pub phi_k: Array2<f64>,
    /// `f(t, x, l0)`
    pub f_trace: Array2<f64>,
    /// `g(t, x, l0)`
    pub g_trace: Array2<f64>,
    /// `∫_0^π f(t, x, y)² dy`
    pub f_y_sq: Array2<f64>,
    pub g_y_sq: Array2<f64>,
    /// `∫_0^π φ(x, y)² dy`
    pub phi_y_sq: Vec<f64>,
}

impl ModeData {
    pub fn modes(&self) -> usize {
        self.f_k.len_of(Axis(0))
    }
}

struct RowData {
    f: Array2<f64>,
    g: Array2<f64>,
    f_trace: Vec<f64>,
    g_trace: Vec<f64>,
    f_sq: Vec<f64>,
    g_sq: Vec<f64>,
}

fn finite_or(values: &[f64], what: &str, t: f64, x: f64) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data(format!(
            "non-finite {what} samples at t = {t}, x = {x}"
        )));
    }
    Ok(())
}

/// Sine coefficients of `f`, `g` and `φ` at every grid node.
pub fn decompose_data(spec: &ProblemSpec) -> Result<ModeData> {
    spec.validate()?;
    let p = &spec.params;
    let time = spec.time()?;
    let space = spec.space()?;
    let basis = p.basis()?;
    let k = p.modes;
    let y = basis.y_nodes().to_vec();
    let x = space.nodes();

    let rows: Vec<RowData> = (0..time.nt)
        .into_par_iter()
        .map(|i| {
            let t = time.t(i);
            let mut row = RowData {
                f: Array2::zeros((k, space.nx)),
                g: Array2::zeros((k, space.nx)),
                f_trace: vec![0.0; space.nx],
                g_trace: vec![0.0; space.nx],
                f_sq: vec![0.0; space.nx],
                g_sq: vec![0.0; space.nx],
            };
            let mut fy = vec![0.0; y.len()];
            let mut gy = vec![0.0; y.len()];
            let mut coeffs = vec![0.0; k];
            for (j, &xj) in x.iter().enumerate() {
                for (n, &yn) in y.iter().enumerate() {
                    fy[n] = (spec.f)(t, xj, yn);
                    gy[n] = (spec.g)(t, xj, yn);
                }
                finite_or(&fy, "f", t, xj)?;
                finite_or(&gy, "g", t, xj)?;
                basis.project(&fy, &mut coeffs);
                row.f
                    .column_mut(j)
                    .assign(&ndarray::ArrayView1::from(&coeffs));
                basis.project(&gy, &mut coeffs);
                row.g
                    .column_mut(j)
                    .assign(&ndarray::ArrayView1::from(&coeffs));
                row.f_sq[j] = basis.integrate_sq(&fy);
                row.g_sq[j] = basis.integrate_sq(&gy);
                row.f_trace[j] = (spec.f)(t, xj, p.l0);
                row.g_trace[j] = (spec.g)(t, xj, p.l0);
            }
            finite_or(&row.f_trace, "f(·,·,l0)", t, 0.0)?;
            finite_or(&row.g_trace, "g(·,·,l0)", t, 0.0)?;
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let (nt, nx) = (time.nt, space.nx);
    let mut data = ModeData {
        time,
        space,
        f_k: Array3::zeros((k, nt, nx)),
        g_k: Array3::zeros((k, nt, nx)),
        phi_k: Array2::zeros((k, nx)),
        f_trace: Array2::zeros((nt, nx)),
        g_trace: Array2::zeros((nt, nx)),
        f_y_sq: Array2::zeros((nt, nx)),
        g_y_sq: Array2::zeros((nt, nx)),
        phi_y_sq: vec![0.0; nx],
    };
    for (i, row) in rows.into_iter().enumerate() {
        data.f_k.index_axis_mut(Axis(1), i).assign(&row.f);
        data.g_k.index_axis_mut(Axis(1), i).assign(&row.g);
        data.f_trace
            .row_mut(i)
            .assign(&ndarray::Array1::from(row.f_trace));
        data.g_trace
            .row_mut(i)
            .assign(&ndarray::Array1::from(row.g_trace));
        data.f_y_sq
            .row_mut(i)
            .assign(&ndarray::Array1::from(row.f_sq));
        data.g_y_sq
            .row_mut(i)
            .assign(&ndarray::Array1::from(row.g_sq));
    }

    let mut py = vec![0.0; y.len()];
    let mut coeffs = vec![0.0; k];
    for (j, &xj) in x.iter().enumerate() {
        for (n, &yn) in y.iter().enumerate() {
            py[n] = (spec.phi)(xj, yn);
        }
        finite_or(&py, "φ", 0.0, xj)?;
        basis.project(&py, &mut coeffs);
        data.phi_k
            .column_mut(j)
            .assign(&ndarray::ArrayView1::from(&coeffs));
        data.phi_y_sq[j] = basis.integrate_sq(&py);
    }
    Ok(data)
}

/// Solves every mode with `r_k = g_k + f_k·h` for a sampled source `h`.
pub fn forward_with_source(
    params: &ProblemParams,
    data: &ModeData,
    h: &Array2<f64>,
) -> Result<SpectralState> {
    let (time, space) = (data.time, data.space);
    if h.dim() != (time.nt, space.nx) {
        return Err(Error::Grid(format!(
            "source is {:?} but the grid is {:?}",
            h.dim(),
            (time.nt, space.nx)
        )));
    }
    let stepper = Stepper::new(time, space, params.alpha)?;
    let modes = (0..data.modes())
        .into_par_iter()
        .map(|i| {
            let k = i + 1;
            let rhs = &data.g_k.index_axis(Axis(0), i) + &(&data.f_k.index_axis(Axis(0), i) * h);
            let phi = data.phi_k.row(i).to_vec();
            stepper.solve(k, (k * k) as f64, &phi, rhs.view())
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralState::from_modes(modes, params.epsilon)
}

/// Forward solution for the known source `h_true` of `spec`.
pub fn solve_forward(spec: &ProblemSpec) -> Result<(SpectralState, FullField)> {
    let h = spec
        .h_true
        .as_ref()
        .ok_or_else(|| Error::Usage("the forward solve needs a known source h".into()))?;
    let data = decompose_data(spec)?;
    let h_grid = spec.sample_tx(h)?;
    let state = forward_with_source(&spec.params, &data, &h_grid)?;
    let basis = spec.params.basis()?;
    let full = FullField::new(state.clone(), &basis);
    Ok((state, full))
}

/// `u(t, x, y)` assembled on demand from the modes.
#[derive(Debug, Clone)]
pub struct FullField {
    pub state: SpectralState,
    pub y_nodes: Vec<f64>,
}

impl FullField {
    pub fn new(state: SpectralState, basis: &SineBasis) -> Self {
        Self {
            state,
            y_nodes: basis.y_nodes().to_vec(),
        }
    }

    /// `u` on the `(t, x)` grid at a fixed `y`.
    pub fn trace(&self, y: f64) -> Array2<f64> {
        self.state.trace(y)
    }

    pub fn value(&self, t_index: usize, x_index: usize, y: f64) -> f64 {
        if y <= 0.0 || y >= PI {
            return 0.0;
        }
        self.state
            .modes
            .iter()
            .map(|m| m.values[[t_index, x_index]] * (m.k as f64 * y).sin())
            .sum()
    }

    /// `(nt, nx, ny)` array over the quadrature `y`-nodes.
    pub fn to_grid(&self) -> Array3<f64> {
        let time = self.state.time();
        let space = self.state.space();
        let ny = self.y_nodes.len();
        let mut out = Array3::zeros((time.nt, space.nx, ny));
        for (n, &y) in self.y_nodes.iter().enumerate() {
            out.index_axis_mut(Axis(2), n).assign(&self.trace(y));
        }
        out
    }
}

/// Adds `noise_level·‖trace‖_∞·ξ` with `ξ` standard normal, drawn row-major
/// from a ChaCha stream seeded by `seed`.
pub fn add_noise(trace: &Array2<f64>, noise_level: f64, seed: u64) -> Result<Array2<f64>> {
    if !(noise_level >= 0.0) || !noise_level.is_finite() {
        return Err(Error::Parameter(format!(
            "noise level must be non-negative, got {noise_level}"
        )));
    }
    if noise_level == 0.0 {
        return Ok(trace.clone());
    }
    let amplitude = noise_level * trace.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = trace.clone();
    for v in out.iter_mut() {
        let xi: f64 = rng.sample(StandardNormal);
        *v += amplitude * xi;
    }
    Ok(out)
}

/// Overdetermination trace `ψ = u(·, ·, l0)` with optional noise.
pub fn synthesize_data(
    state: &SpectralState,
    l0: f64,
    noise_level: f64,
    seed: u64,
) -> Result<Array2<f64>> {
    if !(l0 > 0.0 && l0 < PI) {
        return Err(Error::Parameter(format!("l0 must lie in (0, π), got {l0}")));
    }
    add_noise(&state.trace(l0), noise_level, seed)
}

/// Solves on a grid refined `factor` times in `t` and `x`, takes the trace and
/// restricts it to the grid of `spec`.
pub fn synthesize_fine(
    spec: &ProblemSpec,
    noise_level: f64,
    seed: u64,
    factor: usize,
) -> Result<Array2<f64>> {
    if factor < 1 {
        return Err(Error::Parameter("fine factor must be at least 1".into()));
    }
    let p = spec.params;
    let fine = ProblemParams {
        nt: (p.nt - 1) * factor + 1,
        nx: (p.nx - 1) * factor + 1,
        ..p
    };
    let (state, _) = solve_forward(&spec.with_params(fine))?;
    let trace = state.trace(p.l0);
    let coarse = Array2::from_shape_fn((p.nt, p.nx), |(i, j)| trace[[i * factor, j * factor]]);
    add_noise(&coarse, noise_level, seed)
}
