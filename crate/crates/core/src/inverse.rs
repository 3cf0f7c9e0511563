//! Successive approximations for the coupled mode system and recovery of the
//! source factor `h(t, x)` from the trace `ψ(t, x) = u(t, x, l0)`.
//!
//! Evaluating the equation on the plane `y = l0` gives
//!
//! ```text
//! h = (D_t^α ψ − ψ_xx − g(·,·,l0) + S) / f(·,·,l0),    S = Σ_k λ_k u_k sin(k l0)
//! ```
//!
//! since `−u_yy(t, x, l0) = S`. Substituting into the mode equations yields
//! `r_k = M_k + (f_k / f(·,·,l0))·S`, where `S` is taken from the previous
//! iterate.

use ndarray::{Array2, Array3, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimates::mittag_leffler_constant;
use crate::forward::{decompose_data, ModeData};
use crate::fracops::{caputo_l1_zero_start, TimeGrid};
use crate::modesolver::{l2_sq, SpaceGrid, Stepper};
use crate::problem::{ProblemParams, ProblemSpec};
use crate::spectral::{coupling_field, mode_weight, SpectralState};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 60;

/// Label attached to runs whose contraction value exceeds one.
pub const OUTSIDE_REGIME: &str = "outside proven regime";

/// `M_k(t, x)` for every mode, together with the bracket
/// `D_t^α ψ − ψ_xx − g(·,·,l0)` it is built from.
#[derive(Debug, Clone)]
pub struct SourceTermMk {
    /// `(K, nt, nx)`
    pub values: Array3<f64>,
    pub bracket: Array2<f64>,
}

/// Everything a Picard sweep reads: mode data, `ψ` and its derivatives, `M_k`
/// and the coupling factors `f_k / f(·,·,l0)`.
#[derive(Debug, Clone)]
pub struct InverseSetup {
    pub params: ProblemParams,
    pub data: ModeData,
    pub psi: Array2<f64>,
    pub psi_caputo: Array2<f64>,
    pub psi_xx: Array2<f64>,
    pub mk: SourceTermMk,
    /// `(K, nt, nx)`
    pub coupling: Array3<f64>,
    stepper: Stepper,
}

/// Caputo derivative of each `x`-column; row 0 is extrapolated linearly.
fn caputo_columns(psi: &Array2<f64>, time: &TimeGrid, alpha: f64) -> Result<Array2<f64>> {
    let (nt, nx) = psi.dim();
    let mut out = Array2::zeros((nt, nx));
    for j in 0..nx {
        let col = psi.column(j).to_vec();
        let d = caputo_l1_zero_start(&col, time, alpha)?;
        out.column_mut(j).assign(&ndarray::Array1::from(d));
    }
    extrapolate_first_row(&mut out);
    Ok(out)
}

/// `v(0, ·) = 2 v(t_1, ·) − v(t_2, ·)`.
fn extrapolate_first_row(v: &mut Array2<f64>) {
    let nt = v.nrows();
    if nt >= 3 {
        let row = &v.row(1) * 2.0 - v.row(2);
        v.row_mut(0).assign(&row);
    } else if nt == 2 {
        let row = v.row(1).to_owned();
        v.row_mut(0).assign(&row);
    }
}

/// Second `x`-derivative: centred inside, one-sided third order at the walls.
fn second_difference(psi: &Array2<f64>, space: &SpaceGrid) -> Array2<f64> {
    let (nt, nx) = psi.dim();
    let inv = 1.0 / (space.dx() * space.dx());
    let mut out = Array2::zeros((nt, nx));
    for i in 0..nt {
        let r = psi.row(i);
        for j in 1..nx - 1 {
            out[[i, j]] = (r[j - 1] - 2.0 * r[j] + r[j + 1]) * inv;
        }
        if nx >= 4 {
            out[[i, 0]] = (2.0 * r[0] - 5.0 * r[1] + 4.0 * r[2] - r[3]) * inv;
            let n = nx - 1;
            out[[i, n]] = (2.0 * r[n] - 5.0 * r[n - 1] + 4.0 * r[n - 2] - r[n - 3]) * inv;
        } else {
            out[[i, 0]] = out[[i, 1]];
            out[[i, nx - 1]] = out[[i, 1]];
        }
    }
    out
}

impl InverseSetup {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        spec.validate()?;
        let data = decompose_data(spec)?;
        Self::with_data(spec, data)
    }

    /// Reuses an existing decomposition of the data.
    pub fn with_data(spec: &ProblemSpec, data: ModeData) -> Result<Self> {
        let p = spec.params;
        spec.check_trace_nonvanishing()?;
        let psi = spec
            .psi_grid()?
            .ok_or_else(|| Error::Usage("the inverse solve needs the trace ψ".into()))?;
        if psi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("ψ contains non-finite samples".into()));
        }
        let (time, space) = (data.time, data.space);
        let psi_caputo = match &spec.derivatives.psi_caputo {
            Some(d) => spec.sample_tx(d)?,
            None => caputo_columns(&psi, &time, p.alpha)?,
        };
        let psi_xx = match &spec.derivatives.psi_xx {
            Some(d) => spec.sample_tx(d)?,
            None => second_difference(&psi, &space),
        };
        let bracket = &psi_caputo - &psi_xx - &data.g_trace;
        let ratio = &bracket / &data.f_trace;
        let k = data.modes();
        let mut values = Array3::zeros((k, time.nt, space.nx));
        let mut coupling = Array3::zeros((k, time.nt, space.nx));
        for i in 0..k {
            let fk = data.f_k.index_axis(Axis(0), i);
            let m = &fk * &ratio + data.g_k.index_axis(Axis(0), i);
            values.index_axis_mut(Axis(0), i).assign(&m);
            coupling
                .index_axis_mut(Axis(0), i)
                .assign(&(&fk / &data.f_trace));
        }
        let stepper = Stepper::new(time, space, p.alpha)?;
        Ok(Self {
            params: p,
            data,
            psi,
            psi_caputo,
            psi_xx,
            mk: SourceTermMk { values, bracket },
            coupling,
            stepper,
        })
    }

    pub fn time(&self) -> TimeGrid {
        self.data.time
    }

    pub fn space(&self) -> SpaceGrid {
        self.data.space
    }

    /// `f₀ = max |1 / f(t, x, l0)|` over the grid.
    pub fn f0(&self) -> f64 {
        trace_f0(&self.data)
    }

    pub fn contraction_value(&self) -> Result<f64> {
        contraction_from(&self.data, &self.params)
    }
}

pub(crate) fn trace_f0(data: &ModeData) -> f64 {
    data.f_trace
        .iter()
        .fold(0.0f64, |m, v| m.max(1.0 / v.abs()))
}

/// `max_{t,x} Σ_k λ_k^{5/2+ε} |f_k(t, x)|²`.
pub(crate) fn weighted_f_max(data: &ModeData, epsilon: f64) -> f64 {
    let (k, nt, nx) = data.f_k.dim();
    let mut best = 0.0f64;
    for i in 0..nt {
        for j in 0..nx {
            let s: f64 = (0..k)
                .map(|n| mode_weight(n + 1, epsilon) * data.f_k[[n, i, j]].powi(2))
                .sum();
            best = best.max(s);
        }
    }
    best
}

/// `(M_α f₀² / ε)·max Σ λ_k^{5/2+ε} |f_k|²`.
fn contraction_from(data: &ModeData, p: &ProblemParams) -> Result<f64> {
    let m = mittag_leffler_constant(p.alpha, p.t_final)?;
    let f0 = trace_f0(data);
    Ok(m * p.t_final.powf(p.alpha) * f0 * f0 / p.epsilon * weighted_f_max(data, p.epsilon))
}

/// `M_k` for every mode.
pub fn compute_mk(spec: &ProblemSpec) -> Result<SourceTermMk> {
    Ok(InverseSetup::new(spec)?.mk)
}

/// Contraction value of the data; the sufficient condition holds iff it is at most one.
pub fn contraction_check(spec: &ProblemSpec) -> Result<f64> {
    spec.validate()?;
    spec.check_trace_nonvanishing()?;
    contraction_from(&decompose_data(spec)?, &spec.params)
}

#[derive(Debug, Clone)]
pub struct IterationState {
    pub n: usize,
    pub state: SpectralState,
    /// `max_t Σ λ_k^{5/2+ε} ‖u_k^n − u_k^{n−1}‖²`
    pub weighted_increment: f64,
    pub increments: Vec<f64>,
}

impl IterationState {
    /// `u⁰ = 0`.
    pub fn initial(setup: &InverseSetup) -> Self {
        Self {
            n: 0,
            state: SpectralState::zeros(
                setup.data.modes(),
                setup.time(),
                setup.space(),
                setup.params.epsilon,
            ),
            weighted_increment: 0.0,
            increments: Vec::new(),
        }
    }
}

/// One sweep: every mode is solved against the coupling sum of `prev`.
pub fn picard_iterate(setup: &InverseSetup, prev: &IterationState) -> Result<IterationState> {
    let s = coupling_field(&prev.state, setup.params.l0);
    let modes = (0..setup.data.modes())
        .into_par_iter()
        .map(|i| {
            let k = i + 1;
            let rhs = &setup.mk.values.index_axis(Axis(0), i)
                + &(&setup.coupling.index_axis(Axis(0), i) * &s);
            let phi = setup.data.phi_k.row(i).to_vec();
            setup.stepper.solve(k, (k * k) as f64, &phi, rhs.view())
        })
        .collect::<Result<Vec<_>>>()?;
    let state = SpectralState::from_modes(modes, setup.params.epsilon)?;
    let inc = state.max_weighted_distance(&prev.state);
    let mut increments = prev.increments.clone();
    increments.push(inc);
    Ok(IterationState {
        n: prev.n + 1,
        state,
        weighted_increment: inc,
        increments,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub converged: bool,
    /// Weighted increment of iterate `n = 1, 2, …`.
    pub increments: Vec<f64>,
    /// `increment(n+1) / increment(n)` for `n = 1, 2, …`; zero when the
    /// denominator vanishes.
    pub ratios: Vec<f64>,
    /// `max_t Σ λ_k^{5/2+ε} ‖u_k^n‖²` per iterate.
    pub iterate_norms: Vec<f64>,
    pub condition_value: f64,
    pub regime: String,
    pub terminal_increment: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl ConvergenceReport {
    /// Ratios `increment(n+1)/increment(n)` for `n ≥ 2`.
    pub fn ratios_from_second(&self) -> &[f64] {
        if self.ratios.len() > 1 {
            &self.ratios[1..]
        } else {
            &[]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredSource {
    pub time: TimeGrid,
    pub space: SpaceGrid,
    pub h: Array2<f64>,
    /// `max |Σ_k u_k sin(k l0) − ψ|` over the grid.
    pub residual: f64,
}

impl RecoveredSource {
    /// `max_t ‖h(t, ·)‖²_{L²(0,1)}`.
    pub fn max_l2_sq(&self) -> f64 {
        let dx = self.space.dx();
        self.h
            .rows()
            .into_iter()
            .map(|r| l2_sq(&r.to_vec(), dx))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct InverseOutcome {
    pub state: SpectralState,
    pub source: RecoveredSource,
    pub report: ConvergenceReport,
}

/// `h` from the final state; row `t = 0` is extrapolated from `t_1`, `t_2`.
pub fn reconstruct_h(setup: &InverseSetup, state: &SpectralState) -> Result<RecoveredSource> {
    let (time, space) = (setup.time(), setup.space());
    if state.time() != time || state.space() != space {
        return Err(Error::Grid(
            "state and setup live on different grids".into(),
        ));
    }
    let s = coupling_field(state, setup.params.l0);
    let mut h = (&setup.mk.bracket + &s) / &setup.data.f_trace;
    extrapolate_first_row(&mut h);
    let trace = state.trace(setup.params.l0);
    let residual = trace
        .iter()
        .zip(setup.psi.iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(RecoveredSource {
        time,
        space,
        h,
        residual,
    })
}

/// Iterates from `u⁰ = 0` until the weighted increment drops to `tol²` or
/// `max_iter` sweeps are spent. Running out of sweeps is reported through
/// `converged = false`, not as an error.
pub fn solve_inverse(spec: &ProblemSpec, tol: f64, max_iter: usize) -> Result<InverseOutcome> {
    let setup = InverseSetup::new(spec)?;
    solve_inverse_with(&setup, tol, max_iter)
}

pub fn solve_inverse_with(
    setup: &InverseSetup,
    tol: f64,
    max_iter: usize,
) -> Result<InverseOutcome> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::Parameter(format!("tol must be positive, got {tol}")));
    }
    if max_iter < 1 {
        return Err(Error::Parameter("max_iter must be at least 1".into()));
    }
    let condition_value = setup.contraction_value()?;
    let regime = if condition_value <= 1.0 {
        "proven".to_string()
    } else {
        log::warn!("contraction value {condition_value} exceeds 1: {OUTSIDE_REGIME}");
        OUTSIDE_REGIME.to_string()
    };
    let mut current = IterationState::initial(setup);
    let mut norms = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        current = picard_iterate(setup, &current)?;
        norms.push(current.state.max_weighted_norm());
        log::debug!(
            "iteration {}: increment {:e}",
            current.n,
            current.weighted_increment
        );
        if !current.weighted_increment.is_finite() {
            log::warn!("iteration {} diverged", current.n);
            break;
        }
        if current.weighted_increment <= tol * tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "no convergence after {} iterations (increment {:e})",
            current.n,
            current.weighted_increment
        );
    }
    let ratios = current
        .increments
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    let source = reconstruct_h(setup, &current.state)?;
    let report = ConvergenceReport {
        iterations: current.n,
        converged,
        increments: current.increments.clone(),
        ratios,
        iterate_norms: norms,
        condition_value,
        regime,
        terminal_increment: current.weighted_increment,
        tol,
        max_iter,
    };
    Ok(InverseOutcome {
        state: current.state,
        source,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Trace;
    use std::sync::Arc;

    fn zero_spec() -> ProblemSpec {
        let p = ProblemParams {
            modes: 4,
            ny: 33,
            nt: 9,
            nx: 9,
            ..ProblemParams::default()
        };
        let mut s = ProblemSpec::new(
            p,
            Arc::new(|_, _, y| y.sin()),
            Arc::new(|_, _, _| 0.0),
            Arc::new(|_, _| 0.0),
        );
        s.psi = Some(Trace::Analytic(Arc::new(|_, _| 0.0)));
        s
    }

    #[test]
    fn zero_data_converges_in_one_sweep() {
        let s = zero_spec();
        let mk = compute_mk(&s).unwrap();
        assert!(mk.values.iter().all(|&v| v == 0.0));
        let out = solve_inverse(&s, 1e-10, 60).unwrap();
        assert!(out.report.converged);
        assert_eq!(out.report.iterations, 1);
        assert!(out.source.h.iter().all(|&v| v == 0.0));
        assert_eq!(out.source.residual, 0.0);
    }

    #[test]
    fn missing_trace_is_usage_error() {
        let mut s = zero_spec();
        s.psi = None;
        assert!(matches!(solve_inverse(&s, 1e-10, 5), Err(Error::Usage(_))));
        assert!(matches!(
            solve_inverse(&zero_spec(), 0.0, 5),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn vanishing_trace_is_rejected() {
        let mut s = zero_spec();
        s.f = Arc::new(|_, x, y| x * y.sin());
        assert!(matches!(
            compute_mk(&s),
            Err(Error::DivisionHazard { x_index: 0, .. })
        ));
    }

    #[test]
    fn coupling_factor_vanishes_for_higher_modes() {
        let mut s = zero_spec();
        s.g = Arc::new(|t, x, y| t * x * (1.0 - x) * (2.0 * y).sin());
        let setup = InverseSetup::new(&s).unwrap();
        for k in 1..4 {
            for (a, b) in setup
                .mk
                .values
                .index_axis(Axis(0), k)
                .iter()
                .zip(setup.data.g_k.index_axis(Axis(0), k).iter())
            {
                assert!((a - b).abs() < 1e-14);
            }
            assert!(setup
                .coupling
                .index_axis(Axis(0), k)
                .iter()
                .all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn contraction_scales_with_final_time() {
        // with M held fixed, L ∝ T^α
        let mut s = zero_spec();
        s.params.t_final = 0.04;
        let setup = InverseSetup::new(&s).unwrap();
        let l = setup.contraction_value().unwrap();
        let m = mittag_leffler_constant(0.5, 0.04).unwrap();
        assert!((l - 2.0 * m * 0.04f64.sqrt()).abs() < 1e-12 * l);
        assert!((contraction_check(&s).unwrap() - l).abs() < 1e-15 * l);
    }

    #[test]
    fn one_sided_second_difference_is_exact_on_cubics() {
        let space = SpaceGrid::new(7).unwrap();
        let psi = Array2::from_shape_fn((2, 7), |(_, j)| {
            let x = space.x(j);
            x * x * x - 2.0 * x * x + 0.5
        });
        let d = second_difference(&psi, &space);
        for j in 0..7 {
            let exact = 6.0 * space.x(j) - 4.0;
            assert!((d[[1, j]] - exact).abs() < 1e-9, "{j}");
        }
    }
}
