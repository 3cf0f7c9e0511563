//! Problem data: physical parameters, grids and samplers for `f`, `g`, `φ`, `h`, `ψ`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracops::TimeGrid;
use crate::modesolver::SpaceGrid;
use crate::spectral::{SineBasis, DEFAULT_EPSILON, DEFAULT_MODES};

/// Sampler of a function of `(t, x, y)`.
pub type Field3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
/// Sampler of a function of two variables: `(t, x)` or, for `φ`, `(x, y)`.
pub type Field2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Smallest admissible `|f(t, x, l0)|`.
pub const TRACE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub alpha: f64,
    pub t_final: f64,
    pub l0: f64,
    pub modes: usize,
    pub epsilon: f64,
    pub nt: usize,
    pub nx: usize,
    pub ny: usize,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            t_final: 1.0,
            l0: PI / 2.0,
            modes: DEFAULT_MODES,
            epsilon: DEFAULT_EPSILON,
            nt: 65,
            nx: 65,
            ny: 8 * DEFAULT_MODES + 1,
        }
    }
}

impl ProblemParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::Parameter(format!(
                "T must be positive, got {}",
                self.t_final
            )));
        }
        if !(self.l0 > 0.0 && self.l0 < PI) {
            return Err(Error::Parameter(format!(
                "l0 must lie in (0, π), got {}",
                self.l0
            )));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Parameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.modes < 1 {
            return Err(Error::Parameter("K must be at least 1".into()));
        }
        if self.nt < 2 {
            return Err(Error::Grid(format!(
                "nt must be at least 2, got {}",
                self.nt
            )));
        }
        if self.nx < 3 {
            return Err(Error::Grid(format!(
                "nx must be at least 3, got {}",
                self.nx
            )));
        }
        SineBasis::new(self.modes, self.ny)?;
        Ok(())
    }

    pub fn time(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t_final, self.nt)
    }

    pub fn space(&self) -> Result<SpaceGrid> {
        SpaceGrid::new(self.nx)
    }

    pub fn basis(&self) -> Result<SineBasis> {
        SineBasis::new(self.modes, self.ny)
    }

    /// Smallest odd `ny` that satisfies the `8K + 1` rule.
    pub fn default_ny(modes: usize) -> usize {
        8 * modes + 1
    }
}

/// The overdetermination data `ψ(t, x) = u(t, x, l0)`.
#[derive(Clone)]
pub enum Trace {
    Analytic(Field2),
    Sampled(Array2<f64>),
}

impl fmt::Debug for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trace::Analytic(_) => f.write_str("Trace::Analytic(..)"),
            Trace::Sampled(a) => write!(f, "Trace::Sampled({:?})", a.dim()),
        }
    }
}

/// Optional analytic derivatives. Any that is missing is replaced by a
/// numerical or spectral route downstream.
#[derive(Clone, Default)]
pub struct Derivatives {
    pub psi_caputo: Option<Field2>,
    pub psi_xx: Option<Field2>,
    pub f_yyy: Option<Field3>,
    pub g_yyy: Option<Field3>,
    /// `(x, y)`
    pub phi_yyy: Option<Field2>,
    pub phi_x: Option<Field2>,
    pub phi_y: Option<Field2>,
}

/// Full problem description.
#[derive(Clone)]
pub struct ProblemSpec {
    pub params: ProblemParams,
    pub f: Field3,
    pub g: Field3,
    /// `φ(x, y)`
    pub phi: Field2,
    pub h_true: Option<Field2>,
    pub psi: Option<Trace>,
    pub derivatives: Derivatives,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("params", &self.params)
            .field("h_true", &self.h_true.is_some())
            .field("psi", &self.psi)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(params: ProblemParams, f: Field3, g: Field3, phi: Field2) -> Self {
        Self {
            params,
            f,
            g,
            phi,
            h_true: None,
            psi: None,
            derivatives: Derivatives::default(),
        }
    }

    pub fn time(&self) -> Result<TimeGrid> {
        self.params.time()
    }

    pub fn space(&self) -> Result<SpaceGrid> {
        self.params.space()
    }

    /// Same data on other grids or parameters.
    pub fn with_params(&self, params: ProblemParams) -> Self {
        let mut out = self.clone();
        out.params = params;
        if let Some(Trace::Sampled(_)) = out.psi {
            out.psi = None;
        }
        out
    }

    /// Samples `v(t_i, x_j)` on the problem grid.
    pub fn sample_tx(&self, v: &Field2) -> Result<Array2<f64>> {
        let time = self.time()?;
        let space = self.space()?;
        let t = time.nodes();
        let x = space.nodes();
        Ok(Array2::from_shape_fn((time.nt, space.nx), |(i, j)| {
            v(t[i], x[j])
        }))
    }

    /// `f(t, x, l0)` on the grid.
    pub fn f_trace(&self) -> Result<Array2<f64>> {
        let f = self.f.clone();
        let l0 = self.params.l0;
        self.sample_tx(&(Arc::new(move |t, x| f(t, x, l0)) as Field2))
    }

    /// `g(t, x, l0)` on the grid.
    pub fn g_trace(&self) -> Result<Array2<f64>> {
        let g = self.g.clone();
        let l0 = self.params.l0;
        self.sample_tx(&(Arc::new(move |t, x| g(t, x, l0)) as Field2))
    }

    /// `ψ` on the grid, if present.
    pub fn psi_grid(&self) -> Result<Option<Array2<f64>>> {
        match &self.psi {
            None => Ok(None),
            Some(Trace::Analytic(p)) => self.sample_tx(p).map(Some),
            Some(Trace::Sampled(a)) => {
                let dim = (self.params.nt, self.params.nx);
                if a.dim() != dim {
                    return Err(Error::Grid(format!(
                        "sampled ψ is {:?} but the grid is {:?}",
                        a.dim(),
                        dim
                    )));
                }
                Ok(Some(a.clone()))
            }
        }
    }

    /// Rejects grids on which `f(t, x, l0)` comes within [`TRACE_FLOOR`] of zero.
    pub fn check_trace_nonvanishing(&self) -> Result<Array2<f64>> {
        let ft = self.f_trace()?;
        let time = self.time()?;
        let space = self.space()?;
        for ((i, j), &v) in ft.indexed_iter() {
            if !(v.abs() >= TRACE_FLOOR) {
                return Err(Error::DivisionHazard {
                    t_index: i,
                    x_index: j,
                    t: time.t(i),
                    x: space.x(j),
                    value: v.abs(),
                });
            }
        }
        Ok(ft)
    }

    /// Sampled checks of the wall compatibility `v = v_yy = 0` at `y = 0, π`
    /// for `f`, `g` and `φ`. Violations are returned as warnings.
    pub fn compatibility_warnings(&self) -> Result<Vec<String>> {
        let time = self.time()?;
        let t_samples: Vec<f64> = (0..5).map(|i| time.t_final * i as f64 / 4.0).collect();
        let x_samples: Vec<f64> = (0..5).map(|i| i as f64 / 4.0).collect();
        let mut warnings = Vec::new();
        'outer: for &t in &t_samples {
            for &x in &x_samples {
                let found: Vec<String> = [
                    wall_violation(&format!("f(t={t}, x={x}, ·)"), &|y| (self.f)(t, x, y)),
                    wall_violation(&format!("g(t={t}, x={x}, ·)"), &|y| (self.g)(t, x, y)),
                ]
                .into_iter()
                .flatten()
                .collect();
                if !found.is_empty() {
                    warnings.extend(found);
                    break 'outer;
                }
            }
        }
        for &x in &x_samples {
            if let Some(w) = wall_violation(&format!("φ(x={x}, ·)"), &|y| (self.phi)(x, y)) {
                warnings.push(w);
                break;
            }
        }
        for w in &warnings {
            log::warn!("compatibility condition violated: {w}");
        }
        Ok(warnings)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()
    }
}

fn wall_violation(name: &str, v: &dyn Fn(f64) -> f64) -> Option<String> {
    let h = 1e-3;
    let scale = [0.5, 1.0, 1.5, 2.0, 2.5]
        .iter()
        .map(|&y| v(y).abs())
        .fold(1.0f64, f64::max);
    for &(y, s) in &[(0.0, 1.0), (PI, -1.0)] {
        let value = v(y);
        // one-sided second difference approximates v_yy near the wall
        let second = (v(y + 2.0 * s * h) - 2.0 * v(y + s * h) + value) / (h * h);
        if value.abs() > 1e-9 * scale {
            return Some(format!("{name} = {value:e} at y = {y}"));
        }
        if second.abs() > 1e-2 * scale {
            return Some(format!("{name}_yy ≈ {second:e} at y = {y}"));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_with_f(f: Field3) -> ProblemSpec {
        let params = ProblemParams {
            nt: 5,
            nx: 5,
            modes: 2,
            ny: 17,
            ..ProblemParams::default()
        };
        ProblemSpec::new(params, f, Arc::new(|_, _, _| 0.0), Arc::new(|_, _| 0.0))
    }

    #[test]
    fn vanishing_trace_names_node() {
        let spec = spec_with_f(Arc::new(|t, _x, y| (t - 0.5) * y.sin()));
        match spec.check_trace_nonvanishing() {
            Err(Error::DivisionHazard { t_index, .. }) => assert_eq!(t_index, 2),
            other => panic!("{other:?}"),
        }
        let spec = spec_with_f(Arc::new(|_, _, y| y.sin()));
        assert!(spec.check_trace_nonvanishing().is_ok());
    }

    #[test]
    fn wall_compatibility() {
        let spec = spec_with_f(Arc::new(|_, _, y| y.sin()));
        assert!(spec.compatibility_warnings().unwrap().is_empty());
        // y(π − y) vanishes at the walls but its second derivative does not
        let spec = spec_with_f(Arc::new(|_, _, y| y * (PI - y)));
        assert!(!spec.compatibility_warnings().unwrap().is_empty());
        let spec = spec_with_f(Arc::new(|_, _, y| y.cos()));
        assert!(!spec.compatibility_warnings().unwrap().is_empty());
    }

    #[test]
    fn parameter_bounds() {
        let p = ProblemParams {
            alpha: 1.5,
            ..Default::default()
        };
        assert!(
            matches!(p.validate(), Err(Error::Parameter(m)) if m.contains("alpha must lie in (0,1)"))
        );
        let p = ProblemParams {
            l0: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = ProblemParams {
            ny: 33,
            ..Default::default()
        };
        assert!(matches!(p.validate(), Err(Error::Truncation(_))));
    }
}
