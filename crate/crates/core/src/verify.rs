//! Manufactured solutions with analytic `(u*, h*)` and grid-refinement studies.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::forward::solve_forward;
use crate::inverse::{solve_inverse, RecoveredSource, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::modesolver::l2_sq;
use crate::problem::{Derivatives, Field2, Field3, ProblemParams, ProblemSpec, Trace};
use crate::spectral::SpectralState;

pub const CASE_IDS: [&str; 3] = ["MMS-0", "MMS-1", "MMS-2"];

/// A registered problem with known solution.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub id: String,
    pub spec: ProblemSpec,
    pub exact_u: Field3,
    pub exact_h: Field2,
    exact_caputo_u: Field3,
    exact_laplacian_u: Field3,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("id", &self.id)
            .field("spec", &self.spec)
            .finish_non_exhaustive()
    }
}

/// Default parameters of a case: `α = 1/2`, `T = 0.02`, and the observation
/// plane `l0 = π/2` (`π/3` for MMS-2, where `sin 2l0 ≠ 0`).
pub fn default_params(id: &str) -> Result<ProblemParams> {
    let l0 = match id {
        "MMS-0" | "MMS-1" => PI / 2.0,
        "MMS-2" => PI / 3.0,
        other => return Err(Error::UnknownCase(other.to_string())),
    };
    Ok(ProblemParams {
        t_final: 0.02,
        l0,
        ..ProblemParams::default()
    })
}

/// Case `id` with its default parameters.
pub fn manufactured_case(id: &str) -> Result<ManufacturedCase> {
    build(id, default_params(id)?)
}

impl ManufacturedCase {
    /// Same case on other grids or parameters; `ψ` follows `l0`.
    pub fn with_params(&self, params: ProblemParams) -> Result<Self> {
        build(&self.id, params)
    }

    pub fn params(&self) -> ProblemParams {
        self.spec.params
    }

    /// `D_t^α u* − Δu* − g − f·h*` at one point.
    pub fn residual(&self, t: f64, x: f64, y: f64) -> f64 {
        (self.exact_caputo_u)(t, x, y)
            - (self.exact_laplacian_u)(t, x, y)
            - (self.spec.g)(t, x, y)
            - (self.spec.f)(t, x, y) * (self.exact_h)(t, x)
    }

    /// Largest residual over `samples` random points of `[0,T]×[0,1]×[0,π]`.
    pub fn max_residual(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t_final = self.spec.params.t_final;
        (0..samples)
            .map(|_| {
                let t = rng.random::<f64>() * t_final;
                let x = rng.random::<f64>();
                let y = rng.random::<f64>() * PI;
                self.residual(t, x, y).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn power_caputo(alpha: f64) -> impl Fn(f64) -> f64 + Send + Sync + Clone {
    // D^α (1 + t²) = 2 t^{2−α} / Γ(3−α)
    let c = 2.0 / gamma(3.0 - alpha);
    move |t: f64| c * t.powf(2.0 - alpha)
}

fn build(id: &str, params: ProblemParams) -> Result<ManufacturedCase> {
    let alpha = params.alpha;
    let l0 = params.l0;
    let caputo = power_caputo(alpha);
    let pi2 = PI * PI;
    let mut spec;
    let exact_u: Field3;
    let exact_h: Field2;
    let exact_caputo_u: Field3;
    let exact_laplacian_u: Field3;
    match id {
        "MMS-0" => {
            spec = ProblemSpec::new(
                params,
                Arc::new(|_, _, y: f64| y.sin()),
                Arc::new(|_, _, _| 0.0),
                Arc::new(|_, _| 0.0),
            );
            spec.h_true = Some(Arc::new(|_, _| 0.0));
            spec.psi = Some(Trace::Analytic(Arc::new(|_, _| 0.0)));
            spec.derivatives = Derivatives {
                psi_caputo: Some(Arc::new(|_, _| 0.0)),
                psi_xx: Some(Arc::new(|_, _| 0.0)),
                f_yyy: Some(Arc::new(|_, _, y: f64| -y.cos())),
                g_yyy: Some(Arc::new(|_, _, _| 0.0)),
                phi_yyy: Some(Arc::new(|_, _| 0.0)),
                phi_x: Some(Arc::new(|_, _| 0.0)),
                phi_y: Some(Arc::new(|_, _| 0.0)),
            };
            exact_u = Arc::new(|_, _, _| 0.0);
            exact_h = Arc::new(|_, _| 0.0);
            exact_caputo_u = Arc::new(|_, _, _| 0.0);
            exact_laplacian_u = Arc::new(|_, _, _| 0.0);
        }
        "MMS-1" => {
            let c = caputo.clone();
            let amplitude = move |t: f64| c(t) + (pi2 + 1.0) * (1.0 + t * t) - (1.0 + t);
            let a = amplitude.clone();
            spec = ProblemSpec::new(
                params,
                Arc::new(|_, _, y: f64| y.sin()),
                Arc::new(move |t, x: f64, y: f64| a(t) * (PI * x).sin() * y.sin()),
                Arc::new(|x: f64, y: f64| (PI * x).sin() * y.sin()),
            );
            spec.h_true = Some(Arc::new(|t, x: f64| (1.0 + t) * (PI * x).sin()));
            let s = l0.sin();
            spec.psi = Some(Trace::Analytic(Arc::new(move |t, x: f64| {
                (1.0 + t * t) * (PI * x).sin() * s
            })));
            let c = caputo.clone();
            let a = amplitude.clone();
            spec.derivatives = Derivatives {
                psi_caputo: Some(Arc::new(move |t, x: f64| c(t) * (PI * x).sin() * s)),
                psi_xx: Some(Arc::new(move |t, x: f64| {
                    -pi2 * (1.0 + t * t) * (PI * x).sin() * s
                })),
                f_yyy: Some(Arc::new(|_, _, y: f64| -y.cos())),
                g_yyy: Some(Arc::new(move |t, x: f64, y: f64| {
                    -a(t) * (PI * x).sin() * y.cos()
                })),
                phi_yyy: Some(Arc::new(|x: f64, y: f64| -(PI * x).sin() * y.cos())),
                phi_x: Some(Arc::new(|x: f64, y: f64| PI * (PI * x).cos() * y.sin())),
                phi_y: Some(Arc::new(|x: f64, y: f64| (PI * x).sin() * y.cos())),
            };
            exact_u = Arc::new(|t, x: f64, y: f64| (1.0 + t * t) * (PI * x).sin() * y.sin());
            exact_h = Arc::new(|t, x: f64| (1.0 + t) * (PI * x).sin());
            let c = caputo.clone();
            exact_caputo_u = Arc::new(move |t, x: f64, y: f64| c(t) * (PI * x).sin() * y.sin());
            exact_laplacian_u = Arc::new(move |t, x: f64, y: f64| {
                -(pi2 + 1.0) * (1.0 + t * t) * (PI * x).sin() * y.sin()
            });
        }
        "MMS-2" => {
            let c = caputo.clone();
            let first = move |t: f64| c(t) + (pi2 + 1.0) * (1.0 + t * t) - (1.0 + t);
            let c = caputo.clone();
            let second = move |t: f64| c(t) + (pi2 + 4.0) * (1.0 + t * t);
            let (a, b) = (first.clone(), second.clone());
            spec = ProblemSpec::new(
                params,
                Arc::new(|_, _, y: f64| y.sin()),
                Arc::new(move |t, x: f64, y: f64| {
                    (PI * x).sin() * (a(t) * y.sin() + b(t) / 8.0 * (2.0 * y).sin())
                }),
                Arc::new(|x: f64, y: f64| (PI * x).sin() * (y.sin() + (2.0 * y).sin() / 8.0)),
            );
            spec.h_true = Some(Arc::new(|t, x: f64| (1.0 + t) * (PI * x).sin()));
            let s = l0.sin() + (2.0 * l0).sin() / 8.0;
            spec.psi = Some(Trace::Analytic(Arc::new(move |t, x: f64| {
                (1.0 + t * t) * (PI * x).sin() * s
            })));
            let c = caputo.clone();
            let (a, b) = (first.clone(), second.clone());
            spec.derivatives = Derivatives {
                psi_caputo: Some(Arc::new(move |t, x: f64| c(t) * (PI * x).sin() * s)),
                psi_xx: Some(Arc::new(move |t, x: f64| {
                    -pi2 * (1.0 + t * t) * (PI * x).sin() * s
                })),
                f_yyy: Some(Arc::new(|_, _, y: f64| -y.cos())),
                g_yyy: Some(Arc::new(move |t, x: f64, y: f64| {
                    -(PI * x).sin() * (a(t) * y.cos() + b(t) * (2.0 * y).cos())
                })),
                phi_yyy: Some(Arc::new(|x: f64, y: f64| {
                    -(PI * x).sin() * (y.cos() + (2.0 * y).cos())
                })),
                phi_x: Some(Arc::new(|x: f64, y: f64| {
                    PI * (PI * x).cos() * (y.sin() + (2.0 * y).sin() / 8.0)
                })),
                phi_y: Some(Arc::new(|x: f64, y: f64| {
                    (PI * x).sin() * (y.cos() + (2.0 * y).cos() / 4.0)
                })),
            };
            exact_u = Arc::new(|t, x: f64, y: f64| {
                (1.0 + t * t) * (PI * x).sin() * (y.sin() + (2.0 * y).sin() / 8.0)
            });
            exact_h = Arc::new(|t, x: f64| (1.0 + t) * (PI * x).sin());
            let c = caputo.clone();
            exact_caputo_u = Arc::new(move |t, x: f64, y: f64| {
                c(t) * (PI * x).sin() * (y.sin() + (2.0 * y).sin() / 8.0)
            });
            exact_laplacian_u = Arc::new(move |t, x: f64, y: f64| {
                -(1.0 + t * t)
                    * (PI * x).sin()
                    * ((pi2 + 1.0) * y.sin() + (pi2 + 4.0) * (2.0 * y).sin() / 8.0)
            });
        }
        other => return Err(Error::UnknownCase(other.to_string())),
    }
    spec.validate()?;
    Ok(ManufacturedCase {
        id: id.to_string(),
        spec,
        exact_u,
        exact_h,
        exact_caputo_u,
        exact_laplacian_u,
    })
}

fn trapz(values: &[f64], dx: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    dx * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1]))
}

/// Absolute and relative discrete `L²(Q)` error of `u` against `u*`, via
/// Parseval on the sine coefficients of `u*`.
pub fn u_error(case: &ManufacturedCase, state: &SpectralState) -> Result<(f64, f64)> {
    let p = case.spec.params;
    let basis = p.basis()?;
    let (time, space) = (state.time(), state.space());
    let x = space.nodes();
    let y = basis.y_nodes();
    let k = state.modes.len();
    let mut err_t = vec![0.0; time.nt];
    let mut ref_t = vec![0.0; time.nt];
    let mut samples = vec![0.0; y.len()];
    let mut coeffs = vec![0.0; k];
    for i in 0..time.nt {
        let t = time.t(i);
        let mut diff = vec![vec![0.0; space.nx]; k];
        let mut exact = vec![vec![0.0; space.nx]; k];
        for (j, &xj) in x.iter().enumerate() {
            for (n, &yn) in y.iter().enumerate() {
                samples[n] = (case.exact_u)(t, xj, yn);
            }
            basis.project(&samples, &mut coeffs);
            for m in 0..k {
                exact[m][j] = coeffs[m];
                diff[m][j] = state.modes[m].values[[i, j]] - coeffs[m];
            }
        }
        err_t[i] = PI / 2.0 * diff.iter().map(|r| l2_sq(r, space.dx())).sum::<f64>();
        ref_t[i] = PI / 2.0 * exact.iter().map(|r| l2_sq(r, space.dx())).sum::<f64>();
    }
    let err = trapz(&err_t, time.dt()).sqrt();
    let reference = trapz(&ref_t, time.dt()).sqrt();
    Ok((
        err,
        if reference > 0.0 {
            err / reference
        } else {
            err
        },
    ))
}

/// Absolute and relative `L²((t_1, T)×(0,1))` error of a recovered source;
/// the extrapolated row `t = 0` is excluded.
pub fn h_error(case: &ManufacturedCase, source: &RecoveredSource) -> (f64, f64) {
    let (time, space) = (source.time, source.space);
    let x = space.nodes();
    let mut err_t = Vec::with_capacity(time.nt - 1);
    let mut ref_t = Vec::with_capacity(time.nt - 1);
    for i in 1..time.nt {
        let t = time.t(i);
        let exact: Vec<f64> = x.iter().map(|&xj| (case.exact_h)(t, xj)).collect();
        let diff: Vec<f64> = exact
            .iter()
            .zip(source.h.row(i).iter())
            .map(|(a, b)| b - a)
            .collect();
        err_t.push(l2_sq(&diff, space.dx()));
        ref_t.push(l2_sq(&exact, space.dx()));
    }
    let err = trapz(&err_t, time.dt()).sqrt();
    let reference = trapz(&ref_t, time.dt()).sqrt();
    (
        err,
        if reference > 0.0 {
            err / reference
        } else {
            err
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyTarget {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyLevel {
    pub nt: usize,
    pub nx: usize,
    pub dt: f64,
    pub dx: f64,
    pub error: f64,
    pub relative_error: f64,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub case_id: String,
    pub target: StudyTarget,
    /// `"dt"` or `"dx"`: the step the orders are measured against.
    pub step: String,
    /// Error norm: `L2(Q)` for `u`; for `h`, `L2((t1,T)x(0,1))`, skipping the extrapolated first row.
    pub norm: String,
    pub levels: Vec<StudyLevel>,
    /// Orders between consecutive levels.
    pub pairwise_orders: Vec<f64>,
    /// Least-squares slope of `log error` against `log step`.
    pub observed_order: Option<f64>,
    pub aborted: Option<String>,
}

impl ConvergenceStudy {
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} {:?} study ({} refinement)",
            self.case_id, self.target, self.step
        );
        let _ = writeln!(
            s,
            "{:>6} {:>6} {:>12} {:>12} {:>8}",
            "nt", "nx", "error", "rel", "order"
        );
        for (i, l) in self.levels.iter().enumerate() {
            let order = if i == 0 {
                "-".to_string()
            } else {
                format!("{:.3}", self.pairwise_orders[i - 1])
            };
            let _ = writeln!(
                s,
                "{:>6} {:>6} {:>12.4e} {:>12.4e} {:>8}",
                l.nt, l.nx, l.error, l.relative_error, order
            );
        }
        match self.observed_order {
            Some(o) => {
                let _ = writeln!(s, "observed order {o:.3}");
            }
            None => {
                let _ = writeln!(s, "observed order n/a");
            }
        }
        if let Some(reason) = &self.aborted {
            let _ = writeln!(s, "aborted: {reason}");
        }
        s
    }
}

fn validate_ladder(ladder: &[(usize, usize)]) -> Result<()> {
    if ladder.len() < 3 {
        return Err(Error::Usage(format!(
            "a ladder needs at least 3 levels, got {}",
            ladder.len()
        )));
    }
    for w in ladder.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b.0 < a.0 || b.1 < a.1 || b == a {
            return Err(Error::Usage(format!(
                "ladder is not strictly refining at {a:?} -> {b:?}"
            )));
        }
    }
    Ok(())
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn run_level(
    case: &ManufacturedCase,
    nt: usize,
    nx: usize,
    target: StudyTarget,
) -> Result<std::result::Result<StudyLevel, String>> {
    let p = ProblemParams {
        nt,
        nx,
        ..case.spec.params
    };
    let c = case.with_params(p)?;
    let time = c.spec.time()?;
    let space = c.spec.space()?;
    match target {
        StudyTarget::Forward => {
            let (state, _) = solve_forward(&c.spec)?;
            let (error, relative_error) = u_error(&c, &state)?;
            Ok(Ok(StudyLevel {
                nt,
                nx,
                dt: time.dt(),
                dx: space.dx(),
                error,
                relative_error,
                iterations: None,
            }))
        }
        StudyTarget::Inverse => {
            let out = solve_inverse(&c.spec, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            if !out.report.converged {
                return Ok(Err(format!(
                    "inverse iteration did not converge at nt = {nt}, nx = {nx} after {} sweeps",
                    out.report.iterations
                )));
            }
            let (error, relative_error) = h_error(&c, &out.source);
            Ok(Ok(StudyLevel {
                nt,
                nx,
                dt: time.dt(),
                dx: space.dx(),
                error,
                relative_error,
                iterations: Some(out.report.iterations),
            }))
        }
    }
}

/// Runs `target` on every `(nt, nx)` level of `ladder` and measures the
/// observed order. A non-convergent inverse level ends the study; the levels
/// before it are kept.
pub fn convergence_study(
    case: &ManufacturedCase,
    ladder: &[(usize, usize)],
    target: StudyTarget,
) -> Result<ConvergenceStudy> {
    validate_ladder(ladder)?;
    let outcomes: Vec<_> = ladder
        .par_iter()
        .map(|&(nt, nx)| run_level(case, nt, nx, target))
        .collect();
    let mut levels = Vec::new();
    let mut aborted = None;
    for o in outcomes {
        match o? {
            Ok(level) => levels.push(level),
            Err(reason) => {
                aborted = Some(reason);
                break;
            }
        }
    }
    let time_only = ladder.iter().all(|l| l.1 == ladder[0].1);
    let step_of = |l: &StudyLevel| if time_only { l.dt } else { l.dx };
    let pairwise_orders = levels
        .windows(2)
        .map(|w| (w[0].error / w[1].error).ln() / (step_of(&w[0]) / step_of(&w[1])).ln())
        .collect();
    let observed_order = if levels.len() >= 2 && levels.iter().all(|l| l.error > 0.0) {
        let xs: Vec<f64> = levels.iter().map(|l| step_of(l).ln()).collect();
        let ys: Vec<f64> = levels.iter().map(|l| l.error.ln()).collect();
        Some(slope(&xs, &ys))
    } else {
        None
    };
    Ok(ConvergenceStudy {
        case_id: case.id.clone(),
        target,
        step: if time_only { "dt" } else { "dx" }.to_string(),
        norm: match target {
            StudyTarget::Forward => "L2(Q)".into(),
            StudyTarget::Inverse => "L2((t1,T)x(0,1))".into(),
        },
        levels,
        pairwise_orders,
        observed_order,
        aborted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry() {
        for id in CASE_IDS {
            let c = manufactured_case(id).unwrap();
            assert_eq!(c.id, id);
            assert!(c.max_residual(100, 11) <= 1e-10, "{id}");
        }
        assert!(matches!(
            manufactured_case("MMS-9"),
            Err(Error::UnknownCase(_))
        ));
    }

    #[test]
    fn mms1_trace() {
        let c = manufactured_case("MMS-1").unwrap();
        let psi = c.spec.psi_grid().unwrap().unwrap();
        let time = c.spec.time().unwrap();
        let space = c.spec.space().unwrap();
        for i in [0, 7, 64] {
            for j in [0, 13, 40] {
                let (t, x) = (time.t(i), space.x(j));
                assert!((psi[[i, j]] - (1.0 + t * t) * (PI * x).sin()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ladder_must_refine() {
        let c = manufactured_case("MMS-0").unwrap();
        assert!(convergence_study(&c, &[(9, 9), (17, 17)], StudyTarget::Forward).is_err());
        assert!(
            convergence_study(&c, &[(9, 9), (17, 17), (17, 17)], StudyTarget::Forward).is_err()
        );
    }

    #[test]
    fn zero_case_has_zero_error() {
        let c = manufactured_case("MMS-0").unwrap();
        let p = ProblemParams {
            modes: 2,
            ny: 17,
            ..c.params()
        };
        let c = c.with_params(p).unwrap();
        let s = convergence_study(&c, &[(5, 5), (9, 9), (17, 17)], StudyTarget::Inverse).unwrap();
        assert!(s.levels.iter().all(|l| l.error == 0.0));
        assert!(s.observed_order.is_none() && s.aborted.is_none());
    }
}
