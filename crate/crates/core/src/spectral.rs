//! Sine eigenbasis on `(0, π)`: `−Y'' = λY`, `Y(0) = Y(π) = 0`, `λ_k = k²`.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::fracops::TimeGrid;
use crate::modesolver::{l2_sq, ModeField, SpaceGrid};

pub const DEFAULT_MODES: usize = 32;
pub const DEFAULT_EPSILON: f64 = 0.5;

/// `λ_k^{5/2+ε} = k^{5+2ε}`, the weight of mode `k` in the contraction norm.
pub fn mode_weight(k: usize, epsilon: f64) -> f64 {
    (k as f64).powf(5.0 + 2.0 * epsilon)
}

/// Truncated sine basis with a composite-Simpson quadrature grid on `[0, π]`.
#[derive(Debug, Clone)]
pub struct SineBasis {
    modes: usize,
    y_nodes: Vec<f64>,
    /// `(2/π)·w_j·sin(k y_j)`, row `k−1`.
    analysis: Array2<f64>,
    simpson: Vec<f64>,
}

impl SineBasis {
    /// Basis with `modes` terms on `ny` equally spaced nodes (`ny` odd).
    pub fn new(modes: usize, ny: usize) -> Result<Self> {
        if modes < 1 {
            return Err(Error::Parameter("mode count K must be at least 1".into()));
        }
        if ny < 3 || ny.is_multiple_of(2) {
            return Err(Error::Grid(format!(
                "Simpson y-grid needs an odd node count >= 3, got {ny}"
            )));
        }
        if modes > (ny - 1) / 2 {
            return Err(Error::Truncation(format!(
                "K = {modes} exceeds the Nyquist limit {} of a {ny}-node y-grid",
                (ny - 1) / 2
            )));
        }
        let h = PI / (ny - 1) as f64;
        let y_nodes: Vec<f64> = (0..ny)
            .map(|j| if j + 1 == ny { PI } else { j as f64 * h })
            .collect();
        let simpson: Vec<f64> = (0..ny)
            .map(|j| {
                let w = if j == 0 || j + 1 == ny {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * h / 3.0
            })
            .collect();
        let analysis = Array2::from_shape_fn((modes, ny), |(k, j)| {
            2.0 / PI * simpson[j] * ((k + 1) as f64 * y_nodes[j]).sin()
        });
        Ok(Self {
            modes,
            y_nodes,
            analysis,
            simpson,
        })
    }

    /// Default resolution: `8K + 1` nodes.
    pub fn with_modes(modes: usize) -> Result<Self> {
        Self::new(modes, 8 * modes + 1)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn lambda(&self, k: usize) -> f64 {
        (k * k) as f64
    }

    pub fn y_nodes(&self) -> &[f64] {
        &self.y_nodes
    }

    pub fn simpson_weights(&self) -> &[f64] {
        &self.simpson
    }

    /// Coefficients without the boundary check; `v` must have `ny` samples.
    pub(crate) fn project(&self, v: &[f64], out: &mut [f64]) {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self.analysis.row(k).iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// Simpson approximation of `∫_0^π v² dy`.
    pub(crate) fn integrate_sq(&self, v: &[f64]) -> f64 {
        self.simpson.iter().zip(v).map(|(w, x)| w * x * x).sum()
    }
}

/// `v_k = (2/π) ∫_0^π v(y) sin(ky) dy` for `k = 1..K`.
pub fn sine_coefficients(v: &[f64], basis: &SineBasis) -> Result<Vec<f64>> {
    let ny = basis.y_nodes.len();
    if v.len() != ny {
        return Err(Error::Grid(format!(
            "expected {ny} y-samples, got {}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data("non-finite y-samples".into()));
    }
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    if v[0].abs() > 1e-12 * scale || v[ny - 1].abs() > 1e-12 * scale {
        log::warn!(
            "sine expansion of data that does not vanish at y = 0 or y = π ({}, {})",
            v[0],
            v[ny - 1]
        );
    }
    let mut out = vec![0.0; basis.modes];
    basis.project(v, &mut out);
    Ok(out)
}

/// Partial sum `Σ_k c_k sin(k y)` at each node; exactly zero at `y = 0, π`.
pub fn sine_synthesis(coeffs: &[f64], y_nodes: &[f64]) -> Vec<f64> {
    y_nodes
        .iter()
        .map(|&y| {
            if y <= 0.0 || y >= PI {
                0.0
            } else {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * ((i + 1) as f64 * y).sin())
                    .sum()
            }
        })
        .collect()
}

/// All `K` modes on one `(t, x)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub modes: Vec<ModeField>,
    pub epsilon: f64,
}

impl SpectralState {
    pub fn zeros(modes: usize, time: TimeGrid, space: SpaceGrid, epsilon: f64) -> Self {
        Self {
            modes: (1..=modes)
                .map(|k| ModeField::zeros(k, time, space))
                .collect(),
            epsilon,
        }
    }

    pub fn from_modes(modes: Vec<ModeField>, epsilon: f64) -> Result<Self> {
        if let Some(first) = modes.first() {
            for (i, m) in modes.iter().enumerate() {
                if m.k != i + 1 {
                    return Err(Error::Usage(format!(
                        "mode {} stored at slot {}",
                        m.k,
                        i + 1
                    )));
                }
                if m.time != first.time || m.space != first.space {
                    return Err(Error::Grid("modes live on different grids".into()));
                }
            }
        }
        if !(epsilon > 0.0) {
            return Err(Error::Parameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Self { modes, epsilon })
    }

    pub fn time(&self) -> TimeGrid {
        self.modes[0].time
    }

    pub fn space(&self) -> SpaceGrid {
        self.modes[0].space
    }

    /// `max_t Σ λ_k^{5/2+ε} ‖u_k(t)‖²`.
    pub fn max_weighted_norm(&self) -> f64 {
        (0..self.time().nt)
            .map(|i| weighted_norm(self, i))
            .fold(0.0, f64::max)
    }

    /// `max_t Σ λ_k^{5/2+ε} ‖u_k(t) − v_k(t)‖²`.
    pub fn max_weighted_distance(&self, other: &SpectralState) -> f64 {
        let dx = self.space().dx();
        (0..self.time().nt)
            .map(|i| {
                self.modes
                    .iter()
                    .zip(&other.modes)
                    .map(|(a, b)| {
                        let diff: Vec<f64> = a
                            .values
                            .row(i)
                            .iter()
                            .zip(b.values.row(i).iter())
                            .map(|(p, q)| p - q)
                            .collect();
                        mode_weight(a.k, self.epsilon) * l2_sq(&diff, dx)
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// `u(t, x, y)` on the `(t, x)` grid for a fixed `y`.
    pub fn trace(&self, y: f64) -> Array2<f64> {
        let time = self.time();
        let space = self.space();
        let mut out = Array2::zeros((time.nt, space.nx));
        if y <= 0.0 || y >= PI {
            return out;
        }
        for m in &self.modes {
            let s = (m.k as f64 * y).sin();
            out.scaled_add(s, &m.values);
        }
        out
    }
}

/// `Σ_k λ_k^{5/2+ε} ‖u_k(t_i)‖²_{L²(0,1)}`.
pub fn weighted_norm(s: &SpectralState, t_index: usize) -> f64 {
    let dx = s.space().dx();
    s.modes
        .iter()
        .map(|m| {
            let row = m.values.row(t_index);
            mode_weight(m.k, s.epsilon) * l2_sq(&row.to_vec(), dx)
        })
        .sum()
}

/// `S(t_i, x) = Σ_k λ_k u_k(t_i, x) sin(k l0)`.
pub fn coupling_sum(s: &SpectralState, l0: f64, t_index: usize) -> Result<Vec<f64>> {
    if !(l0 > 0.0 && l0 < PI) {
        return Err(Error::Parameter(format!("l0 must lie in (0, π), got {l0}")));
    }
    let nx = s.space().nx;
    let mut out = vec![0.0; nx];
    for m in &s.modes {
        let c = m.lambda() * (m.k as f64 * l0).sin();
        for (o, v) in out.iter_mut().zip(m.values.row(t_index).iter()) {
            *o += c * v;
        }
    }
    Ok(out)
}

/// Coupling sum on every time level.
pub(crate) fn coupling_field(s: &SpectralState, l0: f64) -> Array2<f64> {
    let time = s.time();
    let space = s.space();
    let mut out = Array2::zeros((time.nt, space.nx));
    for m in &s.modes {
        let c = m.lambda() * (m.k as f64 * l0).sin();
        out.scaled_add(c, &m.values);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(basis: &SineBasis, f: impl Fn(f64) -> f64) -> Vec<f64> {
        basis.y_nodes().iter().map(|&y| f(y)).collect()
    }

    #[test]
    fn orthogonality() {
        let b = SineBasis::with_modes(8).unwrap();
        let c = sine_coefficients(&samples(&b, |y| (3.0 * y).sin()), &b).unwrap();
        for (i, v) in c.iter().enumerate() {
            let expected = if i == 2 { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-14, "k={}: {v}", i + 1);
        }
        let c = sine_coefficients(&vec![0.0; b.y_nodes().len()], &b).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn parabola_coefficients() {
        // y(π−y): 8/(πk³) for odd k, 0 for even k
        let b = SineBasis::new(7, 2049).unwrap();
        let c = sine_coefficients(&samples(&b, |y| y * (PI - y)), &b).unwrap();
        for (i, v) in c.iter().enumerate() {
            let k = (i + 1) as f64;
            let exact = if (i + 1) % 2 == 1 {
                8.0 / (PI * k.powi(3))
            } else {
                0.0
            };
            assert!((v - exact).abs() < 1e-10, "k={k}: {v} vs {exact}");
        }
    }

    #[test]
    fn synthesis_examples() {
        let y = [0.0, PI / 2.0, PI];
        assert_eq!(sine_synthesis(&[0.0; 4], &y), vec![0.0; 3]);
        let s = sine_synthesis(&[0.0, 0.0, 1.0], &y);
        assert!((s[1] + 1.0).abs() < 1e-15);
        assert_eq!(s[0], 0.0);
        assert_eq!(s[2], 0.0);
    }

    #[test]
    fn round_trip() {
        let b = SineBasis::with_modes(8).unwrap();
        let v = samples(&b, |y| (2.0 * y).sin() + 0.5 * (5.0 * y).sin());
        let c = sine_coefficients(&v, &b).unwrap();
        assert!((c[1] - 1.0).abs() < 1e-14 && (c[4] - 0.5).abs() < 1e-14);
        let back = sine_synthesis(&c, b.y_nodes());
        for (a, e) in back.iter().zip(&v) {
            assert!((a - e).abs() < 1e-13);
        }
    }

    #[test]
    fn nyquist_limit() {
        assert!(matches!(SineBasis::new(9, 17), Err(Error::Truncation(_))));
        assert!(SineBasis::new(8, 17).is_ok());
    }

    fn single_mode_state(k: usize, nx: usize, f: impl Fn(f64) -> f64, eps: f64) -> SpectralState {
        let time = TimeGrid::new(1.0, 2).unwrap();
        let space = SpaceGrid::new(nx).unwrap();
        let mut s = SpectralState::zeros(k.max(2), time, space, eps);
        for i in 0..2 {
            for (j, x) in space.nodes().into_iter().enumerate() {
                s.modes[k - 1].values[[i, j]] = f(x);
            }
        }
        s
    }

    #[test]
    fn weighted_norm_examples() {
        let time = TimeGrid::new(1.0, 2).unwrap();
        let space = SpaceGrid::new(33).unwrap();
        assert_eq!(
            weighted_norm(&SpectralState::zeros(4, time, space, 0.5), 0),
            0.0
        );

        let s = single_mode_state(1, 33, |x| (PI * x).sin(), 0.5);
        assert!((weighted_norm(&s, 0) - 0.5).abs() < 1e-14);

        let mut scaled = s.clone();
        scaled.modes[0].values *= 3.0;
        assert!((weighted_norm(&scaled, 1) - 9.0 * weighted_norm(&s, 1)).abs() < 1e-13);
    }

    #[test]
    fn coupling_sum_examples() {
        let time = TimeGrid::new(1.0, 2).unwrap();
        let space = SpaceGrid::new(9).unwrap();
        let zero = SpectralState::zeros(3, time, space, 0.5);
        assert!(coupling_sum(&zero, 1.0, 0)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));

        let s = single_mode_state(2, 9, |x| x * (1.0 - x), 0.5);
        for v in coupling_sum(&s, PI / 2.0, 1).unwrap() {
            assert!(v.abs() < 1e-15);
        }
        let s = single_mode_state(1, 9, |_| 1.0, 0.5);
        for v in coupling_sum(&s, PI / 2.0, 0).unwrap() {
            assert!((v - 1.0).abs() < 1e-15);
        }
        assert!(matches!(coupling_sum(&s, 0.0, 0), Err(Error::Parameter(_))));
        assert!(matches!(coupling_sum(&s, PI, 0), Err(Error::Parameter(_))));
    }
}
