//! Caputo derivative (L1 scheme) and Riemann–Liouville integral (product
//! trapezoid) on uniform time grids.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Uniform grid `t_i = i·T/(nt−1)` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub nt: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, nt: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::Grid(format!(
                "final time must be positive, got {t_final}"
            )));
        }
        if nt < 2 {
            return Err(Error::Grid(format!(
                "time grid needs at least 2 nodes, got {nt}"
            )));
        }
        Ok(Self { t_final, nt })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / (self.nt - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        if i + 1 == self.nt {
            self.t_final
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nt).map(|i| self.t(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    CaputoL1,
    RlTrapezoid,
}

/// Convolution weights of a fractional operator.
#[derive(Debug, Clone, PartialEq)]
pub struct FracWeights {
    pub alpha: f64,
    pub kind: WeightKind,
    pub coefficients: Vec<f64>,
}

/// L1 weights `b_j = (j+1)^{1−α} − j^{1−α}`, `j = 0..m−1`.
///
/// `α = 1` is accepted and reduces the scheme to the backward difference
/// (`b_0 = 1`, all others zero).
pub fn l1_weights(alpha: f64, m: usize) -> Result<FracWeights> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    if m < 1 {
        return Err(Error::Parameter("L1 weights need m >= 1".into()));
    }
    let p = 1.0 - alpha;
    let coefficients = (0..m)
        .map(|j| {
            if j == 0 {
                1.0
            } else {
                let j = j as f64;
                (j + 1.0).powf(p) - j.powf(p)
            }
        })
        .collect();
    Ok(FracWeights {
        alpha,
        kind: WeightKind::CaputoL1,
        coefficients,
    })
}

/// Interior product-trapezoid weights `c_0 = 1`,
/// `c_m = (m+1)^{α+1} − 2m^{α+1} + (m−1)^{α+1}` for `m = 1..n−1`.
fn rl_interior_weights(alpha: f64, n: usize) -> FracWeights {
    let p = alpha + 1.0;
    let coefficients = (0..n.max(1))
        .map(|m| {
            if m == 0 {
                1.0
            } else {
                let m = m as f64;
                (m + 1.0).powf(p) - 2.0 * m.powf(p) + (m - 1.0).powf(p)
            }
        })
        .collect();
    FracWeights {
        alpha,
        kind: WeightKind::RlTrapezoid,
        coefficients,
    }
}

fn check_series(v: &[f64], grid: &TimeGrid) -> Result<()> {
    if grid.nt < 2 {
        return Err(Error::Grid(format!(
            "time grid needs at least 2 nodes, got {}",
            grid.nt
        )));
    }
    if v.len() != grid.nt {
        return Err(Error::Grid(format!(
            "series has {} samples but the grid has {} nodes",
            v.len(),
            grid.nt
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data(
            "time series contains non-finite samples".into(),
        ));
    }
    Ok(())
}

/// L1 approximation of `D_t^α v` at nodes `1..nt−1`; node 0 is `None`.
pub fn caputo_l1(v: &[f64], grid: &TimeGrid, alpha: f64) -> Result<Vec<Option<f64>>> {
    let filled = caputo_l1_zero_start(v, grid, alpha)?;
    Ok(filled
        .into_iter()
        .enumerate()
        .map(|(i, x)| if i == 0 { None } else { Some(x) })
        .collect())
}

/// As [`caputo_l1`], with node 0 set to zero (the limit for data with a
/// bounded first derivative).
pub fn caputo_l1_zero_start(v: &[f64], grid: &TimeGrid, alpha: f64) -> Result<Vec<f64>> {
    check_series(v, grid)?;
    let w = l1_weights(alpha, grid.nt - 1)?;
    let scale = 1.0 / (grid.dt().powf(alpha) * gamma(2.0 - alpha));
    let diffs: Vec<f64> = v.windows(2).map(|p| p[1] - p[0]).collect();
    let mut out = vec![0.0; grid.nt];
    for (m, slot) in out.iter_mut().enumerate().skip(1) {
        // Σ_{j=0}^{m−1} b_j (v_{m−j} − v_{m−j−1})
        let acc: f64 = (0..m).map(|j| w.coefficients[j] * diffs[m - 1 - j]).sum();
        *slot = scale * acc;
    }
    Ok(out)
}

/// Product-trapezoid approximation of `J_t^α v`; exact for piecewise-linear
/// `v`, and `J^α v(0) = 0`.
pub fn rl_integral(v: &[f64], grid: &TimeGrid, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Parameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    check_series(v, grid)?;
    let nt = grid.nt;
    let w = rl_interior_weights(alpha, nt);
    let p = alpha + 1.0;
    let scale = grid.dt().powf(alpha) / gamma(alpha + 2.0);
    let mut out = vec![0.0; nt];
    for (n, slot) in out.iter_mut().enumerate().skip(1) {
        let nf = n as f64;
        let head = (nf - 1.0).powf(p) - (nf - 1.0 - alpha) * nf.powf(alpha);
        let mut acc = head * v[0];
        for (j, &vj) in v.iter().enumerate().take(n + 1).skip(1) {
            acc += w.coefficients[n - j] * vj;
        }
        *slot = scale * acc;
    }
    Ok(out)
}

/// Trapezoid rule for `∫_0^{t_i} v` at every node.
pub fn cumulative_trapezoid(v: &[f64], dt: f64) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for i in 1..v.len() {
        out[i] = out[i - 1] + 0.5 * dt * (v[i] + v[i - 1]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
        grid.nodes().into_iter().map(f).collect()
    }

    #[test]
    fn l1_weight_examples() {
        let w = l1_weights(0.5, 2).unwrap();
        assert_eq!(w.coefficients[0], 1.0);
        assert!((w.coefficients[1] - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((w.coefficients[1] - 0.414214).abs() < 1e-6);

        let w = l1_weights(1.0, 1).unwrap();
        assert_eq!(w.coefficients, vec![1.0]);
        let w = l1_weights(1.0, 4).unwrap();
        assert_eq!(w.coefficients, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn l1_weights_decrease() {
        for &a in &[0.05, 0.3, 0.5, 0.9, 0.99] {
            let w = l1_weights(a, 200).unwrap();
            for pair in w.coefficients.windows(2) {
                assert!(pair[1] > 0.0 && pair[1] < pair[0]);
            }
        }
    }

    #[test]
    fn l1_rejects_bad_alpha() {
        assert!(matches!(l1_weights(0.0, 3), Err(Error::Parameter(_))));
        assert!(matches!(l1_weights(1.2, 3), Err(Error::Parameter(_))));
    }

    #[test]
    fn caputo_of_constant_vanishes() {
        let grid = TimeGrid::new(2.0, 33).unwrap();
        let d = caputo_l1(&vec![3.5; 33], &grid, 0.4).unwrap();
        assert!(d[0].is_none());
        assert!(d[1..].iter().all(|x| x.unwrap() == 0.0));
    }

    #[test]
    fn caputo_power_rule() {
        // D^α t = t^{1−α}/Γ(2−α): the L1 scheme is exact on linear data
        let grid = TimeGrid::new(1.0, 65).unwrap();
        let d = caputo_l1(&sample(&grid, |t| t), &grid, 0.5).unwrap();
        let exact = 1.0 / gamma(1.5);
        assert!((exact - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-14);
        assert!((d[64].unwrap() - exact).abs() < 1e-13);

        // D^0.3 t² = 2 t^{1.7}/Γ(2.7)
        let exact = 2.0 / gamma(2.7);
        assert!((exact - 1.294762).abs() < 1e-6);
        let mut errs = Vec::new();
        for &nt in &[33usize, 65, 129] {
            let grid = TimeGrid::new(1.0, nt).unwrap();
            let d = caputo_l1(&sample(&grid, |t| t * t), &grid, 0.3).unwrap();
            let err = (d[nt - 1].unwrap() - exact).abs();
            assert!(err <= grid.dt().powf(1.7));
            errs.push(err);
        }
        let order = (errs[1] / errs[2]).log2();
        assert!((order - 1.7).abs() < 0.15, "order {order}");
    }

    #[test]
    fn caputo_rejects_short_grid() {
        let grid = TimeGrid {
            t_final: 1.0,
            nt: 1,
        };
        assert!(matches!(caputo_l1(&[1.0], &grid, 0.5), Err(Error::Grid(_))));
        assert!(TimeGrid::new(1.0, 1).is_err());
    }

    #[test]
    fn rl_integral_examples() {
        let grid = TimeGrid::new(1.5, 41).unwrap();
        let j = rl_integral(&vec![1.0; 41], &grid, 1.0).unwrap();
        for (i, v) in j.iter().enumerate() {
            assert!((v - grid.t(i)).abs() < 1e-13);
        }
        let j = rl_integral(&vec![1.0; 41], &grid, 0.5).unwrap();
        assert_eq!(j[0], 0.0);
        for (i, v) in j.iter().enumerate() {
            let exact = grid.t(i).powf(0.5) / gamma(1.5);
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn rl_integral_exact_on_linear() {
        // J^α t = t^{1+α}/Γ(2+α)
        let grid = TimeGrid::new(1.0, 17).unwrap();
        let j = rl_integral(&sample(&grid, |t| 2.0 * t - 1.0), &grid, 0.35).unwrap();
        for (i, v) in j.iter().enumerate() {
            let t = grid.t(i);
            let exact = 2.0 * t.powf(1.35) / gamma(2.35) - t.powf(0.35) / gamma(1.35);
            assert!((v - exact).abs() < 1e-13, "{i}");
        }
    }

    #[test]
    fn rl_rejects_bad_alpha() {
        let grid = TimeGrid::new(1.0, 3).unwrap();
        assert!(matches!(
            rl_integral(&[0.0; 3], &grid, 0.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn inversion_identity_on_quadratic() {
        let grid = TimeGrid::new(1.0, 257).unwrap();
        let v = sample(&grid, |t| 1.0 + t * t);
        let d = caputo_l1_zero_start(&v, &grid, 0.3).unwrap();
        let jd = rl_integral(&d, &grid, 0.3).unwrap();
        let tol = 10.0 * grid.dt().powf(1.7);
        for i in 0..grid.nt {
            assert!((jd[i] - (v[i] - v[0])).abs() <= tol);
        }
    }
}
