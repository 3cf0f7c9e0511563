//! Two-parameter Mittag-Leffler function on the real line.
//!
//! ```text
//! E_{α,μ}(z) = Σ_{k≥0} z^k / Γ(αk + μ)
//! ```
//!
//! The power series is summed (Neumaier-compensated) only where it is well
//! conditioned: small `|z|`, or positive `z` when it converges inside the term
//! cap. Elsewhere, for `0 < α < 1`, the Laplace-inversion contour is collapsed
//! onto the negative real axis,
//!
//! ```text
//! E_{α,μ}(z) = R(z) + (1/π) ∫_0^∞ e^{-r} r^{α-μ} [r^α sin(μπ) + z sin((α-μ)π)]
//!                                / (r^{2α} − 2 z r^α cos(απ) + z²) dr,
//! ```
//!
//! where `R(z) = z^{(1-μ)/α} exp(z^{1/α}) / α` for `z > 0` and zero otherwise.
//! The representation needs `μ < 1 + α`; larger `μ` is brought into range with
//! `E_{α,μ}(z) = (E_{α,μ−α}(z) − 1/Γ(μ−α)) / z`. For `α = 1` the confluent
//! hypergeometric form `E_{1,μ}(z) = e^z ₁F₁(μ−1; μ; −z) / Γ(μ)` is used.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad;

/// Terms summed before the series is declared unreliable.
pub const SERIES_TERM_CAP: usize = 250;
/// Below this `|z|` the series is used for either sign of `z`.
const SERIES_ALWAYS_RADIUS: f64 = 1.0;
/// Beyond this the `e^{-r}` factor makes the integrand negligible.
const INTEGRAL_SPLIT_CAP: f64 = 60.0;
const QUAD_TOL: f64 = 1e-14;

/// `Γ(x)`, exact at small positive integers.
pub fn gamma(x: f64) -> f64 {
    if x == x.round() && (1.0..=21.0).contains(&x) {
        return (1..x as u64).map(|k| k as f64).product();
    }
    statrs::function::gamma::gamma(x)
}

/// Parameters `(α, μ)` of `E_{α,μ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    pub alpha: f64,
    pub mu: f64,
}

impl MLParams {
    pub fn new(alpha: f64, mu: f64) -> Result<Self> {
        let p = Self { alpha, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (0,1], got {}",
                self.alpha
            )));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::Parameter(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        Ok(())
    }
}

/// Upper bound `M` of `E_{α,μ}` over `[a, b] ⊂ ℝ₊`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLBound {
    pub m: f64,
    pub interval: (f64, f64),
}

/// Evaluates `E_{α,μ}(z)` for real `z`.
pub fn mittag_leffler(p: MLParams, z: f64) -> Result<f64> {
    p.validate()?;
    if !z.is_finite() {
        return Err(Error::Domain(format!("argument must be finite, got {z}")));
    }
    Ok(eval(p.alpha, p.mu, z))
}

fn eval(alpha: f64, mu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return 1.0 / gamma(mu);
    }
    if alpha == 1.0 {
        return eval_alpha_one(mu, z);
    }
    if z.abs() <= SERIES_ALWAYS_RADIUS {
        if let Some(v) = series(alpha, mu, z, SERIES_TERM_CAP) {
            return v;
        }
    }
    if z > 0.0 {
        if let Some(v) = series(alpha, mu, z, SERIES_TERM_CAP) {
            return v;
        }
    }
    if mu >= 1.0 + alpha {
        let lower = mu - alpha;
        return (eval(alpha, lower, z) - 1.0 / gamma(lower)) / z;
    }
    contour(alpha, mu, z)
}

/// Compensated power series; `None` when it has not converged within `cap` terms.
fn series(alpha: f64, mu: f64, z: f64, cap: usize) -> Option<f64> {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut small_run = 0;
    for k in 0..cap {
        let arg = alpha * k as f64 + mu;
        // z^k / Γ(αk+μ) through logs keeps both factors in range
        let log_mag = k as f64 * z.abs().ln() - statrs::function::gamma::ln_gamma(arg);
        let sign = if z < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        let term = sign * log_mag.exp();
        if !term.is_finite() {
            return None;
        }
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        let total = sum + comp;
        if k > 2 && term.abs() <= 1e-17 * total.abs() {
            small_run += 1;
            if small_run >= 2 {
                return Some(total);
            }
        } else {
            small_run = 0;
        }
    }
    None
}

/// Collapsed-contour integral plus the residue of the real pole.
fn contour(alpha: f64, mu: f64, z: f64) -> f64 {
    let residue = if z > 0.0 {
        let s0 = z.powf(1.0 / alpha);
        s0.powf(1.0 - mu) * s0.exp() / alpha
    } else {
        0.0
    };
    let sin_mu = (mu * PI).sin();
    let sin_am = ((alpha - mu) * PI).sin();
    let cos_a = (alpha * PI).cos();
    let integrand = |r: f64| -> f64 {
        let ra = r.powf(alpha);
        let num = ra * sin_mu + z * sin_am;
        let den = ra * ra - 2.0 * z * ra * cos_a + z * z;
        (-r).exp() * r.powf(alpha - mu) * num / den
    };
    let split = z.abs().powf(1.0 / alpha).min(INTEGRAL_SPLIT_CAP);
    let head = quad::tanh_sinh(|_, r, _| integrand(r), 0.0, split, QUAD_TOL);
    let tail = quad::exp_sinh(|r, _| integrand(r), split, QUAD_TOL);
    residue + (head + tail) / PI
}

fn eval_alpha_one(mu: f64, z: f64) -> f64 {
    if mu == 1.0 {
        return z.exp();
    }
    if z > 0.0 || z.abs() <= SERIES_ALWAYS_RADIUS {
        if let Some(v) = series(1.0, mu, z, 4 * SERIES_TERM_CAP) {
            return v;
        }
    }
    // E_{1,μ}(z) = e^z ₁F₁(μ−1; μ; −z) / Γ(μ); for z < 0 every term after the
    // first shares one sign, so no cancellation occurs.
    let x = -z;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 0..4 * SERIES_TERM_CAP {
        let kf = k as f64;
        term *= (mu - 1.0 + kf) / (mu + kf) * x / (kf + 1.0);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && kf > x {
            break;
        }
    }
    z.exp() * sum / gamma(mu)
}

/// Bound `M ≥ E_{α,μ}(z)` on `[0, z_max]`: the maximum of a dense sampling
/// inflated by a 1% margin.
pub fn ml_bound(p: MLParams, z_max: f64) -> Result<MLBound> {
    p.validate()?;
    if !(z_max >= 0.0) || !z_max.is_finite() {
        return Err(Error::Domain(format!(
            "z_max must be finite and non-negative, got {z_max}"
        )));
    }
    const SAMPLES: usize = 257;
    let mut best = eval(p.alpha, p.mu, 0.0);
    if z_max > 0.0 {
        for i in 1..SAMPLES {
            let z = z_max * i as f64 / (SAMPLES - 1) as f64;
            best = best.max(eval(p.alpha, p.mu, z));
        }
    }
    Ok(MLBound {
        m: 1.01 * best,
        interval: (0.0, z_max),
    })
}
