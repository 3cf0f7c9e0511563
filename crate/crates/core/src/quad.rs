//! Double-exponential quadrature on finite and half-infinite intervals.
//!
//! Both rules tolerate integrable algebraic singularities at the finite
//! endpoints, which is what the Mittag-Leffler integral representation needs.

use std::f64::consts::FRAC_PI_2;

const MAX_LEVEL: usize = 9;

/// Tanh-sinh rule for `∫_a^b f`. The integrand receives `x` together with the
/// distances `x − a` and `b − x`, computed without cancellation.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, rel_tol: f64) -> f64
where
    F: Fn(f64, f64, f64) -> f64,
{
    let half = 0.5 * (b - a);
    let node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        // distance to the nearer endpoint, as a fraction of (b - a)
        let frac = 1.0 / (1.0 + (2.0 * u.abs()).exp());
        let w = FRAC_PI_2 * t.cosh() * 4.0 * frac * (1.0 - frac) * half;
        if !(w > 0.0) || frac == 0.0 {
            return 0.0;
        }
        let near = (b - a) * frac;
        let far = (b - a) - near;
        let (x, da, db) = if t < 0.0 {
            (a + near, near, far)
        } else {
            (b - near, far, near)
        };
        let v = f(x, da, db);
        if v.is_finite() {
            w * v
        } else {
            0.0
        }
    };
    refine(node, rel_tol, 6.5)
}

/// Exp-sinh rule for `∫_a^∞ f`. The integrand receives `x` and `x − a`.
pub fn exp_sinh<F>(f: F, a: f64, rel_tol: f64) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let d = u.exp();
        if d == 0.0 || !d.is_finite() {
            return 0.0;
        }
        let w = FRAC_PI_2 * t.cosh() * d;
        let v = f(a + d, d);
        if v.is_finite() && v != 0.0 {
            w * v
        } else {
            0.0
        }
    };
    refine(node, rel_tol, 6.5)
}

/// Trapezoid sums in `t` with step halving until two levels agree.
fn refine<N: Fn(f64) -> f64>(node: N, rel_tol: f64, t_max: f64) -> f64 {
    let mut h = 1.0;
    let mut sum = node(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum += node(t) + node(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..MAX_LEVEL {
        h *= 0.5;
        // only the odd multiples of the new step are new
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            sum += node(t) + node(-t);
            k += 2;
        }
        let next = sum * h;
        let delta = (next - estimate).abs();
        estimate = next;
        if delta <= rel_tol * next.abs() || delta < 1e-300 {
            break;
        }
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_on_unit_interval() {
        let v = tanh_sinh(|x, _, _| x * x, 0.0, 1.0, 1e-14);
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let v = tanh_sinh(|_, da, _| da.powf(-0.5), 0.0, 1.0, 1e-14);
        assert!((v - 2.0).abs() < 1e-12, "{v}");
        // ∫_0^1 (1-x)^{-0.7} dx = 1/0.3
        let v = tanh_sinh(|_, _, db| db.powf(-0.7), 0.0, 1.0, 1e-14);
        assert!((v - 1.0 / 0.3).abs() < 1e-10, "{v}");
    }

    #[test]
    fn half_line_gamma_integral() {
        // ∫_0^∞ r^{-1/2} e^{-r} dr = Γ(1/2) = √π
        let v = exp_sinh(|r, _| r.powf(-0.5) * (-r).exp(), 0.0, 1e-14);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12, "{v}");
        // shifted: ∫_2^∞ e^{-r} dr = e^{-2}
        let v = exp_sinh(|r, _| (-r).exp(), 2.0, 1e-14);
        assert!((v - (-2.0f64).exp()).abs() < 1e-15, "{v}");
    }
}
