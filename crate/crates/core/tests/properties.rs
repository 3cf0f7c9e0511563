use std::f64::consts::PI;

use fracinv_core::estimates::compute_constants;
use fracinv_core::forward::synthesize_data;
use fracinv_core::fracops::caputo_l1_zero_start;
use fracinv_core::modesolver::solve_mode_with_lambda;
use fracinv_core::problem::Trace;
use fracinv_core::{
    manufactured_case, mittag_leffler, rl_integral, sine_coefficients, sine_synthesis,
    solve_forward, solve_inverse, solve_mode, MLParams, ProblemParams, SineBasis, SpaceGrid,
    TimeGrid,
};
use ndarray::Array2;
use proptest::prelude::*;

fn sup(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn small_case(id: &str, alpha: f64, t_final: f64, n: usize) -> fracinv_core::ManufacturedCase {
    let c = manufactured_case(id).unwrap();
    let p = ProblemParams {
        alpha,
        t_final,
        modes: 4,
        ny: 33,
        nt: n,
        nx: n,
        ..c.params()
    };
    c.with_params(p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn integral_inverts_caputo(alpha in 0.1f64..0.9, a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
        let grid = TimeGrid::new(1.0, 129).unwrap();
        let v: Vec<f64> = grid.nodes().iter().map(|t| a + b * t + c * t * t).collect();
        let d = caputo_l1_zero_start(&v, &grid, alpha).unwrap();
        let jd = rl_integral(&d, &grid, alpha).unwrap();
        let err = sup(jd.iter().zip(&v).map(|(x, y)| x - (y - v[0])));
        prop_assert!(err <= 10.0 * (b.abs() + c.abs() + 1e-3) * grid.dt().powf(2.0 - alpha), "err {err}");
    }

    #[test]
    fn riemann_liouville_semigroup(a in 0.1f64..0.6, b in 0.1f64..0.6) {
        // J^a J^b v = J^{a+b} v away from t = 0, where J^b v has a t^b kink
        let grid = TimeGrid::new(1.0, 257).unwrap();
        let v: Vec<f64> = grid.nodes().iter().map(|t| 1.0 + t).collect();
        let ab = rl_integral(&rl_integral(&v, &grid, b).unwrap(), &grid, a).unwrap();
        let direct = rl_integral(&v, &grid, a + b).unwrap();
        let err = sup(ab.iter().zip(&direct).skip(64).map(|(x, y)| x - y));
        prop_assert!(err <= 5e-3, "a={a} b={b} err {err}");
    }

    #[test]
    fn product_rule_inequality(alpha in 0.1f64..0.95, v in prop::collection::vec(-5.0f64..5.0, 2..40)) {
        // v·D^α v ≥ ½ D^α(v²) for the L1 scheme
        let grid = TimeGrid::new(1.0, v.len()).unwrap();
        let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
        let d = caputo_l1_zero_start(&v, &grid, alpha).unwrap();
        let dsq = caputo_l1_zero_start(&sq, &grid, alpha).unwrap();
        for n in 1..v.len() {
            prop_assert!(v[n] * d[n] >= 0.5 * dsq[n] - 1e-9 * (1.0 + dsq[n].abs()));
        }
    }

    #[test]
    fn parseval_round_trip(coeffs in prop::collection::vec(-3.0f64..3.0, 1..12)) {
        let modes = coeffs.len();
        let basis = SineBasis::new(modes, 8 * modes + 1).unwrap();
        let samples = sine_synthesis(&coeffs, basis.y_nodes());
        let back = sine_coefficients(&samples, &basis).unwrap();
        for (a, b) in back.iter().zip(&coeffs) {
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
        }
        let energy: f64 = basis.y_nodes().iter().zip(basis.simpson_weights()).zip(&samples).map(|((_, w), s)| w * s * s).sum();
        let spectral = PI / 2.0 * coeffs.iter().map(|c| c * c).sum::<f64>();
        prop_assert!((energy - spectral).abs() <= 1e-6 * (1.0 + spectral));
    }

    #[test]
    fn relaxation_stays_in_initial_range(alpha in 0.1f64..1.0, lambda in 0.0f64..50.0, amp in prop::collection::vec(-1.0f64..1.0, 1..4)) {
        let time = TimeGrid::new(1.0, 33).unwrap();
        let space = SpaceGrid::new(33).unwrap();
        let phi: Vec<f64> = space.nodes().iter().map(|&x| amp.iter().enumerate().map(|(i, a)| a * ((i + 1) as f64 * PI * x).sin()).sum()).collect();
        let top = sup(phi.iter().copied());
        let f = solve_mode_with_lambda(lambda, &phi, Array2::zeros((time.nt, space.nx)).view(), &time, &space, alpha).unwrap();
        prop_assert!(sup(f.values.iter().copied()) <= top * (1.0 + 1e-12));
    }

    #[test]
    fn relaxation_energy_decays(alpha in 0.1f64..1.0, k in 1usize..6) {
        let time = TimeGrid::new(1.0, 65).unwrap();
        let space = SpaceGrid::new(33).unwrap();
        let phi: Vec<f64> = space.nodes().iter().map(|&x| (PI * x).sin() + 0.3 * (3.0 * PI * x).sin()).collect();
        let f = solve_mode(k, &phi, Array2::zeros((time.nt, space.nx)).view(), &time, &space, alpha).unwrap();
        let energies: Vec<f64> = f.values.rows().into_iter().map(|r| r.iter().map(|v| v * v).sum::<f64>()).collect();
        for w in energies.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn mode_solver_is_linear(alpha in 0.1f64..1.0, s in -3.0f64..3.0, seed in 0u64..1000) {
        let time = TimeGrid::new(0.5, 17).unwrap();
        let space = SpaceGrid::new(17).unwrap();
        let gen = |off: u64| -> (Vec<f64>, Array2<f64>) {
            let h = |i: u64| (((seed + off) * 2654435761 + i * 40503) % 1000) as f64 / 500.0 - 1.0;
            let mut phi: Vec<f64> = (0..space.nx as u64).map(h).collect();
            phi[0] = 0.0;
            phi[space.nx - 1] = 0.0;
            let rhs = Array2::from_shape_fn((time.nt, space.nx), |(i, j)| h((i * 31 + j) as u64 + 7));
            (phi, rhs)
        };
        let (p1, r1) = gen(1);
        let (p2, r2) = gen(2);
        let pc: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a + s * b).collect();
        let rc = &r1 + &(&r2 * s);
        let u1 = solve_mode(2, &p1, r1.view(), &time, &space, alpha).unwrap();
        let u2 = solve_mode(2, &p2, r2.view(), &time, &space, alpha).unwrap();
        let uc = solve_mode(2, &pc, rc.view(), &time, &space, alpha).unwrap();
        let diff = &uc.values - &(&u1.values + &(&u2.values * s));
        prop_assert!(sup(diff.iter().copied()) <= 1e-10 * (1.0 + sup(uc.values.iter().copied())));
    }

    #[test]
    fn mittag_leffler_negative_axis_is_completely_monotone(alpha in 0.1f64..1.0, x in 0.0f64..30.0, dx in 0.01f64..5.0) {
        let p = MLParams::new(alpha, 1.0).unwrap();
        let a = mittag_leffler(p, -x).unwrap();
        let b = mittag_leffler(p, -x - dx).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0 + 1e-14);
        prop_assert!(b <= a + 1e-14);
    }

    #[test]
    fn relaxation_tracks_mittag_leffler(alpha in 0.3f64..0.9, lambda in 0.0f64..5.0) {
        // one interior node with dx = 1/2: the stencil contributes 8 to the decay rate
        let time = TimeGrid::new(1.0, 257).unwrap();
        let space = SpaceGrid::new(3).unwrap();
        let f = solve_mode_with_lambda(lambda, &[0.0, 1.0, 0.0], Array2::zeros((time.nt, 3)).view(), &time, &space, alpha).unwrap();
        let p = MLParams::new(alpha, 1.0).unwrap();
        for i in (16..time.nt).step_by(16) {
            let exact = mittag_leffler(p, -(lambda + 8.0) * time.t(i).powf(alpha)).unwrap();
            prop_assert!((f.values[[i, 1]] - exact).abs() <= 0.02, "t={} {} vs {exact}", time.t(i), f.values[[i, 1]]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn zero_data_gives_zero_source(alpha in 0.2f64..0.9, t_final in 0.005f64..0.03) {
        let c = small_case("MMS-0", alpha, t_final, 17);
        let out = solve_inverse(&c.spec, 1e-10, 60).unwrap();
        prop_assert!(sup(out.source.h.iter().copied()) <= 1e-12);
        prop_assert!(out.state.modes.iter().all(|m| m.values.iter().all(|v| v.abs() <= 1e-12)));
    }

    #[test]
    fn recovered_state_reproduces_trace(alpha in 0.3f64..0.8, l0 in 0.5f64..2.6) {
        let c = small_case("MMS-1", alpha, 0.01, 17);
        let c = c.with_params(ProblemParams { l0, ..c.params() }).unwrap();
        let (state, _) = solve_forward(&c.spec).unwrap();
        let psi = synthesize_data(&state, l0, 0.0, 0).unwrap();
        let mut spec = c.spec.clone();
        spec.psi = Some(Trace::Sampled(psi.clone()));
        spec.derivatives.psi_caputo = None;
        spec.derivatives.psi_xx = None;
        let out = solve_inverse(&spec, 1e-10, 60).unwrap();
        prop_assert!(out.report.converged);
        prop_assert!(out.source.residual <= 1e-9, "residual {}", out.source.residual);
        let trace = out.state.trace(l0);
        prop_assert!(sup((&trace - &psi).iter().copied()) <= 1e-9);
    }

    #[test]
    fn increments_contract_geometrically(alpha in 0.3f64..0.8, t_final in 0.005f64..0.02) {
        let c = small_case("MMS-2", alpha, t_final, 17);
        let out = solve_inverse(&c.spec, 1e-10, 60).unwrap();
        prop_assert!(out.report.converged);
        prop_assert!(out.report.ratios_from_second().iter().all(|&r| r <= 0.6), "{:?}", out.report.ratios);
    }

    #[test]
    fn constants_grow_with_horizon(alpha in 0.2f64..0.9, t1 in 0.01f64..0.5, stretch in 1.05f64..3.0) {
        let a = compute_constants(&small_case("MMS-1", alpha, t1, 9).spec).unwrap();
        let b = compute_constants(&small_case("MMS-1", alpha, t1 * stretch, 9).spec).unwrap();
        prop_assert!(b.m_alpha >= a.m_alpha);
        prop_assert!(b.condition4 >= a.condition4);
        prop_assert!(b.contraction >= a.contraction);
    }
}
