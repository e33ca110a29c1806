use std::sync::Arc;

use proptest::prelude::*;
use sphereflow::functionals::{conservation, preserved_q};
use sphereflow::scenarios::{phi_family, preset, spheroid_profile};
use sphereflow::*;

fn sphere_params(n: usize, k: usize, p: f64, num_points: usize) -> FlowParams {
    let g = build_grid(n, num_points).unwrap();
    FlowParams::new(RadialProfile::constant(&g, 1.0), k, p).unwrap()
}

#[test]
fn rk4_on_the_round_sphere_is_fourth_order_in_time() {
    // p = 2, k = 1, φ ≡ 1: a round sphere stays round and ḣ = h
    let mut params = sphere_params(2, 1, 2.0, 32);
    params.normalization = Normalization::Unnormalized;
    params.t_max = 1.0;
    let mut errs = Vec::new();
    for m in [5, 10, 20] {
        let dt = 0.1 / m as f64;
        let mut s = FlowState::new(RadialProfile::constant(params.grid(), 1.0), 0.0, &params).unwrap();
        for _ in 0..m {
            s = step(&s, &params, dt).unwrap();
        }
        let exact = 0.1f64.exp();
        let err = s.h().values().iter().map(|v| (v - exact).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-8);
        errs.push(err);
    }
    let order = (errs[1] / errs[2]).log2();
    assert!(order >= 3.8, "{errs:?}");
}

#[test]
fn scalar_reduction_with_general_orders() {
    // ḣ = h^{2−p} h^k for a round sphere of radius h
    for (n, k, p) in [(3, 2, 4.0), (2, 2, 3.5)] {
        let mut params = sphere_params(n, k, p, 32);
        params.normalization = Normalization::Unnormalized;
        params.t_max = 1.0;
        let e = 2.0 - p + k as f64;
        // h' = h^e, h(0) = 1  ⇒  h = (1 − (e−1)t)^{1/(1−e)}
        let exact = |t: f64| (1.0 - (e - 1.0) * t).powf(1.0 / (1.0 - e));
        let mut s = FlowState::new(RadialProfile::constant(params.grid(), 1.0), 0.0, &params).unwrap();
        for _ in 0..100 {
            s = step(&s, &params, 1e-3).unwrap();
        }
        assert!((s.h().values()[7] - exact(0.1)).abs() < 1e-8);
    }
}

#[test]
fn constraint_derivative_identity() {
    // ∫ p h^{p−1} rhs/φ = p η (∫1/φ − ∫h^p/φ) for any state
    for name in ["theorem2", "theorem1", "theorem1a"] {
        let spec = preset(name).unwrap().build(128).unwrap();
        let params = &spec.params;
        let s = FlowState::new(spec.initial.clone(), 0.0, params).unwrap();
        let rhs = rhs_normalized(&s).unwrap();
        let g = params.grid();
        let p = params.p;
        let lhs: f64 = (0..g.num_points())
            .map(|j| {
                g.weights()[j] * p * s.h().values()[j].powf(p - 1.0) * rhs.values()[j] / params.phi.values()[j]
            })
            .sum();
        let rhs_value = p * s.eta() * (params.inv_phi_integral() - conservation(s.h(), params).unwrap());
        assert!((lhs - rhs_value).abs() <= 1e-12 * rhs_value.abs().max(1.0), "{name}: {lhs} {rhs_value}");
    }
}

#[test]
fn projection_holds_the_constraint_to_rounding() {
    let mut spec = preset("theorem1").unwrap().build(64).unwrap();
    spec.params.renorm_projection = true;
    let params = &spec.params;
    let lambda = rescale_factor(&spec.initial, params).unwrap();
    let mut s = FlowState::new(spec.initial.map(|v| v * lambda * 1.01), 0.0, params).unwrap();
    let target = params.inv_phi_integral();
    for _ in 0..50 {
        s = step(&s, params, stable_dt(&s, params)).unwrap();
        let c = conservation(s.h(), params).unwrap();
        assert!((c - target).abs() <= 1e-12 * target);
    }
}

#[test]
fn constructed_soliton_is_a_fixed_point() {
    // φ = h^{p−1}/σ_k(h) makes φ h^{1−p} σ_k ≡ 1; scaling h puts it on the constraint
    let (n, k, p) = (3, 2, 4.0);
    let g = build_grid(n, 128).unwrap();
    let base = spheroid_profile(&g, 1.0, 1.2).unwrap();
    let radii = principal_radii(&base, n, k).unwrap();
    let hs: f64 = integrate_sphere(&base.with_values(
        (0..128).map(|j| base.values()[j] * radii.sigma_k.values()[j]).collect(),
        Parity::Even,
    ).unwrap());
    let sh: f64 = integrate_sphere(&base.with_values(
        (0..128).map(|j| radii.sigma_k.values()[j] * base.values()[j].powf(1.0 - p)).collect(),
        Parity::Even,
    ).unwrap());
    let lambda = (sh / hs).powf(1.0 / p);
    let h = base.map(|v| v * lambda);
    let r = principal_radii(&h, n, k).unwrap();
    let phi = h.with_values(
        (0..128).map(|j| h.values()[j].powf(p - 1.0) / r.sigma_k.values()[j]).collect(),
        Parity::Even,
    ).unwrap();
    let params = FlowParams::new(phi, k, p).unwrap();
    let s = FlowState::new(h.clone(), 0.0, &params).unwrap();
    let rhs = rhs_normalized(&s).unwrap();
    assert!(rhs.values().iter().all(|v| v.abs() <= 1e-12), "{}", rhs.max().abs().max(rhs.min().abs()));
    assert!(soliton_residual(&h, &params).unwrap() < 1e-12);
}

#[test]
fn mixed_volume_stays_between_the_support_extremes() {
    let spec = preset("theorem1").unwrap().build(64).unwrap();
    let params = &spec.params;
    let lambda = rescale_factor(&spec.initial, params).unwrap();
    let mut s = FlowState::new(spec.initial.map(|v| v * lambda), 0.0, params).unwrap();
    let g = params.grid().clone();
    let eps = g.dtheta().powi(2);
    let k1 = params.k as i32 + 1;
    for i in 0..400 {
        if i % 20 == 0 {
            let hs: Vec<f64> = (0..64).map(|j| s.h().values()[j] * s.radii().sigma_k.values()[j]).collect();
            let mean = g.integrate_values(&hs) / g.total_measure();
            assert!(s.h().min().powi(k1) <= mean + eps);
            assert!(mean <= s.h().max().powi(k1) + eps);
        }
        s = step(&s, params, stable_dt(&s, params)).unwrap();
    }
}

#[test]
fn speed_and_gradient_stay_bounded() {
    for name in ["theorem1", "theorem1a"] {
        let mut spec = preset(name).unwrap().build(64).unwrap();
        spec.params.sample_stride = 20;
        let rec = run_flow(&spec.initial, &spec.params).unwrap();
        assert_eq!(rec.status, TerminalStatus::Converged, "{name}");
        let c = rec.soliton_constant(&spec.params).unwrap();
        // the monitor fields describe the constrained state, which the rescaled limit shares
        let first = rec.samples[0];
        let hi = rec.samples.iter().map(|s| s.speed_max).fold(f64::NEG_INFINITY, f64::max);
        let lo = rec.samples.iter().map(|s| s.speed_min).fold(f64::INFINITY, f64::min);
        assert!(hi <= 1.05 * first.speed_max.max(c), "{name}");
        assert!(lo >= 0.95 * first.speed_min.min(c), "{name}");
        let grad = rec.samples.iter().map(|s| s.grad_log_h_max).fold(0.0, f64::max);
        assert!(grad <= 10.0 * first.grad_log_h_max.max(1e-12), "{name}");
    }
}

#[test]
fn preserved_quantity_does_not_decrease_along_unnormalized_flow() {
    let mut spec = preset("theorem1").unwrap().build(64).unwrap();
    spec.params.normalization = Normalization::Unnormalized;
    spec.params.t_max = 1e9;
    let params = &spec.params;
    let mut s = FlowState::new(spec.initial.clone(), 0.0, params).unwrap();
    let eps = params.grid().dtheta().powi(2);
    let mut prev = preserved_q(s.h(), &params.phi, params).unwrap().min();
    assert!(prev > 0.0);
    for i in 1..=600 {
        s = step(&s, params, stable_dt(&s, params)).unwrap();
        if i % 50 == 0 {
            let q = preserved_q(s.h(), &params.phi, params).unwrap().min();
            assert!(q >= prev - eps, "step {i}: {q} < {prev}");
            prev = q;
        }
    }
}

#[test]
fn preserved_quantity_reductions() {
    let g = build_grid(3, 64).unwrap();
    let one = RadialProfile::constant(&g, 1.0);
    let params = FlowParams::new(one.clone(), 1, 3.0).unwrap();
    let q = preserved_q(&one, &one, &params).unwrap();
    assert!(q.values().iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-12));

    let phi = phi_family(&g, PhiKind::Sin2Power { eps: 0.2, m: 3.0 }).unwrap();
    let params = FlowParams::new(phi.clone(), 2, 1.0).unwrap();
    let h = spheroid_profile(&g, 1.0, 1.3).unwrap();
    let q = preserved_q(&h, &phi, &params).unwrap();
    let f = firey_defect(&phi, 3, 2).unwrap();
    assert_eq!(q.values(), f.defect.values());
}

#[test]
fn differentiated_tail_identity() {
    // d/dθ[cosⁿ ζ₂^k] + cosⁿ⁻¹ sin ζ₂^{k−1}((n−k)ζ₂ + kζ₁) → 0
    // away from the poles: for odd n the reflected cosⁿ has a kink there
    for (n, k) in [(2, 1), (3, 2), (4, 1)] {
        let mut errs = Vec::new();
        for np in [64, 128, 256] {
            let g = build_grid(n, np).unwrap();
            let h = RadialProfile::from_fn(&g, Parity::Even, |t| 1.0 + 0.2 * t.sin() + 0.1 * t.sin().powi(2));
            let r = principal_radii(&h, n, k).unwrap();
            let z1 = r.zeta1.values();
            let z2 = r.zeta2.values();
            let core = h.with_values(
                (0..np).map(|j| g.cos()[j].powi(n as i32) * z2[j].powi(k as i32)).collect(),
                Parity::Even,
            ).unwrap();
            let d = d_theta(&core).unwrap();
            let err = (0..np)
                .filter(|&j| g.theta()[j].abs() < 1.2)
                .map(|j| {
                    let rest = g.cos()[j].powi(n as i32 - 1)
                        * g.sin()[j]
                        * z2[j].powi(k as i32 - 1)
                        * ((n - k) as f64 * z2[j] + k as f64 * z1[j]);
                    (d.values()[j] + rest).abs()
                })
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!((errs[1] / errs[2]).log2() >= 3.5, "n={n} k={k} {errs:?}");
    }
}

#[test]
fn breakdown_keeps_the_state_of_record() {
    let spec = preset("theorem2").unwrap().build(32).unwrap();
    let s = FlowState::new(spec.initial.clone(), 0.0, &spec.params).unwrap();
    // a wildly unstable step produces non-finite or negative values
    let err = step(&s, &spec.params, 1e3).unwrap_err();
    assert!(matches!(
        err.reason,
        BreakdownReason::NonFinite | BreakdownReason::NegativeH | BreakdownReason::NegativeSigmaK
    ));
    assert_eq!(s.time(), 0.0);
    assert_eq!(s.h().values(), spec.initial.values());
}

#[test]
fn non_normalized_modes_converge_to_the_same_shape() {
    let base = preset("theorem2").unwrap().build(64).unwrap();
    let normalized = run_flow(&base.initial, &base.params).unwrap();
    let mut params = base.params.clone();
    params.normalization = Normalization::RescaleEachStep;
    let rescaled = run_flow(&base.initial, &params).unwrap();
    assert_eq!(rescaled.status, TerminalStatus::Converged);
    let a = rescale_snapshot(&normalized.final_state, &base.params).unwrap();
    let b = rescale_snapshot(&rescaled.final_state, &params).unwrap();
    let diff = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-5, "{diff}");
}

fn sin2_phi(grid: &Arc<LatitudeGrid>, eps: f64, m: f64) -> RadialProfile {
    phi_family(grid, PhiKind::Sin2Power { eps, m }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convexity_min_eig_is_scale_equivariant(eps in 0.0f64..0.4, m in 1.0f64..8.0, lambda in 0.2f64..5.0) {
        let g = build_grid(2, 64).unwrap();
        let phi = sin2_phi(&g, eps, m);
        let scaled = phi.map(|v| v * lambda.powf(m));
        let a = convexity_condition(&phi, m).unwrap();
        let b = convexity_condition(&scaled, m).unwrap();
        prop_assert!((b.min_eig - lambda * a.min_eig).abs() <= 1e-10 * lambda.max(1.0));
        prop_assert_eq!(a.ok, b.ok);
    }

    #[test]
    fn rescale_lands_on_the_constraint(c in 0.1f64..10.0, p in prop::sample::select(vec![0.0, 2.0, 3.0, 4.5])) {
        let g = build_grid(2, 32).unwrap();
        let params = FlowParams::new(RadialProfile::constant(&g, 1.0), 1, p).unwrap();
        let h = spheroid_profile(&g, c, 1.3 * c).unwrap();
        let lambda = rescale_factor(&h, &params).unwrap();
        let scaled = h.map(|v| v * lambda);
        let target = if p == 0.0 { 0.0 } else { params.inv_phi_integral() };
        prop_assert!((conservation(&scaled, &params).unwrap() - target).abs() <= 1e-12 * params.inv_phi_integral());
    }

    #[test]
    fn rhs_vanishes_on_any_round_sphere_after_rescaling(r in 0.2f64..5.0, k in 1usize..4) {
        let params = sphere_params(3, k, k as f64 + 1.5, 32);
        let h = RadialProfile::constant(params.grid(), r);
        let lambda = rescale_factor(&h, &params).unwrap();
        let s = FlowState::new(h.map(|v| v * lambda), 0.0, &params).unwrap();
        let rhs = rhs_normalized(&s).unwrap();
        prop_assert!(rhs.values().iter().all(|v| v.abs() <= 1e-12));
    }
}
