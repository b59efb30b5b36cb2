mod common;

use common::{empirical_order, inverse_square, manufactured_error, scenario, zero_data};
use fracwave::fvp_core::{
    convolve, kernel_primitive, residual, solve_direct, solve_direct_verified, terminal_check,
    two_path_discrepancy, KernelKind, Source,
};
use fracwave::quadrature::tanh_sinh;
use fracwave::rho_zeros::delta_sign_convention;
use fracwave::specfun::KernelEvaluator;

fn kernel(k: &KernelEvaluator, kind: KernelKind, lambda: f64, x: f64) -> f64 {
    match kind {
        KernelKind::AlphaAlpha => k.pow_am1(lambda, x).unwrap(),
        KernelKind::AlphaAlphaMinusOne => k.pow_am2(lambda, x).unwrap(),
    }
}

/// ∫₀ᵗ F(t − x)k(x) dx by tanh–sinh, which absorbs the endpoint singularity.
fn oracle(k: &KernelEvaluator, kind: KernelKind, lambda: f64, f: impl Fn(f64) -> f64, t: f64) -> f64 {
    let e = tanh_sinh(|x| f(t - x) * kernel(k, kind, lambda, x), 0.0, t, 1e-14, 12);
    assert!(e.error < 1e-12, "oracle did not converge: {e:?}");
    e.value
}

#[test]
fn constant_source_telescopes_exactly() {
    let k = KernelEvaluator::new(1.5).unwrap();
    for &m in &[10, 77, 400] {
        let nodes: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
        let ones = vec![1.0; nodes.len()];
        for &lambda in &[0.0, 4.0, 250.0] {
            for &t in &[0.3, 1.0] {
                let c = convolve(&k, KernelKind::AlphaAlpha, lambda, &nodes, &ones, t).unwrap();
                assert_eq!(c, k.pow_a(lambda, t).unwrap());
                let c = convolve(&k, KernelKind::AlphaAlphaMinusOne, lambda, &nodes, &ones, t).unwrap();
                assert_eq!(c, k.pow_am1(lambda, t).unwrap());
            }
        }
    }
}

#[test]
fn kernel_moments_match_quadrature() {
    for &a in &[1.2, 1.5, 1.8] {
        let k = KernelEvaluator::new(a).unwrap();
        for kind in [KernelKind::AlphaAlpha, KernelKind::AlphaAlphaMinusOne] {
            let exact = kernel_primitive(&k, kind, 4.0, 0.0, 1.0).unwrap();
            let q = oracle(&k, kind, 4.0, |_| 1.0, 1.0);
            assert!((exact - q).abs() <= 1e-8, "a={a} {kind:?}: {exact} vs {q}");
        }
    }
}

#[test]
fn smooth_source_converges_at_second_order() {
    let k = KernelEvaluator::new(1.5).unwrap();
    let f = |s: f64| (3.0 * s).cos();
    for kind in [KernelKind::AlphaAlpha, KernelKind::AlphaAlphaMinusOne] {
        let exact = oracle(&k, kind, 4.0, f, 1.0);
        let err = |m: usize| {
            let nodes: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
            let vals: Vec<f64> = nodes.iter().map(|&s| f(s)).collect();
            (convolve(&k, kind, 4.0, &nodes, &vals, 1.0).unwrap() - exact).abs()
        };
        assert!(err(400) <= 5e-3);
        for m in [50, 100, 200] {
            let ratio = err(m) / err(2 * m);
            assert!((3.4..=4.6).contains(&ratio), "{kind:?} M={m}: ratio {ratio}");
        }
    }
}

#[test]
fn linear_source_matches_quadrature() {
    let k = KernelEvaluator::new(1.5).unwrap();
    let nodes: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
    let c = convolve(&k, KernelKind::AlphaAlpha, 4.0, &nodes, &nodes, 1.0).unwrap();
    let q = oracle(&k, KernelKind::AlphaAlpha, 4.0, |s| s, 1.0);
    assert!((c - q).abs() <= 1e-10, "{c} vs {q}");
}

#[test]
fn manufactured_solution_converges() {
    let ms = [100, 200, 400, 800];
    let errors: Vec<f64> = ms.iter().map(|&m| manufactured_error(m)).collect();
    assert!(errors[2] <= 5e-3, "{errors:?}");
    let order = empirical_order(&ms, &errors);
    assert!(order >= 0.9, "order {order} from {errors:?}");
}

#[test]
fn terminal_conditions_and_paths_agree() {
    let n = 8;
    let sc = scenario(n, 200).with_source(Source::Constant(inverse_square(n))).unwrap();
    let (sol, d) = solve_direct_verified(&sc).unwrap();
    assert!(d.value <= 1e-6 && d.slope <= 1e-6, "{d:?}");
    assert_eq!(terminal_check(&sc, &sol), d);
    assert!(two_path_discrepancy(&sc).unwrap() <= 1e-10);
    let r = residual(&sc, &sol).unwrap();
    assert!(r.iter().all(|v| v.is_finite()));
}

#[test]
fn zero_data_gives_zero_solution() {
    let sc = zero_data(&scenario(16, 100));
    assert!(solve_direct(&sc).unwrap().trajectory.max_abs() <= 1e-12);
}

#[test]
fn delta_matches_minus_convention() {
    let sc = scenario(8, 100);
    let log = delta_sign_convention(&sc, &[0.25, 0.5, 0.75]).unwrap();
    assert!(log.minus_discrepancy <= 1e-8, "{log:?}");
}
