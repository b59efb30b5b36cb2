mod common;

use common::ml_extended;
use fracwave::specfun::{decay_constant, gamma_real, kernel_family, KernelEvaluator, MittagLeffler};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_extended_precision_series() {
    for &(a, b, z) in &[
        (1.5, 1.0, -5.0),
        (1.5, 1.5, -2.0),
        (1.2, 1.2, -9.0),
        (1.8, 0.8, -20.0),
        (1.5, 2.5, -40.0),
        (1.5, 1.0, 3.0),
    ] {
        let exact = ml_extended(a, b, z, 256);
        let v = MittagLeffler::new(a, b).unwrap().eval(z).unwrap();
        assert!(((v - exact) / exact).abs() < 1e-9, "({a},{b},{z}): {v} vs {exact}");
    }
}

#[test]
fn asymptotic_regime_overlaps_extended_series() {
    for &a in &[1.2, 1.5, 1.8] {
        for &b in &[0.8, 1.0, 2.0, a, a - 1.0, a + 1.0] {
            let e = MittagLeffler::new(a, b).unwrap();
            let r1 = e.asymptotic_radius();
            for i in 0..=4 {
                let eta = r1 * (1.0 + i as f64 / 4.0);
                let exact = ml_extended(a, b, -eta, 512);
                let asym = e.asymptotic_sum(-eta);
                let rel = ((asym - exact) / exact).abs();
                assert!(rel <= 1e-8, "({a},{b}) eta={eta}: {asym} vs {exact}");
            }
        }
    }
}

#[test]
fn lambda_zero_reduces_to_powers() {
    let a = 1.5;
    let t = 2.0;
    let k = kernel_family(a, 0.0, t).unwrap();
    assert!((k.e1 - 1.0).abs() < 1e-14);
    assert!((k.t_e2 - t).abs() < 1e-14);
    assert!((k.pow_am1 - t.powf(a - 1.0) / gamma_real(a).unwrap()).abs() < 1e-13);
    assert!((k.pow_am2().unwrap() - t.powf(a - 2.0) / gamma_real(a - 1.0).unwrap()).abs() < 1e-13);
    assert!((k.pow_a - t.powf(a) / gamma_real(a + 1.0).unwrap()).abs() < 1e-13);
    assert!(kernel_family(a, 1.0, 0.0).unwrap().pow_am2().is_err());
}

fn central(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (f(t + h) - f(t - h)) / (2.0 * h)
}

#[test]
fn kernel_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-5;
    for _ in 0..20 {
        let a = rng.random_range(1.1..1.9);
        let l = rng.random_range(0.5..20.0);
        let t = rng.random_range(0.2..2.0);
        let k = KernelEvaluator::new(a).unwrap();
        let pairs: [(f64, f64); 5] = [
            (central(|s| k.e1(l, s).unwrap(), t, h), -l * k.pow_am1(l, t).unwrap()),
            (central(|s| k.t_e2(l, s).unwrap(), t, h), k.e1(l, t).unwrap()),
            (central(|s| k.pow_am1(l, s).unwrap(), t, h), k.pow_am2(l, t).unwrap()),
            (central(|s| k.pow_a(l, s).unwrap(), t, h), k.pow_am1(l, t).unwrap()),
            (central(|s| k.pow_ap1(l, s).unwrap(), t, h), k.pow_a(l, t).unwrap()),
        ];
        for (i, (fd, exact)) in pairs.iter().enumerate() {
            let rel = ((fd - exact) / exact).abs();
            assert!(rel <= 1e-6, "identity {i} at a={a} l={l} t={t}: {fd} vs {exact}");
        }
    }
}

#[test]
fn decay_constant_bounds_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &(a, b) in &[(1.5, 1.0), (1.5, 1.5), (2.0, 1.0)] {
        let c = decay_constant(a, b, 1e6).unwrap();
        assert!(c.is_finite() && c > 0.0);
        let e = MittagLeffler::new(a, b).unwrap();
        for _ in 0..1000 {
            let eta = 10f64.powf(rng.random_range(-6.0..6.0));
            assert!((1.0 + eta) * e.eval(-eta).unwrap().abs() <= 2.0 * c, "({a},{b}) eta={eta}");
        }
    }
}

#[test]
fn kernel_parameters_match_extended_series_at_random_orders() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let a: f64 = rng.random_range(1.05..1.95);
        let z = -rng.random_range(0.5..120.0);
        for b in [a - 1.0, a, a + 1.0, a + 2.0, 1.0, 2.0] {
            let exact = ml_extended(a, b, z, 512);
            let v = MittagLeffler::new(a, b).unwrap().eval(z).unwrap();
            assert!(((v - exact) / exact).abs() < 1e-9, "({a},{b},{z}): {v} vs {exact}");
        }
    }
}
