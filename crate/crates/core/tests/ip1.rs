mod common;

use common::{coefficients, inverse_square, scenario, zero_data};
use fracwave::error::Error;
use fracwave::fvp_core::{solve_direct, Source};
use fracwave::inverse_source::{ip1_noise_study, reconstruct_f, solve_ip1, IP1Problem};
use fracwave::operator_models::CoefficientVector;
use fracwave::rho_zeros::{delta_n, delta_zeros};

#[test]
fn exact_data_roundtrip() {
    let (n, m) = (16, 400);
    let sc = scenario(n, m);
    let fstar = inverse_square(n);
    let sol = solve_direct(&sc.with_source(Source::Constant(fstar.clone())).unwrap()).unwrap();
    let h = CoefficientVector::new(sol.trajectory.at_node(m / 2)).unwrap();
    let p = IP1Problem::new(sc, 0.5, h).unwrap();
    let s = solve_ip1(&p).unwrap();
    let rel = s.f.combine(1.0, &fstar, -1.0).unwrap().norm() / fstar.norm();
    assert!(rel <= 1e-4, "{rel}");
    assert!(s.snapshot_defect <= 1e-10);
    assert!(s.conditioning > 0.1);
}

#[test]
fn zero_data_maps_to_zero() {
    let sc = zero_data(&scenario(16, 100));
    let p = IP1Problem::new(sc, 0.5, CoefficientVector::zeros(16)).unwrap();
    assert_eq!(reconstruct_f(&p).unwrap().norm(), 0.0);
}

#[test]
fn reconstruction_is_linear() {
    let n = 16;
    let sc = zero_data(&scenario(n, 100));
    let h1 = coefficients(n, |k| (k as f64 + 0.5).sin());
    let h2 = coefficients(n, |k| 1.0 / (k + 1) as f64);
    let p = IP1Problem::new(sc, 0.37, h1.clone()).unwrap();
    let f1 = reconstruct_f(&p).unwrap();
    let f2 = reconstruct_f(&p.with_h(h2.clone()).unwrap()).unwrap();
    let mix = reconstruct_f(&p.with_h(h1.combine(2.5, &h2, -1.5).unwrap()).unwrap()).unwrap();
    let expect = f1.combine(2.5, &f2, -1.5).unwrap();
    let rel = mix.combine(1.0, &expect, -1.0).unwrap().norm() / expect.norm();
    assert!(rel <= 1e-12, "{rel}");
}

#[test]
fn large_eigenvalue_law() {
    let sc = scenario(80, 50);
    let xi = 0.5;
    let scaled: Vec<(f64, f64)> = (0..sc.n_modes())
        .map(|n| (sc.lambda(n), delta_n(xi, n, &sc).unwrap()))
        .filter(|(l, _)| *l >= 1e3)
        .map(|(l, d)| (l, l * (l * d - 1.0).abs()))
        .collect();
    assert!(scaled.len() > 50);
    let c = scaled.iter().map(|v| v.1).fold(0.0, f64::max);
    assert!(c.is_finite() && c < 10.0, "C = {c}");
    let (first, last) = (scaled[0].1, scaled[scaled.len() - 1].1);
    assert!((first - last).abs() <= 0.05 * first, "{first} vs {last}");
}

#[test]
fn snapshot_on_delta_zero_is_rejected() {
    let sc = scenario(4, 100);
    let xi = delta_zeros(0, &sc, 400).unwrap()[0];
    let err = IP1Problem::new(sc, xi, CoefficientVector::zeros(4)).unwrap_err();
    assert!(err.is_admissibility());
    assert!(matches!(err, Error::InadmissibleXi { mode: 0, .. }), "{err:?}");
    assert!(err.to_string().contains("mode index 0"));
}

#[test]
fn noise_study_is_seeded() {
    let sc = scenario(8, 100);
    let p = IP1Problem::new(sc, 0.5, inverse_square(8)).unwrap();
    let a = ip1_noise_study(&p, 1e-3, 50, 42).unwrap();
    let b = ip1_noise_study(&p, 1e-3, 50, 42).unwrap();
    let c = ip1_noise_study(&p, 1e-3, 50, 43).unwrap();
    assert_eq!(a.mean_error, b.mean_error);
    assert_ne!(a.mean_error, c.mean_error);
    assert!(a.mean_error > 0.0 && a.mean_error <= a.max_error);
    assert_eq!(ip1_noise_study(&p, 0.0, 3, 1).unwrap().max_error, 0.0);
}
