mod common;

use std::f64::consts::PI;

use common::{coefficients, inverse_square, max_abs_diff, scenario, zero_data};
use fracwave::error::Error;
use fracwave::fvp_core::{solve_direct, Scenario, ScenarioSpec, Source, TimeGrid, TimeSeries, Tolerances};
use fracwave::inverse_coefficient::{
    caputo_derivative, closed_loop_defect, default_profiles, ip2_kernels, k1_integral_quadrature,
    observe, observe_caputo, solve_p, stability_sweep, synthesize_caputo_data, IP2Problem,
    ObservationData,
};
use fracwave::operator_models::{functional_coefficients, CoefficientVector, Eigensystem, FunctionalKind};
use fracwave::quadrature::tanh_sinh;
use fracwave::specfun::gamma_real;

fn pstar(t: f64) -> f64 {
    1.0 + 0.5 * (PI * t).sin()
}

fn problem(n: usize, m: usize) -> IP2Problem {
    let sc = zero_data(&scenario(n, m));
    let f = inverse_square(n);
    let fs = functional_coefficients(&FunctionalKind::Mean, sc.eigensystem(), n).unwrap();
    let data = synthesize_caputo_data(&sc, &f, pstar, &fs, 2).unwrap();
    IP2Problem::new(sc, f, fs, ObservationData::CaputoH(data)).unwrap()
}

#[test]
fn smooth_profile_roundtrip() {
    let p = problem(8, 200);
    let sol = solve_p(&p).unwrap();
    let truth = TimeSeries::sample(p.scenario().grid(), pstar).unwrap();
    let rel = max_abs_diff(&sol.p.values, &truth.values) / truth.sup_norm();
    assert!(rel <= 5e-3, "{rel}");
    assert!(sol.condition.is_finite() && sol.condition < 1e6);
    assert!(closed_loop_defect(&p, &sol).unwrap() <= 1e-2);
}

#[test]
fn observed_data_path_agrees() {
    let p = problem(8, 200);
    let sc = p.scenario();
    let fine = sc.with_grid(sc.grid().refined(2).unwrap(), Source::Zero).unwrap();
    let pf = TimeSeries::sample(fine.grid(), pstar).unwrap();
    let forced = fine
        .with_source(Source::Separable { f: p.f().clone(), p: pf })
        .unwrap();
    let h = observe(&solve_direct(&forced).unwrap().trajectory, p.functional()).every(2);
    let q = IP2Problem::new(sc.clone(), p.f().clone(), p.functional().clone(), ObservationData::H(h)).unwrap();
    let sol = solve_p(&q).unwrap();
    let truth = TimeSeries::sample(sc.grid(), pstar).unwrap();
    let interior = sol.p.values.len() / 10;
    let err = max_abs_diff(&sol.p.values[interior..], &truth.values[interior..]) / truth.sup_norm();
    assert!(err <= 5e-2, "{err}");
}

#[test]
fn caputo_power_rule() {
    let a = 1.5;
    let g = gamma_real(3.0 - a).unwrap();
    let grid = TimeGrid::uniform(1.0, 1000).unwrap();
    let d = caputo_derivative(&TimeSeries::sample(&grid, |t| t * t).unwrap(), a).unwrap();
    let exact: Vec<f64> = d.t.iter().map(|t| 2.0 * t.powf(2.0 - a) / g).collect();
    assert!(max_abs_diff(&d.values, &exact) <= 1e-3);
    let coarse = TimeGrid::uniform(1.0, 5).unwrap();
    let r = caputo_derivative(&TimeSeries::sample(&coarse, |t| t).unwrap(), a);
    assert!(matches!(r, Err(Error::GridTooCoarse { .. })));
}

/// One forced mode with u₁(t) = 1 + t², so Φ[u] has a smooth Caputo
/// derivative Φ₁·2t^{2−α}/Γ(3−α) and both routes can be compared with it.
#[test]
fn caputo_routes_agree_on_smooth_solution() {
    let (alpha, gamma, n, m) = (1.5, 0.5, 8, 1000);
    let es = Eigensystem::dirichlet_laplacian_1d(1.0, n).unwrap();
    let grid = TimeGrid::uniform(1.0, m).unwrap();
    let g3 = gamma_real(3.0 - alpha).unwrap();
    let lam = es.lambda(0);
    let p = TimeSeries::sample(&grid, |t| 2.0 * t.powf(2.0 - alpha) / g3 + lam * (1.0 + t * t)).unwrap();
    let f = CoefficientVector::unit(n, 0);
    let sc = Scenario::new(ScenarioSpec {
        alpha,
        gamma,
        eigensystem: es.clone(),
        grid: grid.clone(),
        phi: f.scaled(gamma + 2.0),
        psi: f.scaled(2.0),
        source: Source::Separable { f: f.clone(), p: p.clone() },
        tolerances: Tolerances::default(),
    })
    .unwrap();
    let fs = functional_coefficients(&FunctionalKind::Mean, &es, n).unwrap();
    let sol = solve_direct(&sc).unwrap();
    let numeric = caputo_derivative(&observe(&sol.trajectory, &fs), alpha).unwrap();
    let from_equation = observe_caputo(&sc, &sol.trajectory, &p, &f, &fs).unwrap();
    let phi1 = fs.coefficients()[0];
    let exact: Vec<f64> = grid.nodes().iter().map(|t| phi1 * 2.0 * t.powf(2.0 - alpha) / g3).collect();
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(max_abs_diff(&numeric.values, &exact) <= 1e-2 * scale);
    assert!(max_abs_diff(&from_equation.values, &exact) <= 1e-2 * scale);
    assert!(max_abs_diff(&numeric.values, &from_equation.values) <= 1e-2 * scale);
}

#[test]
fn volterra_weights_reproduce_kernel_integral() {
    let p = problem(8, 200);
    let k = ip2_kernels(&p).unwrap();
    let sc = p.scenario();
    let kern = sc.kernels();
    let phi = p.functional().coefficients().to_vec();
    let k1 = |x: f64| -> f64 {
        (0..sc.n_modes())
            .map(|n| -sc.lambda(n) * p.f().get(n) * phi[n] * kern.pow_am1(sc.lambda(n), x).unwrap())
            .sum()
    };
    for i in [20, 100, 200] {
        let t = sc.grid().nodes()[i];
        let row: f64 = k.volterra[i].iter().sum();
        let exact = tanh_sinh(k1, 0.0, t, 1e-13, 12).value;
        assert!((row - exact).abs() <= 1e-6, "i={i}: {row} vs {exact}");
        assert!((k1_integral_quadrature(&p, t).unwrap() - exact).abs() <= 1e-8);
    }
}

#[test]
fn stability_ratios_are_bounded() {
    let p = problem(8, 100);
    let sweep = stability_sweep(&p, &default_profiles(1.0)).unwrap();
    assert_eq!(sweep.ratios.len(), 10);
    assert!(sweep.ratios.iter().all(|r| r.is_finite()));
    assert!(sweep.min_ratio > 0.0);
    assert!(sweep.spread <= 1e3, "{sweep:?}");
}

#[test]
fn degenerate_functional_is_rejected() {
    let sc = zero_data(&scenario(4, 50));
    let f = coefficients(4, |k| if k == 1 { 1.0 } else { 0.0 });
    let fs = functional_coefficients(&FunctionalKind::Mean, sc.eigensystem(), 4).unwrap();
    let zero = TimeSeries::sample(sc.grid(), |_| 0.0).unwrap();
    let err = IP2Problem::new(sc, f, fs, ObservationData::CaputoH(zero)).unwrap_err();
    assert!(err.is_admissibility());
    assert!(matches!(err, Error::FunctionalDegenerate { .. }));
}
