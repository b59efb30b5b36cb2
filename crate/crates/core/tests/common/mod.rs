#![allow(dead_code)]

use fracwave::fvp_core::{Scenario, ScenarioSpec, Source, TimeGrid, Tolerances};
use fracwave::operator_models::{CoefficientVector, Eigensystem};
use rug::Float;

/// Taylor series of E_{α,β}(z) in `prec`-bit arithmetic, summed until the
/// terms fall below 2^{-prec} of the largest one.
pub fn ml_extended(alpha: f64, beta: f64, z: f64, prec: u32) -> f64 {
    let a = Float::with_val(prec, alpha);
    let b = Float::with_val(prec, beta);
    let z = Float::with_val(prec, z);
    let mut sum = Float::with_val(prec, 0);
    let mut peak = Float::with_val(prec, 0);
    let mut power = Float::with_val(prec, 1);
    for k in 0..20_000u32 {
        let arg = Float::with_val(prec, &a * k) + &b;
        let term = Float::with_val(prec, &power / arg.gamma());
        let mag = Float::with_val(prec, term.abs_ref());
        if mag > peak {
            peak = mag.clone();
        }
        sum += &term;
        if k > 10 && mag < Float::with_val(prec, &peak >> prec) {
            break;
        }
        power *= &z;
    }
    sum.to_f64()
}

pub fn coefficients(n: usize, f: impl Fn(usize) -> f64) -> CoefficientVector {
    CoefficientVector::from_fn(n, f).unwrap()
}

/// α = 1.5, γ = 0.5, T = 1 on the Dirichlet Laplacian of (0, 1), with φ
/// and ψ decaying like n⁻³.
pub fn scenario(n: usize, m: usize) -> Scenario {
    Scenario::new(ScenarioSpec {
        alpha: 1.5,
        gamma: 0.5,
        eigensystem: Eigensystem::dirichlet_laplacian_1d(1.0, n).unwrap(),
        grid: TimeGrid::uniform(1.0, m).unwrap(),
        phi: coefficients(n, |k| 0.5 / ((k + 1) as f64).powi(3)),
        psi: coefficients(n, |k| -0.2 / ((k + 1) as f64).powi(3)),
        source: Source::Zero,
        tolerances: Tolerances::default(),
    })
    .unwrap()
}

pub fn zero_data(sc: &Scenario) -> Scenario {
    let n = sc.n_modes();
    sc.with_data(CoefficientVector::zeros(n), CoefficientVector::zeros(n), Source::Zero)
        .unwrap()
}

pub fn inverse_square(n: usize) -> CoefficientVector {
    coefficients(n, |k| 1.0 / ((k + 1) * (k + 1)) as f64)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs() / y.abs()))
}

/// Every mode of the 8-mode base problem is driven so that uₙ(t) = 1 + t²:
/// Fₙ(t) = 2t^{2−α}/Γ(3−α) + λₙ(1 + t²), φₙ = γ + 1 + T², ψₙ = 2T.
/// Returns the sup-norm error relative to max uₙ.
pub fn manufactured_error(m: usize) -> f64 {
    let (alpha, gamma, tf, n) = (1.5, 0.5, 1.0, 8);
    let es = Eigensystem::dirichlet_laplacian_1d(1.0, n).unwrap();
    let grid = TimeGrid::uniform(tf, m).unwrap();
    let g3 = fracwave::specfun::gamma_real(3.0 - alpha).unwrap();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            grid.nodes()
                .iter()
                .map(|&t| 2.0 * t.powf(2.0 - alpha) / g3 + es.lambda(k) * (1.0 + t * t))
                .collect()
        })
        .collect();
    let sc = Scenario::new(ScenarioSpec {
        alpha,
        gamma,
        eigensystem: es,
        grid: grid.clone(),
        phi: CoefficientVector::new(vec![gamma + 1.0 + tf * tf; n]).unwrap(),
        psi: CoefficientVector::new(vec![2.0 * tf; n]).unwrap(),
        source: Source::PerMode(rows),
        tolerances: Tolerances::default(),
    })
    .unwrap();
    let sol = fracwave::fvp_core::solve_direct(&sc).unwrap();
    let mut err: f64 = 0.0;
    for mode in &sol.trajectory.modes {
        for (u, t) in mode.iter().zip(grid.nodes()) {
            err = err.max((u - (1.0 + t * t)).abs());
        }
    }
    err / (1.0 + tf * tf)
}

/// Least-squares slope of −log(error) against log(M).
pub fn empirical_order(ms: &[usize], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = ms.iter().map(|m| (*m as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| -e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
