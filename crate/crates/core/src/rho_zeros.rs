//! The characteristic function ρ(η), its zeros, the upper bound on the
//! largest zero, and the admissibility tests built on them.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fvp_core::Scenario;
use crate::operator_models::Eigensystem;
use crate::quadrature::adaptive_gauss_kronrod;
use crate::specfun::{gamma_real, MittagLeffler};

/// Left end of the logarithmic root scan.
pub const SCAN_START: f64 = 1e-8;
/// Default number of scan points.
pub const DEFAULT_RESOLUTION: usize = 4000;
const TANGENTIAL_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoParams {
    pub alpha: f64,
    pub gamma: f64,
}

impl RhoParams {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::InvalidInput(format!("alpha must lie in (1, 2), got {alpha}")));
        }
        if gamma == 0.0 || !gamma.is_finite() {
            return Err(Error::InvalidInput(format!("gamma must be finite and nonzero, got {gamma}")));
        }
        Ok(Self { alpha, gamma })
    }
}

/// ρ(η) = γE_{α,1}(−η) + E_{α,1}(−η)² + ηE_{α,2}(−η)E_{α,α}(−η).
#[derive(Debug, Clone)]
pub struct Rho {
    params: RhoParams,
    e1: MittagLeffler,
    e2: MittagLeffler,
    ea: MittagLeffler,
}

impl Rho {
    pub fn new(params: RhoParams) -> Result<Self> {
        let a = params.alpha;
        Ok(Self {
            params,
            e1: MittagLeffler::new(a, 1.0)?,
            e2: MittagLeffler::new(a, 2.0)?,
            ea: MittagLeffler::new(a, a)?,
        })
    }

    pub fn params(&self) -> RhoParams {
        self.params
    }

    pub fn eval(&self, eta: f64) -> Result<f64> {
        if !(eta >= 0.0) {
            return Err(Error::Domain(format!("rho needs eta >= 0, got {eta}")));
        }
        let e1 = self.e1.eval(-eta)?;
        let e2 = self.e2.eval(-eta)?;
        let ea = self.ea.eval(-eta)?;
        Ok(self.params.gamma * e1 + e1 * e1 + eta * e2 * ea)
    }
}

pub fn rho(eta: f64, p: RhoParams) -> Result<f64> {
    Rho::new(p)?.eval(eta)
}

/// The limit of η·ρ(η) as η → ∞, γ/Γ(1−α).
pub fn rho_tail_constant(p: RhoParams) -> Result<f64> {
    Ok(p.gamma / gamma_real(1.0 - p.alpha)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Root {
    pub eta: f64,
    pub residual: f64,
    /// Sign-change bracket, absent for tangential candidates.
    pub bracket: Option<(f64, f64)>,
    pub tangential: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootReport {
    pub params: RhoParams,
    pub roots: Vec<Root>,
    pub eta_max: f64,
    pub scan_resolution: usize,
    /// min of η|ρ(η)| over scan points with η ≥ η_N + 1 (η ≥ 1 without roots).
    pub c1_empirical: Option<f64>,
}

impl RootReport {
    pub fn largest(&self) -> Option<f64> {
        self.roots.last().map(|r| r.eta)
    }

    pub fn etas(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.eta).collect()
    }
}

fn scan_grid(eta_max: f64, resolution: usize) -> Vec<f64> {
    let lo = SCAN_START.ln();
    let hi = eta_max.ln();
    (0..resolution)
        .map(|i| (lo + (hi - lo) * i as f64 / (resolution - 1) as f64).exp())
        .collect()
}

/// Scan ρ on a log-uniform grid over [1e−8, eta_max], bisect every sign
/// change and report near-zero local minima of |ρ| as tangential candidates.
pub fn find_roots(p: RhoParams, eta_max: f64, resolution: usize) -> Result<RootReport> {
    if resolution < 1000 {
        return Err(Error::InvalidInput(format!(
            "scan resolution must be at least 1000, got {resolution}"
        )));
    }
    if !(eta_max > SCAN_START) {
        return Err(Error::EmptyScan);
    }
    let rho = Rho::new(p)?;
    let grid = scan_grid(eta_max, resolution);
    let values = grid
        .par_iter()
        .map(|&eta| rho.eval(eta))
        .collect::<Result<Vec<f64>>>()?;

    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        let (a, b) = (values[i], values[i + 1]);
        if a == 0.0 {
            roots.push(Root {
                eta: grid[i],
                residual: 0.0,
                bracket: Some((grid[i], grid[i])),
                tangential: false,
            });
        } else if a * b < 0.0 {
            roots.push(bisect(&rho, grid[i], grid[i + 1], a)?);
        }
    }
    // local minima of |ρ| that do not sit next to a sign change
    for i in 1..grid.len() - 1 {
        let m = values[i].abs();
        if m < TANGENTIAL_LIMIT
            && m <= values[i - 1].abs()
            && m <= values[i + 1].abs()
            && values[i - 1] * values[i] > 0.0
            && values[i] * values[i + 1] > 0.0
        {
            let (eta, residual) = golden_minimum(&rho, grid[i - 1], grid[i + 1])?;
            roots.push(Root {
                eta,
                residual,
                bracket: None,
                tangential: true,
            });
        }
    }
    roots.sort_by(|a, b| a.eta.total_cmp(&b.eta));

    let start = roots.last().map_or(1.0, |r| r.eta + 1.0);
    let c1_empirical = grid
        .iter()
        .zip(&values)
        .filter(|(eta, _)| **eta >= start)
        .map(|(eta, v)| eta * v.abs())
        .reduce(f64::min);

    Ok(RootReport {
        params: p,
        roots,
        eta_max,
        scan_resolution: resolution,
        c1_empirical,
    })
}

fn bisect(rho: &Rho, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<Root> {
    let bracket = (lo, hi);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * mid || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = rho.eval(mid)?;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    let eta = 0.5 * (lo + hi);
    Ok(Root {
        eta,
        residual: rho.eval(eta)?.abs(),
        bracket: Some(bracket),
        tangential: false,
    })
}

fn golden_minimum(rho: &Rho, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = rho.eval(c)?.abs();
    let mut fd = rho.eval(d)?.abs();
    for _ in 0..200 {
        if b - a <= 1e-12 * b {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = rho.eval(c)?.abs();
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = rho.eval(d)?.abs();
        }
    }
    let eta = 0.5 * (a + b);
    Ok((eta, rho.eval(eta)?.abs()))
}

/// Scan range used when none is configured: max(10³, 2·bound) for γ > 0.
pub fn default_eta_max(p: RhoParams) -> f64 {
    if p.gamma > 0.0 {
        if let Ok((bound, _)) = eta_bound(p, default_theta(p.alpha)) {
            if bound.is_finite() {
                return (2.0 * bound).max(1e3);
            }
        }
    }
    1e3
}

/// Root report for the default scan, memoized per (α, γ).
pub fn default_roots(p: RhoParams) -> Result<Arc<RootReport>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), Arc<RootReport>>>> = OnceLock::new();
    let key = (p.alpha.to_bits(), p.gamma.to_bits());
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&key) {
        return Ok(r.clone());
    }
    let report = Arc::new(find_roots(p, default_eta_max(p), DEFAULT_RESOLUTION)?);
    cache.lock().unwrap().insert(key, report.clone());
    Ok(report)
}

/// Which ν₃ integrand was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Nu3Form {
    /// |exp(ζ^{1+1/α})|·|ζ|
    AsWritten,
    /// |exp(ζ^{1/α})|·|ζ|, used when the first form diverges on the rays.
    Reduced,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourConstants {
    pub theta: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub nu3_form: Nu3Form,
    /// Ray truncation radius, the largest used for the three integrals.
    pub radius: f64,
    pub quadrature_error: f64,
    /// 1/|cos θ|
    pub first_branch: f64,
    /// the second member of the maximum
    pub second_branch: f64,
}

/// θ halfway inside (πα/2, π).
pub fn default_theta(alpha: f64) -> f64 {
    0.5 * (0.5 * PI * alpha + PI)
}

/// μ₁, μ₂, μ₃.
pub fn mu_constants(alpha: f64) -> Result<(f64, f64, f64)> {
    let g = gamma_real(-alpha)?;
    Ok((
        1.0 / (alpha * g),
        1.0 / (alpha * (alpha - 1.0) * g),
        1.0 / g,
    ))
}

/// (1/(2πα sin θ)) ∫_{l(θ)} exp(Re ζ^{q}) |ζ|^{power} |dζ| over the two rays
/// |ζ| ≥ 1, arg ζ = ±θ, and the unit arc between them.
fn contour_integral(alpha: f64, theta: f64, q: f64, power: f64) -> Option<(f64, f64, f64)> {
    let decay = (theta * q).cos();
    if decay >= 0.0 {
        return None;
    }
    let ray = |r: f64| (r.powf(q) * decay).exp() * r.powf(power);
    // walk out until the integrand has dropped below 1e-16 and keeps falling
    let mut radius = 2.0;
    while ray(radius) >= 1e-16 || ray(radius * 1.1) >= ray(radius) {
        radius *= 1.5;
        if radius > 1e12 {
            return None;
        }
    }
    let rays = adaptive_gauss_kronrod(ray, 1.0, radius, 1e-15, 1e-13, 4000);
    let arc = adaptive_gauss_kronrod(|phi| (phi * q).cos().exp(), -theta, theta, 1e-15, 1e-13, 500);
    let scale = 1.0 / (2.0 * PI * alpha * theta.sin());
    Some((
        scale * (2.0 * rays.value + arc.value),
        scale * (2.0 * rays.error + arc.error),
        radius,
    ))
}

/// μ and ν constants for the contour l(θ). With `allow_fallback` the ν₃
/// integral falls back to the reduced integrand when the written one grows
/// along the rays; otherwise that case is a `DivergentContour` error.
pub fn contour_constants(p: RhoParams, theta: f64, allow_fallback: bool) -> Result<ContourConstants> {
    let a = p.alpha;
    if !(theta > 0.5 * PI * a && theta < PI) {
        return Err(Error::Domain(format!(
            "theta must lie in (pi*alpha/2, pi) = ({}, {PI}), got {theta}",
            0.5 * PI * a
        )));
    }
    let (mu1, mu2, mu3) = mu_constants(a)?;
    let diverged = |name| Error::DivergentContour { constant: name, theta };
    let (nu1, e1, r1) = contour_integral(a, theta, 1.0 / a, 1.0).ok_or_else(|| diverged("nu1"))?;
    let (nu2, e2, r2) =
        contour_integral(a, theta, 1.0 / a, 1.0 - 1.0 / a).ok_or_else(|| diverged("nu2"))?;
    let (nu3, e3, r3, nu3_form) = match contour_integral(a, theta, 1.0 + 1.0 / a, 1.0) {
        Some((v, e, r)) => (v, e, r, Nu3Form::AsWritten),
        None if allow_fallback => {
            let (v, e, r) = (nu1, e1, r1);
            (v, e, r, Nu3Form::Reduced)
        }
        None => return Err(diverged("nu3")),
    };
    let first_branch = 1.0 / theta.cos().abs();
    let g = p.gamma;
    let lead = 1.0 / (a * a * (a - 1.0) * gamma_real(-a)?);
    let second_branch = (lead
        + g * nu1
        + 2.0 * mu1 * nu1
        + mu2 * nu3
        + mu3 * nu2
        + nu1 * nu1
        + nu2 * nu3)
        / (mu1 * g);
    Ok(ContourConstants {
        theta,
        mu1,
        mu2,
        mu3,
        nu1,
        nu2,
        nu3,
        nu3_form,
        radius: r1.max(r2).max(r3),
        quadrature_error: e1 + e2 + e3,
        first_branch,
        second_branch,
    })
}

/// Upper bound on the largest zero of ρ for γ > 0.
pub fn eta_bound(p: RhoParams, theta: f64) -> Result<(f64, ContourConstants)> {
    if !(p.gamma > 0.0) {
        return Err(Error::InvalidInput(format!(
            "the upper bound needs gamma > 0, got {}",
            p.gamma
        )));
    }
    let c = contour_constants(p, theta, true)?;
    Ok((c.first_branch.max(c.second_branch), c))
}

/// Distance of T to the set Λ = {(ηⱼ/λₙ)^{1/α}}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaReport {
    pub t_final: f64,
    pub admissible: bool,
    /// min |T − (ηⱼ/λₙ)^{1/α}| / T; infinite when no candidate exists
    pub min_distance: f64,
    pub mode: Option<usize>,
    pub root: Option<usize>,
    pub nearest_horizon: Option<f64>,
    pub tol: f64,
}

/// Measures how close T is to Λ without failing.
pub fn lambda_distance(
    t_final: f64,
    es: &Eigensystem,
    rr: &RootReport,
    alpha: f64,
    tol: f64,
) -> LambdaReport {
    let mut report = LambdaReport {
        t_final,
        admissible: true,
        min_distance: f64::INFINITY,
        mode: None,
        root: None,
        nearest_horizon: None,
        tol,
    };
    let Some(eta_n) = rr.largest() else {
        return report;
    };
    let limit = eta_n / t_final.powf(alpha) * 1.5;
    for (n, &lambda) in es.lambdas().iter().enumerate() {
        if lambda > limit {
            break;
        }
        for (j, root) in rr.roots.iter().enumerate() {
            let horizon = (root.eta / lambda).powf(1.0 / alpha);
            let d = (t_final - horizon).abs() / t_final;
            if d < report.min_distance {
                report.min_distance = d;
                report.mode = Some(n);
                report.root = Some(j);
                report.nearest_horizon = Some(horizon);
            }
        }
    }
    report.admissible = report.min_distance > tol;
    report
}

/// Fails with `InadmissibleT` when T lies within `tol` (relative) of Λ.
pub fn lambda_admissibility(
    t_final: f64,
    es: &Eigensystem,
    rr: &RootReport,
    alpha: f64,
    tol: f64,
) -> Result<LambdaReport> {
    let report = lambda_distance(t_final, es, rr, alpha, tol);
    if !report.admissible {
        return Err(Error::InadmissibleT {
            t_final,
            mode: report.mode.unwrap_or(0),
            root: report.root.unwrap_or(0),
            eta: rr.roots[report.root.unwrap_or(0)].eta,
            distance: report.min_distance,
        });
    }
    Ok(report)
}

/// Δₙ(t): the mode-n response at time t to a unit constant source with zero
/// terminal data.
pub fn delta_n(t: f64, n: usize, sc: &Scenario) -> Result<f64> {
    sc.mode_response(n)?.unit_source_value(t)
}

/// Δₙ(t) from the closed form
/// tᵅE_{α,α+1}(−λtᵅ) − TᵅE_{α,α+1}(−λTᵅ)Pₙ⁽²⁾(t) − T^{α−1}E_{α,α}(−λTᵅ)Pₙ⁽³⁾(t).
pub fn delta_n_closed_form(t: f64, n: usize, sc: &Scenario) -> Result<f64> {
    let r = sc.mode_response(n)?;
    let k = sc.kernels();
    let lambda = r.lambda();
    let tf = sc.t_final();
    Ok(k.pow_a(lambda, t)? - k.pow_a(lambda, tf)? * r.p2(t)? - k.pow_am1(lambda, tf)? * r.p3(t)?)
}

/// Closed form with the opposite sign in front of the Pₙ⁽²⁾, Pₙ⁽³⁾ terms.
pub fn delta_n_closed_form_plus(t: f64, n: usize, sc: &Scenario) -> Result<f64> {
    let r = sc.mode_response(n)?;
    let k = sc.kernels();
    let lambda = r.lambda();
    let tf = sc.t_final();
    Ok(k.pow_a(lambda, t)? + k.pow_a(lambda, tf)? * r.p2(t)? + k.pow_am1(lambda, tf)? * r.p3(t)?)
}

/// Which closed-form sign convention reproduces the unit-source response.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConventionLog {
    pub matched: String,
    pub minus_discrepancy: f64,
    pub plus_discrepancy: f64,
    pub probe_times: Vec<f64>,
    pub modes_checked: usize,
}

/// Compares both closed-form conventions against the operational Δₙ.
pub fn delta_sign_convention(sc: &Scenario, probes: &[f64]) -> Result<ConventionLog> {
    let modes = sc.n_modes().min(8);
    let mut minus: f64 = 0.0;
    let mut plus: f64 = 0.0;
    for n in 0..modes {
        for &t in probes {
            let op = delta_n(t, n, sc)?;
            let scale = op.abs().max(1e-300);
            minus = minus.max((delta_n_closed_form(t, n, sc)? - op).abs() / scale);
            plus = plus.max((delta_n_closed_form_plus(t, n, sc)? - op).abs() / scale);
        }
    }
    let matched = if minus <= plus { "minus" } else { "plus" };
    Ok(ConventionLog {
        matched: matched.into(),
        minus_discrepancy: minus,
        plus_discrepancy: plus,
        probe_times: probes.to_vec(),
        modes_checked: modes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XiReport {
    pub xi: f64,
    pub admissible: bool,
    /// min over n of λₙ|Δₙ(ξ)|
    pub conditioning: f64,
    pub mode: usize,
    pub tol: f64,
}

/// λₙ|Δₙ(ξ)| over all modes without failing.
pub fn p1_distance(xi: f64, sc: &Scenario, tol: f64) -> Result<XiReport> {
    if !(xi > 0.0 && xi < sc.t_final()) {
        return Err(Error::InvalidInput(format!(
            "xi must lie in (0, T) = (0, {}), got {xi}",
            sc.t_final()
        )));
    }
    let scaled = (0..sc.n_modes())
        .into_par_iter()
        .map(|n| Ok(sc.lambda(n) * delta_n(xi, n, sc)?.abs()))
        .collect::<Result<Vec<f64>>>()?;
    let (mode, conditioning) = scaled
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (n, v)| if v < best.1 { (n, v) } else { best });
    Ok(XiReport {
        xi,
        admissible: conditioning > tol,
        conditioning,
        mode,
        tol,
    })
}

/// Fails with `InadmissibleXi` when some λₙ|Δₙ(ξ)| ≤ tol.
pub fn p1_admissibility(xi: f64, sc: &Scenario, tol: f64) -> Result<XiReport> {
    let r = p1_distance(xi, sc, tol)?;
    if !r.admissible {
        return Err(Error::InadmissibleXi {
            xi,
            mode: r.mode,
            scaled: r.conditioning,
        });
    }
    Ok(r)
}

/// Zeros of Δₙ on (0, T), located by a uniform scan with `samples` points and
/// bisection.
pub fn delta_zeros(n: usize, sc: &Scenario, samples: usize) -> Result<Vec<f64>> {
    let tf = sc.t_final();
    let r = sc.mode_response(n)?;
    let f = |t: f64| r.unit_source_value(t);
    let ts: Vec<f64> = (1..samples).map(|i| tf * i as f64 / samples as f64).collect();
    let vs = ts.iter().map(|&t| f(t)).collect::<Result<Vec<f64>>>()?;
    let mut zeros = Vec::new();
    for i in 0..ts.len() - 1 {
        if vs[i] * vs[i + 1] < 0.0 {
            let (mut lo, mut hi, mut flo) = (ts[i], ts[i + 1], vs[i]);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if hi - lo <= 1e-15 * tf {
                    break;
                }
                let fm = f(mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
    }
    Ok(zeros)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_at_origin() {
        let p = RhoParams::new(1.5, -2.0).unwrap();
        assert!((rho(0.0, p).unwrap() + 1.0).abs() < 1e-14);
        let p = RhoParams::new(1.3, 0.5).unwrap();
        assert!((rho(0.0, p).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn large_argument_law() {
        let p = RhoParams::new(1.5, -2.0).unwrap();
        let v = 1e5 * rho(1e5, p).unwrap();
        assert!((v - 0.564_189_6).abs() < 0.01 * 0.564_189_6, "{v}");
    }

    #[test]
    fn negative_gamma_below_minus_one_has_a_root() {
        let p = RhoParams::new(1.5, -2.0).unwrap();
        let r = find_roots(p, 100.0, 1000).unwrap();
        assert!(!r.roots.is_empty());
        for root in &r.roots {
            assert!(root.residual <= 1e-11, "{root:?}");
        }
        assert!(r.c1_empirical.unwrap() > 0.0);
    }

    #[test]
    fn mu_constants_at_three_halves() {
        let (m1, m2, m3) = mu_constants(1.5).unwrap();
        let sp = PI.sqrt();
        assert!((m1 - 1.0 / (2.0 * sp)).abs() < 1e-14);
        assert!((m2 - 2.0 * m1).abs() < 1e-14);
        assert!((m3 - 3.0 / (4.0 * sp)).abs() < 1e-14);
    }

    #[test]
    fn first_branch_of_bound() {
        let p = RhoParams::new(1.4, 1.0).unwrap();
        let c = contour_constants(p, 0.75 * PI, true).unwrap();
        assert!((c.first_branch - 2f64.sqrt()).abs() < 1e-12);
        assert!(c.nu1 > 0.0 && c.nu2 > 0.0 && c.nu3 > 0.0);
    }

    #[test]
    fn theta_outside_sector_is_rejected() {
        let p = RhoParams::new(1.5, 1.0).unwrap();
        assert!(contour_constants(p, 0.7 * PI, true).is_err());
        assert!(eta_bound(RhoParams::new(1.5, -1.0).unwrap(), 0.9 * PI).is_err());
    }

    #[test]
    fn nu3_fallback_is_logged() {
        // θ(1 + 1/α) > 3π/2 makes the written integrand grow on the rays
        let p = RhoParams::new(1.5, 1.0).unwrap();
        let theta = 0.95 * PI;
        assert!(matches!(
            contour_constants(p, theta, false),
            Err(Error::DivergentContour { constant: "nu3", .. })
        ));
        let c = contour_constants(p, theta, true).unwrap();
        assert_eq!(c.nu3_form, Nu3Form::Reduced);
    }

    #[test]
    fn empty_root_list_is_admissible() {
        let es = Eigensystem::dirichlet_laplacian_1d(1.0, 4).unwrap();
        let rr = RootReport {
            params: RhoParams::new(1.5, 1.0).unwrap(),
            roots: vec![],
            eta_max: 1e3,
            scan_resolution: 1000,
            c1_empirical: None,
        };
        let r = lambda_admissibility(1.0, &es, &rr, 1.5, 1e-6).unwrap();
        assert!(r.admissible && r.min_distance.is_infinite());
    }

    #[test]
    fn horizon_on_lambda_is_rejected() {
        let p = RhoParams::new(1.5, -2.0).unwrap();
        let rr = find_roots(p, 100.0, 1000).unwrap();
        let es = Eigensystem::dirichlet_laplacian_1d(1.0, 4).unwrap();
        let t = (rr.roots[0].eta / es.lambda(0)).powf(1.0 / 1.5);
        match lambda_admissibility(t, &es, &rr, 1.5, 1e-6) {
            Err(Error::InadmissibleT { mode, distance, .. }) => {
                assert_eq!(mode, 0);
                assert!(distance < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }
}
