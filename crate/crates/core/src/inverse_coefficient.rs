//! Recovery of p(t) in F(t) = p(t)f from the scalar observation
//! h(t) = Φ[u(t)].
//!
//! Applying Φ to the equation and inserting the mode solutions gives a
//! linear second-kind equation for p,
//!
//!   Φ[f]p(t) + ∫₀ᵗ K₁(t−s)p(s)ds
//!     + Σ λₙfₙΦ[eₙ] (Pₙ⁽²⁾(t)∫₀ᵀk_{α,α}(T−s)p(s)ds + Pₙ⁽³⁾(t)∫₀ᵀk_{α,α−1}(T−s)p(s)ds)
//!   = ∂ₜᵅh(t) + Σ λₙΦ[eₙ](Pₙ⁽²⁾(t)φₙ + Pₙ⁽³⁾(t)ψₙ),
//!
//! with K₁(x) = −Σ λₙfₙΦ[eₙ] x^{α−1}E_{α,α}(−λₙxᵅ). It is discretized at
//! the grid nodes with the product rule of the forward solver.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fvp_core::{solve_direct, Scenario, Source, SpectralTrajectory, TimeSeries};
use crate::operator_models::{CoefficientVector, FunctionalSpec};
use crate::quadrature::composite_gauss_legendre;
use crate::specfun::{gamma_real, KernelEvaluator};

/// Fewest intervals accepted by the Caputo scheme.
pub const CAPUTO_MIN_INTERVALS: usize = 10;

/// Condition estimates above this are treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

/// Weights of the second derivative at `x0` from values at `xs`
/// (Fornberg's recursion).
fn second_derivative_weights(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![[0.0f64; 3]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(2);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[2]).collect()
}

/// h″ at every node: three-point differences inside, four-point one-sided
/// formulas at both ends.
fn second_derivative(t: &[f64], h: &[f64]) -> Vec<f64> {
    let m = t.len() - 1;
    (0..=m)
        .map(|i| {
            let range = match i {
                0 => 0..4,
                i if i == m => m - 3..m + 1,
                i => i - 1..i + 2,
            };
            let w = second_derivative_weights(t[i], &t[range.clone()]);
            w.iter().zip(&h[range]).map(|(a, b)| a * b).sum()
        })
        .collect()
}

/// ∂ₜᵅh = t^{1−α}/Γ(2−α) ⋆ h″ for 1 < α < 2. h″ is approximated by
/// finite differences and interpolated linearly; the power kernel is
/// integrated exactly.
pub fn caputo_derivative(h: &TimeSeries, alpha: f64) -> Result<TimeSeries> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("Caputo scheme needs 1 < alpha < 2, got {alpha}")));
    }
    if h.len() < CAPUTO_MIN_INTERVALS + 1 {
        return Err(Error::GridTooCoarse {
            nodes: h.len(),
            required: CAPUTO_MIN_INTERVALS + 1,
        });
    }
    let t = &h.t;
    let d2 = second_derivative(t, &h.values);
    let b = 2.0 - alpha;
    let g1 = gamma_real(b + 1.0)?;
    let g2 = gamma_real(b + 2.0)?;
    let values = (0..t.len())
        .map(|i| {
            let ti = t[i];
            let mut acc = 0.0;
            for j in 0..i {
                let (x_hi, x_lo) = (ti - t[j], ti - t[j + 1]);
                let (g_hi, g_lo) = (x_hi.powf(b) / g1, x_lo.powf(b) / g1);
                let (h_hi, h_lo) = (x_hi.powf(b + 1.0) / g2, x_lo.powf(b + 1.0) / g2);
                let a = g_hi - g_lo;
                let w = (h_hi - h_lo - (x_hi - x_lo) * g_lo) / (t[j + 1] - t[j]);
                acc += d2[j] * (a - w) + d2[j + 1] * w;
            }
            acc
        })
        .collect();
    TimeSeries::new(t.clone(), values)
}

/// h(t) = Φ[u(t)] = Σ uₙ(t)Φ[eₙ].
pub fn observe(sol: &SpectralTrajectory, functional: &FunctionalSpec) -> TimeSeries {
    let phi = functional.coefficients();
    let values = (0..sol.t.len())
        .map(|i| sol.modes.iter().zip(phi).map(|(m, c)| m[i] * c).sum())
        .collect();
    TimeSeries {
        t: sol.t.clone(),
        values,
    }
}

/// ∂ₜᵅh from the equation itself: p(t)Φ[f] − Σ λₙuₙ(t)Φ[eₙ].
pub fn observe_caputo(
    sc: &Scenario,
    sol: &SpectralTrajectory,
    p: &TimeSeries,
    f: &CoefficientVector,
    functional: &FunctionalSpec,
) -> Result<TimeSeries> {
    if p.len() != sol.t.len() {
        return Err(Error::InvalidInput("p and the trajectory use different grids".into()));
    }
    let phi = functional.coefficients();
    let phi_f = functional.apply(f.values());
    let values = (0..sol.t.len())
        .map(|i| {
            let au: f64 = (0..sol.modes.len())
                .map(|n| sc.lambda(n) * sol.modes[n][i] * phi[n])
                .sum();
            p.values[i] * phi_f - au
        })
        .collect();
    TimeSeries::new(sol.t.clone(), values)
}

/// Observation data, either h itself or its Caputo derivative.
#[derive(Debug, Clone)]
pub enum ObservationData {
    H(TimeSeries),
    CaputoH(TimeSeries),
}

#[derive(Debug, Clone)]
pub struct IP2Problem {
    scenario: Scenario,
    f: CoefficientVector,
    functional: FunctionalSpec,
    dh_alpha: TimeSeries,
    phi_f: f64,
}

impl IP2Problem {
    /// Checks Φ[f] against the margin and converts h to ∂ₜᵅh if needed.
    /// The scenario supplies α, γ, the operator, the grid, φ and ψ.
    pub fn new(
        scenario: Scenario,
        f: CoefficientVector,
        functional: FunctionalSpec,
        data: ObservationData,
    ) -> Result<Self> {
        let n = scenario.n_modes();
        if f.len() != n {
            return Err(Error::InvalidInput(format!("f needs {n} coefficients, got {}", f.len())));
        }
        if functional.len() < n {
            return Err(Error::InvalidInput(format!(
                "functional has {} coefficients, need {n}",
                functional.len()
            )));
        }
        let phi_f = functional.apply(f.values());
        let margin = scenario.tolerances().functional_margin;
        if !(phi_f.abs() >= margin) {
            return Err(Error::FunctionalDegenerate { value: phi_f, margin });
        }
        let dh_alpha = match data {
            ObservationData::H(h) => caputo_derivative(&h, scenario.alpha())?,
            ObservationData::CaputoH(d) => d,
        };
        let grid = scenario.grid().nodes();
        let on_grid = dh_alpha.len() == grid.len()
            && dh_alpha
                .t
                .iter()
                .zip(grid)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * scenario.t_final());
        if !on_grid {
            return Err(Error::InvalidInput("observation must be sampled on the scenario grid".into()));
        }
        Ok(Self {
            scenario,
            f,
            functional,
            dh_alpha,
            phi_f,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn f(&self) -> &CoefficientVector {
        &self.f
    }

    pub fn functional(&self) -> &FunctionalSpec {
        &self.functional
    }

    pub fn dh_alpha(&self) -> &TimeSeries {
        &self.dh_alpha
    }

    /// Φ[f]
    pub fn phi_f(&self) -> f64 {
        self.phi_f
    }

    /// The same problem with other Caputo data.
    pub fn with_dh_alpha(&self, d: TimeSeries) -> Result<Self> {
        Self::new(
            self.scenario.clone(),
            self.f.clone(),
            self.functional.clone(),
            ObservationData::CaputoH(d),
        )
    }
}

/// One mode's contribution to the two terminal terms.
#[derive(Debug, Clone, Serialize)]
pub struct RankTerm {
    pub mode: usize,
    /// λₙfₙΦ[eₙ]Pₙ⁽²⁾(tᵢ)
    pub a2: Vec<f64>,
    /// nodal weights of ∫₀ᵀk_{α,α}(T−s)p(s)ds
    pub w2: Vec<f64>,
    /// λₙfₙΦ[eₙ]Pₙ⁽³⁾(tᵢ)
    pub a3: Vec<f64>,
    /// nodal weights of ∫₀ᵀk_{α,α−1}(T−s)p(s)ds
    pub w3: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IP2Kernels {
    /// K₁ at the node distances tᵢ − t₀
    pub k1: TimeSeries,
    /// row i: nodal weights of ∫₀^{tᵢ} K₁(tᵢ−s)p(s)ds
    pub volterra: Vec<Vec<f64>>,
    pub rank_terms: Vec<RankTerm>,
}

/// Builds K₁, its product-rule weights and the terminal rank terms.
pub fn ip2_kernels(p: &IP2Problem) -> Result<IP2Kernels> {
    let sc = &p.scenario;
    let nodes = sc.grid().nodes();
    let len = nodes.len();
    let phi = p.functional.coefficients();
    let coeff: Vec<f64> = (0..sc.n_modes())
        .map(|n| sc.lambda(n) * p.f.get(n) * phi[n])
        .collect();
    let active: Vec<usize> = (0..sc.n_modes()).filter(|&n| coeff[n] != 0.0).collect();
    let per_mode = active
        .par_iter()
        .map(|&n| {
            let r = sc.mode_response(n)?;
            let c = coeff[n];
            let rows: Vec<Vec<f64>> = (0..len)
                .map(|i| r.weights_aa(i).iter().map(|w| -c * w).collect())
                .collect();
            let term = RankTerm {
                mode: n,
                a2: r.p2_nodes().iter().map(|v| c * v).collect(),
                w2: r.weights_aa(len - 1),
                a3: r.p3_nodes().iter().map(|v| c * v).collect(),
                w3: r.weights_am1_terminal().to_vec(),
            };
            Ok((rows, term))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut volterra: Vec<Vec<f64>> = (0..len).map(|i| vec![0.0; i + 1]).collect();
    let mut rank_terms = Vec::with_capacity(per_mode.len());
    for (rows, term) in per_mode {
        for (acc, row) in volterra.iter_mut().zip(rows) {
            for (a, w) in acc.iter_mut().zip(row) {
                *a += w;
            }
        }
        rank_terms.push(term);
    }
    let k = sc.kernels();
    let k1 = nodes
        .iter()
        .map(|&t| {
            active.iter().try_fold(0.0, |s, &n| {
                Ok::<f64, Error>(s - coeff[n] * k.pow_am1(sc.lambda(n), t - nodes[0])?)
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(IP2Kernels {
        k1: TimeSeries::new(nodes.to_vec(), k1)?,
        volterra,
        rank_terms,
    })
}

/// The discrete system A p = b, scaled by 1/Φ[f] so that A = I + (…).
#[derive(Debug, Clone)]
pub struct IP2System {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub kernels: IP2Kernels,
}

pub fn assemble_system(p: &IP2Problem) -> Result<IP2System> {
    let sc = &p.scenario;
    let len = sc.grid().len();
    let kernels = ip2_kernels(p)?;
    let inv = 1.0 / p.phi_f;
    let mut a = DMatrix::<f64>::identity(len, len);
    for (i, row) in kernels.volterra.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            a[(i, j)] += inv * w;
        }
    }
    for term in &kernels.rank_terms {
        for i in 0..len {
            let (c2, c3) = (inv * term.a2[i], inv * term.a3[i]);
            for j in 0..len {
                a[(i, j)] += c2 * term.w2[j] + c3 * term.w3[j];
            }
        }
    }
    let phi = p.functional.coefficients();
    let data_terms = (0..sc.n_modes())
        .into_par_iter()
        .map(|n| {
            let (fp, fs) = (sc.phi().get(n), sc.psi().get(n));
            if (fp == 0.0 && fs == 0.0) || phi[n] == 0.0 {
                return Ok(None);
            }
            let r = sc.mode_response(n)?;
            let c = sc.lambda(n) * phi[n];
            Ok(Some(
                r.p2_nodes()
                    .iter()
                    .zip(r.p3_nodes())
                    .map(|(p2, p3)| c * (p2 * fp + p3 * fs))
                    .collect::<Vec<f64>>(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rhs = DVector::from_column_slice(&p.dh_alpha.values);
    for term in data_terms.into_iter().flatten() {
        for (r, v) in rhs.iter_mut().zip(term) {
            *r += v;
        }
    }
    rhs *= inv;
    Ok(IP2System {
        matrix: a,
        rhs,
        kernels,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct IP2Solution {
    pub p: TimeSeries,
    /// σ_max/σ_min of the assembled matrix
    pub condition: f64,
    /// ‖Ap − b‖∞
    pub residual: f64,
    pub phi_f: f64,
}

/// Assembles and solves the discrete equation by LU with partial pivoting.
pub fn solve_p(p: &IP2Problem) -> Result<IP2Solution> {
    let sys = assemble_system(p)?;
    let sv = sys.matrix.singular_values();
    let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < SINGULAR_CONDITION) {
        return Err(Error::SingularSystem { condition });
    }
    let x = sys
        .matrix
        .clone()
        .lu()
        .solve(&sys.rhs)
        .ok_or(Error::SingularSystem { condition })?;
    let residual = (&sys.matrix * &x - &sys.rhs).amax();
    Ok(IP2Solution {
        p: TimeSeries::new(p.scenario.grid().nodes().to_vec(), x.iter().copied().collect())?,
        condition,
        residual,
        phi_f: p.phi_f,
    })
}

/// ∂ₜᵅh for a separable source p(t)f, computed on a grid `refine` times
/// finer than the scenario grid and restricted to it.
pub fn synthesize_caputo_data(
    sc: &Scenario,
    f: &CoefficientVector,
    p: impl Fn(f64) -> f64,
    functional: &FunctionalSpec,
    refine: usize,
) -> Result<TimeSeries> {
    if refine == 0 {
        return Err(Error::InvalidInput("refinement factor must be positive".into()));
    }
    let fine_grid = sc.grid().refined(refine)?;
    let p_fine = TimeSeries::sample(&fine_grid, &p)?;
    let fine = sc.with_grid(
        fine_grid,
        Source::Separable {
            f: f.clone(),
            p: p_fine.clone(),
        },
    )?;
    let sol = solve_direct(&fine)?;
    Ok(observe_caputo(&fine, &sol.trajectory, &p_fine, f, functional)?.every(refine))
}

/// ∂ₜᵅh produced by the forward map for the given p on the scenario grid.
pub fn forward_caputo(p: &IP2Problem, p_values: &TimeSeries) -> Result<TimeSeries> {
    let sc = p.scenario.with_source(Source::Separable {
        f: p.f.clone(),
        p: p_values.clone(),
    })?;
    let sol = solve_direct(&sc)?;
    observe_caputo(&sc, &sol.trajectory, p_values, &p.f, &p.functional)
}

/// sup|forward(p) − ∂ₜᵅh| / sup|∂ₜᵅh|.
pub fn closed_loop_defect(p: &IP2Problem, sol: &IP2Solution) -> Result<f64> {
    let d = forward_caputo(p, &sol.p)?;
    let diff = d
        .values
        .iter()
        .zip(&p.dh_alpha.values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(diff / p.dh_alpha.sup_norm().max(1e-300))
}

/// ‖p‖∞ / ‖∂ₜᵅh‖∞ for one solved problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StabilityRatio {
    Ratio { value: f64, p_norm: f64, data_norm: f64 },
    /// both norms vanish
    Vacuous,
}

/// The ratio, with `ZeroData` when the data vanish but p does not.
pub fn stability_ratio(p: &IP2Problem, sol: &IP2Solution) -> Result<StabilityRatio> {
    let p_norm = sol.p.sup_norm();
    let data_norm = p.dh_alpha.sup_norm();
    let tol = 1e-12 * (1.0 + p_norm);
    if data_norm == 0.0 {
        if p_norm > tol {
            return Err(Error::ZeroData { p_norm });
        }
        return Ok(StabilityRatio::Vacuous);
    }
    Ok(StabilityRatio::Ratio {
        value: p_norm / data_norm,
        p_norm,
        data_norm,
    })
}

/// Ratios over a family of p*, each recovered from synthesized data.
#[derive(Debug, Clone, Serialize)]
pub struct StabilitySweep {
    pub labels: Vec<String>,
    pub ratios: Vec<f64>,
    pub recovery_errors: Vec<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// max_ratio / min_ratio
    pub spread: f64,
}

/// A named profile p*(t) on [0, T].
pub type Profile = (String, Box<dyn Fn(f64) -> f64 + Sync>);

/// Ten smooth profiles used for the stability sweep.
pub fn default_profiles(t_final: f64) -> Vec<Profile> {
    let pi = std::f64::consts::PI;
    let s = move |t: f64| t / t_final;
    vec![
        ("constant".into(), Box::new(|_| 1.0)),
        ("half_sine".into(), Box::new(move |t| 1.0 + 0.5 * (pi * s(t)).sin())),
        ("full_sine".into(), Box::new(move |t| 1.0 + 0.5 * (2.0 * pi * s(t)).sin())),
        ("cosine".into(), Box::new(move |t| (pi * s(t)).cos())),
        ("linear".into(), Box::new(move |t| 1.0 + s(t))),
        ("quadratic".into(), Box::new(move |t| s(t) * s(t))),
        ("decay".into(), Box::new(move |t| (-2.0 * s(t)).exp())),
        ("growth".into(), Box::new(move |t| 0.5 * (s(t)).exp())),
        ("bump".into(), Box::new(move |t| (-20.0 * (s(t) - 0.5).powi(2)).exp())),
        ("negative".into(), Box::new(move |t| -2.0 + 0.3 * s(t))),
    ]
}

/// Recovers each profile from data synthesized on a twice finer grid.
pub fn stability_sweep(base: &IP2Problem, profiles: &[Profile]) -> Result<StabilitySweep> {
    let sc = &base.scenario;
    let mut labels = Vec::new();
    let mut ratios = Vec::new();
    let mut recovery_errors = Vec::new();
    for (label, prof) in profiles {
        let d = synthesize_caputo_data(sc, &base.f, prof, &base.functional, 2)?;
        let prob = base.with_dh_alpha(d)?;
        let sol = solve_p(&prob)?;
        let truth = TimeSeries::sample(sc.grid(), prof)?;
        let err = sol
            .p
            .values
            .iter()
            .zip(&truth.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / truth.sup_norm().max(1e-300);
        if let StabilityRatio::Ratio { value, .. } = stability_ratio(&prob, &sol)? {
            labels.push(label.clone());
            ratios.push(value);
            recovery_errors.push(err);
        }
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(StabilitySweep {
        labels,
        ratios,
        recovery_errors,
        min_ratio,
        max_ratio,
        spread: max_ratio / min_ratio,
    })
}

/// Constants of the forward bound
/// ‖∂ₜᵅh‖∞ ≤ (|Φ[f]| + c_volterra + c_p2 + c_p3)‖p‖∞ for φ = ψ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForwardBound {
    pub phi_f: f64,
    /// Σ|λₙfₙΦ[eₙ]| ∫₀ᵀ|k_{α,α}|
    pub c_volterra: f64,
    /// supₜ Σ|λₙfₙΦ[eₙ]Pₙ⁽²⁾(t)| ∫₀ᵀ|k_{α,α}|
    pub c_p2: f64,
    /// supₜ Σ|λₙfₙΦ[eₙ]Pₙ⁽³⁾(t)| ∫₀ᵀ|k_{α,α−1}|
    pub c_p3: f64,
}

impl ForwardBound {
    pub fn total(&self) -> f64 {
        self.phi_f.abs() + self.c_volterra + self.c_p2 + self.c_p3
    }
}

/// ∫₀ᵀ|k| from the total variation of the primitive G on a fine grid that
/// is clustered at the origin.
fn abs_kernel_integral(g: impl Fn(f64) -> Result<f64>, t_final: f64) -> Result<f64> {
    let n = 8000;
    let mut prev = g(0.0)?;
    let mut total = 0.0;
    for i in 1..=n {
        let x = t_final * (i as f64 / n as f64).powi(2);
        let v = g(x)?;
        total += (v - prev).abs();
        prev = v;
    }
    Ok(total)
}

pub fn forward_bound(p: &IP2Problem) -> Result<ForwardBound> {
    let sc = &p.scenario;
    let tf = sc.t_final();
    let k: &KernelEvaluator = sc.kernels();
    let phi = p.functional.coefficients();
    let rows = (0..sc.n_modes())
        .into_par_iter()
        .map(|n| {
            let lambda = sc.lambda(n);
            let c = (lambda * p.f.get(n) * phi[n]).abs();
            if c == 0.0 {
                return Ok((0.0, Vec::new(), Vec::new()));
            }
            let i_aa = abs_kernel_integral(|x| k.pow_a(lambda, x), tf)?;
            let i_am1 = abs_kernel_integral(|x| k.pow_am1(lambda, x), tf)?;
            let r = sc.mode_response(n)?;
            let a2: Vec<f64> = r.p2_nodes().iter().map(|v| c * v.abs() * i_aa).collect();
            let a3: Vec<f64> = r.p3_nodes().iter().map(|v| c * v.abs() * i_am1).collect();
            Ok((c * i_aa, a2, a3))
        })
        .collect::<Result<Vec<_>>>()?;
    let len = sc.grid().len();
    let mut s2 = vec![0.0; len];
    let mut s3 = vec![0.0; len];
    let mut c_volterra = 0.0;
    for (cv, a2, a3) in rows {
        c_volterra += cv;
        for i in 0..a2.len() {
            s2[i] += a2[i];
            s3[i] += a3[i];
        }
    }
    Ok(ForwardBound {
        phi_f: p.phi_f,
        c_volterra,
        c_p2: s2.iter().copied().fold(0.0, f64::max),
        c_p3: s3.iter().copied().fold(0.0, f64::max),
    })
}

/// ∫₀ᵗK₁ by composite Gauss-Legendre after the substitution x = t·u²,
/// independent of the product rule. Used to cross-check the weights.
pub fn k1_integral_quadrature(p: &IP2Problem, t: f64) -> Result<f64> {
    let sc = &p.scenario;
    let phi = p.functional.coefficients();
    let k = sc.kernels();
    let err = std::cell::RefCell::new(None);
    let v = composite_gauss_legendre(
        |u| {
            let x = t * u * u;
            let mut s = 0.0;
            for n in 0..sc.n_modes() {
                let c = sc.lambda(n) * p.f.get(n) * phi[n];
                if c != 0.0 {
                    match k.pow_am1(sc.lambda(n), x) {
                        Ok(v) => s -= c * v,
                        Err(e) => *err.borrow_mut() = Some(e),
                    }
                }
            }
            2.0 * t * u * s
        },
        0.0,
        1.0,
        64,
        20,
    );
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(m: usize, f: impl Fn(f64) -> f64) -> TimeSeries {
        let t: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
        let v = t.iter().map(|&s| f(s)).collect();
        TimeSeries::new(t, v).unwrap()
    }

    #[test]
    fn affine_functions_are_annihilated() {
        for h in [series(64, |t| t), series(64, |t| 3.0 * t + 5.0)] {
            let d = caputo_derivative(&h, 1.5).unwrap();
            assert!(d.sup_norm() <= 1e-12, "{}", d.sup_norm());
        }
    }

    #[test]
    fn quadratic_plus_affine_matches_power_rule() {
        let a = 1.5;
        let g = gamma_real(3.0 - a).unwrap();
        let d = caputo_derivative(&series(200, |t| t * t + 3.0 * t + 5.0), a).unwrap();
        for (t, v) in d.t.iter().zip(&d.values) {
            assert!((v - 2.0 * t.powf(2.0 - a) / g).abs() < 1e-9);
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let r = caputo_derivative(&series(5, |t| t), 1.5);
        assert!(matches!(r, Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn fornberg_weights_on_uniform_stencils() {
        let w = second_derivative_weights(0.0, &[-1.0, 0.0, 1.0]);
        assert_eq!(w, vec![1.0, -2.0, 1.0]);
        let w = second_derivative_weights(0.0, &[0.0, 1.0, 2.0, 3.0]);
        let expect = [2.0, -5.0, 4.0, -1.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
