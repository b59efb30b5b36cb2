//! Mode-wise solution of the fractional final-value problem
//!
//!   ∂ₜᵅuₙ + λₙuₙ = Fₙ(t),  γuₙ(0) + uₙ(T) = φₙ,  uₙ′(T) = ψₙ,
//!
//! with product integration for the source convolutions, and the
//! diagnostics that check a computed trajectory against the equation.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator_models::{CoefficientVector, Eigensystem};
use crate::rho_zeros::{default_roots, lambda_admissibility, LambdaReport, RhoParams, RootReport};
use crate::specfun::{gamma_real, KernelEvaluator};

/// Guards and admissibility thresholds shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative distance of T to Λ below which T is rejected.
    pub t_admissibility: f64,
    /// Mode solves fail when (1 + λTᵅ)|ρ(λTᵅ)| falls to this value.
    pub rho_guard: f64,
    /// ξ is rejected when min λₙ|Δₙ(ξ)| falls to this value.
    pub xi_admissibility: f64,
    /// Per-mode floor on λₙ|Δₙ(ξ)| applied in the source reconstruction.
    pub xi_guard: f64,
    /// Smallest accepted |Φ[f]|.
    pub functional_margin: f64,
    /// Largest accepted ℓ² terminal-condition defect in verification mode.
    pub terminal_defect: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            t_admissibility: 1e-6,
            rho_guard: 1e-12,
            xi_admissibility: 1e-6,
            xi_guard: 1e-8,
            functional_margin: 1e-8,
            terminal_defect: 1e-6,
        }
    }
}

/// Time nodes 0 = t₀ < … < t_M = T.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    /// Grading exponent r of tᵢ = T(i/M)^r; 1 for a uniform grid.
    grading: f64,
}

impl TimeGrid {
    pub fn uniform(t_final: f64, intervals: usize) -> Result<Self> {
        Self::graded(t_final, intervals, 1.0)
    }

    pub fn graded(t_final: f64, intervals: usize, grading: f64) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidInput(format!("T must be positive, got {t_final}")));
        }
        if intervals < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 intervals, got {intervals}")));
        }
        if !(grading >= 1.0) || !grading.is_finite() {
            return Err(Error::InvalidInput(format!("grading exponent must be >= 1, got {grading}")));
        }
        let m = intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals)
            .map(|i| t_final * (i as f64 / m).powf(grading))
            .collect();
        nodes[intervals] = t_final;
        Ok(Self { nodes, grading })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of intervals M.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn t_final(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn is_uniform(&self) -> bool {
        self.grading == 1.0
    }

    /// The same grid with every interval split into `factor` pieces.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::graded(self.t_final(), self.intervals() * factor, self.grading)
    }
}

/// Scalar samples on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if t.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "time series has {} nodes but {} values",
                t.len(),
                values.len()
            )));
        }
        if values.iter().chain(&t).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("time series contains non-finite entries".into()));
        }
        Ok(Self { t, values })
    }

    pub fn sample(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let t = grid.nodes().to_vec();
        let values = t.iter().map(|&s| f(s)).collect();
        Self::new(t, values)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Keeps every `stride`-th node.
    pub fn every(&self, stride: usize) -> Self {
        Self {
            t: self.t.iter().step_by(stride).copied().collect(),
            values: self.values.iter().step_by(stride).copied().collect(),
        }
    }

    fn on_grid(&self, grid: &TimeGrid) -> bool {
        self.t.len() == grid.len()
            && self
                .t
                .iter()
                .zip(grid.nodes())
                .all(|(a, b)| (a - b).abs() <= 1e-12 * grid.t_final())
    }
}

/// One trajectory per mode on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralTrajectory {
    pub t: Vec<f64>,
    /// modes[n][i] = uₙ(tᵢ)
    pub modes: Vec<Vec<f64>>,
}

impl SpectralTrajectory {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn mode(&self, n: usize) -> TimeSeries {
        TimeSeries {
            t: self.t.clone(),
            values: self.modes[n].clone(),
        }
    }

    /// Coefficient vector at node i.
    pub fn at_node(&self, i: usize) -> Vec<f64> {
        self.modes.iter().map(|m| m[i]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.modes
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Right-hand side F(t) = Σ Fₙ(t)eₙ.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Zero,
    /// Fₙ at the grid nodes, one row per mode.
    PerMode(Vec<Vec<f64>>),
    /// F(t) = p(t) f with p sampled on the grid.
    Separable { f: CoefficientVector, p: TimeSeries },
    /// F(t) = f.
    Constant(CoefficientVector),
}

/// Input data of a direct solve.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub alpha: f64,
    pub gamma: f64,
    pub eigensystem: Eigensystem,
    pub grid: TimeGrid,
    pub phi: CoefficientVector,
    pub psi: CoefficientVector,
    pub source: Source,
    pub tolerances: Tolerances,
}

/// A validated problem instance. T has been checked against Λ.
#[derive(Debug, Clone)]
pub struct Scenario {
    alpha: f64,
    gamma: f64,
    es: Eigensystem,
    grid: Arc<TimeGrid>,
    phi: CoefficientVector,
    psi: CoefficientVector,
    source: Source,
    tolerances: Tolerances,
    kernels: Arc<KernelEvaluator>,
    roots: Arc<RootReport>,
    lambda_report: LambdaReport,
    responses: Arc<Vec<OnceLock<Result<Arc<ModeResponse>>>>>,
}

impl Scenario {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        let params = RhoParams::new(spec.alpha, spec.gamma)?;
        let roots = default_roots(params)?;
        Self::with_roots(spec, roots)
    }

    /// Builds a scenario against a given root report.
    pub fn with_roots(spec: ScenarioSpec, roots: Arc<RootReport>) -> Result<Self> {
        let n = spec.eigensystem.n_modes();
        if spec.phi.len() != n || spec.psi.len() != n {
            return Err(Error::InvalidInput(format!(
                "phi and psi need {n} coefficients, got {} and {}",
                spec.phi.len(),
                spec.psi.len()
            )));
        }
        RhoParams::new(spec.alpha, spec.gamma)?;
        validate_source(&spec.source, &spec.grid, n)?;
        let t_final = spec.grid.t_final();
        let lambda_report = lambda_admissibility(
            t_final,
            &spec.eigensystem,
            &roots,
            spec.alpha,
            spec.tolerances.t_admissibility,
        )?;
        Ok(Self {
            alpha: spec.alpha,
            gamma: spec.gamma,
            kernels: Arc::new(KernelEvaluator::new(spec.alpha)?),
            responses: Arc::new((0..n).map(|_| OnceLock::new()).collect()),
            es: spec.eigensystem,
            grid: Arc::new(spec.grid),
            phi: spec.phi,
            psi: spec.psi,
            source: spec.source,
            tolerances: spec.tolerances,
            roots,
            lambda_report,
        })
    }

    /// The same operator, horizon and grid with other data. Mode responses
    /// are shared with `self`.
    pub fn with_data(&self, phi: CoefficientVector, psi: CoefficientVector, source: Source) -> Result<Self> {
        let n = self.n_modes();
        if phi.len() != n || psi.len() != n {
            return Err(Error::InvalidInput(format!("phi and psi need {n} coefficients")));
        }
        validate_source(&source, &self.grid, n)?;
        Ok(Self {
            phi,
            psi,
            source,
            ..self.clone()
        })
    }

    /// The same problem on another grid, with a source sampled on that grid.
    pub fn with_grid(&self, grid: TimeGrid, source: Source) -> Result<Self> {
        let spec = ScenarioSpec {
            alpha: self.alpha,
            gamma: self.gamma,
            eigensystem: self.es.clone(),
            grid,
            phi: self.phi.clone(),
            psi: self.psi.clone(),
            source,
            tolerances: self.tolerances,
        };
        Self::with_roots(spec, self.roots.clone())
    }

    pub fn with_source(&self, source: Source) -> Result<Self> {
        self.with_data(self.phi.clone(), self.psi.clone(), source)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t_final(&self) -> f64 {
        self.grid.t_final()
    }

    pub fn n_modes(&self) -> usize {
        self.es.n_modes()
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.es.lambda(n)
    }

    pub fn eigensystem(&self) -> &Eigensystem {
        &self.es
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn phi(&self) -> &CoefficientVector {
        &self.phi
    }

    pub fn psi(&self) -> &CoefficientVector {
        &self.psi
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    pub fn kernels(&self) -> &KernelEvaluator {
        &self.kernels
    }

    pub fn roots(&self) -> &RootReport {
        &self.roots
    }

    pub fn lambda_report(&self) -> &LambdaReport {
        &self.lambda_report
    }

    /// Fₙ at the grid nodes.
    pub fn source_nodal(&self, n: usize) -> Vec<f64> {
        let len = self.grid.len();
        match &self.source {
            Source::Zero => vec![0.0; len],
            Source::PerMode(rows) => rows[n].clone(),
            Source::Separable { f, p } => p.values.iter().map(|v| v * f.get(n)).collect(),
            Source::Constant(f) => vec![f.get(n); len],
        }
    }

    /// Per-mode constants and kernel tables, computed once per scenario family.
    pub fn mode_response(&self, n: usize) -> Result<Arc<ModeResponse>> {
        if n >= self.n_modes() {
            return Err(Error::InvalidInput(format!("mode {n} out of range")));
        }
        self.responses[n]
            .get_or_init(|| {
                ModeResponse::new(
                    self.kernels.clone(),
                    self.grid.clone(),
                    self.lambda(n),
                    self.gamma,
                    self.tolerances.rho_guard,
                    n,
                )
                .map(Arc::new)
            })
            .clone()
    }
}

fn validate_source(source: &Source, grid: &TimeGrid, n: usize) -> Result<()> {
    match source {
        Source::Zero => Ok(()),
        Source::PerMode(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != grid.len()) {
                return Err(Error::InvalidInput(format!(
                    "per-mode source needs {n} rows of {} values",
                    grid.len()
                )));
            }
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("source contains non-finite values".into()));
            }
            Ok(())
        }
        Source::Separable { f, p } => {
            if f.len() != n {
                return Err(Error::InvalidInput(format!("f needs {n} coefficients, got {}", f.len())));
            }
            if !p.on_grid(grid) {
                return Err(Error::InvalidInput("p(t) must be sampled on the scenario grid".into()));
            }
            Ok(())
        }
        Source::Constant(f) => {
            if f.len() != n {
                return Err(Error::InvalidInput(format!("f needs {n} coefficients, got {}", f.len())));
            }
            Ok(())
        }
    }
}

/// The two convolution kernels used by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// t^{α−1}E_{α,α}(−λtᵅ)
    AlphaAlpha,
    /// t^{α−2}E_{α,α−1}(−λtᵅ)
    AlphaAlphaMinusOne,
}

/// G(x) = ∫₀ˣ k(s) ds for the chosen kernel.
fn primitive(k: &KernelEvaluator, kind: KernelKind, lambda: f64, x: f64) -> Result<f64> {
    match kind {
        KernelKind::AlphaAlpha => k.pow_a(lambda, x),
        KernelKind::AlphaAlphaMinusOne => k.pow_am1(lambda, x),
    }
}

/// H(x) = ∫₀ˣ G(s) ds.
fn second_primitive(k: &KernelEvaluator, kind: KernelKind, lambda: f64, x: f64) -> Result<f64> {
    match kind {
        KernelKind::AlphaAlpha => k.pow_ap1(lambda, x),
        KernelKind::AlphaAlphaMinusOne => k.pow_a(lambda, x),
    }
}

/// ∫ₐᵇ k(s) ds, exact through the closed-form primitive.
pub fn kernel_primitive(k: &KernelEvaluator, kind: KernelKind, lambda: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0 <= a && a <= b) {
        return Err(Error::Domain(format!("kernel_primitive needs 0 <= a <= b, got [{a}, {b}]")));
    }
    Ok(primitive(k, kind, lambda, b)? - primitive(k, kind, lambda, a)?)
}

/// Nodal weights of the product trapezoidal rule for ∫₀ᵗ F(s)k(t−s) ds.
///
/// F is interpolated linearly on each panel and integrated against the
/// kernel exactly, using G(x) = ∫₀ˣ k and H(x) = ∫₀ˣ G. `g[j]`, `h[j]` hold
/// G and H at x = t − tⱼ for the nodes tⱼ < t, followed by one entry for
/// x = max(t − t_{last+1}, 0). Returns one weight per entry.
fn trapezoid_weights(nodes: &[f64], t: f64, g: &[f64], h: &[f64]) -> Vec<f64> {
    let panels = g.len() - 1;
    let mut w = vec![0.0; panels + 1];
    for j in 0..panels {
        let step = nodes[j + 1] - nodes[j];
        let x_hi = t - nodes[j];
        let x_lo = (t - nodes[j + 1]).max(0.0);
        let a = g[j] - g[j + 1];
        let b = (h[j] - h[j + 1] - (x_hi - x_lo) * g[j + 1]) / step;
        w[j] += a - b;
        w[j + 1] += b;
    }
    w
}

/// ∫₀ᵗ F(s)k(t−s) ds with F interpolated linearly between nodes and the
/// kernel moments taken exactly. `t` need not be a node; a partial last
/// panel is handled. Runs of equal nodal values are integrated as one
/// block, so a constant F costs a single primitive evaluation and
/// reproduces F·G(t) exactly.
pub fn convolve(
    k: &KernelEvaluator,
    kind: KernelKind,
    lambda: f64,
    nodes: &[f64],
    values: &[f64],
    t: f64,
) -> Result<f64> {
    if nodes.len() != values.len() {
        return Err(Error::InvalidInput("nodes and values differ in length".into()));
    }
    let g = |x: f64| primitive(k, kind, lambda, x);
    let h = |x: f64| second_primitive(k, kind, lambda, x);
    let mut total = 0.0;
    let mut j = 0;
    while j + 1 < nodes.len() && nodes[j] < t {
        let x_hi = t - nodes[j];
        let v = values[j];
        if values[j + 1] == v {
            let mut end = j + 1;
            while end + 1 < nodes.len() && nodes[end] < t && values[end + 1] == v {
                end += 1;
            }
            if v != 0.0 {
                let x_lo = (t - nodes[end]).max(0.0);
                total += v * (g(x_hi)? - g(x_lo)?);
            }
            j = end;
        } else {
            let x_lo = (t - nodes[j + 1]).max(0.0);
            let step = nodes[j + 1] - nodes[j];
            let (g_hi, g_lo) = (g(x_hi)?, g(x_lo)?);
            let a = g_hi - g_lo;
            let b = (h(x_hi)? - h(x_lo)? - (x_hi - x_lo) * g_lo) / step;
            total += values[j] * (a - b) + values[j + 1] * b;
            j += 1;
        }
    }
    Ok(total)
}

/// G and H at the node distances tᵢ − tⱼ, stored as a lattice for uniform
/// grids and as a lower-triangular table otherwise.
#[derive(Debug, Clone)]
enum PrimitiveTable {
    Lattice { g: Vec<f64>, h: Vec<f64> },
    Triangle { g: Vec<Vec<f64>>, h: Vec<Vec<f64>> },
}

impl PrimitiveTable {
    fn build(k: &KernelEvaluator, kind: KernelKind, lambda: f64, grid: &TimeGrid) -> Result<Self> {
        let nodes = grid.nodes();
        let m = grid.intervals();
        let pair = |x: f64| -> Result<(f64, f64)> {
            Ok((primitive(k, kind, lambda, x)?, second_primitive(k, kind, lambda, x)?))
        };
        if grid.is_uniform() {
            let step = grid.t_final() / m as f64;
            let (g, h) = (0..=m)
                .map(|i| pair(i as f64 * step))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip();
            Ok(Self::Lattice { g, h })
        } else {
            let mut gs = Vec::with_capacity(m + 1);
            let mut hs = Vec::with_capacity(m + 1);
            for i in 0..=m {
                let (g, h): (Vec<f64>, Vec<f64>) = (0..=i)
                    .map(|j| pair(nodes[i] - nodes[j]))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .unzip();
                gs.push(g);
                hs.push(h);
            }
            Ok(Self::Triangle { g: gs, h: hs })
        }
    }

    /// Nodal weights for the convolution at node i (length i + 1).
    fn weights(&self, nodes: &[f64], i: usize) -> Vec<f64> {
        if i == 0 {
            return vec![0.0];
        }
        match self {
            Self::Lattice { g, h } => {
                let gr: Vec<f64> = (0..=i).map(|j| g[i - j]).collect();
                let hr: Vec<f64> = (0..=i).map(|j| h[i - j]).collect();
                trapezoid_weights(nodes, nodes[i], &gr, &hr)
            }
            Self::Triangle { g, h } => trapezoid_weights(nodes, nodes[i], &g[i], &h[i]),
        }
    }
}

/// Constants of one mode: a = E_{α,1}(−λTᵅ), b = TE_{α,2}(−λTᵅ),
/// e = λT^{α−1}E_{α,α}(−λTᵅ) and ρ = γa + a² + be, plus kernel tables.
#[derive(Debug, Clone)]
pub struct ModeResponse {
    kernels: Arc<KernelEvaluator>,
    grid: Arc<TimeGrid>,
    mode: usize,
    lambda: f64,
    gamma: f64,
    a: f64,
    b: f64,
    e: f64,
    rho: f64,
    e1_nodes: Vec<f64>,
    te2_nodes: Vec<f64>,
    g_aa: PrimitiveTable,
    // the (α,α−1) convolution is only ever needed at t = T
    w_am1_terminal: Vec<f64>,
}

impl ModeResponse {
    fn new(
        kernels: Arc<KernelEvaluator>,
        grid: Arc<TimeGrid>,
        lambda: f64,
        gamma: f64,
        rho_guard: f64,
        mode: usize,
    ) -> Result<Self> {
        let tf = grid.t_final();
        let a = kernels.e1(lambda, tf)?;
        let b = kernels.t_e2(lambda, tf)?;
        let e = lambda * kernels.pow_am1(lambda, tf)?;
        let rho = gamma * a + a * a + b * e;
        let eta = lambda * tf.powf(kernels.alpha());
        if (1.0 + eta) * rho.abs() <= rho_guard {
            return Err(Error::RhoNearZero { mode, rho });
        }
        let nodes = grid.nodes();
        let e1_nodes = nodes.iter().map(|&t| kernels.e1(lambda, t)).collect::<Result<_>>()?;
        let te2_nodes = nodes.iter().map(|&t| kernels.t_e2(lambda, t)).collect::<Result<_>>()?;
        let g_aa = PrimitiveTable::build(&kernels, KernelKind::AlphaAlpha, lambda, &grid)?;
        let kind = KernelKind::AlphaAlphaMinusOne;
        let g: Vec<f64> = nodes
            .iter()
            .map(|&t| primitive(&kernels, kind, lambda, tf - t))
            .collect::<Result<_>>()?;
        let h: Vec<f64> = nodes
            .iter()
            .map(|&t| second_primitive(&kernels, kind, lambda, tf - t))
            .collect::<Result<_>>()?;
        let w_am1_terminal = trapezoid_weights(nodes, tf, &g, &h);
        Ok(Self {
            kernels,
            grid,
            mode,
            lambda,
            gamma,
            a,
            b,
            e,
            rho,
            e1_nodes,
            te2_nodes,
            g_aa,
            w_am1_terminal,
        })
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// ρ(λTᵅ)
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn p2_from(&self, e1: f64, te2: f64) -> f64 {
        (self.a * e1 + self.e * te2) / self.rho
    }

    fn p3_from(&self, e1: f64, te2: f64) -> f64 {
        (-self.b * e1 + (self.gamma + self.a) * te2) / self.rho
    }

    /// Pₙ⁽²⁾(t) = [E_{α,1}(−λTᵅ)E_{α,1}(−λtᵅ) + λT^{α−1}E_{α,α}(−λTᵅ)tE_{α,2}(−λtᵅ)]/ρ
    pub fn p2(&self, t: f64) -> Result<f64> {
        Ok(self.p2_from(self.kernels.e1(self.lambda, t)?, self.kernels.t_e2(self.lambda, t)?))
    }

    /// Pₙ⁽³⁾(t) = [−TE_{α,2}(−λTᵅ)E_{α,1}(−λtᵅ) + (γ + E_{α,1}(−λTᵅ))tE_{α,2}(−λtᵅ)]/ρ
    pub fn p3(&self, t: f64) -> Result<f64> {
        Ok(self.p3_from(self.kernels.e1(self.lambda, t)?, self.kernels.t_e2(self.lambda, t)?))
    }

    pub fn p2_nodes(&self) -> Vec<f64> {
        self.e1_nodes
            .iter()
            .zip(&self.te2_nodes)
            .map(|(&x, &y)| self.p2_from(x, y))
            .collect()
    }

    pub fn p3_nodes(&self) -> Vec<f64> {
        self.e1_nodes
            .iter()
            .zip(&self.te2_nodes)
            .map(|(&x, &y)| self.p3_from(x, y))
            .collect()
    }

    /// Nodal weights of the (α,α) convolution at node i.
    pub fn weights_aa(&self, i: usize) -> Vec<f64> {
        self.g_aa.weights(self.grid.nodes(), i)
    }

    /// Nodal weights of the (α,α−1) convolution at t = T.
    pub fn weights_am1_terminal(&self) -> &[f64] {
        &self.w_am1_terminal
    }

    /// (α,α) convolution of nodal values at every node.
    pub fn convolve_nodes(&self, values: &[f64]) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| dot(&self.weights_aa(i), values))
            .collect()
    }

    /// (α,α−1) convolution of nodal values at T.
    pub fn convolve_am1_terminal(&self, values: &[f64]) -> f64 {
        dot(&self.w_am1_terminal, values)
    }

    /// Solves the mode problem for nodal source values.
    pub fn solve(&self, phi: f64, psi: f64, source: &[f64]) -> Result<ModeSolution> {
        if source.len() != self.grid.len() {
            return Err(Error::InvalidInput("source length does not match the grid".into()));
        }
        let conv = self.convolve_nodes(source);
        let c1 = conv[conv.len() - 1];
        let c2 = self.convolve_am1_terminal(source);
        let r1 = phi - c1;
        let r2 = psi - c2;
        let d1 = (self.a * r1 - self.b * r2) / self.rho;
        let d2 = ((self.gamma + self.a) * r2 + self.e * r1) / self.rho;
        let values = (0..self.grid.len())
            .map(|i| self.e1_nodes[i] * d1 + self.te2_nodes[i] * d2 + conv[i])
            .collect();
        Ok(ModeSolution {
            mode: self.mode,
            d1,
            d2,
            c1,
            c2,
            terminal_slope: -self.e * d1 + self.a * d2 + c2,
            values,
            source: source.to_vec(),
        })
    }

    /// The same solution assembled from Pₙ⁽²⁾, Pₙ⁽³⁾:
    /// uₙ = Pₙ⁽²⁾(φ − c₁) + Pₙ⁽³⁾(ψ − c₂) + (F ⋆ k_{α,α})(t).
    pub fn solve_operator_form(&self, phi: f64, psi: f64, source: &[f64]) -> Result<Vec<f64>> {
        if source.len() != self.grid.len() {
            return Err(Error::InvalidInput("source length does not match the grid".into()));
        }
        let conv = self.convolve_nodes(source);
        let c1 = conv[conv.len() - 1];
        let c2 = self.convolve_am1_terminal(source);
        let p2 = self.p2_nodes();
        let p3 = self.p3_nodes();
        Ok((0..self.grid.len())
            .map(|i| p2[i] * phi + p3[i] * psi - p2[i] * c1 - p3[i] * c2 + conv[i])
            .collect())
    }

    /// Value at arbitrary t of a solution computed by [`Self::solve`].
    pub fn value_at(&self, sol: &ModeSolution, t: f64) -> Result<f64> {
        let k = &self.kernels;
        let conv = convolve(k, KernelKind::AlphaAlpha, self.lambda, self.grid.nodes(), &sol.source, t)?;
        Ok(k.e1(self.lambda, t)? * sol.d1 + k.t_e2(self.lambda, t)? * sol.d2 + conv)
    }

    /// Δₙ(t): response to a unit constant source with zero terminal data,
    /// computed by the mode solver.
    pub fn unit_source_value(&self, t: f64) -> Result<f64> {
        let ones = vec![1.0; self.grid.len()];
        let sol = self.solve(0.0, 0.0, &ones)?;
        self.value_at(&sol, t)
    }

    /// Δₙ at the grid nodes.
    pub fn unit_source_nodes(&self) -> Result<Vec<f64>> {
        let ones = vec![1.0; self.grid.len()];
        Ok(self.solve(0.0, 0.0, &ones)?.values)
    }
}

/// Output of one mode solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSolution {
    pub mode: usize,
    /// uₙ(0)
    pub d1: f64,
    /// uₙ′(0)
    pub d2: f64,
    /// (F ⋆ k_{α,α})(T)
    pub c1: f64,
    /// (F ⋆ k_{α,α−1})(T)
    pub c2: f64,
    /// uₙ′(T) from the closed form
    pub terminal_slope: f64,
    pub values: Vec<f64>,
    #[serde(skip)]
    source: Vec<f64>,
}

/// Solves mode n for the given data.
pub fn mode_solve(n: usize, phi_n: f64, psi_n: f64, source: &TimeSeries, sc: &Scenario) -> Result<ModeSolution> {
    if !source.on_grid(sc.grid()) {
        return Err(Error::InvalidInput("source must be sampled on the scenario grid".into()));
    }
    sc.mode_response(n)?.solve(phi_n, psi_n, &source.values)
}

/// Pₙ⁽²⁾(t)
pub fn pn2(t: f64, n: usize, sc: &Scenario) -> Result<f64> {
    sc.mode_response(n)?.p2(t)
}

/// Pₙ⁽³⁾(t)
pub fn pn3(t: f64, n: usize, sc: &Scenario) -> Result<f64> {
    sc.mode_response(n)?.p3(t)
}

/// Full solve: trajectory plus per-mode constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectSolution {
    pub trajectory: SpectralTrajectory,
    pub modes: Vec<ModeSolution>,
}

impl DirectSolution {
    pub fn initial_values(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.d1).collect()
    }

    pub fn initial_slopes(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.d2).collect()
    }

    pub fn terminal_slopes(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.terminal_slope).collect()
    }
}

/// Solves every mode, in parallel, with results in mode order.
pub fn solve_direct(sc: &Scenario) -> Result<DirectSolution> {
    let modes = (0..sc.n_modes())
        .into_par_iter()
        .map(|n| {
            sc.mode_response(n)?
                .solve(sc.phi().get(n), sc.psi().get(n), &sc.source_nodal(n))
        })
        .collect::<Result<Vec<ModeSolution>>>()?;
    let trajectory = SpectralTrajectory {
        t: sc.grid().nodes().to_vec(),
        modes: modes.iter().map(|m| m.values.clone()).collect(),
    };
    Ok(DirectSolution { trajectory, modes })
}

/// The same solve through the Pₙ⁽²⁾/Pₙ⁽³⁾ operator assembly.
pub fn solve_direct_operator_form(sc: &Scenario) -> Result<SpectralTrajectory> {
    let modes = (0..sc.n_modes())
        .into_par_iter()
        .map(|n| {
            sc.mode_response(n)?
                .solve_operator_form(sc.phi().get(n), sc.psi().get(n), &sc.source_nodal(n))
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(SpectralTrajectory {
        t: sc.grid().nodes().to_vec(),
        modes,
    })
}

/// Largest node-wise discrepancy between the two assemblies, relative to
/// the largest trajectory value.
pub fn two_path_discrepancy(sc: &Scenario) -> Result<f64> {
    let a = solve_direct(sc)?.trajectory;
    let b = solve_direct_operator_form(sc)?;
    let scale = a.max_abs().max(1e-300);
    let diff = a
        .modes
        .iter()
        .flatten()
        .zip(b.modes.iter().flatten())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(diff / scale)
}

/// Jᵅ of nodal values at every node, with the same product rule as the solver.
pub fn fractional_integral(alpha: f64, nodes: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    let g1 = gamma_real(alpha + 1.0)?;
    let g2 = gamma_real(alpha + 2.0)?;
    Ok((0..nodes.len())
        .map(|i| {
            if i == 0 {
                return 0.0;
            }
            let t = nodes[i];
            let g: Vec<f64> = nodes[..=i].iter().map(|s| (t - s).powf(alpha) / g1).collect();
            let h: Vec<f64> = nodes[..=i].iter().map(|s| (t - s).powf(alpha + 1.0) / g2).collect();
            dot(&trapezoid_weights(nodes, t, &g, &h), values)
        })
        .collect())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// max over nodes of |uₙ(t) − uₙ(0) − uₙ′(0)t − Jᵅ[Fₙ − λₙuₙ](t)| per mode.
pub fn residual(sc: &Scenario, sol: &DirectSolution) -> Result<Vec<f64>> {
    let nodes = sc.grid().nodes();
    (0..sc.n_modes())
        .into_par_iter()
        .map(|n| {
            let u = &sol.trajectory.modes[n];
            let lambda = sc.lambda(n);
            let rhs: Vec<f64> = sc
                .source_nodal(n)
                .iter()
                .zip(u)
                .map(|(f, u)| f - lambda * u)
                .collect();
            let j = fractional_integral(sc.alpha(), nodes, &rhs)?;
            let (u0, du0) = (sol.modes[n].d1, sol.modes[n].d2);
            Ok(nodes
                .iter()
                .enumerate()
                .map(|(i, &t)| (u[i] - u0 - du0 * t - j[i]).abs())
                .fold(0.0, f64::max))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TerminalDefects {
    /// ‖γu(0) + u(T) − φ‖ over modes
    pub value: f64,
    /// ‖u′(T) − ψ‖ over modes
    pub slope: f64,
}

/// ℓ² defects of both terminal conditions, with u′(T) from the closed form.
pub fn terminal_check(sc: &Scenario, sol: &DirectSolution) -> TerminalDefects {
    let m = sc.grid().intervals();
    let mut value = 0.0;
    let mut slope = 0.0;
    for n in 0..sc.n_modes() {
        let u = &sol.trajectory.modes[n];
        let dv = sc.gamma() * u[0] + u[m] - sc.phi().get(n);
        let ds = sol.modes[n].terminal_slope - sc.psi().get(n);
        value += dv * dv;
        slope += ds * ds;
    }
    TerminalDefects {
        value: value.sqrt(),
        slope: slope.sqrt(),
    }
}

/// [`solve_direct`] followed by the terminal check; fails with
/// `VerificationFailure` when either defect exceeds the scenario tolerance
/// relative to the data scale.
pub fn solve_direct_verified(sc: &Scenario) -> Result<(DirectSolution, TerminalDefects)> {
    let sol = solve_direct(sc)?;
    let d = terminal_check(sc, &sol);
    let scale = 1.0_f64.max(sc.phi().norm()).max(sc.psi().norm());
    let limit = sc.tolerances().terminal_defect * scale;
    if !(d.value <= limit && d.slope <= limit) {
        return Err(Error::VerificationFailure(format!(
            "terminal defects {:e} / {:e} exceed {limit:e}",
            d.value, d.slope
        )));
    }
    Ok((sol, d))
}

/// max over node pairs of ‖u(t₂) − u(t₁)‖/|t₂ − t₁|^θ in coefficient ℓ².
pub fn holder_quotient(sol: &SpectralTrajectory, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidInput(format!("theta must lie in (0, 1), got {theta}")));
    }
    let len = sol.t.len();
    Ok((0..len)
        .into_par_iter()
        .map(|i| {
            let mut best: f64 = 0.0;
            for j in i + 1..len {
                let d: f64 = sol
                    .modes
                    .iter()
                    .map(|m| (m[j] - m[i]) * (m[j] - m[i]))
                    .sum::<f64>()
                    .sqrt();
                best = best.max(d / (sol.t[j] - sol.t[i]).powf(theta));
            }
            best
        })
        .reduce(|| 0.0, f64::max))
}
