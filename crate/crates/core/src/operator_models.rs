//! One-dimensional realizations of the self-adjoint operator A, spectral
//! coefficient vectors, and linear observation functionals.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

const PROJECTION_TOL: f64 = 1e-10;
const PROJECTION_START_PANELS: usize = 16;
const PROJECTION_MAX_PANELS: usize = 1 << 14;
const PROJECTION_ORDER: usize = 10;
/// Number of modes used when checking square-summability of preset functionals.
pub const TAIL_CHECK_MODES: usize = 512;
/// Largest admissible share of Σ Φ[eₙ]² carried by the last quarter of modes.
pub const TAIL_FRACTION_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// −d²/dx² with homogeneous Dirichlet conditions.
    Dirichlet,
    /// −d²/dx² + 1 with homogeneous Neumann conditions.
    NeumannShifted,
}

/// Eigenvalues and orthonormal eigenfunctions of a 1-D operator on [0, L].
///
/// Modes are indexed from 0. For the Dirichlet system mode i has wave
/// number k = i + 1; for the Neumann system k = i, so mode 0 is the constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigensystem {
    kind: OperatorKind,
    length: f64,
    lambdas: Vec<f64>,
}

impl Eigensystem {
    pub fn new(kind: OperatorKind, length: f64, n_modes: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidInput(format!("domain length must be positive, got {length}")));
        }
        if n_modes == 0 {
            return Err(Error::InvalidInput("at least one mode is required".into()));
        }
        let mut es = Self {
            kind,
            length,
            lambdas: Vec::with_capacity(n_modes),
        };
        es.lambdas = (0..n_modes).map(|i| es.lambda_of(i)).collect();
        Ok(es)
    }

    pub fn dirichlet_laplacian_1d(length: f64, n_modes: usize) -> Result<Self> {
        Self::new(OperatorKind::Dirichlet, length, n_modes)
    }

    pub fn neumann_shifted_1d(length: f64, n_modes: usize) -> Result<Self> {
        Self::new(OperatorKind::NeumannShifted, length, n_modes)
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.lambda_of(n)
    }

    /// The same operator with a different truncation.
    pub fn with_modes(&self, n_modes: usize) -> Result<Self> {
        Self::new(self.kind, self.length, n_modes)
    }

    pub fn wavenumber(&self, n: usize) -> usize {
        match self.kind {
            OperatorKind::Dirichlet => n + 1,
            OperatorKind::NeumannShifted => n,
        }
    }

    fn lambda_of(&self, n: usize) -> f64 {
        let q = PI * self.wavenumber(n) as f64 / self.length;
        match self.kind {
            OperatorKind::Dirichlet => q * q,
            OperatorKind::NeumannShifted => q * q + 1.0,
        }
    }

    /// eₙ(x).
    pub fn eigenfunction(&self, n: usize, x: f64) -> f64 {
        let k = self.wavenumber(n) as f64;
        let l = self.length;
        match self.kind {
            OperatorKind::Dirichlet => (2.0 / l).sqrt() * (k * PI * x / l).sin(),
            OperatorKind::NeumannShifted if n == 0 => 1.0 / l.sqrt(),
            OperatorKind::NeumannShifted => (2.0 / l).sqrt() * (k * PI * x / l).cos(),
        }
    }

    /// Gram matrix of the first `n` eigenfunctions by Gauss–Legendre quadrature.
    pub fn gram_matrix(&self, n: usize) -> Vec<Vec<f64>> {
        let (xs, ws) = quadrature_nodes(self.length, 4 * n.max(4), PROJECTION_ORDER);
        let values: Vec<Vec<f64>> = (0..n)
            .map(|i| xs.iter().map(|&x| self.eigenfunction(i, x)).collect())
            .collect();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        ws.iter()
                            .zip(values[i].iter().zip(&values[j]))
                            .map(|(w, (a, b))| w * a * b)
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Fourier coefficients gₙ = (g, eₙ) of a function on the operator's domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoefficientVector {
    values: Vec<f64>,
}

impl CoefficientVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("coefficient {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    /// Unit vector on mode `n`.
    pub fn unit(len: usize, n: usize) -> Self {
        let mut values = vec![0.0; len];
        values[n] = 1.0;
        Self { values }
    }

    pub fn from_fn(len: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new((0..len).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, n: usize) -> f64 {
        self.values[n]
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    /// a·self + b·other
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::InvalidInput(format!(
                "coefficient lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    /// Truncate or zero-pad to `len` modes.
    pub fn resized(&self, len: usize) -> Self {
        let mut values = self.values.clone();
        values.resize(len, 0.0);
        Self { values }
    }
}

/// Φ[eₙ] for a bounded linear functional Φ, n = 0..N−1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalSpec {
    pub label: String,
    coefficients: Vec<f64>,
}

impl FunctionalSpec {
    /// Builds a functional from explicit values, rejecting sequences whose
    /// last quarter carries 1% or more of Σ Φ[eₙ]².
    pub fn new(label: impl Into<String>, coefficients: Vec<f64>) -> Result<Self> {
        CoefficientVector::new(coefficients.clone())?;
        check_square_summable(&coefficients)?;
        Ok(Self {
            label: label.into(),
            coefficients,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Φ[g] = Σ gₙ Φ[eₙ] over the common modes.
    pub fn apply(&self, c: &[f64]) -> f64 {
        c.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum()
    }
}

/// Share of Σ vₙ² carried by the last quarter of the sequence.
pub fn tail_fraction(values: &[f64]) -> f64 {
    let total: f64 = values.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return 0.0;
    }
    let start = values.len() - values.len() / 4;
    values[start..].iter().map(|v| v * v).sum::<f64>() / total
}

fn check_square_summable(values: &[f64]) -> Result<()> {
    let tail = tail_fraction(values);
    if tail >= TAIL_FRACTION_LIMIT {
        return Err(Error::FunctionalNotSquareSummable { tail_fraction: tail });
    }
    Ok(())
}

/// Which functional to build.
#[derive(Clone)]
pub enum FunctionalKind {
    /// Φ[u] = (1/L)∫₀ᴸ u dx
    Mean,
    /// Φ[u] = ∫₀ᴸ (x/L)(1 − x/L) u dx
    WeightX1mx,
    /// Φ[u] = ∫₀ᴸ w(x) u dx with a caller-supplied weight.
    Weight(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for FunctionalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mean => f.write_str("Mean"),
            Self::WeightX1mx => f.write_str("WeightX1mx"),
            Self::Weight(_) => f.write_str("Weight(..)"),
        }
    }
}

/// Φ[eₙ] for n < n_modes. The two preset functionals use closed forms and are
/// checked for square-summability over `TAIL_CHECK_MODES` modes; weighted
/// functionals are projected by quadrature and checked over the modes given.
pub fn functional_coefficients(
    kind: &FunctionalKind,
    es: &Eigensystem,
    n_modes: usize,
) -> Result<FunctionalSpec> {
    match kind {
        FunctionalKind::Mean | FunctionalKind::WeightX1mx => {
            let count = n_modes.max(TAIL_CHECK_MODES);
            let all: Vec<f64> = (0..count).map(|n| closed_form(kind, es, n)).collect();
            check_square_summable(&all)?;
            let label = match kind {
                FunctionalKind::Mean => "mean",
                _ => "weight_x_1mx",
            };
            Ok(FunctionalSpec {
                label: label.into(),
                coefficients: all[..n_modes].to_vec(),
            })
        }
        FunctionalKind::Weight(w) => {
            let c = project(|x| w(x), es, n_modes)?;
            FunctionalSpec::new("custom", c.into_values())
        }
    }
}

fn closed_form(kind: &FunctionalKind, es: &Eigensystem, n: usize) -> f64 {
    let l = es.length();
    let k = es.wavenumber(n) as f64;
    let odd = es.wavenumber(n) % 2 == 1;
    let pk = PI * k;
    match (kind, es.kind()) {
        (FunctionalKind::Mean, OperatorKind::Dirichlet) => {
            if odd {
                (2.0 / l).sqrt() * 2.0 / pk
            } else {
                0.0
            }
        }
        (FunctionalKind::Mean, OperatorKind::NeumannShifted) => {
            if n == 0 {
                1.0 / l.sqrt()
            } else {
                0.0
            }
        }
        (FunctionalKind::WeightX1mx, OperatorKind::Dirichlet) => {
            if odd {
                (2.0 * l).sqrt() * 4.0 / (pk * pk * pk)
            } else {
                0.0
            }
        }
        (FunctionalKind::WeightX1mx, OperatorKind::NeumannShifted) => {
            if n == 0 {
                l.sqrt() / 6.0
            } else if odd {
                0.0
            } else {
                -(2.0 * l).sqrt() * 2.0 / (pk * pk)
            }
        }
        (FunctionalKind::Weight(_), _) => unreachable!("weighted functionals use quadrature"),
    }
}

fn quadrature_nodes(length: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (nodes, weights) = gauss_legendre(order);
    let width = length / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = width * (p as f64 + 0.5);
        for (x, w) in nodes.iter().zip(&weights) {
            xs.push(mid + 0.5 * width * x);
            ws.push(0.5 * width * w);
        }
    }
    (xs, ws)
}

fn project_with(values: &[f64], xs: &[f64], ws: &[f64], es: &Eigensystem, n_modes: usize) -> Vec<f64> {
    (0..n_modes)
        .map(|n| {
            xs.iter()
                .zip(ws)
                .zip(values)
                .map(|((&x, w), v)| w * v * es.eigenfunction(n, x))
                .sum()
        })
        .collect()
}

/// gₙ = (g, eₙ) by composite Gauss–Legendre quadrature, doubling the panel
/// count until no coefficient moves by more than 1e−10 (relative to the
/// largest coefficient when that exceeds one).
pub fn project<F>(sampler: F, es: &Eigensystem, n_modes: usize) -> Result<CoefficientVector>
where
    F: Fn(f64) -> f64,
{
    let mut panels = PROJECTION_START_PANELS.max(n_modes.next_power_of_two());
    let eval = |panels: usize| -> Result<Vec<f64>> {
        let (xs, ws) = quadrature_nodes(es.length(), panels, PROJECTION_ORDER);
        let values: Vec<f64> = xs.iter().map(|&x| sampler(x)).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sampler returned a non-finite value".into()));
        }
        Ok(project_with(&values, &xs, &ws, es, n_modes))
    };
    let mut current = eval(panels)?;
    loop {
        let next_panels = panels * 2;
        if next_panels > PROJECTION_MAX_PANELS {
            let next = eval(panels)?;
            let change = max_change(&current, &next);
            return Err(Error::QuadratureNonConvergence { panels, change });
        }
        let next = eval(next_panels)?;
        let change = max_change(&current, &next);
        let scale = next.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if change <= PROJECTION_TOL * scale {
            return CoefficientVector::new(next);
        }
        current = next;
        panels = next_panels;
    }
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Σ cₙ eₙ(x) at each point.
pub fn synthesize(c: &CoefficientVector, es: &Eigensystem, xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            c.values()
                .iter()
                .enumerate()
                .map(|(n, v)| v * es.eigenfunction(n, x))
                .sum()
        })
        .collect()
}

/// ‖g‖ in D(A^σ): (Σ λₙ^{2σ} gₙ²)^{1/2}.
pub fn sobolev_norm(c: &CoefficientVector, es: &Eigensystem, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return c.norm();
    }
    c.values()
        .iter()
        .enumerate()
        .map(|(n, v)| es.lambda(n).powf(2.0 * sigma) * v * v)
        .sum::<f64>()
        .sqrt()
}

/// Named data presets for φ, ψ and f.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    /// amplitude · sin(kπx/L)
    SinK {
        #[serde(default = "one_usize")]
        k: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// amplitude · (x/L)(1 − x/L)
    X1mx {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// A constant function.
    Const { value: f64 },
    /// Coefficients amplitude / (n+1)^power, given directly in mode space.
    Decay {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "two")]
        power: f64,
    },
    /// Explicit coefficients, zero-padded or truncated to the mode count.
    Coefficients { values: Vec<f64> },
    Zero,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn one_usize() -> usize {
    1
}

impl Preset {
    pub fn coefficients(&self, es: &Eigensystem) -> Result<CoefficientVector> {
        let n = es.n_modes();
        let l = es.length();
        match self {
            Preset::SinK { k, amplitude } => {
                let (k, a) = (*k as f64, *amplitude);
                project(|x| a * (k * PI * x / l).sin(), es, n)
            }
            Preset::X1mx { amplitude } => {
                let a = *amplitude;
                project(|x| a * (x / l) * (1.0 - x / l), es, n)
            }
            Preset::Const { value } => {
                let v = *value;
                project(|_| v, es, n)
            }
            Preset::Decay { amplitude, power } => {
                CoefficientVector::from_fn(n, |i| amplitude / ((i + 1) as f64).powf(*power))
            }
            Preset::Coefficients { values } => Ok(CoefficientVector::new(values.clone())?.resized(n)),
            Preset::Zero => Ok(CoefficientVector::zeros(n)),
        }
    }
}
