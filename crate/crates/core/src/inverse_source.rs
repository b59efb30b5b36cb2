//! Recovery of a time-independent source f from an interior snapshot
//! u(ξ) = h, one mode at a time:
//!
//!   fₙ = (hₙ − Pₙ⁽²⁾(ξ)φₙ − Pₙ⁽³⁾(ξ)ψₙ) / Δₙ(ξ),
//!   u(t) = Σ (Pₙ⁽²⁾(t)φₙ + Pₙ⁽³⁾(t)ψₙ + Δₙ(t)fₙ) eₙ.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fvp_core::{Scenario, SpectralTrajectory};
use crate::operator_models::CoefficientVector;
use crate::rho_zeros::{p1_admissibility, XiReport};

/// Relative snapshot mismatch above which a reconstruction is rejected.
pub const SNAPSHOT_TOLERANCE: f64 = 1e-5;

/// Snapshot data for the source reconstruction. The source stored in the
/// scenario is ignored; φ and ψ are taken from it.
#[derive(Debug, Clone)]
pub struct IP1Problem {
    scenario: Scenario,
    xi: f64,
    h: CoefficientVector,
    xi_report: XiReport,
}

impl IP1Problem {
    /// Checks ξ ∈ (0, T), the length of h and the distance of ξ to P₁.
    pub fn new(scenario: Scenario, xi: f64, h: CoefficientVector) -> Result<Self> {
        if h.len() != scenario.n_modes() {
            return Err(Error::InvalidInput(format!(
                "h needs {} coefficients, got {}",
                scenario.n_modes(),
                h.len()
            )));
        }
        let tol = scenario.tolerances().xi_admissibility;
        let xi_report = p1_admissibility(xi, &scenario, tol)?;
        Ok(Self {
            scenario,
            xi,
            h,
            xi_report,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn h(&self) -> &CoefficientVector {
        &self.h
    }

    pub fn xi_report(&self) -> &XiReport {
        &self.xi_report
    }

    /// The same problem with other snapshot coefficients.
    pub fn with_h(&self, h: CoefficientVector) -> Result<Self> {
        if h.len() != self.h.len() {
            return Err(Error::InvalidInput("h changed length".into()));
        }
        Ok(Self { h, ..self.clone() })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IP1Solution {
    pub f: CoefficientVector,
    pub u: SpectralTrajectory,
    /// min over n of λₙ|Δₙ(ξ)|
    pub conditioning: f64,
    /// mode attaining the conditioning minimum
    pub conditioning_mode: usize,
    /// ‖u(ξ) − h‖ / max(‖h‖, 1)
    pub snapshot_defect: f64,
    /// ‖γu(0) + u(T) − φ‖
    pub terminal_defect: f64,
}

/// Per-mode quantities at ξ.
struct SnapshotModes {
    p2: Vec<f64>,
    p3: Vec<f64>,
    delta: Vec<f64>,
}

fn snapshot_modes(p: &IP1Problem) -> Result<SnapshotModes> {
    let sc = &p.scenario;
    let rows = (0..sc.n_modes())
        .into_par_iter()
        .map(|n| {
            let r = sc.mode_response(n)?;
            Ok((r.p2(p.xi)?, r.p3(p.xi)?, r.unit_source_value(p.xi)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SnapshotModes {
        p2: rows.iter().map(|r| r.0).collect(),
        p3: rows.iter().map(|r| r.1).collect(),
        delta: rows.iter().map(|r| r.2).collect(),
    })
}

fn divide(p: &IP1Problem, m: &SnapshotModes) -> Result<Vec<f64>> {
    let sc = &p.scenario;
    let guard = sc.tolerances().xi_guard;
    (0..sc.n_modes())
        .map(|n| {
            let scaled = sc.lambda(n) * m.delta[n].abs();
            if !(scaled > guard) {
                return Err(Error::InadmissibleXi {
                    xi: p.xi,
                    mode: n,
                    scaled,
                });
            }
            let num = p.h.get(n) - m.p2[n] * sc.phi().get(n) - m.p3[n] * sc.psi().get(n);
            Ok(num / m.delta[n])
        })
        .collect()
}

/// Source coefficients fₙ from the snapshot.
pub fn reconstruct_f(p: &IP1Problem) -> Result<CoefficientVector> {
    let m = snapshot_modes(p)?;
    CoefficientVector::new(divide(p, &m)?)
}

/// Reconstructs f and assembles u on the scenario grid, then checks the
/// snapshot and the first terminal condition.
pub fn solve_ip1(p: &IP1Problem) -> Result<IP1Solution> {
    let sc = &p.scenario;
    let m = snapshot_modes(p)?;
    let f = divide(p, &m)?;
    let modes = (0..sc.n_modes())
        .into_par_iter()
        .map(|n| {
            let r = sc.mode_response(n)?;
            let (phi, psi) = (sc.phi().get(n), sc.psi().get(n));
            let delta = r.unit_source_nodes()?;
            Ok(r.p2_nodes()
                .iter()
                .zip(r.p3_nodes())
                .zip(delta)
                .map(|((p2, p3), d)| p2 * phi + p3 * psi + d * f[n])
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let u = SpectralTrajectory {
        t: sc.grid().nodes().to_vec(),
        modes,
    };

    let mut snap = 0.0;
    let mut term = 0.0;
    let last = sc.grid().intervals();
    for n in 0..sc.n_modes() {
        let at_xi = m.p2[n] * sc.phi().get(n) + m.p3[n] * sc.psi().get(n) + m.delta[n] * f[n];
        snap += (at_xi - p.h.get(n)).powi(2);
        let u_n = &u.modes[n];
        term += (sc.gamma() * u_n[0] + u_n[last] - sc.phi().get(n)).powi(2);
    }
    let snapshot_defect = snap.sqrt() / p.h.norm().max(1.0);
    let terminal_defect = term.sqrt();
    if !(snapshot_defect <= SNAPSHOT_TOLERANCE) {
        return Err(Error::VerificationFailure(format!(
            "snapshot mismatch {snapshot_defect:e} exceeds {SNAPSHOT_TOLERANCE:e}"
        )));
    }
    let data_scale = sc.phi().norm().max(1.0);
    if !(terminal_defect <= sc.tolerances().terminal_defect * data_scale) {
        return Err(Error::VerificationFailure(format!(
            "terminal defect {terminal_defect:e} after reconstruction"
        )));
    }

    let (conditioning_mode, conditioning) = (0..sc.n_modes())
        .map(|n| (n, sc.lambda(n) * m.delta[n].abs()))
        .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
    Ok(IP1Solution {
        f: CoefficientVector::new(f)?,
        u,
        conditioning,
        conditioning_mode,
        snapshot_defect,
        terminal_defect,
    })
}

/// Monte Carlo statistics of the reconstruction under snapshot noise.
#[derive(Debug, Clone, Serialize)]
pub struct NoiseStudy {
    pub noise_level: f64,
    pub trials: usize,
    pub seed: u64,
    /// relative ℓ² error of f against the noiseless reconstruction
    pub mean_error: f64,
    pub max_error: f64,
    /// mean |δfₙ| per unit noise amplitude, by mode
    pub amplification: Vec<f64>,
    /// 1/|Δₙ(ξ)|, the amplification predicted by the per-mode division
    pub predicted: Vec<f64>,
    pub lambdas: Vec<f64>,
}

/// Perturbs hₙ by independent N(0, σ²) noise with σ = noise_level·‖h‖/√N,
/// so the expected relative perturbation of h is `noise_level`, and
/// records the resulting errors in f.
pub fn ip1_noise_study(p: &IP1Problem, noise_level: f64, trials: usize, seed: u64) -> Result<NoiseStudy> {
    if !(noise_level >= 0.0) || !noise_level.is_finite() {
        return Err(Error::InvalidInput(format!("noise level must be >= 0, got {noise_level}")));
    }
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    let m = snapshot_modes(p)?;
    let base = divide(p, &m)?;
    let n_modes = base.len();
    let base_norm = base.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let sigma = noise_level * p.h.norm() / (n_modes as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::with_capacity(trials);
    let mut per_mode = vec![0.0; n_modes];
    for _ in 0..trials {
        let noisy: Vec<f64> = p
            .h
            .values()
            .iter()
            .map(|h| {
                let z: f64 = StandardNormal.sample(&mut rng);
                h + sigma * z
            })
            .collect();
        let q = p.with_h(CoefficientVector::new(noisy)?)?;
        let f = divide(&q, &m)?;
        let mut err = 0.0;
        for n in 0..n_modes {
            let d = f[n] - base[n];
            err += d * d;
            per_mode[n] += d.abs();
        }
        errors.push(err.sqrt() / base_norm);
    }
    let scale = if sigma > 0.0 { sigma * trials as f64 } else { f64::INFINITY };
    Ok(NoiseStudy {
        noise_level,
        trials,
        seed,
        mean_error: errors.iter().sum::<f64>() / trials as f64,
        max_error: errors.iter().copied().fold(0.0, f64::max),
        amplification: per_mode.iter().map(|s| s / scale).collect(),
        predicted: m.delta.iter().map(|d| 1.0 / d.abs()).collect(),
        lambdas: p.scenario.eigensystem().lambdas().to_vec(),
    })
}
