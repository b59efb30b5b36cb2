use serde::Serialize;

use super::mittag_leffler::MittagLeffler;
use crate::error::{Error, Result};

/// The five Mittag-Leffler kernels that appear in the mode solutions,
/// evaluated at one (α, λ, t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelFamily {
    pub alpha: f64,
    pub lambda: f64,
    pub t: f64,
    /// E_{α,1}(−λtᵅ)
    pub e1: f64,
    /// t E_{α,2}(−λtᵅ)
    pub t_e2: f64,
    /// t^{α−1} E_{α,α}(−λtᵅ)
    pub pow_am1: f64,
    /// t^{α−2} E_{α,α−1}(−λtᵅ); undefined at t = 0
    pow_am2: Option<f64>,
    /// tᵅ E_{α,α+1}(−λtᵅ)
    pub pow_a: f64,
}

impl KernelFamily {
    /// t^{α−2} E_{α,α−1}(−λtᵅ), which blows up at t = 0.
    pub fn pow_am2(&self) -> Result<f64> {
        self.pow_am2.ok_or_else(|| {
            Error::Domain("t^(alpha-2) E_{alpha,alpha-1} is singular at t = 0".into())
        })
    }
}

/// Reusable evaluator for the kernel family at a fixed order α.
#[derive(Debug, Clone)]
pub struct KernelEvaluator {
    alpha: f64,
    e_1: MittagLeffler,
    e_2: MittagLeffler,
    e_a: MittagLeffler,
    e_am1: MittagLeffler,
    e_ap1: MittagLeffler,
    e_ap2: MittagLeffler,
}

impl KernelEvaluator {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::Domain(format!(
                "kernel family needs 1 < alpha <= 2, got {alpha}"
            )));
        }
        Ok(Self {
            alpha,
            e_1: MittagLeffler::new(alpha, 1.0)?,
            e_2: MittagLeffler::new(alpha, 2.0)?,
            e_a: MittagLeffler::new(alpha, alpha)?,
            e_am1: MittagLeffler::new(alpha, alpha - 1.0)?,
            e_ap1: MittagLeffler::new(alpha, alpha + 1.0)?,
            e_ap2: MittagLeffler::new(alpha, alpha + 2.0)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn check(lambda: f64, t: f64) -> Result<()> {
        if !(t >= 0.0) || !(lambda >= 0.0) {
            return Err(Error::Domain(format!(
                "kernel family needs t >= 0 and lambda >= 0, got t={t}, lambda={lambda}"
            )));
        }
        Ok(())
    }

    /// E_{α,1}(−λtᵅ)
    pub fn e1(&self, lambda: f64, t: f64) -> Result<f64> {
        Self::check(lambda, t)?;
        self.e_1.eval(-lambda * t.powf(self.alpha))
    }

    /// t E_{α,2}(−λtᵅ)
    pub fn t_e2(&self, lambda: f64, t: f64) -> Result<f64> {
        Self::check(lambda, t)?;
        Ok(t * self.e_2.eval(-lambda * t.powf(self.alpha))?)
    }

    /// t^{α−1} E_{α,α}(−λtᵅ)
    pub fn pow_am1(&self, lambda: f64, t: f64) -> Result<f64> {
        Self::check(lambda, t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(t.powf(self.alpha - 1.0) * self.e_a.eval(-lambda * t.powf(self.alpha))?)
    }

    /// t^{α−2} E_{α,α−1}(−λtᵅ)
    pub fn pow_am2(&self, lambda: f64, t: f64) -> Result<f64> {
        Self::check(lambda, t)?;
        if t == 0.0 {
            return Err(Error::Domain(
                "t^(alpha-2) E_{alpha,alpha-1} is singular at t = 0".into(),
            ));
        }
        Ok(t.powf(self.alpha - 2.0) * self.e_am1.eval(-lambda * t.powf(self.alpha))?)
    }

    /// tᵅ E_{α,α+1}(−λtᵅ)
    pub fn pow_a(&self, lambda: f64, t: f64) -> Result<f64> {
        Self::check(lambda, t)?;
        let ta = t.powf(self.alpha);
        Ok(ta * self.e_ap1.eval(-lambda * ta)?)
    }

    /// t^{α+1} E_{α,α+2}(−λtᵅ), the primitive of tᵅE_{α,α+1}(−λtᵅ)
    pub fn pow_ap1(&self, lambda: f64, t: f64) -> Result<f64> {
        Self::check(lambda, t)?;
        let ta = t.powf(self.alpha);
        Ok(t * ta * self.e_ap2.eval(-lambda * ta)?)
    }

    pub fn family(&self, lambda: f64, t: f64) -> Result<KernelFamily> {
        Ok(KernelFamily {
            alpha: self.alpha,
            lambda,
            t,
            e1: self.e1(lambda, t)?,
            t_e2: self.t_e2(lambda, t)?,
            pow_am1: self.pow_am1(lambda, t)?,
            pow_am2: if t > 0.0 {
                Some(self.pow_am2(lambda, t)?)
            } else {
                None
            },
            pow_a: self.pow_a(lambda, t)?,
        })
    }
}

/// All five kernels at (α, λ, t).
pub fn kernel_family(alpha: f64, lambda: f64, t: f64) -> Result<KernelFamily> {
    KernelEvaluator::new(alpha)?.family(lambda, t)
}

/// Empirical constant in the decay bound |E_{α,β}(−η)| ≤ C/(1+η):
/// the maximum of (1+η)|E_{α,β}(−η)| over a log grid on (0, eta_max].
pub fn decay_constant(alpha: f64, beta: f64, eta_max: f64) -> Result<f64> {
    if !(eta_max > 0.0) {
        return Err(Error::Domain(format!("eta_max must be positive, got {eta_max}")));
    }
    let ml = MittagLeffler::new(alpha, beta)?;
    let lo = (1e-8f64).min(eta_max).log10();
    let hi = eta_max.log10();
    let points = (((hi - lo) * 80.0).ceil() as usize).max(2);
    let mut best = ml.eval(0.0)?.abs();
    for i in 0..=points {
        let eta = 10f64.powf(lo + (hi - lo) * i as f64 / points as f64).min(eta_max);
        best = best.max((1.0 + eta) * ml.eval(-eta)?.abs());
    }
    Ok(best)
}
