//! Gamma and Mittag-Leffler functions, and the kernel family built from them.

mod gamma;
mod kernels;
mod mittag_leffler;

pub use gamma::{cos_pi, gamma_real, rgamma, sin_pi, POLE_TOLERANCE};
pub use kernels::{decay_constant, kernel_family, KernelEvaluator, KernelFamily};
pub use mittag_leffler::{
    mittag_leffler, MLQuery, MittagLeffler, Regime, ASYMPTOTIC_RADIUS, ASYMPTOTIC_TERMS,
    SERIES_RADIUS,
};
