use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Distance below which an argument is treated as sitting on a pole.
pub const POLE_TOLERANCE: f64 = 1e-9;

// Lanczos coefficients for g = 607/128, 15 terms (Godfrey).
const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_8e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_6e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];

/// sin(pi x) with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    // reduce to [-0.5, 0.5] around the nearest half-period
    let y = if r < 0.5 {
        r
    } else if r < 1.5 {
        1.0 - r
    } else {
        r - 2.0
    };
    (PI * y).sin()
}

/// cos(pi x) with exact zeros at the half-integers.
pub fn cos_pi(x: f64) -> f64 {
    sin_pi(x + 0.5)
}

fn nearest_pole(x: f64) -> Option<f64> {
    if x > 0.5 {
        return None;
    }
    let pole = x.round();
    if pole <= 0.0 && (x - pole).abs() <= POLE_TOLERANCE {
        Some(pole)
    } else {
        None
    }
}

fn lanczos(x: f64) -> f64 {
    // valid for x >= 0.5
    let z = x - 1.0;
    let mut sum = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    // split the power so that t^(z+1/2) does not overflow before e^-t
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half * ((-t).exp() * half) * sum
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Euler's gamma function for real arguments.
///
/// Positive integers up to 171 return the exact factorial (rounded once).
/// Negative arguments go through the reflection formula. Arguments within
/// [`POLE_TOLERANCE`] of a non-positive integer are rejected.
pub fn gamma_real(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain("gamma of NaN".into()));
    }
    if let Some(pole) = nearest_pole(x) {
        return Err(Error::Pole {
            x,
            pole,
            distance: (x - pole).abs(),
        });
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x == x.floor() && (1.0..=171.0).contains(&x) {
        return factorial(x as u32 - 1);
    }
    if x >= 0.5 {
        if x > 171.7 {
            return f64::INFINITY;
        }
        lanczos(x)
    } else {
        PI / (sin_pi(x) * gamma_unchecked(1.0 - x))
    }
}

/// 1/Γ(x), continued by zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if nearest_pole(x).is_some() {
        return 0.0;
    }
    if x >= 0.5 {
        if x > 171.7 {
            return 0.0;
        }
        return 1.0 / gamma_unchecked(x);
    }
    // 1/Γ(x) = sin(πx) Γ(1-x) / π, which stays finite for large negative x
    // until Γ(1-x) overflows.
    let g = gamma_unchecked(1.0 - x);
    if g.is_infinite() {
        return 0.0;
    }
    sin_pi(x) * g / PI
}
