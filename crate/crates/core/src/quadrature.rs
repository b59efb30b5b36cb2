//! Quadrature rules shared by the special-function, projection and
//! inverse-problem code.
//!
//! Three rules are provided: fixed Gauss–Legendre panels (smooth
//! integrands), adaptive Gauss–Kronrod 7/15 (generic, with error estimate)
//! and tanh–sinh (endpoint singularities of algebraic type).

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::{Mutex, OnceLock};

/// Integral value with an a-posteriori error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the three-term recurrence and cached per order.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&order) {
        return rule.clone();
    }
    let rule = legendre_rule(order);
    cache.lock().unwrap().insert(order, rule.clone());
    rule
}

fn legendre_rule(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule with `panels` equal panels of the given order.
pub fn composite_gauss_legendre<F>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let (nodes, weights) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + width * p as f64;
        let half = 0.5 * width;
        let mid = lo + half;
        let mut s = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            s += w * f(mid + half * x);
        }
        total += s * half;
    }
    total
}

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GAUSS7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = h * KRONROD_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS7_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod 7/15 quadrature.
///
/// Bisects the panel with the largest error estimate until the total
/// estimate drops below `max(abs_tol, rel_tol * |I|)` or `max_panels` is hit.
/// The returned estimate is honest either way; callers decide what to do
/// with an unconverged result.
pub fn adaptive_gauss_kronrod<F>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Estimate
where
    F: Fn(f64) -> f64,
{
    let (v, e) = gk15(&f, a, b);
    let mut panels = vec![(a, b, v, e)];
    loop {
        let value: f64 = panels.iter().map(|p| p.2).sum();
        let error: f64 = panels.iter().map(|p| p.3).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) || panels.len() >= max_panels {
            return Estimate { value, error };
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Estimate { value, error };
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
}

/// Tanh–sinh (double exponential) quadrature on `[a, b]`.
///
/// Tolerates integrable algebraic singularities at either endpoint; the
/// integrand is never evaluated exactly at `a` or `b`. Node positions near
/// the endpoints are formed from the endpoint distance, so singularities
/// located at `a = 0` are resolved down to subnormal distances.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, rel_tol: f64, max_level: usize) -> Estimate
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Estimate { value: 0.0, error: 0.0 };
    }
    let half = 0.5 * (b - a);
    // wide enough that the neglected end pieces sit below 1e-100 of the
    // interval, which matters for singularities as strong as x^-0.9
    let t_max = 6.0;
    // contribution of abscissa t (and -t) at unit step
    let sample = |t: f64| -> f64 {
        let s = FRAC_PI_2 * t.sinh();
        let cosh_s = s.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cosh_s * cosh_s);
        if w == 0.0 {
            return 0.0;
        }
        let e = (-2.0 * s.abs()).exp();
        let dist = half * 2.0 * e / (1.0 + e);
        let mut acc = 0.0;
        if t == 0.0 {
            let v = f(a + half);
            if v.is_finite() {
                acc += w * v;
            }
            return acc * half;
        }
        let (x_lo, x_hi) = (a + dist, b - dist);
        if x_lo > a && x_lo < b {
            let v = f(x_lo);
            if v.is_finite() {
                acc += w * v;
            }
        }
        if x_hi > a && x_hi < b {
            let v = f(x_hi);
            if v.is_finite() {
                acc += w * v;
            }
        }
        acc * half
    };

    let mut h = 1.0;
    let mut sum = sample(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        sum += sample(k as f64 * h);
        k += 1;
    }
    let mut estimate = sum * h;
    let mut error = f64::INFINITY;
    for _ in 1..=max_level {
        h *= 0.5;
        let mut k = 1;
        let mut add = 0.0;
        while k as f64 * h <= t_max {
            add += sample(k as f64 * h);
            k += 2;
        }
        sum += add;
        let next = sum * h;
        error = (next - estimate).abs();
        estimate = next;
        if error <= rel_tol * estimate.abs() || (estimate == 0.0 && error == 0.0) {
            break;
        }
    }
    Estimate { value: estimate, error }
}
