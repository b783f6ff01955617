//! Small numeric helpers shared by the engines.

use num_complex::Complex64 as C64;

/// `ln(n!)` for `n = 0..len`.
pub fn ln_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len.max(1));
    out.push(0.0);
    for n in 1..len {
        out.push(out[n - 1] + (n as f64).ln());
    }
    out
}

/// Overlap `⟨a|b⟩` of two coherent states.
#[inline]
pub fn coherent_overlap(a: C64, b: C64) -> C64 {
    (-(a.norm_sqr() + b.norm_sqr()) / 2.0 + a.conj() * b).exp()
}

/// Overlap of two multimode coherent products.
pub fn product_overlap(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    let mut exponent = C64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        exponent += -(x.norm_sqr() + y.norm_sqr()) / 2.0 + x.conj() * y;
    }
    exponent.exp()
}

/// Binary Shannon entropy in bits, with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// `n` evenly spaced points on `[start, end]` (one point yields `end`).
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![end],
        _ => (0..n)
            .map(|k| start + (end - start) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Golden-section maximisation of a unimodal function on `[lo, hi]`.
pub fn golden_max(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = (lo + hi) / 2.0;
    (x, f(x))
}

/// Bisection root of a monotone function with `f(lo)` and `f(hi)` of opposite sign.
pub fn bisect(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || hi - lo < tol {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
