//! Scaled solid harmonics shared by every FMM operator.
//!
//! With `P_n^m` the associated Legendre functions carrying the Condon–Shortley
//! phase, the regular and irregular harmonics are
//!
//! ```text
//! R_n^m(x) = r^n      P_n^m(cos θ) e^{imφ} / (n + m)!
//! I_n^m(x) = (n - m)! P_n^m(cos θ) e^{imφ} / r^{n+1}
//! ```
//!
//! with `R_n^{-m} = (-1)^m conj(R_n^m)` and likewise for `I`. In this
//! normalization the addition theorems carry no extra factors:
//!
//! ```text
//! 1/|x - y|    = Σ conj(R_n^m(y)) I_n^m(x)                    (|y| < |x|)
//! R_n^m(x + y) = Σ_{k,l} R_k^l(x) R_{n-k}^{m-l}(y)
//! I_n^m(x + y) = Σ_{k,l} (-1)^k conj(R_k^l(y)) I_{n+k}^{m+l}(x) (|y| < |x|)
//! ```
//!
//! Multipole coefficients are `M_n^m = Σ q conj(R_n^m(x - c))` and a local
//! expansion evaluates as `Φ(c + y) = Σ L_n^m conj(R_n^m(y))`.
//! Coefficient `(n, m)` lives at index `n² + n + m`.

use num_complex::Complex64;

use crate::particles::Vec3;

pub type C64 = Complex64;

#[inline(always)]
pub const fn idx(n: usize, m: isize) -> usize {
    (n * n + n).wrapping_add_signed(m)
}

/// `(-1)^m`
#[inline(always)]
pub(crate) fn parity(m: usize) -> f64 {
    if m & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Fills the negative orders from the non-negative ones.
pub(crate) fn mirror(p: usize, c: &mut [C64]) {
    for n in 1..p {
        for m in 1..=n {
            let v = c[idx(n, m as isize)].conj() * parity(m);
            c[idx(n, -(m as isize))] = v;
        }
    }
}

/// Regular harmonics `R_n^m(v)` for `n < p`, all orders.
pub fn regular(v: Vec3, p: usize, out: &mut [C64]) {
    regular_nonnegative(v, p, out);
    mirror(p, out);
}

/// Regular harmonics for `m ≥ 0` only; negative-order slots are left untouched.
pub(crate) fn regular_nonnegative(v: Vec3, p: usize, out: &mut [C64]) {
    debug_assert!(out.len() >= p * p);
    if p == 0 {
        return;
    }
    let [x, y, z] = v;
    let r2 = x * x + y * y + z * z;
    let xy = C64::new(x, y);
    out[0] = C64::new(1.0, 0.0);
    let mut diag = C64::new(1.0, 0.0);
    for m in 0..p {
        if m > 0 {
            diag = -(xy * diag) / (2 * m) as f64;
            out[idx(m, m as isize)] = diag;
        }
        let mi = m as isize;
        let mut prev2 = C64::new(0.0, 0.0);
        let mut prev1 = diag;
        for n in (m + 1)..p {
            let cur = ((2 * n - 1) as f64 * z * prev1 - r2 * prev2) / ((n + m) * (n - m)) as f64;
            out[idx(n, mi)] = cur;
            prev2 = prev1;
            prev1 = cur;
        }
    }
}

/// Irregular harmonics `I_n^m(v)` for `n < p`, all orders. `v` must be non-zero.
pub fn irregular(v: Vec3, p: usize, out: &mut [C64]) {
    debug_assert!(out.len() >= p * p);
    if p == 0 {
        return;
    }
    let [x, y, z] = v;
    let r2 = x * x + y * y + z * z;
    let inv_r2 = 1.0 / r2;
    let xy = C64::new(x, y);
    let mut diag = C64::new(crate::math::sqrt(inv_r2), 0.0);
    out[0] = diag;
    for m in 0..p {
        if m > 0 {
            diag = -(xy * diag) * ((2 * m - 1) as f64 * inv_r2);
            out[idx(m, m as isize)] = diag;
        }
        let mi = m as isize;
        let mut prev2 = C64::new(0.0, 0.0);
        let mut prev1 = diag;
        for n in (m + 1)..p {
            let a = (2 * n - 1) as f64 * z;
            let b = ((n - 1) * (n - 1) - m * m) as f64;
            let cur = (a * prev1 - b * prev2) * inv_r2;
            out[idx(n, mi)] = cur;
            prev2 = prev1;
            prev1 = cur;
        }
    }
    mirror(p, out);
}
