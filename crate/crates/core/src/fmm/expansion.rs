//! Multipole and local expansions and the five translation operators.
//!
//! The slice kernels (`*_acc`) accumulate only the `m ≥ 0` coefficients; callers
//! restore the negative orders with [`mirror`] once a target is complete.

use alloc::vec;
use alloc::vec::Vec;

use super::harmonics::{idx, irregular, mirror, parity, regular, regular_nonnegative, C64};
use crate::error::{Error, Result};
use crate::particles::{sub, Vec3};

const ZERO: C64 = C64::new(0.0, 0.0);

macro_rules! expansion_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            pub centre: Vec3,
            order: usize,
            coeffs: Vec<C64>,
        }

        impl $name {
            pub fn zero(centre: Vec3, order: usize) -> Self {
                Self { centre, order, coeffs: vec![ZERO; order * order] }
            }

            /// Wraps `order²` coefficients laid out as `n² + n + m`.
            pub fn from_coeffs(centre: Vec3, order: usize, coeffs: Vec<C64>) -> Self {
                assert_eq!(coeffs.len(), order * order, "coefficient count must be order²");
                Self { centre, order, coeffs }
            }

            pub fn order(&self) -> usize {
                self.order
            }

            pub fn coeffs(&self) -> &[C64] {
                &self.coeffs
            }

            pub fn coeffs_mut(&mut self) -> &mut [C64] {
                &mut self.coeffs
            }

            pub fn coeff(&self, n: usize, m: isize) -> C64 {
                self.coeffs[idx(n, m)]
            }

            pub fn scale(&mut self, factor: f64) {
                self.coeffs.iter_mut().for_each(|c| *c *= factor);
            }

            /// Largest violation of `c_n^{-m} = (-1)^m conj(c_n^m)`.
            pub fn symmetry_defect(&self) -> f64 {
                let mut worst: f64 = 0.0;
                for n in 0..self.order {
                    for m in 0..=n {
                        let a = self.coeffs[idx(n, -(m as isize))];
                        let b = self.coeffs[idx(n, m as isize)].conj() * parity(m);
                        worst = worst.max((a - b).norm());
                    }
                }
                worst
            }
        }
    };
}

expansion_type!(
    /// Far-field series about `centre` for the charges inside a cell.
    MultipoleExpansion
);
expansion_type!(
    /// Near-field series about `centre` for the charges well separated from a cell.
    LocalExpansion
);

/// `out += q · conj(R(d))`, non-negative orders, `d = x - centre`.
pub(crate) fn p2m_acc(q: f64, d: Vec3, p: usize, scratch: &mut [C64], out: &mut [C64]) {
    regular_nonnegative(d, p, scratch);
    for n in 0..p {
        for m in 0..=n {
            let k = idx(n, m as isize);
            out[k] += scratch[k].conj() * q;
        }
    }
}

/// Multipole re-centring: `shift = R(c_child - c_parent)` with all orders.
pub(crate) fn m2m_acc(child: &[C64], shift: &[C64], p: usize, out: &mut [C64]) {
    for n in 0..p {
        for m in 0..=n as isize {
            let mut acc = ZERO;
            for k in 0..=n {
                let rest = (n - k) as isize;
                let lo = (-(k as isize)).max(m - rest);
                let hi = (k as isize).min(m + rest);
                for l in lo..=hi {
                    acc += child[idx(k, l)] * shift[idx(n - k, m - l)].conj();
                }
            }
            out[idx(n, m)] += acc;
        }
    }
}

/// Multipole to local: `theta = I(c_target - c_source)` for degrees `< 2p`.
///
/// Every source degree `n < p` feeds every target degree `k < p`. The square
/// truncation is symmetric under exchange of source and target.
pub(crate) fn m2l_acc(src: &[C64], theta: &[C64], p: usize, out: &mut [C64]) {
    for k in 0..p {
        let sign = parity(k);
        for l in 0..=k as isize {
            let mut acc = ZERO;
            for n in 0..p {
                let ni = n as isize;
                let m_src = &src[idx(n, -ni)..=idx(n, ni)];
                let start = idx(n + k, -ni + l);
                let t = &theta[start..start + 2 * n + 1];
                for (a, b) in m_src.iter().zip(t) {
                    acc += a * b;
                }
            }
            out[idx(k, l)] += acc * sign;
        }
    }
}

/// Local re-centring: `shift = R(c_child - c_parent)` with all orders.
pub(crate) fn l2l_acc(parent: &[C64], shift: &[C64], p: usize, out: &mut [C64]) {
    for j in 0..p {
        for i in 0..=j as isize {
            let mut acc = ZERO;
            for k in j..p {
                let rest = (k - j) as isize;
                let lo = (-(k as isize)).max(i - rest);
                let hi = (k as isize).min(i + rest);
                for l in lo..=hi {
                    acc += parent[idx(k, l)] * shift[idx(k - j, l - i)].conj();
                }
            }
            out[idx(j, i)] += acc;
        }
    }
}

/// `Re Σ L_n^m conj(R_n^m(d))` using the symmetry of the coefficients.
pub(crate) fn eval_local_with(coeffs: &[C64], d: Vec3, p: usize, scratch: &mut [C64]) -> f64 {
    regular_nonnegative(d, p, scratch);
    let mut total = 0.0;
    for n in 0..p {
        let c0 = idx(n, 0);
        let mut ring = 0.0;
        for m in 1..=n {
            let a = coeffs[c0 + m];
            let b = scratch[c0 + m];
            ring += a.re * b.re + a.im * b.im;
        }
        total += coeffs[c0].re * scratch[c0].re + coeffs[c0].im * scratch[c0].im + 2.0 * ring;
    }
    total
}

pub fn particle_to_multipole(positions: &[Vec3], charges: &[f64], centre: Vec3, p: usize) -> MultipoleExpansion {
    let mut out = MultipoleExpansion::zero(centre, p);
    let mut scratch = vec![ZERO; p * p];
    for (x, &q) in positions.iter().zip(charges) {
        p2m_acc(q, sub(*x, centre), p, &mut scratch, &mut out.coeffs);
    }
    mirror(p, &mut out.coeffs);
    out
}

/// Local expansion about `centre` of the field of point charges away from it.
pub fn particle_to_local(positions: &[Vec3], charges: &[f64], centre: Vec3, p: usize) -> Result<LocalExpansion> {
    let mut out = LocalExpansion::zero(centre, p);
    let mut theta = vec![ZERO; p * p];
    for (i, (x, &q)) in positions.iter().zip(charges).enumerate() {
        let r = sub(centre, *x);
        if r == [0.0; 3] {
            return Err(Error::CoincidentParticles { i, j: i });
        }
        irregular(r, p, &mut theta);
        for k in 0..p {
            for l in 0..=k as isize {
                out.coeffs[idx(k, l)] += theta[idx(k, l)] * (q * parity(k));
            }
        }
    }
    mirror(p, &mut out.coeffs);
    Ok(out)
}

pub fn m2m(child: &MultipoleExpansion, new_centre: Vec3) -> MultipoleExpansion {
    let p = child.order;
    if child.centre == new_centre {
        return child.clone();
    }
    let mut shift = vec![ZERO; p * p];
    regular(sub(child.centre, new_centre), p, &mut shift);
    let mut out = MultipoleExpansion::zero(new_centre, p);
    m2m_acc(&child.coeffs, &shift, p, &mut out.coeffs);
    mirror(p, &mut out.coeffs);
    out
}

/// Converts a multipole into a local expansion about `target_centre`. The two
/// cells, both of side `cell_side`, must not touch.
pub fn m2l(source: &MultipoleExpansion, target_centre: Vec3, cell_side: f64) -> Result<LocalExpansion> {
    let r = sub(target_centre, source.centre);
    let gap = r.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    if gap < 2.0 * cell_side * (1.0 - 1e-9) {
        return Err(Error::NotWellSeparated);
    }
    let p = source.order;
    let mut theta = vec![ZERO; (2 * p) * (2 * p)];
    irregular(r, 2 * p, &mut theta);
    let mut out = LocalExpansion::zero(target_centre, p);
    m2l_acc(&source.coeffs, &theta, p, &mut out.coeffs);
    mirror(p, &mut out.coeffs);
    Ok(out)
}

pub fn l2l(parent: &LocalExpansion, child_centre: Vec3) -> LocalExpansion {
    let p = parent.order;
    if parent.centre == child_centre {
        return parent.clone();
    }
    let mut shift = vec![ZERO; p * p];
    regular(sub(child_centre, parent.centre), p, &mut shift);
    let mut out = LocalExpansion::zero(child_centre, p);
    l2l_acc(&parent.coeffs, &shift, p, &mut out.coeffs);
    mirror(p, &mut out.coeffs);
    out
}

/// Potential of a local expansion at `x` (real part of the series).
pub fn evaluate_local(expansion: &LocalExpansion, x: Vec3) -> f64 {
    let p = expansion.order;
    let mut scratch = vec![ZERO; p * p];
    eval_local_with(&expansion.coeffs, sub(x, expansion.centre), p, &mut scratch)
}

/// Imaginary part of the local series at `x`; zero up to round-off for symmetric coefficients.
pub fn evaluate_local_imaginary(expansion: &LocalExpansion, x: Vec3) -> f64 {
    let p = expansion.order;
    let mut r = vec![ZERO; p * p];
    regular(sub(x, expansion.centre), p, &mut r);
    expansion.coeffs.iter().zip(&r).map(|(a, b)| a * b.conj()).sum::<C64>().im
}

/// Far-field potential of a multipole expansion at `x`.
pub fn evaluate_multipole(expansion: &MultipoleExpansion, x: Vec3) -> f64 {
    let p = expansion.order;
    let mut theta = vec![ZERO; p * p];
    irregular(sub(x, expansion.centre), p, &mut theta);
    expansion.coeffs.iter().zip(&theta).map(|(a, b)| a * b).sum::<C64>().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn coulomb(xs: &[Vec3], qs: &[f64], at: Vec3) -> f64 {
        xs.iter()
            .zip(qs)
            .map(|(x, q)| {
                let d = sub(at, *x);
                q / (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
            })
            .sum()
    }

    fn random_cell(seed: u64, count: usize, centre: Vec3, half: f64) -> (Vec<Vec3>, Vec<f64>) {
        let mut rng = stream_rng(seed, 0);
        let xs = (0..count)
            .map(|_| {
                [
                    centre[0] + rng.gen_range(-half..half),
                    centre[1] + rng.gen_range(-half..half),
                    centre[2] + rng.gen_range(-half..half),
                ]
            })
            .collect();
        let qs = (0..count).map(|k| if k % 2 == 0 { 1.0 } else { -0.7 }).collect();
        (xs, qs)
    }

    #[test]
    fn charge_at_centre() {
        let m = particle_to_multipole(&[[1.0, 2.0, 3.0]], &[2.5], [1.0, 2.0, 3.0], 6);
        assert_eq!(m.coeff(0, 0), C64::new(2.5, 0.0));
        assert!(m.coeffs()[1..].iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn symmetric_pair_has_no_odd_degrees() {
        let c = [0.5; 3];
        let m = particle_to_multipole(&[[0.6, 0.45, 0.7], [0.4, 0.55, 0.3]], &[1.0, 1.0], c, 8);
        for n in (1..8).step_by(2) {
            for mm in -(n as isize)..=n as isize {
                assert!(m.coeff(n, mm).norm() < 1e-15);
            }
        }
        assert!(m.symmetry_defect() < 1e-15);
    }

    #[test]
    fn far_field_converges_with_order() {
        let centre = [0.0; 3];
        let half = 0.5;
        let (xs, qs) = random_cell(3, 10, centre, half);
        let radius = half * 3f64.sqrt();
        let mut rng = stream_rng(4, 1);
        let probes: Vec<Vec3> = (0..20)
            .map(|_| {
                let v: Vec3 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let s = 5.0 * radius / (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                [v[0] * s, v[1] * s, v[2] * s]
            })
            .collect();
        let err = |p: usize| {
            let m = particle_to_multipole(&xs, &qs, centre, p);
            probes.iter().map(|&x| (evaluate_multipole(&m, x) - coulomb(&xs, &qs, x)).abs()).fold(0.0, f64::max)
        };
        let (e4, e12) = (err(4), err(12));
        assert!(e12 * 10.0 <= e4, "p=4 {e4:e}, p=12 {e12:e}");
        assert!(e12 < 1e-8);
    }

    #[test]
    fn m2m_identity_and_two_paths() {
        let (xs, qs) = random_cell(7, 1, [0.0; 3], 0.5);
        let a = [0.1, -0.2, 0.05];
        let b = [0.6, 0.4, -0.3];
        let ma = particle_to_multipole(&xs, &qs, a, 10);
        assert_eq!(m2m(&ma, a), ma);
        let via = m2m(&ma, b);
        let direct = particle_to_multipole(&xs, &qs, b, 10);
        for (u, v) in via.coeffs().iter().zip(direct.coeffs()) {
            assert!((u - v).norm() < 1e-12, "{u} vs {v}");
        }
    }

    #[test]
    fn children_merge_into_parent() {
        let p = 10;
        let parent = [0.0; 3];
        let mut all_x = Vec::new();
        let mut all_q = Vec::new();
        let mut merged = MultipoleExpansion::zero(parent, p);
        for oct in 0..8u64 {
            let c = [
                if oct & 1 == 0 { -0.25 } else { 0.25 },
                if oct & 2 == 0 { -0.25 } else { 0.25 },
                if oct & 4 == 0 { -0.25 } else { 0.25 },
            ];
            let (xs, qs) = random_cell(20 + oct, 5, c, 0.25);
            let child = particle_to_multipole(&xs, &qs, c, p);
            let shifted = m2m(&child, parent);
            for (a, b) in merged.coeffs_mut().iter_mut().zip(shifted.coeffs()) {
                *a += b;
            }
            all_x.extend(xs);
            all_q.extend(qs);
        }
        let direct = particle_to_multipole(&all_x, &all_q, parent, p);
        for (u, v) in merged.coeffs().iter().zip(direct.coeffs()) {
            assert!((u - v).norm() < 1e-12);
        }
        let far = [2.1, -1.7, 1.3];
        let exact = coulomb(&all_x, &all_q, far);
        assert!((evaluate_multipole(&merged, far) - exact).abs() < 1e-5 * exact.abs().max(1.0));
    }

    #[test]
    fn m2l_zero_linear_and_separated() {
        let p = 8;
        let zero = MultipoleExpansion::zero([0.0; 3], p);
        let l = m2l(&zero, [2.0, 0.0, 0.0], 1.0).unwrap();
        assert!(l.coeffs().iter().all(|c| c.norm() == 0.0));

        let (xs, qs) = random_cell(8, 6, [0.0; 3], 0.5);
        let m = particle_to_multipole(&xs, &qs, [0.0; 3], p);
        let mut m3 = m.clone();
        m3.scale(-3.0);
        let a = m2l(&m, [0.0, 2.0, 2.0], 1.0).unwrap();
        let b = m2l(&m3, [0.0, 2.0, 2.0], 1.0).unwrap();
        for (u, v) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((u * -3.0 - v).norm() <= 1e-14 * (1.0 + v.norm()));
        }
        assert_eq!(m2l(&m, [1.0, 0.0, 0.0], 1.0), Err(Error::NotWellSeparated));
    }

    #[test]
    fn m2l_single_charge_converges() {
        let q = [1.0];
        let x = [[0.3, -0.2, 0.4]];
        let target = [2.0, 1.0, -2.0];
        let exact = coulomb(&x, &q, target);
        let err = |p: usize| {
            let m = particle_to_multipole(&x, &q, [0.0; 3], p);
            let l = m2l(&m, target, 1.0).unwrap();
            (evaluate_local(&l, target) - exact).abs()
        };
        let (e4, e12) = (err(4), err(12));
        assert!(e12 * 10.0 <= e4, "{e4:e} {e12:e}");
    }

    #[test]
    fn local_evaluation_basics() {
        let z = LocalExpansion::zero([0.0; 3], 5);
        assert_eq!(evaluate_local(&z, [0.1, 0.2, 0.3]), 0.0);
        let mut c = LocalExpansion::zero([1.0; 3], 5);
        c.coeffs_mut()[0] = C64::new(2.5, 0.0);
        assert_eq!(evaluate_local(&c, [1.2, 0.9, 1.1]), 2.5);
    }

    #[test]
    fn l2l_identity_and_two_paths() {
        let (xs, qs) = random_cell(11, 8, [3.0, 0.0, 0.0], 0.5);
        let parent = particle_to_local(&xs, &qs, [0.0; 3], 10).unwrap();
        assert_eq!(l2l(&parent, [0.0; 3]), parent);
        let child = l2l(&parent, [0.25, -0.25, 0.25]);
        for &x in &[[0.3, -0.2, 0.1], [0.49, -0.01, 0.3], [0.1, -0.45, 0.45]] {
            let a = evaluate_local(&parent, x);
            let b = evaluate_local(&child, x);
            assert!((a - b).abs() < 1e-12, "{a} {b}");
            assert!(evaluate_local_imaginary(&child, x).abs() < 1e-10 * a.abs());
        }
        let mut doubled = parent.clone();
        doubled.scale(2.0);
        let cd = l2l(&doubled, [0.25, -0.25, 0.25]);
        for (u, v) in child.coeffs().iter().zip(cd.coeffs()) {
            assert!((u * 2.0 - v).norm() <= 1e-14 * (1.0 + v.norm()));
        }
    }

    #[test]
    fn m2l_is_symmetric_under_exchange() {
        // <M_a, m2l(M_b → a)> = <M_b, m2l(M_a → b)>
        let p = 9;
        let (xa, qa) = random_cell(12, 5, [0.0; 3], 0.5);
        let (xb, qb) = random_cell(13, 5, [2.0, 1.0, -3.0], 0.5);
        let ma = particle_to_multipole(&xa, &qa, [0.0; 3], p);
        let mb = particle_to_multipole(&xb, &qb, [2.0, 1.0, -3.0], p);
        let la = m2l(&mb, ma.centre, 1.0).unwrap();
        let lb = m2l(&ma, mb.centre, 1.0).unwrap();
        let ea: C64 = ma.coeffs().iter().zip(la.coeffs()).map(|(a, b)| a * b).sum();
        let eb: C64 = mb.coeffs().iter().zip(lb.coeffs()).map(|(a, b)| a * b).sum();
        assert!((ea - eb).norm() < 1e-13);
    }
}
