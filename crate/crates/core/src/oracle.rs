//! Brute-force O(N²) references.
//!
//! These deliberately share no code with the production paths they check: the
//! pair potential, the minimum-image rule and the cutoff test are written out
//! again here in the most direct form.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lj::LjParams;
use crate::math;
use crate::particles::{ParticleState, SimulationDomain, Vec3};

fn nearest_image(domain: &SimulationDomain, a: Vec3, b: Vec3) -> Vec3 {
    let mut d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    for k in 0..3 {
        if domain.periodic[k] {
            let e = domain.extent[k];
            let shifted = d[k] - e * math::round(d[k] / e);
            // keep ties where the production rule leaves them (|d| = e/2 unshifted)
            if shifted.abs() < d[k].abs() {
                d[k] = shifted;
            }
        }
    }
    d
}

fn length(d: Vec3) -> f64 {
    math::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
}

/// Total Lennard-Jones energy and per-particle forces over all distinct pairs.
pub fn direct_lj_total(
    state: &ParticleState,
    domain: &SimulationDomain,
    params: &LjParams,
) -> Result<(f64, Vec<Vec3>)> {
    let n = state.len();
    let mut forces = vec![[0.0; 3]; n];
    let mut energy = 0.0;
    let v_cut = {
        let sr = params.sigma / params.cutoff;
        let sr6 = sr * sr * sr * sr * sr * sr;
        4.0 * params.epsilon * (sr6 * sr6 - sr6)
    };
    for i in 0..n {
        for j in (i + 1)..n {
            let d = nearest_image(domain, state.positions[i], state.positions[j]);
            let r = length(d);
            if !(r > 0.0) {
                return Err(Error::NonPositiveDistance { i, j });
            }
            if r > params.cutoff {
                continue;
            }
            let sr = params.sigma / r;
            let sr6 = sr * sr * sr * sr * sr * sr;
            let sr12 = sr6 * sr6;
            energy += 4.0 * params.epsilon * (sr12 - sr6);
            if params.shifted {
                energy -= v_cut;
            }
            // -dV/dr
            let magnitude = 4.0 * params.epsilon * (12.0 * sr12 - 6.0 * sr6) / r;
            for k in 0..3 {
                let f = magnitude * d[k] / r;
                forces[i][k] += f;
                forces[j][k] -= f;
            }
        }
    }
    Ok((energy, forces))
}

/// Free-space Coulomb energy `½ Σ q_i φ_i` and potentials `φ_i = Σ_{j≠i} q_j / r_ij`.
pub fn direct_coulomb(state: &ParticleState) -> Result<(f64, Vec<f64>)> {
    let n = state.len();
    let mut phi = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let x = state.positions[i];
            let y = state.positions[j];
            let r = length([x[0] - y[0], x[1] - y[1], x[2] - y[2]]);
            if r == 0.0 {
                return Err(Error::CoincidentParticles { i: i.min(j), j: i.max(j) });
            }
            acc += state.charges[j] / r;
        }
        phi[i] = acc;
    }
    let energy = 0.5 * state.charges.iter().zip(&phi).map(|(q, p)| q * p).sum::<f64>();
    Ok((energy, phi))
}

/// Every unordered pair `(i, j)`, `i < j`, with minimum-image distance ≤ `cutoff`.
pub fn direct_pair_list(state: &ParticleState, domain: &SimulationDomain, cutoff: f64) -> Vec<(usize, usize)> {
    let n = state.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = nearest_image(domain, state.positions[i], state.positions[j]);
            if length(d) <= cutoff {
                out.push((i, j));
            }
        }
    }
    out
}

/// Exact change in Coulomb energy when charge `moved` goes to `destination`.
pub fn direct_energy_diff(state: &ParticleState, moved: usize, destination: Vec3) -> Result<f64> {
    let q = state.charges[moved];
    let origin = state.positions[moved];
    let mut delta = 0.0;
    for (j, (x, qj)) in state.positions.iter().zip(&state.charges).enumerate() {
        if j == moved {
            continue;
        }
        let r_new = length([destination[0] - x[0], destination[1] - x[1], destination[2] - x[2]]);
        let r_old = length([origin[0] - x[0], origin[1] - x[1], origin[2] - x[2]]);
        if r_new == 0.0 || r_old == 0.0 {
            return Err(Error::CoincidentParticles { i: moved.min(j), j: moved.max(j) });
        }
        delta += q * qj * (1.0 / r_new - 1.0 / r_old);
    }
    Ok(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lj::LjParams;
    use rand::Rng;

    fn charges(xs: Vec<Vec3>, qs: Vec<f64>) -> ParticleState {
        ParticleState::with_charges(xs, qs).unwrap()
    }

    #[test]
    fn lj_reference_cases() {
        let d = SimulationDomain::periodic_cube(10.0).unwrap();
        let p = LjParams::reduced(2.5).unwrap();
        let s = ParticleState::at_rest(vec![[1.0; 3], [1.0 + 2f64.powf(1.0 / 6.0), 1.0, 1.0]]);
        let (u, f) = direct_lj_total(&s, &d, &p).unwrap();
        assert!((u + 1.0).abs() < 1e-14);
        assert!(f.iter().flatten().all(|c| c.abs() < 1e-12));
        let (u, f) = direct_lj_total(&ParticleState::at_rest(vec![[1.0; 3]]), &d, &p).unwrap();
        assert_eq!(u, 0.0);
        assert_eq!(f, vec![[0.0; 3]]);
    }

    #[test]
    fn coulomb_reference_cases() {
        let (u, _) = direct_coulomb(&charges(vec![[0.0; 3], [2.0, 0.0, 0.0]], vec![1.0, -1.0])).unwrap();
        assert_eq!(u, -0.5);
        let (u, _) = direct_coulomb(&charges(vec![[0.0; 3], [0.0, 1.0, 0.0]], vec![1.0, 1.0])).unwrap();
        assert_eq!(u, 1.0);
        assert!(matches!(
            direct_coulomb(&charges(vec![[1.0; 3], [1.0; 3]], vec![1.0, 1.0])),
            Err(Error::CoincidentParticles { i: 0, j: 1 })
        ));
    }

    #[test]
    fn coulomb_superposition() {
        // Potentials at a fixed set of probe points from two disjoint source sets.
        let mut rng = crate::rng::stream_rng(5, 0);
        let mut pts: Vec<Vec3> = (0..30).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        let qa: Vec<f64> = (0..30).map(|k| if k < 15 { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
        let qb: Vec<f64> = (0..30).map(|k| if k >= 15 { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
        let qsum: Vec<f64> = qa.iter().zip(&qb).map(|(a, b)| a + b).collect();
        pts[0] = [0.5; 3];
        let (_, pa) = direct_coulomb(&charges(pts.clone(), qa)).unwrap();
        let (_, pb) = direct_coulomb(&charges(pts.clone(), qb)).unwrap();
        let (_, ps) = direct_coulomb(&charges(pts, qsum)).unwrap();
        for k in 0..30 {
            assert!((pa[k] + pb[k] - ps[k]).abs() < 1e-12 * (1.0 + ps[k].abs()));
        }
    }

    #[test]
    fn coulomb_permutation_equivariant() {
        let xs = vec![[0.1, 0.2, 0.3], [0.9, 0.1, 0.4], [0.5, 0.5, 0.9], [0.2, 0.8, 0.1]];
        let qs = vec![1.0, -2.0, 0.5, 1.5];
        let (u, p) = direct_coulomb(&charges(xs.clone(), qs.clone())).unwrap();
        let perm = [2, 0, 3, 1];
        let (u2, p2) = direct_coulomb(&charges(
            perm.iter().map(|&k| xs[k]).collect(),
            perm.iter().map(|&k| qs[k]).collect(),
        ))
        .unwrap();
        assert!((u - u2).abs() < 1e-14);
        for (slot, &k) in perm.iter().enumerate() {
            assert!((p2[slot] - p[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn pair_list_boundary_and_trivial() {
        let d = SimulationDomain::periodic_cube(10.0).unwrap();
        let s = ParticleState::at_rest(vec![[1.0, 1.0, 1.0], [3.5, 1.0, 1.0]]);
        assert_eq!(direct_pair_list(&s, &d, 2.5), vec![(0, 1)]);
        assert!(direct_pair_list(&ParticleState::at_rest(vec![[1.0; 3]]), &d, 2.5).is_empty());
    }

    #[test]
    fn energy_diff_cases() {
        let lone = charges(vec![[1.0; 3]], vec![1.0]);
        assert_eq!(direct_energy_diff(&lone, 0, [2.0; 3]).unwrap(), 0.0);
        let r = 1.5;
        let s = charges(vec![[0.0; 3], [r, 0.0, 0.0]], vec![2.0, -3.0]);
        let du = direct_energy_diff(&s, 1, [2.0 * r, 0.0, 0.0]).unwrap();
        assert!((du - (-(2.0 * -3.0) / (2.0 * r))).abs() < 1e-14);
    }

    #[test]
    fn energy_diff_matches_total_difference() {
        let mut rng = crate::rng::stream_rng(9, 0);
        for _ in 0..5 {
            let n = 40;
            let xs: Vec<Vec3> = (0..n).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
            let qs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let before = charges(xs, qs);
            let m = rng.gen_range(0..n);
            let dest = [rng.gen(), rng.gen(), rng.gen()];
            let mut after = before.clone();
            after.positions[m] = dest;
            let du = direct_energy_diff(&before, m, dest).unwrap();
            let (u0, _) = direct_coulomb(&before).unwrap();
            let (u1, _) = direct_coulomb(&after).unwrap();
            assert!((du - (u1 - u0)).abs() <= 1e-12 * u0.abs().max(u1.abs()));
        }
    }
}
