use rand::Rng;
use scalemd_core::cells::build_cell_grid;
use scalemd_core::lj::{assign_random_velocities, compute_forces_and_potential, IntegratorConfig, LjParams, MdSystem};
use scalemd_core::neighbour::build_neighbour_matrix;
use scalemd_core::oracle::{direct_lj_total, direct_pair_list};
use scalemd_core::particles::{create_cubic_lattice, minimum_image_displacement};
use scalemd_core::rng::{stream_rng, STREAM_POSITIONS};
use scalemd_core::{ParticleState, SimulationDomain};

fn random_gas(n: usize, side: f64, seed: u64) -> (SimulationDomain, ParticleState) {
    let mut rng = stream_rng(seed, STREAM_POSITIONS);
    let xs = (0..n).map(|_| [rng.gen::<f64>() * side, rng.gen::<f64>() * side, rng.gen::<f64>() * side]).collect();
    (SimulationDomain::periodic_cube(side).unwrap(), ParticleState::at_rest(xs))
}

fn dist(d: &SimulationDomain, s: &ParticleState, i: usize, j: usize) -> f64 {
    let v = minimum_image_displacement(d, s.positions[i], s.positions[j]);
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[test]
fn neighbour_pairs_match_exhaustive_search() {
    for seed in 0..25 {
        let (d, s) = random_gas(500, 10.0, seed);
        let grid = build_cell_grid(&d, 2.75, &s).unwrap();
        let nl = build_neighbour_matrix(&grid, &s, 2.75, 1 + seed as usize % 4).unwrap();
        let mut got: Vec<_> = nl.pairs().filter(|&(i, j)| dist(&d, &s, i, j) <= 2.5).collect();
        got.sort_unstable();
        assert_eq!(got, direct_pair_list(&s, &d, 2.5), "seed {seed}");
        let mut listed: Vec<_> = nl.pairs().collect();
        listed.sort_unstable();
        assert_eq!(listed, direct_pair_list(&s, &d, 2.75), "seed {seed}");
    }
}

#[test]
fn forces_match_oracle_on_random_configurations() {
    for seed in 0..10 {
        // jittered lattice: no overlaps, plenty of pairs near the cutoff
        let (d, mut s) = create_cubic_lattice(8, 1.1).unwrap();
        let mut rng = stream_rng(seed, STREAM_POSITIONS);
        for x in &mut s.positions {
            for c in x.iter_mut() {
                *c += rng.gen_range(-0.1..0.1);
            }
        }
        s.wrap_into(&d);
        for shifted in [false, true] {
            let params = LjParams::new(1.0, 1.0, 2.5, shifted).unwrap();
            let grid = build_cell_grid(&d, 2.75, &s).unwrap();
            let nl = build_neighbour_matrix(&grid, &s, 2.75, 1).unwrap();
            let mut work = s.clone();
            let e = compute_forces_and_potential(&mut work, &d, &nl, &params, 3).unwrap();
            let (e_ref, f_ref) = direct_lj_total(&s, &d, &params).unwrap();
            assert!((e - e_ref).abs() <= 1e-10 * e_ref.abs());
            let scale = f_ref.iter().map(|f| f.iter().map(|c| c * c).sum::<f64>().sqrt()).fold(0.0, f64::max);
            for (a, b) in work.forces.iter().zip(&f_ref) {
                for k in 0..3 {
                    assert!((a[k] - b[k]).abs() <= 1e-10 * scale);
                }
            }
        }
    }
}

#[test]
fn list_stays_valid_between_rebuilds() {
    // every step's forces must equal the oracle's, so no pair ever slips past the skin
    let (d, s) = create_cubic_lattice(6, 1.12).unwrap();
    let mut s = s;
    assign_random_velocities(&mut s, 1.5, 3);
    let params = LjParams::reduced(2.5).unwrap();
    let mut sys = MdSystem::new(s, d, params, 2.75, IntegratorConfig::new(0.005).unwrap(), 2).unwrap();
    for _ in 0..200 {
        let e = sys.step().unwrap();
        let (e_ref, _) = direct_lj_total(&sys.state, &sys.domain, &params).unwrap();
        assert!((e.potential - e_ref).abs() <= 1e-10 * e_ref.abs().max(1.0));
    }
    assert!(sys.rebuilds() >= 200 / 10);
}

#[test]
fn nve_energy_drift_is_small() {
    let (d, mut s) = create_cubic_lattice(8, 1.12).unwrap();
    assign_random_velocities(&mut s, 0.3, 11);
    let params = LjParams::new(1.0, 1.0, 2.5, true).unwrap();
    let mut sys = MdSystem::new(s, d, params, 2.75, IntegratorConfig::default(), 2).unwrap();
    let e0 = sys.energy().total;
    for _ in 0..500 {
        let e = sys.step().unwrap();
        assert!(((e.total - e0) / e0).abs() < 1e-3);
    }
}

#[test]
fn worker_count_only_changes_rounding() {
    let run = |workers| {
        let (d, mut s) = create_cubic_lattice(10, 0.945).unwrap();
        assign_random_velocities(&mut s, 0.05, 1);
        let mut sys = MdSystem::new(s, d, LjParams::reduced(2.5).unwrap(), 2.75, IntegratorConfig::default(), workers).unwrap();
        (0..30).map(|_| sys.step().unwrap().total).last().unwrap()
    };
    let one = run(1);
    assert_eq!(one.to_bits(), run(1).to_bits());
    for w in [2, 4, 7] {
        let other = run(w);
        assert!(((other - one) / one).abs() < 1e-8);
        assert_eq!(other.to_bits(), run(w).to_bits());
    }
}
