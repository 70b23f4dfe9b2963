//! Truncated Lennard-Jones interactions and velocity Verlet integration.
//!
//! The pair kernel needs one division per pair: with `s2 = σ²/r²`,
//! `V = 4ε(s2⁶ - s2³)` and the force on `i` is `24ε/r² · (2 s2⁶ - s2³) · (x_i - x_j)`.

use alloc::vec::Vec;

use rand::Rng;

use crate::cells::build_cell_grid;
use crate::error::{Error, Result};
use crate::neighbour::{build_neighbour_matrix, NeighbourMatrix, RebuildPolicy};
use crate::par;
use crate::particles::{dot, ParticleState, SimulationDomain, Vec3};
use crate::rng::{stream_rng, STREAM_VELOCITIES};

const SIXTH_ROOT_OF_TWO: f64 = 1.122_462_048_309_373;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LjParams {
    pub epsilon: f64,
    pub sigma: f64,
    pub cutoff: f64,
    /// Subtract `V(r_c)` from every in-range pair energy.
    pub shifted: bool,
}

impl LjParams {
    pub fn new(epsilon: f64, sigma: f64, cutoff: f64, shifted: bool) -> Result<Self> {
        if !(epsilon > 0.0) || !(sigma > 0.0) || !(cutoff > 0.0) {
            return Err(Error::InvalidParameter("epsilon, sigma and cutoff must be positive"));
        }
        if !(cutoff > sigma) {
            return Err(Error::InvalidParameter("cutoff must exceed sigma"));
        }
        Ok(Self { epsilon, sigma, cutoff, shifted })
    }

    /// Reduced units, plain truncation at `cutoff`.
    pub fn reduced(cutoff: f64) -> Result<Self> {
        Self::new(1.0, 1.0, cutoff, false)
    }

    /// Purely repulsive (WCA) form: truncated and shifted at the potential minimum `2^(1/6)σ = cutoff`.
    pub fn repulsive(epsilon: f64, cutoff: f64) -> Result<Self> {
        Self::new(epsilon, cutoff / SIXTH_ROOT_OF_TWO, cutoff, true)
    }

    /// Energy subtracted per in-range pair.
    pub fn energy_shift(&self) -> f64 {
        if self.shifted {
            kernel(self.cutoff * self.cutoff, self.sigma * self.sigma, self.epsilon).0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
}

impl IntegratorConfig {
    pub const DEFAULT_DT: f64 = 0.005;

    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter("time step must be positive"));
        }
        Ok(Self { dt })
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt: Self::DEFAULT_DT }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub potential: f64,
    pub kinetic: f64,
    pub total: f64,
}

impl EnergyReport {
    pub fn new(potential: f64, kinetic: f64) -> Self {
        Self { potential, kinetic, total: potential + kinetic }
    }
}

/// Returns the unshifted pair energy and the force prefactor `-V'(r)/r`.
#[inline(always)]
fn kernel(r2: f64, sigma2: f64, epsilon: f64) -> (f64, f64) {
    let inv_r2 = 1.0 / r2;
    let s2 = sigma2 * inv_r2;
    let s6 = s2 * s2 * s2;
    let s12 = s6 * s6;
    (4.0 * epsilon * (s12 - s6), 24.0 * epsilon * inv_r2 * (2.0 * s12 - s6))
}

pub fn lj_pair_energy(r: f64, params: &LjParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveDistance { i: 0, j: 0 });
    }
    if r > params.cutoff {
        return Ok(0.0);
    }
    let (e, _) = kernel(r * r, params.sigma * params.sigma, params.epsilon);
    Ok(e - params.energy_shift())
}

/// Force on particle `i` for `disp = x_i - x_j`.
pub fn lj_pair_force(disp: Vec3, params: &LjParams) -> Result<Vec3> {
    let r2 = dot(disp, disp);
    if !(r2 > 0.0) {
        return Err(Error::NonPositiveDistance { i: 0, j: 0 });
    }
    if r2 > params.cutoff * params.cutoff {
        return Ok([0.0; 3]);
    }
    let (_, f) = kernel(r2, params.sigma * params.sigma, params.epsilon);
    Ok([f * disp[0], f * disp[1], f * disp[2]])
}

/// Per-worker force accumulators reused across steps.
#[derive(Debug, Default, Clone)]
pub struct ForceWorkspace {
    buffers: Vec<Vec<Vec3>>,
}

impl ForceWorkspace {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Overwrites `state.forces` with the Lennard-Jones forces over the stored pairs
/// and returns the potential energy.
pub fn compute_forces_and_potential(
    state: &mut ParticleState,
    domain: &SimulationDomain,
    nlist: &NeighbourMatrix,
    params: &LjParams,
    workers: usize,
) -> Result<f64> {
    compute_forces_with(&mut ForceWorkspace::new(), state, domain, nlist, params, workers)
}

pub fn compute_forces_with(
    ws: &mut ForceWorkspace,
    state: &mut ParticleState,
    domain: &SimulationDomain,
    nlist: &NeighbourMatrix,
    params: &LjParams,
    workers: usize,
) -> Result<f64> {
    let n = state.len();
    if nlist.num_particles() != n {
        return Err(Error::InvalidParameter("neighbour matrix was built for a different particle set"));
    }
    let ranges = par::split_weighted(nlist.counts(), workers);
    let rc2 = params.cutoff * params.cutoff;
    let sigma2 = params.sigma * params.sigma;
    let eps = params.epsilon;
    let shift = params.energy_shift();
    let positions = &state.positions;

    // Accumulates rows `range` into `forces`, returning the range's energy.
    let accumulate = |forces: &mut [Vec3], range: core::ops::Range<usize>| -> Result<f64> {
        let mut energy = 0.0;
        for i in range {
            let xi = positions[i];
            let mut fi = [0.0; 3];
            for &j in nlist.neighbours(i) {
                let j = j as usize;
                let d = domain.minimum_image(xi, positions[j]);
                let r2 = dot(d, d);
                if r2 > rc2 {
                    continue;
                }
                if !(r2 > 0.0) {
                    return Err(Error::NonPositiveDistance { i, j });
                }
                let (e, f) = kernel(r2, sigma2, eps);
                energy += e - shift;
                let fd = [f * d[0], f * d[1], f * d[2]];
                fi[0] += fd[0];
                fi[1] += fd[1];
                fi[2] += fd[2];
                forces[j][0] -= fd[0];
                forces[j][1] -= fd[1];
                forces[j][2] -= fd[2];
            }
            forces[i][0] += fi[0];
            forces[i][1] += fi[1];
            forces[i][2] += fi[2];
        }
        Ok(energy)
    };

    if ranges.len() <= 1 {
        let mut forces = core::mem::take(&mut state.forces);
        forces.clear();
        forces.resize(n, [0.0; 3]);
        let e = accumulate(&mut forces, 0..n);
        state.forces = forces;
        return e;
    }

    ws.buffers.resize_with(ranges.len(), Vec::new);
    let energies = par::map_with(&mut ws.buffers[..ranges.len()], &ranges, |buf, range| {
        buf.clear();
        buf.resize(n, [0.0; 3]);
        accumulate(buf, range)
    });
    let mut potential = 0.0;
    for e in energies {
        potential += e?;
    }
    let buffers = &ws.buffers[..ranges.len()];
    state.forces.resize(n, [0.0; 3]);
    par::for_each_block_mut(&mut state.forces, 1, workers, |start, block| {
        for (k, f) in block.iter_mut().enumerate() {
            let i = start + k;
            let mut acc = [0.0; 3];
            for b in buffers {
                acc[0] += b[i][0];
                acc[1] += b[i][1];
                acc[2] += b[i][2];
            }
            *f = acc;
        }
    });
    Ok(potential)
}

pub fn kinetic_energy(state: &ParticleState) -> f64 {
    state
        .velocities
        .iter()
        .zip(&state.masses)
        .map(|(v, m)| 0.5 * m * dot(*v, *v))
        .sum()
}

/// One velocity Verlet step. `force_provider` must overwrite `state.forces` for the
/// new positions and return the potential energy, which is passed through.
pub fn velocity_verlet_step<F>(
    state: &mut ParticleState,
    domain: &SimulationDomain,
    cfg: &IntegratorConfig,
    mut force_provider: F,
) -> Result<f64>
where
    F: FnMut(&mut ParticleState) -> Result<f64>,
{
    let half = 0.5 * cfg.dt;
    for i in 0..state.len() {
        let inv_m = 1.0 / state.masses[i];
        let f = state.forces[i];
        let v = &mut state.velocities[i];
        for a in 0..3 {
            v[a] += half * f[a] * inv_m;
        }
        let x = &mut state.positions[i];
        for a in 0..3 {
            x[a] += cfg.dt * v[a];
        }
        domain.wrap(x);
    }
    let potential = force_provider(state)?;
    for i in 0..state.len() {
        let inv_m = 1.0 / state.masses[i];
        let f = state.forces[i];
        let v = &mut state.velocities[i];
        for a in 0..3 {
            v[a] += half * f[a] * inv_m;
        }
    }
    Ok(potential)
}

/// Draws uniform random velocities, removes the centre-of-mass momentum and
/// rescales to `kinetic_per_particle · N` total kinetic energy.
pub fn assign_random_velocities(state: &mut ParticleState, kinetic_per_particle: f64, seed: u64) {
    let n = state.len();
    if n == 0 {
        return;
    }
    let mut rng = stream_rng(seed, STREAM_VELOCITIES);
    for v in &mut state.velocities {
        for c in v.iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
    }
    let total_mass: f64 = state.masses.iter().sum();
    let mut p = [0.0; 3];
    for (v, m) in state.velocities.iter().zip(&state.masses) {
        for a in 0..3 {
            p[a] += m * v[a];
        }
    }
    for v in &mut state.velocities {
        for a in 0..3 {
            v[a] -= p[a] / total_mass;
        }
    }
    let ke = kinetic_energy(state);
    let scale = if ke > 0.0 { crate::math::sqrt(kinetic_per_particle * n as f64 / ke) } else { 0.0 };
    for v in &mut state.velocities {
        for c in v.iter_mut() {
            *c *= scale;
        }
    }
}

/// A periodic Lennard-Jones system with its neighbour matrix and rebuild bookkeeping.
#[derive(Debug, Clone)]
pub struct MdSystem {
    pub state: ParticleState,
    pub domain: SimulationDomain,
    pub params: LjParams,
    pub integrator: IntegratorConfig,
    pub list_cutoff: f64,
    pub workers: usize,
    nlist: NeighbourMatrix,
    policy: RebuildPolicy,
    workspace: ForceWorkspace,
    potential: f64,
    rebuilds: usize,
}

impl MdSystem {
    /// Builds the neighbour matrix and evaluates the initial forces.
    pub fn new(
        state: ParticleState,
        domain: SimulationDomain,
        params: LjParams,
        list_cutoff: f64,
        integrator: IntegratorConfig,
        workers: usize,
    ) -> Result<Self> {
        if !state.is_consistent() {
            return Err(Error::InvalidParameter("particle arrays differ in length"));
        }
        let mut state = state;
        state.wrap_into(&domain);
        let policy = RebuildPolicy::new(params.cutoff, list_cutoff)?;
        let grid = build_cell_grid(&domain, list_cutoff, &state)?;
        let nlist = build_neighbour_matrix(&grid, &state, list_cutoff, workers)?;
        let mut sys = Self {
            state,
            domain,
            params,
            integrator,
            list_cutoff,
            workers: workers.max(1),
            nlist,
            policy,
            workspace: ForceWorkspace::new(),
            potential: 0.0,
            rebuilds: 0,
        };
        sys.policy.mark_built(&sys.state);
        sys.potential = compute_forces_with(
            &mut sys.workspace,
            &mut sys.state,
            &sys.domain,
            &sys.nlist,
            &sys.params,
            sys.workers,
        )?;
        Ok(sys)
    }

    pub fn neighbour_matrix(&self) -> &NeighbourMatrix {
        &self.nlist
    }

    /// Neighbour-matrix rebuilds performed since construction.
    pub fn rebuilds(&self) -> usize {
        self.rebuilds
    }

    pub fn energy(&self) -> EnergyReport {
        EnergyReport::new(self.potential, kinetic_energy(&self.state))
    }

    /// Advances one step and reports the energies after it.
    pub fn step(&mut self) -> Result<EnergyReport> {
        let Self { state, domain, params, integrator, list_cutoff, workers, nlist, policy, workspace, rebuilds, .. } =
            self;
        let potential = velocity_verlet_step(state, domain, integrator, |s| {
            policy.tick();
            if policy.needs_rebuild(s, domain) {
                let grid = build_cell_grid(domain, *list_cutoff, s)?;
                *nlist = build_neighbour_matrix(&grid, s, *list_cutoff, *workers)?;
                policy.mark_built(s);
                *rebuilds += 1;
            }
            compute_forces_with(workspace, s, domain, nlist, params, *workers)
        })?;
        self.potential = potential;
        Ok(self.energy())
    }
}

/// Runs `steps` velocity Verlet steps and returns one energy report per step.
pub fn run_md(
    state: &mut ParticleState,
    domain: &SimulationDomain,
    params: &LjParams,
    list_cutoff: f64,
    cfg: &IntegratorConfig,
    steps: usize,
    workers: usize,
) -> Result<Vec<EnergyReport>> {
    if steps == 0 {
        return Ok(Vec::new());
    }
    let mut sys = MdSystem::new(state.clone(), *domain, *params, list_cutoff, *cfg, workers)?;
    let mut reports = Vec::with_capacity(steps);
    for _ in 0..steps {
        reports.push(sys.step()?);
    }
    *state = sys.state;
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::particles::create_cubic_lattice;

    const R_MIN: f64 = 1.122_462_048_309_373; // 2^(1/6)

    fn unit() -> LjParams {
        LjParams::reduced(2.5).unwrap()
    }

    #[test]
    fn pair_energy_values() {
        let p = unit();
        assert_eq!(lj_pair_energy(1.0, &p).unwrap(), 0.0);
        assert!((lj_pair_energy(R_MIN, &p).unwrap() + 1.0).abs() < 1e-14);
        // 4(2.5^-12 - 2.5^-6) evaluated independently in high precision
        let expected = -0.016_316_891_136;
        assert!((lj_pair_energy(2.5, &p).unwrap() - expected).abs() < 1e-15);
        assert_eq!(lj_pair_energy(2.500_000_1, &p).unwrap(), 0.0);
        assert!(matches!(lj_pair_energy(0.0, &p), Err(Error::NonPositiveDistance { .. })));
    }

    #[test]
    fn pair_force_values() {
        let p = unit();
        let f = lj_pair_force([R_MIN, 0.0, 0.0], &p).unwrap();
        assert!(f[0].abs() < 1e-13);
        assert_eq!(lj_pair_force([1.0, 0.0, 0.0], &p).unwrap(), [24.0, 0.0, 0.0]);
        assert_eq!(lj_pair_force([0.0, 3.0, 0.0], &p).unwrap(), [0.0; 3]);
        assert!(lj_pair_force([0.0; 3], &p).is_err());
    }

    #[test]
    fn pair_force_is_negative_gradient() {
        // central finite differences of the energy
        let p = unit();
        for &r in &[0.95, 1.0, 1.3, 2.0, 2.4] {
            let h = 1e-6;
            let de = (lj_pair_energy(r + h, &p).unwrap() - lj_pair_energy(r - h, &p).unwrap()) / (2.0 * h);
            let f = lj_pair_force([r, 0.0, 0.0], &p).unwrap()[0];
            assert!((f + de).abs() < 1e-6 * (1.0 + f.abs()), "r={r}: {f} vs {}", -de);
        }
    }

    #[test]
    fn params_validation() {
        assert!(LjParams::new(1.0, 1.0, 0.9, false).is_err());
        assert!(LjParams::new(0.0, 1.0, 2.5, false).is_err());
        let wca = LjParams::repulsive(1.0, 4.0).unwrap();
        assert!(wca.energy_shift() < 0.0);
        assert!(lj_pair_energy(4.0, &wca).unwrap().abs() < 1e-14);
    }

    fn two_body(r: f64) -> (SimulationDomain, ParticleState) {
        let d = SimulationDomain::periodic_cube(10.0).unwrap();
        (d, ParticleState::at_rest(vec![[3.0, 5.0, 5.0], [3.0 + r, 5.0, 5.0]]))
    }

    fn nlist(d: &SimulationDomain, s: &ParticleState) -> NeighbourMatrix {
        let g = build_cell_grid(d, 2.75, s).unwrap();
        build_neighbour_matrix(&g, s, 2.75, 1).unwrap()
    }

    #[test]
    fn forces_at_minimum_and_isolated() {
        let (d, mut s) = two_body(R_MIN);
        let m = nlist(&d, &s);
        let u = compute_forces_and_potential(&mut s, &d, &m, &unit(), 1).unwrap();
        assert!((u + 1.0).abs() < 1e-14);
        assert!(s.forces.iter().flatten().all(|f| f.abs() < 1e-13));

        let mut one = ParticleState::at_rest(vec![[1.0, 1.0, 1.0]]);
        let m = nlist(&d, &one);
        assert_eq!(compute_forces_and_potential(&mut one, &d, &m, &unit(), 2).unwrap(), 0.0);
        assert_eq!(one.forces, vec![[0.0; 3]]);
    }

    #[test]
    fn shift_changes_energy_not_forces() {
        let (d, mut s) = create_cubic_lattice(6, 1.0).unwrap();
        for (k, x) in s.positions.iter_mut().enumerate() {
            x[0] += 0.01 * ((k * 7) % 5) as f64;
        }
        let m = nlist(&d, &s);
        let plain = unit();
        let shifted = LjParams { shifted: true, ..plain };
        let mut a = s.clone();
        let ua = compute_forces_and_potential(&mut a, &d, &m, &plain, 1).unwrap();
        let ub = compute_forces_and_potential(&mut s, &d, &m, &shifted, 1).unwrap();
        assert_eq!(a.forces, s.forces);
        let in_range = m
            .pairs()
            .filter(|&(i, j)| {
                let dd = d.minimum_image(s.positions[i], s.positions[j]);
                dot(dd, dd) <= 2.5 * 2.5
            })
            .count() as f64;
        let expected = ua - in_range * shifted.energy_shift();
        assert!((ub - expected).abs() < 1e-11 * ua.abs());
    }

    #[test]
    fn kinetic_energy_values() {
        let mut s = ParticleState::at_rest(vec![[0.0; 3]]);
        s.velocities[0] = [1.0, 0.0, 0.0];
        assert_eq!(kinetic_energy(&s), 0.5);
        assert_eq!(kinetic_energy(&ParticleState::at_rest(vec![[0.0; 3]; 3])), 0.0);
        let mut s = ParticleState::at_rest(vec![[0.0; 3]; 2]);
        s.masses = vec![2.0, 2.0];
        s.velocities = vec![[1.0; 3]; 2];
        assert_eq!(kinetic_energy(&s), 6.0);
    }

    #[test]
    fn free_flight() {
        let d = SimulationDomain::periodic_cube(100.0).unwrap();
        let mut s = ParticleState::at_rest(vec![[10.0, 20.0, 30.0]]);
        s.velocities[0] = [1.0, -2.0, 0.5];
        let cfg = IntegratorConfig::new(0.01).unwrap();
        velocity_verlet_step(&mut s, &d, &cfg, |st| {
            st.forces.iter_mut().for_each(|f| *f = [0.0; 3]);
            Ok(0.0)
        })
        .unwrap();
        assert_eq!(s.positions[0], [10.0 + 0.01, 20.0 - 0.02, 30.0 + 0.005]);
        assert_eq!(s.velocities[0], [1.0, -2.0, 0.5]);
    }

    #[test]
    fn zero_force_fixed_point() {
        let (d, s) = two_body(R_MIN);
        let mut sys = MdSystem::new(s.clone(), d, unit(), 2.75, IntegratorConfig::default(), 1).unwrap();
        sys.step().unwrap();
        for (a, b) in sys.state.positions.iter().zip(&s.positions) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn run_md_zero_steps() {
        let (d, mut s) = two_body(1.5);
        let before = s.clone();
        let r = run_md(&mut s, &d, &unit(), 2.75, &IntegratorConfig::default(), 0, 1).unwrap();
        assert!(r.is_empty());
        assert_eq!(s, before);
    }

    #[test]
    fn random_velocities_have_no_drift() {
        let (_, mut s) = create_cubic_lattice(5, 1.0).unwrap();
        assign_random_velocities(&mut s, 0.2, 11);
        assert!((kinetic_energy(&s) - 0.2 * 125.0).abs() < 1e-10);
        let mut p = [0.0; 3];
        for v in &s.velocities {
            for a in 0..3 {
                p[a] += v[a];
            }
        }
        assert!(p.iter().all(|c| c.abs() < 1e-12));
    }
}
