//! Rejection-free kinetic Monte Carlo of charges hopping on a cubic lattice.
//!
//! Energies come from a solved FMM tree: a charge's energy at a point is its
//! charge times the local expansion of the point's finest cell plus a direct sum
//! over the 27 surrounding cells, with the charge itself left out. After a hop
//! the tree is updated incrementally (see `FmmTree::move_particle`).

use alloc::vec;
use alloc::vec::Vec;

use rand::distributions::{Distribution, Open01};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fmm::{build_tree, fmm_solve, FmmConfig, FmmTree};
use crate::math;
use crate::par;
use crate::particles::{ParticleState, SimulationDomain, Vec3};
use crate::rng::{stream_rng, SimRng, STREAM_PLACEMENT, STREAM_SELECTION};

/// The six axis-aligned hops, in proposal order.
pub const HOP_DIRECTIONS: [[i32; 3]; 6] = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmcConfig {
    pub lattice_per_axis: usize,
    pub site_spacing: f64,
    pub beta: f64,
    /// Fraction of sites holding a charge when the lattice is filled at random.
    pub fill_fraction: f64,
    pub fmm: FmmConfig,
}

impl KmcConfig {
    pub fn new(lattice_per_axis: usize, site_spacing: f64, beta: f64, fill_fraction: f64, fmm: FmmConfig) -> Result<Self> {
        if lattice_per_axis == 0 {
            return Err(Error::InvalidParameter("lattice_per_axis must be positive"));
        }
        if !(site_spacing > 0.0 && site_spacing.is_finite()) {
            return Err(Error::InvalidParameter("site_spacing must be positive"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter("beta must be positive"));
        }
        if !(fill_fraction > 0.0 && fill_fraction <= 1.0) {
            return Err(Error::InvalidParameter("fill_fraction must lie in (0, 1]"));
        }
        // a hop must never skip over a whole finest cell
        if lattice_per_axis < 1 << (fmm.num_levels - 1) {
            return Err(Error::InvalidParameter("finest FMM cells must be at least one site wide"));
        }
        Ok(Self { lattice_per_axis, site_spacing, beta, fill_fraction, fmm })
    }

    pub fn num_sites(&self) -> usize {
        self.lattice_per_axis.pow(3)
    }

    pub fn domain(&self) -> SimulationDomain {
        let side = self.lattice_per_axis as f64 * self.site_spacing;
        SimulationDomain::new([side; 3], [false; 3]).expect("validated spacing")
    }

    pub fn site_index(&self, c: [usize; 3]) -> usize {
        let n = self.lattice_per_axis;
        c[0] + n * (c[1] + n * c[2])
    }

    pub fn site_coords(&self, site: usize) -> [usize; 3] {
        let n = self.lattice_per_axis;
        [site % n, (site / n) % n, site / (n * n)]
    }

    /// Sites sit at cell centres of the lattice, so none lies on the domain boundary.
    pub fn site_position(&self, c: [usize; 3]) -> Vec3 {
        let a = self.site_spacing;
        [(c[0] as f64 + 0.5) * a, (c[1] as f64 + 0.5) * a, (c[2] as f64 + 0.5) * a]
    }

    /// Neighbour of `c` in `direction`, or `None` off the lattice edge.
    pub fn hop_target(&self, c: [usize; 3], direction: usize) -> Option<[usize; 3]> {
        let d = HOP_DIRECTIONS[direction];
        let mut out = [0usize; 3];
        for a in 0..3 {
            let v = c[a] as i64 + d[a] as i64;
            if v < 0 || v >= self.lattice_per_axis as i64 {
                return None;
            }
            out[a] = v as usize;
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveProposal {
    pub charge: usize,
    pub direction: usize,
    pub source: [usize; 3],
    pub destination: [usize; 3],
    pub delta_u: f64,
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct KmcState {
    pub config: KmcConfig,
    /// Charge index per site.
    occupancy: Vec<Option<u32>>,
    /// Site index per charge.
    sites: Vec<usize>,
    particles: ParticleState,
    tree: FmmTree,
    pub time: f64,
    pub seed: u64,
    rng: SimRng,
}

impl KmcState {
    /// Fills `round(fill · sites)` random sites (at least one) with charges of
    /// alternating sign, +1 for even charge ids. Charge ids follow site order.
    pub fn random(config: KmcConfig, seed: u64, workers: usize) -> Result<Self> {
        let total = config.num_sites();
        let count = (math::round(config.fill_fraction * total as f64) as usize).clamp(1, total);
        let mut order: Vec<usize> = (0..total).collect();
        order.shuffle(&mut stream_rng(seed, STREAM_PLACEMENT));
        let mut chosen = order[..count].to_vec();
        chosen.sort_unstable();
        let coords = chosen.iter().map(|&s| config.site_coords(s)).collect();
        let charges = (0..count).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        Self::from_sites(config, coords, charges, seed, workers)
    }

    /// Explicit placement; charge `i` sits at `sites[i]` with value `charges[i]`.
    pub fn from_sites(config: KmcConfig, sites: Vec<[usize; 3]>, charges: Vec<f64>, seed: u64, workers: usize) -> Result<Self> {
        if sites.len() != charges.len() {
            return Err(Error::InvalidParameter("one charge value per site required"));
        }
        let n = config.lattice_per_axis;
        let mut occupancy = vec![None; config.num_sites()];
        let mut index = Vec::with_capacity(sites.len());
        for (i, c) in sites.iter().enumerate() {
            if c.iter().any(|&v| v >= n) {
                return Err(Error::OutsideDomain { index: i });
            }
            let s = config.site_index(*c);
            if occupancy[s].is_some() {
                return Err(Error::DestinationOccupied { site: *c });
            }
            occupancy[s] = Some(i as u32);
            index.push(s);
        }
        let positions = sites.iter().map(|&c| config.site_position(c)).collect();
        let particles = ParticleState::with_charges(positions, charges)?;
        let mut tree = build_tree(&config.domain(), &particles, config.fmm)?;
        fmm_solve(&mut tree, &particles, workers)?;
        Ok(Self {
            config,
            occupancy,
            sites: index,
            particles,
            tree,
            time: 0.0,
            seed,
            rng: stream_rng(seed, STREAM_SELECTION),
        })
    }

    pub fn num_charges(&self) -> usize {
        self.sites.len()
    }

    pub fn charges(&self) -> &[f64] {
        &self.particles.charges
    }

    pub fn charge_site(&self, charge: usize) -> [usize; 3] {
        self.config.site_coords(self.sites[charge])
    }

    pub fn occupant(&self, site: [usize; 3]) -> Option<usize> {
        self.occupancy[self.config.site_index(site)].map(|c| c as usize)
    }

    pub fn particles(&self) -> &ParticleState {
        &self.particles
    }

    pub fn tree(&self) -> &FmmTree {
        &self.tree
    }

    /// Whether occupancy and charge sites are mutually inverse.
    pub fn is_consistent(&self) -> bool {
        let filled = self.occupancy.iter().filter(|o| o.is_some()).count();
        filled == self.sites.len()
            && self.sites.iter().enumerate().all(|(i, &s)| self.occupancy[s] == Some(i as u32))
    }

    /// Potential at `x` seen by `charge`, excluding the charge itself.
    fn potential_for(&self, charge: usize, x: Vec3) -> Result<f64> {
        self.tree.potential_at(&self.particles, x, Some(charge))
    }

    /// Solver energy of the current configuration from a fresh tree.
    pub fn fresh_energy(&self, workers: usize) -> Result<f64> {
        let mut tree = build_tree(&self.config.domain(), &self.particles, self.config.fmm)?;
        Ok(fmm_solve(&mut tree, &self.particles, workers)?.energy)
    }

    /// Energy `½ Σ q φ` from the incrementally maintained expansions.
    pub fn tree_energy(&self, workers: usize) -> Result<f64> {
        let phi = par::map_indices(self.num_charges(), workers, |i| self.potential_for(i, self.particles.positions[i]))
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
        Ok(0.5 * self.particles.charges.iter().zip(&phi).map(|(q, p)| q * p).sum::<f64>())
    }

    /// Selection from this state's own random stream (see [`select_move`]).
    pub fn select(&mut self, proposals: &[MoveProposal]) -> Result<(usize, f64)> {
        select_move(proposals, &mut self.rng)
    }

    /// Moves `charge` directly to `site` without touching the clock.
    pub fn place(&mut self, charge: usize, site: [usize; 3], workers: usize) -> Result<()> {
        let s = self.config.site_index(site);
        if self.occupancy[s].is_some() {
            return Err(Error::DestinationOccupied { site });
        }
        let from = self.particles.positions[charge];
        let to = self.config.site_position(site);
        self.tree.move_particle(charge, self.particles.charges[charge], from, to, workers);
        self.occupancy[self.sites[charge]] = None;
        self.occupancy[s] = Some(charge as u32);
        self.sites[charge] = s;
        self.particles.positions[charge] = to;
        Ok(())
    }
}

/// One proposal per (charge, direction) whose destination exists and is empty,
/// ordered by charge id then direction. `delta_u` and `rate` are left at zero.
pub fn enumerate_proposals(state: &KmcState) -> Vec<MoveProposal> {
    let mut out = Vec::with_capacity(6 * state.num_charges());
    for charge in 0..state.num_charges() {
        let source = state.charge_site(charge);
        for direction in 0..6 {
            if let Some(destination) = state.config.hop_target(source, direction) {
                if state.occupant(destination).is_none() {
                    out.push(MoveProposal { charge, direction, source, destination, delta_u: 0.0, rate: 0.0 });
                }
            }
        }
    }
    out
}

/// Energy change of one hop under the solver's partition.
pub fn proposed_energy_diff(state: &KmcState, proposal: &MoveProposal) -> Result<f64> {
    if state.occupant(proposal.destination).is_some() {
        return Err(Error::DestinationOccupied { site: proposal.destination });
    }
    let c = proposal.charge;
    let before = state.potential_for(c, state.config.site_position(proposal.source))?;
    let after = state.potential_for(c, state.config.site_position(proposal.destination))?;
    Ok(state.particles.charges[c] * (after - before))
}

/// Metropolis propensity: 1 downhill, `exp(-β ΔU)` uphill.
pub fn hop_rate(delta_u: f64, beta: f64) -> f64 {
    if delta_u <= 0.0 {
        1.0
    } else {
        math::exp(-beta * delta_u)
    }
}

/// Fills `delta_u` and `rate` for every proposal. Each charge's energy at its
/// own site is evaluated once; results do not depend on `workers`.
pub fn evaluate_proposals(state: &KmcState, proposals: &mut [MoveProposal], workers: usize) -> Result<()> {
    let beta = state.config.beta;
    let list = &*proposals;
    let blocks = par::map_ranges(&par::split(list.len(), workers), |range| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(range.len());
        // consecutive proposals of one charge share its source energy
        let mut cached: Option<(usize, f64)> = None;
        for p in &list[range] {
            let c = p.charge;
            let before = match cached {
                Some((k, v)) if k == c => v,
                _ => {
                    let v = state.potential_for(c, state.particles.positions[c])?;
                    cached = Some((c, v));
                    v
                }
            };
            let after = state.potential_for(c, state.config.site_position(p.destination))?;
            out.push(state.particles.charges[c] * (after - before));
        }
        Ok(out)
    });
    let mut k = 0;
    for block in blocks {
        for du in block? {
            proposals[k].delta_u = du;
            proposals[k].rate = hop_rate(du, beta);
            k += 1;
        }
    }
    Ok(())
}

/// Inverse-transform selection with explicit uniforms: `u_pick ∈ [0, 1)` picks
/// over the prefix sum of rates, `u_time ∈ (0, 1)` gives `Δt = -ln(u_time) / R`.
pub fn select_with(proposals: &[MoveProposal], u_pick: f64, u_time: f64) -> Result<(usize, f64)> {
    let total: f64 = proposals.iter().map(|p| p.rate).sum();
    if proposals.is_empty() || !(total > 0.0) {
        return Err(Error::NoMovesAvailable);
    }
    let target = u_pick * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, p) in proposals.iter().enumerate() {
        if p.rate <= 0.0 {
            continue;
        }
        acc += p.rate;
        last = k;
        if target < acc {
            return Ok((k, -math::ln(u_time) / total));
        }
    }
    // rounding left the target at the very top of the prefix sum
    Ok((last, -math::ln(u_time) / total))
}

/// Propensity-proportional choice and residence time, drawing two uniforms from `rng`.
pub fn select_move<R: Rng + ?Sized>(proposals: &[MoveProposal], rng: &mut R) -> Result<(usize, f64)> {
    let u_pick: f64 = rng.gen();
    let u_time: f64 = Open01.sample(rng);
    select_with(proposals, u_pick, u_time)
}

/// Performs an accepted hop: occupancy, tree expansions and cell lists are
/// updated and the clock advances by `delta_t`.
pub fn apply_move(state: &mut KmcState, proposal: &MoveProposal, delta_t: f64, workers: usize) -> Result<()> {
    if state.occupant(proposal.source) != Some(proposal.charge) {
        return Err(Error::InvalidParameter("proposal does not match the current state"));
    }
    state.place(proposal.charge, proposal.destination, workers)?;
    state.time += delta_t;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub charge: usize,
    pub source: [usize; 3],
    pub destination: [usize; 3],
    pub delta_u: f64,
    pub delta_t: f64,
    pub proposals: usize,
    /// Wall time of the whole step; zero without the `std` feature.
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmcTrajectory {
    pub initial_energy: f64,
    pub steps: Vec<StepRecord>,
    /// Set when the run ended early because no move had a positive rate.
    pub frozen: bool,
}

impl KmcTrajectory {
    /// `U₀ + Σ ΔU` over the accepted moves.
    pub fn running_energy(&self) -> f64 {
        self.initial_energy + self.steps.iter().map(|s| s.delta_u).sum::<f64>()
    }
}

/// One full step: enumerate, evaluate, select, apply.
pub fn kmc_step(state: &mut KmcState, step: usize, workers: usize) -> Result<StepRecord> {
    #[cfg(feature = "std")]
    let start = std::time::Instant::now();
    let mut proposals = enumerate_proposals(state);
    evaluate_proposals(state, &mut proposals, workers)?;
    let (k, dt) = state.select(&proposals)?;
    let chosen = proposals[k];
    apply_move(state, &chosen, dt, workers)?;
    #[cfg(feature = "std")]
    let wall_seconds = start.elapsed().as_secs_f64();
    #[cfg(not(feature = "std"))]
    let wall_seconds = 0.0;
    Ok(StepRecord {
        step,
        charge: chosen.charge,
        source: chosen.source,
        destination: chosen.destination,
        delta_u: chosen.delta_u,
        delta_t: dt,
        proposals: proposals.len(),
        wall_seconds,
    })
}

/// Runs up to `steps` steps; a frozen system ends the run early without error.
pub fn run_kmc(state: &mut KmcState, steps: usize, workers: usize) -> Result<KmcTrajectory> {
    let initial_energy = state.tree_energy(workers)?;
    let mut out = KmcTrajectory { initial_energy, steps: Vec::with_capacity(steps), frozen: false };
    for step in 0..steps {
        match kmc_step(state, step, workers) {
            Ok(record) => out.steps.push(record),
            Err(Error::NoMovesAvailable) => {
                out.frozen = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
