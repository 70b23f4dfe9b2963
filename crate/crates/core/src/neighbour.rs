//! Rapaport-style neighbour matrix: a fixed stride of neighbour slots per particle.

use alloc::vec;
use alloc::vec::Vec;

use crate::cells::CellGrid;
use crate::error::{Error, Result};
use crate::par;
use crate::particles::{dot, sub, ParticleState, SimulationDomain, Vec3};

const INITIAL_STRIDE: usize = 16;

/// Half neighbour list: row `i` holds the neighbours `j > i` within the list cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighbourMatrix {
    list_cutoff: f64,
    stride: usize,
    counts: Vec<usize>,
    indices: Vec<u32>,
    offsets: Vec<Vec3>,
}

impl NeighbourMatrix {
    pub fn list_cutoff(&self) -> f64 {
        self.list_cutoff
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn num_particles(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, i: usize) -> usize {
        self.counts[i]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn neighbours(&self, i: usize) -> &[u32] {
        &self.indices[i * self.stride..i * self.stride + self.counts[i]]
    }

    /// Periodic image shifts added to each neighbour's position at build time.
    pub fn image_offsets(&self, i: usize) -> &[Vec3] {
        &self.offsets[i * self.stride..i * self.stride + self.counts[i]]
    }

    pub fn num_pairs(&self) -> usize {
        self.counts.iter().sum()
    }

    /// All stored pairs `(i, j)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.counts.len()).flat_map(move |i| self.neighbours(i).iter().map(move |&j| (i, j as usize)))
    }
}

struct RowBlock {
    counts: Vec<usize>,
    indices: Vec<u32>,
    offsets: Vec<Vec3>,
}

/// Lists every pair within `list_cutoff` by scanning each particle's cell and its
/// 26 neighbours. The stride starts at 16 and doubles until the fullest row fits.
pub fn build_neighbour_matrix(
    grid: &CellGrid,
    state: &ParticleState,
    list_cutoff: f64,
    workers: usize,
) -> Result<NeighbourMatrix> {
    let n = state.len();
    if grid.num_particles() != n {
        return Err(Error::InvalidParameter("cell grid was built for a different particle set"));
    }
    if !(list_cutoff > 0.0) || grid.cell_side.iter().any(|&s| s < list_cutoff) {
        return Err(Error::InvalidParameter("list cutoff must be positive and no larger than the cell side"));
    }
    let domain: &SimulationDomain = &grid.domain;
    let rn2 = list_cutoff * list_cutoff;
    let positions = &state.positions;

    let blocks = par::map_ranges(&par::split(n, workers), |range| {
        let mut block = RowBlock {
            counts: Vec::with_capacity(range.len()),
            indices: Vec::new(),
            offsets: Vec::new(),
        };
        let mut cells = Vec::with_capacity(27);
        for i in range {
            grid.neighbour_cells(grid.cell_of(i), &mut cells);
            let xi = positions[i];
            let before = block.indices.len();
            for &c in &cells {
                for &j in grid.occupancy(c) {
                    if j <= i {
                        continue;
                    }
                    let d = domain.minimum_image(xi, positions[j]);
                    if dot(d, d) <= rn2 {
                        block.indices.push(j as u32);
                        let image = sub(xi, d);
                        block.offsets.push(sub(image, positions[j]));
                    }
                }
            }
            block.counts.push(block.indices.len() - before);
        }
        block
    });

    let max_count = blocks.iter().flat_map(|b| b.counts.iter().copied()).max().unwrap_or(0);
    let mut stride = INITIAL_STRIDE;
    while stride < max_count {
        stride *= 2;
    }

    let mut counts = Vec::with_capacity(n);
    let mut indices = vec![0u32; n * stride];
    let mut offsets = vec![[0.0; 3]; n * stride];
    let mut row = 0;
    for b in &blocks {
        let mut k = 0;
        for &c in &b.counts {
            indices[row * stride..row * stride + c].copy_from_slice(&b.indices[k..k + c]);
            offsets[row * stride..row * stride + c].copy_from_slice(&b.offsets[k..k + c]);
            counts.push(c);
            k += c;
            row += 1;
        }
    }
    Ok(NeighbourMatrix { list_cutoff, stride, counts, indices, offsets })
}

/// Decides when a neighbour matrix built with list cutoff `r_n` stops being valid
/// for interaction cutoff `r_c`: once any particle has moved more than
/// `(r_n - r_c) / 2` since the build, or after `max_interval` steps.
#[derive(Debug, Clone)]
pub struct RebuildPolicy {
    reference: Vec<Vec3>,
    steps_since_build: usize,
    pub max_interval: usize,
    pub half_skin: f64,
}

impl RebuildPolicy {
    pub const DEFAULT_MAX_INTERVAL: usize = 10;

    pub fn new(cutoff: f64, list_cutoff: f64) -> Result<Self> {
        if !(list_cutoff > cutoff) {
            return Err(Error::InvalidParameter("list cutoff must exceed the interaction cutoff"));
        }
        Ok(Self {
            reference: Vec::new(),
            steps_since_build: 0,
            max_interval: Self::DEFAULT_MAX_INTERVAL,
            half_skin: 0.5 * (list_cutoff - cutoff),
        })
    }

    /// Records the positions a fresh build was made from.
    pub fn mark_built(&mut self, state: &ParticleState) {
        self.reference.clear();
        self.reference.extend_from_slice(&state.positions);
        self.steps_since_build = 0;
    }

    /// Counts one completed step.
    pub fn tick(&mut self) {
        self.steps_since_build += 1;
    }

    pub fn steps_since_build(&self) -> usize {
        self.steps_since_build
    }

    pub fn max_displacement(&self, state: &ParticleState, domain: &SimulationDomain) -> f64 {
        let mut max2: f64 = 0.0;
        for (x, x0) in state.positions.iter().zip(&self.reference) {
            let d = domain.minimum_image(*x, *x0);
            max2 = max2.max(dot(d, d));
        }
        crate::math::sqrt(max2)
    }

    pub fn needs_rebuild(&self, state: &ParticleState, domain: &SimulationDomain) -> bool {
        self.reference.len() != state.len()
            || self.steps_since_build >= self.max_interval
            || self.max_displacement(state, domain) > self.half_skin
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::build_cell_grid;

    fn pair_state(a: Vec3, b: Vec3) -> ParticleState {
        ParticleState::at_rest(vec![a, b])
    }

    fn build(domain: &SimulationDomain, s: &ParticleState, rn: f64) -> NeighbourMatrix {
        let g = build_cell_grid(domain, rn, s).unwrap();
        build_neighbour_matrix(&g, s, rn, 1).unwrap()
    }

    #[test]
    fn inside_and_outside_list_cutoff() {
        let d = SimulationDomain::periodic_cube(10.0).unwrap();
        let m = build(&d, &pair_state([1.0, 1.0, 1.0], [3.6, 1.0, 1.0]), 2.75);
        assert_eq!(m.pairs().collect::<Vec<_>>(), vec![(0, 1)]);
        let m = build(&d, &pair_state([1.0, 1.0, 1.0], [4.0, 1.0, 1.0]), 2.75);
        assert_eq!(m.num_pairs(), 0);
    }

    #[test]
    fn pair_across_boundary_carries_image_offset() {
        let d = SimulationDomain::periodic_cube(10.0).unwrap();
        let m = build(&d, &pair_state([0.1, 5.0, 5.0], [9.9, 5.0, 5.0]), 2.75);
        assert_eq!(m.neighbours(0), &[1]);
        let off = m.image_offsets(0)[0];
        assert!((off[0] + 10.0).abs() < 1e-12 && off[1] == 0.0 && off[2] == 0.0);
    }

    #[test]
    fn stride_grows_past_initial() {
        // 64 particles packed in one cell: every row but the last overflows 16 slots.
        let d = SimulationDomain::periodic_cube(9.0).unwrap();
        let mut xs = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    xs.push([0.2 + 0.5 * i as f64, 0.2 + 0.5 * j as f64, 0.2 + 0.5 * k as f64]);
                }
            }
        }
        let s = ParticleState::at_rest(xs);
        let m = build(&d, &s, 3.0);
        assert_eq!(m.count(0), 63);
        assert_eq!(m.stride(), 64);
        assert_eq!(m.num_pairs(), 64 * 63 / 2);
        assert!(m.counts().iter().all(|&c| c <= m.stride()));
    }

    #[test]
    fn workers_do_not_change_the_matrix() {
        let (d, s) = crate::particles::create_cubic_lattice(8, 1.3).unwrap();
        let g = build_cell_grid(&d, 2.75, &s).unwrap();
        let a = build_neighbour_matrix(&g, &s, 2.75, 1).unwrap();
        let b = build_neighbour_matrix(&g, &s, 2.75, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn policy_triggers() {
        let d = SimulationDomain::periodic_cube(10.0).unwrap();
        let mut s = pair_state([1.0, 1.0, 1.0], [5.0, 5.0, 5.0]);
        let mut p = RebuildPolicy::new(2.5, 2.75).unwrap();
        assert!(p.needs_rebuild(&s, &d));
        p.mark_built(&s);
        assert!(!p.needs_rebuild(&s, &d));
        s.positions[0][0] += 0.12;
        assert!(!p.needs_rebuild(&s, &d));
        s.positions[0][0] += 0.01;
        assert!(p.needs_rebuild(&s, &d));
        p.mark_built(&s);
        for _ in 0..9 {
            p.tick();
        }
        assert!(!p.needs_rebuild(&s, &d));
        p.tick();
        assert!(p.needs_rebuild(&s, &d));
    }
}
