//! Uniform cell decomposition of a [`SimulationDomain`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::particles::{ParticleState, SimulationDomain, Vec3};

/// Particles binned into cells of side at least the cutoff, stored as CSR.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    pub cells_per_axis: [usize; 3],
    pub cell_side: Vec3,
    pub domain: SimulationDomain,
    cell_start: Vec<usize>,
    cell_particles: Vec<usize>,
    particle_cell: Vec<usize>,
}

impl CellGrid {
    pub fn num_cells(&self) -> usize {
        self.cells_per_axis.iter().product()
    }

    pub fn num_particles(&self) -> usize {
        self.particle_cell.len()
    }

    /// Particle indices in `cell`, ascending.
    pub fn occupancy(&self, cell: usize) -> &[usize] {
        &self.cell_particles[self.cell_start[cell]..self.cell_start[cell + 1]]
    }

    pub fn cell_of(&self, particle: usize) -> usize {
        self.particle_cell[particle]
    }

    pub fn cell_index(&self, c: [usize; 3]) -> usize {
        let [nx, ny, _] = self.cells_per_axis;
        c[0] + nx * (c[1] + ny * c[2])
    }

    pub fn cell_coords(&self, cell: usize) -> [usize; 3] {
        let [nx, ny, _] = self.cells_per_axis;
        [cell % nx, (cell / nx) % ny, cell / (nx * ny)]
    }

    /// Distinct cells in the 27-neighbourhood of `cell` (itself included), with
    /// periodic wrap. Appends to `out` after clearing it.
    pub fn neighbour_cells(&self, cell: usize, out: &mut Vec<usize>) {
        out.clear();
        let c = self.cell_coords(cell);
        let mut axis_cells = [[0usize; 3]; 3];
        let mut axis_len = [0usize; 3];
        for a in 0..3 {
            let n = self.cells_per_axis[a] as isize;
            for d in -1isize..=1 {
                let mut k = c[a] as isize + d;
                if self.domain.periodic[a] {
                    k = k.rem_euclid(n);
                } else if k < 0 || k >= n {
                    continue;
                }
                let k = k as usize;
                if !axis_cells[a][..axis_len[a]].contains(&k) {
                    axis_cells[a][axis_len[a]] = k;
                    axis_len[a] += 1;
                }
            }
        }
        for &z in &axis_cells[2][..axis_len[2]] {
            for &y in &axis_cells[1][..axis_len[1]] {
                for &x in &axis_cells[0][..axis_len[0]] {
                    out.push(self.cell_index([x, y, z]));
                }
            }
        }
    }
}

/// Bins `state` into `floor(extent / cutoff)` cells per axis.
pub fn build_cell_grid(domain: &SimulationDomain, cutoff: f64, state: &ParticleState) -> Result<CellGrid> {
    if !(cutoff > 0.0) {
        return Err(Error::InvalidParameter("cutoff must be positive"));
    }
    let mut cells_per_axis = [0usize; 3];
    let mut cell_side = [0.0; 3];
    for a in 0..3 {
        let e = domain.extent[a];
        if e < cutoff {
            return Err(Error::DomainTooSmall { axis: a, extent: e, cutoff });
        }
        cells_per_axis[a] = math::floor(e / cutoff) as usize;
        cell_side[a] = e / cells_per_axis[a] as f64;
    }
    let total: usize = cells_per_axis.iter().product();
    let mut particle_cell = Vec::with_capacity(state.len());
    for (index, x) in state.positions.iter().enumerate() {
        if !domain.contains(*x) {
            return Err(Error::OutsideDomain { index });
        }
        let mut c = [0usize; 3];
        for a in 0..3 {
            c[a] = (math::floor(x[a] / cell_side[a]) as usize).min(cells_per_axis[a] - 1);
        }
        particle_cell.push(c[0] + cells_per_axis[0] * (c[1] + cells_per_axis[1] * c[2]));
    }
    let mut cell_start = vec![0usize; total + 1];
    for &c in &particle_cell {
        cell_start[c + 1] += 1;
    }
    for c in 0..total {
        cell_start[c + 1] += cell_start[c];
    }
    let mut fill = cell_start.clone();
    let mut cell_particles = vec![0usize; state.len()];
    for (i, &c) in particle_cell.iter().enumerate() {
        cell_particles[fill[c]] = i;
        fill[c] += 1;
    }
    Ok(CellGrid {
        cells_per_axis,
        cell_side,
        domain: *domain,
        cell_start,
        cell_particles,
        particle_cell,
    })
}
