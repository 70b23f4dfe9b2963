//! Uniform octree of expansion storage with precomputed translation tables.

use alloc::vec;
use alloc::vec::Vec;

use super::harmonics::{irregular, regular, C64};
use crate::error::{Error, Result};
use crate::math;
use crate::particles::{ParticleState, SimulationDomain, Vec3};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FmmConfig {
    /// Expansion order `p`: degrees `0..p` are kept.
    pub num_terms: usize,
    /// Level 0 is the root; level `num_levels - 1` is the finest with `8^(L-1)` cells.
    pub num_levels: usize,
}

impl FmmConfig {
    pub fn new(num_terms: usize, num_levels: usize) -> Result<Self> {
        if num_terms < 1 {
            return Err(Error::InvalidParameter("FMM needs at least one expansion term"));
        }
        if num_levels < 2 {
            return Err(Error::InvalidParameter("FMM needs at least two levels"));
        }
        Ok(Self { num_terms, num_levels })
    }
}

/// Offset (in cells, source minus target) into the 7×7×7 M2L table.
#[inline(always)]
pub(crate) fn offset_slot(o: [i32; 3]) -> usize {
    ((o[0] + 3) + 7 * (o[1] + 3) + 49 * (o[2] + 3)) as usize
}

#[derive(Debug, Clone)]
pub struct FmmTree {
    pub(crate) config: FmmConfig,
    pub(crate) side: f64,
    pub(crate) multipoles: Vec<Vec<C64>>,
    pub(crate) locals: Vec<Vec<C64>>,
    /// Particle count per cell on every level.
    pub(crate) counts: Vec<Vec<u32>>,
    pub(crate) cell_particles: Vec<Vec<usize>>,
    pub(crate) particle_cell: Vec<usize>,
    /// Interaction offsets per octant of a cell within its parent.
    pub(crate) stencils: [Vec<[i32; 3]>; 8],
    /// Per level: `I(c_target - c_source)` up to degree `2p - 1` for each of the 343 offsets.
    pub(crate) m2l_tables: Vec<Vec<C64>>,
    /// Per level ≥ 1: `R(c_child - c_parent)` for each of the 8 octants.
    pub(crate) shift_tables: Vec<Vec<C64>>,
}

/// Bins `state` into a tree over the cubic `domain`, with every expansion zeroed.
pub fn build_tree(domain: &SimulationDomain, state: &ParticleState, config: FmmConfig) -> Result<FmmTree> {
    if !domain.is_cubic() {
        return Err(Error::NonCubicDomain);
    }
    let p = config.num_terms;
    let levels = config.num_levels;
    let side = domain.extent[0];
    let pp = p * p;

    let mut stencils: [Vec<[i32; 3]>; 8] = Default::default();
    for (oct, stencil) in stencils.iter_mut().enumerate() {
        let own = [(oct & 1) as i32, ((oct >> 1) & 1) as i32, ((oct >> 2) & 1) as i32];
        for pz in -1..=1 {
            for py in -1..=1 {
                for px in -1..=1 {
                    for c in 0..8 {
                        let child = [c & 1, (c >> 1) & 1, (c >> 2) & 1];
                        let o = [2 * px + child[0] - own[0], 2 * py + child[1] - own[1], 2 * pz + child[2] - own[2]];
                        if o.iter().any(|v| v.abs() > 1) {
                            stencil.push(o);
                        }
                    }
                }
            }
        }
    }

    let mut m2l_tables = Vec::with_capacity(levels);
    let mut shift_tables = Vec::with_capacity(levels);
    for level in 0..levels {
        let h = side / (1u64 << level) as f64;
        let mut table = vec![ZERO; 343 * 4 * pp];
        if level >= 2 {
            for oz in -3..=3i32 {
                for oy in -3..=3i32 {
                    for ox in -3..=3i32 {
                        if ox.abs() <= 1 && oy.abs() <= 1 && oz.abs() <= 1 {
                            continue;
                        }
                        let slot = offset_slot([ox, oy, oz]);
                        let r = [-(ox as f64) * h, -(oy as f64) * h, -(oz as f64) * h];
                        irregular(r, 2 * p, &mut table[slot * 4 * pp..(slot + 1) * 4 * pp]);
                    }
                }
            }
        }
        m2l_tables.push(table);
        let mut shifts = vec![ZERO; 8 * pp];
        if level >= 1 {
            for oct in 0..8 {
                // child centre minus parent centre, h being the child side
                let d = [
                    ((oct & 1) as f64 - 0.5) * h,
                    (((oct >> 1) & 1) as f64 - 0.5) * h,
                    (((oct >> 2) & 1) as f64 - 0.5) * h,
                ];
                regular(d, p, &mut shifts[oct * pp..(oct + 1) * pp]);
            }
        }
        shift_tables.push(shifts);
    }

    let mut tree = FmmTree {
        config,
        side,
        multipoles: (0..levels).map(|l| vec![ZERO; (1usize << (3 * l)) * pp]).collect(),
        locals: (0..levels).map(|l| vec![ZERO; (1usize << (3 * l)) * pp]).collect(),
        counts: (0..levels).map(|l| vec![0u32; 1usize << (3 * l)]).collect(),
        cell_particles: vec![Vec::new(); 1usize << (3 * (levels - 1))],
        particle_cell: Vec::new(),
        stencils,
        m2l_tables,
        shift_tables,
    };
    tree.rebin(state)?;
    Ok(tree)
}

impl FmmTree {
    pub fn config(&self) -> FmmConfig {
        self.config
    }

    pub fn num_levels(&self) -> usize {
        self.config.num_levels
    }

    pub fn finest(&self) -> usize {
        self.config.num_levels - 1
    }

    pub fn domain_side(&self) -> f64 {
        self.side
    }

    pub fn cells_per_axis(&self, level: usize) -> usize {
        1 << level
    }

    pub fn num_cells(&self, level: usize) -> usize {
        1 << (3 * level)
    }

    pub fn cell_side(&self, level: usize) -> f64 {
        self.side / (1u64 << level) as f64
    }

    pub fn cell_coords(&self, level: usize, cell: usize) -> [usize; 3] {
        let n = 1 << level;
        [cell % n, (cell / n) % n, cell / (n * n)]
    }

    pub fn cell_index(&self, level: usize, c: [usize; 3]) -> usize {
        let n = 1 << level;
        c[0] + n * (c[1] + n * c[2])
    }

    pub fn cell_centre(&self, level: usize, cell: usize) -> Vec3 {
        let h = self.cell_side(level);
        let c = self.cell_coords(level, cell);
        [(c[0] as f64 + 0.5) * h, (c[1] as f64 + 0.5) * h, (c[2] as f64 + 0.5) * h]
    }

    pub fn parent(&self, level: usize, cell: usize) -> usize {
        let c = self.cell_coords(level, cell);
        self.cell_index(level - 1, [c[0] / 2, c[1] / 2, c[2] / 2])
    }

    /// Ancestor of a finest-level cell on `level`.
    pub fn ancestor(&self, finest_cell: usize, level: usize) -> usize {
        let shift = self.finest() - level;
        let c = self.cell_coords(self.finest(), finest_cell);
        self.cell_index(level, [c[0] >> shift, c[1] >> shift, c[2] >> shift])
    }

    pub(crate) fn octant(c: [usize; 3]) -> usize {
        (c[0] & 1) | ((c[1] & 1) << 1) | ((c[2] & 1) << 2)
    }

    /// Finest cell containing `x`; points on the upper faces go to the last cell.
    pub fn finest_cell_of(&self, x: Vec3) -> usize {
        let n = self.cells_per_axis(self.finest());
        let h = self.cell_side(self.finest());
        let mut c = [0usize; 3];
        for a in 0..3 {
            let k = math::floor(x[a] / h);
            c[a] = if k < 0.0 { 0 } else { (k as usize).min(n - 1) };
        }
        self.cell_index(self.finest(), c)
    }

    /// Cells of the parent's neighbourhood (parent included) that do not touch `cell`.
    pub fn interaction_list(&self, level: usize, cell: usize) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_interaction(level, cell, |src, _| out.push(src));
        out
    }

    #[inline]
    pub(crate) fn for_each_interaction<F: FnMut(usize, [i32; 3])>(&self, level: usize, cell: usize, mut f: F) {
        if level < 2 {
            return;
        }
        let n = 1i32 << level;
        let c = self.cell_coords(level, cell);
        let ci = [c[0] as i32, c[1] as i32, c[2] as i32];
        for &o in &self.stencils[Self::octant(c)] {
            let s = [ci[0] + o[0], ci[1] + o[1], ci[2] + o[2]];
            if s.iter().all(|&v| v >= 0 && v < n) {
                f(self.cell_index(level, [s[0] as usize, s[1] as usize, s[2] as usize]), o);
            }
        }
    }

    /// Cells within one step of `cell` on `level`, itself included, clipped at the boundary.
    pub fn adjacent_cells(&self, level: usize, cell: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(27);
        self.for_each_adjacent(level, cell, |c| out.push(c));
        out
    }

    #[inline]
    pub(crate) fn for_each_adjacent<F: FnMut(usize)>(&self, level: usize, cell: usize, mut f: F) {
        let n = 1i64 << level;
        let c = self.cell_coords(level, cell);
        for dz in -1..=1i64 {
            let z = c[2] as i64 + dz;
            if z < 0 || z >= n {
                continue;
            }
            for dy in -1..=1i64 {
                let y = c[1] as i64 + dy;
                if y < 0 || y >= n {
                    continue;
                }
                for dx in -1..=1i64 {
                    let x = c[0] as i64 + dx;
                    if x < 0 || x >= n {
                        continue;
                    }
                    f(self.cell_index(level, [x as usize, y as usize, z as usize]));
                }
            }
        }
    }

    pub fn are_adjacent(&self, level: usize, a: usize, b: usize) -> bool {
        let ca = self.cell_coords(level, a);
        let cb = self.cell_coords(level, b);
        (0..3).all(|k| ca[k].abs_diff(cb[k]) <= 1)
    }

    /// Particle indices in a finest-level cell, ascending.
    pub fn occupancy(&self, cell: usize) -> &[usize] {
        &self.cell_particles[cell]
    }

    pub fn particle_cell(&self, particle: usize) -> usize {
        self.particle_cell[particle]
    }

    pub fn cell_count(&self, level: usize, cell: usize) -> usize {
        self.counts[level][cell] as usize
    }

    pub fn occupied_cells(&self, level: usize) -> usize {
        self.counts[level].iter().filter(|&&c| c > 0).count()
    }

    pub fn multipole(&self, level: usize, cell: usize) -> super::MultipoleExpansion {
        let pp = self.config.num_terms.pow(2);
        super::MultipoleExpansion::from_coeffs(
            self.cell_centre(level, cell),
            self.config.num_terms,
            self.multipoles[level][cell * pp..(cell + 1) * pp].to_vec(),
        )
    }

    pub fn local(&self, level: usize, cell: usize) -> super::LocalExpansion {
        let pp = self.config.num_terms.pow(2);
        super::LocalExpansion::from_coeffs(
            self.cell_centre(level, cell),
            self.config.num_terms,
            self.locals[level][cell * pp..(cell + 1) * pp].to_vec(),
        )
    }

    /// Re-bins every particle and zeroes all expansions.
    pub fn rebin(&mut self, state: &ParticleState) -> Result<()> {
        let extent = [self.side; 3];
        for (index, x) in state.positions.iter().enumerate() {
            if !(0..3).all(|a| x[a] >= 0.0 && x[a] <= extent[a]) {
                return Err(Error::OutsideDomain { index });
            }
        }
        for cell in &mut self.cell_particles {
            cell.clear();
        }
        self.particle_cell.clear();
        for (i, x) in state.positions.iter().enumerate() {
            let c = self.finest_cell_of(*x);
            self.cell_particles[c].push(i);
            self.particle_cell.push(c);
        }
        self.recount();
        self.clear_expansions();
        Ok(())
    }

    pub(crate) fn recount(&mut self) {
        let finest = self.finest();
        for level in 0..self.num_levels() {
            self.counts[level].iter_mut().for_each(|c| *c = 0);
        }
        for (cell, list) in self.cell_particles.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            for level in 0..=finest {
                let a = self.ancestor(cell, level);
                self.counts[level][a] += list.len() as u32;
            }
        }
    }

    pub fn clear_expansions(&mut self) {
        for level in 0..self.num_levels() {
            self.multipoles[level].iter_mut().for_each(|c| *c = ZERO);
            self.locals[level].iter_mut().for_each(|c| *c = ZERO);
        }
    }

    /// Moves `particle` to the finest cell containing `x`, keeping cell lists sorted.
    pub(crate) fn relocate(&mut self, particle: usize, x: Vec3) {
        let old = self.particle_cell[particle];
        let new = self.finest_cell_of(x);
        if old == new {
            return;
        }
        let list = &mut self.cell_particles[old];
        let pos = list.binary_search(&particle).expect("particle missing from its cell");
        list.remove(pos);
        let list = &mut self.cell_particles[new];
        let pos = list.binary_search(&particle).unwrap_err();
        list.insert(pos, particle);
        self.particle_cell[particle] = new;
        for level in 0..self.num_levels() {
            let a = self.ancestor(old, level);
            self.counts[level][a] -= 1;
            let b = self.ancestor(new, level);
            self.counts[level][b] += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(levels: usize, xs: Vec<Vec3>) -> FmmTree {
        let d = SimulationDomain::new([1.0; 3], [false; 3]).unwrap();
        let n = xs.len();
        let s = ParticleState::with_charges(xs, vec![1.0; n]).unwrap();
        build_tree(&d, &s, FmmConfig::new(4, levels).unwrap()).unwrap()
    }

    #[test]
    fn level_sizes() {
        let t = tree(2, vec![]);
        assert_eq!((t.num_cells(0), t.num_cells(1)), (1, 8));
        let t = tree(6, vec![]);
        assert_eq!(t.num_cells(5), 32768);
    }

    #[test]
    fn centre_particle_in_one_cell() {
        let t = tree(3, vec![[0.5; 3]]);
        let occupied: Vec<_> = (0..t.num_cells(2)).filter(|&c| !t.occupancy(c).is_empty()).collect();
        assert_eq!(occupied.len(), 1);
        assert_eq!(t.cell_count(0, 0), 1);
    }

    #[test]
    fn rejects_non_cubic() {
        let d = SimulationDomain::new([1.0, 2.0, 1.0], [false; 3]).unwrap();
        let s = ParticleState::at_rest(vec![]);
        assert!(matches!(build_tree(&d, &s, FmmConfig::new(4, 3).unwrap()), Err(Error::NonCubicDomain)));
        assert!(FmmConfig::new(0, 3).is_err());
        assert!(FmmConfig::new(4, 1).is_err());
    }

    #[test]
    fn interaction_lists_match_definition() {
        let t = tree(4, vec![]);
        for level in 2..4 {
            for cell in 0..t.num_cells(level) {
                let list = t.interaction_list(level, cell);
                assert!(list.len() <= 189);
                let parent = t.parent(level, cell);
                let mut expected = Vec::new();
                for other in 0..t.num_cells(level) {
                    let op = t.parent(level, other);
                    if t.are_adjacent(level - 1, parent, op) && !t.are_adjacent(level, cell, other) {
                        expected.push(other);
                    }
                }
                let mut got = list.clone();
                got.sort_unstable();
                assert_eq!(got, expected, "level {level} cell {cell}");
            }
        }
        let interior = t.cell_index(3, [3, 4, 3]);
        assert_eq!(t.interaction_list(3, interior).len(), 189);
    }

    #[test]
    fn relocate_keeps_order_and_counts() {
        let mut t = tree(3, vec![[0.1; 3], [0.12; 3], [0.9; 3], [0.11, 0.1, 0.1]]);
        let c0 = t.particle_cell(0);
        assert_eq!(t.occupancy(c0), &[0, 1, 3]);
        t.relocate(1, [0.9; 3]);
        assert_eq!(t.occupancy(c0), &[0, 3]);
        assert_eq!(t.occupancy(t.particle_cell(2)), &[1, 2]);
        assert_eq!(t.cell_count(0, 0), 4);
        assert_eq!(t.cell_count(2, c0), 2);
    }
}
