//! Incremental update of a solved tree after one particle moves.

use alloc::vec;
use alloc::vec::Vec;

use super::expansion::{l2l_acc, m2l_acc, p2m_acc};
use super::harmonics::{mirror, C64};
use super::tree::{offset_slot, FmmTree};
use crate::par;
use crate::particles::{sub, Vec3};

const ZERO: C64 = C64::new(0.0, 0.0);

impl FmmTree {
    /// Moves particle `particle` of charge `q` from `from` to `to` in a solved
    /// tree. Multipoles change by the point-charge difference on every ancestor;
    /// that change is pushed through the same m2l/l2l operators as a full
    /// downward pass, so the result matches a fresh solve up to round-off.
    pub fn move_particle(&mut self, particle: usize, q: f64, from: Vec3, to: Vec3, workers: usize) {
        let p = self.config.num_terms;
        let pp = p * p;
        let levels = self.num_levels();
        let src_cell = self.finest_cell_of(from);
        let dst_cell = self.finest_cell_of(to);
        let mut scratch = vec![ZERO; pp];

        // (cell, multipole change) per level, at most two entries
        let mut changed: Vec<Vec<(usize, Vec<C64>)>> = Vec::with_capacity(levels);
        for level in 0..levels {
            let mut entries: Vec<(usize, Vec<C64>)> = Vec::with_capacity(2);
            for (cell, x, charge) in [
                (self.ancestor(src_cell, level), from, -q),
                (self.ancestor(dst_cell, level), to, q),
            ] {
                let pos = match entries.iter().position(|e| e.0 == cell) {
                    Some(k) => k,
                    None => {
                        entries.push((cell, vec![ZERO; pp]));
                        entries.len() - 1
                    }
                };
                let centre = self.cell_centre(level, cell);
                p2m_acc(charge, sub(x, centre), p, &mut scratch, &mut entries[pos].1);
            }
            for (cell, delta) in &mut entries {
                mirror(p, delta);
                for (m, d) in self.multipoles[level][*cell * pp..(*cell + 1) * pp].iter_mut().zip(delta.iter()) {
                    *m += d;
                }
            }
            changed.push(entries);
        }

        let mut parent_delta: Vec<C64> = Vec::new();
        let mut parent_touched: Vec<bool> = Vec::new();
        for level in 2..levels {
            let cells = self.num_cells(level);
            let touched: Vec<bool> = (0..cells)
                .map(|cell| {
                    (level > 2 && parent_touched[self.parent(level, cell)])
                        || changed[level].iter().any(|&(src, _)| self.in_interaction_list(level, cell, src))
                })
                .collect();
            let mut delta = vec![ZERO; cells * pp];
            {
                let tree = &*self;
                let sources = &changed[level];
                let parent_delta = &parent_delta;
                let parent_touched = &parent_touched;
                let table = &tree.m2l_tables[level];
                par::for_each_block_mut(&mut delta, pp, workers, |start, block| {
                    for (k, out) in block.chunks_mut(pp).enumerate() {
                        let cell = start + k;
                        if !touched[cell] {
                            continue;
                        }
                        let c = tree.cell_coords(level, cell);
                        for (src, dm) in sources {
                            if tree.in_interaction_list(level, cell, *src) {
                                let s = tree.cell_coords(level, *src);
                                let slot = offset_slot([
                                    s[0] as i32 - c[0] as i32,
                                    s[1] as i32 - c[1] as i32,
                                    s[2] as i32 - c[2] as i32,
                                ]);
                                m2l_acc(dm, &table[slot * 4 * pp..(slot + 1) * 4 * pp], p, out);
                            }
                        }
                        if level > 2 {
                            let parent = tree.parent(level, cell);
                            if parent_touched[parent] {
                                let oct = FmmTree::octant(c);
                                l2l_acc(
                                    &parent_delta[parent * pp..(parent + 1) * pp],
                                    &tree.shift_tables[level][oct * pp..(oct + 1) * pp],
                                    p,
                                    out,
                                );
                            }
                        }
                        mirror(p, out);
                    }
                });
            }
            par::for_each_block_mut(&mut self.locals[level], pp, workers, |start, block| {
                for (k, out) in block.chunks_mut(pp).enumerate() {
                    let cell = start + k;
                    if touched[cell] {
                        for (l, d) in out.iter_mut().zip(&delta[cell * pp..(cell + 1) * pp]) {
                            *l += d;
                        }
                    }
                }
            });
            parent_delta = delta;
            parent_touched = touched;
        }

        self.relocate(particle, to);
    }

    /// Whether `src` lies in the interaction list of `cell` on `level`.
    pub(crate) fn in_interaction_list(&self, level: usize, cell: usize, src: usize) -> bool {
        level >= 2
            && !self.are_adjacent(level, cell, src)
            && self.are_adjacent(level - 1, self.parent(level, cell), self.parent(level, src))
    }
}

#[cfg(test)]
mod tests {
    use crate::fmm::{build_tree, fmm_solve, FmmConfig};
    use crate::particles::{ParticleState, SimulationDomain};
    use crate::rng::stream_rng;
    use rand::Rng;

    // largest coefficient difference relative to the largest coefficient; high
    // degrees carry large magnitudes, so absolute differences are meaningless
    fn rel_diff(a: &[super::C64], b: &[super::C64]) -> f64 {
        let scale = b.iter().fold(0.0f64, |m, x| m.max(x.norm())).max(1e-300);
        a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm())) / scale
    }

    #[test]
    fn matches_fresh_solve_and_reverts() {
        let mut rng = stream_rng(4, 0);
        let n = 120;
        let xs: Vec<_> = (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let qs: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { -1.0 } else { 0.5 }).collect();
        let d = SimulationDomain::new([1.0; 3], [false; 3]).unwrap();
        let mut s = ParticleState::with_charges(xs.clone(), qs).unwrap();
        let cfg = FmmConfig::new(8, 4).unwrap();
        let mut t = build_tree(&d, &s, cfg).unwrap();
        fmm_solve(&mut t, &s, 1).unwrap();
        let original = t.clone();

        // long jump across the box, then one onto the boundary
        for (i, to) in [(7usize, [0.93, 0.05, 0.61]), (11, [0.0, 1.0, 0.5])] {
            let from = s.positions[i];
            t.move_particle(i, s.charges[i], from, to, 3);
            s.positions[i] = to;
            let mut fresh = build_tree(&d, &s, cfg).unwrap();
            fmm_solve(&mut fresh, &s, 1).unwrap();
            for level in 0..4 {
                assert!(rel_diff(&t.multipoles[level], &fresh.multipoles[level]) < 1e-10);
                assert!(rel_diff(&t.locals[level], &fresh.locals[level]) < 1e-10, "level {level}");
            }
            assert_eq!(t.particle_cell, fresh.particle_cell);
            assert_eq!(t.cell_particles, fresh.cell_particles);
            assert_eq!(t.counts, fresh.counts);
        }

        t.move_particle(11, s.charges[11], s.positions[11], xs[11], 2);
        t.move_particle(7, s.charges[7], s.positions[7], xs[7], 1);
        for level in 0..4 {
            assert!(rel_diff(&t.locals[level], &original.locals[level]) < 1e-10);
            assert!(rel_diff(&t.multipoles[level], &original.multipoles[level]) < 1e-10);
        }
        assert_eq!(t.cell_particles, original.cell_particles);
    }
}
