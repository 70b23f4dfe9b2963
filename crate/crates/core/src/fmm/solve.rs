//! Upward and downward passes, near-field sums and the full solve.

use alloc::vec;
use alloc::vec::Vec;

use super::expansion::{eval_local_with, l2l_acc, m2l_acc, m2m_acc, p2m_acc};
use super::harmonics::{mirror, C64};
use super::tree::{offset_slot, FmmTree};
use crate::error::{Error, Result};
use crate::par;
use crate::particles::{dot, sub, ParticleState, Vec3};

const ZERO: C64 = C64::new(0.0, 0.0);

/// How much of the worker pool one tree level can keep busy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelReport {
    pub level: usize,
    pub cells: usize,
    pub occupied_cells: usize,
    pub workers: usize,
    /// Workers that receive at least one cell on this level.
    pub busy_workers: usize,
}

impl LevelReport {
    pub fn idle_workers(&self) -> usize {
        self.workers - self.busy_workers
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FmmSolution {
    /// `½ Σ q_i φ_i`, self-interaction excluded.
    pub energy: f64,
    pub potentials: Vec<f64>,
    pub levels: Vec<LevelReport>,
}

impl FmmTree {
    pub fn level_reports(&self, workers: usize) -> Vec<LevelReport> {
        let workers = workers.max(1);
        (0..self.num_levels())
            .map(|level| LevelReport {
                level,
                cells: self.num_cells(level),
                occupied_cells: self.occupied_cells(level),
                workers,
                busy_workers: workers.min(self.num_cells(level)),
            })
            .collect()
    }

    /// Particle-to-multipole on the finest level, then multipole-to-multipole up to the root.
    pub fn upward_pass(&mut self, state: &ParticleState, workers: usize) {
        let p = self.config.num_terms;
        let pp = p * p;
        let finest = self.finest();

        let mut cur = core::mem::take(&mut self.multipoles[finest]);
        {
            let tree = &*self;
            par::for_each_block_mut(&mut cur, pp, workers, |start, block| {
                let mut scratch = vec![ZERO; pp];
                for (k, out) in block.chunks_mut(pp).enumerate() {
                    let cell = start + k;
                    out.iter_mut().for_each(|c| *c = ZERO);
                    let members = tree.occupancy(cell);
                    if members.is_empty() {
                        continue;
                    }
                    let centre = tree.cell_centre(finest, cell);
                    for &i in members {
                        p2m_acc(state.charges[i], sub(state.positions[i], centre), p, &mut scratch, out);
                    }
                    mirror(p, out);
                }
            });
        }
        self.multipoles[finest] = cur;

        for level in (0..finest).rev() {
            let mut cur = core::mem::take(&mut self.multipoles[level]);
            {
                let tree = &*self;
                let children = &tree.multipoles[level + 1];
                let shifts = &tree.shift_tables[level + 1];
                par::for_each_block_mut(&mut cur, pp, workers, |start, block| {
                    for (k, out) in block.chunks_mut(pp).enumerate() {
                        let cell = start + k;
                        out.iter_mut().for_each(|c| *c = ZERO);
                        if tree.counts[level][cell] == 0 {
                            continue;
                        }
                        let c = tree.cell_coords(level, cell);
                        for oct in 0..8 {
                            let child = tree.cell_index(
                                level + 1,
                                [2 * c[0] + (oct & 1), 2 * c[1] + ((oct >> 1) & 1), 2 * c[2] + ((oct >> 2) & 1)],
                            );
                            if tree.counts[level + 1][child] == 0 {
                                continue;
                            }
                            m2m_acc(
                                &children[child * pp..(child + 1) * pp],
                                &shifts[oct * pp..(oct + 1) * pp],
                                p,
                                out,
                            );
                        }
                        mirror(p, out);
                    }
                });
            }
            self.multipoles[level] = cur;
        }
    }

    /// Multipole-to-local over interaction lists and local-to-local down to the
    /// finest level. Locals are formed in every cell, occupied or not; empty
    /// cells only drop out as sources.
    pub fn downward_pass(&mut self, workers: usize) {
        let p = self.config.num_terms;
        let pp = p * p;
        for level in 0..self.num_levels().min(2) {
            self.locals[level].iter_mut().for_each(|c| *c = ZERO);
        }
        for level in 2..self.num_levels() {
            let mut cur = core::mem::take(&mut self.locals[level]);
            {
                let tree = &*self;
                par::for_each_block_mut(&mut cur, pp, workers, |start, block| {
                    for (k, out) in block.chunks_mut(pp).enumerate() {
                        let cell = start + k;
                        out.iter_mut().for_each(|c| *c = ZERO);
                        tree.accumulate_local(level, cell, out, |src| {
                            if tree.counts[level][src] == 0 {
                                None
                            } else {
                                Some(&tree.multipoles[level][src * pp..(src + 1) * pp])
                            }
                        });
                        if level > 2 {
                            let parent = tree.parent(level, cell);
                            let oct = FmmTree::octant(tree.cell_coords(level, cell));
                            l2l_acc(
                                &tree.locals[level - 1][parent * pp..(parent + 1) * pp],
                                &tree.shift_tables[level][oct * pp..(oct + 1) * pp],
                                p,
                                out,
                            );
                        }
                        mirror(p, out);
                    }
                });
            }
            self.locals[level] = cur;
        }
    }

    /// Adds `m2l` contributions from every interaction-list source that `source` maps to coefficients.
    #[inline]
    pub(crate) fn accumulate_local<'a, F>(&'a self, level: usize, cell: usize, out: &mut [C64], source: F)
    where
        F: Fn(usize) -> Option<&'a [C64]>,
    {
        let p = self.config.num_terms;
        let pp = p * p;
        let table = &self.m2l_tables[level];
        self.for_each_interaction(level, cell, |src, o| {
            if let Some(m) = source(src) {
                let slot = offset_slot(o);
                m2l_acc(m, &table[slot * 4 * pp..(slot + 1) * 4 * pp], p, out);
            }
        });
    }

    /// Far-field potential at `x` from the local expansion of its finest cell.
    pub(crate) fn far_potential(&self, x: Vec3, scratch: &mut [C64]) -> f64 {
        let finest = self.finest();
        let cell = self.finest_cell_of(x);
        let pp = self.config.num_terms.pow(2);
        eval_local_with(
            &self.locals[finest][cell * pp..(cell + 1) * pp],
            sub(x, self.cell_centre(finest, cell)),
            self.config.num_terms,
            scratch,
        )
    }

    /// Direct Coulomb potential at `x` from the particles in the 27 finest cells
    /// around the cell containing `x`, skipping particle `exclude`.
    pub(crate) fn near_potential(&self, state: &ParticleState, x: Vec3, exclude: Option<usize>) -> Result<f64> {
        let finest = self.finest();
        let mut acc = 0.0;
        let mut err = None;
        self.for_each_adjacent(finest, self.finest_cell_of(x), |c| {
            for &j in self.occupancy(c) {
                if Some(j) == exclude {
                    continue;
                }
                let d = sub(x, state.positions[j]);
                let r2 = dot(d, d);
                if r2 == 0.0 {
                    err.get_or_insert(Error::CoincidentParticles { i: exclude.unwrap_or(j), j });
                    continue;
                }
                acc += state.charges[j] / crate::math::sqrt(r2);
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(acc),
        }
    }

    /// Solver potential at `x`: own-cell local expansion plus near-field direct sum.
    pub fn potential_at(&self, state: &ParticleState, x: Vec3, exclude: Option<usize>) -> Result<f64> {
        let mut scratch = vec![ZERO; self.config.num_terms.pow(2)];
        Ok(self.far_potential(x, &mut scratch) + self.near_potential(state, x, exclude)?)
    }
}

fn check_binned(tree: &FmmTree, state: &ParticleState) -> Result<()> {
    if tree.particle_cell.len() != state.len() {
        return Err(Error::InvalidParameter("tree was binned for a different particle set"));
    }
    Ok(())
}

/// Per-particle direct potentials over each particle's own and adjacent finest
/// cells, and the corresponding energy `½ Σ q_i φ_i`.
pub fn near_field_direct(tree: &FmmTree, state: &ParticleState, workers: usize) -> Result<(Vec<f64>, f64)> {
    check_binned(tree, state)?;
    let phi = par::map_indices(state.len(), workers, |i| {
        tree.near_potential(state, state.positions[i], Some(i)).map_err(|e| match e {
            Error::CoincidentParticles { j, .. } => Error::CoincidentParticles { i: i.min(j), j: i.max(j) },
            other => other,
        })
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let energy = 0.5 * state.charges.iter().zip(&phi).map(|(q, p)| q * p).sum::<f64>();
    Ok((phi, energy))
}

/// Full solve: upward pass, downward pass, local evaluation plus near field.
pub fn fmm_solve(tree: &mut FmmTree, state: &ParticleState, workers: usize) -> Result<FmmSolution> {
    check_binned(tree, state)?;
    tree.upward_pass(state, workers);
    tree.downward_pass(workers);
    let (near, _) = near_field_direct(tree, state, workers)?;
    let tree = &*tree;
    let pp = tree.config.num_terms.pow(2);
    let potentials: Vec<f64> = par::map_ranges(&par::split(state.len(), workers), |range| {
        let mut scratch = vec![ZERO; pp];
        range.map(|i| tree.far_potential(state.positions[i], &mut scratch) + near[i]).collect::<Vec<f64>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let energy = 0.5 * state.charges.iter().zip(&potentials).map(|(q, p)| q * p).sum::<f64>();
    Ok(FmmSolution { energy, potentials, levels: tree.level_reports(workers) })
}
