//! Free-space Fast Multipole Method for the Coulomb potential (unit Coulomb constant).

pub mod expansion;
pub mod harmonics;
mod solve;
mod tree;
mod update;

pub use expansion::{
    evaluate_local, evaluate_local_imaginary, evaluate_multipole, l2l, m2l, m2m, particle_to_local,
    particle_to_multipole, LocalExpansion, MultipoleExpansion,
};
pub use solve::{fmm_solve, near_field_direct, FmmSolution, LevelReport};
pub use tree::{build_tree, FmmConfig, FmmTree};
