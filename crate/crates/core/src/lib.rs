//! Shared-memory kernels for three atomistic simulation families:
//!
//! * truncated Lennard-Jones molecular dynamics over cell lists and a
//!   Rapaport-style neighbour matrix ([`particles`], [`cells`], [`neighbour`], [`lj`]),
//! * a free-space Fast Multipole Method for the Coulomb potential ([`fmm`]),
//! * rejection-free kinetic Monte Carlo on a cubic lattice whose energy
//!   differences come from FMM local expansions ([`kmc`]),
//!
//! plus brute-force references for all of them ([`oracle`]).
//!
//! The crate is `no_std` + `alloc`. With the default `std` feature, operations
//! that take a `workers` count fan out over scoped threads; without it they run
//! on the calling thread and the `libm` feature supplies the float intrinsics.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("scalemd-core needs either the `std` or the `libm` feature");

extern crate alloc;

mod error;
mod math;
mod par;

pub mod cells;
pub mod fmm;
pub mod kmc;
pub mod lj;
pub mod neighbour;
pub mod oracle;
pub mod particles;
pub mod rng;

pub use error::{Error, Result};
pub use particles::{Vec3, ParticleState, SimulationDomain};
