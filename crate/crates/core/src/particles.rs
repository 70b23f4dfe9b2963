//! Simulation domain and particle storage.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

pub type Vec3 = [f64; 3];

#[inline(always)]
pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline(always)]
pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
pub(crate) fn norm(a: Vec3) -> f64 {
    math::sqrt(dot(a, a))
}

/// Axis-aligned box `[0, extent)` per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationDomain {
    pub extent: Vec3,
    pub periodic: [bool; 3],
}

impl SimulationDomain {
    pub fn new(extent: Vec3, periodic: [bool; 3]) -> Result<Self> {
        if extent.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidParameter("domain extent must be positive"));
        }
        Ok(Self { extent, periodic })
    }

    pub fn periodic_cube(side: f64) -> Result<Self> {
        Self::new([side; 3], [true; 3])
    }

    pub fn is_cubic(&self) -> bool {
        self.extent[0] == self.extent[1] && self.extent[1] == self.extent[2]
    }

    pub fn volume(&self) -> f64 {
        self.extent[0] * self.extent[1] * self.extent[2]
    }

    /// Displacement `x_i - x_j` with periodic components folded to the nearest image.
    #[inline]
    pub fn minimum_image(&self, x_i: Vec3, x_j: Vec3) -> Vec3 {
        let mut d = sub(x_i, x_j);
        for (axis, c) in d.iter_mut().enumerate() {
            if self.periodic[axis] {
                let e = self.extent[axis];
                let half = 0.5 * e;
                if *c > half {
                    *c -= e;
                } else if *c < -half {
                    *c += e;
                }
            }
        }
        d
    }

    /// Maps a position back into `[0, extent)` along periodic axes.
    #[inline]
    pub fn wrap(&self, x: &mut Vec3) {
        for (axis, c) in x.iter_mut().enumerate() {
            if self.periodic[axis] {
                let e = self.extent[axis];
                if *c >= e || *c < 0.0 {
                    *c -= e * math::floor(*c / e);
                    // rounding can land exactly on the upper bound
                    if *c >= e {
                        *c = 0.0;
                    }
                }
            }
        }
    }

    pub fn contains(&self, x: Vec3) -> bool {
        (0..3).all(|a| x[a] >= 0.0 && x[a] < self.extent[a])
    }
}

/// Free function form of [`SimulationDomain::minimum_image`].
pub fn minimum_image_displacement(domain: &SimulationDomain, x_i: Vec3, x_j: Vec3) -> Vec3 {
    domain.minimum_image(x_i, x_j)
}

/// Structure-of-arrays particle storage; all vectors share one length.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub forces: Vec<Vec3>,
    pub masses: Vec<f64>,
    pub charges: Vec<f64>,
}

impl ParticleState {
    /// Particles at rest with unit mass and zero charge.
    pub fn at_rest(positions: Vec<Vec3>) -> Self {
        let n = positions.len();
        Self {
            positions,
            velocities: vec![[0.0; 3]; n],
            forces: vec![[0.0; 3]; n],
            masses: vec![1.0; n],
            charges: vec![0.0; n],
        }
    }

    pub fn with_charges(positions: Vec<Vec3>, charges: Vec<f64>) -> Result<Self> {
        if positions.len() != charges.len() {
            return Err(Error::InvalidParameter("positions and charges differ in length"));
        }
        let mut s = Self::at_rest(positions);
        s.charges = charges;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn is_consistent(&self) -> bool {
        let n = self.positions.len();
        self.velocities.len() == n
            && self.forces.len() == n
            && self.masses.len() == n
            && self.charges.len() == n
    }

    pub fn wrap_into(&mut self, domain: &SimulationDomain) {
        for x in &mut self.positions {
            domain.wrap(x);
        }
    }

    pub fn check_inside(&self, domain: &SimulationDomain) -> Result<()> {
        match self.positions.iter().position(|&x| !domain.contains(x)) {
            Some(index) => Err(Error::OutsideDomain { index }),
            None => Ok(()),
        }
    }
}

/// `n_per_axis³` particles at `(i + ½)·a` in a periodic cube of side `n_per_axis·a`.
///
/// Particle `ix + n·(iy + n·iz)` sits at lattice coordinates `(ix, iy, iz)`.
pub fn create_cubic_lattice(n_per_axis: usize, a: f64) -> Result<(SimulationDomain, ParticleState)> {
    if n_per_axis == 0 {
        return Err(Error::InvalidParameter("n_per_axis must be at least 1"));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter("lattice spacing must be positive"));
    }
    let domain = SimulationDomain::periodic_cube(n_per_axis as f64 * a)?;
    let mut positions = Vec::with_capacity(n_per_axis.pow(3));
    for iz in 0..n_per_axis {
        for iy in 0..n_per_axis {
            for ix in 0..n_per_axis {
                positions.push([
                    (ix as f64 + 0.5) * a,
                    (iy as f64 + 0.5) * a,
                    (iz as f64 + 0.5) * a,
                ]);
            }
        }
    }
    Ok((domain, ParticleState::at_rest(positions)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lattice_small() {
        let (d, s) = create_cubic_lattice(2, 1.0).unwrap();
        assert_eq!(s.len(), 8);
        assert_eq!(d.extent, [2.0; 3]);
        assert_eq!(s.positions[0], [0.5, 0.5, 0.5]);
        assert!(s.velocities.iter().chain(&s.forces).all(|v| *v == [0.0; 3]));
        assert!(s.masses.iter().all(|&m| m == 1.0));
        assert!(s.charges.iter().all(|&q| q == 0.0));
    }

    #[test]
    fn lattice_benchmark_size() {
        let (d, s) = create_cubic_lattice(100, 0.945).unwrap();
        assert_eq!(s.len(), 1_000_000);
        for e in d.extent {
            assert!((e - 94.5).abs() < 1e-12);
        }
    }

    #[test]
    fn lattice_single_site() {
        let (_, s) = create_cubic_lattice(1, 6.6).unwrap();
        assert_eq!(s.positions, vec![[3.3, 3.3, 3.3]]);
    }

    #[test]
    fn lattice_rejects_bad_input() {
        assert!(create_cubic_lattice(0, 1.0).is_err());
        assert!(create_cubic_lattice(2, 0.0).is_err());
        assert!(create_cubic_lattice(2, -1.0).is_err());
    }

    #[test]
    fn minimum_image_cases() {
        let periodic = SimulationDomain::periodic_cube(10.0).unwrap();
        let d = periodic.minimum_image([0.1, 0.0, 0.0], [9.9, 0.0, 0.0]);
        assert!((d[0] - 0.2).abs() < 1e-12 && d[1] == 0.0 && d[2] == 0.0);
        assert_eq!(periodic.minimum_image([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]), [0.0; 3]);

        let open = SimulationDomain::new([10.0; 3], [false, true, true]).unwrap();
        let d = open.minimum_image([0.1, 0.0, 0.0], [9.9, 0.0, 0.0]);
        assert!((d[0] + 9.8).abs() < 1e-12);
    }

    #[test]
    fn wrap_stays_in_range() {
        let d = SimulationDomain::periodic_cube(10.0).unwrap();
        let mut x = [-1e-18, 10.0, 25.5];
        d.wrap(&mut x);
        assert!(d.contains(x), "{x:?}");
        assert!((x[2] - 5.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn minimum_image_is_antisymmetric(
            a in prop::array::uniform3(0.0f64..7.0),
            b in prop::array::uniform3(0.0f64..7.0),
        ) {
            let d = SimulationDomain::new([7.0, 5.0, 3.0], [true, true, false]).unwrap();
            let b = [b[0], b[1] * 5.0 / 7.0, b[2] * 3.0 / 7.0];
            let a = [a[0], a[1] * 5.0 / 7.0, a[2] * 3.0 / 7.0];
            let ij = d.minimum_image(a, b);
            let ji = d.minimum_image(b, a);
            for k in 0..3 {
                prop_assert_eq!(ij[k], -ji[k]);
                if d.periodic[k] {
                    prop_assert!(ij[k].abs() <= d.extent[k] / 2.0);
                }
            }
        }
    }
}
