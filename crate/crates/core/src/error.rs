use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("domain extent {extent} on axis {axis} is smaller than the cutoff {cutoff}")]
    DomainTooSmall { axis: usize, extent: f64, cutoff: f64 },
    #[error("particle {index} lies outside the domain")]
    OutsideDomain { index: usize },
    #[error("non-positive pair distance between particles {i} and {j}")]
    NonPositiveDistance { i: usize, j: usize },
    #[error("the FMM requires a cubic domain")]
    NonCubicDomain,
    #[error("multipole-to-local translation requested between adjacent cells")]
    NotWellSeparated,
    #[error("particles {i} and {j} coincide")]
    CoincidentParticles { i: usize, j: usize },
    #[error("no moves available: total rate is zero")]
    NoMovesAvailable,
    #[error("destination site {site:?} is occupied")]
    DestinationOccupied { site: [usize; 3] },
}
