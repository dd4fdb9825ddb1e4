use alloc::string::String;

use crate::lattice::Site;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension {0} outside 1..={max}", max = crate::lattice::MAX_DIM)]
    Dimension(usize),
    #[error("mixed dimensions in one geometric object")]
    DimensionMismatch,
    #[error("region must contain at least one site")]
    EmptyRegion,
    #[error("explicit region lists a site twice")]
    DuplicateSite,
    #[error("no spin value available at site {0:?} (incomplete boundary data)")]
    MissingSpin(Site),
    #[error("site {0:?} lies outside the region")]
    SiteOutsideRegion(Site),
    #[error("invalid spin space: {0}")]
    SpinSpace(&'static str),
    #[error("invalid interaction kernel: {0}")]
    Kernel(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("configuration has {got} sites, region has {expected}")]
    ConfigurationSize { expected: usize, got: usize },
    #[error("replicas live on different regions")]
    IncompatibleRegions,
    #[error("coupling supports 1..=4 replicas, got {0}")]
    ReplicaCount(usize),
    #[error("monotone order broken at step {step}, site {site:?}, between replicas {lower} and {upper}")]
    OrderViolation { step: u64, site: Site, lower: usize, upper: usize },
    #[error("initial replicas are not ordered componentwise")]
    UnorderedInitial,
    #[error("region too small for horizon {steps}: it must contain the L1 ball of radius {required_radius}")]
    RegionTooSmall { steps: u64, required_radius: u32 },
    #[error("support of the observable is not covered by the region")]
    SupportOutsideRegion,
    #[error("enumeration over {sites} sites exceeds the budget of {budget}")]
    BudgetExceeded { sites: usize, budget: usize },
    #[error("regions of the two tables differ")]
    RegionMismatch,
    #[error("nesting precondition violated: need dist(Λ, Λ'^c) > {range}, got {distance}")]
    Nesting { distance: u32, range: u32 },
    #[error("need at least 3 strictly positive points, got {0}")]
    TooFewPoints(usize),
    #[error("probability {0} outside the open interval (0, 1)")]
    Probability(f64),
}
