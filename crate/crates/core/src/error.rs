use alloc::string::String;

/// Failures raised by the exact algebra, the field samplers and the residual
/// machinery.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("J^2 differs from -I by {violation:e}")]
    NotAlmostComplex { violation: f64 },
    #[error("J is not compatible with omega (violation {violation:e})")]
    NotCompatible { violation: f64 },
    #[error("Q = omega(J., .) is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("matrix is not symplectic for the given pairing")]
    NotSymplectic,
    #[error("omega must be antisymmetric and nondegenerate")]
    InvalidPairing,
    #[error("lattice Gram matrix is singular")]
    DegenerateLattice,
    #[error("lattice Gram matrix has non-integer entries")]
    NotIntegral,
    #[error("relation {relation} does not evaluate to the identity")]
    RelationViolated { relation: usize },
    #[error("word references generator {index} but only {count} exist")]
    InvalidWord { index: usize, count: usize },
    #[error("monodromy of generator {generator} does not preserve the lattice")]
    LatticeNotPreserved { generator: usize },
    #[error("holonomy sample exceeded {limit} elements")]
    SizeLimit { limit: usize },
    #[error("representations do not share a presentation and fiber dimension")]
    PresentationMismatch,
    #[error("direction {direction} has {points} samples, at least {required} required")]
    GridTooCoarse { direction: usize, points: usize, required: usize },
    #[error("metric is singular")]
    SingularMetric,
    #[error("metric signature is ({negative} negative, {positive} positive), expected (1, 3)")]
    SignatureError { negative: usize, positive: usize },
    #[error("metric is not positive definite")]
    NotPositiveMetric,
    #[error("taming is not a global section: twisted periodicity violated by {violation:e}")]
    NonGlobalSection { violation: f64 },
    #[error("field is not positively polarized (violation {violation:e})")]
    NotPolarized { violation: f64 },
    #[error("field is incompatible with the cut in direction {direction} (violation {violation:e})")]
    CutIncompatible { direction: usize, violation: f64 },
    #[error("lift does not intertwine monodromy of generator {generator} (violation {violation:e})")]
    EquivarianceViolation { generator: usize, violation: f64 },
    #[error("target map is not a potential-preserving isometry (violation {violation:e})")]
    IsometryViolation { violation: f64 },
    #[error("twisted boundary does not square to zero in degree {degree}")]
    InvalidComplex { degree: usize },
    #[error("cell complex was not built from the grid of the field")]
    ComplexMismatch,
    #[error("tolerance must be positive: {name}")]
    InvalidTolerance { name: String },
    #[error("unknown tolerance name {name}")]
    UnknownTolerance { name: String },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = core::result::Result<T, Error>;
