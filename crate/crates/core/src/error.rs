use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate Fermi level: eigenvalues {below} and {above} coincide within {tol:e}")]
    DegenerateFermiLevel { below: f64, above: f64, tol: f64 },

    #[error("density matrix eigenvalue {0} lies outside [0, 1]")]
    NotADensity(f64),

    #[error("matrix is not an orthogonal projection (defect {0:e})")]
    NotAProjection(f64),

    #[error("integrator blow-up at t = {t}: idempotency defect {defect:e}")]
    IntegratorBlowUp { t: f64, defect: f64 },

    #[error("singular value decomposition did not converge")]
    SvdNonConvergence,

    #[error("Krylov propagation did not converge (residual {0:e})")]
    KrylovNonConvergence(f64),

    #[error("non-unitary implementor (defect {0:e})")]
    NonUnitary(f64),

    #[error("mismatched time grids: {0}")]
    GridMismatch(String),

    #[error("non-positive value {value} at index {index} in growth fit")]
    NonPositiveSeries { index: usize, value: f64 },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
