use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tetrahedron {tet} inverted (signed volume {volume:e})")]
    TetInversion { tet: usize, volume: f64 },

    #[error("tetrahedron {tet} is degenerate (signed volume {volume:e})")]
    DegenerateTet { tet: usize, volume: f64 },

    #[error("mesh is not a manifold: {0}")]
    NonManifold(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("homology rank mismatch: expected {expected}, found {found}")]
    HomologyRankMismatch { expected: usize, found: usize },

    #[error("inconsistent Lagrangian: {0}")]
    InconsistentLagrangian(String),

    #[error("factorization failed: {0}")]
    FactorizationFailure(String),

    #[error("eigensolver did not converge after {iterations} operator applications ({converged}/{wanted} converged, worst residual {worst_residual:e})")]
    NoConvergence {
        iterations: usize,
        converged: usize,
        wanted: usize,
        worst_residual: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigenvalue {0:e} is below the kernel threshold")]
    ZeroEigenvalue(f64),

    #[error("branch lost at t = {t}: subspace overlap {overlap:.3} below threshold")]
    BranchLoss { t: f64, overlap: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("linear solver failed: residual {residual:e}")]
    SolverFailure { residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for errors that stem from numerics rather than from input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::TetInversion { .. }
                | Error::DegenerateTet { .. }
                | Error::FactorizationFailure(_)
                | Error::NoConvergence { .. }
                | Error::DimensionMismatch { .. }
                | Error::ZeroEigenvalue(_)
                | Error::BranchLoss { .. }
                | Error::NotPsd { .. }
                | Error::SolverFailure { .. }
                | Error::HomologyRankMismatch { .. }
        )
    }
}
