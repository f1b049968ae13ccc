use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("grid size must be even and at least 4, got {0}")]
    InvalidGridSize(usize),

    #[error("unknown built-in symbol `{0}` (expected `fig1` or `fig2`)")]
    UnknownSymbol(String),

    #[error("expression error at byte {pos}: {msg}")]
    Expression { pos: usize, msg: String },

    #[error("multiplier does not satisfy a Gaussian tail bound: {0}")]
    NotGaussianDecay(String),

    #[error("deformation field is not 2π-periodic (mismatch {0:.3e})")]
    NotPeriodic(f64),

    #[error("eigenvector basis condition number {cond:.3e} exceeds limit {limit:.3e}")]
    IllConditionedEigenbasis { cond: f64, limit: f64 },

    #[error("eigenvalue {re:.6e}{im:+.6e}i lies on the branch cut (-inf, 0]")]
    BranchCut { re: f64, im: f64 },

    #[error("QR iteration did not converge within {sweeps} sweeps")]
    NonConvergence { sweeps: usize },

    #[error("matrix is singular")]
    Singular,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("no resonances inside the spectral window")]
    EmptyResonanceSet,

    #[error("no near-characteristic sample points found")]
    EmptySample,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
