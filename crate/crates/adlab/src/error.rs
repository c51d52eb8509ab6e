use thiserror::Error;

/// Errors produced by the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Hamiltonian is not Hermitian at t = {t} (max residual {residual:.3e})")]
    NonHermitianInput { t: f64, residual: f64 },

    #[error("spectrum degenerate at t = {t} (gap {gap:.3e} below tolerance {tol:.3e})")]
    DegeneracyDetected { t: f64, gap: f64, tol: f64 },

    #[error("effective precession frequency vanishes (E-tilde = {e_tilde:.3e})")]
    DegenerateFrequency { e_tilde: f64 },

    #[error("time grid too coarse: finite-difference anti-Hermiticity residual {residual:.3e} exceeds 1e-3")]
    GridTooCoarse { residual: f64 },

    #[error("time step too large: dt * max|E| = {product:.3e} exceeds 0.5")]
    StepTooLarge { product: f64 },

    #[error("states orthogonal at t = {t}: |overlap| = {overlap:.3e}, phase undefined")]
    OrthogonalStates { t: f64, overlap: f64 },

    #[error("Berry accumulator has non-real residual {residual:.3e}")]
    NonRealAccumulator { residual: f64 },

    #[error("arctan branch singularity at t = {t}: denominator magnitude below 1e-9")]
    BranchSingularity { t: f64 },

    #[error("input vector not unit-normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid configuration at `{field}`: {reason}")]
    ConfigInvalid { field: String, reason: String },

    #[error("task `{task}` failed: {source}")]
    TaskFailed {
        task: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}, field {column}: {reason}")]
    ParseError {
        line: usize,
        column: usize,
        reason: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap an error with the name of the pipeline task that produced it.
    pub fn in_task(self, task: &str) -> Error {
        Error::TaskFailed {
            task: task.to_string(),
            source: Box::new(self),
        }
    }
}
