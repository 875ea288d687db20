use thiserror::Error;

/// Errors raised by the detector, tomography and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model or routine parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A requested Hilbert-space dimension is not allowed.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// The largest outcome is not saturated at the truncation edge, so the
    /// POVM cannot be padded to a larger dimension.
    #[error("largest outcome not saturated: weight {weight} at photon number {photon_number} is below 1 - {epsilon}")]
    Saturation {
        weight: f64,
        photon_number: usize,
        epsilon: f64,
    },

    /// The Fock truncation is too small for the requested coherent probe.
    #[error("truncation too small: dimension {dimension} < required {required} for mean photon number {mean}")]
    Truncation {
        mean: f64,
        dimension: usize,
        required: usize,
    },

    /// Inputs have inconsistent shapes.
    #[error("shape error: {0}")]
    Shape(String),

    /// The outcome never occurs (zero trace), so purity and posterior are undefined.
    #[error("outcome {0} has zero total weight")]
    ZeroOutcome(usize),

    /// A value lies outside the range of the requested quantity.
    #[error("range error: {0}")]
    Range(String),

    /// The figures-of-merit fit could not describe the POVM.
    #[error("fit diverged: rms residual {rms} exceeds {threshold}")]
    FitDivergence { rms: f64, threshold: f64 },

    /// Malformed input file.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
