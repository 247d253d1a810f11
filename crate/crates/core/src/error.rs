//! Error type shared by all modules.

use thiserror::Error;

/// Errors raised by validation and numerical routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A state vector failed the unit-norm check.
    #[error("state vector not normalized: |norm - 1| = {0:.3e}")]
    NotNormalized(f64),

    /// A matrix expected to be Hermitian was not.
    #[error("matrix not Hermitian: max |A - A^H| entry = {0:.3e}")]
    NotHermitian(f64),

    /// Dimensions of two objects do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An operation that requires distinct polar radii met a (near-)tie.
    #[error("degenerate radii: min |r_j^2 - r_k^2| = {gap:.3e} at t = {t}")]
    DegenerateRadii { gap: f64, t: f64 },

    /// Radii stayed degenerate past the bridging window.
    #[error("permanent degeneracy detected over [{t_start}, {t_end}]")]
    PermanentDegeneracy { t_start: f64, t_end: f64 },

    /// A projector family failed the mutual-orthogonality check.
    #[error("projectors not mutually orthogonal: residual {0:.3e}")]
    NonOrthogonalProjectors(f64),

    /// The adaptive integrator hit its minimum step size.
    #[error("step size floor reached at t = {t} (requested tol {tol:.3e})")]
    StepSizeFloor { t: f64, tol: f64 },

    /// An operation requiring a Hamiltonian split H = H0 + H1⊗I + I⊗H2 was
    /// called without one.
    #[error("Hamiltonian split (H0, H1, H2) required but not present")]
    MissingSplit,

    /// A path failed its claimed horizontality check.
    #[error("input path not horizontal: max residual {0:.3e} exceeds {1:.3e}")]
    NotHorizontal(f64, f64),

    /// An iterated-conditioning stage produced a state that is entangled
    /// across the next requested cut.
    #[error("stage output entangled across requested cut: secondary radius {0:.3e}")]
    NonProductStage(f64),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Fewer samples than an algorithm needs.
    #[error("too few samples: {got} < {need}")]
    TooFewSamples { got: usize, need: usize },

    /// I/O or serialization failure (CLI-facing paths).
    #[error("io error: {0}")]
    Io(String),
}
