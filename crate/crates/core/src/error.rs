use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Quantum numbers outside their allowed range (negative j, |m| > j, parity mismatch).
    #[error("invalid quantum numbers: {0}")]
    QuantumNumber(String),

    #[error("failed to read species file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse species data: {0}")]
    Parse(#[from] serde_json::Error),

    /// A load-time invariant failed; `field` names the offending entry.
    #[error("invalid species data in `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("no dipole transition between {upper} and {lower}")]
    MissingTransition { upper: String, lower: String },

    /// The far-detuned perturbative model does not apply (laser on or near a resonance).
    #[error(
        "laser at {wavelength_nm:.3} nm is within {detuning_thz:.4} THz of the {transition} \
         resonance; the far-detuned scattering model does not apply here"
    )]
    Resonance {
        wavelength_nm: f64,
        transition: String,
        detuning_thz: f64,
    },

    #[error("invalid laser field: {0}")]
    Laser(String),

    #[error("invalid gate configuration: {0}")]
    GateConfig(String),

    /// Two-photon coupling vanishes, so the gate time is unbounded.
    #[error("two-photon Rabi frequency is zero for this beam configuration")]
    ZeroRabi,

    #[error("Lamb-Dicke parameter is zero (no momentum transfer along the beam difference)")]
    ZeroLambDicke,

    #[error("invalid protocol configuration: {0}")]
    Protocol(String),

    /// Every trial survived, so the likelihood increases without bound in tau.
    #[error("decay fit is unbounded: no exit events in the data")]
    UnboundedFit,

    #[error("decay fit is degenerate: {0}")]
    DegenerateFit(String),

    #[error("rate-vs-intensity fit is rank deficient: {0}")]
    RankDeficient(String),

    #[error("bootstrap needs at least {min} resamples, got {got}")]
    InsufficientResamples { min: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for physics-domain failures (resonances, vanishing couplings, bad quantum numbers).
    pub fn is_domain_error(&self) -> bool {
        matches!(
            self,
            Error::QuantumNumber(_)
                | Error::MissingTransition { .. }
                | Error::Resonance { .. }
                | Error::Laser(_)
                | Error::GateConfig(_)
                | Error::ZeroRabi
                | Error::ZeroLambDicke
                | Error::UnboundedFit
                | Error::DegenerateFit(_)
                | Error::RankDeficient(_)
        )
    }
}
