//! Far-detuned Raman and Rayleigh scattering out of the metastable D5/2
//! manifold of ⁴⁰Ca⁺, the gate errors it implies, and a simulator for the
//! decay-rate measurement used to test it.
//!
//! ```
//! use raman_scatter::prelude::*;
//!
//! let species = SpeciesData::ca40();
//! let engine = ScatteringEngine::with_defaults(&species).unwrap();
//! let laser = LaserField::pure(976e-9, PolarizationKind::SigmaMinus, 1.0).unwrap();
//! let g = engine
//!     .rate_per_intensity(Sublevel::up(), &laser, Destination::ExitManifold)
//!     .unwrap();
//! assert!(g > 3e-9 && g < 4e-9); // Hz per W/m²
//! ```

pub mod angular;
pub mod cli;
pub mod constants;
pub mod error;
pub mod fit;
pub mod gates;
pub mod reproduce;
pub mod scattering;
pub mod sim;
pub mod species;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::angular::{clebsch_gordan, wigner3j, HalfInt};
    pub use crate::error::{Error, Result};
    pub use crate::fit::{
        bootstrap_uncertainty, fit_exponential, fit_rate_vs_intensity, fit_survival_curve, subtract_natural, DecayFit,
        RateFit, RatePoint,
    };
    pub use crate::gates::{
        lamb_dicke, one_qubit_error, two_photon_rabi, two_qubit_error, wavelength_scan, Beam, ErrorBudget, GateConfig,
        GateKind,
    };
    pub use crate::scattering::{
        intensity_from_power, Destination, EngineOptions, LaserField, PolarizationKind, RateBreakdown,
        ScatteringEngine,
    };
    pub use crate::sim::{
        build_rate_matrix, effective_decay_bias, run_protocol, simulate_trial, Dataset, ProtocolConfig, RateMatrix,
    };
    pub use crate::species::{lande_g, load_species, zeeman_splitting, ManifoldLabel, SpeciesData, Sublevel};
}
