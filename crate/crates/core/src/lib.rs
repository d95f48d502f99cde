//! Exact simulation of small linear-optical circuits on polarization-encoded
//! photons.
//!
//! States are sparse superpositions over multimode Fock states
//! ([`fock::PureState`]); mixed states are weighted ensembles of them
//! ([`ensemble::Ensemble`]). Loss, polarizers and detectors act as Kraus
//! branchings, so every probability and conditional state is computed by
//! full enumeration with no sampling.
//!
//! On top of that core the crate provides pair-source models, the
//! three-source GHZ construction with post-selection on threshold detectors,
//! type-II fusion of (lossy) GHZ states, and the closed-form photon-loss
//! thresholds, together with the checks and CLI front end that tie them
//! together.

pub mod checks;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod fock;
pub mod fusion;
pub mod ghz;
pub mod optics;
pub mod sources;
pub mod threshold;

pub use ensemble::{fidelity_with_pure, trace_distance, DensityMatrix, Ensemble};
pub use error::{Error, Result};
pub use fock::{Channel, FockBasisState, ModeId, Polarization, PureState};
pub use fusion::{fit_id_ghz, fuse_type_ii, ghz_pure, id_ghz, IdGhzSpec};
pub use ghz::{analyze_output, canonical_layout, run_ghz_circuit, ConditionalResult, GhzCircuitLayout, OutputReport};
pub use optics::{apply_element, detect, ClickOutcome, DetectorModel, Element};
pub use sources::{make_source, BellForm, DoublePairModel, SourceSpec};
