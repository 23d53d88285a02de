//! Preset scenarios: dichotomic two-level model, lattices, continuum limit.

use alloc::string::String;
use alloc::vec::Vec;

use crate::generator::{HybridGenerator, Level};

pub mod continuum;
pub mod fokker_planck;
pub mod lattice;
pub mod tls;

pub use continuum::{ContinuumParams, ContinuumProfile, Grid, Modality};
pub use fokker_planck::{DriftScheme, FokkerPlanck, FpFields, FpTrajectory};
pub use lattice::{LatticeScenario, LatticeVariant};
pub use tls::{Mechanism, TlsScenario};

/// A built generator together with the naming of its two-level eigenstates.
#[derive(Clone, Debug)]
pub struct BuiltModel {
    pub generator: HybridGenerator,
    /// `|+⟩` level of every label.
    pub plus: Vec<Level>,
    /// `|−⟩` level of every label.
    pub minus: Vec<Level>,
    /// Non-fatal remarks (degenerate stationarity, raised truncation, ...).
    pub notes: Vec<String>,
}
