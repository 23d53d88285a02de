//! Hybrid quantum-classical thermal states and the detailed-balance Lindblad
//! dynamics that relax towards them.
//!
//! A hybrid state is a collection of conditional (unnormalized) density
//! matrices `ρ^c`, one per classical label `c`. The crate builds the exact
//! canonical thermal state of a hybrid Hamiltonian `H_c = E_c·I + H_s + λ·H̄_c`,
//! assembles hybrid Lindblad generators whose rates obey detailed balance,
//! integrates them in time and provides preset models (a qubit coupled to a
//! dichotomic classical variable, and a qubit on a one-dimensional lattice
//! together with its continuum Fokker-Planck limit).
//!
//! Units: `ħ = 1`, `k_B = 1`; `beta` is the only temperature input.
//!
//! The crate is `no_std` (with `alloc`); enable the `std` feature for
//! `std::error::Error` integration.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

mod error;
pub(crate) mod fmath;

pub mod checks;
pub mod evolve;
pub mod generator;
pub mod linalg;
pub mod markov;
pub mod models;
pub mod random;
pub mod state;
pub mod thermal;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use evolve::{converged_state, integrate, IntegratorConfig, Method, Observable, Trajectory};
pub use generator::{
    basis_change_unitary, BipartiteLindblad, HybridGenerator, Level, RatePair, RateTable,
    TransitionSpec,
};
pub use linalg::{eigh, herm_exp, trace_distance, ComplexMatrix, HermitianEigensystem};
pub use state::{HybridHamiltonian, HybridState};
pub use thermal::{helmholtz, hybrid_thermal, weights_via_free_energy, ThermalDecomposition};
