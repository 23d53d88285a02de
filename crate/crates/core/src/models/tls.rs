//! Qubit coupled to a dichotomic classical degree of freedom.
//!
//! Label 0 is `a`, label 1 is `b`. In each label `|+⟩` is the upper and
//! `|−⟩` the lower eigenvector of the conditional Hamiltonian.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::generator::{HybridGenerator, Level, TransitionSpec};
use crate::linalg::ComplexMatrix;
use crate::models::BuiltModel;
use crate::state::HybridHamiltonian;
use crate::{Error, Result};

const A: usize = 0;
const B: usize = 1;
const MINUS: usize = 0;
const PLUS: usize = 1;

/// Coupling mechanisms between the four levels `|±⟩_a`, `|±⟩_b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mechanism {
    /// `|+⟩_c ↔ |−⟩_c` inside each label.
    A,
    /// `|+⟩_a ↔ |−⟩_b`.
    B,
    /// `|−⟩_a ↔ |+⟩_b`.
    C,
    /// `|+⟩_a ↔ |+⟩_b`.
    D,
    /// `|−⟩_a ↔ |−⟩_b`.
    E,
}

impl Mechanism {
    pub const ALL: [Mechanism; 5] = [Mechanism::A, Mechanism::B, Mechanism::C, Mechanism::D, Mechanism::E];

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_lowercase() {
            'a' => Some(Self::A),
            'b' => Some(Self::B),
            'c' => Some(Self::C),
            'd' => Some(Self::D),
            'e' => Some(Self::E),
            _ => None,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Self::A => 'a',
            Self::B => 'b',
            Self::C => 'c',
            Self::D => 'd',
            Self::E => 'e',
        }
    }

    pub fn moves_label(self) -> bool {
        self != Self::A
    }

    fn specs(self, rate: f64) -> Vec<TransitionSpec> {
        let l = Level::new;
        match self {
            Self::A => vec![TransitionSpec::diagonal(A, PLUS, MINUS, rate), TransitionSpec::diagonal(B, PLUS, MINUS, rate)],
            Self::B => vec![TransitionSpec::non_diagonal(l(A, PLUS), l(B, MINUS), rate)],
            Self::C => vec![TransitionSpec::non_diagonal(l(A, MINUS), l(B, PLUS), rate)],
            Self::D => vec![TransitionSpec::non_diagonal(l(A, PLUS), l(B, PLUS), rate)],
            Self::E => vec![TransitionSpec::non_diagonal(l(A, MINUS), l(B, MINUS), rate)],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TlsScenario {
    pub beta: f64,
    pub e_a: f64,
    pub e_b: f64,
    /// Two-dimensional conditional Hamiltonians (without the classical energy).
    pub h_a: ComplexMatrix,
    pub h_b: ComplexMatrix,
    /// Enabled mechanisms with their downhill rates.
    pub mechanisms: Vec<(Mechanism, f64)>,
}

impl TlsScenario {
    /// `H_a = (ω_a/2)σ_z`, `H_b = (ω_b/2)σ_x`, all five mechanisms at unit rate.
    pub fn sigma_zx(beta: f64, omega_a: f64, omega_b: f64, e_a: f64, e_b: f64) -> Self {
        Self {
            beta,
            e_a,
            e_b,
            h_a: ComplexMatrix::pauli_z().scale_real(omega_a / 2.0),
            h_b: ComplexMatrix::pauli_x().scale_real(omega_b / 2.0),
            mechanisms: Mechanism::ALL.iter().map(|&m| (m, 1.0)).collect(),
        }
    }

    pub fn with_mechanisms(mut self, mechanisms: &[Mechanism], rate: f64) -> Self {
        self.mechanisms = mechanisms.iter().map(|&m| (m, rate)).collect();
        self
    }

    pub fn hamiltonian(&self) -> Result<HybridHamiltonian> {
        HybridHamiltonian::from_conditionals(vec![self.e_a, self.e_b], vec![self.h_a.clone(), self.h_b.clone()])
    }

    pub fn build(&self) -> Result<BuiltModel> {
        if self.h_a.dim() != 2 || self.h_b.dim() != 2 {
            return Err(Error::InvalidParameter("two-level conditionals required".into()));
        }
        let specs: Vec<TransitionSpec> = self.mechanisms.iter().flat_map(|&(m, r)| m.specs(r)).collect();
        let generator = HybridGenerator::build(self.hamiltonian()?, &specs, self.beta)?;
        let mut notes = Vec::new();
        if !self.mechanisms.iter().any(|&(m, r)| m.moves_label() && r > 0.0) {
            notes.push("no mechanism changes the classical label; stationary state is not unique".to_string());
        }
        Ok(BuiltModel {
            generator,
            plus: vec![Level::new(A, PLUS), Level::new(B, PLUS)],
            minus: vec![Level::new(A, MINUS), Level::new(B, MINUS)],
            notes,
        })
    }
}
