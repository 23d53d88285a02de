//! Hybrid quantum-classical states `Ξ = Σ_c ρ^c ⊗ |c⟩⟨c|` and hybrid Hamiltonians.
//!
//! Classical labels are the indices `0..L`; models attach physical
//! coordinates to them externally.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::fmath;
use crate::linalg::{eigh, ComplexMatrix};
use crate::{Error, Result};

/// Eigenvalues in `[-CLIP_TOL, 0)` are treated as zero; below that a state is unphysical.
pub const CLIP_TOL: f64 = 1e-10;

/// A hybrid state: one conditional unnormalized density matrix per classical label.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState {
    dim: usize,
    blocks: Vec<ComplexMatrix>,
}

impl HybridState {
    /// Validates shapes, finiteness and Hermiticity of every block.
    pub fn new(blocks: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = blocks
            .first()
            .map(ComplexMatrix::dim)
            .ok_or_else(|| Error::InvalidParameter("hybrid state needs at least one label".into()))?;
        for b in &blocks {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: b.dim() });
            }
            b.check_hermitian()?;
        }
        Ok(Self { dim, blocks })
    }

    pub fn from_blocks_unchecked(blocks: Vec<ComplexMatrix>) -> Self {
        let dim = blocks.first().map_or(0, ComplexMatrix::dim);
        Self { dim, blocks }
    }

    pub fn zeros(dim: usize, labels: usize) -> Self {
        Self { dim, blocks: (0..labels).map(|_| ComplexMatrix::zeros(dim)).collect() }
    }

    /// `ρ ⊗ Σ_c p^c |c⟩⟨c|`.
    pub fn uncorrelated(rho: &ComplexMatrix, probabilities: &[f64]) -> Self {
        Self {
            dim: rho.dim(),
            blocks: probabilities.iter().map(|&p| rho.scale_real(p)).collect(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn num_labels(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, label: usize) -> &ComplexMatrix {
        &self.blocks[label]
    }

    pub fn block_mut(&mut self, label: usize) -> &mut ComplexMatrix {
        &mut self.blocks[label]
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<ComplexMatrix> {
        self.blocks
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim && self.blocks.len() == other.blocks.len()
    }

    pub(crate) fn check_shape(&self, dim: usize, labels: usize) -> Result<()> {
        if self.dim != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: self.dim });
        }
        if self.blocks.len() != labels {
            return Err(Error::DimensionMismatch { expected: labels, found: self.blocks.len() });
        }
        Ok(())
    }

    /// `p^c = Tr ρ^c`.
    pub fn classical_marginal(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.trace().re).collect()
    }

    /// `ρ = Σ_c ρ^c`.
    pub fn quantum_marginal(&self) -> ComplexMatrix {
        let mut rho = ComplexMatrix::zeros(self.dim);
        for b in &self.blocks {
            rho += b;
        }
        rho
    }

    pub fn total_trace(&self) -> f64 {
        self.classical_marginal().iter().sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.total_trace() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Self {
        self.scaled(1.0 / self.total_trace())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { dim: self.dim, blocks: self.blocks.iter().map(|b| b.scale_real(s)).collect() }
    }

    /// `self += a·x`.
    pub fn add_scaled(&mut self, a: f64, x: &Self) {
        let a = Complex64::new(a, 0.0);
        for (b, xb) in self.blocks.iter_mut().zip(&x.blocks) {
            b.add_scaled(a, xb);
        }
    }

    /// `S = −Σ_c Tr[ρ^c ln ρ^c]` (natural log, units of `k_B`).
    pub fn entropy(&self) -> Result<f64> {
        let mut s = 0.0;
        for (label, b) in self.blocks.iter().enumerate() {
            for l in eigh(b)?.eigenvalues {
                if l < -CLIP_TOL {
                    return Err(Error::UnphysicalState { label, eigenvalue: l });
                }
                if l > 0.0 {
                    s -= l * fmath::ln(l);
                }
            }
        }
        Ok(s)
    }

    /// Smallest eigenvalue over all conditional blocks.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let mut min = f64::INFINITY;
        for b in &self.blocks {
            min = min.min(eigh(b)?.eigenvalues[0]);
        }
        Ok(min)
    }

    /// Trace distance between the embedded block-diagonal states.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        other.check_shape(self.dim, self.blocks.len())?;
        let mut d = 0.0;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            let diff = (a - b).hermitian_part();
            d += eigh(&diff)?.eigenvalues.iter().map(|l| l.abs()).sum::<f64>();
        }
        Ok(0.5 * d)
    }

    pub fn max_block_norm(&self) -> f64 {
        self.blocks.iter().map(ComplexMatrix::frobenius_norm).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// Full `(L·dim)²` matrix with label-major ordering: row `c·dim + i`.
    pub fn embed(&self) -> ComplexMatrix {
        let n = self.dim;
        let mut full = ComplexMatrix::zeros(n * self.blocks.len());
        for (c, b) in self.blocks.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    full[(c * n + i, c * n + j)] = b[(i, j)];
                }
            }
        }
        full
    }

    /// Reads the diagonal classical blocks of a full matrix. Also returns the
    /// largest Frobenius norm among the off-diagonal (classical coherence) blocks.
    pub fn from_embedded(full: &ComplexMatrix, dim: usize) -> Result<(Self, f64)> {
        if dim == 0 || !full.dim().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: full.dim() });
        }
        let labels = full.dim() / dim;
        let mut blocks = Vec::with_capacity(labels);
        let mut off = 0.0f64;
        for c in 0..labels {
            for d in 0..labels {
                let blk = ComplexMatrix::from_fn(dim, |i, j| full[(c * dim + i, d * dim + j)]);
                if c == d {
                    blocks.push(blk);
                } else {
                    off = off.max(blk.frobenius_norm());
                }
            }
        }
        Ok((Self::from_blocks_unchecked(blocks), off))
    }
}

/// `H = Σ_c E_c |c⟩⟨c| + H_s + λ Σ_c H̄_c ⊗ |c⟩⟨c|`, stored per label.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridHamiltonian {
    energies: Vec<f64>,
    base: ComplexMatrix,
    coupling: f64,
    conditional_terms: Vec<ComplexMatrix>,
}

impl HybridHamiltonian {
    /// `energies[c] = E_c`, `base = H_s`, `coupling = λ`, `conditional_terms[c] = H̄_c`.
    pub fn new(
        energies: Vec<f64>,
        base: ComplexMatrix,
        coupling: f64,
        conditional_terms: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::InvalidParameter("hybrid Hamiltonian needs at least one label".into()));
        }
        if energies.len() != conditional_terms.len() {
            return Err(Error::DimensionMismatch {
                expected: energies.len(),
                found: conditional_terms.len(),
            });
        }
        if let Some(bad) = energies.iter().position(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("E_{bad} is not finite")));
        }
        if !coupling.is_finite() {
            return Err(Error::InvalidParameter("coupling λ is not finite".into()));
        }
        base.check_hermitian()?;
        for h in &conditional_terms {
            if h.dim() != base.dim() {
                return Err(Error::DimensionMismatch { expected: base.dim(), found: h.dim() });
            }
            h.check_hermitian()?;
        }
        Ok(Self { energies, base, coupling, conditional_terms })
    }

    /// `H_s = 0`, `λ = 1`: each label carries its own quantum Hamiltonian.
    pub fn from_conditionals(energies: Vec<f64>, quantum: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = quantum.first().map_or(0, ComplexMatrix::dim);
        Self::new(energies, ComplexMatrix::zeros(dim), 1.0, quantum)
    }

    pub fn num_labels(&self) -> usize {
        self.energies.len()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn base(&self) -> &ComplexMatrix {
        &self.base
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn conditional_terms(&self) -> &[ComplexMatrix] {
        &self.conditional_terms
    }

    /// `H_s + λ·H̄_c` (no classical energy shift).
    pub fn quantum_part(&self, label: usize) -> ComplexMatrix {
        let mut h = self.base.clone();
        h.add_scaled(Complex64::new(self.coupling, 0.0), &self.conditional_terms[label]);
        h.hermitian_part()
    }

    /// `H_c = E_c·I + H_s + λ·H̄_c`.
    pub fn conditional(&self, label: usize) -> ComplexMatrix {
        let mut h = self.quantum_part(label);
        for i in 0..h.dim() {
            h[(i, i)] += self.energies[label];
        }
        h
    }

    /// Same Hamiltonian with `E_c → E_c + shift[c]`.
    pub fn with_energy_shift(&self, shift: &[f64]) -> Self {
        let mut out = self.clone();
        for (e, s) in out.energies.iter_mut().zip(shift) {
            *e += s;
        }
        out
    }

    /// Full block-diagonal Hamiltonian, label-major ordering.
    pub fn embed(&self) -> ComplexMatrix {
        HybridState::from_blocks_unchecked((0..self.num_labels()).map(|c| self.conditional(c)).collect())
            .embed()
    }
}
