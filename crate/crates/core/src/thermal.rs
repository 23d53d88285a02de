//! Canonical thermal states of hybrid Hamiltonians.
//!
//! `Ξ_th = Σ_c w_c · e^{−βH_c}/Tr[e^{−βH_c}] ⊗ |c⟩⟨c|` with
//! `w_c = Tr[e^{−βH_c}] / Σ_c' Tr[e^{−βH_c'}] = e^{−β(E_c + A_c)}/Z_th`.
//! All partition sums are evaluated in log space.

use alloc::vec::Vec;

use crate::fmath::{self, log_sum_exp};
use crate::linalg::{eigh, herm_exp, ComplexMatrix};
use crate::state::{HybridHamiltonian, HybridState};
use crate::{Error, Result};

/// Weights, partition functions and free energies of a hybrid thermal state.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalDecomposition {
    pub beta: f64,
    pub weights: Vec<f64>,
    /// `e^{−βH_c}/Tr[e^{−βH_c}]`, independent of `E_c`.
    pub conditional_thermals: Vec<ComplexMatrix>,
    /// `ln Σ_c e^{−βE_c}`.
    pub ln_z: f64,
    /// `ln Σ_c e^{−β(E_c + A_c)}`.
    pub ln_z_th: f64,
    /// Helmholtz free energies `A_c` of `H_s + λH̄_c`.
    pub free_energies: Vec<f64>,
}

impl ThermalDecomposition {
    pub fn z(&self) -> f64 {
        fmath::exp(self.ln_z)
    }

    pub fn z_th(&self) -> f64 {
        fmath::exp(self.ln_z_th)
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("beta must be finite and positive, got {beta}")));
    }
    Ok(())
}

/// Hybrid thermal state and its decomposition.
pub fn hybrid_thermal(h: &HybridHamiltonian, beta: f64) -> Result<(HybridState, ThermalDecomposition)> {
    check_beta(beta)?;
    let n = h.num_labels();
    let mut ln_traces = Vec::with_capacity(n);
    let mut conditional_thermals = Vec::with_capacity(n);
    for c in 0..n {
        let eig = eigh(&h.conditional(c))?;
        let exps: Vec<f64> = eig.eigenvalues.iter().map(|&e| -beta * e).collect();
        let ln_tr = log_sum_exp(&exps);
        conditional_thermals.push(eig.map(|e| fmath::exp(-beta * e - ln_tr)));
        ln_traces.push(ln_tr);
    }
    let ln_total = log_sum_exp(&ln_traces);
    let weights: Vec<f64> = ln_traces.iter().map(|l| fmath::exp(l - ln_total)).collect();

    let free_energies = (0..n)
        .map(|c| helmholtz(&h.quantum_part(c), beta))
        .collect::<Result<Vec<_>>>()?;
    let classical: Vec<f64> = h.energies().iter().map(|e| -beta * e).collect();
    let shifted: Vec<f64> =
        h.energies().iter().zip(&free_energies).map(|(e, a)| -beta * (e + a)).collect();

    let state = HybridState::from_blocks_unchecked(
        conditional_thermals.iter().zip(&weights).map(|(t, &w)| t.scale_real(w)).collect(),
    );
    let decomposition = ThermalDecomposition {
        beta,
        weights,
        conditional_thermals,
        ln_z: log_sum_exp(&classical),
        ln_z_th: log_sum_exp(&shifted),
        free_energies,
    };
    Ok((state, decomposition))
}

/// `Σ_c e^{−βH_c} ⊗ |c⟩⟨c| / Σ_c Tr[e^{−βH_c}]` evaluated literally with
/// matrix exponentials (no log-space stabilization).
pub fn hybrid_thermal_direct(h: &HybridHamiltonian, beta: f64) -> Result<HybridState> {
    check_beta(beta)?;
    let exps = (0..h.num_labels())
        .map(|c| herm_exp(&h.conditional(c), -beta))
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = exps.iter().map(|e| e.trace().re).sum();
    Ok(HybridState::from_blocks_unchecked(exps.iter().map(|e| e.scale_real(1.0 / total)).collect()))
}

/// `A = −(1/β)·ln Tr[e^{−βH_q}]`.
pub fn helmholtz(h_q: &ComplexMatrix, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let eig = eigh(h_q)?;
    let exps: Vec<f64> = eig.eigenvalues.iter().map(|&e| -beta * e).collect();
    Ok(-log_sum_exp(&exps) / beta)
}

/// `w_c = e^{−β(E_c + A_c)}/Z_th`.
pub fn weights_via_free_energy(h: &HybridHamiltonian, beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let exps = (0..h.num_labels())
        .map(|c| Ok(-beta * (h.energies()[c] + helmholtz(&h.quantum_part(c), beta)?)))
        .collect::<Result<Vec<_>>>()?;
    let ln_z_th = log_sum_exp(&exps);
    Ok(exps.iter().map(|x| fmath::exp(x - ln_z_th)).collect())
}
