//! Random matrices and states for property checks.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::linalg::ComplexMatrix;
use crate::state::HybridState;

/// Hermitian matrix with entries uniform in `[-scale, scale]` (real and imaginary parts).
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> ComplexMatrix {
    let g = random_complex(rng, dim, scale);
    g.hermitian_part()
}

/// Matrix with independent uniform complex entries in `[-scale, scale]²`.
pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| {
        Complex64::new(rng.gen_range(-scale..=scale), rng.gen_range(-scale..=scale))
    })
}

/// Positive semidefinite `G·G†` with unit trace.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = random_complex(rng, dim, 1.0);
    let rho = g.matmul(&g.adjoint()).hermitian_part();
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr)
}

/// Normalized hybrid state with random classical weights and random conditionals.
pub fn random_hybrid_state<R: Rng + ?Sized>(rng: &mut R, dim: usize, labels: usize) -> HybridState {
    let weights: Vec<f64> = (0..labels).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let blocks = weights
        .iter()
        .map(|w| random_density(rng, dim).scale_real(w / total))
        .collect();
    HybridState::from_blocks_unchecked(blocks)
}

/// Hybrid state with Hermitian but not necessarily positive blocks.
pub fn random_hermitian_blocks<R: Rng + ?Sized>(rng: &mut R, dim: usize, labels: usize) -> HybridState {
    HybridState::from_blocks_unchecked((0..labels).map(|_| random_hermitian(rng, dim, 1.0)).collect())
}
