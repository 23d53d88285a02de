//! Qubit on a one-dimensional lattice of classical sites `n ∈ [−N, N]`.
//!
//! `H_n = (ω_n/2)σ_z` with `ω_n = ω_0 + δω|n|` and `E_n = E_0 + δE·n²`.
//! Site `n` is label `n + N`. `|+⟩ = (1, 0)`, `|−⟩ = (0, 1)`.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::fmath::{self, log_sum_exp};
use crate::generator::{HybridGenerator, Level, TransitionSpec};
use crate::linalg::ComplexMatrix;
use crate::models::BuiltModel;
use crate::state::HybridHamiltonian;
use crate::{Error, Result};

/// Largest tail weight `Σ_{|n|>N} w_n` tolerated by the truncation.
pub const TRUNCATION_TAIL: f64 = 1e-12;
const MAX_HALF_WIDTH: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeVariant {
    /// Same-level hops `|±, n⟩ ↔ |±, n±1⟩` through the projectors `Π^±`.
    Dephasing,
    /// Level-flipping hops `|+, n⟩ ↔ |−, n±1⟩` through `σ`, `σ†`.
    Flip,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeScenario {
    pub beta: f64,
    /// Requested half-width `N`; raised when the tail exceeds [`TRUNCATION_TAIL`].
    pub half_width: usize,
    pub omega0: f64,
    pub delta_omega: f64,
    pub e0: f64,
    pub delta_e: f64,
    pub delta_x: f64,
    /// Downhill rate of the on-site `|+⟩ → |−⟩` decay.
    pub kappa_th: f64,
    /// Downhill rate of hops on the `|+⟩` branch (or `|+⟩ → |−⟩` hops).
    pub kappa_plus: f64,
    /// Downhill rate of hops on the `|−⟩` branch (or `|−⟩ → |+⟩` hops).
    pub kappa_minus: f64,
    pub auto_truncate: bool,
}

impl LatticeScenario {
    /// Unit rates, `E_0 = 0`, `δx = 1`.
    pub fn new(beta: f64, half_width: usize, omega0: f64, delta_omega: f64, delta_e: f64) -> Self {
        Self {
            beta,
            half_width,
            omega0,
            delta_omega,
            e0: 0.0,
            delta_e,
            delta_x: 1.0,
            kappa_th: 1.0,
            kappa_plus: 1.0,
            kappa_minus: 1.0,
            auto_truncate: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.beta, self.omega0, self.delta_omega, self.e0, self.delta_e, self.delta_x];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("lattice parameters must be finite".into()));
        }
        if self.beta <= 0.0 || self.delta_x <= 0.0 || self.delta_e < 0.0 {
            return Err(Error::InvalidParameter("need beta > 0, delta_x > 0, delta_E >= 0".into()));
        }
        for k in [self.kappa_th, self.kappa_plus, self.kappa_minus] {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::InvalidParameter(format!("rate {k} must be finite and non-negative")));
            }
        }
        Ok(())
    }

    pub fn omega(&self, n: i64) -> f64 {
        self.omega0 + self.delta_omega * n.unsigned_abs() as f64
    }

    pub fn energy(&self, n: i64) -> f64 {
        self.e0 + self.delta_e * (n * n) as f64
    }

    /// `ln[e^{−βE_n}·cosh(βω_n/2)]`.
    fn ln_site_weight(&self, n: i64) -> f64 {
        let x = (self.beta * self.omega(n) / 2.0).abs();
        // ln cosh x = x + ln(1 + e^{−2x}) − ln 2
        -self.beta * self.energy(n) + x + fmath::ln(1.0 + fmath::exp(-2.0 * x)) - core::f64::consts::LN_2
    }

    /// Fraction of the untruncated weight living on `|n| > N`.
    pub fn tail_weight(&self, half_width: usize) -> Result<f64> {
        if self.delta_e <= 0.0 {
            return Err(Error::InvalidParameter("tail weight needs delta_E > 0".into()));
        }
        let ln_w = |n: i64| self.ln_site_weight(n);
        // The site weight is log-concave in |n| for δE > 0; sum until 80 e-folds past the peak.
        let mut inside = Vec::new();
        let mut outside = Vec::new();
        let mut peak = f64::NEG_INFINITY;
        let mut n: i64 = 0;
        loop {
            let l = ln_w(n);
            peak = peak.max(l);
            let mult = if n == 0 { 0.0 } else { core::f64::consts::LN_2 };
            if (n as usize) <= half_width {
                inside.push(l + mult);
            } else {
                outside.push(l + mult);
            }
            if l < peak - 80.0 && n as usize > half_width {
                break;
            }
            n += 1;
            if n as usize > 10 * MAX_HALF_WIDTH {
                return Err(Error::InvalidParameter("site weights do not decay".into()));
            }
        }
        let ln_in = log_sum_exp(&inside);
        let ln_out = log_sum_exp(&outside);
        let ln_total = log_sum_exp(&[ln_in, ln_out]);
        Ok(fmath::exp(ln_out - ln_total))
    }

    /// Smallest `N ≥ half_width` satisfying the tail bound (or `half_width` itself without auto truncation).
    pub fn resolved_half_width(&self) -> Result<usize> {
        if !self.auto_truncate {
            return Ok(self.half_width);
        }
        let mut n = self.half_width;
        while self.tail_weight(n)? >= TRUNCATION_TAIL {
            n += 1;
            if n > MAX_HALF_WIDTH {
                return Err(Error::InvalidParameter("lattice truncation exceeds the maximal half-width".into()));
            }
        }
        Ok(n)
    }

    pub fn hamiltonian(&self, half_width: usize) -> Result<HybridHamiltonian> {
        let sites: Vec<i64> = (-(half_width as i64)..=half_width as i64).collect();
        let bars = sites
            .iter()
            .map(|&n| ComplexMatrix::pauli_z().scale_real(self.delta_omega * n.unsigned_abs() as f64 / 2.0))
            .collect();
        HybridHamiltonian::new(
            sites.iter().map(|&n| self.energy(n)).collect(),
            ComplexMatrix::pauli_z().scale_real(self.omega0 / 2.0),
            1.0,
            bars,
        )
    }

    pub fn build(&self, variant: LatticeVariant) -> Result<BuiltModel> {
        self.validate()?;
        let n_max = self.resolved_half_width()?;
        let mut notes = Vec::new();
        if n_max != self.half_width {
            notes.push(format!("half-width raised from {} to {n_max} to bound the truncated weight", self.half_width));
        }
        let h = self.hamiltonian(n_max)?;
        let labels = 2 * n_max + 1;

        // Resolve |±⟩ by overlap: at ω_n = 0 both eigenvalues coincide.
        let up = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let mut plus = Vec::with_capacity(labels);
        let mut minus = Vec::with_capacity(labels);
        for c in 0..labels {
            let eig = crate::linalg::eigh(&h.conditional(c))?;
            let overlap = |k: usize| eig.eigenvector(k).iter().zip(&up).map(|(a, b)| (a.conj() * b).norm()).sum::<f64>();
            let p = if overlap(1) >= overlap(0) { 1 } else { 0 };
            plus.push(Level::new(c, p));
            minus.push(Level::new(c, 1 - p));
        }

        let mut specs = Vec::new();
        for c in 0..labels {
            specs.push(TransitionSpec::non_diagonal(plus[c], minus[c], self.kappa_th));
        }
        for c in 0..labels - 1 {
            match variant {
                LatticeVariant::Dephasing => {
                    specs.push(TransitionSpec::non_diagonal(plus[c], plus[c + 1], self.kappa_plus));
                    specs.push(TransitionSpec::non_diagonal(minus[c], minus[c + 1], self.kappa_minus));
                }
                LatticeVariant::Flip => {
                    specs.push(TransitionSpec::non_diagonal(plus[c], minus[c + 1], self.kappa_plus));
                    specs.push(TransitionSpec::non_diagonal(minus[c], plus[c + 1], self.kappa_minus));
                }
            }
        }
        let generator = HybridGenerator::build(h, &specs, self.beta)?;
        Ok(BuiltModel { generator, plus, minus, notes })
    }

    /// Site coordinate of a label for a lattice of half-width `n_max`.
    pub fn site(label: usize, n_max: usize) -> i64 {
        label as i64 - n_max as i64
    }

    pub fn label(site: i64, n_max: usize) -> usize {
        (site + n_max as i64) as usize
    }
}
