//! Detailed-balance hybrid Lindblad generators.
//!
//! Every enabled transition couples two eigenvectors `|v⟩` (label `c`) and
//! `|w⟩` (label `c̃`, possibly `c̃ = c`) of the conditional Hamiltonians
//! `H_c = E_c·I + H_s + λH̄_c` through the rank-one jump operators `|w⟩⟨v|`
//! and `|v⟩⟨w|`. The downhill rate is the supplied base rate `κ`, the uphill
//! rate is `κ·e^{−βΔ}` with `Δ` the eigenvalue gap.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::fmath;
use crate::linalg::{eigh, ComplexMatrix, HermitianEigensystem};
use crate::markov::RateGraph;
use crate::state::{HybridHamiltonian, HybridState};
use crate::thermal::check_beta;
use crate::{Error, Result};

/// Largest `dim_s·L` accepted by [`BipartiteLindblad`].
pub const SUPEROPERATOR_CAP: usize = 256;
/// Largest `dim_s·L` for which the dense `(dim_s·L)²`-square matrix is materialized.
pub const DENSE_SUPEROPERATOR_CAP: usize = 32;
/// Relative residual accepted for stationary states.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// An eigenlevel: eigenvector `index` of `H_label` (ascending eigenvalue order).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Level {
    pub label: usize,
    pub index: usize,
}

impl Level {
    pub const fn new(label: usize, index: usize) -> Self {
        Self { label, index }
    }
}

/// One enabled unordered transition and its downhill rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionSpec {
    pub a: Level,
    pub b: Level,
    pub base_rate: f64,
}

impl TransitionSpec {
    /// Transition between eigenvectors `i` and `j` of the same label.
    pub fn diagonal(label: usize, i: usize, j: usize, base_rate: f64) -> Self {
        Self { a: Level::new(label, i), b: Level::new(label, j), base_rate }
    }

    /// Transition between eigenvector `a.index` of `H_{a.label}` and `b.index` of `H_{b.label}`.
    pub fn non_diagonal(a: Level, b: Level, base_rate: f64) -> Self {
        Self { a, b, base_rate }
    }

    pub fn is_diagonal(&self) -> bool {
        self.a.label == self.b.label
    }
}

/// Rates of one transition, oriented by energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatePair {
    pub high: Level,
    pub low: Level,
    /// `ε_high − ε_low ≥ 0`.
    pub gap: f64,
    /// Rate of `high → low`.
    pub down: f64,
    /// Rate of `low → high`.
    pub up: f64,
}

impl RatePair {
    /// `|γ_down·e^{−βε_high} − γ_up·e^{−βε_low}|` relative to the larger term,
    /// evaluated with the energy origin at `ε_low`.
    pub fn balance_residual(&self, beta: f64) -> f64 {
        let lhs = self.down * fmath::exp(-beta * self.gap);
        let rhs = self.up;
        let scale = lhs.abs().max(rhs.abs());
        if scale == 0.0 {
            0.0
        } else {
            (lhs - rhs).abs() / scale
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateTable {
    pub beta: f64,
    pub pairs: Vec<RatePair>,
}

impl RateTable {
    pub fn max_balance_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.balance_residual(self.beta)).fold(0.0, f64::max)
    }
}

/// A built hybrid generator; immutable after construction.
#[derive(Clone, Debug)]
pub struct HybridGenerator {
    hamiltonian: HybridHamiltonian,
    beta: f64,
    conditionals: Vec<ComplexMatrix>,
    eigensystems: Vec<HermitianEigensystem>,
    /// Cached eigenvectors: `vectors[c][k]`.
    vectors: Vec<Vec<Vec<Complex64>>>,
    specs: Vec<TransitionSpec>,
    rates: RateTable,
}

impl HybridGenerator {
    pub fn build(hamiltonian: HybridHamiltonian, specs: &[TransitionSpec], beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let labels = hamiltonian.num_labels();
        let dim = hamiltonian.dim();
        let conditionals: Vec<ComplexMatrix> = (0..labels).map(|c| hamiltonian.conditional(c)).collect();
        let eigensystems = conditionals.iter().map(eigh).collect::<Result<Vec<_>>>()?;
        let vectors = eigensystems
            .iter()
            .map(|e| (0..dim).map(|k| e.eigenvector(k)).collect())
            .collect();

        let mut pairs = Vec::with_capacity(specs.len());
        for s in specs {
            for l in [s.a, s.b] {
                if l.label >= labels || l.index >= dim {
                    return Err(Error::InvalidTransition(format!(
                        "level (label {}, index {}) outside {labels} labels of dimension {dim}",
                        l.label, l.index
                    )));
                }
            }
            if s.a == s.b {
                return Err(Error::InvalidTransition(format!(
                    "transition joins level (label {}, index {}) to itself",
                    s.a.label, s.a.index
                )));
            }
            if !(s.base_rate >= 0.0 && s.base_rate.is_finite()) {
                return Err(Error::InvalidTransition(format!("base rate {} is not a finite non-negative number", s.base_rate)));
            }
            let ea = eigensystems[s.a.label].eigenvalues[s.a.index];
            let eb = eigensystems[s.b.label].eigenvalues[s.b.index];
            let (high, low, gap) = if ea >= eb { (s.a, s.b, ea - eb) } else { (s.b, s.a, eb - ea) };
            pairs.push(RatePair {
                high,
                low,
                gap,
                down: s.base_rate,
                up: s.base_rate * fmath::exp(-beta * gap),
            });
        }

        Ok(Self {
            hamiltonian,
            beta,
            conditionals,
            eigensystems,
            vectors,
            specs: specs.to_vec(),
            rates: RateTable { beta, pairs },
        })
    }

    /// Copy with every uphill rate multiplied by `factor`. Breaks detailed
    /// balance unless `factor == 1`; used to check that verification notices.
    pub fn with_scaled_uphill(&self, factor: f64) -> Self {
        let mut g = self.clone();
        for p in &mut g.rates.pairs {
            p.up *= factor;
        }
        g
    }

    pub fn hamiltonian(&self) -> &HybridHamiltonian {
        &self.hamiltonian
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn num_labels(&self) -> usize {
        self.hamiltonian.num_labels()
    }

    pub fn conditional(&self, label: usize) -> &ComplexMatrix {
        &self.conditionals[label]
    }

    pub fn eigensystem(&self, label: usize) -> &HermitianEigensystem {
        &self.eigensystems[label]
    }

    pub fn eigenvector(&self, level: Level) -> &[Complex64] {
        &self.vectors[level.label][level.index]
    }

    pub fn energy(&self, level: Level) -> f64 {
        self.eigensystems[level.label].eigenvalues[level.index]
    }

    pub fn specs(&self) -> &[TransitionSpec] {
        &self.specs
    }

    pub fn rates(&self) -> &RateTable {
        &self.rates
    }

    /// Largest single rate, at least the largest Bohr frequency if no rate is positive.
    pub fn max_rate(&self) -> f64 {
        let r = self.rates.pairs.iter().map(|p| p.down.max(p.up)).fold(0.0, f64::max);
        if r > 0.0 {
            r
        } else {
            self.eigensystems
                .iter()
                .map(|e| e.eigenvalues.last().unwrap_or(&0.0) - e.eigenvalues.first().unwrap_or(&0.0))
                .fold(1.0, f64::max)
        }
    }

    /// Smallest positive rate (or [`Self::max_rate`] if none).
    pub fn min_rate(&self) -> f64 {
        let r = self
            .rates
            .pairs
            .iter()
            .flat_map(|p| [p.down, p.up])
            .filter(|&r| r > 0.0)
            .fold(f64::INFINITY, f64::min);
        if r.is_finite() {
            r
        } else {
            self.max_rate()
        }
    }

    /// Total rate out of every level.
    pub fn escape_rates(&self) -> Vec<Vec<f64>> {
        let mut out = alloc::vec![alloc::vec![0.0; self.dim()]; self.num_labels()];
        for p in &self.rates.pairs {
            out[p.high.label][p.high.index] += p.down;
            out[p.low.label][p.low.index] += p.up;
        }
        out
    }

    pub fn check_state(&self, state: &HybridState) -> Result<()> {
        state.check_shape(self.dim(), self.num_labels())
    }

    /// `dΞ/dt`.
    pub fn apply(&self, state: &HybridState) -> Result<HybridState> {
        self.check_state(state)?;
        let mut out = HybridState::zeros(self.dim(), self.num_labels());
        self.derivative_into(state, &mut out);
        Ok(out)
    }

    /// Shape-unchecked derivative written into `out`.
    pub(crate) fn derivative_into(&self, state: &HybridState, out: &mut HybridState) {
        let n = self.dim();
        for c in 0..self.num_labels() {
            let rho = state.block(c);
            let h = &self.conditionals[c];
            let comm = h.commutator(rho);
            let dst = out.block_mut(c);
            for (d, z) in dst.as_mut_slice().iter_mut().zip(comm.as_slice()) {
                *d = -I * z;
            }
        }
        for p in &self.rates.pairs {
            self.jump(state, out, p.high, p.low, p.down, n);
            self.jump(state, out, p.low, p.high, p.up, n);
        }
    }

    /// Adds `rate·(AρA† − ½{A†A, ρ})` for `A = |w_to⟩⟨v_from|`.
    fn jump(&self, state: &HybridState, out: &mut HybridState, from: Level, to: Level, rate: f64, n: usize) {
        if rate == 0.0 {
            return;
        }
        let v = self.eigenvector(from);
        let w = self.eigenvector(to);
        let rho = state.block(from.label);
        let rho_v = rho.mul_vec(v);
        let v_rho = rho.vec_mul(v);
        let pop: Complex64 = v.iter().zip(&rho_v).map(|(a, b)| a.conj() * b).sum();
        {
            let loss = out.block_mut(from.label);
            for i in 0..n {
                for j in 0..n {
                    // {|v⟩⟨v|, ρ}_ij = v_i (v†ρ)_j + (ρv)_i v̄_j
                    loss[(i, j)] -= (v[i] * v_rho[j] + rho_v[i] * v[j].conj()) * (0.5 * rate);
                }
            }
        }
        let gain = out.block_mut(to.label);
        let g = pop * rate;
        for i in 0..n {
            for j in 0..n {
                gain[(i, j)] += g * w[i] * w[j].conj();
            }
        }
    }

    /// Same derivative, with every cross-label jump written as a
    /// conditional jump `A_ij Ũ†ρŨ A_ij†` preceded by the basis map `Ũ`.
    pub fn collisional_apply(&self, state: &HybridState) -> Result<HybridState> {
        self.check_state(state)?;
        let labels = self.num_labels();
        let mut out = HybridState::zeros(self.dim(), labels);
        for c in 0..labels {
            let comm = self.conditionals[c].commutator(state.block(c));
            out.block_mut(c).add_scaled(-I, &comm);
        }
        for p in &self.rates.pairs {
            for (from, to, rate) in [(p.high, p.low, p.down), (p.low, p.high, p.up)] {
                // Work in the eigenbasis of the destination label `c = to.label`.
                let eig_c = &self.eigensystems[to.label];
                let eig_src = &self.eigensystems[from.label];
                let u = basis_change_unitary(eig_c, eig_src)?;
                let a = ComplexMatrix::outer(&eig_c.eigenvector(to.index), &eig_c.eigenvector(from.index));
                let rho = state.block(from.label);
                let u_dag = u.adjoint();
                let rotated = u_dag.matmul(rho).matmul(&u);
                let gain = a.matmul(&rotated).matmul(&a.adjoint());
                out.block_mut(to.label).add_scaled(Complex64::new(rate, 0.0), &gain);
                // A_{ij̃}†A_{ij̃} = Ũ A_ij†A_ij Ũ†.
                let ata = u.matmul(&a.adjoint().matmul(&a)).matmul(&u_dag);
                let loss = ata.anticommutator(rho);
                out.block_mut(from.label).add_scaled(Complex64::new(-0.5 * rate, 0.0), &loss);
            }
        }
        Ok(out)
    }

    /// Stationary state from the population/coherence decomposition in the
    /// conditional eigenbases.
    ///
    /// Populations follow a classical Markov chain over all levels. A
    /// coherence between levels `i ≠ j` of one label evolves as
    /// `e^{[−i(ε_i−ε_j) − (Γ_i+Γ_j)/2]t}` with `Γ` the escape rates, so it is
    /// stationary only for degenerate levels without any escape.
    pub fn stationary_state(&self) -> Result<HybridState> {
        let (n, labels) = (self.dim(), self.num_labels());
        let idx = |l: Level| l.label * n + l.index;
        let mut graph = RateGraph::new(n * labels);
        for p in &self.rates.pairs {
            graph.add(idx(p.high), idx(p.low), p.down)?;
            graph.add(idx(p.low), idx(p.high), p.up)?;
        }
        let escape = self.escape_rates();
        let mut free_coherences = 0;
        for c in 0..labels {
            let ev = &self.eigensystems[c].eigenvalues;
            let tol = crate::linalg::DEGENERACY_TOL * ev.iter().map(|x| x.abs()).fold(1.0, f64::max);
            for i in 0..n {
                for j in (i + 1)..n {
                    if (ev[i] - ev[j]).abs() <= tol && escape[c][i] + escape[c][j] == 0.0 {
                        free_coherences += 1;
                    }
                }
            }
        }
        let classes = graph.closed_classes();
        let dimension = classes.len() + 2 * free_coherences;
        if dimension != 1 {
            return Err(Error::DegenerateStationary { dimension });
        }
        let p = graph.stationary()?;
        let blocks = (0..labels)
            .map(|c| {
                let weights: Vec<f64> = (0..n).map(|k| p[c * n + k]).collect();
                let e = &self.eigensystems[c];
                let v = &e.eigenvectors;
                ComplexMatrix::from_fn(n, |i, j| (0..n).map(|k| v[(i, k)] * v[(j, k)].conj() * weights[k]).sum())
            })
            .collect();
        let state = HybridState::from_blocks_unchecked(blocks);
        let residual = self.apply(&state)?.max_block_norm();
        if residual > STATIONARY_RESIDUAL_TOL * self.max_rate().max(1.0) {
            return Err(Error::StationaryResidual { residual });
        }
        Ok(state)
    }
}

/// `Ũ = V_B·V_A†`, mapping the `k`-th eigenvector of `A` to the `k`-th of `B`.
pub fn basis_change_unitary(eig_a: &HermitianEigensystem, eig_b: &HermitianEigensystem) -> Result<ComplexMatrix> {
    if eig_a.dim() != eig_b.dim() {
        return Err(Error::DimensionMismatch { expected: eig_a.dim(), found: eig_b.dim() });
    }
    Ok(eig_b.eigenvectors.matmul(&eig_a.eigenvectors.adjoint()))
}

/// The generator lifted to the full `dim_s·L` space.
///
/// `H = ⊕_c H_c` and one explicit jump operator `|w⟩⟨v| ⊗ |c̃⟩⟨c|` per
/// directed transition, combined in the standard Lindblad form on full
/// (not necessarily block-diagonal) matrices.
#[derive(Clone, Debug)]
pub struct BipartiteLindblad {
    dim: usize,
    hamiltonian: ComplexMatrix,
    jumps: Vec<(f64, ComplexMatrix)>,
}

impl BipartiteLindblad {
    pub fn new(g: &HybridGenerator) -> Result<Self> {
        Self::with_cap(g, SUPEROPERATOR_CAP)
    }

    pub fn with_cap(g: &HybridGenerator, cap: usize) -> Result<Self> {
        let (n, labels) = (g.dim(), g.num_labels());
        let dim = n * labels;
        if dim > cap {
            return Err(Error::SuperoperatorCap { dim, cap });
        }
        let embed = |l: Level| {
            let mut v = alloc::vec![Complex64::new(0.0, 0.0); dim];
            v[l.label * n..(l.label + 1) * n].copy_from_slice(g.eigenvector(l));
            v
        };
        let mut jumps = Vec::new();
        for p in &g.rates().pairs {
            let (hi, lo) = (embed(p.high), embed(p.low));
            jumps.push((p.down, ComplexMatrix::outer(&lo, &hi)));
            jumps.push((p.up, ComplexMatrix::outer(&hi, &lo)));
        }
        let mut hamiltonian = ComplexMatrix::zeros(dim);
        for c in 0..labels {
            let hc = g.conditional(c);
            for i in 0..n {
                for j in 0..n {
                    hamiltonian[(c * n + i, c * n + j)] = hc[(i, j)];
                }
            }
        }
        Ok(Self { dim, hamiltonian, jumps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `−i[H, X] + Σ γ (V X V† − ½{V†V, X})`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.dim() });
        }
        let mut out = self.hamiltonian.commutator(x).scale(-I);
        for (rate, v) in &self.jumps {
            if *rate == 0.0 {
                continue;
            }
            let vd = v.adjoint();
            let gain = v.matmul(x).matmul(&vd);
            let loss = vd.matmul(v).anticommutator(x);
            out.add_scaled(Complex64::new(*rate, 0.0), &gain);
            out.add_scaled(Complex64::new(-0.5 * rate, 0.0), &loss);
        }
        Ok(out)
    }

    /// Applies the map to an embedded hybrid state and reads the blocks back,
    /// together with the largest off-diagonal classical block norm produced.
    pub fn apply_hybrid(&self, state: &HybridState) -> Result<(HybridState, f64)> {
        let full = self.apply(&state.embed())?;
        HybridState::from_embedded(&full, state.dim())
    }

    /// Dense matrix of the map acting on row-major vectorized `X`.
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.dim > DENSE_SUPEROPERATOR_CAP {
            return Err(Error::SuperoperatorCap { dim: self.dim, cap: DENSE_SUPEROPERATOR_CAP });
        }
        let d = self.dim;
        let mut s = ComplexMatrix::zeros(d * d);
        for col in 0..d * d {
            let mut e = ComplexMatrix::zeros(d);
            e.as_mut_slice()[col] = Complex64::new(1.0, 0.0);
            let image = self.apply(&e)?;
            for (row, z) in image.as_slice().iter().enumerate() {
                s[(row, col)] = *z;
            }
        }
        Ok(s)
    }
}
