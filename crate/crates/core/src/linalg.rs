//! Dense complex linear algebra for small Hermitian problems.
//!
//! Matrices are square and stored row-major. The eigensolver is a cyclic
//! complex Jacobi method, which is accurate to a few ulps for the dimensions
//! used here (qubits, small embeddings, superoperators of a few hundred rows).

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::fmath;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative tolerance used to accept a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Relative gap under which eigenvalues are treated as one degenerate cluster.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Largest `|s·λ|` accepted by [`herm_exp`].
pub const EXP_RANGE: f64 = 700.0;

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major entries; `data.len()` must be a square.
    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        debug_assert_eq!(u.len(), v.len());
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn pauli_x() -> Self {
        Self::from_fn(2, |i, j| if i != j { ONE } else { ZERO })
    }

    pub fn pauli_y() -> Self {
        let mut m = Self::zeros(2);
        m[(0, 1)] = Complex64::new(0.0, -1.0);
        m[(1, 0)] = Complex64::new(0.0, 1.0);
        m
    }

    /// `σ_z = diag(1, -1)`: index 0 is `|+⟩`, index 1 is `|−⟩`.
    pub fn pauli_z() -> Self {
        Self::from_real_diagonal(&[1.0, -1.0])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn column(&self, k: usize) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, k)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        fmath::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest `|M_ij − conj(M_ji)|` together with its position.
    pub fn hermitian_asymmetry(&self) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        for i in 0..self.dim {
            for j in i..self.dim {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                if d > worst.0 {
                    worst = (d, i, j);
                }
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.check_hermitian().is_ok()
    }

    /// Rejects matrices whose asymmetry exceeds `1e-12·max|M_ij|`.
    pub fn check_hermitian(&self) -> Result<()> {
        self.check_finite()?;
        let (asymmetry, row, col) = self.hermitian_asymmetry();
        if asymmetry > HERMITIAN_TOL * self.max_abs() {
            return Err(Error::NotHermitian { asymmetry, row, col });
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            Some(k) => Err(Error::NonFinite { row: k / self.dim, col: k % self.dim }),
            None => Ok(()),
        }
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// `self += a·x`.
    pub fn add_scaled(&mut self, a: Complex64, x: &Self) {
        debug_assert_eq!(self.dim, x.dim);
        for (y, &xv) in self.data.iter_mut().zip(&x.data) {
            *y += a * xv;
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        (0..n).map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum()).collect()
    }

    /// `v† M`, returned as a row vector.
    pub fn vec_mul(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        (0..n).map(|j| (0..n).map(|i| v[i].conj() * self.data[i * n + j]).sum()).collect()
    }

    /// `⟨u|M|v⟩`.
    pub fn sandwich(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        let mv = self.mul_vec(v);
        u.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum()
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    /// `{A, B} = AB + BA`.
    pub fn anticommutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) + &rhs.matmul(self)
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.dim, rhs.dim);
        Self::from_fn(n * m, |i, j| self[(i / m, j / m)] * rhs[(i % m, j % m)])
    }

    /// Largest entrywise `|A_ij − B_ij|`.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        self.data.iter().zip(&rhs.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        debug_assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        debug_assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

/// Spectral decomposition `H = V·diag(λ)·V†`.
///
/// Eigenvalues are ascending. Each eigenvector has its largest-magnitude
/// component real and positive (ties broken by lowest index); within a
/// degenerate cluster vectors are ordered by the index of that component.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianEigensystem {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigensystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k)
    }

    /// `V·diag(f(λ))·V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n).map(|k| v[(i, k)] * v[(j, k)].conj() * fl[k]).sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|l| l)
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn eigh(h: &ComplexMatrix) -> Result<HermitianEigensystem> {
    h.check_hermitian()?;
    let n = h.dim();
    let mut a = h.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();

    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum();
        if off == 0.0 || fmath::sqrt(off) <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let raw: Vec<f64> = (0..n).map(|k| a[(k, k)].re).collect();
    order.sort_by(|&x, &y| raw[x].total_cmp(&raw[y]));

    let mut eigenvalues: Vec<f64> = order.iter().map(|&k| raw[k]).collect();
    let mut vectors: Vec<Vec<Complex64>> = order.iter().map(|&k| v.column(k)).collect();
    for vec in vectors.iter_mut() {
        fix_phase(vec);
    }

    // Order degenerate clusters by the position of the dominant component.
    let spread = eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let tol = DEGENERACY_TOL * spread.max(f64::MIN_POSITIVE);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eigenvalues[end] - eigenvalues[end - 1] <= tol {
            end += 1;
        }
        if end - start > 1 {
            let mut cluster: Vec<(usize, f64, Vec<Complex64>)> = (start..end)
                .map(|k| (dominant_index(&vectors[k]), eigenvalues[k], vectors[k].clone()))
                .collect();
            cluster.sort_by_key(|c| c.0);
            for (offset, (_, l, vec)) in cluster.into_iter().enumerate() {
                eigenvalues[start + offset] = l;
                vectors[start + offset] = vec;
            }
        }
        start = end;
    }

    let eigenvectors = ComplexMatrix::from_fn(n, |i, k| vectors[k][i]);
    Ok(HermitianEigensystem { eigenvalues, eigenvectors })
}

/// One Jacobi rotation annihilating `a[p,q]`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let n = a.dim();
    let phase = apq / mag; // e^{iφ}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + fmath::sqrt(1.0 + tau * tau))
    } else {
        -1.0 / (-tau + fmath::sqrt(1.0 + tau * tau))
    };
    let c = 1.0 / fmath::sqrt(1.0 + t * t);
    let s = t * c;
    let e_minus = phase.conj();

    // A ← A·U, V ← V·U with U = [[c, s], [−s·e^{−iφ}, c·e^{−iφ}]] on (p, q).
    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp * c - akq * e_minus * s;
        a[(k, q)] = akp * s + akq * e_minus * c;
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * c - vkq * e_minus * s;
        v[(k, q)] = vkp * s + vkq * e_minus * c;
    }
    // A ← U†·A.
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = apk * c - aqk * phase * s;
        a[(q, k)] = apk * s + aqk * phase * c;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
}

fn dominant_index(v: &[Complex64]) -> usize {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    v.iter().position(|z| z.norm() >= max * (1.0 - 1e-10)).unwrap_or(0)
}

fn fix_phase(v: &mut [Complex64]) {
    let k = dominant_index(v);
    let mag = v[k].norm();
    if mag == 0.0 {
        return;
    }
    let rot = v[k].conj() / mag;
    for z in v.iter_mut() {
        *z *= rot;
    }
    v[k] = Complex64::new(v[k].re, 0.0);
}

/// `e^{s·H}` through the spectral decomposition.
pub fn herm_exp(h: &ComplexMatrix, s: f64) -> Result<ComplexMatrix> {
    let eig = eigh(h)?;
    let exponent = eig.eigenvalues.iter().map(|&l| (s * l).abs()).fold(0.0, f64::max);
    if !(exponent <= EXP_RANGE) {
        return Err(Error::ExpRange { exponent });
    }
    Ok(eig.map(|l| fmath::exp(s * l)))
}

/// `½·Σ|λ_k(A − B)|`.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    a.check_hermitian()?;
    b.check_hermitian()?;
    let diff = (a - b).hermitian_part();
    Ok(0.5 * eigh(&diff)?.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_hermitian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn taylor_exp(h: &ComplexMatrix, s: f64, terms: usize) -> ComplexMatrix {
        let n = h.dim();
        let hs = h.scale_real(s);
        let mut term = ComplexMatrix::identity(n);
        let mut sum = term.clone();
        for k in 1..terms {
            term = term.matmul(&hs).scale_real(1.0 / k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn sigma_z_is_diagonal() {
        let eig = eigh(&ComplexMatrix::pauli_z()).unwrap();
        assert_eq!(eig.eigenvalues, vec![-1.0, 1.0]);
        assert_eq!(eig.eigenvector(0), vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(eig.eigenvector(1), vec![c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn sigma_x_eigenvectors_follow_phase_convention() {
        let eig = eigh(&ComplexMatrix::pauli_x()).unwrap();
        let r = 1.0 / 2f64.sqrt();
        approx::assert_abs_diff_eq!(eig.eigenvalues[0], -1.0, epsilon = 1e-15);
        approx::assert_abs_diff_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-15);
        let minus = eig.eigenvector(0);
        let plus = eig.eigenvector(1);
        assert!((minus[0] - c(r, 0.0)).norm() < 1e-15 && (minus[1] - c(-r, 0.0)).norm() < 1e-15);
        assert!((plus[0] - c(r, 0.0)).norm() < 1e-15 && (plus[1] - c(r, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn random_reconstruction_and_unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 3, 6, 9] {
            let h = random_hermitian(&mut rng, n, 1.0);
            let eig = eigh(&h).unwrap();
            let residual = (&h - &eig.reconstruct()).frobenius_norm();
            assert!(residual <= 1e-11 * (1.0 + h.frobenius_norm()), "n={n}: {residual}");
            let v = &eig.eigenvectors;
            let gram = &v.adjoint().matmul(v) - &ComplexMatrix::identity(n);
            assert!(gram.frobenius_norm() <= 1e-12 * n as f64);
            assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigh_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(&mut rng, 5, 2.0);
        assert_eq!(eigh(&h).unwrap(), eigh(&h).unwrap());
    }

    #[test]
    fn degenerate_cluster_is_ordered_by_dominant_component() {
        let h = ComplexMatrix::from_real_diagonal(&[2.0, 2.0, -1.0]);
        let eig = eigh(&h).unwrap();
        assert_eq!(eig.eigenvalues, vec![-1.0, 2.0, 2.0]);
        assert_eq!(eig.eigenvector(1)[0], c(1.0, 0.0));
        assert_eq!(eig.eigenvector(2)[1], c(1.0, 0.0));
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::pauli_x();
        m[(0, 1)] = c(1.0, 0.5);
        match eigh(&m) {
            Err(Error::NotHermitian { row: 0, col: 1, asymmetry }) => {
                assert!((asymmetry - 0.5).abs() < 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exp_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_hermitian(&mut rng, 4, 1.0);
        assert!(herm_exp(&h, 0.0).unwrap().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-14);

        let beta = 0.8;
        let e = herm_exp(&ComplexMatrix::pauli_z(), -beta).unwrap();
        assert!((e[(0, 0)].re - (-beta).exp()).abs() < 1e-15);
        assert!((e[(1, 1)].re - beta.exp()).abs() < 1e-15);

        let oracle = taylor_exp(&h, -0.7, 30);
        assert!(herm_exp(&h, -0.7).unwrap().max_abs_diff(&oracle) < 1e-12);

        let prod = herm_exp(&h, 1.3).unwrap().matmul(&herm_exp(&h, -1.3).unwrap());
        assert!(prod.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-11);
    }

    #[test]
    fn exp_range_is_checked() {
        let h = ComplexMatrix::pauli_z().scale_real(10.0);
        assert!(matches!(herm_exp(&h, -80.0), Err(Error::ExpRange { .. })));
    }

    #[test]
    fn trace_distance_cases() {
        let a = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let b = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            trace_distance(&a, &ComplexMatrix::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_hermitian(&mut rng, 3, 1.0);
        let y = random_hermitian(&mut rng, 3, 1.0);
        let oracle: f64 = eigh(&(&x - &y)).unwrap().eigenvalues.iter().map(|l| l.abs()).sum::<f64>() / 2.0;
        let d = trace_distance(&x, &y).unwrap();
        assert!((d - oracle).abs() < 1e-13);
        assert!((d - trace_distance(&y, &x).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn kron_and_commutators() {
        let x = ComplexMatrix::pauli_x();
        let z = ComplexMatrix::pauli_z();
        let y = ComplexMatrix::pauli_y();
        // [σx, σz] = −2iσy
        let comm = x.commutator(&z);
        assert!(comm.max_abs_diff(&y.scale(c(0.0, -2.0))) < 1e-15);
        assert!(x.anticommutator(&z).max_abs() < 1e-15);
        let k = x.kron(&ComplexMatrix::identity(2));
        assert_eq!(k[(0, 2)], c(1.0, 0.0));
        assert_eq!(k.dim(), 4);
    }
}
