//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use hybrid_thermal::models::{
    ContinuumParams, ContinuumProfile, DriftScheme, FokkerPlanck, FpFields, Grid, LatticeScenario, LatticeVariant,
    Mechanism, Modality, TlsScenario,
};
use hybrid_thermal::random::{random_hermitian, random_hermitian_blocks, random_hybrid_state};
use hybrid_thermal::{
    eigh, hybrid_thermal, integrate, weights_via_free_energy, BipartiteLindblad, Complex64, ComplexMatrix, Error,
    HybridGenerator, HybridState, IntegratorConfig, Observable, Trajectory,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances.
const STATIONARITY_F: f64 = 1e-11;
const EQUIVALENCE: f64 = 1e-12;
const CONVERGED_DISTANCE: f64 = 1e-8;
const TLS_T_MAX: f64 = 200.0;
const MINIMALITY: f64 = 1e-9;
const LATTICE_WEIGHT_REL: f64 = 1e-8;
const LATTICE_CONDITIONAL: f64 = 1e-9;
const LATTICE_VARIANTS: f64 = 1e-9;
const GAUSSIAN_DEVIATION: f64 = 0.02;
const PEAK_REL: f64 = 0.05;
const Z_TH_REL: f64 = 1e-8;
const DISCRETE_CONTINUUM: f64 = 1e-3;
const ENVELOPE: f64 = 1e-6;
const FREQUENCY_REL: f64 = 1e-6;
const ENTROPY_IDENTITY: f64 = 1e-10;
const MIN_EIGENVALUE: f64 = -1e-8;
const TRACE: f64 = 1e-8;

const BETA_DE: f64 = 0.01;
const RATIOS: [f64; 4] = [0.5, 5.0, 20.0, 40.0];

#[derive(Default)]
struct Physicality {
    samples: usize,
    min_eigenvalue: f64,
    max_trace_error: f64,
    fp_most_negative: Option<f64>,
}

impl Physicality {
    fn record(&mut self, traj: &Trajectory) {
        for s in &traj.samples {
            self.samples += 1;
            self.min_eigenvalue = self.min_eigenvalue.min(s.min_eigenvalue);
            self.max_trace_error = self.max_trace_error.max((s.total_trace - 1.0).abs());
        }
    }
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

struct Harness {
    failures: usize,
    physical: Physicality,
}

impl Harness {
    fn run(&mut self, id: &str, title: &str, limit_s: f64, f: impl FnOnce(&mut Physicality) -> Outcome) {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| f(&mut self.physical)));
        let elapsed = start.elapsed().as_secs_f64();
        let (passed, detail) = match result {
            Ok(o) => (o.passed && elapsed < limit_s, o.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !passed {
            self.failures += 1;
        }
        let verdict = if passed { "PASS" } else { "FAIL" };
        println!("{verdict} {id} {title}: {detail} [{elapsed:.2}s < {limit_s}s]");
    }
}

fn random_tls<R: Rng>(rng: &mut R) -> HybridGenerator {
    let mut s = TlsScenario::sigma_zx(rng.gen_range(0.1..5.0), 1.0, 1.0, 0.0, 0.0);
    s.h_a = random_hermitian(rng, 2, 1.0);
    s.h_b = random_hermitian(rng, 2, 1.0);
    s.e_a = rng.gen_range(-1.0..1.0);
    s.e_b = rng.gen_range(-1.0..1.0);
    s.mechanisms = Mechanism::ALL.iter().map(|&m| (m, rng.gen_range(0.1..10.0))).collect();
    s.build().unwrap().generator
}

fn zx_scenario() -> TlsScenario {
    TlsScenario::sigma_zx(1.0, 2.0, 1.0, 0.0, 0.5)
}

/// Closed-form thermal state of the σz/σx scenario.
fn zx_oracle(s: &TlsScenario, omega_a: f64, omega_b: f64) -> HybridState {
    let b = s.beta;
    let za = (-b * s.e_a).exp() * 2.0 * (b * omega_a / 2.0).cosh();
    let zb = (-b * s.e_b).exp() * 2.0 * (b * omega_b / 2.0).cosh();
    let (wa, wb) = (za / (za + zb), zb / (za + zb));
    let c = |x: f64| Complex64::new(x, 0.0);
    let rho_a = ComplexMatrix::from_row_major(
        2,
        vec![c(1.0 / (1.0 + (b * omega_a).exp())), c(0.0), c(0.0), c(1.0 / (1.0 + (-b * omega_a).exp()))],
    )
    .unwrap();
    let t = (b * omega_b / 2.0).tanh();
    let rho_b = ComplexMatrix::from_row_major(2, vec![c(0.5), c(-t / 2.0), c(-t / 2.0), c(0.5)]).unwrap();
    HybridState::new(vec![rho_a.scale_real(wa), rho_b.scale_real(wb)]).unwrap()
}

fn eig2(m: &ComplexMatrix) -> [f64; 2] {
    let (a, d) = (m[(0, 0)].re, m[(1, 1)].re);
    let r = ((a - d).powi(2) + 4.0 * m[(0, 1)].norm_sqr()).sqrt();
    [(a + d - r) / 2.0, (a + d + r) / 2.0]
}

fn entropy2(m: &ComplexMatrix) -> f64 {
    eig2(m).iter().filter(|&&l| l > 0.0).map(|&l| -l * l.ln()).sum()
}

fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

fn hs_inner(a: &HybridState, b: &HybridState) -> f64 {
    a.blocks().iter().zip(b.blocks()).map(|(x, y)| x.matmul(y).trace().re).sum()
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn continuum(ratio: f64) -> ContinuumParams {
    ContinuumParams { beta: 1.0, omega0: 0.0, delta_omega: ratio * BETA_DE, delta_e: BETA_DE, delta_x: 1.0 }
}

/// Stationary weights `e^{−βE_n}cosh(βω_n/2)` normalized over a range far beyond any truncation.
fn lattice_oracle(s: &LatticeScenario, n: i64) -> f64 {
    let ln_u = |k: i64| {
        let e = s.e0 + s.delta_e * (k * k) as f64;
        let w = s.omega0 + s.delta_omega * k.unsigned_abs() as f64;
        -s.beta * e + (s.beta * w / 2.0).cosh().ln()
    };
    let all: Vec<f64> = (-5000..=5000).map(ln_u).collect();
    let m = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ln_z = m + all.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    (ln_u(n) - ln_z).exp()
}

fn unwrap_phase(z: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(z.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for v in z {
        let a = v.arg();
        if let Some(p) = prev {
            let d = a - p;
            if d > std::f64::consts::PI {
                offset -= 2.0 * std::f64::consts::PI;
            } else if d < -std::f64::consts::PI {
                offset += 2.0 * std::f64::consts::PI;
            }
        }
        prev = Some(a);
        out.push(a + offset);
    }
    out
}

fn slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let (mt, my) = (t.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let num: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let den: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
    num / den
}

fn criterion_01(_: &mut Physicality) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let g = random_tls(&mut rng);
        let (th, _) = hybrid_thermal(g.hamiltonian(), g.beta()).unwrap();
        let d = g.apply(&th).unwrap();
        for b in d.blocks() {
            worst = worst.max(b.frobenius_norm());
        }
    }
    outcome(worst <= STATIONARITY_F, format!("max block ‖L[Ξ_th]‖_F = {worst:.3e} (tol {STATIONARITY_F:e})"))
}

fn criterion_02(_: &mut Physicality) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let (mut map_coll, mut map_bip, mut coll_bip, mut dense_map, mut off) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let g = random_tls(&mut rng);
        let x = random_hybrid_state(&mut rng, 2, 2);
        let d = g.apply(&x).unwrap();
        let c = g.collisional_apply(&x).unwrap();
        let bl = BipartiteLindblad::new(&g).unwrap();
        let (b, o) = bl.apply_hybrid(&x).unwrap();
        let s = bl.to_matrix().unwrap();
        let full = x.embed();
        let image = s.mul_vec(full.as_slice());
        let dense = ComplexMatrix::from_row_major(full.dim(), image).unwrap();
        let (dense, _) = HybridState::from_embedded(&dense, 2).unwrap();
        map_coll = map_coll.max(d.max_abs_diff(&c));
        map_bip = map_bip.max(d.max_abs_diff(&b));
        coll_bip = coll_bip.max(c.max_abs_diff(&b));
        dense_map = dense_map.max(dense.max_abs_diff(&d));
        off = off.max(o);
    }
    let worst = map_coll.max(map_bip).max(coll_bip).max(dense_map);
    outcome(
        worst <= EQUIVALENCE && off <= EQUIVALENCE,
        format!(
            "apply/collisional {map_coll:.2e}, apply/bipartite {map_bip:.2e}, collisional/bipartite {coll_bip:.2e}, \
             dense superoperator {dense_map:.2e}, off-block {off:.2e} (tol {EQUIVALENCE:e})"
        ),
    )
}

fn criterion_03(phys: &mut Physicality) -> Outcome {
    let s = zx_scenario();
    let g = s.build().unwrap().generator;
    let oracle = zx_oracle(&s, 2.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let cfg = IntegratorConfig { t_max: Some(TLS_T_MAX), ..IntegratorConfig::default() };
    let mut worst = 0.0f64;
    let mut converged = 0;
    for _ in 0..20 {
        let x0 = random_hybrid_state(&mut rng, 2, 2);
        let traj = integrate(&g, &x0, &cfg, &[]).unwrap();
        phys.record(&traj);
        assert!(traj.final_time <= TLS_T_MAX);
        worst = worst.max(traj.final_state.trace_distance(&oracle).unwrap());
        converged += traj.converged() as usize;
    }
    outcome(
        worst < CONVERGED_DISTANCE,
        format!("max trace distance at t = {TLS_T_MAX} is {worst:.3e} (tol {CONVERGED_DISTANCE:e}); {converged}/20 flagged converged"),
    )
}

fn criterion_04(_: &mut Physicality) -> Outcome {
    use Mechanism::*;
    let base = zx_scenario();
    let full = base.build().unwrap().generator.stationary_state().unwrap();
    let mut worst = 0.0f64;
    for pair in [[A, B], [A, C], [A, D], [A, E]] {
        let st = base.clone().with_mechanisms(&pair, 1.0).build().unwrap().generator.stationary_state().unwrap();
        worst = worst.max(st.trace_distance(&full).unwrap());
    }
    let only_a = base.clone().with_mechanisms(&[A], 1.0).build().unwrap();
    let flagged = !only_a.notes.is_empty();
    let reported = match only_a.generator.stationary_state() {
        Err(Error::DegenerateStationary { dimension }) => dimension,
        _ => 0,
    };

    // Independent count: null vectors of the dense superoperator.
    let nullity = |g: &HybridGenerator| {
        let s = BipartiteLindblad::new(g).unwrap().to_matrix().unwrap();
        let e = eigh(&s.adjoint().matmul(&s)).unwrap();
        (e.eigenvalues.iter().filter(|&&l| l < 1e-10).count(), e)
    };
    let (dense_a, _) = nullity(&only_a.generator);
    let (dense_full, e) = nullity(&base.build().unwrap().generator);
    let v = e.eigenvectors.column(0);
    let x = ComplexMatrix::from_row_major(4, v).unwrap();
    let x = x.scale(Complex64::new(1.0, 0.0) / x.trace());
    let (null_state, _) = HybridState::from_embedded(&x, 2).unwrap();
    let null_gap = null_state.trace_distance(&zx_oracle(&base, 2.0, 1.0)).unwrap();

    let passed = worst <= MINIMALITY && flagged && reported == 2 && dense_a == 2 && dense_full == 1 && null_gap <= MINIMALITY;
    outcome(
        passed,
        format!(
            "pairs vs full {worst:.2e} (tol {MINIMALITY:e}); {{a}} flagged={flagged}, reported nullity {reported}, \
             dense nullity {dense_a}; full dense nullity {dense_full}, null vector vs thermal {null_gap:.2e}"
        ),
    )
}

fn criterion_05(phys: &mut Physicality) -> Outcome {
    let s = LatticeScenario::new(1.0, 1, 0.0, 5.0 * BETA_DE, BETA_DE);
    let n_max = s.resolved_half_width().unwrap();
    let mut weight_dev = 0.0f64;
    let mut cond_dev = 0.0f64;
    let mut states = Vec::new();
    for variant in [LatticeVariant::Dephasing, LatticeVariant::Flip] {
        let built = s.build(variant).unwrap();
        let st = built.generator.stationary_state().unwrap();
        let p = st.classical_marginal();
        for (label, &pn) in p.iter().enumerate() {
            let n = LatticeScenario::site(label, n_max);
            let w = lattice_oracle(&s, n);
            weight_dev = weight_dev.max((pn - w).abs() / w);
            let wn = s.omega0 + s.delta_omega * n.unsigned_abs() as f64;
            let rho = st.block(label).scale_real(1.0 / pn);
            let expect = [1.0 / (1.0 + (s.beta * wn).exp()), 1.0 / (1.0 + (-s.beta * wn).exp())];
            for i in 0..2 {
                for j in 0..2 {
                    let e = if i == j { expect[i] } else { 0.0 };
                    cond_dev = cond_dev.max((rho[(i, j)] - Complex64::new(e, 0.0)).norm());
                }
            }
        }
        states.push((built, st));
    }
    let variants = states[0].1.trace_distance(&states[1].1).unwrap();

    // Relaxation run on the dephasing lattice from a qubit at the center.
    let g = &states[0].0.generator;
    let labels = g.num_labels();
    let mut blocks = vec![ComplexMatrix::zeros(2); labels];
    blocks[LatticeScenario::label(0, n_max)] = ComplexMatrix::identity(2).scale_real(0.5);
    let x0 = HybridState::new(blocks).unwrap();
    let cfg = IntegratorConfig { t_max: Some(3000.0), sample_interval: Some(25.0), ..IntegratorConfig::default() };
    let traj = integrate(g, &x0, &cfg, &[]).unwrap();
    phys.record(&traj);
    let oracle = weights_via_free_energy(g.hamiltonian(), g.beta()).unwrap();
    let run_dev = traj
        .final_state
        .classical_marginal()
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let passed = weight_dev <= LATTICE_WEIGHT_REL && cond_dev <= LATTICE_CONDITIONAL && variants <= LATTICE_VARIANTS && run_dev <= 1e-6;
    outcome(
        passed,
        format!(
            "N = {n_max}; weights rel {weight_dev:.2e} (tol {LATTICE_WEIGHT_REL:e}); conditionals {cond_dev:.2e} \
             (tol {LATTICE_CONDITIONAL:e}); variants {variants:.2e} (tol {LATTICE_VARIANTS:e}); \
             relaxed marginal at t = {:.0} off by {run_dev:.2e}",
            traj.final_time
        ),
    )
}

fn grid_peak(ratio: f64) -> f64 {
    // Independent maximization of ln[e^{−βδE u²}cosh(βδω u/2)] over u ≥ 0.
    let (a, b) = (BETA_DE, ratio * BETA_DE / 2.0);
    let f = |u: f64| -a * u * u + b * u + (0.5 * (1.0 + (-2.0 * b * u).exp())).ln();
    let mut best = (0.0, f(0.0));
    let mut u = 0.0;
    while u <= 100.0 {
        let v = f(u);
        if v > best.1 {
            best = (u, v);
        }
        u += 1e-4;
    }
    best.0
}

fn fig2_grid() -> Vec<f64> {
    Grid::symmetric(60.0, 2401).unwrap().x
}

fn criterion_06a(_: &mut Physicality) -> Outcome {
    let p = continuum(0.5);
    let prof = ContinuumProfile::new(&p, &fig2_grid()).unwrap();
    let wmax = prof.w.iter().copied().fold(0.0, f64::max);
    let dev = prof.w.iter().zip(&prof.g_th).map(|(w, g)| (w - g).abs()).fold(0.0, f64::max) / wmax;
    let m = prof.modality();
    outcome(
        m == Modality::Unimodal && dev < GAUSSIAN_DEVIATION,
        format!("δω/δE = 0.5: {m:?}, max|w − G_th|/max w = {dev:.2e} (tol {GAUSSIAN_DEVIATION})"),
    )
}

fn peak_criterion(ratio: f64) -> Outcome {
    let p = continuum(ratio);
    let grid = fig2_grid();
    let prof = ContinuumProfile::new(&p, &grid).unwrap();
    let m = prof.modality();
    let peaks = p.peaks(&grid, 1e-10);
    let target = ratio / 4.0 * p.delta_x;
    let oracle = grid_peak(ratio);
    let worst = if peaks.is_empty() {
        f64::INFINITY
    } else {
        peaks.iter().map(|x| (x.abs() - target).abs() / target).fold(0.0, f64::max)
    };
    let agree = peaks.iter().map(|x| (x.abs() - oracle).abs()).fold(0.0, f64::max);
    outcome(
        m == Modality::Bimodal && worst <= PEAK_REL && agree < 1e-3,
        format!(
            "δω/δE = {ratio}: {m:?}, peaks {peaks:.4?}, target ±{target}, worst rel offset {worst:.3} (tol {PEAK_REL}); \
             grid-maximized |x| = {oracle:.4}"
        ),
    )
}

fn criterion_06d(_: &mut Physicality) -> Outcome {
    let mut worst = 0.0f64;
    for ratio in RATIOS {
        let p = continuum(ratio);
        let f = |x: f64| p.unnormalized_weight(x);
        let q = simpson(&f, -400.0, 0.0, 1e-15) + simpson(&f, 0.0, 400.0, 1e-15);
        worst = worst.max((p.z_th() - q).abs() / q);
    }
    outcome(worst < Z_TH_REL, format!("closed-form Z_th vs adaptive quadrature: max rel {worst:.2e} (tol {Z_TH_REL:e})"))
}

fn criterion_07(_: &mut Physicality) -> Outcome {
    let mut worst = 0.0f64;
    let mut sizes = Vec::new();
    for ratio in RATIOS {
        let s = LatticeScenario::new(1.0, 1, 0.0, ratio * BETA_DE, BETA_DE);
        let n_max = s.resolved_half_width().unwrap();
        let w = weights_via_free_energy(&s.hamiltonian(n_max).unwrap(), s.beta).unwrap();
        let p = continuum(ratio);
        let wmax = w.iter().copied().fold(0.0, f64::max);
        let dev = w
            .iter()
            .enumerate()
            .map(|(label, wn)| {
                let x = LatticeScenario::site(label, n_max) as f64 * p.delta_x;
                (wn - p.weight(x) * p.delta_x).abs()
            })
            .fold(0.0, f64::max)
            / wmax;
        worst = worst.max(dev);
        sizes.push(n_max);
    }
    outcome(
        worst < DISCRETE_CONTINUUM,
        format!("max_n |w_n − w(x_n)δx| / max w_n = {worst:.2e} over δω/δE ∈ {RATIOS:?}, N = {sizes:?} (tol {DISCRETE_CONTINUUM:e})"),
    )
}

fn criterion_08a(phys: &mut Physicality) -> Outcome {
    let mut s = LatticeScenario::new(1.0, 3, 1.0, 0.5, 0.2);
    s.auto_truncate = false;
    s.kappa_plus = 0.7;
    s.kappa_minus = 0.4;
    let built = s.build(LatticeVariant::Dephasing).unwrap();
    let g = &built.generator;
    let n = 1i64;
    let label = LatticeScenario::label(n, 3);

    // Oracle decay rate from the lattice parameters.
    let level = |k: i64, sign: f64| {
        s.e0 + s.delta_e * (k * k) as f64 + sign * (s.omega0 + s.delta_omega * k.unsigned_abs() as f64) / 2.0
    };
    let rate = |kappa: f64, from: f64, to: f64| if to <= from { kappa } else { kappa * (-s.beta * (to - from)).exp() };
    let wn = s.omega0 + s.delta_omega * n as f64;
    let mut gamma = s.kappa_th + s.kappa_th * (-s.beta * wn).exp();
    for k in [n - 1, n + 1] {
        gamma += rate(s.kappa_plus, level(n, 1.0), level(k, 1.0));
        gamma += rate(s.kappa_minus, level(n, -1.0), level(k, -1.0));
    }
    let tau = 2.0 / gamma;

    let psi = [Complex64::new(0.5f64.sqrt(), 0.0); 2];
    let mut blocks = vec![ComplexMatrix::zeros(2); g.num_labels()];
    blocks[label] = ComplexMatrix::outer(&psi, &psi);
    let x0 = HybridState::new(blocks).unwrap();
    let obs = Observable::Coherence { label, i: built.plus[label].index, j: built.minus[label].index };
    let cfg = IntegratorConfig {
        t_max: Some(5.0 * tau),
        sample_interval: Some(tau / 40.0),
        rel_tol: 1e-11,
        abs_tol: 1e-14,
        ..IntegratorConfig::default()
    };
    let traj = integrate(g, &x0, &cfg, &[obs]).unwrap();
    phys.record(&traj);
    let c: Vec<Complex64> = traj.samples.iter().map(|s| s.observables[0]).collect();
    let t = traj.times();
    let c0 = c[0].norm();
    let env = t
        .iter()
        .zip(&c)
        .map(|(t, z)| (z.norm() - c0 * (-gamma * t / 2.0).exp()).abs() / c0)
        .fold(0.0, f64::max);
    let freq = -slope(&t, &unwrap_phase(&c));
    let freq_err = (freq - wn).abs() / wn;
    outcome(
        env <= ENVELOPE && freq_err <= FREQUENCY_REL,
        format!(
            "lattice site n = {n}: Γ = {gamma:.6}, envelope dev {env:.2e} over {:.2} decay times (tol {ENVELOPE:e}); \
             fitted ω = {freq:.9} vs {wn}, rel {freq_err:.2e} (tol {FREQUENCY_REL:e})",
            t.last().unwrap() / tau
        ),
    )
}

fn fp_model(omega0: f64, ratio: f64) -> FokkerPlanck {
    let mut p = continuum(ratio);
    p.omega0 = omega0;
    FokkerPlanck::new(p, 1.0, 1.0, Grid::symmetric(40.0, 80).unwrap(), DriftScheme::Central).unwrap()
}

fn criterion_08b(phys: &mut Physicality) -> Outcome {
    let fp = fp_model(1.0, 5.0);
    let i = 45;
    let x = fp.grid.x[i];
    let wx = fp.params.omega(x);
    let (dn, up) = (fp.kappa_th, fp.kappa_th * (-fp.params.beta * wx).exp());
    let decay = 0.5 * (dn + up) + fp.gamma;
    let tau = 1.0 / decay;
    let half = Complex64::new(0.5, 0.0);
    let mut y = fp.product_state(|x| fp.params.g_th(x), [[half, half], [half, half]]);
    let dt = (fp.max_stable_dt() / 4.0).min(0.005);
    let step = tau / 40.0;
    let mut times = vec![0.0];
    let mut c = vec![y.coherence[i]];
    let mut most_negative = 0.0f64;
    for k in 1..=200 {
        let tr = fp.integrate(&y, dt, step, step).unwrap();
        most_negative = most_negative.min(tr.most_negative);
        y = tr.final_fields;
        times.push(k as f64 * step);
        c.push(y.coherence[i]);
    }
    phys.fp_most_negative = Some(phys.fp_most_negative.unwrap_or(0.0).min(most_negative));
    let c0 = c[0].norm();
    let env = times
        .iter()
        .zip(&c)
        .map(|(t, z)| (z.norm() - c0 * (-decay * t).exp()).abs() / c0)
        .fold(0.0, f64::max);
    let freq = -slope(&times, &unwrap_phase(&c));
    let freq_err = (freq - wx).abs() / wx;
    outcome(
        env <= ENVELOPE && freq_err <= FREQUENCY_REL,
        format!(
            "Fokker-Planck cell x = {x}: rate {decay:.6}, envelope dev {env:.2e} over 5 decay times; \
             fitted ω = {freq:.9} vs {wx:.6}, rel {freq_err:.2e}"
        ),
    )
}

fn criterion_09(_: &mut Physicality) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let mut additivity = 0.0f64;
    for _ in 0..100 {
        let x = random_hybrid_state(&mut rng, 2, 1);
        let rho = x.block(0).clone();
        let mut p: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= z);
        let s = HybridState::uncorrelated(&rho, &p).entropy().unwrap();
        additivity = additivity.max((s - entropy2(&rho) - shannon(&p)).abs());
    }

    let mut mixture = 0.0f64;
    for _ in 0..100 {
        let x = random_hybrid_state(&mut rng, 2, 3);
        let p = x.classical_marginal();
        let cond: f64 = x.blocks().iter().zip(&p).map(|(b, &pc)| pc * entropy2(&b.scale_real(1.0 / pc))).sum();
        mixture = mixture.max((x.entropy().unwrap() - cond - shannon(&p)).abs());
    }

    // Perturbations at fixed trace and mean energy never raise the entropy.
    let mut violations = 0;
    let mut smallest_gap = f64::INFINITY;
    let mut constraint = 0.0f64;
    for _ in 0..100 {
        let g = random_tls(&mut rng);
        let h = g.hamiltonian();
        let (th, _) = hybrid_thermal(h, g.beta()).unwrap();
        let ident = HybridState::from_blocks_unchecked(vec![ComplexMatrix::identity(2); 2]);
        let energy = HybridState::from_blocks_unchecked((0..2).map(|c| h.conditional(c)).collect());
        let mut u1 = ident.clone();
        u1 = u1.scaled(1.0 / hs_inner(&u1, &u1).sqrt());
        let mut u2 = energy.clone();
        u2.add_scaled(-hs_inner(&u1, &energy), &u1);
        u2 = u2.scaled(1.0 / hs_inner(&u2, &u2).sqrt());
        let mut d = random_hermitian_blocks(&mut rng, 2, 2);
        let (a1, a2) = (hs_inner(&u1, &d), hs_inner(&u2, &d));
        d.add_scaled(-a1, &u1);
        d.add_scaled(-a2, &u2);
        let lmin = th.min_eigenvalue().unwrap();
        let norm = d.blocks().iter().map(|b| b.frobenius_norm()).fold(0.0, f64::max);
        let eps = rng.gen_range(0.01..0.99) * lmin / norm;
        let mut pert = th.clone();
        pert.add_scaled(eps, &d);
        constraint = constraint
            .max((pert.total_trace() - 1.0).abs())
            .max((hs_inner(&pert, &energy) - hs_inner(&th, &energy)).abs());
        let gap = th.entropy().unwrap() - pert.entropy().unwrap();
        smallest_gap = smallest_gap.min(gap);
        if gap < 0.0 {
            violations += 1;
        }
    }
    let passed = additivity <= ENTROPY_IDENTITY && mixture <= ENTROPY_IDENTITY && violations == 0 && constraint < 1e-13;
    outcome(
        passed,
        format!(
            "additivity {additivity:.2e}, mixture identity {mixture:.2e} (tol {ENTROPY_IDENTITY:e}); \
             max-entropy violations {violations}/100, smallest gap {smallest_gap:.2e}, constraint drift {constraint:.1e}"
        ),
    )
}

fn criterion_10(phys: &mut Physicality) -> Outcome {
    // Short-time Fokker-Planck run from a pure coherent product state.
    let fp = fp_model(0.0, 40.0);
    let half = Complex64::new(0.5, 0.0);
    let y: FpFields = fp.product_state(|x| (-(x * x) / 2.0).exp(), [[half, half], [half, half]]);
    let dt = fp.max_stable_dt() / 4.0;
    let tr = fp.integrate(&y, dt, 5.0, 0.05).unwrap();
    let fp_neg = tr.most_negative.min(phys.fp_most_negative.unwrap_or(0.0));
    let recorded = tr.min_eigenvalue.len() == tr.times.len();
    let p = &*phys;
    outcome(
        p.samples > 0 && p.min_eigenvalue >= MIN_EIGENVALUE && p.max_trace_error <= TRACE && recorded,
        format!(
            "{} discrete samples: min eigenvalue {:.2e} (floor {MIN_EIGENVALUE:e}), max |Tr − 1| {:.2e} (tol {TRACE:e}); \
             Fokker-Planck most negative eigenvalue recorded {fp_neg:.2e}",
            p.samples, p.min_eigenvalue, p.max_trace_error
        ),
    )
}

fn main() {
    let mut h = Harness { failures: 0, physical: Physicality::default() };
    h.run("01", "thermal state is stationary", 5.0, criterion_01);
    h.run("02", "generator forms agree", 5.0, criterion_02);
    h.run("03", "TLS relaxes to the thermal state", 10.0, criterion_03);
    h.run("04", "mechanism minimality", 10.0, criterion_04);
    h.run("05", "lattice stationary weights", 60.0, criterion_05);
    h.run("06a", "weight density near Gaussian", 5.0, criterion_06a);
    h.run("06b", "bimodal weight density", 5.0, |_| peak_criterion(20.0));
    h.run("06c", "bimodal weight density", 5.0, |_| peak_criterion(40.0));
    h.run("06d", "closed-form normalization", 5.0, criterion_06d);
    h.run("07", "discrete and continuum weights", 5.0, criterion_07);
    h.run("08a", "lattice coherence decay", 5.0, criterion_08a);
    h.run("08b", "Fokker-Planck coherence decay", 5.0, criterion_08b);
    h.run("09", "entropy identities", 10.0, criterion_09);
    h.run("10", "physicality along trajectories", 70.0, criterion_10);
    println!("acceptance: {} failed", h.failures);
    if h.failures > 0 {
        std::process::exit(1);
    }
}
