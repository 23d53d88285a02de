//! Invariant checks run against a built generator.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::generator::{BipartiteLindblad, HybridGenerator};
use crate::random::random_hermitian_blocks;
use crate::thermal::{hybrid_thermal, weights_via_free_energy};

/// Relative tolerance on every stored rate ratio.
pub const BALANCE_TOL: f64 = 1e-14;
/// Blockwise agreement of the three generator implementations, per unit rate and norm.
pub const EQUIVALENCE_TOL: f64 = 1e-12;
/// `‖L[Ξ_th]‖` per unit rate.
pub const STATIONARITY_TOL: f64 = 1e-12;
/// Trace distance between the stationary and the thermal state.
pub const STATIONARY_DISTANCE_TOL: f64 = 1e-9;
/// Relative deviation of stationary classical weights from free-energy weights.
pub const WEIGHT_TOL: f64 = 1e-8;
/// Largest `dim_s·L` for which the bipartite comparison runs.
pub const BIPARTITE_LIMIT: usize = 64;

/// Tolerances used by [`verify_with`]; defaults are the module constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub balance: f64,
    pub equivalence: f64,
    pub stationarity: f64,
    pub stationary_distance: f64,
    pub weights: f64,
    pub bipartite_limit: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            balance: BALANCE_TOL,
            equivalence: EQUIVALENCE_TOL,
            stationarity: STATIONARITY_TOL,
            stationary_distance: STATIONARY_DISTANCE_TOL,
            weights: WEIGHT_TOL,
            bipartite_limit: BIPARTITE_LIMIT,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub detail: Option<String>,
}

impl CheckResult {
    pub fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        Self { name: name.to_string(), passed: residual <= tolerance, residual, tolerance, detail: None }
    }

    pub fn failed(name: &str, tolerance: f64, detail: String) -> Self {
        Self { name: name.to_string(), passed: false, residual: f64::INFINITY, tolerance, detail: Some(detail) }
    }
}

/// Runs every applicable invariant on `g`, using `samples` random Hermitian inputs.
pub fn verify<R: Rng + ?Sized>(g: &HybridGenerator, rng: &mut R, samples: usize) -> Vec<CheckResult> {
    verify_with(g, rng, samples, &Tolerances::default())
}

pub fn verify_with<R: Rng + ?Sized>(g: &HybridGenerator, rng: &mut R, samples: usize, tol: &Tolerances) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let rate = g.max_rate().max(1.0);
    let (n, labels) = (g.dim(), g.num_labels());

    out.push(CheckResult::new("detailed_balance", g.rates().max_balance_residual(), tol.balance));

    let thermal = match hybrid_thermal(g.hamiltonian(), g.beta()) {
        Ok((t, _)) => Some(t),
        Err(e) => {
            out.push(CheckResult::failed("thermal_stationarity", tol.stationarity, e.to_string()));
            None
        }
    };
    if let Some(th) = &thermal {
        match g.apply(th) {
            Ok(d) => out.push(CheckResult::new("thermal_stationarity", d.max_block_norm() / rate, tol.stationarity)),
            Err(e) => out.push(CheckResult::failed("thermal_stationarity", tol.stationarity, e.to_string())),
        }
        let min = th.min_eigenvalue().unwrap_or(f64::NEG_INFINITY);
        out.push(CheckResult::new("thermal_positivity", (-min).max(0.0), 0.0));
    }

    let inputs: Vec<_> = (0..samples).map(|_| random_hermitian_blocks(rng, n, labels)).collect();
    let bipartite = if n * labels <= tol.bipartite_limit { BipartiteLindblad::new(g).ok() } else { None };
    let (mut trace, mut herm, mut coll, mut bip, mut closure) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for x in &inputs {
        let scale = rate * x.max_block_norm().max(1.0);
        let Ok(d) = g.apply(x) else { continue };
        trace = trace.max(d.total_trace().abs() / scale);
        for b in d.blocks() {
            herm = herm.max(b.hermitian_asymmetry().0 / scale);
        }
        if let Ok(c) = g.collisional_apply(x) {
            coll = coll.max(d.max_abs_diff(&c) / scale);
        }
        if let Some(bl) = &bipartite {
            if let Ok((b, off)) = bl.apply_hybrid(x) {
                bip = bip.max(d.max_abs_diff(&b) / scale);
                closure = closure.max(off / scale);
            }
        }
    }
    out.push(CheckResult::new("trace_preservation", trace, tol.equivalence));
    out.push(CheckResult::new("hermiticity", herm, tol.equivalence));
    out.push(CheckResult::new("collisional_equivalence", coll, tol.equivalence));
    if bipartite.is_some() {
        out.push(CheckResult::new("bipartite_equivalence", bip, tol.equivalence));
        out.push(CheckResult::new("classical_coherence_closure", closure, 1e-14));
    }

    match g.stationary_state() {
        Ok(st) => {
            if let Some(th) = &thermal {
                let d = st.trace_distance(th).unwrap_or(f64::INFINITY);
                out.push(CheckResult::new("stationary_is_thermal", d, tol.stationary_distance));
            }
            match weights_via_free_energy(g.hamiltonian(), g.beta()) {
                Ok(w) => {
                    let dev = st
                        .classical_marginal()
                        .iter()
                        .zip(&w)
                        .map(|(p, q)| if *q > 0.0 { (p - q).abs() / q } else { p.abs() })
                        .fold(0.0, f64::max);
                    out.push(CheckResult::new("stationary_weights", dev, tol.weights));
                }
                Err(e) => out.push(CheckResult::failed("stationary_weights", tol.weights, e.to_string())),
            }
        }
        Err(e) => out.push(CheckResult::failed("stationary_is_thermal", tol.stationary_distance, e.to_string())),
    }
    out
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}
