//! Drift-diffusion limit of the dephasing lattice on a finite-volume grid.
//!
//! Fields per cell: `P^{(±)} = ⟨±|ϱ_x|±⟩` and `C = ⟨+|ϱ_x|−⟩`
//! (`⟨−|ϱ_x|+⟩ = C̄`). Populations obey
//! `∂_t P^± = ∓γ↓P^+ ± γ↑P^− + γ(δx²/2)[−β∂_x(f_± P^±) + ∂²_x P^±]`
//! with zero-flux walls, coherences
//! `∂_t C = −iω_x C − [(γ↓ + γ↑)/2 + γ]C`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::evolve::{event_times, Method, Stepper};
use crate::fmath;
use crate::markov::RateGraph;
use crate::models::continuum::{ContinuumParams, Grid};
use crate::{Error, Result};

/// RK4 stability bound enforced on `dt·max|λ|`.
pub const RK4_STABILITY: f64 = 2.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DriftScheme {
    /// Second order; rejected when a face rate becomes negative.
    Central,
    /// First order, always positive rates.
    Upwind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FpFields {
    pub p_plus: Vec<f64>,
    pub p_minus: Vec<f64>,
    pub coherence: Vec<Complex64>,
}

impl FpFields {
    pub fn zeros(n: usize) -> Self {
        Self { p_plus: vec![0.0; n], p_minus: vec![0.0; n], coherence: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn len(&self) -> usize {
        self.p_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_plus.is_empty()
    }

    /// `Σ_i (P^+_i + P^−_i)·h`.
    pub fn total_mass(&self, h: f64) -> f64 {
        self.p_plus.iter().zip(&self.p_minus).map(|(a, b)| a + b).sum::<f64>() * h
    }

    /// Smallest eigenvalue of `[[P^+, C], [C̄, P^−]]` in every cell.
    pub fn min_eigenvalues(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let (a, b) = (self.p_plus[i], self.p_minus[i]);
                let c = self.coherence[i].norm();
                0.5 * (a + b) - fmath::sqrt(0.25 * (a - b) * (a - b) + c * c)
            })
            .collect()
    }

    fn pack(&self) -> Vec<f64> {
        let n = self.len();
        let mut y = Vec::with_capacity(4 * n);
        y.extend_from_slice(&self.p_plus);
        y.extend_from_slice(&self.p_minus);
        y.extend(self.coherence.iter().map(|z| z.re));
        y.extend(self.coherence.iter().map(|z| z.im));
        y
    }

    fn unpack(y: &[f64]) -> Self {
        let n = y.len() / 4;
        Self {
            p_plus: y[..n].to_vec(),
            p_minus: y[n..2 * n].to_vec(),
            coherence: (0..n).map(|i| Complex64::new(y[2 * n + i], y[3 * n + i])).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FpTrajectory {
    pub times: Vec<f64>,
    pub total_mass: Vec<f64>,
    /// Smallest cell eigenvalue at each sample.
    pub min_eigenvalue: Vec<f64>,
    /// Most negative eigenvalue seen at any sample (0 if none).
    pub most_negative: f64,
    pub final_fields: FpFields,
}

#[derive(Clone, Debug)]
pub struct FokkerPlanck {
    pub params: ContinuumParams,
    pub gamma: f64,
    pub kappa_th: f64,
    pub grid: Grid,
    pub scheme: DriftScheme,
    /// Per face `i + ½` and branch `s ∈ {+, −}`: rates `(i → i+1, i+1 → i)`.
    face_rates: [Vec<(f64, f64)>; 2],
    /// Per cell: `(γ↓, γ↑)`.
    flips: Vec<(f64, f64)>,
    coherence: Vec<Complex64>,
}

impl FokkerPlanck {
    pub fn new(params: ContinuumParams, gamma: f64, kappa_th: f64, grid: Grid, scheme: DriftScheme) -> Result<Self> {
        params.validate()?;
        if !(gamma > 0.0 && gamma.is_finite()) || !(kappa_th >= 0.0 && kappa_th.is_finite()) {
            return Err(Error::InvalidParameter("need gamma > 0 and kappa_th >= 0".into()));
        }
        if grid.h > params.delta_x * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter("grid spacing must not exceed delta_x".into()));
        }
        let h = grid.h;
        let d = gamma * params.delta_x * params.delta_x / 2.0;
        let beta = params.beta;
        let mut face_rates = [Vec::new(), Vec::new()];
        for i in 0..grid.len() - 1 {
            let (fp, fm) = params.forces(grid.face(i));
            for (s, f) in [(0, fp), (1, fm)] {
                let (right, left) = match scheme {
                    DriftScheme::Central => ((d / h) * (beta * f / 2.0 + 1.0 / h), (d / h) * (1.0 / h - beta * f / 2.0)),
                    DriftScheme::Upwind => ((d / h) * (1.0 / h + beta * f.max(0.0)), (d / h) * (1.0 / h + beta * (-f).max(0.0))),
                };
                if right < 0.0 || left < 0.0 {
                    return Err(Error::InvalidParameter(alloc::format!(
                        "central drift gives a negative rate at x = {}; refine the grid or use upwinding",
                        grid.face(i)
                    )));
                }
                face_rates[s].push((right, left));
            }
        }
        let flips: Vec<(f64, f64)> = grid
            .x
            .iter()
            .map(|&x| (kappa_th, kappa_th * fmath::exp(-beta * params.omega(x))))
            .collect();
        let coherence = grid
            .x
            .iter()
            .zip(&flips)
            .map(|(&x, &(dn, up))| Complex64::new(-(0.5 * (dn + up) + gamma), -params.omega(x)))
            .collect();
        Ok(Self { params, gamma, kappa_th, grid, scheme, face_rates, flips, coherence })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Complex coherence eigenvalue `−iω_x − [(γ↓+γ↑)/2 + γ]` of every cell.
    pub fn coherence_rates(&self) -> &[Complex64] {
        &self.coherence
    }

    pub fn derivative(&self, y: &FpFields) -> FpFields {
        let n = self.len();
        let mut out = FpFields::zeros(n);
        for i in 0..n {
            let (dn, up) = self.flips[i];
            let flow = dn * y.p_plus[i] - up * y.p_minus[i];
            out.p_plus[i] -= flow;
            out.p_minus[i] += flow;
        }
        for (s, rates) in self.face_rates.iter().enumerate() {
            let (src, dst) = if s == 0 { (&y.p_plus, &mut out.p_plus) } else { (&y.p_minus, &mut out.p_minus) };
            for (i, &(right, left)) in rates.iter().enumerate() {
                let flux = right * src[i] - left * src[i + 1];
                dst[i] -= flux;
                dst[i + 1] += flux;
            }
        }
        for (i, &lam) in self.coherence.iter().enumerate() {
            out.coherence[i] = lam * y.coherence[i];
        }
        out
    }

    fn operator_bound(&self) -> f64 {
        let n = self.len();
        let mut out = vec![0.0f64; 2 * n];
        for i in 0..n {
            out[2 * i] += self.flips[i].0;
            out[2 * i + 1] += self.flips[i].1;
        }
        for (s, rates) in self.face_rates.iter().enumerate() {
            for (i, &(right, left)) in rates.iter().enumerate() {
                out[2 * i + s] += right;
                out[2 * (i + 1) + s] += left;
            }
        }
        let pop = 2.0 * out.iter().copied().fold(0.0, f64::max);
        let coh = self.coherence_rates().iter().map(|z| z.norm()).fold(0.0, f64::max);
        pop.max(coh)
    }

    /// Largest RK4 step accepted by [`Self::integrate`].
    pub fn max_stable_dt(&self) -> f64 {
        RK4_STABILITY / self.operator_bound()
    }

    /// Exact stationary state of the discretized populations; coherences vanish.
    pub fn stationary(&self) -> Result<FpFields> {
        let n = self.len();
        let mut g = RateGraph::new(2 * n);
        for i in 0..n {
            g.add(2 * i, 2 * i + 1, self.flips[i].0)?;
            g.add(2 * i + 1, 2 * i, self.flips[i].1)?;
        }
        for (s, rates) in self.face_rates.iter().enumerate() {
            for (i, &(right, left)) in rates.iter().enumerate() {
                g.add(2 * i + s, 2 * (i + 1) + s, right)?;
                g.add(2 * (i + 1) + s, 2 * i + s, left)?;
            }
        }
        let p = g.stationary()?;
        let h = self.grid.h;
        let mut f = FpFields::zeros(n);
        for i in 0..n {
            f.p_plus[i] = p[2 * i] / h;
            f.p_minus[i] = p[2 * i + 1] / h;
        }
        Ok(f)
    }

    /// Product initial condition `φ(x)·ρ` with `φ` normalized on the grid.
    pub fn product_state(&self, profile: impl Fn(f64) -> f64, rho: [[Complex64; 2]; 2]) -> FpFields {
        let phi: Vec<f64> = self.grid.x.iter().map(|&x| profile(x)).collect();
        let z: f64 = phi.iter().sum::<f64>() * self.grid.h;
        let mut f = FpFields::zeros(self.len());
        for (i, v) in phi.iter().enumerate() {
            let w = v / z;
            f.p_plus[i] = w * rho[0][0].re;
            f.p_minus[i] = w * rho[1][1].re;
            f.coherence[i] = rho[0][1] * w;
        }
        f
    }

    /// Fixed-step RK4 from `initial` to `t_max`, sampling every `sample_interval`.
    pub fn integrate(&self, initial: &FpFields, dt: f64, t_max: f64, sample_interval: f64) -> Result<FpTrajectory> {
        if initial.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: initial.len() });
        }
        for (name, v) in [("dt", dt), ("t_max", t_max), ("sample_interval", sample_interval)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(alloc::format!("{name} must be finite and positive")));
            }
        }
        let limit = self.max_stable_dt();
        if dt > limit {
            return Err(Error::CflViolation { dt, limit });
        }
        let h = self.grid.h;
        let mut f = |y: &Vec<f64>, out: &mut Vec<f64>| {
            *out = self.derivative(&FpFields::unpack(y)).pack();
        };
        let mut stepper = Stepper {
            method: Method::Rk4,
            dt,
            rel_tol: 1.0,
            abs_tol: 1.0,
            max_steps: usize::MAX,
            steps: 0,
            rejected: 0,
        };
        let mut y = initial.pack();
        let mut t = 0.0;
        let min_of = |fields: &FpFields| fields.min_eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        let mut times = vec![0.0];
        let mut total_mass = vec![initial.total_mass(h)];
        let mut min_eigenvalue = vec![min_of(initial)];
        for (t_event, _, _) in event_times(t_max, sample_interval, sample_interval) {
            stepper.advance(&mut f, &mut y, &mut t, t_event)?;
            let fields = FpFields::unpack(&y);
            times.push(t);
            total_mass.push(fields.total_mass(h));
            min_eigenvalue.push(min_of(&fields));
        }
        let most_negative = min_eigenvalue.iter().copied().fold(0.0, f64::min);
        Ok(FpTrajectory { times, total_mass, min_eigenvalue, most_negative, final_fields: FpFields::unpack(&y) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(ratio: f64) -> ContinuumParams {
        ContinuumParams { beta: 1.0, omega0: 0.0, delta_omega: ratio * 0.01, delta_e: 0.01, delta_x: 1.0 }
    }

    #[test]
    fn uncoupled_stationary_density_is_gaussian() {
        let grid = Grid::symmetric(50.0, 200).unwrap();
        let fp = FokkerPlanck::new(params(0.0), 1.0, 1.0, grid.clone(), DriftScheme::Central).unwrap();
        let st = fp.stationary().unwrap();
        let p = params(0.0);
        let max_g = p.g_th(0.0);
        for (i, &x) in grid.x.iter().enumerate() {
            let total = st.p_plus[i] + st.p_minus[i];
            assert!((total - p.g_th(x)).abs() < 1e-3 * max_g);
            // Equal populations at ω = 0.
            assert!((st.p_plus[i] - st.p_minus[i]).abs() < 1e-12 * max_g);
        }
        assert!((st.total_mass(grid.h) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_conserves_mass_and_annihilates_stationary() {
        let grid = Grid::symmetric(60.0, 240).unwrap();
        let fp = FokkerPlanck::new(params(40.0), 2.0, 1.0, grid.clone(), DriftScheme::Central).unwrap();
        let st = fp.stationary().unwrap();
        let d = fp.derivative(&st);
        let scale = st.p_plus.iter().copied().fold(0.0, f64::max) * fp.operator_bound();
        assert!(d.p_plus.iter().chain(&d.p_minus).all(|v| v.abs() < 1e-12 * scale));
        let init = fp.product_state(|x| (-(x - 5.0) * (x - 5.0) / 20.0).exp(), [[Complex64::new(0.5, 0.0), Complex64::new(0.3, 0.2)], [Complex64::new(0.3, -0.2), Complex64::new(0.5, 0.0)]]);
        let d = fp.derivative(&init);
        assert!(d.total_mass(grid.h).abs() < 1e-14);
    }

    #[test]
    fn coherence_decays_at_the_algebraic_rate() {
        let grid = Grid::symmetric(10.0, 20).unwrap();
        let fp = FokkerPlanck::new(params(5.0), 0.7, 1.3, grid.clone(), DriftScheme::Upwind).unwrap();
        let init = fp.product_state(|_| 1.0, [[Complex64::new(0.5, 0.0), Complex64::new(0.4, 0.0)], [Complex64::new(0.4, 0.0), Complex64::new(0.5, 0.0)]]);
        let t_end = 2.0;
        let traj = fp.integrate(&init, 1e-3, t_end, 0.5).unwrap();
        for (i, &x) in grid.x.iter().enumerate() {
            let om = params(5.0).omega(x);
            let up = 1.3 * (-om).exp();
            let rate = 0.5 * (1.3 + up) + 0.7;
            let expected = init.coherence[i] * Complex64::new(0.0, -om * t_end).exp() * (-rate * t_end).exp();
            assert!((traj.final_fields.coherence[i] - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn unstable_step_is_rejected() {
        let grid = Grid::symmetric(10.0, 40).unwrap();
        let fp = FokkerPlanck::new(params(1.0), 1.0, 1.0, grid, DriftScheme::Central).unwrap();
        let init = fp.stationary().unwrap();
        let dt = 2.0 * fp.max_stable_dt();
        assert!(matches!(fp.integrate(&init, dt, 1.0, 0.5), Err(Error::CflViolation { .. })));
    }

    #[test]
    fn central_scheme_rejects_negative_rates() {
        let p = ContinuumParams { beta: 1.0, omega0: 0.0, delta_omega: 0.0, delta_e: 2.0, delta_x: 1.0 };
        let grid = Grid::symmetric(10.0, 20).unwrap();
        assert!(FokkerPlanck::new(p, 1.0, 1.0, grid.clone(), DriftScheme::Central).is_err());
        assert!(FokkerPlanck::new(p, 1.0, 1.0, grid, DriftScheme::Upwind).is_ok());
    }

    #[test]
    fn pure_state_start_records_positivity() {
        let grid = Grid::symmetric(30.0, 60).unwrap();
        let fp = FokkerPlanck::new(params(20.0), 1.0, 1.0, grid, DriftScheme::Central).unwrap();
        let half = Complex64::new(0.5, 0.0);
        let init = fp.product_state(|x| (-x * x / 4.0).exp(), [[half, half], [half, half]]);
        let dt = 0.5 * fp.max_stable_dt();
        let traj = fp.integrate(&init, dt, 5.0, 0.25).unwrap();
        assert!(traj.most_negative <= 0.0);
        assert!(traj.total_mass.iter().all(|m| (m - 1.0).abs() < 1e-12));
    }
}
