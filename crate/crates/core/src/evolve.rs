//! Time integration of hybrid master equations.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::fmath;
use crate::generator::{HybridGenerator, Level};
use crate::linalg::eigh;
use crate::state::HybridState;
use crate::thermal::hybrid_thermal;
use crate::{Error, Result};

/// Vector-space operations needed by the integrators.
pub trait OdeState: Clone {
    /// `self += a·x`.
    fn axpy(&mut self, a: f64, x: &Self);
    /// `max_k |err_k| / (atol + rtol·max(|y_k|, |y'_k|))`.
    fn error_ratio(err: &Self, y: &Self, y_new: &Self, rtol: f64, atol: f64) -> f64;
}

impl OdeState for Vec<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (y, v) in self.iter_mut().zip(x) {
            *y += a * v;
        }
    }

    fn error_ratio(err: &Self, y: &Self, y_new: &Self, rtol: f64, atol: f64) -> f64 {
        err.iter()
            .zip(y.iter().zip(y_new))
            .map(|(e, (a, b))| e.abs() / (atol + rtol * a.abs().max(b.abs())))
            .fold(0.0, f64::max)
    }
}

impl OdeState for HybridState {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.add_scaled(a, x);
    }

    fn error_ratio(err: &Self, y: &Self, y_new: &Self, rtol: f64, atol: f64) -> f64 {
        let mut worst = 0.0f64;
        for ((e, a), b) in err.blocks().iter().zip(y.blocks()).zip(y_new.blocks()) {
            for ((ze, za), zb) in e.as_slice().iter().zip(a.as_slice()).zip(b.as_slice()) {
                worst = worst.max(ze.norm() / (atol + rtol * za.norm().max(zb.norm())));
            }
        }
        worst
    }
}

/// One classical RK4 step.
pub fn rk4_step<S: OdeState>(f: &mut impl FnMut(&S, &mut S), y: &S, dt: f64) -> S {
    let mut k1 = y.clone();
    f(y, &mut k1);
    let mut tmp = y.clone();
    tmp.axpy(0.5 * dt, &k1);
    let mut k2 = y.clone();
    f(&tmp, &mut k2);
    tmp = y.clone();
    tmp.axpy(0.5 * dt, &k2);
    let mut k3 = y.clone();
    f(&tmp, &mut k3);
    tmp = y.clone();
    tmp.axpy(dt, &k3);
    let mut k4 = y.clone();
    f(&tmp, &mut k4);
    let mut out = y.clone();
    out.axpy(dt / 6.0, &k1);
    out.axpy(dt / 3.0, &k2);
    out.axpy(dt / 3.0, &k3);
    out.axpy(dt / 6.0, &k4);
    out
}

// Dormand–Prince 5(4) tableau (autonomous systems only, so no nodes).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince attempt: fifth-order solution and its error estimate.
pub fn dopri_step<S: OdeState>(f: &mut impl FnMut(&S, &mut S), y: &S, dt: f64) -> (S, S) {
    let mut k: Vec<S> = Vec::with_capacity(7);
    for s in 0..7 {
        let mut stage = y.clone();
        for (j, kj) in k.iter().enumerate() {
            if A[s][j] != 0.0 {
                stage.axpy(dt * A[s][j], kj);
            }
        }
        let mut ks = y.clone();
        f(&stage, &mut ks);
        k.push(ks);
    }
    let mut y5 = y.clone();
    let mut err = k[6].clone();
    err.axpy(-1.0, &k[6]);
    for s in 0..7 {
        if B5[s] != 0.0 {
            y5.axpy(dt * B5[s], &k[s]);
        }
        let d = B5[s] - B4[s];
        if d != 0.0 {
            err.axpy(dt * d, &k[s]);
        }
    }
    (y5, err)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Rk45,
}

/// Integration settings. `None` fields are resolved from the generator's rates.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step (RK4) or initial step (RK45); default `0.01/max_rate`.
    pub dt: Option<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Horizon; default `50/min_rate`.
    pub t_max: Option<f64>,
    /// Recording interval; defaults to the convergence spacing.
    pub sample_interval: Option<f64>,
    /// Spacing of convergence checks; default `1/min_rate`.
    pub convergence_spacing: Option<f64>,
    /// Number of consecutive checks that must agree.
    pub convergence_window: usize,
    pub convergence_tol: f64,
    pub stop_on_convergence: bool,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45,
            dt: None,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            t_max: None,
            sample_interval: None,
            convergence_spacing: None,
            convergence_window: 5,
            convergence_tol: 1e-9,
            stop_on_convergence: false,
            max_steps: 50_000_000,
        }
    }
}

/// Resolved, validated step and sampling parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub dt: f64,
    pub t_max: f64,
    pub sample_interval: f64,
    pub convergence_spacing: f64,
}

impl IntegratorConfig {
    pub fn rk4(dt: f64, t_max: f64) -> Self {
        Self { method: Method::Rk4, dt: Some(dt), t_max: Some(t_max), ..Self::default() }
    }

    pub fn rk45(t_max: f64) -> Self {
        Self { t_max: Some(t_max), ..Self::default() }
    }

    pub fn resolve(&self, max_rate: f64, min_rate: f64) -> Result<Schedule> {
        let spacing = self.convergence_spacing.unwrap_or(1.0 / min_rate);
        let s = Schedule {
            dt: self.dt.unwrap_or(0.01 / max_rate),
            t_max: self.t_max.unwrap_or(50.0 / min_rate),
            sample_interval: self.sample_interval.unwrap_or(spacing),
            convergence_spacing: spacing,
        };
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(alloc::format!("{name} must be finite and positive, got {x}")))
            }
        };
        positive("dt", s.dt)?;
        positive("t_max", s.t_max)?;
        positive("sample_interval", s.sample_interval)?;
        positive("convergence_spacing", s.convergence_spacing)?;
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol", self.abs_tol)?;
        positive("convergence_tol", self.convergence_tol)?;
        if self.convergence_window < 2 {
            return Err(Error::InvalidParameter("convergence_window must be at least 2".into()));
        }
        Ok(s)
    }
}

/// A recorded matrix element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observable {
    /// `⟨v|ρ^c|v⟩` for the eigenvector `v` of `level`.
    Population(Level),
    /// `⟨v_i|ρ^c|v_j⟩` between eigenvectors `i, j` of one label.
    Coherence { label: usize, i: usize, j: usize },
}

impl Observable {
    pub fn evaluate(&self, g: &HybridGenerator, state: &HybridState) -> Complex64 {
        match *self {
            Observable::Population(l) => {
                let v = g.eigenvector(l);
                state.block(l.label).sandwich(v, v)
            }
            Observable::Coherence { label, i, j } => state
                .block(label)
                .sandwich(g.eigenvector(Level::new(label, i)), g.eigenvector(Level::new(label, j))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub total_trace: f64,
    pub entropy: f64,
    pub dist_to_thermal: f64,
    /// Smallest eigenvalue over all blocks.
    pub min_eigenvalue: f64,
    pub populations: Vec<f64>,
    pub observables: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub observables: Vec<Observable>,
    pub final_state: HybridState,
    pub final_time: f64,
    /// Start of the first window of agreeing convergence checks.
    pub converged_at: Option<f64>,
    /// Trace distance of the last two convergence checks.
    pub last_change: f64,
    pub steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn converged(&self) -> bool {
        self.converged_at.is_some()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

/// Entropy (negative eigenvalues ignored) and minimal eigenvalue of a hybrid state.
pub(crate) fn spectral_summary(state: &HybridState) -> Result<(f64, f64)> {
    let mut s = 0.0;
    let mut min = f64::INFINITY;
    for b in state.blocks() {
        for &l in &eigh(&b.hermitian_part())?.eigenvalues {
            min = min.min(l);
            if l > 0.0 {
                s -= l * fmath::ln(l);
            }
        }
    }
    Ok((s, min))
}

fn record(
    g: &HybridGenerator,
    state: &HybridState,
    thermal: &HybridState,
    observables: &[Observable],
    t: f64,
) -> Result<Sample> {
    let (entropy, min_eigenvalue) = spectral_summary(state)?;
    Ok(Sample {
        t,
        total_trace: state.total_trace(),
        entropy,
        dist_to_thermal: state.trace_distance(thermal)?,
        min_eigenvalue,
        populations: state.classical_marginal(),
        observables: observables.iter().map(|o| o.evaluate(g, state)).collect(),
    })
}

/// Generic driver: advances `y` from `t` to `t_end` exactly.
pub(crate) struct Stepper {
    pub method: Method,
    pub dt: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub steps: usize,
    pub rejected: usize,
}

impl Stepper {
    pub fn advance<S: OdeState>(
        &mut self,
        f: &mut impl FnMut(&S, &mut S),
        y: &mut S,
        t: &mut f64,
        t_end: f64,
    ) -> Result<()> {
        match self.method {
            Method::Rk4 => {
                while *t < t_end {
                    let h = self.dt.min(t_end - *t);
                    *y = rk4_step(f, y, h);
                    self.count_step(*t)?;
                    *t = if t_end - *t <= self.dt { t_end } else { *t + h };
                }
            }
            Method::Rk45 => {
                while *t < t_end {
                    let remaining = t_end - *t;
                    let h = self.dt.min(remaining);
                    if h <= 1e-14 * t.abs().max(1.0) && remaining > h {
                        return Err(Error::StepUnderflow { t: *t });
                    }
                    let (y5, err) = dopri_step(f, y, h);
                    let ratio = S::error_ratio(&err, y, &y5, self.rel_tol, self.abs_tol);
                    if !ratio.is_finite() {
                        self.dt = h * 0.2;
                        self.rejected += 1;
                        continue;
                    }
                    let factor = if ratio == 0.0 { 5.0 } else { (0.9 * libm::pow(ratio, -0.2)).clamp(0.2, 5.0) };
                    if ratio <= 1.0 {
                        *y = y5;
                        self.count_step(*t)?;
                        *t = if h >= remaining { t_end } else { *t + h };
                        // A step clipped to land on t_end does not set the next step size.
                        if h == self.dt {
                            self.dt = h * factor;
                        }
                    } else {
                        self.rejected += 1;
                        self.dt = h * factor;
                    }
                }
            }
        }
        Ok(())
    }

    fn count_step(&mut self, t: f64) -> Result<()> {
        self.steps += 1;
        if self.steps > self.max_steps {
            return Err(Error::StepUnderflow { t });
        }
        Ok(())
    }
}

/// Merged, ascending event grid `{k·a} ∪ {k·b} ∪ {t_max}`.
pub(crate) fn event_times(t_max: f64, a: f64, b: f64) -> Vec<(f64, bool, bool)> {
    let mut out: Vec<(f64, bool, bool)> = Vec::new();
    let (mut i, mut j) = (1u64, 1u64);
    loop {
        let ta = i as f64 * a;
        let tb = j as f64 * b;
        let t = ta.min(tb);
        if t > t_max * (1.0 + 1e-12) {
            break;
        }
        let hit_a = (ta - t).abs() <= 1e-12 * t;
        let hit_b = (tb - t).abs() <= 1e-12 * t;
        out.push((t.min(t_max), hit_a, hit_b));
        if hit_a {
            i += 1;
        }
        if hit_b {
            j += 1;
        }
    }
    if out.last().is_none_or(|e| e.0 < t_max * (1.0 - 1e-12)) {
        out.push((t_max, true, false));
    }
    out
}

/// Evolves `initial` under `g`, recording observables and detecting convergence.
pub fn integrate(
    g: &HybridGenerator,
    initial: &HybridState,
    cfg: &IntegratorConfig,
    observables: &[Observable],
) -> Result<Trajectory> {
    g.check_state(initial)?;
    for b in initial.blocks() {
        b.check_hermitian()?;
    }
    if !initial.is_normalized(1e-9) {
        return Err(Error::NotNormalized { trace: initial.total_trace() });
    }
    let sched = cfg.resolve(g.max_rate(), g.min_rate())?;
    let (thermal, _) = hybrid_thermal(g.hamiltonian(), g.beta())?;

    let mut f = |y: &HybridState, out: &mut HybridState| g.derivative_into(y, out);
    let mut stepper = Stepper {
        method: cfg.method,
        dt: sched.dt,
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        max_steps: cfg.max_steps,
        steps: 0,
        rejected: 0,
    };

    let mut y = initial.clone();
    let mut t = 0.0;
    let mut samples = alloc::vec![record(g, &y, &thermal, observables, 0.0)?];
    let mut last_check = y.clone();
    let mut last_check_t = 0.0;
    let mut run_start: Option<f64> = Some(0.0);
    let mut run_len = 1usize;
    let mut converged_at = None;
    let mut last_change = f64::INFINITY;

    for (t_event, is_sample, is_check) in event_times(sched.t_max, sched.sample_interval, sched.convergence_spacing) {
        stepper.advance(&mut f, &mut y, &mut t, t_event)?;
        if is_sample || t_event == sched.t_max {
            samples.push(record(g, &y, &thermal, observables, t)?);
        }
        if is_check {
            last_change = y.trace_distance(&last_check)?;
            if last_change < cfg.convergence_tol {
                if run_start.is_none() {
                    run_start = Some(last_check_t);
                    run_len = 1;
                }
                run_len += 1;
            } else {
                run_start = None;
                run_len = 0;
            }
            last_check = y.clone();
            last_check_t = t;
            if converged_at.is_none() && run_len >= cfg.convergence_window {
                converged_at = run_start;
            }
            if converged_at.is_some() && cfg.stop_on_convergence {
                break;
            }
        }
    }

    Ok(Trajectory {
        samples,
        observables: observables.to_vec(),
        final_state: y,
        final_time: t,
        converged_at,
        last_change,
        steps: stepper.steps,
        rejected_steps: stepper.rejected,
    })
}

/// Final state of a converged trajectory, renormalized.
pub fn converged_state(traj: &Trajectory) -> Result<HybridState> {
    if !traj.converged() {
        return Err(Error::NotConverged { distance: traj.last_change });
    }
    Ok(traj.final_state.normalized())
}
