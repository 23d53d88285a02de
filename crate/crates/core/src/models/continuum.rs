//! Smooth limit of the lattice: `x = δx·n` with `βδE ≪ 1`.

use alloc::vec::Vec;

use crate::fmath;
use crate::{Error, Result};

/// Above this `βδE` the continuum approximation is flagged as unreliable.
pub const SMOOTH_LIMIT_WARNING: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuumParams {
    pub beta: f64,
    pub omega0: f64,
    pub delta_omega: f64,
    pub delta_e: f64,
    pub delta_x: f64,
}

/// `sgn(x)` with `sgn(0) = 0`, the mean of the one-sided limits.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl ContinuumParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.beta, self.omega0, self.delta_omega, self.delta_e, self.delta_x];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("continuum parameters must be finite".into()));
        }
        if self.beta <= 0.0 || self.delta_e <= 0.0 || self.delta_x <= 0.0 {
            return Err(Error::InvalidParameter("need beta, delta_E and delta_x positive".into()));
        }
        Ok(())
    }

    /// `βδE` exceeds [`SMOOTH_LIMIT_WARNING`].
    pub fn outside_smooth_limit(&self) -> bool {
        self.beta * self.delta_e > SMOOTH_LIMIT_WARNING
    }

    /// Local splitting `ω_x = ω_0 + δω|x|/δx`.
    pub fn omega(&self, x: f64) -> f64 {
        self.omega0 + self.delta_omega * x.abs() / self.delta_x
    }

    /// Classical Gaussian density `√(βδE/(πδx²))·e^{−βδE x²/δx²}`.
    pub fn g_th(&self, x: f64) -> f64 {
        let a = self.beta * self.delta_e / (self.delta_x * self.delta_x);
        fmath::sqrt(a / core::f64::consts::PI) * fmath::exp(-a * x * x)
    }

    /// Closed-form normalization of `G_th(x)·cosh(βω_x/2)`.
    pub fn z_th(&self) -> f64 {
        let b = self.beta;
        fmath::exp(b * self.delta_omega * self.delta_omega / (16.0 * self.delta_e))
            * (fmath::cosh(b * self.omega0 / 2.0)
                + fmath::erf(b * self.delta_omega / (4.0 * fmath::sqrt(b * self.delta_e))) * fmath::sinh(b * self.omega0 / 2.0))
    }

    pub fn unnormalized_weight(&self, x: f64) -> f64 {
        // G·cosh evaluated as a sum of two Gaussians to avoid overflow of cosh.
        let a = self.beta * self.delta_e / (self.delta_x * self.delta_x);
        let half = self.beta * self.omega(x) / 2.0;
        let pref = 0.5 * fmath::sqrt(a / core::f64::consts::PI);
        pref * (fmath::exp(-a * x * x + half) + fmath::exp(-a * x * x - half))
    }

    /// Classical weight density `w(x)`.
    pub fn weight(&self, x: f64) -> f64 {
        self.unnormalized_weight(x) / self.z_th()
    }

    /// `f_±(x) = −2[δE·x/δx² ± sgn(x)·δω/(4δx)]`.
    pub fn forces(&self, x: f64) -> (f64, f64) {
        let lin = self.delta_e * x / (self.delta_x * self.delta_x);
        let kink = sgn(x) * self.delta_omega / (4.0 * self.delta_x);
        (-2.0 * (lin + kink), -2.0 * (lin - kink))
    }

    /// `V_±(x) = δE·(x/δx ± sgn(x)·δω/(4δE))²`.
    pub fn potentials(&self, x: f64) -> (f64, f64) {
        let u = x / self.delta_x;
        let s = sgn(x) * self.delta_omega / (4.0 * self.delta_e);
        (self.delta_e * (u + s) * (u + s), self.delta_e * (u - s) * (u - s))
    }

    /// `|x|` of the minima of `V_−` (the maxima of `w` in the bimodal regime).
    pub fn shifted_minimum(&self) -> f64 {
        self.delta_omega / (4.0 * self.delta_e) * self.delta_x
    }
}

/// Uniform cell-centered grid on `[x_min, x_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub h: f64,
    pub x: Vec<f64>,
}

impl Grid {
    pub fn uniform(x_min: f64, x_max: f64, cells: usize) -> Result<Self> {
        if !(x_max > x_min) || cells < 2 || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidParameter("grid needs x_max > x_min and at least two cells".into()));
        }
        let h = (x_max - x_min) / cells as f64;
        let x = (0..cells).map(|i| x_min + (i as f64 + 0.5) * h).collect();
        Ok(Self { x_min, h, x })
    }

    /// Symmetric grid `[−L, L]` with spacing `h`; an odd cell count puts a center at 0.
    pub fn symmetric(half_length: f64, cells: usize) -> Result<Self> {
        Self::uniform(-half_length, half_length, cells)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Position of face `i + ½`, between cells `i` and `i + 1`.
    pub fn face(&self, i: usize) -> f64 {
        self.x_min + (i + 1) as f64 * self.h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modality {
    Unimodal,
    Bimodal,
    Multimodal(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuumProfile {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub g_th: Vec<f64>,
    pub v_plus: Vec<f64>,
    pub v_minus: Vec<f64>,
    pub f_plus: Vec<f64>,
    pub f_minus: Vec<f64>,
    pub z_th: f64,
}

impl ContinuumProfile {
    pub fn new(p: &ContinuumParams, x: &[f64]) -> Result<Self> {
        p.validate()?;
        let z_th = p.z_th();
        let (mut f_plus, mut f_minus, mut v_plus, mut v_minus) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for &xi in x {
            let (fp, fm) = p.forces(xi);
            let (vp, vm) = p.potentials(xi);
            f_plus.push(fp);
            f_minus.push(fm);
            v_plus.push(vp);
            v_minus.push(vm);
        }
        Ok(Self {
            x: x.to_vec(),
            w: x.iter().map(|&xi| p.unnormalized_weight(xi) / z_th).collect(),
            g_th: x.iter().map(|&xi| p.g_th(xi)).collect(),
            v_plus,
            v_minus,
            f_plus,
            f_minus,
            z_th,
        })
    }

    /// Indices of strict interior local maxima of `w`.
    pub fn local_maxima(&self) -> Vec<usize> {
        local_maxima(&self.w)
    }

    pub fn modality(&self) -> Modality {
        match self.local_maxima().len() {
            0 | 1 => Modality::Unimodal,
            2 => Modality::Bimodal,
            k => Modality::Multimodal(k),
        }
    }

    /// `max|w − G_th| / max w`.
    pub fn gaussian_deviation(&self) -> f64 {
        let max_w = self.w.iter().copied().fold(0.0, f64::max);
        self.w.iter().zip(&self.g_th).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / max_w
    }
}

/// Indices `i` with `y[i−1] < y[i] ≥ y[i+1]`; plateaus count once.
pub fn local_maxima(y: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = y.len();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && y[j + 1] == y[i] {
            j += 1;
        }
        let left = i == 0 || y[i - 1] < y[i];
        let right = j + 1 == n || y[j + 1] < y[i];
        if left && right && n > 1 {
            out.push((i + j) / 2);
        }
        i = j + 1;
    }
    out
}

/// Refines a maximum of `f` inside `[a, b]` by golden-section search.
pub fn refine_maximum(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (fmath::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

impl ContinuumParams {
    /// Maxima of `w(x)` located on `grid` and refined to `tol`.
    pub fn peaks(&self, grid: &[f64], tol: f64) -> Vec<f64> {
        let w: Vec<f64> = grid.iter().map(|&x| self.unnormalized_weight(x)).collect();
        local_maxima(&w)
            .into_iter()
            .map(|i| {
                let a = grid[i.saturating_sub(1)];
                let b = grid[(i + 1).min(grid.len() - 1)];
                refine_maximum(|x| self.unnormalized_weight(x), a, b, tol)
            })
            .collect()
    }
}
