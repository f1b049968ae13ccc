//! The periodized FBI transform on the circle, its left inverse, and Lebeau's
//! inversion formula on the line, all by direct quadrature.
//!
//! With `φ(w, ξ) = wξ + (i/2)⟨ξ⟩w²`,
//!
//! ```text
//! Tu(x, ξ) = h^{−3/4} ∫ Σ_k e^{(i/h) φ(x − y + 2πk, ξ)} ⟨ξ⟩^{1/4} u(y) dy
//! Sv(y)    = h^{−3/4} ∬ Σ_k e^{−(i/h) conj φ(x − 2πk − y, ξ)} b(y − x + 2πk, ξ) v(x, ξ) dx dξ
//! b(w, ξ)  = √2 (2π)^{−3/2} ⟨ξ⟩^{1/4} (1 + (i/2) w ξ/⟨ξ⟩)
//! ```
//!
//! `ST = I` holds exactly in the continuum. Quadrature is trapezoidal in `y`
//! and `x` (spectral for periodic integrands) and in `ξ` on `[−Ξ, Ξ]`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::{Float, Zero};

use crate::{Error, Result, C64};

#[inline]
fn jb(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

/// Gaussian factors `e^{−⟨ξ⟩w²/(2h)}` below `e^{−GAUSS_CUTOFF}` are dropped.
const GAUSS_CUTOFF: f64 = 40.0;

/// Quadrature and truncation parameters for the circle transform.
#[derive(Clone, Debug, PartialEq)]
pub struct FbiConfig {
    pub h: f64,
    pub n_y: usize,
    pub n_xi: usize,
    pub xi_max: f64,
    pub k_max: usize,
}

impl FbiConfig {
    /// Validates the sizes and picks `k_max` as the smallest `k ≥ 2` with
    /// `e^{−(2πk − 4π)²/(2h)} < 1e−16` (using `⟨ξ⟩ ≥ 1`).
    pub fn new(h: f64, n_y: usize, n_xi: usize, xi_max: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("h must be positive, got {h}")));
        }
        if n_y < 16 || n_xi < 16 {
            return Err(Error::InvalidParameter(alloc::format!("need n_y, n_xi >= 16, got {n_y}, {n_xi}")));
        }
        if !(xi_max >= 4.0) || !xi_max.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("need xi_max >= 4, got {xi_max}")));
        }
        Ok(Self { h, n_y, n_xi, xi_max, k_max: Self::periodization_terms(h) })
    }

    pub fn periodization_terms(h: f64) -> usize {
        let target = -(1e-16f64.ln());
        let mut k = 2usize;
        loop {
            let w = 2.0 * PI * (k as f64 - 2.0);
            if w * w / (2.0 * h) > target {
                return k;
            }
            k += 1;
        }
    }

    /// Doubles `n_y` and `n_xi`.
    pub fn refined(&self) -> Self {
        Self { n_y: 2 * self.n_y, n_xi: 2 * self.n_xi, ..self.clone() }
    }

    /// `y_j = 2πj/n_y`, also used for `x`.
    pub fn y_grid(&self) -> Vec<f64> {
        (0..self.n_y).map(|j| 2.0 * PI * j as f64 / self.n_y as f64).collect()
    }

    /// Equispaced `ξ ∈ [−Ξ, Ξ]` with trapezoid weights.
    pub fn xi_grid(&self) -> (Vec<f64>, Vec<f64>) {
        let step = 2.0 * self.xi_max / (self.n_xi - 1) as f64;
        let nodes = (0..self.n_xi).map(|a| -self.xi_max + step * a as f64).collect();
        let mut w = vec![step; self.n_xi];
        w[0] *= 0.5;
        w[self.n_xi - 1] *= 0.5;
        (nodes, w)
    }
}

/// `u(y) = Σ_{|m| ≤ deg} c_m e^{imy}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    deg: usize,
    coeffs: Vec<C64>,
}

impl TrigPoly {
    /// `coeffs[m + deg]` is the coefficient of `e^{imy}`.
    pub fn new(deg: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != 2 * deg + 1 {
            return Err(Error::Dimension(alloc::format!("{} coefficients for degree {deg}", coeffs.len())));
        }
        Ok(Self { deg, coeffs })
    }

    pub fn from_terms(terms: &[(i64, C64)]) -> Self {
        let deg = terms.iter().map(|(m, _)| m.unsigned_abs() as usize).max().unwrap_or(0);
        let mut coeffs = vec![C64::zero(); 2 * deg + 1];
        for &(m, c) in terms {
            coeffs[(m + deg as i64) as usize] += c;
        }
        Self { deg, coeffs }
    }

    pub fn monomial(m: i64) -> Self {
        Self::from_terms(&[(m, C64::new(1.0, 0.0))])
    }

    pub fn deg(&self) -> usize {
        self.deg
    }

    pub fn coeff(&self, m: i64) -> C64 {
        let i = m + self.deg as i64;
        if i < 0 || i as usize >= self.coeffs.len() {
            C64::zero()
        } else {
            self.coeffs[i as usize]
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let d = self.deg as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - d, c))
    }

    pub fn eval(&self, y: f64) -> C64 {
        self.terms().map(|(m, c)| c * C64::from_polar(1.0, m as f64 * y)).sum()
    }

    /// `y ↦ u(y − s)`.
    pub fn shifted(&self, s: f64) -> Self {
        let coeffs = self.terms().map(|(m, c)| c * C64::from_polar(1.0, -(m as f64) * s)).collect();
        Self { deg: self.deg, coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        let deg = self.deg.max(other.deg);
        let d = deg as i64;
        Self { deg, coeffs: (-d..=d).map(|m| self.coeff(m) + other.coeff(m)).collect() }
    }

    /// Whether `u` is real-valued: `c_{−m} = conj c_m`.
    pub fn is_real(&self, tol: f64) -> bool {
        self.terms().all(|(m, c)| (c - self.coeff(-m).conj()).norm() <= tol)
    }
}

/// A function sampled on the phase-space grid of a config, row-major in
/// `(x, ξ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceGrid {
    pub n_x: usize,
    pub n_xi: usize,
    pub values: Vec<C64>,
}

impl PhaseSpaceGrid {
    pub fn zeros(cfg: &FbiConfig) -> Self {
        Self { n_x: cfg.n_y, n_xi: cfg.n_xi, values: vec![C64::zero(); cfg.n_y * cfg.n_xi] }
    }

    pub fn get(&self, ix: usize, ia: usize) -> C64 {
        self.values[ix * self.n_xi + ia]
    }
}

/// Adds `Σ_k e^{±(i/h)wξ − ⟨ξ⟩w²/(2h)}` with `w = base + 2πk` for the
/// significant `k`.
#[inline]
fn periodized_kernel(base: f64, xi: f64, jbxi: f64, h: f64, k_max: i64, sign: f64) -> C64 {
    let mut acc = C64::zero();
    for k in -k_max..=k_max {
        let w = base + 2.0 * PI * k as f64;
        let g = jbxi * w * w / (2.0 * h);
        if g > GAUSS_CUTOFF {
            continue;
        }
        acc += C64::from_polar((-g).exp(), sign * w * xi / h);
    }
    acc
}

fn samples(u: &TrigPoly, cfg: &FbiConfig) -> Vec<C64> {
    cfg.y_grid().iter().map(|&y| u.eval(y)).collect()
}

fn forward_from_samples(us: &[C64], cfg: &FbiConfig, x: f64, xi: f64) -> C64 {
    let dy = 2.0 * PI / cfg.n_y as f64;
    let j = jb(xi);
    let k_max = cfg.k_max as i64;
    let acc: C64 = us
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            if u.is_zero() {
                return C64::zero();
            }
            let y = 2.0 * PI * i as f64 / cfg.n_y as f64;
            periodized_kernel(x - y, xi, j, cfg.h, k_max, 1.0) * u
        })
        .sum();
    acc * (dy * cfg.h.powf(-0.75) * j.powf(0.25))
}

/// `Tu(x, ξ)` by trapezoid quadrature over `n_y` points.
pub fn fbi_forward(u: &TrigPoly, cfg: &FbiConfig, x: f64, xi: f64) -> C64 {
    forward_from_samples(&samples(u, cfg), cfg, x, xi)
}

/// `Tu` on the full phase-space grid (`x` on the `y` grid, `ξ` on the
/// trapezoid nodes).
pub fn fbi_forward_grid(u: &TrigPoly, cfg: &FbiConfig) -> PhaseSpaceGrid {
    let us = samples(u, cfg);
    let (xis, _) = cfg.xi_grid();
    let mut out = PhaseSpaceGrid::zeros(cfg);
    for (ix, &x) in cfg.y_grid().iter().enumerate() {
        for (ia, &xi) in xis.iter().enumerate() {
            out.values[ix * cfg.n_xi + ia] = forward_from_samples(&us, cfg, x, xi);
        }
    }
    out
}

/// `Sv(y)` for `v` sampled on the config's phase-space grid.
pub fn fbi_inverse(v: &PhaseSpaceGrid, cfg: &FbiConfig, y: f64) -> Result<C64> {
    if v.n_x != cfg.n_y || v.n_xi != cfg.n_xi {
        return Err(Error::Dimension(alloc::format!(
            "phase-space grid {}x{} vs config {}x{}",
            v.n_x,
            v.n_xi,
            cfg.n_y,
            cfg.n_xi
        )));
    }
    let (xis, wxi) = cfg.xi_grid();
    let dx = 2.0 * PI / cfg.n_y as f64;
    let norm = 2f64.sqrt() * (2.0 * PI).powf(-1.5) * cfg.h.powf(-0.75);
    let k_max = cfg.k_max as i64;
    let mut acc = C64::zero();
    for ix in 0..cfg.n_y {
        let x = 2.0 * PI * ix as f64 / cfg.n_y as f64;
        for (ia, (&xi, &w_xi)) in xis.iter().zip(&wxi).enumerate() {
            let val = v.get(ix, ia);
            if val.is_zero() {
                continue;
            }
            let j = jb(xi);
            // −(i/h) conj φ(w) = −(i/h) wξ − ⟨ξ⟩w²/(2h) with w = x − 2πk − y,
            // and the amplitude argument is −w
            let mut kern = C64::zero();
            for k in -k_max..=k_max {
                let w = x - 2.0 * PI * k as f64 - y;
                let g = j * w * w / (2.0 * cfg.h);
                if g > GAUSS_CUTOFF {
                    continue;
                }
                let amp = C64::new(1.0, -0.5 * w * xi / j);
                kern += C64::from_polar((-g).exp(), -w * xi / cfg.h) * amp;
            }
            acc += kern * val * (w_xi * j.powf(0.25));
        }
    }
    Ok(acc * (norm * dx))
}

#[derive(Clone, Debug, PartialEq)]
pub struct InversionReport {
    /// `‖S(Tu) − u‖₂ / ‖u‖₂` on the `y` grid.
    pub rel_error: f64,
    /// Largest `|Im S(Tu)|` relative to `‖u‖_∞`; meaningful for real `u`.
    pub max_imag: f64,
    pub reconstruction: Vec<C64>,
}

/// Applies `S ∘ T` to `u` and compares with `u` on the `y` grid.
pub fn check_inversion(u: &TrigPoly, cfg: &FbiConfig) -> Result<InversionReport> {
    let tu = fbi_forward_grid(u, cfg);
    let ys = cfg.y_grid();
    let exact = samples(u, cfg);
    let rec: Vec<C64> = ys.iter().map(|&y| fbi_inverse(&tu, cfg, y)).collect::<Result<_>>()?;
    let err: f64 = rec.iter().zip(&exact).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let nrm: f64 = exact.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nrm == 0.0 {
        return Err(Error::InvalidParameter("u vanishes on the grid".into()));
    }
    let sup = exact.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_imag = rec.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / sup;
    Ok(InversionReport { rel_error: err / nrm, max_imag, reconstruction: rec })
}

/// Quadrature for Lebeau's formula on `ℝ`: `y` on `[x − L, x + L]`, `ξ` on
/// `[−Ξ, Ξ]`, both trapezoid.
#[derive(Clone, Debug, PartialEq)]
pub struct LebeauConfig {
    pub h: f64,
    pub a: f64,
    pub half_width: f64,
    pub n_y: usize,
    pub xi_max: f64,
    pub n_xi: usize,
}

impl LebeauConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.a > 0.0 && self.half_width > 0.0 && self.xi_max > 0.0) {
            return Err(Error::InvalidParameter("h, a, half_width and xi_max must be positive".into()));
        }
        if self.n_y < 16 || self.n_xi < 16 {
            return Err(Error::InvalidParameter("need n_y, n_xi >= 16".into()));
        }
        Ok(())
    }
}

/// `exp(−(y − center)²/(2 width²))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianBump {
    pub center: f64,
    pub width: f64,
}

impl GaussianBump {
    pub fn eval(&self, y: f64) -> f64 {
        let t = (y - self.center) / self.width;
        (-0.5 * t * t).exp()
    }
}

/// Right-hand side of Lebeau's formula at `x`:
/// `(2πh)^{−1} ∬ e^{(i/h)(x−y)ξ − (a/h)⟨ξ⟩(x−y)²} (1 + ia(x−y)ξ/⟨ξ⟩) u(y) dy dξ`.
pub fn lebeau_rhs(u: impl Fn(f64) -> f64, cfg: &LebeauConfig, x: f64) -> Result<C64> {
    cfg.validate()?;
    let dy = 2.0 * cfg.half_width / (cfg.n_y - 1) as f64;
    let dxi = 2.0 * cfg.xi_max / (cfg.n_xi - 1) as f64;
    let trap = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let us: Vec<(f64, f64)> = (0..cfg.n_y)
        .map(|i| {
            let y = x - cfg.half_width + dy * i as f64;
            (x - y, u(y) * trap(i, cfg.n_y))
        })
        .collect();
    let mut acc = C64::zero();
    for ia in 0..cfg.n_xi {
        let xi = -cfg.xi_max + dxi * ia as f64;
        let j = jb(xi);
        let mut inner = C64::zero();
        for &(w, uy) in &us {
            if uy == 0.0 {
                continue;
            }
            let g = cfg.a * j * w * w / cfg.h;
            if g > GAUSS_CUTOFF {
                continue;
            }
            let amp = C64::new(1.0, cfg.a * w * xi / j);
            inner += C64::from_polar((-g).exp(), w * xi / cfg.h) * amp * uy;
        }
        acc += inner * trap(ia, cfg.n_xi);
    }
    Ok(acc * (dy * dxi / (2.0 * PI * cfg.h)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LebeauReport {
    /// `(x, quadrature, u(x))` per sample point.
    pub samples: Vec<(f64, C64, f64)>,
    /// `max |quadrature − u(x)| / max |u(x)|` over the samples.
    pub rel_error: f64,
}

pub fn check_lebeau(u: impl Fn(f64) -> f64, cfg: &LebeauConfig, xs: &[f64]) -> Result<LebeauReport> {
    let mut samples = Vec::with_capacity(xs.len());
    for &x in xs {
        samples.push((x, lebeau_rhs(&u, cfg, x)?, u(x)));
    }
    let err = samples.iter().map(|(_, q, e)| (q - e).norm()).fold(0.0, f64::max);
    let scale = samples.iter().map(|(_, _, e)| e.abs()).fold(0.0, f64::max);
    let rel_error = if scale == 0.0 { err } else { err / scale };
    Ok(LebeauReport { samples, rel_error })
}
