//! Physical deformations `Γ_θ = {x + iθG0(x)}` of the circle, the associated
//! phase-space geometry, and a sampled check of the escape condition
//! `H_p G > 0` on the characteristic set.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;


#[allow(unused_imports)]
use num_traits::Float;
use crate::expr::Expr;
use crate::symbols::PhaseSymbol;
use crate::{Error, Result, C64};

/// Variable names accepted in deformation-field expressions.
pub const FIELD_VARS: &[&str] = &["x", "x1"];

#[derive(Clone, Debug, PartialEq)]
enum Field {
    /// `G0(x) = −2 cos x`
    NegTwoCos,
    Parsed { expr: Expr, deriv: Expr, source: String },
}

/// First component of the deformation field; the second component is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationSpec {
    pub theta: f64,
    field: Field,
}

impl DeformationSpec {
    /// The default field `G0(x1) = −2 cos x1`.
    pub fn new(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(Self { theta, field: Field::NegTwoCos })
    }

    /// Parses a `2π`-periodic field `G0(x)`.
    pub fn with_field(theta: f64, g0: &str) -> Result<Self> {
        check_theta(theta)?;
        let expr = Expr::parse(g0, FIELD_VARS)?;
        let deriv = expr.derivative();
        let spec = Self { theta, field: Field::Parsed { expr, deriv, source: g0.to_string() } };
        let mut worst = 0.0f64;
        for i in 0..256 {
            let x = -PI + 4.0 * PI * i as f64 / 256.0;
            let (a, b) = (spec.g0(x), spec.g0(x + 2.0 * PI));
            if !a.is_finite() {
                return Err(Error::InvalidParameter(alloc::format!("G0({x}) is not finite")));
            }
            worst = worst.max((a - b).abs() / (1.0 + a.abs()));
        }
        if worst > 1e-12 {
            return Err(Error::NotPeriodic(worst));
        }
        Ok(spec)
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(Self { theta, field: self.field.clone() })
    }

    pub fn g0(&self, x: f64) -> f64 {
        match &self.field {
            Field::NegTwoCos => -2.0 * x.cos(),
            Field::Parsed { expr, .. } => expr.eval(x),
        }
    }

    pub fn g0_prime(&self, x: f64) -> f64 {
        match &self.field {
            Field::NegTwoCos => 2.0 * x.sin(),
            Field::Parsed { deriv, .. } => deriv.eval(x),
        }
    }

    pub fn field_source(&self) -> Option<&str> {
        match &self.field {
            Field::NegTwoCos => None,
            Field::Parsed { source, .. } => Some(source),
        }
    }

    /// `max G0 − min G0`, sampled on 1024 points.
    pub fn oscillation(&self) -> f64 {
        let (lo, hi) = (0..1024).map(|i| self.g0(2.0 * PI * i as f64 / 1024.0)).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), v| (lo.min(v), hi.max(v)),
        );
        hi - lo
    }

    /// The escape function `G(x, ξ) = ⟨(G0(x1), 0), ξ⟩`.
    pub fn escape_function(&self) -> LinearEscape<'_> {
        LinearEscape { spec: self }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta >= 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!("theta must be finite and non-negative, got {theta}")))
    }
}

/// `γ_θ(x) = x + iθG0(x)`.
pub fn gamma(d: &DeformationSpec, x: f64) -> C64 {
    C64::new(x, d.theta * d.g0(x))
}

/// `γ'_θ(x) = 1 + iθG0'(x)`.
pub fn gamma_prime(d: &DeformationSpec, x: f64) -> C64 {
    C64::new(1.0, d.theta * d.g0_prime(x))
}

/// A real escape function `G(x, ξ)` on `T*Tⁿ` with its gradients.
pub trait EscapeFunction {
    fn value(&self, x: &[f64], xi: &[f64]) -> f64;
    fn grad_x(&self, x: &[f64], xi: &[f64]) -> Vec<f64>;
    fn grad_xi(&self, x: &[f64], xi: &[f64]) -> Vec<f64>;
}

/// `G(x, ξ) = G0(x1) ξ1` on `T*T²`.
#[derive(Clone, Copy, Debug)]
pub struct LinearEscape<'a> {
    spec: &'a DeformationSpec,
}

impl EscapeFunction for LinearEscape<'_> {
    fn value(&self, x: &[f64], xi: &[f64]) -> f64 {
        self.spec.g0(x[0]) * xi[0]
    }

    fn grad_x(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        let mut g = alloc::vec![0.0; x.len()];
        g[0] = self.spec.g0_prime(x[0]) * xi[0];
        g
    }

    fn grad_xi(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        let mut g = alloc::vec![0.0; xi.len()];
        g[0] = self.spec.g0(x[0]);
        g
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometrySample {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    /// `(x + iG_ξ, ξ − iG_x)`.
    pub lambda_x: Vec<C64>,
    pub lambda_xi: Vec<C64>,
    /// `H = G − ξ·G_ξ`.
    pub h_weight: f64,
}

/// Point of the deformed manifold `Λ` above `(x, ξ)` together with its weight.
pub fn lambda_point(g: &impl EscapeFunction, x: &[f64], xi: &[f64]) -> GeometrySample {
    let gx = g.grad_x(x, xi);
    let gxi = g.grad_xi(x, xi);
    let lambda_x = x.iter().zip(&gxi).map(|(&a, &b)| C64::new(a, b)).collect();
    let lambda_xi = xi.iter().zip(&gx).map(|(&a, &b)| C64::new(a, -b)).collect();
    let h_weight = g.value(x, xi) - xi.iter().zip(&gxi).map(|(a, b)| a * b).sum::<f64>();
    GeometrySample { x: x.to_vec(), xi: xi.to_vec(), lambda_x, lambda_xi, h_weight }
}

/// Central-difference step used for `H_p G`.
pub const FD_STEP: f64 = 1e-5;

/// `H_p G = ∂_ξ p · ∂_x G − ∂_x p · ∂_ξ G` by central differences of both `p`
/// and `G` with step [`FD_STEP`].
pub fn hpg_finite_difference(s: &impl PhaseSymbol, d: &DeformationSpec, x1: f64, xi1: f64, xi2: f64) -> f64 {
    let h = FD_STEP;
    let g = |x: f64, a: f64| d.g0(x) * a;
    let dp_dx1 = (s.value(x1 + h, xi1, xi2) - s.value(x1 - h, xi1, xi2)) / (2.0 * h);
    let dp_dxi1 = (s.value(x1, xi1 + h, xi2) - s.value(x1, xi1 - h, xi2)) / (2.0 * h);
    let dg_dx1 = (g(x1 + h, xi1) - g(x1 - h, xi1)) / (2.0 * h);
    let dg_dxi1 = (g(x1, xi1 + h) - g(x1, xi1 - h)) / (2.0 * h);
    // G carries no x2 or ξ2 dependence
    dp_dxi1 * dg_dx1 - dp_dx1 * dg_dxi1
}

/// `H_p G` from the analytic gradients of `p` and `G0`.
pub fn hpg_analytic(s: &impl PhaseSymbol, d: &DeformationSpec, x1: f64, xi1: f64, xi2: f64) -> f64 {
    let [dp_dx1, dp_dxi1, _] = s.gradient(x1, xi1, xi2);
    dp_dxi1 * d.g0_prime(x1) * xi1 - dp_dx1 * d.g0(x1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EscapeOptions {
    /// Outer radius of the sampled frequency region.
    pub xi_max: f64,
    /// Inner radius `C`; only `|ξ| > C` is sampled.
    pub c: f64,
    /// Points with `|p| < tol` count as characteristic.
    pub tol: f64,
    pub n_x: usize,
    pub n_xi: usize,
}

impl Default for EscapeOptions {
    fn default() -> Self {
        Self { xi_max: 40.0, c: 10.0, tol: 0.05, n_x: 256, n_xi: 161 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EscapeReport {
    pub min_hpg: f64,
    /// `(x1, ξ1, ξ2)` where the minimum is attained.
    pub argmin: [f64; 3],
    pub samples: usize,
    pub ok: bool,
}

impl EscapeReport {
    fn empty() -> Self {
        Self { min_hpg: f64::INFINITY, argmin: [f64::NAN; 3], samples: 0, ok: false }
    }

    fn push(&mut self, h: f64, at: [f64; 3]) {
        self.samples += 1;
        if h < self.min_hpg {
            self.min_hpg = h;
            self.argmin = at;
        }
    }

    /// Combines reports over disjoint sample sets.
    pub fn merge(mut self, other: Self) -> Self {
        self.samples += other.samples;
        if other.min_hpg < self.min_hpg {
            self.min_hpg = other.min_hpg;
            self.argmin = other.argmin;
        }
        self.ok = self.samples > 0 && self.min_hpg > 0.0;
        self
    }

    fn finish(mut self) -> Result<Self> {
        if self.samples == 0 {
            return Err(Error::EmptySample);
        }
        self.ok = self.min_hpg > 0.0;
        Ok(self)
    }
}

fn check_options(o: &EscapeOptions) -> Result<()> {
    if !(o.xi_max > o.c) || o.c < 0.0 {
        return Err(Error::InvalidParameter(alloc::format!("need xi_max > C >= 0, got {} and {}", o.xi_max, o.c)));
    }
    if o.n_x == 0 || o.n_xi < 2 || !(o.tol >= 0.0) {
        return Err(Error::InvalidParameter("escape sample sizes must be positive and tol >= 0".into()));
    }
    Ok(())
}

fn xi_axis(o: &EscapeOptions) -> impl Iterator<Item = f64> + Clone + '_ {
    let step = 2.0 * o.xi_max / (o.n_xi - 1) as f64;
    (0..o.n_xi).map(move |i| -o.xi_max + step * i as f64)
}

/// Samples `{(x1, ξ1, ξ2) : |p| < tol, C < |ξ| ≤ xi_max}` on a product grid
/// (`n_x` points in `x1`, `n_xi × n_xi` Cartesian points in `ξ`) and returns the
/// minimum of the finite-difference `H_p G` over it.
///
/// `x1` indices can be restricted with `x_range` to split the work.
pub fn verify_escape_range(
    s: &impl PhaseSymbol,
    d: &DeformationSpec,
    o: &EscapeOptions,
    x_range: core::ops::Range<usize>,
) -> Result<EscapeReport> {
    check_options(o)?;
    let mut report = EscapeReport::empty();
    for ix in x_range {
        let x1 = 2.0 * PI * ix as f64 / o.n_x as f64;
        for xi1 in xi_axis(o) {
            for xi2 in xi_axis(o) {
                let r = (xi1 * xi1 + xi2 * xi2).sqrt();
                if r <= o.c || r > o.xi_max {
                    continue;
                }
                if s.value(x1, xi1, xi2).abs() < o.tol {
                    report.push(hpg_finite_difference(s, d, x1, xi1, xi2), [x1, xi1, xi2]);
                }
            }
        }
    }
    report.finish()
}

/// [`verify_escape_range`] over the whole `x1` grid.
pub fn verify_escape(s: &impl PhaseSymbol, d: &DeformationSpec, o: &EscapeOptions) -> Result<EscapeReport> {
    verify_escape_range(s, d, o, 0..o.n_x)
}

/// Escape check restricted to the per-mode problems: `ξ2 = n` for each integer
/// mode in `modes`, `C < |ξ1| ≤ xi_max`.
pub fn verify_escape_modes(
    s: &impl PhaseSymbol,
    d: &DeformationSpec,
    o: &EscapeOptions,
    modes: core::ops::RangeInclusive<i64>,
) -> Result<EscapeReport> {
    check_options(o)?;
    let mut report = EscapeReport::empty();
    for n in modes {
        let xi2 = n as f64;
        for ix in 0..o.n_x {
            let x1 = 2.0 * PI * ix as f64 / o.n_x as f64;
            for xi1 in xi_axis(o) {
                if xi1.abs() <= o.c {
                    continue;
                }
                if s.value(x1, xi1, xi2).abs() < o.tol {
                    report.push(hpg_finite_difference(s, d, x1, xi1, xi2), [x1, xi1, xi2]);
                }
            }
        }
    }
    report.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{builtin_symbol, japanese_bracket};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gamma_examples() {
        let flat = DeformationSpec::new(0.0).unwrap();
        for x in [0.0, 1.0, 4.0] {
            assert_eq!(gamma(&flat, x), C64::new(x, 0.0));
            assert_eq!(gamma_prime(&flat, x), C64::new(1.0, 0.0));
        }
        let d = DeformationSpec::new(0.8).unwrap();
        assert!((gamma(&d, 0.0) - C64::new(0.0, -1.6)).norm() < 1e-15);
        for t in [0.1, 0.8, 3.0] {
            let g = gamma(&d.with_theta(t).unwrap(), PI / 2.0);
            assert!((g - C64::new(PI / 2.0, 0.0)).norm() < 1e-15);
        }
        assert!((gamma_prime(&d, PI / 2.0) - C64::new(1.0, 1.6)).norm() < 1e-15);
    }

    #[test]
    fn gamma_prime_never_small_for_default_field() {
        for t in [0.0, 0.4, 0.8, 5.0] {
            let d = DeformationSpec::new(t).unwrap();
            for i in 0..400 {
                assert!(gamma_prime(&d, i as f64 * 0.0157).norm() >= 1.0);
            }
        }
    }

    #[test]
    fn contours_agree_at_zeros_of_field() {
        let (a, b) = (DeformationSpec::new(0.3).unwrap(), DeformationSpec::new(0.9).unwrap());
        for x in [PI / 2.0, 3.0 * PI / 2.0] {
            assert!((gamma(&a, x) - gamma(&b, x)).norm() < 1e-15);
        }
    }

    #[test]
    fn parsed_fields() {
        let d = DeformationSpec::with_field(0.5, "-2*cos(x)").unwrap();
        let reference = DeformationSpec::new(0.5).unwrap();
        for i in 0..50 {
            let x = i as f64 * 0.13;
            assert!((gamma(&d, x) - gamma(&reference, x)).norm() < 1e-15);
            assert!((gamma_prime(&d, x) - gamma_prime(&reference, x)).norm() < 1e-15);
        }
        assert!(matches!(DeformationSpec::with_field(0.5, "x"), Err(Error::NotPeriodic(_))));
        assert!(DeformationSpec::with_field(0.5, "sin(2*x) + cos(x)^2").is_ok());
        assert!(DeformationSpec::new(-0.1).is_err());
    }

    struct Zero;
    impl EscapeFunction for Zero {
        fn value(&self, _: &[f64], _: &[f64]) -> f64 {
            0.0
        }
        fn grad_x(&self, x: &[f64], _: &[f64]) -> Vec<f64> {
            alloc::vec![0.0; x.len()]
        }
        fn grad_xi(&self, _: &[f64], xi: &[f64]) -> Vec<f64> {
            alloc::vec![0.0; xi.len()]
        }
    }

    struct Norm;
    impl EscapeFunction for Norm {
        fn value(&self, _: &[f64], xi: &[f64]) -> f64 {
            xi.iter().map(|v| v * v).sum::<f64>().sqrt()
        }
        fn grad_x(&self, x: &[f64], _: &[f64]) -> Vec<f64> {
            alloc::vec![0.0; x.len()]
        }
        fn grad_xi(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
            let r = self.value(x, xi);
            xi.iter().map(|v| v / r).collect()
        }
    }

    struct Square;
    impl EscapeFunction for Square {
        fn value(&self, _: &[f64], xi: &[f64]) -> f64 {
            xi[0] * xi[0]
        }
        fn grad_x(&self, x: &[f64], _: &[f64]) -> Vec<f64> {
            alloc::vec![0.0; x.len()]
        }
        fn grad_xi(&self, _: &[f64], xi: &[f64]) -> Vec<f64> {
            let mut g = alloc::vec![0.0; xi.len()];
            g[0] = 2.0 * xi[0];
            g
        }
    }

    #[test]
    fn lambda_point_examples() {
        let s = lambda_point(&Zero, &[0.3, 1.0], &[2.0, -1.0]);
        assert_eq!(s.lambda_x, [C64::new(0.3, 0.0), C64::new(1.0, 0.0)]);
        assert_eq!(s.lambda_xi, [C64::new(2.0, 0.0), C64::new(-1.0, 0.0)]);
        assert_eq!(s.h_weight, 0.0);

        let s = lambda_point(&Norm, &[0.5, 0.0], &[1.0, 0.0]);
        assert!(s.h_weight.abs() < 1e-15);
        assert!((s.lambda_x[0] - C64::new(0.5, 1.0)).norm() < 1e-15);

        let s = lambda_point(&Square, &[0.5, 0.0], &[3.0, 0.0]);
        assert!((s.h_weight + 9.0).abs() < 1e-14);
    }

    #[test]
    fn linear_escape_has_zero_weight() {
        let d = DeformationSpec::new(0.8).unwrap();
        let g = d.escape_function();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = [rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI)];
            let xi = [rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0)];
            let s = lambda_point(&g, &x, &xi);
            assert!(s.h_weight.abs() < 1e-12);
            // Λ is a graph over the real point with imaginary part (G_ξ, −G_x)
            assert!((s.lambda_x[0].im - d.g0(x[0])).abs() < 1e-15);
            assert!((s.lambda_xi[0].im + d.g0_prime(x[0]) * xi[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_difference_bracket_matches_analytic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = DeformationSpec::new(0.8).unwrap();
        for name in ["fig1", "fig2"] {
            let s = builtin_symbol(name).unwrap();
            for _ in 0..100 {
                let (x, a, b) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
                let fd = hpg_finite_difference(&s, &d, x, a, b);
                let an = hpg_analytic(&s, &d, x, a, b);
                assert!((fd - an).abs() < 1e-6, "{name}: {fd} vs {an}");
            }
        }
    }

    /// `p = ξ2/⟨ξ⟩` alone.
    struct ModeTermOnly;
    impl PhaseSymbol for ModeTermOnly {
        fn value(&self, _: f64, xi1: f64, xi2: f64) -> f64 {
            xi2 / japanese_bracket(xi1, xi2)
        }
        fn gradient(&self, _: f64, xi1: f64, xi2: f64) -> [f64; 3] {
            let jb = japanese_bracket(xi1, xi2);
            [0.0, -xi1 * xi2 / (jb * jb * jb), (1.0 + xi1 * xi1) / (jb * jb * jb)]
        }
    }

    #[test]
    fn escape_fails_without_x_dependence() {
        let d = DeformationSpec::new(0.8).unwrap();
        let r = verify_escape(&ModeTermOnly, &d, &EscapeOptions::default()).unwrap();
        assert!(!r.ok);
        // |H_pG| = |p| |G0'| ξ1²/⟨ξ⟩² ≤ tol · 2 on the sample
        assert!(r.min_hpg < 0.0 && r.min_hpg >= -2.0 * 0.05, "{}", r.min_hpg);
    }

    #[test]
    fn escape_holds_for_fig2() {
        let d = DeformationSpec::new(0.8).unwrap();
        let s = builtin_symbol("fig2").unwrap();
        let r = verify_escape(&s, &d, &EscapeOptions::default()).unwrap();
        assert!(r.ok && r.min_hpg > 2.0, "{r:?}");
    }

    #[test]
    fn fig1_escape_fails_in_full_phase_space_but_holds_per_mode() {
        let d = DeformationSpec::new(0.8).unwrap();
        let s = builtin_symbol("fig1").unwrap();
        let o = EscapeOptions::default();
        let r = verify_escape(&s, &d, &o).unwrap();
        // bounded ξ1 ≈ 0.5 with large ξ2: 1 − V_m(ξ1) < 1/2 there
        assert!(!r.ok);
        assert!(r.min_hpg < -0.5 && r.min_hpg > -0.7, "{r:?}");
        assert!((r.argmin[1] - 0.5).abs() < 1e-12);

        let r = verify_escape_modes(&s, &d, &o, -20..=20).unwrap();
        assert!(r.ok && r.min_hpg > 3.0, "{r:?}");
    }

    #[test]
    fn zero_field_has_zero_bracket() {
        let d = DeformationSpec::with_field(0.8, "0").unwrap();
        let s = builtin_symbol("fig1").unwrap();
        let r = verify_escape_modes(&s, &d, &EscapeOptions::default(), -2..=2).unwrap();
        assert!(!r.ok);
        assert_eq!(r.min_hpg, 0.0);
    }

    #[test]
    fn empty_sample_is_distinct() {
        let d = DeformationSpec::new(0.8).unwrap();
        let s = builtin_symbol("fig2").unwrap();
        let o = EscapeOptions { tol: 0.0, n_x: 64, n_xi: 41, ..EscapeOptions::default() };
        assert_eq!(verify_escape(&s, &d, &o), Err(Error::EmptySample));
        let bad = EscapeOptions { xi_max: 5.0, ..EscapeOptions::default() };
        assert!(matches!(verify_escape(&s, &d, &bad), Err(Error::InvalidParameter(_))));
    }
}
