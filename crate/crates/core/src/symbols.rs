//! Structured symbol families
//!
//! ```text
//! p(x, ξ) = ξ2/⟨ξ⟩ + 2 sin(x1)(1 − V_m(ξ1)) + V_a(ξ1),   ⟨ξ⟩ = (1 + ξ1² + ξ2²)^{1/2}
//! ```
//!
//! with Gaussian-decay multipliers `V_a`, `V_m`. The factor 2 is the principal
//! symbol of the symmetrized product `sin(x1)(1 − V_m) + (1 − V_m) sin(x1)`.

use alloc::string::{String, ToString};
use core::f64::consts::E;


#[allow(unused_imports)]
use num_traits::Float;
use crate::expr::Expr;
use crate::{Error, Result};

/// Variable names accepted in multiplier expressions.
pub const MULTIPLIER_VARS: &[&str] = &["ξ", "xi"];

/// Bound `|V(ξ)| ≤ constant · e^{−rate ξ²}` on the real axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianDecay {
    pub constant: f64,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Zero,
    /// `½(ξ³ − 1) e^{−ξ²}`
    Fig1Va,
    /// `(1 + (e − 1)(ξ − 2)²) e^{−(ξ − 2)²}`
    Fig1Vm,
    /// `((1 − ξ²) + e ξ²) e^{−ξ²}`
    Fig2Vm,
    Parsed { expr: Expr, deriv: Expr, source: String },
}

/// A real multiplier `ξ ↦ V(ξ)` with Gaussian decay.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierFn {
    kind: Kind,
    decay: GaussianDecay,
}

const DEFAULT_RATE: f64 = 0.5;

impl MultiplierFn {
    pub fn zero() -> Self {
        Self { kind: Kind::Zero, decay: GaussianDecay { constant: 0.0, rate: 1.0 } }
    }

    fn builtin(kind: Kind) -> Self {
        let mut m = Self { kind, decay: GaussianDecay { constant: 0.0, rate: DEFAULT_RATE } };
        m.decay.constant = fit_constant(&m, DEFAULT_RATE).expect("built-in multipliers decay");
        m
    }

    /// Parses a multiplier expression in `ξ` (or `xi`). `rate` is the Gaussian
    /// decay rate to certify; the constant is fitted on `|ξ| ≤ 100`.
    pub fn parse(src: &str, rate: Option<f64>) -> Result<Self> {
        let expr = Expr::parse(src, MULTIPLIER_VARS)?;
        let deriv = expr.derivative();
        let rate = rate.unwrap_or(DEFAULT_RATE);
        if !(rate > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("decay rate must be positive, got {rate}")));
        }
        let mut m = Self {
            kind: Kind::Parsed { expr, deriv, source: src.to_string() },
            decay: GaussianDecay { constant: 0.0, rate },
        };
        m.decay.constant = fit_constant(&m, rate)?;
        Ok(m)
    }

    pub fn eval(&self, xi: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Fig1Va => 0.5 * (xi * xi * xi - 1.0) * (-xi * xi).exp(),
            Kind::Fig1Vm => {
                let s = xi - 2.0;
                (1.0 + (E - 1.0) * s * s) * (-s * s).exp()
            }
            Kind::Fig2Vm => ((1.0 - xi * xi) + E * xi * xi) * (-xi * xi).exp(),
            Kind::Parsed { expr, .. } => expr.eval(xi),
        }
    }

    pub fn derivative(&self, xi: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Fig1Va => {
                let g = (-xi * xi).exp();
                0.5 * (3.0 * xi * xi - 2.0 * xi * (xi * xi * xi - 1.0)) * g
            }
            Kind::Fig1Vm => {
                let s = xi - 2.0;
                let g = (-s * s).exp();
                (2.0 * (E - 1.0) * s - 2.0 * s * (1.0 + (E - 1.0) * s * s)) * g
            }
            Kind::Fig2Vm => {
                let g = (-xi * xi).exp();
                let q = 1.0 + (E - 1.0) * xi * xi;
                (2.0 * (E - 1.0) * xi - 2.0 * xi * q) * g
            }
            Kind::Parsed { deriv, .. } => deriv.eval(xi),
        }
    }

    pub fn decay(&self) -> GaussianDecay {
        self.decay
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero)
    }

    /// Expression text for parsed multipliers.
    pub fn source(&self) -> Option<&str> {
        match &self.kind {
            Kind::Parsed { source, .. } => Some(source),
            _ => None,
        }
    }

    /// Smallest `k ≥ floor` with `C e^{−c k² + growth·k} < 1e−16`, so the tail of
    /// `Σ_k e^{ik(γ(x)−γ(y))} V(k)` beyond `k` is below double precision even
    /// when `|e^{ikΔγ}|` grows like `e^{growth·k}`.
    pub fn truncation(&self, floor: usize, growth: f64) -> usize {
        if self.is_zero() {
            return floor;
        }
        let GaussianDecay { constant, rate } = self.decay;
        let base = (37.0 / rate).sqrt().ceil() as usize;
        let mut k = floor.max(base);
        let target = 1e-16f64.ln();
        while constant.max(1e-300).ln() - rate * (k * k) as f64 + growth * k as f64 >= target {
            k += 1;
        }
        k
    }
}

/// `C = 1.01 · max_{|ξ| ≤ 100} |V(ξ)| e^{c ξ²}` on a grid of spacing 1/64,
/// computed in log space. Fails if the bound is not finite.
fn fit_constant(v: &MultiplierFn, rate: f64) -> Result<f64> {
    let mut log_max = f64::NEG_INFINITY;
    let steps = 100 * 64;
    for i in -steps..=steps {
        let xi = i as f64 / 64.0;
        let val = v.eval(xi).abs();
        if !val.is_finite() {
            return Err(Error::NotGaussianDecay(alloc::format!("V({xi}) is not finite")));
        }
        if val > 0.0 {
            log_max = log_max.max(val.ln() + rate * xi * xi);
        }
    }
    if log_max == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let c = 1.01 * log_max.exp();
    if !c.is_finite() {
        return Err(Error::NotGaussianDecay(alloc::format!(
            "|V(ξ)| e^{{{rate} ξ²}} is unbounded on |ξ| ≤ 100"
        )));
    }
    Ok(c)
}

/// A real principal symbol on `T*T²` restricted to `x2`-independent symbols.
pub trait PhaseSymbol {
    fn value(&self, x1: f64, xi1: f64, xi2: f64) -> f64;

    /// `(∂_{x1} p, ∂_{ξ1} p, ∂_{ξ2} p)`.
    fn gradient(&self, x1: f64, xi1: f64, xi2: f64) -> [f64; 3];
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolFamily {
    pub name: String,
    pub v_a: MultiplierFn,
    pub v_m: MultiplierFn,
}

impl SymbolFamily {
    pub fn new(name: impl Into<String>, v_a: MultiplierFn, v_m: MultiplierFn) -> Self {
        Self { name: name.into(), v_a, v_m }
    }
}

/// The two families used in the reference experiments.
///
/// `fig1`: `V_a = ½(ξ³ − 1)e^{−ξ²}`, `V_m = (1 + (e − 1)(ξ − 2)²)e^{−(ξ−2)²}`.
/// `fig2`: `V_a = 0`, `V_m = ((1 − ξ²) + eξ²)e^{−ξ²}`; this choice has an
/// embedded eigenvalue at 0 in the `n = 0` mode.
pub fn builtin_symbol(name: &str) -> Result<SymbolFamily> {
    match name {
        "fig1" => Ok(SymbolFamily::new(
            "fig1",
            MultiplierFn::builtin(Kind::Fig1Va),
            MultiplierFn::builtin(Kind::Fig1Vm),
        )),
        "fig2" => Ok(SymbolFamily::new("fig2", MultiplierFn::zero(), MultiplierFn::builtin(Kind::Fig2Vm))),
        other => Err(Error::UnknownSymbol(other.to_string())),
    }
}

#[inline]
pub fn japanese_bracket(xi1: f64, xi2: f64) -> f64 {
    (1.0 + xi1 * xi1 + xi2 * xi2).sqrt()
}

/// `p(x1, ξ1, ξ2)` for the family.
pub fn eval_symbol(s: &SymbolFamily, x1: f64, xi1: f64, xi2: f64) -> f64 {
    xi2 / japanese_bracket(xi1, xi2) + 2.0 * x1.sin() * (1.0 - s.v_m.eval(xi1)) + s.v_a.eval(xi1)
}

impl PhaseSymbol for SymbolFamily {
    fn value(&self, x1: f64, xi1: f64, xi2: f64) -> f64 {
        eval_symbol(self, x1, xi1, xi2)
    }

    fn gradient(&self, x1: f64, xi1: f64, xi2: f64) -> [f64; 3] {
        let jb = japanese_bracket(xi1, xi2);
        let jb3 = jb * jb * jb;
        let dx1 = 2.0 * x1.cos() * (1.0 - self.v_m.eval(xi1));
        let dxi1 = -xi2 * xi1 / jb3 - 2.0 * x1.sin() * self.v_m.derivative(xi1) + self.v_a.derivative(xi1);
        let dxi2 = (1.0 + xi1 * xi1) / jb3;
        [dx1, dxi1, dxi2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn builtin_values() {
        let f1 = builtin_symbol("fig1").unwrap();
        assert_eq!(f1.v_a.eval(0.0), -0.5);
        let f2 = builtin_symbol("fig2").unwrap();
        for xi in [-3.0, 0.0, 0.7, 25.0] {
            assert_eq!(f2.v_a.eval(xi), 0.0);
        }
        assert_eq!(f2.v_m.eval(0.0), 1.0);
        assert!(matches!(builtin_symbol("fig3"), Err(Error::UnknownSymbol(_))));
    }

    #[test]
    fn symbol_examples() {
        let f2 = builtin_symbol("fig2").unwrap();
        assert_eq!(eval_symbol(&f2, 0.0, 0.0, 0.0), 0.0);
        // V_m(10) ~ e^{-100}
        assert!((eval_symbol(&f2, PI / 2.0, 10.0, 0.0) - 2.0).abs() < 1e-8);
        let f1 = builtin_symbol("fig1").unwrap();
        assert!((eval_symbol(&f1, 0.0, 0.0, 0.0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn parsed_multiplier_matches_builtin() {
        let parsed = MultiplierFn::parse("(1+(e-1)*(ξ-2)^2)*exp(-(ξ-2)^2)", None).unwrap();
        let builtin = builtin_symbol("fig1").unwrap().v_m;
        for i in -40..40 {
            let xi = i as f64 * 0.173;
            assert!((parsed.eval(xi) - builtin.eval(xi)).abs() < 1e-14);
            assert!((parsed.derivative(xi) - builtin.derivative(xi)).abs() < 1e-13);
        }
    }

    #[test]
    fn non_decaying_multiplier_rejected() {
        assert!(matches!(MultiplierFn::parse("exp(xi)", None), Err(Error::NotGaussianDecay(_))));
        assert!(matches!(MultiplierFn::parse("1", Some(0.5)), Err(Error::NotGaussianDecay(_))));
        assert!(MultiplierFn::parse("exp(-xi^2)", Some(-1.0)).is_err());
    }

    #[test]
    fn tail_bounds() {
        for name in ["fig1", "fig2"] {
            let s = builtin_symbol(name).unwrap();
            for v in [&s.v_a, &s.v_m] {
                let GaussianDecay { constant, rate } = v.decay();
                for i in -1000..=1000 {
                    let xi = i as f64 * 0.1;
                    assert!(v.eval(xi).abs() <= constant * (-rate * xi * xi).exp() + 1e-300);
                }
            }
            for i in 0..=880 {
                let xi = 12.0 + i as f64 * 0.1;
                for t in [xi, -xi] {
                    assert!(s.v_a.eval(t).abs() + s.v_m.eval(t).abs() <= 1e-12, "{name} at {t}");
                }
            }
        }
    }

    #[test]
    fn symbol_is_real_and_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for name in ["fig1", "fig2"] {
            let s = builtin_symbol(name).unwrap();
            for _ in 0..1000 {
                let (x, a, b) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
                assert!(eval_symbol(&s, x, a, b).is_finite());
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for name in ["fig1", "fig2"] {
            let s = builtin_symbol(name).unwrap();
            for _ in 0..100 {
                let (x, a, b) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
                let g = s.gradient(x, a, b);
                let h = 1e-6;
                let fd = [
                    (s.value(x + h, a, b) - s.value(x - h, a, b)) / (2.0 * h),
                    (s.value(x, a + h, b) - s.value(x, a - h, b)) / (2.0 * h),
                    (s.value(x, a, b + h) - s.value(x, a, b - h)) / (2.0 * h),
                ];
                for (u, v) in g.iter().zip(fd) {
                    assert!((u - v).abs() < 1e-7, "{name}: {u} vs {v}");
                }
            }
        }
    }

    #[test]
    fn truncation_grows_with_deformation() {
        let v = builtin_symbol("fig2").unwrap().v_m;
        let plain = v.truncation(8, 0.0);
        assert!(plain >= 9);
        let deformed = v.truncation(8, 3.2);
        assert!(deformed > plain);
        let GaussianDecay { constant, rate } = v.decay();
        let k = deformed as f64;
        assert!(constant * (-rate * k * k + 3.2 * k).exp() < 1e-16);
        assert_eq!(MultiplierFn::zero().truncation(8, 3.2), 8);
    }
}
