//! TOML experiment configuration.

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use torres_core::deformation::{DeformationSpec, EscapeOptions};
use torres_core::fbi::{FbiConfig, LebeauConfig};
use torres_core::spectral::SpectralWindow;
use torres_core::symbols::{builtin_symbol, MultiplierFn, SymbolFamily};

use crate::Failure;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SymbolChoice {
    Builtin(String),
    Custom {
        #[serde(default = "zero_expr")]
        v_a: String,
        #[serde(default = "zero_expr")]
        v_m: String,
        /// Gaussian decay rate assumed for the tail bound.
        #[serde(default)]
        decay_rate: Option<f64>,
    },
}

fn zero_expr() -> String {
    "0".into()
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ThetaChoice {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub omega0: f64,
    pub theta: f64,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    #[serde(default)]
    pub full_mode_laplacian: bool,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum EscapeSampling {
    /// `ξ2` restricted to the integer modes of `n_range`.
    #[default]
    PerMode,
    /// The full annulus `C < |ξ| ≤ xi_max`.
    PhaseSpace,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EscapeConfig {
    pub xi_max: f64,
    pub c: f64,
    pub tol: f64,
    pub n_x: usize,
    pub n_xi: usize,
    pub sampling: EscapeSampling,
}

impl Default for EscapeConfig {
    fn default() -> Self {
        let o = EscapeOptions::default();
        Self { xi_max: o.xi_max, c: o.c, tol: o.tol, n_x: o.n_x, n_xi: o.n_xi, sampling: EscapeSampling::PerMode }
    }
}

impl EscapeConfig {
    pub fn options(&self) -> EscapeOptions {
        EscapeOptions { xi_max: self.xi_max, c: self.c, tol: self.tol, n_x: self.n_x, n_xi: self.n_xi }
    }
}

/// Quadrature for `fbi-check`. Defaults come from the convergence study
/// recorded in the README.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FbiCheckConfig {
    pub h: f64,
    pub n_y: usize,
    pub n_xi: usize,
    pub xi_max: f64,
    /// Test polynomials have degree at most this.
    pub degree: usize,
    /// Random polynomials drawn from `seed` in addition to the monomials.
    pub random_cases: usize,
    pub tolerance: f64,
    /// Also run with doubled `n_y`, `n_xi` and require the error to halve.
    pub refine: bool,
    pub lebeau: LebeauCheckConfig,
}

impl Default for FbiCheckConfig {
    fn default() -> Self {
        Self {
            h: 0.1,
            n_y: 64,
            n_xi: 64,
            xi_max: 4.0,
            degree: 5,
            random_cases: 3,
            tolerance: 1e-3,
            refine: true,
            lebeau: LebeauCheckConfig::default(),
        }
    }
}

impl FbiCheckConfig {
    pub fn fbi(&self) -> Result<FbiConfig, Failure> {
        FbiConfig::new(self.h, self.n_y, self.n_xi, self.xi_max).map_err(Failure::degenerate)
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct LebeauCheckConfig {
    pub a: Vec<f64>,
    pub bump_center: f64,
    pub bump_width: f64,
    pub half_width: f64,
    pub n_y: usize,
    pub xi_max: f64,
    pub n_xi: usize,
    pub points: Vec<f64>,
    pub tolerance: f64,
    /// Allowed spread of the results across `a`.
    pub a_tolerance: f64,
}

impl Default for LebeauCheckConfig {
    fn default() -> Self {
        Self {
            a: vec![0.25, 0.5, 1.0],
            bump_center: 0.0,
            bump_width: 0.3,
            half_width: 4.0,
            n_y: 601,
            xi_max: 6.0,
            n_xi: 401,
            points: vec![0.0, 0.15, 0.3],
            tolerance: 1e-2,
            a_tolerance: 1e-4,
        }
    }
}

impl LebeauCheckConfig {
    pub fn quadrature(&self, h: f64, a: f64) -> LebeauConfig {
        LebeauConfig { h, a, half_width: self.half_width, n_y: self.n_y, xi_max: self.xi_max, n_xi: self.n_xi }
    }
}

/// Thresholds for the viscosity-limit comparison.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepCheck {
    /// Largest allowed distance to the matched resonance at the final `ν`.
    pub final_tolerance: f64,
    /// Allowed relative growth of the distance between consecutive `ν`.
    pub monotone_slack: f64,
}

impl Default for SweepCheck {
    fn default() -> Self {
        Self { final_tolerance: 1e-2, monotone_slack: 0.2 }
    }
}

/// One experiment, deserialized from TOML.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub symbol: SymbolChoice,
    pub theta: ThetaChoice,
    #[serde(default)]
    pub nu_sweep: Vec<f64>,
    pub n_range: [i64; 2],
    #[serde(rename = "N")]
    pub grid_n: usize,
    pub window: WindowConfig,
    #[serde(default)]
    pub flags: Flags,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Deformation field `G0(x)`; the default is `-2*cos(x)`.
    #[serde(default)]
    pub g0_expression: Option<String>,
    #[serde(default)]
    pub escape: EscapeConfig,
    #[serde(default)]
    pub fbi: FbiCheckConfig,
    #[serde(default)]
    pub sweep_check: SweepCheck,
}

impl ExperimentConfig {
    /// Reads and validates a config file. Relative `output_dir` is resolved
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::degenerate(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if cfg.output_dir.is_relative() {
            if let Some(parent) = path.parent() {
                cfg.output_dir = parent.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, Failure> {
        let cfg: Self = toml::from_str(text).map_err(|e| Failure::degenerate(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let bad = |msg: String| Err(Failure::degenerate(msg));
        if self.grid_n < 4 || self.grid_n % 2 != 0 {
            return bad(format!("N must be even and at least 4, got {}", self.grid_n));
        }
        if self.n_range[0] > self.n_range[1] {
            return bad(format!("n_range [{}, {}] is empty", self.n_range[0], self.n_range[1]));
        }
        if self.nu_sweep.iter().any(|&nu| !(nu > 0.0) || !nu.is_finite()) {
            return bad("nu_sweep entries must be positive and finite".into());
        }
        if self.nu_sweep.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("nu_sweep must be strictly decreasing".into());
        }
        if self.thetas().is_empty() || self.thetas().iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
            return bad("theta must be a non-negative number or a non-empty list of them".into());
        }
        SpectralWindow::new(self.window.omega0, self.window.theta).map_err(Failure::degenerate)?;
        Ok(())
    }

    pub fn thetas(&self) -> Vec<f64> {
        match &self.theta {
            ThetaChoice::One(t) => vec![*t],
            ThetaChoice::Many(ts) => ts.clone(),
        }
    }

    /// The deformation used as the reference for resonances: the largest `θ`.
    pub fn reference_theta(&self) -> f64 {
        self.thetas().into_iter().fold(0.0, f64::max)
    }

    pub fn modes(&self) -> RangeInclusive<i64> {
        self.n_range[0]..=self.n_range[1]
    }

    pub fn window(&self) -> SpectralWindow {
        SpectralWindow { omega0: self.window.omega0, theta: self.window.theta }
    }

    pub fn symbol_family(&self) -> Result<SymbolFamily, Failure> {
        match &self.symbol {
            SymbolChoice::Builtin(name) => builtin_symbol(name).map_err(Failure::degenerate),
            SymbolChoice::Custom { v_a, v_m, decay_rate } => {
                let va = MultiplierFn::parse(v_a, *decay_rate).map_err(Failure::degenerate)?;
                let vm = MultiplierFn::parse(v_m, *decay_rate).map_err(Failure::degenerate)?;
                Ok(SymbolFamily::new("custom", va, vm))
            }
        }
    }

    pub fn symbol_label(&self) -> String {
        match &self.symbol {
            SymbolChoice::Builtin(name) => name.clone(),
            SymbolChoice::Custom { v_a, v_m, .. } => format!("v_a={v_a};v_m={v_m}"),
        }
    }

    pub fn deformation(&self, theta: f64) -> Result<DeformationSpec, Failure> {
        match &self.g0_expression {
            None => DeformationSpec::new(theta),
            Some(src) => DeformationSpec::with_field(theta, src),
        }
        .map_err(Failure::degenerate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
symbol = "fig2"
theta = [0.4, 0.8]
nu_sweep = [0.1, 0.05]
n_range = [-2, 2]
N = 16
output_dir = "out"
window = { omega0 = 0.5, theta = 0.8 }
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.thetas(), vec![0.4, 0.8]);
        assert_eq!(cfg.reference_theta(), 0.8);
        assert_eq!(cfg.modes(), -2..=2);
        assert!(!cfg.flags.full_mode_laplacian);
        assert_eq!(cfg.escape.sampling, EscapeSampling::PerMode);
        assert_eq!(cfg.symbol_family().unwrap().name, "fig2");
    }

    #[test]
    fn custom_symbol_and_scalar_theta() {
        let text = BASE
            .replace(r#"symbol = "fig2""#, r#"symbol = { v_m = "((1 - xi^2) + e*xi^2)*exp(-xi^2)" }"#)
            .replace("theta = [0.4, 0.8]", "theta = 0.6");
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.thetas(), vec![0.6]);
        let fam = cfg.symbol_family().unwrap();
        assert!(fam.v_a.is_zero() || fam.v_a.eval(1.0) == 0.0);
        assert!((fam.v_m.eval(0.5) - builtin_symbol("fig2").unwrap().v_m.eval(0.5)).abs() < 1e-14);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        for (from, to) in [
            ("nu_sweep = [0.1, 0.05]", "nu_sweep = [0.05, 0.1]"),
            ("nu_sweep = [0.1, 0.05]", "nu_sweep = [0.1, 0.0]"),
            ("N = 16", "N = 15"),
            ("n_range = [-2, 2]", "n_range = [2, -2]"),
            (r#"symbol = "fig2""#, r#"symbol = "fig3""#),
        ] {
            let text = BASE.replace(from, to);
            let err = ExperimentConfig::from_toml(&text).and_then(|c| c.symbol_family().map(|_| c));
            assert!(matches!(err, Err(ref f) if f.code == crate::ExitStatus::Degenerate), "{to}");
        }
        assert!(ExperimentConfig::from_toml(&format!("{BASE}\nunknown_key = 1")).is_err());
    }
}
