//! Experiment orchestration: resonance runs, viscosity sweeps, the escape
//! check and the FBI identities.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use torres_core::deformation::{verify_escape_modes, verify_escape_range, DeformationSpec, EscapeOptions, EscapeReport};
use torres_core::fbi::{check_inversion, check_lebeau, GaussianBump, TrigPoly};
use torres_core::mode::{DeformedParts, ViscousParts};
use torres_core::spectral::{
    attach_resonances, eigendecompose, filter_window, is_monotone_nonincreasing, match_paths, ContinuityBudget, EigenPath,
    Provenance, SpectralWindow, Spectrum, DEFAULT_RESIDUAL_TOL,
};
use torres_core::symbols::{PhaseSymbol, SymbolFamily};
use torres_core::{Error as CoreError, C64};

use crate::config::{EscapeSampling, ExperimentConfig};
use crate::csv::{escape_field, fmt_float, render_spectrum_rows, write_file, RowKind, SpectrumRow};
use crate::svg::{render, Figure};
use crate::{ExitStatus, Failure, VERSION};

/// A `(n, θ, ν)` task that could not be completed; the run carries on.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskFailure {
    pub n: i64,
    pub theta: f64,
    pub nu: f64,
    pub failure: Failure,
}

#[derive(Clone, Debug)]
pub struct ModeSpectrum {
    pub n: i64,
    pub theta: f64,
    pub spectrum: Spectrum,
}

#[derive(Clone, Debug)]
pub struct ResonanceRun {
    pub spectra: Vec<ModeSpectrum>,
    pub failures: Vec<TaskFailure>,
    pub window: SpectralWindow,
}

impl ResonanceRun {
    /// Window-filtered eigenvalues, one row each.
    pub fn rows(&self) -> Vec<SpectrumRow> {
        let mut rows = Vec::new();
        for m in &self.spectra {
            let inside = filter_window(&m.spectrum, &self.window);
            for (&z, &r) in inside.eigenvalues.iter().zip(&inside.residuals) {
                rows.push(SpectrumRow {
                    kind: RowKind::Resonance,
                    n: m.n,
                    theta: m.theta,
                    nu: 0.0,
                    lambda: z,
                    residual: r,
                    path_id: None,
                    in_window: true,
                });
            }
        }
        rows
    }
}

fn deformed_spectrum(parts: &DeformedParts, n: i64, theta: f64, grid_n: usize) -> Result<Spectrum, Failure> {
    let m = parts.mode(n).map_err(Failure::from_core)?;
    let s = eigendecompose(&m.matrix, DEFAULT_RESIDUAL_TOL).map_err(Failure::from_core)?;
    Ok(s.with_source(Provenance { n, theta, nu: 0.0, grid_n }).sorted())
}

/// Eigenvalues of `P_N^θ` for every `θ` and mode of the config.
pub fn compute_resonances(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<ResonanceRun, Failure> {
    let grid = torres_core::grid::grid(cfg.grid_n).map_err(Failure::from_core)?;
    let symbol = cfg.symbol_family()?;
    let thetas = cfg.thetas();
    let specs: Vec<DeformationSpec> = thetas.iter().map(|&t| cfg.deformation(t)).collect::<Result<_, _>>()?;
    let modes: Vec<i64> = cfg.modes().collect();
    let results: Vec<Result<ModeSpectrum, TaskFailure>> = pool.install(|| {
        let parts: Vec<DeformedParts> = specs.par_iter().map(|d| DeformedParts::new(&grid, d, &symbol)).collect();
        let tasks: Vec<(usize, i64)> = (0..thetas.len()).flat_map(|t| modes.iter().map(move |&n| (t, n))).collect();
        tasks
            .par_iter()
            .map(|&(t, n)| {
                deformed_spectrum(&parts[t], n, thetas[t], cfg.grid_n)
                    .map(|spectrum| ModeSpectrum { n, theta: thetas[t], spectrum })
                    .map_err(|failure| TaskFailure { n, theta: thetas[t], nu: 0.0, failure })
            })
            .collect()
    });
    let mut spectra = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(s) => spectra.push(s),
            Err(f) => failures.push(f),
        }
    }
    spectra.sort_by(|a, b| a.theta.total_cmp(&b.theta).then(a.n.cmp(&b.n)));
    Ok(ResonanceRun { spectra, failures, window: cfg.window() })
}

/// Distance history of one viscous path against its matched resonance.
#[derive(Clone, Debug, PartialEq)]
pub struct PathCheck {
    pub n: i64,
    pub path_id: usize,
    pub limit: C64,
    pub matched: Option<C64>,
    /// Distance to `matched` at every sweep point of the path.
    pub distances: Vec<f64>,
    pub final_distance: f64,
    pub monotone: bool,
    pub broken: bool,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct ModeSweep {
    pub n: i64,
    /// `(ν, spectrum of P_N^ν)` in sweep order.
    pub spectra: Vec<(f64, Spectrum)>,
    pub paths: Vec<EigenPath>,
    /// In-window resonances of mode `n` at the reference `θ`.
    pub resonances: Spectrum,
    pub checks: Vec<PathCheck>,
}

#[derive(Clone, Debug)]
pub struct SweepRun {
    pub modes: Vec<ModeSweep>,
    pub failures: Vec<TaskFailure>,
    pub window: SpectralWindow,
    pub reference_theta: f64,
    pub final_nu: f64,
    pub final_tolerance: f64,
}

impl SweepRun {
    pub fn checks(&self) -> impl Iterator<Item = &PathCheck> {
        self.modes.iter().flat_map(|m| &m.checks)
    }

    /// Every in-window path converges monotonically to within tolerance and
    /// no task failed.
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks().all(|c| c.passed)
    }

    /// The check with the largest final distance.
    pub fn worst(&self) -> Option<&PathCheck> {
        self.checks().max_by(|a, b| a.final_distance.total_cmp(&b.final_distance))
    }

    pub fn max_final_distance(&self) -> f64 {
        self.worst().map_or(0.0, |c| c.final_distance)
    }
}

fn check_paths(
    n: i64,
    paths: &[EigenPath],
    resonances: &[C64],
    window: &SpectralWindow,
    final_nu: f64,
    cfg: &ExperimentConfig,
) -> Vec<PathCheck> {
    paths
        .iter()
        .filter(|p| p.final_nu() == final_nu && window.contains(p.limit_candidate()))
        .map(|p| {
            let limit = p.limit_candidate();
            match p.matched_resonance.filter(|_| !resonances.is_empty()) {
                Some((r, d)) => {
                    let distances = p.distances_to(r);
                    let monotone = is_monotone_nonincreasing(&distances, cfg.sweep_check.monotone_slack);
                    PathCheck {
                        n,
                        path_id: p.path_id,
                        limit,
                        matched: Some(r),
                        distances,
                        final_distance: d,
                        monotone,
                        broken: p.broken,
                        passed: monotone && d <= cfg.sweep_check.final_tolerance,
                    }
                }
                None => PathCheck {
                    n,
                    path_id: p.path_id,
                    limit,
                    matched: None,
                    distances: vec![f64::INFINITY; p.values.len()],
                    final_distance: f64::INFINITY,
                    monotone: false,
                    broken: p.broken,
                    passed: false,
                },
            }
        })
        .collect()
}

fn sweep_mode(
    n: i64,
    cfg: &ExperimentConfig,
    viscous: &ViscousParts,
    deformed: &DeformedParts,
    theta_ref: f64,
) -> Result<ModeSweep, TaskFailure> {
    let window = cfg.window();
    let fail = |nu: f64| move |failure: Failure| TaskFailure { n, theta: 0.0, nu, failure };
    let res = deformed_spectrum(deformed, n, theta_ref, cfg.grid_n)
        .map_err(|failure| TaskFailure { n, theta: theta_ref, nu: 0.0, failure })?;
    let resonances = filter_window(&res, &window);
    let spectra: Vec<(f64, Spectrum)> = cfg
        .nu_sweep
        .par_iter()
        .map(|&nu| {
            let m = viscous.mode(n, nu, cfg.flags.full_mode_laplacian).map_err(|e| fail(nu)(Failure::from_core(e)))?;
            let s = eigendecompose(&m.matrix, DEFAULT_RESIDUAL_TOL).map_err(|e| fail(nu)(Failure::from_core(e)))?;
            Ok((nu, s.with_source(Provenance { n, theta: 0.0, nu, grid_n: cfg.grid_n }).sorted()))
        })
        .collect::<Result<_, TaskFailure>>()?;
    let mut paths = match_paths(&spectra, ContinuityBudget::default()).map_err(|e| fail(f64::NAN)(Failure::from_core(e)))?;
    attach_resonances(&mut paths, &resonances.eigenvalues);
    let final_nu = *cfg.nu_sweep.last().expect("validated non-empty");
    let checks = check_paths(n, &paths, &resonances.eigenvalues, &window, final_nu, cfg);
    Ok(ModeSweep { n, spectra, paths, resonances, checks })
}

/// Viscous spectra over the `ν` sweep, eigenvalue paths, and their distance
/// to the resonances at the largest configured `θ`.
pub fn compute_sweep(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<SweepRun, Failure> {
    if cfg.nu_sweep.is_empty() {
        return Err(Failure::degenerate("nu_sweep is empty"));
    }
    let grid = torres_core::grid::grid(cfg.grid_n).map_err(Failure::from_core)?;
    let symbol = cfg.symbol_family()?;
    let theta_ref = cfg.reference_theta();
    let d = cfg.deformation(theta_ref)?;
    let modes: Vec<i64> = cfg.modes().collect();
    let results: Vec<Result<ModeSweep, TaskFailure>> = pool.install(|| {
        let (viscous, deformed) =
            rayon::join(|| ViscousParts::new(&grid, &symbol), || DeformedParts::new(&grid, &d, &symbol));
        modes.par_iter().map(|&n| sweep_mode(n, cfg, &viscous, &deformed, theta_ref)).collect()
    });
    let mut out = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(m) => out.push(m),
            Err(f) => failures.push(f),
        }
    }
    out.sort_by_key(|m| m.n);
    Ok(SweepRun {
        modes: out,
        failures,
        window: cfg.window(),
        reference_theta: theta_ref,
        final_nu: *cfg.nu_sweep.last().unwrap(),
        final_tolerance: cfg.sweep_check.final_tolerance,
    })
}

impl SweepRun {
    /// Paths that touch the window (viscous rows) plus the in-window
    /// resonances (resonance rows).
    pub fn rows(&self) -> Vec<SpectrumRow> {
        let mut rows = Vec::new();
        for m in &self.modes {
            for (&z, &residual) in m.resonances.eigenvalues.iter().zip(&m.resonances.residuals) {
                rows.push(SpectrumRow {
                    kind: RowKind::Resonance,
                    n: m.n,
                    theta: self.reference_theta,
                    nu: 0.0,
                    lambda: z,
                    residual,
                    path_id: None,
                    in_window: true,
                });
            }
            for p in self.plotted_paths(m) {
                for (&nu, &z) in p.nus.iter().zip(&p.values) {
                    rows.push(SpectrumRow {
                        kind: RowKind::Viscous,
                        n: m.n,
                        theta: 0.0,
                        nu,
                        lambda: z,
                        residual: residual_of(&m.spectra, nu, z),
                        path_id: Some(p.path_id),
                        in_window: self.window.contains(z),
                    });
                }
            }
        }
        rows
    }

    fn plotted_paths<'a>(&'a self, m: &'a ModeSweep) -> impl Iterator<Item = &'a EigenPath> + 'a {
        m.paths.iter().filter(move |p| p.values.iter().any(|&z| self.window.contains(z)))
    }
}

/// Residual certificate of eigenvalue `z` in the spectrum at `nu`.
fn residual_of(spectra: &[(f64, Spectrum)], nu: f64, z: C64) -> f64 {
    spectra
        .iter()
        .find(|(v, _)| *v == nu)
        .and_then(|(_, s)| s.eigenvalues.iter().position(|&w| w == z).map(|i| s.residuals[i]))
        .unwrap_or(f64::NAN)
}

fn provenance(cfg: &ExperimentConfig, command: &str) -> String {
    let list = |v: &[f64]| v.iter().map(|&x| fmt_float(x)).collect::<Vec<_>>().join(", ");
    let mut s = String::new();
    let _ = writeln!(s, "toolkit = \"torres {VERSION}\"");
    let _ = writeln!(s, "command = \"{command}\"");
    let _ = writeln!(s, "symbol = {:?}", cfg.symbol_label());
    let _ = writeln!(s, "g0_expression = {:?}", cfg.g0_expression.as_deref().unwrap_or("-2*cos(x)"));
    let _ = writeln!(s, "N = {}", cfg.grid_n);
    let _ = writeln!(s, "n_range = [{}, {}]", cfg.n_range[0], cfg.n_range[1]);
    let _ = writeln!(s, "theta = [{}]", list(&cfg.thetas()));
    let _ = writeln!(s, "nu_sweep = [{}]", list(&cfg.nu_sweep));
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "residual_tolerance = {}", fmt_float(DEFAULT_RESIDUAL_TOL));
    let _ = writeln!(s, "\n[window]\nomega0 = {}\ntheta = {}", fmt_float(cfg.window.omega0), fmt_float(cfg.window.theta));
    let _ = writeln!(s, "\n[flags]\nfull_mode_laplacian = {}", cfg.flags.full_mode_laplacian);
    s
}

fn failures_csv(failures: &[TaskFailure]) -> String {
    let mut sorted = failures.to_vec();
    sorted.sort_by(|a, b| a.n.cmp(&b.n).then(a.theta.total_cmp(&b.theta)).then(b.nu.total_cmp(&a.nu)));
    let mut s = String::from("n,theta,nu,exit_code,message\n");
    for f in &sorted {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            f.n,
            fmt_float(f.theta),
            fmt_float(f.nu),
            f.failure.code as i32,
            escape_field(&f.failure.message)
        );
    }
    s
}

fn prepare_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))
}

fn write_common(cfg: &ExperimentConfig, command: &str, failures: &[TaskFailure]) -> Result<(), Failure> {
    let dir = &cfg.output_dir;
    write_file(&dir.join("provenance.toml"), &provenance(cfg, command))?;
    let errors = dir.join("errors.csv");
    if failures.is_empty() {
        if errors.exists() {
            std::fs::remove_file(&errors).map_err(Failure::io)?;
        }
        Ok(())
    } else {
        write_file(&errors, &failures_csv(failures))
    }
}

/// Outcome of a CLI subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub status: ExitStatus,
    pub summary: String,
}

fn status_for(failures: &[TaskFailure], check_ok: bool) -> ExitStatus {
    if let Some(f) = failures.iter().find(|f| f.failure.code == ExitStatus::Degenerate) {
        return f.failure.code;
    }
    if !failures.is_empty() {
        ExitStatus::Numerical
    } else if check_ok {
        ExitStatus::Ok
    } else {
        ExitStatus::CheckFailed
    }
}

/// `resonances`: writes `spectra.csv`.
pub fn run_resonances(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Outcome, Failure> {
    let run = compute_resonances(cfg, pool)?;
    prepare_dir(&cfg.output_dir)?;
    let mut rows = run.rows();
    write_file(&cfg.output_dir.join("spectra.csv"), &render_spectrum_rows(&mut rows))?;
    write_common(cfg, "resonances", &run.failures)?;
    let status = status_for(&run.failures, true);
    Ok(Outcome {
        status,
        summary: format!(
            "resonances: {} eigenvalues in window over {} (n, theta) tasks, {} failed",
            rows.len(),
            run.spectra.len() + run.failures.len(),
            run.failures.len()
        ),
    })
}

fn distances_csv(run: &SweepRun) -> String {
    let mut s = String::from(
        "n,path_id,re_limit,im_limit,re_resonance,im_resonance,final_nu,final_distance,monotone,broken,passed\n",
    );
    for c in run.checks() {
        let (rr, ri) = c.matched.map_or((String::new(), String::new()), |r| (fmt_float(r.re), fmt_float(r.im)));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            c.n,
            c.path_id,
            fmt_float(c.limit.re),
            fmt_float(c.limit.im),
            rr,
            ri,
            fmt_float(run.final_nu),
            fmt_float(c.final_distance),
            c.monotone,
            c.broken,
            c.passed
        );
    }
    s
}

/// `viscosity-sweep`: writes `paths.csv`, `distances.csv` and `figure.svg`.
pub fn run_viscosity_sweep(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Outcome, Failure> {
    let run = compute_sweep(cfg, pool)?;
    prepare_dir(&cfg.output_dir)?;
    let mut rows = run.rows();
    write_file(&cfg.output_dir.join("paths.csv"), &render_spectrum_rows(&mut rows))?;
    write_file(&cfg.output_dir.join("distances.csv"), &distances_csv(&run))?;

    let resonances: Vec<C64> = run.modes.iter().flat_map(|m| m.resonances.eigenvalues.iter().copied()).collect();
    let paths: Vec<Vec<C64>> = run.modes.iter().flat_map(|m| run.plotted_paths(m).map(|p| p.values.clone())).collect();
    let title = format!(
        "{}: resonances (θ = {}) and P + iνΔ paths, ν ↓ {}",
        cfg.symbol_label(),
        run.reference_theta,
        run.final_nu
    );
    let svg = render(&Figure { title: &title, window: run.window, resonances: &resonances, paths: &paths });
    write_file(&cfg.output_dir.join("figure.svg"), &svg)?;
    write_common(cfg, "viscosity-sweep", &run.failures)?;

    let checks = run.checks().count();
    let failed = run.checks().filter(|c| !c.passed).count();
    let summary = match run.worst() {
        Some(w) => format!(
            "viscosity-sweep: {} ({} of {checks} in-window paths failed; worst n={} path {} distance {:.3e} at nu={}, tolerance {:.1e})",
            if run.passed() { "PASS" } else { "FAIL" },
            failed,
            w.n,
            w.path_id,
            w.final_distance,
            run.final_nu,
            run.final_tolerance
        ),
        None => format!("viscosity-sweep: PASS (no viscous eigenvalue inside the window at nu={})", run.final_nu),
    };
    Ok(Outcome { status: status_for(&run.failures, run.passed()), summary })
}

fn merge_reports(parts: Vec<Result<EscapeReport, CoreError>>) -> Result<EscapeReport, Failure> {
    let mut acc: Option<EscapeReport> = None;
    for p in parts {
        match p {
            Ok(r) => acc = Some(match acc {
                None => r,
                Some(a) => a.merge(r),
            }),
            Err(CoreError::EmptySample) => {}
            Err(e) => return Err(Failure::from_core(e)),
        }
    }
    acc.ok_or_else(|| Failure::degenerate(CoreError::EmptySample))
}

/// Per-mode escape check over `modes`, one task per mode.
pub fn escape_per_mode(
    s: &(impl PhaseSymbol + Sync),
    d: &DeformationSpec,
    o: &EscapeOptions,
    modes: std::ops::RangeInclusive<i64>,
) -> Result<EscapeReport, Failure> {
    let parts: Vec<_> = modes.collect::<Vec<_>>().par_iter().map(|&n| verify_escape_modes(s, d, o, n..=n)).collect();
    merge_reports(parts)
}

/// Full phase-space escape check, split over `x1` slabs.
pub fn escape_phase_space(s: &(impl PhaseSymbol + Sync), d: &DeformationSpec, o: &EscapeOptions) -> Result<EscapeReport, Failure> {
    let chunk = 16usize;
    let starts: Vec<usize> = (0..o.n_x).step_by(chunk).collect();
    let parts: Vec<_> =
        starts.par_iter().map(|&a| verify_escape_range(s, d, o, a..(a + chunk).min(o.n_x))).collect();
    merge_reports(parts)
}

pub fn escape_report(cfg: &ExperimentConfig, symbol: &SymbolFamily, pool: &rayon::ThreadPool) -> Result<EscapeReport, Failure> {
    let d = cfg.deformation(cfg.reference_theta())?;
    let o = cfg.escape.options();
    pool.install(|| match cfg.escape.sampling {
        EscapeSampling::PerMode => escape_per_mode(symbol, &d, &o, cfg.modes()),
        EscapeSampling::PhaseSpace => escape_phase_space(symbol, &d, &o),
    })
}

/// Largest `ω0` among `candidates` whose characteristic band `|p| < ω0`
/// (outside `|ξ1| ≤ C`) has `min H_p G ≥ ω0`, with the report that admitted it.
pub fn window_from_escape_margin(
    s: &(impl PhaseSymbol + Sync),
    d: &DeformationSpec,
    base: &EscapeOptions,
    modes: std::ops::RangeInclusive<i64>,
    candidates: &[f64],
) -> Result<Option<(f64, EscapeReport)>, Failure> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for omega0 in sorted {
        let o = EscapeOptions { tol: omega0, ..*base };
        let r = escape_per_mode(s, d, &o, modes.clone())?;
        if r.min_hpg >= omega0 {
            return Ok(Some((omega0, r)));
        }
    }
    Ok(None)
}

/// `escape-check`: exit 0 iff `H_p G > 0` on the sampled characteristic set.
pub fn run_escape_check(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Outcome, Failure> {
    let symbol = cfg.symbol_family()?;
    let r = escape_report(cfg, &symbol, pool)?;
    let [x1, xi1, xi2] = r.argmin;
    Ok(Outcome {
        status: if r.ok { ExitStatus::Ok } else { ExitStatus::CheckFailed },
        summary: format!(
            "escape-check: {} min H_pG = {:.6e} at (x1, xi1, xi2) = ({x1:.4}, {xi1:.4}, {xi2:.4}) over {} samples",
            if r.ok { "ok" } else { "FAILED" },
            r.min_hpg,
            r.samples
        ),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FbiRow {
    pub check: &'static str,
    pub case: String,
    pub parameter: String,
    pub rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Errors below this are roundoff; refinement cannot be expected to halve them.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

fn test_polys(cfg: &ExperimentConfig) -> Vec<(String, TrigPoly)> {
    let deg = cfg.fbi.degree as i64;
    let mut out: Vec<(String, TrigPoly)> = (-deg..=deg).map(|m| (format!("exp(i*{m}*y)"), TrigPoly::monomial(m))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for k in 0..cfg.fbi.random_cases {
        let terms: Vec<(i64, C64)> =
            (-deg..=deg).map(|m| (m, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))).collect();
        out.push((format!("random#{k}(seed={})", cfg.seed), TrigPoly::from_terms(&terms)));
    }
    out
}

/// Inversion (`S T u = u`) and Lebeau checks with their error table.
pub fn compute_fbi_check(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Vec<FbiRow>, Failure> {
    let f = &cfg.fbi;
    let base = f.fbi()?;
    let fine = base.refined();
    let polys = test_polys(cfg);
    let mut rows: Vec<FbiRow> = pool.install(|| {
        polys
            .par_iter()
            .map(|(name, u)| -> Result<Vec<FbiRow>, Failure> {
                let coarse = check_inversion(u, &base).map_err(Failure::from_core)?.rel_error;
                let mut out = vec![FbiRow {
                    check: "inversion",
                    case: name.clone(),
                    parameter: format!("h={} n_y={} n_xi={} xi_max={}", base.h, base.n_y, base.n_xi, base.xi_max),
                    rel_error: coarse,
                    tolerance: f.tolerance,
                    passed: coarse <= f.tolerance,
                }];
                if f.refine {
                    let refined = check_inversion(u, &fine).map_err(Failure::from_core)?.rel_error;
                    let tol = (0.5 * coarse).max(ROUNDOFF_FLOOR);
                    out.push(FbiRow {
                        check: "refinement",
                        case: name.clone(),
                        parameter: format!("n_y={} n_xi={}", fine.n_y, fine.n_xi),
                        rel_error: refined,
                        tolerance: tol,
                        passed: refined <= tol,
                    });
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>, _>>()
    })?
    .into_iter()
    .flatten()
    .collect();

    let l = &f.lebeau;
    let bump = GaussianBump { center: l.bump_center, width: l.bump_width };
    let reports = pool.install(|| {
        l.a.par_iter()
            .map(|&a| check_lebeau(|y| bump.eval(y), &l.quadrature(f.h, a), &l.points).map_err(Failure::from_core))
            .collect::<Result<Vec<_>, _>>()
    })?;
    for (a, r) in l.a.iter().zip(&reports) {
        rows.push(FbiRow {
            check: "lebeau",
            case: format!("bump(center={}, width={})", l.bump_center, l.bump_width),
            parameter: format!("a={a}"),
            rel_error: r.rel_error,
            tolerance: l.tolerance,
            passed: r.rel_error <= l.tolerance,
        });
    }
    if reports.len() > 1 {
        let scale = reports[0].samples.iter().map(|s| s.2.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let spread = reports
            .iter()
            .flat_map(|r| r.samples.iter().zip(&reports[0].samples).map(|(s, t)| (s.1 - t.1).norm()))
            .fold(0.0, f64::max)
            / scale;
        rows.push(FbiRow {
            check: "lebeau-a-independence",
            case: format!("bump(center={}, width={})", l.bump_center, l.bump_width),
            parameter: format!("a in {:?}", l.a),
            rel_error: spread,
            tolerance: l.a_tolerance,
            passed: spread <= l.a_tolerance,
        });
    }
    Ok(rows)
}

pub fn fbi_csv(rows: &[FbiRow]) -> String {
    let mut s = String::from("check,case,parameter,rel_error,tolerance,pass\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.check,
            escape_field(&r.case),
            escape_field(&r.parameter),
            fmt_float(r.rel_error),
            fmt_float(r.tolerance),
            r.passed
        );
    }
    s
}

/// `fbi-check`: writes `fbi_errors.csv`.
pub fn run_fbi_check(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Outcome, Failure> {
    let rows = compute_fbi_check(cfg, pool)?;
    prepare_dir(&cfg.output_dir)?;
    write_file(&cfg.output_dir.join("fbi_errors.csv"), &fbi_csv(&rows))?;
    write_common(cfg, "fbi-check", &[])?;
    let passed = rows.iter().all(|r| r.passed);
    let worst = |check: &str| rows.iter().filter(|r| r.check == check).map(|r| r.rel_error).fold(0.0, f64::max);
    Ok(Outcome {
        status: if passed { ExitStatus::Ok } else { ExitStatus::CheckFailed },
        summary: format!(
            "fbi-check: {} ({} rows; worst inversion {:.3e}, worst refined {:.3e}, worst lebeau {:.3e}, a-spread {:.3e})",
            if passed { "PASS" } else { "FAIL" },
            rows.len(),
            worst("inversion"),
            worst("refinement"),
            worst("lebeau"),
            worst("lebeau-a-independence")
        ),
    })
}
