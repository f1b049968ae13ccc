//! Acceptance criteria 1 to 10. Each test writes one `criterion N: PASS|FAIL`
//! line to stderr (uncaptured) before asserting.

use std::io::Write as _;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torres::config::ExperimentConfig;
use torres::experiments::{
    compute_fbi_check, compute_resonances, compute_sweep, run_fbi_check, run_resonances, run_viscosity_sweep,
    window_from_escape_margin, ResonanceRun, SweepRun,
};
use torres_core::deformation::{DeformationSpec, EscapeOptions};
use torres_core::grid::{dft_matrix, grid};
use torres_core::linalg::CMatrix;
use torres_core::mode::{sqrt_pair, DeformedParts, SqrtMethod, ViscousParts};
use torres_core::spectral::eigendecompose;
use torres_core::symbols::builtin_symbol;
use torres_core::C64;

fn report(n: u32, ok: bool, detail: &str) {
    let _ = writeln!(std::io::stderr(), "criterion {n}: {} | {detail}", if ok { "PASS" } else { "FAIL" });
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

fn config(text: &str, out: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml(text).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

const SWEEP: [f64; 5] = [0.1, 0.05, 0.02, 0.01, 0.005];
const MODES: (i64, i64) = (-20, 20);

#[test]
fn criterion_01_dft_unitarity() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for n in [16usize, 64, 256] {
        let f = dft_matrix(&grid(n).unwrap());
        let d = &f.matmul(&f.adjoint()) - &CMatrix::identity(n);
        worst = worst.max(d.norm_fro());
    }
    let t = start.elapsed();
    let ok = worst <= 1e-12 && t < Duration::from_secs(1);
    report(1, ok, &format!("max ||F F* - I||_F = {worst:.3e} over N in {{16, 64, 256}}, {t:.2?}"));
    assert!(ok);
}

fn fbi_config() -> ExperimentConfig {
    let text = r#"
symbol = "fig1"
theta = 0.8
n_range = [0, 0]
N = 16
output_dir = "unused"
seed = 11
window = { omega0 = 0.5, theta = 0.8 }
[fbi]
h = 0.1
n_y = 64
n_xi = 64
xi_max = 4.0
degree = 5
random_cases = 4
[fbi.lebeau]
a = [0.25, 1.0]
"#;
    ExperimentConfig::from_toml(text).unwrap()
}

#[test]
fn criterion_02_fbi_exact_inversion() {
    let start = Instant::now();
    let rows = compute_fbi_check(&fbi_config(), &pool(0)).unwrap();
    let t = start.elapsed();
    let inv: Vec<_> = rows.iter().filter(|r| r.check == "inversion").collect();
    let refi: Vec<_> = rows.iter().filter(|r| r.check == "refinement").collect();
    let worst = inv.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    let worst_refined = refi.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    let ok = inv.len() == 15
        && refi.len() == 15
        && inv.iter().all(|r| r.rel_error <= 1e-3)
        && refi.iter().all(|r| r.passed)
        && t < Duration::from_secs(60);
    report(
        2,
        ok,
        &format!(
            "h=0.1, degree<=5, {} polynomials: max rel L2 error {worst:.3e} (n_y=n_xi=64, Xi=4), {worst_refined:.3e} after doubling; {t:.2?}",
            inv.len()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_03_lebeau_identity() {
    let start = Instant::now();
    let rows = compute_fbi_check(&fbi_config(), &pool(0)).unwrap();
    let t = start.elapsed();
    let leb: Vec<_> = rows.iter().filter(|r| r.check == "lebeau").collect();
    let spread = rows.iter().find(|r| r.check == "lebeau-a-independence").unwrap();
    let worst = leb.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    let ok = leb.len() == 2 && leb.iter().all(|r| r.rel_error <= 1e-2) && spread.passed && t < Duration::from_secs(60);
    report(
        3,
        ok,
        &format!(
            "Gaussian bump, h=0.1, a in {{1/4, 1}}: max pointwise rel error {worst:.3e}, a-spread {:.3e} (tol {:.0e}); {t:.2?}",
            spread.rel_error, spread.tolerance
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_04_undeformed_inviscid_consistency() {
    let d0 = DeformationSpec::new(0.0).unwrap();
    let (mut max_diff, mut max_imag) = (0.0f64, 0.0f64);
    for big_n in [16usize, 64] {
        let g = grid(big_n).unwrap();
        for name in ["fig1", "fig2"] {
            let s = builtin_symbol(name).unwrap();
            let dp = DeformedParts::new(&g, &d0, &s);
            let vp = ViscousParts::new(&g, &s);
            for n in -5..=5 {
                let a = dp.mode(n).unwrap().matrix;
                let b = vp.mode(n, 0.0, false).unwrap().matrix;
                max_diff = max_diff.max((&a - &b).max_abs());
                let spec = eigendecompose(&a, 1e-8).unwrap();
                max_imag = spec.eigenvalues.iter().map(|z| z.im.abs()).fold(max_imag, f64::max);
            }
        }
    }
    let ok = max_diff <= 1e-10 && max_imag <= 1e-8;
    report(4, ok, &format!("max entry difference {max_diff:.3e}, max |Im lambda| {max_imag:.3e} (fig1, fig2; n in [-5,5]; N in {{16, 64}})"));
    assert!(ok);
}

fn fig2_resonances() -> &'static (ResonanceRun, Duration) {
    static RUN: OnceLock<(ResonanceRun, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let text = format!(
            "symbol = \"fig2\"\ntheta = [0.4, 0.6, 0.8]\nn_range = [{}, {}]\nN = 128\noutput_dir = \"unused\"\nwindow = {{ omega0 = 0.5, theta = 0.4 }}\n",
            MODES.0, MODES.1
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        let start = Instant::now();
        let run = compute_resonances(&cfg, &pool(0)).unwrap();
        (run, start.elapsed())
    })
}

#[test]
fn criterion_05_embedded_eigenvalue() {
    let (run, t) = fig2_resonances();
    let mut nearest = Vec::new();
    for theta in [0.4, 0.6, 0.8] {
        let best = run
            .spectra
            .iter()
            .filter(|m| m.theta == theta)
            .flat_map(|m| m.spectrum.eigenvalues.iter().map(move |&z| (m.n, z)))
            .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        nearest.push(best);
    }
    let dist0 = nearest.iter().map(|(_, z)| z.norm()).fold(0.0, f64::max);
    let spread = nearest
        .iter()
        .flat_map(|(_, a)| nearest.iter().map(move |(_, b)| (a - b).norm()))
        .fold(0.0, f64::max);
    let ok = run.failures.is_empty() && dist0 <= 1e-3 && spread <= 1e-3 && *t < Duration::from_secs(600);
    report(
        5,
        ok,
        &format!(
            "fig2, N=128: eigenvalue at distance {dist0:.3e} from 0 (mode n={}), spread across theta in {{0.4, 0.6, 0.8}} {spread:.3e}; {} tasks in {t:.2?}",
            nearest[0].0,
            run.spectra.len()
        ),
    );
    assert!(ok);
}

/// `ω0` from the escape margin for both symbols at `θ = 0.8`.
fn escape_window() -> &'static (f64, f64) {
    static W: OnceLock<(f64, f64)> = OnceLock::new();
    W.get_or_init(|| {
        let d = DeformationSpec::new(0.8).unwrap();
        let mut omega0 = f64::INFINITY;
        let mut margin = f64::INFINITY;
        for name in ["fig1", "fig2"] {
            let s = builtin_symbol(name).unwrap();
            let p = pool(0);
            let found = p
                .install(|| window_from_escape_margin(&s, &d, &EscapeOptions::default(), MODES.0..=MODES.1, &[1.0, 0.5, 0.25]))
                .unwrap()
                .expect("some candidate window is admissible");
            omega0 = omega0.min(found.0);
            margin = margin.min(found.1.min_hpg);
        }
        (omega0, margin)
    })
}

fn sweep(symbol: &str) -> &'static SweepRun {
    static FIG1: OnceLock<SweepRun> = OnceLock::new();
    static FIG2: OnceLock<SweepRun> = OnceLock::new();
    let cell = if symbol == "fig1" { &FIG1 } else { &FIG2 };
    cell.get_or_init(|| {
        let (omega0, _) = *escape_window();
        let text = format!(
            "symbol = \"{symbol}\"\ntheta = 0.8\nnu_sweep = {SWEEP:?}\nn_range = [{}, {}]\nN = 128\noutput_dir = \"unused\"\nwindow = {{ omega0 = {omega0}, theta = 0.8 }}\n",
            MODES.0, MODES.1
        );
        compute_sweep(&ExperimentConfig::from_toml(&text).unwrap(), &pool(0)).unwrap()
    })
}

#[test]
fn criterion_06_viscosity_limit() {
    let (omega0, margin) = *escape_window();
    let mut ok = true;
    let mut parts = vec![format!("omega0={omega0} (escape margin {margin:.3})")];
    for name in ["fig1", "fig2"] {
        let run = sweep(name);
        let checks: Vec<_> = run.checks().collect();
        let monotone = checks.iter().all(|c| c.monotone);
        let failed = checks.iter().filter(|c| !c.passed).count();
        let worst = run.worst();
        let (d, rate) = worst.map_or((0.0, 0.0), |w| (w.final_distance, w.final_distance / run.final_nu));
        ok &= run.passed() && !checks.is_empty();
        parts.push(format!(
            "{name}: {} in-window paths, {failed} failed, monotone={monotone}, max distance at nu=0.005 {d:.3e} (= {rate:.2} nu)",
            checks.len()
        ));
    }
    report(6, ok, &parts.join("; "));
    assert!(ok, "{}", parts.join("\n"));
}

#[test]
fn criterion_07_dissipativity() {
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0usize;
    for name in ["fig1", "fig2"] {
        for m in &sweep(name).modes {
            for (_, s) in &m.spectra {
                for (z, r) in s.eigenvalues.iter().zip(&s.residuals) {
                    if *r <= s.tol {
                        worst = worst.max(z.im);
                        count += 1;
                    }
                }
            }
        }
    }
    let ok = count > 0 && worst <= 1e-10;
    report(7, ok, &format!("max Im lambda = {worst:.3e} over {count} certified viscous eigenvalues (fig1, fig2; n in [-20,20]; 5 nu)"));
    assert!(ok);
}

#[test]
fn criterion_08_eigensolver_certification() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut res, mut tr, mut det) = (0.0f64, 0.0f64, 0.0f64);
    for n in [16usize, 64, 128] {
        for _ in 0..50 {
            let m = CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let s = eigendecompose(&m, 1e-8).unwrap();
            res = s.residuals.iter().copied().fold(res, f64::max);
            let sum: C64 = s.eigenvalues.iter().sum();
            tr = tr.max((sum - m.trace()).norm() / m.norm_fro());
            let prod: C64 = s.eigenvalues.iter().product();
            let d = m.determinant().unwrap();
            det = det.max((prod - d).norm() / d.norm());
        }
    }
    let ok = res <= 1e-8 && tr <= 1e-8 && det <= 1e-6;
    report(8, ok, &format!("150 random matrices (N in {{16, 64, 128}}): max residual {res:.3e}, trace {tr:.3e}, det {det:.3e}"));
    assert!(ok);
}

#[test]
fn criterion_09_inv_sqrt_contract() {
    let mut cases: Vec<(usize, f64, i64)> = Vec::new();
    for big_n in [16usize, 64] {
        cases.extend((-5..=5).map(|n| (big_n, 0.0, n)));
    }
    for theta in [0.4, 0.6, 0.8] {
        cases.extend((MODES.0..=MODES.1).map(|n| (128, theta, n)));
    }
    let (mut contract, mut min_re) = (0.0f64, f64::INFINITY);
    let p = pool(0);
    let results: Vec<(f64, f64)> = p.install(|| {
        use rayon::prelude::*;
        let parts: Vec<_> = [(16usize, 0.0), (64, 0.0), (128, 0.4), (128, 0.6), (128, 0.8)]
            .iter()
            .map(|&(big_n, theta)| {
                let g = grid(big_n).unwrap();
                let d = DeformationSpec::new(theta).unwrap();
                ((big_n, theta), DeformedParts::new(&g, &d, &builtin_symbol("fig2").unwrap()))
            })
            .collect();
        cases
            .par_iter()
            .map(|&(big_n, theta, n)| {
                let dp = &parts.iter().find(|(k, _)| *k == (big_n, theta)).unwrap().1;
                let m = dp.jap_d(n);
                let (root, r) = sqrt_pair(&m, SqrtMethod::Schur).unwrap();
                let r_inv = r.inverse().unwrap();
                let c = (&r_inv.matmul(&r_inv) - &m).norm_fro() / m.norm_fro();
                let re = eigendecompose(&root, 1e-8).unwrap().eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
                (c, re)
            })
            .collect()
    });
    for (c, re) in results {
        contract = contract.max(c);
        min_re = min_re.min(re);
    }
    let ok = contract <= 1e-8 && min_re >= -1e-12;
    report(
        9,
        ok,
        &format!("{} bracket matrices: max ||R^-2 - M|| / ||M|| = {contract:.3e}, min Re spec(sqrt M) = {min_re:.3e}", cases.len()),
    );
    assert!(ok);
}

fn read_outputs(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv" || e == "svg"))
        .collect();
    files.sort();
    files.into_iter().map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())).collect()
}

#[test]
fn criterion_10_determinism() {
    let text = r#"
symbol = "fig1"
theta = [0.6, 0.8]
nu_sweep = [0.1, 0.05, 0.02]
n_range = [-3, 3]
N = 32
output_dir = "unused"
seed = 5
window = { omega0 = 0.5, theta = 0.8 }
[fbi]
n_y = 32
n_xi = 32
degree = 2
random_cases = 1
refine = false
[fbi.lebeau]
n_y = 101
n_xi = 101
"#;
    let mut runs = Vec::new();
    for threads in [1usize, 3, 1] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(text, dir.path());
        let p = pool(threads);
        run_resonances(&cfg, &p).unwrap();
        run_viscosity_sweep(&cfg, &p).unwrap();
        run_fbi_check(&cfg, &p).unwrap();
        runs.push(read_outputs(dir.path()));
    }
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    let ok = names.len() >= 5 && runs.iter().all(|r| *r == runs[0]);
    report(10, ok, &format!("3 reruns (1, 3, 1 threads) byte-identical: {}", names.join(", ")));
    assert!(ok);
}
