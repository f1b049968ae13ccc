//! Dense per-mode matrices for the deformed operator `P_θ` and the viscous
//! operator `P + iνΔ`, both acting on `e^{inx2} L²(x1)` and written in the
//! Fourier basis of [`GridSpec`].

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::{Float, Zero};

use crate::deformation::{gamma, gamma_prime, DeformationSpec};
use crate::eigen::{schur, upper_triangular_inverse};
use crate::grid::{dft_matrix, GridSpec};
use crate::linalg::CMatrix;
use crate::symbols::{MultiplierFn, SymbolFamily};
use crate::{Error, Result, C64};

/// Default eigenvector condition limit for [`SqrtMethod::Eigen`].
pub const DEFAULT_COND_LIMIT: f64 = 1e8;

/// Relative distance to `(−∞, 0]` below which an eigenvalue is rejected.
pub const BRANCH_CUT_TOL: f64 = 1e-10;

/// How [`inv_sqrt`] forms the principal square root.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SqrtMethod {
    /// Triangular square root of the Schur factor. Needs no diagonalization.
    Schur,
    /// `V Diag(λ^{−1/2}) V⁻¹`; errors when `cond(V)` exceeds the limit.
    Eigen { cond_limit: f64 },
}

impl Default for SqrtMethod {
    fn default() -> Self {
        SqrtMethod::Schur
    }
}

/// `Γ = F Diag(1/γ'_θ(X1)) F*`.
pub fn gamma_matrix(grid: &GridSpec, d: &DeformationSpec) -> CMatrix {
    let diag: Vec<C64> = grid.x1().iter().map(|&x| gamma_prime(d, x).inv()).collect();
    grid.conjugate_diag(&diag)
}

/// `⟨D⟩_θ = (1 + n²) I + (ΓK)²`.
pub fn jap_d_theta(grid: &GridSpec, d: &DeformationSpec, n: i64) -> CMatrix {
    let gk = gamma_matrix(grid, d).mul_diag_right(&grid.k_diag());
    jap_d_from_gk(&gk, n)
}

fn jap_d_from_gk(gk: &CMatrix, n: i64) -> CMatrix {
    gk.matmul(gk).add_diag(C64::new(1.0 + (n * n) as f64, 0.0))
}

fn check_branch(values: &[C64], norm: f64) -> Result<()> {
    let tol = BRANCH_CUT_TOL * norm.max(f64::MIN_POSITIVE);
    for &l in values {
        if l.im.abs() <= tol && l.re <= tol {
            return Err(Error::BranchCut { re: l.re, im: l.im });
        }
    }
    Ok(())
}

/// Principal square root `√M` and its inverse, with the spectrum of `√M` in
/// `Re ≥ 0`.
pub fn sqrt_pair(m: &CMatrix, method: SqrtMethod) -> Result<(CMatrix, CMatrix)> {
    if !m.is_square() {
        return Err(Error::Dimension(alloc::format!("square root of {}x{}", m.rows(), m.cols())));
    }
    let s = schur(m)?;
    let values = s.eigenvalues();
    check_branch(&values, m.norm_fro())?;
    match method {
        SqrtMethod::Schur => {
            let t = &s.t;
            let n = t.rows();
            let mut u = CMatrix::zeros(n, n);
            for j in 0..n {
                u[(j, j)] = t[(j, j)].sqrt();
                for i in (0..j).rev() {
                    let acc: C64 = (i + 1..j).map(|k| u[(i, k)] * u[(k, j)]).sum();
                    let denom = u[(i, i)] + u[(j, j)];
                    if denom.is_zero() {
                        return Err(Error::Singular);
                    }
                    u[(i, j)] = (t[(i, j)] - acc) / denom;
                }
            }
            let u_inv = upper_triangular_inverse(&u)?;
            Ok((s.reconstruct(&u), s.reconstruct(&u_inv)))
        }
        SqrtMethod::Eigen { cond_limit } => {
            let v = s.eigenvectors();
            let v_inv = v.inverse().map_err(|_| Error::IllConditionedEigenbasis { cond: f64::INFINITY, limit: cond_limit })?;
            let cond = v.norm_one() * v_inv.norm_one();
            if !(cond <= cond_limit) {
                return Err(Error::IllConditionedEigenbasis { cond, limit: cond_limit });
            }
            let roots: Vec<C64> = values.iter().map(|l| l.sqrt()).collect();
            let inv_roots: Vec<C64> = roots.iter().map(|r| r.inv()).collect();
            Ok((v.mul_diag_right(&roots).matmul(&v_inv), v.mul_diag_right(&inv_roots).matmul(&v_inv)))
        }
    }
}

/// `(√M)⁻¹` for the principal square root.
pub fn inv_sqrt(m: &CMatrix, method: SqrtMethod) -> Result<CMatrix> {
    sqrt_pair(m, method).map(|(_, r)| r)
}

/// `‖R⁻² − M‖_F / ‖M‖_F`, with `R⁻¹` formed by LU.
pub fn inv_sqrt_residual(m: &CMatrix, r: &CMatrix) -> Result<f64> {
    let root = r.inverse()?;
    let diff = &root.matmul(&root) - m;
    Ok(diff.norm_fro() / m.norm_fro().max(f64::MIN_POSITIVE))
}

/// Deformed multiplier `V^θ = F V̂ F*` with
/// `V̂_ij = (1/N) Σ_{|k| ≤ k_max} e^{ik(γ(X_i) − γ(X_j))} V(k) γ'(X_j)`.
///
/// The factor `γ'(X_j)` is the contour Jacobian; at `θ = 0` it is 1 and the
/// result is `Diag(V(K))` up to aliasing of the tail beyond `N/2`.
pub fn v_theta_matrix(v: &MultiplierFn, grid: &GridSpec, d: &DeformationSpec, k_max: usize) -> CMatrix {
    let n = grid.size();
    if v.is_zero() {
        return CMatrix::zeros(n, n);
    }
    let km = k_max as i64;
    // (k, ln|V(k)|, sign) for the nonzero terms
    let terms: Vec<(f64, f64, f64)> = (-km..=km)
        .filter_map(|k| {
            let val = v.eval(k as f64);
            (val != 0.0).then(|| (k as f64, val.abs().ln(), val.signum()))
        })
        .collect();
    let g: Vec<C64> = grid.x1().iter().map(|&x| gamma(d, x)).collect();
    let jac: Vec<C64> = grid.x1().iter().map(|&x| gamma_prime(d, x)).collect();
    let w = 1.0 / n as f64;
    let vhat = CMatrix::from_fn(n, n, |i, j| {
        let delta = g[i] - g[j];
        let mut acc = C64::zero();
        for &(k, log_v, sign) in &terms {
            // e^{ikΔ}V(k) in log form so large |e^{ikΔ}| never overflows alone
            let z = C64::new(-k * delta.im + log_v, k * delta.re);
            acc += C64::from_polar(sign * z.re.exp(), z.im);
        }
        acc * jac[j] * w
    });
    CMatrix::conjugate(&dft_matrix(grid), &vhat)
}

/// Truncation used for `v` on `grid` under `d`.
pub fn v_truncation(v: &MultiplierFn, grid: &GridSpec, d: &DeformationSpec) -> usize {
    v.truncation(grid.size() / 2, d.theta * d.oscillation())
}

/// `S^θ = F Diag(sin γ_θ(X1)) F*`.
pub fn s_theta_matrix(grid: &GridSpec, d: &DeformationSpec) -> CMatrix {
    let diag: Vec<C64> = grid.x1().iter().map(|&x| gamma(d, x).sin()).collect();
    grid.conjugate_diag(&diag)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixKind {
    Deformed,
    Viscous,
}

#[derive(Clone, Debug)]
pub struct ModeMatrix {
    pub matrix: CMatrix,
    pub n: i64,
    pub theta: f64,
    pub nu: f64,
    pub grid: GridSpec,
    pub provenance: MatrixKind,
}

/// `S(I − V_m) + (I − V_m)S + V_a`.
fn coupling(s: &CMatrix, vm: &CMatrix, va: &CMatrix) -> CMatrix {
    let sv = s.matmul(vm);
    let vs = vm.matmul(s);
    let mut out = s.scale(C64::new(2.0, 0.0));
    out = &out - &sv;
    out = &out - &vs;
    &out + va
}

/// The `n`-independent pieces of `P_N^θ` for one `(grid, θ, symbol)`; reused
/// across modes.
#[derive(Clone, Debug)]
pub struct DeformedParts {
    grid: GridSpec,
    theta: f64,
    gk: CMatrix,
    coupling: CMatrix,
    method: SqrtMethod,
}

impl DeformedParts {
    pub fn new(grid: &GridSpec, d: &DeformationSpec, s: &SymbolFamily) -> Self {
        let gk = gamma_matrix(grid, d).mul_diag_right(&grid.k_diag());
        let st = s_theta_matrix(grid, d);
        let vm = v_theta_matrix(&s.v_m, grid, d, v_truncation(&s.v_m, grid, d));
        let va = v_theta_matrix(&s.v_a, grid, d, v_truncation(&s.v_a, grid, d));
        Self { grid: grid.clone(), theta: d.theta, gk, coupling: coupling(&st, &vm, &va), method: SqrtMethod::Schur }
    }

    pub fn with_method(mut self, method: SqrtMethod) -> Self {
        self.method = method;
        self
    }

    pub fn jap_d(&self, n: i64) -> CMatrix {
        jap_d_from_gk(&self.gk, n)
    }

    pub fn mode(&self, n: i64) -> Result<ModeMatrix> {
        let r = inv_sqrt(&self.jap_d(n), self.method)?;
        let matrix = &r.scale(C64::new(n as f64, 0.0)) + &self.coupling;
        Ok(ModeMatrix {
            matrix,
            n,
            theta: self.theta,
            nu: 0.0,
            grid: self.grid.clone(),
            provenance: MatrixKind::Deformed,
        })
    }
}

/// `P_N^θ = n(√⟨D⟩_θ)⁻¹ + S^θ(I − V_m^θ) + (I − V_m^θ)S^θ + V_a^θ`.
pub fn assemble_deformed(grid: &GridSpec, d: &DeformationSpec, s: &SymbolFamily, n: i64) -> Result<ModeMatrix> {
    DeformedParts::new(grid, d, s).mode(n)
}

/// The `n`-independent pieces of `P_N^ν`.
#[derive(Clone, Debug)]
pub struct ViscousParts {
    grid: GridSpec,
    coupling: CMatrix,
}

impl ViscousParts {
    pub fn new(grid: &GridSpec, s: &SymbolFamily) -> Self {
        let sm = grid.conjugate_diag(&grid.x1().iter().map(|&x| C64::new(x.sin(), 0.0)).collect::<Vec<_>>());
        let diag = |v: &MultiplierFn| {
            CMatrix::from_diag(&grid.k().iter().map(|&k| C64::new(v.eval(k as f64), 0.0)).collect::<Vec<_>>())
        };
        Self { grid: grid.clone(), coupling: coupling(&sm, &diag(&s.v_m), &diag(&s.v_a)) }
    }

    pub fn mode(&self, n: i64, nu: f64, full_mode_laplacian: bool) -> Result<ModeMatrix> {
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("nu must be finite and non-negative, got {nu}")));
        }
        let nn = (n * n) as f64;
        let mut matrix = self.coupling.clone();
        for (i, &k) in self.grid.k().iter().enumerate() {
            let kk = (k * k) as f64;
            let lap = if full_mode_laplacian { kk + nn } else { kk };
            matrix[(i, i)] += C64::new(n as f64 / (1.0 + nn + kk).sqrt(), -nu * lap);
        }
        Ok(ModeMatrix { matrix, n, theta: 0.0, nu, grid: self.grid.clone(), provenance: MatrixKind::Viscous })
    }
}

/// `P_N^ν = n Diag((1+n²+K²)^{−1/2}) + S(I − V_m) + (I − V_m)S + V_a − iνK²`
/// with `V = Diag(V(K))`; `full_mode_laplacian` uses `K² + n²` in the last term.
pub fn assemble_viscous(grid: &GridSpec, s: &SymbolFamily, n: i64, nu: f64, full_mode_laplacian: bool) -> Result<ModeMatrix> {
    ViscousParts::new(grid, s).mode(n, nu, full_mode_laplacian)
}
