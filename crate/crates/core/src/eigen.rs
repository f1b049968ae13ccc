//! Dense complex Schur decomposition.
//!
//! `A = D Z T Z* D⁻¹` with `D` a power-of-two diagonal balancing, `Z` unitary
//! and `T` upper triangular. The reduction is Householder Hessenberg followed by
//! single-shift QR (Wilkinson shifts, implicit bulge chase with Givens
//! rotations, exceptional shifts every tenth iteration on a stalled block).

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::{Float, Zero};

use crate::linalg::CMatrix;
use crate::{Error, Result, C64};

#[inline]
fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

#[derive(Clone, Debug)]
pub struct Schur {
    /// Upper triangular factor; its diagonal holds the eigenvalues.
    pub t: CMatrix,
    /// Unitary Schur vectors of the balanced matrix.
    pub z: CMatrix,
    /// Balancing scale `D`.
    pub scale: Vec<f64>,
    /// QR sweeps spent.
    pub sweeps: usize,
}

/// Iteration budget: `30 · N` QR sweeps.
pub fn sweep_budget(n: usize) -> usize {
    30 * n.max(1)
}

/// Diagonal similarity `D⁻¹ A D` with powers of two that roughly equalizes row
/// and column norms. Returns the balanced matrix and `D`.
pub fn balance(a: &CMatrix) -> (CMatrix, Vec<f64>) {
    let n = a.rows();
    let mut b = a.clone();
    let mut scale = vec![1.0; n];
    const RADIX: f64 = 2.0;
    loop {
        let mut done = true;
        for i in 0..n {
            let (mut c, mut r) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += abs1(b[(j, i)]);
                    r += abs1(b[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                scale[i] *= f;
                for j in 0..n {
                    b[(i, j)] = b[(i, j)] / f;
                    b[(j, i)] = b[(j, i)] * f;
                }
            }
        }
        if done {
            return (b, scale);
        }
    }
}

/// Householder reduction `A = Q H Q*` with `H` upper Hessenberg.
pub fn hessenberg(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    let mut v = vec![C64::zero(); n];
    for k in 0..n.saturating_sub(2) {
        let alpha = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 || (k + 2..n).all(|i| h[(i, k)].is_zero()) {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.is_zero() { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let m = n - k - 1;
        v[..m].iter_mut().zip(k + 1..n).for_each(|(vi, i)| *vi = h[(i, k)]);
        v[0] += phase * alpha;
        let vnorm2: f64 = v[..m].iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;
        let v = &v[..m];
        // left: rows k+1.. of H
        for j in k..n {
            let dot: C64 = v.iter().zip(k + 1..n).map(|(vi, i)| vi.conj() * h[(i, j)]).sum();
            let f = dot * tau;
            for (vi, i) in v.iter().zip(k + 1..n) {
                h[(i, j)] -= vi * f;
            }
        }
        // right: columns k+1.. of H and Q
        for mat in [&mut h, &mut q] {
            for i in 0..n {
                let dot: C64 = v.iter().zip(k + 1..n).map(|(vi, j)| mat[(i, j)] * vi).sum();
                let f = dot * tau;
                for (vi, j) in v.iter().zip(k + 1..n) {
                    mat[(i, j)] -= f * vi.conj();
                }
            }
        }
        h[(k + 1, k)] = -phase * alpha;
        for i in k + 2..n {
            h[(i, k)] = C64::zero();
        }
    }
    (h, q)
}

/// Rotation `G = [[c, s], [−s̄, c]]` with `G (a, b)ᵀ = (r, 0)ᵀ`.
#[inline]
fn givens(a: C64, b: C64) -> (f64, C64, C64) {
    if b.is_zero() {
        return (1.0, C64::zero(), a);
    }
    if a.is_zero() {
        let nb = b.norm();
        return (0.0, b.conj() / nb, C64::new(nb, 0.0));
    }
    let na = a.norm();
    let norm = na.hypot(b.norm());
    let phase = a / na;
    (na / norm, phase * b.conj() / norm, phase * norm)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = (a + d) * 0.5;
    let half_diff = (a - d) * 0.5;
    let disc = (half_diff * half_diff + b * c).sqrt();
    let (m1, m2) = (half_tr + disc, half_tr - disc);
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Reduces an upper Hessenberg `h` to upper triangular form in place,
/// accumulating the rotations into `z`.
fn hessenberg_qr(h: &mut CMatrix, z: &mut CMatrix, budget: usize) -> Result<usize> {
    let n = h.rows();
    if n < 2 {
        return Ok(0);
    }
    let eps = f64::EPSILON;
    let tiny = f64::MIN_POSITIVE / eps;
    let mut sweeps = 0usize;
    let mut its = 0usize;
    let mut hi = n - 1;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = abs1(h[(l, l - 1)]);
            let mut tst = abs1(h[(l - 1, l - 1)]) + abs1(h[(l, l)]);
            if tst == 0.0 {
                if l >= 2 {
                    tst += abs1(h[(l - 1, l - 2)]);
                }
                if l + 1 < n {
                    tst += abs1(h[(l + 1, l)]);
                }
            }
            if sub <= tiny || sub <= eps * tst {
                h[(l, l - 1)] = C64::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        if sweeps >= budget {
            return Err(Error::NonConvergence { sweeps });
        }
        sweeps += 1;
        its += 1;

        let shift = if its % 10 == 0 {
            h[(hi, hi)] + C64::new(0.75 * abs1(h[(hi, hi - 1)]), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        for k in l..hi {
            let (x, y) = if k == l { (h[(l, l)] - shift, h[(l + 1, l)]) } else { (h[(k, k - 1)], h[(k + 1, k - 1)]) };
            let (c, s, r) = givens(x, y);
            if k > l {
                h[(k, k - 1)] = r;
                h[(k + 1, k - 1)] = C64::zero();
            }
            let sc = s.conj();
            for j in k..n {
                let (a, b) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = a * c + s * b;
                h[(k + 1, j)] = b * c - sc * a;
            }
            let last = (k + 2).min(hi);
            for i in 0..=last {
                let (a, b) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = a * c + b * sc;
                h[(i, k + 1)] = b * c - a * s;
            }
            for i in 0..n {
                let (a, b) = (z[(i, k)], z[(i, k + 1)]);
                z[(i, k)] = a * c + b * sc;
                z[(i, k + 1)] = b * c - a * s;
            }
        }
    }
    // clear roundoff below the diagonal
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = C64::zero();
        }
    }
    Ok(sweeps)
}

/// Complex Schur decomposition of a square matrix.
pub fn schur(a: &CMatrix) -> Result<Schur> {
    if !a.is_square() {
        return Err(Error::Dimension(alloc::format!("Schur of {}x{}", a.rows(), a.cols())));
    }
    if a.as_slice().iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let (balanced, scale) = balance(a);
    let (mut t, mut z) = hessenberg(&balanced);
    let sweeps = hessenberg_qr(&mut t, &mut z, sweep_budget(a.rows()))?;
    Ok(Schur { t, z, scale, sweeps })
}

impl Schur {
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.t.diag()
    }

    /// `D Z X D⁻¹` for an upper triangular `X` in Schur coordinates.
    pub fn reconstruct(&self, x: &CMatrix) -> CMatrix {
        let m = self.z.matmul(x).matmul(&self.z.adjoint());
        let d = &self.scale;
        CMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] * (d[i] / d[j]))
    }

    /// Unit-norm eigenvectors (columns), from back substitution on `T`.
    pub fn eigenvectors(&self) -> CMatrix {
        let n = self.t.rows();
        let t = &self.t;
        let tnorm = t.max_abs();
        let smin = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE);
        let big = 1e250;
        let mut out = CMatrix::zeros(n, n);
        let mut x = vec![C64::zero(); n];
        for k in 0..n {
            let lambda = t[(k, k)];
            x.iter_mut().for_each(|v| *v = C64::zero());
            x[k] = C64::new(1.0, 0.0);
            for i in (0..k).rev() {
                let s: C64 = (i + 1..=k).map(|j| t[(i, j)] * x[j]).sum();
                let mut denom = t[(i, i)] - lambda;
                if denom.norm() < smin {
                    denom = C64::new(smin, 0.0);
                }
                x[i] = -s / denom;
                if x[i].norm() > big {
                    let f = 1.0 / x[i].norm();
                    x[i..=k].iter_mut().for_each(|v| *v *= f);
                }
            }
            let mut v: Vec<C64> = (0..n)
                .map(|i| (0..=k).map(|j| self.z[(i, j)] * x[j]).sum::<C64>() * self.scale[i])
                .collect();
            let norm = crate::linalg::vec_norm(&v);
            v.iter_mut().for_each(|c| *c /= norm);
            for i in 0..n {
                out[(i, k)] = v[i];
            }
        }
        out
    }
}

/// Inverse of an upper triangular matrix.
pub fn upper_triangular_inverse(u: &CMatrix) -> Result<CMatrix> {
    let n = u.rows();
    let mut inv = CMatrix::zeros(n, n);
    for j in 0..n {
        if u[(j, j)].is_zero() {
            return Err(Error::Singular);
        }
        inv[(j, j)] = u[(j, j)].inv();
        for i in (0..j).rev() {
            let s: C64 = (i + 1..=j).map(|k| u[(i, k)] * inv[(k, j)]).sum();
            inv[(i, j)] = -s / u[(i, i)];
        }
    }
    Ok(inv)
}
