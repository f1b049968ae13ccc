//! Uniform grids on the circle and the unitary DFT matrix.
//!
//! Physical points are `X1(j) = 2πj/N`, `j = 0..N`. Fourier indices are stored
//! as signed integers in the fixed order `−N/2, …, N/2 − 1`, and every
//! Fourier-side matrix row and column follows that order.

use alloc::vec::Vec;
use core::f64::consts::PI;


#[allow(unused_imports)]
use num_traits::Float;
use crate::linalg::CMatrix;
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    n: usize,
    x1: Vec<f64>,
    k: Vec<i64>,
}

/// Builds the grid of size `n` (even, at least 4).
pub fn grid(n: usize) -> Result<GridSpec> {
    GridSpec::new(n)
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGridSize(n));
        }
        let x1 = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let half = (n / 2) as i64;
        let k = (-half..half).collect();
        Ok(Self { n, x1, k })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    /// Physical grid points.
    pub fn x1(&self) -> &[f64] {
        &self.x1
    }

    /// Fourier indices, `−N/2 ..= N/2 − 1`.
    pub fn k(&self) -> &[i64] {
        &self.k
    }

    /// Position of Fourier index `k` in [`GridSpec::k`], if represented.
    pub fn k_position(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        (-half..half).contains(&k).then(|| (k + half) as usize)
    }

    /// `Diag(K)` as complex diagonal entries.
    pub fn k_diag(&self) -> Vec<C64> {
        self.k.iter().map(|&k| C64::new(k as f64, 0.0)).collect()
    }

    /// `F · Diag(d) · F*`, the Fourier-side matrix of multiplication by `d(X1)`.
    pub fn conjugate_diag(&self, d: &[C64]) -> CMatrix {
        CMatrix::conjugate_diag(&dft_matrix(self), d)
    }
}

/// The DFT matrix `(F_N)_{K,j} = −e^{−2πi jK/N}/√N`, rows indexed by `K` in grid
/// order and columns by `j`.
///
/// The global minus sign is kept; every operator of the form `F A F*` is
/// invariant under it.
pub fn dft_matrix(grid: &GridSpec) -> CMatrix {
    dft_matrix_with_phase(grid, C64::new(-1.0, 0.0))
}

/// DFT matrix multiplied by an arbitrary unimodular `phase` instead of `−1`.
pub fn dft_matrix_with_phase(grid: &GridSpec, phase: C64) -> CMatrix {
    let n = grid.size();
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |row, j| {
        let k = grid.k[row];
        // reduce jK mod N before forming the angle to keep it small
        let m = (j as i64 * k).rem_euclid(n as i64);
        let angle = -2.0 * PI * m as f64 / n as f64;
        phase * C64::from_polar(scale, angle)
    })
}
