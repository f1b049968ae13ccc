//! Certified spectra, window filtering, and eigenvalue trajectories across a
//! decreasing viscosity sweep.

use alloc::vec::Vec;
use core::cmp::Ordering;


#[allow(unused_imports)]
use num_traits::Float;
use crate::assign::min_cost_assignment;
use crate::eigen::schur;
use crate::linalg::CMatrix;
use crate::{Error, Result, C64};

/// Default residual tolerance for certification.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;

/// Eigenvalues closer than this are reported as one cluster.
pub const CLUSTER_TOL: f64 = 1e-6;

/// Where a spectrum came from: mode `n`, deformation `θ`, viscosity `ν`, grid size.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Provenance {
    pub n: i64,
    pub theta: f64,
    pub nu: f64,
    pub grid_n: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    /// `‖Mv − λv‖ / ‖M‖_F` for unit `v`, one per eigenvalue.
    pub residuals: Vec<f64>,
    pub source: Provenance,
    pub tol: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Indices whose residual exceeds the tolerance.
    pub fn uncertified(&self) -> Vec<usize> {
        self.residuals.iter().enumerate().filter(|(_, &r)| !(r <= self.tol)).map(|(i, _)| i).collect()
    }

    pub fn is_certified(&self) -> bool {
        self.residuals.iter().all(|&r| r <= self.tol)
    }

    pub fn with_source(mut self, source: Provenance) -> Self {
        self.source = source;
        self
    }

    /// Eigenvalues and residuals sorted by `(Re, Im)`.
    pub fn sorted(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| cmp_complex(self.eigenvalues[a], self.eigenvalues[b]));
        Self {
            eigenvalues: idx.iter().map(|&i| self.eigenvalues[i]).collect(),
            residuals: idx.iter().map(|&i| self.residuals[i]).collect(),
            ..*self
        }
    }

    /// Groups eigenvalues within [`CLUSTER_TOL`] (single linkage) and returns
    /// each cluster's mean and size, ordered by `(Re, Im)`.
    pub fn clusters(&self) -> Vec<(C64, usize)> {
        let s = self.sorted();
        let n = s.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for i in 0..n {
            for j in i + 1..n {
                if (s.eigenvalues[j].re - s.eigenvalues[i].re) > CLUSTER_TOL {
                    break;
                }
                if (s.eigenvalues[j] - s.eigenvalues[i]).norm() <= CLUSTER_TOL {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
        let mut out: Vec<(usize, C64, usize)> = Vec::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            match out.iter_mut().find(|(root, _, _)| *root == r) {
                Some((_, sum, count)) => {
                    *sum += s.eigenvalues[i];
                    *count += 1;
                }
                None => out.push((r, s.eigenvalues[i], 1)),
            }
        }
        out.into_iter().map(|(_, sum, count)| (sum / count as f64, count)).collect()
    }
}

/// Total order on complex numbers by `(Re, Im)`.
pub fn cmp_complex(a: C64, b: C64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// All eigenvalues of `m` with residual certificates.
///
/// Residuals are `‖Mv − λv‖/‖M‖_F` for the unit eigenvector `v`; entries above
/// `tol` are reported by [`Spectrum::uncertified`].
pub fn eigendecompose(m: &CMatrix, tol: f64) -> Result<Spectrum> {
    let s = schur(m)?;
    let values = s.eigenvalues();
    let vectors = s.eigenvectors();
    let n = m.rows();
    let norm = m.norm_fro().max(f64::MIN_POSITIVE);
    let mut col = alloc::vec![C64::new(0.0, 0.0); n];
    let residuals = values
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            for i in 0..n {
                col[i] = vectors[(i, k)];
            }
            let mv = m.mul_vec(&col);
            let r: f64 = mv.iter().zip(&col).map(|(a, b)| (a - lambda * b).norm_sqr()).sum::<f64>().sqrt();
            if m.norm_fro() == 0.0 {
                r
            } else {
                r / norm
            }
        })
        .collect();
    Ok(Spectrum {
        eigenvalues: values,
        residuals,
        source: Provenance { grid_n: n, ..Provenance::default() },
        tol,
    })
}

/// The region `(−ω0, ω0) + i(−ω0 θ, ∞)` where the deformed resolvent is
/// meromorphic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralWindow {
    pub omega0: f64,
    pub theta: f64,
}

impl SpectralWindow {
    pub fn new(omega0: f64, theta: f64) -> Result<Self> {
        if !(omega0 >= 0.0) || !(theta >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "window needs omega0 >= 0 and theta >= 0, got {omega0}, {theta}"
            )));
        }
        Ok(Self { omega0, theta })
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re.abs() < self.omega0 && z.im > -self.omega0 * self.theta
    }
}

/// Keeps the eigenvalues inside the window.
pub fn filter_window(s: &Spectrum, w: &SpectralWindow) -> Spectrum {
    let keep: Vec<usize> = (0..s.len()).filter(|&i| w.contains(s.eigenvalues[i])).collect();
    Spectrum {
        eigenvalues: keep.iter().map(|&i| s.eigenvalues[i]).collect(),
        residuals: keep.iter().map(|&i| s.residuals[i]).collect(),
        ..*s
    }
}

/// Allowed jump between consecutive sweep points: `a·|Δν|^{1/2} + b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuityBudget {
    pub sqrt_coeff: f64,
    pub offset: f64,
}

impl Default for ContinuityBudget {
    fn default() -> Self {
        Self { sqrt_coeff: 0.5, offset: 0.05 }
    }
}

impl ContinuityBudget {
    pub fn allows(&self, jump: f64, nu_a: f64, nu_b: f64) -> bool {
        jump <= self.sqrt_coeff * (nu_a - nu_b).abs().sqrt() + self.offset
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPath {
    pub path_id: usize,
    /// Strictly decreasing viscosities the path was observed at.
    pub nus: Vec<f64>,
    pub values: Vec<C64>,
    /// Set when some consecutive jump exceeds the continuity budget.
    pub broken: bool,
    /// Nearest resonance to the value at the smallest `ν`, with its distance.
    pub matched_resonance: Option<(C64, f64)>,
}

impl EigenPath {
    /// Value at the smallest `ν` reached.
    pub fn limit_candidate(&self) -> C64 {
        *self.values.last().expect("paths are never empty")
    }

    pub fn final_nu(&self) -> f64 {
        *self.nus.last().expect("paths are never empty")
    }

    /// Distance of every path point to `target`.
    pub fn distances_to(&self, target: C64) -> Vec<f64> {
        self.values.iter().map(|v| (v - target).norm()).collect()
    }
}

/// Links eigenvalues of consecutive spectra in a decreasing `ν` sweep.
///
/// Between consecutive steps the live path ends are paired with the new
/// eigenvalues by a minimum total displacement assignment on `|λ − μ|`.
/// Unpaired new eigenvalues start paths; unpaired path ends terminate. Each
/// spectrum is first sorted by `(Re, Im)` so ties resolve deterministically
/// and path ids follow that order.
pub fn match_paths(sweeps: &[(f64, Spectrum)], budget: ContinuityBudget) -> Result<Vec<EigenPath>> {
    if sweeps.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(Error::InvalidParameter("viscosities must be strictly decreasing".into()));
    }
    let mut paths: Vec<EigenPath> = Vec::new();
    let mut live: Vec<usize> = Vec::new();
    for (step, (nu, spectrum)) in sweeps.iter().enumerate() {
        let values = spectrum.sorted().eigenvalues;
        let mut next_live = Vec::with_capacity(values.len());
        let assignment: Vec<Option<usize>> = if step == 0 || live.is_empty() || values.is_empty() {
            alloc::vec![None; live.len()]
        } else {
            let cost: Vec<f64> = live
                .iter()
                .flat_map(|&p| {
                    let end = paths[p].limit_candidate();
                    values.iter().map(move |v| (v - end).norm())
                })
                .collect();
            min_cost_assignment(&cost, live.len(), values.len())
        };
        let mut taken = alloc::vec![None; values.len()];
        for (slot, target) in assignment.iter().enumerate() {
            if let Some(j) = *target {
                taken[j] = Some(live[slot]);
            }
        }
        for (j, &v) in values.iter().enumerate() {
            match taken[j] {
                Some(p) => {
                    let path = &mut paths[p];
                    let jump = (v - path.limit_candidate()).norm();
                    if !budget.allows(jump, path.final_nu(), *nu) {
                        path.broken = true;
                    }
                    path.nus.push(*nu);
                    path.values.push(v);
                    next_live.push(p);
                }
                None => {
                    let id = paths.len();
                    paths.push(EigenPath {
                        path_id: id,
                        nus: alloc::vec![*nu],
                        values: alloc::vec![v],
                        broken: false,
                        matched_resonance: None,
                    });
                    next_live.push(id);
                }
            }
        }
        live = next_live;
    }
    Ok(paths)
}

/// Sets `matched_resonance` on every path to the resonance nearest its limit
/// candidate.
pub fn attach_resonances(paths: &mut [EigenPath], resonances: &[C64]) {
    for p in paths {
        let z = p.limit_candidate();
        p.matched_resonance = resonances
            .iter()
            .map(|&r| (r, (r - z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(cmp_complex(a.0, b.0)));
    }
}

/// `max_{v ∈ limits} min_{r ∈ resonances} |v − r|` over the points inside the
/// window. Directed: resonances without a nearby viscous limit do not count.
pub fn resonance_distance(viscous_limits: &[C64], resonances: &Spectrum, window: &SpectralWindow) -> Result<f64> {
    let limits: Vec<C64> = viscous_limits.iter().copied().filter(|&z| window.contains(z)).collect();
    let res = filter_window(resonances, window);
    if limits.is_empty() {
        return Ok(0.0);
    }
    if res.is_empty() {
        return Err(Error::EmptyResonanceSet);
    }
    Ok(limits
        .iter()
        .map(|&v| res.eigenvalues.iter().map(|&r| (v - r).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max))
}

/// Whether `d` (ordered along decreasing `ν`) never grows by more than the
/// factor `1 + slack` between consecutive points.
pub fn is_monotone_nonincreasing(d: &[f64], slack: f64) -> bool {
    d.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
}
