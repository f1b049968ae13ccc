//! Minimum-cost bipartite assignment (Hungarian method with potentials).

use alloc::vec;
use alloc::vec::Vec;

/// Solves the rectangular assignment problem for a `rows × cols` cost matrix
/// given row-major. Returns, for each row, the assigned column; when
/// `rows > cols` the surplus rows get `None`. Exactly `min(rows, cols)` pairs
/// are matched and their total cost is minimal.
pub fn min_cost_assignment(cost: &[f64], rows: usize, cols: usize) -> Vec<Option<usize>> {
    assert_eq!(cost.len(), rows * cols, "cost matrix size");
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    if rows <= cols {
        hungarian(|i, j| cost[i * cols + j], rows, cols)
    } else {
        let by_col = hungarian(|j, i| cost[i * cols + j], cols, rows);
        let mut out = vec![None; rows];
        for (j, i) in by_col.into_iter().enumerate() {
            if let Some(i) = i {
                out[i] = Some(j);
            }
        }
        out
    }
}

/// `n ≤ m`; every row is assigned.
fn hungarian(cost: impl Fn(usize, usize) -> f64, n: usize, m: usize) -> Vec<Option<usize>> {
    // 1-based potentials; column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = Some(j - 1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(cost: &[f64], cols: usize, a: &[Option<usize>]) -> f64 {
        a.iter().enumerate().filter_map(|(i, j)| j.map(|j| cost[i * cols + j])).sum()
    }

    fn brute_force(cost: &[f64], rows: usize, cols: usize) -> f64 {
        // enumerate injective maps from the smaller side
        fn rec(cost: &[f64], rows: usize, cols: usize, i: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if i == rows {
                *best = best.min(acc);
                return;
            }
            for j in 0..cols {
                if !used[j] {
                    used[j] = true;
                    rec(cost, rows, cols, i + 1, used, acc + cost[i * cols + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        if rows <= cols {
            rec(cost, rows, cols, 0, &mut vec![false; cols], 0.0, &mut best);
        } else {
            let t: Vec<f64> = (0..cols).flat_map(|j| (0..rows).map(move |i| (i, j))).map(|(i, j)| cost[i * cols + j]).collect();
            rec(&t, cols, rows, 0, &mut vec![false; rows], 0.0, &mut best);
        }
        best
    }

    #[test]
    fn square_known_optimum() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = min_cost_assignment(&cost, 3, 3);
        assert_eq!(total(&cost, 3, &a), 5.0);
    }

    #[test]
    fn rectangular_matches_brute_force() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for (rows, cols) in [(1, 1), (2, 3), (3, 2), (4, 4), (5, 3), (3, 6)] {
            for _ in 0..20 {
                let cost: Vec<f64> = (0..rows * cols).map(|_| next()).collect();
                let a = min_cost_assignment(&cost, rows, cols);
                assert_eq!(a.iter().filter(|x| x.is_some()).count(), rows.min(cols));
                let mut seen: Vec<usize> = a.iter().flatten().copied().collect();
                seen.sort();
                seen.dedup();
                assert_eq!(seen.len(), rows.min(cols));
                assert!((total(&cost, cols, &a) - brute_force(&cost, rows, cols)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_sides() {
        assert_eq!(min_cost_assignment(&[], 0, 3), Vec::<Option<usize>>::new());
        assert_eq!(min_cost_assignment(&[], 2, 0), vec![None, None]);
    }
}
