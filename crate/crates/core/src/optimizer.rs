//! Max-min optimization of the threshold distribution: choose fractions on
//! the simplex maximizing the minimum transfer-curve gap over the sampled
//! grid.
//!
//! The orthogonalized de-clip transfer is a monotone transform of the
//! fraction-linear mixture MMSE, so "gap at grid point `i` at least `t`"
//! is equivalent to one linear constraint on the fractions. The max-min
//! program is solved exactly (up to a bisection tolerance) by bisecting on
//! `t` with a phase-1 simplex feasibility test at each step — no
//! general-purpose convex solver needed.

use crate::error::{Error, Result};
use crate::se::{declip_transfer_from_mmse, SeAnalysis};

/// Fractions below this after solving are zeroed and the rest renormalized.
const FRACTION_FLOOR: f64 = 1e-6;

/// The sampled max-min instance: grid points, inverse demod transfer
/// values, and the per-candidate MMSE table.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProblem {
    pub v_grid: Vec<f64>,
    /// Inverse demod transfer at each grid point (capped at the table end
    /// where the target exceeds every tabulated output).
    pub demod_inverse: Vec<f64>,
    /// `mmse[k][i]`: de-clip MMSE of candidate `k` at grid point `i`.
    pub mmse: Vec<Vec<f64>>,
    pub delta: f64,
    pub cr_db: Vec<f64>,
}

impl GapProblem {
    /// Extracts the instance from built transfer tables.
    pub fn from_analysis(analysis: &SeAnalysis) -> Self {
        let demod_inverse = analysis
            .v_grid
            .iter()
            .map(|&v| analysis.demod_inverse_capped(v))
            .collect();
        let mmse = analysis
            .declip
            .iter()
            .map(|curve| curve.values().to_vec())
            .collect();
        Self {
            v_grid: analysis.v_grid.clone(),
            demod_inverse,
            mmse,
            delta: analysis.delta,
            cr_db: analysis.cr_db.clone(),
        }
    }

    pub fn num_candidates(&self) -> usize {
        self.mmse.len()
    }

    pub fn num_points(&self) -> usize {
        self.v_grid.len()
    }

    /// Mixture MMSE at grid point `i`.
    fn mixture(&self, i: usize, fractions: &[f64]) -> f64 {
        self.mmse
            .iter()
            .zip(fractions)
            .map(|(g, &l)| l * g[i])
            .sum()
    }

    fn gap_at(&self, i: usize, fractions: &[f64]) -> f64 {
        match declip_transfer_from_mmse(self.v_grid[i], self.mixture(i, fractions), self.delta) {
            Ok(vx) => self.demod_inverse[i] - vx,
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// Minimum gap over the grid for a fraction distribution; negative
    /// infinity where the mixture has no contraction.
    pub fn min_gap(&self, fractions: &[f64]) -> f64 {
        (0..self.num_points())
            .map(|i| self.gap_at(i, fractions))
            .fold(f64::INFINITY, f64::min)
    }

    /// Linear bound `b_i(t)` such that `gap_i(lambda) >= t` iff
    /// `sum_k lambda_k mmse[k][i] <= b_i(t)`. `None` when unsatisfiable.
    fn linear_bound(&self, i: usize, t: f64) -> Option<f64> {
        let v = self.v_grid[i];
        let u = self.demod_inverse[i] - t;
        let scaled = self.delta * (1.0 + u / v);
        if scaled <= 1.0 {
            return None; // even a zero mixture cannot reach gap t here
        }
        Some(v * (1.0 - 1.0 / scaled))
    }

    fn feasible_at(&self, t: f64) -> Option<Vec<f64>> {
        let mut bounds = Vec::with_capacity(self.num_points());
        for i in 0..self.num_points() {
            bounds.push(self.linear_bound(i, t)?);
        }
        lp_feasible(&self.mmse, &bounds)
    }
}

/// The solved fraction distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionSolution {
    pub lambda: Vec<f64>,
    /// Minimum gap re-evaluated at the returned fractions.
    pub min_gap: f64,
    /// Grid indices attaining the minimum gap.
    pub active_points: Vec<usize>,
}

/// Maximizes the minimum gap over the simplex by bisection on the gap
/// value, each step a linear feasibility problem.
///
/// Returns an infeasibility error when no distribution achieves a
/// nonnegative gap (the tunnel cannot be opened with these candidates at
/// this noise level).
pub fn optimize_fractions(problem: &GapProblem, tol: f64) -> Result<FractionSolution> {
    let k = problem.num_candidates();
    if k == 0 {
        return Err(Error::InvalidParams("no candidate thresholds".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {tol} must be positive"
        )));
    }

    let mut best = problem.feasible_at(0.0).ok_or_else(|| {
        Error::Infeasible("no fraction distribution opens the tunnel at this noise level".into())
    })?;

    // sup of achievable gaps: the de-clip transfer is at least
    // v (1/delta - 1) even with a perfect mixture
    let t_hi_bound = problem
        .v_grid
        .iter()
        .zip(&problem.demod_inverse)
        .map(|(&v, &c)| c - v * (1.0 / problem.delta - 1.0))
        .fold(f64::INFINITY, f64::min);

    let mut t_lo = 0.0f64;
    let mut t_hi = t_hi_bound.max(tol);
    // bisection invariant: feasibility is monotone in t
    let mut last_feasible = t_lo;
    let mut first_infeasible = f64::INFINITY;
    while t_hi - t_lo > tol {
        let mid = 0.5 * (t_lo + t_hi);
        match problem.feasible_at(mid) {
            Some(lambda) => {
                assert!(
                    mid <= first_infeasible,
                    "bisection monotonicity violated: feasible at {mid}, infeasible at {first_infeasible}"
                );
                best = lambda;
                t_lo = mid;
                last_feasible = mid;
            }
            None => {
                assert!(
                    mid >= last_feasible,
                    "bisection monotonicity violated: infeasible at {mid}, feasible at {last_feasible}"
                );
                t_hi = mid;
                first_infeasible = first_infeasible.min(mid);
            }
        }
    }

    // consolidate duplicate thresholds onto their first occurrence
    for j in (1..k).rev() {
        if let Some(first) = (0..j).find(|&i| problem.cr_db[i] == problem.cr_db[j]) {
            best[first] += best[j];
            best[j] = 0.0;
        }
    }
    // drop negligible mass and renormalize exactly
    for l in best.iter_mut() {
        if *l < FRACTION_FLOOR {
            *l = 0.0;
        }
    }
    let total: f64 = best.iter().sum();
    if total <= 0.0 {
        return Err(Error::Infeasible("all fractions degenerate".into()));
    }
    for l in best.iter_mut() {
        *l /= total;
    }

    let min_gap = problem.min_gap(&best);
    let active_tol = 1e-9 * min_gap.abs().max(1.0);
    let active_points = (0..problem.num_points())
        .filter(|&i| problem.gap_at(i, &best) <= min_gap + active_tol)
        .collect();

    Ok(FractionSolution {
        lambda: best,
        min_gap,
        active_points,
    })
}

/// Phase-1 simplex feasibility for `{lambda >= 0, sum lambda = 1,
/// G^T lambda <= b}` with nonnegative `G` entries (`g[k][i]` is candidate
/// `k` at constraint `i`).
///
/// Returns a feasible point or `None`. Dense tableau with Bland's rule;
/// problem sizes here are ~20 variables by ~100 constraints.
pub fn lp_feasible(g: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let k = g.len();
    if k == 0 {
        return None;
    }
    let v = b.len();
    debug_assert!(g.iter().all(|col| col.len() == v));
    // with lambda = 0 every slack starts basic, so a negative bound is
    // immediately infeasible for nonnegative G
    if b.iter().any(|&bi| bi < 0.0) {
        return None;
    }

    // columns: k fractions, v slacks, 1 artificial (equality row), rhs
    let cols = k + v + 2;
    let rows = v + 1;
    let mut tab = vec![vec![0.0f64; cols]; rows];
    for i in 0..v {
        for (j, col) in g.iter().enumerate() {
            tab[i][j] = col[i];
        }
        tab[i][k + i] = 1.0;
        tab[i][cols - 1] = b[i];
    }
    for j in 0..k {
        tab[rows - 1][j] = 1.0;
    }
    tab[rows - 1][k + v] = 1.0;
    tab[rows - 1][cols - 1] = 1.0;

    let mut basis: Vec<usize> = (0..v).map(|i| k + i).collect();
    basis.push(k + v);

    // phase-1 objective (minimize the artificial), reduced-cost form
    let mut obj = vec![0.0f64; cols];
    obj[k + v] = 1.0;
    for j in 0..cols {
        obj[j] -= tab[rows - 1][j];
    }

    const EPS: f64 = 1e-11;
    for _ in 0..10_000 {
        // Bland's rule: lowest-index column with a negative reduced cost
        let Some(enter) = (0..cols - 1).find(|&j| obj[j] < -EPS) else {
            break;
        };
        // ratio test, ties to the lowest basis index
        let mut pivot_row: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for (i, row) in tab.iter().enumerate() {
            if row[enter] > EPS {
                let ratio = row[cols - 1] / row[enter];
                let better = ratio < best_ratio - EPS
                    || (ratio < best_ratio + EPS
                        && pivot_row.is_some_and(|p| basis[i] < basis[p]));
                if pivot_row.is_none() || better {
                    best_ratio = best_ratio.min(ratio);
                    pivot_row = Some(i);
                }
            }
        }
        let Some(pr) = pivot_row else {
            break; // unbounded direction: cannot happen on the simplex
        };
        let pv = tab[pr][enter];
        for x in tab[pr].iter_mut() {
            *x /= pv;
        }
        for i in 0..rows {
            if i != pr {
                let f = tab[i][enter];
                if f != 0.0 {
                    for j in 0..cols {
                        tab[i][j] -= f * tab[pr][j];
                    }
                }
            }
        }
        let f = obj[enter];
        if f != 0.0 {
            for j in 0..cols {
                obj[j] -= f * tab[pr][j];
            }
        }
        basis[pr] = enter;
    }

    // residual artificial mass decides feasibility
    let artificial_value = basis
        .iter()
        .enumerate()
        .find(|(_, &bj)| bj == k + v)
        .map(|(i, _)| tab[i][cols - 1])
        .unwrap_or(0.0);
    if artificial_value > 1e-9 {
        return None;
    }

    let mut lambda = vec![0.0f64; k];
    for (i, &bj) in basis.iter().enumerate() {
        if bj < k {
            lambda[bj] = tab[i][cols - 1].max(0.0);
        }
    }
    let total: f64 = lambda.iter().sum();
    if total <= 0.0 {
        return None;
    }
    for l in lambda.iter_mut() {
        *l /= total;
    }
    Some(lambda)
}
