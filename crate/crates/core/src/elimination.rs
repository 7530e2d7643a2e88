//! Gaussian elimination with no, partial, rook and complete pivoting.
//!
//! Pivot searches share one tie rule: entries within the candidate tolerance
//! of the search maximum are tied, and ties go to the column-major
//! lexicographically first entry (smallest column, then smallest row). Without
//! a tolerance only exact maxima tie.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::butterfly::{AngleVector, ButterflyKind};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::perm::Permutation;

/// `2^-52`
pub const EPS_MACHINE: f64 = f64::EPSILON;
/// Candidate tolerance multiplier used by the GECP experiments.
pub const DEFAULT_PIVOT_TOL_MULT: f64 = 1e3;
/// Multiplier of `EPS_MACHINE` below which entries count as zero in
/// sparsity reports.
pub const DEFAULT_SPARSITY_TOL_MULT: f64 = 1e4;
/// Pivots smaller than this in magnitude are treated as zero.
pub const SINGULAR_THRESHOLD: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PivotScheme {
    Genp,
    Gepp,
    Gerp,
    Gecp,
}

impl PivotScheme {
    pub const ALL: [Self; 4] = [Self::Genp, Self::Gepp, Self::Gerp, Self::Gecp];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Genp => "genp",
            Self::Gepp => "gepp",
            Self::Gerp => "gerp",
            Self::Gecp => "gecp",
        }
    }
}

impl fmt::Display for PivotScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PivotScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "genp" => Ok(Self::Genp),
            "gepp" => Ok(Self::Gepp),
            "gerp" => Ok(Self::Gerp),
            "gecp" => Ok(Self::Gecp),
            other => Err(Error::Parse(format!("unknown pivoting scheme {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PivotStrategy {
    pub scheme: PivotScheme,
    /// Multiplier of [`EPS_MACHINE`]; `Some` widens the candidate set.
    pub candidate_tolerance: Option<f64>,
}

impl PivotStrategy {
    pub fn new(scheme: PivotScheme, candidate_tolerance: Option<f64>) -> Result<Self> {
        if let Some(t) = candidate_tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Argument(format!(
                    "candidate tolerance must be positive and finite, got {t}"
                )));
            }
        }
        Ok(Self {
            scheme,
            candidate_tolerance,
        })
    }

    pub fn plain(scheme: PivotScheme) -> Self {
        Self {
            scheme,
            candidate_tolerance: None,
        }
    }

    pub fn genp() -> Self {
        Self::plain(PivotScheme::Genp)
    }

    pub fn gepp() -> Self {
        Self::plain(PivotScheme::Gepp)
    }

    pub fn gerp() -> Self {
        Self::plain(PivotScheme::Gerp)
    }

    pub fn gecp() -> Self {
        Self::plain(PivotScheme::Gecp)
    }

    /// GECP with the default `10^3 ε` candidate tolerance.
    pub fn gecp_tol() -> Self {
        Self {
            scheme: PivotScheme::Gecp,
            candidate_tolerance: Some(DEFAULT_PIVOT_TOL_MULT),
        }
    }

    fn slack(&self, max: f64) -> f64 {
        self.candidate_tolerance
            .map_or(0.0, |t| t * EPS_MACHINE * max)
    }
}

/// One elimination step; indices are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PivotStep {
    pub k: usize,
    pub row_swap: usize,
    pub col_swap: usize,
    pub pivot_value: f64,
}

/// `P A Q = L U`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeFactorization {
    pub p: Permutation,
    pub q: Permutation,
    pub l: DenseMatrix,
    pub u: DenseMatrix,
    pub pivot_log: Vec<PivotStep>,
    /// `step_max[k]`: max-norm of the untriangularized block at step `k + 1`.
    pub step_max: Vec<f64>,
    /// Working matrix at the start of each step (before that step's swaps),
    /// when requested.
    pub trace: Option<Vec<DenseMatrix>>,
}

impl GeFactorization {
    pub fn size(&self) -> usize {
        self.u.rows()
    }

    /// Largest pivot-time block max-norm.
    pub fn max_step_norm(&self) -> f64 {
        self.step_max.iter().fold(0.0, |m, &v| m.max(v))
    }
}

pub fn factorize(a: &DenseMatrix, strategy: PivotStrategy) -> Result<GeFactorization> {
    run(a, strategy, false)
}

/// [`factorize`] keeping every intermediate `A^(k)`.
pub fn factorize_traced(a: &DenseMatrix, strategy: PivotStrategy) -> Result<GeFactorization> {
    run(a, strategy, true)
}

fn run(a: &DenseMatrix, strategy: PivotStrategy, traced: bool) -> Result<GeFactorization> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "elimination needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut w = a.clone();
    let mut l = DenseMatrix::identity(n);
    let mut row_swaps = Vec::with_capacity(n);
    let mut col_swaps = Vec::with_capacity(n);
    let mut pivot_log = Vec::with_capacity(n);
    let mut step_max = Vec::with_capacity(n);
    let mut trace = traced.then(|| Vec::with_capacity(n));

    for k in 0..n {
        step_max.push(block_max(&w, k));
        if let Some(t) = trace.as_mut() {
            t.push(w.clone());
        }
        let (r, c) = select_pivot(&w, k, strategy);
        swap_rows(&mut w, k, r);
        swap_rows_prefix(&mut l, k, r, k);
        swap_cols(&mut w, k, c);
        row_swaps.push(r);
        col_swaps.push(c);

        let pivot = w.get(k, k);
        if pivot.abs() < SINGULAR_THRESHOLD {
            return Err(Error::Singular {
                step: k + 1,
                magnitude: pivot.abs(),
            });
        }
        pivot_log.push(PivotStep {
            k: k + 1,
            row_swap: r + 1,
            col_swap: c + 1,
            pivot_value: pivot,
        });
        eliminate(&mut w, &mut l, k, pivot);
    }

    let p = Permutation::from_swaps(&row_swaps)?;
    let q = Permutation::from_swaps(&col_swaps)?.inverse();
    Ok(GeFactorization {
        p,
        q,
        l,
        u: w,
        pivot_log,
        step_max,
        trace,
    })
}

fn eliminate(w: &mut DenseMatrix, l: &mut DenseMatrix, k: usize, pivot: f64) {
    let n = w.rows();
    let data = w.as_mut_slice();
    let (head, tail) = data.split_at_mut((k + 1) * n);
    let pivot_row = &head[k * n..];
    for (offset, row) in tail.chunks_exact_mut(n).enumerate() {
        let m = row[k] / pivot;
        row[k] = 0.0;
        if m != 0.0 {
            for (x, &p) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                *x -= m * p;
            }
        }
        l.set(k + 1 + offset, k, m);
    }
}

fn block_max(w: &DenseMatrix, k: usize) -> f64 {
    let n = w.rows();
    (k..n)
        .flat_map(|i| w.row(i)[k..].iter())
        .fold(0.0, |m, v| m.max(v.abs()))
}

fn swap_rows(w: &mut DenseMatrix, a: usize, b: usize) {
    swap_rows_prefix(w, a, b, w.cols());
}

fn swap_rows_prefix(w: &mut DenseMatrix, a: usize, b: usize, len: usize) {
    if a == b {
        return;
    }
    let n = w.cols();
    let (lo, hi) = (a.min(b), a.max(b));
    let data = w.as_mut_slice();
    let (first, second) = data.split_at_mut(hi * n);
    first[lo * n..lo * n + len].swap_with_slice(&mut second[..len]);
}

fn swap_cols(w: &mut DenseMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    let n = w.cols();
    for row in w.as_mut_slice().chunks_exact_mut(n) {
        row.swap(a, b);
    }
}

fn select_pivot(w: &DenseMatrix, k: usize, strategy: PivotStrategy) -> (usize, usize) {
    match strategy.scheme {
        PivotScheme::Genp => (k, k),
        PivotScheme::Gepp => (column_search(w, k, k, strategy), k),
        PivotScheme::Gerp => rook_search(w, k, strategy),
        PivotScheme::Gecp => gecp_candidates(w, k, strategy.candidate_tolerance)
            .first()
            .copied()
            .unwrap_or((k, k)),
    }
}

/// Smallest row `r >= k` whose entry in column `c` ties the column maximum.
fn column_search(w: &DenseMatrix, k: usize, c: usize, strategy: PivotStrategy) -> usize {
    let n = w.rows();
    let max = (k..n).fold(0.0_f64, |m, i| m.max(w.get(i, c).abs()));
    let slack = strategy.slack(max);
    (k..n)
        .find(|&i| max - w.get(i, c).abs() <= slack)
        .unwrap_or(k)
}

/// Smallest column `c >= k` whose entry in row `r` ties the row maximum.
fn row_search(w: &DenseMatrix, k: usize, r: usize, strategy: PivotStrategy) -> usize {
    let row = &w.row(r)[k..];
    let max = row.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let slack = strategy.slack(max);
    k + row.iter().position(|v| max - v.abs() <= slack).unwrap_or(0)
}

fn rook_search(w: &DenseMatrix, k: usize, strategy: PivotStrategy) -> (usize, usize) {
    let (mut r, mut c) = (column_search(w, k, k, strategy), k);
    loop {
        let current = w.get(r, c).abs();
        let c2 = row_search(w, k, r, strategy);
        let moved_col = w.get(r, c2).abs() - current > strategy.slack(w.get(r, c2).abs());
        if moved_col {
            c = c2;
        }
        let current = w.get(r, c).abs();
        let r2 = column_search(w, k, c, strategy);
        let moved_row = w.get(r2, c).abs() - current > strategy.slack(w.get(r2, c).abs());
        if moved_row {
            r = r2;
        }
        if !moved_col && !moved_row {
            return (r, c);
        }
    }
}

/// Complete-pivoting candidates of the block `w[k.., k..]` in column-major
/// order, as `(row, col)` pairs. With `tol_mult` set, an entry `e` is a
/// candidate iff `max - |e| <= tol_mult · ε · max`; otherwise only exact
/// maxima qualify.
pub fn gecp_candidates(w: &DenseMatrix, k: usize, tol_mult: Option<f64>) -> Vec<(usize, usize)> {
    let n = w.rows();
    let max = block_max(w, k);
    let slack = tol_mult.map_or(0.0, |t| t * EPS_MACHINE * max);
    let mut out = Vec::new();
    for c in k..n {
        for r in k..n {
            if max - w.get(r, c).abs() <= slack {
                out.push((r, c));
            }
        }
    }
    out
}

/// `ρ = max_k ‖A^(k)‖_max / ‖A‖_max`.
pub fn growth_factor_max(fact: &GeFactorization, a: &DenseMatrix) -> f64 {
    fact.max_step_norm() / a.max_norm()
}

/// `ρ∞ = ‖L‖∞ ‖U‖∞ / ‖A‖∞`.
pub fn growth_factor_inf(fact: &GeFactorization, a: &DenseMatrix) -> f64 {
    fact.l.inf_norm() * fact.u.inf_norm() / a.inf_norm()
}

/// Result of the step-by-step complete-pivoting check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CompletePivotCheck {
    pub completely_pivoted: bool,
    /// First 1-based step at which the diagonal pivot is dominated.
    pub failed_step: Option<usize>,
    /// Step at which the untriangularized block vanished (rank-deficient input).
    pub zero_block_step: Option<usize>,
}

/// Whether GECP would keep every diagonal pivot: at each GENP step
/// `|A^(k)_kk| >= ‖block‖_max - tol · ‖A‖_max`. Ties count as pivoted.
pub fn is_completely_pivoted(a: &DenseMatrix, tol: f64) -> bool {
    complete_pivot_check(a, tol).is_ok_and(|c| c.completely_pivoted)
}

pub fn complete_pivot_check(a: &DenseMatrix, tol: f64) -> Result<CompletePivotCheck> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "complete pivoting check needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let slack = tol * a.max_norm();
    let mut w = a.clone();
    let mut l = DenseMatrix::identity(n);
    for k in 0..n {
        let block = block_max(&w, k);
        let pivot = w.get(k, k);
        if pivot.abs() < block - slack {
            return Ok(CompletePivotCheck {
                completely_pivoted: false,
                failed_step: Some(k + 1),
                zero_block_step: None,
            });
        }
        if pivot.abs() < SINGULAR_THRESHOLD {
            // dominance held, so the whole remaining block is zero
            return Ok(CompletePivotCheck {
                completely_pivoted: true,
                failed_step: None,
                zero_block_step: Some(k + 1),
            });
        }
        eliminate(&mut w, &mut l, k, pivot);
    }
    Ok(CompletePivotCheck {
        completely_pivoted: true,
        failed_step: None,
        zero_block_step: None,
    })
}

fn require_scalar_simple(theta: &AngleVector) -> Result<()> {
    if theta.kind() != ButterflyKind::ScalarSimple {
        return Err(Error::Argument(format!(
            "closed forms need a scalar_simple butterfly, got {}",
            theta.kind()
        )));
    }
    Ok(())
}

fn require_nonzero_cos(theta: &AngleVector) -> Result<()> {
    for (index, &angle) in theta.angles().iter().enumerate() {
        if angle.cos().abs() < EPS_MACHINE {
            return Err(Error::DegenerateAngle { index, angle });
        }
    }
    Ok(())
}

/// Closed-form GENP intermediate `A^(k)` (1-based `k`) of a simple scalar
/// butterfly, built recursively from `B = R(θ_n) ⊗ A`.
pub fn intermediate_oracle(theta: &AngleVector, k: usize) -> Result<DenseMatrix> {
    require_scalar_simple(theta)?;
    require_nonzero_cos(theta)?;
    let order = theta.order();
    if !(1..=order).contains(&k) {
        return Err(Error::Argument(format!("step {k} outside 1..={order}")));
    }
    Ok(oracle_rec(theta.angles(), k))
}

fn oracle_rec(angles: &[f64], k: usize) -> DenseMatrix {
    let Some((&outer, inner)) = angles.split_last() else {
        return DenseMatrix::identity(1);
    };
    let half = 1usize << inner.len();
    let (s, c) = outer.sin_cos();
    let sec = 1.0 / c;
    let mut out = DenseMatrix::zeros(2 * half, 2 * half);
    if k <= half {
        let ak = oracle_rec(inner, k);
        let a = oracle_rec(inner, 1);
        for i in 0..half {
            for j in 0..half {
                let x = ak.get(i, j);
                out.set(i, j, c * x);
                out.set(i, half + j, s * x);
                let mx = if i + 1 < k { 0.0 } else { x };
                out.set(half + i, j, -s * mx);
                out.set(half + i, half + j, sec * (a.get(i, j) - s * s * mx));
            }
        }
    } else {
        let top = oracle_rec(inner, half);
        let bottom = oracle_rec(inner, k - half);
        for i in 0..half {
            for j in 0..half {
                let x = top.get(i, j);
                out.set(i, j, c * x);
                out.set(i, half + j, s * x);
                out.set(half + i, half + j, sec * bottom.get(i, j));
            }
        }
    }
    out
}

/// Closed-form diagonal of the GENP factor `U` of a simple scalar butterfly.
pub fn u_diagonal(theta: &AngleVector) -> Result<Vec<f64>> {
    require_scalar_simple(theta)?;
    require_nonzero_cos(theta)?;
    let mut d = vec![1.0];
    for &a in theta.angles() {
        let c = a.cos();
        let next: Vec<f64> = d
            .iter()
            .map(|x| c * x)
            .chain(d.iter().map(|x| x / c))
            .collect();
        d = next;
    }
    Ok(d)
}

/// Whether `|tan θ_{j+1}| <= |tan θ_j| <= 1` for all `j` (with `slack`).
pub fn is_monotone(theta: &AngleVector, slack: f64) -> bool {
    let t: Vec<f64> = theta.angles().iter().map(|a| a.tan().abs()).collect();
    t.first().is_none_or(|&t1| t1 <= 1.0 + slack) && t.windows(2).all(|w| w[1] <= w[0] + slack)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `‖(η B - ε B^(k))[k.., k..]‖_max <= |η - ε| · |U_kk|` for a
/// monotone simple scalar butterfly.
pub fn verify_gecp_inequality(
    theta: &AngleVector,
    eta: f64,
    eps: f64,
    k: usize,
) -> Result<InequalityReport> {
    require_scalar_simple(theta)?;
    if !is_monotone(theta, 1e-12) {
        return Err(Error::Argument(
            "angles must satisfy |tan θ_(j+1)| <= |tan θ_j| <= 1".into(),
        ));
    }
    if eps.abs() > (eta - eps).abs() {
        return Err(Error::Argument(format!(
            "need |ε| <= |η - ε|, got η = {eta}, ε = {eps}"
        )));
    }
    let b = crate::butterfly::build(theta);
    let bk = intermediate_oracle(theta, k)?;
    let u = u_diagonal(theta)?;
    let n = b.rows();
    let mut lhs = 0.0_f64;
    for i in k - 1..n {
        for j in k - 1..n {
            lhs = lhs.max((eta * b.get(i, j) - eps * bk.get(i, j)).abs());
        }
    }
    let rhs = (eta - eps).abs() * u[k - 1].abs();
    Ok(InequalityReport {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12 * b.max_norm(),
    })
}


#[cfg(test)]
mod sparsity_properties {
    use super::*;
    use crate::butterfly::{build, sample};
    use crate::rng::trial_rng;
    use crate::ButterflyKind;

    #[test]
    fn gecp_factors_have_symmetric_sparsity() {
        let tol = DEFAULT_SPARSITY_TOL_MULT * EPS_MACHINE;
        let trials = 200;
        let symmetric = (0..trials)
            .filter(|&t| {
                let b = build(&sample(
                    ButterflyKind::ScalarSimple,
                    5,
                    &mut trial_rng(102, t),
                ));
                let f = factorize(&b, PivotStrategy::gecp_tol()).unwrap();
                (0..f.size()).all(|i| {
                    (0..i).all(|j| (f.l.get(i, j).abs() > tol) == (f.u.get(j, i).abs() > tol))
                })
            })
            .count();
        println!("L and Uᵀ sparsity patterns coincide in {symmetric} of {trials} GECP runs");
        assert!(symmetric > 0);
    }
}
