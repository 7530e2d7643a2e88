//! Butterfly matrices: construction, fast application, sampling and the
//! Lipschitz geometry of the angle-to-matrix map.
//!
//! An order `N = 2^n` butterfly is built recursively as
//!
//! ```text
//! B = [ C  S ] [ A1  0 ]
//!     [-S  C ] [ 0  A2 ]
//! ```
//!
//! with `(C, S)` either scalar multiples of the identity (one angle per
//! recursion node) or diagonal (one angle per row of `C`). Simple kinds reuse
//! one child (`A1 = A2`) per level.
//!
//! Angle layout:
//! - `ScalarSimple`: `angles[l - 1]` drives level `l`, so the last angle is
//!   the outermost Kronecker factor: `B = R(θ_n) ⊗ ... ⊗ R(θ_1)`.
//! - `DiagonalSimple`: level blocks in increasing level order, level `l`
//!   holding `2^(l-1)` angles.
//! - nonsimple kinds: breadth-first over the recursion tree starting at the
//!   root (level `n`), left child before right child; each node's angles are
//!   contiguous.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Largest supported order exponent.
pub const MAX_ORDER_EXPONENT: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ButterflyKind {
    ScalarSimple,
    ScalarNonsimple,
    DiagonalSimple,
    DiagonalNonsimple,
}

impl ButterflyKind {
    pub const ALL: [Self; 4] = [
        Self::ScalarSimple,
        Self::ScalarNonsimple,
        Self::DiagonalSimple,
        Self::DiagonalNonsimple,
    ];

    /// Number of angles `M` for order `2^n`: `n`, `2^n - 1`, `2^n - 1`, `n 2^(n-1)`.
    pub fn angle_count(self, n: u32) -> usize {
        let order = 1usize << n;
        match self {
            Self::ScalarSimple => n as usize,
            Self::ScalarNonsimple | Self::DiagonalSimple => order - 1,
            Self::DiagonalNonsimple => (n as usize * order) / 2,
        }
    }

    pub fn is_simple(self) -> bool {
        matches!(self, Self::ScalarSimple | Self::DiagonalSimple)
    }

    pub fn is_diagonal(self) -> bool {
        matches!(self, Self::DiagonalSimple | Self::DiagonalNonsimple)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ScalarSimple => "scalar_simple",
            Self::ScalarNonsimple => "scalar_nonsimple",
            Self::DiagonalSimple => "diagonal_simple",
            Self::DiagonalNonsimple => "diagonal_nonsimple",
        }
    }

    /// Angle indices feeding the node at `level` (1..=n) with breadth-first
    /// position `node` (0..2^(n-level)) within that level.
    pub(crate) fn node_angles(self, n: u32, level: u32, node: usize) -> Range<usize> {
        let depth = n - level;
        let width = 1usize << (level - 1);
        match self {
            Self::ScalarSimple => (level - 1) as usize..level as usize,
            Self::DiagonalSimple => width - 1..2 * width - 1,
            Self::ScalarNonsimple => {
                let start = (1usize << depth) - 1 + node;
                start..start + 1
            }
            Self::DiagonalNonsimple => {
                let start = depth as usize * (1usize << (n - 1)) + node * width;
                start..start + width
            }
        }
    }
}

impl fmt::Display for ButterflyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ButterflyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "scalar_simple" | "ss" | "simple" => Ok(Self::ScalarSimple),
            "scalar_nonsimple" | "sn" | "scalar" => Ok(Self::ScalarNonsimple),
            "diagonal_simple" | "ds" => Ok(Self::DiagonalSimple),
            "diagonal_nonsimple" | "dn" | "diagonal" => Ok(Self::DiagonalNonsimple),
            other => Err(Error::Parse(format!("unknown butterfly kind {other:?}"))),
        }
    }
}

/// Angles generating one butterfly matrix, each reduced into `[0, 2π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AngleVectorRepr", into = "AngleVectorRepr")]
pub struct AngleVector {
    kind: ButterflyKind,
    n: u32,
    angles: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct AngleVectorRepr {
    kind: ButterflyKind,
    n: u32,
    angles: Vec<f64>,
}

impl TryFrom<AngleVectorRepr> for AngleVector {
    type Error = Error;

    fn try_from(r: AngleVectorRepr) -> Result<Self> {
        Self::new(r.kind, r.n, r.angles)
    }
}

impl From<AngleVector> for AngleVectorRepr {
    fn from(v: AngleVector) -> Self {
        Self {
            kind: v.kind,
            n: v.n,
            angles: v.angles,
        }
    }
}

/// Reduces an angle into `[0, 2π)`.
pub fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl AngleVector {
    pub fn new(kind: ButterflyKind, n: u32, angles: Vec<f64>) -> Result<Self> {
        if n > MAX_ORDER_EXPONENT {
            return Err(Error::Argument(format!(
                "order exponent {n} exceeds {MAX_ORDER_EXPONENT}"
            )));
        }
        let expected = kind.angle_count(n);
        if angles.len() != expected {
            return Err(Error::Dimension(format!(
                "{kind} of order 2^{n} takes {expected} angles, got {}",
                angles.len()
            )));
        }
        if let Some(i) = angles.iter().position(|a| !a.is_finite()) {
            return Err(Error::Argument(format!("angle {i} is not finite")));
        }
        Ok(Self {
            kind,
            n,
            angles: angles.into_iter().map(reduce_angle).collect(),
        })
    }

    /// Simple scalar butterfly `R(θ_n) ⊗ ... ⊗ R(θ_1)`.
    pub fn scalar_simple(angles: Vec<f64>) -> Result<Self> {
        let n =
            u32::try_from(angles.len()).map_err(|_| Error::Argument("too many angles".into()))?;
        Self::new(ButterflyKind::ScalarSimple, n, angles)
    }

    pub fn kind(&self) -> ButterflyKind {
        self.kind
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn order(&self) -> usize {
        1usize << self.n
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn into_angles(self) -> Vec<f64> {
        self.angles
    }

    /// Angle-wise sum `θ + ε` (reduced), used by the group law and the
    /// Lipschitz checks.
    pub fn shifted(&self, eps: &[f64]) -> Result<Self> {
        if eps.len() != self.angles.len() {
            return Err(Error::Dimension(format!(
                "perturbation of length {} for {} angles",
                eps.len(),
                self.angles.len()
            )));
        }
        Self::new(
            self.kind,
            self.n,
            self.angles.iter().zip(eps).map(|(a, e)| a + e).collect(),
        )
    }
}

/// Clockwise rotation `[[cos θ, sin θ], [-sin θ, cos θ]]`.
pub fn rotation(theta: f64) -> DenseMatrix {
    let (s, c) = theta.sin_cos();
    DenseMatrix::from_raw(2, 2, vec![c, s, -s, c])
}

/// Dense butterfly matrix from the block recursion.
pub fn build(theta: &AngleVector) -> DenseMatrix {
    build_node(theta, theta.n, 0)
}

fn build_node(theta: &AngleVector, level: u32, node: usize) -> DenseMatrix {
    if level == 0 {
        return DenseMatrix::identity(1);
    }
    let (a1, a2) = if theta.kind.is_simple() {
        let child = build_node(theta, level - 1, 0);
        (child.clone(), child)
    } else {
        (
            build_node(theta, level - 1, 2 * node),
            build_node(theta, level - 1, 2 * node + 1),
        )
    };
    let half = 1usize << (level - 1);
    let order = 2 * half;
    let range = theta.kind.node_angles(theta.n, level, node);
    let cs: Vec<(f64, f64)> = theta.angles[range]
        .iter()
        .map(|a| {
            let (s, c) = a.sin_cos();
            (c, s)
        })
        .collect();
    let mut out = DenseMatrix::zeros(order, order);
    for i in 0..half {
        let (c, s) = if cs.len() == 1 { cs[0] } else { cs[i] };
        for j in 0..half {
            let x1 = a1.get(i, j);
            let x2 = a2.get(i, j);
            out.set(i, j, c * x1);
            out.set(i, half + j, s * x2);
            out.set(half + i, j, -s * x1);
            out.set(half + i, half + j, c * x2);
        }
    }
    out
}

/// `B(θ) x` without forming `B`.
pub fn fast_apply(theta: &AngleVector, x: &[f64]) -> Result<Vec<f64>> {
    fast_apply_counted(theta, x).map(|(y, _)| y)
}

/// [`fast_apply`] together with the number of floating-point operations
/// spent (trig evaluations count one each).
pub fn fast_apply_counted(theta: &AngleVector, x: &[f64]) -> Result<(Vec<f64>, u64)> {
    let order = theta.order();
    if x.len() != order {
        return Err(Error::Dimension(format!(
            "vector of length {} for a butterfly of order {order}",
            x.len()
        )));
    }
    let (sin, cos): (Vec<f64>, Vec<f64>) = theta.angles.iter().map(|a| a.sin_cos()).unzip();
    let mut flops = 2 * theta.angles.len() as u64;
    let mut y = x.to_vec();
    for level in 1..=theta.n {
        let half = 1usize << (level - 1);
        for (node, block) in y.chunks_exact_mut(2 * half).enumerate() {
            let range = theta.kind.node_angles(theta.n, level, node);
            let (lo, hi) = block.split_at_mut(half);
            if range.len() == 1 {
                let (c, s) = (cos[range.start], sin[range.start]);
                for (u, v) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (a, b) = (*u, *v);
                    *u = c * a + s * b;
                    *v = c * b - s * a;
                }
            } else {
                let (cs, ss) = (&cos[range.clone()], &sin[range]);
                for i in 0..half {
                    let (a, b) = (lo[i], hi[i]);
                    lo[i] = cs[i] * a + ss[i] * b;
                    hi[i] = cs[i] * b - ss[i] * a;
                }
            }
            flops += 6 * half as u64;
        }
    }
    Ok((y, flops))
}

/// All angles iid uniform on `[0, 2π)`. For `ScalarSimple` this samples the
/// Haar measure on the simple scalar butterfly group.
pub fn sample<R: Rng + ?Sized>(kind: ButterflyKind, n: u32, rng: &mut R) -> AngleVector {
    let angles = (0..kind.angle_count(n))
        .map(|_| rng.gen_range(0.0..TAU))
        .collect();
    AngleVector::new(kind, n, angles).expect("sampled angles are valid")
}

/// Lipschitz constant of `θ ↦ B(θ)` from the 2-norm to the Frobenius norm:
/// `√N`, `√(2(N-1))`, `√(2(N-1))`, `√(2n)`.
pub fn lipschitz_constant(kind: ButterflyKind, n: u32) -> f64 {
    let order = (1u64 << n) as f64;
    match kind {
        ButterflyKind::ScalarSimple => order.sqrt(),
        ButterflyKind::ScalarNonsimple | ButterflyKind::DiagonalSimple => {
            (2.0 * (order - 1.0)).sqrt()
        }
        ButterflyKind::DiagonalNonsimple => (2.0 * f64::from(n)).sqrt(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzReport {
    /// `‖B(θ) - B(θ + ε)‖_F`
    pub lhs: f64,
    /// `C · ‖ε‖_2`
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `‖B(θ) - B(θ + ε)‖_F` with `C‖ε‖_2`. `ε` is used as given; only
/// the perturbed angles are reduced when building `B(θ + ε)`.
pub fn lipschitz_check(theta: &AngleVector, eps: &[f64]) -> Result<LipschitzReport> {
    let perturbed = theta.shifted(eps)?;
    let lhs = build(theta).sub(&build(&perturbed))?.frobenius_norm();
    let eps_norm = eps.iter().map(|e| e * e).sum::<f64>().sqrt();
    let rhs = lipschitz_constant(theta.kind, theta.n) * eps_norm;
    Ok(LipschitzReport {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    })
}

/// Givens rotation: the identity with `R(θ)` embedded in rows and columns
/// `i < j`.
pub fn givens(theta: f64, i: usize, j: usize, n_total: usize) -> Result<DenseMatrix> {
    if !(i < j && j < n_total) {
        return Err(Error::Argument(format!(
            "givens indices must satisfy i < j < n, got ({i}, {j}, {n_total})"
        )));
    }
    let (s, c) = theta.sin_cos();
    let mut g = DenseMatrix::identity(n_total);
    g.set(i, i, c);
    g.set(i, j, s);
    g.set(j, i, -s);
    g.set(j, j, c);
    Ok(g)
}

/// `∏_{i<j} G(θ_{α(i,j)}, i, j)` over pairs in lexicographic order; uses
/// `n(n-1)/2` angles and covers `SO(n)`.
pub fn givens_product(angles: &[f64], n: usize) -> Result<DenseMatrix> {
    let needed = n * n.saturating_sub(1) / 2;
    if angles.len() != needed {
        return Err(Error::Dimension(format!(
            "SO({n}) takes {needed} angles, got {}",
            angles.len()
        )));
    }
    let mut out = DenseMatrix::identity(n);
    let mut idx = 0;
    for i in 0..n {
        for j in i + 1..n {
            out = out.matmul(&givens(angles[idx], i, j, n)?)?;
            idx += 1;
        }
    }
    Ok(out)
}

/// Lipschitz constant `√(n(n-1))` of [`givens_product`].
pub fn givens_lipschitz_constant(n: usize) -> f64 {
    ((n * n.saturating_sub(1)) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{direct_sum, kron};
    use crate::perm::{apply_permutations, perfect_shuffle};
    use crate::rng::trial_rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn orth_error(b: &DenseMatrix) -> f64 {
        b.matmul(&b.transpose())
            .unwrap()
            .max_abs_diff(&DenseMatrix::identity(b.rows()))
            .unwrap()
    }

    // Determinant by elimination with partial pivoting; test-only oracle.
    fn det(a: &DenseMatrix) -> f64 {
        let n = a.rows();
        let mut m = a.clone();
        let mut d = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| m.get(x, k).abs().total_cmp(&m.get(y, k).abs()))
                .unwrap();
            if p != k {
                d = -d;
                for j in 0..n {
                    let t = m.get(k, j);
                    m.set(k, j, m.get(p, j));
                    m.set(p, j, t);
                }
            }
            let piv = m.get(k, k);
            d *= piv;
            for i in k + 1..n {
                let f = m.get(i, k) / piv;
                for j in k..n {
                    m.set(i, j, m.get(i, j) - f * m.get(k, j));
                }
            }
        }
        d
    }

    #[test]
    fn angle_counts() {
        for n in 1..6 {
            let order = 1usize << n;
            assert_eq!(ButterflyKind::ScalarSimple.angle_count(n), n as usize);
            assert_eq!(ButterflyKind::ScalarNonsimple.angle_count(n), order - 1);
            assert_eq!(ButterflyKind::DiagonalSimple.angle_count(n), order - 1);
            assert_eq!(
                ButterflyKind::DiagonalNonsimple.angle_count(n),
                n as usize * order / 2
            );
        }
    }

    #[test]
    fn layout_covers_every_angle_once() {
        for kind in ButterflyKind::ALL {
            for n in 1..6u32 {
                let mut hits = vec![0usize; kind.angle_count(n)];
                for level in 1..=n {
                    let nodes = if kind.is_simple() {
                        1
                    } else {
                        1usize << (n - level)
                    };
                    for node in 0..nodes {
                        for i in kind.node_angles(n, level, node) {
                            hits[i] += 1;
                        }
                    }
                }
                assert!(hits.iter().all(|&h| h == 1), "{kind} n={n}: {hits:?}");
            }
        }
    }

    #[test]
    fn rejects_wrong_length_and_reduces() {
        assert!(AngleVector::new(ButterflyKind::ScalarNonsimple, 2, vec![0.0; 2]).is_err());
        let v = AngleVector::scalar_simple(vec![-FRAC_PI_2, 3.0 * TAU + 1.0]).unwrap();
        assert!((v.angles()[0] - 1.5 * PI).abs() < 1e-15);
        assert!((v.angles()[1] - 1.0).abs() < 1e-12);
        assert!(AngleVector::scalar_simple(vec![f64::NAN]).is_err());
    }

    #[test]
    fn small_builds() {
        let id = build(&AngleVector::scalar_simple(vec![0.0]).unwrap());
        assert_eq!(id, DenseMatrix::identity(2));
        let r = build(&AngleVector::scalar_simple(vec![FRAC_PI_4]).unwrap());
        let h = 0.5_f64.sqrt();
        let expected = DenseMatrix::from_rows(&[vec![h, h], vec![-h, h]]).unwrap();
        assert!(r.max_abs_diff(&expected).unwrap() < 1e-15);
        let b = build(&AngleVector::scalar_simple(vec![FRAC_PI_4; 2]).unwrap()).scale(2.0);
        assert!(b.as_slice().iter().all(|v| (v.abs() - 1.0).abs() < 1e-14));
        let gram = b.matmul(&b.transpose()).unwrap();
        assert!(
            gram.max_abs_diff(&DenseMatrix::identity(4).scale(4.0))
                .unwrap()
                < 1e-13
        );
    }

    #[test]
    fn kron_of_rotations_matches_recursion() {
        let t = FRAC_PI_4;
        let k = kron(&rotation(t), &rotation(t)).unwrap();
        let b = build(&AngleVector::scalar_simple(vec![t, t]).unwrap());
        assert!(k.max_abs_diff(&b).unwrap() < 1e-15);
    }

    #[test]
    fn scalar_simple_is_kron_with_last_angle_outermost() {
        let mut rng = trial_rng(11, 0);
        for n in 1..7 {
            let theta = sample(ButterflyKind::ScalarSimple, n, &mut rng);
            let angles = theta.angles();
            let inner = AngleVector::scalar_simple(angles[..n as usize - 1].to_vec()).unwrap();
            let expected = kron(&rotation(angles[n as usize - 1]), &build(&inner)).unwrap();
            assert!(build(&theta).max_abs_diff(&expected).unwrap() < 1e-14);
        }
    }

    #[test]
    fn every_kind_lies_in_so_n() {
        let mut rng = trial_rng(12, 0);
        for kind in ButterflyKind::ALL {
            for n in 1..=7 {
                let b = build(&sample(kind, n, &mut rng));
                assert!(orth_error(&b) < 1e-12, "{kind} n={n}");
                if n <= 5 {
                    assert!((det(&b) - 1.0).abs() < 1e-10, "{kind} n={n}");
                }
            }
        }
    }

    #[test]
    fn simple_group_law() {
        let mut rng = trial_rng(13, 0);
        for n in 1..7 {
            let a = sample(ButterflyKind::ScalarSimple, n, &mut rng);
            let e = sample(ButterflyKind::ScalarSimple, n, &mut rng);
            let lhs = build(&a).matmul(&build(&e)).unwrap();
            let rhs = build(&a.shifted(e.angles()).unwrap());
            assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
        }
    }

    #[test]
    fn diagonal_layer_is_shuffled_rotation_sum() {
        let mut rng = trial_rng(14, 0);
        for kind in [
            ButterflyKind::DiagonalSimple,
            ButterflyKind::DiagonalNonsimple,
        ] {
            for n in 2..6u32 {
                let theta = sample(kind, n, &mut rng);
                let order = 1usize << n;
                let half = order / 2;
                let top = kind.node_angles(n, n, 0);
                let mut rot_sum = DenseMatrix::zeros(0, 0);
                for &a in &theta.angles()[top] {
                    rot_sum = direct_sum(&rot_sum, &rotation(a));
                }
                // [[C, S], [-S, C]] = Q_nᵀ (⊕ R_j) Q_n with Q_n (A ⊗ I) Q_nᵀ = I ⊗ A
                let q = perfect_shuffle(half, order).unwrap();
                let layer = apply_permutations(&q.inverse(), &rot_sum, &q).unwrap();
                let (c1, c2) = if kind.is_simple() {
                    let child = build_node(&theta, n - 1, 0);
                    (child.clone(), child)
                } else {
                    (build_node(&theta, n - 1, 0), build_node(&theta, n - 1, 1))
                };
                let expected = layer.matmul(&direct_sum(&c1, &c2)).unwrap();
                assert!(build(&theta).max_abs_diff(&expected).unwrap() < 1e-14);
            }
        }
    }

    #[test]
    fn fast_apply_examples() {
        for kind in ButterflyKind::ALL {
            let zero = AngleVector::new(kind, 3, vec![0.0; kind.angle_count(3)]).unwrap();
            let x: Vec<f64> = (0..8).map(|i| i as f64 - 2.5).collect();
            assert_eq!(fast_apply(&zero, &x).unwrap(), x);
        }
        let quarter = AngleVector::scalar_simple(vec![FRAC_PI_2]).unwrap();
        let y = fast_apply(&quarter, &[1.0, 0.0]).unwrap();
        assert!(y[0].abs() < 1e-15 && (y[1] + 1.0).abs() < 1e-15);
        assert!(fast_apply(&quarter, &[1.0]).is_err());
    }

    #[test]
    fn fast_apply_matches_dense_and_counts_n_log_n() {
        let mut rng = trial_rng(15, 0);
        for kind in ButterflyKind::ALL {
            for n in 1..=8 {
                let theta = sample(kind, n, &mut rng);
                let x: Vec<f64> = (0..theta.order())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                let (fast, flops) = fast_apply_counted(&theta, &x).unwrap();
                let dense = build(&theta).mul_vec(&x).unwrap();
                let scale = dense.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
                let err = fast
                    .iter()
                    .zip(&dense)
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                assert!(err <= 1e-12 * scale, "{kind} n={n} err={err}");
                let order = theta.order() as u64;
                assert!(
                    flops <= 4 * order * u64::from(n),
                    "{kind} n={n} flops={flops}"
                );
                assert!(flops >= 3 * order * u64::from(n));
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_centered() {
        let a = sample(ButterflyKind::DiagonalNonsimple, 4, &mut trial_rng(1, 0));
        let b = sample(ButterflyKind::DiagonalNonsimple, 4, &mut trial_rng(1, 0));
        assert_eq!(a, b);
        let mut rng = trial_rng(2, 0);
        let draws = 10_000;
        let mean = (0..draws)
            .map(|_| sample(ButterflyKind::ScalarSimple, 1, &mut rng).angles()[0].cos())
            .sum::<f64>()
            / f64::from(draws);
        // sd of cos θ is 1/√2
        let sigma = (0.5 / f64::from(draws)).sqrt();
        assert!(mean.abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn lipschitz_constants() {
        assert!((lipschitz_constant(ButterflyKind::ScalarSimple, 3) - 8f64.sqrt()).abs() < 1e-15);
        assert!(
            (lipschitz_constant(ButterflyKind::DiagonalNonsimple, 4) - 8f64.sqrt()).abs() < 1e-15
        );
        assert!(
            (lipschitz_constant(ButterflyKind::ScalarNonsimple, 2) - 6f64.sqrt()).abs() < 1e-15
        );
        assert!((lipschitz_constant(ButterflyKind::DiagonalSimple, 2) - 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_check_examples() {
        let theta = AngleVector::scalar_simple(vec![0.0]).unwrap();
        let r = lipschitz_check(&theta, &[0.0]).unwrap();
        assert_eq!((r.lhs, r.rhs, r.holds), (0.0, 0.0, true));
        let r = lipschitz_check(&theta, &[PI]).unwrap();
        assert!((r.lhs - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!((r.rhs - 2f64.sqrt() * PI).abs() < 1e-14);
        assert!(r.holds);
        assert!(lipschitz_check(&theta, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn givens_examples() {
        assert_eq!(givens(0.0, 0, 1, 3).unwrap(), DenseMatrix::identity(3));
        let g = givens(FRAC_PI_4, 0, 1, 2).unwrap();
        assert!(g.max_abs_diff(&rotation(FRAC_PI_4)).unwrap() < 1e-16);
        assert!(givens(0.1, 1, 1, 3).is_err());
        assert!(givens(0.1, 0, 3, 3).is_err());
        let a = givens_product(&[0.3, 1.9, -2.2], 3).unwrap();
        assert!(orth_error(&a) < 1e-13);
        assert!((det(&a) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn givens_map_is_lipschitz_empirically() {
        let mut rng = trial_rng(16, 0);
        for n in 2..7 {
            let m = n * (n - 1) / 2;
            for _ in 0..50 {
                let t: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..TAU)).collect();
                let e: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let te: Vec<f64> = t.iter().zip(&e).map(|(a, b)| a + b).collect();
                let lhs = givens_product(&t, n)
                    .unwrap()
                    .sub(&givens_product(&te, n).unwrap())
                    .unwrap()
                    .frobenius_norm();
                let rhs =
                    givens_lipschitz_constant(n) * e.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(lhs <= rhs + 1e-12);
            }
        }
    }

    #[test]
    fn angle_vector_json() {
        let v = sample(ButterflyKind::ScalarNonsimple, 2, &mut trial_rng(3, 0));
        let text = serde_json::to_string(&v).unwrap();
        assert!(text.contains("\"kind\":\"scalar_nonsimple\""));
        let back: AngleVector = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
        let bad = r#"{"kind":"scalar_simple","n":2,"angles":[0.1]}"#;
        assert!(serde_json::from_str::<AngleVector>(bad).is_err());
    }
}

#[cfg(test)]
mod ensemble_properties {
    use super::*;
    use crate::rng::trial_rng;
    use crate::stats::ks_two_sample;
    use proptest::prelude::*;
    use rand::Rng;

    fn corner_samples(shift: &DenseMatrix, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = trial_rng(seed, 0);
        (0..10_000)
            .map(|_| {
                let b = build(&sample(ButterflyKind::ScalarSimple, 3, &mut rng));
                let c = build(&sample(ButterflyKind::ScalarSimple, 3, &mut rng));
                (b.get(0, 0), shift.matmul(&c).unwrap().get(0, 0))
            })
            .unzip()
    }

    #[test]
    fn haar_butterflies_are_left_invariant() {
        let b0 = build(&sample(
            ButterflyKind::ScalarSimple,
            3,
            &mut trial_rng(99, 0),
        ));
        let (plain, shifted) = corner_samples(&b0, 100);
        let r = ks_two_sample(&plain, &shifted).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");
    }

    #[test]
    fn invariance_check_detects_a_non_butterfly_shift() {
        let g = givens(0.6_f64.acos(), 0, 7, 8).unwrap();
        let (plain, shifted) = corner_samples(&g, 101);
        assert!(ks_two_sample(&plain, &shifted).unwrap().p_value < 1e-6);
    }

    proptest! {
        #[test]
        fn lipschitz_bound_holds(
            seed in any::<u64>(),
            kind in 0usize..4,
            n in 1u32..=5,
            log_scale in -8.0f64..1.0,
        ) {
            let mut rng = trial_rng(seed, 0);
            let theta = sample(ButterflyKind::ALL[kind], n, &mut rng);
            let eps: Vec<f64> = (0..theta.angles().len())
                .map(|_| 10f64.powf(log_scale) * rng.gen_range(-1.0..1.0))
                .collect();
            let r = lipschitz_check(&theta, &eps).unwrap();
            prop_assert!(r.holds, "{} > {}", r.lhs, r.rhs);
        }
    }
}
