//! Butterfly Hadamard matrices.
//!
//! Angles in `{π/4, 3π/4, 5π/4, 7π/4}` give butterflies whose entries are all
//! `±N^(-1/2)`; scaling by `√N` yields a Hadamard matrix. Such matrices are
//! built here in exact integer arithmetic from quadrant indices.

use std::collections::HashSet;
use std::f64::consts::FRAC_PI_4;
use std::fmt;

use num_bigint::BigUint;
use rand::Rng;
use rayon::prelude::*;

use crate::butterfly::{AngleVector, ButterflyKind};
use crate::elimination::EPS_MACHINE;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::perm::Permutation;

/// Largest `4^M` accepted by [`enumerate_hadamard`].
pub const ENUMERATION_LIMIT: u128 = 1 << 24;

/// Quadrant-quantized angles: angle `j` is `π/4 · (2 q_j + 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HatAngles {
    kind: ButterflyKind,
    n: u32,
    quadrants: Vec<u8>,
}

impl HatAngles {
    pub fn new(kind: ButterflyKind, n: u32, quadrants: Vec<u8>) -> Result<Self> {
        if quadrants.len() != kind.angle_count(n) {
            return Err(Error::Dimension(format!(
                "{kind} of order 2^{n} takes {} angles, got {}",
                kind.angle_count(n),
                quadrants.len()
            )));
        }
        if let Some(&q) = quadrants.iter().find(|&&q| q > 3) {
            return Err(Error::Argument(format!("quadrant index {q} outside 0..4")));
        }
        Ok(Self { kind, n, quadrants })
    }

    pub fn kind(&self) -> ButterflyKind {
        self.kind
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn quadrants(&self) -> &[u8] {
        &self.quadrants
    }

    pub fn to_angle_vector(&self) -> AngleVector {
        AngleVector::new(
            self.kind,
            self.n,
            self.quadrants
                .iter()
                .map(|&q| FRAC_PI_4 * f64::from(2 * q + 1))
                .collect(),
        )
        .expect("hat angles are valid")
    }
}

/// `θ̂ = π/4 · (2⌊2θ/π⌋ + 1)` for every angle.
pub fn hat_angles(theta: &AngleVector) -> Result<HatAngles> {
    let quadrants = theta
        .angles()
        .iter()
        .enumerate()
        .map(|(index, &angle)| {
            let (s, c) = angle.sin_cos();
            if s.abs() < EPS_MACHINE || c.abs() < EPS_MACHINE {
                return Err(Error::DegenerateAngle { index, angle });
            }
            Ok((2.0 * angle / std::f64::consts::PI).floor().clamp(0.0, 3.0) as u8)
        })
        .collect::<Result<Vec<_>>>()?;
    HatAngles::new(theta.kind(), theta.n(), quadrants)
}

/// Entrywise sign of a real matrix, `sgn(0) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<i8>,
}

impl SignMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[i * self.cols + j]
    }

    /// No zero entries.
    pub fn is_sign_pattern(&self) -> bool {
        self.entries.iter().all(|&e| e != 0)
    }

    pub fn into_hadamard(self) -> Result<HadamardMatrix> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!(
                "Hadamard matrices are square, got {}x{}",
                self.rows, self.cols
            )));
        }
        HadamardMatrix::from_entries(self.rows, self.entries)
    }
}

pub fn sign_matrix(a: &DenseMatrix) -> SignMatrix {
    SignMatrix {
        rows: a.rows(),
        cols: a.cols(),
        entries: a
            .as_slice()
            .iter()
            .map(|&v| {
                if v > 0.0 {
                    1
                } else if v < 0.0 {
                    -1
                } else {
                    0
                }
            })
            .collect(),
    }
}

/// Exact `±1` matrix with `H Hᵀ = N I`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HadamardMatrix {
    order: usize,
    entries: Vec<i8>,
}

impl HadamardMatrix {
    /// Validates entries and orthogonality.
    pub fn from_entries(order: usize, entries: Vec<i8>) -> Result<Self> {
        if entries.len() != order * order {
            return Err(Error::Dimension(format!(
                "{} entries for order {order}",
                entries.len()
            )));
        }
        if let Some(i) = entries.iter().position(|&e| e != 1 && e != -1) {
            return Err(Error::Argument(format!(
                "entry ({}, {}) is {}, not ±1",
                i / order.max(1),
                i % order.max(1),
                entries[i]
            )));
        }
        let h = Self { order, entries };
        if let Some((i, j, v)) = h.orthogonality_defect() {
            return Err(Error::Argument(format!(
                "rows {i} and {j} have inner product {v}, not a Hadamard matrix"
            )));
        }
        Ok(h)
    }

    fn from_entries_unchecked(order: usize, entries: Vec<i8>) -> Self {
        Self { order, entries }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[i * self.order + j]
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.entries[i * self.order..(i + 1) * self.order]
    }

    /// First `(i, j, (H Hᵀ)_ij)` differing from `N I`, computed in `i64`.
    fn orthogonality_defect(&self) -> Option<(usize, usize, i64)> {
        let n = self.order;
        for i in 0..n {
            for j in i..n {
                let dot: i64 = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .map(|(&a, &b)| i64::from(a) * i64::from(b))
                    .sum();
                let expected = if i == j { n as i64 } else { 0 };
                if dot != expected {
                    return Some((i, j, dot));
                }
            }
        }
        None
    }

    /// Exact check `H Hᵀ = N I`.
    pub fn verify(&self) -> bool {
        self.orthogonality_defect().is_none()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.order, self.order, |i, j| f64::from(self.get(i, j)))
    }

    /// `"N"` on the first line, then one line of `+`/`-` per row.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.order);
        for i in 0..self.order {
            out.extend(self.row(i).iter().map(|&e| if e > 0 { '+' } else { '-' }));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let order: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("empty Hadamard text".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad order line: {e}")))?;
        let mut entries = Vec::with_capacity(order * order);
        for (i, line) in lines.enumerate() {
            if i >= order || line.chars().count() != order {
                return Err(Error::Parse(format!("row {} has the wrong shape", i + 1)));
            }
            for ch in line.chars() {
                entries.push(match ch {
                    '+' => 1,
                    '-' => -1,
                    other => return Err(Error::Parse(format!("unexpected character {other:?}"))),
                });
            }
        }
        if entries.len() != order * order {
            return Err(Error::Parse(format!("expected {order} rows")));
        }
        Self::from_entries(order, entries)
    }

    /// Bit `i` set iff entry `i` (row-major) is `-1`.
    fn packed_key(entries: &[i8]) -> Vec<u64> {
        let mut key = vec![0u64; entries.len().div_ceil(64)];
        for (i, &e) in entries.iter().enumerate() {
            if e < 0 {
                key[i / 64] |= 1 << (i % 64);
            }
        }
        key
    }

    fn from_key(order: usize, key: &[u64]) -> Self {
        let entries = (0..order * order)
            .map(|i| {
                if key[i / 64] >> (i % 64) & 1 == 1 {
                    -1
                } else {
                    1
                }
            })
            .collect();
        Self::from_entries_unchecked(order, entries)
    }
}

impl fmt::Display for HadamardMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// `(√2 cos, √2 sin)` of `π/4 · (2q + 1)`.
fn quadrant_signs(q: u8) -> (i8, i8) {
    match q {
        0 => (1, 1),
        1 => (-1, 1),
        2 => (-1, -1),
        _ => (1, -1),
    }
}

/// `√N · B(θ̂)` in exact integer arithmetic.
pub fn hadamard_from_hat(hat: &HatAngles) -> HadamardMatrix {
    let order = 1usize << hat.n;
    let entries = exact_node(hat, hat.n, 0);
    debug_assert_eq!(entries.len(), order * order);
    HadamardMatrix::from_entries_unchecked(order, entries)
}

fn exact_node(hat: &HatAngles, level: u32, node: usize) -> Vec<i8> {
    if level == 0 {
        return vec![1];
    }
    let (a1, a2) = if hat.kind.is_simple() {
        let child = exact_node(hat, level - 1, 0);
        (child.clone(), child)
    } else {
        (
            exact_node(hat, level - 1, 2 * node),
            exact_node(hat, level - 1, 2 * node + 1),
        )
    };
    let half = 1usize << (level - 1);
    let order = 2 * half;
    let range = hat.kind.node_angles(hat.n, level, node);
    let signs: Vec<(i8, i8)> = hat.quadrants[range]
        .iter()
        .map(|&q| quadrant_signs(q))
        .collect();
    let mut out = vec![0i8; order * order];
    for i in 0..half {
        let (c, s) = if signs.len() == 1 { signs[0] } else { signs[i] };
        for j in 0..half {
            let x1 = a1[i * half + j];
            let x2 = a2[i * half + j];
            out[i * order + j] = c * x1;
            out[i * order + half + j] = s * x2;
            out[(half + i) * order + j] = -s * x1;
            out[(half + i) * order + half + j] = c * x2;
        }
    }
    out
}

/// `sgn(B(θ)) = √N · B(θ̂)`.
pub fn butterfly_hadamard(theta: &AngleVector) -> Result<HadamardMatrix> {
    Ok(hadamard_from_hat(&hat_angles(theta)?))
}

/// Closed-form number of distinct butterfly Hadamard matrices of order `2^n`:
/// `2^(n+1)`, `2^(3·2^(n-1) - 1)`, `2^(2^n - n + 1)`, `2^(2^(n-1) n + 1)`.
pub fn count_hadamard(kind: ButterflyKind, n: u32) -> BigUint {
    let half = if n == 0 { 0 } else { 1u64 << (n - 1) };
    let exponent: u64 = match kind {
        ButterflyKind::ScalarSimple => u64::from(n) + 1,
        ButterflyKind::ScalarNonsimple => (3 * half).saturating_sub(1),
        ButterflyKind::DiagonalSimple => (2 * half + 1).saturating_sub(u64::from(n)),
        ButterflyKind::DiagonalNonsimple => half * u64::from(n) + 1,
    };
    BigUint::from(1u8) << exponent
}

/// Distinct matrices found by [`enumerate_hadamard`], stored as packed keys.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HadamardSet {
    order: usize,
    inputs: u128,
    keys: Vec<Vec<u64>>,
}

impl HadamardSet {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Number of hat-angle inputs enumerated (`4^M`).
    pub fn inputs(&self) -> u128 {
        self.inputs
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn iter(&self) -> impl Iterator<Item = HadamardMatrix> + '_ {
        self.keys
            .iter()
            .map(|k| HadamardMatrix::from_key(self.order, k))
    }

    pub fn contains(&self, h: &HadamardMatrix) -> bool {
        h.order == self.order
            && self
                .keys
                .binary_search(&HadamardMatrix::packed_key(&h.entries))
                .is_ok()
    }
}

/// Builds the Hadamard matrix of every one of the `4^M` hat-angle inputs and
/// deduplicates them. Refuses inputs beyond [`ENUMERATION_LIMIT`].
pub fn enumerate_hadamard(kind: ButterflyKind, n: u32) -> Result<HadamardSet> {
    let m = kind.angle_count(n);
    let inputs = 4u128.checked_pow(m as u32).unwrap_or(u128::MAX);
    if inputs > ENUMERATION_LIMIT {
        return Err(Error::Infeasible {
            inputs,
            limit: ENUMERATION_LIMIT,
        });
    }
    let order = 1usize << n;
    let chunk = 4096u64;
    let total = inputs as u64;
    let set = (0..total.div_ceil(chunk))
        .into_par_iter()
        .fold(HashSet::new, |mut acc, c| {
            let mut quadrants = vec![0u8; m];
            for index in c * chunk..((c + 1) * chunk).min(total) {
                let mut x = index;
                for q in quadrants.iter_mut() {
                    *q = (x & 3) as u8;
                    x >>= 2;
                }
                let hat = HatAngles {
                    kind,
                    n,
                    quadrants: quadrants.clone(),
                };
                acc.insert(HadamardMatrix::packed_key(&exact_node(&hat, n, 0)));
            }
            acc
        })
        .reduce(HashSet::new, |mut a, b| {
            if a.len() < b.len() {
                return b.into_iter().chain(a).collect();
            }
            a.extend(b);
            a
        });
    let mut keys: Vec<Vec<u64>> = set.into_iter().collect();
    keys.sort_unstable();
    Ok(HadamardSet {
        order,
        inputs,
        keys,
    })
}

/// Uniform hat angles, then [`hadamard_from_hat`].
pub fn sample_hadamard<R: Rng + ?Sized>(
    kind: ButterflyKind,
    n: u32,
    rng: &mut R,
) -> HadamardMatrix {
    let quadrants = (0..kind.angle_count(n))
        .map(|_| rng.gen_range(0..4u8))
        .collect();
    hadamard_from_hat(&HatAngles::new(kind, n, quadrants).expect("valid shape"))
}

/// Sylvester matrix `⨂^n [[1, 1], [1, -1]]`.
pub fn sylvester(n: u32) -> HadamardMatrix {
    let order = 1usize << n;
    let entries = (0..order * order)
        .map(|idx| {
            let (i, j) = (idx / order, idx % order);
            if (i & j).count_ones() % 2 == 0 {
                1
            } else {
                -1
            }
        })
        .collect();
    HadamardMatrix::from_entries_unchecked(order, entries)
}

/// Brute-force Hadamard equivalence (`P_1 A = B P_2` for signed permutations)
/// for orders up to 4.
pub fn equivalent_small(a: &HadamardMatrix, b: &HadamardMatrix) -> Result<bool> {
    let n = a.order;
    if n != b.order {
        return Ok(false);
    }
    if n > 4 {
        return Err(Error::Argument(format!(
            "brute-force equivalence supports order <= 4, got {n}"
        )));
    }
    let perms = Permutation::all(n);
    for rp in &perms {
        for cp in &perms {
            // rows of a reordered by rp, columns by cp
            let m: Vec<i8> = (0..n * n)
                .map(|idx| a.get(rp.apply(idx / n), cp.apply(idx % n)))
                .collect();
            for col_signs in 0..1u32 << n {
                // row signs are then forced by the first column
                let ok = (0..n).all(|i| {
                    let flip = |j: usize| if col_signs >> j & 1 == 1 { -1 } else { 1 };
                    let r = m[i * n] * flip(0) * b.get(i, 0);
                    (0..n).all(|j| m[i * n + j] * flip(j) * r == b.get(i, j))
                });
                if ok {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}
