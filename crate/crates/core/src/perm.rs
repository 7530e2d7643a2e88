//! Permutations in one-line form, their transposition ("cycle") notation, and
//! perfect shuffles.
//!
//! Matrix convention: the permutation matrix of `σ` sends `e_i` to `e_σ(i)`,
//! so `(P_σ A)` has row `σ(i)` equal to row `i` of `A`, and
//! `P_{σ∘τ} = P_σ P_τ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(size: usize) -> Self {
        Self {
            map: (0..size).collect(),
        }
    }

    /// `map[i]` is the 0-based image of `i`.
    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(Error::Argument(format!(
                    "not a bijection on 0..{n}: offending image {v}"
                )));
            }
        }
        Ok(Self { map })
    }

    /// 1-based one-line notation.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        let map = images
            .iter()
            .map(|&v| {
                v.checked_sub(1)
                    .ok_or_else(|| Error::Argument("1-based image 0".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_map(map)
    }

    /// Permutation produced by a sequence of elimination swaps: at step `k`
    /// positions `k` and `swaps[k] >= k` are exchanged. The result is
    /// `(n i_n) ∘ ... ∘ (1 i_1)`.
    pub fn from_swaps(swaps: &[usize]) -> Result<Self> {
        let n = swaps.len();
        // rows[r] = σ⁻¹(r): which original index ends up in position r
        let mut rows: Vec<usize> = (0..n).collect();
        for (k, &i) in swaps.iter().enumerate() {
            if i < k || i >= n {
                return Err(Error::Argument(format!(
                    "swap ({k} {i}) violates k <= i < {n}"
                )));
            }
            rows.swap(k, i);
        }
        Ok(Self::from_inverse_unchecked(&rows))
    }

    fn from_inverse_unchecked(inv: &[usize]) -> Self {
        let mut map = vec![0; inv.len()];
        for (r, &i) in inv.iter().enumerate() {
            map[i] = r;
        }
        Self { map }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.map.len()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn inverse(&self) -> Self {
        Self::from_inverse_unchecked(&self.map)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.size() != other.size() {
            return Err(Error::Dimension(format!(
                "composing permutations of sizes {} and {}",
                self.size(),
                other.size()
            )));
        }
        Ok(Self {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        })
    }

    /// The unique `i_k >= k` with `self = (n i_n) ∘ ... ∘ (1 i_1)`, 0-based.
    pub fn swaps(&self) -> Vec<usize> {
        let n = self.size();
        let target = self.inverse().map;
        let mut cur: Vec<usize> = (0..n).collect();
        let mut pos: Vec<usize> = (0..n).collect();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let j = pos[target[k]];
            let (a, b) = (cur[k], cur[j]);
            cur.swap(k, j);
            pos[a] = j;
            pos[b] = k;
            out.push(j);
        }
        out
    }

    /// Transposition form in 1-based indices, e.g. `"(12 14)(10 15)(2 9)"`,
    /// listing `(k i_k)` for decreasing `k`. The identity prints as `"()"`.
    pub fn cycle_form(&self) -> String {
        let s: String = self
            .swaps()
            .iter()
            .enumerate()
            .rev()
            .filter(|(k, i)| k != *i)
            .map(|(k, i)| format!("({} {})", k + 1, i + 1))
            .collect();
        if s.is_empty() {
            "()".into()
        } else {
            s
        }
    }

    /// Parses a product of 1-based cycles, composed right to left. Accepts
    /// transpositions as emitted by [`Permutation::cycle_form`] as well as
    /// longer cycles.
    pub fn parse_cycle_form(text: &str, size: usize) -> Result<Self> {
        let mut cycles = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let open = rest
                .strip_prefix('(')
                .ok_or_else(|| Error::Parse(format!("expected '(' in {text:?}")))?;
            let close = open
                .find(')')
                .ok_or_else(|| Error::Parse(format!("unclosed cycle in {text:?}")))?;
            let cycle = open[..close]
                .split_whitespace()
                .map(|t| match t.parse::<usize>() {
                    Ok(v) if (1..=size).contains(&v) => Ok(v - 1),
                    _ => Err(Error::Parse(format!("bad index {t:?} for size {size}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            cycles.push(cycle);
            rest = open[close + 1..].trim_start();
        }
        let mut map: Vec<usize> = (0..size).collect();
        for cycle in cycles.iter().rev() {
            let mut step: Vec<usize> = (0..size).collect();
            for (idx, &a) in cycle.iter().enumerate() {
                step[a] = cycle[(idx + 1) % cycle.len()];
            }
            let as_perm = Self::from_map(step)
                .map_err(|_| Error::Parse(format!("repeated index in cycle {cycle:?}")))?;
            for v in map.iter_mut() {
                *v = as_perm.map[*v];
            }
        }
        Ok(Self { map })
    }

    /// Lehmer code: `c_i = #{j > i : σ(j) < σ(i)}`.
    pub fn lehmer_code(&self) -> Vec<usize> {
        (0..self.size())
            .map(|i| {
                self.map[i + 1..]
                    .iter()
                    .filter(|&&v| v < self.map[i])
                    .count()
            })
            .collect()
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.map.iter().map(|v| v + 1).collect()
    }

    /// Dense permutation matrix (tests and small reports only).
    pub fn to_matrix(&self) -> DenseMatrix {
        let n = self.size();
        let mut m = DenseMatrix::zeros(n, n);
        for (i, &v) in self.map.iter().enumerate() {
            m.set(v, i, 1.0);
        }
        m
    }

    /// All permutations of `0..n` in lexicographic order of one-line form.
    pub fn all(n: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..n).collect();
        loop {
            out.push(Self { map: cur.clone() });
            // next lexicographic permutation
            let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
                break;
            };
            let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
            cur.swap(i - 1, j);
            cur[i..].reverse();
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct PermutationRepr {
    one_line: Vec<usize>,
    cycles: String,
}

impl Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PermutationRepr {
            one_line: self.to_one_based(),
            cycles: self.cycle_form(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PermutationRepr::deserialize(d)?;
        let p = Self::from_one_based(&repr.one_line).map_err(serde::de::Error::custom)?;
        let from_cycles =
            Self::parse_cycle_form(&repr.cycles, p.size()).map_err(serde::de::Error::custom)?;
        if from_cycles != p {
            return Err(serde::de::Error::custom(
                "one-line form and cycle form disagree",
            ));
        }
        Ok(p)
    }
}

/// Perfect shuffle `P` with `P (A ⊗ I_k) Pᵀ = I_k ⊗ A` for every `A` of
/// order `n_total / k`.
pub fn perfect_shuffle(k: usize, n_total: usize) -> Result<Permutation> {
    if k == 0 || !n_total.is_multiple_of(k) {
        return Err(Error::Argument(format!("{k} does not divide {n_total}")));
    }
    let m = n_total / k;
    let mut map = vec![0; n_total];
    for a in 0..m {
        for s in 0..k {
            map[a * k + s] = s * m + a;
        }
    }
    Ok(Permutation { map })
}

/// `P · A · Q` computed as row and column reorderings.
pub fn apply_permutations(
    p: &Permutation,
    a: &DenseMatrix,
    q: &Permutation,
) -> Result<DenseMatrix> {
    if p.size() != a.rows() || q.size() != a.cols() {
        return Err(Error::Dimension(format!(
            "permutations of sizes {} and {} against a {}x{} matrix",
            p.size(),
            q.size(),
            a.rows(),
            a.cols()
        )));
    }
    let p_inv = p.inverse();
    Ok(DenseMatrix::from_fn(a.rows(), a.cols(), |r, c| {
        a.get(p_inv.apply(r), q.apply(c))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::kron;
    use proptest::prelude::*;

    fn shuffled(n: usize, seed: u64) -> Permutation {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(&mut rng);
        Permutation::from_map(map).unwrap()
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::from_map(vec![0, 0]).is_err());
        assert!(Permutation::from_map(vec![0, 2]).is_err());
        assert!(Permutation::from_swaps(&[1, 0]).is_err());
    }

    #[test]
    fn perfect_shuffle_trivial_and_q2() {
        assert!(perfect_shuffle(1, 8).unwrap().is_identity());
        let q2 = perfect_shuffle(2, 4).unwrap();
        assert_eq!(q2.cycle_form(), "(2 3)");
        assert!(perfect_shuffle(3, 8).is_err());
    }

    #[test]
    fn perfect_shuffle_conjugates_kron() {
        let a = DenseMatrix::from_rows(&[vec![0.3, -1.1], vec![2.0, 0.7]]).unwrap();
        let p = perfect_shuffle(4, 8).unwrap();
        let lhs = kron(&a, &DenseMatrix::identity(4)).unwrap();
        let rhs = kron(&DenseMatrix::identity(4), &a).unwrap();
        let conj = apply_permutations(&p, &lhs, &p.inverse()).unwrap();
        assert_eq!(conj, rhs);
        // same statement with materialized matrices
        let pm = p.to_matrix();
        let dense = pm.matmul(&lhs).unwrap().matmul(&pm.transpose()).unwrap();
        assert_eq!(dense, rhs);
    }

    #[test]
    fn apply_permutations_examples() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let id = Permutation::identity(2);
        assert_eq!(apply_permutations(&id, &a, &id).unwrap(), a);
        let t = Permutation::from_map(vec![1, 0]).unwrap();
        let swapped = apply_permutations(&t, &a, &id).unwrap();
        assert_eq!(
            swapped,
            DenseMatrix::from_rows(&[vec![3.0, 4.0], vec![1.0, 2.0]]).unwrap()
        );
        let rev = Permutation::from_map((0..5).rev().collect()).unwrap();
        let i5 = DenseMatrix::identity(5);
        assert_eq!(apply_permutations(&rev, &i5, &rev.inverse()).unwrap(), i5);
        assert!(apply_permutations(&t, &i5, &t).is_err());
    }

    #[test]
    fn apply_matches_dense_product() {
        let a = DenseMatrix::from_fn(6, 6, |i, j| (i * 6 + j) as f64);
        let p = shuffled(6, 1);
        let q = shuffled(6, 2);
        let dense = p
            .to_matrix()
            .matmul(&a)
            .unwrap()
            .matmul(&q.to_matrix())
            .unwrap();
        assert_eq!(apply_permutations(&p, &a, &q).unwrap(), dense);
    }

    #[test]
    fn spaced_cycle_form_parses() {
        let s = "(12 14)(10 15)(8 10)(7 9)(6 14)(5 6)(4 13)(3 5)(2 9)";
        let p = Permutation::parse_cycle_form(s, 16).unwrap();
        assert_eq!(p.cycle_form(), s);
        assert_eq!(
            Permutation::parse_cycle_form("()", 3).unwrap(),
            Permutation::identity(3)
        );
        assert!(Permutation::parse_cycle_form("(1 4)", 3).is_err());
    }

    #[test]
    fn swaps_match_from_swaps() {
        let swaps = vec![3, 1, 4, 3, 4];
        let p = Permutation::from_swaps(&swaps).unwrap();
        assert_eq!(p.swaps(), swaps);
        // row r of P·A is row σ⁻¹(r) of A: first swap moves row 3 to the top
        assert_eq!(p.inverse().apply(0), 3);
    }

    #[test]
    fn composition_matches_matrix_product() {
        let a = shuffled(7, 3);
        let b = shuffled(7, 4);
        let ab = a.compose(&b).unwrap();
        let dense = a.to_matrix().matmul(&b.to_matrix()).unwrap();
        assert_eq!(ab.to_matrix(), dense);
    }

    #[test]
    fn lehmer_and_enumeration() {
        let all = Permutation::all(4);
        assert_eq!(all.len(), 24);
        assert_eq!(all[0].lehmer_code(), vec![0, 0, 0, 0]);
        assert_eq!(all[23].lehmer_code(), vec![3, 2, 1, 0]);
        assert_eq!(Permutation::all(0).len(), 1);
    }

    #[test]
    fn json_round_trip() {
        let p = shuffled(9, 5);
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("one_line"));
        let back: Permutation = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"one_line":[2,1,3],"cycles":"(2 3)"}"#;
        assert!(serde_json::from_str::<Permutation>(bad).is_err());
    }

    proptest! {
        #[test]
        fn cycle_form_round_trips(n in 1usize..1024, seed in any::<u64>()) {
            let p = shuffled(n, seed);
            let text = p.cycle_form();
            prop_assert_eq!(Permutation::parse_cycle_form(&text, n).unwrap(), p.clone());
            prop_assert_eq!(Permutation::from_swaps(&p.swaps()).unwrap(), p);
        }

        #[test]
        fn shuffle_conjugation_exact_for_integer_matrices(
            log_m in 1u32..4, log_k in 0u32..4, entries in prop::collection::vec(-9i32..10, 64)
        ) {
            let m = 1usize << log_m;
            let k = 1usize << log_k;
            let a = DenseMatrix::from_fn(m, m, |i, j| f64::from(entries[i * m + j]));
            let p = perfect_shuffle(k, m * k).unwrap();
            let lhs = kron(&a, &DenseMatrix::identity(k)).unwrap();
            let rhs = kron(&DenseMatrix::identity(k), &a).unwrap();
            prop_assert_eq!(apply_permutations(&p, &lhs, &p.inverse()).unwrap(), rhs);
        }
    }
}
