//! Row-major dense real matrices with Kronecker and direct-sum algebra.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Dense row-major `f64` matrix.
///
/// Public constructors reject NaN and infinite entries. Arithmetic results are
/// not re-validated, so an elimination with unbounded growth may still
/// overflow.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Dimension(format!("{rows} x {cols} overflows")))?;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "{} values supplied for a {rows} x {cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.concat())
    }

    /// Builds a matrix from a closure over `(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `max_{i,j} |a_ij|`; zero for an empty matrix.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Induced infinity norm: largest absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self::from_raw(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self::from_raw(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    /// `max |a_ij - b_ij|`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Copy of the trailing block `rows[from..], cols[from..]`.
    pub fn trailing_block(&self, from: usize) -> Self {
        let r = self.rows.saturating_sub(from);
        let c = self.cols.saturating_sub(from);
        Self::from_fn(r, c, |i, j| self.get(from + i, from + j))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// One row per line, comma separated, every value in `%.17g` form.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 24);
        for i in 0..self.rows {
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format_g17(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`DenseMatrix::to_csv`]. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("line {}: {tok:?}: {e}", lineno + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let rows = a
        .rows
        .checked_mul(b.rows)
        .ok_or_else(|| Error::Dimension("kron row count overflows".into()))?;
    let cols = a
        .cols
        .checked_mul(b.cols)
        .ok_or_else(|| Error::Dimension("kron column count overflows".into()))?;
    rows.checked_mul(cols)
        .ok_or_else(|| Error::Dimension("kron size overflows".into()))?;
    let mut out = DenseMatrix::zeros(rows, cols);
    for ai in 0..a.rows {
        for aj in 0..a.cols {
            let s = a.get(ai, aj);
            if s == 0.0 {
                continue;
            }
            for bi in 0..b.rows {
                let dst = (ai * b.rows + bi) * cols + aj * b.cols;
                for (o, v) in out.data[dst..dst + b.cols].iter_mut().zip(b.row(bi)) {
                    *o = s * v;
                }
            }
        }
    }
    Ok(out)
}

/// Block-diagonal matrix `a ⊕ b`.
pub fn direct_sum(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.rows + b.rows, a.cols + b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            out.set(i, j, a.get(i, j));
        }
    }
    for i in 0..b.rows {
        for j in 0..b.cols {
            out.set(a.rows + i, a.cols + j, b.get(i, j));
        }
    }
    out
}

/// Formats like C's `printf("%.17g", x)`, which round-trips every `f64`.
pub fn format_g17(x: f64) -> String {
    const PREC: i32 = 17;
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (PREC - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..PREC).contains(&exp) {
        let fixed = format!("{:.*}", (PREC - 1 - exp) as usize, x);
        strip_fraction_zeros(&fixed).to_string()
    } else {
        let mut out = strip_fraction_zeros(mantissa).to_string();
        let _ = write!(out, "e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
        out
    }
}

fn strip_fraction_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}


#[cfg(test)]
mod kron_properties {
    use super::*;
    use crate::rng::trial_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = trial_rng(seed, 0);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-2.0..2.0))
    }

    proptest! {
        #[test]
        fn mixed_product(seed in any::<u64>()) {
            let [a, b, c, d] = [0, 1, 2, 3].map(|k| random(4, 4, seed ^ (k << 60)));
            let lhs = kron(&a, &b).unwrap().matmul(&kron(&c, &d).unwrap()).unwrap();
            let rhs = kron(&a.matmul(&c).unwrap(), &b.matmul(&d).unwrap()).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-13 * rhs.max_norm().max(1.0));
        }

        #[test]
        fn max_norm_is_multiplicative(
            seed in any::<u64>(),
            r1 in 1usize..6, c1 in 1usize..6, r2 in 1usize..6, c2 in 1usize..6,
        ) {
            let a = random(r1, c1, seed);
            let b = random(r2, c2, seed.wrapping_add(1));
            prop_assert_eq!(kron(&a, &b).unwrap().max_norm(), a.max_norm() * b.max_norm());
        }
    }
}
