//! Small dense/envelope linear algebra kernels: pairwise summation,
//! envelope Cholesky log-determinant, exact sparse determinant.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Pairwise (cascade) summation in fixed order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Symmetric matrix in lower envelope (skyline) storage: row `i` keeps
/// columns `first[i]..=i`. A band matrix of half-width `w` has
/// `first[i] = i - w`, a dense one `first[i] = 0`.
#[derive(Clone, Debug)]
pub struct EnvelopeMatrix {
    first: Vec<usize>,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeMatrix {
    /// Lower triangle given as sparse rows `(col, value)` with `col <= row`
    /// (entries above the diagonal are ignored).
    pub fn from_sparse_rows<'a, I>(rows: I) -> Self
    where
        I: IntoIterator<Item = &'a [(usize, f64)]>,
    {
        let rows: Vec<&[(usize, f64)]> = rows.into_iter().collect();
        let n = rows.len();
        let mut first = Vec::with_capacity(n);
        for (i, row) in rows.iter().enumerate() {
            let lo = row
                .iter()
                .filter(|(c, v)| *c <= i && *v != 0.0)
                .map(|(c, _)| *c)
                .min()
                .unwrap_or(i);
            first.push(lo);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut total = 0;
        for (i, &lo) in first.iter().enumerate() {
            offsets.push(total);
            total += i - lo + 1;
        }
        offsets.push(total);
        let mut values = vec![0.0; total];
        for (i, row) in rows.iter().enumerate() {
            for &(c, v) in row.iter() {
                if c <= i && c >= first[i] {
                    values[offsets[i] + c - first[i]] += v;
                }
            }
        }
        Self { first, offsets, values }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// Number of stored lower-triangle entries.
    pub fn stored(&self) -> usize {
        self.values.len()
    }

    /// Largest `i - first[i]`.
    pub fn half_bandwidth(&self) -> usize {
        self.first.iter().enumerate().map(|(i, &lo)| i - lo).max().unwrap_or(0)
    }

    /// In-place Cholesky `A = L L^T` within the envelope; returns the
    /// diagonal of `L`. Fill-in never leaves the envelope.
    pub fn cholesky_diagonal(mut self) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut diag = Vec::with_capacity(n);
        for i in 0..n {
            let fi = self.first[i];
            let oi = self.offsets[i];
            for j in fi..=i {
                let fj = self.first[j];
                let oj = self.offsets[j];
                let start = fi.max(fj);
                let mut s = self.values[oi + j - fi];
                let li = &self.values[oi + start - fi..oi + j - fi];
                let lj = &self.values[oj + start - fj..oj + j - fj];
                s -= li.iter().zip(lj).map(|(a, b)| a * b).sum::<f64>();
                if j == i {
                    if s.is_nan() || s <= 0.0 || s.is_infinite() {
                        return Err(Error::NotPositive { row: i, pivot: s });
                    }
                    let d = s.sqrt();
                    self.values[oi + i - fi] = d;
                    diag.push(d);
                } else {
                    self.values[oi + j - fi] = s / diag[j];
                }
            }
        }
        Ok(diag)
    }

    /// `log det A` for symmetric positive definite `A`, as `2 Σ log L_ii`.
    pub fn log_det(self) -> Result<f64> {
        let diag = self.cholesky_diagonal()?;
        let logs: Vec<f64> = diag.iter().map(|d| d.ln()).collect();
        Ok(2.0 * pairwise_sum(&logs))
    }
}

/// Exact determinant of a square integer matrix given as sparse rows.
/// Gaussian elimination over the rationals; for band matrices the fill
/// stays within the band.
pub fn exact_determinant(n: usize, rows: &[Vec<(usize, BigInt)>]) -> BigInt {
    assert_eq!(rows.len(), n, "matrix must be square");
    let mut work: Vec<BTreeMap<usize, BigRational>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .filter(|(_, v)| !v.is_zero())
                .map(|(c, v)| (*c, BigRational::from_integer(v.clone())))
                .collect()
        })
        .collect();
    let mut det = BigRational::one();
    // rows still to be used as pivots, kept in order for determinism
    let mut remaining: Vec<usize> = (0..n).collect();
    // column -> rows with a nonzero in that column (among `remaining`)
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, r) in work.iter().enumerate() {
        for &c in r.keys() {
            col_rows[c].push(i);
        }
    }
    let mut sign_flips = 0usize;
    for k in 0..n {
        // pivot row: first remaining row with a nonzero in column k
        let cands: Vec<usize> = col_rows[k]
            .iter()
            .copied()
            .filter(|&r| work[r].contains_key(&k))
            .collect();
        let Some(&p) = cands.iter().min() else {
            return BigInt::zero();
        };
        // position of p in `remaining` determines the permutation sign
        let pos = remaining.iter().position(|&r| r == p).unwrap();
        sign_flips += pos;
        remaining.remove(pos);
        let pivot_row = std::mem::take(&mut work[p]);
        let pivot = pivot_row[&k].clone();
        det *= pivot.clone();
        for &r in &cands {
            if r == p {
                continue;
            }
            let factor = work[r].remove(&k).unwrap() / pivot.clone();
            for (c, v) in pivot_row.range(k + 1..) {
                let entry = work[r].entry(*c).or_insert_with(BigRational::zero);
                *entry -= factor.clone() * v.clone();
                if entry.is_zero() {
                    work[r].remove(c);
                } else if !col_rows[*c].contains(&r) {
                    col_rows[*c].push(r);
                }
            }
        }
    }
    debug_assert!(det.is_integer());
    let det = det.to_integer();
    if sign_flips % 2 == 1 {
        -det
    } else {
        det
    }
}

/// `|det|` for convenience.
pub fn exact_abs_determinant(n: usize, rows: &[Vec<(usize, BigInt)>]) -> BigInt {
    exact_determinant(n, rows).abs()
}
