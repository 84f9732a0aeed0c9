//! Smith normal form of integer matrices over arbitrary-precision integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type IntMatrix = Vec<Vec<BigInt>>;

#[derive(Clone, Debug, PartialEq)]
pub struct SmithForm {
    /// `d_1 | d_2 | ... `, nonnegative, `min(rows, cols)` of them.
    pub divisors: Vec<BigInt>,
    pub rank: usize,
    /// Unimodular `U` (rows × rows) with `U M V = diag(divisors)`.
    pub left: Option<IntMatrix>,
    /// Unimodular `V` (cols × cols).
    pub right: Option<IntMatrix>,
}

impl SmithForm {
    /// Product of all divisors; zero when the matrix is rank deficient.
    pub fn divisor_product(&self) -> BigInt {
        self.divisors.iter().fold(BigInt::one(), |acc, d| acc * d)
    }
}

/// Elementary divisors of `m`.
pub fn snf(m: &[Vec<BigInt>]) -> Vec<BigInt> {
    SmithCalc::new(m, false).run().divisors
}

/// Rank over the rationals.
pub fn rank(m: &[Vec<BigInt>]) -> usize {
    SmithCalc::new(m, false).run().rank
}

/// Elementary divisors together with the unimodular transforms.
pub fn snf_with_transforms(m: &[Vec<BigInt>]) -> SmithForm {
    SmithCalc::new(m, true).run()
}

pub fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect()
}

pub fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> IntMatrix {
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    row.iter()
                        .zip(b)
                        .filter(|(x, _)| !x.is_zero())
                        .fold(BigInt::zero(), |acc, (x, brow)| acc + x * &brow[j])
                })
                .collect()
        })
        .collect()
}

struct SmithCalc {
    a: IntMatrix,
    rows: usize,
    cols: usize,
    u: Option<IntMatrix>,
    v: Option<IntMatrix>,
}

impl SmithCalc {
    fn new(m: &[Vec<BigInt>], track: bool) -> Self {
        let rows = m.len();
        let cols = m.first().map_or(0, |r| r.len());
        assert!(m.iter().all(|r| r.len() == cols), "ragged matrix");
        Self {
            a: m.to_vec(),
            rows,
            cols,
            u: track.then(|| identity(rows)),
            v: track.then(|| identity(cols)),
        }
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i != j {
            self.a.swap(i, j);
            if let Some(u) = &mut self.u {
                u.swap(i, j);
            }
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i != j {
            for r in &mut self.a {
                r.swap(i, j);
            }
            if let Some(v) = &mut self.v {
                for r in v.iter_mut() {
                    r.swap(i, j);
                }
            }
        }
    }

    /// row_dst += q * row_src
    fn add_row(&mut self, dst: usize, src: usize, q: &BigInt, from: usize) {
        let (d, s) = two_rows(&mut self.a, dst, src);
        for (x, y) in d[from..].iter_mut().zip(&s[from..]) {
            if !y.is_zero() {
                *x += q * y;
            }
        }
        if let Some(u) = &mut self.u {
            let (d, s) = two_rows(u, dst, src);
            for (x, y) in d.iter_mut().zip(s.iter()) {
                if !y.is_zero() {
                    *x += q * y;
                }
            }
        }
    }

    /// col_dst += q * col_src
    fn add_col(&mut self, dst: usize, src: usize, q: &BigInt, from: usize) {
        for r in &mut self.a[from..] {
            if !r[src].is_zero() {
                let t = q * &r[src];
                r[dst] += t;
            }
        }
        if let Some(v) = &mut self.v {
            for r in v.iter_mut() {
                if !r[src].is_zero() {
                    let t = q * &r[src];
                    r[dst] += t;
                }
            }
        }
    }

    fn negate_row(&mut self, i: usize) {
        for x in &mut self.a[i] {
            *x = -std::mem::take(x);
        }
        if let Some(u) = &mut self.u {
            for x in &mut u[i] {
                *x = -std::mem::take(x);
            }
        }
    }

    /// Smallest nonzero |entry| in the trailing submatrix from (t, t).
    fn min_entry(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for i in t..self.rows {
            for j in t..self.cols {
                let x = &self.a[i][j];
                if x.is_zero() {
                    continue;
                }
                if best.is_none_or(|(bi, bj)| x.abs() < self.a[bi][bj].abs()) {
                    if x.abs().is_one() {
                        return Some((i, j));
                    }
                    best = Some((i, j));
                }
            }
        }
        best
    }

    /// Clears row t and column t beyond the pivot.
    fn clear_cross(&mut self, t: usize) {
        loop {
            let mut dirty = false;
            for i in t + 1..self.rows {
                if self.a[i][t].is_zero() {
                    continue;
                }
                let q = -self.a[i][t].div_floor(&self.a[t][t]);
                self.add_row(i, t, &q, t);
                if !self.a[i][t].is_zero() {
                    dirty = true;
                }
            }
            for j in t + 1..self.cols {
                if self.a[t][j].is_zero() {
                    continue;
                }
                let q = -self.a[t][j].div_floor(&self.a[t][t]);
                self.add_col(j, t, &q, t);
                if !self.a[t][j].is_zero() {
                    dirty = true;
                }
            }
            if !dirty {
                return;
            }
            // move the smallest remaining remainder into the pivot
            let mut best = (t, t);
            for i in t + 1..self.rows {
                if !self.a[i][t].is_zero() && self.a[i][t].abs() < self.a[best.0][best.1].abs() {
                    best = (i, t);
                }
            }
            for j in t + 1..self.cols {
                if !self.a[t][j].is_zero() && self.a[t][j].abs() < self.a[best.0][best.1].abs() {
                    best = (t, j);
                }
            }
            self.swap_rows(t, best.0);
            self.swap_cols(t, best.1);
        }
    }

    fn run(mut self) -> SmithForm {
        let k = self.rows.min(self.cols);
        let mut rank = k;
        for t in 0..k {
            let Some((i, j)) = self.min_entry(t) else {
                rank = t;
                break;
            };
            self.swap_rows(t, i);
            self.swap_cols(t, j);
            loop {
                self.clear_cross(t);
                if self.a[t][t].abs().is_one() {
                    break;
                }
                // divisibility: a nondivisible entry is folded into row t
                let p = self.a[t][t].clone();
                let bad = (t + 1..self.rows).find(|&i| (t + 1..self.cols).any(|j| !self.a[i][j].is_multiple_of(&p)));
                match bad {
                    Some(i) => self.add_row(t, i, &BigInt::one(), t),
                    None => break,
                }
            }
            if self.a[t][t].is_negative() {
                self.negate_row(t);
            }
        }
        let divisors = (0..k).map(|t| self.a[t][t].clone()).collect();
        SmithForm {
            divisors,
            rank,
            left: self.u,
            right: self.v,
        }
    }
}

fn two_rows<T>(m: &mut [Vec<T>], dst: usize, src: usize) -> (&mut Vec<T>, &Vec<T>) {
    assert_ne!(dst, src);
    if dst < src {
        let (lo, hi) = m.split_at_mut(src);
        (&mut lo[dst], &hi[0])
    } else {
        let (lo, hi) = m.split_at_mut(dst);
        (&mut hi[0], &lo[src])
    }
}
