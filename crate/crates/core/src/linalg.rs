//! Small sparse-matrix toolkit: triplet assembly, CSR storage and a banded
//! LU factorization with partial pivoting.
//!
//! Finite-element matrices here come from P1 elements with coordinate-sorted
//! degrees of freedom, so their bandwidth stays small and a band solver is
//! all the direct linear algebra the crate needs.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Accumulates `(row, col, value)` contributions; duplicates are summed.
#[derive(Clone, Debug)]
pub struct TripletBuilder<T> {
    n: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Real> TripletBuilder<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> SparseMatrix<T> {
        // stable sort keeps the summation order of duplicates deterministic
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                let top = vals.last_mut().expect("duplicate follows an entry");
                *top = *top + v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            n: self.n,
            row_ptr,
            cols,
            vals,
        }
    }
}

/// Square matrix in compressed sparse row layout.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> SparseMatrix<T> {
    pub fn identity(n: usize) -> Self {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.push(i, i, T::one());
        }
        b.build()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map(|(_, v)| v)
            .unwrap_or_else(T::zero)
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).fold(T::zero(), |acc, (j, v)| acc + v * x[j]))
            .collect()
    }

    pub fn transpose_mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[j] = out[j] + v * x[i];
            }
        }
        out
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: T, other: &SparseMatrix<T>, b: T) -> SparseMatrix<T> {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut t = TripletBuilder::new(self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                t.push(i, j, a * v);
            }
            for (j, v) in other.row(i) {
                t.push(i, j, b * v);
            }
        }
        t.build()
    }

    /// `selfᵀ self + shift·I`, the Levenberg–Marquardt normal matrix.
    pub fn normal_matrix(&self, shift: T) -> SparseMatrix<T> {
        let n = self.n;
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            // (AᵀA)_{jk} = Σ_i A_ij A_ik
            let row: Vec<(usize, T)> = self.row(i).collect();
            for &(j, vj) in &row {
                for &(k, vk) in &row {
                    b.push(j, k, vj * vk);
                }
            }
        }
        for i in 0..n {
            b.push(i, i, shift);
        }
        b.build()
    }

    /// Lower and upper bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    pub fn factor(&self) -> Result<BandLu<T>> {
        BandLu::new(self)
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        Ok(self.factor()?.solve(rhs))
    }
}

/// Banded LU factorization with partial pivoting (row interchanges),
/// laid out like LAPACK `gbtrf`: multipliers stay in place and pivots are
/// replayed in order during the forward sweep.
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    ab: Vec<T>,
    pivots: Vec<usize>,
}

impl<T: Real> BandLu<T> {
    fn idx(&self, i: usize, j: usize) -> usize {
        // row i stores columns [i - kl, i + kl + ku] at offsets [0, width)
        i * self.width + (j + self.kl) - i
    }

    pub fn new(a: &SparseMatrix<T>) -> Result<Self> {
        let n = a.dim();
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            ab: vec![T::zero(); n * width],
            pivots: vec![0; n],
        };
        let mut scale = T::zero();
        for i in 0..n {
            for (j, v) in a.row(i) {
                let k = lu.idx(i, j);
                lu.ab[k] = v;
                scale = scale.max(v.abs());
            }
        }
        let tiny = scale * T::epsilon() * T::from_usize(n.max(1)).unwrap_or_else(T::one);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut piv = k;
            let mut best = lu.ab[lu.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = lu.ab[lu.idx(i, k)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if !(best > tiny) {
                return Err(Error::Singular { pivot: k });
            }
            lu.pivots[k] = piv;
            if piv != k {
                for j in k..=last_col {
                    let a_idx = lu.idx(k, j);
                    let b_idx = lu.idx(piv, j);
                    lu.ab.swap(a_idx, b_idx);
                }
            }
            let d = lu.ab[lu.idx(k, k)];
            for i in k + 1..=last_row {
                let li = lu.idx(i, k);
                let m = lu.ab[li] / d;
                lu.ab[li] = m;
                if m != T::zero() {
                    for j in k + 1..=last_col {
                        let kj = lu.ab[lu.idx(k, j)];
                        let ij = lu.idx(i, j);
                        lu.ab[ij] = lu.ab[ij] - m * kj;
                    }
                }
            }
        }
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for i in k + 1..=(k + self.kl).min(n.saturating_sub(1)) {
                x[i] = x[i] - self.ab[self.idx(i, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + self.kl + self.ku).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=last_col {
                s = s - self.ab[self.idx(k, j)] * x[j];
            }
            x[k] = s / self.ab[self.idx(k, k)];
        }
        x
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn sup_norm<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

pub fn euclid_norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
