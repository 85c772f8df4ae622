//! Dense square matrices over a [`Field`].

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::field::Field;
use crate::interval::VineId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("index {index} out of range for size {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("elementary matrix needs distinct indices, got l = k = {0}")]
    DiagonalElementary(usize),
    #[error("matrix is singular on its support")]
    SingularOnSupport,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// `n × n` matrix; rows index targets, columns index sources.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix<F: Field> {
    field: F,
    n: usize,
    data: Vec<F::Elem>,
}

impl<F: Field> Matrix<F> {
    pub fn zeros(field: &F, n: usize) -> Self {
        Self { field: field.clone(), n, data: vec![field.zero(); n * n] }
    }

    pub fn identity(field: &F, n: usize) -> Self {
        Self::projection(field, n, &(0..n).collect())
    }

    /// `π_S`: ones on the diagonal at `S`, zero elsewhere.
    pub fn projection(field: &F, n: usize, support: &BTreeSet<VineId>) -> Self {
        let mut m = Self::zeros(field, n);
        for &i in support.iter().filter(|&&i| i < n) {
            m.set(i, i, field.one());
        }
        m
    }

    /// `E(l→k; μ)`: the identity plus `μ` at row `l`, column `k`. Right
    /// multiplication by it adds `μ` times column `l` to column `k`.
    pub fn elementary(field: &F, n: usize, l: usize, k: usize, mu: F::Elem) -> Result<Self, MatrixError> {
        for index in [l, k] {
            if index >= n {
                return Err(MatrixError::IndexOutOfRange { index, n });
            }
        }
        if l == k {
            return Err(MatrixError::DiagonalElementary(l));
        }
        let mut m = Self::identity(field, n);
        m.set(l, k, mu);
        Ok(m)
    }

    pub fn from_fn(field: &F, n: usize, f: impl Fn(usize, usize) -> F::Elem) -> Self {
        let data = (0..n * n).map(|x| f(x / n, x % n)).collect();
        Self { field: field.clone(), n, data }
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> &F::Elem {
        &self.data[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: F::Elem) {
        self.data[row * self.n + col] = value;
    }

    pub fn is_zero_at(&self, row: usize, col: usize) -> bool {
        self.field.is_zero(self.get(row, col))
    }

    /// Nonzero entries as `(row, col, value)`, row-major.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, &F::Elem)> {
        self.data.iter().enumerate().filter(|(_, v)| !self.field.is_zero(v)).map(|(x, v)| (x / self.n, x % self.n, v))
    }

    pub fn mul(&self, rhs: &Matrix<F>) -> Matrix<F> {
        assert_eq!(self.n, rhs.n, "matrix sizes differ");
        let f = &self.field;
        let n = self.n;
        let mut out = Matrix::zeros(f, n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if f.is_zero(a) {
                    continue;
                }
                for j in 0..n {
                    let b = rhs.get(k, j);
                    if !f.is_zero(b) {
                        let v = f.add(out.get(i, j), &f.mul(a, b));
                        out.set(i, j, v);
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Matrix<F>) -> Matrix<F> {
        assert_eq!(self.n, rhs.n, "matrix sizes differ");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| self.field.add(a, b)).collect();
        Matrix { field: self.field.clone(), n: self.n, data }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(&self.field, self.n)
    }

    /// Sets the diagonal to 1 at indices outside `support`; everything else is copied.
    pub fn tilde(&self, support: &BTreeSet<VineId>) -> Matrix<F> {
        let mut m = self.clone();
        for i in (0..self.n).filter(|i| !support.contains(i)) {
            m.set(i, i, self.field.one());
        }
        m
    }

    /// Keeps rows and columns listed in `ids`, in that order.
    pub fn select(&self, ids: &[usize]) -> Matrix<F> {
        Matrix::from_fn(&self.field, ids.len(), |r, c| self.get(ids[r], ids[c]).clone())
    }

    pub fn block_diag(&self, other: &Matrix<F>) -> Matrix<F> {
        let (a, b) = (self.n, other.n);
        Matrix::from_fn(&self.field, a + b, |r, c| match (r < a, c < a) {
            (true, true) => self.get(r, c).clone(),
            (false, false) => other.get(r - a, c - a).clone(),
            _ => self.field.zero(),
        })
    }

    /// Row/column relabelling: entry `(i, j)` moves to `(perm[i], perm[j])`.
    pub fn permute(&self, perm: &[usize]) -> Matrix<F> {
        let mut out = Matrix::zeros(&self.field, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(perm[i], perm[j], self.get(i, j).clone());
            }
        }
        out
    }

    /// Inverse of the block on `support`, extended by the identity elsewhere.
    /// Gauss-Jordan elimination on the supported rows and columns.
    pub fn inverse_on_support(&self, support: &BTreeSet<VineId>) -> Result<Matrix<F>, MatrixError> {
        let f = &self.field;
        let idx: Vec<usize> = support.iter().copied().filter(|&i| i < self.n).collect();
        let s = idx.len();
        let mut a: Vec<Vec<F::Elem>> =
            idx.iter().map(|&r| idx.iter().map(|&c| self.get(r, c).clone()).collect()).collect();
        let mut inv: Vec<Vec<F::Elem>> =
            (0..s).map(|r| (0..s).map(|c| if r == c { f.one() } else { f.zero() }).collect()).collect();
        for col in 0..s {
            let pivot = (col..s).find(|&r| !f.is_zero(&a[r][col])).ok_or(MatrixError::SingularOnSupport)?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p = f.inv(&a[col][col]).expect("nonzero pivot");
            for x in 0..s {
                a[col][x] = f.mul(&a[col][x], &p);
                inv[col][x] = f.mul(&inv[col][x], &p);
            }
            for r in (0..s).filter(|&r| r != col) {
                let factor = a[r][col].clone();
                if f.is_zero(&factor) {
                    continue;
                }
                for x in 0..s {
                    a[r][x] = f.sub(&a[r][x], &f.mul(&factor, &a[col][x]));
                    inv[r][x] = f.sub(&inv[r][x], &f.mul(&factor, &inv[col][x]));
                }
            }
        }
        let mut out = Matrix::identity(f, self.n);
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                out.set(i, j, inv[r][c].clone());
            }
        }
        Ok(out)
    }
}

impl<F: Field> fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.n {
            if r > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = (0..self.n).map(|c| self.field.format_elem(self.get(r, c))).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{PrimeField, Rationals};
    use crate::interval::frac;
    use proptest::prelude::*;

    #[test]
    fn elementary_shape() {
        let f = PrimeField::gf2();
        // E(0→1; 1), n = 2: identity plus one at row 0, column 1.
        let e = Matrix::elementary(&f, 2, 0, 1, 1).unwrap();
        assert_eq!(e, Matrix::from_fn(&f, 2, |r, c| if r == c || (r, c) == (0, 1) { 1 } else { 0 }));
        assert!(Matrix::elementary(&f, 2, 0, 1, 0).unwrap().is_identity());
        assert_eq!(Matrix::elementary(&f, 2, 0, 2, 1), Err(MatrixError::IndexOutOfRange { index: 2, n: 2 }));
        assert_eq!(Matrix::elementary(&f, 2, 1, 1, 1), Err(MatrixError::DiagonalElementary(1)));
    }

    #[test]
    fn elementary_clears_entry() {
        let q = Rationals;
        let lam = frac(3, 2);
        let a = Matrix::from_fn(&q, 2, |r, c| match (r, c) {
            (1, 0) => lam.clone() * frac(2, 1),
            (1, 1) => frac(2, 1),
            (0, 0) => frac(1, 1),
            _ => frac(0, 1),
        });
        let e = Matrix::elementary(&q, 2, 1, 0, -lam).unwrap();
        assert!(a.mul(&e).is_zero_at(1, 0));
    }

    #[test]
    fn tilde_fills_unsupported_diagonal() {
        let f = PrimeField::gf2();
        let p = Matrix::projection(&f, 3, &[0, 2].into());
        assert!(p.tilde(&[0, 2].into()).is_identity());
        assert_eq!(p.tilde(&[0, 1, 2].into()), p);
    }

    #[test]
    fn singular_block_detected() {
        let f = PrimeField::gf2();
        let z = Matrix::zeros(&f, 2);
        assert_eq!(z.inverse_on_support(&[0].into()), Err(MatrixError::SingularOnSupport));
        assert!(z.inverse_on_support(&BTreeSet::new()).unwrap().is_identity());
    }

    fn gf7() -> PrimeField {
        PrimeField::new(7).unwrap()
    }

    proptest! {
        #[test]
        fn elementary_adds(mu in 0u64..7, nu in 0u64..7, l in 0usize..4, k in 0usize..4) {
            prop_assume!(l != k);
            let f = gf7();
            let a = Matrix::elementary(&f, 4, l, k, mu).unwrap();
            let b = Matrix::elementary(&f, 4, l, k, nu).unwrap();
            prop_assert_eq!(a.mul(&b), Matrix::elementary(&f, 4, l, k, f.add(&mu, &nu)).unwrap());
        }

        #[test]
        fn projections_multiply_to_intersection(s in prop::collection::btree_set(0usize..5, 0..5),
                                                t in prop::collection::btree_set(0usize..5, 0..5)) {
            let f = gf7();
            let i: BTreeSet<_> = s.intersection(&t).copied().collect();
            prop_assert_eq!(
                Matrix::projection(&f, 5, &s).mul(&Matrix::projection(&f, 5, &t)),
                Matrix::projection(&f, 5, &i)
            );
        }

        #[test]
        fn inverse_of_unitriangular(entries in prop::collection::vec(0u64..7, 16), diag in prop::collection::vec(1u64..7, 4)) {
            let f = gf7();
            let m = Matrix::from_fn(&f, 4, |r, c| if r == c { diag[r] } else if r < c { entries[r * 4 + c] } else { 0 });
            let all: BTreeSet<_> = (0..4).collect();
            let inv = m.inverse_on_support(&all).unwrap();
            prop_assert!(m.mul(&inv).is_identity());
            prop_assert!(inv.mul(&m).is_identity());
        }
    }
}
