//! Matrices of ε-morphisms between barcodes and basis transformations.

use std::fmt;

use num_traits::Signed;

use crate::field::Field;
use crate::interval::{staircase_leq, Barcode, Interval, Rat, VineId};
use crate::matrix::{Matrix, MatrixError};

/// Matrix of an ε-morphism from `src` to `dst` in extended bases.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MorphismMatrix<F: Field> {
    pub matrix: Matrix<F>,
    pub eps: Rat,
    pub src: Barcode,
    pub dst: Barcode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MorphismViolation {
    SizeMismatch { matrix: usize, src: usize, dst: usize },
    NegativeShift,
    UnsupportedSource { row: usize, col: usize },
    UnsupportedTarget { row: usize, col: usize },
    BirthWindow { row: usize, col: usize },
    DeathBound { row: usize, col: usize },
}

impl fmt::Display for MorphismViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MorphismViolation::SizeMismatch { matrix, src, dst } => {
                write!(f, "matrix size {matrix} but barcodes have {src} and {dst} slots")
            }
            MorphismViolation::NegativeShift => write!(f, "negative shift"),
            MorphismViolation::UnsupportedSource { row, col } => {
                write!(f, "entry ({row},{col}) nonzero but source vine {col} absent")
            }
            MorphismViolation::UnsupportedTarget { row, col } => {
                write!(f, "entry ({row},{col}) nonzero but target vine {row} absent")
            }
            MorphismViolation::BirthWindow { row, col } => {
                write!(f, "entry ({row},{col}) violates birth(dst) <= birth(src)+eps < death(dst)")
            }
            MorphismViolation::DeathBound { row, col } => {
                write!(f, "entry ({row},{col}) violates death(dst) <= death(src)+eps")
            }
        }
    }
}

/// `b(y) <= b(x)+ε < d(y)`.
fn in_birth_window(x: &Interval, y: &Interval, eps: &Rat) -> bool {
    let shifted = x.birth() + eps;
    y.birth() <= &shifted && &shifted < y.death()
}

/// Zeroes entry `(j, i)` unless both vines are present and the birth window holds.
pub fn truncate<F: Field>(m: &Matrix<F>, src: &Barcode, dst: &Barcode, eps: &Rat) -> MorphismMatrix<F> {
    let mut out = m.clone();
    let zero = m.field().zero();
    for (j, i, _) in m.nonzeros() {
        let keep = match (src.get(i), dst.get(j)) {
            (Some(x), Some(y)) => in_birth_window(x, y, eps),
            _ => false,
        };
        if !keep {
            out.set(j, i, zero.clone());
        }
    }
    MorphismMatrix { matrix: out, eps: eps.clone(), src: src.clone(), dst: dst.clone() }
}

impl<F: Field> MorphismMatrix<F> {
    /// `truncate(π_{S ∩ S'})`, the matrix of the transition-like map between barcodes.
    pub fn projection(field: &F, src: &Barcode, dst: &Barcode, eps: &Rat) -> Self {
        let common = src.support().intersection(&dst.support()).copied().collect();
        truncate(&Matrix::projection(field, src.len(), &common), src, dst, eps)
    }

    pub fn validate(&self) -> Vec<MorphismViolation> {
        let n = self.matrix.size();
        if self.src.len() != n || self.dst.len() != n {
            return vec![MorphismViolation::SizeMismatch { matrix: n, src: self.src.len(), dst: self.dst.len() }];
        }
        let mut out = Vec::new();
        if self.eps.is_negative() {
            out.push(MorphismViolation::NegativeShift);
        }
        for (row, col, _) in self.matrix.nonzeros() {
            let (Some(x), Some(y)) = (self.src.get(col), self.dst.get(row)) else {
                out.push(if self.src.get(col).is_none() {
                    MorphismViolation::UnsupportedSource { row, col }
                } else {
                    MorphismViolation::UnsupportedTarget { row, col }
                });
                continue;
            };
            if !in_birth_window(x, y, &self.eps) {
                out.push(MorphismViolation::BirthWindow { row, col });
            }
            if y.death() > &(x.death() + &self.eps) {
                out.push(MorphismViolation::DeathBound { row, col });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Equal to its own truncation.
    pub fn is_truncated(&self) -> bool {
        truncate(&self.matrix, &self.src, &self.dst, &self.eps) == *self
    }
}

/// Matrix of `m2 ∘ m1`: the truncated product.
pub fn compose<F: Field>(m2: &MorphismMatrix<F>, m1: &MorphismMatrix<F>) -> Result<MorphismMatrix<F>, MatrixError> {
    if m1.dst != m2.src {
        return Err(MatrixError::ShapeMismatch("target of the first map differs from source of the second".into()));
    }
    if m1.matrix.size() != m2.matrix.size() {
        return Err(MatrixError::ShapeMismatch("matrix sizes differ".into()));
    }
    let eps = &m1.eps + &m2.eps;
    Ok(truncate(&m2.matrix.mul(&m1.matrix), &m1.src, &m2.dst, &eps))
}

/// Whether `t` is a basis transformation at barcode `at`: nonzero supported
/// diagonal, identity on unsupported slots, and off-diagonal entries only at
/// staircase-ordered positions `(j, i)` with `interval_j ⪯ interval_i`.
/// With repeated intervals the order is not antisymmetric, so invertibility is
/// checked explicitly.
pub fn is_basis_transformation<F: Field>(t: &Matrix<F>, at: &Barcode) -> bool {
    let n = t.size();
    if at.len() != n {
        return false;
    }
    let f = t.field();
    for i in 0..n {
        let d = t.get(i, i);
        if at.is_supported(i) {
            if f.is_zero(d) {
                return false;
            }
        } else if !f.is_one(d) {
            return false;
        }
    }
    let ordered = t.nonzeros().filter(|(j, i, _)| j != i).all(|(j, i, _)| match (at.get(j), at.get(i)) {
        (Some(a), Some(b)) => staircase_leq(a, b),
        _ => false,
    });
    ordered && (at.duplicate().is_none() || t.inverse_on_support(&at.support()).is_ok())
}

/// Inverse of a basis transformation on the supported block.
pub fn inverse_on_support<F: Field>(t: &Matrix<F>, at: &Barcode) -> Result<Matrix<F>, MatrixError> {
    t.inverse_on_support(&at.support())
}

/// Off-diagonal positions `(j, i)` a basis transformation may occupy and that can
/// affect a morphism: `interval_j ⪯ interval_i` and the two overlap.
pub fn transform_positions(at: &Barcode) -> Vec<(VineId, VineId)> {
    let mut out = Vec::new();
    for (j, a) in at.present() {
        for (i, b) in at.present() {
            if i != j && staircase_leq(a, b) && a.death() > b.birth() {
                out.push((j, i));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeField;
    use crate::interval::{frac, int};

    fn bc(ivs: &[(Rat, Rat)]) -> Barcode {
        Barcode::new(ivs.iter().map(|(b, d)| Interval::new(b.clone(), d.clone())).collect())
    }

    fn ints(ivs: &[(i64, i64)]) -> Barcode {
        bc(&ivs.iter().map(|&(b, d)| (int(b), int(d))).collect::<Vec<_>>())
    }

    #[test]
    fn truncate_birth_window() {
        let f = PrimeField::gf2();
        let src = ints(&[(0, 10)]);
        let dst = ints(&[(1, 9)]);
        let one = Matrix::identity(&f, 1);
        assert!(truncate(&one, &src, &dst, &int(2)).matrix.is_identity());
        assert!(truncate(&one, &src, &dst, &frac(1, 2)).matrix.is_zero_at(0, 0));
    }

    #[test]
    fn truncate_is_idempotent() {
        let f = PrimeField::gf2();
        let src = ints(&[(0, 10), (3, 5)]);
        let dst = ints(&[(1, 9), (2, 6)]);
        let m = Matrix::from_fn(&f, 2, |_, _| 1);
        let t = truncate(&m, &src, &dst, &int(1));
        assert_eq!(truncate(&t.matrix, &src, &dst, &int(1)), t);
    }

    /// Annulus barcodes at t=3 and t=a (a < 3); vine 0 is the nested one there.
    fn annulus_at_3() -> Barcode {
        ints(&[(11, 18), (3, 18)])
    }

    fn annulus_before_3(a: &Rat) -> Barcode {
        bc(&[(int(14) - a, int(15) + a), (a.clone(), int(21) - a)])
    }

    #[test]
    fn annulus_twist_admissibility_below_3() {
        let f = PrimeField::gf2();
        let a = frac(11, 4);
        let eps = int(3) - &a;
        // β from t=3 down to t=a with the twist at row 1, column 0.
        let twist = Matrix::elementary(&f, 2, 1, 0, 1).unwrap();
        let beta = truncate(&twist, &annulus_at_3(), &annulus_before_3(&a), &eps);
        assert_eq!(beta.matrix, twist);
        assert!(beta.is_valid());
        // Equality case of the death bound: death(dst_1) = 21 - a = death(src_0) + eps.
        assert_eq!(int(21) - &a, int(18) + &eps);
        // The transposed position is cut by truncation.
        let other = Matrix::elementary(&f, 2, 0, 1, 1).unwrap();
        assert!(truncate(&other, &annulus_at_3(), &annulus_before_3(&a), &eps).matrix.is_identity());
        let forced = MorphismMatrix { matrix: other, eps, src: annulus_at_3(), dst: annulus_before_3(&a) };
        assert!(forced.validate().contains(&MorphismViolation::BirthWindow { row: 0, col: 1 }));
    }

    #[test]
    fn annulus_admissibility_below_7() {
        let f = PrimeField::gf2();
        // At t=7: vine 0 = [7,14), vine 1 = [7,22); at t=a<7 interpolate the
        // lines b0 = 14 - t, d0 = 21 - t, b1 = t, d1 = 15 + t.
        let a = frac(27, 4);
        let eps = int(7) - &a;
        let at7 = ints(&[(7, 14), (7, 22)]);
        let before = bc(&[(int(14) - &a, int(21) - &a), (a.clone(), int(15) + &a)]);
        let e01 = MorphismMatrix {
            matrix: Matrix::elementary(&f, 2, 0, 1, 1).unwrap(),
            eps: eps.clone(),
            src: at7.clone(),
            dst: before.clone(),
        };
        assert!(e01.is_valid());
        let e10 = MorphismMatrix { matrix: Matrix::elementary(&f, 2, 1, 0, 1).unwrap(), eps, src: at7, dst: before };
        assert!(!e10.is_valid());
    }

    #[test]
    fn basis_transformation_examples() {
        let f = PrimeField::gf2();
        let twist = Matrix::elementary(&f, 2, 1, 0, 1).unwrap();
        assert!(is_basis_transformation(&twist, &annulus_at_3()));
        assert!(!is_basis_transformation(&twist, &annulus_before_3(&frac(5, 2))));
        assert!(is_basis_transformation(&Matrix::identity(&f, 2), &annulus_at_3()));
        let partial = Barcode::new(vec![Interval::new(int(0), int(5)), None]);
        assert!(!is_basis_transformation(&Matrix::projection(&f, 2, &[0].into()), &partial));
        assert!(is_basis_transformation(&Matrix::identity(&f, 2), &partial));
    }

    #[test]
    fn compose_twist_pair_is_identity() {
        let f = PrimeField::gf2();
        let a = frac(11, 4);
        let eps = int(3) - &a;
        let twist = Matrix::elementary(&f, 2, 1, 0, 1).unwrap();
        let alpha = truncate(&twist, &annulus_before_3(&a), &annulus_at_3(), &eps);
        let beta = truncate(&twist, &annulus_at_3(), &annulus_before_3(&a), &eps);
        let ba = compose(&beta, &alpha).unwrap();
        let expect = truncate(&Matrix::identity(&f, 2), &annulus_before_3(&a), &annulus_before_3(&a), &(&eps * int(2)));
        assert_eq!(ba, expect);
        let ab = compose(&alpha, &beta).unwrap();
        let expect = truncate(&Matrix::identity(&f, 2), &annulus_at_3(), &annulus_at_3(), &(&eps * int(2)));
        assert_eq!(ab, expect);
    }

    #[test]
    fn compose_checks_shapes() {
        let f = PrimeField::gf2();
        let x = ints(&[(0, 10)]);
        let y = ints(&[(1, 11)]);
        let m = MorphismMatrix::projection(&f, &x, &y, &int(1));
        assert!(compose(&m, &m).is_err());
    }
}
