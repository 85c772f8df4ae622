//! The vine-and-matrix representation of a vineyard module.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::field::{Field, FieldSpec};
use crate::interval::{int, Barcode, VineId};
use crate::matrix::{Matrix, MatrixError};
use crate::morphism::{
    compose, inverse_on_support, is_basis_transformation, truncate, MorphismMatrix, MorphismViolation,
};
use crate::vineyard::{ModelError, Vineyard, Violation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModuleError {
    #[error("vineyard is not compliant: {}", join(.0))]
    NonCompliantVineyard(Vec<Violation>),
    #[error("modules live on different time grids")]
    GridMismatch,
    #[error("modules use different fields ({0} and {1})")]
    FieldMismatch(FieldSpec, FieldSpec),
    #[error("not a basis transformation at grid index {0}")]
    InvalidTransform(usize),
    #[error("{which}[{pair}] entry ({row},{col}) couples the vine set with its complement")]
    NotBlockCompatible { which: &'static str, pair: usize, row: usize, col: usize },
    #[error("bad vine set: {0}")]
    BadVineSet(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Which of the two interleaving families a matrix belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Alpha,
    Beta,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Alpha => "alpha",
            Family::Beta => "beta",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModuleViolation {
    Vineyard(Violation),
    WrongLength { which: Family, expected: usize, found: usize },
    WrongBarcodes { which: Family, pair: usize },
    WrongShift { which: Family, pair: usize },
    Morphism { which: Family, pair: usize, violation: MorphismViolation },
    Interleaving { pair: usize, side: Family },
}

impl fmt::Display for ModuleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModuleViolation::Vineyard(v) => write!(f, "{v}"),
            ModuleViolation::WrongLength { which, expected, found } => {
                write!(f, "{}: expected {expected} matrices, found {found}", which.name())
            }
            ModuleViolation::WrongBarcodes { which, pair } => {
                write!(f, "{}[{pair}]: barcodes do not match the vineyard", which.name())
            }
            ModuleViolation::WrongShift { which, pair } => {
                write!(f, "{}[{pair}]: shift differs from the grid step", which.name())
            }
            ModuleViolation::Morphism { which, pair, violation } => write!(f, "{}[{pair}]: {violation}", which.name()),
            ModuleViolation::Interleaving { pair, side } => match side {
                Family::Alpha => write!(f, "pair {pair}: beta∘alpha is not the 2ε transition at the lower time"),
                Family::Beta => write!(f, "pair {pair}: alpha∘beta is not the 2ε transition at the upper time"),
            },
        }
    }
}

/// Vineyard plus, for each consecutive pair `m`, the matrices of
/// `alpha[m]: t_m → t_{m+1}` and `beta[m]: t_{m+1} → t_m`, both with shift `t_{m+1} - t_m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VineyardModuleRep<F: Field> {
    field: F,
    vineyard: Vineyard,
    alpha: Vec<MorphismMatrix<F>>,
    beta: Vec<MorphismMatrix<F>>,
}

impl<F: Field> VineyardModuleRep<F> {
    /// Assembles a representation without checking it; see [`Self::validate`].
    pub fn from_parts(
        field: F,
        vineyard: Vineyard,
        alpha: Vec<MorphismMatrix<F>>,
        beta: Vec<MorphismMatrix<F>>,
    ) -> Self {
        Self { field, vineyard, alpha, beta }
    }

    /// Builds the representation from bare matrices, attaching barcodes and shifts
    /// from the vineyard and truncating.
    pub fn from_matrices(
        field: F,
        vineyard: Vineyard,
        alpha: Vec<Matrix<F>>,
        beta: Vec<Matrix<F>>,
    ) -> Result<Self, ModuleError> {
        let bcs = barcodes(&vineyard)?;
        let grid = vineyard.grid();
        if alpha.len() != grid.pairs() || beta.len() != grid.pairs() {
            return Err(ModuleError::BadVineSet(format!(
                "need {} matrices per family, got {} and {}",
                grid.pairs(),
                alpha.len(),
                beta.len()
            )));
        }
        let wrap = |ms: Vec<Matrix<F>>, fam: Family| -> Vec<MorphismMatrix<F>> {
            ms.into_iter()
                .enumerate()
                .map(|(m, mat)| {
                    let (s, d) = match fam {
                        Family::Alpha => (&bcs[m], &bcs[m + 1]),
                        Family::Beta => (&bcs[m + 1], &bcs[m]),
                    };
                    truncate(&mat, s, d, &grid.step(m))
                })
                .collect()
        };
        let alpha = wrap(alpha, Family::Alpha);
        let beta = wrap(beta, Family::Beta);
        Ok(Self { field, vineyard, alpha, beta })
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn vineyard(&self) -> &Vineyard {
        &self.vineyard
    }

    pub fn alpha(&self) -> &[MorphismMatrix<F>] {
        &self.alpha
    }

    pub fn beta(&self) -> &[MorphismMatrix<F>] {
        &self.beta
    }

    pub fn family(&self, which: Family) -> &[MorphismMatrix<F>] {
        match which {
            Family::Alpha => &self.alpha,
            Family::Beta => &self.beta,
        }
    }

    pub fn num_vines(&self) -> usize {
        self.vineyard.num_vines()
    }

    pub fn num_pairs(&self) -> usize {
        self.vineyard.grid().pairs()
    }

    /// Barcode at grid index `i`, read off the stored matrices.
    pub fn barcode(&self, i: usize) -> &Barcode {
        if i < self.alpha.len() {
            &self.alpha[i].src
        } else {
            &self.alpha[i - 1].dst
        }
    }

    fn size(&self) -> usize {
        self.vineyard.num_vines()
    }

    /// Module invariants: lengths, barcodes, admissibility and the interleaving
    /// identities on every pair. Vineyard compliance is reported separately by
    /// [`Vineyard::validate`].
    pub fn validate(&self) -> Vec<ModuleViolation> {
        let mut out = Vec::new();
        let pairs = self.num_pairs();
        for (which, fam) in [(Family::Alpha, &self.alpha), (Family::Beta, &self.beta)] {
            if fam.len() != pairs {
                out.push(ModuleViolation::WrongLength { which, expected: pairs, found: fam.len() });
            }
        }
        if !out.is_empty() {
            return out;
        }
        let bcs = match barcodes(&self.vineyard) {
            Ok(b) => b,
            Err(_) => {
                return self.vineyard.validate().into_iter().map(ModuleViolation::Vineyard).collect();
            }
        };
        for m in 0..pairs {
            out.extend(self.pair_report(m, &bcs[m], &bcs[m + 1]));
        }
        out
    }

    /// Invariants of pair `m` alone: barcodes, shift, admissibility, interleaving.
    pub fn validate_pair(&self, m: usize) -> Vec<ModuleViolation> {
        match (self.vineyard.barcode_at(m), self.vineyard.barcode_at(m + 1)) {
            (Ok(lo), Ok(hi)) if m < self.alpha.len() && m < self.beta.len() => self.pair_report(m, &lo, &hi),
            _ => self.validate(),
        }
    }

    fn pair_report(&self, m: usize, lo: &Barcode, hi: &Barcode) -> Vec<ModuleViolation> {
        let mut out = Vec::new();
        let eps = self.vineyard.grid().step(m);
        for (which, mm, src, dst) in [(Family::Alpha, &self.alpha[m], lo, hi), (Family::Beta, &self.beta[m], hi, lo)] {
            if &mm.src != src || &mm.dst != dst {
                out.push(ModuleViolation::WrongBarcodes { which, pair: m });
                continue;
            }
            if mm.eps != eps {
                out.push(ModuleViolation::WrongShift { which, pair: m });
            }
            out.extend(mm.validate().into_iter().map(|violation| ModuleViolation::Morphism {
                which,
                pair: m,
                violation,
            }));
        }
        if !out.is_empty() {
            return out;
        }
        let id = Matrix::identity(&self.field, self.size());
        let two = eps * int(2);
        let ba = compose(&self.beta[m], &self.alpha[m]).expect("barcodes checked");
        if ba != truncate(&id, lo, lo, &two) {
            out.push(ModuleViolation::Interleaving { pair: m, side: Family::Alpha });
        }
        let ab = compose(&self.alpha[m], &self.beta[m]).expect("barcodes checked");
        if ab != truncate(&id, hi, hi, &two) {
            out.push(ModuleViolation::Interleaving { pair: m, side: Family::Beta });
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Rebases grid index `i` by `t`: matrices leaving `t_i` are multiplied by `t`
    /// on the right, matrices arriving at `t_i` by its inverse on the left.
    pub fn change_basis(&self, i: usize, t: &Matrix<F>) -> Result<Self, ModuleError> {
        if i >= self.vineyard.grid().len() {
            return Err(ModelError::IndexOutOfRange(i).into());
        }
        let at = self.barcode(i).clone();
        if !is_basis_transformation(t, &at) {
            return Err(ModuleError::InvalidTransform(i));
        }
        let inv = inverse_on_support(t, &at)?;
        let mut out = self.clone();
        let retrunc = |mm: &MorphismMatrix<F>, mat: Matrix<F>| truncate(&mat, &mm.src, &mm.dst, &mm.eps);
        if i > 0 {
            let m = i - 1;
            out.alpha[m] = retrunc(&self.alpha[m], inv.mul(&self.alpha[m].matrix));
            out.beta[m] = retrunc(&self.beta[m], self.beta[m].matrix.mul(t));
        }
        if i < self.num_pairs() {
            out.alpha[i] = retrunc(&self.alpha[i], self.alpha[i].matrix.mul(t));
            out.beta[i] = retrunc(&self.beta[i], inv.mul(&self.beta[i].matrix));
        }
        Ok(out)
    }

    /// Applies one transform per grid index in a single step:
    /// `alpha[m] ← truncate(T_{m+1}⁻¹ · alpha[m] · T_m)`, `beta[m] ← truncate(T_m⁻¹ · beta[m] · T_{m+1})`.
    pub fn conjugate(&self, transforms: &[Matrix<F>]) -> Result<Self, ModuleError> {
        let n = self.vineyard.grid().len();
        if transforms.len() != n {
            return Err(ModuleError::BadVineSet(format!("need {n} transforms, got {}", transforms.len())));
        }
        let mut invs = Vec::with_capacity(n);
        for (i, t) in transforms.iter().enumerate() {
            let at = self.barcode(i);
            if !is_basis_transformation(t, at) {
                return Err(ModuleError::InvalidTransform(i));
            }
            invs.push(inverse_on_support(t, at)?);
        }
        let mut out = self.clone();
        for m in 0..self.num_pairs() {
            let a = &self.alpha[m];
            out.alpha[m] = truncate(&invs[m + 1].mul(&a.matrix).mul(&transforms[m]), &a.src, &a.dst, &a.eps);
            let b = &self.beta[m];
            out.beta[m] = truncate(&invs[m].mul(&b.matrix).mul(&transforms[m + 1]), &b.src, &b.dst, &b.eps);
        }
        Ok(out)
    }

    /// First matrix entry coupling `set` with its complement.
    fn coupling(&self, set: &BTreeSet<VineId>) -> Option<(Family, usize, usize, usize)> {
        for which in [Family::Alpha, Family::Beta] {
            for (m, mm) in self.family(which).iter().enumerate() {
                if let Some((r, c, _)) = mm.matrix.nonzeros().find(|(r, c, _)| set.contains(r) != set.contains(c)) {
                    return Some((which, m, r, c));
                }
            }
        }
        None
    }

    /// The summand on the vines in `set`, renumbered in increasing order.
    pub fn restrict(&self, set: &BTreeSet<VineId>) -> Result<Self, ModuleError> {
        if let Some(&bad) = set.iter().find(|&&v| v >= self.size()) {
            return Err(ModuleError::BadVineSet(format!("vine {bad} does not exist")));
        }
        if let Some((which, pair, row, col)) = self.coupling(set) {
            return Err(ModuleError::NotBlockCompatible { which: which.name(), pair, row, col });
        }
        let ids: Vec<VineId> = set.iter().copied().collect();
        let sel = |mm: &MorphismMatrix<F>| MorphismMatrix {
            matrix: mm.matrix.select(&ids),
            eps: mm.eps.clone(),
            src: mm.src.select(&ids),
            dst: mm.dst.select(&ids),
        };
        Ok(Self {
            field: self.field.clone(),
            vineyard: self.vineyard.select(&ids),
            alpha: self.alpha.iter().map(sel).collect(),
            beta: self.beta.iter().map(sel).collect(),
        })
    }

    /// The module over grid indices `lo..=hi`, keeping only vines alive there.
    /// Returns the original ids of the kept vines.
    pub fn crop(&self, lo: usize, hi: usize) -> Result<(Self, Vec<VineId>), ModuleError> {
        if lo >= hi {
            return Err(ModelError::GridTooShort(hi.saturating_sub(lo) + 1).into());
        }
        let (vineyard, kept) = self.vineyard.crop(lo, hi)?;
        let sel = |mm: &MorphismMatrix<F>| MorphismMatrix {
            matrix: mm.matrix.select(&kept),
            eps: mm.eps.clone(),
            src: mm.src.select(&kept),
            dst: mm.dst.select(&kept),
        };
        let out = Self {
            field: self.field.clone(),
            vineyard,
            alpha: self.alpha[lo..hi].iter().map(sel).collect(),
            beta: self.beta[lo..hi].iter().map(sel).collect(),
        };
        Ok((out, kept))
    }

    /// Renumbers vines: old id `i` becomes `perm[i]`.
    pub fn relabel(&self, perm: &[VineId]) -> Result<Self, ModuleError> {
        let n = self.size();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(ModuleError::BadVineSet("not a permutation of the vine ids".into()));
        }
        let bc = |b: &Barcode| {
            let mut slots = vec![None; n];
            for (i, s) in b.slots().iter().enumerate() {
                slots[perm[i]] = s.clone();
            }
            Barcode::new(slots)
        };
        let map = |mm: &MorphismMatrix<F>| MorphismMatrix {
            matrix: mm.matrix.permute(perm),
            eps: mm.eps.clone(),
            src: bc(&mm.src),
            dst: bc(&mm.dst),
        };
        Ok(Self {
            field: self.field.clone(),
            vineyard: self.vineyard.relabel(perm),
            alpha: self.alpha.iter().map(map).collect(),
            beta: self.beta.iter().map(map).collect(),
        })
    }
}

fn barcodes(v: &Vineyard) -> Result<Vec<Barcode>, ModelError> {
    (0..v.grid().len()).map(|i| v.barcode_at(i)).collect()
}

/// Direct sum of vine modules over a compliant vineyard.
pub fn trivial_module<F: Field>(field: &F, vineyard: &Vineyard) -> Result<VineyardModuleRep<F>, ModuleError> {
    let report = vineyard.validate();
    if !report.is_empty() {
        return Err(ModuleError::NonCompliantVineyard(report));
    }
    Ok(projection_module(field, vineyard)?)
}

/// Projection matrices on every pair, without the compliance check.
pub(crate) fn projection_module<F: Field>(field: &F, vineyard: &Vineyard) -> Result<VineyardModuleRep<F>, ModelError> {
    let bcs = barcodes(vineyard)?;
    let grid = vineyard.grid();
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for m in 0..grid.pairs() {
        let eps = grid.step(m);
        alpha.push(MorphismMatrix::projection(field, &bcs[m], &bcs[m + 1], &eps));
        beta.push(MorphismMatrix::projection(field, &bcs[m + 1], &bcs[m], &eps));
    }
    Ok(VineyardModuleRep { field: field.clone(), vineyard: vineyard.clone(), alpha, beta })
}

/// Block-diagonal sum; vines of `b` are numbered after those of `a`.
pub fn direct_sum<F: Field>(
    a: &VineyardModuleRep<F>,
    b: &VineyardModuleRep<F>,
) -> Result<VineyardModuleRep<F>, ModuleError> {
    if a.field != b.field {
        return Err(ModuleError::FieldMismatch(a.field.spec(), b.field.spec()));
    }
    if a.vineyard.grid() != b.vineyard.grid() {
        return Err(ModuleError::GridMismatch);
    }
    let sum = |x: &MorphismMatrix<F>, y: &MorphismMatrix<F>| MorphismMatrix {
        matrix: x.matrix.block_diag(&y.matrix),
        eps: x.eps.clone(),
        src: x.src.concat(&y.src),
        dst: x.dst.concat(&y.dst),
    };
    Ok(VineyardModuleRep {
        field: a.field.clone(),
        vineyard: a.vineyard.concat(&b.vineyard),
        alpha: a.alpha.iter().zip(&b.alpha).map(|(x, y)| sum(x, y)).collect(),
        beta: a.beta.iter().zip(&b.beta).map(|(x, y)| sum(x, y)).collect(),
    })
}

/// Structural equality of grids, vineyards, fields and all matrices.
pub fn reps_equal<F: Field>(a: &VineyardModuleRep<F>, b: &VineyardModuleRep<F>) -> bool {
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeField;
    use crate::interval::int;
    use crate::io::generate::{annulus_vineyard, generate_annulus};

    #[test]
    fn trivial_and_twisted_annulus_are_valid() {
        assert!(generate_annulus(false).is_valid());
        assert!(generate_annulus(true).is_valid());
    }

    #[test]
    fn wrong_shift_is_reported() {
        let m = generate_annulus(false);
        let mut alpha = m.alpha().to_vec();
        alpha[0].eps = &alpha[0].eps + int(1);
        let bad = VineyardModuleRep::from_parts(*m.field(), m.vineyard().clone(), alpha, m.beta().to_vec());
        assert!(bad.validate().iter().any(|v| matches!(v, ModuleViolation::WrongShift { .. })));
    }

    #[test]
    fn restrict_refuses_coupled_vines() {
        let m = generate_annulus(true);
        let one: BTreeSet<_> = [0].into();
        assert!(matches!(m.restrict(&one), Err(ModuleError::NotBlockCompatible { .. })));
        let t = generate_annulus(false);
        let r = t.restrict(&one).unwrap();
        assert_eq!(r.num_vines(), 1);
        assert!(r.is_valid());
    }

    #[test]
    fn direct_sum_of_restrictions_recovers_trivial_module() {
        let t = generate_annulus(false);
        let a = t.restrict(&[0].into()).unwrap();
        let b = t.restrict(&[1].into()).unwrap();
        assert!(reps_equal(&direct_sum(&a, &b).unwrap(), &t));
        let swapped = direct_sum(&b, &a).unwrap();
        assert!(reps_equal(&swapped.relabel(&[1, 0]).unwrap(), &t));
    }

    #[test]
    fn change_basis_keeps_validity_and_conjugate_agrees() {
        let f = PrimeField::new(5).unwrap();
        let m = trivial_module(&f, &annulus_vineyard()).unwrap();
        let n = m.vineyard().grid().len();
        let mut ts = vec![Matrix::identity(&f, 2); n];
        for (i, t) in ts.iter_mut().enumerate() {
            for (j, _) in m.barcode(i).present() {
                t.set(j, j, 1 + (i as u64 + j as u64) % 4);
            }
        }
        let once = m.conjugate(&ts).unwrap();
        let mut stepwise = m.clone();
        for (i, t) in ts.iter().enumerate() {
            stepwise = stepwise.change_basis(i, t).unwrap();
        }
        assert!(once.is_valid());
        assert!(reps_equal(&once, &stepwise));
    }

    #[test]
    fn crop_keeps_validity() {
        let m = generate_annulus(true);
        let i = m.vineyard().grid().index_of(&int(3)).unwrap();
        let (c, kept) = m.crop(i - 2, i + 2).unwrap();
        assert_eq!(kept, vec![0, 1]);
        assert_eq!(c.vineyard().grid().len(), 5);
        assert!(c.is_valid());
    }
}
