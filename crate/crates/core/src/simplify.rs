//! Forward and backward simplification, the λ-vector and the triviality decision.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::field::Field;
use crate::interval::{Rat, VineId};
use crate::matrix::{Matrix, MatrixError};
use crate::module::{projection_module, Family, ModuleError, ModuleViolation, VineyardModuleRep};
use crate::morphism::{is_basis_transformation, truncate, MorphismMatrix};
use crate::vineyard::Direction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pass {
    Forward,
    Backward,
}

impl fmt::Display for Pass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pass::Forward => "forward",
            Pass::Backward => "backward",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimplifyError {
    #[error("input module is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidModule(Vec<ModuleViolation>),
    #[error("{pass} pass, pair {pair}: the absorbing matrix is not a basis transformation")]
    NotAbsorbable { pass: Pass, pair: usize },
    #[error("{pass} pass, pair {pair}: zero diagonal entry at vine {vine}")]
    DivisionByZeroDiagonal { pass: Pass, pair: usize, vine: VineId },
    #[error("{pass} pass, pair {pair}: {which} has an unexpected shape after rebasing")]
    ShapeMismatch { pass: Pass, pair: usize, which: &'static str },
    #[error(transparent)]
    Module(#[from] ModuleError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Residual scalar left at an incompatible time, at entry `(l, k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Residual<E> {
    /// Grid index of the incompatible time.
    pub index: usize,
    pub time: Rat,
    pub k: VineId,
    pub l: VineId,
    pub value: E,
}

/// Result of one pass.
#[derive(Clone, Debug)]
pub struct PassOutput<F: Field> {
    pub rep: VineyardModuleRep<F>,
    /// Accumulated basis transformation per grid index.
    pub transforms: Vec<Matrix<F>>,
    pub residuals: Vec<Residual<F::Elem>>,
}

#[derive(Clone, Debug)]
pub struct SimplifiedModule<F: Field> {
    pub rep: VineyardModuleRep<F>,
    /// One entry per backwards-incompatible time, in time order.
    pub lambda: Vec<Residual<F::Elem>>,
    pub forward_residuals: Vec<Residual<F::Elem>>,
    /// `T_i` with `rep = conjugate(original, T)`.
    pub transforms: Vec<Matrix<F>>,
    /// Departures from the expected final shape; empty on every input seen so far.
    pub diagnostics: Vec<String>,
}

fn check_input<F: Field>(m: &VineyardModuleRep<F>) -> Result<(), SimplifyError> {
    let mut report: Vec<ModuleViolation> = m.vineyard().validate().into_iter().map(ModuleViolation::Vineyard).collect();
    if report.is_empty() {
        report = m.validate();
    }
    if report.is_empty() {
        Ok(())
    } else {
        Err(SimplifyError::InvalidModule(report))
    }
}

/// `truncate(E(l→k; μ) · π)` on the barcodes of `mm`, or `truncate(π)` without a residual.
fn expected_shape<F: Field>(
    mm: &MorphismMatrix<F>,
    residual: Option<(VineId, VineId, &F::Elem)>,
) -> Result<Matrix<F>, MatrixError> {
    let f = mm.matrix.field();
    let n = mm.matrix.size();
    let common: BTreeSet<_> = mm.src.support().intersection(&mm.dst.support()).copied().collect();
    let mut p = Matrix::projection(f, n, &common);
    if let Some((k, l, mu)) = residual {
        p = Matrix::elementary(f, n, l, k, mu.clone())?.mul(&p);
    }
    Ok(truncate(&p, &mm.src, &mm.dst, &mm.eps).matrix)
}

/// Rebased module, the absorbed transform and the residual, if any.
type StepOutput<F> = (VineyardModuleRep<F>, Matrix<F>, Option<Residual<<F as Field>::Elem>>);

struct Step<'a, F: Field> {
    pass: Pass,
    pair: usize,
    /// Matrix read to build the transform and the index it rebases.
    read: Family,
    rebase: usize,
    incompat: Option<(VineId, VineId)>,
    incompat_index: usize,
    rep: &'a VineyardModuleRep<F>,
}

impl<F: Field> Step<'_, F> {
    fn run(&self) -> Result<StepOutput<F>, SimplifyError> {
        let rep = self.rep;
        let f = rep.field();
        let n = rep.num_vines();
        let (pass, pair) = (self.pass, self.pair);
        let mm = &rep.family(self.read)[pair];
        let a = &mm.matrix;
        let common: BTreeSet<_> = mm.src.support().intersection(&mm.dst.support()).copied().collect();
        let (t, residual) = match self.incompat {
            Some((k, l)) => {
                let inv = f.inv(a.get(l, l)).ok_or(SimplifyError::DivisionByZeroDiagonal { pass, pair, vine: l })?;
                let lam = f.mul(a.get(l, k), &inv);
                let cleared = a.mul(&Matrix::elementary(f, n, l, k, f.neg(&lam))?);
                let time = rep.vineyard().grid().time(self.incompat_index).clone();
                (cleared.tilde(&common), Some(Residual { index: self.incompat_index, time, k, l, value: lam }))
            }
            None => (a.tilde(&common), None),
        };
        if !is_basis_transformation(&t, rep.barcode(self.rebase)) {
            return Err(SimplifyError::NotAbsorbable { pass, pair });
        }
        let next = rep.change_basis(self.rebase, &t)?;
        // The read family keeps the residual with its sign, the other family the opposite sign.
        let shape = |fam: Family| -> Result<Matrix<F>, MatrixError> {
            let mm = &next.family(fam)[pair];
            match &residual {
                None => expected_shape(mm, None),
                Some(r) if fam == self.read => expected_shape(mm, Some((r.k, r.l, &r.value))),
                Some(r) => expected_shape(mm, Some((r.k, r.l, &f.neg(&r.value)))),
            }
        };
        for fam in [Family::Alpha, Family::Beta] {
            if next.family(fam)[pair].matrix != shape(fam)? {
                return Err(SimplifyError::ShapeMismatch { pass, pair, which: fam.name() });
            }
        }
        Ok((next, t, residual))
    }
}

/// Rebases `t_{m+1}` for `m = 0, 1, …` so that `alpha[m]` becomes `π`, or
/// `E(l→k; λ_f)·π` when `t_m` is forwards-incompatible by `(k, l)`.
pub fn forward_simplify<F: Field>(m: &VineyardModuleRep<F>) -> Result<PassOutput<F>, SimplifyError> {
    check_input(m)?;
    forward_unchecked(m)
}

fn identities<F: Field>(m: &VineyardModuleRep<F>) -> Vec<Matrix<F>> {
    vec![Matrix::identity(m.field(), m.num_vines()); m.vineyard().grid().len()]
}

fn forward_unchecked<F: Field>(m: &VineyardModuleRep<F>) -> Result<PassOutput<F>, SimplifyError> {
    let mut rep = m.clone();
    let mut transforms = identities(m);
    let mut residuals = Vec::new();
    for pair in 0..m.num_pairs() {
        let step = Step {
            pass: Pass::Forward,
            pair,
            read: Family::Alpha,
            rebase: pair + 1,
            incompat: m.vineyard().incompatibility(pair, Direction::Forward),
            incompat_index: pair,
            rep: &rep,
        };
        let (next, t, res) = step.run()?;
        transforms[pair + 1] = transforms[pair + 1].mul(&t);
        residuals.extend(res);
        rep = next;
    }
    Ok(PassOutput { rep, transforms, residuals })
}

/// Mirror of [`forward_simplify`]: rebases `t_m` for `m = M-1, …, 0` using
/// `beta[m]`, leaving `E(l→k; λ)·π` when `t_{m+1}` is backwards-incompatible.
pub fn backward_simplify<F: Field>(m: &VineyardModuleRep<F>) -> Result<PassOutput<F>, SimplifyError> {
    check_input(m)?;
    backward_unchecked(m)
}

fn backward_unchecked<F: Field>(m: &VineyardModuleRep<F>) -> Result<PassOutput<F>, SimplifyError> {
    let mut rep = m.clone();
    let mut transforms = identities(m);
    let mut residuals = Vec::new();
    for pair in (0..m.num_pairs()).rev() {
        let step = Step {
            pass: Pass::Backward,
            pair,
            read: Family::Beta,
            rebase: pair,
            incompat: m.vineyard().incompatibility(pair + 1, Direction::Backward),
            incompat_index: pair + 1,
            rep: &rep,
        };
        let (next, t, res) = step.run()?;
        transforms[pair] = transforms[pair].mul(&t);
        residuals.extend(res);
        rep = next;
    }
    residuals.reverse();
    Ok(PassOutput { rep, transforms, residuals })
}

/// Forward then backward simplification.
pub fn simplify<F: Field>(m: &VineyardModuleRep<F>) -> Result<SimplifiedModule<F>, SimplifyError> {
    check_input(m)?;
    let fwd = forward_unchecked(m)?;
    let bwd = backward_unchecked(&fwd.rep)?;
    let transforms: Vec<_> = fwd.transforms.iter().zip(&bwd.transforms).map(|(a, b)| a.mul(b)).collect();
    let diagnostics = final_shape_diagnostics(&bwd.rep, &bwd.residuals)?;
    Ok(SimplifiedModule {
        rep: bwd.rep,
        lambda: bwd.residuals,
        forward_residuals: fwd.residuals,
        transforms,
        diagnostics,
    })
}

/// After both passes every pair should be `π`, except the pair just below a
/// backwards-incompatible time, which carries `E(l→k; ±λ)·π`.
fn final_shape_diagnostics<F: Field>(
    rep: &VineyardModuleRep<F>,
    lambda: &[Residual<F::Elem>],
) -> Result<Vec<String>, MatrixError> {
    let f = rep.field();
    let by_pair: BTreeMap<usize, &Residual<F::Elem>> = lambda.iter().map(|r| (r.index - 1, r)).collect();
    let mut out = Vec::new();
    for pair in 0..rep.num_pairs() {
        let r = by_pair.get(&pair);
        let b = expected_shape(&rep.beta()[pair], r.map(|r| (r.k, r.l, &r.value)))?;
        let neg = r.map(|r| f.neg(&r.value));
        let a = expected_shape(&rep.alpha()[pair], r.map(|r| (r.k, r.l, neg.as_ref().expect("set with r"))))?;
        if rep.beta()[pair].matrix != b {
            out.push(format!("beta[{pair}] is not in simplified form"));
        }
        if rep.alpha()[pair].matrix != a {
            out.push(format!("alpha[{pair}] is not in simplified form"));
        }
    }
    Ok(out)
}

impl<F: Field> SimplifiedModule<F> {
    pub fn lambda_vector(&self) -> Vec<F::Elem> {
        self.lambda.iter().map(|r| r.value.clone()).collect()
    }

    /// `(true, Some(transforms))` iff every λ entry is zero; the transforms then
    /// conjugate the original module to the trivial one.
    pub fn is_trivial(&self) -> (bool, Option<&[Matrix<F>]>) {
        let f = self.rep.field();
        let trivial = self.lambda.iter().all(|r| f.is_zero(&r.value));
        (trivial, trivial.then_some(self.transforms.as_slice()))
    }
}

pub fn lambda_vector<F: Field>(s: &SimplifiedModule<F>) -> Vec<F::Elem> {
    s.lambda_vector()
}

pub fn is_trivial<F: Field>(s: &SimplifiedModule<F>) -> (bool, Option<&[Matrix<F>]>) {
    s.is_trivial()
}

/// Checks a witness: conjugating `original` by `transforms` gives the trivial module.
pub fn verify_witness<F: Field>(original: &VineyardModuleRep<F>, transforms: &[Matrix<F>]) -> bool {
    let Ok(target) = projection_module(original.field(), original.vineyard()) else {
        return false;
    };
    original.conjugate(transforms).is_ok_and(|c| c == target)
}

/// Finest partition of the vine ids for which every matrix is block diagonal.
pub fn block_partition<F: Field>(m: &VineyardModuleRep<F>) -> Vec<BTreeSet<VineId>> {
    let n = m.num_vines();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for mm in m.alpha().iter().chain(m.beta()) {
        for (r, c, _) in mm.matrix.nonzeros() {
            let (a, b) = (find(&mut parent, r), find(&mut parent, c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut blocks: BTreeMap<usize, BTreeSet<VineId>> = BTreeMap::new();
    for v in 0..n {
        let root = find(&mut parent, v);
        blocks.entry(root).or_default().insert(v);
    }
    blocks.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeField;
    use crate::interval::int;
    use crate::io::generate::{annulus_vineyard, generate_annulus};
    use crate::module::trivial_module;

    #[test]
    fn untwisted_annulus_is_trivial() {
        let m = generate_annulus(false);
        let s = simplify(&m).unwrap();
        let placed: Vec<_> = s.lambda.iter().map(|r| (r.time.clone(), r.k, r.l)).collect();
        assert_eq!(placed, vec![(int(3), 0, 1), (int(7), 1, 0)]);
        assert_eq!(s.lambda_vector(), vec![0, 0]);
        assert!(s.diagnostics.is_empty(), "{:?}", s.diagnostics);
        let (trivial, witness) = s.is_trivial();
        assert!(trivial);
        assert!(verify_witness(&m, witness.unwrap()));
    }

    #[test]
    fn twisted_annulus_keeps_its_residual() {
        let m = generate_annulus(true);
        let fwd = forward_simplify(&m).unwrap();
        assert_eq!(fwd.residuals.len(), 1);
        assert_eq!(fwd.residuals[0].time, int(3));
        assert_eq!(fwd.residuals[0].value, 1);
        let s = simplify(&m).unwrap();
        assert!(s.diagnostics.is_empty(), "{:?}", s.diagnostics);
        assert_eq!(s.lambda_vector(), vec![1, 0]);
        assert_eq!(s.lambda[0].time, int(3));
        assert!(!s.is_trivial().0);
        assert!(s.is_trivial().1.is_none());
        // The transforms still conjugate to the simplified form.
        assert!(m.conjugate(&s.transforms).unwrap() == s.rep);
    }

    #[test]
    fn simplify_is_idempotent_on_output() {
        let m = generate_annulus(true);
        let s = simplify(&m).unwrap();
        let again = simplify(&s.rep).unwrap();
        assert!(again.rep == s.rep);
        assert_eq!(again.lambda_vector(), s.lambda_vector());
    }

    #[test]
    fn trivial_module_is_one_block_per_vine() {
        let f = PrimeField::gf2();
        let m = trivial_module(&f, &annulus_vineyard()).unwrap();
        assert_eq!(block_partition(&m).len(), 2);
        assert_eq!(block_partition(&generate_annulus(true)).len(), 1);
    }

    #[test]
    fn rejects_invalid_module() {
        let m = generate_annulus(false);
        let mut alpha = m.alpha().to_vec();
        let n = m.num_vines();
        alpha[0].matrix = Matrix::zeros(m.field(), n);
        let bad = VineyardModuleRep::from_parts(*m.field(), m.vineyard().clone(), alpha, m.beta().to_vec());
        assert!(matches!(simplify(&bad), Err(SimplifyError::InvalidModule(_))));
    }
}
