//! Exhaustive triviality test for small modules over prime fields.
//!
//! Searches depth-first over one basis transformation per grid index, pruning
//! as soon as a consecutive pair fails to conjugate to its trivial matrices.
//! Only staircase positions where the two intervals overlap are enumerated;
//! entries between disjoint intervals are cut by truncation and cannot matter.

use thiserror::Error;

use crate::field::{Field, FieldSpec};
use crate::matrix::Matrix;
use crate::module::{projection_module, ModuleViolation, VineyardModuleRep};
use crate::morphism::{inverse_on_support, transform_positions, truncate, MorphismMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_vines: usize,
    pub max_grid: usize,
    /// Cap on candidate transforms at any one grid index.
    pub max_candidates: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self { max_vines: 3, max_grid: 10, max_candidates: 1 << 12 }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("the oracle needs a prime field, got {0}")]
    NotPrimeField(FieldSpec),
    #[error("too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("input module is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidModule(Vec<ModuleViolation>),
}

/// Every basis transformation at a barcode with entries only at overlapping staircase positions.
fn candidates<F: Field>(
    field: &F,
    n: usize,
    at: &crate::interval::Barcode,
    cap: usize,
) -> Result<Vec<Matrix<F>>, OracleError> {
    let elems = field.elements().ok_or(OracleError::NotPrimeField(field.spec()))?;
    let units: Vec<_> = elems.iter().filter(|e| !field.is_zero(e)).cloned().collect();
    let diag: Vec<usize> = at.support().into_iter().collect();
    let off = transform_positions(at);
    let count = (units.len() as f64).powi(diag.len() as i32) * (elems.len() as f64).powi(off.len() as i32);
    if count > cap as f64 {
        return Err(OracleError::TooLarge(format!("{count} candidate transforms at one grid index (cap {cap})")));
    }
    let mut out = vec![Matrix::identity(field, n)];
    for &i in &diag {
        out = out
            .into_iter()
            .flat_map(|m| {
                units.iter().map(move |u| {
                    let mut m = m.clone();
                    m.set(i, i, u.clone());
                    m
                })
            })
            .collect();
    }
    for &(j, i) in &off {
        out = out
            .into_iter()
            .flat_map(|m| {
                elems.iter().map(move |e| {
                    let mut m = m.clone();
                    m.set(j, i, e.clone());
                    m
                })
            })
            .collect();
    }
    Ok(out)
}

struct Search<'a, F: Field> {
    rep: &'a VineyardModuleRep<F>,
    target: VineyardModuleRep<F>,
    /// Per grid index: candidates and their inverses.
    cands: Vec<Vec<(Matrix<F>, Matrix<F>)>>,
}

impl<F: Field> Search<'_, F> {
    fn pair_ok(&self, m: usize, lo: &(Matrix<F>, Matrix<F>), hi: &(Matrix<F>, Matrix<F>)) -> bool {
        let conj = |mm: &MorphismMatrix<F>, left: &Matrix<F>, right: &Matrix<F>| {
            truncate(&left.mul(&mm.matrix).mul(right), &mm.src, &mm.dst, &mm.eps)
        };
        conj(&self.rep.alpha()[m], &hi.1, &lo.0) == self.target.alpha()[m]
            && conj(&self.rep.beta()[m], &lo.1, &hi.0) == self.target.beta()[m]
    }

    /// Future constraints only see the choice at `i - 1`, so failed
    /// `(i, choice)` states are remembered in `dead`.
    fn dfs(&self, i: usize, chosen: &mut Vec<usize>, dead: &mut [Vec<bool>]) -> bool {
        if i == self.cands.len() {
            return true;
        }
        for c in 0..self.cands[i].len() {
            if dead[i][c] {
                continue;
            }
            if i > 0 && !self.pair_ok(i - 1, &self.cands[i - 1][chosen[i - 1]], &self.cands[i][c]) {
                continue;
            }
            chosen.push(c);
            if self.dfs(i + 1, chosen, dead) {
                return true;
            }
            chosen.pop();
            dead[i][c] = true;
        }
        false
    }
}

/// [`brute_force_witness`] with the default limits, returning only the verdict.
pub fn brute_force_trivial<F: Field>(m: &VineyardModuleRep<F>) -> Result<bool, OracleError> {
    brute_force_witness(m, &OracleLimits::default()).map(|w| w.is_some())
}

/// A family of basis transformations conjugating `m` to the trivial module, if one exists.
pub fn brute_force_witness<F: Field>(
    m: &VineyardModuleRep<F>,
    limits: &OracleLimits,
) -> Result<Option<Vec<Matrix<F>>>, OracleError> {
    let field = m.field();
    if field.elements().is_none() {
        return Err(OracleError::NotPrimeField(field.spec()));
    }
    let n = m.num_vines();
    let len = m.vineyard().grid().len();
    if n > limits.max_vines {
        return Err(OracleError::TooLarge(format!("{n} vines (limit {})", limits.max_vines)));
    }
    if len > limits.max_grid {
        return Err(OracleError::TooLarge(format!("{len} grid points (limit {})", limits.max_grid)));
    }
    let report = m.validate();
    if !report.is_empty() {
        return Err(OracleError::InvalidModule(report));
    }
    let target = projection_module(field, m.vineyard()).expect("barcodes checked by validate");
    let mut cands = Vec::with_capacity(len);
    for i in 0..len {
        let at = m.barcode(i);
        let list = candidates(field, n, at, limits.max_candidates)?
            .into_iter()
            .map(|t| {
                let inv = inverse_on_support(&t, at).expect("triangular with unit diagonal");
                (t, inv)
            })
            .collect();
        cands.push(list);
    }
    let search = Search { rep: m, target, cands };
    let mut chosen = Vec::with_capacity(len);
    let mut dead: Vec<Vec<bool>> = search.cands.iter().map(|c| vec![false; c.len()]).collect();
    Ok(search
        .dfs(0, &mut chosen, &mut dead)
        .then(|| chosen.iter().enumerate().map(|(i, &c)| search.cands[i][c].0.clone()).collect()))
}
