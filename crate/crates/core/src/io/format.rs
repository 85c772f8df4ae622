//! JSON module files.
//!
//! ```text
//! {
//! "field":{"type":"prime","p":2},
//! "times":["0","1/2",...],
//! "vines":[
//! {"id":0,"support":[0,12],"birth":["14",...],"death":["15",...]},
//! ...
//! ],
//! "alpha":[
//! [[0,0,"1"],[1,1,"1"]],
//! ...
//! ],
//! "beta":[...]
//! }
//! ```
//!
//! `support` holds inclusive grid indices. Scalars are strings `"n"` or `"p/q"`;
//! bare JSON integers are accepted on input. Sparse entries are `[row, col, value]`
//! with rows indexing targets. The canonical form (what [`serialize`] writes) has
//! one line per vine and per matrix, reduced fractions, and nonzero entries sorted
//! by row then column.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{parse_rational, Field, FieldError, FieldSpec, PrimeField, Rationals};
use crate::interval::Rat;
use crate::matrix::Matrix;
use crate::module::{Family, ModuleViolation, VineyardModuleRep};
use crate::morphism::MorphismMatrix;
use crate::vineyard::{ModelError, TimeGrid, Vine, Vineyard, Violation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{key}: {message}")]
    Key { key: String, message: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FileError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid module: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Validation(Vec<ModuleViolation>),
}

#[derive(Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum RawField {
    Rational,
    Prime { p: u64 },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawScalar {
    Int(i64),
    Text(String),
}

impl RawScalar {
    fn text(&self) -> String {
        match self {
            RawScalar::Int(n) => n.to_string(),
            RawScalar::Text(s) => s.clone(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVine {
    id: usize,
    support: [usize; 2],
    birth: Vec<RawScalar>,
    death: Vec<RawScalar>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    field: RawField,
    times: Vec<RawScalar>,
    vines: Vec<RawVine>,
    alpha: Vec<Vec<(usize, usize, RawScalar)>>,
    beta: Vec<Vec<(usize, usize, RawScalar)>>,
}

/// A parsed module over whichever field the file names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnyModule {
    Rational(VineyardModuleRep<Rationals>),
    Prime(VineyardModuleRep<PrimeField>),
}

/// Runs a generic expression on the module inside an [`AnyModule`].
#[macro_export]
macro_rules! with_module {
    ($any:expr, $m:ident => $body:expr) => {
        match $any {
            $crate::io::format::AnyModule::Rational($m) => $body,
            $crate::io::format::AnyModule::Prime($m) => $body,
        }
    };
}

impl AnyModule {
    pub fn field_spec(&self) -> FieldSpec {
        with_module!(self, m => m.field().spec())
    }

    pub fn vineyard(&self) -> &Vineyard {
        with_module!(self, m => m.vineyard())
    }

    /// Vineyard compliance followed by module invariants.
    pub fn validate(&self) -> Vec<ModuleViolation> {
        with_module!(self, m => full_report(m))
    }

    pub fn serialize(&self) -> String {
        with_module!(self, m => serialize(m))
    }
}

impl From<VineyardModuleRep<Rationals>> for AnyModule {
    fn from(m: VineyardModuleRep<Rationals>) -> Self {
        AnyModule::Rational(m)
    }
}

impl From<VineyardModuleRep<PrimeField>> for AnyModule {
    fn from(m: VineyardModuleRep<PrimeField>) -> Self {
        AnyModule::Prime(m)
    }
}

pub fn full_report<F: Field>(m: &VineyardModuleRep<F>) -> Vec<ModuleViolation> {
    let vineyard: Vec<Violation> = m.vineyard().validate();
    if !vineyard.is_empty() {
        return vineyard.into_iter().map(ModuleViolation::Vineyard).collect();
    }
    m.validate()
}

fn key_err(key: impl Into<String>, message: impl ToString) -> ParseError {
    ParseError::Key { key: key.into(), message: message.to_string() }
}

fn rat(key: impl Fn() -> String, s: &RawScalar) -> Result<Rat, ParseError> {
    parse_rational(&s.text()).map_err(|e| key_err(key(), e))
}

fn build_vineyard(raw: &RawFile) -> Result<Vineyard, ParseError> {
    let times =
        raw.times.iter().enumerate().map(|(i, s)| rat(|| format!("times[{i}]"), s)).collect::<Result<Vec<_>, _>>()?;
    let grid = TimeGrid::new(times).map_err(|e| key_err("times", e))?;
    let mut vines = Vec::with_capacity(raw.vines.len());
    for (pos, v) in raw.vines.iter().enumerate() {
        let key = |part: &str| format!("vines[{pos}].{part}");
        if v.id != pos {
            return Err(key_err(key("id"), format!("ids must be 0, 1, … in order; found {} at position {pos}", v.id)));
        }
        let [lo, hi] = v.support;
        if lo > hi || hi >= grid.len() {
            return Err(key_err(
                key("support"),
                format!("[{lo}, {hi}] is not a range of grid indices 0..{}", grid.len()),
            ));
        }
        let len = hi - lo + 1;
        for (part, list) in [("birth", &v.birth), ("death", &v.death)] {
            if list.len() != len {
                return Err(key_err(
                    key(part),
                    format!("expected {len} values for support [{lo}, {hi}], found {}", list.len()),
                ));
            }
        }
        let parse_list = |part: &str, list: &[RawScalar]| {
            list.iter()
                .enumerate()
                .map(|(j, s)| rat(|| format!("{}[{j}]", key(part)), s))
                .collect::<Result<Vec<_>, _>>()
        };
        let births = parse_list("birth", &v.birth)?;
        let deaths = parse_list("death", &v.death)?;
        vines.push(Vine::new(pos, lo, births, deaths).map_err(|e| key_err(format!("vines[{pos}]"), e))?);
    }
    Vineyard::new(grid, vines).map_err(|e: ModelError| key_err("vines", e))
}

fn build_matrices<F: Field>(
    field: &F,
    v: &Vineyard,
    which: Family,
    raw: &[Vec<(usize, usize, RawScalar)>],
) -> Result<Vec<MorphismMatrix<F>>, ParseError> {
    let grid = v.grid();
    if raw.len() != grid.pairs() {
        return Err(key_err(which.name(), format!("expected {} matrices, found {}", grid.pairs(), raw.len())));
    }
    let n = v.num_vines();
    let mut out = Vec::with_capacity(raw.len());
    for (m, entries) in raw.iter().enumerate() {
        let mut mat = Matrix::zeros(field, n);
        let mut seen = std::collections::BTreeSet::new();
        for (e, (row, col, value)) in entries.iter().enumerate() {
            let key = || format!("{}[{m}][{e}]", which.name());
            if *row >= n || *col >= n {
                return Err(key_err(key(), format!("entry ({row}, {col}) outside a {n}×{n} matrix")));
            }
            if !seen.insert((*row, *col)) {
                return Err(key_err(key(), format!("entry ({row}, {col}) given twice")));
            }
            let x = field.parse_elem(&value.text()).map_err(|err| key_err(key(), err))?;
            mat.set(*row, *col, x);
        }
        let lower = v.barcode_at(m).map_err(|e| key_err(which.name(), e))?;
        let upper = v.barcode_at(m + 1).map_err(|e| key_err(which.name(), e))?;
        let (src, dst) = match which {
            Family::Alpha => (lower, upper),
            Family::Beta => (upper, lower),
        };
        out.push(MorphismMatrix { matrix: mat, eps: grid.step(m), src, dst });
    }
    Ok(out)
}

fn build<F: Field>(field: F, v: Vineyard, raw: &RawFile) -> Result<VineyardModuleRep<F>, ParseError> {
    let alpha = build_matrices(&field, &v, Family::Alpha, &raw.alpha)?;
    let beta = build_matrices(&field, &v, Family::Beta, &raw.beta)?;
    Ok(VineyardModuleRep::from_parts(field, v, alpha, beta))
}

/// Parses a document without checking compliance or module invariants.
/// Matrix entries are kept as written, not truncated.
pub fn parse_unchecked(text: &str) -> Result<AnyModule, ParseError> {
    let raw: RawFile = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let v = build_vineyard(&raw)?;
    match raw.field {
        RawField::Rational => Ok(AnyModule::Rational(build(Rationals, v, &raw)?)),
        RawField::Prime { p } => {
            let f = PrimeField::new(p).map_err(|e: FieldError| key_err("field.p", e))?;
            Ok(AnyModule::Prime(build(f, v, &raw)?))
        }
    }
}

/// Parses and validates a document.
pub fn parse(text: &str) -> Result<AnyModule, FileError> {
    let m = parse_unchecked(text)?;
    let report = m.validate();
    if report.is_empty() {
        Ok(m)
    } else {
        Err(FileError::Validation(report))
    }
}

fn json<T: Serialize + ?Sized>(x: &T) -> String {
    serde_json::to_string(x).expect("plain data serializes")
}

fn rat_list(xs: &[Rat]) -> String {
    json(&xs.iter().map(ToString::to_string).collect::<Vec<_>>())
}

fn entries<F: Field>(m: &Matrix<F>) -> String {
    let mut es: Vec<_> = m.nonzeros().map(|(r, c, x)| (r, c, m.field().format_elem(x))).collect();
    es.sort();
    json(&es)
}

/// Canonical text form.
pub fn serialize<F: Field>(m: &VineyardModuleRep<F>) -> String {
    let field = match m.field().spec() {
        FieldSpec::Rational => RawField::Rational,
        FieldSpec::Prime(p) => RawField::Prime { p },
    };
    let v = m.vineyard();
    let mut out = String::from("{\n");
    let _ = writeln!(out, "\"field\":{},", json(&field));
    let _ = writeln!(out, "\"times\":{},", rat_list(v.grid().times()));
    out.push_str("\"vines\":[\n");
    let vines: Vec<String> = v
        .vines()
        .iter()
        .map(|vine| {
            format!(
                "{{\"id\":{},\"support\":[{},{}],\"birth\":{},\"death\":{}}}",
                vine.id(),
                vine.lo(),
                vine.hi(),
                rat_list(vine.births()),
                rat_list(vine.deaths())
            )
        })
        .collect();
    push_lines(&mut out, &vines);
    out.push_str("],\n");
    for (which, last) in [(Family::Alpha, false), (Family::Beta, true)] {
        let _ = writeln!(out, "\"{}\":[", which.name());
        let rows: Vec<String> = m.family(which).iter().map(|mm| entries(&mm.matrix)).collect();
        push_lines(&mut out, &rows);
        out.push_str(if last { "]\n" } else { "],\n" });
    }
    out.push_str("}\n");
    out
}

fn push_lines(out: &mut String, lines: &[String]) {
    for (i, l) in lines.iter().enumerate() {
        out.push_str(l);
        out.push_str(if i + 1 < lines.len() { ",\n" } else { "\n" });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::generate::generate_annulus;

    #[test]
    fn annulus_round_trips() {
        for twisted in [false, true] {
            let m = generate_annulus(twisted);
            let text = serialize(&m);
            let back = parse(&text).unwrap();
            assert_eq!(back, AnyModule::Prime(m));
            assert_eq!(back.serialize(), text);
        }
    }

    #[test]
    fn canonicalizes_integers_and_fractions() {
        let text = r#"{"field":{"type":"rational"},"times":[0,"2/4"],
            "vines":[{"id":0,"support":[0,1],"birth":[0,"0"],"death":["6/2",3]}],
            "alpha":[[[0,0,"2/2"]]],"beta":[[[0,0,1]]]}"#;
        let m = parse(text).unwrap();
        let canon = m.serialize();
        assert!(canon.contains("\"times\":[\"0\",\"1/2\"]"));
        assert!(canon.contains("\"death\":[\"3\",\"3\"]"));
        assert_eq!(parse(&canon).unwrap().serialize(), canon);
    }

    #[test]
    fn rejects_unknown_keys_and_composite_p() {
        let m = serialize(&generate_annulus(false));
        let extra = m.replacen("\"times\"", "\"colour\":1,\n\"times\"", 1);
        assert!(matches!(parse_unchecked(&extra), Err(ParseError::Syntax { .. })));
        let p4 = m.replacen("\"p\":2", "\"p\":4", 1);
        assert!(matches!(parse_unchecked(&p4), Err(ParseError::Key { key, .. }) if key == "field.p"));
    }

    #[test]
    fn inadmissible_entry_fails_validation() {
        let m = generate_annulus(false);
        let text = serialize(&m);
        // At the start both vines are alive and unrelated in the staircase order.
        let bad = text.replacen(
            "\"alpha\":[\n[[0,0,\"1\"],[1,1,\"1\"]]",
            "\"alpha\":[\n[[0,0,\"1\"],[0,1,\"1\"],[1,1,\"1\"]]",
            1,
        );
        assert_ne!(bad, text);
        assert!(parse_unchecked(&bad).is_ok());
        assert!(matches!(parse(&bad), Err(FileError::Validation(_))));
    }

    #[test]
    fn reports_bad_lengths_with_keys() {
        let text = r#"{"field":{"type":"prime","p":3},"times":[0,1],
            "vines":[{"id":0,"support":[0,1],"birth":[0],"death":[3,3]}],
            "alpha":[[]],"beta":[[]]}"#;
        let err = parse_unchecked(text).unwrap_err();
        assert!(matches!(err, ParseError::Key { ref key, .. } if key == "vines[0].birth"), "{err}");
    }
}
