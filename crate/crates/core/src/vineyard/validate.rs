//! Vineyard invariants and the grid-spacing rule.
//!
//! Spacing rule for a consecutive pair `(s, t)` with `ε = t - s`:
//! at most one endpoint carries an event; a vine supported at only one endpoint
//! has length `< 2ε` there; and `4ε` is strictly below the height gap. When one
//! endpoint is a coincidence the gap is taken at that endpoint only, otherwise
//! at both. Gaps ignore the own length of a vine absent at the other endpoint.

use std::fmt;

use num_traits::Signed;

use super::{min_distinct_gap, ModelError, Vineyard};
use crate::interval::{int, Interval, Rat, VineId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NonPositiveInterval { vine: VineId, index: usize },
    DuplicateInterval { index: usize, a: VineId, b: VineId },
    Lipschitz { vine: VineId, pair: usize },
    Genericity { time: Rat, detail: String },
    OffGridCriticalTime { time: Rat },
    AdjacentEvents { pair: usize },
    BoundaryTooLong { vine: VineId, pair: usize },
    Spacing { pair: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveInterval { vine, index } => {
                write!(f, "vine {vine}: birth >= death at grid index {index}")
            }
            Violation::DuplicateInterval { index, a, b } => {
                write!(f, "vines {a} and {b} share an interval at grid index {index}")
            }
            Violation::Lipschitz { vine, pair } => {
                write!(f, "vine {vine}: endpoint moves faster than time on pair {pair}")
            }
            Violation::Genericity { time, detail } => write!(f, "genericity at t={time}: {detail}"),
            Violation::OffGridCriticalTime { time } => write!(f, "critical time {time} is not a grid point"),
            Violation::AdjacentEvents { pair } => write!(f, "pair {pair}: events at both endpoints"),
            Violation::BoundaryTooLong { vine, pair } => {
                write!(f, "vine {vine}: boundary interval not shorter than twice the step of pair {pair}")
            }
            Violation::Spacing { pair } => write!(f, "pair {pair}: step not below a quarter of the height gap"),
        }
    }
}

/// What the spacing rule needs to know about one time.
#[derive(Clone, Debug)]
pub(crate) struct Slice {
    pub time: Rat,
    pub intervals: Vec<Option<Interval>>,
    pub coincidence: bool,
    pub event: bool,
}

impl Slice {
    pub(crate) fn gap_excluding(&self, other: &Slice) -> Option<Rat> {
        let mut hs = Vec::new();
        for (id, iv) in self.intervals.iter().enumerate() {
            if let Some(iv) = iv {
                hs.push((iv.birth().clone(), id, other.intervals[id].is_some()));
                hs.push((iv.death().clone(), id, other.intervals[id].is_some()));
            }
        }
        let mut best: Option<Rat> = None;
        for (x, (a, ia, keep)) in hs.iter().enumerate() {
            for (b, ib, _) in &hs[x + 1..] {
                if a == b || (ia == ib && !keep) {
                    continue;
                }
                let d = (a - b).abs();
                if best.as_ref().is_none_or(|g| &d < g) {
                    best = Some(d);
                }
            }
        }
        best
    }

    pub fn gap(&self) -> Option<Rat> {
        min_distinct_gap(
            self.intervals.iter().flatten().flat_map(|iv| [iv.birth().clone(), iv.death().clone()]).collect(),
        )
    }
}

fn quarter_ok(eps: &Rat, gap: Option<Rat>) -> bool {
    gap.is_none_or(|g| eps * int(4) < g)
}

pub(crate) enum PairProblem {
    AdjacentEvents,
    BoundaryTooLong(VineId),
    Spacing,
}

/// Spacing-rule problems of the pair `(a, b)`, `a.time < b.time`.
pub(crate) fn pair_problems(a: &Slice, b: &Slice) -> Vec<PairProblem> {
    let eps = &b.time - &a.time;
    let mut out = Vec::new();
    if a.event && b.event {
        out.push(PairProblem::AdjacentEvents);
    }
    for (id, (x, y)) in a.intervals.iter().zip(&b.intervals).enumerate() {
        let lone = match (x, y) {
            (Some(iv), None) | (None, Some(iv)) => iv,
            _ => continue,
        };
        if lone.length() >= &eps * int(2) {
            out.push(PairProblem::BoundaryTooLong(id));
        }
    }
    let ok = if a.coincidence && !b.event {
        quarter_ok(&eps, a.gap_excluding(b))
    } else if b.coincidence && !a.event {
        quarter_ok(&eps, b.gap_excluding(a))
    } else {
        quarter_ok(&eps, a.gap_excluding(b)) && quarter_ok(&eps, b.gap_excluding(a))
    };
    if !ok {
        out.push(PairProblem::Spacing);
    }
    out
}

impl Vineyard {
    pub(crate) fn slice_at_index(&self, i: usize) -> Slice {
        let evs = self.events_at(i);
        Slice {
            time: self.grid.time(i).clone(),
            intervals: self.vines.iter().map(|v| v.interval(i)).collect(),
            coincidence: evs.iter().any(|e| e.is_coincidence()),
            event: !evs.is_empty(),
        }
    }

    /// Every violated invariant, with its location. Empty iff the vineyard is compliant.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let grid = &self.grid;
        for v in &self.vines {
            for i in v.lo()..=v.hi() {
                if v.birth(i) >= v.death(i) {
                    out.push(Violation::NonPositiveInterval { vine: v.id(), index: i });
                }
            }
            for m in v.lo()..v.hi() {
                let dt = grid.step(m);
                let moves = |xs: &[Rat]| (&xs[m + 1 - v.lo()] - &xs[m - v.lo()]).abs();
                if moves(v.births()) > dt || moves(v.deaths()) > dt {
                    out.push(Violation::Lipschitz { vine: v.id(), pair: m });
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
        for i in 0..grid.len() {
            if let Err(ModelError::DuplicateInterval { index, a, b }) = self.barcode_at(i) {
                out.push(Violation::DuplicateInterval { index, a, b });
            }
        }
        match self.critical_times() {
            Err(ModelError::GenericityViolation { time, detail }) => {
                out.push(Violation::Genericity { time, detail });
            }
            Err(e) => out.push(Violation::Genericity { time: grid.first().clone(), detail: e.to_string() }),
            Ok(evs) => {
                for e in evs {
                    if grid.index_of(&e.time).is_none() {
                        out.push(Violation::OffGridCriticalTime { time: e.time });
                    }
                }
            }
        }
        let slices: Vec<_> = (0..grid.len()).map(|i| self.slice_at_index(i)).collect();
        for (m, w) in slices.windows(2).enumerate() {
            for p in pair_problems(&w[0], &w[1]) {
                out.push(match p {
                    PairProblem::AdjacentEvents => Violation::AdjacentEvents { pair: m },
                    PairProblem::BoundaryTooLong(vine) => Violation::BoundaryTooLong { vine, pair: m },
                    PairProblem::Spacing => Violation::Spacing { pair: m },
                });
            }
        }
        out
    }

    pub fn is_compliant(&self) -> bool {
        self.validate().is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::int;
    use crate::vineyard::tests::annulus_seed;
    use crate::vineyard::TimeGrid;

    #[test]
    fn coarse_annulus_is_not_compliant() {
        let report = annulus_seed().validate();
        assert!(report.iter().any(|v| matches!(v, Violation::Spacing { pair: 0 })));
        assert!(report.iter().all(|v| matches!(v, Violation::Spacing { .. })));
    }

    #[test]
    fn lipschitz_violation_reported() {
        let grid = TimeGrid::new(vec![int(0), int(1)]).unwrap();
        let v = Vineyard::from_parts(grid, vec![(0, vec![int(0), int(2)], vec![int(10), int(10)])]).unwrap();
        assert_eq!(v.validate(), vec![Violation::Lipschitz { vine: 0, pair: 0 }]);
    }

    #[test]
    fn duplicate_interval_reported() {
        let grid = TimeGrid::new(vec![int(0), int(1)]).unwrap();
        let v = Vineyard::from_parts(
            grid,
            vec![(0, vec![int(0), int(0)], vec![int(9), int(9)]), (0, vec![int(0), int(1)], vec![int(9), int(10)])],
        )
        .unwrap();
        assert!(v.validate().contains(&Violation::DuplicateInterval { index: 0, a: 0, b: 1 }));
    }

    #[test]
    fn long_boundary_interval_reported() {
        let grid = TimeGrid::new(vec![int(0), int(1), int(2)]).unwrap();
        let v = Vineyard::from_parts(
            grid,
            vec![(0, vec![int(0); 3], vec![int(100); 3]), (1, vec![int(40), int(40)], vec![int(43), int(44)])],
        )
        .unwrap();
        assert!(v.validate().contains(&Violation::BoundaryTooLong { vine: 1, pair: 0 }));
    }
}
