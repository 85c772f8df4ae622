//! Critical events and the (in)compatibility classifier.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};

use super::{ModelError, Vineyard};
use crate::interval::{frac, staircase_leq, Interval, Rat, VineId};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    BirthCoincidence(VineId, VineId),
    DeathCoincidence(VineId, VineId),
    BirthDeathCoincidence { birth: VineId, death: VineId },
    VineAppears(VineId),
    VineDisappears(VineId),
}

impl EventKind {
    pub fn is_coincidence(&self) -> bool {
        !matches!(self, EventKind::VineAppears(_) | EventKind::VineDisappears(_))
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::BirthCoincidence(a, b) => write!(f, "BirthCoincidence({a},{b})"),
            EventKind::DeathCoincidence(a, b) => write!(f, "DeathCoincidence({a},{b})"),
            EventKind::BirthDeathCoincidence { birth, death } => {
                write!(f, "BirthDeathCoincidence(birth {birth}, death {death})")
            }
            EventKind::VineAppears(v) => write!(f, "VineAppears({v})"),
            EventKind::VineDisappears(v) => write!(f, "VineDisappears({v})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CriticalEvent {
    pub time: Rat,
    pub kind: EventKind,
}

impl fmt::Display for CriticalEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at t={}", self.kind, self.time)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum End {
    Birth,
    Death,
}

fn classify(a: (VineId, End), b: (VineId, End)) -> EventKind {
    let (lo, hi) = if a.0 < b.0 { (a, b) } else { (b, a) };
    match (lo.1, hi.1) {
        (End::Birth, End::Birth) => EventKind::BirthCoincidence(lo.0, hi.0),
        (End::Death, End::Death) => EventKind::DeathCoincidence(lo.0, hi.0),
        (End::Birth, End::Death) => EventKind::BirthDeathCoincidence { birth: lo.0, death: hi.0 },
        (End::Death, End::Birth) => EventKind::BirthDeathCoincidence { birth: hi.0, death: lo.0 },
    }
}

fn labelled(iv: &Interval, id: VineId) -> [(Rat, (VineId, End)); 2] {
    [(iv.birth().clone(), (id, End::Birth)), (iv.death().clone(), (id, End::Death))]
}

/// Coincidences among a list of labelled heights.
fn coincidences(heights: &[(Rat, (VineId, End))]) -> Vec<EventKind> {
    let mut out = Vec::new();
    for (x, (h, a)) in heights.iter().enumerate() {
        for (g, b) in &heights[x + 1..] {
            if h == g && a.0 != b.0 {
                out.push(classify(*a, *b));
            }
        }
    }
    out
}

impl Vineyard {
    fn labelled_heights(&self, i: usize) -> Vec<(Rat, (VineId, End))> {
        self.vines.iter().filter_map(|v| v.interval(i).map(|iv| labelled(&iv, v.id()))).flatten().collect()
    }

    /// Events located exactly at grid index `i`.
    pub(crate) fn events_at(&self, i: usize) -> Vec<EventKind> {
        let mut out = coincidences(&self.labelled_heights(i));
        let last = self.grid.len() - 1;
        for v in &self.vines {
            if v.lo() == i && i > 0 {
                out.push(EventKind::VineAppears(v.id()));
            }
            if v.hi() == i && i < last {
                out.push(EventKind::VineDisappears(v.id()));
            }
        }
        out
    }

    /// Coincidences strictly inside segment `(t_m, t_{m+1})`. An identical pair of
    /// height trajectories over the whole segment is a genericity violation.
    fn segment_crossings(&self, m: usize) -> Result<Vec<CriticalEvent>, ModelError> {
        let (t0, t1) = (self.grid.time(m), self.grid.time(m + 1));
        let both: Vec<_> = self.vines.iter().filter(|v| v.supports(m) && v.supports(m + 1)).collect();
        let mut heads = Vec::new();
        for v in &both {
            let (a, b) = (v.interval(m), v.interval(m + 1));
            if let (Some(a), Some(b)) = (a, b) {
                heads.push((a.birth().clone(), b.birth().clone(), (v.id(), End::Birth)));
                heads.push((a.death().clone(), b.death().clone(), (v.id(), End::Death)));
            }
        }
        let mut out = Vec::new();
        for (x, (a0, a1, la)) in heads.iter().enumerate() {
            for (b0, b1, lb) in &heads[x + 1..] {
                if la.0 == lb.0 {
                    continue;
                }
                let d0 = a0 - b0;
                let d1 = a1 - b1;
                if d0.is_zero() && d1.is_zero() {
                    return Err(ModelError::GenericityViolation {
                        time: t0.clone(),
                        detail: format!("heights of vines {} and {} coincide on [{t0}, {t1}]", la.0, lb.0),
                    });
                }
                if (d0.is_positive() && d1.is_negative()) || (d0.is_negative() && d1.is_positive()) {
                    let time = t0 + (t1 - t0) * (&d0 / (&d0 - &d1));
                    out.push(CriticalEvent { time, kind: classify(*la, *lb) });
                }
            }
        }
        Ok(out)
    }

    /// All critical events sorted by time, including those strictly between grid points.
    pub fn critical_times(&self) -> Result<Vec<CriticalEvent>, ModelError> {
        let mut by_time: BTreeMap<Rat, Vec<EventKind>> = BTreeMap::new();
        for i in 0..self.grid.len() {
            let evs = self.events_at(i);
            if !evs.is_empty() {
                by_time.entry(self.grid.time(i).clone()).or_default().extend(evs);
            }
        }
        for m in 0..self.grid.pairs() {
            for e in self.segment_crossings(m)? {
                by_time.entry(e.time).or_default().push(e.kind);
            }
        }
        let mut out = Vec::new();
        for (time, kinds) in by_time {
            if kinds.len() > 1 {
                let detail = kinds.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
                return Err(ModelError::GenericityViolation { time, detail: format!("simultaneous events: {detail}") });
            }
            let kind = kinds.into_iter().next().expect("non-empty");
            out.push(CriticalEvent { time, kind });
        }
        Ok(out)
    }

    /// Interval of vine `id` at the midpoint of segment `m`, if supported on both ends.
    fn midpoint_interval(&self, id: VineId, m: usize) -> Option<Interval> {
        let v = &self.vines[id];
        let (a, b) = (v.interval(m)?, v.interval(m + 1)?);
        let half = frac(1, 2);
        Interval::new((a.birth() + b.birth()) * &half, (a.death() + b.death()) * &half)
    }

    /// `Some((k, l))` when `γ_l ⪯ γ_k` at grid index `i` and the relation fails
    /// just after (`Forward`) or just before (`Backward`).
    ///
    /// Vines are linear between grid points, so the side is sampled at the segment midpoint.
    pub fn incompatibility(&self, i: usize, dir: Direction) -> Option<(VineId, VineId)> {
        let seg = match dir {
            Direction::Forward => (i + 1 < self.grid.len()).then_some(i)?,
            Direction::Backward => i.checked_sub(1)?,
        };
        let n = self.vines.len();
        for k in 0..n {
            for l in 0..n {
                if k == l {
                    continue;
                }
                let (Some(ik), Some(il)) = (self.vines[k].interval(i), self.vines[l].interval(i)) else {
                    continue;
                };
                let (Some(mk), Some(ml)) = (self.midpoint_interval(k, seg), self.midpoint_interval(l, seg)) else {
                    continue;
                };
                if staircase_leq(&il, &ik) && !staircase_leq(&ml, &mk) {
                    return Some((k, l));
                }
            }
        }
        None
    }

    /// Grid indices that are backwards-incompatible, with their `(k, l)`.
    pub fn backward_incompatible_indices(&self) -> Vec<(usize, (VineId, VineId))> {
        (0..self.grid.len()).filter_map(|i| self.incompatibility(i, Direction::Backward).map(|kl| (i, kl))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::int;
    use crate::vineyard::tests::annulus_seed;
    use crate::vineyard::TimeGrid;

    #[test]
    fn annulus_events() {
        let v = annulus_seed();
        let evs = v.critical_times().unwrap();
        assert_eq!(
            evs,
            vec![
                CriticalEvent { time: int(3), kind: EventKind::DeathCoincidence(0, 1) },
                CriticalEvent { time: int(7), kind: EventKind::BirthCoincidence(0, 1) },
            ]
        );
    }

    #[test]
    fn annulus_incompatibility() {
        let v = annulus_seed();
        assert_eq!(v.incompatibility(3, Direction::Forward), Some((0, 1)));
        assert_eq!(v.incompatibility(3, Direction::Backward), Some((0, 1)));
        assert_eq!(v.incompatibility(7, Direction::Backward), Some((1, 0)));
        assert_eq!(v.incompatibility(7, Direction::Forward), None);
        assert_eq!(v.incompatibility(5, Direction::Forward), None);
        assert_eq!(v.incompatibility(0, Direction::Backward), None);
    }

    #[test]
    fn single_vine_has_no_events() {
        let grid = TimeGrid::new(vec![int(0), int(1)]).unwrap();
        let v = Vineyard::from_parts(grid, vec![(0, vec![int(0), int(1)], vec![int(4), int(4)])]).unwrap();
        assert!(v.critical_times().unwrap().is_empty());
    }

    #[test]
    fn interior_support_boundary_is_an_event() {
        let grid = TimeGrid::new(vec![int(0), int(1), int(2)]).unwrap();
        let v = Vineyard::from_parts(
            grid,
            vec![(0, vec![int(0); 3], vec![int(10); 3]), (1, vec![int(20), int(20)], vec![int(21), int(22)])],
        )
        .unwrap();
        let evs = v.critical_times().unwrap();
        assert_eq!(evs, vec![CriticalEvent { time: int(1), kind: EventKind::VineAppears(1) }]);
    }

    #[test]
    fn crossing_inside_segment_found() {
        let grid = TimeGrid::new(vec![int(0), int(1)]).unwrap();
        let v = Vineyard::from_parts(
            grid,
            vec![(0, vec![int(0), int(1)], vec![int(10), int(10)]), (0, vec![int(1), int(0)], vec![int(20), int(20)])],
        )
        .unwrap();
        let evs = v.critical_times().unwrap();
        assert_eq!(evs, vec![CriticalEvent { time: frac(1, 2), kind: EventKind::BirthCoincidence(0, 1) }]);
    }

    #[test]
    fn simultaneous_coincidences_rejected() {
        let grid = TimeGrid::new(vec![int(0), int(1)]).unwrap();
        let v = Vineyard::from_parts(
            grid,
            vec![(0, vec![int(0), int(1)], vec![int(10), int(11)]), (0, vec![int(0), int(2)], vec![int(10), int(12)])],
        )
        .unwrap();
        assert!(matches!(v.critical_times(), Err(ModelError::GenericityViolation { .. })));
    }
}
