//! Grid refinement: insert critical times and enough points to satisfy the spacing rule.

use std::collections::BTreeMap;

use super::validate::{pair_problems, PairProblem, Slice};
use super::{ModelError, TimeGrid, Vine, Vineyard};
use crate::interval::{frac, int, Rat};

/// Points are never added closer to a gap bound than this fraction of a quarter.
fn shrink() -> Rat {
    frac(9, 40)
}

const MAX_POINTS: usize = 50_000;

impl Vineyard {
    fn is_interior_boundary(&self, t: &Rat) -> bool {
        let last = self.grid.len() - 1;
        self.vines
            .iter()
            .any(|v| (v.lo() > 0 && self.grid.time(v.lo()) == t) || (v.hi() < last && self.grid.time(v.hi()) == t))
    }

    pub(crate) fn slice_at_time(&self, t: &Rat) -> Slice {
        let intervals: Vec<_> = (0..self.vines.len()).map(|id| self.interval_at_time(id, t)).collect();
        let mut hs: Vec<(Rat, usize)> = Vec::new();
        for (id, iv) in intervals.iter().enumerate() {
            if let Some(iv) = iv {
                hs.push((iv.birth().clone(), id));
                hs.push((iv.death().clone(), id));
            }
        }
        hs.sort();
        let coincidence = hs.windows(2).any(|w| w[0].0 == w[1].0 && w[0].1 != w[1].1);
        let event = coincidence || self.is_interior_boundary(t);
        Slice { time: t.clone(), intervals, coincidence, event }
    }

    /// Same vines, sampled (exactly) on `times`, which must contain every support boundary.
    fn resample(&self, times: Vec<Rat>) -> Result<Vineyard, ModelError> {
        let grid = TimeGrid::new(times)?;
        let mut vines = Vec::new();
        for v in &self.vines {
            let (t_lo, t_hi) = (self.grid.time(v.lo()), self.grid.time(v.hi()));
            let lo = grid.index_of(t_lo).expect("support boundary kept");
            let hi = grid.index_of(t_hi).expect("support boundary kept");
            let mut births = Vec::new();
            let mut deaths = Vec::new();
            for t in &grid.times()[lo..=hi] {
                let iv = self
                    .interval_at_time(v.id(), t)
                    .ok_or_else(|| ModelError::DegenerateVineyard { vine: v.id(), time: t.clone() })?;
                births.push(iv.birth().clone());
                deaths.push(iv.death().clone());
            }
            vines.push(Vine::new(v.id(), lo, births, deaths)?);
        }
        Vineyard::new(grid, vines)
    }

    fn compliant_pair(&self, a: &Rat, b: &Rat) -> bool {
        pair_problems(&self.slice_at_time(a), &self.slice_at_time(b)).is_empty()
    }

    /// A new time strictly inside `(a, b)` that moves the pair toward compliance.
    fn split_point(&self, a: &Slice, b: &Slice, problems: &[PairProblem]) -> Result<Rat, ModelError> {
        let mid = (&a.time + &b.time) * frac(1, 2);
        let inside = |p: &Rat| p > &a.time && p < &b.time;
        if a.event && b.event {
            return Ok(mid);
        }
        let lone = problems.iter().any(|p| matches!(p, PairProblem::BoundaryTooLong(_)))
            || a.intervals.iter().zip(&b.intervals).any(|(x, y)| x.is_some() != y.is_some());
        if lone {
            return self.split_boundary_pair(a, b);
        }
        if a.coincidence {
            if let Some(g) = a.gap() {
                let p = &a.time + g * shrink();
                if inside(&p) {
                    return Ok(p);
                }
            }
            return Ok(mid);
        }
        if b.coincidence {
            if let Some(g) = b.gap() {
                let p = &b.time - g * shrink();
                if inside(&p) {
                    return Ok(p);
                }
            }
            return Ok(mid);
        }
        // Greedy step from the left endpoint. The gap is 2-Lipschitz in time, so
        // a ninth of it always works; try larger steps first.
        let Some(ga) = a.gap().or_else(|| b.gap()) else {
            return Ok(mid);
        };
        let mut delta = &ga * shrink();
        for _ in 0..30 {
            let p = &a.time + &delta;
            if !inside(&p) {
                return Ok(mid);
            }
            if self.compliant_pair(&a.time, &p) {
                return Ok(p);
            }
            let gp = self.slice_at_time(&p).gap().unwrap_or_else(|| ga.clone());
            let next = ga.clone().min(gp) * shrink();
            if next >= delta {
                break;
            }
            delta = next;
        }
        let p = &a.time + ga * frac(1, 9);
        Ok(if inside(&p) { p } else { mid })
    }

    /// Splits a pair in which some vine is supported at one endpoint only. The new
    /// step at the boundary endpoint must stay above half the boundary length.
    fn split_boundary_pair(&self, a: &Slice, b: &Slice) -> Result<Rat, ModelError> {
        let (edge, far, sign) = if a.intervals.iter().zip(&b.intervals).any(|(x, y)| x.is_some() && y.is_none()) {
            (a, b, int(1))
        } else {
            (b, a, int(-1))
        };
        let half_len = edge
            .intervals
            .iter()
            .zip(&far.intervals)
            .filter(|(x, y)| x.is_some() && y.is_none())
            .map(|(x, _)| x.as_ref().expect("present").length() * frac(1, 2))
            .max()
            .expect("a lone vine exists");
        let eps = &b.time - &a.time;
        let mut upper = eps.clone();
        if let Some(g) = edge.gap_excluding(far) {
            upper = upper.min(g * frac(1, 4));
        }
        for _ in 0..20 {
            if upper <= half_len {
                break;
            }
            let step = (&half_len + &upper) * frac(1, 2);
            let p = &edge.time + &step * &sign;
            let (lo, hi) = if sign == int(1) { (&edge.time, &p) } else { (&p, &edge.time) };
            if step < eps && self.compliant_pair(lo, hi) {
                return Ok(p);
            }
            if let Some(g) = self.slice_at_time(&p).gap_excluding(edge) {
                upper = upper.min(g * frac(1, 4));
            }
            upper = upper.min(step);
        }
        Err(ModelError::RefinementFailed(format!(
            "cannot space the support boundary at t={} (boundary interval too long for the local height gap)",
            edge.time
        )))
    }

    /// Refines onto a grid containing the current grid, `seed`, all critical times and
    /// enough extra points to satisfy the spacing rule. Values at new points are
    /// interpolated exactly.
    pub fn refine_grid(&self, seed: &TimeGrid) -> Result<Vineyard, ModelError> {
        if let Some(t) = seed.times().iter().find(|t| !self.grid.contains_time(t)) {
            return Err(ModelError::SeedOutOfRange(t.clone()));
        }
        let mut times: BTreeMap<Rat, Slice> = BTreeMap::new();
        let add = |t: Rat, times: &mut BTreeMap<Rat, Slice>| {
            let s = self.slice_at_time(&t);
            times.insert(t, s);
        };
        for t in self.grid.times().iter().chain(seed.times()) {
            add(t.clone(), &mut times);
        }
        for e in self.critical_times()? {
            add(e.time, &mut times);
        }
        loop {
            let slices: Vec<&Slice> = times.values().collect();
            let mut new_points = Vec::new();
            for w in slices.windows(2) {
                let problems = pair_problems(w[0], w[1]);
                if problems.is_empty() {
                    continue;
                }
                if problems.iter().all(|p| matches!(p, PairProblem::AdjacentEvents)) && w[0].event && w[1].event {
                    new_points.push((&w[0].time + &w[1].time) * frac(1, 2));
                    continue;
                }
                new_points.push(self.split_point(w[0], w[1], &problems)?);
            }
            if new_points.is_empty() {
                break;
            }
            for p in new_points {
                add(p, &mut times);
            }
            if times.len() > MAX_POINTS {
                return Err(ModelError::RefinementFailed(format!("more than {MAX_POINTS} grid points needed")));
            }
        }
        let refined = self.resample(times.into_keys().collect())?;
        let report = refined.validate();
        if !report.is_empty() {
            let text = report.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            return Err(ModelError::RefinementFailed(text));
        }
        Ok(refined)
    }

    /// Refinement over the vineyard's own grid.
    pub fn refined(&self) -> Result<Vineyard, ModelError> {
        self.refine_grid(&self.grid.clone())
    }
}
