//! Time grids, vines and vineyards.

mod events;
mod refine;
mod validate;

pub use events::{CriticalEvent, Direction, EventKind};
pub use validate::Violation;

use std::fmt;

use thiserror::Error;

use crate::interval::{Barcode, Interval, Rat, VineId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("time grid needs at least 2 points, got {0}")]
    GridTooShort(usize),
    #[error("time grid not strictly increasing at index {0}")]
    GridNotIncreasing(usize),
    #[error("vine {id}: {reason}")]
    BadVine { id: VineId, reason: String },
    #[error("vines {a} and {b} have the same interval at grid index {index}")]
    DuplicateInterval { index: usize, a: VineId, b: VineId },
    #[error("genericity violated at t={time}: {detail}")]
    GenericityViolation { time: Rat, detail: String },
    #[error("vine {vine} has birth >= death at t={time}")]
    DegenerateVineyard { vine: VineId, time: Rat },
    #[error("grid index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("seed time {0} outside the vineyard's time range")]
    SeedOutOfRange(Rat),
    #[error("grid refinement failed: {0}")]
    RefinementFailed(String),
}

/// Strictly increasing list of at least two exact times.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TimeGrid {
    times: Vec<Rat>,
}

impl TimeGrid {
    pub fn new(times: Vec<Rat>) -> Result<Self, ModelError> {
        if times.len() < 2 {
            return Err(ModelError::GridTooShort(times.len()));
        }
        if let Some(i) = times.windows(2).position(|w| w[0] >= w[1]) {
            return Err(ModelError::GridNotIncreasing(i + 1));
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[Rat] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of consecutive pairs.
    pub fn pairs(&self) -> usize {
        self.times.len() - 1
    }

    pub fn time(&self, i: usize) -> &Rat {
        &self.times[i]
    }

    /// `t_{m+1} - t_m`.
    pub fn step(&self, m: usize) -> Rat {
        &self.times[m + 1] - &self.times[m]
    }

    pub fn first(&self) -> &Rat {
        &self.times[0]
    }

    pub fn last(&self) -> &Rat {
        &self.times[self.times.len() - 1]
    }

    pub fn index_of(&self, t: &Rat) -> Option<usize> {
        self.times.binary_search(t).ok()
    }

    pub fn contains_time(&self, t: &Rat) -> bool {
        self.first() <= t && t <= self.last()
    }
}

/// A path of intervals over a contiguous range of grid indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Vine {
    id: VineId,
    lo: usize,
    births: Vec<Rat>,
    deaths: Vec<Rat>,
}

impl Vine {
    /// `births[k]`, `deaths[k]` sit at grid index `lo + k`.
    pub fn new(id: VineId, lo: usize, births: Vec<Rat>, deaths: Vec<Rat>) -> Result<Self, ModelError> {
        if births.is_empty() {
            return Err(ModelError::BadVine { id, reason: "empty support".into() });
        }
        if births.len() != deaths.len() {
            return Err(ModelError::BadVine {
                id,
                reason: format!("{} births but {} deaths", births.len(), deaths.len()),
            });
        }
        Ok(Self { id, lo, births, deaths })
    }

    pub fn id(&self) -> VineId {
        self.id
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.lo + self.births.len() - 1
    }

    pub fn births(&self) -> &[Rat] {
        &self.births
    }

    pub fn deaths(&self) -> &[Rat] {
        &self.deaths
    }

    pub fn supports(&self, i: usize) -> bool {
        self.lo <= i && i <= self.hi()
    }

    pub fn birth(&self, i: usize) -> Option<&Rat> {
        self.supports(i).then(|| &self.births[i - self.lo])
    }

    pub fn death(&self, i: usize) -> Option<&Rat> {
        self.supports(i).then(|| &self.deaths[i - self.lo])
    }

    /// `None` outside the support or if the stored endpoints are degenerate.
    pub fn interval(&self, i: usize) -> Option<Interval> {
        let k = i.checked_sub(self.lo)?;
        Interval::new(self.births.get(k)?.clone(), self.deaths.get(k)?.clone())
    }

    fn with_id(&self, id: VineId) -> Vine {
        Vine { id, ..self.clone() }
    }
}

/// Vines over a shared grid. Vine ids equal their position in the list.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Vineyard {
    grid: TimeGrid,
    vines: Vec<Vine>,
}

impl Vineyard {
    pub fn new(grid: TimeGrid, vines: Vec<Vine>) -> Result<Self, ModelError> {
        for (pos, v) in vines.iter().enumerate() {
            if v.id != pos {
                return Err(ModelError::BadVine { id: v.id, reason: format!("id must equal its position {pos}") });
            }
            if v.hi() >= grid.len() {
                return Err(ModelError::BadVine {
                    id: v.id,
                    reason: format!("support [{}, {}] exceeds grid of {} points", v.lo, v.hi(), grid.len()),
                });
            }
        }
        Ok(Self { grid, vines })
    }

    /// Builds vines from `(lo, births, deaths)` triples, numbering them in order.
    pub fn from_parts(grid: TimeGrid, parts: Vec<(usize, Vec<Rat>, Vec<Rat>)>) -> Result<Self, ModelError> {
        let vines = parts
            .into_iter()
            .enumerate()
            .map(|(id, (lo, b, d))| Vine::new(id, lo, b, d))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(grid, vines)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn vines(&self) -> &[Vine] {
        &self.vines
    }

    pub fn vine(&self, id: VineId) -> &Vine {
        &self.vines[id]
    }

    pub fn num_vines(&self) -> usize {
        self.vines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vines.is_empty()
    }

    /// The barcode at grid index `i`.
    pub fn barcode_at(&self, i: usize) -> Result<Barcode, ModelError> {
        if i >= self.grid.len() {
            return Err(ModelError::IndexOutOfRange(i));
        }
        let slots = self
            .vines
            .iter()
            .map(|v| match (v.birth(i), v.death(i)) {
                (Some(b), Some(d)) => Interval::new(b.clone(), d.clone())
                    .map(Some)
                    .ok_or_else(|| ModelError::DegenerateVineyard { vine: v.id, time: self.grid.time(i).clone() }),
                _ => Ok(None),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let bc = Barcode::new(slots);
        if let Some((a, b)) = bc.duplicate() {
            return Err(ModelError::DuplicateInterval { index: i, a, b });
        }
        Ok(bc)
    }

    /// Interval of vine `id` at an arbitrary time, interpolating linearly between grid points.
    pub fn interval_at_time(&self, id: VineId, t: &Rat) -> Option<Interval> {
        let v = &self.vines[id];
        let lo_t = self.grid.time(v.lo());
        let hi_t = self.grid.time(v.hi());
        if t < lo_t || t > hi_t {
            return None;
        }
        let times = self.grid.times();
        match times.binary_search(t) {
            Ok(i) => v.interval(i),
            Err(j) => {
                // t lies strictly between times[j-1] and times[j], both supported.
                let (t0, t1) = (&times[j - 1], &times[j]);
                let w = (t - t0) / (t1 - t0);
                let lerp = |a: &Rat, b: &Rat| a + (b - a) * &w;
                let b = lerp(v.birth(j - 1)?, v.birth(j)?);
                let d = lerp(v.death(j - 1)?, v.death(j)?);
                Interval::new(b, d)
            }
        }
    }

    /// Birth and death heights of vines supported at `i`.
    pub(crate) fn heights_at(&self, i: usize) -> Vec<Rat> {
        self.vines.iter().filter_map(|v| Some([v.birth(i)?.clone(), v.death(i)?.clone()])).flatten().collect()
    }

    /// Minimum distance between distinct critical heights at grid index `i`;
    /// `None` stands for +∞ (fewer than two distinct heights).
    pub fn min_height_gap(&self, i: usize) -> Option<Rat> {
        min_distinct_gap(self.heights_at(i))
    }

    /// Sub-vineyard on the given vines, renumbered in the given order.
    pub fn select(&self, ids: &[VineId]) -> Vineyard {
        let vines = ids.iter().enumerate().map(|(new, &old)| self.vines[old].with_id(new)).collect();
        Vineyard { grid: self.grid.clone(), vines }
    }

    /// Vines of `self` followed by those of `other` (same grid assumed).
    pub fn concat(&self, other: &Vineyard) -> Vineyard {
        let n = self.vines.len();
        let mut vines = self.vines.clone();
        vines.extend(other.vines.iter().map(|v| v.with_id(v.id + n)));
        Vineyard { grid: self.grid.clone(), vines }
    }

    /// Renumbers vines: old id `i` becomes `perm[i]`.
    pub fn relabel(&self, perm: &[VineId]) -> Vineyard {
        let mut vines = self.vines.clone();
        for v in &self.vines {
            vines[perm[v.id]] = v.with_id(perm[v.id]);
        }
        Vineyard { grid: self.grid.clone(), vines }
    }

    /// The window of grid indices `lo..=hi`. Vines that miss the window are dropped;
    /// the returned list maps new vine ids to old ones.
    pub fn crop(&self, lo: usize, hi: usize) -> Result<(Vineyard, Vec<VineId>), ModelError> {
        if hi >= self.grid.len() {
            return Err(ModelError::IndexOutOfRange(hi));
        }
        let grid = TimeGrid::new(self.grid.times[lo..=hi].to_vec())?;
        let mut kept = Vec::new();
        let mut vines = Vec::new();
        for v in &self.vines {
            let a = v.lo().max(lo);
            let b = v.hi().min(hi);
            if a > b {
                continue;
            }
            let range = a - v.lo()..=b - v.lo();
            vines.push(Vine::new(kept.len(), a - lo, v.births[range.clone()].to_vec(), v.deaths[range].to_vec())?);
            kept.push(v.id);
        }
        Ok((Vineyard { grid, vines }, kept))
    }
}

pub(crate) fn min_distinct_gap(mut hs: Vec<Rat>) -> Option<Rat> {
    hs.sort();
    hs.dedup();
    hs.windows(2).map(|w| &w[1] - &w[0]).min()
}

impl fmt::Display for Vineyard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vineyard: {} vines, {} grid points", self.vines.len(), self.grid.len())?;
        for v in &self.vines {
            writeln!(
                f,
                "  vine {}: support [{}, {}] (t={}..{})",
                v.id,
                v.lo(),
                v.hi(),
                self.grid.time(v.lo()),
                self.grid.time(v.hi())
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::{frac, int};

    /// The two-vine annulus on the integer grid 0..=10, before refinement.
    pub(crate) fn annulus_seed() -> Vineyard {
        let ts: Vec<Rat> = (0..=10).map(int).collect();
        let f = |g: &dyn Fn(i64) -> i64| (0..=10).map(|t| int(g(t))).collect::<Vec<_>>();
        let b1 = f(&|t| 14 - t);
        let d1 = f(&|t| (15 + t).min(21 - t));
        let b2 = f(&|t| t);
        let d2 = f(&|t| (15 + t).max(21 - t));
        Vineyard::from_parts(TimeGrid::new(ts).unwrap(), vec![(0, b1, d1), (0, b2, d2)]).unwrap()
    }

    #[test]
    fn annulus_barcodes() {
        let v = annulus_seed();
        let b0 = v.barcode_at(0).unwrap();
        assert_eq!(b0.get(0).unwrap(), &Interval::new(int(14), int(15)).unwrap());
        assert_eq!(b0.get(1).unwrap(), &Interval::new(int(0), int(21)).unwrap());
        let b5 = v.barcode_at(5).unwrap();
        assert_eq!(b5.get(0).unwrap(), &Interval::new(int(9), int(16)).unwrap());
        assert_eq!(b5.get(1).unwrap(), &Interval::new(int(5), int(20)).unwrap());
    }

    #[test]
    fn annulus_gaps() {
        let v = annulus_seed();
        assert_eq!(v.min_height_gap(0), Some(int(1)));
        assert_eq!(v.min_height_gap(3), Some(int(7)));
        assert_eq!(v.min_height_gap(7), Some(int(7)));
    }

    #[test]
    fn interpolation_between_points() {
        let v = annulus_seed();
        let iv = v.interval_at_time(0, &frac(7, 2)).unwrap();
        assert_eq!(iv, Interval::new(frac(21, 2), frac(35, 2)).unwrap());
        assert!(v.interval_at_time(0, &int(11)).is_none());
    }

    #[test]
    fn unsupported_slot_is_absent() {
        let grid = TimeGrid::new(vec![int(0), int(1), int(2)]).unwrap();
        let v = Vineyard::from_parts(grid, vec![(1, vec![int(0)], vec![int(1)])]).unwrap();
        assert!(v.barcode_at(0).unwrap().get(0).is_none());
        assert!(v.barcode_at(1).unwrap().get(0).is_some());
    }

    #[test]
    fn duplicate_interval_detected() {
        let grid = TimeGrid::new(vec![int(0), int(1)]).unwrap();
        let v = Vineyard::from_parts(
            grid,
            vec![(0, vec![int(0), int(0)], vec![int(5), int(5)]), (0, vec![int(0), int(1)], vec![int(5), int(6)])],
        )
        .unwrap();
        assert_eq!(v.barcode_at(0), Err(ModelError::DuplicateInterval { index: 0, a: 0, b: 1 }));
    }

    #[test]
    fn empty_barcode_gap_is_infinite() {
        let grid = TimeGrid::new(vec![int(0), int(1)]).unwrap();
        let v = Vineyard::new(grid, vec![]).unwrap();
        assert_eq!(v.min_height_gap(0), None);
    }

    #[test]
    fn crop_keeps_window() {
        let v = annulus_seed();
        let (c, kept) = v.crop(2, 4).unwrap();
        assert_eq!(kept, vec![0, 1]);
        assert_eq!(c.grid().times(), &[int(2), int(3), int(4)]);
        assert_eq!(c.barcode_at(1).unwrap(), v.barcode_at(3).unwrap());
    }
}
