//! Half-open intervals, the staircase order and barcodes with absent slots.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

/// Exact rational used for times and heights.
pub type Rat = BigRational;

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Index of a vine; also its row/column in every matrix.
pub type VineId = usize;

/// `[birth, death)` with `birth < death`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    birth: Rat,
    death: Rat,
}

impl Interval {
    pub fn new(birth: Rat, death: Rat) -> Option<Self> {
        (birth < death).then_some(Self { birth, death })
    }

    pub fn birth(&self) -> &Rat {
        &self.birth
    }

    pub fn death(&self) -> &Rat {
        &self.death
    }

    pub fn length(&self) -> Rat {
        &self.death - &self.birth
    }

    /// Staircase order, see [`staircase_leq`].
    pub fn leq(&self, other: &Interval) -> bool {
        staircase_leq(self, other)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.birth, self.death)
    }
}

/// `a ⪯ b` iff `birth(a) <= birth(b)` and `death(a) <= death(b)`.
pub fn staircase_leq(a: &Interval, b: &Interval) -> bool {
    a.birth <= b.birth && a.death <= b.death
}

/// One time slice: a slot per vine id, `None` where the vine is not supported.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Barcode {
    slots: Vec<Option<Interval>>,
}

impl Barcode {
    pub fn new(slots: Vec<Option<Interval>>) -> Self {
        Self { slots }
    }

    pub fn empty(n: usize) -> Self {
        Self { slots: vec![None; n] }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn get(&self, id: VineId) -> Option<&Interval> {
        self.slots.get(id).and_then(Option::as_ref)
    }

    pub fn is_supported(&self, id: VineId) -> bool {
        self.get(id).is_some()
    }

    pub fn slots(&self) -> &[Option<Interval>] {
        &self.slots
    }

    pub fn support(&self) -> BTreeSet<VineId> {
        self.present().map(|(i, _)| i).collect()
    }

    pub fn present(&self) -> impl Iterator<Item = (VineId, &Interval)> {
        self.slots.iter().enumerate().filter_map(|(i, s)| s.as_ref().map(|iv| (i, iv)))
    }

    /// First pair of equal present intervals, if any.
    pub fn duplicate(&self) -> Option<(VineId, VineId)> {
        let present: Vec<_> = self.present().collect();
        for (x, (i, a)) in present.iter().enumerate() {
            for (j, b) in &present[x + 1..] {
                if a == b {
                    return Some((*i, *j));
                }
            }
        }
        None
    }

    /// Keeps the slots listed in `ids`, in that order.
    pub fn select(&self, ids: &[VineId]) -> Barcode {
        Barcode::new(ids.iter().map(|&i| self.slots[i].clone()).collect())
    }

    pub fn concat(&self, other: &Barcode) -> Barcode {
        let mut slots = self.slots.clone();
        slots.extend(other.slots.iter().cloned());
        Barcode::new(slots)
    }
}

impl fmt::Display for Barcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, (i, iv)) in self.present().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}: {iv}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(b: i64, d: i64) -> Interval {
        Interval::new(int(b), int(d)).unwrap()
    }

    #[test]
    fn staircase_examples() {
        assert!(!staircase_leq(&iv(0, 22), &iv(3, 13)));
        assert!(staircase_leq(&iv(3, 18), &iv(11, 18)));
        assert!(!staircase_leq(&iv(11, 18), &iv(3, 18)));
        assert!(staircase_leq(&iv(5, 9), &iv(5, 9)));
    }

    #[test]
    fn empty_interval_rejected() {
        assert!(Interval::new(int(2), int(2)).is_none());
    }

    fn arb_interval() -> impl Strategy<Value = Interval> {
        (-20i64..20, 1i64..20).prop_map(|(b, len)| iv(b, b + len))
    }

    proptest! {
        #[test]
        fn staircase_is_partial_order(a in arb_interval(), b in arb_interval(), c in arb_interval()) {
            prop_assert!(staircase_leq(&a, &a));
            if staircase_leq(&a, &b) && staircase_leq(&b, &a) {
                prop_assert_eq!(&a, &b);
            }
            if staircase_leq(&a, &b) && staircase_leq(&b, &c) {
                prop_assert!(staircase_leq(&a, &c));
            }
        }
    }
}
