use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `k -> slope * k + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Affine {
    pub slope: i64,
    pub offset: i64,
}

impl Affine {
    pub const ZERO: Affine = Affine { slope: 0, offset: 0 };

    pub fn new(slope: i64, offset: i64) -> Affine {
        Affine { slope, offset }
    }

    pub fn constant(c: i64) -> Affine {
        Affine { slope: 0, offset: c }
    }

    pub fn eval(self, k: u64) -> i64 {
        self.slope * k as i64 + self.offset
    }

    pub fn add(self, o: Affine) -> Affine {
        Affine::new(self.slope + o.slope, self.offset + o.offset)
    }

    pub fn sub(self, o: Affine) -> Affine {
        Affine::new(self.slope - o.slope, self.offset - o.offset)
    }

    pub fn plus(self, c: i64) -> Affine {
        Affine::new(self.slope, self.offset + c)
    }
}

impl Serialize for Affine {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.slope, self.offset].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Affine {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [slope, offset] = <[i64; 2]>::deserialize(d)?;
        Ok(Affine { slope, offset })
    }
}

/// Eventual truth of `f(k) >= 0` for `k >= start`: returns the eventual
/// value and an index from which it holds.
pub fn settle_nonneg(f: Affine, start: u64) -> (bool, u64) {
    let start = start.max(1);
    match f.slope.cmp(&0) {
        Ordering::Equal => (f.offset >= 0, start),
        Ordering::Greater => {
            // a k + b >= 0  <=>  k >= ceil(-b / a)
            let root = (-f.offset).div_euclid(f.slope) + i64::from((-f.offset).rem_euclid(f.slope) != 0);
            (true, start.max(root.max(1) as u64))
        }
        Ordering::Less => {
            // a k + b < 0  <=>  k > b / |a|
            let a = -f.slope;
            let root = f.offset.div_euclid(a) + 1;
            (false, start.max(root.max(1) as u64))
        }
    }
}

/// Eventual sign of `f(k)` for `k >= start`.
pub fn settle_sign(f: Affine, start: u64) -> (Ordering, u64) {
    match f.slope.cmp(&0) {
        Ordering::Equal => (f.offset.cmp(&0), start.max(1)),
        Ordering::Greater => (Ordering::Greater, settle_nonneg(f.plus(-1), start).1),
        Ordering::Less => {
            let neg = Affine::new(-f.slope, -f.offset - 1);
            (Ordering::Less, settle_nonneg(neg, start).1)
        }
    }
}

/// An integer sequence on `k >= 1`: explicit values for `k <= table.len()`,
/// an affine tail afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntegerMap {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<i64>,
    pub tail: Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PhiViolation {
    pub not_monotone: bool,
    pub not_divergent: bool,
    pub finitely_many_above_diagonal: bool,
}

impl fmt::Display for PhiViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.not_monotone {
            parts.push("phi is not non-decreasing");
        }
        if self.not_divergent {
            parts.push("phi does not tend to infinity");
        }
        if self.finitely_many_above_diagonal {
            parts.push("{k : phi(k) > k} is finite");
        }
        write!(f, "{}", parts.join("; "))
    }
}

impl IntegerMap {
    pub fn affine(slope: i64, offset: i64) -> IntegerMap {
        IntegerMap {
            table: Vec::new(),
            tail: Affine::new(slope, offset),
        }
    }

    pub fn constant(c: i64) -> IntegerMap {
        IntegerMap::affine(0, c)
    }

    pub fn with_table(table: Vec<i64>, slope: i64, offset: i64) -> IntegerMap {
        IntegerMap {
            table,
            tail: Affine::new(slope, offset),
        }
    }

    pub fn table_len(&self) -> u64 {
        self.table.len() as u64
    }

    /// The value at `k >= 1`.
    pub fn eval(&self, k: u64) -> i64 {
        debug_assert!(k >= 1);
        match self.table.get((k as usize).wrapping_sub(1)) {
            Some(v) if k >= 1 => *v,
            _ => self.tail.eval(k),
        }
    }

    pub fn is_zero_map(&self) -> bool {
        self.table.iter().all(|&v| v == 0) && self.tail == Affine::ZERO
    }

    /// Eventual truth of `self(k) >= other(k)` together with the least index
    /// from which it is constant.
    pub fn eventually_ge(&self, other: &IntegerMap) -> (bool, u64) {
        let start = self.table_len().max(other.table_len()) + 1;
        let (truth, mut from) = settle_nonneg(self.tail.sub(other.tail), start);
        while from > 1 && (self.eval(from - 1) >= other.eval(from - 1)) == truth {
            from -= 1;
        }
        (truth, from)
    }

    /// Checks the three conditions on `phi`: non-decreasing, unbounded, and
    /// `phi(k) > k` for infinitely many `k`.
    pub fn validate_phi(&self) -> std::result::Result<(), PhiViolation> {
        let mut v = PhiViolation::default();
        let t = self.table_len();
        let mut prev: Option<i64> = None;
        for k in 1..=t + 1 {
            let cur = self.eval(k);
            if prev.is_some_and(|p| p > cur) {
                v.not_monotone = true;
            }
            prev = Some(cur);
        }
        let (a, b) = (self.tail.slope, self.tail.offset);
        if a < 0 {
            v.not_monotone = true;
        }
        if a < 1 {
            v.not_divergent = true;
        }
        if !(a >= 2 || (a == 1 && b >= 1)) {
            v.finitely_many_above_diagonal = true;
        }
        if v == PhiViolation::default() {
            Ok(())
        } else {
            Err(v)
        }
    }

    pub fn check_phi(&self) -> Result<()> {
        self.validate_phi().map_err(|v| Error::InvalidPhi(v.to_string()))
    }

    /// Parses `a,b` (affine tail) or `t1,t2,...;a,b` (table then tail).
    pub fn parse(s: &str) -> Result<IntegerMap> {
        let bad = || Error::Parse(format!("not an integer map: {s:?}"));
        let ints = |t: &str| -> Result<Vec<i64>> {
            t.split(',')
                .filter(|x| !x.trim().is_empty())
                .map(|x| x.trim().parse().map_err(|_| bad()))
                .collect()
        };
        let (table, tail) = match s.split_once(';') {
            Some((t, r)) => (ints(t)?, ints(r)?),
            None => (Vec::new(), ints(s)?),
        };
        match tail[..] {
            [a, b] => Ok(IntegerMap::with_table(table, a, b)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for IntegerMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t: Vec<String> = self.table.iter().map(i64::to_string).collect();
        write!(f, "{};{},{}", t.join(","), self.tail.slope, self.tail.offset)
    }
}
