//! Eventual behaviour of exponentially indexed data.
//!
//! Every symbolic object in a family tail is built from sums
//! `sum_i u_i * p^(a_i k + b_i)`. Grouping such a sum by slope and comparing
//! valuations shows that its p-adic valuation is eventually affine in `k`
//! (or identically infinite). Distances between moving points, and hence
//! membership of a moving point in a moving ball, are therefore eventually
//! constant, with a threshold computed here exactly.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::numbers::{pow_p, valuation, Prime, Rational, Ring, RingElem};
use crate::sequences::integer_map::{settle_nonneg, settle_sign, Affine};
use crate::spaces::{Ball, BallRelation, Point, Space};

/// A value known to hold for every `k >= from`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Eventually<T> {
    pub from: u64,
    pub value: T,
}

/// Eventual exponent of a distance or valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpVal {
    Infinity,
    Affine(Affine),
}

pub trait Coefficient: Clone + PartialEq {
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Result<Self>;
    fn mul(&self, o: &Self) -> Result<Self>;
    fn neg(&self) -> Self;
    fn scale_p(&self, p: Option<Prime>, e: i64) -> Result<Self>;
}

fn need_prime(p: Option<Prime>) -> Result<Prime> {
    p.ok_or_else(|| Error::NotSupported("p-power scaling without a prime".into()))
}

impl Coefficient for Rational {
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, o: &Self) -> Result<Self> {
        Ok(self + o)
    }
    fn mul(&self, o: &Self) -> Result<Self> {
        Ok(self * o)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale_p(&self, p: Option<Prime>, e: i64) -> Result<Self> {
        if e == 0 {
            return Ok(self.clone());
        }
        Ok(self * pow_p(need_prime(p)?, e))
    }
}

impl Coefficient for RingElem {
    fn is_zero(&self) -> bool {
        RingElem::is_zero(self)
    }
    fn add(&self, o: &Self) -> Result<Self> {
        RingElem::add(self, o)
    }
    fn mul(&self, o: &Self) -> Result<Self> {
        RingElem::mul(self, o)
    }
    fn neg(&self) -> Self {
        RingElem::neg(self)
    }
    fn scale_p(&self, p: Option<Prime>, e: i64) -> Result<Self> {
        if e == 0 {
            return Ok(self.clone());
        }
        self.mul(&self.ring().pow_p(need_prime(p)?, e)?)
    }
}

/// `k -> sum_i unit_i * p^(exp_i(k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonoSum<T> {
    terms: Vec<(T, Affine)>,
}

impl<T: Coefficient> MonoSum<T> {
    pub fn empty() -> MonoSum<T> {
        MonoSum { terms: Vec::new() }
    }

    pub fn monomial(unit: T, exp: Affine) -> MonoSum<T> {
        let mut s = MonoSum::empty();
        if !unit.is_zero() {
            s.terms.push((unit, exp));
        }
        s
    }

    pub fn constant(unit: T) -> MonoSum<T> {
        MonoSum::monomial(unit, Affine::ZERO)
    }

    pub fn terms(&self) -> &[(T, Affine)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &MonoSum<T>) -> MonoSum<T> {
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        MonoSum { terms }
    }

    pub fn neg(&self) -> MonoSum<T> {
        MonoSum {
            terms: self.terms.iter().map(|(u, e)| (u.neg(), *e)).collect(),
        }
    }

    pub fn mul(&self, o: &MonoSum<T>) -> Result<MonoSum<T>> {
        let mut terms = Vec::new();
        for (u, e) in &self.terms {
            for (v, f) in &o.terms {
                let w = u.mul(v)?;
                if !w.is_zero() {
                    terms.push((w, e.add(*f)));
                }
            }
        }
        Ok(MonoSum { terms })
    }

    pub fn shift(&self, by: Affine) -> MonoSum<T> {
        MonoSum {
            terms: self.terms.iter().map(|(u, e)| (u.clone(), e.add(by))).collect(),
        }
    }

    pub fn eval(&self, p: Option<Prime>, k: u64, zero: T) -> Result<T> {
        let mut acc = zero;
        for (u, e) in &self.terms {
            acc = acc.add(&u.scale_p(p, e.eval(k))?)?;
        }
        Ok(acc)
    }

    /// Groups terms of equal slope into one monomial each, dropping classes
    /// whose combined coefficient vanishes. Sorted by slope.
    pub fn merged(&self, p: Option<Prime>) -> Result<MonoSum<T>> {
        let mut by_slope: BTreeMap<i64, Vec<&(T, Affine)>> = BTreeMap::new();
        for t in &self.terms {
            by_slope.entry(t.1.slope).or_default().push(t);
        }
        let mut terms = Vec::new();
        for (slope, class) in by_slope {
            let base = class.iter().map(|(_, e)| e.offset).min().expect("nonempty");
            let mut c: Option<T> = None;
            for (u, e) in class {
                let scaled = u.scale_p(p, e.offset - base)?;
                c = Some(match c {
                    None => scaled,
                    Some(acc) => acc.add(&scaled)?,
                });
            }
            let c = c.expect("nonempty");
            if !c.is_zero() {
                terms.push((c, Affine::new(slope, base)));
            }
        }
        Ok(MonoSum { terms })
    }
}

impl MonoSum<Rational> {
    pub fn value(&self, p: Prime, k: u64) -> Rational {
        self.eval(Some(p), k, Rational::zero()).expect("rational scaling is total")
    }
}

/// Eventual valuation of a rational exponential sum.
pub fn eventual_valuation(p: Prime, sum: &MonoSum<Rational>, start: u64) -> Eventually<ExpVal> {
    let merged = sum.merged(Some(p)).expect("rational scaling is total");
    let ws: Vec<Affine> = merged
        .terms()
        .iter()
        .map(|(c, e)| e.plus(valuation(p, c).finite().expect("nonzero class")))
        .collect();
    let Some(&low) = ws.first() else {
        return Eventually { from: start, value: ExpVal::Infinity };
    };
    // smallest slope wins once the valuations separate
    let mut from = start;
    for w in &ws[1..] {
        let (truth, f) = settle_nonneg(w.sub(low).plus(-1), start);
        debug_assert!(truth);
        from = from.max(f);
    }
    Eventually { from, value: ExpVal::Affine(low) }
}

/// Eventual minimum of several eventual exponents.
fn eventual_min(vals: &[ExpVal], start: u64) -> Eventually<ExpVal> {
    let affines: Vec<Affine> = vals
        .iter()
        .filter_map(|v| match v {
            ExpVal::Affine(a) => Some(*a),
            ExpVal::Infinity => None,
        })
        .collect();
    let Some(&low) = affines.iter().min_by_key(|a| (a.slope, a.offset)) else {
        return Eventually { from: start, value: ExpVal::Infinity };
    };
    let mut from = start;
    for a in &affines {
        let (truth, f) = settle_nonneg(a.sub(low), start);
        debug_assert!(truth);
        from = from.max(f);
    }
    Eventually { from, value: ExpVal::Affine(low) }
}

/// `lhs(k) >= rhs(k)` eventually, with threshold.
pub fn eventual_ge(lhs: ExpVal, rhs: Affine, start: u64) -> Eventually<bool> {
    match lhs {
        ExpVal::Infinity => Eventually { from: start, value: true },
        ExpVal::Affine(a) => {
            let (value, from) = settle_nonneg(a.sub(rhs), start);
            Eventually { from, value }
        }
    }
}

/// A moving point `k -> x_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum PointMap {
    Qp(Vec<MonoSum<Rational>>),
    Label(String),
}

impl PointMap {
    pub fn fixed(x: &Point) -> PointMap {
        match x {
            Point::Qp(c) => PointMap::Qp(c.iter().map(|v| MonoSum::constant(v.clone())).collect()),
            Point::Discrete(l) => PointMap::Label(l.clone()),
        }
    }

    /// `base * p^(exp(k))` coordinatewise.
    pub fn scaled(base: &[Rational], exp: Affine) -> PointMap {
        PointMap::Qp(base.iter().map(|b| MonoSum::monomial(b.clone(), exp)).collect())
    }

    pub fn at(&self, p: Option<Prime>, k: u64) -> Point {
        match self {
            PointMap::Qp(c) => Point::Qp(
                c.iter()
                    .map(|s| s.eval(p, k, Rational::zero()).expect("qp point maps carry a prime"))
                    .collect(),
            ),
            PointMap::Label(l) => Point::Discrete(l.clone()),
        }
    }

    /// Adds `j * p^(exp(k))` to coordinate `i`.
    pub fn nudge(&self, i: usize, j: i64, exp: Affine) -> PointMap {
        match self {
            PointMap::Qp(c) => {
                let mut c = c.clone();
                c[i] = c[i].add(&MonoSum::monomial(Rational::from_integer(j.into()), exp));
                PointMap::Qp(c)
            }
            l => l.clone(),
        }
    }
}

pub fn eventual_distance(space: &Space, x: &PointMap, y: &PointMap, start: u64) -> Eventually<ExpVal> {
    match (space, x, y) {
        (Space::Qp { p, .. }, PointMap::Qp(a), PointMap::Qp(b)) => {
            let mut from = start;
            let mut vals = Vec::with_capacity(a.len());
            for (u, v) in a.iter().zip(b) {
                let e = eventual_valuation(*p, &u.add(&v.neg()), start);
                from = from.max(e.from);
                vals.push(e.value);
            }
            let m = eventual_min(&vals, from);
            Eventually { from: m.from.max(from), value: m.value }
        }
        (_, PointMap::Label(a), PointMap::Label(b)) => Eventually {
            from: start,
            value: if a == b { ExpVal::Infinity } else { ExpVal::Affine(Affine::ZERO) },
        },
        _ => unreachable!("point maps belong to the space"),
    }
}

/// A moving ball `k -> Ball(center(k), radius(k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallMap {
    pub center: PointMap,
    pub radius: Affine,
}

impl BallMap {
    pub fn fixed(b: &Ball) -> BallMap {
        BallMap {
            center: PointMap::fixed(b.center()),
            radius: Affine::constant(b.gamma()),
        }
    }

    pub fn at(&self, space: &Space, k: u64) -> Ball {
        space.ball_unchecked(&self.center.at(space.prime(), k), self.radius.eval(k))
    }

    /// Discrete balls only distinguish `gamma <= 0` from `gamma >= 1`; this
    /// pins the radius to the eventual class.
    pub fn settle(&self, space: &Space, start: u64) -> Eventually<BallMap> {
        match space {
            Space::Qp { .. } => Eventually { from: start, value: self.clone() },
            Space::Discrete { points } => {
                let (single, from) = settle_nonneg(self.radius.plus(-1), start);
                let gamma = i64::from(single && points.len() > 1);
                Eventually {
                    from,
                    value: BallMap {
                        center: self.center.clone(),
                        radius: Affine::constant(gamma),
                    },
                }
            }
        }
    }
}

pub fn eventual_member(space: &Space, x: &PointMap, b: &BallMap, start: u64) -> Eventually<bool> {
    let b = b.settle(space, start);
    let d = eventual_distance(space, x, &b.value.center, b.from);
    let ge = eventual_ge(d.value, b.value.radius, d.from);
    Eventually { from: ge.from, value: ge.value }
}

pub fn eventual_relation(space: &Space, a: &BallMap, b: &BallMap, start: u64) -> Eventually<BallRelation> {
    let a = a.settle(space, start);
    let b = b.settle(space, a.from);
    let (a, b, start) = (a.value, b.value, b.from);
    let d = eventual_distance(space, &a.center, &b.center, start);
    let (order, from) = settle_sign(a.radius.sub(b.radius), d.from);
    let (test_radius, inside) = match order {
        Ordering::Equal => (a.radius, BallRelation::Equal),
        Ordering::Greater => (b.radius, BallRelation::FirstInsideSecond),
        Ordering::Less => (a.radius, BallRelation::SecondInsideFirst),
    };
    let ge = eventual_ge(d.value, test_radius, from);
    Eventually {
        from: ge.from,
        value: if ge.value { inside } else { BallRelation::Disjoint },
    }
}

/// Eventual vanishing behaviour of a coefficient sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailBehavior {
    /// Zero for every `k >= from`.
    Zero { from: u64 },
    /// Nonzero at every index `schedule(j)`, `j >= 1`, all `>= from`.
    NonZero { from: u64, schedule: Affine },
}

fn abs_lower(c: &RingElem) -> Rational {
    match c {
        RingElem::Rational(q) => q.abs(),
        RingElem::Gaussian { re, im } => re.abs().max(im.abs()),
        RingElem::IntMod { .. } => unreachable!("archimedean bound on a modular ring"),
    }
}

fn abs_upper(c: &RingElem) -> Rational {
    match c {
        RingElem::Rational(q) => q.abs(),
        RingElem::Gaussian { re, im } => re.abs() + im.abs(),
        RingElem::IntMod { .. } => unreachable!("archimedean bound on a modular ring"),
    }
}

fn multiplicative_order(p: u64, m: u64) -> u64 {
    if m == 1 {
        return 1;
    }
    let mut x = p % m;
    let mut ord = 1;
    while x != 1 {
        x = ((x as u128 * p as u128) % m as u128) as u64;
        ord += 1;
    }
    ord
}

/// Decides where `k -> sum(k)` vanishes for `k >= start`.
pub fn analyze_coefficients(
    ring: Ring,
    p: Option<Prime>,
    sum: &MonoSum<RingElem>,
    start: u64,
) -> Result<TailBehavior> {
    let start = start.max(1);
    let merged = sum.merged(p)?;
    let all_from = |from: u64| TailBehavior::NonZero {
        from,
        schedule: Affine::new(1, from as i64 - 1),
    };
    if merged.is_empty() {
        return Ok(TailBehavior::Zero { from: start });
    }
    if merged.terms().iter().all(|(_, e)| e.slope == 0) {
        let v = merged.eval(p, start, ring.zero())?;
        return Ok(if v.is_zero() { TailBehavior::Zero { from: start } } else { all_from(start) });
    }
    let p = need_prime(p)?;
    match ring {
        Ring::Rational | Ring::Gaussian => {
            if merged.terms().len() == 1 {
                return Ok(all_from(start));
            }
            // the steepest class dominates in absolute value
            let (top, rest) = merged.terms().split_last().expect("nonempty");
            let lower = abs_lower(&top.0);
            let mut k = start;
            loop {
                let mut bound = Rational::zero();
                for (c, e) in rest {
                    bound += abs_upper(c) * pow_p(p, e.eval(k) - top.1.eval(k));
                }
                if lower > bound {
                    return Ok(all_from(k));
                }
                k += 1;
            }
        }
        Ring::IntMod(m) => {
            let pm = p.get();
            let mut s = 0i64;
            let mut unit_part = m;
            while unit_part % pm == 0 {
                unit_part /= pm;
                s += 1;
            }
            let mut from = start;
            for (_, e) in merged.terms() {
                match e.slope.cmp(&0) {
                    Ordering::Greater => from = from.max(settle_nonneg(e.plus(-s), start).1),
                    Ordering::Less if s > 0 => {
                        return Err(Error::NotInvertible(format!("{p} mod {m}")));
                    }
                    _ => {}
                }
            }
            let period = multiplicative_order(pm, unit_part);
            let mut hits = Vec::new();
            for k in from..from + period {
                if !merged.eval(Some(p), k, ring.zero())?.is_zero() {
                    hits.push(k);
                }
            }
            Ok(match hits.first() {
                None => TailBehavior::Zero { from },
                Some(_) if hits.len() as u64 == period => all_from(from),
                Some(&first) => TailBehavior::NonZero {
                    from,
                    schedule: Affine::new(period as i64, first as i64 - period as i64),
                },
            })
        }
    }
}
