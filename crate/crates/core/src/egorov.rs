//! The quotient layer: negligibility, equality of generalized functions and
//! evaluation at standard and generalized points.
//!
//! Decisions run on the normal form of a family. Past its prefix each term's
//! support is a moving ball whose position relative to any fixed ball, and
//! to the other supports, is eventually constant with a known threshold. A
//! fixed ball `K` is then cut into regions (`K` itself and every support
//! inside it, minus the supports strictly inside that one); the family
//! vanishes on `K` from some index on iff every region is eventually empty
//! or carries an eventually vanishing coefficient sum.

use crate::error::{Error, Result};
use crate::eventual::{
    analyze_coefficients, eventual_distance, eventual_ge, eventual_member, eventual_relation, BallMap, Eventually,
    ExpVal, MonoSum, PointMap, TailBehavior,
};
use crate::generalized::{is_compactly_supported, Certificate, PointFamily, ScalarFamily, Schedule, Verdict};
use crate::numbers::{Ring, RingElem};
use crate::sequences::{Affine, IntegerMap, NormalFamily, SequenceFamily};
use crate::spaces::{Ball, BallRelation, Point, Space};

/// Cells the witness search may visit per unit of `bound`.
const CELLS_PER_BOUND: u64 = 32;

/// An element of the Egorov algebra, held through one representative.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedFunction {
    representative: SequenceFamily,
}

impl GeneralizedFunction {
    pub fn new(representative: SequenceFamily) -> GeneralizedFunction {
        GeneralizedFunction { representative }
    }

    pub fn representative(&self) -> &SequenceFamily {
        &self.representative
    }

    pub fn is_zero(&self, bound: u64) -> Result<Verdict> {
        is_negligible_global(&self.representative, bound)
    }

    pub fn equals(&self, other: &GeneralizedFunction, bound: u64) -> Result<Verdict> {
        gf_equal(self, other, bound)
    }

    pub fn point_value(&self, x: &Point) -> Result<ScalarFamily> {
        point_value(&self.representative, x)
    }

    pub fn eval_at_gpoint(&self, x: &PointFamily) -> Result<ScalarFamily> {
        eval_at_gpoint(&self.representative, x)
    }
}

/// `k -> f_k(x)` in closed form.
pub fn point_value(f: &SequenceFamily, x: &Point) -> Result<ScalarFamily> {
    f.space().check_point(x)?;
    let nf = f.normalize()?;
    evaluate_along(f, &nf, &PointMap::fixed(x), 1, |_| Ok(x.clone()))
}

/// `k -> f_k(x_k)` in closed form, for a compactly supported `X`.
pub fn eval_at_gpoint(f: &SequenceFamily, x: &PointFamily) -> Result<ScalarFamily> {
    if f.space() != x.space() {
        return Err(Error::MixedSpaces);
    }
    if !is_compactly_supported(x)?.is_proved() {
        return Err(Error::NotCompactlySupported);
    }
    let nf = f.normalize()?;
    evaluate_along(f, &nf, x.tail(), x.tail_start(), |k| x.nth(k))
}

fn evaluate_along(
    f: &SequenceFamily,
    nf: &NormalFamily,
    xmap: &PointMap,
    x_start: u64,
    point_at: impl Fn(u64) -> Result<Point>,
) -> Result<ScalarFamily> {
    let space = f.space();
    let start = nf.tail_start().max(x_start);
    let mut s = start;
    let mut sum = MonoSum::empty();
    for t in &nf.terms {
        let m = eventual_member(space, xmap, &t.support, start);
        s = s.max(m.from);
        if m.value {
            sum = sum.add(&t.coeff);
        }
    }
    let prefix = (1..s)
        .map(|k| Ok(f.nth(k)?.evaluate(&point_at(k)?)))
        .collect::<Result<Vec<_>>>()?;
    ScalarFamily::from_sum(f.ring(), space.prime(), prefix, &sum)
}

fn last_nonzero_on(f: &SequenceFamily, ball: &Ball, from: u64) -> Result<u64> {
    let mut n = from;
    while n > 1 && f.nth(n - 1)?.restrict(ball).is_zero() {
        n -= 1;
    }
    Ok(n)
}

/// A region of `K`: the ball `base` minus the `children` supports strictly
/// inside it, carrying the coefficient sum `value`.
struct Region {
    base: BallMap,
    value: MonoSum<RingElem>,
    children: Vec<usize>,
}

/// Decides whether `f_k` vanishes on `K` for all large `k`.
pub fn is_negligible_on(f: &SequenceFamily, k_ball: &Ball, bound: u64) -> Result<Verdict> {
    let space = f.space();
    space.check_point(k_ball.center())?;
    let nf = f.normalize()?;
    if space.is_discrete() {
        return negligible_on_discrete(f, &nf, k_ball);
    }
    let p = space.prime();
    let kmap = BallMap::fixed(k_ball);
    let start = nf.tail_start();
    let mut s = start;
    let mut covering = Vec::new();
    let mut inner = Vec::new();
    for (i, t) in nf.terms.iter().enumerate() {
        let r = eventual_relation(space, &t.support, &kmap, start);
        s = s.max(r.from);
        match r.value {
            BallRelation::Disjoint => {}
            BallRelation::Equal | BallRelation::SecondInsideFirst => covering.push(i),
            BallRelation::FirstInsideSecond => inner.push(i),
        }
    }
    let rel = |i: usize, j: usize| -> BallRelation {
        if i == j {
            return BallRelation::Equal;
        }
        let (a, b) = (i.min(j), i.max(j));
        let r = nf
            .relations
            .iter()
            .find(|(x, y, _)| *x == a && *y == b)
            .map(|t| t.2)
            .expect("normal form relates every pair");
        if i < j {
            r
        } else {
            r.swap()
        }
    };
    let maximal = |cands: Vec<usize>| -> Vec<usize> {
        cands
            .iter()
            .copied()
            .filter(|&c| !cands.iter().any(|&d| rel(c, d) == BallRelation::FirstInsideSecond))
            .collect()
    };
    let covering_sum = covering
        .iter()
        .fold(MonoSum::empty(), |acc: MonoSum<RingElem>, &i| acc.add(&nf.terms[i].coeff));

    let mut regions = vec![Region {
        base: kmap.clone(),
        value: covering_sum.clone(),
        children: maximal(inner.clone()),
    }];
    for &i in &inner {
        let mut value = covering_sum.clone();
        for &j in &inner {
            if matches!(rel(i, j), BallRelation::Equal | BallRelation::FirstInsideSecond) {
                value = value.add(&nf.terms[j].coeff);
            }
        }
        let below = inner
            .iter()
            .copied()
            .filter(|&j| rel(j, i) == BallRelation::FirstInsideSecond)
            .collect();
        regions.push(Region {
            base: nf.terms[i].support.clone(),
            value,
            children: maximal(below),
        });
    }

    let n_dim = space.dim() as i64;
    let mut live = Vec::new();
    for (idx, region) in regions.iter().enumerate() {
        // the region is empty iff the children exhaust the measure of the base
        let mut measure = MonoSum::constant(Ring::Rational.one().neg());
        for &c in &region.children {
            let depth = nf.terms[c].support.radius.sub(region.base.radius);
            let e = Affine::new(-n_dim * depth.slope, -n_dim * depth.offset);
            measure = measure.add(&MonoSum::monomial(Ring::Rational.one(), e));
        }
        let empty = match analyze_coefficients(Ring::Rational, p, &measure, start)? {
            TailBehavior::Zero { from } => {
                s = s.max(from);
                true
            }
            TailBehavior::NonZero { from, .. } => {
                s = s.max(from);
                false
            }
        };
        if empty {
            continue;
        }
        match analyze_coefficients(f.ring(), p, &region.value, start)? {
            TailBehavior::Zero { from } => s = s.max(from),
            TailBehavior::NonZero { from, .. } => {
                s = s.max(from);
                live.push(idx);
            }
        }
    }

    if live.is_empty() {
        return Ok(Verdict::Proved {
            n: last_nonzero_on(f, k_ball, s)?,
            certificate: Certificate::NegligibleOn {
                ball: k_ball.clone(),
                tail_from: s,
                terms_meeting_ball: covering.len() + inner.len(),
                regions_checked: regions.len(),
            },
        });
    }
    for idx in live {
        let region = &regions[idx];
        let children: Vec<&BallMap> = region.children.iter().map(|&c| &nf.terms[c].support).collect();
        let budget = bound.saturating_mul(CELLS_PER_BOUND);
        let Some(w) = find_free_point(space, &region.base, &children, s, budget) else {
            continue;
        };
        let from = s.max(w.from);
        if let TailBehavior::NonZero { schedule, .. } = analyze_coefficients(f.ring(), p, &region.value, from)? {
            let witness = PointFamily::new(space, Vec::new(), w.value)?;
            return Ok(Verdict::Refuted {
                schedule: Schedule::new(IntegerMap::affine(schedule.slope, schedule.offset), Some(witness))?,
            });
        }
    }
    Ok(Verdict::Unknown { checked_up_to: bound })
}

/// Breadth-first search over the sub-balls of `base` for one that eventually
/// misses every ball in `children`; returns its center. Gives up after
/// `budget` cells.
fn find_free_point(
    space: &Space,
    base: &BallMap,
    children: &[&BallMap],
    start: u64,
    budget: u64,
) -> Option<Eventually<PointMap>> {
    let Space::Qp { p, n } = space else {
        return None;
    };
    let pu = p.get() as i64;
    let mut queue = std::collections::VecDeque::from([(base.center.clone(), 0i64, start)]);
    let mut visited = 0;
    while let Some((center, depth, from)) = queue.pop_front() {
        visited += 1;
        if visited > budget {
            return None;
        }
        let cell = BallMap {
            center: center.clone(),
            radius: base.radius.plus(depth),
        };
        let mut from = from;
        let mut mixed = false;
        let mut covered = false;
        for c in children {
            let r = eventual_relation(space, &cell, c, from);
            from = from.max(r.from);
            match r.value {
                BallRelation::Disjoint => {}
                BallRelation::SecondInsideFirst => mixed = true,
                BallRelation::Equal | BallRelation::FirstInsideSecond => {
                    covered = true;
                    break;
                }
            }
        }
        if covered {
            continue;
        }
        if !mixed {
            return Some(Eventually { from, value: center });
        }
        let step = base.radius.plus(depth);
        let total = pu.pow(*n as u32);
        for idx in 0..total {
            let mut rest = idx;
            let mut y = center.clone();
            for i in 0..*n {
                let j = rest % pu;
                rest /= pu;
                if j != 0 {
                    y = y.nudge(i, j, step);
                }
            }
            queue.push_back((y, depth + 1, from));
        }
    }
    None
}

fn negligible_on_discrete(f: &SequenceFamily, nf: &NormalFamily, k_ball: &Ball) -> Result<Verdict> {
    let space = f.space();
    // supports and coefficients of a discrete normal form are constant
    let s = nf.tail_start();
    let fs = nf.nth(s)?.restrict(k_ball);
    if fs.is_zero() {
        return Ok(Verdict::Proved {
            n: last_nonzero_on(f, k_ball, s)?,
            certificate: Certificate::NegligibleOn {
                ball: k_ball.clone(),
                tail_from: s,
                terms_meeting_ball: nf.terms.len(),
                regions_checked: 1,
            },
        });
    }
    let Space::Discrete { points } = space else {
        unreachable!("discrete path")
    };
    let x = points
        .iter()
        .map(|l| Point::Discrete(l.clone()))
        .find(|x| !fs.evaluate(x).is_zero())
        .expect("nonzero function has a nonzero point");
    Ok(Verdict::Refuted {
        schedule: Schedule::new(IntegerMap::affine(1, s as i64 - 1), Some(PointFamily::constant(space, &x)?))?,
    })
}

/// The centered ball on which global negligibility is decided. Past a
/// finite radius every tail support either lies inside it, contains it, or
/// escapes to infinity, so larger balls give the same answer.
pub fn deciding_ball(f: &SequenceFamily) -> Result<Ball> {
    let space = f.space();
    if space.prime().is_none() {
        return Ok(space.ball_unchecked(&space.origin(), 0));
    }
    let nf = f.normalize()?;
    let origin = PointMap::fixed(&space.origin());
    let mut m_star = 0i64;
    for t in &nf.terms {
        let d = eventual_distance(space, &t.support.center, &origin, nf.tail_start());
        let r = t.support.radius;
        let holds_origin = eventual_ge(d.value, r, d.from);
        let from = holds_origin.from;
        if holds_origin.value {
            if r.slope >= 0 {
                m_star = m_star.max(-r.eval(from));
            }
        } else if let ExpVal::Affine(e) = d.value {
            if e.slope >= 0 {
                m_star = m_star.max(-e.eval(from));
            }
        }
    }
    Ok(space.ball_unchecked(&space.origin(), -(m_star + 1)))
}

/// Decides negligibility on every compact set at once.
pub fn is_negligible_global(f: &SequenceFamily, bound: u64) -> Result<Verdict> {
    is_negligible_on(f, &deciding_ball(f)?, bound)
}

pub fn gf_equal(u: &GeneralizedFunction, v: &GeneralizedFunction, bound: u64) -> Result<Verdict> {
    is_negligible_global(&u.representative.difference(&v.representative)?, bound)
}

/// Turns a refutation of negligibility into a compactly supported
/// generalized point at which `f` does not vanish.
pub fn refutation_to_gpoint(f: &SequenceFamily, r: &Verdict) -> Result<PointFamily> {
    let Verdict::Refuted { schedule } = r else {
        return Err(Error::MalformedCertificate("expected a refutation".into()));
    };
    let w = schedule
        .witness_points
        .as_ref()
        .ok_or_else(|| Error::MalformedCertificate("refutation carries no witness points".into()))?;
    if w.space() != f.space() {
        return Err(Error::MixedSpaces);
    }
    let first = schedule.index(1);
    let filler = w.nth(first)?;
    let mut prefix = vec![filler; first as usize - 1];
    for k in first..w.tail_start() {
        prefix.push(w.nth(k)?);
    }
    let x = w.with_prefix(prefix)?;
    if !is_compactly_supported(&x)?.is_proved() {
        return Err(Error::MalformedCertificate("witness points are not compactly supported".into()));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generalized::scalar_is_zero;
    use crate::numbers::{parse_rational, pow_p, Prime, Rational};
    use crate::sequences::MonomialIndicator;

    fn q(s: &str) -> Rational {
        parse_rational(s, None).unwrap()
    }

    fn mono(space: &Space, base: Point, center_exp: Option<IntegerMap>, radius: IntegerMap, coeff_exp: IntegerMap) -> SequenceFamily {
        SequenceFamily::monomial(
            space,
            MonomialIndicator {
                coeff_unit: Ring::Rational.one(),
                coeff_exp,
                center_base: base,
                center_exp,
                radius_exp: radius,
            },
        )
        .unwrap()
    }

    fn bumps(p: u64) -> SequenceFamily {
        let s = Space::qp(p, 1).unwrap();
        mono(&s, Point::qp1(q("1")), Some(IntegerMap::affine(1, 0)), IntegerMap::affine(2, 1), IntegerMap::constant(0))
    }

    fn delta(p: u64) -> SequenceFamily {
        let s = Space::qp(p, 1).unwrap();
        mono(&s, s.origin(), None, IntegerMap::affine(1, 0), IntegerMap::affine(1, 0))
    }

    #[test]
    fn bumps_vanish_pointwise_but_not_on_zp() {
        let f = bumps(3);
        let p = Prime::new(3).unwrap();
        let v = scalar_is_zero(&point_value(&f, &Point::qp1(pow_p(p, 3))).unwrap()).unwrap();
        assert_eq!(v.proved_index(), Some(4));
        let zp = f.space().ball(&f.space().origin(), 0).unwrap();
        let v = is_negligible_on(&f, &zp, 200).unwrap();
        let s = v.schedule().unwrap();
        let w = s.witness_points.as_ref().unwrap();
        for k in s.first(10) {
            assert_eq!(w.nth(k).unwrap(), Point::qp1(pow_p(p, k as i64)));
        }
        assert!(is_negligible_global(&f, 200).unwrap().is_refuted());
    }

    #[test]
    fn delta_values() {
        let d = delta(5);
        let at0 = point_value(&d, &d.space().origin()).unwrap();
        assert_eq!(at0.tail_text(), "p^k");
        let v = scalar_is_zero(&point_value(&d, &Point::qp1(q("5"))).unwrap()).unwrap();
        assert_eq!(v.proved_index(), Some(2));
        let k = d.space().ball(&Point::qp1(q("1")), 1).unwrap();
        assert_eq!(is_negligible_on(&d, &k, 200).unwrap().proved_index(), Some(1));
    }

    #[test]
    fn shrinking_escaping_balls_are_negligible() {
        let s = Space::qp(2, 1).unwrap();
        let f = mono(&s, Point::qp1(q("1")), Some(IntegerMap::affine(-1, 0)), IntegerMap::affine(2, 0), IntegerMap::constant(0));
        assert!(is_negligible_global(&f, 200).unwrap().is_proved());
        // a ball of radius p^(2k) around p^(-k) always holds Z_p
        let g = mono(&s, Point::qp1(q("1")), Some(IntegerMap::affine(-1, 0)), IntegerMap::affine(-2, 0), IntegerMap::constant(0));
        assert!(is_negligible_global(&g, 200).unwrap().is_refuted());
    }

    #[test]
    fn nested_region_needs_search() {
        // chi_{B(0,0)} - chi_{B(0,1)} - chi_{B(1,k)}: lives on B(1,1) minus B(1,k)
        let s = Space::qp(2, 1).unwrap();
        let big = mono(&s, s.origin(), None, IntegerMap::constant(0), IntegerMap::constant(0));
        let half = mono(&s, s.origin(), None, IntegerMap::constant(1), IntegerMap::constant(0));
        let small = mono(&s, Point::qp1(q("1")), None, IntegerMap::affine(1, 1), IntegerMap::constant(0));
        let f = big.difference(&half).unwrap().difference(&small).unwrap();
        let v = is_negligible_global(&f, 200).unwrap();
        let x = refutation_to_gpoint(&f, &v).unwrap();
        assert!(scalar_is_zero(&eval_at_gpoint(&f, &x).unwrap()).unwrap().is_refuted());
        for k in v.schedule().unwrap().first(20) {
            assert!(!f.nth(k).unwrap().evaluate(&x.nth(k).unwrap()).is_zero());
        }
        // covering the whole annulus makes it vanish
        let rest = mono(&s, Point::qp1(q("1")), None, IntegerMap::constant(1), IntegerMap::constant(0));
        let g = big.difference(&half).unwrap().difference(&rest).unwrap();
        assert!(is_negligible_global(&g, 200).unwrap().is_proved());
    }

    #[test]
    fn deep_region_needs_budget() {
        // Ball(0,0) minus the chain Ball(2^j, j+1): only Ball(0,20) is left
        let s = Space::qp(2, 1).unwrap();
        let mut f = mono(&s, s.origin(), None, IntegerMap::constant(0), IntegerMap::constant(0));
        for j in 0..20 {
            let c = Point::qp1(pow_p(Prime::new(2).unwrap(), j));
            f = f.difference(&mono(&s, c, None, IntegerMap::constant(j + 1), IntegerMap::constant(0))).unwrap();
        }
        let k = s.ball(&s.origin(), 0).unwrap();
        assert_eq!(is_negligible_on(&f, &k, 1).unwrap(), Verdict::Unknown { checked_up_to: 1 });
        let v = is_negligible_on(&f, &k, 200).unwrap();
        let w = v.schedule().unwrap().witness_points.clone().unwrap();
        assert!(s.in_ball(&w.nth(1).unwrap(), &s.ball(&s.origin(), 20).unwrap()));
    }

    #[test]
    fn refutation_round_trip_scales() {
        let f = bumps(2);
        let two = f.sum(&f).unwrap();
        let v = is_negligible_global(&two, 200).unwrap();
        let x = refutation_to_gpoint(&two, &v).unwrap();
        let val = eval_at_gpoint(&two, &x).unwrap();
        assert_eq!(val.nth(5).unwrap(), Ring::Rational.from_i64(2));
        assert_eq!(
            refutation_to_gpoint(&two, &Verdict::Unknown { checked_up_to: 1 }),
            Err(Error::MalformedCertificate("expected a refutation".into()))
        );
    }
}
