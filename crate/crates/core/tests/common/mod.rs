//! Shared oracles and generators for the integration tests. The oracles
//! work from first principles (factor counting, direct membership tests)
//! and never call the decision procedures they are used to check.

#![allow(dead_code)]

use egorov::sequences::{FamilyExpr, MonomialIndicator};
use egorov::{IntegerMap, Point, Prime, Rational, Ring, RingElem, SequenceFamily, Space, StepFunction, Verdict};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn prime(p: u64) -> Prime {
    Prime::new(p).unwrap()
}

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Exponent of `p` in `n != 0`: strip `p^(2^j)` for growing `j` while
/// possible, then the remaining powers from the top down.
pub fn int_valuation(p: u64, n: &BigInt) -> i64 {
    let mut n = n.abs();
    let mut pows = vec![BigInt::from(p)];
    let mut v = 0;
    while (&n % pows.last().unwrap()).is_zero() {
        n /= pows.last().unwrap();
        v += 1 << (pows.len() - 1);
        let top = pows.last().unwrap();
        pows.push(top * top);
    }
    while let Some(top) = pows.pop() {
        if (&n % &top).is_zero() {
            n /= &top;
            v += 1 << pows.len();
        }
    }
    v
}

/// `v_p(x)` by counting factors, `None` for zero.
pub fn vp(p: u64, x: &Rational) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    Some(int_valuation(p, x.numer()) - int_valuation(p, x.denom()))
}

/// `p^e` as a rational.
pub fn power(p: u64, e: i64) -> Rational {
    let r = Rational::from_integer(BigInt::from(p).pow(e.unsigned_abs() as u32));
    if e < 0 {
        r.recip()
    } else {
        r
    }
}

/// `v_p(a - b) >= gamma`, computed on unreduced integers.
fn close(p: u64, a: &Rational, b: &Rational, gamma: i64) -> bool {
    let num = a.numer() * b.denom() - b.numer() * a.denom();
    if num.is_zero() {
        return true;
    }
    let need = gamma + int_valuation(p, a.denom()) + int_valuation(p, b.denom());
    need <= 0 || (num % BigInt::from(p).pow(need as u32)).is_zero()
}

/// Membership of `x` in the ball of exponent `gamma` around `c`.
pub fn member(space: &Space, x: &Point, c: &Point, gamma: i64) -> bool {
    match (space, x, c) {
        (Space::Qp { p, .. }, Point::Qp(xs), Point::Qp(cs)) => xs
            .iter()
            .zip(cs)
            .all(|(a, b)| close(p.get(), a, b, gamma)),
        (Space::Discrete { .. }, Point::Discrete(a), Point::Discrete(b)) => gamma <= 0 || a == b,
        _ => panic!("point and space disagree"),
    }
}

/// Value of a step function at `x`, by scanning its pieces.
pub fn step_at(space: &Space, f: &StepFunction, x: &Point) -> RingElem {
    let mut hit = f.ring().zero();
    let mut hits = 0;
    for (b, v) in f.pieces() {
        if member(space, x, b.center(), b.gamma()) {
            hit = v.clone();
            hits += 1;
        }
    }
    assert!(hits <= 1, "pieces overlap at {x}");
    hit
}

fn ring_power(ring: Ring, p: u64, e: i64) -> RingElem {
    ring.from_rational(&power(p, e)).expect("p-power lives in the ring")
}

fn expr_at(space: &Space, ring: Ring, e: &FamilyExpr, k: u64, x: &Point) -> RingElem {
    match e {
        FamilyExpr::Constant(f) => step_at(space, f, x),
        FamilyExpr::ExplicitThen { prefix, tail } => match prefix.get(k as usize - 1) {
            Some(f) => step_at(space, f, x),
            None => expr_at(space, ring, tail, k, x),
        },
        FamilyExpr::MonomialIndicator(mi) => monomial_at(space, ring, mi, k, x),
        FamilyExpr::Sum(a, b) => expr_at(space, ring, a, k, x)
            .add(&expr_at(space, ring, b, k, x))
            .unwrap(),
        FamilyExpr::Prod(a, b) => expr_at(space, ring, a, k, x)
            .mul(&expr_at(space, ring, b, k, x))
            .unwrap(),
        FamilyExpr::Neg(a) => expr_at(space, ring, a, k, x).neg(),
    }
}

fn monomial_at(space: &Space, ring: Ring, mi: &MonomialIndicator, k: u64, x: &Point) -> RingElem {
    let (center, coeff) = match space {
        Space::Qp { p, .. } => {
            let c = match (&mi.center_exp, &mi.center_base) {
                (Some(e), Point::Qp(b)) => Point::Qp(b.iter().map(|v| v * power(p.get(), e.eval(k))).collect()),
                _ => mi.center_base.clone(),
            };
            (c, mi.coeff_unit.mul(&ring_power(ring, p.get(), mi.coeff_exp.eval(k))).unwrap())
        }
        Space::Discrete { .. } => (mi.center_base.clone(), mi.coeff_unit.clone()),
    };
    if member(space, x, &center, mi.radius_exp.eval(k)) {
        coeff
    } else {
        ring.zero()
    }
}

/// `f_k(x)` straight from the expression tree.
pub fn family_at(f: &SequenceFamily, k: u64, x: &Point) -> RingElem {
    expr_at(f.space(), f.ring(), f.expr(), k, x)
}

pub fn mono(
    space: &Space,
    unit: RingElem,
    coeff_exp: IntegerMap,
    base: Point,
    center_exp: Option<IntegerMap>,
    radius: IntegerMap,
) -> SequenceFamily {
    SequenceFamily::monomial(
        space,
        MonomialIndicator {
            coeff_unit: unit,
            coeff_exp,
            center_base: base,
            center_exp,
            radius_exp: radius,
        },
    )
    .unwrap()
}

/// A small nonzero rational with valuation in `[lo, hi]`.
pub fn random_rational(rng: &mut ChaCha8Rng, p: u64, lo: i64, hi: i64) -> Rational {
    let pi = p as i64;
    let mut num = rng.gen_range(1..200i64);
    while num % pi == 0 {
        num += 1;
    }
    let mut den = rng.gen_range(1..30i64);
    while den % pi == 0 {
        den += 1;
    }
    let sign = if rng.gen_bool(0.5) { -1 } else { 1 };
    q(sign * num, den) * power(p, rng.gen_range(lo..=hi))
}

pub fn random_point(rng: &mut ChaCha8Rng, space: &Space, lo: i64, hi: i64) -> Point {
    match space {
        Space::Qp { p, n } => Point::Qp(
            (0..*n)
                .map(|_| {
                    if rng.gen_ratio(1, 8) {
                        Rational::zero()
                    } else {
                        random_rational(rng, p.get(), lo, hi)
                    }
                })
                .collect(),
        ),
        Space::Discrete { points } => Point::Discrete(points[rng.gen_range(0..points.len())].clone()),
    }
}

pub fn random_elem(rng: &mut ChaCha8Rng, ring: Ring, p: Option<u64>) -> RingElem {
    loop {
        let e = match ring {
            Ring::Rational => ring.from_rational(&q(rng.gen_range(-9..=9), rng.gen_range(1..=4))).unwrap(),
            Ring::Gaussian => {
                let re = ring.from_i64(rng.gen_range(-4..=4));
                let im = ring.from_rational(&q(rng.gen_range(-4..=4), 1)).unwrap();
                let i = RingElem::Gaussian {
                    re: Rational::zero(),
                    im: Rational::one(),
                };
                re.add(&im.mul(&i).unwrap()).unwrap()
            }
            Ring::IntMod(m) => ring.from_i64(rng.gen_range(0..m as i64)),
        };
        // monomial units must not be divisible by p in the modular ring
        let unit_ok = match (&e, p) {
            (RingElem::IntMod { residue, .. }, Some(p)) => residue % p != 0,
            _ => true,
        };
        if !e.is_zero() && unit_ok {
            return e;
        }
    }
}

/// Disjoint random pieces, at most `max` of them, radii in `[-5, 5]`.
pub fn random_step(rng: &mut ChaCha8Rng, space: &Space, ring: Ring, max: usize) -> StepFunction {
    let mut pieces: Vec<(egorov::Ball, RingElem)> = Vec::new();
    let count = rng.gen_range(0..=max);
    for _ in 0..count * 3 {
        if pieces.len() == count {
            break;
        }
        let gamma = rng.gen_range(-5..=5);
        let c = random_point(rng, space, gamma - 3, gamma + 2);
        let b = space.ball(&c, gamma).unwrap();
        if pieces
            .iter()
            .all(|(o, _)| space.ball_relation(o, &b) == egorov::BallRelation::Disjoint)
        {
            pieces.push((b, random_elem(rng, ring, None)));
        }
    }
    StepFunction::from_pieces(space, ring, pieces).unwrap()
}

fn random_affine(rng: &mut ChaCha8Rng, slopes: std::ops::RangeInclusive<i64>, offsets: std::ops::RangeInclusive<i64>) -> IntegerMap {
    IntegerMap::affine(rng.gen_range(slopes), rng.gen_range(offsets))
}

/// One building block of a p-adic family. Several shapes are eventually
/// zero on every compact set, so combinations land on both sides.
pub fn random_atom(rng: &mut ChaCha8Rng, space: &Space, ring: Ring) -> SequenceFamily {
    let p = space.prime().unwrap().get();
    let modular = matches!(ring, Ring::IntMod(_));
    let coeff = |rng: &mut ChaCha8Rng| {
        if modular {
            random_affine(rng, 0..=1, 0..=1)
        } else {
            random_affine(rng, -1..=1, -1..=1)
        }
    };
    let unit = random_elem(rng, ring, Some(p));
    let base = random_point(rng, space, -1, 1);
    match rng.gen_range(0..6) {
        // a bump approaching a point of its base line
        0 => {
            let slope = rng.gen_range(0..=2);
            let off = rng.gen_range(-2..=2);
            let c = coeff(rng);
            mono(
                space,
                unit,
                c,
                base,
                Some(IntegerMap::affine(slope, off)),
                random_affine(rng, slope..=slope + 2, -1..=3),
            )
        }
        // a fixed ball
        1 => {
            let c = coeff(rng);
            mono(space, unit, c, base, None, IntegerMap::constant(rng.gen_range(-2..=3)))
        }
        // a bump escaping to infinity
        2 => {
            let c = coeff(rng);
            mono(
                space,
                unit,
                c,
                base,
                Some(random_affine(rng, -2..=-1, -1..=1)),
                random_affine(rng, 0..=1, 0..=2),
            )
        }
        // a family minus a copy with a different prefix
        3 => {
            let inner = random_atom(rng, space, ring);
            let len = rng.gen_range(1..=3);
            let prefix = (0..len).map(|_| random_step(rng, space, ring, 2)).collect();
            let copy = SequenceFamily::explicit_then(prefix, inner.clone()).unwrap();
            inner.difference(&copy).unwrap()
        }
        // two bumps that separate
        4 => {
            let c = coeff(rng);
            let a = mono(
                space,
                unit.clone(),
                c.clone(),
                base.clone(),
                Some(IntegerMap::affine(1, 0)),
                IntegerMap::affine(2, 1),
            );
            let b = mono(space, unit, c, base, Some(IntegerMap::affine(1, 1)), IntegerMap::affine(2, 3));
            a.prod(&b).unwrap()
        }
        // a shrinking ball with a decaying coefficient
        _ => {
            let e = if modular { IntegerMap::affine(1, 0) } else { random_affine(rng, 1..=2, -1..=0) };
            mono(space, unit, e, base, None, random_affine(rng, 0..=1, 0..=2))
        }
    }
}

/// A sum or product of up to three atoms, sometimes behind a prefix.
pub fn random_family(rng: &mut ChaCha8Rng, space: &Space, ring: Ring) -> SequenceFamily {
    let mut f = random_atom(rng, space, ring);
    for _ in 0..rng.gen_range(0..=2) {
        let g = random_atom(rng, space, ring);
        f = match rng.gen_range(0..4) {
            0 => f.prod(&g).unwrap(),
            1 => f.difference(&g).unwrap(),
            _ => f.sum(&g).unwrap(),
        };
    }
    if rng.gen_ratio(1, 4) {
        let len = rng.gen_range(1..=3);
        let prefix = (0..len).map(|_| random_step(rng, space, ring, 3)).collect();
        f = SequenceFamily::explicit_then(prefix, f).unwrap();
    }
    f
}

/// A compactly supported generalized point.
pub fn random_compact_gpoint(rng: &mut ChaCha8Rng, space: &Space) -> egorov::PointFamily {
    use egorov::eventual::{MonoSum, PointMap};
    use egorov::sequences::Affine;
    let p = space.prime().unwrap().get();
    let n = space.dim();
    let x = match rng.gen_range(0..3) {
        0 => egorov::PointFamily::constant(space, &random_point(rng, space, -2, 3)).unwrap(),
        1 => {
            let base = random_point(rng, space, -1, 1);
            let exp = Affine::new(rng.gen_range(0..=2), rng.gen_range(-2..=2));
            egorov::PointFamily::monomial(space, &base, exp).unwrap()
        }
        _ => {
            let coords = (0..n)
                .map(|_| {
                    let a = MonoSum::constant(random_rational(rng, p, -1, 2));
                    let b = MonoSum::monomial(random_rational(rng, p, 0, 1), Affine::new(rng.gen_range(1..=2), 0));
                    a.add(&b)
                })
                .collect();
            egorov::PointFamily::new(space, Vec::new(), PointMap::Qp(coords)).unwrap()
        }
    };
    if rng.gen_ratio(1, 3) {
        let junk = (0..rng.gen_range(1..=3))
            .map(|_| random_point(rng, space, -20, 0))
            .collect();
        x.with_prefix(junk).unwrap()
    } else {
        x
    }
}

type Check = Box<dyn Fn(u64) -> bool>;

/// Every verdict issued during a run, with a way to re-check it by hand.
#[derive(Default)]
pub struct Ledger {
    proved: Vec<(String, u64, Check)>,
    refuted: Vec<(String, Vec<u64>, Check)>,
}

impl Ledger {
    /// Records a verdict about the scalar sequence `value(k)` vanishing.
    pub fn scalar(&mut self, label: impl Into<String>, v: &Verdict, value: impl Fn(u64) -> RingElem + 'static) {
        let value = std::rc::Rc::new(value);
        match v {
            Verdict::Proved { n, .. } => {
                let value = value.clone();
                self.proved.push((label.into(), *n, Box::new(move |k| value(k).is_zero())));
            }
            Verdict::Refuted { schedule } => {
                self.refuted
                    .push((label.into(), schedule.first(50), Box::new(move |k| !value(k).is_zero())));
            }
            Verdict::Unknown { .. } => {}
        }
    }

    /// Records a negligibility verdict for `f` on `ball`.
    pub fn negligible(&mut self, label: impl Into<String>, f: &SequenceFamily, ball: &egorov::Ball, v: &Verdict) {
        let label = label.into();
        match v {
            Verdict::Proved { n, .. } => {
                let (f, ball) = (f.clone(), ball.clone());
                self.proved
                    .push((label, *n, Box::new(move |k| f.nth(k).unwrap().restrict(&ball).is_zero())));
            }
            Verdict::Refuted { schedule } => {
                let w = schedule.witness_points.clone().expect("negligibility refutations carry witnesses");
                let idx = schedule.first(50);
                let (f, ball) = (f.clone(), ball.clone());
                let space = f.space().clone();
                // the j-th witness belongs to the j-th scheduled index
                let pairs: Vec<(u64, Point)> = idx.iter().map(|&k| (k, w.nth(k).unwrap())).collect();
                self.refuted.push((
                    label,
                    idx,
                    Box::new(move |k| {
                        let x = &pairs.iter().find(|(i, _)| *i == k).unwrap().1;
                        member(&space, x, ball.center(), ball.gamma()) && !family_at(&f, k, x).is_zero()
                    }),
                ));
            }
            Verdict::Unknown { .. } => {}
        }
    }

    pub fn len(&self) -> (usize, usize) {
        (self.proved.len(), self.refuted.len())
    }

    /// Re-checks every proof on `[N, N+200]` and every refutation on its
    /// first 50 scheduled indices; returns the failures.
    pub fn verify(&self) -> Vec<String> {
        let mut bad = Vec::new();
        for (label, n, check) in &self.proved {
            if let Some(k) = (*n..=n + 200).find(|&k| !check(k)) {
                bad.push(format!("{label}: proved from {n} but nonzero at {k}"));
            }
        }
        for (label, idx, check) in &self.refuted {
            if let Some(k) = idx.iter().find(|&&k| !check(k)) {
                bad.push(format!("{label}: refutation fails at {k}"));
            }
        }
        bad
    }
}

/// `p^i` for `i` in `0..=20` and `0`, then random rationals.
pub fn sample_points(rng: &mut ChaCha8Rng, p: u64, count: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero()];
    out.extend((0..=20).map(|i| power(p, i)));
    while out.len() < count {
        out.push(random_rational(rng, p, -5, 30));
    }
    out.truncate(count);
    out
}
