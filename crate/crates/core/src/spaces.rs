//! Ultrametric spaces: `Q_p^n` under the max-norm and finite discrete spaces.
//!
//! Balls are always clopen and stored with a canonical center, so two balls
//! are equal as sets exactly when they are equal as values. The radius is
//! carried as the exponent `gamma`, radius `p^(-gamma)`.

use std::cmp::Ordering;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numbers::{digit_truncate, format_rational, parse_rational, pow_p, valuation};
use crate::numbers::{Prime, Rational, ValuationExp};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Space {
    Qp { p: Prime, n: usize },
    Discrete { points: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Point {
    Qp(Vec<Rational>),
    Discrete(String),
}

impl Point {
    pub fn qp1(x: Rational) -> Point {
        Point::Qp(vec![x])
    }

    pub fn coords(&self) -> Option<&[Rational]> {
        match self {
            Point::Qp(c) => Some(c),
            Point::Discrete(_) => None,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Qp(c) => {
                let parts: Vec<String> = c.iter().map(format_rational).collect();
                write!(f, "{}", parts.join(","))
            }
            Point::Discrete(l) => write!(f, "{l}"),
        }
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Point::Qp(c) => {
                let parts: Vec<String> = c.iter().map(format_rational).collect();
                parts.serialize(s)
            }
            Point::Discrete(l) => s.serialize_str(l),
        }
    }
}

/// Wire form of a point before it is checked against a space.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointRepr {
    Coords(Vec<String>),
    Label(String),
}

/// A clopen ball `{y : d(center, y) <= p^(-gamma)}` with canonical center.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Ball {
    center: Point,
    gamma: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallRepr {
    pub center: PointRepr,
    pub gamma: i64,
}

impl Ball {
    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn gamma(&self) -> i64 {
        self.gamma
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ball({}, {})", self.center, self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BallRelation {
    Disjoint,
    Equal,
    FirstInsideSecond,
    SecondInsideFirst,
}

impl BallRelation {
    pub fn swap(self) -> BallRelation {
        match self {
            BallRelation::FirstInsideSecond => BallRelation::SecondInsideFirst,
            BallRelation::SecondInsideFirst => BallRelation::FirstInsideSecond,
            r => r,
        }
    }
}

/// Deterministic ordering key: gamma first, then the canonical center
/// coordinates, which are nonnegative rationals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BallKey {
    gamma: i64,
    coords: Vec<Rational>,
    label: usize,
}

impl Space {
    pub fn qp(p: u64, n: usize) -> Result<Space> {
        if n == 0 {
            return Err(Error::PreconditionViolated("dimension must be at least 1".into()));
        }
        Ok(Space::Qp { p: Prime::new(p)?, n })
    }

    pub fn discrete<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Space> {
        let points: Vec<String> = labels.into_iter().map(Into::into).collect();
        if points.is_empty() {
            return Err(Error::PreconditionViolated("discrete space needs a point".into()));
        }
        let mut sorted = points.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != points.len() {
            return Err(Error::PreconditionViolated("duplicate labels".into()));
        }
        Ok(Space::Discrete { points })
    }

    pub fn prime(&self) -> Option<Prime> {
        match self {
            Space::Qp { p, .. } => Some(*p),
            Space::Discrete { .. } => None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Space::Qp { n, .. } => *n,
            Space::Discrete { .. } => 1,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Space::Discrete { .. })
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        match (self, x) {
            (Space::Qp { n, .. }, Point::Qp(c)) if c.len() == *n => Ok(()),
            (Space::Qp { n, .. }, Point::Qp(c)) => Err(Error::DimensionMismatch {
                expected: *n,
                got: c.len(),
            }),
            (Space::Discrete { points }, Point::Discrete(l)) if points.contains(l) => Ok(()),
            (Space::Discrete { .. }, Point::Discrete(l)) => {
                Err(Error::PreconditionViolated(format!("unknown label {l:?}")))
            }
            _ => Err(Error::MixedSpaces),
        }
    }

    pub fn origin(&self) -> Point {
        match self {
            Space::Qp { n, .. } => Point::Qp(vec![Rational::zero(); *n]),
            Space::Discrete { points } => Point::Discrete(points[0].clone()),
        }
    }

    pub fn parse_point(&self, repr: &PointRepr) -> Result<Point> {
        let x = match (self, repr) {
            (Space::Qp { p, .. }, PointRepr::Coords(c)) => Point::Qp(
                c.iter()
                    .map(|s| parse_rational(s, Some(*p)))
                    .collect::<Result<_>>()?,
            ),
            (Space::Qp { p, .. }, PointRepr::Label(s)) => Point::Qp(
                s.split(',')
                    .map(|t| parse_rational(t, Some(*p)))
                    .collect::<Result<_>>()?,
            ),
            (Space::Discrete { .. }, PointRepr::Label(l)) => Point::Discrete(l.clone()),
            (Space::Discrete { .. }, PointRepr::Coords(_)) => return Err(Error::MixedSpaces),
        };
        self.check_point(&x)?;
        Ok(x)
    }

    /// `d(x, y) = p^(-e)`; in a discrete space `e` is 0 for distinct points.
    pub fn distance_exp(&self, x: &Point, y: &Point) -> Result<ValuationExp> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.distance_unchecked(x, y))
    }

    pub(crate) fn distance_unchecked(&self, x: &Point, y: &Point) -> ValuationExp {
        match (self, x, y) {
            (Space::Qp { p, .. }, Point::Qp(a), Point::Qp(b)) => a
                .iter()
                .zip(b)
                .map(|(u, v)| valuation(*p, &(u - v)))
                .min()
                .unwrap_or(ValuationExp::Infinity),
            (_, Point::Discrete(a), Point::Discrete(b)) => {
                if a == b {
                    ValuationExp::Infinity
                } else {
                    ValuationExp::Finite(0)
                }
            }
            _ => unreachable!("points checked against space"),
        }
    }

    /// Builds the ball of exponent `gamma` containing `center`.
    pub fn ball(&self, center: &Point, gamma: i64) -> Result<Ball> {
        self.check_point(center)?;
        Ok(self.ball_unchecked(center, gamma))
    }

    pub(crate) fn ball_unchecked(&self, center: &Point, gamma: i64) -> Ball {
        match (self, center) {
            (Space::Qp { p, .. }, Point::Qp(c)) => Ball {
                center: Point::Qp(c.iter().map(|x| digit_truncate(*p, x, gamma)).collect()),
                gamma,
            },
            (Space::Discrete { points }, Point::Discrete(l)) => {
                if gamma <= 0 || points.len() == 1 {
                    Ball {
                        center: Point::Discrete(points[0].clone()),
                        gamma: 0,
                    }
                } else {
                    Ball {
                        center: Point::Discrete(l.clone()),
                        gamma: 1,
                    }
                }
            }
            _ => unreachable!("points checked against space"),
        }
    }

    pub fn parse_ball(&self, repr: &BallRepr) -> Result<Ball> {
        let c = self.parse_point(&repr.center)?;
        self.ball(&c, repr.gamma)
    }

    pub fn in_ball(&self, x: &Point, b: &Ball) -> bool {
        self.distance_unchecked(x, &b.center) >= ValuationExp::Finite(b.gamma)
    }

    pub fn ball_relation(&self, a: &Ball, b: &Ball) -> BallRelation {
        match a.gamma.cmp(&b.gamma) {
            Ordering::Equal if a.center == b.center => BallRelation::Equal,
            Ordering::Equal => BallRelation::Disjoint,
            Ordering::Greater if self.in_ball(&a.center, b) => BallRelation::FirstInsideSecond,
            Ordering::Less if self.in_ball(&b.center, a) => BallRelation::SecondInsideFirst,
            _ => BallRelation::Disjoint,
        }
    }

    pub fn split_ball(&self, b: &Ball) -> Result<Vec<Ball>> {
        match (self, &b.center) {
            (Space::Qp { p, n }, Point::Qp(c)) => {
                let step = pow_p(*p, b.gamma);
                let pu = p.get() as usize;
                let total = pu.pow(*n as u32);
                let mut out = Vec::with_capacity(total);
                for idx in 0..total {
                    let mut rest = idx;
                    let coords = c
                        .iter()
                        .map(|x| {
                            let j = (rest % pu) as i64;
                            rest /= pu;
                            x + &step * Rational::from_integer(j.into())
                        })
                        .collect();
                    out.push(self.ball_unchecked(&Point::Qp(coords), b.gamma + 1));
                }
                Ok(out)
            }
            (Space::Discrete { points }, _) => {
                if b.gamma >= 1 || points.len() == 1 {
                    return Err(Error::NotSplittable);
                }
                Ok(points
                    .iter()
                    .map(|l| Ball {
                        center: Point::Discrete(l.clone()),
                        gamma: 1,
                    })
                    .collect())
            }
            _ => Err(Error::MixedSpaces),
        }
    }

    /// Smallest ball strictly containing `b`, if any.
    pub fn parent(&self, b: &Ball) -> Option<Ball> {
        match self {
            Space::Qp { .. } => Some(self.ball_unchecked(&b.center, b.gamma - 1)),
            Space::Discrete { points } => {
                if b.gamma >= 1 && points.len() > 1 {
                    Some(self.ball_unchecked(&b.center, 0))
                } else {
                    None
                }
            }
        }
    }

    pub fn child_count(&self) -> usize {
        match self {
            Space::Qp { p, n } => (p.get() as usize).pow(*n as u32),
            Space::Discrete { points } => points.len(),
        }
    }

    pub fn ball_key(&self, b: &Ball) -> BallKey {
        match (self, &b.center) {
            (Space::Qp { .. }, Point::Qp(c)) => BallKey {
                gamma: b.gamma,
                coords: c.clone(),
                label: 0,
            },
            (Space::Discrete { points }, Point::Discrete(l)) => BallKey {
                gamma: b.gamma,
                coords: Vec::new(),
                label: points.iter().position(|x| x == l).unwrap_or(0),
            },
            _ => unreachable!("ball belongs to space"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> Rational {
        parse_rational(s, None).unwrap()
    }

    fn qp(p: u64) -> Space {
        Space::qp(p, 1).unwrap()
    }

    fn pt(s: &str) -> Point {
        Point::qp1(q(s))
    }

    #[test]
    fn distance_examples() {
        let s = Space::qp(5, 2).unwrap();
        let x = Point::Qp(vec![q("5"), q("1")]);
        let y = Point::Qp(vec![q("0"), q("0")]);
        assert_eq!(s.distance_exp(&x, &y).unwrap(), ValuationExp::Finite(0));
        assert_eq!(s.distance_exp(&x, &x).unwrap(), ValuationExp::Infinity);
        assert!(matches!(
            s.distance_exp(&x, &pt("1")),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        let d = Space::discrete(["a", "b"]).unwrap();
        let a = Point::Discrete("a".into());
        let b = Point::Discrete("b".into());
        assert_eq!(d.distance_exp(&a, &b).unwrap(), ValuationExp::Finite(0));
        assert_eq!(d.distance_exp(&a, &a).unwrap(), ValuationExp::Infinity);
    }

    #[test]
    fn split_examples() {
        let s2 = qp(2);
        let kids = s2.split_ball(&s2.ball(&pt("0"), 0).unwrap()).unwrap();
        assert_eq!(
            kids,
            vec![s2.ball(&pt("0"), 1).unwrap(), s2.ball(&pt("1"), 1).unwrap()]
        );
        let s3 = qp(3);
        let kids = s3.split_ball(&s3.ball(&pt("0"), 0).unwrap()).unwrap();
        let centers: Vec<String> = kids.iter().map(|b| b.center().to_string()).collect();
        assert_eq!(centers, ["0", "1", "2"]);
        assert!(kids.iter().all(|b| b.gamma() == 1));
        let s32 = Space::qp(3, 2).unwrap();
        let o = s32.origin();
        assert_eq!(s32.split_ball(&s32.ball(&o, 0).unwrap()).unwrap().len(), 9);
        let d = Space::discrete(["a", "b", "c"]).unwrap();
        let single = d.ball(&Point::Discrete("b".into()), 1).unwrap();
        assert_eq!(d.split_ball(&single), Err(Error::NotSplittable));
        let whole = d.ball(&Point::Discrete("b".into()), -4).unwrap();
        assert_eq!(d.split_ball(&whole).unwrap().len(), 3);
    }

    #[test]
    fn relation_examples() {
        for p in [2u64, 3, 5] {
            let s = qp(p);
            let pi = |i: i64| Point::qp1(pow_p(Prime::new(p).unwrap(), i));
            for i in 1..6 {
                for j in 1..6 {
                    if i == j {
                        continue;
                    }
                    let bi = s.ball(&pi(i), 2 * i + 1).unwrap();
                    let bj = s.ball(&pi(j), 2 * j + 1).unwrap();
                    assert_eq!(s.ball_relation(&bi, &bj), BallRelation::Disjoint);
                    assert!(!s.in_ball(&pi(i), &bj));
                }
            }
        }
        let s = qp(5);
        assert_eq!(
            s.ball_relation(&s.ball(&pt("0"), 2).unwrap(), &s.ball(&pt("0"), 1).unwrap()),
            BallRelation::FirstInsideSecond
        );
        let s2 = qp(2);
        assert_eq!(
            s2.ball_relation(&s2.ball(&pt("1"), 1).unwrap(), &s2.ball(&pt("0"), 1).unwrap()),
            BallRelation::Disjoint
        );
    }

    #[test]
    fn membership_examples() {
        let s = qp(2);
        let b = s.ball(&pt("2"), 3).unwrap();
        assert!(s.in_ball(&pt("10"), &b));
        assert!(s.in_ball(&pt("2"), &b));
        let b = s.ball(&pt("7/3"), -1).unwrap();
        assert!(s.in_ball(&pt("7/3"), &b));
    }

    #[test]
    fn canonical_equality() {
        let s = qp(3);
        assert_eq!(s.ball(&pt("28"), 3).unwrap(), s.ball(&pt("1"), 3).unwrap());
        assert_ne!(s.ball(&pt("2"), 1).unwrap(), s.ball(&pt("1"), 1).unwrap());
        assert_eq!(s.parent(&s.ball(&pt("2"), 1).unwrap()).unwrap(), s.ball(&pt("0"), 0).unwrap());
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (-400i64..400, 1i64..60).prop_map(|(a, b)| Rational::new(a.into(), b.into()))
    }

    proptest! {
        #[test]
        fn ultrametric_inequality(p in prop::sample::select(vec![2u64, 3, 5]),
                                  x in arb_rational(), y in arb_rational(), z in arb_rational()) {
            let s = qp(p);
            let (x, y, z) = (Point::qp1(x), Point::qp1(y), Point::qp1(z));
            let dxz = s.distance_exp(&x, &z).unwrap();
            let dxy = s.distance_exp(&x, &y).unwrap();
            let dyz = s.distance_exp(&y, &z).unwrap();
            // larger exponent means smaller distance
            prop_assert!(dxz >= dxy.min(dyz));
        }

        #[test]
        fn discrete_ultrametric(a in 0usize..4, b in 0usize..4, c in 0usize..4) {
            let s = Space::discrete(["a", "b", "c", "d"]).unwrap();
            let l = |i: usize| Point::Discrete(["a", "b", "c", "d"][i].to_string());
            let dac = s.distance_exp(&l(a), &l(c)).unwrap();
            let dab = s.distance_exp(&l(a), &l(b)).unwrap();
            let dbc = s.distance_exp(&l(b), &l(c)).unwrap();
            prop_assert!(dac >= dab.min(dbc));
        }

        #[test]
        fn split_partitions(p in prop::sample::select(vec![2u64, 3, 5]), c in arb_rational(),
                            gamma in -4i64..4, x in -400i64..400) {
            let s = qp(p);
            let b = s.ball(&Point::qp1(c.clone()), gamma).unwrap();
            let kids = s.split_ball(&b).unwrap();
            for (i, u) in kids.iter().enumerate() {
                for v in &kids[i + 1..] {
                    prop_assert_eq!(s.ball_relation(u, v), BallRelation::Disjoint);
                }
            }
            // shift x into b so the sample is a member
            let member = Point::qp1(&c + Rational::from_integer(x.into()) * pow_p(Prime::new(p).unwrap(), gamma));
            prop_assert!(s.in_ball(&member, &b));
            prop_assert_eq!(kids.iter().filter(|k| s.in_ball(&member, k)).count(), 1);
        }

        #[test]
        fn relation_symmetry(p in prop::sample::select(vec![2u64, 3]), a in arb_rational(), b in arb_rational(),
                             ga in -3i64..4, gb in -3i64..4) {
            let s = qp(p);
            let ba = s.ball(&Point::qp1(a), ga).unwrap();
            let bb = s.ball(&Point::qp1(b), gb).unwrap();
            prop_assert_eq!(s.ball_relation(&ba, &bb), s.ball_relation(&bb, &ba).swap());
        }
    }
}
