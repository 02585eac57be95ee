use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventual::{eventual_distance, eventual_valuation, ExpVal, MonoSum, PointMap};
use crate::numbers::{format_rational, parse_rational, valuation, Rational};
use crate::sequences::Affine;
use crate::spaces::{Point, PointRepr, Space};

use super::{Certificate, Schedule, Verdict};
use crate::sequences::IntegerMap;

/// A representative `(x_k)_k` of a generalized point: explicit points for
/// `k <= prefix.len()`, a symbolic tail afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFamily {
    space: Space,
    prefix: Vec<Point>,
    tail: PointMap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoordTerm {
    pub unit: String,
    pub exp: Affine,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointTailRepr {
    ConstantPoint { point: PointRepr },
    /// `base * p^(exp(k))` coordinatewise.
    MonomialPoint { base: PointRepr, exp: Affine },
    /// Each coordinate a sum of `unit * p^(exp(k))`.
    Sum { coords: Vec<Vec<CoordTerm>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointFamilyRepr {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prefix: Vec<PointRepr>,
    pub tail: PointTailRepr,
}

fn coords_repr(c: &[Rational]) -> PointRepr {
    PointRepr::Coords(c.iter().map(format_rational).collect())
}

impl PointFamily {
    pub fn new(space: &Space, prefix: Vec<Point>, tail: PointMap) -> Result<PointFamily> {
        for x in &prefix {
            space.check_point(x)?;
        }
        match (&tail, space) {
            (PointMap::Qp(c), Space::Qp { n, .. }) if c.len() != *n => {
                return Err(Error::DimensionMismatch { expected: *n, got: c.len() });
            }
            (PointMap::Qp(_), Space::Qp { .. }) => {}
            (PointMap::Label(l), _) => space.check_point(&Point::Discrete(l.clone()))?,
            _ => return Err(Error::MixedSpaces),
        }
        Ok(PointFamily {
            space: space.clone(),
            prefix,
            tail,
        })
    }

    pub fn constant(space: &Space, x: &Point) -> Result<PointFamily> {
        PointFamily::new(space, Vec::new(), PointMap::fixed(x))
    }

    /// `k -> base * p^(a k + b)`.
    pub fn monomial(space: &Space, base: &Point, exp: Affine) -> Result<PointFamily> {
        space.check_point(base)?;
        match base {
            Point::Qp(c) => PointFamily::new(space, Vec::new(), PointMap::scaled(c, exp)),
            Point::Discrete(_) => Err(Error::NotSupported("p-power scaling on a discrete space".into())),
        }
    }

    pub fn with_prefix(&self, prefix: Vec<Point>) -> Result<PointFamily> {
        PointFamily::new(&self.space, prefix, self.tail.clone())
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn prefix(&self) -> &[Point] {
        &self.prefix
    }

    pub fn tail(&self) -> &PointMap {
        &self.tail
    }

    /// First index at which the symbolic tail applies.
    pub fn tail_start(&self) -> u64 {
        self.prefix.len() as u64 + 1
    }

    pub fn nth(&self, k: u64) -> Result<Point> {
        if k == 0 {
            return Err(Error::IndexZero);
        }
        Ok(match self.prefix.get(k as usize - 1) {
            Some(x) => x.clone(),
            None => self.tail.at(self.space.prime(), k),
        })
    }

    pub fn from_repr(space: &Space, r: &PointFamilyRepr) -> Result<PointFamily> {
        let prefix = r.prefix.iter().map(|x| space.parse_point(x)).collect::<Result<Vec<_>>>()?;
        let tail = match &r.tail {
            PointTailRepr::ConstantPoint { point } => PointMap::fixed(&space.parse_point(point)?),
            PointTailRepr::MonomialPoint { base, exp } => match space.parse_point(base)? {
                Point::Qp(c) => PointMap::scaled(&c, *exp),
                Point::Discrete(_) => return Err(Error::NotSupported("p-power scaling on a discrete space".into())),
            },
            PointTailRepr::Sum { coords } => {
                let p = space.prime().ok_or(Error::MixedSpaces)?;
                let mut out = Vec::with_capacity(coords.len());
                for terms in coords {
                    let mut s = MonoSum::empty();
                    for t in terms {
                        s = s.add(&MonoSum::monomial(parse_rational(&t.unit, Some(p))?, t.exp));
                    }
                    out.push(s);
                }
                PointMap::Qp(out)
            }
        };
        PointFamily::new(space, prefix, tail)
    }

    pub fn to_repr(&self) -> PointFamilyRepr {
        let prefix = self
            .prefix
            .iter()
            .map(|x| match x {
                Point::Qp(c) => coords_repr(c),
                Point::Discrete(l) => PointRepr::Label(l.clone()),
            })
            .collect();
        let tail = match &self.tail {
            PointMap::Label(l) => PointTailRepr::ConstantPoint {
                point: PointRepr::Label(l.clone()),
            },
            PointMap::Qp(c) => tail_repr(c),
        };
        PointFamilyRepr { prefix, tail }
    }
}

fn tail_repr(c: &[MonoSum<Rational>]) -> PointTailRepr {
    let shapes: Vec<Option<(Rational, Affine)>> = c
        .iter()
        .map(|s| match s.terms() {
            [] => Some((Rational::zero(), Affine::ZERO)),
            [(u, e)] => Some((u.clone(), *e)),
            _ => None,
        })
        .collect();
    if shapes.iter().all(|s| matches!(s, Some((_, e)) if *e == Affine::ZERO)) {
        let point: Vec<Rational> = shapes.into_iter().map(|s| s.expect("checked").0).collect();
        return PointTailRepr::ConstantPoint { point: coords_repr(&point) };
    }
    let exps: Vec<Affine> = shapes
        .iter()
        .flatten()
        .filter(|(u, _)| !u.is_zero())
        .map(|(_, e)| *e)
        .collect();
    if shapes.iter().all(Option::is_some) && exps.windows(2).all(|w| w[0] == w[1]) {
        let base: Vec<Rational> = shapes.into_iter().map(|s| s.expect("checked").0).collect();
        return PointTailRepr::MonomialPoint {
            base: coords_repr(&base),
            exp: exps[0],
        };
    }
    PointTailRepr::Sum {
        coords: c
            .iter()
            .map(|s| {
                s.terms()
                    .iter()
                    .map(|(u, e)| CoordTerm {
                        unit: format_rational(u),
                        exp: *e,
                    })
                    .collect()
            })
            .collect(),
    }
}

impl Serialize for PointFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_repr().serialize(s)
    }
}

/// Decides eventual equality `X ~ Y`.
pub fn gpoint_equiv(x: &PointFamily, y: &PointFamily) -> Result<Verdict> {
    if x.space != y.space {
        return Err(Error::MixedSpaces);
    }
    let start = x.tail_start().max(y.tail_start());
    let d = eventual_distance(&x.space, &x.tail, &y.tail, start);
    match d.value {
        ExpVal::Infinity => {
            let mut n = d.from;
            while n > 1 && x.nth(n - 1)? == y.nth(n - 1)? {
                n -= 1;
            }
            Ok(Verdict::Proved {
                n,
                certificate: Certificate::PointsEqual { tail_equal_from: d.from },
            })
        }
        ExpVal::Affine(_) => Ok(Verdict::Refuted {
            schedule: Schedule::new(IntegerMap::affine(1, d.from as i64 - 1), None)?,
        }),
    }
}

/// Proves that the family stays in one ball, or refutes it with the indices
/// from which some coordinate's norm grows without bound.
pub fn is_compactly_supported(x: &PointFamily) -> Result<Verdict> {
    let space = &x.space;
    let Some(p) = space.prime() else {
        let ball = space.ball_unchecked(&space.origin(), 0);
        return Ok(Verdict::Proved {
            n: 1,
            certificate: Certificate::Contained { ball },
        });
    };
    let PointMap::Qp(coords) = &x.tail else {
        unreachable!("qp family has a coordinate tail")
    };
    let start = x.tail_start();
    let mut from = start;
    let mut vals = Vec::new();
    for c in coords {
        let e = eventual_valuation(p, c, start);
        from = from.max(e.from);
        vals.push(e.value);
    }
    let mut gamma = 0i64;
    for v in vals {
        if let ExpVal::Affine(a) = v {
            if a.slope < 0 {
                return Ok(Verdict::Refuted {
                    schedule: Schedule::new(IntegerMap::affine(1, from as i64 - 1), Some(x.clone()))?,
                });
            }
            // non-decreasing from `from` on, so the minimum sits there
            gamma = gamma.min(a.eval(from));
        }
    }
    for k in 1..from {
        if let Point::Qp(c) = x.nth(k)? {
            for v in &c {
                if let Some(e) = valuation(p, v).finite() {
                    gamma = gamma.min(e);
                }
            }
        }
    }
    Ok(Verdict::Proved {
        n: 1,
        certificate: Certificate::Contained {
            ball: space.ball_unchecked(&space.origin(), gamma),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        parse_rational(s, None).unwrap()
    }

    #[test]
    fn x0_is_compact() {
        let s = Space::qp(3, 1).unwrap();
        let x0 = PointFamily::monomial(&s, &Point::qp1(q("1")), Affine::new(1, 0)).unwrap();
        assert_eq!(x0.nth(3).unwrap(), Point::qp1(q("27")));
        let v = is_compactly_supported(&x0).unwrap();
        let Verdict::Proved { n: 1, certificate: Certificate::Contained { ball } } = v else { panic!("{v:?}") };
        assert_eq!(ball, s.ball(&s.origin(), 0).unwrap());
        let escaping = PointFamily::monomial(&s, &Point::qp1(q("1")), Affine::new(-1, 0)).unwrap();
        assert!(is_compactly_supported(&escaping).unwrap().is_refuted());
        let seven = PointFamily::constant(&s, &Point::qp1(q("7"))).unwrap();
        let v = is_compactly_supported(&seven).unwrap();
        assert!(matches!(v, Verdict::Proved { certificate: Certificate::Contained { ball }, .. }
            if s.in_ball(&Point::qp1(q("7")), &ball) && ball.gamma() == 0));
    }

    #[test]
    fn equivalence_examples() {
        let s = Space::qp(2, 1).unwrap();
        let x0 = PointFamily::monomial(&s, &Point::qp1(q("1")), Affine::new(1, 0)).unwrap();
        let zero = PointFamily::constant(&s, &s.origin()).unwrap();
        assert!(gpoint_equiv(&x0, &zero).unwrap().is_refuted());
        assert_eq!(gpoint_equiv(&x0, &x0).unwrap().proved_index(), Some(1));
        let bumped = x0.with_prefix(vec![Point::qp1(q("5")), Point::qp1(q("4"))]).unwrap();
        assert_eq!(gpoint_equiv(&x0, &bumped).unwrap().proved_index(), Some(2));
    }

    #[test]
    fn repr_round_trip() {
        let s = Space::qp(5, 2).unwrap();
        let sum = PointMap::Qp(vec![
            MonoSum::monomial(q("1"), Affine::new(1, 0)).add(&MonoSum::constant(q("3"))),
            MonoSum::monomial(q("2"), Affine::new(2, 1)),
        ]);
        for tail in [sum, PointMap::scaled(&[q("1"), q("-2")], Affine::new(1, 0)), PointMap::fixed(&s.origin())] {
            let f = PointFamily::new(&s, vec![Point::Qp(vec![q("1/5"), q("0")])], tail).unwrap();
            let text = serde_json::to_string(&f).unwrap();
            let back: PointFamilyRepr = serde_json::from_str(&text).unwrap();
            let g = PointFamily::from_repr(&s, &back).unwrap();
            for k in 1..8 {
                assert_eq!(f.nth(k).unwrap(), g.nth(k).unwrap());
            }
        }
    }
}
