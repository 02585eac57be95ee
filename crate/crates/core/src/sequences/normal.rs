use serde::Serialize;

use crate::error::Result;
use crate::eventual::{analyze_coefficients, eventual_relation, BallMap, MonoSum, PointMap, TailBehavior};
use crate::numbers::{Ring, RingElem};
use crate::spaces::{BallRelation, Point, Space};
use crate::step::StepFunction;

use super::{FamilyExpr, SequenceFamily};

/// `k -> coeff(k) * chi_{support(k)}`, valid past the owning family's prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: MonoSum<RingElem>,
    pub support: BallMap,
}

impl Term {
    pub fn at(&self, space: &Space, ring: Ring, k: u64) -> Result<StepFunction> {
        let c = self.coeff.eval(space.prime(), k, ring.zero())?;
        Ok(StepFunction::char_fn(space, &self.support.at(space, k), &c))
    }
}

/// Prefix `f_1..f_T` verbatim, then `f_k = sum of terms at k` for `k > T`.
/// Term supports are pairwise eventually disjoint or strictly nested for
/// `k > T`; equal supports have been merged.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFamily {
    pub space: Space,
    pub ring: Ring,
    pub prefix: Vec<StepFunction>,
    pub terms: Vec<Term>,
    /// `(i, j, relation of term i to term j)` for `i < j`.
    pub relations: Vec<(usize, usize, BallRelation)>,
}

#[derive(Serialize)]
pub struct NormalSummary {
    pub prefix_len: usize,
    pub term_count: usize,
    pub relations: Vec<(usize, usize, BallRelation)>,
}

impl NormalFamily {
    pub fn tail_start(&self) -> u64 {
        self.prefix.len() as u64 + 1
    }

    pub fn nth(&self, k: u64) -> Result<StepFunction> {
        if let Some(f) = self.prefix.get(k as usize - 1) {
            return Ok(f.clone());
        }
        let mut acc = StepFunction::zero(&self.space, self.ring);
        for t in &self.terms {
            acc = acc.add(&t.at(&self.space, self.ring, k)?)?;
        }
        Ok(acc)
    }

    pub fn summary(&self) -> NormalSummary {
        NormalSummary {
            prefix_len: self.prefix.len(),
            term_count: self.terms.len(),
            relations: self.relations.clone(),
        }
    }
}

struct Ctx<'a> {
    space: &'a Space,
    ring: Ring,
}

pub(super) fn normalize(f: &SequenceFamily) -> Result<NormalFamily> {
    let ctx = Ctx {
        space: &f.space,
        ring: f.ring,
    };
    let (t, terms) = ctx.norm(&f.expr)?;
    let (mut t, terms) = ctx.merge_identical(t, terms);
    let mut kept = Vec::new();
    for mut term in terms {
        let settled = term.support.settle(ctx.space, t + 1);
        t = t.max(settled.from - 1);
        term.support = settled.value;
        term.coeff = term.coeff.merged(ctx.space.prime())?;
        match analyze_coefficients(ctx.ring, ctx.space.prime(), &term.coeff, t + 1)? {
            TailBehavior::Zero { from } => t = t.max(from - 1),
            TailBehavior::NonZero { .. } => kept.push(term),
        }
    }
    let terms = kept;
    let mut relations = Vec::new();
    for i in 0..terms.len() {
        for j in i + 1..terms.len() {
            let r = eventual_relation(ctx.space, &terms[i].support, &terms[j].support, t + 1);
            t = t.max(r.from - 1);
            relations.push((i, j, r.value));
        }
    }
    let prefix = (1..=t).map(|k| f.nth(k)).collect::<Result<Vec<_>>>()?;
    Ok(NormalFamily {
        space: f.space.clone(),
        ring: f.ring,
        prefix,
        terms,
        relations,
    })
}

impl Ctx<'_> {
    fn norm(&self, e: &FamilyExpr) -> Result<(u64, Vec<Term>)> {
        match e {
            FamilyExpr::Constant(f) => Ok((
                0,
                f.pieces()
                    .iter()
                    .map(|(b, v)| Term {
                        coeff: MonoSum::constant(v.clone()),
                        support: BallMap::fixed(b),
                    })
                    .collect(),
            )),
            FamilyExpr::ExplicitThen { prefix, tail } => {
                let (t, terms) = self.norm(tail)?;
                Ok((t.max(prefix.len() as u64), terms))
            }
            FamilyExpr::MonomialIndicator(mi) => {
                let mut t = mi.coeff_exp.table_len().max(mi.radius_exp.table_len());
                let center = match (&mi.center_exp, &mi.center_base) {
                    (Some(e), Point::Qp(base)) => {
                        t = t.max(e.table_len());
                        PointMap::scaled(base, e.tail)
                    }
                    (_, c) => PointMap::fixed(c),
                };
                Ok((
                    t,
                    vec![Term {
                        coeff: MonoSum::monomial(mi.coeff_unit.clone(), mi.coeff_exp.tail),
                        support: BallMap {
                            center,
                            radius: mi.radius_exp.tail,
                        },
                    }],
                ))
            }
            FamilyExpr::Neg(a) => {
                let (t, terms) = self.norm(a)?;
                Ok((
                    t,
                    terms
                        .into_iter()
                        .map(|term| Term {
                            coeff: term.coeff.neg(),
                            support: term.support,
                        })
                        .collect(),
                ))
            }
            FamilyExpr::Sum(a, b) => {
                let (ta, mut terms) = self.norm(a)?;
                let (tb, tb_terms) = self.norm(b)?;
                terms.extend(tb_terms);
                Ok(self.merge_identical(ta.max(tb), terms))
            }
            FamilyExpr::Prod(a, b) => {
                let (ta, left) = self.norm(a)?;
                let (tb, right) = self.norm(b)?;
                let mut t = ta.max(tb);
                let start = t + 1;
                let mut terms = Vec::new();
                for x in &left {
                    for y in &right {
                        let r = eventual_relation(self.space, &x.support, &y.support, start);
                        t = t.max(r.from - 1);
                        let support = match r.value {
                            BallRelation::Disjoint => continue,
                            BallRelation::Equal | BallRelation::FirstInsideSecond => x.support.clone(),
                            BallRelation::SecondInsideFirst => y.support.clone(),
                        };
                        let coeff = x.coeff.mul(&y.coeff)?;
                        if !coeff.is_empty() {
                            terms.push(Term { coeff, support });
                        }
                    }
                }
                Ok(self.merge_identical(t, terms))
            }
        }
    }

    fn merge_identical(&self, mut t: u64, mut terms: Vec<Term>) -> (u64, Vec<Term>) {
        'outer: loop {
            for i in 0..terms.len() {
                for j in i + 1..terms.len() {
                    let r = eventual_relation(self.space, &terms[i].support, &terms[j].support, t + 1);
                    if r.value == BallRelation::Equal {
                        t = t.max(r.from - 1);
                        let gone = terms.remove(j);
                        terms[i].coeff = terms[i].coeff.add(&gone.coeff);
                        continue 'outer;
                    }
                }
            }
            return (t, terms);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numbers::Rational;
    use crate::sequences::{IntegerMap, MonomialIndicator};

    fn ball_family(space: &Space, center_exp: Option<IntegerMap>, radius: IntegerMap, coeff_exp: IntegerMap) -> SequenceFamily {
        let base = match center_exp {
            Some(_) => Point::qp1(Rational::from_integer(1.into())),
            None => space.origin(),
        };
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

    fn check_agrees(f: &SequenceFamily, upto: u64) {
        let n = f.normalize().unwrap();
        for k in 1..=upto {
            assert_eq!(n.nth(k).unwrap(), f.nth(k).unwrap(), "k = {k}");
        }
    }

    #[test]
    fn cancellation_empties_tail() {
        let s = Space::qp(5, 1).unwrap();
        let d = ball_family(&s, None, IntegerMap::affine(1, 0), IntegerMap::affine(1, 0));
        let n = d.sum(&d.neg()).unwrap().normalize().unwrap();
        assert!(n.terms.is_empty());
    }

    #[test]
    fn nested_product_keeps_inner_ball() {
        let s = Space::qp(2, 1).unwrap();
        let a = ball_family(&s, None, IntegerMap::affine(1, 0), IntegerMap::constant(0));
        let b = ball_family(&s, None, IntegerMap::affine(2, 0), IntegerMap::constant(0));
        let prod = a.prod(&b).unwrap();
        let n = prod.normalize().unwrap();
        assert_eq!(n.terms.len(), 1);
        assert_eq!(n.terms[0].support.radius, crate::sequences::Affine::new(2, 0));
        for k in 1..=20 {
            assert_eq!(prod.nth(k).unwrap(), b.nth(k).unwrap());
        }
        check_agrees(&prod, 20);
    }

    #[test]
    fn nested_sum_keeps_two_terms() {
        let s = Space::qp(5, 1).unwrap();
        let d = ball_family(&s, None, IntegerMap::affine(1, 0), IntegerMap::affine(1, 0));
        let f = ball_family(&s, None, IntegerMap::affine(1, 1), IntegerMap::affine(1, 0));
        let sum = d.sum(&f).unwrap();
        let n = sum.normalize().unwrap();
        assert_eq!(n.terms.len(), 2);
        assert_eq!(n.relations, vec![(0, 1, BallRelation::SecondInsideFirst)]);
        check_agrees(&sum, 30);
    }

    #[test]
    fn mixed_tables_agree() {
        let s = Space::qp(3, 1).unwrap();
        let a = ball_family(&s, Some(IntegerMap::with_table(vec![4, -1], 1, 0)), IntegerMap::with_table(vec![0], 2, 1), IntegerMap::constant(0));
        let b = ball_family(&s, None, IntegerMap::with_table(vec![5, 5, 5], 1, 0), IntegerMap::with_table(vec![2], 0, 1));
        let f = a.sum(&b).unwrap().prod(&a.neg().sum(&b).unwrap()).unwrap();
        check_agrees(&f, 40);
    }
}
