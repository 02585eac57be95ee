//! Symbolic sequences `k -> StepFunction`, representatives of elements of
//! the Egorov algebra. Indices start at `k = 1`.

pub mod integer_map;
mod normal;
mod repr;

pub use integer_map::{Affine, IntegerMap, PhiViolation};
pub use normal::{NormalFamily, Term};
pub use repr::{CenterRepr, CoeffRepr, FamilyDoc, FamilyRepr};

use crate::error::{Error, Result};
use crate::numbers::{Rational, Ring, RingElem};
use crate::spaces::{Point, Space};
use crate::step::StepFunction;

/// `k -> (unit * p^coeff_exp(k)) * chi_{Ball(center(k), radius_exp(k))}` where
/// `center(k) = center_base * p^center_exp(k)`, or `center_base` when
/// `center_exp` is `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialIndicator {
    pub coeff_unit: RingElem,
    pub coeff_exp: IntegerMap,
    pub center_base: Point,
    pub center_exp: Option<IntegerMap>,
    pub radius_exp: IntegerMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyExpr {
    Constant(StepFunction),
    ExplicitThen {
        prefix: Vec<StepFunction>,
        tail: Box<FamilyExpr>,
    },
    MonomialIndicator(MonomialIndicator),
    Sum(Box<FamilyExpr>, Box<FamilyExpr>),
    Prod(Box<FamilyExpr>, Box<FamilyExpr>),
    Neg(Box<FamilyExpr>),
}

/// A representative `(f_k)_k` over a fixed space and ring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceFamily {
    space: Space,
    ring: Ring,
    expr: FamilyExpr,
}

impl SequenceFamily {
    pub fn constant(f: StepFunction) -> SequenceFamily {
        SequenceFamily {
            space: f.space().clone(),
            ring: f.ring(),
            expr: FamilyExpr::Constant(f),
        }
    }

    pub fn zero(space: &Space, ring: Ring) -> SequenceFamily {
        SequenceFamily::constant(StepFunction::zero(space, ring))
    }

    pub fn monomial(space: &Space, mi: MonomialIndicator) -> Result<SequenceFamily> {
        if mi.coeff_unit.is_zero() {
            return Err(Error::PreconditionViolated("monomial coefficient unit is zero".into()));
        }
        space.check_point(&mi.center_base)?;
        if space.is_discrete() && (mi.center_exp.is_some() || !mi.coeff_exp.is_zero_map()) {
            return Err(Error::NotSupported(
                "p-power scaling on a discrete space".into(),
            ));
        }
        Ok(SequenceFamily {
            space: space.clone(),
            ring: mi.coeff_unit.ring().check()?,
            expr: FamilyExpr::MonomialIndicator(mi),
        })
    }

    /// `f_k = prefix[k-1]` for `k <= prefix.len()`, `tail_k` afterwards
    /// (the tail is not re-indexed).
    pub fn explicit_then(prefix: Vec<StepFunction>, tail: SequenceFamily) -> Result<SequenceFamily> {
        for f in &prefix {
            if f.space() != &tail.space {
                return Err(Error::MixedSpaces);
            }
            if f.ring() != tail.ring {
                return Err(Error::MixedRings);
            }
        }
        Ok(SequenceFamily {
            expr: FamilyExpr::ExplicitThen {
                prefix,
                tail: Box::new(tail.expr),
            },
            ..tail
        })
    }

    fn check_same(&self, o: &SequenceFamily) -> Result<()> {
        if self.space != o.space {
            return Err(Error::MixedSpaces);
        }
        if self.ring != o.ring {
            return Err(Error::MixedRings);
        }
        Ok(())
    }

    pub fn sum(&self, o: &SequenceFamily) -> Result<SequenceFamily> {
        self.check_same(o)?;
        Ok(SequenceFamily {
            space: self.space.clone(),
            ring: self.ring,
            expr: FamilyExpr::Sum(Box::new(self.expr.clone()), Box::new(o.expr.clone())),
        })
    }

    pub fn prod(&self, o: &SequenceFamily) -> Result<SequenceFamily> {
        self.check_same(o)?;
        Ok(SequenceFamily {
            space: self.space.clone(),
            ring: self.ring,
            expr: FamilyExpr::Prod(Box::new(self.expr.clone()), Box::new(o.expr.clone())),
        })
    }

    pub fn neg(&self) -> SequenceFamily {
        SequenceFamily {
            space: self.space.clone(),
            ring: self.ring,
            expr: FamilyExpr::Neg(Box::new(self.expr.clone())),
        }
    }

    pub fn difference(&self, o: &SequenceFamily) -> Result<SequenceFamily> {
        self.sum(&o.neg())
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn expr(&self) -> &FamilyExpr {
        &self.expr
    }

    /// The exact `k`-th term.
    pub fn nth(&self, k: u64) -> Result<StepFunction> {
        if k == 0 {
            return Err(Error::IndexZero);
        }
        self.eval_expr(&self.expr, k)
    }

    fn eval_expr(&self, e: &FamilyExpr, k: u64) -> Result<StepFunction> {
        match e {
            FamilyExpr::Constant(f) => Ok(f.clone()),
            FamilyExpr::ExplicitThen { prefix, tail } => match prefix.get(k as usize - 1) {
                Some(f) => Ok(f.clone()),
                None => self.eval_expr(tail, k),
            },
            FamilyExpr::MonomialIndicator(mi) => self.monomial_term(mi, k),
            FamilyExpr::Sum(a, b) => self.eval_expr(a, k)?.add(&self.eval_expr(b, k)?),
            FamilyExpr::Prod(a, b) => self.eval_expr(a, k)?.mul(&self.eval_expr(b, k)?),
            FamilyExpr::Neg(a) => Ok(self.eval_expr(a, k)?.neg()),
        }
    }

    fn monomial_term(&self, mi: &MonomialIndicator, k: u64) -> Result<StepFunction> {
        let coeff = match self.space.prime() {
            Some(p) => mi.coeff_unit.mul(&self.ring.pow_p(p, mi.coeff_exp.eval(k))?)?,
            None => mi.coeff_unit.clone(),
        };
        let center = match (&mi.center_exp, &mi.center_base, self.space.prime()) {
            (Some(e), Point::Qp(base), Some(p)) => {
                let scale = crate::numbers::pow_p(p, e.eval(k));
                Point::Qp(base.iter().map(|b| b * &scale).collect::<Vec<Rational>>())
            }
            _ => mi.center_base.clone(),
        };
        let ball = self.space.ball_unchecked(&center, mi.radius_exp.eval(k));
        Ok(StepFunction::char_fn(&self.space, &ball, &coeff))
    }

    /// Rewrites the family as an explicit prefix followed by pairwise
    /// eventually disjoint or nested indicator terms.
    pub fn normalize(&self) -> Result<NormalFamily> {
        normal::normalize(self)
    }
}
