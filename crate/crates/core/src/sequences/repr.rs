use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numbers::{format_rational, Ring};
use crate::spaces::{Ball, BallRepr, Point, PointRepr, Space};
use crate::step::{PieceRepr, StepFunction, StepFunctionRepr};

use super::{FamilyExpr, IntegerMap, MonomialIndicator, SequenceFamily};

/// Family file: space and ring plus the tagged AST.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyDoc {
    pub space: Space,
    pub ring: Ring,
    pub family: FamilyRepr,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyRepr {
    Constant {
        #[serde(default)]
        pieces: Vec<PieceRepr>,
    },
    ExplicitThen {
        prefix: Vec<Vec<PieceRepr>>,
        tail: Box<FamilyRepr>,
    },
    MonomialIndicator {
        coeff: CoeffRepr,
        center: CenterRepr,
        radius_exp: IntegerMap,
    },
    Sum {
        left: Box<FamilyRepr>,
        right: Box<FamilyRepr>,
    },
    Prod {
        left: Box<FamilyRepr>,
        right: Box<FamilyRepr>,
    },
    Neg {
        arg: Box<FamilyRepr>,
    },
}

fn zero_map() -> IntegerMap {
    IntegerMap::constant(0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoeffRepr {
    pub unit: String,
    #[serde(default = "zero_map")]
    pub exp: IntegerMap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CenterRepr {
    pub base: PointRepr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exp: Option<IntegerMap>,
}

pub(crate) fn point_repr(x: &Point) -> PointRepr {
    match x {
        Point::Qp(c) => PointRepr::Coords(c.iter().map(format_rational).collect()),
        Point::Discrete(l) => PointRepr::Label(l.clone()),
    }
}

pub(crate) fn ball_repr(b: &Ball) -> BallRepr {
    BallRepr {
        center: point_repr(b.center()),
        gamma: b.gamma(),
    }
}

fn pieces_repr(f: &StepFunction) -> Vec<PieceRepr> {
    f.pieces()
        .iter()
        .map(|(b, v)| PieceRepr {
            ball: ball_repr(b),
            value: v.to_string(),
        })
        .collect()
}

fn step_from(space: &Space, ring: Ring, pieces: &[PieceRepr]) -> Result<StepFunction> {
    StepFunction::from_repr(&StepFunctionRepr {
        space: space.clone(),
        ring,
        pieces: pieces.to_vec(),
    })
}

fn expr_from(space: &Space, ring: Ring, r: &FamilyRepr) -> Result<SequenceFamily> {
    match r {
        FamilyRepr::Constant { pieces } => Ok(SequenceFamily::constant(step_from(space, ring, pieces)?)),
        FamilyRepr::ExplicitThen { prefix, tail } => {
            let prefix = prefix
                .iter()
                .map(|p| step_from(space, ring, p))
                .collect::<Result<Vec<_>>>()?;
            SequenceFamily::explicit_then(prefix, expr_from(space, ring, tail)?)
        }
        FamilyRepr::MonomialIndicator {
            coeff,
            center,
            radius_exp,
        } => SequenceFamily::monomial(
            space,
            MonomialIndicator {
                coeff_unit: ring.parse(&coeff.unit, space.prime())?,
                coeff_exp: coeff.exp.clone(),
                center_base: space.parse_point(&center.base)?,
                center_exp: center.exp.clone(),
                radius_exp: radius_exp.clone(),
            },
        ),
        FamilyRepr::Sum { left, right } => expr_from(space, ring, left)?.sum(&expr_from(space, ring, right)?),
        FamilyRepr::Prod { left, right } => expr_from(space, ring, left)?.prod(&expr_from(space, ring, right)?),
        FamilyRepr::Neg { arg } => Ok(expr_from(space, ring, arg)?.neg()),
    }
}

fn expr_repr(e: &FamilyExpr) -> FamilyRepr {
    match e {
        FamilyExpr::Constant(f) => FamilyRepr::Constant { pieces: pieces_repr(f) },
        FamilyExpr::ExplicitThen { prefix, tail } => FamilyRepr::ExplicitThen {
            prefix: prefix.iter().map(pieces_repr).collect(),
            tail: Box::new(expr_repr(tail)),
        },
        FamilyExpr::MonomialIndicator(mi) => FamilyRepr::MonomialIndicator {
            coeff: CoeffRepr {
                unit: mi.coeff_unit.to_string(),
                exp: mi.coeff_exp.clone(),
            },
            center: CenterRepr {
                base: point_repr(&mi.center_base),
                exp: mi.center_exp.clone(),
            },
            radius_exp: mi.radius_exp.clone(),
        },
        FamilyExpr::Sum(a, b) => FamilyRepr::Sum {
            left: Box::new(expr_repr(a)),
            right: Box::new(expr_repr(b)),
        },
        FamilyExpr::Prod(a, b) => FamilyRepr::Prod {
            left: Box::new(expr_repr(a)),
            right: Box::new(expr_repr(b)),
        },
        FamilyExpr::Neg(a) => FamilyRepr::Neg {
            arg: Box::new(expr_repr(a)),
        },
    }
}

impl SequenceFamily {
    pub fn from_repr(space: &Space, ring: Ring, r: &FamilyRepr) -> Result<SequenceFamily> {
        let f = expr_from(space, ring.check()?, r)?;
        if f.ring() != ring {
            return Err(crate::error::Error::MixedRings);
        }
        Ok(f)
    }

    pub fn from_doc(doc: &FamilyDoc) -> Result<SequenceFamily> {
        SequenceFamily::from_repr(&doc.space, doc.ring, &doc.family)
    }

    pub fn to_doc(&self) -> FamilyDoc {
        FamilyDoc {
            space: self.space().clone(),
            ring: self.ring(),
            family: expr_repr(self.expr()),
        }
    }
}
