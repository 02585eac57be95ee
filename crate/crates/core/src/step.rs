//! Locally constant compactly supported functions as finite lists of
//! disjoint ball/value pieces in canonical form.
//!
//! Canonical form: no zero values, no complete sibling set sharing a value,
//! pieces sorted by [`Space::ball_key`]. Two functions are equal as maps iff
//! their canonical forms (and serializations) are identical.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numbers::{Ring, RingElem};
use crate::spaces::{Ball, BallRelation, BallRepr, Point, Space};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StepFunction {
    space: Space,
    ring: Ring,
    pieces: Vec<(Ball, RingElem)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "gamma")]
pub enum Constancy {
    Finite(i64),
    EverywhereConstant,
}

#[derive(Serialize)]
struct PieceOut<'a> {
    ball: &'a Ball,
    value: &'a RingElem,
}

#[derive(Serialize)]
struct StepOut<'a> {
    space: &'a Space,
    ring: Ring,
    pieces: Vec<PieceOut<'a>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceRepr {
    pub ball: BallRepr,
    pub value: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepFunctionRepr {
    pub space: Space,
    pub ring: Ring,
    #[serde(default)]
    pub pieces: Vec<PieceRepr>,
}

impl Serialize for StepFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StepOut {
            space: &self.space,
            ring: self.ring,
            pieces: self
                .pieces
                .iter()
                .map(|(ball, value)| PieceOut { ball, value })
                .collect(),
        }
        .serialize(s)
    }
}

impl StepFunction {
    pub fn zero(space: &Space, ring: Ring) -> StepFunction {
        StepFunction {
            space: space.clone(),
            ring,
            pieces: Vec::new(),
        }
    }

    /// `theta` on `b`, zero elsewhere.
    pub fn char_fn(space: &Space, b: &Ball, theta: &RingElem) -> StepFunction {
        let mut f = StepFunction::zero(space, theta.ring());
        if !theta.is_zero() {
            f.pieces.push((b.clone(), theta.clone()));
        }
        f
    }

    /// Builds a function from pairwise disjoint pieces.
    pub fn from_pieces(space: &Space, ring: Ring, pieces: Vec<(Ball, RingElem)>) -> Result<StepFunction> {
        for (i, (b, v)) in pieces.iter().enumerate() {
            if v.ring() != ring {
                return Err(Error::MixedRings);
            }
            space.check_point(b.center())?;
            for (c, _) in &pieces[i + 1..] {
                if space.ball_relation(b, c) != BallRelation::Disjoint {
                    return Err(Error::OverlappingPieces);
                }
            }
        }
        Ok(canonicalize(space, ring, pieces))
    }

    pub fn from_repr(repr: &StepFunctionRepr) -> Result<StepFunction> {
        let ring = repr.ring.check()?;
        let pieces = repr
            .pieces
            .iter()
            .map(|pc| {
                Ok((
                    repr.space.parse_ball(&pc.ball)?,
                    ring.parse(&pc.value, repr.space.prime())?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        StepFunction::from_pieces(&repr.space, ring, pieces)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn pieces(&self) -> &[(Ball, RingElem)] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn evaluate(&self, x: &Point) -> RingElem {
        self.pieces
            .iter()
            .find(|(b, _)| self.space.in_ball(x, b))
            .map(|(_, v)| v.clone())
            .unwrap_or_else(|| self.ring.zero())
    }

    pub fn neg(&self) -> StepFunction {
        StepFunction {
            space: self.space.clone(),
            ring: self.ring,
            pieces: self.pieces.iter().map(|(b, v)| (b.clone(), v.neg())).collect(),
        }
    }

    pub fn scale(&self, c: &RingElem) -> Result<StepFunction> {
        if c.ring() != self.ring {
            return Err(Error::MixedRings);
        }
        let pieces = self
            .pieces
            .iter()
            .map(|(b, v)| Ok((b.clone(), v.mul(c)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(canonicalize(&self.space, self.ring, pieces))
    }

    pub fn add(&self, other: &StepFunction) -> Result<StepFunction> {
        self.combine(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &StepFunction) -> Result<StepFunction> {
        self.combine(other, |a, b| a.sub(b))
    }

    pub fn mul(&self, other: &StepFunction) -> Result<StepFunction> {
        self.check_compatible(other)?;
        // the support of a product is the intersection of the supports
        let mut pieces = Vec::new();
        for (a, va) in &self.pieces {
            for (b, vb) in &other.pieces {
                let ball = match self.space.ball_relation(a, b) {
                    BallRelation::Disjoint => continue,
                    BallRelation::Equal | BallRelation::FirstInsideSecond => a,
                    BallRelation::SecondInsideFirst => b,
                };
                pieces.push((ball.clone(), va.mul(vb)?));
            }
        }
        Ok(canonicalize(&self.space, self.ring, pieces))
    }

    /// Balls of the coarsest partition on which both functions are constant,
    /// restricted to the union of their supports.
    pub fn common_refinement(&self, other: &StepFunction) -> Result<Vec<Ball>> {
        self.check_compatible(other)?;
        let mut balls: Vec<Ball> = Vec::new();
        for (b, _) in self.pieces.iter().chain(&other.pieces) {
            if !balls.contains(b) {
                balls.push(b.clone());
            }
        }
        let maximal: Vec<Ball> = balls
            .iter()
            .filter(|b| {
                !balls
                    .iter()
                    .any(|c| self.space.ball_relation(b, c) == BallRelation::FirstInsideSecond)
            })
            .cloned()
            .collect();
        let mut leaves = Vec::new();
        for m in maximal {
            let inner: Vec<Ball> = balls
                .iter()
                .filter(|b| self.space.ball_relation(b, &m) == BallRelation::FirstInsideSecond)
                .cloned()
                .collect();
            refine(&self.space, m, inner, &mut leaves);
        }
        Ok(leaves)
    }

    fn check_compatible(&self, other: &StepFunction) -> Result<()> {
        if self.space != other.space {
            return Err(Error::MixedSpaces);
        }
        if self.ring != other.ring {
            return Err(Error::MixedRings);
        }
        Ok(())
    }

    fn combine(
        &self,
        other: &StepFunction,
        op: impl Fn(&RingElem, &RingElem) -> Result<RingElem>,
    ) -> Result<StepFunction> {
        self.check_compatible(other)?;
        let tagged: Vec<Tagged> = self
            .pieces
            .iter()
            .map(|(b, v)| (b.clone(), 0, v.clone()))
            .chain(other.pieces.iter().map(|(b, v)| (b.clone(), 1, v.clone())))
            .collect();
        let zero = self.ring.zero();
        let mut pieces = Vec::new();
        let mut push = |ball: Ball, vals: &[Option<RingElem>; 2]| -> Result<()> {
            let v = op(vals[0].as_ref().unwrap_or(&zero), vals[1].as_ref().unwrap_or(&zero))?;
            if !v.is_zero() {
                pieces.push((ball, v));
            }
            Ok(())
        };
        for (m, inner) in maximal_groups(&self.space, &tagged) {
            refine_values(&self.space, m, [None, None], inner, &mut push)?;
        }
        Ok(canonicalize(&self.space, self.ring, pieces))
    }

    /// Agrees with `self` on `k`, zero outside.
    pub fn restrict(&self, k: &Ball) -> StepFunction {
        let mut pieces = Vec::new();
        for (b, v) in &self.pieces {
            match self.space.ball_relation(b, k) {
                BallRelation::Equal | BallRelation::FirstInsideSecond => pieces.push((b.clone(), v.clone())),
                BallRelation::SecondInsideFirst => pieces.push((k.clone(), v.clone())),
                BallRelation::Disjoint => {}
            }
        }
        canonicalize(&self.space, self.ring, pieces)
    }

    /// Whether `self` takes a single value on all of `b`.
    pub fn is_constant_on(&self, b: &Ball) -> bool {
        // canonical form: a ball carries one nonzero value only if it sits
        // inside a single piece
        let mut touches = false;
        for (pb, _) in &self.pieces {
            match self.space.ball_relation(b, pb) {
                BallRelation::Equal | BallRelation::FirstInsideSecond => return true,
                BallRelation::SecondInsideFirst => touches = true,
                BallRelation::Disjoint => {}
            }
        }
        !touches
    }

    /// The smallest `gamma` such that `self` is constant on the ball of
    /// exponent `gamma` around `x`.
    pub fn constancy_exponent(&self, x: &Point) -> Result<Constancy> {
        if self.space.is_discrete() {
            return Err(Error::NotSupported("constancy exponent on a discrete space".into()));
        }
        self.space.check_point(x)?;
        if self.is_zero() {
            return Ok(Constancy::EverywhereConstant);
        }
        let mut gamma = self.pieces.iter().map(|(b, _)| b.gamma()).max().expect("nonempty");
        while self.is_constant_on(&self.space.ball_unchecked(x, gamma - 1)) {
            gamma -= 1;
        }
        Ok(Constancy::Finite(gamma))
    }
}

fn refine(space: &Space, ball: Ball, inner: Vec<Ball>, leaves: &mut Vec<Ball>) {
    if inner.is_empty() {
        leaves.push(ball);
        return;
    }
    for child in space.split_ball(&ball).expect("ball with strict sub-balls splits") {
        let below: Vec<Ball> = inner
            .iter()
            .filter(|b| space.ball_relation(b, &child) == BallRelation::FirstInsideSecond)
            .cloned()
            .collect();
        refine(space, child, below, leaves);
    }
}

/// A piece of one of two operands: ball, operand index, value.
type Tagged = (Ball, usize, RingElem);

/// Groups pieces under the maximal balls among them.
fn maximal_groups(space: &Space, tagged: &[Tagged]) -> Vec<(Ball, Vec<Tagged>)> {
    let mut groups: Vec<(Ball, Vec<Tagged>)> = Vec::new();
    let mut sorted: Vec<&Tagged> = tagged.iter().collect();
    sorted.sort_by_key(|t| t.0.gamma());
    'next: for t in sorted {
        for (m, members) in groups.iter_mut() {
            if matches!(space.ball_relation(&t.0, m), BallRelation::Equal | BallRelation::FirstInsideSecond) {
                members.push(t.clone());
                continue 'next;
            }
        }
        groups.push((t.0.clone(), vec![t.clone()]));
    }
    groups
}

/// Walks down from `ball`, picking up operand values from pieces equal to
/// the current ball, and emits one leaf per ball free of deeper pieces.
fn refine_values(
    space: &Space,
    ball: Ball,
    mut vals: [Option<RingElem>; 2],
    inner: Vec<Tagged>,
    emit: &mut impl FnMut(Ball, &[Option<RingElem>; 2]) -> Result<()>,
) -> Result<()> {
    let mut below = Vec::new();
    for t in inner {
        if t.0 == ball {
            vals[t.1] = Some(t.2);
        } else {
            below.push(t);
        }
    }
    if below.is_empty() {
        return emit(ball, &vals);
    }
    for child in space.split_ball(&ball)? {
        let mine: Vec<Tagged> = below
            .iter()
            .filter(|t| matches!(space.ball_relation(&t.0, &child), BallRelation::Equal | BallRelation::FirstInsideSecond))
            .cloned()
            .collect();
        if mine.is_empty() && vals.iter().all(Option::is_none) {
            continue;
        }
        refine_values(space, child, vals.clone(), mine, emit)?;
    }
    Ok(())
}

fn canonicalize(space: &Space, ring: Ring, pieces: Vec<(Ball, RingElem)>) -> StepFunction {
    let mut map: HashMap<Ball, RingElem> = pieces.into_iter().filter(|(_, v)| !v.is_zero()).collect();
    let full = space.child_count();
    let mut levels: BTreeMap<i64, Vec<Ball>> = BTreeMap::new();
    for b in map.keys() {
        levels.entry(b.gamma()).or_default().push(b.clone());
    }
    // merging only ever creates balls one level up, so one sweep from the
    // deepest level suffices
    while let Some((_, balls)) = levels.pop_last() {
        let mut groups: HashMap<Ball, Vec<Ball>> = HashMap::new();
        for b in balls {
            if let Some(parent) = space.parent(&b) {
                groups.entry(parent).or_default().push(b);
            }
        }
        for (parent, kids) in groups {
            if kids.len() != full {
                continue;
            }
            let v = map[&kids[0]].clone();
            if kids.iter().all(|k| map[k] == v) {
                for k in &kids {
                    map.remove(k);
                }
                levels.entry(parent.gamma()).or_default().push(parent.clone());
                map.insert(parent, v);
            }
        }
    }
    let mut pieces: Vec<(Ball, RingElem)> = map.into_iter().collect();
    pieces.sort_by_cached_key(|(b, _)| space.ball_key(b));
    StepFunction {
        space: space.clone(),
        ring,
        pieces,
    }
}
