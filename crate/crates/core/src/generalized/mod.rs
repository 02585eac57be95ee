//! Generalized numbers and generalized points: symbolic sequences compared
//! up to eventual equality, with answers delivered as [`Verdict`]s.

mod point;

pub use point::{gpoint_equiv, is_compactly_supported, PointFamily, PointFamilyRepr, PointTailRepr};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eventual::{analyze_coefficients, MonoSum, TailBehavior};
use crate::numbers::{Prime, Ring, RingElem};
use crate::sequences::{Affine, IntegerMap};
use crate::spaces::Ball;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailTerm {
    pub unit: RingElem,
    pub exp: Affine,
}

/// Shape of a scalar sequence past its explicit prefix.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarTail {
    Zero,
    Constant { value: RingElem },
    /// `k -> unit * p^(exp(k))`
    Monomial { unit: RingElem, exp: IntegerMap },
    /// `k -> sum unit_i * p^(exp_i(k))`, slopes pairwise distinct.
    Sum { terms: Vec<TailTerm> },
}

/// A representative of a generalized number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarFamily {
    ring: Ring,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<Prime>,
    prefix: Vec<RingElem>,
    tail: ScalarTail,
    tail_text: String,
}

impl ScalarFamily {
    pub fn new(ring: Ring, p: Option<Prime>, prefix: Vec<RingElem>, tail: ScalarTail) -> Result<ScalarFamily> {
        let ring = ring.check()?;
        let mut elems: Vec<&RingElem> = prefix.iter().collect();
        match &tail {
            ScalarTail::Zero => {}
            ScalarTail::Constant { value } => elems.push(value),
            ScalarTail::Monomial { unit, .. } => {
                if unit.is_zero() {
                    return Err(Error::PreconditionViolated("monomial tail unit is zero".into()));
                }
                elems.push(unit);
            }
            ScalarTail::Sum { terms } => elems.extend(terms.iter().map(|t| &t.unit)),
        }
        if elems.iter().any(|e| e.ring() != ring) {
            return Err(Error::MixedRings);
        }
        let has_p_powers = match &tail {
            ScalarTail::Monomial { exp, .. } => !exp.is_zero_map(),
            ScalarTail::Sum { terms } => terms.iter().any(|t| t.exp != Affine::ZERO),
            _ => false,
        };
        if has_p_powers && p.is_none() {
            return Err(Error::NotSupported("p-power tail without a prime".into()));
        }
        let mut s = ScalarFamily {
            ring,
            p,
            prefix,
            tail,
            tail_text: String::new(),
        };
        // rejects tails that are not evaluable, e.g. p^(-k) modulo a multiple of p
        let (sum, start) = s.tail_sum();
        analyze_coefficients(ring, p, &sum, start)?;
        s.tail_text = s.render_tail();
        Ok(s)
    }

    pub fn zero(ring: Ring) -> ScalarFamily {
        ScalarFamily::new(ring, None, Vec::new(), ScalarTail::Zero).expect("zero family is valid")
    }

    pub fn constant(value: RingElem) -> ScalarFamily {
        ScalarFamily::new(value.ring(), None, Vec::new(), ScalarTail::Constant { value }).expect("constant is valid")
    }

    /// `k -> unit * p^(exp(k))`, e.g. `c~ = (p^k)_k`.
    pub fn monomial(p: Prime, unit: RingElem, exp: IntegerMap) -> Result<ScalarFamily> {
        ScalarFamily::new(unit.ring(), Some(p), Vec::new(), ScalarTail::Monomial { unit, exp })
    }

    /// Picks the smallest closed tail shape describing `sum`.
    pub fn from_sum(ring: Ring, p: Option<Prime>, prefix: Vec<RingElem>, sum: &MonoSum<RingElem>) -> Result<ScalarFamily> {
        let merged = sum.merged(p)?;
        let tail = match merged.terms() {
            [] => ScalarTail::Zero,
            [(c, e)] if e.slope == 0 => ScalarTail::Constant {
                value: c.scale_const(p, e.offset)?,
            },
            [(c, e)] => ScalarTail::Monomial {
                unit: c.clone(),
                exp: IntegerMap::affine(e.slope, e.offset),
            },
            ts => ScalarTail::Sum {
                terms: ts.iter().map(|(unit, exp)| TailTerm { unit: unit.clone(), exp: *exp }).collect(),
            },
        };
        ScalarFamily::new(ring, p, prefix, tail)
    }

    pub fn with_prefix(&self, prefix: Vec<RingElem>) -> Result<ScalarFamily> {
        ScalarFamily::new(self.ring, self.p, prefix, self.tail.clone())
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn prime(&self) -> Option<Prime> {
        self.p
    }

    pub fn prefix(&self) -> &[RingElem] {
        &self.prefix
    }

    pub fn tail(&self) -> &ScalarTail {
        &self.tail
    }

    pub fn tail_text(&self) -> &str {
        &self.tail_text
    }

    pub fn nth(&self, k: u64) -> Result<RingElem> {
        if k == 0 {
            return Err(Error::IndexZero);
        }
        if let Some(v) = self.prefix.get(k as usize - 1) {
            return Ok(v.clone());
        }
        match &self.tail {
            ScalarTail::Zero => Ok(self.ring.zero()),
            ScalarTail::Constant { value } => Ok(value.clone()),
            ScalarTail::Monomial { unit, exp } => unit.scale_const(self.p, exp.eval(k)),
            ScalarTail::Sum { terms } => {
                let mut acc = self.ring.zero();
                for t in terms {
                    acc = acc.add(&t.unit.scale_const(self.p, t.exp.eval(k))?)?;
                }
                Ok(acc)
            }
        }
    }

    /// The tail as an exponential sum, together with the first index from
    /// which that sum is exact.
    pub(crate) fn tail_sum(&self) -> (MonoSum<RingElem>, u64) {
        let start = self.prefix.len() as u64 + 1;
        match &self.tail {
            ScalarTail::Zero => (MonoSum::empty(), start),
            ScalarTail::Constant { value } => (MonoSum::constant(value.clone()), start),
            ScalarTail::Monomial { unit, exp } => (MonoSum::monomial(unit.clone(), exp.tail), start.max(exp.table_len() + 1)),
            ScalarTail::Sum { terms } => {
                let mut s = MonoSum::empty();
                for t in terms {
                    s = s.add(&MonoSum::monomial(t.unit.clone(), t.exp));
                }
                (s, start)
            }
        }
    }

    fn render_tail(&self) -> String {
        let mono = |unit: &RingElem, slope: i64, offset: i64| {
            let e = match (slope, offset) {
                (1, 0) => "p^k".to_string(),
                (s, 0) => format!("p^({s}k)"),
                (1, o) => format!("p^(k{o:+})"),
                (s, o) => format!("p^({s}k{o:+})"),
            };
            if unit == &self.ring.one() {
                e
            } else {
                format!("({unit})*{e}")
            }
        };
        match &self.tail {
            ScalarTail::Zero => "0".into(),
            ScalarTail::Constant { value } => value.to_string(),
            ScalarTail::Monomial { unit, exp } if exp.table.is_empty() && exp.tail.slope != 0 => {
                mono(unit, exp.tail.slope, exp.tail.offset)
            }
            ScalarTail::Monomial { unit, exp } => format!("({unit})*p^[{exp}](k)"),
            ScalarTail::Sum { terms } => terms
                .iter()
                .map(|t| if t.exp.slope == 0 { format!("({})*p^{}", t.unit, t.exp.offset) } else { mono(&t.unit, t.exp.slope, t.exp.offset) })
                .collect::<Vec<_>>()
                .join(" + "),
        }
    }
}

trait ScaleConst {
    fn scale_const(&self, p: Option<Prime>, e: i64) -> Result<RingElem>;
}

impl ScaleConst for RingElem {
    fn scale_const(&self, p: Option<Prime>, e: i64) -> Result<RingElem> {
        if e == 0 {
            return Ok(self.clone());
        }
        let p = p.ok_or_else(|| Error::NotSupported("p-power scaling without a prime".into()))?;
        self.mul(&self.ring().pow_p(p, e)?)
    }
}

/// Justification attached to a proof.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// The closed tail vanishes for every `k >= tail_zero_from`; smaller
    /// indices down to `N` were evaluated directly.
    ScalarZero { tail_zero_from: u64 },
    /// Tails coincide exactly for every `k >= tail_equal_from`.
    PointsEqual { tail_equal_from: u64 },
    /// Every point of the family lies in `ball`.
    Contained { ball: Ball },
    /// From `tail_from` on, every region of `ball` cut out by the tail terms
    /// is empty or carries an identically vanishing value; indices below
    /// were evaluated directly.
    NegligibleOn {
        ball: Ball,
        tail_from: u64,
        terms_meeting_ball: usize,
        regions_checked: usize,
    },
}

/// Infinitely many indices, optionally with a witness point per index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub indices: IntegerMap,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_points: Option<PointFamily>,
}

impl Schedule {
    pub fn new(indices: IntegerMap, witness_points: Option<PointFamily>) -> Result<Schedule> {
        let t = indices.table_len();
        let increasing = (1..=t).all(|j| indices.eval(j) < indices.eval(j + 1));
        if indices.tail.slope < 1 || !increasing || indices.eval(1) < 1 {
            return Err(Error::MalformedCertificate("schedule is not a strictly increasing index stream".into()));
        }
        Ok(Schedule { indices, witness_points })
    }

    /// The `j`-th scheduled index, `j >= 1`.
    pub fn index(&self, j: u64) -> u64 {
        self.indices.eval(j) as u64
    }

    pub fn first(&self, count: u64) -> Vec<u64> {
        (1..=count).map(|j| self.index(j)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Proved {
        #[serde(rename = "N")]
        n: u64,
        certificate: Certificate,
    },
    Refuted {
        schedule: Schedule,
    },
    Unknown {
        checked_up_to: u64,
    },
}

impl Verdict {
    pub fn is_proved(&self) -> bool {
        matches!(self, Verdict::Proved { .. })
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted { .. })
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown { .. })
    }

    pub fn proved_index(&self) -> Option<u64> {
        match self {
            Verdict::Proved { n, .. } => Some(*n),
            _ => None,
        }
    }

    pub fn schedule(&self) -> Option<&Schedule> {
        match self {
            Verdict::Refuted { schedule } => Some(schedule),
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("verdicts serialize")
    }
}

/// Decides whether `s` is eventually zero.
pub fn scalar_is_zero(s: &ScalarFamily) -> Result<Verdict> {
    let (sum, start) = s.tail_sum();
    match analyze_coefficients(s.ring, s.p, &sum, start)? {
        TailBehavior::Zero { from } => {
            let mut n = from;
            while n > 1 && s.nth(n - 1)?.is_zero() {
                n -= 1;
            }
            Ok(Verdict::Proved {
                n,
                certificate: Certificate::ScalarZero { tail_zero_from: from },
            })
        }
        TailBehavior::NonZero { schedule, .. } => Ok(Verdict::Refuted {
            schedule: Schedule::new(IntegerMap::affine(schedule.slope, schedule.offset), None)?,
        }),
    }
}

/// Componentwise difference `s - t`.
pub fn scalar_difference(s: &ScalarFamily, t: &ScalarFamily) -> Result<ScalarFamily> {
    if s.ring != t.ring {
        return Err(Error::MixedRings);
    }
    let p = s.p.or(t.p);
    let (ss, s_start) = s.tail_sum();
    let (ts, t_start) = t.tail_sum();
    let len = s_start.max(t_start) - 1;
    let prefix = (1..=len)
        .map(|k| s.nth(k)?.sub(&t.nth(k)?))
        .collect::<Result<Vec<_>>>()?;
    ScalarFamily::from_sum(s.ring, p, prefix, &ss.add(&ts.neg()))
}

pub fn scalar_equal(s: &ScalarFamily, t: &ScalarFamily) -> Result<Verdict> {
    scalar_is_zero(&scalar_difference(s, t)?)
}
