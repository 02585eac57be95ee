//! Exact scalars: rationals with p-adic valuation, digit truncation, and the
//! three coefficient rings (rationals, Gaussian rationals, integers mod m).

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

const PRIME_BOUND: u64 = 1 << 31;

/// A prime below 2^31.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Prime> {
        if !(2..PRIME_BOUND).contains(&p) || !is_prime(p) {
            return Err(Error::NonPrime(p));
        }
        Ok(Prime(p))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn as_bigint(self) -> BigInt {
        BigInt::from(self.0)
    }
}

impl<'de> Deserialize<'de> for Prime {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let p = u64::deserialize(d)?;
        Prime::new(p).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 4 {
        return n >= 2;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// p-adic valuation exponent; `Infinity` only for zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValuationExp {
    Finite(i64),
    Infinity,
}

impl ValuationExp {
    pub fn finite(self) -> Option<i64> {
        match self {
            ValuationExp::Finite(v) => Some(v),
            ValuationExp::Infinity => None,
        }
    }
}

impl fmt::Display for ValuationExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValuationExp::Finite(v) => write!(f, "{v}"),
            ValuationExp::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for ValuationExp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ValuationExp::Finite(v) => s.serialize_i64(*v),
            ValuationExp::Infinity => s.serialize_str("inf"),
        }
    }
}

fn int_valuation(p: &BigInt, n: &BigInt) -> i64 {
    debug_assert!(!n.is_zero());
    // divide by p, p^2, p^4, ... while possible, then walk back down
    let mut n = n.clone();
    let mut v = 0;
    let mut pows = vec![p.clone()];
    loop {
        let top = pows.last().expect("nonempty");
        let (q, r) = n.div_rem(top);
        if !r.is_zero() {
            break;
        }
        n = q;
        v += 1 << (pows.len() - 1);
        let sq = top * top;
        pows.push(sq);
    }
    while let Some(top) = pows.pop() {
        let (q, r) = n.div_rem(&top);
        if r.is_zero() {
            n = q;
            v += 1 << pows.len();
        }
    }
    v
}

pub fn valuation(p: Prime, q: &Rational) -> ValuationExp {
    if q.is_zero() {
        return ValuationExp::Infinity;
    }
    let pb = p.as_bigint();
    ValuationExp::Finite(int_valuation(&pb, q.numer()) - int_valuation(&pb, q.denom()))
}

/// Exact `p^e` for any sign of `e`.
pub fn pow_p(p: Prime, e: i64) -> Rational {
    let base = p.as_bigint();
    let mag = num_traits::pow(base, e.unsigned_abs() as usize);
    if e >= 0 {
        Rational::from_integer(mag)
    } else {
        Rational::new(BigInt::one(), mag)
    }
}

/// Splits a nonzero rational as `p^v * u` with `u` a p-adic unit.
fn split_unit(p: Prime, q: &Rational) -> (i64, Rational) {
    let v = valuation(p, q).finite().expect("nonzero");
    (v, q * pow_p(p, -v))
}

/// The finite p-adic digit expansion of `q` below exponent `gamma`:
/// the unique `r = sum_{v <= j < gamma} d_j p^j` with `v_p(q - r) >= gamma`.
pub fn digit_truncate(p: Prime, q: &Rational, gamma: i64) -> Rational {
    if q.is_zero() {
        return Rational::zero();
    }
    let (v, unit) = split_unit(p, q);
    if v >= gamma {
        return Rational::zero();
    }
    let modulus = num_traits::pow(p.as_bigint(), (gamma - v) as usize);
    let den_inv = unit
        .denom()
        .modinv(&modulus)
        .expect("unit denominator is prime to p");
    let digits = (unit.numer() * den_inv).mod_floor(&modulus);
    Rational::from_integer(digits) * pow_p(p, v)
}

/// Digits `d_j` for `j` in `[lo, gamma)` of the canonical truncation.
pub fn digits(p: Prime, q: &Rational, lo: i64, gamma: i64) -> Vec<u64> {
    let r = digit_truncate(p, q, gamma);
    let mut out = Vec::new();
    if lo >= gamma {
        return out;
    }
    // r * p^(-lo) is a nonnegative integer whenever lo <= v(r)
    let scaled = &r * pow_p(p, -lo);
    let mut n = scaled.to_integer();
    let pb = p.as_bigint();
    for _ in lo..gamma {
        let (q, d) = n.div_rem(&pb);
        out.push(d.to_u64().unwrap_or(0));
        n = q;
    }
    out
}

pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `a`, `a/b`, `p^k`, `-p^k` or `c*p^k`; the `p` forms need a prime.
pub fn parse_rational(s: &str, p: Option<Prime>) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some(pos) = s.find("p^") {
        let p = p.ok_or_else(|| Error::Parse(format!("{s:?} needs a prime")))?;
        let exp: i64 = s[pos + 2..]
            .trim_matches(|c| c == '(' || c == ')')
            .parse()
            .map_err(|_| bad())?;
        let head = s[..pos].trim_end_matches('*');
        let coeff = match head {
            "" => Rational::one(),
            "-" => -Rational::one(),
            h => parse_rational(h, None)?,
        };
        return Ok(coeff * pow_p(p, exp));
    }
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, b),
        None => (s, "1"),
    };
    let num: BigInt = num.trim().parse().map_err(|_| bad())?;
    let den: BigInt = den.trim().parse().map_err(|_| bad())?;
    if den.sign() != Sign::Plus {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Coefficient ring of a function space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ring {
    Rational,
    Gaussian,
    IntMod(u64),
}

impl Ring {
    pub fn check(self) -> Result<Ring> {
        match self {
            Ring::IntMod(m) if m < 2 => Err(Error::PreconditionViolated(format!(
                "modulus {m} must be at least 2"
            ))),
            r => Ok(r),
        }
    }

    pub fn zero(self) -> RingElem {
        self.from_i64(0)
    }

    pub fn one(self) -> RingElem {
        self.from_i64(1)
    }

    pub fn from_i64(self, n: i64) -> RingElem {
        match self {
            Ring::Rational => RingElem::Rational(Rational::from_integer(n.into())),
            Ring::Gaussian => RingElem::Gaussian {
                re: Rational::from_integer(n.into()),
                im: Rational::zero(),
            },
            Ring::IntMod(m) => RingElem::IntMod {
                residue: n.rem_euclid(m as i64) as u64,
                modulus: m,
            },
        }
    }

    pub fn from_rational(self, q: &Rational) -> Result<RingElem> {
        match self {
            Ring::Rational => Ok(RingElem::Rational(q.clone())),
            Ring::Gaussian => Ok(RingElem::Gaussian {
                re: q.clone(),
                im: Rational::zero(),
            }),
            Ring::IntMod(m) => {
                let mb = BigInt::from(m);
                let inv = q
                    .denom()
                    .modinv(&mb)
                    .ok_or_else(|| Error::NotInvertible(format_rational(q)))?;
                let r = (q.numer() * inv).mod_floor(&mb);
                Ok(RingElem::IntMod {
                    residue: r.to_u64().expect("reduced"),
                    modulus: m,
                })
            }
        }
    }

    /// `p^e` as a ring element; negative exponents need `p` invertible.
    pub fn pow_p(self, p: Prime, e: i64) -> Result<RingElem> {
        match self {
            Ring::IntMod(m) => {
                let mb = BigInt::from(m);
                let pb = p.as_bigint();
                let base = if e >= 0 {
                    pb
                } else {
                    pb.modinv(&mb)
                        .ok_or_else(|| Error::NotInvertible(format!("{p} mod {m}")))?
                };
                let r = base.modpow(&BigInt::from(e.unsigned_abs()), &mb);
                Ok(RingElem::IntMod {
                    residue: r.to_u64().expect("reduced"),
                    modulus: m,
                })
            }
            _ => self.from_rational(&pow_p(p, e)),
        }
    }

    pub fn parse(self, s: &str, p: Option<Prime>) -> Result<RingElem> {
        match self {
            Ring::Gaussian => parse_gaussian(s, p),
            _ => self.from_rational(&parse_rational(s, p)?),
        }
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::Rational => write!(f, "rational"),
            Ring::Gaussian => write!(f, "gaussian"),
            Ring::IntMod(m) => write!(f, "int_mod({m})"),
        }
    }
}

fn parse_gaussian(s: &str, p: Option<Prime>) -> Result<RingElem> {
    let s = s.trim();
    let Some(body) = s.strip_suffix('i') else {
        return Ring::Gaussian.from_rational(&parse_rational(s, p)?);
    };
    let split = body
        .char_indices()
        .filter(|&(i, c)| i > 0 && (c == '+' || c == '-') && !body[..i].ends_with('^'))
        .map(|(i, _)| i)
        .next_back();
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im.trim_start_matches('+') {
        "" => Rational::one(),
        "-" => -Rational::one(),
        t => parse_rational(t, p)?,
    };
    Ok(RingElem::Gaussian {
        re: parse_rational(re, p)?,
        im,
    })
}

/// An element of one of the three coefficient rings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RingElem {
    Rational(Rational),
    Gaussian { re: Rational, im: Rational },
    IntMod { residue: u64, modulus: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingOp {
    Add,
    Sub,
    Mul,
    Neg,
}

/// Applies `op` to `a` and `b` (`b` is ignored for `Neg`).
pub fn ring_arith(op: RingOp, a: &RingElem, b: &RingElem) -> Result<RingElem> {
    match op {
        RingOp::Add => a.add(b),
        RingOp::Sub => a.sub(b),
        RingOp::Mul => a.mul(b),
        RingOp::Neg => Ok(a.neg()),
    }
}

impl RingElem {
    pub fn ring(&self) -> Ring {
        match self {
            RingElem::Rational(_) => Ring::Rational,
            RingElem::Gaussian { .. } => Ring::Gaussian,
            RingElem::IntMod { modulus, .. } => Ring::IntMod(*modulus),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RingElem::Rational(q) => q.is_zero(),
            RingElem::Gaussian { re, im } => re.is_zero() && im.is_zero(),
            RingElem::IntMod { residue, .. } => *residue == 0,
        }
    }

    pub fn add(&self, other: &RingElem) -> Result<RingElem> {
        match (self, other) {
            (RingElem::Rational(a), RingElem::Rational(b)) => Ok(RingElem::Rational(a + b)),
            (RingElem::Gaussian { re: a, im: b }, RingElem::Gaussian { re: c, im: d }) => {
                Ok(RingElem::Gaussian { re: a + c, im: b + d })
            }
            (
                RingElem::IntMod { residue: a, modulus: m },
                RingElem::IntMod { residue: b, modulus: n },
            ) if m == n => Ok(RingElem::IntMod {
                residue: ((*a as u128 + *b as u128) % *m as u128) as u64,
                modulus: *m,
            }),
            _ => Err(Error::MixedRings),
        }
    }

    pub fn neg(&self) -> RingElem {
        match self {
            RingElem::Rational(a) => RingElem::Rational(-a),
            RingElem::Gaussian { re, im } => RingElem::Gaussian { re: -re, im: -im },
            RingElem::IntMod { residue, modulus } => RingElem::IntMod {
                residue: (modulus - residue) % modulus,
                modulus: *modulus,
            },
        }
    }

    pub fn sub(&self, other: &RingElem) -> Result<RingElem> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RingElem) -> Result<RingElem> {
        match (self, other) {
            (RingElem::Rational(a), RingElem::Rational(b)) => Ok(RingElem::Rational(a * b)),
            (RingElem::Gaussian { re: a, im: b }, RingElem::Gaussian { re: c, im: d }) => {
                Ok(RingElem::Gaussian {
                    re: a * c - b * d,
                    im: a * d + b * c,
                })
            }
            (
                RingElem::IntMod { residue: a, modulus: m },
                RingElem::IntMod { residue: b, modulus: n },
            ) if m == n => Ok(RingElem::IntMod {
                residue: ((*a as u128 * *b as u128) % *m as u128) as u64,
                modulus: *m,
            }),
            _ => Err(Error::MixedRings),
        }
    }
}

impl fmt::Display for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingElem::Rational(q) => write!(f, "{}", format_rational(q)),
            RingElem::Gaussian { re, im } => {
                if im.is_zero() {
                    write!(f, "{}", format_rational(re))
                } else if im.is_negative() {
                    write!(f, "{}-{}i", format_rational(re), format_rational(&-im))
                } else {
                    write!(f, "{}+{}i", format_rational(re), format_rational(im))
                }
            }
            RingElem::IntMod { residue, .. } => write!(f, "{residue}"),
        }
    }
}

impl Serialize for RingElem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Serde adapter for rationals in `a/b` text form.
pub mod rational_text {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s, None).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        parse_rational(s, None).unwrap()
    }

    #[test]
    fn primes() {
        assert!(Prime::new(2).is_ok());
        assert!(Prime::new(2147483647).is_ok());
        assert_eq!(Prime::new(6), Err(Error::NonPrime(6)));
        assert_eq!(Prime::new(1), Err(Error::NonPrime(1)));
        assert!(Prime::new(1 << 31).is_err());
    }

    #[test]
    fn valuation_examples() {
        let p5 = Prime::new(5).unwrap();
        let p3 = Prime::new(3).unwrap();
        assert_eq!(valuation(p5, &q("0")), ValuationExp::Infinity);
        assert_eq!(valuation(p5, &q("125")), ValuationExp::Finite(3));
        assert_eq!(valuation(p3, &q("9/10")), ValuationExp::Finite(2));
        assert_eq!(valuation(p3, &q("-5/18")), ValuationExp::Finite(-2));
    }

    #[test]
    fn truncation_examples() {
        let p2 = Prime::new(2).unwrap();
        let p3 = Prime::new(3).unwrap();
        assert_eq!(digit_truncate(p3, &q("0"), 4), q("0"));
        assert_eq!(digit_truncate(p3, &q("1/2"), 2), q("5"));
        assert_eq!(digit_truncate(p2, &q("7"), 2), q("3"));
        // v(1/6) = -1 for p = 3: 1/6 = 3^-1 * 1/2, 1/2 = 2 mod 3
        assert_eq!(digit_truncate(p3, &q("1/6"), 0), q("2/3"));
        assert_eq!(digit_truncate(p3, &q("27"), 2), q("0"));
    }

    #[test]
    fn digit_strings() {
        let p2 = Prime::new(2).unwrap();
        assert_eq!(digits(p2, &q("7"), 0, 4), vec![1, 1, 1, 0]);
        assert_eq!(digits(p2, &q("1/2"), -1, 1), vec![1, 0]);
    }

    #[test]
    fn ring_examples() {
        let g = |s: &str| Ring::Gaussian.parse(s, None).unwrap();
        assert_eq!(g("1+1i").mul(&g("1-1i")).unwrap(), g("2"));
        let m6 = Ring::IntMod(6);
        assert!(m6.from_i64(2).mul(&m6.from_i64(3)).unwrap().is_zero());
        let r = Ring::Rational;
        assert_eq!(
            r.parse("1/2", None).unwrap().add(&r.parse("1/3", None).unwrap()).unwrap(),
            r.parse("5/6", None).unwrap()
        );
        assert_eq!(r.one().add(&m6.one()), Err(Error::MixedRings));
        assert_eq!(
            ring_arith(RingOp::Neg, &m6.from_i64(1), &m6.zero()).unwrap(),
            m6.from_i64(5)
        );
    }

    #[test]
    fn gaussian_text() {
        let g = Ring::Gaussian.parse("1/2-3/4i", None).unwrap();
        assert_eq!(g.to_string(), "1/2-3/4i");
        assert_eq!(Ring::Gaussian.parse("i", None).unwrap().to_string(), "0+1i");
        assert_eq!(Ring::Gaussian.parse("-2i", None).unwrap().to_string(), "0-2i");
    }

    #[test]
    fn p_power_text() {
        let p5 = Prime::new(5).unwrap();
        assert_eq!(parse_rational("p^3", Some(p5)).unwrap(), q("125"));
        assert_eq!(parse_rational("-p^-1", Some(p5)).unwrap(), q("-1/5"));
        assert_eq!(parse_rational("2*p^2", Some(p5)).unwrap(), q("50"));
        assert!(parse_rational("p^2", None).is_err());
        assert!(parse_rational("1/0", None).is_err());
    }

    #[test]
    fn intmod_powers() {
        let p2 = Prime::new(2).unwrap();
        let m = Ring::IntMod(5);
        assert_eq!(m.pow_p(p2, -1).unwrap(), m.from_i64(3));
        assert!(Ring::IntMod(4).pow_p(p2, -1).is_err());
        assert!(Ring::IntMod(4).pow_p(p2, 2).unwrap().is_zero());
    }
}
