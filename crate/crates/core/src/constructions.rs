//! Named families: the moving-bump counterexample, stripped-ball families,
//! the embedded delta and its `phi` variants, and the reports built on them.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::egorov::{
    eval_at_gpoint, gf_equal, is_negligible_global, is_negligible_on, point_value, refutation_to_gpoint,
    GeneralizedFunction,
};
use crate::error::{Error, Result};
use crate::generalized::{scalar_equal, scalar_is_zero, PointFamily, ScalarFamily, Verdict};
use crate::numbers::{format_rational, pow_p, valuation, Prime, Rational, Ring, RingElem};
use crate::sequences::{Affine, IntegerMap, MonomialIndicator, SequenceFamily};
use crate::spaces::{Point, Space};
use crate::step::Constancy;

fn qp1(p: Prime) -> Space {
    Space::Qp { p, n: 1 }
}

/// `f_k = chi_{B_k}` with `B_k = {x : |x - p^k| < |p^(2k)|} = Ball(p^k, 2k+1)`.
pub fn counterexample_family(p: Prime) -> SequenceFamily {
    let s = qp1(p);
    SequenceFamily::monomial(
        &s,
        MonomialIndicator {
            coeff_unit: Ring::Rational.one(),
            coeff_exp: IntegerMap::constant(0),
            center_base: Point::qp1(Rational::one()),
            center_exp: Some(IntegerMap::affine(1, 0)),
            radius_exp: IntegerMap::affine(2, 1),
        },
    )
    .expect("counterexample is well formed")
}

/// `delta_k = p^k chi_{Ball(0, k)}`.
pub fn delta_embedding(p: Prime) -> SequenceFamily {
    phi_family(p, IntegerMap::affine(1, 0))
}

/// `f_k = p^k chi_{Ball(0, phi(k))}`.
pub fn phi_delta(p: Prime, phi: &IntegerMap) -> Result<SequenceFamily> {
    phi.check_phi()?;
    Ok(phi_family(p, phi.clone()))
}

fn phi_family(p: Prime, radius: IntegerMap) -> SequenceFamily {
    let s = qp1(p);
    SequenceFamily::monomial(
        &s,
        MonomialIndicator {
            coeff_unit: Ring::Rational.one(),
            coeff_exp: IntegerMap::affine(1, 0),
            center_base: s.origin(),
            center_exp: None,
            radius_exp: radius,
        },
    )
    .expect("delta family is well formed")
}

/// The generalized point `x_0 = [(p^k)_k]`.
pub fn witness_x0(p: Prime) -> PointFamily {
    PointFamily::monomial(&qp1(p), &Point::qp1(Rational::one()), Affine::new(1, 0)).expect("x0 is well formed")
}

fn min_valuation(p: Prime, c: &[Rational]) -> Option<i64> {
    c.iter().filter_map(|x| valuation(p, x).finite()).min()
}

/// `k -> chi_{B_k, theta}` for the stripped balls
/// `B_k = {y : d(x_k, y) < d(x_k, x) / 2}` around points `x_k -> x`.
///
/// `xs` lists the first points of the sequence; they must follow
/// `x_n = c p^(a n + b)` with `a >= 1`, which forces `x = 0`.
pub fn stripped_ball_family(s: &Space, x: &Point, xs: &[Point], theta: &RingElem) -> Result<SequenceFamily> {
    if theta.is_zero() {
        return Err(Error::PreconditionViolated("theta must be nonzero".into()));
    }
    let Some(p) = s.prime() else {
        return Err(Error::PreconditionViolated(
            "a discrete space has no sequence of distinct points converging to a point".into(),
        ));
    };
    s.check_point(x)?;
    for (i, y) in xs.iter().enumerate() {
        s.check_point(y)?;
        if y == x {
            return Err(Error::PreconditionViolated(format!("x_{} equals x", i + 1)));
        }
        if xs[..i].contains(y) {
            return Err(Error::PreconditionViolated(format!("x_{} repeats an earlier point", i + 1)));
        }
    }
    let dist: Vec<i64> = xs
        .iter()
        .map(|y| s.distance_exp(x, y).map(|d| d.finite().expect("distinct points")))
        .collect::<Result<_>>()?;
    if let Some(i) = dist.windows(2).position(|w| w[0] >= w[1]) {
        return Err(Error::PreconditionViolated(format!(
            "d(x, x_{}) is not strictly smaller than d(x, x_{})",
            i + 2,
            i + 1
        )));
    }
    let not_rep = || Error::NotRepresentable("points do not follow x_n = c p^(a n + b) with a >= 1".into());
    let (Point::Qp(first), Point::Qp(_)) = (xs.first().ok_or_else(not_rep)?, xs.get(1).ok_or_else(not_rep)?) else {
        unreachable!("qp space")
    };
    let Point::Qp(xc) = x else { unreachable!("qp space") };
    if xc.iter().any(|v| !v.is_zero()) {
        return Err(not_rep());
    }
    let a = dist[1] - dist[0];
    let v1 = min_valuation(p, first).expect("x_1 is nonzero");
    let b = v1 - a;
    let base: Vec<Rational> = first.iter().map(|v| v * pow_p(p, -v1)).collect();
    for (i, y) in xs.iter().enumerate() {
        let n = i as i64 + 1;
        let expect: Vec<Rational> = base.iter().map(|c| c * pow_p(p, a * n + b)).collect();
        if y != &Point::Qp(expect) {
            return Err(not_rep());
        }
    }
    // d(x_k, x) = p^(-(a k + b)); the strict half-radius drops one more
    // level when p = 2
    let extra = if p.get() == 2 { 2 } else { 1 };
    SequenceFamily::monomial(
        s,
        MonomialIndicator {
            coeff_unit: theta.clone(),
            coeff_exp: IntegerMap::constant(0),
            center_base: Point::Qp(base),
            center_exp: Some(IntegerMap::affine(a, b)),
            radius_exp: IntegerMap::affine(a, b + extra),
        },
    )
}

/// Resolves `builtin:counterexample`, `builtin:delta` and
/// `builtin:phi-delta`.
pub fn builtin_family(name: &str, p: Prime, phi: Option<&IntegerMap>) -> Result<SequenceFamily> {
    match name.strip_prefix("builtin:").unwrap_or(name) {
        "counterexample" => Ok(counterexample_family(p)),
        "delta" => Ok(delta_embedding(p)),
        "phi-delta" => phi_delta(p, phi.unwrap_or(&IntegerMap::affine(1, 1))),
        other => Err(Error::Parse(format!("unknown builtin family {other:?}"))),
    }
}

/// Seeded sample rationals: `0`, then `p^1 .. p^20`, then `u p^v` with
/// `v` uniform in `[lo, hi]` and `u` a random `p`-adic unit.
pub fn sample_rationals(p: Prime, count: usize, seed: u64, lo: i64, hi: i64) -> Vec<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Rational::zero()];
    out.extend((1..=20).map(|i| pow_p(p, i)));
    out.truncate(count);
    let pu = p.get() as i64;
    while out.len() < count {
        let v = rng.gen_range(lo..=hi);
        let num = loop {
            let n: i64 = rng.gen_range(-1000..=1000);
            if n % pu != 0 {
                break n;
            }
        };
        let den = loop {
            let d: i64 = rng.gen_range(1..=60);
            if d % pu != 0 {
                break d;
            }
        };
        out.push(Rational::new(num.into(), den.into()) * pow_p(p, v));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct StandardRecord {
    pub point: String,
    pub valuation: Option<i64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneralizedRecord {
    pub label: String,
    pub point: PointFamily,
    pub delta_value: ScalarFamily,
    pub f_value: ScalarFamily,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationParameters {
    pub p: Prime,
    pub phi: String,
    pub seed: u64,
    pub samples: usize,
    pub valuation_range: (i64, i64),
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationConclusion {
    pub separated: bool,
    pub standard_disagreements: usize,
    pub generalized_disagreements: usize,
    /// `|x_k|_p > p^(-min(k, phi(k)))` eventually, for the agreement point.
    pub agreement_condition_holds: bool,
}

/// Side-by-side comparison of the embedded delta and `phi_delta`.
#[derive(Debug, Clone, Serialize)]
pub struct SeparationReport {
    pub parameters: SeparationParameters,
    pub supports: [String; 2],
    pub standard_points: Vec<StandardRecord>,
    pub generalized_points: Vec<GeneralizedRecord>,
    pub quotient_equality: Verdict,
    pub conclusion: SeparationConclusion,
}

pub fn separation_report(p: Prime, phi: &IntegerMap, samples: usize, seed: u64, bound: u64) -> Result<SeparationReport> {
    let f = phi_delta(p, phi)?;
    let d = delta_embedding(p);
    let s = qp1(p);
    let hi = (3 * phi.table_len() as i64).max(30);
    let mut standard_points = Vec::with_capacity(samples);
    for x in sample_rationals(p, samples, seed, -5, hi) {
        let pt = Point::qp1(x.clone());
        let verdict = scalar_equal(&point_value(&d, &pt)?, &point_value(&f, &pt)?)?;
        standard_points.push(StandardRecord {
            point: format_rational(&x),
            valuation: valuation(p, &x).finite(),
            verdict,
        });
    }
    // x_k = p^(k-1) stays outside both supports once phi(k) >= k
    let agreement = PointFamily::monomial(&s, &Point::qp1(Rational::one()), Affine::new(1, -1))?;
    let agreement_condition_holds = phi.eventually_ge(&IntegerMap::affine(1, 0)).0;
    let mut generalized_points = Vec::new();
    for (label, x) in [("x0 = (p^k)_k", witness_x0(p)), ("agreement point (p^(k-1))_k", agreement)] {
        let delta_value = eval_at_gpoint(&d, &x)?;
        let f_value = eval_at_gpoint(&f, &x)?;
        let verdict = scalar_equal(&delta_value, &f_value)?;
        generalized_points.push(GeneralizedRecord {
            label: label.into(),
            point: x,
            delta_value,
            f_value,
            verdict,
        });
    }
    let quotient_equality = gf_equal(&GeneralizedFunction::new(d), &GeneralizedFunction::new(f), bound)?;
    let standard_disagreements = standard_points.iter().filter(|r| r.verdict.is_refuted()).count();
    let generalized_disagreements = generalized_points.iter().filter(|r| r.verdict.is_refuted()).count();
    Ok(SeparationReport {
        parameters: SeparationParameters {
            p,
            phi: phi.to_string(),
            seed,
            samples,
            valuation_range: (-5, hi),
        },
        supports: [
            "delta_k = p^k on |x|_p <= p^(-k), i.e. Ball(0, k)".into(),
            "f_k = p^k on |x|_p <= p^(-phi(k)), i.e. Ball(0, phi(k))".into(),
        ],
        standard_points,
        generalized_points,
        quotient_equality,
        conclusion: SeparationConclusion {
            separated: generalized_disagreements > 0 && standard_disagreements == 0,
            standard_disagreements,
            generalized_disagreements,
            agreement_condition_holds,
        },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub p: Prime,
    pub seed: u64,
    pub samples: usize,
    /// The strict ball as written and its clopen form.
    pub support: [String; 2],
    pub standard_points: Vec<StandardRecord>,
    pub negligible_on_zp: Verdict,
    pub negligible_global: Verdict,
    pub generalized_point: PointFamily,
    pub generalized_value: ScalarFamily,
    pub generalized_verdict: Verdict,
    /// First index from which `f_k(0) = 0`.
    pub zero_index_at_origin: u64,
    /// Constancy exponent of `f_1` at `0`: `f_1` vanishes on `Ball(0, e)`.
    pub f1_constancy_at_origin: i64,
    pub vanishes_pointwise: bool,
    pub nonzero_in_quotient: bool,
}

pub fn counterexample_report(p: Prime, samples: usize, seed: u64, bound: u64) -> Result<CounterexampleReport> {
    let f = counterexample_family(p);
    let s = f.space().clone();
    let mut standard_points = Vec::with_capacity(samples);
    for x in sample_rationals(p, samples, seed, -5, 30) {
        let verdict = scalar_is_zero(&point_value(&f, &Point::qp1(x.clone()))?)?;
        standard_points.push(StandardRecord {
            point: format_rational(&x),
            valuation: valuation(p, &x).finite(),
            verdict,
        });
    }
    let zp = s.ball(&s.origin(), 0)?;
    let negligible_on_zp = is_negligible_on(&f, &zp, bound)?;
    let negligible_global = is_negligible_global(&f, bound)?;
    let generalized_point = refutation_to_gpoint(&f, &negligible_on_zp)?;
    let generalized_value = eval_at_gpoint(&f, &generalized_point)?;
    let generalized_verdict = scalar_is_zero(&generalized_value)?;
    let zero_index_at_origin = scalar_is_zero(&point_value(&f, &s.origin())?)?
        .proved_index()
        .unwrap_or(0);
    let f1_constancy_at_origin = match f.nth(1)?.constancy_exponent(&s.origin())? {
        Constancy::Finite(e) => e,
        Constancy::EverywhereConstant => i64::MIN,
    };
    let vanishes_pointwise = standard_points.iter().all(|r| r.verdict.is_proved());
    Ok(CounterexampleReport {
        p,
        seed,
        samples,
        support: [
            "B_k = {x in Z_p : |x - p^k|_p < |p^(2k)|_p}".into(),
            "B_k = Ball(p^k, 2k+1)".into(),
        ],
        standard_points,
        nonzero_in_quotient: negligible_global.is_refuted(),
        negligible_on_zp,
        negligible_global,
        generalized_point,
        generalized_value,
        generalized_verdict,
        zero_index_at_origin,
        f1_constancy_at_origin,
        vanishes_pointwise,
    })
}
