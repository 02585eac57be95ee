//! Command-line front end. Every subcommand prints one JSON document.

use std::ffi::OsString;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::constructions::{builtin_family, counterexample_report, separation_report, witness_x0};
use crate::egorov::{deciding_ball, eval_at_gpoint, gf_equal, is_negligible_on, point_value, GeneralizedFunction};
use crate::error::{Error, Result};
use crate::generalized::{scalar_is_zero, PointFamily, PointFamilyRepr, Verdict};
use crate::numbers::Prime;
use crate::sequences::{FamilyDoc, IntegerMap, SequenceFamily};
use crate::spaces::{Ball, PointRepr, Space};

pub const DEFAULT_BOUND: u64 = 200;

#[derive(Debug, Parser)]
#[command(name = "egorov", version, about = "Decide equalities in p-adic and ultrametric Egorov algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Indent the JSON output.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Exit with status 2 when a verdict is unknown.
    #[arg(long, global = true)]
    pub require_decision: bool,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// `builtin:counterexample`, `builtin:delta`, `builtin:phi-delta`, a
    /// JSON file, or inline JSON.
    pub family: String,
    /// Prime for builtin families.
    #[arg(long)]
    pub p: Option<u64>,
    /// `phi` for `builtin:phi-delta`, as `a,b` or `t1,t2;a,b`.
    #[arg(long)]
    pub phi: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Value of the k-th term at a point.
    Eval {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        point: String,
    },
    /// The generalized number f(x) and whether it vanishes.
    Pointvalue {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        point: String,
    },
    /// Negligibility on a ball (`center:gamma`) or on every compact set.
    Negligible {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        ball: Option<String>,
        #[arg(long)]
        bound: Option<u64>,
    },
    /// Equality of two families in the quotient.
    Equal {
        #[command(flatten)]
        left: FamilyArgs,
        right: String,
        #[arg(long)]
        bound: Option<u64>,
    },
    /// Value at a generalized point and whether it vanishes.
    GpointEval {
        #[command(flatten)]
        family: FamilyArgs,
        /// `builtin:x0`, a JSON file, or inline JSON.
        #[arg(long)]
        point_family: String,
    },
    /// Report on the moving-bump family.
    Counterexample {
        #[arg(long, default_value_t = 5)]
        p: u64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        bound: Option<u64>,
    },
    /// Compare the embedded delta with a phi-variant.
    Separate {
        #[arg(long, default_value_t = 5)]
        p: u64,
        #[arg(long, default_value = "1,1")]
        phi: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        bound: Option<u64>,
    },
}

/// Exit status and captured output of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": kind, "message": message }).to_string()
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, env_bound: Option<String>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: e.to_string(),
                    stderr: String::new(),
                },
                _ => Outcome {
                    code: 1,
                    stdout: String::new(),
                    stderr: error_json("usage", e.to_string().trim()),
                },
            };
        }
    };
    match execute(&cli, env_bound.as_deref()) {
        Ok((value, verdicts)) => {
            let stdout = if cli.pretty {
                serde_json::to_string_pretty(&value)
            } else {
                serde_json::to_string(&value)
            }
            .expect("json values serialize");
            let undecided = verdicts.iter().any(Verdict::is_unknown);
            Outcome {
                code: if cli.require_decision && undecided { 2 } else { 0 },
                stdout,
                stderr: String::new(),
            }
        }
        Err(e) => Outcome {
            code: 1,
            stdout: String::new(),
            stderr: error_json(e.kind(), &e.to_string()),
        },
    }
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("outputs serialize")
}

fn prime(p: Option<u64>) -> Result<Prime> {
    Prime::new(p.ok_or_else(|| Error::Parse("--p is required".into()))?)
}

fn resolve_bound(flag: Option<u64>, env: Option<&str>) -> Result<u64> {
    let b = match (flag, env) {
        (Some(b), _) => b,
        (None, Some(s)) => s
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("EGOROV_BOUND is not an index: {s:?}")))?,
        (None, None) => DEFAULT_BOUND,
    };
    if b == 0 {
        return Err(Error::Parse("bound must be at least 1".into()));
    }
    Ok(b)
}

fn read_json_source(src: &str) -> Result<String> {
    if src.trim_start().starts_with('{') {
        return Ok(src.to_string());
    }
    std::fs::read_to_string(src).map_err(|e| Error::Parse(format!("cannot read {src}: {e}")))
}

fn load_family(src: &str, p: Option<u64>, phi: Option<&str>) -> Result<SequenceFamily> {
    if src.starts_with("builtin:") {
        let phi = phi.map(IntegerMap::parse).transpose()?;
        return builtin_family(src, prime(p)?, phi.as_ref());
    }
    let doc: FamilyDoc =
        serde_json::from_str(&read_json_source(src)?).map_err(|e| Error::Parse(format!("family document: {e}")))?;
    SequenceFamily::from_doc(&doc)
}

fn load_point_family(src: &str, space: &Space) -> Result<PointFamily> {
    if src == "builtin:x0" {
        let p = space
            .prime()
            .ok_or_else(|| Error::NotSupported("x0 lives in a p-adic space".into()))?;
        let x0 = witness_x0(p);
        if x0.space() != space {
            return Err(Error::MixedSpaces);
        }
        return Ok(x0);
    }
    let repr: PointFamilyRepr =
        serde_json::from_str(&read_json_source(src)?).map_err(|e| Error::Parse(format!("point family: {e}")))?;
    PointFamily::from_repr(space, &repr)
}

fn parse_ball(space: &Space, s: &str) -> Result<Ball> {
    let (c, g) = s
        .rsplit_once(':')
        .ok_or_else(|| Error::Parse(format!("ball must be center:gamma, got {s:?}")))?;
    let gamma = g
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad gamma {g:?}")))?;
    let center = space.parse_point(&PointRepr::Label(c.trim().to_string()))?;
    space.ball(&center, gamma)
}

type Executed = (Value, Vec<Verdict>);

fn execute(cli: &Cli, env_bound: Option<&str>) -> Result<Executed> {
    match &cli.command {
        Command::Eval { family, k, point } => {
            let f = load_family(&family.family, family.p, family.phi.as_deref())?;
            let x = f.space().parse_point(&PointRepr::Label(point.clone()))?;
            let v = f.nth(*k)?.evaluate(&x);
            Ok((json!({ "k": k, "point": x, "value": v }), Vec::new()))
        }
        Command::Pointvalue { family, point } => {
            let f = load_family(&family.family, family.p, family.phi.as_deref())?;
            let x = f.space().parse_point(&PointRepr::Label(point.clone()))?;
            let value = point_value(&f, &x)?;
            let verdict = scalar_is_zero(&value)?;
            Ok((
                json!({ "point": x, "value": to_value(&value), "is_zero": to_value(&verdict) }),
                vec![verdict],
            ))
        }
        Command::Negligible { family, ball, bound } => {
            let bound = resolve_bound(*bound, env_bound)?;
            let f = load_family(&family.family, family.p, family.phi.as_deref())?;
            let (scope, k) = match ball {
                Some(b) => ("ball", parse_ball(f.space(), b)?),
                None => ("global", deciding_ball(&f)?),
            };
            let verdict = is_negligible_on(&f, &k, bound)?;
            Ok((
                json!({ "scope": scope, "ball": to_value(&k), "result": to_value(&verdict) }),
                vec![verdict],
            ))
        }
        Command::Equal { left, right, bound } => {
            let bound = resolve_bound(*bound, env_bound)?;
            let u = load_family(&left.family, left.p, left.phi.as_deref())?;
            let v = load_family(right, left.p, left.phi.as_deref())?;
            let verdict = gf_equal(&GeneralizedFunction::new(u), &GeneralizedFunction::new(v), bound)?;
            Ok((json!({ "result": to_value(&verdict) }), vec![verdict]))
        }
        Command::GpointEval { family, point_family } => {
            let f = load_family(&family.family, family.p, family.phi.as_deref())?;
            let x = load_point_family(point_family, f.space())?;
            let value = eval_at_gpoint(&f, &x)?;
            let verdict = scalar_is_zero(&value)?;
            Ok((
                json!({ "point_family": to_value(&x), "value": to_value(&value), "is_zero": to_value(&verdict) }),
                vec![verdict],
            ))
        }
        Command::Counterexample { p, samples, seed, bound } => {
            let bound = resolve_bound(*bound, env_bound)?;
            let r = counterexample_report(Prime::new(*p)?, *samples, *seed, bound)?;
            let mut verdicts: Vec<Verdict> = r.standard_points.iter().map(|s| s.verdict.clone()).collect();
            verdicts.extend([r.negligible_on_zp.clone(), r.negligible_global.clone(), r.generalized_verdict.clone()]);
            Ok((to_value(&r), verdicts))
        }
        Command::Separate { p, phi, samples, seed, bound } => {
            let bound = resolve_bound(*bound, env_bound)?;
            let r = separation_report(Prime::new(*p)?, &IntegerMap::parse(phi)?, *samples, *seed, bound)?;
            let mut verdicts: Vec<Verdict> = r.standard_points.iter().map(|s| s.verdict.clone()).collect();
            verdicts.extend(r.generalized_points.iter().map(|g| g.verdict.clone()));
            verdicts.push(r.quotient_equality.clone());
            Ok((to_value(&r), verdicts))
        }
    }
}
