//! Output formats: number formatting, CSV tables, JSON reports and SVG
//! figures.

/// Twelve significant digits, plain notation for moderate magnitudes.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if (1e-6..1e15).contains(&a) {
        let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
        format!("{rounded}")
    } else {
        fmt_sci(x)
    }
}

/// Twelve significant digits in scientific notation.
pub fn fmt_sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    format!("{x:.11e}")
}

use serde::Serialize;
use serde_json::{Map, Value};

use crate::envelope::{Envelope, EnvelopeTag};
use crate::error::{EilError, Result};
use crate::singularities::{
    classify_nonparallel, classify_parallel, classify_parallel_inflection, versality_check, MongeJetPair,
    SingularityClass, SingularityVerdict, SweepReport, VersalityResult, EQ_TOL,
};

/// Version of every JSON document written by this crate.
pub const SCHEMA: &str = "1";

/// Rounds every number in a JSON tree to twelve significant digits.
fn round_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_numbers).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_numbers(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with a leading `"schema"` field and numbers rounded to
/// twelve significant digits. Non-finite numbers become `null`.
pub fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    let body = serde_json::to_value(doc).map_err(|e| EilError::InvalidParams(e.to_string()))?;
    let mut out = Map::new();
    out.insert("schema".into(), Value::String(SCHEMA.into()));
    match round_numbers(body) {
        Value::Object(o) => out.extend(o),
        other => {
            out.insert("data".into(), other);
        }
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(out)).map_err(|e| EilError::InvalidParams(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Which analytic classifier applies to a jet pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MongeCase {
    Nonparallel,
    Parallel,
    ParallelInflection,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifyReport {
    pub input: MongeJetPair,
    pub case: MongeCase,
    #[serde(flatten)]
    pub verdict: SingularityVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub versality: Option<VersalityResult>,
}

/// Dispatches a jet pair to its classifier: parallel tangents when `b₁`
/// vanishes, otherwise the concurrent case. Versality is added at `A₂`
/// points of the concurrent case.
pub fn classify(m: &MongeJetPair) -> Result<ClassifyReport> {
    m.validate()?;
    let parallel = m.b1.abs() <= EQ_TOL;
    let (case, mut verdict) = match (parallel, m.p1_inflection) {
        (true, true) => (MongeCase::ParallelInflection, classify_parallel_inflection(m)?),
        (true, false) => (MongeCase::Parallel, classify_parallel(m)?),
        (false, _) => (MongeCase::Nonparallel, classify_nonparallel(m)?),
    };
    let versality = if case == MongeCase::Nonparallel && verdict.klass == SingularityClass::OrdinaryCusp {
        match versality_check(m) {
            Ok(v) => {
                verdict.versal = Some(v.versal);
                Some(v)
            }
            Err(e) => {
                verdict.notes.push(format!("versality not decided: {e}"));
                None
            }
        }
    } else {
        None
    };
    Ok(ClassifyReport {
        input: *m,
        case,
        verdict,
        versality,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CuspSummary {
    pub index: usize,
    pub class: SingularityClass,
    pub t: f64,
    pub s: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchSummary {
    pub tag: EnvelopeTag,
    pub name: &'static str,
    pub closed: bool,
    pub points: usize,
    pub oracle_residual: Option<f64>,
    pub cusps: Vec<CuspSummary>,
}

/// Per-`α` summary of an envelope (the point data goes to CSV).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeSummary {
    pub curve: String,
    pub alpha: f64,
    pub step: f64,
    pub aeil_iptl_distance: f64,
    pub branches: Vec<BranchSummary>,
    pub issues: Vec<String>,
}

impl EnvelopeSummary {
    pub fn new(curve: &str, env: &Envelope) -> Self {
        let branches = env
            .branches
            .iter()
            .map(|b| BranchSummary {
                tag: b.tag,
                name: b.tag.display_name(env.alpha),
                closed: b.closed,
                points: b.points.len(),
                oracle_residual: b.oracle_residual,
                cusps: b
                    .cusp_markers
                    .iter()
                    .map(|m| {
                        let p = &b.points[m.index];
                        CuspSummary {
                            index: m.index,
                            class: m.class,
                            t: p.t,
                            s: p.s,
                            x: p.x.x,
                            y: p.x.y,
                        }
                    })
                    .collect(),
            })
            .collect();
        EnvelopeSummary {
            curve: curve.to_string(),
            alpha: env.alpha,
            step: env.step,
            aeil_iptl_distance: env.aeil_iptl_distance,
            branches,
            issues: env.issues.clone(),
        }
    }
}

/// Sweep result with the settings that produced it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepDocument<'a> {
    pub curve: &'a str,
    pub grid_n: usize,
    pub alphas: &'a [f64],
    #[serde(flatten)]
    pub report: &'a SweepReport,
}
