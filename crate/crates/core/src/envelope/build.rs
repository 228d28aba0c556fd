use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    ctl, discriminant_check, envelope_point_jets, intermediate_line, iptl_point, make_point,
    oracle_envelope, EnvelopeBranch, EnvelopePoint, EnvelopeTag,
};
use crate::curve::ParamCurve;
use crate::error::{EilError, Result};
use crate::geom::{bounding_box, hausdorff, Vec2};
use crate::locus::{
    parallel_pairs, resample_branch, trace_locus, AlphaParam, BranchKind, PairBranch,
};
use crate::singularities::numeric_cusp_scan;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildOptions {
    /// Marching-squares grid size on the pair torus.
    pub grid_n: usize,
    /// Branch step in the `(t, s)` plane; `None` means `span / 400`.
    pub step: Option<f64>,
    /// Number of curve samples for the coincident-limit component.
    pub ctl_samples: usize,
    pub discriminant: bool,
    pub cusps: bool,
    pub oracle: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            grid_n: 512,
            step: None,
            ctl_samples: 512,
            discriminant: true,
            cusps: true,
            oracle: true,
        }
    }
}

/// All envelope components of a curve at one `α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub alpha: f64,
    pub step: f64,
    pub branches: Vec<EnvelopeBranch>,
    /// Non-fatal problems met while building (one line each).
    pub issues: Vec<String>,
    /// Minimum distance between AEIL and IPTL points (`∞` if either is empty).
    pub aeil_iptl_distance: f64,
}

impl Envelope {
    pub fn branches_tagged(&self, tag: EnvelopeTag) -> impl Iterator<Item = &EnvelopeBranch> {
        self.branches.iter().filter(move |b| b.tag == tag)
    }

    pub fn points(&self, tag: EnvelopeTag) -> Vec<Vec2> {
        self.branches_tagged(tag).flat_map(|b| b.positions()).collect()
    }

    /// Median distance between consecutive points of the tagged branches.
    pub fn plane_step(&self, tag: EnvelopeTag) -> f64 {
        let mut d: Vec<f64> = self
            .branches_tagged(tag)
            .flat_map(|b| {
                b.points
                    .windows(2)
                    .map(|w| w[0].x.distance(w[1].x))
                    .collect::<Vec<_>>()
            })
            .collect();
        if d.is_empty() {
            return f64::NAN;
        }
        d.sort_by(f64::total_cmp);
        d[d.len() / 2]
    }
}

/// Minimum distance between two point sets (`∞` if either is empty).
pub fn min_set_distance(a: &[Vec2], b: &[Vec2]) -> f64 {
    a.par_iter()
        .map(|&p| crate::geom::min_distance(p, b))
        .reduce(|| f64::INFINITY, f64::min)
}

/// Box used to keep far-away points (near asymptotes) out of distance
/// comparisons: the curve's bounding box grown by one scale on each side.
pub(crate) fn comparison_box(curve: &ParamCurve) -> (Vec2, Vec2) {
    let pts = curve
        .sample_params(257)
        .into_iter()
        .filter_map(|t| curve.point(t).ok());
    let (lo, hi) = bounding_box(pts).unwrap_or((Vec2::ZERO, Vec2::ZERO));
    let m = Vec2::new(curve.scale(), curve.scale());
    (lo - m, hi + m)
}

pub(crate) fn in_box(p: Vec2, (lo, hi): (Vec2, Vec2)) -> bool {
    p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
}

fn aeil_branches(
    curve: &ParamCurve,
    alpha: &AlphaParam,
    pair: &PairBranch,
    issues: &mut Vec<String>,
) -> Vec<EnvelopeBranch> {
    let kmin = curve.inflection_threshold();
    let evaluated: Vec<Result<(EnvelopePoint, f64)>> = pair
        .points
        .par_iter()
        .map(|&(t, s)| {
            let cf = envelope_point_jets(&curve.eval_jet(t)?, &curve.eval_jet(s)?, alpha, kmin)?;
            Ok((make_point(curve, cf.x, t, s, alpha, EnvelopeTag::Aeil)?, cf.denominator))
        })
        .collect();
    let mut out = Vec::new();
    let mut current: Vec<EnvelopePoint> = Vec::new();
    let mut last_den = 0.0_f64;
    let mut split = false;
    let flush = |current: &mut Vec<EnvelopePoint>, out: &mut Vec<EnvelopeBranch>| {
        if current.len() >= 2 {
            out.push(EnvelopeBranch::new(EnvelopeTag::Aeil, std::mem::take(current), false));
        } else {
            current.clear();
        }
    };
    let mut failures = 0usize;
    let mut first_failure = None;
    let mut den0 = None;
    for (k, r) in evaluated.into_iter().enumerate() {
        match r {
            Ok((p, den)) => {
                if k == 0 {
                    den0 = Some(den);
                }
                if !current.is_empty() && den.signum() != last_den.signum() {
                    // The branch passes through infinity.
                    split = true;
                    flush(&mut current, &mut out);
                }
                last_den = den;
                current.push(p);
            }
            Err(e) => {
                failures += 1;
                first_failure.get_or_insert(e);
                split = true;
                flush(&mut current, &mut out);
            }
        }
    }
    // Rejoin the run that wraps around the start of a closed pair branch.
    let wraps = pair.closed
        && split
        && !current.is_empty()
        && den0.is_some_and(|d| d.signum() == last_den.signum())
        && out.first().is_some_and(|b| {
            (b.points[0].t, b.points[0].s) == pair.points[0]
        });
    if wraps {
        let first = out.remove(0);
        current.extend(first.points);
    }
    let closed_whole = pair.closed && !split;
    if current.len() >= 2 {
        let mut b = EnvelopeBranch::new(EnvelopeTag::Aeil, current, false);
        b.closed = closed_whole;
        out.push(b);
    }
    if let Some(e) = first_failure {
        issues.push(format!(
            "AEIL: {failures} pair(s) skipped on a branch (first: {e})"
        ));
    }
    out
}

fn iptl_branch(
    curve: &ParamCurve,
    alpha: &AlphaParam,
    pair: &PairBranch,
    issues: &mut Vec<String>,
) -> Vec<EnvelopeBranch> {
    let evaluated: Vec<Result<EnvelopePoint>> = pair
        .points
        .par_iter()
        .map(|&(t, s)| iptl_point(curve, t, s, alpha))
        .collect();
    let mut out = Vec::new();
    let mut current = Vec::new();
    let mut split = false;
    for r in evaluated {
        match r {
            Ok(p) => current.push(p),
            Err(e) => {
                issues.push(format!("IPTL: pair skipped ({e})"));
                split = true;
                if current.len() >= 2 {
                    out.push(EnvelopeBranch::new(EnvelopeTag::Iptl, std::mem::take(&mut current), false));
                } else {
                    current.clear();
                }
            }
        }
    }
    if current.len() >= 2 {
        let mut b = EnvelopeBranch::new(EnvelopeTag::Iptl, current, false);
        b.closed = pair.closed && !split;
        out.push(b);
    }
    out
}

fn resampled(
    curve: &ParamCurve,
    alpha: &AlphaParam,
    branches: Vec<PairBranch>,
    step: f64,
) -> Vec<PairBranch> {
    branches
        .iter()
        .flat_map(|b| resample_branch(curve, b, alpha, step))
        .collect()
}

fn attach_checks(
    curve: &ParamCurve,
    alpha: &AlphaParam,
    branch: &mut EnvelopeBranch,
    opts: &BuildOptions,
    cmp_box: (Vec2, Vec2),
    issues: &mut Vec<String>,
) {
    if opts.discriminant {
        branch.points.par_iter_mut().for_each(|p| {
            p.det_residual = discriminant_check(curve, p.t, p.s, alpha).unwrap_or(f64::NAN);
        });
    }
    if opts.oracle && branch.points.len() >= 2 {
        let lines: Result<Vec<_>> = branch
            .points
            .iter()
            .map(|p| intermediate_line(curve, p.t, p.s, alpha))
            .collect();
        match lines.and_then(|l| oracle_envelope(&l)) {
            Ok(o) => {
                let a: Vec<Vec2> = branch.positions().into_iter().filter(|&p| in_box(p, cmp_box)).collect();
                let b: Vec<Vec2> = o.points.into_iter().filter(|&p| in_box(p, cmp_box)).collect();
                branch.oracle_residual = Some(hausdorff(&a, &b));
            }
            Err(e) => issues.push(format!("{}: oracle failed ({e})", branch.tag.as_str())),
        }
    }
    let extent = bounding_box(branch.positions()).map_or(0.0, |(lo, hi)| (hi - lo).norm());
    if opts.cusps && extent <= 1e-9 * curve.scale() {
        issues.push(format!(
            "{}: branch collapses to a point (extent {extent:e}); cusp scan skipped",
            branch.tag.as_str()
        ));
    } else if opts.cusps {
        match numeric_cusp_scan(branch) {
            Ok(m) => branch.cusp_markers = m,
            Err(e) => issues.push(format!("{}: cusp scan incomplete ({e})", branch.tag.as_str())),
        }
    }
}

/// Builds AEIL, IPTL and CTL for a closed curve. Failures of individual
/// components are recorded in [`Envelope::issues`] instead of aborting.
pub fn build_envelope(curve: &ParamCurve, alpha: &AlphaParam, opts: &BuildOptions) -> Result<Envelope> {
    if !curve.is_closed() {
        return Err(EilError::NotClosed);
    }
    let step = opts.step.unwrap_or(curve.span() / 400.0);
    let mut issues = Vec::new();
    let mut branches = Vec::new();

    match trace_locus(curve, alpha, opts.grid_n) {
        Ok(pairs) => {
            for pb in resampled(curve, alpha, pairs, step) {
                debug_assert_eq!(pb.kind, BranchKind::Transversal);
                branches.extend(aeil_branches(curve, alpha, &pb, &mut issues));
            }
        }
        Err(EilError::NoBranchFound) => issues.push("AEIL: no transversal pairs".into()),
        Err(e) => issues.push(format!("AEIL: {e}")),
    }
    match parallel_pairs(curve, opts.grid_n) {
        Ok(pairs) => {
            for pb in resampled(curve, alpha, pairs, step) {
                branches.extend(iptl_branch(curve, alpha, &pb, &mut issues));
            }
        }
        Err(e) => issues.push(format!("IPTL: {e}")),
    }
    match ctl(curve, alpha, opts.ctl_samples) {
        Ok(b) => branches.extend(b),
        Err(e) => issues.push(format!("CTL: {e}")),
    }

    let cmp_box = comparison_box(curve);
    for b in branches.iter_mut().filter(|b| matches!(b.tag, EnvelopeTag::Aeil | EnvelopeTag::Iptl)) {
        attach_checks(curve, alpha, b, opts, cmp_box, &mut issues);
    }

    let mut env = Envelope {
        alpha: alpha.alpha(),
        step,
        branches,
        issues,
        aeil_iptl_distance: f64::INFINITY,
    };
    env.aeil_iptl_distance = min_set_distance(&env.points(EnvelopeTag::Aeil), &env.points(EnvelopeTag::Iptl));
    if !alpha.is_half() && env.aeil_iptl_distance < 1e-9 * curve.scale() {
        env.issues.push(format!(
            "AEIL and IPTL touch (distance {:e}) away from alpha = 1/2",
            env.aeil_iptl_distance
        ));
    }
    for i in &env.issues {
        warn!("alpha {}: {i}", env.alpha);
    }
    Ok(env)
}
