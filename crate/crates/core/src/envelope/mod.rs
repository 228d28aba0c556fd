//! Intermediate lines and the points of their envelope.
//!
//! For a pair of curve points `p₁ = γ(t)`, `p₂ = γ(s)` and a weight `α`, the
//! intermediate line passes through `M_α = (1 - α) p₁ + α p₂`. Its envelope
//! over the pair torus splits into three pieces:
//!
//! * AEIL, from transversal pairs on the pairing locus;
//! * IPTL, the intermediate points of parallel-tangent pairs;
//! * CTL, the coincident limit `t = s` — the curve itself, or the affine
//!   evolute at `α = 1/2`.

mod build;
mod output;

pub use build::{build_envelope, min_set_distance, BuildOptions, Envelope};
pub(crate) use build::{comparison_box, in_box};
pub use output::{write_envelope_csv, write_envelope_svg};

use serde::{Deserialize, Serialize};

use crate::affine::{
    affine_frame_with, conormal_derivative_with, conormal_with, tangents_parallel, Covector,
};
use crate::curve::{CurveJet, ParamCurve};
use crate::error::{EilError, Result};
use crate::geom::{det3, signed_cbrt, Mat2, Vec2};
use crate::locus::{pairing_residual, AlphaParam};
use crate::singularities::SingularityClass;

/// A line `l1 x + l2 y + l3 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineEq {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl LineEq {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Result<Self> {
        if !(l1.hypot(l2) > 0.0) || !l3.is_finite() {
            return Err(EilError::InvalidParams(format!(
                "degenerate line ({l1}, {l2}, {l3})"
            )));
        }
        Ok(LineEq { l1, l2, l3 })
    }

    /// Line through `p` with direction `d`.
    pub fn through(p: Vec2, d: Vec2) -> Self {
        let n = d.perp();
        LineEq {
            l1: n.x,
            l2: n.y,
            l3: -n.dot(p),
        }
    }

    /// Line `{X : w(X - p) = 0}` for a covector `w`.
    fn from_covector(w: Covector, p: Vec2) -> Self {
        LineEq {
            l1: w.0.x,
            l2: w.0.y,
            l3: -w.apply(p),
        }
    }

    pub fn eval(&self, p: Vec2) -> f64 {
        self.l1 * p.x + self.l2 * p.y + self.l3
    }

    pub fn normal(&self) -> Vec2 {
        Vec2::new(self.l1, self.l2)
    }

    pub fn direction(&self) -> Vec2 {
        Vec2::new(self.l2, -self.l1)
    }

    /// Scaled so that `l1² + l2² = 1`; the sign is kept.
    pub fn normalized(&self) -> LineEq {
        let n = self.l1.hypot(self.l2);
        LineEq {
            l1: self.l1 / n,
            l2: self.l2 / n,
            l3: self.l3 / n,
        }
    }

    pub fn distance(&self, p: Vec2) -> f64 {
        self.eval(p).abs() / self.l1.hypot(self.l2)
    }

    pub fn coeffs(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }

    /// Intersection point, `None` for (numerically) parallel lines.
    pub fn intersect(&self, o: &LineEq) -> Option<Vec2> {
        let det = self.l1 * o.l2 - self.l2 * o.l1;
        let scale = self.l1.hypot(self.l2) * o.l1.hypot(o.l2);
        if !(det.abs() > 1e-12 * scale) {
            return None;
        }
        Some(Vec2::new(
            (self.l2 * o.l3 - self.l3 * o.l2) / det,
            (self.l3 * o.l1 - self.l1 * o.l3) / det,
        ))
    }
}

/// Which envelope component a point belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EnvelopeTag {
    #[serde(rename = "AEIL")]
    Aeil,
    #[serde(rename = "IPTL")]
    Iptl,
    #[serde(rename = "CTL")]
    Ctl,
    #[serde(rename = "EVOLUTE")]
    Evolute,
}

impl EnvelopeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnvelopeTag::Aeil => "AEIL",
            EnvelopeTag::Iptl => "IPTL",
            EnvelopeTag::Ctl => "CTL",
            EnvelopeTag::Evolute => "EVOLUTE",
        }
    }

    /// Conventional name at `α = 1/2` (AESS, MPTL) or the generic one.
    pub fn display_name(&self, alpha: f64) -> &'static str {
        let half = (alpha - 0.5).abs() < 1e-12;
        match (self, half) {
            (EnvelopeTag::Aeil, true) => "AESS",
            (EnvelopeTag::Iptl, true) => "MPTL",
            _ => self.as_str(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub x: Vec2,
    pub t: f64,
    pub s: f64,
    pub alpha: f64,
    pub tag: EnvelopeTag,
    /// `|F(X)|` for the normalised intermediate line of `(t, s)`.
    pub online_residual: f64,
    /// `det M` of the discriminant system; `NaN` when not evaluated.
    pub det_residual: f64,
}

/// A point of a branch flagged by the cusp scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuspMarker {
    pub index: usize,
    pub class: SingularityClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBranch {
    pub tag: EnvelopeTag,
    pub points: Vec<EnvelopePoint>,
    pub closed: bool,
    pub cusp_markers: Vec<CuspMarker>,
    /// Hausdorff distance to the consecutive-line-intersection oracle.
    pub oracle_residual: Option<f64>,
}

impl EnvelopeBranch {
    pub fn new(tag: EnvelopeTag, points: Vec<EnvelopePoint>, closed: bool) -> Self {
        EnvelopeBranch {
            tag,
            points,
            closed,
            cusp_markers: Vec::new(),
            oracle_residual: None,
        }
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.points.iter().map(|p| p.x).collect()
    }
}

/// Pairs closer than this (relative to the curve scale) count as coincident.
const COINCIDENT_REL: f64 = 1e-9;

/// Relative size below which the envelope denominator counts as zero.
pub const DENOMINATOR_REL_TOL: f64 = 1e-12;

/// `|G|` accepted for a pair fed to the envelope formulas.
pub fn pairing_tolerance(curve: &ParamCurve) -> f64 {
    let f = if curve.is_estimated() { crate::curve::ESTIMATED_TOL_FACTOR } else { 1.0 };
    1e-8 * curve.scale().powf(4.0 / 3.0).max(1.0) * f
}

fn intermediate_point(j1: &CurveJet, j2: &CurveJet, alpha: &AlphaParam) -> Vec2 {
    j1.x.lerp(j2.x, alpha.alpha())
}

/// Intermediate line from the conormal formula
/// `F = (1-α) ν₂(C) ν₁(X-M) + α ν₁(C) ν₂(X-M)`.
///
/// The coefficients vary smoothly through parallel pairs, which is what the
/// discriminant differences need.
pub fn intermediate_line_jets(
    j1: &CurveJet,
    j2: &CurveJet,
    alpha: &AlphaParam,
    kappa_min: f64,
) -> Result<LineEq> {
    let nu1 = conormal_with(j1, kappa_min)?.n;
    let nu2 = conormal_with(j2, kappa_min)?.n;
    let c = j2.x - j1.x;
    let a = alpha.alpha();
    let w = nu1 * ((1.0 - a) * nu2.apply(c)) + nu2 * (a * nu1.apply(c));
    let size = nu1.norm() * nu2.norm() * c.norm();
    if !(w.norm() > 1e-9 * size) {
        return Err(EilError::InvalidParams("degenerate intermediate line".into()));
    }
    Ok(LineEq::from_covector(w, intermediate_point(j1, j2, alpha)))
}

/// Line for the coincident pair `t = s`: the tangent line, or the affine
/// normal line when `α = 1/2`.
fn coincident_line(j: &CurveJet, alpha: &AlphaParam, kappa_min: f64) -> Result<LineEq> {
    if alpha.is_half() {
        let f = affine_frame_with(j, kappa_min)?;
        Ok(LineEq::through(j.x, f.normal_affine))
    } else {
        Ok(LineEq::through(j.x, j.d1))
    }
}

/// The intermediate line of the pair `(t, s)`.
///
/// Coincident pairs give the tangent (affine normal at `α = 1/2`), parallel
/// pairs the line through `M_α` along the common tangent direction, and all
/// other pairs the conormal formula.
pub fn intermediate_line(curve: &ParamCurve, t: f64, s: f64, alpha: &AlphaParam) -> Result<LineEq> {
    let j1 = curve.eval_jet(t)?;
    let j2 = curve.eval_jet(s)?;
    let kmin = curve.inflection_threshold();
    if (j2.x - j1.x).norm() <= COINCIDENT_REL * curve.scale() {
        return coincident_line(&j1, alpha, kmin);
    }
    if tangents_parallel(j1.d1, j2.d1) {
        return Ok(LineEq::through(intermediate_point(&j1, &j2, alpha), j1.d1));
    }
    intermediate_line_jets(&j1, &j2, alpha, kmin)
}

/// Closed-form envelope point with the denominator that produced it.
#[derive(Clone, Copy, Debug)]
pub struct ClosedFormPoint {
    pub x: Vec2,
    /// `α ν₂(γ₁') ν₁(C) + b ν₂(C)²`; its sign flips where the branch passes
    /// through infinity.
    pub denominator: f64,
}

/// Envelope point from the conormal decomposition, with `b` defined by
/// `ν₁' = a ν₁ + b ν₂`.
pub fn envelope_point_jets(
    j1: &CurveJet,
    j2: &CurveJet,
    alpha: &AlphaParam,
    kappa_min: f64,
) -> Result<ClosedFormPoint> {
    if tangents_parallel(j1.d1, j2.d1) {
        return Err(EilError::ParallelTangents { t: j1.t, s: j2.t });
    }
    let nu1 = conormal_with(j1, kappa_min)?.n;
    let nu2 = conormal_with(j2, kappa_min)?.n;
    let dnu1 = conormal_derivative_with(j1, kappa_min)?;
    let a = alpha.alpha();
    let c = j2.x - j1.x;
    let (n1c, n2c) = (nu1.apply(c), nu2.apply(c));
    let n2g1 = nu2.apply(j1.d1);
    let n1g2 = nu1.apply(j2.d1);
    let b = dnu1.apply(j1.d1) / n2g1;
    let term1 = a * n2g1 * n1c;
    let term2 = b * n2c * n2c;
    let den = term1 + term2;
    let scale = term1.abs() + term2.abs();
    if !(den.abs() > DENOMINATOR_REL_TOL * scale) {
        return Err(EilError::DenominatorDegenerate { den, scale });
    }
    let v = j1.d1 * ((1.0 - a) * n2c) - j2.d1 * (a * n1c * n2g1 / n1g2);
    Ok(ClosedFormPoint {
        x: intermediate_point(j1, j2, alpha) + v * (a * n1c / den),
        denominator: den,
    })
}

/// Envelope point written with affine-arc-length tangents `T₁, T₂`:
/// `X - M = αλ E D / (αλ D² + E) · ((1-α) T₁ - αλ T₂)`, `D = [T₂, T₁]`,
/// `E = [T₂, C]`.
pub fn envelope_point_affine_jets(
    j1: &CurveJet,
    j2: &CurveJet,
    alpha: &AlphaParam,
    kappa_min: f64,
) -> Result<Vec2> {
    if tangents_parallel(j1.d1, j2.d1) {
        return Err(EilError::ParallelTangents { t: j1.t, s: j2.t });
    }
    let t1 = affine_frame_with(j1, kappa_min)?.tangent_affine;
    let t2 = affine_frame_with(j2, kappa_min)?.tangent_affine;
    let c = j2.x - j1.x;
    let (a, lam) = (alpha.alpha(), alpha.lambda());
    let d = t2.cross(t1);
    let e = t2.cross(c);
    let den = a * lam * d * d + e;
    let scale = (a * lam * d * d).abs() + e.abs();
    if !(den.abs() > DENOMINATOR_REL_TOL * scale) {
        return Err(EilError::DenominatorDegenerate { den, scale });
    }
    Ok(intermediate_point(j1, j2, alpha) + (t1 * (1.0 - a) - t2 * (a * lam)) * (a * lam * e * d / den))
}

/// Affine envelope symmetry set point of a pair:
/// `X = (p₁ + p₂)/2 + E D / (2 (D² + 2E)) · (T₁ - T₂)`.
pub fn aess_point_jets(j1: &CurveJet, j2: &CurveJet, kappa_min: f64) -> Result<Vec2> {
    let t1 = affine_frame_with(j1, kappa_min)?.tangent_affine;
    let t2 = affine_frame_with(j2, kappa_min)?.tangent_affine;
    let c = j2.x - j1.x;
    let d = t2.cross(t1);
    let e = t2.cross(c);
    let den = d * d + 2.0 * e;
    let scale = d * d + 2.0 * e.abs();
    if !(den.abs() > DENOMINATOR_REL_TOL * scale) {
        return Err(EilError::DenominatorDegenerate { den, scale });
    }
    Ok(j1.x.lerp(j2.x, 0.5) + (t1 - t2) * (0.5 * e * d / den))
}

fn check_pairing(curve: &ParamCurve, t: f64, s: f64, alpha: &AlphaParam) -> Result<()> {
    let g = pairing_residual(curve, t, s, alpha)?;
    if g.abs() > pairing_tolerance(curve) {
        return Err(EilError::PairingViolated { t, s, residual: g.abs() });
    }
    Ok(())
}

fn make_point(
    curve: &ParamCurve,
    x: Vec2,
    t: f64,
    s: f64,
    alpha: &AlphaParam,
    tag: EnvelopeTag,
) -> Result<EnvelopePoint> {
    let line = intermediate_line(curve, t, s, alpha)?;
    Ok(EnvelopePoint {
        x,
        t,
        s,
        alpha: alpha.alpha(),
        tag,
        online_residual: line.distance(x),
        det_residual: f64::NAN,
    })
}

/// AEIL point of a transversal pair on the pairing locus.
pub fn envelope_point_closed_form(
    curve: &ParamCurve,
    t: f64,
    s: f64,
    alpha: &AlphaParam,
) -> Result<EnvelopePoint> {
    check_pairing(curve, t, s, alpha)?;
    let p = envelope_point_jets(
        &curve.eval_jet(t)?,
        &curve.eval_jet(s)?,
        alpha,
        curve.inflection_threshold(),
    )?;
    make_point(curve, p.x, t, s, alpha, EnvelopeTag::Aeil)
}

/// Same point from the affine-arc-length expression.
pub fn envelope_point_affine_form(
    curve: &ParamCurve,
    t: f64,
    s: f64,
    alpha: &AlphaParam,
) -> Result<EnvelopePoint> {
    check_pairing(curve, t, s, alpha)?;
    let x = envelope_point_affine_jets(
        &curve.eval_jet(t)?,
        &curve.eval_jet(s)?,
        alpha,
        curve.inflection_threshold(),
    )?;
    make_point(curve, x, t, s, alpha, EnvelopeTag::Aeil)
}

pub fn aess_point(curve: &ParamCurve, t: f64, s: f64) -> Result<Vec2> {
    aess_point_jets(
        &curve.eval_jet(t)?,
        &curve.eval_jet(s)?,
        curve.inflection_threshold(),
    )
}

/// IPTL point of a parallel pair: the intermediate point `M_α`.
pub fn iptl_point(curve: &ParamCurve, t: f64, s: f64, alpha: &AlphaParam) -> Result<EnvelopePoint> {
    let j1 = curve.eval_jet(t)?;
    let j2 = curve.eval_jet(s)?;
    let coincident = (j2.x - j1.x).norm() <= COINCIDENT_REL * curve.scale();
    if coincident || !tangents_parallel(j1.d1, j2.d1) {
        return Err(EilError::NotParallel { t, s });
    }
    make_point(curve, intermediate_point(&j1, &j2, alpha), t, s, alpha, EnvelopeTag::Iptl)
}

/// Coincident-limit component: the curve for `α ≠ 1/2`, the affine
/// evolute for `α = 1/2`.
pub fn ctl(curve: &ParamCurve, alpha: &AlphaParam, samples: usize) -> Result<Vec<EnvelopeBranch>> {
    if alpha.is_half() {
        return affine_evolute(curve, samples);
    }
    let points = curve
        .sample_params(samples)
        .into_iter()
        .map(|t| {
            Ok(EnvelopePoint {
                x: curve.point(t)?,
                t,
                s: t,
                alpha: alpha.alpha(),
                tag: EnvelopeTag::Ctl,
                online_residual: 0.0,
                det_residual: f64::NAN,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![EnvelopeBranch::new(EnvelopeTag::Ctl, points, curve.is_closed())])
}

/// Affine evolute `γ + ξ/μ`, split where `μ` (nearly) vanishes, at
/// inflections, and where the point runs off beyond `10³ · scale`.
pub fn affine_evolute(curve: &ParamCurve, samples: usize) -> Result<Vec<EnvelopeBranch>> {
    let kmin = curve.inflection_threshold();
    let scale = curve.scale();
    let mu_min = 1e-8 / scale.powf(4.0 / 3.0);
    let half = AlphaParam::new(0.5)?;
    let mut branches = Vec::new();
    let mut current = Vec::new();
    let mut split = false;
    for t in curve.sample_params(samples) {
        let jet = curve.eval_jet(t)?;
        let point = affine_frame_with(&jet, kmin).ok().and_then(|f| {
            let x = jet.x + f.normal_affine / f.mu;
            (f.mu.abs() > mu_min && x.is_finite() && (x - jet.x).norm() < 1e3 * scale).then_some(x)
        });
        match point {
            Some(x) => {
                let line = coincident_line(&jet, &half, kmin)?;
                current.push(EnvelopePoint {
                    x,
                    t,
                    s: t,
                    alpha: 0.5,
                    tag: EnvelopeTag::Evolute,
                    online_residual: line.distance(x),
                    det_residual: f64::NAN,
                });
            }
            None => {
                split = true;
                if !current.is_empty() {
                    branches.push(EnvelopeBranch::new(
                        EnvelopeTag::Evolute,
                        std::mem::take(&mut current),
                        false,
                    ));
                }
            }
        }
    }
    if !current.is_empty() {
        if split && curve.is_closed() && !branches.is_empty() && branches[0].points[0].t == curve.domain().0 {
            // The first and last runs are one branch across the seam.
            let mut first = branches.remove(0);
            current.append(&mut first.points);
        }
        branches.push(EnvelopeBranch::new(
            EnvelopeTag::Evolute,
            current,
            !split && curve.is_closed(),
        ));
    }
    Ok(branches)
}

/// Rotation taking the curve to a frame where the tangent at `t` is far
/// from vertical, so that the curve is locally a graph `y = f(x)`.
pub fn local_graph_frame(curve: &ParamCurve, t: f64) -> Result<Mat2> {
    let d1 = curve.eval_jet(t)?.d1;
    Ok(if d1.x.abs() >= 0.3 * d1.norm() {
        Mat2::IDENTITY
    } else {
        Mat2::rotation(-std::f64::consts::FRAC_PI_2)
    })
}

/// `(f', f'')` of the local graph at a jet, in the rotated frame.
pub fn graph_derivatives(jet: &CurveJet, frame: &Mat2) -> Result<(f64, f64)> {
    let u1 = frame.apply(jet.d1);
    let u2 = frame.apply(jet.d2);
    if u1.x.abs() < 1e-12 * u1.norm() {
        return Err(EilError::PreconditionViolated("vertical tangent in graph frame".into()));
    }
    Ok((u1.y / u1.x, u1.cross(u2) / u1.x.powi(3)))
}

/// Slope of the intermediate line in the local graph frame at `t`,
/// `A = ((1-α) f'(t) (α f''(s))^{1/3} - α f'(s) ((1-α) f''(t))^{1/3})
///      / ((1-α) (α f''(s))^{1/3} - α ((1-α) f''(t))^{1/3})`.
///
/// At `s = t` this is `f'(t)` for `α ≠ 1/2`; at `α = 1/2` the expression is
/// `0/0` and the slope of the affine normal is returned instead.
pub fn limit_slope(curve: &ParamCurve, t: f64, s: f64, alpha: &AlphaParam) -> Result<f64> {
    let frame = local_graph_frame(curve, t)?;
    let j1 = curve.eval_jet(t)?;
    let j2 = curve.eval_jet(s)?;
    let (fp_t, fpp_t) = graph_derivatives(&j1, &frame)?;
    let (fp_s, fpp_s) = graph_derivatives(&j2, &frame)?;
    let a = alpha.alpha();
    let cs = signed_cbrt(a * fpp_s);
    let ct = signed_cbrt((1.0 - a) * fpp_t);
    let num = (1.0 - a) * fp_t * cs - a * fp_s * ct;
    let den = (1.0 - a) * cs - a * ct;
    let den_scale = ((1.0 - a) * cs).abs() + (a * ct).abs();
    if !(den.abs() > DENOMINATOR_REL_TOL * den_scale) {
        if alpha.is_half() && curve.param_diff(t, s) == 0.0 {
            let xi = frame.apply(affine_frame_with(&j1, curve.inflection_threshold())?.normal_affine);
            return Ok(xi.y / xi.x);
        }
        return Err(EilError::DenominatorDegenerate { den, scale: den_scale });
    }
    Ok(num / den)
}

/// Normalised line coefficients used for the discriminant determinant.
fn smooth_line(curve: &ParamCurve, t: f64, s: f64, alpha: &AlphaParam) -> Result<[f64; 3]> {
    let j1 = curve.eval_jet(t)?;
    let j2 = curve.eval_jet(s)?;
    let line = intermediate_line_jets(&j1, &j2, alpha, curve.inflection_threshold())
        .or_else(|_| intermediate_line(curve, t, s, alpha))?;
    Ok(line.normalized().coeffs())
}

fn diff5(f: impl Fn(f64) -> Result<[f64; 3]>, h: f64) -> Result<[f64; 3]> {
    let (m2, m1, p1, p2) = (f(-2.0 * h)?, f(-h)?, f(h)?, f(2.0 * h)?);
    Ok(std::array::from_fn(|k| (m2[k] - 8.0 * m1[k] + 8.0 * p1[k] - p2[k]) / (12.0 * h)))
}

/// `det` of the 3×3 matrix of normalised line coefficients and their `s`
/// and `t` derivatives (five-point differences). Vanishes on the
/// discriminant set `F = F_s = F_t = 0`.
pub fn discriminant_check(curve: &ParamCurve, t: f64, s: f64, alpha: &AlphaParam) -> Result<f64> {
    let h = 1e-3 * curve.span();
    let l = smooth_line(curve, t, s, alpha)?;
    let ls = diff5(|d| smooth_line(curve, t, s + d, alpha), h)?;
    let lt = diff5(|d| smooth_line(curve, t + d, s, alpha), h)?;
    Ok(det3(&[l, ls, lt]))
}

/// Consecutive-line intersections: the independent envelope oracle.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OracleEnvelope {
    pub points: Vec<Vec2>,
    /// Indices `i` whose lines `i` and `i + 1` were parallel.
    pub skipped: Vec<usize>,
}

pub fn oracle_envelope(lines: &[LineEq]) -> Result<OracleEnvelope> {
    if lines.len() < 2 {
        return Err(EilError::ConsecutiveParallel(0, lines.len()));
    }
    let mut out = OracleEnvelope::default();
    for (i, w) in lines.windows(2).enumerate() {
        match w[0].intersect(&w[1]) {
            Some(p) => out.points.push(p),
            None => out.skipped.push(i),
        }
    }
    Ok(out)
}
