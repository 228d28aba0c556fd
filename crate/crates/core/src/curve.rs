//! Smooth plane curves with derivative jets, built-in test curves and affine
//! maps acting on them.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{EilError, Result};
use crate::geom::{Mat2, Vec2};
use crate::numeric::central5;

/// Position and derivatives up to order four at one parameter value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveJet {
    pub t: f64,
    pub x: Vec2,
    pub d1: Vec2,
    pub d2: Vec2,
    pub d3: Vec2,
    pub d4: Vec2,
    /// Derivatives were estimated by finite differences rather than
    /// evaluated exactly. Downstream tolerances widen by
    /// [`ESTIMATED_TOL_FACTOR`].
    pub estimated: bool,
}

/// Tolerance multiplier applied to quantities derived from estimated jets.
pub const ESTIMATED_TOL_FACTOR: f64 = 10.0;

impl CurveJet {
    pub fn is_regular(&self, tol: f64) -> bool {
        self.d1.norm() > tol
    }

    /// `[γ_t, γ_tt]`.
    pub fn kappa(&self) -> f64 {
        self.d1.cross(self.d2)
    }

    /// `[γ_t, γ_ttt]`, the derivative of [`CurveJet::kappa`].
    pub fn kappa_t(&self) -> f64 {
        self.d1.cross(self.d3)
    }

    /// `[γ_t, γ_tttt] + [γ_tt, γ_ttt]`.
    pub fn kappa_tt(&self) -> f64 {
        self.d1.cross(self.d4) + self.d2.cross(self.d3)
    }

    /// Tolerance factor for this jet (1 for exact jets).
    pub fn tol_factor(&self) -> f64 {
        if self.estimated {
            ESTIMATED_TOL_FACTOR
        } else {
            1.0
        }
    }
}

type JetFn = dyn Fn(f64) -> CurveJet + Send + Sync;

/// A smooth parametrised plane curve, closed or an open arc.
///
/// Immutable after construction; the evaluator can be shared across threads.
#[derive(Clone)]
pub struct ParamCurve {
    label: String,
    domain: (f64, f64),
    closed: bool,
    estimated: bool,
    scale: f64,
    eval: Arc<JetFn>,
}

impl fmt::Debug for ParamCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamCurve")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("closed", &self.closed)
            .field("estimated", &self.estimated)
            .field("scale", &self.scale)
            .finish()
    }
}

impl ParamCurve {
    /// Curve with an exact jet evaluator.
    pub fn analytic<F>(label: impl Into<String>, domain: (f64, f64), closed: bool, eval: F) -> Self
    where
        F: Fn(f64) -> CurveJet + Send + Sync + 'static,
    {
        Self::build(label.into(), domain, closed, false, Arc::new(eval))
    }

    /// Curve given only by positions; derivatives are estimated with
    /// five-point central differences.
    pub fn from_position_fn<F>(
        label: impl Into<String>,
        domain: (f64, f64),
        closed: bool,
        pos: F,
    ) -> Self
    where
        F: Fn(f64) -> Vec2 + Send + Sync + 'static,
    {
        let h = fd_step(domain.1 - domain.0);
        let eval = move |t: f64| estimate_jet(&pos, t, h);
        Self::build(label.into(), domain, closed, true, Arc::new(eval))
    }

    /// Curve interpolating `(t, x, y)` samples with a local degree-six
    /// polynomial; jets are finite-difference estimates of that interpolant.
    ///
    /// For closed curves the period is inferred from the spacing; a final
    /// sample repeating the first is dropped.
    pub fn from_samples(samples: &[[f64; 3]], closed: bool) -> Result<Self> {
        let mut pts: Vec<[f64; 3]> = samples.to_vec();
        if pts.len() < 8 {
            return Err(EilError::InvalidParams(format!(
                "need at least 8 samples, got {}",
                pts.len()
            )));
        }
        if pts.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(EilError::InvalidParams(
                "sample parameters must be strictly increasing".into(),
            ));
        }
        let (t0, t1, period) = if closed {
            let first = pts[0];
            let last = pts[pts.len() - 1];
            let span = last[0] - first[0];
            let gap = ((last[1] - first[1]).powi(2) + (last[2] - first[2]).powi(2)).sqrt();
            let extent = pts
                .iter()
                .map(|p| ((p[1] - first[1]).powi(2) + (p[2] - first[2]).powi(2)).sqrt())
                .fold(0.0, f64::max);
            if gap <= 1e-9 * extent.max(1.0) {
                pts.pop();
                (first[0], last[0], span)
            } else {
                let period = span * pts.len() as f64 / (pts.len() - 1) as f64;
                (first[0], first[0] + period, period)
            }
        } else {
            (pts[0][0], pts[pts.len() - 1][0], 0.0)
        };
        let interp = Arc::new(LocalInterp {
            pts,
            closed,
            period,
        });
        let h = fd_step(t1 - t0);
        let eval = move |t: f64| {
            let window = interp.window(t);
            let pos = |tau: f64| interp.eval_window(&window, tau);
            estimate_jet(&pos, t, h)
        };
        Ok(Self::build(
            "samples".into(),
            (t0, t1),
            closed,
            true,
            Arc::new(eval),
        ))
    }

    fn build(label: String, domain: (f64, f64), closed: bool, estimated: bool, eval: Arc<JetFn>) -> Self {
        let n = 256;
        let pts = (0..=n).map(|i| {
            let t = domain.0 + (domain.1 - domain.0) * i as f64 / n as f64;
            eval(t).x
        });
        let scale = crate::geom::bounding_box(pts)
            .map(|(lo, hi)| (hi - lo).norm())
            .filter(|d| *d > 0.0)
            .unwrap_or(1.0);
        ParamCurve {
            label,
            domain,
            closed,
            estimated,
            scale,
            eval,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn span(&self) -> f64 {
        self.domain.1 - self.domain.0
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn is_estimated(&self) -> bool {
        self.estimated
    }

    /// Bounding-box diagonal, used to make tolerances scale-aware.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `|κ|` below which a point is treated as an inflection.
    pub fn inflection_threshold(&self) -> f64 {
        1e-9 * self.scale.powi(3)
    }

    /// Reduce a parameter modulo the period (closed curves) into `[t0, t1)`.
    pub fn reduce(&self, t: f64) -> f64 {
        if !self.closed {
            return t;
        }
        let (t0, _) = self.domain;
        let r = t0 + (t - t0).rem_euclid(self.span());
        if r >= self.domain.1 {
            t0
        } else {
            r
        }
    }

    /// Signed parameter difference `s - t` reduced into `[-T/2, T/2)` on a
    /// closed curve; plain difference on an arc.
    pub fn param_diff(&self, t: f64, s: f64) -> f64 {
        if !self.closed {
            return s - t;
        }
        let p = self.span();
        (s - t + 0.5 * p).rem_euclid(p) - 0.5 * p
    }

    pub fn eval_jet(&self, t: f64) -> Result<CurveJet> {
        let (lo, hi) = self.domain;
        let t = if self.closed {
            self.reduce(t)
        } else {
            let slack = 1e-12 * self.span().max(1.0);
            if t < lo - slack || t > hi + slack || !t.is_finite() {
                return Err(EilError::OutsideDomain { t, lo, hi });
            }
            t
        };
        let mut jet = (self.eval)(t);
        jet.t = t;
        Ok(jet)
    }

    /// Position only; panics are impossible but the domain check still
    /// applies to arcs.
    pub fn point(&self, t: f64) -> Result<Vec2> {
        Ok(self.eval_jet(t)?.x)
    }

    /// `n` parameter values evenly spaced over the domain. Closed curves
    /// omit the endpoint that duplicates the start.
    pub fn sample_params(&self, n: usize) -> Vec<f64> {
        let (t0, t1) = self.domain;
        if self.closed {
            (0..n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect()
        } else {
            let d = (n.max(2) - 1) as f64;
            (0..n.max(2)).map(|i| t0 + (t1 - t0) * i as f64 / d).collect()
        }
    }

    /// Checks that jets at the two domain ends agree (position, first and
    /// second derivatives) within a relative tolerance.
    pub fn check_periodicity(&self, rel_tol: f64) -> bool {
        let a = (self.eval)(self.domain.0);
        let b = (self.eval)(self.domain.1);
        let close = |u: Vec2, v: Vec2| (u - v).norm() <= rel_tol * (1.0 + u.norm().max(v.norm()));
        close(a.x, b.x) && close(a.d1, b.d1) && close(a.d2, b.d2)
    }

    /// Image of this curve under an affine map.
    pub fn transform(&self, map: &AffineMap) -> Result<ParamCurve> {
        map.check()?;
        let inner = self.eval.clone();
        let map = *map;
        let eval = move |t: f64| map.apply_jet(&inner(t));
        Ok(Self::build(
            format!("{}+affine", self.label),
            self.domain,
            self.closed,
            self.estimated,
            Arc::new(eval),
        ))
    }
}

fn fd_step(span: f64) -> f64 {
    1e-4_f64.max(span.abs() * 1e-5)
}

/// Step multipliers per derivative order; third and fourth derivatives use
/// wider stencils to keep round-off below truncation error.
const FD_STEP_FACTORS: [f64; 4] = [1.0, 1.0, 10.0, 50.0];

fn estimate_jet<F: Fn(f64) -> Vec2>(pos: &F, t: f64, h: f64) -> CurveJet {
    let d = |k: usize| central5(pos, t, h * FD_STEP_FACTORS[k - 1], k);
    CurveJet {
        t,
        x: pos(t),
        d1: d(1),
        d2: d(2),
        d3: d(3),
        d4: d(4),
        estimated: true,
    }
}

/// Local Lagrange interpolation over sampled points.
struct LocalInterp {
    pts: Vec<[f64; 3]>,
    closed: bool,
    period: f64,
}

impl LocalInterp {
    const HALF: isize = 3;

    /// Seven `(t, x, y)` nodes around `t`, unwrapped for closed curves.
    fn window(&self, t: f64) -> [[f64; 3]; 7] {
        let n = self.pts.len() as isize;
        let t0 = self.pts[0][0];
        let tt = if self.closed {
            t0 + (t - t0).rem_euclid(self.period)
        } else {
            t
        };
        let idx = match self
            .pts
            .binary_search_by(|p| p[0].partial_cmp(&tt).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i as isize,
            Err(i) => {
                let i = i as isize;
                if i == 0 {
                    0
                } else if i >= n {
                    n - 1
                } else {
                    let a = self.pts[(i - 1) as usize][0];
                    let b = self.pts[i as usize][0];
                    if tt - a <= b - tt {
                        i - 1
                    } else {
                        i
                    }
                }
            }
        };
        let mut out = [[0.0; 3]; 7];
        let start = if self.closed {
            idx - Self::HALF
        } else {
            (idx - Self::HALF).clamp(0, n - 7)
        };
        let shift = tt - t;
        for (k, o) in out.iter_mut().enumerate() {
            let j = start + k as isize;
            let (jj, wrap) = (j.rem_euclid(n), j.div_euclid(n));
            let p = self.pts[jj as usize];
            *o = [p[0] + wrap as f64 * self.period - shift, p[1], p[2]];
        }
        out
    }

    fn eval_window(&self, w: &[[f64; 3]; 7], t: f64) -> Vec2 {
        let mut acc = Vec2::ZERO;
        for (i, pi) in w.iter().enumerate() {
            let mut l = 1.0;
            for (j, pj) in w.iter().enumerate() {
                if i != j {
                    l *= (t - pj[0]) / (pi[0] - pj[0]);
                }
            }
            acc += Vec2::new(pi[1], pi[2]) * l;
        }
        acc
    }
}

/// `x ↦ linear·x + translation`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub linear: Mat2,
    pub translation: Vec2,
}

impl AffineMap {
    pub fn new(linear: Mat2, translation: Vec2) -> Result<Self> {
        let m = AffineMap {
            linear,
            translation,
        };
        m.check()?;
        Ok(m)
    }

    pub fn identity() -> Self {
        AffineMap {
            linear: Mat2::IDENTITY,
            translation: Vec2::ZERO,
        }
    }

    fn check(&self) -> Result<()> {
        let d = self.linear.det();
        if d.abs() <= 1e-14 * self.linear.max_abs().powi(2) || !d.is_finite() {
            return Err(EilError::SingularMap(d));
        }
        Ok(())
    }

    pub fn det(&self) -> f64 {
        self.linear.det()
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        self.linear.apply(p) + self.translation
    }

    pub fn apply_vector(&self, v: Vec2) -> Vec2 {
        self.linear.apply(v)
    }

    pub fn apply_jet(&self, j: &CurveJet) -> CurveJet {
        CurveJet {
            t: j.t,
            x: self.apply(j.x),
            d1: self.apply_vector(j.d1),
            d2: self.apply_vector(j.d2),
            d3: self.apply_vector(j.d3),
            d4: self.apply_vector(j.d4),
            estimated: j.estimated,
        }
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let inv = self
            .linear
            .inverse()
            .ok_or(EilError::SingularMap(self.linear.det()))?;
        Ok(AffineMap {
            linear: inv,
            translation: -inv.apply(self.translation),
        })
    }
}

/// `Σ_k a·ω^k·cos(ωt + φ + kπ/2)`-style jets of a trigonometric term.
#[derive(Clone, Copy)]
struct Trig {
    amp: f64,
    freq: f64,
    phase: f64,
}

impl Trig {
    fn cos_deriv(&self, t: f64, k: i32) -> f64 {
        self.amp * self.freq.powi(k) * (self.freq * t + self.phase + f64::from(k) * FRAC_PI_2).cos()
    }

    fn sin_deriv(&self, t: f64, k: i32) -> f64 {
        self.amp * self.freq.powi(k) * (self.freq * t + self.phase + f64::from(k) * FRAC_PI_2).sin()
    }
}

fn trig_jet(t: f64, xs: &[Trig], ys: &[Trig]) -> CurveJet {
    let d = |k: i32| {
        Vec2::new(
            xs.iter().map(|c| c.cos_deriv(t, k)).sum(),
            ys.iter().map(|c| c.sin_deriv(t, k)).sum(),
        )
    };
    CurveJet {
        t,
        x: d(0),
        d1: d(1),
        d2: d(2),
        d3: d(3),
        d4: d(4),
        estimated: false,
    }
}

/// Circle of radius `r` centred at the origin, period 2π.
pub fn circle(r: f64) -> Result<ParamCurve> {
    ellipse(r, r).map(|mut c| {
        c.label = "circle".into();
        c
    })
}

/// Ellipse `(a cos t, b sin t)`, period 2π.
pub fn ellipse(a: f64, b: f64) -> Result<ParamCurve> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(EilError::InvalidParams(format!(
            "ellipse axes must be positive, got ({a}, {b})"
        )));
    }
    let xs = [Trig {
        amp: a,
        freq: 1.0,
        phase: 0.0,
    }];
    let ys = [Trig {
        amp: b,
        freq: 1.0,
        phase: 0.0,
    }];
    Ok(ParamCurve::analytic("ellipse", (0.0, TAU), true, move |t| {
        trig_jet(t, &xs, &ys)
    }))
}

/// The bean curve `(0.1 cos 2πt + cos πt, 0.1 sin(2πt + 1) + sin πt)` on
/// `[0, 2]`.
pub fn bean() -> ParamCurve {
    let xs = [
        Trig {
            amp: 0.1,
            freq: 2.0 * PI,
            phase: 0.0,
        },
        Trig {
            amp: 1.0,
            freq: PI,
            phase: 0.0,
        },
    ];
    let ys = [
        Trig {
            amp: 0.1,
            freq: 2.0 * PI,
            phase: 1.0,
        },
        Trig {
            amp: 1.0,
            freq: PI,
            phase: 0.0,
        },
    ];
    ParamCurve::analytic("bean", (0.0, 2.0), true, move |t| trig_jet(t, &xs, &ys))
}

/// Graph `(t, Σ c_k t^k)` of a polynomial given by power-basis coefficients,
/// as an open arc over `domain`.
pub fn graph_arc(coeffs: &[f64], domain: (f64, f64)) -> Result<ParamCurve> {
    if !(domain.0 < domain.1) {
        return Err(EilError::InvalidParams(format!("empty domain {domain:?}")));
    }
    let poly = crate::numeric::Poly(coeffs.to_vec());
    Ok(ParamCurve::analytic("graph_arc", domain, false, move |t| {
        let f = |k: usize| poly.deriv_at(t, k);
        CurveJet {
            t,
            x: Vec2::new(t, f(0)),
            d1: Vec2::new(1.0, f(1)),
            d2: Vec2::new(0.0, f(2)),
            d3: Vec2::new(0.0, f(3)),
            d4: Vec2::new(0.0, f(4)),
            estimated: false,
        }
    }))
}

/// Monge-form arc `(t, Σ_{k≥2} a_k t^k / k!)` through the origin with a
/// horizontal tangent there. `taylor[0]` is `a_2 = f''(0)`, `taylor[1]` is
/// `a_3 = f'''(0)` and so on.
pub fn monge_arc(taylor: &[f64], domain: (f64, f64)) -> Result<ParamCurve> {
    let mut coeffs = vec![0.0, 0.0];
    let mut fact = 1.0;
    for (i, a) in taylor.iter().enumerate() {
        let k = i + 2;
        fact *= if k == 2 { 2.0 } else { k as f64 };
        coeffs.push(a / fact);
    }
    graph_arc(&coeffs, domain).map(|mut c| {
        c.label = "monge_arc".into();
        c
    })
}

/// Names accepted by [`builtin_curve`].
pub const BUILTIN_NAMES: [&str; 5] = ["circle", "ellipse", "bean", "parabola_arc", "monge_arc"];

/// Built-in curve by name.
///
/// * `circle [r]` (default r = 1)
/// * `ellipse a b`
/// * `bean`
/// * `parabola_arc [t0 t1]`: `(t, t²/2)` on `[t0, t1]` (default `[-2, 2]`)
/// * `monge_arc a2 a3 ...`: Taylor coefficients, domain `[-1, 1]`
pub fn builtin_curve(name: &str, params: &[f64]) -> Result<ParamCurve> {
    match name {
        "circle" => match params {
            [] => circle(1.0),
            [r] => circle(*r),
            _ => Err(EilError::InvalidParams("circle takes [r]".into())),
        },
        "ellipse" => match params {
            [a, b] => ellipse(*a, *b),
            _ => Err(EilError::InvalidParams("ellipse takes [a, b]".into())),
        },
        "bean" => Ok(bean()),
        "parabola_arc" => {
            let dom = match params {
                [] => (-2.0, 2.0),
                [a, b] => (*a, *b),
                _ => return Err(EilError::InvalidParams("parabola_arc takes [t0, t1]".into())),
            };
            graph_arc(&[0.0, 0.0, 0.5], dom).map(|mut c| {
                c.label = "parabola_arc".into();
                c
            })
        }
        "monge_arc" => {
            if params.is_empty() {
                return Err(EilError::InvalidParams("monge_arc needs [a2, ...]".into()));
            }
            monge_arc(params, (-1.0, 1.0))
        }
        other => Err(EilError::UnknownCurve(other.to_string())),
    }
}

/// Serializable curve description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CurveSpec {
    Named {
        name: String,
        #[serde(default)]
        params: Vec<f64>,
    },
    Sampled {
        samples: Vec<[f64; 3]>,
        closed: bool,
    },
}

impl CurveSpec {
    pub fn build(&self) -> Result<ParamCurve> {
        match self {
            CurveSpec::Named { name, params } => builtin_curve(name, params),
            CurveSpec::Sampled { samples, closed } => ParamCurve::from_samples(samples, *closed),
        }
    }
}
