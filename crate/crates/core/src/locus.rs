//! Parameter pairs `(t, s)` that contribute to the envelope.
//!
//! Two loci live on the `(t, s)` torus of a closed curve:
//!
//! * the transversal pairing locus `G(t, s) = ν₁(C) + λ ν₂(C) = 0`, with
//!   chord `C = γ(s) - γ(t)` and `λ = ((1 - α)/α)^{1/3}`;
//! * the parallel-tangent locus `P(t, s) = [γ'(t), γ'(s)] = 0`, `t ≠ s`.
//!
//! Both are traced with marching squares on a `grid_n × grid_n` grid,
//! skipping a band around the diagonal, and each vertex is refined onto the
//! zero set with a bracketed Newton iteration along its cell edge.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::{conormal_derivative_with, conormal_with, tangents_parallel, Covector};
use crate::curve::{CurveJet, ParamCurve};
use crate::error::{EilError, Result};
use crate::geom::{signed_cbrt, Vec2};
use crate::numeric::newton_bracketed;

/// Intermediate-point weight with its derived `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaParam {
    alpha: f64,
    lambda: f64,
}

impl AlphaParam {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(EilError::InvalidAlpha(alpha));
        }
        Ok(AlphaParam {
            alpha,
            lambda: signed_cbrt((1.0 - alpha) / alpha),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `α = 1/2` (mid-lines), where the envelope components connect.
    pub fn is_half(&self) -> bool {
        (self.alpha - 0.5).abs() < 1e-12
    }

    /// `1 - α`, the weight seen from the swapped pair.
    pub fn swapped(&self) -> AlphaParam {
        AlphaParam::new(1.0 - self.alpha).expect("1 - alpha stays in (0, 1)")
    }
}

/// Which residual a branch solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchKind {
    Transversal,
    Parallel,
}

impl BranchKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BranchKind::Transversal => "transversal",
            BranchKind::Parallel => "parallel",
        }
    }
}

/// A traced solution branch on the `(t, s)` torus. Parameters are reduced
/// into the curve domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairBranch {
    pub kind: BranchKind,
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

impl PairBranch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The same branch seen from swapped pairs `(s, t)`.
    pub fn swapped(&self) -> PairBranch {
        PairBranch {
            kind: self.kind,
            points: self.points.iter().map(|&(t, s)| (s, t)).collect(),
            closed: self.closed,
        }
    }
}

/// Residual tolerance every refined vertex must meet (analytic jets).
pub const TOL_REFINE: f64 = 1e-10;

/// Pairing residual and its partial derivatives, from jets.
#[derive(Clone, Copy, Debug)]
pub struct PairingValue {
    pub g: f64,
    pub g_t: f64,
    pub g_s: f64,
}

/// Conormal data cached per grid node.
#[derive(Clone, Copy)]
struct NodeData {
    jet: CurveJet,
    nu: Covector,
    dnu: Covector,
}

impl NodeData {
    fn new(jet: CurveJet, kappa_min: f64) -> Result<Self> {
        Ok(NodeData {
            jet,
            nu: conormal_with(&jet, kappa_min)?.n,
            dnu: conormal_derivative_with(&jet, kappa_min)?,
        })
    }
}

fn pairing_from_nodes(n1: &NodeData, n2: &NodeData, alpha: &AlphaParam) -> PairingValue {
    let c = n2.jet.x - n1.jet.x;
    let lam = alpha.lambda();
    PairingValue {
        g: n1.nu.apply(c) + lam * n2.nu.apply(c),
        g_t: n1.dnu.apply(c) - lam * n2.nu.apply(n1.jet.d1),
        g_s: n1.nu.apply(n2.jet.d1) + lam * n2.dnu.apply(c),
    }
}

/// `G = ν₁(C) + λ ν₂(C)` with its partials, evaluated on two jets.
pub fn pairing_value_jets(
    j1: &CurveJet,
    j2: &CurveJet,
    alpha: &AlphaParam,
    kappa_min: f64,
) -> Result<PairingValue> {
    let n1 = NodeData::new(*j1, kappa_min)?;
    let n2 = NodeData::new(*j2, kappa_min)?;
    Ok(pairing_from_nodes(&n1, &n2, alpha))
}

pub fn pairing_residual(curve: &ParamCurve, t: f64, s: f64, alpha: &AlphaParam) -> Result<f64> {
    pairing_value(curve, t, s, alpha).map(|v| v.g)
}

pub fn pairing_value(curve: &ParamCurve, t: f64, s: f64, alpha: &AlphaParam) -> Result<PairingValue> {
    pairing_value_jets(
        &curve.eval_jet(t)?,
        &curve.eval_jet(s)?,
        alpha,
        curve.inflection_threshold(),
    )
}

/// `[γ₁_s + λ γ₂_s, γ₂ - γ₁]` with affine-arc-length tangents computed
/// pointwise from the given parametrisation.
pub fn pairing_residual_affine(
    curve: &ParamCurve,
    t: f64,
    s: f64,
    alpha: &AlphaParam,
) -> Result<f64> {
    let kmin = curve.inflection_threshold();
    let f1 = crate::affine::affine_frame_with(&curve.eval_jet(t)?, kmin)?;
    let j2 = curve.eval_jet(s)?;
    let f2 = crate::affine::affine_frame_with(&j2, kmin)?;
    let c = j2.x - curve.eval_jet(t)?.x;
    Ok((f1.tangent_affine + f2.tangent_affine * alpha.lambda()).cross(c))
}

/// `P = [γ_t(t), γ_t(s)]`.
pub fn parallel_residual(curve: &ParamCurve, t: f64, s: f64) -> Result<f64> {
    Ok(curve.eval_jet(t)?.d1.cross(curve.eval_jet(s)?.d1))
}

/// Sine of the angle between the tangents, with its partials.
fn parallel_value_jets(j1: &CurveJet, j2: &CurveJet) -> PairingValue {
    let (n1, n2) = (j1.d1.norm(), j2.d1.norm());
    let p = j1.d1.cross(j2.d1) / (n1 * n2);
    PairingValue {
        g: p,
        g_t: j1.d2.cross(j2.d1) / (n1 * n2) - p * j1.d1.dot(j1.d2) / (n1 * n1),
        g_s: j1.d1.cross(j2.d2) / (n1 * n2) - p * j2.d1.dot(j2.d2) / (n2 * n2),
    }
}

/// Normalised parallel residual (sine of the tangent angle) and partials.
pub fn parallel_value(curve: &ParamCurve, t: f64, s: f64) -> Result<PairingValue> {
    Ok(parallel_value_jets(&curve.eval_jet(t)?, &curve.eval_jet(s)?))
}

/// Width of the diagonal exclusion band for a grid.
pub fn diagonal_band(curve: &ParamCurve, grid_n: usize) -> f64 {
    8.0 * curve.span() / grid_n as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Edge {
    /// Between nodes `(i, j)` and `(i + 1, j)`: `t` varies, `s` fixed.
    H(usize, usize),
    /// Between nodes `(i, j)` and `(i, j + 1)`: `s` varies, `t` fixed.
    V(usize, usize),
}

struct Grid<'a> {
    curve: &'a ParamCurve,
    n: usize,
    h: f64,
    values: Vec<f64>,
    excluded: Vec<bool>,
}

impl Grid<'_> {
    fn idx(&self, i: usize, j: usize) -> usize {
        (i % self.n) * self.n + (j % self.n)
    }

    fn val(&self, i: usize, j: usize) -> f64 {
        self.values[self.idx(i, j)]
    }

    fn param(&self, i: usize) -> f64 {
        self.curve.domain().0 + self.h * i as f64
    }

    /// Marching-squares segments as pairs of crossed edges.
    fn segments(&self) -> Vec<(Edge, Edge)> {
        let n = self.n;
        let mut segs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.excluded[i * n + j] {
                    continue;
                }
                let a = self.val(i, j);
                let b = self.val(i + 1, j);
                let c = self.val(i + 1, j + 1);
                let d = self.val(i, j + 1);
                if [a, b, c, d].iter().any(|v| !v.is_finite()) {
                    continue;
                }
                let (sa, sb, sc, sd) = (a >= 0.0, b >= 0.0, c >= 0.0, d >= 0.0);
                let bottom = Edge::H(i, j);
                let right = Edge::V((i + 1) % n, j);
                let top = Edge::H(i, (j + 1) % n);
                let left = Edge::V(i, j);
                let mut crossed = Vec::with_capacity(4);
                if sa != sb {
                    crossed.push(bottom);
                }
                if sb != sc {
                    crossed.push(right);
                }
                if sc != sd {
                    crossed.push(top);
                }
                if sd != sa {
                    crossed.push(left);
                }
                match crossed.len() {
                    2 => segs.push((crossed[0], crossed[1])),
                    4 => {
                        let centre = 0.25 * (a + b + c + d) >= 0.0;
                        if centre == sa {
                            segs.push((bottom, right));
                            segs.push((top, left));
                        } else {
                            segs.push((left, bottom));
                            segs.push((right, top));
                        }
                    }
                    _ => {}
                }
            }
        }
        segs
    }
}

/// Links segments sharing an edge into chains. Returns `(edges, closed)`.
fn link_segments(segs: &[(Edge, Edge)]) -> Vec<(Vec<Edge>, bool)> {
    let mut adj: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, (e1, e2)) in segs.iter().enumerate() {
        adj.entry(*e1).or_default().push(k);
        adj.entry(*e2).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut chains = Vec::new();

    let walk = |start_seg: usize, start_edge: Edge, used: &mut Vec<bool>| -> (Vec<Edge>, bool) {
        let mut edges = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (e1, e2) = segs[seg];
            let next = if e1 == at { e2 } else { e1 };
            if next == start_edge {
                return (edges, true);
            }
            edges.push(next);
            at = next;
            match adj[&next].iter().find(|&&k| !used[k]) {
                Some(&k) => seg = k,
                None => return (edges, false),
            }
        }
    };

    // Sorted for determinism: HashMap iteration order is random.
    let mut ends: Vec<Edge> = adj
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(e, _)| *e)
        .collect();
    ends.sort_by_key(edge_key);
    for e in ends {
        let k = adj[&e][0];
        if !used[k] {
            chains.push(walk(k, e, &mut used));
        }
    }
    for k in 0..segs.len() {
        if !used[k] {
            chains.push(walk(k, segs[k].0, &mut used));
        }
    }
    chains
}

fn edge_key(e: &Edge) -> (usize, usize, u8) {
    match *e {
        Edge::H(i, j) => (i, j, 0),
        Edge::V(i, j) => (i, j, 1),
    }
}

type ValueFn<'a> = dyn Fn(f64, f64) -> Result<PairingValue> + Sync + 'a;

/// Refines the crossing on an edge onto the zero set.
fn refine_edge(grid: &Grid, e: Edge, value: &ValueFn) -> Result<(f64, f64)> {
    let xtol = 1e-14 * grid.curve.span();
    // A node lying on the zero set up to rounding may not give a clean
    // sign change when re-evaluated; the better endpoint is then the root.
    let solve = |f: &dyn Fn(f64) -> Result<(f64, f64)>, lo: f64, hi: f64| {
        newton_bracketed(f, lo, hi, xtol, 0.0).or_else(|err| {
            let (flo, fhi) = (f(lo)?.0.abs(), f(hi)?.0.abs());
            let (x, fx) = if flo <= fhi { (lo, flo) } else { (hi, fhi) };
            if fx < 1e-3 * TOL_REFINE {
                Ok(x)
            } else {
                Err(err)
            }
        })
    };
    match e {
        Edge::H(i, j) => {
            let s = grid.param(j);
            let lo = grid.param(i);
            let t = solve(&|t| value(t, s).map(|v| (v.g, v.g_t)), lo, lo + grid.h)?;
            Ok((t, s))
        }
        Edge::V(i, j) => {
            let t = grid.param(i);
            let lo = grid.param(j);
            let s = solve(&|s| value(t, s).map(|v| (v.g, v.g_s)), lo, lo + grid.h)?;
            Ok((t, s))
        }
    }
}

fn trace_grid(
    curve: &ParamCurve,
    kind: BranchKind,
    grid: &Grid,
    value: &ValueFn,
) -> Result<Vec<PairBranch>> {
    let segs = grid.segments();
    if segs.is_empty() {
        return Err(EilError::NoBranchFound);
    }
    let chains = link_segments(&segs);
    let mut branches: Vec<PairBranch> = chains
        .par_iter()
        .map(|(edges, closed)| {
            let pts = edges
                .iter()
                .map(|&e| {
                    refine_edge(grid, e, value).map(|(t, s)| (curve.reduce(t), curve.reduce(s)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(orient(curve, PairBranch {
                kind,
                points: pts,
                closed: *closed,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    branches.retain(|b| b.points.len() >= 2);
    branches.sort_by(|a, b| {
        let (ta, sa) = a.points[0];
        let (tb, sb) = b.points[0];
        ta.total_cmp(&tb).then(sa.total_cmp(&sb))
    });
    if branches.is_empty() {
        return Err(EilError::NoBranchFound);
    }
    Ok(branches)
}

/// Orients a branch so that `t` increases along it where possible; closed
/// branches start at their smallest `t`.
fn orient(curve: &ParamCurve, mut b: PairBranch) -> PairBranch {
    if b.points.len() < 2 {
        return b;
    }
    if b.closed {
        let k = b
            .points
            .iter()
            .enumerate()
            .min_by(|x, y| x.1 .0.total_cmp(&y.1 .0).then(x.1 .1.total_cmp(&y.1 .1)))
            .map(|(k, _)| k)
            .unwrap_or(0);
        b.points.rotate_left(k);
        let p0 = b.points[0];
        let fwd = curve.param_diff(p0.0, b.points[1].0);
        let bwd = curve.param_diff(p0.0, b.points[b.points.len() - 1].0);
        if fwd < bwd {
            b.points[1..].reverse();
        }
    } else {
        let dt: f64 = b
            .points
            .windows(2)
            .map(|w| curve.param_diff(w[0].0, w[1].0))
            .sum();
        if dt < 0.0 {
            b.points.reverse();
        }
    }
    b
}

fn node_data(curve: &ParamCurve, n: usize) -> Result<Vec<Option<NodeData>>> {
    let kmin = curve.inflection_threshold();
    let (t0, _) = curve.domain();
    let h = curve.span() / n as f64;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let jet = curve.eval_jet(t0 + h * i as f64)?;
            Ok(NodeData::new(jet, kmin).ok())
        })
        .collect()
}

fn band_mask(curve: &ParamCurve, n: usize, near_parallel: impl Fn(usize, usize) -> bool + Sync) -> Vec<bool> {
    let h = curve.span() / n as f64;
    let band = 8.0 * h;
    (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            corners.iter().any(|&(a, b)| {
                let d = curve.param_diff(h * a as f64, h * b as f64).abs();
                d < band || near_parallel(a % n, b % n)
            })
        })
        .collect()
}

/// Traces the transversal pairing locus `G = 0` on the torus.
///
/// Errors with `NoBranchFound` when `G` has no sign change off the diagonal
/// band, and `DegenerateResidual` when it vanishes identically (the circle
/// at `α = 1/2`).
pub fn trace_locus(curve: &ParamCurve, alpha: &AlphaParam, grid_n: usize) -> Result<Vec<PairBranch>> {
    if !curve.is_closed() {
        return Err(EilError::NotClosed);
    }
    let n = grid_n.max(16);
    let nodes = node_data(curve, n)?;
    let values: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| match (&nodes[k / n], &nodes[k % n]) {
            (Some(a), Some(b)) => pairing_from_nodes(a, b, alpha).g,
            _ => f64::NAN,
        })
        .collect();
    let near_parallel = |a: usize, b: usize| match (&nodes[a], &nodes[b]) {
        (Some(x), Some(y)) => tangents_parallel(x.jet.d1, y.jet.d1),
        _ => true,
    };
    let excluded = band_mask(curve, n, near_parallel);
    let g_scale = curve.scale().powf(4.0 / 3.0).max(1.0);
    let max_g = values
        .iter()
        .zip(&excluded)
        .filter(|(v, ex)| !**ex && v.is_finite())
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max);
    if max_g < 1e-12 * g_scale {
        return Err(EilError::DegenerateResidual(max_g));
    }
    let grid = Grid {
        curve,
        n,
        h: curve.span() / n as f64,
        values,
        excluded,
    };
    let value = |t: f64, s: f64| pairing_value(curve, t, s, alpha);
    trace_grid(curve, BranchKind::Transversal, &grid, &value)
}

/// Traces the parallel-tangent locus `P = 0`, `t ≠ s`. An oval gives one
/// closed branch `(t, s(t))`; non-convex curves can give several.
pub fn parallel_pairs(curve: &ParamCurve, grid_n: usize) -> Result<Vec<PairBranch>> {
    if !curve.is_closed() {
        return Err(EilError::NoBranchFound);
    }
    let n = grid_n.max(16);
    let (t0, _) = curve.domain();
    let h = curve.span() / n as f64;
    let jets: Vec<CurveJet> = (0..n)
        .map(|i| curve.eval_jet(t0 + h * i as f64))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| parallel_value_jets(&jets[k / n], &jets[k % n]).g)
        .collect();
    let excluded = band_mask(curve, n, |_, _| false);
    let grid = Grid {
        curve,
        n,
        h,
        values,
        excluded,
    };
    let value = |t: f64, s: f64| parallel_value(curve, t, s);
    trace_grid(curve, BranchKind::Parallel, &grid, &value)
}

/// Residual function matching a branch kind.
pub fn branch_value(
    curve: &ParamCurve,
    kind: BranchKind,
    alpha: &AlphaParam,
    t: f64,
    s: f64,
) -> Result<PairingValue> {
    match kind {
        BranchKind::Transversal => pairing_value(curve, t, s, alpha),
        BranchKind::Parallel => parallel_value(curve, t, s),
    }
}

/// Projects `(t, s)` onto the zero set of the branch residual by Newton steps
/// along the gradient.
pub fn project_onto_locus(
    curve: &ParamCurve,
    kind: BranchKind,
    alpha: &AlphaParam,
    mut t: f64,
    mut s: f64,
) -> Result<(f64, f64)> {
    for _ in 0..30 {
        let v = branch_value(curve, kind, alpha, t, s)?;
        let g2 = v.g_t * v.g_t + v.g_s * v.g_s;
        if g2 == 0.0 || !g2.is_finite() {
            return Err(EilError::NoConvergence("vanishing residual gradient".into()));
        }
        let k = v.g / g2;
        t -= k * v.g_t;
        s -= k * v.g_s;
        if (k * g2.sqrt()).abs() < 1e-14 * curve.span() {
            break;
        }
    }
    let v = branch_value(curve, kind, alpha, t, s)?;
    if v.g.abs() > TOL_REFINE {
        return Err(EilError::NoConvergence(format!(
            "projection residual {:e}",
            v.g
        )));
    }
    Ok((curve.reduce(t), curve.reduce(s)))
}

/// Resamples a branch at (approximately) uniform arc-length `step` in the
/// `(t, s)` plane and projects every new vertex back onto the locus.
/// Vertices whose projection fails split the branch.
pub fn resample_branch(
    curve: &ParamCurve,
    branch: &PairBranch,
    alpha: &AlphaParam,
    step: f64,
) -> Vec<PairBranch> {
    let pts = &branch.points;
    if pts.len() < 2 {
        return vec![branch.clone()];
    }
    // Unwrap onto the universal cover so interpolation is continuous.
    let mut un: Vec<(f64, f64)> = Vec::with_capacity(pts.len() + 1);
    un.push(pts[0]);
    let mut extended: Vec<(f64, f64)> = pts.clone();
    if branch.closed {
        extended.push(pts[0]);
    }
    for w in extended.windows(2) {
        let last = *un.last().unwrap();
        un.push((
            last.0 + curve.param_diff(w[0].0, w[1].0),
            last.1 + curve.param_diff(w[0].1, w[1].1),
        ));
    }
    let mut cum = vec![0.0];
    for w in un.windows(2) {
        let d = (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
        cum.push(cum.last().unwrap() + d);
    }
    let total = *cum.last().unwrap();
    let count = (total / step).ceil().max(1.0) as usize;
    let n_out = if branch.closed { count } else { count + 1 };
    let ds = total / count as f64;
    let mut out: Vec<PairBranch> = Vec::new();
    let mut current: Vec<(f64, f64)> = Vec::new();
    let mut seg = 0usize;
    let mut broke = false;
    for k in 0..n_out {
        let target = (ds * k as f64).min(total);
        while seg + 1 < cum.len() - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let w = if len > 0.0 { (target - cum[seg]) / len } else { 0.0 };
        let t = un[seg].0 + w * (un[seg + 1].0 - un[seg].0);
        let s = un[seg].1 + w * (un[seg + 1].1 - un[seg].1);
        match project_onto_locus(curve, branch.kind, alpha, t, s) {
            Ok(p) => current.push(p),
            Err(_) => {
                broke = true;
                if current.len() >= 2 {
                    out.push(PairBranch {
                        kind: branch.kind,
                        points: std::mem::take(&mut current),
                        closed: false,
                    });
                } else {
                    current.clear();
                }
            }
        }
    }
    if current.len() >= 2 {
        out.push(PairBranch {
            kind: branch.kind,
            points: current,
            closed: branch.closed && !broke,
        });
    }
    out
}

/// Writes branches as CSV: `branch_id,kind,t,s,residual`.
pub fn write_branches_csv<W: Write>(
    curve: &ParamCurve,
    alpha: &AlphaParam,
    branches: &[PairBranch],
    out: &mut W,
) -> std::io::Result<()> {
    use crate::report::{fmt_num, fmt_sci};
    writeln!(out, "branch_id,kind,t,s,residual")?;
    for (id, b) in branches.iter().enumerate() {
        for &(t, s) in &b.points {
            let r = branch_value(curve, b.kind, alpha, t, s)
                .map(|v| v.g)
                .unwrap_or(f64::NAN);
            writeln!(
                out,
                "{id},{},{},{},{}",
                b.kind.as_str(),
                fmt_num(t),
                fmt_num(s),
                fmt_sci(r)
            )?;
        }
    }
    Ok(())
}

/// Points of a branch as plane positions `γ(t)` (for plotting the pairs).
pub fn branch_base_points(curve: &ParamCurve, b: &PairBranch) -> Result<Vec<(Vec2, Vec2)>> {
    b.points
        .iter()
        .map(|&(t, s)| Ok((curve.point(t)?, curve.point(s)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{bean, circle, ellipse};
    use std::f64::consts::PI;

    #[test]
    fn alpha_param_lambda() {
        assert_eq!(AlphaParam::new(0.5).unwrap().lambda(), 1.0);
        let a = AlphaParam::new(0.2).unwrap();
        assert!((a.lambda() - 4f64.cbrt()).abs() < 1e-15);
        assert!(AlphaParam::new(0.0).is_err());
        assert!(AlphaParam::new(1.0).is_err());
    }

    #[test]
    fn circle_residual_closed_form() {
        let c = circle(1.0).unwrap();
        for alpha in [0.5, 0.6, 0.25] {
            let a = AlphaParam::new(alpha).unwrap();
            for (t, s) in [(0.0, 1.0), (0.3, 2.5), (4.0, 1.0)] {
                let g = pairing_residual(&c, t, s, &a).unwrap();
                let expected = (1.0 - a.lambda()) * (1.0 - (s - t as f64).cos());
                assert!((g - expected).abs() < 1e-14, "{g} vs {expected}");
            }
        }
    }

    #[test]
    fn residual_vanishes_on_diagonal() {
        let b = bean();
        let a = AlphaParam::new(0.37).unwrap();
        assert_eq!(pairing_residual(&b, 0.4, 0.4, &a).unwrap(), 0.0);
        assert_eq!(pairing_residual_affine(&b, 0.4, 0.4, &a).unwrap(), 0.0);
    }

    #[test]
    fn analytic_partials_match_differences() {
        let b = bean();
        let a = AlphaParam::new(0.6).unwrap();
        let (t, s, h) = (0.3, 1.2, 1e-6);
        let v = pairing_value(&b, t, s, &a).unwrap();
        let gt = (pairing_residual(&b, t + h, s, &a).unwrap()
            - pairing_residual(&b, t - h, s, &a).unwrap())
            / (2.0 * h);
        let gs = (pairing_residual(&b, t, s + h, &a).unwrap()
            - pairing_residual(&b, t, s - h, &a).unwrap())
            / (2.0 * h);
        assert!((v.g_t - gt).abs() < 1e-7);
        assert!((v.g_s - gs).abs() < 1e-7);
        let p = parallel_value(&b, t, s).unwrap();
        let pt = (parallel_value(&b, t + h, s).unwrap().g - parallel_value(&b, t - h, s).unwrap().g)
            / (2.0 * h);
        let ps = (parallel_value(&b, t, s + h).unwrap().g - parallel_value(&b, t, s - h).unwrap().g)
            / (2.0 * h);
        assert!((p.g_t - pt).abs() < 1e-7 && (p.g_s - ps).abs() < 1e-7);
    }

    #[test]
    fn circle_parallel_residual() {
        let c = circle(1.0).unwrap();
        assert!(parallel_residual(&c, 0.7, 0.7 + PI).unwrap().abs() < 1e-15);
        assert!(parallel_residual(&c, 0.7, 1.7).unwrap().abs() > 0.5);
    }

    #[test]
    fn circle_traces_no_branch_or_degenerate() {
        let c = circle(1.0).unwrap();
        let a = AlphaParam::new(0.6).unwrap();
        assert_eq!(trace_locus(&c, &a, 256).unwrap_err(), EilError::NoBranchFound);
        let half = AlphaParam::new(0.5).unwrap();
        assert!(matches!(
            trace_locus(&c, &half, 128),
            Err(EilError::DegenerateResidual(_))
        ));
    }

    #[test]
    fn circle_parallel_branch_is_antipodal() {
        let c = circle(1.0).unwrap();
        let branches = parallel_pairs(&c, 128).unwrap();
        assert_eq!(branches.len(), 1);
        assert!(branches[0].closed);
        for &(t, s) in &branches[0].points {
            assert!((c.param_diff(t, s).abs() - PI).abs() < 1e-10);
        }
    }

    #[test]
    fn ellipse_parallel_branch_is_antipodal() {
        let e = ellipse(2.0, 1.0).unwrap();
        let branches = parallel_pairs(&e, 128).unwrap();
        assert_eq!(branches.len(), 1);
        for &(t, s) in &branches[0].points {
            assert!((e.param_diff(t, s).abs() - PI).abs() < 1e-10);
        }
    }

    #[test]
    fn bean_transversal_branches_are_refined() {
        let b = bean();
        let a = AlphaParam::new(0.6).unwrap();
        let branches = trace_locus(&b, &a, 256).unwrap();
        assert!(!branches.is_empty());
        let band = diagonal_band(&b, 256);
        for br in &branches {
            assert_eq!(br.kind, BranchKind::Transversal);
            for &(t, s) in &br.points {
                assert!(pairing_residual(&b, t, s, &a).unwrap().abs() < TOL_REFINE);
                assert!(b.param_diff(t, s).abs() >= band - 1e-9);
            }
        }
    }

    #[test]
    fn resampling_keeps_points_on_locus() {
        let b = bean();
        let a = AlphaParam::new(0.4).unwrap();
        let branches = trace_locus(&b, &a, 128).unwrap();
        for br in &branches {
            for rb in resample_branch(&b, br, &a, 0.01) {
                for &(t, s) in &rb.points {
                    assert!(pairing_residual(&b, t, s, &a).unwrap().abs() < TOL_REFINE);
                }
                for w in rb.points.windows(2) {
                    let d = b.param_diff(w[0].0, w[1].0).hypot(b.param_diff(w[0].1, w[1].1));
                    assert!(d < 0.02, "step {d}");
                }
            }
        }
    }

    #[test]
    fn swap_symmetry_on_bean() {
        let b = bean();
        let a = AlphaParam::new(0.4).unwrap();
        for br in trace_locus(&b, &a, 128).unwrap() {
            for &(t, s) in br.swapped().points.iter().step_by(7) {
                assert!(pairing_residual(&b, t, s, &a.swapped()).unwrap().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn branches_csv_columns() {
        let c = circle(1.0).unwrap();
        let a = AlphaParam::new(0.6).unwrap();
        let br = parallel_pairs(&c, 32).unwrap();
        let mut buf = Vec::new();
        write_branches_csv(&c, &a, &br, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("branch_id,kind,t,s,residual\n0,parallel,"));
    }
}
