//! Numeric singularity detection on sampled branches and `A_k` typing of
//! the line family at a point.

use log::debug;
use serde::{Deserialize, Serialize};

use super::SingularityClass;
use crate::curve::ParamCurve;
use crate::envelope::{intermediate_line, CuspMarker, EnvelopeBranch, LineEq};
use crate::error::{EilError, Result};
use crate::geom::Vec2;
use crate::locus::{branch_value, AlphaParam, BranchKind};
use crate::numeric::{golden_min, newton_from, polyfit, richardson7, Poly};

/// Half-width (in samples) of the local fitting window.
const HALF: usize = 6;
const FIT_DEGREE: usize = 6;
/// `|θ'| / Σ|θ^(k)|` above which the fitted point is regular.
const REGULAR_RATIO: f64 = 1e-3;
/// Relative size of `θ''` below which it counts as vanishing.
const SECOND_RATIO: f64 = 0.05;
/// `|[a, b]| / (|a| Σ|θ^(k)|)` above which `b` has a component across `a`.
/// Measured against the total rather than `|b|`, because a change of
/// parameter adds a multiple of `θ''` to `θ'''` at a cusp and the angle
/// between them is therefore not meaningful.
const CROSS_RATIO: f64 = 1e-3;

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

struct LocalFit {
    px: Poly,
    py: Poly,
}

impl LocalFit {
    fn deriv(&self, v: f64, k: usize) -> Vec2 {
        Vec2::new(self.px.deriv_at(v, k), self.py.deriv_at(v, k))
    }
}

/// Index of sample `k` of the window centred at `c`, or `None` off an open
/// polyline.
fn window(n: usize, closed: bool, c: usize) -> Vec<usize> {
    if closed {
        (0..=2 * HALF).map(|k| (c + n + k - HALF) % n).collect()
    } else {
        let start = c.saturating_sub(HALF).min(n - 2 * HALF - 1);
        (start..=start + 2 * HALF).collect()
    }
}

enum Probe {
    Regular,
    Boundary(usize),
    Singular(usize, SingularityClass),
}

fn probe(points: &[Vec2], closed: bool, c: usize) -> Result<Probe> {
    let n = points.len();
    let idx = window(n, closed, c);
    let vs: Vec<f64> = (0..idx.len()).map(|k| (k as f64 - HALF as f64) / HALF as f64).collect();
    // Centre the coordinates so the fit is not dominated by an offset.
    let origin = points[idx[HALF]];
    let xs: Vec<f64> = idx.iter().map(|&i| points[i].x - origin.x).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| points[i].y - origin.y).collect();
    let fit = LocalFit {
        px: polyfit(&vs, &xs, FIT_DEGREE)?,
        py: polyfit(&vs, &ys, FIT_DEGREE)?,
    };
    let speed2 = |v: f64| fit.deriv(v, 1).norm_sq();
    let grid: Vec<f64> = (0..=200).map(|k| -1.0 + 0.01 * k as f64).collect();
    let k_min = (0..grid.len())
        .min_by(|&a, &b| speed2(grid[a]).total_cmp(&speed2(grid[b])))
        .unwrap_or(100);
    let lo = grid[k_min.saturating_sub(1)];
    let hi = grid[(k_min + 1).min(grid.len() - 1)];
    let v_star = golden_min(speed2, lo, hi, 1e-12);
    let d: Vec<Vec2> = (1..=4).map(|k| fit.deriv(v_star, k)).collect();
    let norms: Vec<f64> = d.iter().map(|v| v.norm()).collect();
    let total: f64 = norms.iter().sum();
    if !(total > 0.0) || norms[0] > REGULAR_RATIO * total {
        return Ok(Probe::Regular);
    }
    let offset = (v_star * HALF as f64).round() as isize;
    let at = idx[(HALF as isize + offset).clamp(0, 2 * HALF as isize) as usize];
    if v_star.abs() > 0.85 {
        return Ok(Probe::Boundary(at));
    }
    let across = |a: Vec2, b: Vec2| {
        let den = a.norm() * total;
        den > 0.0 && a.cross(b).abs() / den > CROSS_RATIO
    };
    let r2 = norms[1] / (norms[1] + norms[2] + norms[3]);
    let class = if r2 > SECOND_RATIO && across(d[1], d[2]) {
        SingularityClass::OrdinaryCusp
    } else if r2 <= SECOND_RATIO && across(d[2], d[3]) {
        SingularityClass::Cusp34
    } else {
        SingularityClass::Degenerate
    };
    Ok(Probe::Singular(at, class))
}

/// Finds and classifies singular points of a sampled plane curve.
///
/// Candidates are local minima of the chord length well below the local
/// median, and tangent reversals. Each candidate is fitted by degree-6
/// polynomials over 13 samples; the point of least speed on the fit is
/// classified from the fitted derivatives.
pub fn scan_polyline(points: &[Vec2], closed: bool) -> Result<Vec<CuspMarker>> {
    let n = points.len();
    if n < 2 * HALF + 1 {
        return Err(EilError::InsufficientResolution(format!(
            "{n} points, need at least {}",
            2 * HALF + 1
        )));
    }
    let nc = if closed { n } else { n - 1 };
    let chord: Vec<f64> = (0..nc).map(|i| points[i].distance(points[(i + 1) % n])).collect();
    let get = |i: isize| -> Option<f64> {
        if closed {
            Some(chord[i.rem_euclid(nc as isize) as usize])
        } else if i >= 0 && (i as usize) < nc {
            Some(chord[i as usize])
        } else {
            None
        }
    };
    let mut candidates = Vec::new();
    for i in 0..nc as isize {
        let c = chord[i as usize];
        let local_min = get(i - 1).map_or(true, |p| c <= p) && get(i + 1).map_or(true, |q| c <= q);
        if local_min {
            let neigh: Vec<f64> = (i - 10..=i + 10).filter_map(get).collect();
            if c < 0.3 * median(neigh) {
                candidates.push(i as usize);
            }
        }
    }
    for j in 0..n {
        let (prev, next) = if closed {
            ((j + n - 1) % n, (j + 1) % n)
        } else if j == 0 || j + 1 == n {
            continue;
        } else {
            (j - 1, j + 1)
        };
        if (points[j] - points[prev]).dot(points[next] - points[j]) < 0.0 {
            candidates.push(j);
        }
    }
    candidates.sort_unstable();
    candidates.dedup();

    let mut markers: Vec<CuspMarker> = Vec::new();
    let near = |a: usize, b: usize| {
        let d = a.abs_diff(b);
        let d = if closed { d.min(n - d) } else { d };
        d <= 2
    };
    for c in candidates {
        if markers.iter().any(|m| near(m.index, c)) {
            continue;
        }
        let mut result = probe(points, closed, c)?;
        if let Probe::Boundary(at) = result {
            result = probe(points, closed, at)?;
        }
        match result {
            Probe::Regular => {}
            Probe::Boundary(at) => debug!("cusp candidate near sample {at} not isolated"),
            Probe::Singular(at, class) => {
                if !markers.iter().any(|m| near(m.index, at)) {
                    markers.push(CuspMarker { index: at, class });
                }
            }
        }
    }
    markers.sort_by_key(|m| m.index);
    Ok(markers)
}

/// Cusp markers of an envelope branch.
pub fn numeric_cusp_scan(branch: &EnvelopeBranch) -> Result<Vec<CuspMarker>> {
    scan_polyline(&branch.positions(), branch.closed)
}

/// Type of `f(σ) = F(X₀, σ)` at `σ₀`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyType {
    A1,
    A2,
    A3,
    Higher,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyTypeReport {
    pub kind: FamilyType,
    /// `f, f', f'', f''', f''''` at `σ₀`.
    pub derivatives: [f64; 5],
    pub threshold: f64,
}

/// Classifies the line family at `X₀` from Richardson-extrapolated
/// derivatives of the signed distance `f(σ)` from `X₀` to the line
/// `line_of(σ)`. `X₀` must lie on the envelope (`f = f' = 0`).
pub fn family_type<F>(line_of: F, x0: Vec2, sigma0: f64, h: f64, scale: f64) -> Result<FamilyTypeReport>
where
    F: Fn(f64) -> Result<LineEq>,
{
    let f = |sigma: f64| -> Result<f64> { Ok(line_of(sigma)?.normalized().eval(x0)) };
    let threshold = 1e-6 * scale;
    let mut d = [f(sigma0)?, 0.0, 0.0, 0.0, 0.0];
    for k in 1..=4 {
        let est = richardson7(&f, sigma0, h, k)?;
        let [r0, r1] = est.level1;
        let big = r0.abs().max(r1.abs());
        if big > threshold && (r0 - r1).abs() > 0.1 * big {
            return Err(EilError::InsufficientPrecision(format!(
                "derivative {k}: extrapolations {r0:e} and {r1:e} disagree"
            )));
        }
        d[k] = est.value;
    }
    if d[0].abs() > threshold || d[1].abs() > threshold {
        return Err(EilError::PreconditionViolated(format!(
            "point is not on the envelope: f = {:e}, f' = {:e}",
            d[0], d[1]
        )));
    }
    let kind = if d[2].abs() > threshold {
        FamilyType::A1
    } else if d[3].abs() > threshold {
        FamilyType::A2
    } else if d[4].abs() > threshold {
        FamilyType::A3
    } else {
        FamilyType::Higher
    };
    Ok(FamilyTypeReport {
        kind,
        derivatives: d,
        threshold,
    })
}

/// [`family_type`] along a traced branch of a closed curve. The chart is
/// `σ = s` with `t(σ)` solved from the branch residual near `t₀` (or the
/// roles swapped when the residual is flat in `t`).
pub fn family_type_on_curve(
    curve: &ParamCurve,
    alpha: &AlphaParam,
    kind: BranchKind,
    (t0, s0): (f64, f64),
    x0: Vec2,
    h: f64,
) -> Result<FamilyTypeReport> {
    let v = branch_value(curve, kind, alpha, t0, s0)?;
    let by_s = v.g_t.abs() >= v.g_s.abs();
    // Newton from the tangent-line guess: the locus may curve within the
    // stencil, so a fixed bracket can straddle two roots.
    let slope = if by_s { -v.g_s / v.g_t } else { -v.g_t / v.g_s };
    let pair = |sigma: f64| -> Result<(f64, f64)> {
        if by_s {
            let s = s0 + sigma;
            let t = newton_from(
                |t| branch_value(curve, kind, alpha, t, s).map(|v| (v.g, v.g_t)),
                t0 + slope * sigma,
            )?;
            Ok((t, s))
        } else {
            let t = t0 + sigma;
            let s = newton_from(
                |s| branch_value(curve, kind, alpha, t, s).map(|v| (v.g, v.g_s)),
                s0 + slope * sigma,
            )?;
            Ok((t, s))
        }
    };
    let line_of = |sigma: f64| -> Result<LineEq> {
        let (t, s) = pair(sigma)?;
        intermediate_line(curve, t, s, alpha)
    };
    family_type(line_of, x0, 0.0, h, curve.scale())
}
