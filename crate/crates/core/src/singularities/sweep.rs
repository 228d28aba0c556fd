//! Sweeping `α` to find where cusps are born or die.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::ParamCurve;
use crate::envelope::{build_envelope, min_set_distance, BuildOptions, EnvelopeBranch, EnvelopeTag};
use crate::error::{EilError, Result};
use crate::geom::Vec2;
use crate::locus::AlphaParam;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    CuspBirth,
    CuspDeath,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionEvent {
    pub alpha_star: f64,
    pub kind: TransitionKind,
    pub tag: EnvelopeTag,
    /// `(t, s)` of a cusp present on the side with more cusps.
    pub location: (f64, f64),
}

/// Cusps of one tag at one `α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaInventory {
    pub alpha: f64,
    pub tag: EnvelopeTag,
    pub count: usize,
    /// `(t, s)` of each cusp.
    pub locations: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    pub build: BuildOptions,
    pub bisect_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            build: BuildOptions {
                grid_n: 256,
                discriminant: false,
                oracle: false,
                ..BuildOptions::default()
            },
            bisect_tol: 1e-4,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub inventory: Vec<AlphaInventory>,
    /// Sorted by `α*`, then tag.
    pub events: Vec<TransitionEvent>,
    /// `α` values whose envelope could not be built, with the reason.
    pub gaps: Vec<String>,
}

const SWEEP_TAGS: [EnvelopeTag; 2] = [EnvelopeTag::Aeil, EnvelopeTag::Iptl];

/// `0.01, 0.02, …, 0.99` without `0.5`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..100).filter(|&k| k != 50).map(|k| k as f64 / 100.0).collect()
}

/// Minimum distance between AEIL and IPTL points (`∞` when either is
/// missing).
pub fn disjointness_report(branches: &[EnvelopeBranch]) -> f64 {
    let collect = |tag: EnvelopeTag| -> Vec<Vec2> {
        branches
            .iter()
            .filter(|b| b.tag == tag)
            .flat_map(|b| b.positions())
            .collect()
    };
    min_set_distance(&collect(EnvelopeTag::Aeil), &collect(EnvelopeTag::Iptl))
}

/// Cusps inside the comparison box, per tag.
fn cusp_inventory(curve: &ParamCurve, alpha: f64, opts: &SweepOptions) -> Result<Vec<AlphaInventory>> {
    let a = AlphaParam::new(alpha)?;
    let mut build = opts.build.clone();
    build.cusps = true;
    let env = build_envelope(curve, &a, &build)?;
    let cmp_box = crate::envelope::comparison_box(curve);
    Ok(SWEEP_TAGS
        .iter()
        .map(|&tag| {
            let locations: Vec<(f64, f64)> = env
                .branches_tagged(tag)
                .flat_map(|b| {
                    b.cusp_markers
                        .iter()
                        .map(|m| &b.points[m.index])
                        .filter(|p| crate::envelope::in_box(p.x, cmp_box))
                        .map(|p| (p.t, p.s))
                        .collect::<Vec<_>>()
                })
                .collect();
            AlphaInventory {
                alpha,
                tag,
                count: locations.len(),
                locations,
            }
        })
        .collect())
}

fn pair_distance(curve: &ParamCurve, a: (f64, f64), b: (f64, f64)) -> f64 {
    curve.param_diff(a.0, b.0).abs() + curve.param_diff(a.1, b.1).abs()
}

/// Location on `rich` farthest from every location on `poor`.
fn new_location(curve: &ParamCurve, rich: &[(f64, f64)], poor: &[(f64, f64)]) -> (f64, f64) {
    rich.iter()
        .copied()
        .max_by(|&a, &b| {
            let da = poor.iter().map(|&p| pair_distance(curve, a, p)).fold(f64::INFINITY, f64::min);
            let db = poor.iter().map(|&p| pair_distance(curve, b, p)).fold(f64::INFINITY, f64::min);
            da.total_cmp(&db)
        })
        .unwrap_or((f64::NAN, f64::NAN))
}

/// Bisects a count change of `tag` on `[lo, hi]` to `opts.bisect_tol`.
fn bisect_event(
    curve: &ParamCurve,
    tag: EnvelopeTag,
    mut lo: AlphaInventory,
    mut hi: AlphaInventory,
    opts: &SweepOptions,
) -> Result<TransitionEvent> {
    while hi.alpha - lo.alpha > opts.bisect_tol {
        let mid = 0.5 * (lo.alpha + hi.alpha);
        let inv = cusp_inventory(curve, mid, opts)?
            .into_iter()
            .find(|i| i.tag == tag)
            .expect("inventory covers every sweep tag");
        if inv.count != lo.count {
            hi = inv;
        } else {
            lo = inv;
        }
    }
    let (kind, location) = if hi.count > lo.count {
        (TransitionKind::CuspBirth, new_location(curve, &hi.locations, &lo.locations))
    } else {
        (TransitionKind::CuspDeath, new_location(curve, &lo.locations, &hi.locations))
    };
    Ok(TransitionEvent {
        alpha_star: 0.5 * (lo.alpha + hi.alpha),
        kind,
        tag,
        location,
    })
}

/// Cusp inventory over `alphas` and the bisected `α` where the AEIL or
/// IPTL cusp count changes. Intervals containing `α = 1/2` are not
/// bisected: both sets change connectivity there. Per-`α` failures are
/// recorded as gaps.
pub fn alpha_sweep(curve: &ParamCurve, alphas: &[f64], opts: &SweepOptions) -> Result<SweepReport> {
    if !curve.is_closed() {
        return Err(EilError::NotClosed);
    }
    if !(opts.bisect_tol > 0.0) {
        return Err(EilError::InvalidParams(format!("bisection tolerance {}", opts.bisect_tol)));
    }
    let mut grid = alphas.to_vec();
    for &a in &grid {
        AlphaParam::new(a)?;
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let results: Vec<(f64, Result<Vec<AlphaInventory>>)> = grid
        .par_iter()
        .map(|&a| (a, cusp_inventory(curve, a, opts)))
        .collect();
    let mut report = SweepReport::default();
    let mut ok: Vec<Vec<AlphaInventory>> = Vec::new();
    for (a, r) in results {
        match r {
            Ok(inv) => ok.push(inv),
            Err(e) => {
                warn!("sweep: alpha {a} skipped ({e})");
                report.gaps.push(format!("alpha {a}: {e}"));
            }
        }
    }

    let jobs: Vec<(AlphaInventory, AlphaInventory)> = ok
        .windows(2)
        .filter(|w| !(w[0][0].alpha < 0.5 && w[1][0].alpha > 0.5))
        .flat_map(|w| {
            w[0].iter()
                .zip(&w[1])
                .filter(|(l, h)| l.count != h.count)
                .map(|(l, h)| (l.clone(), h.clone()))
                .collect::<Vec<_>>()
        })
        .collect();
    let events: Vec<Result<TransitionEvent>> = jobs
        .into_par_iter()
        .map(|(l, h)| bisect_event(curve, l.tag, l, h, opts))
        .collect();
    for e in events {
        match e {
            Ok(ev) => report.events.push(ev),
            Err(e) => {
                warn!("sweep: bisection failed ({e})");
                report.gaps.push(format!("bisection: {e}"));
            }
        }
    }
    report
        .events
        .sort_by(|a, b| a.alpha_star.total_cmp(&b.alpha_star).then(a.tag.cmp(&b.tag)));
    report.inventory = ok.into_iter().flatten().collect();
    Ok(report)
}
