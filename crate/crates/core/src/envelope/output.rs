use std::fmt::Write as _;
use std::io::Write;

use super::{Envelope, EnvelopeTag};
use crate::curve::ParamCurve;
use crate::geom::{bounding_box, Vec2};
use crate::report::{fmt_num, fmt_sci};

/// CSV with columns
/// `tag,branch_id,t,s,alpha,x,y,online_residual,detM_residual`.
pub fn write_envelope_csv<W: Write>(env: &Envelope, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "tag,branch_id,t,s,alpha,x,y,online_residual,detM_residual")?;
    for (id, b) in env.branches.iter().enumerate() {
        for p in &b.points {
            writeln!(
                out,
                "{},{id},{},{},{},{},{},{},{}",
                b.tag.as_str(),
                fmt_num(p.t),
                fmt_num(p.s),
                fmt_num(p.alpha),
                fmt_num(p.x.x),
                fmt_num(p.x.y),
                fmt_sci(p.online_residual),
                fmt_sci(p.det_residual)
            )?;
        }
    }
    Ok(())
}

fn colour(tag: EnvelopeTag) -> &'static str {
    match tag {
        EnvelopeTag::Aeil => "blue",
        EnvelopeTag::Iptl => "red",
        EnvelopeTag::Ctl | EnvelopeTag::Evolute => "green",
    }
}

/// Splits a polyline into runs that stay inside a clip box, so points near
/// asymptotes do not produce huge coordinates.
fn clipped_runs(points: &[Vec2], closed: bool, lo: Vec2, hi: Vec2) -> Vec<Vec<Vec2>> {
    let inside = |p: &Vec2| p.is_finite() && p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    let mut runs = Vec::new();
    let mut cur = Vec::new();
    for p in points {
        if inside(p) {
            cur.push(*p);
        } else if !cur.is_empty() {
            runs.push(std::mem::take(&mut cur));
        }
    }
    let all_inside = runs.is_empty();
    if closed && all_inside && !cur.is_empty() {
        cur.push(cur[0]);
    }
    if !cur.is_empty() {
        runs.push(cur);
    }
    runs
}

fn path(points: &[Vec2]) -> String {
    let mut d = String::new();
    for (i, p) in points.iter().enumerate() {
        let _ = write!(d, "{}{} {}", if i == 0 { "M" } else { " L" }, fmt_num(p.x), fmt_num(-p.y));
    }
    d
}

/// SVG figure: curve black, AEIL blue, IPTL red, CTL/evolute green, cusp
/// markers as black crosses. Each component is a `<g>` layer whose id is
/// its display name. The view box is the curve's bounding box padded by
/// 20%; strokes are 0.3% of its diagonal. The y axis points up.
pub fn write_envelope_svg<W: Write>(
    curve: &ParamCurve,
    env: &Envelope,
    samples: usize,
    out: &mut W,
) -> std::io::Result<()> {
    let curve_pts: Vec<Vec2> = curve
        .sample_params(samples)
        .into_iter()
        .filter_map(|t| curve.point(t).ok())
        .collect();
    let (lo, hi) = bounding_box(curve_pts.iter().copied()).unwrap_or((Vec2::ZERO, Vec2::new(1.0, 1.0)));
    let pad = (hi - lo) * 0.2;
    let (lo, hi) = (lo - pad, hi + pad);
    let size = hi - lo;
    let stroke = 0.003 * size.norm();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        fmt_num(lo.x),
        fmt_num(-hi.y),
        fmt_num(size.x),
        fmt_num(size.y)
    )?;
    writeln!(
        out,
        r#"<g fill="none" stroke-width="{}" stroke-linejoin="round">"#,
        fmt_num(stroke)
    )?;
    for run in clipped_runs(&curve_pts, curve.is_closed(), lo, hi) {
        writeln!(out, r#"<path class="curve" stroke="black" d="{}"/>"#, path(&run))?;
    }
    let half = (env.alpha - 0.5).abs() < 1e-12;
    let limit_tag = if half { EnvelopeTag::Evolute } else { EnvelopeTag::Ctl };
    // One layer per component, emitted even when empty so consumers can
    // tell "nothing found" from "not computed".
    for tag in [EnvelopeTag::Aeil, EnvelopeTag::Iptl, limit_tag] {
        writeln!(
            out,
            r#"<g id="{}" class="layer" stroke="{}">"#,
            tag.display_name(env.alpha),
            colour(tag)
        )?;
        for b in env.branches_tagged(tag) {
            let pts = b.positions();
            for run in clipped_runs(&pts, b.closed, lo, hi) {
                if run.len() >= 2 {
                    writeln!(out, r#"<path d="{}"/>"#, path(&run))?;
                }
            }
        }
        writeln!(out, "</g>")?;
    }
    let r = 3.0 * stroke;
    writeln!(out, r#"<g id="cusps" class="layer" stroke="black">"#)?;
    for b in &env.branches {
        let pts = b.positions();
        for m in &b.cusp_markers {
            let p = pts[m.index];
            if !(p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y) {
                continue;
            }
            writeln!(
                out,
                r#"<path d="M{} {} L{} {} M{} {} L{} {}"/>"#,
                fmt_num(p.x - r),
                fmt_num(-p.y - r),
                fmt_num(p.x + r),
                fmt_num(-p.y + r),
                fmt_num(p.x - r),
                fmt_num(-p.y + r),
                fmt_num(p.x + r),
                fmt_num(-p.y - r)
            )?;
        }
    }
    writeln!(out, "</g>")?;
    writeln!(out, "</g>\n</svg>")?;
    Ok(())
}
