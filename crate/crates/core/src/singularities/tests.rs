use super::*;
use crate::curve::{bean, circle};
use crate::envelope::{build_envelope, envelope_point_closed_form, BuildOptions, EnvelopeTag};
use crate::geom::Vec2;
use crate::locus::{project_onto_locus, AlphaParam, BranchKind};

fn nonparallel(alpha: f64, a3: f64, b0: f64, b1: f64) -> MongeJetPair {
    let mut m = MongeJetPair::new(alpha, b0);
    m.a3 = a3;
    m.b1 = b1;
    m.b2 = MongeJetPair::solvable_b2(alpha);
    m
}

fn parallel(alpha: f64, a3: f64, a4: f64) -> MongeJetPair {
    let mut m = MongeJetPair::new(alpha, 1.0);
    m.a3 = a3;
    m.a4 = a4;
    m
}

#[test]
fn nonparallel_regular_and_equality() {
    let mut m = nonparallel(0.3, 1.0, 1.0, 2.0);
    let crit = m.critical_b3().unwrap();
    m.b3 = crit + 0.1;
    let v = classify_nonparallel(&m).unwrap();
    assert_eq!(v.klass, SingularityClass::Regular);
    assert!((v.witness["b3_minus_critical"] - 0.1).abs() < 1e-12);
    m.b3 = crit;
    let v = classify_nonparallel(&m).unwrap();
    assert_eq!(v.klass, SingularityClass::OrdinaryCusp);
    assert!(v.notes.iter().any(|n| n.contains("equality")));
}

#[test]
fn nonparallel_critical_b3_closed_form() {
    // Direct substitution into the regularity condition.
    let m = nonparallel(0.3, 1.0, 1.0, 2.0);
    let (a, a3, b0, b1) = (0.3f64, 1.0f64, 1.0f64, 2.0f64);
    let num = (a - 1.0) * (-6.0 * a * a3 * b0 * b1 * b1 + 4.0 * a * a3 * b0 * b0 - 3.0 * a * b1.powi(3) - 2.0 * a3 * b0 * b0);
    let den = 2.0 * a * b0 * (6.0 * a * a3 * b0 * b1 + 3.0 * a * b1 * b1 + 2.0 * a * b0 - b0);
    assert!((m.critical_b3().unwrap() - num / den).abs() < 1e-14);
}

#[test]
fn nonparallel_inflection_case() {
    let mut m = MongeJetPair::new(0.4, 1.0);
    m.p1_inflection = true;
    m.a3 = 1.0;
    m.b1 = 1.5;
    m.b3 = 0.5;
    assert_eq!(classify_nonparallel(&m).unwrap().klass, SingularityClass::Regular);
    m.b3 = 0.0;
    assert_eq!(classify_nonparallel(&m).unwrap().klass, SingularityClass::Degenerate);
    m.b2 = 0.2;
    assert!(matches!(classify_nonparallel(&m), Err(EilError::PreconditionViolated(_))));
}

#[test]
fn nonparallel_preconditions() {
    let mut m = nonparallel(0.3, 1.0, 1.0, 2.0);
    m.b2 += 0.1;
    let err = classify_nonparallel(&m).unwrap_err();
    assert!(err.to_string().contains("B(0,0)"));
    let m = nonparallel(0.3, 1.0, 1.0, 0.0);
    assert!(classify_nonparallel(&m).is_err());
    let m = nonparallel(0.3, 1.0, -1.0, 2.0);
    assert!(classify_nonparallel(&m).is_err());
    // α = b₀/b₁²: the envelope point is at infinity.
    let m = nonparallel(0.25, 1.0, 1.0, 2.0);
    assert_eq!(classify_nonparallel(&m).unwrap().klass, SingularityClass::Degenerate);
}

#[test]
fn nonparallel_assumption_violations_are_noted() {
    let mut m = nonparallel(0.3, -1.0, 1.0, 0.5);
    m.b3 = 3.0;
    let v = classify_nonparallel(&m).unwrap();
    assert_eq!(v.notes.len(), 2);
}

#[test]
fn nonparallel_equality_is_a_cusp_numerically() {
    let mut m = nonparallel(0.3, 1.0, 1.0, 2.0);
    let crit = m.critical_b3().unwrap();
    let markers = |b3: f64, m: &mut MongeJetPair| {
        m.b3 = b3;
        let arcs = MongeArcs::new(m).unwrap();
        let b = arcs.branch(EnvelopeTag::Aeil, 0.05, 101).unwrap();
        scan_polyline(&b.branch.positions(), false).unwrap()
    };
    let at_crit = markers(crit, &mut m);
    assert_eq!(at_crit.len(), 1, "{at_crit:?}");
    assert!(at_crit[0].index.abs_diff(50) <= 2);
    assert_eq!(at_crit[0].class, SingularityClass::OrdinaryCusp);
    // Off the equality the cusp moves away from the origin pair.
    let off = markers(crit + 0.5, &mut m);
    assert!(off.iter().all(|mk| mk.index.abs_diff(50) > 2), "{off:?}");
}

#[test]
fn parallel_examples() {
    let mut m = parallel(0.25, 0.9, 0.6);
    m.b2 = -1.0 / 6.0;
    m.b3 = 0.9 / 9.0 + 0.3;
    assert_eq!(classify_parallel(&m).unwrap().klass, SingularityClass::OrdinaryCusp);
    m.b3 = 0.9 / 9.0;
    m.b4 = -0.6 / 27.0 + 0.2;
    assert_eq!(classify_parallel(&m).unwrap().klass, SingularityClass::Cusp34);
    m.b4 = -0.6 / 27.0;
    assert_eq!(classify_parallel(&m).unwrap().klass, SingularityClass::Degenerate);
    for alpha in [0.1, 0.5, 0.9] {
        let mut m = parallel(alpha, 1.0, 0.0);
        m.b2 = 0.1;
        assert_eq!(classify_parallel(&m).unwrap().klass, SingularityClass::Regular);
    }
    m.b1 = 0.3;
    assert!(matches!(classify_parallel(&m), Err(EilError::PreconditionViolated(_))));
}

#[test]
fn parallel_threshold_is_sharp() {
    let mut m = parallel(0.35, 0.5, 0.0);
    m.b3 = 1.0;
    let thr = m.parallel_thresholds()[0];
    let mut previous: Option<f64> = None;
    for k in -5i32..=5 {
        m.b2 = thr + k as f64 * 1e-3;
        let v = classify_parallel(&m).unwrap();
        let w = v.witness["b2_minus_threshold"];
        let expected = if k == 0 { SingularityClass::OrdinaryCusp } else { SingularityClass::Regular };
        assert_eq!(v.klass, expected, "k = {k}");
        if let Some(p) = previous {
            assert!(w > p);
        }
        assert_eq!(w.signum() as i32 * (k != 0) as i32, k.signum());
        previous = Some(w);
    }
}

#[test]
fn parallel_inflection_examples() {
    let mut m = MongeJetPair::new(0.4, 1.5);
    m.p1_inflection = true;
    m.a3 = 1.0;
    m.b2 = 0.5;
    let v = classify_parallel_inflection(&m).unwrap();
    assert_eq!(v.klass, SingularityClass::Regular);
    assert_eq!(v.inflection_order, Some(1));
    assert!((v.witness["y3"] - 0.6).abs() < 1e-14);
    assert!((v.witness["through_y"] - 0.6).abs() < 1e-14);

    // Both points inflectional.
    m.b2 = 0.0;
    m.b3 = 0.7;
    let v = classify_parallel_inflection(&m).unwrap();
    assert_eq!(v.klass, SingularityClass::Regular);
    assert!(v.witness.contains_key("h1_1jet"));

    m.p1_inflection = false;
    assert!(classify_parallel_inflection(&m).is_err());
}

#[test]
fn parallel_inflection_iptl_passes_through_intermediate_point() {
    let mut m = MongeJetPair::new(0.4, 1.5);
    m.p1_inflection = true;
    m.a3 = 1.0;
    m.b2 = 0.5;
    let b = MongeArcs::new(&m).unwrap().branch(EnvelopeTag::Iptl, 0.1, 41).unwrap();
    let x = b.branch.points[20].x;
    assert!(x.distance(Vec2::new(0.0, 0.6)) < 1e-14);
    // Locally (1-α)t in x and αb₀ + a₃(1-α)t³ in y: an inflection.
    let p = b.branch.points[21].x;
    let t = b.sigma[21];
    assert!((p.x - 0.6 * t).abs() < 10.0 * t * t);
    assert!(scan_polyline(&b.branch.positions(), false).unwrap().is_empty());
}

fn sampled(f: impl Fn(f64) -> Vec2, n: usize) -> Vec<Vec2> {
    (0..n).map(|k| f(-1.0 + 2.0 * k as f64 / (n - 1) as f64)).collect()
}

#[test]
fn scan_model_cusps() {
    let m = scan_polyline(&sampled(|u| Vec2::new(u * u, u * u * u), 101), false).unwrap();
    assert_eq!(m.len(), 1);
    assert_eq!((m[0].index, m[0].class), (50, SingularityClass::OrdinaryCusp));
    let m = scan_polyline(&sampled(|u| Vec2::new(u.powi(3), u.powi(4)), 101), false).unwrap();
    assert_eq!(m.len(), 1);
    assert_eq!((m[0].index, m[0].class), (50, SingularityClass::Cusp34));
}

#[test]
fn scan_regular_circle() {
    let pts: Vec<Vec2> = (0..200)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 200.0;
            Vec2::new(t.cos(), t.sin())
        })
        .collect();
    assert!(scan_polyline(&pts, true).unwrap().is_empty());
    assert!(matches!(
        scan_polyline(&pts[..10], false),
        Err(EilError::InsufficientResolution(_))
    ));
}

#[test]
fn realized_parallel_cusps_match_classifier() {
    let mut m = parallel(0.25, 0.9, 0.6);
    m.b2 = m.parallel_thresholds()[0];
    m.b3 = m.parallel_thresholds()[1] + 0.4;
    let arcs = MongeArcs::new(&m).unwrap();
    let b = arcs.branch(EnvelopeTag::Iptl, 0.1, 201).unwrap();
    let markers = scan_polyline(&b.branch.positions(), false).unwrap();
    assert_eq!(markers.len(), 1);
    assert_eq!(markers[0].class, classify_parallel(&m).unwrap().klass);
    assert_eq!(arcs.family_type_at_origin(EnvelopeTag::Iptl, 0.02).unwrap().kind, FamilyType::A2);

    m.b3 = m.parallel_thresholds()[1];
    m.b4 = m.parallel_thresholds()[2] + 0.5;
    let arcs = MongeArcs::new(&m).unwrap();
    let b = arcs.branch(EnvelopeTag::Iptl, 0.1, 201).unwrap();
    let markers = scan_polyline(&b.branch.positions(), false).unwrap();
    assert_eq!(markers.len(), 1);
    assert_eq!(markers[0].class, SingularityClass::Cusp34);
    assert_eq!(arcs.family_type_at_origin(EnvelopeTag::Iptl, 0.02).unwrap().kind, FamilyType::A3);

    m.b2 += 0.3;
    let arcs = MongeArcs::new(&m).unwrap();
    let b = arcs.branch(EnvelopeTag::Iptl, 0.1, 201).unwrap();
    assert!(scan_polyline(&b.branch.positions(), false).unwrap().is_empty());
    assert_eq!(arcs.family_type_at_origin(EnvelopeTag::Iptl, 0.02).unwrap().kind, FamilyType::A1);
}

#[test]
fn family_type_rejects_points_off_the_envelope() {
    let mut m = parallel(0.25, 0.9, 0.0);
    m.b2 = 0.3;
    let arcs = MongeArcs::new(&m).unwrap();
    let line_of = |sigma: f64| {
        let (t, s) = arcs.pair_at(EnvelopeTag::Iptl, sigma, (0.0, 0.0))?;
        arcs.line_at(t, s)
    };
    let err = family_type(line_of, Vec2::new(0.3, 0.0), 0.0, 0.02, 1.0).unwrap_err();
    assert!(matches!(err, EilError::PreconditionViolated(_)));
}

#[test]
fn family_type_on_bean_aeil() {
    let c = bean();
    let a = AlphaParam::new(0.6).unwrap();
    let env = build_envelope(&c, &a, &BuildOptions { grid_n: 256, oracle: false, ..Default::default() }).unwrap();
    let branch = env
        .branches_tagged(EnvelopeTag::Aeil)
        .find(|b| !b.cusp_markers.is_empty())
        .expect("an AEIL branch with a cusp");
    let h = 2.0 * env.step;
    let regular = &branch.points[branch.points.len() / 2];
    let near_cusp = branch
        .cusp_markers
        .iter()
        .any(|m| m.index.abs_diff(branch.points.len() / 2) < 10);
    if !near_cusp {
        let r = family_type_on_curve(&c, &a, BranchKind::Transversal, (regular.t, regular.s), regular.x, h)
            .unwrap();
        assert_eq!(r.kind, FamilyType::A1);
    }
    // The sampled cusp lies between grid points, where the second family
    // derivative changes sign. Bisect along the locus to that sign change;
    // there the type is A2.
    let d2_at = |pair: (f64, f64)| -> (f64, (f64, f64), FamilyTypeReport) {
        let (t, s) = project_onto_locus(&c, BranchKind::Transversal, &a, pair.0, pair.1).unwrap();
        let x = envelope_point_closed_form(&c, t, s, &a).unwrap().x;
        let r = family_type_on_curve(&c, &a, BranchKind::Transversal, (t, s), x, h).unwrap();
        (r.derivatives[2], (t, s), r)
    };
    let m = branch.cusp_markers[0].index;
    let pair_of = |i: usize| (branch.points[i].t, branch.points[i].s);
    let (mut lo, mut hi) = [(m - 1, m), (m, m + 1)]
        .into_iter()
        .map(|(i, j)| (pair_of(i), pair_of(j)))
        .find(|&(p, q)| d2_at(p).0.signum() != d2_at(q).0.signum())
        .expect("second derivative changes sign next to the marker");
    let lo_sign = d2_at(lo).0.signum();
    for _ in 0..40 {
        let mid = (0.5 * (lo.0 + hi.0), 0.5 * (lo.1 + hi.1));
        let (d2, pair, _) = d2_at(mid);
        if d2.signum() == lo_sign {
            lo = pair;
        } else {
            hi = pair;
        }
    }
    let (_, _, r) = d2_at(lo);
    assert_eq!(r.kind, FamilyType::A2, "{:?}", r.derivatives);
}

fn a2_point(alpha: f64, a3: f64, b1: f64) -> MongeJetPair {
    let mut m = nonparallel(alpha, a3, 1.0, b1);
    m.b3 = m.critical_b3().unwrap();
    m
}

#[test]
fn versality_examples() {
    let a3 = MongeJetPair::nonversal_a3(0.4, 2.0);
    let r = versality_check(&a2_point(0.4, a3, 2.0)).unwrap();
    assert!(!r.versal && !r.closed_form);
    assert_eq!(r.rank, 0);
    let r = versality_check(&a2_point(0.4, a3 + 0.05, 2.0)).unwrap();
    assert!(r.versal && r.closed_form);
    assert_eq!(r.rank, 1);
    assert_eq!(MongeJetPair::nonversal_a3(0.2, 3.0), 0.0);
    let r = versality_check(&a2_point(0.2, 0.0, 3.0)).unwrap();
    assert!(!r.versal && !r.closed_form);
}

#[test]
fn versality_requires_a2_point() {
    let mut m = a2_point(0.4, 1.0, 2.0);
    m.b3 += 0.3;
    assert!(matches!(versality_check(&m), Err(EilError::PreconditionViolated(_))));
}

#[test]
fn verdict_json_shape() {
    let mut m = parallel(0.25, 0.9, 0.6);
    m.b2 = -1.0 / 6.0;
    m.b3 = 1.0;
    let json = serde_json::to_value(classify_parallel(&m).unwrap()).unwrap();
    assert_eq!(json["klass"], "OrdinaryCusp");
    assert!(json.get("versal").is_none());
    let parsed: MongeJetPair = serde_json::from_str(r#"{"b0": 1.0, "alpha": 0.3, "b1": 2.0}"#).unwrap();
    assert_eq!(parsed.b2, 0.0);
    assert!(!parsed.p1_inflection);
}

#[test]
fn default_grid_skips_half() {
    let g = default_alpha_grid();
    assert_eq!(g.len(), 98);
    assert!(!g.contains(&0.5));
    assert_eq!((g[0], g[97]), (0.01, 0.99));
}

#[test]
fn circle_sweep_has_no_events() {
    let c = circle(1.0).unwrap();
    let opts = SweepOptions {
        build: BuildOptions { grid_n: 96, ctl_samples: 64, ..SweepOptions::default().build },
        ..Default::default()
    };
    let r = alpha_sweep(&c, &[0.2, 0.35, 0.6, 0.8], &opts).unwrap();
    assert!(r.events.is_empty());
    assert!(r.gaps.is_empty());
    assert_eq!(r.inventory.len(), 8);
    assert!(r.inventory.iter().all(|i| i.count == 0));
}

#[test]
fn disjointness_of_empty_aeil_is_infinite() {
    let c = circle(1.0).unwrap();
    let env = build_envelope(
        &c,
        &AlphaParam::new(0.6).unwrap(),
        &BuildOptions { grid_n: 96, ..Default::default() },
    )
    .unwrap();
    assert_eq!(disjointness_report(&env.branches), f64::INFINITY);
}
