//! Fixtures shared by the benchmarks.

use eil_core::curve::{bean, ellipse};
use eil_core::envelope::{build_envelope, BuildOptions, EnvelopeBranch, EnvelopeTag};
use eil_core::singularities::MongeJetPair;
use eil_core::{AlphaParam, ParamCurve};

/// Curves benchmarked by name.
pub fn curves() -> Vec<(&'static str, ParamCurve)> {
    vec![("ellipse", ellipse(2.0, 1.0).expect("valid axes")), ("bean", bean())]
}

/// Longest AEIL branch of the bean at `α`, for cusp-scan timing.
pub fn bean_aeil_branch(alpha: f64) -> EnvelopeBranch {
    let opts = BuildOptions {
        cusps: false,
        oracle: false,
        discriminant: false,
        ..BuildOptions::default()
    };
    let env = build_envelope(&bean(), &AlphaParam::new(alpha).expect("alpha in (0, 1)"), &opts)
        .expect("bean is closed");
    env.branches_tagged(EnvelopeTag::Aeil)
        .max_by_key(|b| b.points.len())
        .cloned()
        .expect("bean has AEIL branches at this alpha")
}

/// A parallel-tangent jet pair on its cusp threshold.
pub fn parallel_cusp_jets() -> MongeJetPair {
    let mut m = MongeJetPair::new(0.25, 1.0);
    m.a3 = 0.9;
    m.b2 = m.parallel_thresholds()[0];
    m
}
