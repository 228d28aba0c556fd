//! Singularities of the envelope: analytic conditions on the local jets of
//! the two contributing points, and numeric cusp detection on traced
//! branches.
//!
//! The local model puts `p₁ = (t, f(t))` with `f = t²/2 + a₃t³ + a₄t⁴ + a₅t⁵`
//! (or `f = a₃t³ + …` when `p₁` is an inflection) and
//! `p₂ = (s, b₀ + b₁s + … + b₅s⁵)`.

mod monge;
mod scan;
mod sweep;

pub use monge::{MongeArcs, MongeBranch};
pub use scan::{
    family_type, family_type_on_curve, numeric_cusp_scan, scan_polyline, FamilyType,
    FamilyTypeReport,
};
pub use sweep::{
    alpha_sweep, default_alpha_grid, disjointness_report, AlphaInventory, SweepOptions,
    SweepReport, TransitionEvent, TransitionKind,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{EilError, Result};

/// Local type of an envelope point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SingularityClass {
    Regular,
    /// `A₂`: `θ' = 0`, `[θ'', θ'''] ≠ 0`.
    OrdinaryCusp,
    /// `A₃`: `θ' = [θ'', θ'''] = 0`, `[θ''', θ''''] ≠ 0`.
    Cusp34,
    Degenerate,
}

/// Jets of the two points in the local model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MongeJetPair {
    #[serde(default)]
    pub a3: f64,
    #[serde(default)]
    pub a4: f64,
    #[serde(default)]
    pub a5: f64,
    pub b0: f64,
    #[serde(default)]
    pub b1: f64,
    #[serde(default)]
    pub b2: f64,
    #[serde(default)]
    pub b3: f64,
    #[serde(default)]
    pub b4: f64,
    #[serde(default)]
    pub b5: f64,
    pub alpha: f64,
    #[serde(default)]
    pub p1_inflection: bool,
}

impl MongeJetPair {
    /// A pair with all optional coefficients zero.
    pub fn new(alpha: f64, b0: f64) -> Self {
        MongeJetPair {
            a3: 0.0,
            a4: 0.0,
            a5: 0.0,
            b0,
            b1: 0.0,
            b2: 0.0,
            b3: 0.0,
            b4: 0.0,
            b5: 0.0,
            alpha,
            p1_inflection: false,
        }
    }

    /// Hard invariants: finite coefficients, `α ∈ (0, 1)`, `b₀ > 0`.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.a3, self.a4, self.a5, self.b0, self.b1, self.b2, self.b3, self.b4, self.b5,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(EilError::PreconditionViolated("non-finite jet coefficient".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(EilError::InvalidAlpha(self.alpha));
        }
        if !(self.b0 > 0.0) {
            return Err(EilError::PreconditionViolated(format!(
                "b0 must be positive, got {}",
                self.b0
            )));
        }
        Ok(())
    }

    /// Power coefficients of `f` (for `p₁`).
    pub fn f_coeffs(&self) -> [f64; 6] {
        let a2 = if self.p1_inflection { 0.0 } else { 0.5 };
        [0.0, 0.0, a2, self.a3, self.a4, self.a5]
    }

    /// Power coefficients of `g` (for `p₂`).
    pub fn g_coeffs(&self) -> [f64; 6] {
        [self.b0, self.b1, self.b2, self.b3, self.b4, self.b5]
    }

    /// `b₂` making the non-parallel discriminant solvable at the origin.
    pub fn solvable_b2(alpha: f64) -> f64 {
        (alpha - 1.0) / (2.0 * alpha)
    }

    /// Critical `b₃` of the non-parallel regularity condition, or `None`
    /// when its denominator vanishes.
    pub fn critical_b3(&self) -> Option<f64> {
        let (a, a3, b0, b1) = (self.alpha, self.a3, self.b0, self.b1);
        let num = (a - 1.0)
            * (-6.0 * a * a3 * b0 * b1 * b1 + 4.0 * a * a3 * b0 * b0
                - 3.0 * a * b1.powi(3)
                - 2.0 * a3 * b0 * b0);
        let den = 2.0 * a * b0 * (6.0 * a * a3 * b0 * b1 + 3.0 * a * b1 * b1 + 2.0 * a * b0 - b0);
        (den.abs() > EQ_TOL * (1.0 + num.abs())).then(|| num / den)
    }

    /// Thresholds of the parallel case: `b₂ = α/(2(α-1))`,
    /// `b₃ = (α/(α-1))² a₃`, `b₄ = (α/(α-1))³ a₄`.
    pub fn parallel_thresholds(&self) -> [f64; 3] {
        let r = self.alpha / (self.alpha - 1.0);
        [0.5 * r, r * r * self.a3, r.powi(3) * self.a4]
    }

    /// Non-versal `a₃` of the non-parallel `A₂` case.
    pub fn nonversal_a3(alpha: f64, b1: f64) -> f64 {
        -(5.0 * alpha - 1.0) / (6.0 * alpha * alpha * b1)
    }
}

/// Equality tolerance for analytic witnesses.
pub const EQ_TOL: f64 = 1e-9;

fn is_zero(w: f64, scale: f64) -> bool {
    w.abs() <= EQ_TOL * scale.max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityVerdict {
    pub klass: SingularityClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub versal: Option<bool>,
    /// Named values of the quantities that decided the class.
    pub witness: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inflection_order: Option<u32>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl SingularityVerdict {
    fn new(klass: SingularityClass) -> Self {
        SingularityVerdict {
            klass,
            versal: None,
            witness: BTreeMap::new(),
            inflection_order: None,
            notes: Vec::new(),
        }
    }

    fn with(mut self, name: &str, value: f64) -> Self {
        self.witness.insert(name.to_string(), value);
        self
    }
}

/// Non-parallel (concurrent tangents) case.
///
/// Requires the solvability condition `b₂ = (α-1)/(2α)` (or `b₂ = 0` when
/// `p₁` is an inflection); the `b₃` condition then decides regularity.
pub fn classify_nonparallel(m: &MongeJetPair) -> Result<SingularityVerdict> {
    m.validate()?;
    let a = m.alpha;
    if is_zero(m.b1, 1.0) {
        return Err(EilError::PreconditionViolated(
            "b1 = 0: tangents are parallel".into(),
        ));
    }
    if m.p1_inflection {
        let b = 16.0 * a * m.b0.powi(3) * m.b2;
        if !is_zero(b, m.b0.powi(3)) {
            return Err(EilError::PreconditionViolated(format!(
                "no local envelope branch: B(0,0) = {b}"
            )));
        }
        let klass = if is_zero(m.b3, 1.0) {
            SingularityClass::Degenerate
        } else {
            SingularityClass::Regular
        };
        return Ok(SingularityVerdict::new(klass).with("B00", b).with("b3", m.b3));
    }
    let b00 = 8.0 * (2.0 * a * m.b2 - a + 1.0) * m.b0.powi(3);
    if !is_zero(b00, m.b0.powi(3)) {
        return Err(EilError::PreconditionViolated(format!(
            "no local envelope branch: B(0,0) = {b00} (needs b2 = {})",
            MongeJetPair::solvable_b2(a)
        )));
    }
    let mut notes = Vec::new();
    if !(m.a3 > 0.0) {
        notes.push("local-model assumption a3 > 0 violated".to_string());
    }
    if !(m.b1 * m.b1 - m.b0 > 0.0) {
        notes.push("local-model assumption b1^2 - b0 > 0 violated".to_string());
    }
    let alpha_pole = a - m.b0 / (m.b1 * m.b1);
    let mut v = if is_zero(alpha_pole, 1.0) {
        notes.push("alpha = b0/b1^2: envelope point at infinity".to_string());
        SingularityVerdict::new(SingularityClass::Degenerate)
    } else {
        match m.critical_b3() {
            None => {
                notes.push("critical b3 undefined (vanishing denominator)".to_string());
                SingularityVerdict::new(SingularityClass::Degenerate)
            }
            Some(c) => {
                let w = m.b3 - c;
                let klass = if is_zero(w, c.abs()) {
                    notes.push("equality case: A2 candidate, confirm numerically".to_string());
                    SingularityClass::OrdinaryCusp
                } else {
                    SingularityClass::Regular
                };
                SingularityVerdict::new(klass)
                    .with("b3_critical", c)
                    .with("b3_minus_critical", w)
            }
        }
    };
    v = v.with("B00", b00).with("alpha_minus_b0_over_b1sq", alpha_pole);
    v.notes = notes;
    Ok(v)
}

/// Parallel tangents (`b₁ = 0`), `p₁` not an inflection.
pub fn classify_parallel(m: &MongeJetPair) -> Result<SingularityVerdict> {
    m.validate()?;
    if !is_zero(m.b1, 1.0) {
        return Err(EilError::PreconditionViolated(format!(
            "b1 = {} != 0: tangents are not parallel",
            m.b1
        )));
    }
    if m.p1_inflection {
        return Err(EilError::PreconditionViolated(
            "p1 is an inflection; use the inflection classifier".into(),
        ));
    }
    let [t2, t3, t4] = m.parallel_thresholds();
    let (w2, w3, w4) = (m.b2 - t2, m.b3 - t3, m.b4 - t4);
    let klass = if !is_zero(w2, t2.abs()) {
        SingularityClass::Regular
    } else if !is_zero(w3, t3.abs()) {
        SingularityClass::OrdinaryCusp
    } else if !is_zero(w4, t4.abs()) {
        SingularityClass::Cusp34
    } else {
        SingularityClass::Degenerate
    };
    Ok(SingularityVerdict::new(klass)
        .with("b2_minus_threshold", w2)
        .with("b3_minus_threshold", w3)
        .with("b4_minus_threshold", w4))
}

/// Parallel tangents with `p₁` an inflection: the IPTL is regular through
/// `M_α`; reports the inflection order of the IPTL at the origin.
///
/// With `b₂ ≠ 0` the IPTL is locally
/// `((1-α)t, αb₀ + a₃(1-α)t³ + (9αa₃² + 4a₄b₂(1-α))/b₂ · t⁴)`.
pub fn classify_parallel_inflection(m: &MongeJetPair) -> Result<SingularityVerdict> {
    m.validate()?;
    if !m.p1_inflection {
        return Err(EilError::PreconditionViolated("p1 is not an inflection".into()));
    }
    if !is_zero(m.b1, 1.0) {
        return Err(EilError::PreconditionViolated(format!(
            "b1 = {} != 0: tangents are not parallel",
            m.b1
        )));
    }
    let a = m.alpha;
    let mut v = SingularityVerdict::new(SingularityClass::Regular)
        .with("through_x", 0.0)
        .with("through_y", a * m.b0);
    if !is_zero(m.b2, 1.0) {
        let c3 = m.a3 * (1.0 - a);
        let c4 = (9.0 * a * m.a3 * m.a3 + 4.0 * m.a4 * m.b2 * (1.0 - a)) / m.b2;
        v = v.with("x1", 1.0 - a).with("y3", c3).with("y4", c4);
        v.inflection_order = if !is_zero(c3, 1.0) {
            Some(1)
        } else if !is_zero(c4, 1.0) {
            Some(2)
        } else {
            None
        };
    } else {
        // Both points inflectional; only the 1-jets in α of the leading
        // coefficients are known.
        let h1 = m.a3 - 2.0 * (2.0 * m.a3 + m.b3) * a;
        let h2 = m.a3.powi(3) - 3.0 * m.a3 * m.a3 * (2.0 * m.a3 - m.b3) * a;
        v = v.with("h1_1jet", h1).with("h2_1jet", h2).with("b3", m.b3);
        if is_zero(m.b3, 1.0) {
            v.notes.push("b3 = 0: local form undefined".into());
            v.klass = SingularityClass::Degenerate;
        } else {
            v.inflection_order = Some(1);
        }
    }
    Ok(v)
}

/// Versality data of the non-parallel `A₂` case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VersalityResult {
    pub versal: bool,
    /// Answer of the closed-form criterion `a₃ ≠ -(5α-1)/(6α²b₁)`.
    pub closed_form: bool,
    /// Numerical rank of the `(x, y)` first-order coefficients.
    pub rank: usize,
    pub m: [f64; 3],
}

/// First-order Taylor coefficients `(m₁₁, m₁₂, m₁₃)` of `F_x`, `F_y`, `F_α`.
pub fn versality_coefficients(alpha: f64, a3: f64, b1: f64) -> [f64; 3] {
    let a = alpha;
    let den = 2.0 * (3.0 * a * a3 * b1 + a + 1.0);
    let k = 6.0 * a * a * a3 * b1 + 5.0 * a - 1.0;
    let m11 = -a * b1 * b1 * k / den;
    let m12 = b1 * k / den;
    let m13 = a
        * b1.powi(3)
        * (36.0 * a.powi(3) * a3 * a3 * b1 * b1 * (a - 1.0)
            + 12.0 * a.powi(3) * a3 * b1
            + 9.0 * a * a * a3 * b1
            - 24.0 * a * a3 * b1
            + a * a
            + 2.0 * a
            - 5.0)
        / den;
    [m11, m12, m13]
}

/// Versality at a non-parallel `A₂` point. The rank is taken over the
/// `(x, y)` coefficients `(m₁₁, m₁₂)`; both must agree with the closed form.
pub fn versality_check(m: &MongeJetPair) -> Result<VersalityResult> {
    let v = classify_nonparallel(m)?;
    if v.klass != SingularityClass::OrdinaryCusp {
        return Err(EilError::PreconditionViolated(format!(
            "not at an A2 point (class {:?})",
            v.klass
        )));
    }
    let (a, b1) = (m.alpha, m.b1);
    let den = 3.0 * a * m.a3 * b1 + a + 1.0;
    if is_zero(den, 1.0) {
        return Err(EilError::PreconditionViolated(
            "versality coefficients undefined (3 alpha a3 b1 + alpha + 1 = 0)".into(),
        ));
    }
    let coeffs = versality_coefficients(a, m.a3, b1);
    let size = (a * b1 * b1).abs() + b1.abs();
    let rank = usize::from(coeffs[0].hypot(coeffs[1]) > EQ_TOL * size.max(1.0));
    let a3_star = MongeJetPair::nonversal_a3(a, b1);
    let closed_form = !is_zero(m.a3 - a3_star, a3_star.abs());
    Ok(VersalityResult {
        versal: rank == 1,
        closed_form,
        rank,
        m: coeffs,
    })
}

#[cfg(test)]
mod tests;
