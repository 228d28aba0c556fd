//! Equi-affine differential invariants of a plane curve at a point: affine
//! tangent and normal, affine curvature, and the conormal covector with its
//! derivative.

use std::io::Write;

use crate::curve::{CurveJet, ParamCurve};
use crate::error::{EilError, Result};
use crate::geom::{signed_cbrt, signed_pow_third, Vec2};

/// Default `|κ|` threshold for jets evaluated without a curve scale.
pub const DEFAULT_INFLECTION_TOL: f64 = 1e-9;

/// Affine frame at one parameter value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineFrame {
    pub t: f64,
    /// `[γ_t, γ_tt]` (signed, not normalised by `|γ_t|³`).
    pub kappa: f64,
    /// `[γ_t, γ_ttt]`.
    pub kappa_t: f64,
    /// Affine tangent `γ_s = κ^{-1/3} γ_t`.
    pub tangent_affine: Vec2,
    /// Affine normal `ξ`.
    pub normal_affine: Vec2,
    /// Affine curvature `μ`.
    pub mu: f64,
}

fn check_jet(jet: &CurveJet, kappa_min: f64) -> Result<f64> {
    if !jet.is_regular(0.0) || !jet.d1.is_finite() {
        return Err(EilError::Irregular(jet.t));
    }
    let kappa = jet.kappa();
    if kappa.abs() < kappa_min || !kappa.is_finite() {
        return Err(EilError::Inflection { t: jet.t, kappa });
    }
    Ok(kappa)
}

pub fn affine_frame(jet: &CurveJet) -> Result<AffineFrame> {
    affine_frame_with(jet, DEFAULT_INFLECTION_TOL)
}

/// Affine frame with an explicit inflection threshold on `|κ|`.
pub fn affine_frame_with(jet: &CurveJet, kappa_min: f64) -> Result<AffineFrame> {
    let kappa = check_jet(jet, kappa_min)?;
    let kappa_t = jet.kappa_t();
    let kappa_tt = jet.kappa_tt();
    let normal_affine =
        jet.d2 * signed_pow_third(kappa, -2) - jet.d1 * (kappa_t * signed_pow_third(kappa, -5) / 3.0);
    let mu = (3.0 * kappa * kappa_tt - 5.0 * kappa_t * kappa_t
        + 9.0 * kappa * jet.d2.cross(jet.d3))
        * signed_pow_third(kappa, -8)
        / 9.0;
    Ok(AffineFrame {
        t: jet.t,
        kappa,
        kappa_t,
        tangent_affine: jet.d1 / signed_cbrt(kappa),
        normal_affine,
        mu,
    })
}

/// A linear functional on plane vectors, `U ↦ n · U`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Covector(pub Vec2);

impl Covector {
    #[inline]
    pub fn apply(&self, u: Vec2) -> f64 {
        self.0.dot(u)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

impl std::ops::Add for Covector {
    type Output = Covector;
    fn add(self, o: Covector) -> Covector {
        Covector(self.0 + o.0)
    }
}

impl std::ops::Mul<f64> for Covector {
    type Output = Covector;
    fn mul(self, k: f64) -> Covector {
        Covector(self.0 * k)
    }
}

/// Conormal `ν` at a base point: `ν(γ_t) = 0`, `ν(ξ) = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConormalCovector {
    pub n: Covector,
    pub t: f64,
}

impl ConormalCovector {
    #[inline]
    pub fn apply(&self, u: Vec2) -> f64 {
        self.n.apply(u)
    }
}

/// `[γ_t, ·]` as a covector: `[d, U] = d.x U.y - d.y U.x`.
#[inline]
fn bracket_covector(d: Vec2) -> Covector {
    Covector(Vec2::new(-d.y, d.x))
}

pub fn conormal(jet: &CurveJet) -> Result<ConormalCovector> {
    conormal_with(jet, DEFAULT_INFLECTION_TOL)
}

/// `ν(U) = [γ_t, U] / κ^{1/3}`.
pub fn conormal_with(jet: &CurveJet, kappa_min: f64) -> Result<ConormalCovector> {
    let kappa = check_jet(jet, kappa_min)?;
    Ok(ConormalCovector {
        n: bracket_covector(jet.d1) * (1.0 / signed_cbrt(kappa)),
        t: jet.t,
    })
}

pub fn conormal_derivative(jet: &CurveJet) -> Result<Covector> {
    conormal_derivative_with(jet, DEFAULT_INFLECTION_TOL)
}

/// `ν'(U) = [γ_tt, U] κ^{-1/3} - (1/3) κ_t κ^{-4/3} [γ_t, U]`.
pub fn conormal_derivative_with(jet: &CurveJet, kappa_min: f64) -> Result<Covector> {
    let kappa = check_jet(jet, kappa_min)?;
    let kappa_t = jet.kappa_t();
    Ok(bracket_covector(jet.d2) * signed_pow_third(kappa, -1)
        + bracket_covector(jet.d1) * (-kappa_t * signed_pow_third(kappa, -4) / 3.0))
}

/// Coefficients of `ν₁' = a ν₁ + b ν₂` and `ν₂' = ā ν₁ + b̄ ν₂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConormalDecomp {
    pub a: f64,
    pub b: f64,
    pub a_bar: f64,
    pub b_bar: f64,
}

/// Relative sine below which two tangents count as parallel.
pub const PARALLEL_SINE_TOL: f64 = 1e-6;

pub(crate) fn tangents_parallel(d1: Vec2, d2: Vec2) -> bool {
    d1.cross(d2).abs() < PARALLEL_SINE_TOL * d1.norm() * d2.norm()
}

pub fn conormal_decomp(jet1: &CurveJet, jet2: &CurveJet) -> Result<ConormalDecomp> {
    conormal_decomp_with(jet1, jet2, DEFAULT_INFLECTION_TOL)
}

pub fn conormal_decomp_with(
    jet1: &CurveJet,
    jet2: &CurveJet,
    kappa_min: f64,
) -> Result<ConormalDecomp> {
    if tangents_parallel(jet1.d1, jet2.d1) {
        return Err(EilError::ParallelTangents {
            t: jet1.t,
            s: jet2.t,
        });
    }
    let nu1 = conormal_with(jet1, kappa_min)?;
    let nu2 = conormal_with(jet2, kappa_min)?;
    let dnu1 = conormal_derivative_with(jet1, kappa_min)?;
    let dnu2 = conormal_derivative_with(jet2, kappa_min)?;
    let nu1_g2 = nu1.apply(jet2.d1);
    let nu2_g1 = nu2.apply(jet1.d1);
    Ok(ConormalDecomp {
        a: dnu1.apply(jet2.d1) / nu1_g2,
        b: dnu1.apply(jet1.d1) / nu2_g1,
        a_bar: dnu2.apply(jet2.d1) / nu1_g2,
        b_bar: dnu2.apply(jet1.d1) / nu2_g1,
    })
}

/// Writes the per-point invariant table (`t,x,y,kappa,mu,xi_x,xi_y`) for `n`
/// evenly spaced parameters. Inflection points are written with `nan`
/// invariants; a singular point (vanishing velocity) is an
/// `InvalidData` error.
pub fn write_invariants_csv<W: Write>(curve: &ParamCurve, n: usize, out: &mut W) -> std::io::Result<()> {
    use crate::report::fmt_num;
    writeln!(out, "t,x,y,kappa,mu,xi_x,xi_y")?;
    let kmin = curve.inflection_threshold();
    for t in curve.sample_params(n) {
        let jet = curve
            .eval_jet(t)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()))?;
        let (mu, xi) = match affine_frame_with(&jet, kmin) {
            Ok(f) => (f.mu, f.normal_affine),
            Err(EilError::Inflection { .. }) => (f64::NAN, Vec2::new(f64::NAN, f64::NAN)),
            Err(e) => return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string())),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_num(t),
            fmt_num(jet.x.x),
            fmt_num(jet.x.y),
            fmt_num(jet.kappa()),
            fmt_num(mu),
            fmt_num(xi.x),
            fmt_num(xi.y)
        )?;
    }
    Ok(())
}
