//! Realization of a [`MongeJetPair`] as two open polynomial arcs, so the
//! analytic verdicts can be cross-checked on actual envelope branches.

use super::scan::{family_type, FamilyTypeReport};
use super::MongeJetPair;
use crate::affine::tangents_parallel;
use crate::curve::{graph_arc, ParamCurve};
use crate::envelope::{
    envelope_point_jets, intermediate_line_jets, EnvelopeBranch, EnvelopePoint, EnvelopeTag,
    LineEq,
};
use crate::error::{EilError, Result};
use crate::geom::Vec2;
use crate::locus::{pairing_value_jets, AlphaParam};
use crate::numeric::{newton_from, Poly};

/// Domain of both arcs.
const ARC_DOMAIN: (f64, f64) = (-1.0, 1.0);

/// `p₁ = (t, f(t))` and `p₂ = (s, g(s))` of the local model.
#[derive(Clone, Debug)]
pub struct MongeArcs {
    pub p1: ParamCurve,
    pub p2: ParamCurve,
    pub jets: MongeJetPair,
    alpha: AlphaParam,
    f: Poly,
    g: Poly,
}

/// A branch of the local model sampled over the chart parameter `σ`.
#[derive(Clone, Debug)]
pub struct MongeBranch {
    pub tag: EnvelopeTag,
    pub sigma: Vec<f64>,
    pub pairs: Vec<(f64, f64)>,
    pub branch: EnvelopeBranch,
}

impl MongeArcs {
    pub fn new(jets: &MongeJetPair) -> Result<Self> {
        jets.validate()?;
        let (f, g) = (jets.f_coeffs(), jets.g_coeffs());
        Ok(MongeArcs {
            p1: graph_arc(&f, ARC_DOMAIN)?,
            p2: graph_arc(&g, ARC_DOMAIN)?,
            jets: *jets,
            alpha: AlphaParam::new(jets.alpha)?,
            f: Poly(f.to_vec()),
            g: Poly(g.to_vec()),
        })
    }

    fn kappa_min(&self) -> f64 {
        self.p1.inflection_threshold()
    }

    /// Pair `(t, s)` at chart parameter `σ` near `guess`.
    ///
    /// IPTL: `f'(t) = g'(s)`, charted by `s` (by `t` when `p₁` is an
    /// inflection, since then `f'` is not invertible at the origin).
    /// AEIL: the pairing condition, charted by `s`.
    pub fn pair_at(&self, tag: EnvelopeTag, sigma: f64, guess: (f64, f64)) -> Result<(f64, f64)> {
        match tag {
            EnvelopeTag::Iptl if self.jets.p1_inflection => {
                let target = self.f.deriv_at(sigma, 1);
                let s = newton_from(
                    |s| Ok((self.g.deriv_at(s, 1) - target, self.g.deriv_at(s, 2))),
                    guess.1,
                )?;
                Ok((sigma, s))
            }
            EnvelopeTag::Iptl => {
                let target = self.g.deriv_at(sigma, 1);
                let t = newton_from(
                    |t| Ok((self.f.deriv_at(t, 1) - target, self.f.deriv_at(t, 2))),
                    guess.0,
                )?;
                Ok((t, sigma))
            }
            EnvelopeTag::Aeil => {
                let j2 = self.p2.eval_jet(sigma)?;
                let t = newton_from(
                    |t| {
                        let v = pairing_value_jets(&self.p1.eval_jet(t)?, &j2, &self.alpha, self.kappa_min())?;
                        Ok((v.g, v.g_t))
                    },
                    guess.0,
                )?;
                Ok((t, sigma))
            }
            other => Err(EilError::PreconditionViolated(format!(
                "no local chart for {}",
                other.as_str()
            ))),
        }
    }

    /// Intermediate line of the pair `(t, s)`.
    pub fn line_at(&self, t: f64, s: f64) -> Result<LineEq> {
        let j1 = self.p1.eval_jet(t)?;
        let j2 = self.p2.eval_jet(s)?;
        if tangents_parallel(j1.d1, j2.d1) {
            return Ok(LineEq::through(j1.x.lerp(j2.x, self.alpha.alpha()), j1.d1));
        }
        intermediate_line_jets(&j1, &j2, &self.alpha, self.kappa_min())
    }

    /// Envelope point of the pair.
    pub fn point_at(&self, tag: EnvelopeTag, t: f64, s: f64) -> Result<Vec2> {
        let j1 = self.p1.eval_jet(t)?;
        let j2 = self.p2.eval_jet(s)?;
        match tag {
            EnvelopeTag::Aeil => Ok(envelope_point_jets(&j1, &j2, &self.alpha, self.kappa_min())?.x),
            _ => Ok(j1.x.lerp(j2.x, self.alpha.alpha())),
        }
    }

    /// Branch through the origin pair sampled at `n` (odd) uniform chart
    /// values in `[-half_width, half_width]`.
    pub fn branch(&self, tag: EnvelopeTag, half_width: f64, n: usize) -> Result<MongeBranch> {
        if n < 3 || n % 2 == 0 || !(half_width > 0.0 && half_width < 1.0) {
            return Err(EilError::InvalidParams(format!(
                "need odd n >= 3 and half width in (0, 1), got {n}, {half_width}"
            )));
        }
        let mid = n / 2;
        let h = half_width / mid as f64;
        let origin = self.pair_at(tag, 0.0, (0.0, 0.0))?;
        let mut pairs = vec![origin; n];
        // March outward from the origin so each solve starts next to its root.
        for dir in [1isize, -1] {
            let mut prev = origin;
            for k in 1..=mid {
                let i = (mid as isize + dir * k as isize) as usize;
                let sigma = dir as f64 * k as f64 * h;
                prev = self.pair_at(tag, sigma, prev)?;
                pairs[i] = prev;
            }
        }
        let sigma: Vec<f64> = (0..n).map(|i| (i as f64 - mid as f64) * h).collect();
        let points = pairs
            .iter()
            .map(|&(t, s)| {
                let x = self.point_at(tag, t, s)?;
                let line = self.line_at(t, s)?;
                Ok(EnvelopePoint {
                    x,
                    t,
                    s,
                    alpha: self.alpha.alpha(),
                    tag,
                    online_residual: line.distance(x),
                    det_residual: f64::NAN,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MongeBranch {
            tag,
            sigma,
            pairs,
            branch: EnvelopeBranch::new(tag, points, false),
        })
    }

    /// [`family_type`] of the line family at the origin pair, along the
    /// chart of `tag`.
    pub fn family_type_at_origin(&self, tag: EnvelopeTag, h: f64) -> Result<FamilyTypeReport> {
        let origin = self.pair_at(tag, 0.0, (0.0, 0.0))?;
        let x0 = self.point_at(tag, origin.0, origin.1)?;
        let line_of = |sigma: f64| -> Result<LineEq> {
            let (t, s) = self.pair_at(tag, sigma, origin)?;
            self.line_at(t, s)
        };
        family_type(line_of, x0, 0.0, h, 1.0)
    }
}
