//! Finite differences, Richardson extrapolation, bracketed root finding and
//! least-squares polynomial fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{EilError, Result};

/// Five-point central difference estimate of the `order`-th derivative
/// (1..=4) of `f` at `x` with step `h`.
pub fn central5<F, T>(f: F, x: f64, h: f64, order: usize) -> T
where
    F: Fn(f64) -> T,
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let fm2 = f(x - 2.0 * h);
    let fm1 = f(x - h);
    let fp1 = f(x + h);
    let fp2 = f(x + 2.0 * h);
    match order {
        1 => (fm2 * 1.0 + fm1 * -8.0 + fp1 * 8.0 + fp2 * -1.0) * (1.0 / (12.0 * h)),
        2 => {
            let f0 = f(x);
            (fm2 * -1.0 + fm1 * 16.0 + f0 * -30.0 + fp1 * 16.0 + fp2 * -1.0)
                * (1.0 / (12.0 * h * h))
        }
        3 => (fm2 * -1.0 + fm1 * 2.0 + fp1 * -2.0 + fp2 * 1.0) * (1.0 / (2.0 * h * h * h)),
        4 => {
            let f0 = f(x);
            (fm2 * 1.0 + fm1 * -4.0 + f0 * 6.0 + fp1 * -4.0 + fp2 * 1.0) * (1.0 / h.powi(4))
        }
        _ => panic!("central5 supports derivative orders 1..=4, got {order}"),
    }
}

/// Seven-point central stencils. Orders 1 and 2 are O(h^6), orders 3 and 4
/// are O(h^4).
pub fn central7(samples: &[f64; 7], h: f64, order: usize) -> f64 {
    let [m3, m2, m1, z, p1, p2, p3] = *samples;
    match order {
        1 => (-m3 + 9.0 * m2 - 45.0 * m1 + 45.0 * p1 - 9.0 * p2 + p3) / (60.0 * h),
        2 => {
            (2.0 * m3 - 27.0 * m2 + 270.0 * m1 - 490.0 * z + 270.0 * p1 - 27.0 * p2 + 2.0 * p3)
                / (180.0 * h * h)
        }
        3 => (m3 - 8.0 * m2 + 13.0 * m1 - 13.0 * p1 + 8.0 * p2 - p3) / (8.0 * h.powi(3)),
        4 => {
            (-m3 + 12.0 * m2 - 39.0 * m1 + 56.0 * z - 39.0 * p1 + 12.0 * p2 - p3)
                / (6.0 * h.powi(4))
        }
        _ => panic!("central7 supports derivative orders 1..=4, got {order}"),
    }
}

/// Leading truncation order of [`central7`] for a derivative order.
pub fn central7_accuracy(order: usize) -> i32 {
    if order <= 2 {
        6
    } else {
        4
    }
}

/// Derivative estimates from a Richardson table built on [`central7`].
#[derive(Clone, Debug)]
pub struct RichardsonEstimate {
    /// Best (most extrapolated) value.
    pub value: f64,
    /// The two first-level extrapolations; their disagreement is an error
    /// indicator.
    pub level1: [f64; 2],
}

/// Two levels of Richardson extrapolation of the seven-point stencil at
/// steps `h`, `h/2`, `h/4`.
pub fn richardson7<F>(f: &F, x: f64, h: f64, order: usize) -> Result<RichardsonEstimate>
where
    F: Fn(f64) -> Result<f64>,
{
    let p = central7_accuracy(order);
    let mut d = [0.0; 3];
    for (k, dk) in d.iter_mut().enumerate() {
        let hk = h / f64::from(1u32 << k);
        let mut s = [0.0; 7];
        for (i, si) in s.iter_mut().enumerate() {
            *si = f(x + (i as f64 - 3.0) * hk)?;
        }
        *dk = central7(&s, hk, order);
    }
    let c1 = 2f64.powi(p);
    let r0 = (c1 * d[1] - d[0]) / (c1 - 1.0);
    let r1 = (c1 * d[2] - d[1]) / (c1 - 1.0);
    let c2 = 2f64.powi(p + 2);
    let value = (c2 * r1 - r0) / (c2 - 1.0);
    Ok(RichardsonEstimate {
        value,
        level1: [r0, r1],
    })
}

/// Safeguarded Newton iteration on a bracket `[lo, hi]` with
/// `sign(f(lo)) != sign(f(hi))`. `f` returns `(value, derivative)`; steps
/// that leave the bracket or stall fall back to bisection.
pub fn newton_bracketed<F>(f: F, mut lo: f64, mut hi: f64, xtol: f64, ftol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let (mut flo, _) = f(lo)?;
    let (fhi, _) = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(EilError::NoConvergence(format!(
            "no sign change on [{lo}, {hi}]: {flo:e}, {fhi:e}"
        )));
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x)?;
        if fx.abs() <= ftol || (hi - lo).abs() <= xtol {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let newton = if dfx != 0.0 && dfx.is_finite() {
            x - fx / dfx
        } else {
            f64::NAN
        };
        let inside = newton.is_finite() && (newton - lo) * (newton - hi) < 0.0;
        x = if inside { newton } else { 0.5 * (lo + hi) };
    }
    Ok(x)
}

/// Plain Newton iteration from a nearby guess, for charts where a good
/// starting point is known but no bracket is.
pub fn newton_from<F>(f: F, x0: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let mut x = x0;
    for _ in 0..60 {
        let (v, d) = f(x)?;
        if !(d != 0.0 && d.is_finite()) {
            return Err(EilError::NoConvergence(format!("flat residual at {x}")));
        }
        let dx = v / d;
        x -= dx;
        if !x.is_finite() {
            return Err(EilError::NoConvergence(format!("diverged from {x0}")));
        }
        if dx.abs() <= 1e-14 * (1.0 + x.abs()) {
            return Ok(x);
        }
    }
    Err(EilError::NoConvergence(format!("no convergence from {x0} in 60 steps")))
}

/// Plain bisection on a sign-changing bracket.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo.signum() == fhi.signum() && flo != 0.0 && fhi != 0.0 {
        return Err(EilError::NoConvergence("bisection without sign change".into()));
    }
    while (hi - lo).abs() > xtol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimisation of a unimodal function on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Polynomial in monomial form, `c[0] + c[1] x + ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// `k`-th derivative evaluated at `x`.
    pub fn deriv_at(&self, x: f64, k: usize) -> f64 {
        let mut acc = 0.0;
        for (n, &c) in self.0.iter().enumerate().rev() {
            if n < k {
                break;
            }
            let falling: f64 = ((n - k + 1)..=n).map(|m| m as f64).product();
            acc += c * falling * x.powi((n - k) as i32);
        }
        acc
    }
}

/// Least-squares fit of a polynomial of the given degree through
/// `(xs[i], ys[i])`, solved via SVD.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Poly> {
    if xs.len() != ys.len() || xs.len() <= degree {
        return Err(EilError::InsufficientResolution(format!(
            "polyfit needs more than {degree} points, got {}",
            xs.len()
        )));
    }
    let a = DMatrix::from_fn(xs.len(), degree + 1, |i, j| xs[i].powi(j as i32));
    let b = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let sol = svd
        .solve(&b, 1e-14)
        .map_err(|e| EilError::NoConvergence(format!("polyfit: {e}")))?;
    Ok(Poly(sol.iter().copied().collect()))
}
