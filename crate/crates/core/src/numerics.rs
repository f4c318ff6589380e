//! Shared numerical kernel: log-space normal and Beta densities, the normal
//! CDF, bracketed root finding, and adaptive quadrature.
//!
//! All densities are evaluated in log space; `exp` is applied only where a
//! linear-scale value is actually reported. Nothing in this module is
//! randomized, so identical inputs give bit-identical outputs on a platform.

use thiserror::Error;

/// ln(2π), used by the normal log density.
const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// A natural-log density value. `f64::NEG_INFINITY` encodes zero density.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogDensity(pub f64);

impl LogDensity {
    /// The plain-scale density, `exp` of the stored value.
    #[inline]
    pub fn exp(self) -> f64 {
        self.0.exp()
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("variance must be positive and finite, got {0}")]
    InvalidVariance(f64),
    #[error("Beta shape parameters must be positive and finite, got eta={eta}, nu={nu}")]
    InvalidShape { eta: f64, nu: f64 },
    #[error("value {0} lies outside [0, 1]")]
    OutOfUnitInterval(f64),
    #[error("input must be finite, got {0}")]
    NonFinite(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("no sign change on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("quadrature budget exhausted: best estimate {estimate} with error bound {error_bound}")]
    QuadratureBudget { estimate: f64, error_bound: f64 },
}

/// Log density of N(x | mean, variance).
pub fn normal_log_density(x: f64, mean: f64, variance: f64) -> Result<LogDensity, NumericsError> {
    check_variance(variance)?;
    check_finite(x)?;
    check_finite(mean)?;
    let z = x - mean;
    Ok(LogDensity(-0.5 * (LN_2PI + variance.ln() + z * z / variance)))
}

/// Plain-scale normal density, `exp` of [`normal_log_density`].
pub fn normal_density(x: f64, mean: f64, variance: f64) -> Result<f64, NumericsError> {
    normal_log_density(x, mean, variance).map(LogDensity::exp)
}

/// Log density of Beta(w | eta, nu).
///
/// Boundary conventions at w = 0 and w = 1: a shape of exactly 1 contributes
/// nothing, a shape above 1 gives zero density (−∞), a shape below 1 gives a
/// divergent density (+∞).
pub fn beta_log_density(w: f64, eta: f64, nu: f64) -> Result<LogDensity, NumericsError> {
    check_shapes(eta, nu)?;
    if !(0.0..=1.0).contains(&w) {
        return Err(NumericsError::OutOfUnitInterval(w));
    }
    let ln_norm = libm::lgamma(eta + nu) - libm::lgamma(eta) - libm::lgamma(nu);
    let t_lo = if eta == 1.0 { 0.0 } else { (eta - 1.0) * w.ln() };
    // ln(1 - w) via ln_1p keeps precision for small w
    let t_hi = if nu == 1.0 { 0.0 } else { (nu - 1.0) * (-w).ln_1p() };
    Ok(LogDensity(ln_norm + t_lo + t_hi))
}

/// Plain-scale Beta density.
pub fn beta_density(w: f64, eta: f64, nu: f64) -> Result<f64, NumericsError> {
    beta_log_density(w, eta, nu).map(LogDensity::exp)
}

/// CDF of N(mean, variance) at x, via the complementary error function so
/// both tails keep full absolute accuracy.
pub fn normal_cdf(x: f64, mean: f64, variance: f64) -> Result<f64, NumericsError> {
    check_variance(variance)?;
    if x.is_nan() || mean.is_nan() {
        return Err(NumericsError::NonFinite(f64::NAN));
    }
    let z = (x - mean) / variance.sqrt();
    Ok(0.5 * libm::erfc(-z / std::f64::consts::SQRT_2))
}

/// Two-term log-sum-exp: ln(exp(a) + exp(b)) without intermediate overflow.
pub fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Bracketed root finding via Brent's method (inverse quadratic and secant
/// steps, safeguarded by bisection). Requires f(lo) · f(hi) ≤ 0.
///
/// Returns an abscissa whose enclosing bracket has shrunk below `tol` (plus a
/// machine-precision term), or an exact zero of `f` if one is hit.
pub fn find_root<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    if !(tol.is_finite() && tol > 0.0) {
        return Err(NumericsError::InvalidTolerance(tol));
    }
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(NumericsError::InvalidInterval { lo, hi });
    }

    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(NumericsError::NoBracket {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..200 {
        if fb.abs() > fc.abs() {
            // b must stay the best iterate; c keeps the other bracket end
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // attempt interpolation
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                // secant
                (2.0 * xm * s, 1.0 - s)
            } else {
                // inverse quadratic
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 {
            d
        } else {
            tol1.copysign(xm)
        };
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    // Brent is guaranteed to converge in far fewer steps than the cap
    Ok(b)
}

// Quadrature budget: evaluation cap shared across all panels of one call.
const QUAD_MAX_EVALS: usize = 4_000_000;
const QUAD_MAX_DEPTH: u32 = 52;

/// Recommended absolute tolerance for density integrals. Normal tails are
/// negligible beyond eight standard deviations at this accuracy, so pair it
/// with an integration range of the component-mean span ± 8 max σ.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-10;

/// Adaptive quadrature of `f` over [lo, hi] with an absolute-error target
/// (see [`DEFAULT_QUADRATURE_TOL`] for the usual choice).
///
/// Adaptive Simpson with Richardson extrapolation; if the evaluation budget
/// runs out before the error bound drops below `abs_tol`, the best estimate
/// is returned inside the error.
pub fn integrate<F>(f: F, lo: f64, hi: f64, abs_tol: f64) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    integrate_with_breakpoints(f, lo, hi, &[], abs_tol)
}

/// Like [`integrate`], but subdivides first at the given interior points.
///
/// Callers integrating mixtures should pass the component means: a sharp peak
/// that sits at a panel boundary is always seen by the sampler, whereas one
/// buried inside a wide panel can be missed entirely.
pub fn integrate_with_breakpoints<F>(
    f: F,
    lo: f64,
    hi: f64,
    interior: &[f64],
    abs_tol: f64,
) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    if !(abs_tol.is_finite() && abs_tol > 0.0) {
        return Err(NumericsError::InvalidTolerance(abs_tol));
    }
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(NumericsError::InvalidInterval { lo, hi });
    }

    let mut knots: Vec<f64> = Vec::with_capacity(interior.len() + 2);
    knots.push(lo);
    let mut inner: Vec<f64> = interior
        .iter()
        .copied()
        .filter(|x| *x > lo && *x < hi)
        .collect();
    inner.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    inner.dedup();
    knots.extend(inner);
    knots.push(hi);

    let span = hi - lo;
    let mut total = 0.0;
    let mut err_total = 0.0;
    let mut evals = 0usize;

    for pair in knots.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        // split each panel once more so a peak at a knot is bracketed tightly
        let quarters = [a, a + 0.25 * (b - a), 0.5 * (a + b), a + 0.75 * (b - a), b];
        for q in quarters.windows(2) {
            let tol = abs_tol * ((q[1] - q[0]) / span);
            let (value, err) = adaptive_simpson(&f, q[0], q[1], tol, &mut evals);
            total += value;
            err_total += err;
        }
    }

    if err_total > abs_tol {
        return Err(NumericsError::QuadratureBudget {
            estimate: total,
            error_bound: err_total,
        });
    }
    Ok(total)
}

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64, evals: &mut usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    *evals += 3;
    let whole = simpson(fa, fm, fb, a, b);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 0, evals)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &mut usize,
) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    let converged = delta.abs() <= 15.0 * tol;
    let exhausted =
        depth >= QUAD_MAX_DEPTH || *evals >= QUAD_MAX_EVALS || (b - a) <= f64::EPSILON * a.abs().max(b.abs());
    if converged || exhausted {
        // Richardson extrapolation; the discarded term bounds the error
        return (left + right + delta / 15.0, delta.abs() / 15.0);
    }
    let (lv, le) = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, evals);
    let (rv, re) = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, evals);
    (lv + rv, le + re)
}

fn check_variance(variance: f64) -> Result<(), NumericsError> {
    if variance > 0.0 && variance.is_finite() {
        Ok(())
    } else {
        Err(NumericsError::InvalidVariance(variance))
    }
}

fn check_shapes(eta: f64, nu: f64) -> Result<(), NumericsError> {
    if eta > 0.0 && eta.is_finite() && nu > 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(NumericsError::InvalidShape { eta, nu })
    }
}

fn check_finite(x: f64) -> Result<(), NumericsError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(NumericsError::NonFinite(x))
    }
}
