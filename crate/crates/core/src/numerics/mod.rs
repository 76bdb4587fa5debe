//! Shared special functions, quadrature and root finding.
//!
//! Everything here is a pure function of its inputs and safe to call from any
//! number of threads. Densities are always handled in log space so that
//! variances as large as 1e300 stay representable.

mod hermite;
mod special;

pub(crate) use special::{expit, log_normal_density};
pub use special::{std_normal_cdf, std_normal_quantile};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("{what} (got {value})")]
    Domain { what: &'static str, value: f64 },
    #[error("root is not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("{what} did not converge")]
    NonConvergence { what: &'static str },
}

/// Quadrature scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadScheme {
    /// Fixed-order Gauss-Hermite rule (order >= 2).
    GaussHermite { order: usize },
    /// Adaptive Simpson subdivision on a +/- 12 sd window.
    Adaptive,
}

/// Integration settings shared by every quadrature-based operation.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub scheme: QuadScheme,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            scheme: QuadScheme::GaussHermite { order: 64 },
            abs_tol: 1e-8,
            max_subdivisions: 10_000,
        }
    }
}

impl QuadratureSpec {
    pub fn adaptive(abs_tol: f64) -> Self {
        Self {
            scheme: QuadScheme::Adaptive,
            abs_tol,
            max_subdivisions: 10_000,
        }
    }

    fn validate(&self) -> Result<(), NumericsError> {
        if !(self.abs_tol > 0.0) {
            return Err(NumericsError::Domain {
                what: "abs_tol must be positive",
                value: self.abs_tol,
            });
        }
        if let QuadScheme::GaussHermite { order } = self.scheme {
            if order < 2 {
                return Err(NumericsError::Domain {
                    what: "Gauss-Hermite order must be >= 2",
                    value: order as f64,
                });
            }
        }
        Ok(())
    }
}

/// log(Σ exp(tᵢ)) without intermediate overflow.
///
/// Terms spanning hundreds of orders of magnitude are fine; underflowing
/// addends drop out gracefully. An empty slice is a caller bug.
pub fn log_sum_exp(log_terms: &[f64]) -> f64 {
    assert!(!log_terms.is_empty(), "log_sum_exp of empty list");
    let m = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = log_terms.iter().map(|t| (t - m).exp()).sum();
    m + sum.ln()
}

/// ∫ f(x) φ(x; mean, sd²) dx.
pub fn integrate_against_normal<F>(
    f: F,
    mean: f64,
    sd: f64,
    spec: &QuadratureSpec,
) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(NumericsError::Domain {
            what: "sd must be positive and finite",
            value: sd,
        });
    }
    match spec.scheme {
        QuadScheme::GaussHermite { order } => {
            let rule = hermite::rule(order)?;
            let scale = std::f64::consts::SQRT_2 * sd;
            let mut acc = 0.0;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                acc += w * f(mean + scale * x);
            }
            // normalising by the computed weight sum (√π analytically)
            // integrates constants exactly
            Ok(acc / rule.weight_sum)
        }
        QuadScheme::Adaptive => {
            // z-space integrand against the standard normal density; mass
            // beyond |z| = 12 is below 1e-32 and ignored.
            let g = |z: f64| f(mean + sd * z) * log_normal_density(z, 0.0, 1.0).exp();
            integrate_interval(&g, -12.0, 12.0, spec.abs_tol, spec.max_subdivisions)
        }
    }
}

/// Adaptive Simpson integration of `f` over [lo, hi].
///
/// The range is first split into coarse panels so that narrow features away
/// from the midpoint cannot be missed by the top-level estimate.
pub(crate) fn integrate_interval<F>(
    f: &F,
    lo: f64,
    hi: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    if !(hi > lo) {
        return Err(NumericsError::Domain {
            what: "integration range must satisfy lo < hi",
            value: hi - lo,
        });
    }
    let panels = 32usize;
    let width = (hi - lo) / panels as f64;
    let panel_tol = abs_tol / panels as f64;
    let mut budget = max_subdivisions;
    let mut total = 0.0;
    for i in 0..panels {
        let a = lo + i as f64 * width;
        let b = if i == panels - 1 { hi } else { a + width };
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        let whole = simpson(a, b, fa, fm, fb);
        total += adaptive_step(f, a, b, fa, fm, fb, whole, panel_tol, &mut budget)?;
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    budget: &mut usize,
) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 * (1.0 + m.abs()) {
        return Ok(left + right + delta / 15.0);
    }
    if *budget == 0 {
        return Err(NumericsError::NonConvergence {
            what: "adaptive Simpson subdivision limit",
        });
    }
    *budget -= 1;
    let l = adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, budget)?;
    let r = adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, budget)?;
    Ok(l + r)
}

/// Node/weight pairs of the cached Gauss-Hermite rule (weight e^{-x²}).
pub(crate) fn gauss_hermite_nodes(order: usize) -> Result<Vec<(f64, f64)>, NumericsError> {
    let r = hermite::rule(order)?;
    Ok(r.nodes
        .iter()
        .copied()
        .zip(r.weights.iter().copied())
        .collect())
}

/// Brent's method on a bracketing interval.
///
/// `f(lo)` and `f(hi)` must have opposite signs; the result is deterministic
/// for fixed inputs and bracketed to within `tol`.
pub fn find_root_bracketed<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(NumericsError::Domain {
            what: "tol must be positive",
            value: tol,
        });
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
        return Err(NumericsError::Bracket {
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
            // inverse quadratic / secant step
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
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
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Err(NumericsError::NonConvergence {
        what: "Brent iteration limit",
    })
}
