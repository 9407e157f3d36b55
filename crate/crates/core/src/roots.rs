//! Scalar root bracketing and refinement.

use crate::error::{Error, Result};

/// Scans `n` equally spaced points of `[lo, hi]` from the top down and returns
/// the first sub-interval (highest in x) over which `f` changes sign.
pub fn scan_bracket_from_top<F>(f: &F, lo: f64, hi: f64, n: usize) -> Result<Option<(f64, f64)>>
where
    F: Fn(f64) -> Result<f64>,
{
    let step = (hi - lo) / (n as f64 - 1.0);
    let mut x_hi = hi;
    let mut f_hi = f(x_hi)?;
    for i in (0..n - 1).rev() {
        let x = lo + step * i as f64;
        let fx = f(x)?;
        if f_hi == 0.0 {
            return Ok(Some((x_hi, x_hi)));
        }
        if fx.signum() != f_hi.signum() {
            return Ok(Some((x, x_hi)));
        }
        x_hi = x;
        f_hi = fx;
    }
    Ok(None)
}

/// Brent's method on a sign-changing bracket. Iterates until the bracket has
/// collapsed to `xtol` (absolute) or `f` is exactly zero.
pub fn brent<F>(f: &F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoConvergence {
            lo,
            hi,
            iterations: 0,
            residual: fa.abs().min(fb.abs()),
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            // inverse quadratic interpolation, or secant when only two points
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::NoConvergence {
        lo,
        hi,
        iterations: max_iter,
        residual: fb.abs(),
    })
}
