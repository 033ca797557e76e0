//! Bracketed scalar root finding shared by the solvers.

use crate::error::{Error, Result};

pub(crate) const MAX_BISECTIONS: usize = 200;

/// Bisection for a root of `f` on `[lo, hi]`, where `f(lo)` and `f(hi)` have
/// opposite signs (zero counts as either). Stops when the bracket is narrower
/// than `tol` or the midpoint stops moving.
pub(crate) fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    let fhi = f(hi)?;
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::no_convergence(format!(
            "bisection bracket [{lo}, {hi}] does not straddle a root ({flo}, {fhi})"
        )));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
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

/// Geometric grid of `n` points from `a` to `b` (both positive).
pub(crate) fn geomspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let la = a.ln();
    let step = (b.ln() - la) / (n - 1) as f64;
    (0..n).map(move |k| if k + 1 == n { b } else { (la + step * k as f64).exp() })
}

/// Every sign change of `f` along `grid`, refined by bisection. Points where
/// `f` errors are skipped.
pub(crate) fn all_roots<F>(mut f: F, grid: &[f64], tol_rel: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &x in grid {
        let Ok(v) = f(x) else {
            prev = None;
            continue;
        };
        if let Some((px, pv)) = prev {
            if pv != 0.0 && v != 0.0 && pv.signum() != v.signum() {
                roots.push(bisect(&mut f, px, x, tol_rel * x.abs().max(px.abs()))?);
            }
        }
        if v == 0.0 {
            roots.push(x);
        }
        prev = Some((x, v));
    }
    Ok(roots)
}
