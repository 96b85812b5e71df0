//! Adaptive quadrature for the moment integrals.
//!
//! Adaptive Simpson on finite intervals; semi-infinite integrands are handled
//! by the callers through a log substitution (the integrands decay like a
//! power of y, which becomes exponential decay in s = ln y).

use crate::error::GeometryError;

/// Adaptive Simpson integration of `f` on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, GeometryError> {
    if a == b {
        return Ok(0.0);
    }
    // seed with fixed panels so narrow features cannot hide between the
    // three initial sample points
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let mut total = 0.0;
    for k in 0..PANELS {
        let (pa, pb) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let fa = f(pa);
        let fb = f(pb);
        let m = 0.5 * (pa + pb);
        let fm = f(m);
        let whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson_rec(f, pa, pb, fa, fm, fb, whole, tol / PANELS as f64, 48)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, GeometryError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(GeometryError::QuadratureFailure {
            detail: format!("adaptive Simpson depth exhausted on [{a}, {b}]"),
        });
    }
    let l = simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// ∫_a^∞ f(y) dy via s = ln y (requires a > 0 and power-law decay of f).
///
/// `s_max` truncates the transformed domain; the integrand must be
/// negligible beyond it.
pub fn integrate_log_tail<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    s_max: f64,
    tol: f64,
) -> Result<f64, GeometryError> {
    debug_assert!(a > 0.0);
    let g = |s: f64| {
        let y = s.exp();
        f(y) * y
    };
    adaptive_simpson(&g, a.ln(), s_max, tol)
}

/// ∫_0^a f(y) dy via s = ln y, truncated below at s_min (f must vanish
/// fast enough as y → 0, which the γ factor guarantees here).
pub fn integrate_log_head<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    s_min: f64,
    tol: f64,
) -> Result<f64, GeometryError> {
    debug_assert!(a > 0.0);
    let g = |s: f64| {
        let y = s.exp();
        f(y) * y
    };
    adaptive_simpson(&g, s_min, a.ln(), tol)
}
