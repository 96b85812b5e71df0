//! Stochastic-geometry kernels: the mapped/displaced interferer intensity and
//! the moment integrals of the conditional transmission success probability
//! for time-triggered and event-triggered traffic.
//!
//! The moment integrands are evaluated in log space (s = ln y) so that the
//! power-law head and tail both become exponentially decaying and the
//! adaptive quadrature never sees an endpoint singularity. The printed form
//! of the moment integral substitutes u = y/(y+θ), which is singular at the
//! upper endpoint for this tail; the log substitution is the equivalent
//! well-conditioned choice.

use crate::config::NetworkParams;
use crate::error::GeometryError;
use crate::quad::{adaptive_simpson, integrate_log_tail};
use crate::special::{gamma, gamma_p};

/// First and second moments of the conditional transmission success
/// probability across links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPair {
    pub m1: f64,
    pub m2: f64,
}

impl MomentPair {
    /// Moment sanity: 0 ≤ m2 ≤ m1 ≤ 1 and m2 ≥ m1² − tol.
    pub fn check(&self, tol: f64) -> bool {
        0.0 <= self.m2
            && self.m2 <= self.m1 + tol
            && self.m1 <= 1.0 + tol
            && self.m2 + tol >= self.m1 * self.m1
    }

    pub fn variance(&self) -> f64 {
        self.m2 - self.m1 * self.m1
    }
}

/// Queue-coupled load factor entering the interferer intensity.
///
/// TT: aggregate percentile of other-offset devices active in a slot,
/// in [0, T−1]. ET: spatially averaged idle probability, in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadFactor(pub f64);

impl LoadFactor {
    pub fn tt(value: f64, duty_cycle: u32) -> Self {
        LoadFactor(value.clamp(0.0, duty_cycle as f64 - 1.0))
    }

    pub fn et(value: f64) -> Self {
        LoadFactor(value.clamp(0.0, 1.0))
    }
}

/// Nearest-BS serving distance density f(r) = 2πλ r e^{−πλ r²}.
pub fn serving_distance_pdf(r: f64, lambda: f64) -> f64 {
    debug_assert!(r >= 0.0 && lambda > 0.0);
    let pl = std::f64::consts::PI * lambda;
    2.0 * pl * r * (-pl * r * r).exp()
}

/// CCDF-complement of the interfering transmit power under fractional
/// path-loss inversion: P{P_i ≤ y} = 1 − exp(−πλ (y/ρ)^{2/(ηε)}).
///
/// ```
/// use agenet_core::geometry::interferer_power_cdf;
/// // Monotone in y, 0 at 0, → 1 for large y.
/// let c1 = interferer_power_cdf(1e-13, 1e-12, 4.0, 1.0, 1.0);
/// let c2 = interferer_power_cdf(1e-11, 1e-12, 4.0, 1.0, 1.0);
/// assert!(0.0 < c1 && c1 < c2 && c2 < 1.0);
/// assert_eq!(interferer_power_cdf(0.0, 1e-12, 4.0, 1.0, 1.0), 0.0);
/// ```
pub fn interferer_power_cdf(y: f64, rho: f64, eta: f64, eps: f64, lambda: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    -(-std::f64::consts::PI * lambda * (y / rho).powf(2.0 / (eta * eps))).exp_m1()
}

/// Intensity of the mapped/displaced 1-D interferer process for TT traffic,
/// λ̃_T(ω) with the lower incomplete gamma kernel. Singular at ε = 1.
pub fn mapped_intensity_tt(
    omega: f64,
    load: LoadFactor,
    cfg: &NetworkParams,
    duty_cycle: u32,
) -> Result<f64, GeometryError> {
    let eps = cfg.power_control_epsilon;
    if eps >= 1.0 {
        return Err(GeometryError::EpsilonOne);
    }
    debug_assert!(omega > 0.0);
    let eta = cfg.pathloss_exponent;
    let lambda = cfg.bs_intensity;
    let rho = cfg.power_control_rho;
    let t = duty_cycle as f64;
    let pl = std::f64::consts::PI * lambda;
    let pref = 2.0 * (1.0 + load.0) * pl.powf(1.0 - eps) * rho.powf(2.0 / eta)
        / (t * eta * omega.powf(1.0 - 2.0 / eta));
    let arg = pl * (omega * rho).powf(2.0 / (eta * (1.0 - eps)));
    Ok(pref * gamma_p(1.0 + eps, arg) * gamma(1.0 + eps))
}

/// Integrand fraction 1 − (y/(y+θ))^b, computed stably for all y.
fn frac_tt(ln_y: f64, theta: f64, b: f64) -> f64 {
    // ln(y/(y+θ)) = −ln1p(θ/y); θ/y computed through logs to avoid overflow
    let t = theta.ln() - ln_y;
    let l1p = if t > 35.0 { t } else { t.exp().ln_1p() };
    -(-b * l1p).exp_m1()
}

/// Integrand fraction 1 − ((y+θΘ)/(y+θ))^b for the ET moment.
fn frac_et(ln_y: f64, theta: f64, idle: f64, b: f64) -> f64 {
    // ln((y+θΘ)/(y+θ)) = ln1p(θΘ/y) − ln1p(θ/y)
    let t_all = theta.ln() - ln_y;
    let l_all = if t_all > 35.0 { t_all } else { t_all.exp().ln_1p() };
    let l_idle = if idle == 0.0 {
        0.0
    } else {
        let t_i = (theta * idle).ln() - ln_y;
        if t_i > 35.0 {
            t_i
        } else {
            t_i.exp().ln_1p()
        }
    };
    -(b * (l_idle - l_all)).exp_m1()
}

/// Inner integral over the mapped axis, in log space:
/// ∫_0^∞ y^{2/η−1} w(y) γ(1+ε, z·y^{2/(η(1−ε))}) dy with w the traffic
/// fraction. `w_ln` evaluates w from ln y.
fn inner_integral<W: Fn(f64) -> f64>(
    w_ln: &W,
    eta: f64,
    eps: f64,
    z: f64,
    tol: f64,
) -> Result<f64, GeometryError> {
    let p = 2.0 / (eta * (1.0 - eps));
    let a = 1.0 + eps;
    let ln_ga = crate::special::ln_gamma(a);
    let g = |s: f64| {
        let w = w_ln(s);
        if w <= 0.0 {
            return 0.0;
        }
        // ln of the gamma argument z·y^p
        let arg_ln = z.ln() + p * s;
        let jac_pow = s * (2.0 / eta); // y^{2/η−1} · y (Jacobian)
        if arg_ln > 700.0 {
            // γ saturated at Γ(1+ε)
            return (jac_pow + ln_ga).exp() * w;
        }
        if arg_ln < -35.0 {
            // leading series term: γ(a, x) ≈ x^a / a
            let ln_g = a * arg_ln - a.ln();
            let tot = jac_pow + ln_g;
            return if tot < -700.0 { 0.0 } else { tot.exp() * w };
        }
        let x = arg_ln.exp();
        (jac_pow + ln_ga).exp() * w * gamma_p(a, x)
    };
    // generous bounds: integrand decays exponentially in s both ways
    let s_max = (50.0 / (1.0 - 2.0 / eta)).min(600.0);
    if p > 50.0 {
        // near ε = 1 the γ kernel is a step at s ≈ −ln z / p of width ~1/p;
        // isolate it so the adaptive refinement stays local
        let mid = -z.ln() / p;
        let half = 800.0 / p;
        let cuts = [-60.0, (mid - half).max(-59.0), (mid + half).min(s_max - 1.0), s_max];
        let mut total = 0.0;
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                total += adaptive_simpson(&g, w[0], w[1], tol / 3.0)?;
            }
        }
        return Ok(total);
    }
    adaptive_simpson(&g, -60.0, s_max, tol)
}

/// Closed inner integral for the ε = 1 limit: the γ kernel collapses to the
/// indicator {y > 1} and the outer integral to a single exponential.
fn closed_inner<W: Fn(f64) -> f64>(w_ln: &W, eta: f64, tol: f64) -> Result<f64, GeometryError> {
    let f = |y: f64| y.powf(2.0 / eta - 1.0) * w_ln(y.ln());
    let s_max = 50.0 / (1.0 - 2.0 / eta);
    integrate_log_tail(&f, 1.0, s_max, tol)
}

fn moment_generic<W: Fn(f64) -> f64 + Sync>(
    w_ln: &W,
    pref: f64,
    eta: f64,
    eps: f64,
    tol: f64,
) -> Result<f64, GeometryError> {
    if eps >= 1.0 {
        // limiting branch: inner integral is z-independent
        let inner = closed_inner(w_ln, eta, tol)?;
        return Ok((-pref * inner).exp());
    }
    let inner_tol = (tol * 0.1).max(1e-13);
    let h = |z: f64| -> f64 {
        if z <= 0.0 {
            return 1.0;
        }
        match inner_integral(w_ln, eta, eps, z, inner_tol) {
            Ok(i) => (-z - pref * z.powf(1.0 - eps) * i).exp(),
            Err(_) => f64::NAN,
        }
    };
    let z_max = 42.0; // e^{−42} ≈ 6e−19, beyond any requested tolerance
    let v = adaptive_simpson(&h, 0.0, z_max, tol)?;
    if v.is_nan() {
        return Err(GeometryError::QuadratureFailure {
            detail: "inner quadrature failed inside outer integral".into(),
        });
    }
    Ok(v.clamp(0.0, 1.0))
}

/// b-th moment of the conditional success probability under TT traffic
/// with duty cycle `T` and load factor Θ_T.
pub fn moment_tt(
    b: f64,
    theta: f64,
    load: LoadFactor,
    cfg: &NetworkParams,
    duty_cycle: u32,
    quad_rel_tol: f64,
) -> Result<f64, GeometryError> {
    debug_assert!(b >= 0.0 && theta > 0.0);
    if b == 0.0 {
        return Ok(1.0);
    }
    let eta = cfg.pathloss_exponent;
    let pref = 2.0 * (1.0 + load.0) / (duty_cycle as f64 * eta);
    let w = |ln_y: f64| frac_tt(ln_y, theta, b);
    moment_generic(&w, pref, eta, cfg.power_control_epsilon, quad_rel_tol)
}

/// b-th moment of the conditional success probability under ET traffic with
/// spatially averaged idle probability Θ_E.
pub fn moment_et(
    b: f64,
    theta: f64,
    idle: LoadFactor,
    cfg: &NetworkParams,
    quad_rel_tol: f64,
) -> Result<f64, GeometryError> {
    debug_assert!(b >= 0.0 && theta > 0.0);
    if b == 0.0 || idle.0 >= 1.0 {
        return Ok(1.0);
    }
    let eta = cfg.pathloss_exponent;
    let pref = 2.0 / eta;
    let w = move |ln_y: f64| frac_et(ln_y, theta, idle.0, b);
    moment_generic(&w, pref, eta, cfg.power_control_epsilon, quad_rel_tol)
}

/// First/second moment pair for TT traffic.
pub fn moments_tt(
    theta: f64,
    load: LoadFactor,
    cfg: &NetworkParams,
    duty_cycle: u32,
    quad_rel_tol: f64,
) -> Result<MomentPair, GeometryError> {
    Ok(MomentPair {
        m1: moment_tt(1.0, theta, load, cfg, duty_cycle, quad_rel_tol)?,
        m2: moment_tt(2.0, theta, load, cfg, duty_cycle, quad_rel_tol)?,
    })
}

/// First/second moment pair for ET traffic.
pub fn moments_et(
    theta: f64,
    idle: LoadFactor,
    cfg: &NetworkParams,
    quad_rel_tol: f64,
) -> Result<MomentPair, GeometryError> {
    Ok(MomentPair {
        m1: moment_et(1.0, theta, idle, cfg, quad_rel_tol)?,
        m2: moment_et(2.0, theta, idle, cfg, quad_rel_tol)?,
    })
}
