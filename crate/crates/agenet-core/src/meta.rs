//! Beta approximation of the meta distribution of the transmission success
//! probability and its equiprobable quantization into QoS classes.
//!
//! The fitted beta is treated as the ground truth being quantized; the
//! two-moment fit is itself the adopted approximation of the exact meta
//! distribution.

use crate::error::MetaError;
use crate::geometry::MomentPair;
use crate::special::beta_inc;

/// Variance floor below which the beta parameters blow up and the
/// distribution is treated as a point mass.
pub const DEGENERATE_TOL: f64 = 1e-12;

const BISECT_ITERS: usize = 200;
const BISECT_TOL: f64 = 1e-10;

/// Moment-matched beta shape parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaFit {
    pub shape_a: f64,
    pub shape_b: f64,
}

impl BetaFit {
    pub fn mean(&self) -> f64 {
        self.shape_a / (self.shape_a + self.shape_b)
    }

    pub fn second_moment(&self) -> f64 {
        let s = self.shape_a + self.shape_b;
        self.shape_a * (self.shape_a + 1.0) / (s * (s + 1.0))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        beta_inc(self.shape_a, self.shape_b, x)
    }
}

/// Either a proper beta fit or a point mass (degenerate variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetaDist {
    Beta(BetaFit),
    PointMass(f64),
}

impl MetaDist {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            MetaDist::Beta(f) => f.cdf(x),
            MetaDist::PointMass(m) => {
                if x < m {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// The N quantized departure probabilities with per-class stability flags
/// (flags are filled in by the queueing / fixed-point layers).
#[derive(Debug, Clone, PartialEq)]
pub struct QosClasses {
    /// Ordered class departure probabilities d₁ ≤ … ≤ d_N.
    pub departure_probs: Vec<f64>,
    pub stable_mask: Vec<bool>,
}

impl QosClasses {
    pub fn n(&self) -> usize {
        self.departure_probs.len()
    }

    pub fn all_stable(&self) -> bool {
        self.stable_mask.iter().all(|&s| s)
    }

    pub fn n_unstable(&self) -> usize {
        self.stable_mask.iter().filter(|&&s| !s).count()
    }
}

/// Invert the beta moment relations: a = M₁·M̂/var, b = (1−M₁)·M̂/var with
/// M̂ = M₁ − M₂, var = M₂ − M₁².
pub fn fit_beta(m: MomentPair) -> Result<BetaFit, MetaError> {
    let var = m.variance();
    if var <= DEGENERATE_TOL {
        return Err(MetaError::DegenerateVariance { mean: m.m1, var });
    }
    let mhat = m.m1 - m.m2;
    let a = m.m1 * mhat / var;
    let b = (1.0 - m.m1) * mhat / var;
    if a < 1e-8 || b < 1e-8 {
        return Err(MetaError::DegenerateVariance { mean: m.m1, var });
    }
    Ok(BetaFit { shape_a: a, shape_b: b })
}

/// Fit, falling back to a point mass at the mean when degenerate.
pub fn fit(m: MomentPair) -> MetaDist {
    match fit_beta(m) {
        Ok(f) => MetaDist::Beta(f),
        Err(_) => MetaDist::PointMass(m.m1),
    }
}

/// Meta distribution CCDF: the fraction of links with conditional success
/// probability above ξ.
pub fn meta_ccdf(dist: &MetaDist, xi: f64) -> f64 {
    let xi = xi.clamp(0.0, 1.0);
    if xi <= 0.0 {
        return 1.0;
    }
    if xi >= 1.0 {
        return 0.0;
    }
    1.0 - dist.cdf(xi)
}

/// Bisection for F(x) = target on [lo, hi]; F must be nondecreasing with
/// F(lo) ≤ target ≤ F(hi).
fn bisect_cdf<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, target: f64) -> Result<f64, MetaError> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo > target + BISECT_TOL || fhi < target - BISECT_TOL {
        return Err(MetaError::BisectionFailure { target });
    }
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm - target).abs() <= BISECT_TOL {
            return Ok(mid);
        }
        if fm < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Quantize the fitted distribution into N equiprobable classes.
///
/// Cell edges ω_n satisfy F(ω_n) = n/N; the class probability d_n is the
/// within-cell median, F(d_n) = (n − ½)/N. Edges are found left-to-right so
/// every search is bracketed.
pub fn quantize(dist: &MetaDist, n_classes: usize) -> Result<QosClasses, MetaError> {
    assert!(n_classes >= 1);
    match *dist {
        MetaDist::PointMass(m) => Ok(QosClasses {
            departure_probs: vec![m; n_classes],
            stable_mask: vec![true; n_classes],
        }),
        MetaDist::Beta(fitd) => {
            let cdf = |x: f64| fitd.cdf(x);
            let n = n_classes as f64;
            let mut edges = Vec::with_capacity(n_classes + 1);
            edges.push(0.0);
            let mut lo = 0.0;
            for k in 1..n_classes {
                let e = bisect_cdf(&cdf, lo, 1.0, k as f64 / n)?;
                edges.push(e);
                lo = e;
            }
            edges.push(1.0);
            let mut d = Vec::with_capacity(n_classes);
            for k in 0..n_classes {
                let target = (k as f64 + 0.5) / n;
                let dk = bisect_cdf(&cdf, edges[k], edges[k + 1], target)?;
                d.push(dk);
            }
            Ok(QosClasses {
                departure_probs: d,
                stable_mask: vec![true; n_classes],
            })
        }
    }
}
