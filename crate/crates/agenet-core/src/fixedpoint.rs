//! Couples the macroscopic scale (moments → beta fit → QoS classes) with the
//! microscopic scale (per-class queues) through the load factor: Θ_T for TT
//! traffic, Θ_E (spatially averaged idle probability) for ET traffic.

use crate::config::{AnalysisParams, NetworkParams};
use crate::error::FixedPointError;
use crate::geometry::{self, LoadFactor, MomentPair};
use crate::meta::{self, QosClasses};
use crate::queueing;

/// One recorded fixed-point iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub theta: f64,
    pub m1: f64,
    pub m2: f64,
    pub n_unstable: usize,
}

/// Converged (or best-effort) coupled solution.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSolution {
    pub theta: LoadFactor,
    pub moments: MomentPair,
    pub classes: QosClasses,
    /// ET: per-class idle probabilities x₀ₙ (0 for unstable classes).
    /// TT: per-class cycle-aggregated activity Σ_τ (1−d_n)^τ.
    pub per_class_idle: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

impl CoupledSolution {
    /// Surface non-convergence as an error for callers that need a hard stop.
    pub fn require_converged(self) -> Result<Self, FixedPointError> {
        if self.converged {
            Ok(self)
        } else {
            let delta = self
                .trace
                .windows(2)
                .last()
                .map(|w| (w[1].theta - w[0].theta).abs())
                .unwrap_or(f64::NAN);
            Err(FixedPointError::NonConvergence { iters: self.iterations, delta })
        }
    }
}

/// TT load factor: Θ_T = (1/N) Σ_{τ=1}^{T−1} (|U| + Σ_{j stable} (1−d_j)^τ).
/// Unstable classes interfere in every slot; stable ones persist τ slots
/// with geometrically decaying probability.
pub fn theta_tt(classes: &QosClasses, duty_cycle: u32) -> LoadFactor {
    let n = classes.n() as f64;
    let n_unstable = classes.n_unstable() as f64;
    let mut total = 0.0;
    for tau in 1..duty_cycle {
        let mut slot = n_unstable;
        for (j, &d) in classes.departure_probs.iter().enumerate() {
            if classes.stable_mask[j] {
                slot += (1.0 - d).powi(tau as i32);
            }
        }
        total += slot;
    }
    LoadFactor::tt(total / n, duty_cycle)
}

/// ET load factor: Θ_E = (1/N) Σ x₀ₙ.
pub fn theta_et(per_class_idle: &[f64]) -> LoadFactor {
    let n = per_class_idle.len() as f64;
    LoadFactor::et(per_class_idle.iter().sum::<f64>() / n)
}

/// Per-class cycle-aggregated activity for the TT trace output.
fn tt_activity(classes: &QosClasses, duty_cycle: u32) -> Vec<f64> {
    classes
        .departure_probs
        .iter()
        .zip(&classes.stable_mask)
        .map(|(&d, &stable)| {
            if !stable {
                return (duty_cycle - 1) as f64;
            }
            (1..duty_cycle).map(|tau| (1.0 - d).powi(tau as i32)).sum()
        })
        .collect()
}

struct Damper {
    beta: f64,
    last_increments: [f64; 2],
}

impl Damper {
    fn new() -> Self {
        Damper { beta: 0.5, last_increments: [0.0; 2] }
    }

    /// Damped step with oscillation detection: two consecutive sign flips of
    /// the raw increment halve the step factor.
    fn step(&mut self, current: f64, proposal: f64) -> f64 {
        let inc = proposal - current;
        let [a, b] = self.last_increments;
        if a * b < 0.0 && b * inc < 0.0 {
            self.beta = (self.beta * 0.5).max(1e-3);
        }
        self.last_increments = [b, inc];
        (1.0 - self.beta) * current + self.beta * proposal
    }
}

fn classify_tt(m: MomentPair, n_classes: usize, duty_cycle: u32) -> Result<QosClasses, FixedPointError> {
    let dist = meta::fit(m);
    let mut classes = meta::quantize(&dist, n_classes)?;
    for (j, &d) in classes.departure_probs.clone().iter().enumerate() {
        classes.stable_mask[j] = queueing::is_stable_tt(d, duty_cycle);
    }
    Ok(classes)
}

fn classify_et(m: MomentPair, n_classes: usize, alpha: f64) -> Result<QosClasses, FixedPointError> {
    let dist = meta::fit(m);
    let mut classes = meta::quantize(&dist, n_classes)?;
    for (j, &d) in classes.departure_probs.clone().iter().enumerate() {
        classes.stable_mask[j] = alpha < d;
    }
    Ok(classes)
}

/// Solve the TT coupled system: moments → beta fit → quantize → Θ_T, iterated
/// until |ΔΘ_T| < φ. Starts from the optimistic Θ_T = 0.
pub fn solve_coupled_tt(
    cfg: &NetworkParams,
    duty_cycle: u32,
    analysis: &AnalysisParams,
) -> Result<CoupledSolution, FixedPointError> {
    solve_coupled_tt_from(cfg, duty_cycle, analysis, 0.0)
}

/// TT solve from an explicit starting load (used for the two-sided
/// uniqueness check).
pub fn solve_coupled_tt_from(
    cfg: &NetworkParams,
    duty_cycle: u32,
    analysis: &AnalysisParams,
    theta0: f64,
) -> Result<CoupledSolution, FixedPointError> {
    let theta_db = cfg.sir_threshold;
    let mut theta = LoadFactor::tt(theta0, duty_cycle);
    let mut damper = Damper::new();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut last = (MomentPair { m1: 1.0, m2: 1.0 }, None::<QosClasses>);
    for it in 0..analysis.max_iters {
        iterations = it + 1;
        let m = geometry::moments_tt(theta_db, theta, cfg, duty_cycle, analysis.quad_rel_tol)?;
        let classes = classify_tt(m, analysis.n_classes, duty_cycle)?;
        let proposal = theta_tt(&classes, duty_cycle).0;
        trace.push(TraceRow {
            iter: it,
            theta: theta.0,
            m1: m.m1,
            m2: m.m2,
            n_unstable: classes.n_unstable(),
        });
        last = (m, Some(classes));
        let next = LoadFactor::tt(damper.step(theta.0, proposal), duty_cycle);
        let delta = (next.0 - theta.0).abs();
        theta = next;
        if delta < analysis.fixed_point_tol {
            converged = true;
            break;
        }
    }
    let (moments, classes) = (last.0, last.1.expect("at least one iteration"));
    let per_class_idle = tt_activity(&classes, duty_cycle);
    Ok(CoupledSolution {
        theta,
        moments,
        classes,
        per_class_idle,
        iterations,
        converged,
        trace,
    })
}

/// Solve the ET coupled system: moments → beta fit → quantize → per-class
/// idle probability (0 for unstable classes) → Θ_E, iterated until
/// |ΔΘ_E| < φ. Starts from the idle-network Θ_E = 1.
pub fn solve_coupled_et(
    cfg: &NetworkParams,
    alpha: f64,
    analysis: &AnalysisParams,
) -> Result<CoupledSolution, FixedPointError> {
    solve_coupled_et_from(cfg, alpha, analysis, 1.0)
}

/// ET solve from an explicit starting idle probability.
pub fn solve_coupled_et_from(
    cfg: &NetworkParams,
    alpha: f64,
    analysis: &AnalysisParams,
    theta0: f64,
) -> Result<CoupledSolution, FixedPointError> {
    let theta_db = cfg.sir_threshold;
    let mut idle = LoadFactor::et(theta0);
    let mut damper = Damper::new();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut last: Option<(MomentPair, QosClasses, Vec<f64>)> = None;
    for it in 0..analysis.max_iters {
        iterations = it + 1;
        let m = geometry::moments_et(theta_db, idle, cfg, analysis.quad_rel_tol)?;
        let classes = classify_et(m, analysis.n_classes, alpha)?;
        let x0: Vec<f64> = classes
            .departure_probs
            .iter()
            .zip(&classes.stable_mask)
            .map(|(&d, &stable)| if stable { (d - alpha) / d } else { 0.0 })
            .collect();
        let proposal = theta_et(&x0).0;
        trace.push(TraceRow {
            iter: it,
            theta: idle.0,
            m1: m.m1,
            m2: m.m2,
            n_unstable: classes.n_unstable(),
        });
        last = Some((m, classes, x0));
        let next = LoadFactor::et(damper.step(idle.0, proposal));
        let delta = (next.0 - idle.0).abs();
        idle = next;
        if delta < analysis.fixed_point_tol {
            converged = true;
            break;
        }
    }
    let (moments, classes, per_class_idle) = last.expect("at least one iteration");
    Ok(CoupledSolution {
        theta: idle,
        moments,
        classes,
        per_class_idle,
        iterations,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(theta: f64) -> NetworkParams {
        NetworkParams {
            bs_intensity: 1.0,
            pathloss_exponent: 4.0,
            power_control_epsilon: 1.0,
            power_control_rho: 1e-12,
            sir_threshold: theta,
        }
    }

    fn analysis() -> AnalysisParams {
        AnalysisParams { fixed_point_tol: 1e-6, ..Default::default() }
    }

    #[test]
    fn theta_tt_flawless_and_backlogged() {
        let flawless = QosClasses {
            departure_probs: vec![1.0; 4],
            stable_mask: vec![true; 4],
        };
        assert_eq!(theta_tt(&flawless, 6).0, 0.0);
        let backlogged = QosClasses {
            departure_probs: vec![0.01; 4],
            stable_mask: vec![false; 4],
        };
        assert_eq!(theta_tt(&backlogged, 6).0, 5.0);
    }

    #[test]
    fn theta_tt_single_class_hand_sum() {
        // N=1, d=0.5, T=3: Σ_{τ=1..2} 0.5^τ = 0.75
        let c = QosClasses { departure_probs: vec![0.5], stable_mask: vec![true] };
        assert!((theta_tt(&c, 3).0 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn theta_et_mean() {
        assert_eq!(theta_et(&[1.0, 1.0]).0, 1.0);
        assert_eq!(theta_et(&[0.0, 0.0]).0, 0.0);
        assert!((theta_et(&[0.75, 0.25]).0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tt_no_interference_limit() {
        let sol = solve_coupled_tt(&cfg(1e-12), 8, &analysis()).unwrap();
        assert!(sol.converged);
        assert!(sol.iterations <= 2, "iterations {}", sol.iterations);
        assert!(sol.theta.0 < 1e-6);
        assert!(sol.classes.departure_probs.iter().all(|&d| d > 0.999));
    }

    #[test]
    fn tt_saturation_limit() {
        let sol = solve_coupled_tt(&cfg(1e6), 4, &analysis()).unwrap();
        assert!(sol.converged);
        assert!(sol.theta.0 > 2.9, "theta {}", sol.theta.0);
        assert_eq!(sol.classes.n_unstable(), sol.classes.n());
    }

    #[test]
    fn et_idle_limit() {
        let sol = solve_coupled_et(&cfg(1.0), 1e-6, &analysis()).unwrap();
        assert!(sol.converged);
        assert!(sol.theta.0 > 0.999);
        assert!(sol.classes.all_stable());
    }

    #[test]
    fn et_saturated_arrivals() {
        let sol = solve_coupled_et(&cfg(1.0), 1.0, &analysis()).unwrap();
        assert!(sol.converged);
        assert!(sol.theta.0 < 0.01);
        assert!(sol.classes.n_unstable() > 0);
    }

    #[test]
    fn iterate_is_deterministic() {
        let a = solve_coupled_tt(&cfg(1.0), 8, &analysis()).unwrap();
        let b = solve_coupled_tt(&cfg(1.0), 8, &analysis()).unwrap();
        assert_eq!(a.theta.0.to_bits(), b.theta.0.to_bits());
        assert_eq!(a.trace.len(), b.trace.len());
    }

    #[test]
    fn monotone_sandwich_tt() {
        let an = analysis();
        let lo = solve_coupled_tt_from(&cfg(1.0), 8, &an, 0.0).unwrap();
        let hi = solve_coupled_tt_from(&cfg(1.0), 8, &an, 7.0).unwrap();
        assert!(lo.converged && hi.converged);
        assert!(
            (lo.theta.0 - hi.theta.0).abs() < 50.0 * an.fixed_point_tol,
            "lo {} hi {}",
            lo.theta.0,
            hi.theta.0
        );
    }

    #[test]
    fn monotone_sandwich_et() {
        let an = analysis();
        let lo = solve_coupled_et_from(&cfg(1.0), 0.125, &an, 0.0).unwrap();
        let hi = solve_coupled_et_from(&cfg(1.0), 0.125, &an, 1.0).unwrap();
        assert!(lo.converged && hi.converged);
        assert!((lo.theta.0 - hi.theta.0).abs() < 50.0 * an.fixed_point_tol);
    }

    #[test]
    fn bounds_projected() {
        let sol = solve_coupled_tt(&cfg(10.0), 4, &analysis()).unwrap();
        for row in &sol.trace {
            assert!(row.theta >= 0.0 && row.theta <= 3.0);
        }
    }
}
