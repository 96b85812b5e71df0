//! Peak age-of-information assembly: per-class and overall PAoI from the
//! inter-arrival statistics and waiting-time distributions, plus stability
//! frontiers over (θ, load) grids.
//!
//! The per-class mean wait reported here is the full time in system: the
//! queue-wait of the packets found ahead plus the packet's own geometric
//! service (a first-attempt success spends one slot). Peak age of an update
//! is the inter-arrival gap plus that system time.

use crate::config::{AnalysisParams, NetworkParams};
use crate::error::AnalysisError;
use crate::fixedpoint::{self, CoupledSolution};
use crate::meta::QosClasses;
use crate::queueing::{self, WaitingDist};
use rayon::prelude::*;

/// Per-class temporal solution: departure probability, stability and the
/// queue-wait distribution (None when unstable).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTemporal {
    pub departure_prob: f64,
    pub stable: bool,
    pub wait: Option<WaitingDist>,
}

impl ClassTemporal {
    /// Mean time in system (∞ for unstable classes).
    pub fn mean_system_wait(&self) -> f64 {
        match &self.wait {
            Some(w) if self.stable => w.mean + 1.0 / self.departure_prob,
            _ => f64::INFINITY,
        }
    }
}

/// Spatially averaged PAoI report. Infinite entries are explicit
/// `f64::INFINITY` (serialized as the string "inf").
#[derive(Debug, Clone, PartialEq)]
pub struct PaoiReport {
    pub overall: f64,
    pub per_class: Vec<f64>,
    pub mean_wait_per_class: Vec<f64>,
    pub inter_arrival_mean: f64,
}

/// Solve the per-class TT queues for every stable class.
pub fn class_waits_tt(
    classes: &QosClasses,
    duty_cycle: u32,
    tail: f64,
) -> Result<Vec<ClassTemporal>, AnalysisError> {
    classes
        .departure_probs
        .iter()
        .zip(&classes.stable_mask)
        .map(|(&d, &stable)| {
            if !stable {
                return Ok(ClassTemporal { departure_prob: d, stable, wait: None });
            }
            let model = queueing::build_qbd(duty_cycle, d);
            let r = queueing::solve_r(&model, duty_cycle)?;
            let st = queueing::solve_boundary(&model, &r)?;
            let wait = queueing::waiting_dist_tt(&st, &model, tail)?;
            Ok(ClassTemporal { departure_prob: d, stable, wait: Some(wait) })
        })
        .collect()
}

/// Solve the per-class ET queues for every stable class.
pub fn class_waits_et(
    classes: &QosClasses,
    alpha: f64,
    tail: f64,
) -> Result<Vec<ClassTemporal>, AnalysisError> {
    classes
        .departure_probs
        .iter()
        .zip(&classes.stable_mask)
        .map(|(&d, &stable)| {
            if !stable {
                return Ok(ClassTemporal { departure_prob: d, stable, wait: None });
            }
            let wait = queueing::waiting_dist_et(alpha, d, tail)?;
            Ok(ClassTemporal { departure_prob: d, stable, wait: Some(wait) })
        })
        .collect()
}

fn assemble(inter_arrival_mean: f64, temporals: &[ClassTemporal]) -> PaoiReport {
    let mean_wait_per_class: Vec<f64> = temporals.iter().map(|t| t.mean_system_wait()).collect();
    let per_class: Vec<f64> = mean_wait_per_class
        .iter()
        .map(|&w| inter_arrival_mean + w)
        .collect();
    // the overall average spans all classes, so a single unstable class
    // drives the network-wide PAoI to infinity
    let n = temporals.len() as f64;
    let overall = inter_arrival_mean + mean_wait_per_class.iter().sum::<f64>() / n;
    PaoiReport { overall, per_class, mean_wait_per_class, inter_arrival_mean }
}

/// PAoI under TT traffic: per-class T + mean system wait, averaged across
/// classes for the overall value.
pub fn paoi_tt(duty_cycle: u32, temporals: &[ClassTemporal]) -> PaoiReport {
    assemble(duty_cycle as f64, temporals)
}

/// PAoI under ET traffic: per-class 1/α + mean system wait.
pub fn paoi_et(alpha: f64, temporals: &[ClassTemporal]) -> PaoiReport {
    assemble(1.0 / alpha, temporals)
}

/// Full analytical pipeline output for one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub solution: CoupledSolution,
    pub temporals: Vec<ClassTemporal>,
    pub report: PaoiReport,
}

/// Coupled solve + queueing + PAoI for TT traffic.
pub fn analyze_tt(
    cfg: &NetworkParams,
    duty_cycle: u32,
    analysis: &AnalysisParams,
) -> Result<AnalysisReport, AnalysisError> {
    let solution = fixedpoint::solve_coupled_tt(cfg, duty_cycle, analysis)?;
    let temporals = class_waits_tt(&solution.classes, duty_cycle, analysis.wait_pmf_tail_mass)?;
    let report = paoi_tt(duty_cycle, &temporals);
    Ok(AnalysisReport { solution, temporals, report })
}

/// Coupled solve + queueing + PAoI for ET traffic.
pub fn analyze_et(
    cfg: &NetworkParams,
    alpha: f64,
    analysis: &AnalysisParams,
) -> Result<AnalysisReport, AnalysisError> {
    let solution = fixedpoint::solve_coupled_et(cfg, alpha, analysis)?;
    let temporals = class_waits_et(&solution.classes, alpha, analysis.wait_pmf_tail_mass)?;
    let report = paoi_et(alpha, &temporals);
    Ok(AnalysisReport { solution, temporals, report })
}

/// One evaluated grid point of a frontier scan.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint {
    pub theta_db: f64,
    /// Duty cycle T (TT) or arrival probability α (ET).
    pub load: f64,
    pub class_stable: Vec<bool>,
    pub converged: bool,
}

/// Per-class stability frontier over a (θ, load) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFrontier {
    pub points: Vec<FrontierPoint>,
    /// `frontier[class][theta_idx]`: minimal stable T (TT) or maximal stable
    /// α (ET); None when no grid load is stable for that class.
    pub frontier: Vec<Vec<Option<f64>>>,
    pub theta_db: Vec<f64>,
}

/// Frontier scan for TT traffic over duty cycles.
pub fn stability_frontier_tt(
    cfg: &NetworkParams,
    theta_db: &[f64],
    duty_cycles: &[u32],
    analysis: &AnalysisParams,
) -> ParetoFrontier {
    let grid: Vec<(f64, u32)> = theta_db
        .iter()
        .flat_map(|&t| duty_cycles.iter().map(move |&l| (t, l)))
        .collect();
    let points: Vec<FrontierPoint> = grid
        .par_iter()
        .map(|&(th, t)| {
            let mut c = cfg.clone();
            c.sir_threshold = crate::config::db_to_linear(th);
            match fixedpoint::solve_coupled_tt(&c, t, analysis) {
                Ok(sol) => FrontierPoint {
                    theta_db: th,
                    load: t as f64,
                    class_stable: sol.classes.stable_mask.clone(),
                    converged: sol.converged,
                },
                Err(_) => FrontierPoint {
                    theta_db: th,
                    load: t as f64,
                    class_stable: vec![false; analysis.n_classes],
                    converged: false,
                },
            }
        })
        .collect();
    let frontier = (0..analysis.n_classes)
        .map(|class| {
            theta_db
                .iter()
                .map(|&th| {
                    points
                        .iter()
                        .filter(|p| p.theta_db == th && p.converged && p.class_stable[class])
                        .map(|p| p.load)
                        .fold(None, |acc: Option<f64>, l| {
                            Some(acc.map_or(l, |a: f64| a.min(l)))
                        })
                })
                .collect()
        })
        .collect();
    ParetoFrontier { points, frontier, theta_db: theta_db.to_vec() }
}

/// Frontier scan for ET traffic over arrival probabilities.
pub fn stability_frontier_et(
    cfg: &NetworkParams,
    theta_db: &[f64],
    alphas: &[f64],
    analysis: &AnalysisParams,
) -> ParetoFrontier {
    let grid: Vec<(f64, f64)> = theta_db
        .iter()
        .flat_map(|&t| alphas.iter().map(move |&l| (t, l)))
        .collect();
    let points: Vec<FrontierPoint> = grid
        .par_iter()
        .map(|&(th, a)| {
            let mut c = cfg.clone();
            c.sir_threshold = crate::config::db_to_linear(th);
            match fixedpoint::solve_coupled_et(&c, a, analysis) {
                Ok(sol) => FrontierPoint {
                    theta_db: th,
                    load: a,
                    class_stable: sol.classes.stable_mask.clone(),
                    converged: sol.converged,
                },
                Err(_) => FrontierPoint {
                    theta_db: th,
                    load: a,
                    class_stable: vec![false; analysis.n_classes],
                    converged: false,
                },
            }
        })
        .collect();
    let frontier = (0..analysis.n_classes)
        .map(|class| {
            theta_db
                .iter()
                .map(|&th| {
                    points
                        .iter()
                        .filter(|p| p.theta_db == th && p.converged && p.class_stable[class])
                        .map(|p| p.load)
                        .fold(None, |acc: Option<f64>, l| {
                            Some(acc.map_or(l, |a: f64| a.max(l)))
                        })
                })
                .collect()
        })
        .collect();
    ParetoFrontier { points, frontier, theta_db: theta_db.to_vec() }
}
