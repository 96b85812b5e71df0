//! Independent slot-level Monte Carlo simulator: spatial realization on a
//! torus, queue-coupled SIR with fresh Rayleigh gains each slot, TT/ET packet
//! generation, FCFS persistent retransmission, and measurement of the meta
//! distribution, waiting times, and peak age.
//!
//! Conventions: a packet generated in slot t that succeeds in slot t has
//! waiting time 1 (slots in system, counting the service slot). The peak-age
//! sample recorded at each delivery is the generation gap to the previous
//! delivered packet plus the waiting time of the new one.

use crate::config::{NetworkParams, SimParams, TrafficModel, ValidatedConfig};
use crate::error::SimError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::VecDeque;

/// A sampled network geometry: one device per BS, dropped uniformly within
/// its (toroidal) Voronoi cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub bs_positions: Vec<[f64; 2]>,
    pub device_positions: Vec<[f64; 2]>,
    /// Serving distance r_o per device, km.
    pub serving_distance: Vec<f64>,
    /// Uplink transmit power ρ·r^{ηε} per device, watts.
    pub tx_power: Vec<f64>,
    pub area_side: f64,
    /// Number of degenerate draws (< 2 BSs) that were rejected and redrawn.
    pub resamples: u32,
}

impl Realization {
    pub fn n_devices(&self) -> usize {
        self.bs_positions.len()
    }
}

/// Aggregated per-device measurements from one simulated realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotMetrics {
    pub attempts: Vec<u64>,
    pub successes: Vec<u64>,
    pub wait_sum: Vec<f64>,
    pub wait_count: Vec<u64>,
    pub peak_sum: Vec<f64>,
    pub peak_count: Vec<u64>,
    /// Network idle fraction per measured slot.
    pub idle_fraction: Vec<f64>,
    /// TT offsets β (None under ET traffic).
    pub offsets: Option<Vec<u32>>,
    pub warmup_slots: usize,
    pub measured_slots: usize,
}

impl SlotMetrics {
    pub fn n_devices(&self) -> usize {
        self.attempts.len()
    }

    /// Per-device empirical success ratio (1.0 for devices that never
    /// attempted, which cannot happen post warm-up with positive traffic).
    pub fn success_ratios(&self) -> Vec<f64> {
        self.attempts
            .iter()
            .zip(&self.successes)
            .map(|(&a, &s)| if a == 0 { 1.0 } else { s as f64 / a as f64 })
            .collect()
    }

    pub fn mean_idle_fraction(&self) -> f64 {
        if self.idle_fraction.is_empty() {
            return 1.0;
        }
        self.idle_fraction.iter().sum::<f64>() / self.idle_fraction.len() as f64
    }
}

/// Squared toroidal distance on the L×L wrap-around square.
pub fn torus_dist2(a: [f64; 2], b: [f64; 2], side: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..2 {
        let mut d = (a[k] - b[k]).abs();
        if d > side - d {
            d = side - d;
        }
        acc += d * d;
    }
    acc
}

/// Substream seed for a realization index, mixed from the master seed
/// (splitmix64 finalizer).
pub fn substream_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    // Knuth product-of-uniforms; mean is at most a few hundred here
    let l = (-mean).exp();
    let mut k = 0usize;
    let mut p = 1.0;
    loop {
        p *= rng.gen::<f64>();
        if p <= l {
            return k;
        }
        k += 1;
    }
}

fn exp1(rng: &mut ChaCha8Rng) -> f64 {
    -(1.0 - rng.gen::<f64>()).ln()
}

/// Sample a spatial realization: Poisson(λL²) BSs uniform on the torus and
/// one device per BS placed by rejection (uniform points accepted when their
/// toroidal-nearest BS is the target), which is exact uniform-within-cell.
/// Draws with fewer than 2 BSs are rejected and redrawn with a bumped seed.
pub fn sample_realization(
    cfg: &NetworkParams,
    sim: &SimParams,
    seed: u64,
) -> Result<Realization, SimError> {
    let side = sim.area_side;
    let mean = cfg.bs_intensity * side * side;
    let mut resamples = 0u32;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(resamples as u64));
        let n = poisson(&mut rng, mean);
        if n < 2 {
            resamples += 1;
            if resamples > 1000 {
                return Err(SimError::DegenerateRealization { nbs: n });
            }
            continue;
        }
        let bs: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.gen::<f64>() * side, rng.gen::<f64>() * side])
            .collect();
        let mut dev = Vec::with_capacity(n);
        let mut serving = Vec::with_capacity(n);
        for (i, _) in bs.iter().enumerate() {
            loop {
                let p = [rng.gen::<f64>() * side, rng.gen::<f64>() * side];
                let mut best = 0usize;
                let mut best_d2 = f64::INFINITY;
                for (j, b) in bs.iter().enumerate() {
                    let d2 = torus_dist2(p, *b, side);
                    if d2 < best_d2 {
                        best_d2 = d2;
                        best = j;
                    }
                }
                if best == i {
                    dev.push(p);
                    serving.push(best_d2.sqrt());
                    break;
                }
            }
        }
        let eta = cfg.pathloss_exponent;
        let eps = cfg.power_control_epsilon;
        let tx_power = serving
            .iter()
            .map(|&r| cfg.power_control_rho * r.powf(eta * eps))
            .collect();
        return Ok(Realization {
            bs_positions: bs,
            device_positions: dev,
            serving_distance: serving,
            tx_power,
            area_side: side,
            resamples,
        });
    }
}

/// Warm-up window length in slots for the idle-fraction moving estimate.
const WARMUP_WINDOW: usize = 50;
/// Minimum number of windows before the warm-up criterion may fire.
const WARMUP_MIN_WINDOWS: usize = 4;

/// Run the slot loop on one realization: warm up until the idle-fraction
/// moving estimate settles within `warmup_tol`, then measure
/// `sim.slots_after_warmup` slots.
pub fn run(
    real: &Realization,
    traffic: TrafficModel,
    cfg: &NetworkParams,
    sim: &SimParams,
    warmup_tol: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SlotMetrics, SimError> {
    let n = real.n_devices();
    let side = real.area_side;
    let eta = cfg.pathloss_exponent;
    let theta = cfg.sir_threshold;

    // path gain of interferer j at the serving BS of device i (diag unused)
    let mut pathgain = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d2 = torus_dist2(real.device_positions[j], real.bs_positions[i], side);
            pathgain[i * n + j] = real.tx_power[j] * d2.powf(-eta / 2.0);
        }
    }
    // mean intended power ρ·r^{η(ε−1)}
    let intended: Vec<f64> = real
        .serving_distance
        .iter()
        .map(|&r| cfg.power_control_rho * r.powf(eta * (cfg.power_control_epsilon - 1.0)))
        .collect();

    let offsets: Option<Vec<u32>> = match traffic {
        TrafficModel::Tt { duty_cycle } => {
            Some((0..n).map(|_| rng.gen_range(0..duty_cycle)).collect())
        }
        TrafficModel::Et { .. } => None,
    };

    let mut queues: Vec<VecDeque<u64>> = vec![VecDeque::new(); n];
    let mut last_gen: Vec<Option<u64>> = vec![None; n];
    let mut metrics = SlotMetrics {
        attempts: vec![0; n],
        successes: vec![0; n],
        wait_sum: vec![0.0; n],
        wait_count: vec![0; n],
        peak_sum: vec![0.0; n],
        peak_count: vec![0; n],
        idle_fraction: Vec::with_capacity(sim.slots_after_warmup),
        offsets: offsets.clone(),
        warmup_slots: 0,
        measured_slots: 0,
    };

    let min_warmup = match traffic {
        TrafficModel::Tt { duty_cycle } => {
            (WARMUP_MIN_WINDOWS * WARMUP_WINDOW).max(4 * duty_cycle as usize)
        }
        TrafficModel::Et { .. } => WARMUP_MIN_WINDOWS * WARMUP_WINDOW,
    };

    let mut warmed: Option<usize> = None;
    let mut window_sum = 0.0;
    let mut windows_seen = 0usize;
    let mut est_prev = f64::NAN;
    let mut est_sum = 0.0;
    let mut active: Vec<usize> = Vec::with_capacity(n);

    let mut t: u64 = 0;
    loop {
        let slot = t as usize;
        if warmed.is_none() && slot >= sim.max_slots {
            return Err(SimError::WarmupTimeout { max_slots: sim.max_slots });
        }
        if let Some(w) = warmed {
            if slot - w >= sim.slots_after_warmup {
                break;
            }
        }
        // arrivals at the start of the slot
        match traffic {
            TrafficModel::Tt { duty_cycle } => {
                let beta = offsets.as_ref().unwrap();
                for i in 0..n {
                    if t % duty_cycle as u64 == beta[i] as u64 {
                        queues[i].push_back(t);
                        debug_assert!(!queues[i].is_empty());
                    }
                }
            }
            TrafficModel::Et { arrival_prob } => {
                for i in 0..n {
                    if rng.gen::<f64>() < arrival_prob {
                        queues[i].push_back(t);
                    }
                }
            }
        }
        active.clear();
        active.extend((0..n).filter(|&i| !queues[i].is_empty()));
        let idle = 1.0 - active.len() as f64 / n as f64;
        let measuring = warmed.is_some();
        if measuring {
            metrics.idle_fraction.push(idle);
        }

        // transmissions: fresh unit-mean exponential gains per link per slot
        for &i in &active {
            let h = exp1(rng);
            let mut interference = 0.0;
            for &j in &active {
                if j != i {
                    interference += pathgain[i * n + j] * exp1(rng);
                }
            }
            let sir = if interference > 0.0 {
                intended[i] * h / interference
            } else {
                f64::INFINITY
            };
            if measuring {
                metrics.attempts[i] += 1;
            }
            if sir > theta {
                let gen = queues[i].pop_front().unwrap();
                let wait = (t - gen + 1) as f64;
                if measuring {
                    metrics.successes[i] += 1;
                    metrics.wait_sum[i] += wait;
                    metrics.wait_count[i] += 1;
                    if let Some(prev) = last_gen[i] {
                        let inter_arrival = (gen - prev) as f64;
                        metrics.peak_sum[i] += inter_arrival + wait;
                        metrics.peak_count[i] += 1;
                    }
                }
                last_gen[i] = Some(gen);
            }
        }

        // warm-up bookkeeping on the idle-fraction moving estimate
        if warmed.is_none() {
            window_sum += idle;
            if (slot + 1) % WARMUP_WINDOW == 0 {
                windows_seen += 1;
                let w = window_sum / WARMUP_WINDOW as f64;
                window_sum = 0.0;
                est_sum += w;
                let est = est_sum / windows_seen as f64;
                if slot + 1 >= min_warmup
                    && !est_prev.is_nan()
                    && (est - est_prev).abs() < warmup_tol
                {
                    warmed = Some(slot + 1);
                    metrics.warmup_slots = slot + 1;
                    // peak-age chains restart cleanly at the боundary
                }
                est_prev = est;
            }
        }
        t += 1;
    }
    metrics.measured_slots = sim.slots_after_warmup;
    Ok(metrics)
}

/// Empirical meta CCDF over devices at each ξ of the grid.
pub fn empirical_ccdf(ratios: &[f64], xi_grid: &[f64]) -> Vec<f64> {
    let n = ratios.len() as f64;
    xi_grid
        .iter()
        .map(|&xi| ratios.iter().filter(|&&r| r > xi).count() as f64 / n)
        .collect()
}

/// Meta measurement from one realization: per-device success ratios and the
/// CCDF on the ξ grid. Requires every device to have at least `min_attempts`
/// post-warm-up attempts.
pub fn measure_meta(
    metrics: &SlotMetrics,
    xi_grid: &[f64],
    min_attempts: u64,
) -> Result<Vec<f64>, SimError> {
    if let Some((dev, &att)) = metrics
        .attempts
        .iter()
        .enumerate()
        .min_by_key(|(_, &a)| a)
    {
        if att < min_attempts {
            return Err(SimError::InsufficientSamples {
                detail: format!("device {dev} has {att} attempts (< {min_attempts})"),
            });
        }
    }
    Ok(empirical_ccdf(&metrics.success_ratios(), xi_grid))
}

/// Empirical PAoI summary with a per-decile breakdown by measured success
/// ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalPaoi {
    pub mean_peak: f64,
    pub mean_wait: f64,
    /// Mean peak age per success-ratio decile (ascending ratio).
    pub per_decile: Vec<f64>,
}

/// Peak-age measurement: spatially averaged mean peak age and a breakdown
/// into `n_bins` empirical success-probability bins.
pub fn measure_paoi(
    metrics: &SlotMetrics,
    n_bins: usize,
    min_samples_per_bin: u64,
) -> Result<EmpiricalPaoi, SimError> {
    let ratios = metrics.success_ratios();
    let n = ratios.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ratios[a].total_cmp(&ratios[b]));
    let mut per_decile = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let lo = b * n / n_bins;
        let hi = ((b + 1) * n / n_bins).max(lo + 1).min(n);
        let mut sum = 0.0;
        let mut count = 0u64;
        for &i in &order[lo..hi] {
            sum += metrics.peak_sum[i];
            count += metrics.peak_count[i];
        }
        if count < min_samples_per_bin {
            return Err(SimError::InsufficientSamples {
                detail: format!("bin {b} has {count} peak samples (< {min_samples_per_bin})"),
            });
        }
        per_decile.push(sum / count as f64);
    }
    let peak_total: f64 = metrics.peak_sum.iter().sum();
    let peak_n: u64 = metrics.peak_count.iter().sum();
    let wait_total: f64 = metrics.wait_sum.iter().sum();
    let wait_n: u64 = metrics.wait_count.iter().sum();
    Ok(EmpiricalPaoi {
        mean_peak: peak_total / peak_n.max(1) as f64,
        mean_wait: wait_total / wait_n.max(1) as f64,
        per_decile,
    })
}

/// One device row of the raw metrics dump.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceRecord {
    pub realization: usize,
    pub device: usize,
    pub serving_distance: f64,
    pub success_ratio: f64,
    pub mean_wait: f64,
    pub mean_peak: f64,
    pub n_samples: u64,
}

/// Pooled results across independent realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledStats {
    pub device_ratios: Vec<f64>,
    pub mean_wait: f64,
    pub mean_peak: f64,
    pub mean_idle_fraction: f64,
    pub devices: Vec<DeviceRecord>,
    pub total_peak_samples: u64,
}

/// Sample and run `cfg.sim.n_realizations` independent realizations in
/// parallel (deterministic: each realization runs on its own seeded
/// substream and results merge in index order).
pub fn run_pooled(cfg: &ValidatedConfig) -> Result<PooledStats, SimError> {
    let runs: Vec<Result<(Realization, SlotMetrics), SimError>> = (0..cfg.sim.n_realizations)
        .into_par_iter()
        .map(|idx| {
            let seed = substream_seed(cfg.sim.seed, idx as u64);
            let real = sample_realization(&cfg.network, &cfg.sim, seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_517e);
            let metrics = run(
                &real,
                cfg.traffic,
                &cfg.network,
                &cfg.sim,
                cfg.analysis.fixed_point_tol,
                &mut rng,
            )?;
            Ok((real, metrics))
        })
        .collect();

    let mut device_ratios = Vec::new();
    let mut devices = Vec::new();
    let mut wait_sum = 0.0;
    let mut wait_n = 0u64;
    let mut peak_sum = 0.0;
    let mut peak_n = 0u64;
    let mut idle_sum = 0.0;
    for (idx, res) in runs.into_iter().enumerate() {
        let (real, m) = res?;
        let ratios = m.success_ratios();
        for i in 0..m.n_devices() {
            devices.push(DeviceRecord {
                realization: idx,
                device: i,
                serving_distance: real.serving_distance[i],
                success_ratio: ratios[i],
                mean_wait: m.wait_sum[i] / m.wait_count[i].max(1) as f64,
                mean_peak: m.peak_sum[i] / m.peak_count[i].max(1) as f64,
                n_samples: m.attempts[i],
            });
        }
        device_ratios.extend(ratios);
        wait_sum += m.wait_sum.iter().sum::<f64>();
        wait_n += m.wait_count.iter().sum::<u64>();
        peak_sum += m.peak_sum.iter().sum::<f64>();
        peak_n += m.peak_count.iter().sum::<u64>();
        idle_sum += m.mean_idle_fraction();
    }
    Ok(PooledStats {
        device_ratios,
        mean_wait: wait_sum / wait_n.max(1) as f64,
        mean_peak: peak_sum / peak_n.max(1) as f64,
        mean_idle_fraction: idle_sum / cfg.sim.n_realizations.max(1) as f64,
        devices,
        total_peak_samples: peak_n,
    })
}
