//! Command implementations: drive the analysis pipeline and simulator and
//! write the CSV artifacts.

use crate::output::{num, Csv};
use agenet_core::config::{db_to_linear, linear_to_db};
use agenet_core::{meta, paoi, sim, TrafficModel, ValidatedConfig};
use std::path::Path;

/// ξ grid used for all meta-CCDF outputs.
pub fn xi_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| anyhow::anyhow!("cannot create output dir {}: {e}", dir.display()))
}

struct AnalyzeSinks {
    summary: Csv,
    classes: Csv,
    ccdf: Csv,
    trace: Csv,
}

fn analyze_sinks(cfg: &ValidatedConfig, dir: &Path) -> anyhow::Result<AnalyzeSinks> {
    Ok(AnalyzeSinks {
        summary: Csv::create(
            dir,
            "summary.csv",
            cfg,
            "traffic,theta_db,load,load_factor,m1,m2,n_unstable,iterations,converged,overall_paoi",
        )?,
        classes: Csv::create(
            dir,
            "classes.csv",
            cfg,
            "traffic,theta_db,load,class,d,stable,mean_wait,paoi",
        )?,
        ccdf: Csv::create(dir, "meta_ccdf.csv", cfg, "traffic,theta_db,load,xi,ccdf")?,
        trace: Csv::create(dir, "trace.csv", cfg, "traffic,theta_db,load,iter,theta,m1,m2,n_unstable")?,
    })
}

fn emit_point(
    sinks: &mut AnalyzeSinks,
    traffic: &str,
    theta_db: f64,
    load: f64,
    rep: &paoi::AnalysisReport,
) -> anyhow::Result<()> {
    let sol = &rep.solution;
    sinks.summary.row(&[
        traffic.into(),
        num(theta_db),
        num(load),
        num(sol.theta.0),
        num(sol.moments.m1),
        num(sol.moments.m2),
        sol.classes.n_unstable().to_string(),
        sol.iterations.to_string(),
        sol.converged.to_string(),
        num(rep.report.overall),
    ])?;
    for (k, t) in rep.temporals.iter().enumerate() {
        sinks.classes.row(&[
            traffic.into(),
            num(theta_db),
            num(load),
            (k + 1).to_string(),
            num(t.departure_prob),
            t.stable.to_string(),
            num(rep.report.mean_wait_per_class[k]),
            num(rep.report.per_class[k]),
        ])?;
    }
    let dist = meta::fit(sol.moments);
    for &xi in &xi_grid() {
        sinks.ccdf.row(&[
            traffic.into(),
            num(theta_db),
            num(load),
            num(xi),
            num(meta::meta_ccdf(&dist, xi)),
        ])?;
    }
    for row in &sol.trace {
        sinks.trace.row(&[
            traffic.into(),
            num(theta_db),
            num(load),
            row.iter.to_string(),
            num(row.theta),
            num(row.m1),
            num(row.m2),
            row.n_unstable.to_string(),
        ])?;
    }
    Ok(())
}

fn finish(sinks: AnalyzeSinks) -> anyhow::Result<()> {
    sinks.summary.finish()?;
    sinks.classes.finish()?;
    sinks.ccdf.finish()?;
    sinks.trace.finish()
}

/// Grid values falling back to the config when a flag list is empty.
fn theta_grid(cfg: &ValidatedConfig, flags: &[f64]) -> Vec<f64> {
    if flags.is_empty() {
        vec![linear_to_db(cfg.network.sir_threshold)]
    } else {
        flags.to_vec()
    }
}

pub fn analyze_tt(
    cfg: &ValidatedConfig,
    dir: &Path,
    theta_db: &[f64],
    duty_cycles: &[u32],
) -> anyhow::Result<()> {
    let loads: Vec<u32> = if duty_cycles.is_empty() {
        match cfg.traffic {
            TrafficModel::Tt { duty_cycle } => vec![duty_cycle],
            _ => anyhow::bail!("analyze-tt needs --duty-cycle or a TT traffic block"),
        }
    } else {
        duty_cycles.to_vec()
    };
    ensure_dir(dir)?;
    let mut sinks = analyze_sinks(cfg, dir)?;
    for &th in &theta_grid(cfg, theta_db) {
        let mut net = cfg.network.clone();
        net.sir_threshold = db_to_linear(th);
        for &t in &loads {
            let rep = paoi::analyze_tt(&net, t, &cfg.analysis)?;
            emit_point(&mut sinks, "tt", th, t as f64, &rep)?;
        }
    }
    finish(sinks)
}

pub fn analyze_et(
    cfg: &ValidatedConfig,
    dir: &Path,
    theta_db: &[f64],
    alphas: &[f64],
) -> anyhow::Result<()> {
    let loads: Vec<f64> = if alphas.is_empty() {
        match cfg.traffic {
            TrafficModel::Et { arrival_prob } => vec![arrival_prob],
            _ => anyhow::bail!("analyze-et needs --alpha or an ET traffic block"),
        }
    } else {
        alphas.to_vec()
    };
    ensure_dir(dir)?;
    let mut sinks = analyze_sinks(cfg, dir)?;
    for &th in &theta_grid(cfg, theta_db) {
        let mut net = cfg.network.clone();
        net.sir_threshold = db_to_linear(th);
        for &a in &loads {
            anyhow::ensure!(a > 0.0 && a <= 1.0, "alpha {a} out of (0, 1]");
            let rep = paoi::analyze_et(&net, a, &cfg.analysis)?;
            emit_point(&mut sinks, "et", th, a, &rep)?;
        }
    }
    finish(sinks)
}

pub fn simulate(cfg: &ValidatedConfig, dir: &Path) -> anyhow::Result<()> {
    ensure_dir(dir)?;
    let pooled = sim::run_pooled(cfg)?;
    let mut devices = Csv::create(
        dir,
        "sim_devices.csv",
        cfg,
        "realization,device,r_o,success_ratio,mean_wait,mean_peak_age,n_samples",
    )?;
    for d in &pooled.devices {
        devices.row(&[
            d.realization.to_string(),
            d.device.to_string(),
            num(d.serving_distance),
            num(d.success_ratio),
            num(d.mean_wait),
            num(d.mean_peak),
            d.n_samples.to_string(),
        ])?;
    }
    devices.finish()?;

    let mut ccdf = Csv::create(dir, "sim_meta_ccdf.csv", cfg, "xi,ccdf")?;
    let grid = xi_grid();
    for (xi, c) in grid.iter().zip(sim::empirical_ccdf(&pooled.device_ratios, &grid)) {
        ccdf.row(&[num(*xi), num(c)])?;
    }
    ccdf.finish()?;

    let mut summary = Csv::create(
        dir,
        "sim_summary.csv",
        cfg,
        "n_realizations,n_devices,mean_success,mean_wait,mean_peak_age,mean_idle_fraction,peak_samples",
    )?;
    let mean_success =
        pooled.device_ratios.iter().sum::<f64>() / pooled.device_ratios.len().max(1) as f64;
    summary.row(&[
        cfg.sim.n_realizations.to_string(),
        pooled.device_ratios.len().to_string(),
        num(mean_success),
        num(pooled.mean_wait),
        num(pooled.mean_peak),
        num(pooled.mean_idle_fraction),
        pooled.total_peak_samples.to_string(),
    ])?;
    summary.finish()
}

/// Run both paths and write the side-by-side validation report. Returns
/// whether both tolerances passed.
pub fn compare(cfg: &ValidatedConfig, dir: &Path, k_tol: f64, paoi_tol: f64) -> anyhow::Result<bool> {
    ensure_dir(dir)?;
    let analytic = match cfg.traffic {
        TrafficModel::Tt { duty_cycle } => paoi::analyze_tt(&cfg.network, duty_cycle, &cfg.analysis)?,
        TrafficModel::Et { arrival_prob } => {
            paoi::analyze_et(&cfg.network, arrival_prob, &cfg.analysis)?
        }
    };
    let pooled = sim::run_pooled(cfg)?;

    let grid = xi_grid();
    let dist = meta::fit(analytic.solution.moments);
    let emp = sim::empirical_ccdf(&pooled.device_ratios, &grid);
    let mut k_dist: f64 = 0.0;
    let mut table = Csv::create(dir, "compare_meta.csv", cfg, "xi,analytic_ccdf,empirical_ccdf")?;
    for (i, &xi) in grid.iter().enumerate() {
        let ana = meta::meta_ccdf(&dist, xi);
        k_dist = k_dist.max((ana - emp[i]).abs());
        table.row(&[num(xi), num(ana), num(emp[i])])?;
    }
    table.finish()?;

    // empirical peak age vs the analytical theorem value
    let ana_paoi = analytic.report.overall;
    let emp_paoi = pooled.mean_peak;
    let rel_err = if ana_paoi.is_finite() {
        (ana_paoi - emp_paoi).abs() / emp_paoi
    } else {
        f64::INFINITY
    };
    let k_pass = k_dist <= k_tol;
    let paoi_pass = rel_err <= paoi_tol;

    let mut summary = Csv::create(
        dir,
        "compare_summary.csv",
        cfg,
        "kolmogorov,k_tol,k_pass,analytic_paoi,empirical_paoi,paoi_rel_err,paoi_tol,paoi_pass",
    )?;
    summary.row(&[
        num(k_dist),
        num(k_tol),
        k_pass.to_string(),
        num(ana_paoi),
        num(emp_paoi),
        num(rel_err),
        num(paoi_tol),
        paoi_pass.to_string(),
    ])?;
    summary.finish()?;
    println!(
        "compare: K={:.4} ({}), PAoI analytic {:.3} vs simulated {:.3} (rel err {:.3}, {})",
        k_dist,
        if k_pass { "pass" } else { "FAIL" },
        ana_paoi,
        emp_paoi,
        rel_err,
        if paoi_pass { "pass" } else { "FAIL" },
    );
    Ok(k_pass && paoi_pass)
}

pub fn frontier_tt(
    cfg: &ValidatedConfig,
    dir: &Path,
    theta_db: &[f64],
    duty_cycles: &[u32],
) -> anyhow::Result<()> {
    ensure_dir(dir)?;
    let f = paoi::stability_frontier_tt(&cfg.network, theta_db, duty_cycles, &cfg.analysis);
    write_frontier(cfg, dir, &f, "tt")
}

pub fn frontier_et(
    cfg: &ValidatedConfig,
    dir: &Path,
    theta_db: &[f64],
    alphas: &[f64],
) -> anyhow::Result<()> {
    ensure_dir(dir)?;
    for &a in alphas {
        anyhow::ensure!(a > 0.0 && a <= 1.0, "alpha {a} out of (0, 1]");
    }
    let f = paoi::stability_frontier_et(&cfg.network, theta_db, alphas, &cfg.analysis);
    write_frontier(cfg, dir, &f, "et")
}

fn write_frontier(
    cfg: &ValidatedConfig,
    dir: &Path,
    f: &paoi::ParetoFrontier,
    traffic: &str,
) -> anyhow::Result<()> {
    let mut grid = Csv::create(dir, "frontier_grid.csv", cfg, "traffic,theta_db,load,class,stable")?;
    for p in &f.points {
        for (k, &st) in p.class_stable.iter().enumerate() {
            let stable = if p.converged { num(if st { 1.0 } else { 0.0 }) } else { "NaN".into() };
            grid.row(&[
                traffic.into(),
                num(p.theta_db),
                num(p.load),
                (k + 1).to_string(),
                stable,
            ])?;
        }
    }
    grid.finish()?;
    let mut front = Csv::create(dir, "frontier.csv", cfg, "traffic,class,theta_db,load_star")?;
    for (class, per_theta) in f.frontier.iter().enumerate() {
        for (ti, load) in per_theta.iter().enumerate() {
            front.row(&[
                traffic.into(),
                (class + 1).to_string(),
                num(f.theta_db[ti]),
                num(load.unwrap_or(f64::NAN)),
            ])?;
        }
    }
    front.finish()
}
