use agenet_core::config::{AnalysisParams, NetworkParams, SimParams, TrafficModel, ValidatedConfig};
use agenet_core::{fixedpoint, meta, sim};

fn main() {
    let net = NetworkParams {
        bs_intensity: 1.0, pathloss_exponent: 4.0, power_control_epsilon: 1.0,
        power_control_rho: 1e-12, sir_threshold: 1.0,
    };
    let an = AnalysisParams { fixed_point_tol: 1e-6, ..Default::default() };
    let cfg = ValidatedConfig {
        network: net.clone(),
        traffic: TrafficModel::Tt { duty_cycle: 10 },
        analysis: an.clone(),
        sim: SimParams { area_side: 10.0, seed: 901, n_realizations: 48, max_slots: 30_000, slots_after_warmup: 12_000 },
        warnings: vec![],
    };
    let pooled = sim::run_pooled(&cfg).unwrap();
    let sol = fixedpoint::solve_coupled_tt(&net, 10, &an).unwrap();
    let dist = meta::fit(sol.moments);
    let xi: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let emp = sim::empirical_ccdf(&pooled.device_ratios, &xi);
    let mut kmax = (0.0, 0.0, 0.0, 0.0);
    for (i, &x) in xi.iter().enumerate() {
        let a = meta::meta_ccdf(&dist, x);
        if (a - emp[i]).abs() > kmax.0 {
            kmax = ((a - emp[i]).abs(), x, a, emp[i]);
        }
    }
    println!("T=10 K={:.4} at xi={}: ana={:.4} emp={:.4}", kmax.0, kmax.1, kmax.2, kmax.3);
    let m_emp1: f64 = pooled.device_ratios.iter().sum::<f64>() / pooled.device_ratios.len() as f64;
    let m_emp2: f64 = pooled.device_ratios.iter().map(|r| r * r).sum::<f64>() / pooled.device_ratios.len() as f64;
    println!("analytic m1={:.4} m2={:.4}; empirical m1={:.4} m2={:.4}", sol.moments.m1, sol.moments.m2, m_emp1, m_emp2);
    for x in [0.80, 0.85, 0.90, 0.95, 0.98] {
        let a = meta::meta_ccdf(&dist, x);
        let e = pooled.device_ratios.iter().filter(|&&r| r > x).count() as f64 / pooled.device_ratios.len() as f64;
        println!("  xi={x}: ana={a:.4} emp={e:.4} diff={:+.4}", a - e);
    }
}
