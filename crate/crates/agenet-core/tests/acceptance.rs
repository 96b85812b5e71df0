//! Acceptance suite: one test per criterion, each printing a
//! `ACCEPTANCE <n> <name>: PASS|FAIL` line (run with `--nocapture` to see
//! every line; failing criteria also panic with the detail).
//!
//! Criteria 6 and 8 encode reference values transcribed from source figures
//! that are internally inconsistent with the rest of the reference data (and
//! with this crate's independently validated model — see the simulator
//! cross-checks in criteria 4 and 5). They are asserted exactly as stated
//! and are expected to stay red; the printed diagnostics carry the measured
//! values side by side.

use agenet_core::config::{AnalysisParams, NetworkParams, SimParams, db_to_linear};
use agenet_core::geometry::{self, LoadFactor};
use agenet_core::{fixedpoint, meta, paoi, queueing, sim, TrafficModel};

fn reference_network(theta_db: f64) -> NetworkParams {
    NetworkParams {
        bs_intensity: 1.0,
        pathloss_exponent: 4.0,
        power_control_epsilon: 1.0,
        power_control_rho: 1e-12,
        sir_threshold: db_to_linear(theta_db),
    }
}

fn analysis() -> AnalysisParams {
    AnalysisParams { fixed_point_tol: 1e-6, ..Default::default() }
}

struct Gate {
    n: usize,
    name: &'static str,
    failures: Vec<String>,
}

impl Gate {
    fn new(n: usize, name: &'static str) -> Self {
        Gate { n, name, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: String) {
        if !ok {
            self.failures.push(detail);
        }
    }

    fn finish(self) {
        if self.failures.is_empty() {
            println!("ACCEPTANCE {} {}: PASS", self.n, self.name);
        } else {
            println!(
                "ACCEPTANCE {} {}: FAIL ({} sub-checks)",
                self.n,
                self.name,
                self.failures.len()
            );
            for f in &self.failures {
                println!("  - {f}");
            }
            panic!("acceptance criterion {} failed: {:?}", self.n, self.failures);
        }
    }
}

#[test]
fn criterion_01_moment_sanity() {
    let mut gate = Gate::new(1, "moment sanity suite");
    let etas = [2.5, 3.0, 4.0, 6.0];
    let epss = [0.0, 0.25, 0.5, 0.75, 1.0];
    let tol = 1e-7;
    let mut point = 0usize;
    for (i, &eta) in etas.iter().enumerate() {
        for &eps in &epss {
            point += 1;
            let mut cfg = reference_network(0.0);
            cfg.pathloss_exponent = eta;
            cfg.power_control_epsilon = eps;
            let t = [2u32, 4, 8, 16][i];
            let alpha_idle = LoadFactor::et(0.3);
            // b = 0 → exactly 1
            let m0t = geometry::moment_tt(0.0, 1.0, LoadFactor(0.4), &cfg, t, tol).unwrap();
            let m0e = geometry::moment_et(0.0, 1.0, alpha_idle, &cfg, tol).unwrap();
            gate.check((m0t - 1.0).abs() <= 1e-6, format!("pt{point} b=0 tt: {m0t}"));
            gate.check((m0e - 1.0).abs() <= 1e-6, format!("pt{point} b=0 et: {m0e}"));
            // θ → 0 → 1 within 1e-6
            let mtt = geometry::moment_tt(1.0, 1e-12, LoadFactor(0.4), &cfg, t, tol).unwrap();
            let met = geometry::moment_et(1.0, 1e-12, alpha_idle, &cfg, tol).unwrap();
            gate.check((mtt - 1.0).abs() <= 1e-6, format!("pt{point} theta→0 tt: {mtt}"));
            gate.check((met - 1.0).abs() <= 1e-6, format!("pt{point} theta→0 et: {met}"));
            // M2 ≤ M1 at a real threshold
            let p = geometry::moments_tt(1.0, LoadFactor(0.4), &cfg, t, tol).unwrap();
            gate.check(
                p.m2 <= p.m1 + 1e-9 && p.check(1e-6),
                format!("pt{point} ordering tt: m1={} m2={}", p.m1, p.m2),
            );
            let pe = geometry::moments_et(1.0, alpha_idle, &cfg, tol).unwrap();
            gate.check(
                pe.m2 <= pe.m1 + 1e-9 && pe.check(1e-6),
                format!("pt{point} ordering et: m1={} m2={}", pe.m1, pe.m2),
            );
        }
    }
    assert_eq!(point, 20);
    gate.finish();
}

#[test]
fn criterion_02_eps1_closed_vs_generic() {
    let mut gate = Gate::new(2, "eps=1 closed branch vs generic quadrature");
    let closed_cfg = reference_network(0.0);
    let mut generic_cfg = reference_network(0.0);
    generic_cfg.power_control_epsilon = 1.0 - 1e-6;
    for i in 0..10 {
        let theta_db = -10.0 + 20.0 * i as f64 / 9.0;
        let theta = db_to_linear(theta_db);
        for b in [1.0, 2.0] {
            let a = geometry::moment_tt(b, theta, LoadFactor(0.5), &closed_cfg, 8, 1e-11).unwrap();
            let g = geometry::moment_tt(b, theta, LoadFactor(0.5), &generic_cfg, 8, 1e-11).unwrap();
            let rel = ((a - g) / a).abs();
            gate.check(
                rel <= 1e-3,
                format!("theta={theta_db:.1}dB b={b}: closed={a:.9} generic={g:.9} rel={rel:.2e}"),
            );
        }
    }
    gate.finish();
}

#[test]
fn criterion_03_qbd_oracle() {
    let mut gate = Gate::new(3, "QBD level-phase distribution vs truncated DTMC");
    for &t in &[3u32, 4, 8] {
        for &d in &[0.4, 0.6, 0.9] {
            if !queueing::is_stable_tt(d, t) {
                continue; // stable cases only
            }
            let model = queueing::build_qbd(t, d);
            let r = queueing::solve_r(&model, t).unwrap();
            let residual = (&model.a0 + &r * &model.a1 + (&r * &r) * &model.a2 - &r)
                .abs()
                .max();
            gate.check(residual <= 1e-12, format!("T={t} d={d}: R residual {residual:.2e}"));
            let st = queueing::solve_boundary(&model, &r).unwrap();
            let brute = queueing::oracle::truncated_power_iteration(&model, 70, 2_000_000);
            let mut tv = 0.0;
            for (l, row) in brute.iter().enumerate().take(50) {
                let ana = st.level(l);
                for (i, &b) in row.iter().enumerate() {
                    tv += (ana[i] - b).abs();
                }
            }
            tv /= 2.0;
            gate.check(tv <= 1e-8, format!("T={t} d={d}: total variation {tv:.2e}"));
        }
    }
    gate.finish();
}

#[test]
fn criterion_04_waiting_time_oracle() {
    let mut gate = Gate::new(4, "waiting-time means vs single-queue simulations");
    const SLOTS: usize = 1_000_000;
    // TT points
    for (i, &(t, d)) in [(8u32, 0.5f64), (4, 0.45), (8, 0.21)].iter().enumerate() {
        let model = queueing::build_qbd(t, d);
        let r = queueing::solve_r(&model, t).unwrap();
        let st = queueing::solve_boundary(&model, &r).unwrap();
        let w = queueing::waiting_dist_tt(&st, &model, 1e-10).unwrap();
        let analytic = w.mean + 1.0 / d;
        let simulated = queueing::oracle::simulate_tt_queue(t, d, SLOTS, 1000 + i as u64);
        let rel = ((analytic - simulated) / simulated).abs();
        gate.check(
            rel <= 0.02,
            format!("TT T={t} d={d}: analytic {analytic:.4} sim {simulated:.4} rel {rel:.3}"),
        );
    }
    // ET points
    for (i, &(a, d)) in [(0.125f64, 0.5f64), (0.3, 0.45), (0.05, 0.9)].iter().enumerate() {
        let w = queueing::waiting_dist_et(a, d, 1e-10).unwrap();
        let analytic = w.mean + 1.0 / d;
        let simulated = queueing::oracle::simulate_et_queue(a, d, SLOTS, 2000 + i as u64);
        let rel = ((analytic - simulated) / simulated).abs();
        gate.check(
            rel <= 0.02,
            format!("ET a={a} d={d}: analytic {analytic:.4} sim {simulated:.4} rel {rel:.3}"),
        );
    }
    gate.finish();
}

fn reference_sim(seed: u64) -> SimParams {
    SimParams {
        area_side: 10.0,
        seed,
        n_realizations: 192,
        max_slots: 30_000,
        slots_after_warmup: 12_000,
    }
}

fn reference_config(traffic: TrafficModel, sim: SimParams) -> agenet_core::ValidatedConfig {
    agenet_core::ValidatedConfig {
        network: reference_network(0.0),
        traffic,
        analysis: analysis(),
        sim,
        warnings: Vec::new(),
    }
}

fn pooled_ratios(traffic: TrafficModel, seed: u64) -> Vec<f64> {
    let cfg = reference_config(traffic, reference_sim(seed));
    sim::run_pooled(&cfg).unwrap().device_ratios
}

#[test]
fn criterion_05_meta_cross_validation() {
    let mut gate = Gate::new(5, "meta-distribution cross-validation (analytic vs simulator)");
    let xi: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let an = analysis();
    let net = reference_network(0.0); // θ = 1
    let mut tt_ccdfs = Vec::new();
    for (k, &t) in [5u32, 10, 15].iter().enumerate() {
        let sol = fixedpoint::solve_coupled_tt(&net, t, &an).unwrap();
        let dist = meta::fit(sol.moments);
        let ana: Vec<f64> = xi.iter().map(|&x| meta::meta_ccdf(&dist, x)).collect();
        let ratios = pooled_ratios(TrafficModel::Tt { duty_cycle: t }, 900 + k as u64);
        let emp = sim::empirical_ccdf(&ratios, &xi);
        let kdist = ana
            .iter()
            .zip(&emp)
            .map(|(a, e)| (a - e).abs())
            .fold(0.0f64, f64::max);
        println!("  TT T={t}: K = {kdist:.4} ({} devices)", ratios.len());
        gate.check(kdist <= 0.08, format!("TT T={t}: K {kdist:.4} > 0.08"));
        tt_ccdfs.push((emp, ratios.len()));
    }
    // ordering in load, pointwise on ξ ∈ [0.1, 0.9]: CCDF(T=15) ≥ CCDF(T=10) ≥ CCDF(T=5),
    // up to the one-device resolution of the empirical curves
    let eps = 2.0 / tt_ccdfs.iter().map(|(_, n)| *n).fold(usize::MAX, usize::min) as f64;
    for i in 10..=90 {
        let (c5, c10, c15) = (tt_ccdfs[0].0[i], tt_ccdfs[1].0[i], tt_ccdfs[2].0[i]);
        gate.check(
            c15 >= c10 - eps && c10 >= c5 - eps,
            format!("TT ordering at xi={}: {c5:.5} {c10:.5} {c15:.5}", xi[i]),
        );
    }
    let mut et_ccdfs = Vec::new();
    for (k, &a) in [1.0 / 15.0, 0.1, 0.2].iter().enumerate() {
        let sol = fixedpoint::solve_coupled_et(&net, a, &an).unwrap();
        let dist = meta::fit(sol.moments);
        let ana: Vec<f64> = xi.iter().map(|&x| meta::meta_ccdf(&dist, x)).collect();
        let ratios = pooled_ratios(TrafficModel::Et { arrival_prob: a }, 950 + k as u64);
        let emp = sim::empirical_ccdf(&ratios, &xi);
        let kdist = ana
            .iter()
            .zip(&emp)
            .map(|(x, e)| (x - e).abs())
            .fold(0.0f64, f64::max);
        println!("  ET a={a:.4}: K = {kdist:.4} ({} devices)", ratios.len());
        gate.check(kdist <= 0.08, format!("ET a={a:.4}: K {kdist:.4} > 0.08"));
        et_ccdfs.push((emp, ratios.len()));
    }
    let eps_et = 2.0 / et_ccdfs.iter().map(|(_, n)| *n).fold(usize::MAX, usize::min) as f64;
    for i in 10..=90 {
        let (c15, c10, c5) = (et_ccdfs[0].0[i], et_ccdfs[1].0[i], et_ccdfs[2].0[i]);
        gate.check(
            c15 >= c10 - eps_et && c10 >= c5 - eps_et,
            format!("ET ordering at xi={}: a=1/5 {c5:.5} a=1/10 {c10:.5} a=1/15 {c15:.5}", xi[i]),
        );
    }
    gate.finish();
}

#[test]
fn criterion_06_tt_paoi_reference_sweep() {
    let mut gate = Gate::new(6, "TT PAoI sweep reference values");
    let an = analysis();
    let mut sweep = Vec::new();
    for t in 4..=20u32 {
        let rep = paoi::analyze_tt(&reference_network(0.0), t, &an).unwrap();
        sweep.push((t, rep.report.overall));
    }
    for &(t, p) in &sweep {
        println!("  theta=0dB T={t}: PAoI = {p:.3}");
    }
    // PAoI(T=4) ≈ 23.1 ± 10%
    let p4 = sweep[0].1;
    gate.check(
        (p4 - 23.1).abs() <= 2.31,
        format!("PAoI(T=4) = {p4:.3}, reference 23.1±10% (reference data internally inconsistent; model+simulator agree on the computed value)"),
    );
    // interior minimum near T=8 with value ≈ 12.15 ± 10%
    let (tmin, pmin) = sweep
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    gate.check(
        (7..=9).contains(&tmin) && (pmin - 12.15).abs() <= 1.215,
        format!("min at T={tmin} value {pmin:.3}, reference T≈8 / 12.15±10%"),
    );
    // asymptotically slope-1 in T
    let slope = sweep[16].1 - sweep[15].1;
    gate.check(
        (slope - 1.0).abs() <= 0.05,
        format!("asymptotic slope {slope:.3} (T=19→20)"),
    );
    // θ = 5 dB: infinite for T ≤ 7, finite at T = 8 ≈ 17.2 ± 10%
    for t in 4..=7u32 {
        let rep = paoi::analyze_tt(&reference_network(5.0), t, &an).unwrap();
        gate.check(
            rep.report.overall.is_infinite(),
            format!("theta=5dB T={t}: expected infinite, got {:.3}", rep.report.overall),
        );
    }
    let p8 = paoi::analyze_tt(&reference_network(5.0), 8, &an).unwrap().report.overall;
    println!("  theta=5dB T=8: PAoI = {p8:.3}");
    gate.check(p8.is_finite(), format!("theta=5dB T=8 finite: got {p8}"));
    gate.check(
        (p8 - 17.2).abs() <= 1.72,
        format!("PAoI(theta=5dB, T=8) = {p8:.3}, reference 17.2±10% (reference data internally inconsistent; model+simulator agree on the computed value)"),
    );
    gate.finish();
}

#[test]
fn criterion_07_et_paoi_reference_sweep() {
    let mut gate = Gate::new(7, "ET PAoI sweep reference values");
    let an = analysis();
    let p005 = paoi::analyze_et(&reference_network(0.0), 0.05, &an).unwrap().report.overall;
    println!("  theta=0dB a=0.05: PAoI = {p005:.3}");
    gate.check(
        (p005 - 21.1).abs() <= 2.11,
        format!("PAoI(a=0.05) = {p005:.3}, reference 21.1±10%"),
    );
    // finite through α = 0.35, infinite at 0.37
    let mut a = 0.05;
    while a <= 0.351 {
        let p = paoi::analyze_et(&reference_network(0.0), a, &an).unwrap().report.overall;
        gate.check(p.is_finite(), format!("theta=0dB a={a:.2}: expected finite, got {p}"));
        a += 0.02;
    }
    let p037 = paoi::analyze_et(&reference_network(0.0), 0.37, &an).unwrap().report.overall;
    gate.check(p037.is_infinite(), format!("theta=0dB a=0.37: expected infinite, got {p037:.3}"));
    // θ = −5 dB: stability boundary between 0.61 and 0.63
    let p061 = paoi::analyze_et(&reference_network(-5.0), 0.61, &an).unwrap().report.overall;
    let p063 = paoi::analyze_et(&reference_network(-5.0), 0.63, &an).unwrap().report.overall;
    println!("  theta=-5dB a=0.61: {p061:.3}, a=0.63: {p063:.3}");
    gate.check(
        p061.is_finite() && p063.is_infinite(),
        format!("theta=-5dB boundary: PAoI(0.61)={p061:.3} PAoI(0.63)={p063:.3}"),
    );
    gate.finish();
}

#[test]
fn criterion_08_et_vs_tt_matched_loads() {
    let mut gate = Gate::new(8, "ET-over-TT at matched loads");
    let an = analysis();
    for &theta_db in &[-5.0, 0.0, 5.0] {
        for &t in &[5u32, 10, 15] {
            let net = reference_network(theta_db);
            let ptt = paoi::analyze_tt(&net, t, &an).unwrap().report.overall;
            let pet = paoi::analyze_et(&net, 1.0 / t as f64, &an).unwrap().report.overall;
            let ok = pet <= ptt || (pet.is_infinite() && ptt.is_infinite());
            println!(
                "  theta={theta_db:+}dB T={t}: TT {ptt:.4} vs ET {pet:.4} -> {}",
                if ok { "ET<=TT" } else { "VIOLATION" }
            );
            gate.check(
                ok,
                format!(
                    "theta={theta_db}dB T={t}: ET {pet:.4} > TT {ptt:.4} (light-load deterministic arrivals queue shorter than Bernoulli; the uniform ET advantage in the reference data is not reproducible from the model)"
                ),
            );
        }
    }
    gate.finish();
}

#[test]
fn criterion_09_frontier_shapes() {
    let mut gate = Gate::new(9, "stability frontier shapes");
    let mut an = analysis();
    an.n_classes = 5;
    let net = reference_network(0.0);
    // ET: per-class maximal stable α strictly nonincreasing in θ
    let thetas = [-5.0, 0.0, 5.0, 8.0];
    let alphas: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();
    let fe = paoi::stability_frontier_et(&net, &thetas, &alphas, &an);
    for class in 0..an.n_classes {
        for ti in 1..thetas.len() {
            let prev = fe.frontier[class][ti - 1].unwrap_or(0.0);
            let cur = fe.frontier[class][ti].unwrap_or(0.0);
            gate.check(
                cur <= prev,
                format!("ET class {} frontier rises with theta: {prev} -> {cur}", class + 1),
            );
        }
        println!(
            "  ET class {}: alpha* = {:?}",
            class + 1,
            fe.frontier[class]
                .iter()
                .map(|v| v.unwrap_or(f64::NAN))
                .collect::<Vec<_>>()
        );
    }
    // higher-index class dominates lower-index stable region
    for class in 1..an.n_classes {
        for ti in 0..thetas.len() {
            let lo = fe.frontier[class - 1][ti].unwrap_or(0.0);
            let hi = fe.frontier[class][ti].unwrap_or(0.0);
            gate.check(
                hi >= lo,
                format!("ET class {} does not dominate class {} at theta {}", class + 1, class, thetas[ti]),
            );
        }
    }
    // TT: per-class minimal stable T nondecreasing in θ; dominance likewise
    let duty: Vec<u32> = (3..=22).collect();
    let ft = paoi::stability_frontier_tt(&net, &thetas, &duty, &an);
    for class in 0..an.n_classes {
        for ti in 1..thetas.len() {
            let prev = ft.frontier[class][ti - 1].unwrap_or(f64::INFINITY);
            let cur = ft.frontier[class][ti].unwrap_or(f64::INFINITY);
            gate.check(
                cur >= prev,
                format!("TT class {} frontier falls with theta: {prev} -> {cur}", class + 1),
            );
        }
        println!(
            "  TT class {}: T* = {:?}",
            class + 1,
            ft.frontier[class]
                .iter()
                .map(|v| v.unwrap_or(f64::NAN))
                .collect::<Vec<_>>()
        );
    }
    for class in 1..an.n_classes {
        for ti in 0..thetas.len() {
            let lo = ft.frontier[class - 1][ti].unwrap_or(f64::INFINITY);
            let hi = ft.frontier[class][ti].unwrap_or(f64::INFINITY);
            gate.check(
                hi <= lo,
                format!("TT class {} does not dominate class {} at theta {}", class + 1, class, thetas[ti]),
            );
        }
    }
    gate.finish();
}

#[test]
fn criterion_10_simulator_determinism() {
    // CLI byte-level determinism is exercised in the CLI crate's tests;
    // here: identical seeds and configs give bit-identical pooled metrics.
    let mut gate = Gate::new(10, "determinism of seeded runs");
    let traffic = TrafficModel::Et { arrival_prob: 0.125 };
    let cfg = reference_config(
        traffic,
        SimParams {
            area_side: 6.0,
            seed: 31337,
            n_realizations: 4,
            max_slots: 20_000,
            slots_after_warmup: 800,
        },
    );
    let a = sim::run_pooled(&cfg).unwrap();
    let b = sim::run_pooled(&cfg).unwrap();
    gate.check(a == b, "pooled stats differ between identical runs".into());
    gate.check(
        a.device_ratios
            .iter()
            .zip(&b.device_ratios)
            .all(|(x, y)| x.to_bits() == y.to_bits()),
        "device ratios not bit-identical".into(),
    );
    gate.finish();
}
