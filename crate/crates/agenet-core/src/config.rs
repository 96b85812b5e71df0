//! Configuration types and validation.
//!
//! All physical quantities are converted to internal units at this boundary:
//! km for distances, watts for power, linear ratios for SIR thresholds. The
//! analytical formulas downstream are unit-coherent only after conversion.
//!
//! The config file is a flat key/value format with `[network]`, `[traffic]`,
//! `[analysis]` and `[sim]` sections. dB/dBm inputs use the suffix keys
//! `theta_db` and `rho_dbm`.

use crate::error::ConfigError;
use std::collections::BTreeMap;
use std::path::Path;

/// Physical-layer parameters, in internal units (km, watts, linear SIR).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    /// BS intensity λ in BS per km².
    pub bs_intensity: f64,
    /// Path-loss exponent η (> 2, unbounded path-loss model).
    pub pathloss_exponent: f64,
    /// Fractional power-control compensation ε ∈ [0, 1].
    pub power_control_epsilon: f64,
    /// Power-control parameter ρ in watts.
    pub power_control_rho: f64,
    /// SIR detection threshold θ, linear.
    pub sir_threshold: f64,
}

/// Packet generation model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrafficModel {
    /// Time-triggered: one packet every `duty_cycle` slots, random offset.
    Tt { duty_cycle: u32 },
    /// Event-triggered: Bernoulli arrivals with per-slot probability.
    Et { arrival_prob: f64 },
}

impl TrafficModel {
    /// Mean inter-arrival time in slots.
    pub fn inter_arrival_mean(&self) -> f64 {
        match *self {
            TrafficModel::Tt { duty_cycle } => duty_cycle as f64,
            TrafficModel::Et { arrival_prob } => 1.0 / arrival_prob,
        }
    }
}

/// Knobs of the analytical pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisParams {
    /// Number of QoS classes N.
    pub n_classes: usize,
    /// Fixed-point stopping tolerance φ on the load factor.
    pub fixed_point_tol: f64,
    /// Fixed-point iteration cap.
    pub max_iters: usize,
    /// Relative tolerance for the moment quadrature.
    pub quad_rel_tol: f64,
    /// Truncation criterion for waiting-time pmfs: residual tail mass.
    pub wait_pmf_tail_mass: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            n_classes: 10,
            fixed_point_tol: 1e-4,
            max_iters: 200,
            quad_rel_tol: 1e-9,
            wait_pmf_tail_mass: 1e-8,
        }
    }
}

/// Monte Carlo simulator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    /// Side of the square torus, km.
    pub area_side: f64,
    /// Master seed; realizations derive independent substreams.
    pub seed: u64,
    /// Number of independent spatial realizations.
    pub n_realizations: usize,
    /// Hard cap on warm-up slots before `WarmupTimeout`.
    pub max_slots: usize,
    /// Measured slots collected after warm-up.
    pub slots_after_warmup: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            area_side: 10.0,
            seed: 1,
            n_realizations: 20,
            max_slots: 20_000,
            slots_after_warmup: 4_000,
        }
    }
}

/// A fully validated configuration; immutable after construction and safe to
/// share read-only across workers.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    pub network: NetworkParams,
    pub traffic: TrafficModel,
    pub analysis: AnalysisParams,
    pub sim: SimParams,
    /// Non-fatal feasibility warnings (e.g. too few expected BSs).
    pub warnings: Vec<String>,
}

/// Raw parsed parameters before validation; `None` means "use default".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub bs_intensity: Option<f64>,
    pub pathloss_exponent: Option<f64>,
    pub power_control_epsilon: Option<f64>,
    /// Watts, if given directly.
    pub power_control_rho: Option<f64>,
    /// dBm, if given via the suffix key.
    pub rho_dbm: Option<f64>,
    /// Linear, if given directly.
    pub sir_threshold: Option<f64>,
    /// dB, if given via the suffix key.
    pub theta_db: Option<f64>,
    pub duty_cycle: Option<u32>,
    pub arrival_prob: Option<f64>,
    pub n_classes: Option<usize>,
    pub fixed_point_tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub quad_rel_tol: Option<f64>,
    pub wait_pmf_tail_mass: Option<f64>,
    pub area_side: Option<f64>,
    pub seed: Option<u64>,
    pub n_realizations: Option<usize>,
    pub max_slots: Option<usize>,
    pub slots_after_warmup: Option<usize>,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Read and parse a config file.
pub fn load_config<P: AsRef<Path>>(path: P) -> Result<RawConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Parse the flat sectioned key/value format.
pub fn parse_config(text: &str) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig::default();
    let mut section = String::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(ConfigError::Parse {
                line: lineno,
                detail: format!("unterminated section header `{line}`"),
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Parse {
            line: lineno,
            detail: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        set_key(&mut raw, &section, key, value).map_err(|detail| ConfigError::Parse {
            line: lineno,
            detail,
        })?;
    }
    Ok(raw)
}

fn set_key(raw: &mut RawConfig, section: &str, key: &str, value: &str) -> Result<(), String> {
    fn f(v: &str) -> Result<f64, String> {
        v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"))
    }
    fn u(v: &str) -> Result<u64, String> {
        v.parse::<u64>().map_err(|_| format!("`{v}` is not an integer"))
    }
    match (section, key) {
        ("network", "bs_intensity") => raw.bs_intensity = Some(f(value)?),
        ("network", "pathloss_exponent") => raw.pathloss_exponent = Some(f(value)?),
        ("network", "power_control_epsilon") => raw.power_control_epsilon = Some(f(value)?),
        ("network", "power_control_rho") => raw.power_control_rho = Some(f(value)?),
        ("network", "rho_dbm") => raw.rho_dbm = Some(f(value)?),
        ("network", "sir_threshold") => raw.sir_threshold = Some(f(value)?),
        ("network", "theta_db") => raw.theta_db = Some(f(value)?),
        ("traffic", "duty_cycle") => raw.duty_cycle = Some(u(value)? as u32),
        ("traffic", "arrival_prob") => raw.arrival_prob = Some(f(value)?),
        ("analysis", "n_classes") => raw.n_classes = Some(u(value)? as usize),
        ("analysis", "fixed_point_tol") => raw.fixed_point_tol = Some(f(value)?),
        ("analysis", "max_iters") => raw.max_iters = Some(u(value)? as usize),
        ("analysis", "quad_rel_tol") => raw.quad_rel_tol = Some(f(value)?),
        ("analysis", "wait_pmf_tail_mass") => raw.wait_pmf_tail_mass = Some(f(value)?),
        ("sim", "area_side") => raw.area_side = Some(f(value)?),
        ("sim", "seed") => raw.seed = Some(u(value)?),
        ("sim", "n_realizations") => raw.n_realizations = Some(u(value)? as usize),
        ("sim", "max_slots") => raw.max_slots = Some(u(value)? as usize),
        ("sim", "slots_after_warmup") => raw.slots_after_warmup = Some(u(value)? as usize),
        _ => return Err(format!("unknown key `{key}` in section `[{section}]`")),
    }
    Ok(())
}

impl RawConfig {
    /// Validate and convert units. Every violated invariant is reported.
    ///
    /// Unset keys take defaults mirroring the reference numerical setup
    /// (η = 4, ρ = −90 dBm, ε = 1, λ = 1 BS/km², θ = 0 dB), so a bare config
    /// with only a traffic block reproduces it. The BS intensity for that
    /// setup is never stated in the source material; with ε = 1 the SIR
    /// statistics are scale-invariant in λ, so λ = 1 is used.
    pub fn validate(self) -> Result<ValidatedConfig, ConfigError> {
        let mut errs: Vec<ConfigError> = Vec::new();
        let mut bad = |name: &str, value: String, constraint: &str| {
            errs.push(ConfigError::InvalidParam {
                name: name.to_string(),
                value,
                constraint: constraint.to_string(),
            });
        };

        let lambda = self.bs_intensity.unwrap_or(1.0);
        if !(lambda > 0.0) || !lambda.is_finite() {
            bad("bs_intensity", format!("{lambda}"), "must be > 0");
        }
        let eta = self.pathloss_exponent.unwrap_or(4.0);
        if !(eta > 2.0) || !eta.is_finite() {
            bad("pathloss_exponent", format!("{eta}"), "must be > 2");
        }
        let eps = self.power_control_epsilon.unwrap_or(1.0);
        if !(0.0..=1.0).contains(&eps) {
            bad("power_control_epsilon", format!("{eps}"), "must be in [0, 1]");
        }
        let rho = match (self.power_control_rho, self.rho_dbm) {
            (Some(w), _) => w,
            (None, Some(dbm)) => dbm_to_watts(dbm),
            (None, None) => dbm_to_watts(-90.0),
        };
        if !(rho > 0.0) || !rho.is_finite() {
            bad("power_control_rho", format!("{rho}"), "must be > 0 W");
        }
        let theta = match (self.sir_threshold, self.theta_db) {
            (Some(lin), _) => lin,
            (None, Some(db)) => db_to_linear(db),
            (None, None) => 1.0,
        };
        if !(theta > 0.0) || !theta.is_finite() {
            bad("sir_threshold", format!("{theta}"), "must be > 0 (linear)");
        }

        let traffic = match (self.duty_cycle, self.arrival_prob) {
            (Some(t), None) => {
                if t < 2 {
                    bad("duty_cycle", format!("{t}"), "must be >= 2 slots");
                }
                Some(TrafficModel::Tt { duty_cycle: t })
            }
            (None, Some(a)) => {
                if !(a > 0.0 && a <= 1.0) {
                    bad("arrival_prob", format!("{a}"), "must be in (0, 1]");
                }
                Some(TrafficModel::Et { arrival_prob: a })
            }
            (Some(_), Some(_)) => {
                bad(
                    "traffic",
                    "duty_cycle + arrival_prob".to_string(),
                    "exactly one of duty_cycle / arrival_prob",
                );
                None
            }
            (None, None) => None,
        };

        let defaults = AnalysisParams::default();
        let analysis = AnalysisParams {
            n_classes: self.n_classes.unwrap_or(defaults.n_classes),
            fixed_point_tol: self.fixed_point_tol.unwrap_or(defaults.fixed_point_tol),
            max_iters: self.max_iters.unwrap_or(defaults.max_iters),
            quad_rel_tol: self.quad_rel_tol.unwrap_or(defaults.quad_rel_tol),
            wait_pmf_tail_mass: self.wait_pmf_tail_mass.unwrap_or(defaults.wait_pmf_tail_mass),
        };
        if analysis.n_classes < 1 {
            bad("n_classes", format!("{}", analysis.n_classes), "must be >= 1");
        }
        for (name, v) in [
            ("fixed_point_tol", analysis.fixed_point_tol),
            ("quad_rel_tol", analysis.quad_rel_tol),
            ("wait_pmf_tail_mass", analysis.wait_pmf_tail_mass),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                bad(name, format!("{v}"), "must be > 0");
            }
        }

        let sdef = SimParams::default();
        let sim = SimParams {
            area_side: self.area_side.unwrap_or(sdef.area_side),
            seed: self.seed.unwrap_or(sdef.seed),
            n_realizations: self.n_realizations.unwrap_or(sdef.n_realizations),
            max_slots: self.max_slots.unwrap_or(sdef.max_slots),
            slots_after_warmup: self.slots_after_warmup.unwrap_or(sdef.slots_after_warmup),
        };
        if !(sim.area_side > 0.0) {
            bad("area_side", format!("{}", sim.area_side), "must be > 0 km");
        }

        let traffic = match traffic {
            Some(t) => t,
            None => {
                if errs.is_empty() {
                    return Err(ConfigError::MissingTraffic);
                }
                errs.push(ConfigError::MissingTraffic);
                return Err(ConfigError::Invalid(errs));
            }
        };
        match errs.len() {
            0 => {}
            1 => return Err(errs.remove(0)),
            _ => return Err(ConfigError::Invalid(errs)),
        }

        let mut warnings = Vec::new();
        let expected_bs = lambda * sim.area_side * sim.area_side;
        if expected_bs < 10.0 {
            warnings.push(format!(
                "expected BS count {:.1} < 10; spatial statistics will be noisy",
                expected_bs
            ));
        }

        Ok(ValidatedConfig {
            network: NetworkParams {
                bs_intensity: lambda,
                pathloss_exponent: eta,
                power_control_epsilon: eps,
                power_control_rho: rho,
                sir_threshold: theta,
            },
            traffic,
            analysis,
            sim,
            warnings,
        })
    }
}

impl ValidatedConfig {
    /// Serialize back to the config format; parsing the result reproduces
    /// this configuration exactly (f64 round-trip via shortest decimal).
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        s.push_str("[network]\n");
        s.push_str(&format!("bs_intensity = {}\n", self.network.bs_intensity));
        s.push_str(&format!("pathloss_exponent = {}\n", self.network.pathloss_exponent));
        s.push_str(&format!(
            "power_control_epsilon = {}\n",
            self.network.power_control_epsilon
        ));
        s.push_str(&format!("power_control_rho = {}\n", self.network.power_control_rho));
        s.push_str(&format!("sir_threshold = {}\n", self.network.sir_threshold));
        s.push_str("\n[traffic]\n");
        match self.traffic {
            TrafficModel::Tt { duty_cycle } => s.push_str(&format!("duty_cycle = {duty_cycle}\n")),
            TrafficModel::Et { arrival_prob } => {
                s.push_str(&format!("arrival_prob = {arrival_prob}\n"))
            }
        }
        s.push_str("\n[analysis]\n");
        s.push_str(&format!("n_classes = {}\n", self.analysis.n_classes));
        s.push_str(&format!("fixed_point_tol = {}\n", self.analysis.fixed_point_tol));
        s.push_str(&format!("max_iters = {}\n", self.analysis.max_iters));
        s.push_str(&format!("quad_rel_tol = {}\n", self.analysis.quad_rel_tol));
        s.push_str(&format!(
            "wait_pmf_tail_mass = {}\n",
            self.analysis.wait_pmf_tail_mass
        ));
        s.push_str("\n[sim]\n");
        s.push_str(&format!("area_side = {}\n", self.sim.area_side));
        s.push_str(&format!("seed = {}\n", self.sim.seed));
        s.push_str(&format!("n_realizations = {}\n", self.sim.n_realizations));
        s.push_str(&format!("max_slots = {}\n", self.sim.max_slots));
        s.push_str(&format!("slots_after_warmup = {}\n", self.sim.slots_after_warmup));
        s
    }

    /// FNV-1a hash of the canonical serialization, for output provenance.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.to_config_string().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// Convenience: an ordered map of the flattened key/value view (used by the
/// CLI to echo effective settings).
pub fn flatten(cfg: &ValidatedConfig) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    for line in cfg.to_config_string().lines() {
        if let Some((k, v)) = line.split_once('=') {
            m.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_raw() -> RawConfig {
        RawConfig {
            pathloss_exponent: Some(4.0),
            power_control_epsilon: Some(1.0),
            rho_dbm: Some(-90.0),
            theta_db: Some(0.0),
            duty_cycle: Some(8),
            ..Default::default()
        }
    }

    #[test]
    fn reference_setup_validates() {
        let cfg = base_raw().validate().unwrap();
        assert_eq!(cfg.network.sir_threshold, 1.0);
        assert_eq!(cfg.network.power_control_rho, 1e-12);
        assert_eq!(cfg.network.bs_intensity, 1.0);
        assert_eq!(cfg.traffic, TrafficModel::Tt { duty_cycle: 8 });
        assert_eq!(cfg.analysis.n_classes, 10);
        assert_eq!(cfg.analysis.fixed_point_tol, 1e-4);
    }

    #[test]
    fn unit_conversions_exact() {
        assert_eq!(db_to_linear(10.0), 10.0);
        assert_eq!(dbm_to_watts(-90.0), 1e-12);
    }

    #[test]
    fn eta_boundary_rejected() {
        let mut raw = base_raw();
        raw.pathloss_exponent = Some(2.0);
        let err = raw.validate().unwrap_err();
        assert!(matches!(err, ConfigError::InvalidParam { ref name, .. } if name == "pathloss_exponent"));
    }

    #[test]
    fn empty_et_traffic_rejected() {
        let mut raw = base_raw();
        raw.duty_cycle = None;
        raw.arrival_prob = Some(0.0);
        assert!(raw.validate().is_err());
    }

    #[test]
    fn all_violations_reported() {
        let raw = RawConfig {
            pathloss_exponent: Some(1.5),
            power_control_epsilon: Some(2.0),
            duty_cycle: Some(1),
            ..Default::default()
        };
        match raw.validate().unwrap_err() {
            ConfigError::Invalid(list) => assert_eq!(list.len(), 3),
            other => panic!("expected aggregated error, got {other}"),
        }
    }

    #[test]
    fn missing_traffic_is_error() {
        let raw = RawConfig::default();
        assert!(matches!(raw.validate().unwrap_err(), ConfigError::MissingTraffic));
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let raw = parse_config(
            "[network]\nbs_intensity = 2\npathloss_exponent = 3.5\ntheta_db = 5\n[traffic]\narrival_prob = 0.125\n",
        )
        .unwrap();
        let cfg = raw.validate().unwrap();
        assert_eq!(cfg.analysis.n_classes, 10);
        assert_eq!(cfg.analysis.fixed_point_tol, 1e-4);
        assert_eq!(cfg.network.power_control_rho, 1e-12);
        assert!((cfg.network.sir_threshold - db_to_linear(5.0)).abs() < 1e-15);
    }

    #[test]
    fn parse_error_carries_line() {
        let err = parse_config("[network]\nbs_intensity\n").unwrap_err();
        match err {
            ConfigError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(parse_config("[network]\nfrequency = 2.4\n").is_err());
    }

    #[test]
    fn roundtrip_serialize_parse() {
        let cfg = base_raw().validate().unwrap();
        let text = cfg.to_config_string();
        let back = parse_config(&text).unwrap().validate().unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn small_area_warns() {
        let mut raw = base_raw();
        raw.area_side = Some(2.0);
        let cfg = raw.validate().unwrap();
        assert_eq!(cfg.warnings.len(), 1);
    }
}
