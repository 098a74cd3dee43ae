//! Flat `key = value` simulation configuration.
//!
//! One pair per line, `#` starts a comment, unknown keys are rejected, and
//! every missing key takes its documented default. The full key list lives
//! in the README; defaults reproduce the reference scenario (500 m macro
//! cell, 10 m fog cells, 41 dBm F-AP budget, 5 MHz over 50 subchannels,
//! -174 dBm/Hz noise).

use crate::caching::CacheConfig;
use crate::channel::{dbm_to_watts, ChannelConfig, FadingKind, SpectrumConfig};
use crate::power_game::UtilityParams;
use crate::topology::GeometryConfig;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config value for `{field}`: {message}")]
    Validation { field: String, message: String },
}

/// Multiple-access scheme for a run. OFDMA is the degenerate matching with
/// one F-UE per subchannel (`q = q_ue = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scheme {
    Noma,
    Ofdma,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Noma => write!(f, "noma"),
            Scheme::Ofdma => write!(f, "ofdma"),
        }
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "noma" => Ok(Scheme::Noma),
            "ofdma" => Ok(Scheme::Ofdma),
            other => Err(format!("unknown scheme `{other}` (expected noma|ofdma)")),
        }
    }
}

/// One scheme variant to run in a sweep; `q` is ignored for OFDMA.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeVariant {
    pub scheme: Scheme,
    pub q: usize,
}

impl fmt::Display for SchemeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.scheme {
            Scheme::Noma => write!(f, "noma:{}", self.q),
            Scheme::Ofdma => write!(f, "ofdma"),
        }
    }
}

impl FromStr for SchemeVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ofdma" {
            return Ok(SchemeVariant { scheme: Scheme::Ofdma, q: 1 });
        }
        if let Some(q) = s.strip_prefix("noma:") {
            let q: usize = q
                .parse()
                .map_err(|_| format!("bad quota in scheme variant `{s}`"))?;
            return Ok(SchemeVariant { scheme: Scheme::Noma, q });
        }
        if s == "noma" {
            return Err("noma variant needs a quota, e.g. `noma:2`".to_string());
        }
        Err(format!("unknown scheme variant `{s}`"))
    }
}

/// Swept parameter; the value list is applied one entry at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    NFaps,
    NFuesPerFap,
    NMues,
    Q,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::NFaps => "n_faps",
            SweepParam::NFuesPerFap => "n_fues_per_fap",
            SweepParam::NMues => "n_mues",
            SweepParam::Q => "q",
        }
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "n_faps" => Ok(SweepParam::NFaps),
            "n_fues_per_fap" => Ok(SweepParam::NFuesPerFap),
            "n_mues" => Ok(SweepParam::NMues),
            "q" => Ok(SweepParam::Q),
            other => Err(format!(
                "unsupported sweep_param `{other}` (expected n_faps|n_fues_per_fap|n_mues|q)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<u64>,
}

/// Complete configuration of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub geometry: GeometryConfig,
    pub spectrum: SpectrumConfig,
    pub channel: ChannelConfig,
    pub cache: CacheConfig,
    pub game: UtilityParams,
    /// Per-subchannel quota under NOMA.
    pub q: usize,
    /// Per-F-UE quota under NOMA.
    pub q_ue: usize,
    pub scheme: Scheme,
    /// Second matching pass reusing game-derived power levels.
    pub two_pass_matching: bool,
    pub n_drops: usize,
    pub base_seed: u64,
    pub sweep: Option<Sweep>,
    /// Scheme variants compared in a sweep; empty means "just the
    /// configured scheme/q".
    pub sweep_schemes: Vec<SchemeVariant>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryConfig::default(),
            spectrum: SpectrumConfig::default(),
            channel: ChannelConfig::default(),
            cache: CacheConfig::default(),
            game: UtilityParams::default(),
            q: 2,
            q_ue: 2,
            scheme: Scheme::Noma,
            two_pass_matching: false,
            n_drops: 100,
            base_seed: 1,
            sweep: None,
            sweep_schemes: Vec::new(),
        }
    }
}

impl SimConfig {
    /// Scheme variants a sweep actually runs.
    pub fn effective_variants(&self) -> Vec<SchemeVariant> {
        if self.sweep_schemes.is_empty() {
            vec![SchemeVariant {
                scheme: self.scheme,
                q: self.q,
            }]
        } else {
            self.sweep_schemes.clone()
        }
    }

    /// Field-level invariant checks across all embedded configs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn fail(field: &str, message: impl Into<String>) -> Result<(), ConfigError> {
            Err(ConfigError::Validation {
                field: field.to_string(),
                message: message.into(),
            })
        }

        if let Err(e) = self.geometry.validate() {
            if let crate::topology::TopologyError::InvalidConfig { field, message } = e {
                return fail(field, message);
            }
        }
        if !(self.spectrum.total_bandwidth_hz > 0.0) {
            return fail("bandwidth_hz", "must be positive");
        }
        if self.spectrum.n_subchannels < 1 {
            return fail("n_subchannels", "must be at least 1");
        }
        if !(self.channel.min_link_distance_m > 0.0) {
            return fail("min_link_distance_m", "must be positive");
        }
        if self.channel.shadowing_sigma_db < 0.0 {
            return fail("shadowing_sigma_db", "must be nonnegative");
        }
        if self.cache.n_contents < 1 {
            return fail("n_contents", "must be at least 1");
        }
        if self.cache.cache_slots_per_fap > self.cache.n_contents {
            return fail(
                "cache_slots_per_fap",
                format!(
                    "exceeds n_contents ({} > {})",
                    self.cache.cache_slots_per_fap, self.cache.n_contents
                ),
            );
        }
        if self.cache.zipf_exponent < 0.0 {
            return fail("zipf_exponent", "must be nonnegative");
        }
        if self.cache.reward_coefficient < 0.0 {
            return fail("beta", "must be nonnegative");
        }
        if self.game.lambda < 0.0 {
            return fail("lambda", "must be nonnegative");
        }
        if !(self.game.p_min_w > 0.0) {
            return fail("p_min_w", "must be positive");
        }
        if self.game.p_min_w > self.game.p_max_per_pair_w {
            return fail("p_min_w", "must not exceed p_max_per_pair_w");
        }
        if !(self.game.p_max_fap_w > 0.0) {
            return fail("p_max_fap_dbm", "must be a positive power");
        }
        if !(self.game.epsilon_converge_w > 0.0) {
            return fail("epsilon_converge_w", "must be positive");
        }
        if self.game.max_inner_iters < 1 {
            return fail("max_inner_iters", "must be at least 1");
        }
        if self.game.max_outer_iters < 1 {
            return fail("max_outer_iters", "must be at least 1");
        }
        if !(self.game.lambda_growth > 1.0) {
            return fail("lambda_growth", "must exceed 1");
        }
        if self.q < 1 {
            return fail("q", "quota must be at least 1");
        }
        if self.q_ue < 1 {
            return fail("q_ue", "quota must be at least 1");
        }
        for v in &self.sweep_schemes {
            if v.scheme == Scheme::Noma && v.q < 1 {
                return fail("sweep_schemes", "noma quota must be at least 1");
            }
        }
        if self.n_drops < 1 {
            return fail("n_drops", "must be at least 1");
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return fail("sweep_values", "sweep requires at least one value");
            }
            if sweep.param == SweepParam::Q && sweep.values.iter().any(|&v| v < 1) {
                return fail("sweep_values", "q values must be at least 1");
            }
        }
        Ok(())
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Parse {
        line,
        message: format!("cannot parse `{value}` as a value for `{key}`"),
    })
}

/// Applies one `key = value` pair to the config under construction.
/// Power-style keys are given in dBm and converted here.
fn apply_key(cfg: &mut SimConfig, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
    // Keys settable after parse-time conversion.
    match key {
        // geometry
        "macro_radius" => cfg.geometry.macro_radius = parse_num(key, value, line)?,
        "fap_radius" => cfg.geometry.fap_radius = parse_num(key, value, line)?,
        "d_min_mrrh_fap" => cfg.geometry.d_min_mrrh_fap = parse_num(key, value, line)?,
        "d_min_mrrh_mue" => cfg.geometry.d_min_mrrh_mue = parse_num(key, value, line)?,
        "d_min_fap_fap" => cfg.geometry.d_min_fap_fap = parse_num(key, value, line)?,
        "n_faps" => cfg.geometry.n_faps = parse_num(key, value, line)?,
        "n_fues_per_fap" => cfg.geometry.n_fues_per_fap = parse_num(key, value, line)?,
        "n_mues" => cfg.geometry.n_mues = parse_num(key, value, line)?,

        // spectrum
        "bandwidth_hz" => cfg.spectrum.total_bandwidth_hz = parse_num(key, value, line)?,
        "n_subchannels" => cfg.spectrum.n_subchannels = parse_num(key, value, line)?,
        "noise_psd_dbm_hz" => cfg.spectrum.noise_psd_dbm_hz = parse_num(key, value, line)?,

        // channel
        "macro_pl_intercept_db" => {
            cfg.channel.path_loss.macro_intercept_db = parse_num(key, value, line)?
        }
        "macro_pl_slope_db" => cfg.channel.path_loss.macro_slope_db = parse_num(key, value, line)?,
        "fog_pl_intercept_db" => {
            cfg.channel.path_loss.fog_intercept_db = parse_num(key, value, line)?
        }
        "fog_pl_slope_db" => cfg.channel.path_loss.fog_slope_db = parse_num(key, value, line)?,
        "fading" => {
            cfg.channel.fading = match value {
                "rayleigh" => FadingKind::Rayleigh,
                "none" => FadingKind::None,
                other => {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("unknown fading `{other}` (expected rayleigh|none)"),
                    })
                }
            }
        }
        "shadowing_sigma_db" => cfg.channel.shadowing_sigma_db = parse_num(key, value, line)?,
        "mrrh_power_dbm" => cfg.channel.mrrh_power_dbm = parse_num(key, value, line)?,
        "min_link_distance_m" => cfg.channel.min_link_distance_m = parse_num(key, value, line)?,

        // caching
        "n_contents" => cfg.cache.n_contents = parse_num(key, value, line)?,
        "zipf_exponent" => cfg.cache.zipf_exponent = parse_num(key, value, line)?,
        "cache_slots_per_fap" => cfg.cache.cache_slots_per_fap = parse_num(key, value, line)?,
        "beta" => {
            let beta: f64 = parse_num(key, value, line)?;
            cfg.cache.reward_coefficient = beta;
            cfg.game.beta = beta;
        }
        "fue_zipf_skew" => cfg.cache.fue_zipf_skew = parse_num(key, value, line)?,

        // power game
        "lambda" => cfg.game.lambda = parse_num(key, value, line)?,
        "i_th_dbm" => {
            cfg.game.interference_threshold_w = dbm_to_watts(parse_num(key, value, line)?)
        }
        "p_min_w" => cfg.game.p_min_w = parse_num(key, value, line)?,
        "p_max_per_pair_w" => cfg.game.p_max_per_pair_w = parse_num(key, value, line)?,
        "p_max_fap_dbm" => {
            let dbm: f64 = parse_num(key, value, line)?;
            let old_budget = cfg.game.p_max_fap_w;
            cfg.game.p_max_fap_w = dbm_to_watts(dbm);
            // Keep the derived per-pair default in step unless overridden.
            if cfg.game.p_max_per_pair_w == old_budget / 4.0 {
                cfg.game.p_max_per_pair_w = cfg.game.p_max_fap_w / 4.0;
            }
        }
        "epsilon_converge_w" => cfg.game.epsilon_converge_w = parse_num(key, value, line)?,
        "max_inner_iters" => cfg.game.max_inner_iters = parse_num(key, value, line)?,
        "max_outer_iters" => cfg.game.max_outer_iters = parse_num(key, value, line)?,
        "lambda_growth" => cfg.game.lambda_growth = parse_num(key, value, line)?,

        // matching / scheme
        "q" => cfg.q = parse_num(key, value, line)?,
        "q_ue" => cfg.q_ue = parse_num(key, value, line)?,
        "scheme" => {
            cfg.scheme = value.parse().map_err(|e| ConfigError::Parse { line, message: e })?
        }
        "two_pass_matching" => {
            cfg.two_pass_matching = match value {
                "true" | "1" => true,
                "false" | "0" => false,
                other => {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("cannot parse `{other}` as a boolean"),
                    })
                }
            }
        }

        // harness
        "n_drops" => cfg.n_drops = parse_num(key, value, line)?,
        "base_seed" => cfg.base_seed = parse_num(key, value, line)?,
        "sweep_param" => {
            let param: SweepParam =
                value.parse().map_err(|e| ConfigError::Parse { line, message: e })?;
            match &mut cfg.sweep {
                Some(sweep) => sweep.param = param,
                None => cfg.sweep = Some(Sweep { param, values: Vec::new() }),
            }
        }
        "sweep_values" => {
            let values = value
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(|v| parse_num::<u64>(key, v, line))
                .collect::<Result<Vec<_>, _>>()?;
            match &mut cfg.sweep {
                Some(sweep) => sweep.values = values,
                None => {
                    cfg.sweep = Some(Sweep {
                        param: SweepParam::NFuesPerFap,
                        values,
                    })
                }
            }
        }
        "sweep_schemes" => {
            cfg.sweep_schemes = value
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(|v| {
                    v.parse::<SchemeVariant>()
                        .map_err(|e| ConfigError::Parse { line, message: e })
                })
                .collect::<Result<Vec<_>, _>>()?;
        }

        other => {
            return Err(ConfigError::Parse {
                line,
                message: format!("unknown config key `{other}`"),
            })
        }
    }
    Ok(())
}

/// Parses config text; missing keys keep their defaults.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let mut cfg = SimConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        apply_key(&mut cfg, key.trim(), value.trim(), line_no)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Loads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}
