//! Configuration: built-in defaults, TOML config files, and the resolved run
//! manifest.
//!
//! Precedence is CLI flag > config file > built-in default. The built-in
//! defaults are the reference parameter set used throughout the tests and
//! examples: D = 4.3e-10 m²/s, r = 5e-7 m, a_rx = 5e-8 m, v1 = v2 = 3e-3 m/s,
//! M = 3, L = 5, β = 1.5, T = 1, L1 = 1, L2 = 3, λ = 2, A = 10⁴. The external
//! interference η is not pinned by the physical setup; the default η = 1.0 is
//! a documented choice and every output embeds the value used.
//!
//! Every section and field may be omitted from a config file; omitted fields
//! take their defaults. The resolved configuration (all defaults
//! materialized) round-trips losslessly through TOML inside [`RunManifest`].

use crate::channel::ChannelParams;
use crate::Error;
use serde::{Deserialize, Serialize};

/// Equalizer/detector structure parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EqualizerConfig {
    /// Half-window of the centered linear equalizer, in symbols.
    pub t: usize,
    /// DFE feedforward look-ahead, in symbols (window spans k..k+L1).
    pub l1: usize,
    /// DFE feedback taps.
    pub l2: usize,
    /// DFSD trellis memory, 1 ≤ λ ≤ L.
    pub lambda: usize,
    /// Threshold for symbol-by-symbol detection.
    pub gamma: f64,
}

impl Default for EqualizerConfig {
    fn default() -> Self {
        EqualizerConfig { t: 1, l1: 1, l2: 3, lambda: 2, gamma: 0.5 }
    }
}

/// Monte Carlo experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSettings {
    /// Schemes to run; any of linear-fse, dfe, symbol-rate, matched-filter,
    /// mlsd, dfsd.
    pub schemes: Vec<String>,
    /// Release counts A to sweep.
    pub a_values: Vec<f64>,
    /// Transmitted bits per (scheme, A) point; rounded up to whole frames.
    pub target_bits: u64,
    /// Master seed for the per-frame random streams.
    pub seed: u64,
    /// Worker threads; results are independent of this value.
    pub workers: usize,
    /// Trailing observation rows per frame; default max(T, L1) so every
    /// receiver's look-ahead is populated.
    pub t_extra: Option<usize>,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            schemes: vec![
                "linear-fse".into(),
                "dfe".into(),
                "symbol-rate".into(),
                "matched-filter".into(),
                "mlsd".into(),
                "dfsd".into(),
            ],
            a_values: vec![1e4],
            target_bits: 10_000_000,
            seed: 1,
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            t_extra: None,
        }
    }
}

/// Full resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Config {
    pub channel: ChannelParams,
    pub equalizer: EqualizerConfig,
    pub experiment: ExperimentSettings,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            d: 4.3e-10,
            r: 5e-7,
            a_rx: 5e-8,
            v1: 3e-3,
            v2: 3e-3,
            a: 1e4,
            eta: 1.0,
            m: 3,
            l: 5,
            beta: 1.5,
            k: 1000,
        }
    }
}

/// The built-in default parameter set (see module docs).
pub fn sec_v_defaults() -> Config {
    Config::default()
}

impl Config {
    /// Parses a TOML config; missing fields take the built-in defaults.
    pub fn from_toml(text: &str) -> Result<Config, Error> {
        let cfg: Config = toml::from_str(text)
            .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.channel.validate()?;
        let eq = &self.equalizer;
        if eq.lambda < 1 || eq.lambda > self.channel.l {
            return Err(Error::Config(format!(
                "lambda must be in 1..=L (= {}), got {}",
                self.channel.l, eq.lambda
            )));
        }
        if !eq.gamma.is_finite() {
            return Err(Error::Config(format!("gamma must be finite, got {}", eq.gamma)));
        }
        let ex = &self.experiment;
        if ex.target_bits < self.channel.k as u64 {
            return Err(Error::Config(format!(
                "target_bits = {} must be at least one frame (K = {})",
                ex.target_bits, self.channel.k
            )));
        }
        if ex.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if ex.a_values.is_empty() {
            return Err(Error::Config("a_values must not be empty".into()));
        }
        if ex.a_values.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::Config("a_values must be finite and >= 0".into()));
        }
        for s in &ex.schemes {
            crate::montecarlo::Scheme::parse(s)?;
        }
        Ok(())
    }

    /// Trailing observation rows per frame: configured value, or max(T, L1).
    pub fn t_extra(&self) -> usize {
        self.experiment.t_extra.unwrap_or(self.equalizer.t.max(self.equalizer.l1))
    }
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

/// The fully resolved state of a run: every default materialized, plus
/// artifact version, timestamp (Unix seconds), and master seed. Echoed before
/// any computation so results are attributable; round-trips through TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub timestamp: u64,
    pub seed: u64,
    pub config: Config,
}

impl RunManifest {
    pub fn new(config: Config) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
            seed: config.experiment.seed,
            config,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(format!("manifest parse error: {e}")))
    }
}

// ---------------------------------------------------------------------------
