//! Experiment plans read from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{PairLimits, QBoundSpec};
use crate::channels::ChannelSpec;
use crate::detection::SdParams;
use crate::error::{Error, Result};
use crate::modulation::{Scheme, SystemConfig};
use crate::precoding::{PrecoderPolicy, SdrParams, Weighting};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    #[default]
    Ml,
    Sd,
    Zf,
    Mmse,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl OutputSpec {
    /// Explicit format, else inferred from the extension, else CSV.
    pub fn resolved_format(&self) -> OutputFormat {
        if let Some(f) = self.format {
            return f;
        }
        match self.path.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

fn default_grid() -> Vec<f64> {
    (0..=15).map(|i| -10.0 + 2.0 * f64::from(i)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentPlan {
    pub config: SystemConfig,
    pub channel: ChannelSpec,
    /// `P/σ²` in dB.
    pub snr_grid_db: Vec<f64>,
    pub trials_per_point: u64,
    /// Early-stop target per point.
    pub min_bit_errors: u64,
    pub seed: u64,
    pub detector: DetectorKind,
    /// Schemes for comparative runs; empty means `config.scheme` only.
    pub schemes: Vec<Scheme>,
    pub precoder: PrecoderPolicy,
    /// Seed of the random precoder; defaults to `seed`.
    pub precoder_seed: Option<u64>,
    pub qbound: QBoundSpec,
    pub sd: SdParams,
    pub limits: PairLimits,
    pub sdr: SdrParams,
    pub weighting: Weighting,
    /// SNR for precoder optimization; `None` optimizes at each grid point.
    pub optimize_snr_db: Option<f64>,
    /// Static channel draws averaged by the capacity sweep.
    pub channel_draws: usize,
    /// Fading draws behind the Monte Carlo capacity estimate.
    pub capacity_trials: u64,
    /// Trials evaluated in parallel before the early-stop check.
    pub batch_size: u64,
    /// Record wall-clock detection time. Off by default so outputs stay
    /// byte-identical between runs.
    pub timing: bool,
    pub output: OutputSpec,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            config: SystemConfig::default(),
            channel: ChannelSpec::default(),
            snr_grid_db: default_grid(),
            trials_per_point: 100_000,
            min_bit_errors: 200,
            seed: 0,
            detector: DetectorKind::Ml,
            schemes: Vec::new(),
            precoder: PrecoderPolicy::Random,
            precoder_seed: None,
            qbound: QBoundSpec::default(),
            sd: SdParams::default(),
            limits: PairLimits::default(),
            sdr: SdrParams::default(),
            weighting: Weighting::default(),
            optimize_snr_db: None,
            channel_draws: 1,
            capacity_trials: 2000,
            batch_size: 4096,
            timing: false,
            output: OutputSpec::default(),
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.channel.validate()?;
        self.sd.validate()?;
        self.qbound.validate()?;
        self.sdr.validate()?;
        if self.trials_per_point < 1 {
            return Err(Error::Config("trials_per_point must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.channel_draws < 1 {
            return Err(Error::Config("channel_draws must be at least 1".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Config("snr_grid_db is empty".into()));
        }
        if self.snr_grid_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("snr_grid_db has non-finite entries".into()));
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("snr_grid_db must be strictly increasing".into()));
        }
        if let Some(s) = self.optimize_snr_db {
            if !s.is_finite() {
                return Err(Error::Config("optimize_snr_db must be finite".into()));
            }
        }
        if self.precoder == PrecoderPolicy::Optimized && self.config.n_s != 1 {
            return Err(Error::Unsupported("optimized precoder needs n_s = 1".into()));
        }
        for scheme in self.scheme_list() {
            SystemConfig { scheme, ..self.config.clone() }.validate()?;
        }
        Ok(())
    }

    pub fn scheme_list(&self) -> Vec<Scheme> {
        if self.schemes.is_empty() {
            vec![self.config.scheme]
        } else {
            self.schemes.clone()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let plan: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Where [`parse_config`] reads from.
#[derive(Clone, Copy, Debug)]
pub enum ConfigSource<'a> {
    Path(&'a Path),
    /// Inline TOML.
    Toml(&'a str),
    Json(&'a str),
}

/// Reads and validates a plan; `.json` files are JSON, anything else TOML.
pub fn parse_config(source: ConfigSource<'_>) -> Result<ExperimentPlan> {
    match source {
        ConfigSource::Toml(t) => ExperimentPlan::from_toml_str(t),
        ConfigSource::Json(t) => ExperimentPlan::from_json_str(t),
        ConfigSource::Path(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io { path: p.to_path_buf(), source: e })?;
            let json = p.extension().and_then(|e| e.to_str()) == Some("json");
            let parsed = if json { ExperimentPlan::from_json_str(&text) } else { ExperimentPlan::from_toml_str(&text) };
            parsed.map_err(|e| match e {
                Error::Parse(m) => Error::Parse(format!("{}: {m}", p.display())),
                other => other,
            })
        }
    }
}
