//! Experiment configuration files.
//!
//! ```toml
//! [signal]
//! n = 256
//! scs_hz = 15000.0
//!
//! [channel]
//! profile_path = "../data/cdl_d.toml"   # relative to this file; omit for a flat channel
//! mode = "circular"
//! snr_db = 5.0                          # omit for noiseless
//!
//! [jammer]                              # omit the section for no jammer
//! model = "frequency_shift"
//! jsr_db = 0.0
//!
//! [detector]
//! tau = 0.5
//!
//! [antijam]
//! policy = "negation"
//!
//! [run]
//! trials = 2000
//! base_seed = 1
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::antijam::AntijamConfig;
use crate::channel::{load_profile_file, ChannelProfile, ConvolutionMode};
use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::ofdm::DEFAULT_SCS_HZ;
use crate::sim::{default_tau_grid, JammerSpec, TrialConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSection {
    pub n: usize,
    pub scs_hz: f64,
}

impl Default for SignalSection {
    fn default() -> Self {
        Self {
            n: 256,
            scs_hz: DEFAULT_SCS_HZ,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub profile_path: Option<PathBuf>,
    pub mode: ConvolutionMode,
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub trials: u64,
    pub base_seed: u64,
    pub tau_grid: Vec<f64>,
    /// FFT sizes for `sweep` when none are given on the command line.
    pub sweep_n: Vec<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            trials: 2000,
            base_seed: 1,
            tau_grid: default_tau_grid(),
            sweep_n: vec![256, 512, 1024, 2048],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub signal: SignalSection,
    pub channel: ChannelSection,
    pub jammer: Option<JammerSpec>,
    pub detector: DetectorConfig,
    pub antijam: AntijamConfig,
    pub run: RunSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.detector.validate()?;
        cfg.antijam.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::parse(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn channel_profile(&self) -> Result<Option<ChannelProfile>> {
        self.channel
            .profile_path
            .as_ref()
            .map(|p| load_profile_file(self.base_dir.join(p)))
            .transpose()
    }

    pub fn trial_config(&self) -> Result<TrialConfig> {
        let cfg = TrialConfig {
            n: self.signal.n,
            scs_hz: self.signal.scs_hz,
            snr_db: self.channel.snr_db,
            jammer: self.jammer.clone(),
            channel: self.channel_profile()?,
            convolution: self.channel.mode,
            trials: self.run.trials,
            base_seed: self.run.base_seed,
            detector: self.detector.clone(),
            tau_grid: self.run.tau_grid.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
