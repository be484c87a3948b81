//! Tapped-delay-line fading and additive white Gaussian noise.
//!
//! Profiles are read from TOML text:
//!
//! ```toml
//! has_los = true
//! taps = [[0.0, 0.95], [3.5e-9, 0.05]]   # [delay_s, power_linear]
//! ```
//!
//! Powers are normalized to unit sum on load. With `has_los`, the first tap
//! is a fixed specular path; every other tap is Rayleigh.

use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jammer::complex_gaussian;
use crate::ofdm::OfdmSymbol;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub delay: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    taps: Vec<Tap>,
    has_los: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    taps: Vec<[f64; 2]>,
    #[serde(default)]
    has_los: bool,
    #[serde(default)]
    #[allow(dead_code)]
    name: Option<String>,
}

impl ChannelProfile {
    pub fn new(taps: Vec<Tap>, has_los: bool) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidProfile("no taps".into()));
        }
        for (i, t) in taps.iter().enumerate() {
            if !(t.delay.is_finite() && t.delay >= 0.0) {
                return Err(Error::InvalidProfile(format!("tap {i}: delay {} is negative", t.delay)));
            }
            if !(t.power.is_finite() && t.power >= 0.0) {
                return Err(Error::InvalidProfile(format!("tap {i}: power {} is negative", t.power)));
            }
        }
        if let Some(i) = taps.windows(2).position(|w| w[1].delay < w[0].delay) {
            return Err(Error::InvalidProfile(format!("delays not sorted at tap {}", i + 1)));
        }
        let total: f64 = taps.iter().map(|t| t.power).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidProfile("total power is zero".into()));
        }
        let taps = taps
            .into_iter()
            .map(|t| Tap {
                delay: t.delay,
                power: t.power / total,
            })
            .collect();
        Ok(Self { taps, has_los })
    }

    /// Single deterministic unit tap.
    pub fn flat() -> Self {
        Self {
            taps: vec![Tap { delay: 0.0, power: 1.0 }],
            has_los: true,
        }
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn has_los(&self) -> bool {
        self.has_los
    }

    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(|t| t.power).sum()
    }
}

pub fn load_profile(text: &str) -> Result<ChannelProfile> {
    let file: ProfileFile = toml::from_str(text).map_err(|e| Error::InvalidProfile(e.to_string()))?;
    let taps = file
        .taps
        .into_iter()
        .map(|[delay, power]| Tap { delay, power })
        .collect();
    ChannelProfile::new(taps, file.has_los)
}

pub fn load_profile_file(path: impl AsRef<Path>) -> Result<ChannelProfile> {
    load_profile(&std::fs::read_to_string(path)?)
}

/// Discrete-time tap gains at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    gains: Vec<Complex64>,
    sample_rate: f64,
    seed: u64,
}

impl ChannelRealization {
    /// Draws one static realization; taps are mapped to the nearest sample.
    pub fn realize(profile: &ChannelProfile, sample_rate: f64, seed: u64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::invalid("sample_rate", "must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = profile.taps.last().map_or(0.0, |t| t.delay);
        let mut gains = vec![Complex64::new(0.0, 0.0); (last * sample_rate).round() as usize + 1];
        for (i, tap) in profile.taps.iter().enumerate() {
            let idx = (tap.delay * sample_rate).round() as usize;
            let g = if i == 0 && profile.has_los {
                Complex64::new(tap.power.sqrt(), 0.0)
            } else {
                complex_gaussian(&mut rng, tap.power)
            };
            gains[idx] += g;
        }
        Ok(Self {
            gains,
            sample_rate,
            seed,
        })
    }

    pub fn from_gains(gains: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::EmptyInput("tap gains"));
        }
        Ok(Self {
            gains,
            sample_rate,
            seed: 0,
        })
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Per-bin response `H_k = sum_l g_l e^{-j 2 pi k l / N}`.
    pub fn frequency_response(&self, n: usize) -> Vec<Complex64> {
        let mut h = vec![Complex64::new(0.0, 0.0); n];
        for (l, g) in self.gains.iter().enumerate() {
            h[l % n] += g;
        }
        crate::fft::forward(&mut h);
        h
    }

    pub fn is_identity(&self) -> bool {
        self.gains[0] == Complex64::new(1.0, 0.0) && self.gains[1..].iter().all(|g| g.norm_sqr() == 0.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionMode {
    /// Cyclic convolution, as seen after ideal cyclic-prefix removal.
    #[default]
    Circular,
    /// Linear convolution truncated to N samples.
    Linear,
}

pub fn apply_tdl(x: &OfdmSymbol, realization: &ChannelRealization, mode: ConvolutionMode) -> Result<OfdmSymbol> {
    let fs = x.sample_rate();
    if (fs - realization.sample_rate).abs() > 1e-9 * fs {
        return Err(Error::SampleRateMismatch {
            expected: fs,
            found: realization.sample_rate,
        });
    }
    let n = x.n_fft();
    let s = x.samples();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (l, g) in realization.gains.iter().enumerate() {
        if g.norm_sqr() == 0.0 {
            continue;
        }
        for (t, o) in out.iter_mut().enumerate() {
            let src = match mode {
                ConvolutionMode::Circular => Some((t + n - l % n) % n),
                ConvolutionMode::Linear => t.checked_sub(l),
            };
            if let Some(src) = src {
                *o += g * s[src];
            }
        }
    }
    x.with_samples(out)
}

/// Noise variance per sample for a given signal power and SNR.
pub fn noise_variance(signal_power: f64, snr_db: f64) -> f64 {
    signal_power / 10f64.powf(snr_db / 10.0)
}

/// Adds noise with variance `power(x) / 10^{snr_db/10}`.
pub fn add_awgn(x: &OfdmSymbol, snr_db: f64, seed: u64) -> Result<OfdmSymbol> {
    add_awgn_with_reference(x, x.power(), snr_db, seed)
}

/// Like [`add_awgn`] but with the SNR measured against `signal_power`
/// instead of the power of `x` itself.
pub fn add_awgn_with_reference(x: &OfdmSymbol, signal_power: f64, snr_db: f64, seed: u64) -> Result<OfdmSymbol> {
    if !(signal_power > 0.0) {
        return Err(Error::ZeroPower("signal"));
    }
    let var = noise_variance(signal_power, snr_db);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = x
        .samples()
        .iter()
        .map(|s| s + complex_gaussian(&mut rng, var))
        .collect();
    x.with_samples(out)
}
