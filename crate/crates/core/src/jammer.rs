//! Attacks on clean OFDM symbols.
//!
//! [`JammerModel::FrequencyShift`] multiplies the contribution of each
//! targeted subcarrier by the jammer tone `X_m e^{j n 2 pi m / N}`, moving
//! subcarrier `i` to the effective index `i + m` with symbol `X_i X_m`. A
//! fractional `m` misaligns the spectral nulls and leaks into every other
//! bin; an integer `m` lands on exactly one other bin.
//!
//! [`JammerModel::BarrageNoise`] adds circular Gaussian noise at a given
//! jammer-to-signal ratio and [`JammerModel::PilotNulling`] cancels the
//! PBCH-DMRS resource elements of a frequency-domain SSB grid.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ofdm::{mean_power, OfdmSymbol, SubcarrierSymbol};
use crate::ssb::{ReKind, SsbGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JammerModel {
    FrequencyShift,
    BarrageNoise,
    PilotNulling,
}

/// What the jammer-to-signal ratio of a frequency-shift attack is measured
/// against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JsrReference {
    /// Shifted-tone power over total legitimate signal power.
    #[default]
    TotalSignal,
    /// Shifted-tone amplitude over the mean per-subcarrier amplitude.
    PerSubcarrier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JammerConfig {
    pub model: JammerModel,
    /// Offset `m` in subcarrier units (frequency shift only).
    pub offset: f64,
    /// Jammer symbol amplitude `A_m`.
    pub amplitude: f64,
    /// Jammer symbol phase in radians.
    pub phase: f64,
    pub jsr_db: f64,
    /// Targeted subcarrier indices (frequency shift only).
    pub targets: Vec<usize>,
    pub seed: u64,
}

impl JammerConfig {
    pub fn frequency_shift(targets: Vec<usize>, offset: f64, amplitude: f64, phase: f64) -> Self {
        Self {
            model: JammerModel::FrequencyShift,
            offset,
            amplitude,
            phase,
            jsr_db: 0.0,
            targets,
            seed: 0,
        }
    }

    pub fn barrage(jsr_db: f64, seed: u64) -> Self {
        Self {
            model: JammerModel::BarrageNoise,
            offset: 0.0,
            amplitude: 1.0,
            phase: 0.0,
            jsr_db,
            targets: Vec::new(),
            seed,
        }
    }

    pub fn pilot_nulling() -> Self {
        Self {
            model: JammerModel::PilotNulling,
            offset: 0.0,
            amplitude: 1.0,
            phase: 0.0,
            jsr_db: 0.0,
            targets: Vec::new(),
            seed: 0,
        }
    }

    pub fn jammer_symbol(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::invalid("amplitude", "must be finite and >= 0"));
        }
        if !self.offset.is_finite() || !self.phase.is_finite() || !self.jsr_db.is_finite() {
            return Err(Error::invalid("jammer", "offset, phase and jsr_db must be finite"));
        }
        if self.model == JammerModel::FrequencyShift && self.targets.is_empty() {
            return Err(Error::invalid("targets", "frequency shift needs at least one target"));
        }
        Ok(())
    }

    fn expect_model(&self, model: JammerModel) -> Result<()> {
        self.validate()?;
        if self.model != model {
            return Err(Error::invalid(
                "model",
                format!("expected {model:?}, configured {:?}", self.model),
            ));
        }
        Ok(())
    }
}

/// Ground truth of one applied attack.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackRecord {
    pub config: JammerConfig,
    /// `(target, offset)` per shifted subcarrier.
    pub offsets: Vec<(usize, f64)>,
    /// Mean per-sample power of what the jammer injected.
    pub jammer_power: f64,
}

impl AttackRecord {
    pub fn model(&self) -> JammerModel {
        self.config.model
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }
}

/// Time-domain contribution `(X/N) e^{j n 2 pi f / N}`.
pub(crate) fn tone(symbol: Complex64, frequency: f64, n: usize) -> impl Iterator<Item = Complex64> {
    let nf = n as f64;
    (0..n).map(move |t| {
        let cycles = (frequency * t as f64).rem_euclid(nf);
        symbol * Complex64::from_polar(1.0 / nf, TAU * cycles / nf)
    })
}

/// Jammer amplitude `A_m` that realizes `jsr_db` for a shift of subcarrier
/// `target` under the given reference.
pub fn shift_amplitude_for_jsr(
    symbols: &[SubcarrierSymbol],
    target: usize,
    jsr_db: f64,
    reference: JsrReference,
) -> Result<f64> {
    let a_i = symbols
        .iter()
        .find(|s| s.index == target)
        .map(|s| s.amplitude)
        .filter(|&a| a > 0.0)
        .ok_or(Error::ZeroPower("target subcarrier"))?;
    if symbols.is_empty() {
        return Err(Error::EmptyInput("subcarrier symbols"));
    }
    let ratio = 10f64.powf(jsr_db / 10.0);
    Ok(match reference {
        JsrReference::TotalSignal => {
            let total: f64 = symbols.iter().map(|s| s.amplitude * s.amplitude).sum();
            (ratio * total).sqrt() / a_i
        }
        JsrReference::PerSubcarrier => {
            let mean = symbols.iter().map(|s| s.amplitude).sum::<f64>() / symbols.len() as f64;
            ratio.sqrt() * mean / a_i
        }
    })
}

/// Replaces each targeted contribution `c_i` of `clean` by `c_i * a_m`.
///
/// `symbols` are the per-subcarrier symbols `clean` was synthesized from;
/// a target without a symbol contributes nothing.
pub fn apply_frequency_shift(
    clean: &OfdmSymbol,
    symbols: &[SubcarrierSymbol],
    cfg: &JammerConfig,
) -> Result<(OfdmSymbol, AttackRecord)> {
    cfg.expect_model(JammerModel::FrequencyShift)?;
    let n = clean.n_fft();
    for &t in &cfg.targets {
        if t >= n {
            return Err(Error::SubcarrierOutOfRange { index: t, n });
        }
    }
    let x_m = cfg.jammer_symbol();
    let mut out = clean.samples().to_vec();
    let mut injected = vec![Complex64::new(0.0, 0.0); n];
    for &t in &cfg.targets {
        let Some(x_i) = symbols.iter().find(|s| s.index == t).map(SubcarrierSymbol::value) else {
            continue;
        };
        let original = tone(x_i, t as f64, n);
        let shifted = tone(x_i * x_m, t as f64 + cfg.offset, n);
        for ((o, inj), (c, s)) in out.iter_mut().zip(injected.iter_mut()).zip(original.zip(shifted)) {
            *o += s - c;
            *inj += s;
        }
    }
    let record = AttackRecord {
        config: cfg.clone(),
        offsets: cfg.targets.iter().map(|&t| (t, cfg.offset)).collect(),
        jammer_power: mean_power(&injected),
    };
    Ok((clean.with_samples(out)?, record))
}

pub(crate) fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

pub fn apply_noise_jammer(clean: &OfdmSymbol, cfg: &JammerConfig) -> Result<(OfdmSymbol, AttackRecord)> {
    cfg.expect_model(JammerModel::BarrageNoise)?;
    let signal_power = clean.power();
    if !(signal_power > 0.0) {
        return Err(Error::ZeroPower("signal"));
    }
    let variance = signal_power * 10f64.powf(cfg.jsr_db / 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise: Vec<Complex64> = (0..clean.n_fft())
        .map(|_| complex_gaussian(&mut rng, variance))
        .collect();
    let out = clean.samples().iter().zip(&noise).map(|(x, w)| x + w).collect();
    let record = AttackRecord {
        config: cfg.clone(),
        offsets: Vec::new(),
        jammer_power: mean_power(&noise),
    };
    Ok((clean.with_samples(out)?, record))
}

/// Frequency-domain resource grid, `values[symbol][subcarrier]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    pub values: Vec<Vec<Complex64>>,
}

impl ResourceGrid {
    pub fn zeros(symbols: usize, subcarriers: usize) -> Self {
        Self {
            values: vec![vec![Complex64::new(0.0, 0.0); subcarriers]; symbols],
        }
    }

    pub fn energy_at(&self, symbol: usize, subcarrier: usize) -> f64 {
        self.values[symbol][subcarrier].norm_sqr()
    }
}

/// Adds `-X` at every PBCH-DMRS element so the pilot energy becomes zero.
pub fn apply_pilot_nulling(clean: &ResourceGrid, grid: &SsbGrid, cfg: &JammerConfig) -> Result<ResourceGrid> {
    cfg.expect_model(JammerModel::PilotNulling)?;
    if clean.values.len() != grid.n_symbols() {
        return Err(Error::SizeMismatch {
            expected: grid.n_symbols(),
            found: clean.values.len(),
        });
    }
    let mut out = clean.clone();
    for (row, kinds) in out.values.iter_mut().zip(grid.cells()) {
        if row.len() != kinds.len() {
            return Err(Error::SizeMismatch {
                expected: kinds.len(),
                found: row.len(),
            });
        }
        for (v, &kind) in row.iter_mut().zip(kinds) {
            if kind == ReKind::PbchDmrs {
                let jam = -*v;
                *v += jam;
            }
        }
    }
    Ok(out)
}

/// Scales a jamming waveform so its power is `10^{jsr_db/10}` times
/// `reference_power`.
pub fn scale_to_jsr(jam: &[Complex64], reference_power: f64, jsr_db: f64) -> Result<Vec<Complex64>> {
    if !(reference_power > 0.0) {
        return Err(Error::ZeroPower("reference signal"));
    }
    let jam_power = mean_power(jam);
    if !(jam_power > 0.0) {
        return Err(Error::ZeroPower("jamming waveform"));
    }
    let gain = (reference_power * 10f64.powf(jsr_db / 10.0) / jam_power).sqrt();
    Ok(jam.iter().map(|s| s * gain).collect())
}
