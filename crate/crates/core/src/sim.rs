//! Seeded Monte-Carlo trials and ROC curves.
//!
//! Trial `t` of a run with base seed `b` draws all of its randomness from
//! `ChaCha8(mix_seed(b, t))`, where
//!
//! ```text
//! mix_seed(b, t) = splitmix64(b ^ splitmix64(t))
//! ```
//!
//! so a trial is reproducible on its own. Even trial indices carry the
//! jammer, odd ones do not.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{add_awgn_with_reference, apply_tdl, ChannelProfile, ChannelRealization, ConvolutionMode};
use crate::detector::{classify_loo, psi_empirical_bins, DetectorConfig, Verdict};
use crate::error::{Error, Result};
use crate::jammer::{apply_frequency_shift, apply_noise_jammer, shift_amplitude_for_jsr, JammerConfig, JammerModel, JsrReference};
use crate::ofdm::{qpsk_symbols, spectrum, spectrum_from_symbols, synthesize_with_spacing, DEFAULT_SCS_HZ};

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn mix_seed(base_seed: u64, trial_index: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(trial_index))
}

/// How jammer-present trials are attacked. Unset fields are drawn per
/// trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JammerSpec {
    pub model: JammerModel,
    pub offset: Option<f64>,
    pub target: Option<usize>,
    /// Fixed `A_m`; otherwise derived from `jsr_db`.
    pub amplitude: Option<f64>,
    pub phase: Option<f64>,
    pub jsr_db: f64,
    pub jsr_reference: JsrReference,
    /// Integer part of random offsets is uniform in `[-offset_int_max, offset_int_max]`.
    pub offset_int_max: u32,
}

impl Default for JammerSpec {
    fn default() -> Self {
        Self {
            model: JammerModel::FrequencyShift,
            offset: None,
            target: None,
            amplitude: None,
            phase: None,
            jsr_db: 0.0,
            jsr_reference: JsrReference::TotalSignal,
            offset_int_max: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub n: usize,
    pub scs_hz: f64,
    /// `None` means noiseless.
    pub snr_db: Option<f64>,
    pub jammer: Option<JammerSpec>,
    pub channel: Option<ChannelProfile>,
    pub convolution: ConvolutionMode,
    pub trials: u64,
    pub base_seed: u64,
    pub detector: DetectorConfig,
    pub tau_grid: Vec<f64>,
}

pub fn default_tau_grid() -> Vec<f64> {
    vec![0.0, 0.0005, 0.001, 0.002, 0.005, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            n: 256,
            scs_hz: DEFAULT_SCS_HZ,
            snr_db: Some(5.0),
            jammer: Some(JammerSpec::default()),
            channel: None,
            convolution: ConvolutionMode::Circular,
            trials: 2000,
            base_seed: 1,
            detector: DetectorConfig::default(),
            tau_grid: default_tau_grid(),
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidFftSize { n: self.n, min: 2 });
        }
        if !(self.scs_hz > 0.0) {
            return Err(Error::invalid("scs_hz", "must be > 0"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be >= 1"));
        }
        if self.tau_grid.is_empty() {
            return Err(Error::EmptyInput("tau_grid"));
        }
        if self.tau_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::invalid("tau_grid", "values must be finite and >= 0"));
        }
        if self.tau_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("tau_grid", "must be sorted ascending"));
        }
        if let Some(j) = &self.jammer {
            if j.model == JammerModel::PilotNulling {
                return Err(Error::Unsupported("pilot nulling acts on an SSB grid, not a single symbol".into()));
            }
            if let Some(t) = j.target {
                if t >= self.n {
                    return Err(Error::SubcarrierOutOfRange { index: t, n: self.n });
                }
            }
        }
        self.detector.validate()
    }

    pub fn jammer_present(&self, trial_index: u64) -> bool {
        self.jammer.is_some() && trial_index % 2 == 0
    }
}

/// A subcarrier with `psi > 0` in one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flagged {
    pub index: usize,
    pub s: f64,
    pub m_hat: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub n: usize,
    pub jammer_present: bool,
    pub target: Option<usize>,
    pub offset: Option<f64>,
    /// Subcarriers with nonzero statistic; every other `s(i)` is zero.
    pub flagged: Vec<Flagged>,
    pub max_statistic: f64,
    pub mismatch_ratio: f64,
}

impl TrialRecord {
    pub fn statistic(&self, i: usize) -> f64 {
        self.flagged.iter().find(|f| f.index == i).map_or(0.0, |f| f.s)
    }

    pub fn verdict(&self, i: usize) -> Verdict {
        self.flagged.iter().find(|f| f.index == i).map_or(Verdict::Clean, |f| f.verdict)
    }
}

fn random_offset(rng: &mut ChaCha8Rng, int_max: u32) -> f64 {
    let frac = rng.random_range(1..=9) as f64 / 10.0;
    let int = rng.random_range(-(int_max as i64)..=int_max as i64) as f64;
    int + frac
}

pub fn run_trial(cfg: &TrialConfig, trial_index: u64) -> Result<TrialRecord> {
    cfg.validate()?;
    run_trial_unchecked(cfg, trial_index).map_err(|e| Error::Trial {
        trial: trial_index,
        source: Box::new(e),
    })
}

fn run_trial_unchecked(cfg: &TrialConfig, trial_index: u64) -> Result<TrialRecord> {
    let n = cfg.n;
    let seed = mix_seed(cfg.base_seed, trial_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = qpsk_symbols(&mut rng, n);
    let clean = synthesize_with_spacing(&symbols, n, cfg.scs_hz)?;

    let present = cfg.jammer_present(trial_index);
    let mut target = None;
    let mut offset = None;
    let mut tx = clean.clone();
    if let (true, Some(spec)) = (present, &cfg.jammer) {
        match spec.model {
            JammerModel::FrequencyShift => {
                let t = spec.target.unwrap_or_else(|| rng.random_range(0..n));
                let m = spec.offset.unwrap_or_else(|| random_offset(&mut rng, spec.offset_int_max));
                let phase = spec.phase.unwrap_or_else(|| rng.random_range(0.0..TAU));
                let amplitude = match spec.amplitude {
                    Some(a) => a,
                    None => shift_amplitude_for_jsr(&symbols, t, spec.jsr_db, spec.jsr_reference)?,
                };
                let jc = JammerConfig::frequency_shift(vec![t], m, amplitude, phase);
                tx = apply_frequency_shift(&clean, &symbols, &jc)?.0;
                target = Some(t);
                offset = Some(m);
            }
            JammerModel::BarrageNoise => {
                tx = apply_noise_jammer(&clean, &JammerConfig::barrage(spec.jsr_db, rng.next_u64()))?.0;
            }
            JammerModel::PilotNulling => {
                return Err(Error::Unsupported("pilot nulling in a single-symbol trial".into()));
            }
        }
    }

    let channel_seed = rng.next_u64();
    let noise_seed = rng.next_u64();
    let mut expected = spectrum_from_symbols(&symbols, n)?;
    let (mut rx, useful_power) = match &cfg.channel {
        Some(profile) => {
            let real = ChannelRealization::realize(profile, clean.sample_rate(), channel_seed)?;
            let h = real.frequency_response(n);
            for (x, h) in expected.iter_mut().zip(&h) {
                *x *= h;
            }
            let faded_clean = apply_tdl(&clean, &real, cfg.convolution)?;
            (apply_tdl(&tx, &real, cfg.convolution)?, faded_clean.power())
        }
        None => (tx, clean.power()),
    };
    if let Some(snr) = cfg.snr_db {
        rx = add_awgn_with_reference(&rx, useful_power, snr, noise_seed)?;
    }

    let det = psi_empirical_bins(&spectrum(rx.samples())?, &expected, &cfg.detector)?;
    let verdicts = classify_loo(&det.psi);
    let flagged: Vec<Flagged> = (0..n)
        .filter(|&i| det.psi.values()[i] > 0)
        .map(|i| Flagged {
            index: i,
            s: det.psi.statistic(i),
            m_hat: det.m_hat[i],
            verdict: verdicts[i],
        })
        .collect();
    let max_statistic = flagged.iter().map(|f| f.s).fold(0.0, f64::max);
    Ok(TrialRecord {
        trial: trial_index,
        seed,
        n,
        jammer_present: present,
        target,
        offset,
        flagged,
        max_statistic,
        mismatch_ratio: det.mismatch_ratio,
    })
}

/// Runs every trial in index order, handing each record to `sink`.
pub fn run_monte_carlo_with<F>(cfg: &TrialConfig, mut sink: F) -> Result<()>
where
    F: FnMut(TrialRecord) -> Result<()>,
{
    cfg.validate()?;
    for t in 0..cfg.trials {
        let rec = run_trial_unchecked(cfg, t).map_err(|e| Error::Trial {
            trial: t,
            source: Box::new(e),
        })?;
        sink(rec).map_err(|e| Error::Trial {
            trial: t,
            source: Box::new(e),
        })?;
    }
    Ok(())
}

pub fn run_monte_carlo(cfg: &TrialConfig) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::with_capacity(cfg.trials as usize);
    run_monte_carlo_with(cfg, |r| {
        out.push(r);
        Ok(())
    })?;
    Ok(out)
}

/// Streams records as JSON lines to `path` and returns the compact
/// per-trial summaries needed for the ROC.
pub fn run_monte_carlo_to_file(cfg: &TrialConfig, path: impl AsRef<Path>) -> Result<Vec<TrialSummary>> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut out = Vec::with_capacity(cfg.trials as usize);
    run_monte_carlo_with(cfg, |r| {
        serde_json::to_writer(&mut w, &r).map_err(|e| Error::Io(e.into()))?;
        w.write_all(b"\n")?;
        out.push(TrialSummary::from(&r));
        Ok(())
    })?;
    w.flush()?;
    Ok(out)
}

/// Label and symbol-level statistic of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub jammer_present: bool,
    pub max_statistic: f64,
}

impl From<&TrialRecord> for TrialSummary {
    fn from(r: &TrialRecord) -> Self {
        Self {
            jammer_present: r.jammer_present,
            max_statistic: r.max_statistic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub tau: f64,
    /// `None` when there were no jammer-absent trials.
    pub p_f: Option<f64>,
    /// `None` when there were no jammer-present trials.
    pub p_d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub n: usize,
    pub snr_db: Option<f64>,
    pub jsr_db: f64,
    pub trials: u64,
    pub points: Vec<RocPoint>,
    pub auc: Option<f64>,
}

impl RocCurve {
    /// Both rates non-increasing as `tau` grows.
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| {
            let le = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (Some(a), Some(b)) => b <= a,
                _ => true,
            };
            le(w[0].p_f, w[1].p_f) && le(w[0].p_d, w[1].p_d)
        })
    }
}

/// Trapezoid area over the points sorted by `P_F`, anchored at (0, 0) and
/// (1, 1).
pub fn auc(points: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len() + 2);
    pts.push((0.0, 0.0));
    pts.extend_from_slice(points);
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

fn rate(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| hits as f64 / total as f64)
}

fn curve_from_labels(labels: &[(bool, f64)], tau_grid: &[f64]) -> Result<(Vec<RocPoint>, Option<f64>)> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("trial records"));
    }
    let present = labels.iter().filter(|l| l.0).count();
    let absent = labels.len() - present;
    let points: Vec<RocPoint> = tau_grid
        .iter()
        .map(|&tau| {
            let (mut d, mut f) = (0, 0);
            for &(p, s) in labels {
                if s >= tau {
                    if p {
                        d += 1;
                    } else {
                        f += 1;
                    }
                }
            }
            RocPoint {
                tau,
                p_f: rate(f, absent),
                p_d: rate(d, present),
            }
        })
        .collect();
    let defined: Option<Vec<(f64, f64)>> = points.iter().map(|p| Some((p.p_f?, p.p_d?))).collect();
    Ok((points.clone(), defined.map(|d| auc(&d))))
}

/// Symbol-level ROC: a trial is declared attacked iff `max_i s(i) >= tau`.
pub fn compute_roc(records: &[TrialSummary], tau_grid: &[f64]) -> Result<(Vec<RocPoint>, Option<f64>)> {
    let labels: Vec<(bool, f64)> = records.iter().map(|r| (r.jammer_present, r.max_statistic)).collect();
    curve_from_labels(&labels, tau_grid)
}

/// Subcarrier-level ROC: positives are the attacked subcarriers of
/// jammer-present trials, negatives every other subcarrier of every trial.
pub fn compute_subcarrier_roc(records: &[TrialRecord], tau_grid: &[f64]) -> Result<(Vec<RocPoint>, Option<f64>)> {
    if records.is_empty() {
        return Err(Error::EmptyInput("trial records"));
    }
    let mut positives = 0usize;
    let mut negatives = 0usize;
    let mut pos_scores = Vec::new();
    let mut neg_scores = Vec::new();
    for r in records {
        let target = r.target.filter(|_| r.jammer_present);
        positives += target.is_some() as usize;
        negatives += r.n - target.is_some() as usize;
        for f in &r.flagged {
            if Some(f.index) == target {
                pos_scores.push(f.s);
            } else {
                neg_scores.push(f.s);
            }
        }
    }
    let count = |scores: &[f64], total: usize, tau: f64| -> usize {
        if tau <= 0.0 {
            total
        } else {
            scores.iter().filter(|&&s| s >= tau).count()
        }
    };
    let points: Vec<RocPoint> = tau_grid
        .iter()
        .map(|&tau| RocPoint {
            tau,
            p_f: rate(count(&neg_scores, negatives, tau), negatives),
            p_d: rate(count(&pos_scores, positives, tau), positives),
        })
        .collect();
    let defined: Option<Vec<(f64, f64)>> = points.iter().map(|p| Some((p.p_f?, p.p_d?))).collect();
    Ok((points.clone(), defined.map(|d| auc(&d))))
}

fn curve_for(cfg: &TrialConfig, summaries: &[TrialSummary]) -> Result<RocCurve> {
    let (points, auc) = compute_roc(summaries, &cfg.tau_grid)?;
    Ok(RocCurve {
        n: cfg.n,
        snr_db: cfg.snr_db,
        jsr_db: cfg.jammer.as_ref().map_or(f64::NEG_INFINITY, |j| j.jsr_db),
        trials: cfg.trials,
        points,
        auc,
    })
}

/// Runs the trials of `cfg` in memory and returns the ROC.
pub fn roc_for(cfg: &TrialConfig) -> Result<RocCurve> {
    let mut summaries = Vec::with_capacity(cfg.trials as usize);
    run_monte_carlo_with(cfg, |r| {
        summaries.push(TrialSummary::from(&r));
        Ok(())
    })?;
    curve_for(cfg, &summaries)
}

/// Like [`roc_for`] but also streams every record to `records_path`.
pub fn roc_streamed(cfg: &TrialConfig, records_path: impl AsRef<Path>) -> Result<RocCurve> {
    let summaries = run_monte_carlo_to_file(cfg, records_path)?;
    curve_for(cfg, &summaries)
}

/// One ROC per FFT size, everything else from `base`.
pub fn sweep(base: &TrialConfig, ns: &[usize]) -> Result<Vec<RocCurve>> {
    if ns.is_empty() {
        return Err(Error::EmptyInput("FFT sizes"));
    }
    ns.iter()
        .map(|&n| {
            let cfg = TrialConfig { n, ..base.clone() };
            log::info!("sweep: N = {n}, {} trials", cfg.trials);
            roc_for(&cfg)
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

pub fn roc_csv(curves: &[RocCurve]) -> String {
    let mut out = String::from("n,snr_db,jsr_db,tau,p_f,p_d,trials\n");
    for c in curves {
        for p in &c.points {
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{},{},{}\n",
                c.n,
                fmt_opt(c.snr_db),
                c.jsr_db,
                p.tau,
                fmt_opt(p.p_f),
                fmt_opt(p.p_d),
                c.trials
            ));
        }
    }
    out
}

pub fn summary_csv(curves: &[RocCurve]) -> String {
    let mut out = String::from("n,auc\n");
    for c in curves {
        out.push_str(&format!("{},{}\n", c.n, fmt_opt(c.auc)));
    }
    out
}

/// Writes `roc.csv` and `summary.csv` into `dir`, creating it if needed.
pub fn emit_outputs(curves: &[RocCurve], dir: impl AsRef<Path>) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::EmptyInput("ROC curves"));
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("roc.csv"), roc_csv(curves))?;
    std::fs::write(dir.join("summary.csv"), summary_csv(curves))?;
    Ok(())
}
