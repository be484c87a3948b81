//! Loss-of-orthogonality detection.
//!
//! The analytic test counts, for a subcarrier `i` shifted by `m`, how many
//! other subcarriers `k` see a nonzero trace
//!
//! ```text
//! Tr(A_{k,i}) = H_{k,i} = sum_n e^{j n 2 pi (k - i - m) / N}
//! psi(i)      = #{ k != i : |H_{k,i}| > epsilon * N }
//! ```
//!
//! A fractional `m` gives `psi(i) = N - 1` (full loss of orthogonality), an
//! integer `m != 0 (mod N)` resonates with exactly one `k`, and `m = 0`
//! gives zero.
//!
//! The empirical test works on a received symbol and known reference
//! content. The residual spectrum `R = analyze(received) - expected` is
//! explained greedily by attack hypotheses "subcarrier `i` was removed from
//! its bin and reappears as a tone at `i + mu`". Each hypothesis is a
//! least-squares fit of a unit-norm Dirichlet template; the best one is
//! accepted while its energy gain clears a noise-scaled gate, and the
//! accepted offsets feed the analytic count.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ofdm::{dirichlet, qpsk_symbols, spectrum, spectrum_from_symbols, synthesize_bins, OfdmSymbol, SubcarrierSymbol};

/// Half-width, in bins, of the window around `i` where the removed symbol
/// is fitted jointly with the tone.
const NEAR_WINDOW: usize = 4;
/// Coarse peaks of the residual spectrum examined for distant tones.
const PEAK_CANDIDATES: usize = 8;
/// Coarse hypotheses refined on the fine offset grid.
const REFINED_HYPOTHESES: usize = 3;
/// Golden-section steps after the fine grid; shrinks the bracket below 1e-10.
const GOLDEN_ITERATIONS: usize = 48;
/// Relative improvement the polish must bring to replace an exact grid hit.
const POLISH_MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStatistic {
    pub k: usize,
    pub i: usize,
    pub m_hypothesis: f64,
    pub value: Complex64,
}

fn check_index(index: usize, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidFftSize { n, min: 2 });
    }
    if index >= n {
        return Err(Error::SubcarrierOutOfRange { index, n });
    }
    Ok(())
}

/// `Tr(e^m x e^{k,i})` via the geometric-series closed form.
pub fn trace_a(k: usize, i: usize, m: f64, n: usize) -> Result<TraceStatistic> {
    check_index(k, n)?;
    check_index(i, n)?;
    if !m.is_finite() {
        return Err(Error::invalid("m", "must be finite"));
    }
    Ok(TraceStatistic {
        k,
        i,
        m_hypothesis: m,
        value: trace_value(k, i, m, n),
    })
}

fn trace_value(k: usize, i: usize, m: f64, n: usize) -> Complex64 {
    dirichlet(-(k as f64 - i as f64 - m), n)
}

pub fn psi_analytic(i: usize, m: f64, n: usize, epsilon: f64) -> Result<usize> {
    check_index(i, n)?;
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be > 0"));
    }
    if !m.is_finite() {
        return Err(Error::invalid("m", "must be finite"));
    }
    let threshold = epsilon * n as f64;
    Ok((0..n)
        .filter(|&k| k != i && trace_value(k, i, m, n).norm() > threshold)
        .count())
}

/// Per-subcarrier counts `psi(i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsiVector {
    values: Vec<usize>,
}

impl PsiVector {
    pub fn new(values: Vec<usize>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidFftSize { n, min: 2 });
        }
        if let Some(&bad) = values.iter().find(|&&v| v > n - 1) {
            return Err(Error::invalid("psi", format!("{bad} exceeds N - 1 = {}", n - 1)));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0; n] }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    /// `s(i) = psi(i) / (N - 1)`.
    pub fn statistic(&self, i: usize) -> f64 {
        self.values[i] as f64 / (self.n() - 1) as f64
    }

    /// Number of distinct subcarrier pairs, `N (N - 1) / 2`; metadata only.
    pub fn pair_budget(&self) -> usize {
        let n = self.n();
        n * (n - 1) / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    LoO,
    NoFullyLoO,
    Clean,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::LoO => "LoO",
            Verdict::NoFullyLoO => "NoFullyLoO",
            Verdict::Clean => "Clean",
        })
    }
}

pub fn classify_loo(psi: &PsiVector) -> Vec<Verdict> {
    let full = psi.n() - 1;
    psi.values
        .iter()
        .map(|&v| match v {
            0 => Verdict::Clean,
            v if v == full => Verdict::LoO,
            _ => Verdict::NoFullyLoO,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cause {
    Clean,
    JammingSuspected,
    WrongNSuspected { best_n: usize },
}

impl fmt::Display for Cause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cause::Clean => f.write_str("Clean"),
            Cause::JammingSuspected => f.write_str("JammingSuspected"),
            Cause::WrongNSuspected { best_n } => write!(f, "WrongNSuspected(best_n={best_n})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Relative threshold on `|Tr| / N` for the nonzero-trace indicator.
    pub epsilon: f64,
    /// Decision threshold on `s(i)`.
    pub tau: f64,
    /// Resolution of the offset estimate, in subcarriers.
    pub offset_step: f64,
    /// Coarse search points per subcarrier spacing.
    pub oversample: usize,
    /// Gain over noise variance needed to accept a hypothesis; `None` uses
    /// `2 ln N + ln(oversample) + 6`, covering the search over both the
    /// removed bin and the tone frequency.
    pub gate: Option<f64>,
    /// Per-bin noise variance if known; otherwise estimated from the
    /// post-fit residual.
    pub noise_var: Option<f64>,
    /// Upper bound on accepted hypotheses per symbol.
    pub max_targets: usize,
    /// Residual-to-received energy ratio above which the reference is
    /// considered not to describe the symbol at all.
    pub pervasive_mismatch: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            tau: 0.5,
            offset_step: 0.01,
            oversample: 4,
            gate: None,
            noise_var: None,
            max_targets: 8,
            pervasive_mismatch: 0.75,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::invalid("tau", "must be in [0, 1]"));
        }
        if !(self.offset_step > 0.0 && self.offset_step.is_finite()) {
            return Err(Error::invalid("offset_step", "must be > 0"));
        }
        if self.oversample == 0 {
            return Err(Error::invalid("oversample", "must be >= 1"));
        }
        if let Some(g) = self.gate {
            if !(g >= 0.0) {
                return Err(Error::invalid("gate", "must be >= 0"));
            }
        }
        if let Some(v) = self.noise_var {
            if !(v >= 0.0) {
                return Err(Error::invalid("noise_var", "must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn gate_for(&self, n: usize) -> f64 {
        self.gate
            .unwrap_or_else(|| 2.0 * (n as f64).ln() + (self.oversample as f64).ln() + 6.0)
    }
}

/// Known content the receiver compares against.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSource {
    Fixed(Vec<SubcarrierSymbol>),
    /// Unit QPSK on every subcarrier, drawn from a generator keyed by
    /// `(seed, N)`.
    SeededQpsk { seed: u64 },
}

impl ReferenceSource {
    pub fn symbols(&self, n: usize) -> Result<Vec<SubcarrierSymbol>> {
        match self {
            ReferenceSource::Fixed(s) => {
                spectrum_from_symbols(s, n)?;
                Ok(s.clone())
            }
            ReferenceSource::SeededQpsk { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(crate::sim::mix_seed(*seed, n as u64));
                Ok(qpsk_symbols(&mut rng, n))
            }
        }
    }
}

/// One accepted attack hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypothesis {
    pub index: usize,
    /// Estimated offset in `(-N/2, N/2]`.
    pub offset: f64,
    /// Fitted symbol of the displaced tone, `X_i X_m` for a shift attack.
    pub alpha: Complex64,
    /// Residual energy removed by the fit.
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetEstimate {
    pub m_hat: f64,
    pub found: bool,
    /// Peak residual-template correlation magnitude.
    pub correlation: f64,
    pub alpha: Complex64,
}

/// Output of the empirical test before verdicts are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDetection {
    pub psi: PsiVector,
    pub m_hat: Vec<f64>,
    pub hypotheses: Vec<Hypothesis>,
    pub noise_var: f64,
    pub mismatch_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub n: usize,
    pub psi: PsiVector,
    pub statistic: Vec<f64>,
    pub m_hat: Vec<f64>,
    pub verdicts: Vec<Verdict>,
    pub cause: Cause,
    pub hypotheses: Vec<Hypothesis>,
    pub noise_var: f64,
    pub mismatch_ratio: f64,
}

impl DetectionReport {
    pub fn from_empirical(det: EmpiricalDetection) -> Self {
        let verdicts = classify_loo(&det.psi);
        let n = det.psi.n();
        let statistic = (0..n).map(|i| det.psi.statistic(i)).collect();
        let cause = if verdicts.iter().any(|v| *v != Verdict::Clean) {
            Cause::JammingSuspected
        } else {
            Cause::Clean
        };
        Self {
            n,
            psi: det.psi,
            statistic,
            m_hat: det.m_hat,
            verdicts,
            cause,
            hypotheses: det.hypotheses,
            noise_var: det.noise_var,
            mismatch_ratio: det.mismatch_ratio,
        }
    }

    pub fn max_statistic(&self) -> f64 {
        self.statistic.iter().copied().fold(0.0, f64::max)
    }

    /// Subcarriers with `s(i) >= tau`.
    pub fn attacked(&self, tau: f64) -> Vec<usize> {
        (0..self.n).filter(|&i| self.statistic[i] >= tau).collect()
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.verdicts.iter().filter(|&&v| v == verdict).count()
    }

    /// Every subcarrier lost orthogonality, or the reference explains almost
    /// none of the received energy.
    pub fn is_pervasive(&self, cfg: &DetectorConfig) -> bool {
        self.count(Verdict::LoO) == self.n || self.mismatch_ratio > cfg.pervasive_mismatch
    }

    pub fn hypothesis(&self, index: usize) -> Option<&Hypothesis> {
        self.hypotheses.iter().find(|h| h.index == index)
    }
}

/// Maps any offset to its alias in `(-N/2, N/2]`.
fn wrap_offset(mu: f64, n: usize) -> f64 {
    let nf = n as f64;
    let mut r = mu.rem_euclid(nf);
    if r > nf / 2.0 {
        r -= nf;
    }
    r
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    index: usize,
    offset: f64,
    score: f64,
    gain: f64,
}

/// Residual spectrum plus the bookkeeping of the greedy fit.
struct ResidualFit {
    n: usize,
    expected: Vec<Complex64>,
    residual: Vec<Complex64>,
    consumed: Vec<bool>,
    oversample: usize,
    step: f64,
}

impl ResidualFit {
    fn new(received: &[Complex64], expected: &[Complex64], cfg: &DetectorConfig) -> Result<Self> {
        if received.len() != expected.len() {
            return Err(Error::SizeMismatch {
                expected: received.len(),
                found: expected.len(),
            });
        }
        let n = received.len();
        if n < 2 {
            return Err(Error::InvalidFftSize { n, min: 2 });
        }
        Ok(Self {
            n,
            expected: expected.to_vec(),
            residual: received.iter().zip(expected).map(|(y, x)| y - x).collect(),
            consumed: vec![false; n],
            oversample: cfg.oversample,
            step: cfg.offset_step,
        })
    }

    fn energy(&self) -> f64 {
        self.residual.iter().map(|r| r.norm_sqr()).sum()
    }

    fn time(&self) -> Vec<Complex64> {
        synthesize_bins(&self.residual)
    }

    /// Residual DTFT on the coarse grid `f = l / oversample`.
    fn coarse(&self, r: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n * self.oversample];
        buf[..self.n].copy_from_slice(r);
        crate::fft::forward(&mut buf);
        buf
    }

    /// Residual DTFT at an arbitrary frequency, equal to the correlation of
    /// the residual spectrum with the unit Dirichlet template centred there.
    fn z_at(&self, r: &[Complex64], f: f64) -> Complex64 {
        let nf = self.n as f64;
        let w = Complex64::from_polar(1.0, -TAU * f.rem_euclid(nf) / nf);
        r.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, x| acc * w + x)
    }

    /// Template correlation of the removed symbol `X_i` for offset `mu`.
    fn addback(&self, i: usize, mu: f64) -> Complex64 {
        self.expected[i] * dirichlet(-mu, self.n).conj() / self.n as f64
    }

    /// Energy change from restoring `X_i` to bin `i`.
    fn removal_gain(&self, i: usize) -> f64 {
        let r = self.residual[i];
        r.norm_sqr() - (r + self.expected[i]).norm_sqr()
    }

    fn coarse_index(&self, f: f64) -> usize {
        let total = (self.n * self.oversample) as i64;
        ((f * self.oversample as f64).round() as i64).rem_euclid(total) as usize
    }

    fn score_coarse(&self, z: &[Complex64], i: usize, mu: f64) -> f64 {
        let l = self.coarse_index(i as f64 + mu);
        (z[l] + self.addback(i, mu)).norm_sqr()
    }

    /// Offsets (as coarse multiples) of the strongest local maxima of `|z|`.
    fn peaks(&self, z: &[Complex64]) -> Vec<usize> {
        let len = z.len();
        let mag: Vec<f64> = z.iter().map(|v| v.norm_sqr()).collect();
        let mut peaks: Vec<usize> = (0..len)
            .filter(|&l| {
                let prev = mag[(l + len - 1) % len];
                let next = mag[(l + 1) % len];
                mag[l] >= prev && mag[l] >= next
            })
            .collect();
        peaks.sort_by(|&a, &b| mag[b].total_cmp(&mag[a]).then(a.cmp(&b)));
        peaks.truncate(PEAK_CANDIDATES);
        peaks
    }

    /// Best coarse offset for subcarrier `i` among the near window and the
    /// given peaks.
    fn coarse_candidate(&self, z: &[Complex64], peaks: &[usize], near: &[(f64, Complex64)], i: usize) -> Candidate {
        let p = self.oversample as f64;
        let base = i * self.oversample;
        let total = z.len();
        let mut best = (f64::NEG_INFINITY, 0.0);
        for (k, &(mu, g)) in near.iter().enumerate() {
            let l = (base + total + k - near.len() / 2) % total;
            let s = (z[l] + self.expected[i] * g).norm_sqr();
            if s > best.0 {
                best = (s, mu);
            }
        }
        for &peak in peaks {
            for dl in [total - 1, 0, 1] {
                let l = (peak + dl) % total;
                let mu = wrap_offset(l as f64 / p - i as f64, self.n);
                let s = self.score_coarse(z, i, mu);
                if s > best.0 {
                    best = (s, mu);
                }
            }
        }
        Candidate {
            index: i,
            offset: best.1,
            score: best.0,
            gain: best.0 + self.removal_gain(i),
        }
    }

    fn score_at(&self, r: &[Complex64], i: usize, mu: f64) -> f64 {
        (self.z_at(r, i as f64 + mu) + self.addback(i, mu)).norm_sqr()
    }

    /// Fine-grid search within one coarse cell of `c.offset`, then a
    /// golden-section polish within one grid step of the best point.
    fn refine(&self, r: &[Complex64], c: Candidate) -> Candidate {
        let half_cell = 1.0 / self.oversample as f64;
        let steps = (half_cell / self.step).ceil() as i64;
        let mut best = c;
        best.score = f64::NEG_INFINITY;
        for j in -steps..=steps {
            let mu = wrap_offset(c.offset + j as f64 * self.step, self.n);
            let s = self.score_at(r, c.index, mu);
            if s > best.score {
                best.score = s;
                best.offset = mu;
            }
        }
        let (mut lo, mut hi) = (best.offset - self.step, best.offset + self.step);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut a = hi - g * (hi - lo);
        let mut b = lo + g * (hi - lo);
        let mut fa = self.score_at(r, c.index, a);
        let mut fb = self.score_at(r, c.index, b);
        for _ in 0..GOLDEN_ITERATIONS {
            if fa > fb {
                hi = b;
                (b, fb) = (a, fa);
                a = hi - g * (hi - lo);
                fa = self.score_at(r, c.index, a);
            } else {
                lo = a;
                (a, fa) = (b, fb);
                b = lo + g * (hi - lo);
                fb = self.score_at(r, c.index, b);
            }
        }
        let (mu, s) = if fa > fb { (a, fa) } else { (b, fb) };
        if s > best.score * (1.0 + POLISH_MIN_GAIN) {
            best.score = s;
            best.offset = wrap_offset(mu, self.n);
        }
        best.gain = best.score + self.removal_gain(c.index);
        best
    }

    fn alpha(&self, r: &[Complex64], i: usize, mu: f64) -> Complex64 {
        self.z_at(r, i as f64 + mu) + self.addback(i, mu)
    }

    /// Most likely single-subcarrier hypothesis over all unconsumed `i`.
    fn best_hypothesis(&self) -> Option<Hypothesis> {
        let r = self.time();
        let z = self.coarse(&r);
        let peaks = self.peaks(&z);
        let p = self.oversample as f64;
        let w = (NEAR_WINDOW * self.oversample) as i64;
        let near: Vec<(f64, Complex64)> = (-w..=w)
            .map(|dl| {
                let mu = dl as f64 / p;
                (mu, dirichlet(-mu, self.n).conj() / self.n as f64)
            })
            .collect();
        let mut coarse: Vec<Candidate> = (0..self.n)
            .filter(|&i| !self.consumed[i])
            .map(|i| self.coarse_candidate(&z, &peaks, &near, i))
            .collect();
        if coarse.is_empty() {
            return None;
        }
        coarse.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.index.cmp(&b.index)));
        // A strong tone is explained almost equally well from several
        // neighbouring bins on the coarse grid, so nearby candidates sharing
        // a coarse cell with a leader are refined too. Far candidates barely
        // interact with their removed symbol and keep their coarse order.
        let leaders: Vec<f64> = coarse.iter().take(REFINED_HYPOTHESES).map(|c| c.index as f64 + c.offset).collect();
        let cell = 1.0 / p + 1e-9;
        coarse
            .into_iter()
            .enumerate()
            .filter(|(rank, c)| {
                *rank < REFINED_HYPOTHESES
                    || c.offset.abs() <= NEAR_WINDOW as f64 && leaders.iter().any(|&f| wrap_offset(c.index as f64 + c.offset - f, self.n).abs() <= cell)
            })
            .map(|(_, c)| self.refine(&r, c))
            .max_by(|a, b| a.gain.total_cmp(&b.gain).then(b.index.cmp(&a.index)))
            .map(|c| Hypothesis {
                index: c.index,
                offset: c.offset,
                alpha: self.alpha(&r, c.index, c.offset),
                gain: c.gain,
            })
    }

    /// Removes a hypothesis from the residual.
    fn subtract(&mut self, h: &Hypothesis) {
        let n = self.n;
        let f = h.index as f64 + h.offset;
        for (k, r) in self.residual.iter_mut().enumerate() {
            *r -= h.alpha * dirichlet(k as f64 - f, n) / n as f64;
        }
        self.residual[h.index] += self.expected[h.index];
        self.consumed[h.index] = true;
    }
}

fn reference_power(expected: &[Complex64]) -> f64 {
    expected.iter().map(|x| x.norm_sqr()).sum::<f64>() / expected.len() as f64
}

/// Offset of subcarrier `i` from the residual spectrum.
pub fn estimate_offset(
    received: &OfdmSymbol,
    reference: &[SubcarrierSymbol],
    i: usize,
    cfg: &DetectorConfig,
) -> Result<OffsetEstimate> {
    cfg.validate()?;
    let n = received.n_fft();
    check_index(i, n)?;
    let expected = spectrum_from_symbols(reference, n)?;
    let fit = ResidualFit::new(&spectrum(received.samples())?, &expected, cfg)?;
    let r = fit.time();
    let z = fit.coarse(&r);
    let correlation = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if correlation <= cfg.epsilon * reference_power(&expected).sqrt().max(f64::MIN_POSITIVE) {
        return Ok(OffsetEstimate {
            m_hat: 0.0,
            found: false,
            correlation,
            alpha: Complex64::new(0.0, 0.0),
        });
    }
    let p = cfg.oversample as f64;
    let mut coarse: Vec<Candidate> = (0..z.len())
        .map(|l| {
            let mu = wrap_offset(l as f64 / p - i as f64, n);
            let score = fit.score_coarse(&z, i, mu);
            Candidate {
                index: i,
                offset: mu,
                score,
                gain: score,
            }
        })
        .collect();
    coarse.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.offset.total_cmp(&b.offset)));
    let best = coarse
        .into_iter()
        .take(REFINED_HYPOTHESES)
        .map(|c| fit.refine(&r, c))
        .max_by(|a, b| a.score.total_cmp(&b.score))
        .expect("coarse grid is never empty");
    Ok(OffsetEstimate {
        m_hat: best.offset,
        found: true,
        correlation,
        alpha: fit.alpha(&r, i, best.offset),
    })
}

/// Empirical `psi` on a received symbol against reference symbols.
pub fn psi_empirical(
    received: &OfdmSymbol,
    reference: &[SubcarrierSymbol],
    cfg: &DetectorConfig,
) -> Result<EmpiricalDetection> {
    let n = received.n_fft();
    let expected = spectrum_from_symbols(reference, n)?;
    psi_empirical_bins(&spectrum(received.samples())?, &expected, cfg)
}

/// [`psi_empirical`] on spectra that are already aligned (for instance
/// equalized by a known channel response).
pub fn psi_empirical_bins(
    received: &[Complex64],
    expected: &[Complex64],
    cfg: &DetectorConfig,
) -> Result<EmpiricalDetection> {
    cfg.validate()?;
    let mut fit = ResidualFit::new(received, expected, cfg)?;
    let n = fit.n;
    let gate = cfg.gate_for(n);
    let floor = cfg.epsilon * reference_power(expected);
    let mut hypotheses = Vec::new();
    let mut noise_var = cfg.noise_var.unwrap_or(fit.energy() / n as f64);
    while hypotheses.len() < cfg.max_targets {
        let Some(h) = fit.best_hypothesis() else { break };
        let post = (fit.energy() - h.gain).max(0.0);
        noise_var = cfg.noise_var.unwrap_or(post / n as f64);
        if !(h.gain > gate * noise_var && h.gain > floor) {
            break;
        }
        fit.subtract(&h);
        hypotheses.push(h);
    }
    let mut psi = vec![0usize; n];
    let mut m_hat = vec![0.0; n];
    for h in &hypotheses {
        psi[h.index] = psi_analytic(h.index, h.offset, n, cfg.epsilon)?;
        m_hat[h.index] = h.offset;
    }
    let received_energy: f64 = received.iter().map(|y| y.norm_sqr()).sum();
    let mismatch_ratio = if received_energy > 0.0 {
        fit.energy() / received_energy
    } else {
        0.0
    };
    Ok(EmpiricalDetection {
        psi: PsiVector { values: psi },
        m_hat,
        hypotheses,
        noise_var,
        mismatch_ratio,
    })
}

pub fn detect(received: &OfdmSymbol, reference: &[SubcarrierSymbol], cfg: &DetectorConfig) -> Result<DetectionReport> {
    Ok(DetectionReport::from_empirical(psi_empirical(received, reference, cfg)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateCheck {
    pub n: usize,
    pub clean_fraction: f64,
    pub mismatch_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CauseAnalysis {
    pub cause: Cause,
    pub report: DetectionReport,
    pub candidates: Vec<CandidateCheck>,
}

/// Fraction of Clean verdicts a re-analysis must reach to count as
/// explaining the symbol.
const MOSTLY_CLEAN: f64 = 0.9;

/// Separates jamming from a wrongly assumed FFT size.
///
/// `samples` is the received buffer; the first `n` (or candidate) samples
/// are analyzed against `reference` at that size.
pub fn disambiguate_cause(
    samples: &[Complex64],
    reference: &ReferenceSource,
    n: usize,
    subcarrier_spacing: f64,
    candidates: &[usize],
    cfg: &DetectorConfig,
) -> Result<CauseAnalysis> {
    if candidates.contains(&n) {
        return Err(Error::invalid("candidates", format!("must exclude the current N = {n}")));
    }
    let analyze_at = |size: usize| -> Result<DetectionReport> {
        if samples.len() < size {
            return Err(Error::SizeMismatch {
                expected: size,
                found: samples.len(),
            });
        }
        let symbol = OfdmSymbol::new(samples[..size].to_vec(), subcarrier_spacing)?;
        detect(&symbol, &reference.symbols(size)?, cfg)
    };
    let report = analyze_at(n)?;
    if !report.is_pervasive(cfg) {
        let cause = if report.verdicts.iter().any(|v| *v != Verdict::Clean) {
            Cause::JammingSuspected
        } else {
            Cause::Clean
        };
        return Ok(CauseAnalysis {
            cause,
            report,
            candidates: Vec::new(),
        });
    }
    if candidates.is_empty() {
        return Err(Error::invalid("candidates", "needed to re-check a pervasive loss of orthogonality"));
    }
    let mut checks = Vec::new();
    for &c in candidates {
        if c > samples.len() || c < 2 {
            log::warn!("skipping candidate N = {c}: {} samples available", samples.len());
            continue;
        }
        let r = analyze_at(c)?;
        checks.push(CandidateCheck {
            n: c,
            clean_fraction: r.count(Verdict::Clean) as f64 / c as f64,
            mismatch_ratio: r.mismatch_ratio,
        });
    }
    let best = checks
        .iter()
        .filter(|c| c.clean_fraction >= MOSTLY_CLEAN && c.mismatch_ratio <= cfg.pervasive_mismatch)
        .min_by(|a, b| a.mismatch_ratio.total_cmp(&b.mismatch_ratio));
    let cause = match best {
        Some(c) => Cause::WrongNSuspected { best_n: c.n },
        None => Cause::JammingSuspected,
    };
    Ok(CauseAnalysis {
        cause,
        report,
        candidates: checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jammer::{apply_frequency_shift, JammerConfig};
    use crate::ofdm::{inner_product, synthesize, SubcarrierWaveform};

    /// psi by brute force on synthesized waveforms.
    fn psi_brute(i: usize, m: f64, n: usize) -> usize {
        let attacked = SubcarrierWaveform::tone(i as f64, 1.0, 0.0, n)
            .modulated_by(&SubcarrierWaveform::tone(m, 1.0, 0.0, n))
            .unwrap();
        (0..n)
            .filter(|&k| k != i)
            .filter(|&k| {
                let ck = SubcarrierWaveform::tone(k as f64, 1.0, 0.0, n);
                inner_product(&ck, &attacked).unwrap().norm() > 1e-6
            })
            .count()
    }

    #[test]
    fn trace_examples() {
        let t = trace_a(7, 5, 2.0, 8).unwrap();
        assert!((t.value - Complex64::new(8.0, 0.0)).norm() < 1e-12);
        assert!(trace_a(4, 5, 2.0, 8).unwrap().value.norm() < 1e-12);
        let t = trace_a(0, 5, 0.5, 8).unwrap();
        assert!((t.value.norm() - dirichlet(-5.5, 8).norm()).abs() < 1e-12);
        assert!(t.value.norm() > 0.0);
        assert!(trace_a(8, 0, 0.0, 8).is_err());
    }

    #[test]
    fn psi_examples_against_brute_force() {
        for i in 0..8 {
            assert_eq!(psi_analytic(i, 0.0, 8, 1e-6).unwrap(), 0);
        }
        assert_eq!(psi_brute(5, 0.5, 8), 7);
        assert_eq!(psi_analytic(5, 0.5, 8, 1e-6).unwrap(), 7);
        assert_eq!(psi_brute(5, 2.0, 8), 1);
        assert_eq!(psi_analytic(5, 2.0, 8, 1e-6).unwrap(), 1);
        assert!(psi_analytic(5, 0.5, 8, 0.0).is_err());
    }

    #[test]
    fn classify_examples() {
        let psi = PsiVector::new(vec![7, 0, 1, 3, 0, 0, 0, 0]).unwrap();
        let v = classify_loo(&psi);
        assert_eq!(v[0], Verdict::LoO);
        assert_eq!(v[1], Verdict::Clean);
        assert_eq!(v[2], Verdict::NoFullyLoO);
        assert_eq!(v[3], Verdict::NoFullyLoO);
        assert_eq!(psi.pair_budget(), 28);
        assert!(PsiVector::new(vec![8, 0, 0, 0, 0, 0, 0, 0]).is_err());
    }

    fn attacked(n: usize, target: usize, m: f64, amp: f64, phase: f64) -> (OfdmSymbol, Vec<SubcarrierSymbol>) {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64 + target as u64);
        let sym = qpsk_symbols(&mut rng, n);
        let clean = synthesize(&sym, n).unwrap();
        let cfg = JammerConfig::frequency_shift(vec![target], m, amp, phase);
        (apply_frequency_shift(&clean, &sym, &cfg).unwrap().0, sym)
    }

    #[test]
    fn offset_estimate_noiseless() {
        let (rx, sym) = attacked(64, 5, 0.5, 1.0, 0.7);
        let est = estimate_offset(&rx, &sym, 5, &DetectorConfig::default()).unwrap();
        assert!(est.found);
        assert!((est.m_hat - 0.5).abs() <= 0.01, "m_hat {}", est.m_hat);

        let clean = synthesize(&sym, 64).unwrap();
        let est = estimate_offset(&clean, &sym, 5, &DetectorConfig::default()).unwrap();
        assert!(!est.found);
        assert_eq!(est.m_hat, 0.0);
    }

    #[test]
    fn empirical_matches_analytic_noiseless() {
        let n = 64;
        let (rx, sym) = attacked(n, 5, 0.5, 1.0, 0.0);
        let det = psi_empirical(&rx, &sym, &DetectorConfig::default()).unwrap();
        assert_eq!(det.psi.values()[5], 63);
        assert!(det.psi.values().iter().enumerate().all(|(i, &v)| i == 5 || v == 0));
        assert_eq!(det.psi.values()[5], psi_analytic(5, 0.5, n, 1e-6).unwrap());

        let clean = synthesize(&sym, n).unwrap();
        let det = psi_empirical(&clean, &sym, &DetectorConfig::default()).unwrap();
        assert!(det.psi.values().iter().all(|&v| v == 0));
        assert!(det.hypotheses.is_empty());
    }

    #[test]
    fn integer_offset_gives_partial_loss() {
        let (rx, sym) = attacked(32, 9, 3.0, 1.0, 0.2);
        let report = detect(&rx, &sym, &DetectorConfig::default()).unwrap();
        assert_eq!(report.psi.values()[9], 1);
        assert_eq!(report.verdicts[9], Verdict::NoFullyLoO);
        assert_eq!(report.cause, Cause::JammingSuspected);
    }

    #[test]
    fn reference_mismatch_is_rejected() {
        let (rx, _) = attacked(16, 1, 0.5, 1.0, 0.0);
        let too_long: Vec<SubcarrierSymbol> = (0..17).map(|k| SubcarrierSymbol::new(k, 1.0, 0.0).unwrap()).collect();
        assert!(psi_empirical(&rx, &too_long, &DetectorConfig::default()).is_err());
        let cfg = DetectorConfig {
            offset_step: 0.0,
            ..DetectorConfig::default()
        };
        assert!(estimate_offset(&rx, &too_long[..16], 1, &cfg).is_err());
    }

    #[test]
    fn wrong_fft_size_is_recognised() {
        let reference = ReferenceSource::SeededQpsk { seed: 77 };
        let sym = reference.symbols(128).unwrap();
        let tx = synthesize(&sym, 128).unwrap();
        let cfg = DetectorConfig::default();
        let out = disambiguate_cause(tx.samples(), &reference, 64, 15e3, &[128, 256], &cfg).unwrap();
        assert_eq!(out.cause, Cause::WrongNSuspected { best_n: 128 });

        let out = disambiguate_cause(tx.samples(), &reference, 128, 15e3, &[64], &cfg).unwrap();
        assert_eq!(out.cause, Cause::Clean);
        assert!(disambiguate_cause(tx.samples(), &reference, 64, 15e3, &[64], &cfg).is_err());
        assert!(disambiguate_cause(tx.samples(), &reference, 64, 15e3, &[], &cfg).is_err());
    }

    #[test]
    fn single_attack_with_correct_size_is_jamming() {
        let reference = ReferenceSource::SeededQpsk { seed: 3 };
        let sym = reference.symbols(64).unwrap();
        let clean = synthesize(&sym, 64).unwrap();
        let cfg = JammerConfig::frequency_shift(vec![5], 0.5, 1.0, 0.0);
        let (rx, _) = apply_frequency_shift(&clean, &sym, &cfg).unwrap();
        let out = disambiguate_cause(rx.samples(), &reference, 64, 15e3, &[128], &DetectorConfig::default()).unwrap();
        assert_eq!(out.cause, Cause::JammingSuspected);
        assert_eq!(out.report.verdicts[5], Verdict::LoO);
    }
}
