//! Multiplicative correction of shifted subcarriers.
//!
//! A detected subcarrier `i` with estimated offset `m_hat` is multiplied by
//! a corrective tone `c_m' = A e^{j phi} e^{j n 2 pi m' / N}`. Two ways to
//! pick `m'` are provided:
//!
//! - [`Policy::OffsetNegation`] (default): `m' = -m_hat`, which moves the
//!   tone back onto bin `i`.
//! - [`Policy::PaperAvoidanceRule`]: the first candidate on an ascending
//!   `|m'|` grid with `m' + k + i_tilde` never a multiple of `N`. For an
//!   integer `i_tilde` no integer candidate passes, and any fractional one
//!   does, so this rule avoids resonance without restoring orthogonality.
//!   [`AvoidanceCheck::Difference`] swaps in the condition that actually
//!   restores it: `i_tilde + m'` lands on `i` and on no other `k`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detector::{detect, DetectionReport, DetectorConfig, Hypothesis};
use crate::error::{Error, Result};
use crate::jammer::tone;
use crate::ofdm::{spectrum, spectrum_from_symbols, OfdmSymbol, SubcarrierSymbol};

/// Tolerance for deciding that a real number is a multiple of `N`.
const RESONANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    #[serde(rename = "paper")]
    PaperAvoidanceRule,
    #[default]
    #[serde(rename = "negation")]
    OffsetNegation,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AvoidanceCheck {
    /// `m' + k + i_tilde` is not a multiple of `N` for any `k`.
    #[default]
    Sum,
    /// `k - i_tilde - m'` is a multiple of `N` for `k = index` only.
    Difference { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionSignal {
    pub m_prime: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub policy: Policy,
}

impl CorrectionSignal {
    pub fn new(m_prime: f64, amplitude: f64, phase: f64, policy: Policy) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::invalid("amplitude", "must be > 0"));
        }
        if !m_prime.is_finite() || !phase.is_finite() {
            return Err(Error::invalid("correction", "m' and phase must be finite"));
        }
        Ok(Self {
            m_prime,
            amplitude,
            phase,
            policy,
        })
    }

    pub fn identity() -> Self {
        Self {
            m_prime: 0.0,
            amplitude: 1.0,
            phase: 0.0,
            policy: Policy::OffsetNegation,
        }
    }

    /// The correction that undoes this one.
    pub fn inverse(&self) -> Self {
        Self {
            m_prime: -self.m_prime,
            amplitude: 1.0 / self.amplitude,
            phase: -self.phase,
            policy: self.policy,
        }
    }

    /// `c_m'[t]` for `t` in `0..n`.
    pub fn samples(&self, n: usize) -> Vec<Complex64> {
        let nf = n as f64;
        let x = Complex64::from_polar(self.amplitude, self.phase);
        (0..n)
            .map(|t| {
                let cycles = (self.m_prime * t as f64).rem_euclid(nf);
                x * Complex64::from_polar(1.0, TAU * cycles / nf)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionOutcome {
    pub psi_before: usize,
    pub psi_after: usize,
    /// Residual energy after correction relative to the reference energy.
    pub residual_leakage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntijamConfig {
    pub policy: Policy,
    pub candidate_step: f64,
    pub candidate_max: f64,
    pub check: AvoidanceCheck,
}

impl Default for AntijamConfig {
    fn default() -> Self {
        Self {
            policy: Policy::OffsetNegation,
            candidate_step: 0.5,
            candidate_max: 8.0,
            check: AvoidanceCheck::Sum,
        }
    }
}

impl AntijamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.candidate_step > 0.0 && self.candidate_step.is_finite()) {
            return Err(Error::invalid("candidate_step", "must be > 0"));
        }
        if !(self.candidate_max >= 0.0 && self.candidate_max.is_finite()) {
            return Err(Error::invalid("candidate_max", "must be >= 0"));
        }
        Ok(())
    }
}

/// `0, -s, s, -2s, 2s, ...` up to `|m'| <= max`.
pub fn candidate_grid(step: f64, max: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut j = 1.0;
    while j * step <= max + RESONANCE_TOL {
        out.push(-j * step);
        out.push(j * step);
        j += 1.0;
    }
    out
}

fn multiple_of(x: f64, n: usize) -> bool {
    let q = x / n as f64;
    (q - q.round()).abs() * n as f64 <= RESONANCE_TOL
}

pub fn satisfies_avoidance(m_prime: f64, i_tilde: f64, n: usize, check: AvoidanceCheck) -> bool {
    match check {
        AvoidanceCheck::Sum => (0..n).all(|k| !multiple_of(m_prime + k as f64 + i_tilde, n)),
        AvoidanceCheck::Difference { index } => (0..n).all(|k| {
            let resonant = multiple_of(k as f64 - i_tilde - m_prime, n);
            resonant == (k == index)
        }),
    }
}

/// First candidate passing the avoidance rule, or `None`.
pub fn select_m_prime_paper(i_tilde: f64, n: usize, candidates: &[f64]) -> Option<f64> {
    select_m_prime_with(i_tilde, n, candidates, AvoidanceCheck::Sum)
}

pub fn select_m_prime_with(i_tilde: f64, n: usize, candidates: &[f64], check: AvoidanceCheck) -> Option<f64> {
    candidates
        .iter()
        .copied()
        .find(|&m| satisfies_avoidance(m, i_tilde, n, check))
}

pub fn select_m_prime_negation(m_hat: f64) -> CorrectionSignal {
    CorrectionSignal {
        m_prime: -m_hat,
        amplitude: 1.0,
        phase: 0.0,
        policy: Policy::OffsetNegation,
    }
}

/// `input[t] * c_m'[t]`.
pub fn apply_correction(input: &[Complex64], corr: &CorrectionSignal, n: usize) -> Result<Vec<Complex64>> {
    if input.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            found: input.len(),
        });
    }
    Ok(input.iter().zip(corr.samples(n)).map(|(x, c)| x * c).collect())
}

/// Correction for one accepted hypothesis: the policy's `m'`, amplitude
/// `1 / A_m_hat` and phase `-arg(alpha / X_i)` so that a perfect estimate
/// restores `X_i` exactly.
pub fn correction_for(h: &Hypothesis, x_i: Complex64, n: usize, cfg: &AntijamConfig) -> Result<Option<CorrectionSignal>> {
    cfg.validate()?;
    let (amplitude, phase) = if x_i.norm() > 0.0 && h.alpha.norm() > 0.0 {
        let a_m = h.alpha / x_i;
        (1.0 / a_m.norm(), -a_m.arg())
    } else {
        (1.0, 0.0)
    };
    let m_prime = match cfg.policy {
        Policy::OffsetNegation => Some(-h.offset),
        Policy::PaperAvoidanceRule => {
            let grid = candidate_grid(cfg.candidate_step, cfg.candidate_max);
            let check = match cfg.check {
                AvoidanceCheck::Sum => AvoidanceCheck::Sum,
                AvoidanceCheck::Difference { .. } => AvoidanceCheck::Difference { index: h.index },
            };
            select_m_prime_with(h.index as f64 + h.offset, n, &grid, check)
        }
    };
    m_prime
        .map(|m| CorrectionSignal::new(m, amplitude, phase, cfg.policy))
        .transpose()
}

/// Replaces the estimated shifted contribution of subcarrier `index`,
/// `(alpha / N) e^{j n 2 pi (index + m_hat) / N}`, by itself times `c_m'`.
pub fn correct_received(
    received: &OfdmSymbol,
    index: usize,
    alpha: Complex64,
    m_hat: f64,
    corr: &CorrectionSignal,
) -> Result<OfdmSymbol> {
    let n = received.n_fft();
    if index >= n {
        return Err(Error::SubcarrierOutOfRange { index, n });
    }
    let estimate: Vec<Complex64> = tone(alpha, index as f64 + m_hat, n).collect();
    let corrected = apply_correction(&estimate, corr, n)?;
    let out = received
        .samples()
        .iter()
        .zip(estimate.iter().zip(&corrected))
        .map(|(y, (e, c))| y - e + c)
        .collect();
    received.with_samples(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppliedCorrection {
    pub index: usize,
    pub m_hat: f64,
    pub signal: CorrectionSignal,
}

/// Corrects every hypothesis in `report` that lost orthogonality with at
/// least one other subcarrier.
pub fn correct_report(
    received: &OfdmSymbol,
    reference: &[SubcarrierSymbol],
    report: &DetectionReport,
    cfg: &AntijamConfig,
) -> Result<(OfdmSymbol, Vec<AppliedCorrection>)> {
    let n = received.n_fft();
    let expected = spectrum_from_symbols(reference, n)?;
    let mut out = received.clone();
    let mut applied = Vec::new();
    for h in report.hypotheses.iter().filter(|h| report.psi.values()[h.index] > 0) {
        let Some(signal) = correction_for(h, expected[h.index], n, cfg)? else {
            continue;
        };
        out = correct_received(&out, h.index, h.alpha, h.offset, &signal)?;
        applied.push(AppliedCorrection {
            index: h.index,
            m_hat: h.offset,
            signal,
        });
    }
    Ok((out, applied))
}

fn max_psi(report: &DetectionReport) -> usize {
    report.psi.values().iter().copied().max().unwrap_or(0)
}

/// Reruns detection on `received` and `corrected`.
pub fn verify_restoration(
    received: &OfdmSymbol,
    corrected: &OfdmSymbol,
    reference: &[SubcarrierSymbol],
    cfg: &DetectorConfig,
) -> Result<CorrectionOutcome> {
    let before = detect(received, reference, cfg)?;
    let after = detect(corrected, reference, cfg)?;
    Ok(CorrectionOutcome {
        psi_before: max_psi(&before),
        psi_after: max_psi(&after),
        residual_leakage: residual_leakage(corrected, reference)?,
    })
}

/// `||analyze(x) - X||^2 / ||X||^2`.
pub fn residual_leakage(x: &OfdmSymbol, reference: &[SubcarrierSymbol]) -> Result<f64> {
    let expected = spectrum_from_symbols(reference, x.n_fft())?;
    let got = spectrum(x.samples())?;
    let energy: f64 = expected.iter().map(|v| v.norm_sqr()).sum();
    if !(energy > 0.0) {
        return Err(Error::ZeroPower("reference"));
    }
    let resid: f64 = got.iter().zip(&expected).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(resid / energy)
}

/// Largest leakage into any other bin from a unit symbol left at offset
/// `delta` from its bin: `|sin(pi delta)| / (N sin(pi (1 - |delta|) / N))`.
pub fn dirichlet_leakage_bound(delta: f64, n: usize) -> f64 {
    let d = delta.abs();
    let nf = n as f64;
    (std::f64::consts::PI * d).sin().abs() / (nf * (std::f64::consts::PI * (1.0 - d) / nf).sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jammer::{apply_frequency_shift, JammerConfig};
    use crate::ofdm::{qpsk_symbols, synthesize};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Avoidance by enumerating `z` explicitly.
    fn avoids_brute(m: f64, i_tilde: f64, n: usize) -> bool {
        for k in 0..n {
            for z in -4i64..=4 {
                if (m + k as f64 + i_tilde - (z * n as i64) as f64).abs() < 1e-12 {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn paper_rule_examples() {
        assert!(!satisfies_avoidance(1.0, 5.0, 8, AvoidanceCheck::Sum));
        assert_eq!(select_m_prime_paper(5.0, 8, &[0.5]), Some(0.5));
        let ints: Vec<f64> = (0..8).map(f64::from).collect();
        assert_eq!(select_m_prime_paper(5.0, 8, &ints), None);
        for &m in &[0.5, 1.0] {
            assert_eq!(satisfies_avoidance(m, 5.0, 8, AvoidanceCheck::Sum), avoids_brute(m, 5.0, 8));
        }
    }

    #[test]
    fn difference_check_needs_landing_on_index() {
        let check = AvoidanceCheck::Difference { index: 5 };
        assert!(satisfies_avoidance(-0.5, 5.5, 8, check));
        assert!(!satisfies_avoidance(0.5, 5.5, 8, check));
        assert!(!satisfies_avoidance(0.0, 5.5, 8, check));
        assert_eq!(select_m_prime_with(5.5, 8, &candidate_grid(0.5, 2.0), check), Some(-0.5));
    }

    #[test]
    fn grid_order() {
        assert_eq!(candidate_grid(0.5, 1.0), vec![0.0, -0.5, 0.5, -1.0, 1.0]);
    }

    #[test]
    fn negation_examples() {
        assert_eq!(select_m_prime_negation(0.5).m_prime, -0.5);
        assert_eq!(select_m_prime_negation(0.0).m_prime, 0.0);
        assert_eq!(select_m_prime_negation(-1.25).m_prime, 1.25);
        assert_eq!(select_m_prime_negation(0.5).amplitude, 1.0);
    }

    #[test]
    fn identity_correction_is_noop() {
        let x: Vec<Complex64> = (0..16).map(|t| Complex64::new(t as f64, -1.0)).collect();
        assert_eq!(apply_correction(&x, &CorrectionSignal::identity(), 16).unwrap(), x);
        assert!(apply_correction(&x, &CorrectionSignal::identity(), 8).is_err());
        assert!(CorrectionSignal::new(0.0, 0.0, 0.0, Policy::OffsetNegation).is_err());
    }

    fn scenario(n: usize, target: usize, m: f64) -> (OfdmSymbol, OfdmSymbol, Vec<SubcarrierSymbol>) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sym = qpsk_symbols(&mut rng, n);
        let clean = synthesize(&sym, n).unwrap();
        let cfg = JammerConfig::frequency_shift(vec![target], m, 2.0, 0.4);
        let rx = apply_frequency_shift(&clean, &sym, &cfg).unwrap().0;
        (clean, rx, sym)
    }

    #[test]
    fn negation_restores_noiseless_attack() {
        let (clean, rx, sym) = scenario(64, 5, 0.5);
        let cfg = DetectorConfig::default();
        let report = detect(&rx, &sym, &cfg).unwrap();
        let (fixed, applied) = correct_report(&rx, &sym, &report, &AntijamConfig::default()).unwrap();
        assert_eq!(applied.len(), 1);
        assert!((applied[0].signal.m_prime + 0.5).abs() < 1e-9);
        let out = verify_restoration(&rx, &fixed, &sym, &cfg).unwrap();
        assert_eq!(out.psi_before, 63);
        assert_eq!(out.psi_after, 0);
        assert!(out.residual_leakage < 1e-12);
        for (a, b) in fixed.samples().iter().zip(clean.samples()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn no_correction_keeps_psi() {
        let (_, rx, sym) = scenario(32, 3, 0.3);
        let out = verify_restoration(&rx, &rx, &sym, &DetectorConfig::default()).unwrap();
        assert_eq!(out.psi_after, out.psi_before);
    }

    #[test]
    fn correcting_a_clean_signal_breaks_it() {
        let n = 32;
        let (clean, _, sym) = scenario(n, 3, 0.3);
        let corr = CorrectionSignal::new(0.5, 1.0, 0.0, Policy::OffsetNegation).unwrap();
        let broken = correct_received(&clean, 3, sym[3].value(), 0.0, &corr).unwrap();
        let out = verify_restoration(&clean, &broken, &sym, &DetectorConfig::default()).unwrap();
        assert_eq!(out.psi_before, 0);
        assert_eq!(out.psi_after, n - 1);
    }

    #[test]
    fn near_miss_leakage_within_bound() {
        let n = 64;
        let (_, rx, sym) = scenario(n, 5, 0.5);
        let x_i = sym[5].value();
        let alpha = x_i * Complex64::from_polar(2.0, 0.4);
        let corr = CorrectionSignal::new(-0.49, 0.5, -0.4, Policy::OffsetNegation).unwrap();
        let fixed = correct_received(&rx, 5, alpha, 0.5, &corr).unwrap();
        let expected = spectrum_from_symbols(&sym, n).unwrap();
        let got = spectrum(fixed.samples()).unwrap();
        let worst = (0..n)
            .filter(|&k| k != 5)
            .map(|k| (got[k] - expected[k]).norm() / x_i.norm())
            .fold(0.0, f64::max);
        assert!(worst > 0.0);
        assert!(worst <= dirichlet_leakage_bound(0.01, n) * (1.0 + 1e-9), "{worst}");
    }

    #[test]
    fn paper_policy_picks_non_resonant_offset() {
        let (_, rx, sym) = scenario(64, 5, 2.0);
        let report = detect(&rx, &sym, &DetectorConfig::default()).unwrap();
        let cfg = AntijamConfig {
            policy: Policy::PaperAvoidanceRule,
            ..AntijamConfig::default()
        };
        let (_, applied) = correct_report(&rx, &sym, &report, &cfg).unwrap();
        assert_eq!(applied.len(), 1);
        assert_eq!(applied[0].signal.m_prime, -0.5);
    }
}
