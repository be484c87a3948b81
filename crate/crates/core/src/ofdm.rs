//! Complex baseband OFDM symbols and subcarrier orthogonality.
//!
//! Synthesis carries the `1/N` factor, analysis does not, so
//! `analyze(synthesize(X)) == X` up to rounding:
//!
//! ```text
//! x_n = (1/N) sum_k X_k e^{j 2 pi k n / N}
//! Y_k =       sum_n x_n e^{-j 2 pi k n / N}
//! ```

use std::collections::HashSet;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;

pub type ComplexSample = Complex64;

/// 15 kHz numerology.
pub const DEFAULT_SCS_HZ: f64 = 15_000.0;

/// Below this `|sin(pi d / N)|` the Dirichlet closed form is replaced by
/// direct summation.
const DIRICHLET_SINGULAR: f64 = 1e-8;

/// One frequency-domain symbol `X_k = A_k e^{j psi_k}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubcarrierSymbol {
    pub index: usize,
    pub amplitude: f64,
    /// Radians in `[0, 2 pi)`.
    pub phase: f64,
}

impl SubcarrierSymbol {
    pub fn new(index: usize, amplitude: f64, phase: f64) -> Result<Self> {
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::invalid("amplitude", format!("{amplitude} is not a finite value >= 0")));
        }
        if !phase.is_finite() {
            return Err(Error::invalid("phase", "must be finite"));
        }
        Ok(Self {
            index,
            amplitude,
            phase: wrap_phase(phase),
        })
    }

    pub fn from_complex(index: usize, value: Complex64) -> Self {
        Self {
            index,
            amplitude: value.norm(),
            phase: wrap_phase(value.arg()),
        }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }
}

fn wrap_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// Time-domain samples of one OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmSymbol {
    samples: Vec<Complex64>,
    subcarrier_spacing: f64,
}

impl OfdmSymbol {
    pub fn new(samples: Vec<Complex64>, subcarrier_spacing: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidFftSize {
                n: samples.len(),
                min: 2,
            });
        }
        if !(subcarrier_spacing.is_finite() && subcarrier_spacing > 0.0) {
            return Err(Error::invalid("subcarrier_spacing", "must be positive"));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::invalid("samples", "contain NaN or infinite values"));
        }
        Ok(Self {
            samples,
            subcarrier_spacing,
        })
    }

    pub fn n_fft(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.subcarrier_spacing
    }

    pub fn sample_rate(&self) -> f64 {
        self.subcarrier_spacing * self.samples.len() as f64
    }

    /// Mean power per sample.
    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }

    /// Replaces the samples, keeping N and the spacing.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != self.samples.len() {
            return Err(Error::SizeMismatch {
                expected: self.samples.len(),
                found: samples.len(),
            });
        }
        Self::new(samples, self.subcarrier_spacing)
    }
}

pub(crate) fn mean_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|s| s.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Places symbols on an N-bin spectrum, checking index range and uniqueness.
pub fn spectrum_from_symbols(symbols: &[SubcarrierSymbol], n: usize) -> Result<Vec<Complex64>> {
    if n < 2 {
        return Err(Error::InvalidFftSize { n, min: 2 });
    }
    let mut seen = HashSet::with_capacity(symbols.len());
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    for s in symbols {
        if s.index >= n {
            return Err(Error::SubcarrierOutOfRange { index: s.index, n });
        }
        if !seen.insert(s.index) {
            return Err(Error::DuplicateSubcarrier(s.index));
        }
        bins[s.index] = s.value();
    }
    Ok(bins)
}

pub fn synthesize(symbols: &[SubcarrierSymbol], n: usize) -> Result<OfdmSymbol> {
    synthesize_with_spacing(symbols, n, DEFAULT_SCS_HZ)
}

pub fn synthesize_with_spacing(
    symbols: &[SubcarrierSymbol],
    n: usize,
    subcarrier_spacing: f64,
) -> Result<OfdmSymbol> {
    let bins = spectrum_from_symbols(symbols, n)?;
    OfdmSymbol::new(synthesize_bins(&bins), subcarrier_spacing)
}

/// `(1/N)`-scaled inverse DFT of a full spectrum.
pub fn synthesize_bins(bins: &[Complex64]) -> Vec<Complex64> {
    let mut buf = bins.to_vec();
    fft::inverse(&mut buf);
    let scale = 1.0 / bins.len().max(1) as f64;
    buf.iter_mut().for_each(|s| *s *= scale);
    buf
}

/// Unscaled forward DFT of arbitrary samples.
pub fn spectrum(samples: &[Complex64]) -> Result<Vec<Complex64>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("sample sequence"));
    }
    let mut buf = samples.to_vec();
    fft::forward(&mut buf);
    Ok(buf)
}

pub fn analyze(symbol: &OfdmSymbol) -> Vec<SubcarrierSymbol> {
    // OfdmSymbol is never empty
    let bins = spectrum(symbol.samples()).expect("OfdmSymbol holds at least two samples");
    bins.into_iter()
        .enumerate()
        .map(|(k, y)| SubcarrierSymbol::from_complex(k, y))
        .collect()
}

pub fn analyze_samples(samples: &[Complex64]) -> Result<Vec<SubcarrierSymbol>> {
    Ok(spectrum(samples)?
        .into_iter()
        .enumerate()
        .map(|(k, y)| SubcarrierSymbol::from_complex(k, y))
        .collect())
}

/// A single complex exponential `X e^{j n 2 pi k / N}` evaluated on demand.
///
/// `frequency` is integral for legitimate subcarriers and may be fractional
/// for shifted or jammer tones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubcarrierWaveform {
    pub frequency: f64,
    pub symbol: Complex64,
    pub n: usize,
}

impl SubcarrierWaveform {
    pub fn new(frequency: f64, symbol: Complex64, n: usize) -> Self {
        Self { frequency, symbol, n }
    }

    pub fn from_symbol(symbol: &SubcarrierSymbol, n: usize) -> Self {
        Self::new(symbol.index as f64, symbol.value(), n)
    }

    pub fn tone(frequency: f64, amplitude: f64, phase: f64, n: usize) -> Self {
        Self::new(frequency, Complex64::from_polar(amplitude, phase), n)
    }

    pub fn at(&self, n: usize) -> Complex64 {
        let cycles = (self.frequency * n as f64).rem_euclid(self.n as f64);
        self.symbol * Complex64::from_polar(1.0, TAU * cycles / self.n as f64)
    }

    /// Product of two waveforms: frequencies add, symbols multiply.
    pub fn modulated_by(&self, other: &SubcarrierWaveform) -> Result<SubcarrierWaveform> {
        if self.n != other.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(Self::new(
            self.frequency + other.frequency,
            self.symbol * other.symbol,
            self.n,
        ))
    }

    pub fn samples(&self) -> Vec<Complex64> {
        (0..self.n).map(|n| self.at(n)).collect()
    }
}

/// `O_ki = (1/N) sum_n c_k[n] conj(c_i[n])`.
pub fn inner_product(c_k: &SubcarrierWaveform, c_i: &SubcarrierWaveform) -> Result<Complex64> {
    if c_k.n != c_i.n {
        return Err(Error::SizeMismatch {
            expected: c_k.n,
            found: c_i.n,
        });
    }
    let n = c_k.n;
    let acc: Complex64 = (0..n).map(|t| c_k.at(t) * c_i.at(t).conj()).sum();
    Ok(acc / n as f64)
}

/// `sum_{n=0}^{N-1} e^{-j 2 pi d n / N}` for real `d`.
///
/// Integer `d` gives exactly `N` on multiples of `N` and exactly zero
/// elsewhere; fractional `d` gives the Dirichlet kernel
/// `sin(pi d) / sin(pi d / N) * e^{-j pi d (N-1) / N}`.
pub fn geometric_sum(d: f64, n: usize) -> Result<Complex64> {
    if n < 1 {
        return Err(Error::InvalidFftSize { n, min: 1 });
    }
    if !d.is_finite() {
        return Err(Error::invalid("d", "must be finite"));
    }
    Ok(dirichlet(d, n))
}

/// Unchecked geometric sum, `n >= 1` and finite `d` assumed.
pub(crate) fn dirichlet(d: f64, n: usize) -> Complex64 {
    let nf = n as f64;
    // the sum is N-periodic in d; fmod is exact
    let mut r = d.rem_euclid(nf);
    if r >= nf / 2.0 {
        r -= nf;
    }
    if r.fract() == 0.0 {
        return if r == 0.0 {
            Complex64::new(nf, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let denom = (PI * r / nf).sin();
    if denom.abs() < DIRICHLET_SINGULAR {
        return direct_sum(r, n);
    }
    // r = q + f with integer q keeps the large-argument trig exact
    let q = r.round();
    let f = r - q;
    let sign = if (q as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let magnitude = sign * (PI * f).sin() / denom;
    // e^{-j pi r (N-1)/N} = e^{-j pi r} e^{j pi r / N} = (-1)^q e^{-j pi f} e^{j pi r / N}
    let phase = Complex64::from_polar(sign, -PI * f + PI * r / nf);
    phase * magnitude
}

fn direct_sum(d: f64, n: usize) -> Complex64 {
    let step = -TAU * d / n as f64;
    (0..n).map(|t| Complex64::from_polar(1.0, step * t as f64)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orthogonality {
    Orthogonal,
    NonOrthogonal,
}

/// `Orthogonal` iff `|o| <= epsilon` (inclusive boundary).
pub fn orthogonality_classify(o: Complex64, epsilon: f64) -> Result<Orthogonality> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be > 0"));
    }
    Ok(if o.norm() <= epsilon {
        Orthogonality::Orthogonal
    } else {
        Orthogonality::NonOrthogonal
    })
}

/// Unit-amplitude QPSK symbols on every subcarrier.
pub fn qpsk_symbols<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<SubcarrierSymbol> {
    (0..n)
        .map(|k| {
            let quadrant = rng.random_range(0..4u8) as f64;
            SubcarrierSymbol {
                index: k,
                amplitude: 1.0,
                phase: PI / 4.0 + quadrant * PI / 2.0,
            }
        })
        .collect()
}
