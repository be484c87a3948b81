//! Jamming simulation, loss-of-orthogonality detection and multiplicative
//! anti-jamming correction for OFDM physical channels.
//!
//! The crate is organised bottom-up:
//!
//! - [`ofdm`]: symbol synthesis/analysis, subcarrier inner products and the
//!   finite geometric (Dirichlet) sum.
//! - [`ssb`]: the 4 x 240 synchronization signal block layout with PBCH and
//!   PBCH-DMRS resource elements.
//! - [`jammer`]: frequency-shift, barrage-noise and pilot-nulling attacks.
//! - [`channel`]: tapped-delay-line fading and AWGN.
//! - [`detector`]: the pairwise trace test, its empirical counterpart on
//!   received samples, and cause disambiguation.
//! - [`antijam`]: corrective signal selection and application.
//! - [`sim`]: seeded Monte-Carlo trials and ROC computation.

pub mod antijam;
pub mod channel;
pub mod config;
pub mod detector;
mod error;
mod fft;
pub mod iq;
pub mod jammer;
pub mod ofdm;
pub mod sim;
pub mod ssb;

pub use error::{Error, Result};
pub use ofdm::{ComplexSample, OfdmSymbol, SubcarrierSymbol, SubcarrierWaveform};
