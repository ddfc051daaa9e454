//! Simplified sign-bit probabilistic shaping for ASK constellations.
//!
//! Only the sign bit of a naturally labelled `M`-ASK symbol is shaped, and
//! adjacent symbols are grouped so that a handful of Bernoulli sources
//! (typically two) produce a stepwise Maxwell-Boltzmann-like distribution.
//! The crate provides:
//!
//! - [`constellation`]: alphabets, labelling, profiles and the switch rule
//! - [`midist`]: mutual information, profile optimization, gap conversions
//! - [`enumdm`]: the enumerative fixed-weight distribution matcher
//! - [`shaper`]: block encoder/decoder and the switch-overflow analysis
//! - [`simulate`]: an uncoded AWGN Monte Carlo harness
//! - [`budget`]: the end-to-end loss budget
//! - [`cli`]: command implementations behind the `sbshape` binary

pub mod budget;
pub mod cli;
pub mod constellation;
pub mod enumdm;
pub mod error;
pub mod midist;
pub mod shaper;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
