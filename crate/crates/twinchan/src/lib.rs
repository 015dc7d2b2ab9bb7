//! Software twin of a hardware-in-the-loop wireless channel emulator.
//!
//! The crate covers the full channel-twinning loop:
//!
//! * [`scenario`] compiles ray-traced multipath descriptions and node
//!   trajectories into time-varying FIR tap scenarios (`.twsc` bundles).
//! * [`emulator`] applies those taps to complex baseband signals: per-link
//!   tapped-delay-line filtering, multi-transmitter superposition, base
//!   loss, and a receiver noise floor.
//! * [`sequences`] generates the sounding code families (GLFSR/LFSR
//!   m-sequences, Gold, Golay complementary, LS) and their correlation
//!   figures of merit.
//! * [`sounder`] drives a BPSK code sequence through the emulator and
//!   recovers the channel impulse response, tap delays, and path gains by
//!   cross-correlation.
//! * [`analysis`] compares metric time series (emulated vs. measured) with
//!   a normalized cross-correlation similarity score.
//!
//! All signal math is double precision; dB values are converted to linear
//! amplitudes at I/O boundaries only.

pub mod analysis;
pub mod emulator;
pub mod fixtures;
pub mod scenario;
pub mod sequences;
pub mod sounder;
pub mod types;

mod fft;

pub use types::{Error, Result};
