//! Shared domain types, units, and numeric conventions.
//!
//! Everything downstream works in linear units internally: tap gains are
//! complex linear amplitudes, signal samples are dimensionless complex
//! baseband values. dB enters and leaves through the explicit conversion
//! functions in this module.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Width of one tap delay slot. Fixed by the emulation hardware grid.
pub const TAP_SLOT_SECONDS: f64 = 10e-9;

/// Number of delay slots in one FIR channel.
pub const TAP_SLOT_COUNT: usize = 512;

/// Maximum representable excess delay: `TAP_SLOT_COUNT * TAP_SLOT_SECONDS`.
pub const MAX_EXCESS_DELAY_SECONDS: f64 = TAP_SLOT_COUNT as f64 * TAP_SLOT_SECONDS;

/// Maximum number of non-zero taps per channel snapshot.
pub const MAX_ACTIVE_TAPS: usize = 4;

/// Default interval between channel tap updates.
pub const DEFAULT_UPDATE_INTERVAL_SECONDS: f64 = 1e-3;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared across the toolchain modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("seed 0 locks the shift register in the all-zeros state")]
    ZeroSeed,

    #[error("generator is not maximal-length: state period {measured} != {expected}")]
    NotMaximalLength { measured: u64, expected: u64 },

    #[error(
        "polynomials {poly_a:#x}, {poly_b:#x} are not a preferred pair: \
         off-peak cross-correlation values {values:?} are not within the three-valued set {allowed:?}"
    )]
    NotPreferredPair {
        poly_a: u64,
        poly_b: u64,
        values: Vec<i64>,
        allowed: [i64; 3],
    },

    #[error("unsupported LS length {requested}; supported lengths: {supported}")]
    UnsupportedLsLength { requested: usize, supported: String },

    #[error("duplicate ray-path row for link {tx}->{rx} at t={timestamp_s} s, toa={toa_s} s")]
    DuplicateRayPath {
        tx: u32,
        rx: u32,
        timestamp_s: f64,
        toa_s: f64,
    },

    #[error("link {tx}->{rx} has no ray sample at t={timestamp_s} s (channels must stay synchronized)")]
    MissingLinkSample {
        tx: u32,
        rx: u32,
        timestamp_s: f64,
    },

    #[error(
        "dropped {dropped_fraction:.1}% of path power beyond the {max_excess_us} us excess-delay window"
    )]
    ExcessDelayPowerLoss {
        dropped_fraction: f64,
        max_excess_us: f64,
    },

    #[error("malformed ray-path CSV at line {line}: {message}")]
    RayPathCsv { line: u64, message: String },

    #[error("no signal detected: no correlation peak above the detection threshold")]
    NoSignal,

    #[error("input block is longer than the channel timeline ({input_s} s > {timeline_s} s); pass loop_frames to wrap")]
    InputExceedsTimeline { input_s: f64, timeline_s: f64 },

    #[error("series has zero variance; normalized cross-correlation is undefined")]
    ZeroVariance,

    #[error("scenario bundle is malformed: {0}")]
    BadBundle(String),

    #[error("unknown node id {0}")]
    UnknownNode(u32),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad inputs rather than internal failures.
    /// The CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Json(_))
    }
}

fn ensure_finite(value: f64, what: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Amplitude ratio for a dB value: `10^(db/20)`.
pub fn db_to_linear_amplitude(db: f64) -> Result<f64> {
    Ok(10f64.powf(ensure_finite(db, "dB amplitude")? / 20.0))
}

/// Power ratio for a dB value: `10^(db/10)`.
pub fn db_to_linear_power(db: f64) -> Result<f64> {
    Ok(10f64.powf(ensure_finite(db, "dB power")? / 10.0))
}

/// dB value for an amplitude ratio: `20 log10(lin)`. Requires `lin > 0`.
pub fn linear_to_db_amplitude(lin: f64) -> Result<f64> {
    let lin = ensure_finite(lin, "linear amplitude")?;
    if lin <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "linear amplitude must be > 0, got {lin}"
        )));
    }
    Ok(20.0 * lin.log10())
}

/// dB value for a power ratio: `10 log10(lin)`. Requires `lin > 0`.
pub fn linear_to_db_power(lin: f64) -> Result<f64> {
    let lin = ensure_finite(lin, "linear power")?;
    if lin <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "linear power must be > 0, got {lin}"
        )));
    }
    Ok(10.0 * lin.log10())
}

/// A finite sequence of complex baseband samples at a fixed sample rate.
///
/// The universal signal currency between the emulator and the sounder.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqBlock {
    samples: Vec<Complex64>,
    sample_rate: f64,
    t0: f64,
}

impl IqBlock {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, t0: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("IqBlock needs at least one sample".into()));
        }
        let sample_rate = ensure_finite(sample_rate, "sample_rate")?;
        if sample_rate <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "sample_rate must be > 0, got {sample_rate}"
            )));
        }
        let t0 = ensure_finite(t0, "t0")?;
        Ok(Self {
            samples,
            sample_rate,
            t0,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one sample
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Total energy `sum |x(n)|^2`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// Mean power `energy / len`.
    pub fn mean_power(&self) -> f64 {
        self.energy() / self.samples.len() as f64
    }

    /// New block with every sample scaled by a (possibly complex) factor.
    pub fn scaled(&self, factor: Complex64) -> IqBlock {
        IqBlock {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            sample_rate: self.sample_rate,
            t0: self.t0,
        }
    }
}

/// One discrete multipath component on the 10 ns delay grid.
///
/// The gain is a complex linear amplitude; dB never appears inside this type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    delay_slot: u16,
    gain: Complex64,
}

impl Tap {
    pub fn new(delay_slot: u16, gain: Complex64) -> Result<Self> {
        if usize::from(delay_slot) >= TAP_SLOT_COUNT {
            return Err(Error::InvalidArgument(format!(
                "delay slot {delay_slot} outside [0, {})",
                TAP_SLOT_COUNT
            )));
        }
        if !gain.re.is_finite() || !gain.im.is_finite() {
            return Err(Error::NonFinite("tap gain"));
        }
        Ok(Self { delay_slot, gain })
    }

    pub fn delay_slot(&self) -> u16 {
        self.delay_slot
    }

    /// Delay in seconds on the slot grid.
    pub fn delay_seconds(&self) -> f64 {
        f64::from(self.delay_slot) * TAP_SLOT_SECONDS
    }

    pub fn gain(&self) -> Complex64 {
        self.gain
    }

    pub fn power(&self) -> f64 {
        self.gain.norm_sqr()
    }
}

/// One emulated channel snapshot: up to [`MAX_ACTIVE_TAPS`] non-zero taps on
/// the 512-slot, 10 ns grid, with strictly increasing slot indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapSet {
    taps: Vec<Tap>,
}

impl TapSet {
    pub fn new(taps: Vec<Tap>) -> Result<Self> {
        let active = taps.iter().filter(|t| t.gain.norm_sqr() > 0.0).count();
        if active > MAX_ACTIVE_TAPS {
            return Err(Error::InvalidArgument(format!(
                "{active} non-zero taps exceed the limit of {MAX_ACTIVE_TAPS}"
            )));
        }
        for pair in taps.windows(2) {
            if pair[1].delay_slot <= pair[0].delay_slot {
                return Err(Error::InvalidArgument(format!(
                    "tap slots must be strictly increasing, got {} then {}",
                    pair[0].delay_slot, pair[1].delay_slot
                )));
            }
        }
        Ok(Self { taps })
    }

    /// Empty snapshot (a fully attenuated channel).
    pub fn silent() -> Self {
        Self { taps: Vec::new() }
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    /// Total tap power `sum |g_k|^2`.
    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(Tap::power).sum()
    }

    /// Largest delay slot, or None when the set is silent.
    pub fn max_delay_slot(&self) -> Option<u16> {
        self.taps.last().map(Tap::delay_slot)
    }
}

/// Time-varying channel for one directed link: a sequence of tap snapshots,
/// each in force for one `update_interval`.
///
/// Frame `k` covers `[k * update_interval, (k+1) * update_interval)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirTimeline {
    update_interval: f64,
    frames: Vec<TapSet>,
}

impl CirTimeline {
    pub fn new(update_interval: f64, frames: Vec<TapSet>) -> Result<Self> {
        let update_interval = ensure_finite(update_interval, "update_interval")?;
        if update_interval <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "update_interval must be > 0, got {update_interval}"
            )));
        }
        if frames.is_empty() {
            return Err(Error::InvalidArgument("timeline needs at least one frame".into()));
        }
        Ok(Self {
            update_interval,
            frames,
        })
    }

    /// Static channel: one snapshot repeated for `count` frames.
    pub fn constant(update_interval: f64, taps: TapSet, count: usize) -> Result<Self> {
        Self::new(update_interval, vec![taps; count.max(1)])
    }

    pub fn update_interval(&self) -> f64 {
        self.update_interval
    }

    pub fn frames(&self) -> &[TapSet] {
        &self.frames
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn duration(&self) -> f64 {
        self.frames.len() as f64 * self.update_interval
    }

    /// Snapshot in force at time `t` (clamped to the last frame).
    pub fn frame_at(&self, t: f64) -> &TapSet {
        let idx = if t <= 0.0 {
            0
        } else {
            ((t / self.update_interval).floor() as usize).min(self.frames.len() - 1)
        };
        &self.frames[idx]
    }
}

/// One pre-quantization channel snapshot straight out of a ray tracer:
/// an arbitrary number of (time-of-arrival, complex gain) paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCir {
    timestamp: f64,
    paths: Vec<RayPath>,
}

/// A single propagation path before tap quantization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayPath {
    pub toa_s: f64,
    pub gain: Complex64,
}

impl RawCir {
    /// Builds a snapshot, sorting paths by time of arrival.
    pub fn new(timestamp: f64, mut paths: Vec<RayPath>) -> Result<Self> {
        let timestamp = ensure_finite(timestamp, "timestamp")?;
        for p in &paths {
            if !p.toa_s.is_finite() || p.toa_s < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "path toa must be finite and >= 0, got {}",
                    p.toa_s
                )));
            }
            if !p.gain.re.is_finite() || !p.gain.im.is_finite() {
                return Err(Error::NonFinite("path gain"));
            }
        }
        paths.sort_by(|a, b| a.toa_s.total_cmp(&b.toa_s));
        Ok(Self { timestamp, paths })
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn paths(&self) -> &[RayPath] {
        &self.paths
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }
}

/// Radio-chain parameters shared by the emulator and the sounder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Transmitted signal power, dB (P_t).
    pub tx_power_db: f64,
    /// Transmitter gain, dB (G_t).
    pub tx_gain_db: f64,
    /// Receiver gain, dB (G_r).
    pub rx_gain_db: f64,
    /// Carrier frequency, Hz.
    pub center_freq_hz: f64,
    /// Receiver-referred noise floor, dB relative to unit transmit power.
    pub noise_floor_db: f64,
    /// Fixed loss of the emulation chain, dB.
    pub base_loss_db: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            tx_power_db: 0.0,
            tx_gain_db: 0.0,
            rx_gain_db: 0.0,
            center_freq_hz: 1e9,
            noise_floor_db: -100.0,
            base_loss_db: 57.55,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.tx_power_db, "tx_power_db"),
            (self.tx_gain_db, "tx_gain_db"),
            (self.rx_gain_db, "rx_gain_db"),
            (self.center_freq_hz, "center_freq_hz"),
            (self.noise_floor_db, "noise_floor_db"),
            (self.base_loss_db, "base_loss_db"),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite, got {v}")));
            }
        }
        if self.noise_floor_db >= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "noise_floor_db must be negative, got {}",
                self.noise_floor_db
            )));
        }
        if self.base_loss_db < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "base_loss_db must be >= 0, got {}",
                self.base_loss_db
            )));
        }
        Ok(())
    }
}
