//! Correlation channel sounder: drive a known BPSK code sequence through the
//! emulator, recover the channel impulse response by cross-correlation, and
//! report tap delays, path gains, and per-frame stability statistics.
//!
//! The CIR rails are `hI = (rI x sI) / (sI . sI)` and, because BPSK carries
//! all reference energy on I, `hQ = (rQ x sI) / (sI . sI)`: the quadrature
//! rail is correlated against the same in-phase reference so complex tap
//! phases are captured.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use num_complex::Complex64;

use crate::emulator::{superimpose_with, EmulationSession};
use crate::fft::{xcorr_real_cyclic_fft, xcorr_real_fft};
use crate::sequences::CodeSequence;
use crate::types::{db_to_linear_amplitude, Error, IqBlock, RadioParams, Result};

/// Default detection margin above the window's median level, dB.
pub const DEFAULT_PEAK_THRESHOLD_DB: f64 = 12.0;

/// Gain floor substituted for zero CIR magnitudes, dB.
pub const PATH_GAIN_FLOOR_DB: f64 = -200.0;

/// How the received window is indexed beyond its boundary during
/// correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    /// Out-of-window samples are zero; the first and last partial code
    /// periods are discarded downstream.
    #[default]
    ZeroPad,
    /// The window wraps cyclically; interior windows of a repeated
    /// transmission are equivalent to this.
    Cyclic,
}

/// Which per-frame CIR traces a [`SoundingResult`] retains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameRetention {
    /// Keep only the anchor-aligned average magnitude profile.
    #[default]
    Averaged,
    /// Keep every frame's magnitude trace.
    All,
    /// Keep none.
    None,
}

/// Sounding run parameters.
#[derive(Debug, Clone)]
pub struct SoundingConfig {
    pub code: CodeSequence,
    /// Code repetitions in the transmitted stream.
    pub repetitions: usize,
    pub sample_rate: f64,
    /// Chip rate; `sample_rate / chip_rate` must be a whole number of
    /// samples per chip.
    pub chip_rate: f64,
    /// Total capture length, seconds.
    pub capture_duration: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    /// Peak detection margin over the window median, dB.
    pub threshold_offset_db: f64,
    pub correlation_mode: CorrelationMode,
    pub keep_frames: FrameRetention,
}

impl SoundingConfig {
    /// Defaults mirroring the laboratory setup: 3 s capture, one sample per
    /// chip, unity gains; repetitions fill the capture.
    pub fn new(code: CodeSequence, sample_rate: f64) -> Result<Self> {
        let capture_duration = 3.0;
        let period = code.len() as f64 / sample_rate;
        let repetitions = ((capture_duration / period).floor() as usize).max(1);
        let cfg = Self {
            code,
            repetitions,
            sample_rate,
            chip_rate: sample_rate,
            capture_duration,
            tx_gain_db: 0.0,
            rx_gain_db: 0.0,
            threshold_offset_db: DEFAULT_PEAK_THRESHOLD_DB,
            correlation_mode: CorrelationMode::ZeroPad,
            keep_frames: FrameRetention::Averaged,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Shortens the capture to `seconds` and refills the repetition count.
    pub fn with_capture(mut self, seconds: f64) -> Result<Self> {
        self.capture_duration = seconds;
        self.repetitions = ((seconds * self.sample_rate
            / self.code_period_samples()? as f64)
            .floor() as usize)
            .max(1);
        self.validate()?;
        Ok(self)
    }

    pub fn samples_per_chip(&self) -> Result<usize> {
        let ratio = self.sample_rate / self.chip_rate;
        if !ratio.is_finite() || (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "sample rate {} is not an integer multiple of chip rate {}",
                self.sample_rate, self.chip_rate
            )));
        }
        Ok(ratio.round() as usize)
    }

    /// One code period in samples: `N * samples_per_chip`.
    pub fn code_period_samples(&self) -> Result<usize> {
        Ok(self.code.len() * self.samples_per_chip()?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("repetitions must be >= 1".into()));
        }
        let period_s = self.code_period_samples()? as f64 / self.sample_rate;
        if self.capture_duration + 1e-12 < self.repetitions as f64 * period_s {
            return Err(Error::InvalidArgument(format!(
                "capture of {} s cannot hold {} repetitions of a {} s period",
                self.capture_duration, self.repetitions, period_s
            )));
        }
        Ok(())
    }
}

/// Maps chips to BPSK baseband: the chip value on the I rail, zero on Q,
/// each chip held for `sample_rate / chip_rate` samples, the whole sequence
/// repeated `repetitions` times. Mean power is exactly 1.
pub fn bpsk_modulate(
    code: &CodeSequence,
    repetitions: usize,
    sample_rate: f64,
    chip_rate: f64,
) -> Result<IqBlock> {
    if repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be >= 1".into()));
    }
    let ratio = sample_rate / chip_rate;
    if !ratio.is_finite() || (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "sample rate {sample_rate} is not an integer multiple of chip rate {chip_rate}"
        )));
    }
    let spc = ratio.round() as usize;
    let mut samples = Vec::with_capacity(code.len() * spc * repetitions);
    for _ in 0..repetitions {
        for &chip in code.chips() {
            let v = Complex64::new(f64::from(chip), 0.0);
            samples.extend(std::iter::repeat_n(v, spc));
        }
    }
    IqBlock::new(samples, sample_rate, 0.0)
}

/// Cross-correlation of a reference against a received window:
/// `chi(k) = sum_n x(n) * y(n+k)` for `k in 0..len(y)`, with `y` zero-padded
/// or cyclically wrapped beyond its boundary.
///
/// Small products are evaluated directly (exact for chip-valued inputs);
/// large ones go through the FFT, which matches the direct form to
/// round-off.
pub fn cross_correlate(x: &[f64], y: &[f64], mode: CorrelationMode) -> Vec<f64> {
    if x.is_empty() || y.is_empty() {
        return Vec::new();
    }
    let fft_worthwhile = x.len().saturating_mul(y.len()) > (1 << 22);
    match mode {
        CorrelationMode::ZeroPad => {
            if fft_worthwhile {
                xcorr_real_fft(x, y)
            } else {
                (0..y.len())
                    .map(|k| {
                        x.iter()
                            .enumerate()
                            .map(|(n, &xv)| xv * y.get(n + k).copied().unwrap_or(0.0))
                            .sum()
                    })
                    .collect()
            }
        }
        CorrelationMode::Cyclic => {
            if fft_worthwhile && x.len() <= y.len() {
                xcorr_real_cyclic_fft(x, y)
            } else {
                (0..y.len())
                    .map(|k| {
                        x.iter()
                            .enumerate()
                            .map(|(n, &xv)| xv * y[(n + k) % y.len()])
                            .sum()
                    })
                    .collect()
            }
        }
    }
}

/// Estimates the CIR rails by correlating the received rails against one
/// BPSK code period and normalizing by the reference energy
/// (`N * samples_per_chip` for unit chips).
pub fn estimate_cir(
    rx: &IqBlock,
    code: &CodeSequence,
    samples_per_chip: usize,
    mode: CorrelationMode,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples_per_chip == 0 {
        return Err(Error::InvalidArgument("samples_per_chip must be >= 1".into()));
    }
    let period = code.len() * samples_per_chip;
    if rx.len() < period {
        return Err(Error::InvalidArgument(format!(
            "received window of {} samples is shorter than one code period of {period}",
            rx.len()
        )));
    }
    let mut reference = Vec::with_capacity(period);
    for &chip in code.chips() {
        reference.extend(std::iter::repeat_n(f64::from(chip), samples_per_chip));
    }
    let r_i: Vec<f64> = rx.samples().iter().map(|s| s.re).collect();
    let r_q: Vec<f64> = rx.samples().iter().map(|s| s.im).collect();
    let denom = period as f64;
    let mut h_i = cross_correlate(&reference, &r_i, mode);
    let mut h_q = cross_correlate(&reference, &r_q, mode);
    for v in h_i.iter_mut().chain(h_q.iter_mut()) {
        *v /= denom;
    }
    Ok((h_i, h_q))
}

/// Pointwise CIR magnitude `sqrt(hI^2 + hQ^2)`.
pub fn cir_magnitude(h_i: &[f64], h_q: &[f64]) -> Vec<f64> {
    debug_assert_eq!(h_i.len(), h_q.len());
    h_i.iter()
        .zip(h_q)
        .map(|(&i, &q)| (i * i + q * q).sqrt())
        .collect()
}

/// Path gain trace `G_p = 20 log10 |h| - P_t - G_t - G_r`, with zero (and
/// sub-floor) magnitudes clamped at [`PATH_GAIN_FLOOR_DB`].
pub fn path_gain_db(h_mag: &[f64], params: &RadioParams) -> Vec<f64> {
    let offset = params.tx_power_db + params.tx_gain_db + params.rx_gain_db;
    h_mag
        .iter()
        .map(|&m| {
            if m <= 0.0 {
                PATH_GAIN_FLOOR_DB
            } else {
                (20.0 * m.log10() - offset).max(PATH_GAIN_FLOOR_DB)
            }
        })
        .collect()
}

/// One detected multipath component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapEstimate {
    /// Delay relative to the strongest tap, seconds.
    pub toa_s: f64,
    /// Reported gain: the median across sounded frames, dB.
    pub gain_db: f64,
    /// Sample standard deviation of the per-frame gains, dB.
    pub sd_db: f64,
    /// Per-frame gains for stability analysis, dB.
    pub per_frame_gain_db: Vec<f64>,
}

/// Peaks of a CIR magnitude window: the strongest peak anchors `toa = 0`,
/// and every other local maximum above `median + threshold_offset_db`
/// becomes a tap with its gain read from the path-gain trace at the peak.
pub fn extract_taps(
    h_mag: &[f64],
    sample_rate: f64,
    code_period_samples: usize,
    params: &RadioParams,
    threshold_offset_db: f64,
) -> Result<Vec<(f64, f64)>> {
    if h_mag.len() < code_period_samples || code_period_samples == 0 {
        return Err(Error::InvalidArgument(format!(
            "window of {} samples does not cover one code period of {code_period_samples}",
            h_mag.len()
        )));
    }
    let anchor = anchor_index(h_mag);
    let peak = h_mag[anchor];
    let window_end = (anchor + code_period_samples).min(h_mag.len());
    let window = &h_mag[anchor..window_end];
    let threshold = detection_threshold(window, threshold_offset_db);
    if !(peak > threshold) || peak <= 0.0 {
        return Err(Error::NoSignal);
    }
    let gains = path_gain_db(window, params);
    let mut taps = vec![(0.0, gains[0])];
    for i in 1..window.len().saturating_sub(1) {
        if window[i] > threshold && window[i] > window[i - 1] && window[i] > window[i + 1] {
            taps.push((i as f64 / sample_rate, gains[i]));
        }
    }
    Ok(taps)
}

fn detection_threshold(window: &[f64], offset_db: f64) -> f64 {
    let mut sorted = window.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    median * 10f64.powf(offset_db / 20.0)
}

/// Anchor lag: the earliest index within a relative epsilon of the window
/// maximum, so ties between equal-power paths resolve to the first arrival
/// instead of being broken by round-off.
fn anchor_index(h: &[f64]) -> usize {
    let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cutoff = max * (1.0 - 1e-9);
    h.iter().position(|&v| v >= cutoff).unwrap_or(0)
}

/// Full sounding outcome for one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundingResult {
    /// Retained CIR magnitude traces (see [`FrameRetention`]).
    pub cir_frames: Vec<Vec<f64>>,
    /// Detected taps sorted by delay; the first is the anchor.
    pub taps: Vec<TapEstimate>,
    /// Loss of the strongest path, dB (negated anchor gain).
    pub path_loss_db: f64,
    /// Correlation peak spacing `N * samples_per_chip / sample_rate`,
    /// seconds; equals `N / sample_rate` at one sample per chip.
    pub d_peak_s: f64,
    /// Interior code-period frames that produced the statistics.
    pub frames_used: usize,
}

/// Sounds one directed link: BPSK-modulates the code, runs it through the
/// emulator, estimates the CIR per code-period frame, and aggregates tap
/// gains (median) and their per-frame spread.
pub fn sound_link(
    session: &EmulationSession,
    tx: u32,
    rx: u32,
    config: &SoundingConfig,
) -> Result<SoundingResult> {
    config.validate()?;
    if config.sample_rate != session.sample_rate() {
        return Err(Error::InvalidArgument(format!(
            "sounding rate {} != session rate {}",
            config.sample_rate,
            session.sample_rate()
        )));
    }
    let period = config.code_period_samples()?;
    let spc = config.samples_per_chip()?;

    let tx_amp = db_to_linear_amplitude(config.tx_gain_db)?;
    let probe = bpsk_modulate(&config.code, config.repetitions, config.sample_rate, config.chip_rate)?
        .scaled(Complex64::new(tx_amp, 0.0));

    let timeline = session.scenario().link(tx, rx)?;
    let loop_frames = probe.duration() > timeline.duration();
    let mut inputs = BTreeMap::new();
    inputs.insert(tx, probe);
    let received = superimpose_with(rx, &inputs, session, loop_frames)?;
    let received = received.scaled(Complex64::new(db_to_linear_amplitude(config.rx_gain_db)?, 0.0));

    let (h_i, h_q) = estimate_cir(&received, &config.code, spc, config.correlation_mode)?;
    let h_mag = cir_magnitude(&h_i, &h_q);

    // slice into code-period frames; drop the partial-overlap boundary ones
    let total_frames = h_mag.len() / period;
    if total_frames == 0 {
        return Err(Error::NoSignal);
    }
    let (first, last) = if total_frames >= 3 {
        (1, total_frames - 1)
    } else {
        (0, total_frames)
    };
    let frames: Vec<&[f64]> = (first..last)
        .map(|f| &h_mag[f * period..(f + 1) * period])
        .collect();
    let frames_used = frames.len();

    // anchor-align each frame cyclically and average the profiles
    let anchors: Vec<usize> = frames.iter().map(|f| anchor_index(f)).collect();
    let mut averaged = vec![0.0f64; period];
    for (frame, &a) in frames.iter().zip(&anchors) {
        for (o, slot) in averaged.iter_mut().enumerate() {
            *slot += frame[(a + o) % period];
        }
    }
    for v in averaged.iter_mut() {
        *v /= frames_used as f64;
    }

    // detect taps on the averaged profile (anchor sits at offset 0)
    let radio = session.scenario().radio();
    let gain_params = RadioParams {
        tx_power_db: 0.0,
        tx_gain_db: config.tx_gain_db,
        rx_gain_db: config.rx_gain_db,
        ..*radio
    };
    let detected = extract_taps(
        &averaged,
        config.sample_rate,
        period,
        &gain_params,
        config.threshold_offset_db,
    )?;

    // Per-frame gains at each detected offset, evaluated as direct dot
    // products at the exact lag. Unlike the FFT trace above, identical frame
    // data yields bit-identical values, so a noise-free channel reports a
    // frame spread of exactly zero.
    let mut reference = Vec::with_capacity(period);
    for &chip in config.code.chips() {
        reference.extend(std::iter::repeat_n(f64::from(chip), spc));
    }
    let r_i: Vec<f64> = received.samples().iter().map(|s| s.re).collect();
    let r_q: Vec<f64> = received.samples().iter().map(|s| s.im).collect();
    let rail_dot = |rail: &[f64], lag: usize| -> f64 {
        reference
            .iter()
            .enumerate()
            .map(|(n, &c)| c * rail.get(lag + n).copied().unwrap_or(0.0))
            .sum::<f64>()
            / period as f64
    };

    let offset_db = gain_params.tx_power_db + gain_params.tx_gain_db + gain_params.rx_gain_db;
    let mut taps = Vec::with_capacity(detected.len());
    for &(toa_s, _) in &detected {
        let offset = (toa_s * config.sample_rate).round() as usize;
        let mut per_frame: Vec<f64> = anchors
            .iter()
            .enumerate()
            .map(|(f, &a)| {
                let frame_start = (first + f) * period;
                let lag = frame_start + (a + offset) % period;
                let hi = rail_dot(&r_i, lag);
                let hq = rail_dot(&r_q, lag);
                let m = (hi * hi + hq * hq).sqrt();
                if m <= 0.0 {
                    PATH_GAIN_FLOOR_DB
                } else {
                    (20.0 * m.log10() - offset_db).max(PATH_GAIN_FLOOR_DB)
                }
            })
            .collect();
        let gain_db = median_in_place(&mut per_frame.clone());
        let sd_db = sample_sd(&per_frame);
        per_frame.shrink_to_fit();
        taps.push(TapEstimate {
            toa_s,
            gain_db,
            sd_db,
            per_frame_gain_db: per_frame,
        });
    }

    let path_loss_db = -taps[0].gain_db;
    let cir_frames = match config.keep_frames {
        FrameRetention::Averaged => vec![averaged],
        FrameRetention::All => frames.iter().map(|f| f.to_vec()).collect(),
        FrameRetention::None => Vec::new(),
    };
    Ok(SoundingResult {
        cir_frames,
        taps,
        path_loss_db,
        d_peak_s: period as f64 / config.sample_rate,
        frames_used,
    })
}

fn median_in_place(values: &mut [f64]) -> f64 {
    debug_assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (values.len() - 1) as f64;
    var.sqrt()
}

/// Per-link outcome of a matrix sounding sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkLoss {
    /// Measured loss of the strongest path, dB.
    Db(f64),
    /// Nothing rose above the detection threshold.
    NoSignal,
}

/// Sounds every directed pair of active nodes and reports the per-link
/// measured loss. Links run in parallel; the map order is deterministic.
pub fn sound_matrix(
    session: &EmulationSession,
    config: &SoundingConfig,
) -> Result<BTreeMap<(u32, u32), LinkLoss>> {
    let nodes: Vec<u32> = session.active_nodes().iter().copied().collect();
    let mut pairs = Vec::new();
    for &tx in &nodes {
        for &rx in &nodes {
            if tx != rx {
                pairs.push((tx, rx));
            }
        }
    }
    let results: Vec<((u32, u32), Result<LinkLoss>)> = pairs
        .par_iter()
        .map(|&(tx, rx)| {
            let outcome = match sound_link(session, tx, rx, config) {
                Ok(res) => Ok(LinkLoss::Db(res.path_loss_db)),
                Err(Error::NoSignal) => Ok(LinkLoss::NoSignal),
                Err(e) => Err(e),
            };
            ((tx, rx), outcome)
        })
        .collect();
    let mut map = BTreeMap::new();
    for (key, outcome) in results {
        map.insert(key, outcome?);
    }
    Ok(map)
}
