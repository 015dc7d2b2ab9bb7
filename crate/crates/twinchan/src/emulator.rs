//! The software channel emulator: per-link tapped-delay-line FIR filtering,
//! multi-transmitter superposition at each receiver, base loss, and a
//! receiver-referred noise floor.
//!
//! Tap delays live on the 10 ns slot grid and are rounded to the nearest
//! output sample; below 100 MS/s the grid is not exactly representable and
//! the rounding is reported, never silent (the hardware being mirrored
//! exhibits the same quantization, e.g. 20 ns at 50 MS/s).

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::fft::{fft_in_place, ifft_in_place};
use crate::scenario::Scenario;
use crate::types::{
    db_to_linear_amplitude, db_to_linear_power, CirTimeline, Error, IqBlock, Result, TapSet,
};

/// Sample-rate range exercised by the mirrored testbed; rates outside it
/// work but draw a warning.
pub const SUPPORTED_RATE_RANGE: (f64, f64) = (1e6, 50e6);

/// Tap delays converted to sample units on an explicit slot grid:
/// `(rounded samples, exactly representable)`. A delay is exact when
/// `slot * slot_seconds * rate` is integral; otherwise the emulator rounds
/// to the nearest sample.
pub fn tap_sample_delays_on_grid(
    taps: &TapSet,
    slot_seconds: f64,
    sample_rate: f64,
) -> Vec<(usize, bool)> {
    taps.taps()
        .iter()
        .map(|t| {
            let exact_pos = f64::from(t.delay_slot()) * slot_seconds * sample_rate;
            let rounded = exact_pos.round();
            ((rounded as usize), (exact_pos - rounded).abs() < 1e-9)
        })
        .collect()
}

/// [`tap_sample_delays_on_grid`] on the default 10 ns grid.
pub fn tap_sample_delays(taps: &TapSet, sample_rate: f64) -> Vec<(usize, bool)> {
    tap_sample_delays_on_grid(taps, crate::types::TAP_SLOT_SECONDS, sample_rate)
}

fn warn_inexact_delays(taps: &TapSet, slot_seconds: f64, sample_rate: f64) {
    let misfit: Vec<u16> = taps
        .taps()
        .iter()
        .zip(tap_sample_delays_on_grid(taps, slot_seconds, sample_rate))
        .filter(|(_, (_, exact))| !exact)
        .map(|(t, _)| t.delay_slot())
        .collect();
    if !misfit.is_empty() {
        log::warn!(
            "tap slots {misfit:?} are not exactly representable at {:.3} MS/s; \
             delays rounded to the nearest sample",
            sample_rate / 1e6
        );
    }
}

/// Applies one tap snapshot to a block:
/// `y(n) = sum_k g_k * x(n - d_k)` with `d_k = round(slot_k * 10 ns * rate)`.
/// The output carries the full convolution tail: `len(y) = len(x) + max d_k`.
pub fn fir_apply(x: &IqBlock, taps: &TapSet, sample_rate: f64) -> Result<IqBlock> {
    fir_apply_on_grid(x, taps, crate::types::TAP_SLOT_SECONDS, sample_rate)
}

/// [`fir_apply`] with an explicit slot width (scenario metadata is the
/// single override point for the grid).
pub fn fir_apply_on_grid(
    x: &IqBlock,
    taps: &TapSet,
    slot_seconds: f64,
    sample_rate: f64,
) -> Result<IqBlock> {
    if x.sample_rate() != sample_rate {
        return Err(Error::InvalidArgument(format!(
            "block sample rate {} differs from requested {}",
            x.sample_rate(),
            sample_rate
        )));
    }
    warn_inexact_delays(taps, slot_seconds, sample_rate);
    let delays: Vec<(usize, Complex64)> = taps
        .taps()
        .iter()
        .zip(tap_sample_delays_on_grid(taps, slot_seconds, sample_rate))
        .map(|(t, (d, _))| (d, t.gain()))
        .collect();
    let d_max = delays.iter().map(|&(d, _)| d).max().unwrap_or(0);
    let input = x.samples();
    let n_out = input.len() + d_max;
    let mut out = vec![Complex64::new(0.0, 0.0); n_out];
    for (n, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(d, g) in &delays {
            if n >= d {
                if let Some(&xv) = input.get(n - d) {
                    acc += g * xv;
                }
            }
        }
        *slot = acc;
    }
    IqBlock::new(out, sample_rate, x.t0())
}

/// Applies a time-varying channel to a block.
///
/// The input is partitioned into `update_interval` segments; segment `k` is
/// convolved with frame `k`'s taps and the convolution tail of each segment
/// lands in the next one (overlap-add), so no energy is dropped at frame
/// boundaries. Equivalently: each input sample is weighted by the taps in
/// force when it entered the delay line.
///
/// The block must not span more frames than the timeline holds unless
/// `loop_frames` wraps the timeline.
pub fn emulate_link(
    x: &IqBlock,
    timeline: &CirTimeline,
    sample_rate: f64,
    loop_frames: bool,
) -> Result<IqBlock> {
    emulate_link_on_grid(x, timeline, crate::types::TAP_SLOT_SECONDS, sample_rate, loop_frames)
}

/// [`emulate_link`] with an explicit slot width.
pub fn emulate_link_on_grid(
    x: &IqBlock,
    timeline: &CirTimeline,
    slot_seconds: f64,
    sample_rate: f64,
    loop_frames: bool,
) -> Result<IqBlock> {
    if x.sample_rate() != sample_rate {
        return Err(Error::InvalidArgument(format!(
            "block sample rate {} differs from requested {}",
            x.sample_rate(),
            sample_rate
        )));
    }
    let frame_len = (timeline.update_interval() * sample_rate).round() as usize;
    if frame_len == 0 {
        return Err(Error::InvalidArgument(format!(
            "update interval {} s is below one sample at {} S/s",
            timeline.update_interval(),
            sample_rate
        )));
    }
    let input = x.samples();
    if input.len() < frame_len {
        return Err(Error::InvalidArgument(format!(
            "input of {} samples is shorter than one {} sample frame",
            input.len(),
            frame_len
        )));
    }
    let segments = input.len().div_ceil(frame_len);
    if segments > timeline.frame_count() && !loop_frames {
        return Err(Error::InputExceedsTimeline {
            input_s: x.duration(),
            timeline_s: timeline.duration(),
        });
    }

    // per-segment tap tables in sample units
    let seg_frame = |seg: usize| {
        let f = if loop_frames {
            seg % timeline.frame_count()
        } else {
            seg
        };
        &timeline.frames()[f]
    };
    let mut tables: Vec<Vec<(usize, Complex64)>> = Vec::with_capacity(segments);
    let mut d_max = 0usize;
    let mut misfit_slots = BTreeSet::new();
    for seg in 0..segments {
        let frame = seg_frame(seg);
        let mut table = Vec::with_capacity(frame.taps().len());
        for (t, (d, exact)) in frame
            .taps()
            .iter()
            .zip(tap_sample_delays_on_grid(frame, slot_seconds, sample_rate))
        {
            if !exact {
                misfit_slots.insert(t.delay_slot());
            }
            table.push((d, t.gain()));
        }
        d_max = d_max.max(table.iter().map(|&(d, _)| d).max().unwrap_or(0));
        tables.push(table);
    }
    if !misfit_slots.is_empty() {
        log::warn!(
            "tap slots {misfit_slots:?} are not exactly representable at {:.3} MS/s; \
             delays rounded to the nearest sample",
            sample_rate / 1e6
        );
    }

    let n_out = input.len() + d_max;
    let mut out = vec![Complex64::new(0.0, 0.0); n_out];
    // Contributions to y(n) come from input samples m = n - d with the taps
    // of m's own segment. Gathered in ascending-delay order so a timeline of
    // identical frames reproduces fir_apply sample-exactly.
    let mut contributions: Vec<(usize, Complex64)> = Vec::with_capacity(16);
    for (n, slot) in out.iter_mut().enumerate() {
        contributions.clear();
        let seg_hi = n / frame_len;
        let seg_lo = n.saturating_sub(d_max) / frame_len;
        for seg in seg_lo..=seg_hi.min(segments - 1) {
            let lo = seg * frame_len;
            let hi = ((seg + 1) * frame_len).min(input.len());
            for &(d, g) in &tables[seg] {
                if n >= d {
                    let m = n - d;
                    if m >= lo && m < hi {
                        contributions.push((d, g * input[m]));
                    }
                }
            }
        }
        contributions.sort_by_key(|&(d, _)| d);
        let mut acc = Complex64::new(0.0, 0.0);
        for &(_, term) in contributions.iter() {
            acc += term;
        }
        *slot = acc;
    }
    IqBlock::new(out, sample_rate, x.t0())
}

/// An emulation run bound to one scenario: the active node set, the common
/// sample rate, and the noise configuration.
#[derive(Debug, Clone)]
pub struct EmulationSession {
    scenario: Scenario,
    active_nodes: BTreeSet<u32>,
    sample_rate: f64,
    rng_seed: u64,
    noise_enabled: bool,
}

impl EmulationSession {
    pub fn new(
        scenario: Scenario,
        active_nodes: &[u32],
        sample_rate: f64,
        rng_seed: u64,
        noise_enabled: bool,
    ) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sample rate must be finite and > 0, got {sample_rate}"
            )));
        }
        if sample_rate < SUPPORTED_RATE_RANGE.0 || sample_rate > SUPPORTED_RATE_RANGE.1 {
            log::warn!(
                "sample rate {:.3} MS/s outside the exercised [1, 50] MS/s range",
                sample_rate / 1e6
            );
        }
        let mut nodes = BTreeSet::new();
        for &id in active_nodes {
            if scenario.node(id).is_none() {
                return Err(Error::UnknownNode(id));
            }
            nodes.insert(id);
        }
        if nodes.is_empty() {
            return Err(Error::InvalidArgument("no active nodes".into()));
        }
        Ok(Self {
            scenario,
            active_nodes: nodes,
            sample_rate,
            rng_seed,
            noise_enabled,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn active_nodes(&self) -> &BTreeSet<u32> {
        &self.active_nodes
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn noise_enabled(&self) -> bool {
        self.noise_enabled
    }

    /// Noise stream for one receiver, derived from the session seed so runs
    /// are reproducible and receivers are decorrelated.
    fn receiver_rng(&self, receiver: u32) -> ChaCha12Rng {
        let mixed = self
            .rng_seed
            .wrapping_add((u64::from(receiver) + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        ChaCha12Rng::seed_from_u64(mixed)
    }
}

/// Received signal at one node: every transmitter's block run through its
/// link channel, summed, attenuated by the base loss, plus receiver noise.
///
/// `y_j(n) = sum_i (x_i * h_ij)(n)`, then the base-loss amplitude scaling,
/// then (when enabled) circularly-symmetric Gaussian noise whose per-sample
/// power equals the configured noise floor relative to unit transmit power.
pub fn superimpose(
    receiver: u32,
    inputs: &BTreeMap<u32, IqBlock>,
    session: &EmulationSession,
) -> Result<IqBlock> {
    superimpose_with(receiver, inputs, session, false)
}

/// [`superimpose`] with opt-in timeline wraparound for inputs longer than
/// the scenario (used when sounding short static scenarios with long
/// captures).
pub fn superimpose_with(
    receiver: u32,
    inputs: &BTreeMap<u32, IqBlock>,
    session: &EmulationSession,
    loop_frames: bool,
) -> Result<IqBlock> {
    if !session.active_nodes.contains(&receiver) {
        return Err(Error::UnknownNode(receiver));
    }
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("no transmitter inputs".into()));
    }
    let mut t0 = None;
    for (&tx, block) in inputs {
        if tx == receiver {
            return Err(Error::InvalidArgument(format!(
                "transmitter {tx} cannot be its own receiver"
            )));
        }
        if !session.active_nodes.contains(&tx) {
            return Err(Error::UnknownNode(tx));
        }
        if block.sample_rate() != session.sample_rate {
            return Err(Error::InvalidArgument(format!(
                "transmitter {tx} block rate {} != session rate {}",
                block.sample_rate(),
                session.sample_rate
            )));
        }
        match t0 {
            None => t0 = Some(block.t0()),
            Some(t) if t == block.t0() => {}
            Some(t) => {
                return Err(Error::InvalidArgument(format!(
                    "transmitter {tx} t0 {} differs from {}",
                    block.t0(),
                    t
                )));
            }
        }
    }
    let t0 = t0.unwrap();

    // ordered deterministic reduction over ascending transmitter id
    let slot_seconds = session.scenario.metadata().slot_seconds;
    let mut sum: Vec<Complex64> = Vec::new();
    for (&tx, block) in inputs {
        let timeline = session.scenario.link(tx, receiver)?;
        let filtered =
            emulate_link_on_grid(block, timeline, slot_seconds, session.sample_rate, loop_frames)?;
        if filtered.len() > sum.len() {
            sum.resize(filtered.len(), Complex64::new(0.0, 0.0));
        }
        for (acc, &v) in sum.iter_mut().zip(filtered.samples()) {
            *acc += v;
        }
    }

    let base_scale = db_to_linear_amplitude(-session.scenario.radio().base_loss_db)?;
    if base_scale != 1.0 {
        for v in sum.iter_mut() {
            *v *= base_scale;
        }
    }

    if session.noise_enabled {
        let noise_power = db_to_linear_power(session.scenario.radio().noise_floor_db)?;
        let rail_sd = (noise_power / 2.0).sqrt();
        let mut rng = session.receiver_rng(receiver);
        for v in sum.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *v += Complex64::new(re * rail_sd, im * rail_sd);
        }
    }
    IqBlock::new(sum, session.sample_rate, t0)
}

/// Jammer waveform shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JammerKind {
    /// Occupies a small slice of the victim bandwidth (~156 kHz default).
    Narrowband,
    /// Covers half a 20 MHz channel (10 MHz default).
    Wideband,
}

impl JammerKind {
    /// Default occupied bandwidth for this jammer class, Hz.
    pub fn default_bandwidth_hz(self) -> f64 {
        match self {
            JammerKind::Narrowband => 156e3,
            JammerKind::Wideband => 10e6,
        }
    }
}

/// Band-limited Gaussian noise centered at baseband 0: white Gaussian noise
/// through an ideal (zero-phase) low-pass, total power normalized to
/// `power_db`. Deterministic per seed. `bandwidth_hz: None` takes the
/// kind's class default (156 kHz narrowband, 10 MHz wideband).
pub fn gen_jammer(
    kind: JammerKind,
    bandwidth_hz: Option<f64>,
    power_db: f64,
    duration_s: f64,
    sample_rate: f64,
    seed: u64,
) -> Result<IqBlock> {
    let bandwidth_hz = bandwidth_hz.unwrap_or_else(|| kind.default_bandwidth_hz());
    if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bandwidth must be > 0, got {bandwidth_hz}"
        )));
    }
    if bandwidth_hz > sample_rate {
        return Err(Error::InvalidArgument(format!(
            "bandwidth {bandwidth_hz} Hz exceeds sample rate {sample_rate} S/s"
        )));
    }
    let n = (duration_s * sample_rate).round() as usize;
    if n == 0 {
        return Err(Error::InvalidArgument(format!(
            "duration {duration_s} s is below one sample at {sample_rate} S/s"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut buf: Vec<Complex64> = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();

    fft_in_place(&mut buf);
    let half_bw = bandwidth_hz / 2.0;
    let df = sample_rate / n as f64;
    for (k, v) in buf.iter_mut().enumerate() {
        let freq = if k <= n / 2 {
            k as f64 * df
        } else {
            (k as f64 - n as f64) * df
        };
        if freq.abs() > half_bw {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    ifft_in_place(&mut buf);

    let mean_power: f64 = buf.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
    if mean_power <= 0.0 {
        return Err(Error::InvalidArgument(
            "band-limiting removed all jammer power".into(),
        ));
    }
    let scale = (db_to_linear_power(power_db)? / mean_power).sqrt();
    for v in buf.iter_mut() {
        *v *= scale;
    }
    IqBlock::new(buf, sample_rate, 0.0)
}

/// Wideband SINR: `10 log10(sum |s|^2 / sum |i+n|^2)`. Equal lengths
/// required; a silent denominator returns `+inf`.
pub fn measure_sinr(signal: &IqBlock, interference_plus_noise: &IqBlock) -> Result<f64> {
    if signal.len() != interference_plus_noise.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            signal.len(),
            interference_plus_noise.len()
        )));
    }
    let s = signal.energy();
    let i = interference_plus_noise.energy();
    if i <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (s / i).log10())
}

/// Subband SINR: the two blocks' periodograms are split into `n_bands`
/// contiguous frequency bands and the per-band SINRs are averaged in dB.
///
/// This is the receiver-style view that separates a narrowband interferer
/// (few bands hit) from a wideband one (many bands hit) at equal total
/// power; the plain power ratio of [`measure_sinr`] cannot tell them apart.
pub fn measure_sinr_spectral(
    signal: &IqBlock,
    interference_plus_noise: &IqBlock,
    n_bands: usize,
) -> Result<f64> {
    if signal.len() != interference_plus_noise.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            signal.len(),
            interference_plus_noise.len()
        )));
    }
    if n_bands == 0 || n_bands > signal.len() {
        return Err(Error::InvalidArgument(format!(
            "band count {n_bands} outside [1, {}]",
            signal.len()
        )));
    }
    let psd = |block: &IqBlock| -> Vec<f64> {
        let mut buf = block.samples().to_vec();
        fft_in_place(&mut buf);
        // reorder to [-fs/2, fs/2)
        let n = buf.len();
        let mut p = vec![0.0; n];
        for (k, v) in buf.iter().enumerate() {
            let shifted = (k + n / 2) % n;
            p[shifted] = v.norm_sqr();
        }
        p
    };
    let ps = psd(signal);
    let pi = psd(interference_plus_noise);
    let n = ps.len();
    let mut sum_db = 0.0;
    for band in 0..n_bands {
        let lo = band * n / n_bands;
        let hi = ((band + 1) * n / n_bands).max(lo + 1);
        let s: f64 = ps[lo..hi].iter().sum();
        let i: f64 = pi[lo..hi].iter().sum();
        let ratio = if i > 0.0 { s / i } else { f64::INFINITY };
        sum_db += 10.0 * ratio.log10();
    }
    Ok(sum_db / n_bands as f64)
}

#[derive(Debug, Serialize, Deserialize)]
struct Iq32Sidecar {
    sample_rate: f64,
    t0: f64,
}

/// Writes a block as little-endian interleaved float32 I/Q plus a JSON
/// sidecar (`<path>.json`) holding the sample rate and capture offset.
pub fn write_iq32<P: AsRef<Path>>(block: &IqBlock, path: P) -> Result<()> {
    let path = path.as_ref();
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for s in block.samples() {
        w.write_all(&(s.re as f32).to_le_bytes())?;
        w.write_all(&(s.im as f32).to_le_bytes())?;
    }
    w.flush()?;
    let sidecar = Iq32Sidecar {
        sample_rate: block.sample_rate(),
        t0: block.t0(),
    };
    let sidecar_path = sidecar_path_for(path);
    std::fs::write(sidecar_path, serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}

/// Reads a block written by [`write_iq32`].
pub fn read_iq32<P: AsRef<Path>>(path: P) -> Result<IqBlock> {
    let path = path.as_ref();
    let sidecar: Iq32Sidecar =
        serde_json::from_slice(&std::fs::read(sidecar_path_for(path))?)?;
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::BadBundle(format!(
            "iq32 payload of {} bytes is not a whole number of I/Q pairs",
            bytes.len()
        )));
    }
    let samples: Vec<Complex64> = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(f64::from(re), f64::from(im))
        })
        .collect();
    IqBlock::new(samples, sidecar.sample_rate, sidecar.t0)
}

fn sidecar_path_for(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".json");
    std::path::PathBuf::from(os)
}
