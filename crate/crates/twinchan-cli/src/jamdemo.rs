//! Channel-level jamming demonstration: a full-band BPSK stream stands in
//! for the Wi-Fi link, a band-limited Gaussian jammer switches on over a
//! configurable interval, both run through the emulator, and the receiver's
//! subband SINR is reported once per second.
//!
//! SINR uses the subband (dB-averaged) view: at equal jammer power a
//! 10 MHz jammer floors half the bands while a 156 kHz one wrecks only a
//! sliver, which is what separates their impact in the reported curves.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use twinchan::analysis::MetricSeries;
use twinchan::emulator::{
    gen_jammer, measure_sinr_spectral, superimpose, EmulationSession, JammerKind,
};
use twinchan::scenario::{Node, NodeKind, Scenario, ScenarioMetadata};
use twinchan::types::{
    db_to_linear_amplitude, CirTimeline, Error, IqBlock, RadioParams, Result, Tap, TapSet,
};

/// Jam demo parameters. The defaults mirror the static experiment layout:
/// 60 s run, jammer on over [20 s, 40 s), equal link budgets for the
/// communication pair and the jammer.
#[derive(Debug, Clone)]
pub struct JamDemoConfig {
    pub kind: JammerKind,
    /// Occupied jammer bandwidth; defaults to the kind's class value.
    pub bandwidth_hz: Option<f64>,
    pub jam_on_s: f64,
    pub jam_off_s: f64,
    pub total_s: f64,
    pub sample_rate: f64,
    /// Emulated slice per reported second.
    pub block_s: f64,
    pub jammer_power_db: f64,
    pub signal_power_db: f64,
    /// Link gain of the communication pair, dB.
    pub wifi_gain_db: f64,
    /// Link gain of the jammer at its reference (static) position, dB.
    pub jammer_gain_db: f64,
    /// Moving jammer: the link gain follows an approach/recede profile
    /// peaking mid-interval instead of staying at the reference value.
    pub mobile: bool,
    pub seed: u64,
    pub n_bands: usize,
}

impl Default for JamDemoConfig {
    fn default() -> Self {
        Self {
            kind: JammerKind::Wideband,
            bandwidth_hz: None,
            jam_on_s: 20.0,
            jam_off_s: 40.0,
            total_s: 60.0,
            sample_rate: 20e6,
            block_s: 0.01,
            jammer_power_db: 0.0,
            signal_power_db: 0.0,
            wifi_gain_db: -30.0,
            jammer_gain_db: -30.0,
            mobile: false,
            seed: 1,
            n_bands: 64,
        }
    }
}

impl JamDemoConfig {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth_hz
            .unwrap_or_else(|| self.kind.default_bandwidth_hz())
    }

    fn validate(&self) -> Result<()> {
        if !(self.total_s > 0.0) || !(self.block_s > 0.0) {
            return Err(Error::InvalidArgument(
                "total and block durations must be > 0".into(),
            ));
        }
        if self.jam_on_s < 0.0 || self.jam_off_s <= self.jam_on_s || self.jam_off_s > self.total_s
        {
            return Err(Error::InvalidArgument(format!(
                "jam interval [{}, {}) must sit inside [0, {}]",
                self.jam_on_s, self.jam_off_s, self.total_s
            )));
        }
        if self.bandwidth() > self.sample_rate {
            return Err(Error::InvalidArgument(format!(
                "jammer bandwidth {} exceeds sample rate {}",
                self.bandwidth(),
                self.sample_rate
            )));
        }
        Ok(())
    }

    /// Jammer link gain at second `t`: flat for the static case, an
    /// approach/recede dB ramp peaking mid-on-interval for the mobile one.
    pub fn jammer_gain_at(&self, t: f64) -> f64 {
        if !self.mobile {
            return self.jammer_gain_db;
        }
        let far_db = self.jammer_gain_db - 40.0;
        let mid = 0.5 * (self.jam_on_s + self.jam_off_s);
        let half = 0.5 * (self.jam_off_s - self.jam_on_s);
        let closeness = 1.0 - ((t - mid).abs() / half).min(1.0);
        far_db + closeness * (self.jammer_gain_db - far_db)
    }
}

const WIFI_TX: u32 = 1;
const WIFI_RX: u32 = 2;
const JAMMER: u32 = 3;

fn demo_scenario(cfg: &JamDemoConfig, jammer_gain_db: f64) -> Result<Scenario> {
    let node = |id: u32, x: f64| Node {
        id,
        kind: NodeKind::Static,
        position: [x, 0.0, 1.0],
        speed_mps: 0.0,
        trajectory: vec![],
    };
    let nodes = vec![node(WIFI_TX, 0.0), node(WIFI_RX, 10.0), node(JAMMER, 10.0)];
    let radio = RadioParams {
        base_loss_db: 0.0,
        ..RadioParams::default()
    };
    let frame_count = (cfg.block_s / 1e-3).ceil() as usize;
    let single_tap = |gain_db: f64| -> Result<TapSet> {
        TapSet::new(vec![Tap::new(
            0,
            Complex64::new(db_to_linear_amplitude(gain_db)?, 0.0),
        )?])
    };
    let wifi = single_tap(cfg.wifi_gain_db)?;
    let jam = single_tap(jammer_gain_db)?;
    let mut links = BTreeMap::new();
    for tx in [WIFI_TX, WIFI_RX, JAMMER] {
        for rx in [WIFI_TX, WIFI_RX, JAMMER] {
            if tx == rx {
                continue;
            }
            let taps = match (tx, rx) {
                (WIFI_TX, WIFI_RX) | (WIFI_RX, WIFI_TX) => wifi.clone(),
                (JAMMER, _) | (_, JAMMER) => jam.clone(),
                _ => wifi.clone(),
            };
            links.insert((tx, rx), CirTimeline::constant(1e-3, taps, frame_count)?);
        }
    }
    Scenario::new(
        nodes,
        radio,
        cfg.block_s,
        links,
        ScenarioMetadata::named("jam-demo"),
    )
}

fn bpsk_stream(n: usize, rate: f64, power_db: f64, seed: u64) -> Result<IqBlock> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let amp = db_to_linear_amplitude(power_db)?;
    let samples: Vec<Complex64> = (0..n)
        .map(|_| {
            let chip = if rng.gen::<bool>() { amp } else { -amp };
            Complex64::new(chip, 0.0)
        })
        .collect();
    IqBlock::new(samples, rate, 0.0)
}

/// Per-second subband SINR trace of the demo run.
pub fn run_jam_demo(cfg: &JamDemoConfig) -> Result<MetricSeries> {
    cfg.validate()?;
    let block_samples = (cfg.block_s * cfg.sample_rate).round() as usize;
    let seconds = cfg.total_s.round() as usize;
    let mut sinr_db = Vec::with_capacity(seconds);
    for t in 0..seconds {
        let ts = t as f64;
        let jam_active = ts >= cfg.jam_on_s && ts < cfg.jam_off_s;
        let scenario = demo_scenario(cfg, cfg.jammer_gain_at(ts))?;
        let session = EmulationSession::new(
            scenario,
            &[WIFI_TX, WIFI_RX, JAMMER],
            cfg.sample_rate,
            cfg.seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(t as u64),
            true,
        )?;

        // signal path: channel only, no receiver noise
        let wifi = bpsk_stream(
            block_samples,
            cfg.sample_rate,
            cfg.signal_power_db,
            cfg.seed ^ 0x57,
        )?;
        let mut signal_in = BTreeMap::new();
        signal_in.insert(WIFI_TX, wifi);
        let noiseless = EmulationSession::new(
            session.scenario().clone(),
            &[WIFI_TX, WIFI_RX, JAMMER],
            cfg.sample_rate,
            session.rng_seed(),
            false,
        )?;
        let rx_signal = superimpose(WIFI_RX, &signal_in, &noiseless)?;

        // interference-plus-noise path: jammer (if on) plus receiver noise
        let jammer_block = if jam_active {
            gen_jammer(
                cfg.kind,
                Some(cfg.bandwidth()),
                cfg.jammer_power_db,
                cfg.block_s,
                cfg.sample_rate,
                cfg.seed.wrapping_add(1000 + t as u64),
            )?
        } else {
            IqBlock::new(
                vec![Complex64::new(0.0, 0.0); block_samples],
                cfg.sample_rate,
                0.0,
            )?
        };
        let mut int_in = BTreeMap::new();
        int_in.insert(JAMMER, jammer_block);
        let rx_int = superimpose(WIFI_RX, &int_in, &session)?;

        sinr_db.push(measure_sinr_spectral(&rx_signal, &rx_int, cfg.n_bands)?);
    }
    MetricSeries::new(sinr_db, 1.0, format!("sinr_{:?}", cfg.kind).to_lowercase())
}
