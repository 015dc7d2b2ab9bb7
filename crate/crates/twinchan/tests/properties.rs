//! Property tests for the cross-module invariants.

use std::collections::BTreeMap;

use num_complex::Complex64;
use proptest::prelude::*;

use twinchan::analysis::{normalized_xcorr, MetricSeries};
use twinchan::emulator::{emulate_link, fir_apply};
use twinchan::scenario::quantize_taps;
use twinchan::sequences::{gen_glfsr, gen_gold, gen_ls, periodic_autocorrelation};
use twinchan::sounder::bpsk_modulate;
use twinchan::types::{CirTimeline, IqBlock, RawCir, RayPath, Tap, TapSet};

fn tapset_strategy() -> impl Strategy<Value = TapSet> {
    // 1..=4 taps on distinct ascending slots with non-degenerate gains
    proptest::collection::btree_map(0u16..512, (-1.0f64..1.0, -1.0f64..1.0), 1..=4).prop_map(
        |slots| {
            let taps: Vec<Tap> = slots
                .into_iter()
                .map(|(slot, (re, im))| {
                    Tap::new(slot, Complex64::new(re + 1.5, im)).unwrap()
                })
                .collect();
            TapSet::new(taps).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn msequence_period_and_balance(degree in 2u32..=10, seed_raw in 1u32..1024, mask_raw in 0u32..1024) {
        let bits = (1u32 << degree) - 1;
        let seed = (seed_raw % bits).max(1);
        let mask = mask_raw % (bits + 1);
        let seq = gen_glfsr(degree, mask, seed).unwrap();
        prop_assert_eq!(seq.len(), (1usize << degree) - 1);
        let plus = seq.chips().iter().filter(|&&c| c == 1).count() as i64;
        let minus = seq.len() as i64 - plus;
        prop_assert_eq!((plus - minus).abs(), 1);
    }

    #[test]
    fn autocorrelation_zero_lag_is_length(pick in 0usize..4, degree in 3u32..=9) {
        let seq = match pick {
            0 => gen_glfsr(degree, 0, 1).unwrap(),
            1 => gen_gold(0b10_0101, 0b11_1101, degree as usize).unwrap(),
            2 => gen_ls(1 << degree).unwrap(),
            _ => twinchan::sequences::gen_golay_a128(),
        };
        let ac = periodic_autocorrelation(&seq);
        prop_assert_eq!(ac[0], seq.len() as i64);
    }

    #[test]
    fn bpsk_mean_power_is_exactly_one(degree in 2u32..=8, reps in 1usize..4, spc in 1usize..4) {
        let code = gen_glfsr(degree, 0, 1).unwrap();
        let rate = 1e6 * spc as f64;
        let block = bpsk_modulate(&code, reps, rate, 1e6).unwrap();
        prop_assert_eq!(block.mean_power(), 1.0);
        prop_assert_eq!(block.len(), code.len() * reps * spc);
    }

    #[test]
    fn quantization_respects_coherent_power_bound(
        paths in proptest::collection::vec(
            (0.0f64..5e-6, 0.01f64..1.0, 0.0f64..std::f64::consts::TAU),
            1..24,
        )
    ) {
        // Coherent cluster sums can cancel or reinforce; the amplitude sum
        // bounds what reinforcement can produce. (In-phase co-delay paths
        // legitimately exceed the incoherent power sum.)
        let rays: Vec<RayPath> = paths
            .iter()
            .map(|&(toa, mag, phase)| RayPath { toa_s: toa, gain: Complex64::from_polar(mag, phase) })
            .collect();
        let raw = RawCir::new(0.0, rays).unwrap();
        let q = quantize_taps(&raw).unwrap();
        prop_assert!(q.taps.taps().len() <= 4);
        let amp_sum: f64 = raw.paths().iter().map(|p| p.gain.norm()).sum();
        prop_assert!(q.taps.total_power() <= amp_sum * amp_sum + 1e-12);
    }

    #[test]
    fn quantization_lossless_for_separated_paths(
        gains in proptest::collection::vec((0.01f64..1.0, 0.0f64..std::f64::consts::TAU), 1..=4),
        start in 0.0f64..40e-9,
        gaps in proptest::collection::vec(22e-9f64..1.2e-6, 3),
    ) {
        let mut toa = start;
        let mut rays = Vec::new();
        for (i, &(mag, phase)) in gains.iter().enumerate() {
            rays.push(RayPath { toa_s: toa, gain: Complex64::from_polar(mag, phase) });
            if i < gaps.len() {
                toa += gaps[i];
            }
        }
        let raw = RawCir::new(0.0, rays.clone()).unwrap();
        let q = quantize_taps(&raw).unwrap();
        prop_assert_eq!(q.taps.taps().len(), rays.len());
        for (tap, ray) in q.taps.taps().iter().zip(&rays) {
            prop_assert_eq!(tap.gain(), ray.gain); // exact, single-member cluster
            let excess = ray.toa_s - rays[0].toa_s;
            prop_assert!((tap.delay_seconds() - excess).abs() <= 5e-9 + 1e-15);
        }
    }

    #[test]
    fn similarity_bounded_and_symmetric(
        x in proptest::collection::vec(-50.0f64..50.0, 3..32),
        y in proptest::collection::vec(-50.0f64..50.0, 3..32),
        max_lag in 0usize..8,
    ) {
        let sx = MetricSeries::new(x, 1.0, "x").unwrap();
        let sy = MetricSeries::new(y, 1.0, "y").unwrap();
        match (normalized_xcorr(&sx, &sy, max_lag), normalized_xcorr(&sy, &sx, max_lag)) {
            (Ok(fwd), Ok(rev)) => {
                prop_assert!(fwd.score.abs() <= 1.0 + 1e-12);
                for lag in -(max_lag as i64)..=(max_lag as i64) {
                    let a = fwd.rho_at(lag).unwrap();
                    let b = rev.rho_at(-lag).unwrap();
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
            // constant inputs are rejected on either side
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "asymmetric outcome: {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn time_invariant_collapse_is_bit_exact(
        taps in tapset_strategy(),
        len in 1000usize..3000,
        frames in 1usize..5,
    ) {
        let rate = 1e6;
        let x = IqBlock::new(
            (0..len)
                .map(|i| Complex64::new(((i * 37) % 101) as f64 / 50.0 - 1.0, ((i * 53) % 89) as f64 / 44.0 - 1.0))
                .collect(),
            rate,
            0.0,
        )
        .unwrap();
        let needed = len.div_ceil(1000).max(frames);
        let timeline = CirTimeline::constant(1e-3, taps.clone(), needed).unwrap();
        let via_link = emulate_link(&x, &timeline, rate, false).unwrap();
        let via_fir = fir_apply(&x, &taps, rate).unwrap();
        prop_assert_eq!(via_link.len(), via_fir.len());
        for (a, b) in via_link.samples().iter().zip(via_fir.samples()) {
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn fir_is_linear(taps in tapset_strategy(), scale in 0.1f64..10.0) {
        let rate = 1e6;
        let x = IqBlock::new(
            (0..800).map(|i| Complex64::new((i % 17) as f64 - 8.0, (i % 5) as f64)).collect(),
            rate,
            0.0,
        )
        .unwrap();
        let y1 = fir_apply(&x, &taps, rate).unwrap();
        let y2 = fir_apply(&x.scaled(Complex64::new(scale, 0.0)), &taps, rate).unwrap();
        for (a, b) in y1.samples().iter().zip(y2.samples()) {
            let expect = a * scale;
            if expect.norm() > 0.0 {
                prop_assert!((b - expect).norm() / expect.norm() < 1e-12);
            } else {
                prop_assert_eq!(*b, expect);
            }
        }
    }
}

/// The emulator's per-receiver sum must not depend on map insertion order
/// (deterministic reduction over sorted transmitter ids).
#[test]
fn superimpose_order_independent() {
    use twinchan::emulator::{superimpose, EmulationSession};
    use twinchan::scenario::{Node, NodeKind, Scenario, ScenarioMetadata};
    use twinchan::types::RadioParams;

    let node = |id: u32| Node {
        id,
        kind: NodeKind::Static,
        position: [f64::from(id), 0.0, 1.0],
        speed_mps: 0.0,
        trajectory: vec![],
    };
    let taps = TapSet::new(vec![Tap::new(0, Complex64::new(0.5, 0.25)).unwrap()]).unwrap();
    let mut links = BTreeMap::new();
    for tx in 1..=3u32 {
        for rx in 1..=3u32 {
            if tx != rx {
                links.insert((tx, rx), CirTimeline::constant(1e-3, taps.clone(), 4).unwrap());
            }
        }
    }
    let scenario = Scenario::new(
        vec![node(1), node(2), node(3)],
        RadioParams::default(),
        4e-3,
        links,
        ScenarioMetadata::named("order"),
    )
    .unwrap();
    let session = EmulationSession::new(scenario, &[1, 2, 3], 1e6, 9, true).unwrap();
    let x1 = IqBlock::new(vec![Complex64::new(1.0, -1.0); 2000], 1e6, 0.0).unwrap();
    let x3 = IqBlock::new(vec![Complex64::new(-0.5, 2.0); 2000], 1e6, 0.0).unwrap();

    let mut forward = BTreeMap::new();
    forward.insert(1u32, x1.clone());
    forward.insert(3u32, x3.clone());
    let mut reverse = BTreeMap::new();
    reverse.insert(3u32, x3);
    reverse.insert(1u32, x1);
    let a = superimpose(2, &forward, &session).unwrap();
    let b = superimpose(2, &reverse, &session).unwrap();
    assert_eq!(a.samples(), b.samples());
}
