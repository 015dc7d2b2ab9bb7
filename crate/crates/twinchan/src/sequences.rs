//! Sounding code sequences: GLFSR/LFSR m-sequences, Gold codes, Golay
//! complementary pairs, and LS codes, plus their correlation merit figures.
//!
//! Chips are kept as `i8` values in `{-1, +1}` so every correlation in this
//! module is exact integer arithmetic. The bit-to-chip mapping is fixed as
//! `0 -> +1`, `1 -> -1`; correlation magnitudes do not depend on it.

use serde::{Deserialize, Serialize};

use crate::types::{Error, Result};

/// Feedback masks of one primitive polynomial per register degree, Galois
/// form: bit `i` of the mask is the coefficient of `x^(i+1)`, the constant
/// term is implicit. Index by degree; degrees 0 and 1 are unused.
///
/// Pinned so that generated sequences are reproducible bit-exactly across
/// versions. Every entry has been verified maximal-length.
const FEEDBACK_MASKS: [u32; 33] = [
    0x0000_0000,
    0x0000_0001,
    0x0000_0003, // x^2 + x + 1
    0x0000_0005, // x^3 + x + 1
    0x0000_0009, // x^4 + x + 1
    0x0000_0012, // x^5 + x^2 + 1
    0x0000_0021, // x^6 + x + 1
    0x0000_0041, // x^7 + x + 1
    0x0000_008E, // x^8 + x^4 + x^3 + x^2 + 1
    0x0000_0108, // x^9 + x^4 + 1
    0x0000_0204, // x^10 + x^3 + 1
    0x0000_0402, // x^11 + x^2 + 1
    0x0000_0829, // x^12 + x^6 + x^4 + x + 1
    0x0000_100D, // x^13 + x^4 + x^3 + x + 1
    0x0000_2015, // x^14 + x^5 + x^3 + x + 1
    0x0000_4001, // x^15 + x + 1
    0x0000_8016, // x^16 + x^5 + x^3 + x^2 + 1
    0x0001_0004, // x^17 + x^3 + 1
    0x0002_0013, // x^18 + x^5 + x^2 + x + 1
    0x0004_0013, // x^19 + x^5 + x^2 + x + 1
    0x0008_0004, // x^20 + x^3 + 1
    0x0010_0002, // x^21 + x^2 + 1
    0x0020_0001, // x^22 + x + 1
    0x0040_0010, // x^23 + x^5 + 1
    0x0080_000D, // x^24 + x^4 + x^3 + x + 1
    0x0100_0004, // x^25 + x^3 + 1
    0x0200_0023, // x^26 + x^6 + x^2 + x + 1
    0x0400_0013, // x^27 + x^5 + x^2 + x + 1
    0x0800_0004, // x^28 + x^3 + 1
    0x1000_0002, // x^29 + x^2 + 1
    0x2000_0029, // x^30 + x^6 + x^4 + x + 1
    0x4000_0004, // x^31 + x^3 + 1
    0x8000_0057, // x^32 + x^7 + x^5 + x^3 + x^2 + x + 1
];

/// Code family of a generated sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Glfsr,
    Gold,
    GolayA,
    GolayB,
    Ls,
    /// Externally supplied chips (fixtures, ad-hoc references).
    Custom,
}

/// Family-specific generation parameters, retained for reproducibility.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodeParams {
    Glfsr { degree: u32, mask: u32, seed: u32 },
    Gold { poly_a: u64, poly_b: u64, shift: usize },
    Golay { length: usize },
    Ls { length: usize },
    Custom { length: usize },
}

/// A `{-1, +1}` chip sequence used as the sounding reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSequence {
    chips: Vec<i8>,
    family: Family,
    params: CodeParams,
}

impl CodeSequence {
    fn new(chips: Vec<i8>, family: Family, params: CodeParams) -> Result<Self> {
        if chips.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "code sequence needs at least 2 chips, got {}",
                chips.len()
            )));
        }
        if let Some(&bad) = chips.iter().find(|&&c| c != 1 && c != -1) {
            return Err(Error::InvalidArgument(format!(
                "chip value {bad} outside {{-1, +1}}"
            )));
        }
        Ok(Self {
            chips,
            family,
            params,
        })
    }

    /// Wraps externally supplied chips.
    pub fn try_from_chips(chips: Vec<i8>) -> Result<Self> {
        let length = chips.len();
        Self::new(chips, Family::Custom, CodeParams::Custom { length })
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees >= 2 chips
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    /// Chips widened to f64 for signal-path use.
    pub fn chips_f64(&self) -> Vec<f64> {
        self.chips.iter().map(|&c| f64::from(c)).collect()
    }
}

#[inline]
fn bit_to_chip(bit: u32) -> i8 {
    if bit == 0 {
        1
    } else {
        -1
    }
}

/// Generates one full period of a GLFSR sequence: a maximal-length Galois
/// LFSR with the pinned feedback polynomial for `degree`, read out either
/// directly (`mask == 0`) or through an output XOR of the masked state bits.
///
/// Length is `2^degree - 1`. The state cycle is checked during generation
/// and a non-maximal configuration is rejected.
pub fn gen_glfsr(degree: u32, mask: u32, seed: u32) -> Result<CodeSequence> {
    if !(2..=32).contains(&degree) {
        return Err(Error::InvalidArgument(format!(
            "GLFSR degree must be in [2, 32], got {degree}"
        )));
    }
    let state_bits: u64 = (1u64 << degree) - 1;
    if seed == 0 {
        return Err(Error::ZeroSeed);
    }
    if u64::from(seed) > state_bits {
        return Err(Error::InvalidArgument(format!(
            "seed {seed:#x} does not fit in {degree} state bits"
        )));
    }
    if u64::from(mask) > state_bits {
        return Err(Error::InvalidArgument(format!(
            "output mask {mask:#x} does not fit in {degree} state bits"
        )));
    }
    let feedback = FEEDBACK_MASKS[degree as usize];
    let period = state_bits;
    let mut chips = Vec::with_capacity(period as usize);
    let mut state = seed;
    for step in 0..period {
        let out = if mask == 0 {
            state & 1
        } else {
            (state & mask).count_ones() & 1
        };
        chips.push(bit_to_chip(out));
        let lsb = state & 1;
        state >>= 1;
        if lsb == 1 {
            state ^= feedback;
        }
        if state == seed && step + 1 != period {
            return Err(Error::NotMaximalLength {
                measured: step + 1,
                expected: period,
            });
        }
    }
    if state != seed {
        return Err(Error::NotMaximalLength {
            measured: period + 1,
            expected: period,
        });
    }
    CodeSequence::new(chips, Family::Glfsr, CodeParams::Glfsr { degree, mask, seed })
}

/// One period of the m-sequence defined by a full feedback polynomial
/// (bit `i` = coefficient of `x^i`, leading and constant terms included),
/// Fibonacci form, all-ones-free seed 1. Errors if the polynomial is not
/// maximal-length.
fn fibonacci_mseq(poly: u64) -> Result<(Vec<i8>, u32)> {
    if poly < 0b111 {
        return Err(Error::InvalidArgument(format!(
            "polynomial {poly:#x} is too small to describe a degree >= 2 LFSR"
        )));
    }
    let degree = 63 - poly.leading_zeros();
    if degree > 32 {
        return Err(Error::InvalidArgument(format!(
            "polynomial degree {degree} exceeds 32"
        )));
    }
    if poly & 1 == 0 {
        return Err(Error::InvalidArgument(format!(
            "polynomial {poly:#x} has no constant term; the register would shift to zero"
        )));
    }
    let taps = (poly & !(1u64 << degree)) as u32; // low-order taps, constant term included
    let period = (1u64 << degree) - 1;
    let seed: u32 = 1;
    let mut state = seed;
    let mut out = Vec::with_capacity(period as usize);
    for step in 0..period {
        out.push(bit_to_chip(state & 1));
        let fb = (state & taps).count_ones() & 1;
        state = (state >> 1) | (fb << (degree - 1));
        if state == seed && step + 1 != period {
            return Err(Error::NotMaximalLength {
                measured: step + 1,
                expected: period,
            });
        }
    }
    if state != seed {
        return Err(Error::NotMaximalLength {
            measured: period + 1,
            expected: period,
        });
    }
    Ok((out, degree))
}

/// Periodic cross-correlation of two equal-length chip vectors at every lag.
pub fn periodic_cross_correlation(a: &[i8], b: &[i8]) -> Vec<i64> {
    let n = a.len();
    assert_eq!(n, b.len(), "sequences must have equal length");
    (0..n)
        .map(|k| {
            (0..n)
                .map(|i| i64::from(a[i]) * i64::from(b[(i + k) % n]))
                .sum()
        })
        .collect()
}

/// Generates a Gold sequence from a preferred pair of primitive polynomials
/// (full-form: `z^6+z+1` is `0b100_0011`): the chip-wise product of
/// m-sequence A with m-sequence B cyclically shifted by `shift`.
///
/// The pair is verified before use: the periodic cross-correlation over all
/// lags must take only the classical three values `{-1, -t, t-2}` with
/// `t = 2^(floor(m/2)+1) + 1`; otherwise the measured value set is returned
/// in the error.
pub fn gen_gold(poly_a: u64, poly_b: u64, shift: usize) -> Result<CodeSequence> {
    let (seq_a, deg_a) = fibonacci_mseq(poly_a)?;
    let (seq_b, deg_b) = fibonacci_mseq(poly_b)?;
    if deg_a != deg_b {
        return Err(Error::InvalidArgument(format!(
            "polynomial degrees differ: {deg_a} vs {deg_b}"
        )));
    }
    let n = seq_a.len();
    if shift >= n {
        return Err(Error::InvalidArgument(format!(
            "shift {shift} outside [0, {n})"
        )));
    }
    let t = (1i64 << (deg_a / 2 + 1)) + 1;
    let allowed = [-1i64, -t, t - 2];
    let xcorr = periodic_cross_correlation(&seq_a, &seq_b);
    let mut bad: Vec<i64> = xcorr
        .iter()
        .copied()
        .filter(|v| !allowed.contains(v))
        .collect();
    if !bad.is_empty() {
        bad.sort_unstable();
        bad.dedup();
        return Err(Error::NotPreferredPair {
            poly_a,
            poly_b,
            values: bad,
            allowed,
        });
    }
    let chips: Vec<i8> = (0..n).map(|i| seq_a[i] * seq_b[(i + shift) % n]).collect();
    CodeSequence::new(
        chips,
        Family::Gold,
        CodeParams::Gold {
            poly_a,
            poly_b,
            shift,
        },
    )
}

/// Golay complementary pair by the standard recursive construction with the
/// 128-chip delay/weight schedule (delays 1, 8, 2, 4, 16, 32, 64; weights
/// -1, -1, -1, -1, +1, -1, -1), the parameterization used for the type A/B
/// 128-chip control-sequence pair in 60 GHz WLAN preambles.
fn golay_128_pair() -> (Vec<i8>, Vec<i8>) {
    const DELAYS: [usize; 7] = [1, 8, 2, 4, 16, 32, 64];
    const WEIGHTS: [i32; 7] = [-1, -1, -1, -1, 1, -1, -1];
    let mut a: Vec<i32> = vec![1];
    let mut b: Vec<i32> = vec![1];
    for (&d, &w) in DELAYS.iter().zip(WEIGHTS.iter()) {
        let len = a.len();
        let new_len = len + d;
        let mut na = vec![0i32; new_len];
        let mut nb = vec![0i32; new_len];
        for i in 0..len {
            na[i] += w * a[i];
            nb[i] += w * a[i];
            na[i + d] += b[i];
            nb[i + d] -= b[i];
        }
        a = na;
        b = nb;
    }
    let to_i8 = |v: Vec<i32>| v.into_iter().map(|x| x as i8).collect();
    (to_i8(a), to_i8(b))
}

/// The 128-chip type A Golay sequence.
pub fn gen_golay_a128() -> CodeSequence {
    let (a, _) = golay_128_pair();
    CodeSequence::new(a, Family::GolayA, CodeParams::Golay { length: 128 })
        .expect("construction yields valid chips")
}

/// The 128-chip type B Golay sequence, the complementary mate of
/// [`gen_golay_a128`]: the sum of their aperiodic autocorrelations is zero
/// at every non-zero lag.
pub fn gen_golay_b128() -> CodeSequence {
    let (_, b) = golay_128_pair();
    CodeSequence::new(b, Family::GolayB, CodeParams::Golay { length: 128 })
        .expect("construction yields valid chips")
}

// Length-10 complementary kernel (Golay's original set), verified exact.
const GOLAY_KERNEL_10_A: [i8; 10] = [1, 1, -1, 1, -1, 1, -1, -1, 1, 1];
const GOLAY_KERNEL_10_B: [i8; 10] = [1, 1, -1, 1, 1, 1, 1, 1, -1, -1];

/// Golay complementary pair of the requested length via the concatenation
/// doubling `(a, b) -> (a|b, a|-b)` from the length-1 or length-10 kernel.
/// Supported lengths: `2^k` and `10 * 2^k`.
pub fn golay_pair(length: usize) -> Result<(Vec<i8>, Vec<i8>)> {
    // reduce to a kernel: strip factors of two, accept remainder 1 or 5 (from 10)
    let mut m = length;
    while m.is_multiple_of(2) && m > 1 {
        m /= 2;
    }
    let (mut a, mut b): (Vec<i8>, Vec<i8>) = match m {
        1 => (vec![1], vec![1]),
        5 if length.is_multiple_of(10) => (GOLAY_KERNEL_10_A.to_vec(), GOLAY_KERNEL_10_B.to_vec()),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "no Golay pair of length {length}; supported lengths are 2^k and 10*2^k"
            )));
        }
    };
    while a.len() < length {
        let next_a: Vec<i8> = a.iter().copied().chain(b.iter().copied()).collect();
        let next_b: Vec<i8> = a.iter().copied().chain(b.iter().map(|&x| -x)).collect();
        a = next_a;
        b = next_b;
    }
    debug_assert_eq!(a.len(), length);
    Ok((a, b))
}

/// Generates the first codeset of an LS code: the concatenation `[c | s]` of
/// a Golay complementary pair, without the interference-free-window guard
/// gap. Supported lengths are twice the supported Golay pair lengths:
/// `2^k (k >= 2)` and `20 * 2^k`.
pub fn gen_ls(length: usize) -> Result<CodeSequence> {
    let half = length / 2;
    if length < 4 || !length.is_multiple_of(2) {
        return Err(Error::UnsupportedLsLength {
            requested: length,
            supported: "2^k for k >= 2, and 20*2^k".into(),
        });
    }
    let (c, s) = golay_pair(half).map_err(|_| Error::UnsupportedLsLength {
        requested: length,
        supported: "2^k for k >= 2, and 20*2^k".into(),
    })?;
    let chips: Vec<i8> = c.into_iter().chain(s).collect();
    CodeSequence::new(chips, Family::Ls, CodeParams::Ls { length })
}

/// The guarded LS variant `[c | 0...0 | s]` with a `gap`-chip
/// interference-free window. Returned as raw chips (the zero guard makes it
/// ineligible as a `CodeSequence`); its aperiodic autocorrelation is exactly
/// zero for lags `1..=min(gap, length/2 - 1)`.
pub fn gen_ls_padded(length: usize, gap: usize) -> Result<Vec<i8>> {
    let half = length / 2;
    if length < 4 || !length.is_multiple_of(2) {
        return Err(Error::UnsupportedLsLength {
            requested: length,
            supported: "2^k for k >= 2, and 20*2^k".into(),
        });
    }
    let (c, s) = golay_pair(half).map_err(|_| Error::UnsupportedLsLength {
        requested: length,
        supported: "2^k for k >= 2, and 20*2^k".into(),
    })?;
    Ok(c.into_iter()
        .chain(std::iter::repeat_n(0, gap))
        .chain(s)
        .collect())
}

/// Periodic autocorrelation at every lag:
/// `chi(k) = sum_n c(n) * c((n+k) mod N)` for `k in 0..N`.
pub fn periodic_autocorrelation(seq: &CodeSequence) -> Vec<i64> {
    periodic_cross_correlation(seq.chips(), seq.chips())
}

/// Aperiodic autocorrelation of raw chips at non-negative lags:
/// `r(k) = sum_{n=0}^{N-1-k} c(n) * c(n+k)`.
pub fn aperiodic_autocorrelation(chips: &[i8]) -> Vec<i64> {
    let n = chips.len();
    (0..n)
        .map(|k| {
            (0..n - k)
                .map(|i| i64::from(chips[i]) * i64::from(chips[i + k]))
                .sum()
        })
        .collect()
}

/// Summary statistics of a sequence's periodic autocorrelation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeritReport {
    /// Zero-lag value; equals the sequence length.
    pub peak: i64,
    /// Largest absolute off-peak value.
    pub max_off_peak_abs: i64,
    /// `20 log10(peak / max_off_peak_abs)`; infinite when all off-peak
    /// values are zero.
    pub peak_to_sidelobe_db: f64,
}

/// Autocorrelation merit figures used to rank candidate sounding codes.
pub fn merit_report(seq: &CodeSequence) -> MeritReport {
    let ac = periodic_autocorrelation(seq);
    let peak = ac[0];
    let max_off_peak_abs = ac[1..].iter().map(|v| v.abs()).max().unwrap_or(0);
    let peak_to_sidelobe_db = if max_off_peak_abs == 0 {
        f64::INFINITY
    } else {
        20.0 * (peak as f64 / max_off_peak_abs as f64).log10()
    };
    MeritReport {
        peak,
        max_off_peak_abs,
        peak_to_sidelobe_db,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glfsr_paper_parameters_yield_255_chips() {
        let seq = gen_glfsr(8, 0, 1).unwrap();
        assert_eq!(seq.len(), 255);
        assert!(seq.chips().iter().all(|&c| c == 1 || c == -1));
    }

    #[test]
    fn glfsr_degree_2_matches_hand_simulation() {
        // Hand-walked Galois register, feedback 0b11, seed 01:
        // 01 -> 11 -> 10 -> 01, output bits 1, 1, 0.
        let seq = gen_glfsr(2, 0, 1).unwrap();
        assert_eq!(seq.chips(), &[-1, -1, 1]);
    }

    #[test]
    fn glfsr_zero_seed_rejected() {
        assert!(matches!(gen_glfsr(8, 0, 0), Err(Error::ZeroSeed)));
    }

    #[test]
    fn glfsr_degree_bounds() {
        assert!(gen_glfsr(1, 0, 1).is_err());
        assert!(gen_glfsr(33, 0, 1).is_err());
        assert!(gen_glfsr(8, 0, 256).is_err()); // seed outside state bits
        assert!(gen_glfsr(8, 256, 1).is_err()); // mask outside state bits
    }

    #[test]
    fn mseq_autocorrelation_two_valued() {
        // Brute force over all 254 non-zero lags: classical (N, -1) profile.
        let seq = gen_glfsr(8, 0, 1).unwrap();
        let ac = periodic_autocorrelation(&seq);
        assert_eq!(ac[0], 255);
        assert!(ac[1..].iter().all(|&v| v == -1), "off-peak values: {:?}", &ac[1..8]);
    }

    #[test]
    fn mseq_period_and_balance() {
        for degree in 2..=12u32 {
            let n = (1usize << degree) - 1;
            let seq = gen_glfsr(degree, 0, 1).unwrap();
            assert_eq!(seq.len(), n);
            let plus = seq.chips().iter().filter(|&&c| c == 1).count() as i64;
            let minus = n as i64 - plus;
            assert_eq!((plus - minus).abs(), 1, "degree {degree} balance");
            // no proper divisor of n is a period of the sequence
            for p in 1..n {
                if !n.is_multiple_of(p) {
                    continue;
                }
                let periodic = (0..n).all(|i| seq.chips()[i] == seq.chips()[(i + p) % n]);
                assert!(!periodic, "degree {degree}: proper period {p} found");
            }
        }
    }

    #[test]
    fn glfsr_output_mask_shifts_the_msequence() {
        // A non-zero output mask reads a different linear functional of the
        // state, which yields a cyclic shift of the same m-sequence.
        let base = gen_glfsr(6, 0, 1).unwrap();
        let masked = gen_glfsr(6, 0b101, 1).unwrap();
        let n = base.len();
        let shifted = (0..n).any(|s| (0..n).all(|i| masked.chips()[i] == base.chips()[(i + s) % n]));
        assert!(shifted, "masked output is not a shift of the m-sequence");
    }

    #[test]
    fn gold_paper_polynomials() {
        // z^6+z+1 and z^6+z^5+z^2+z+1; natural length 2^6-1 = 63.
        let seq = gen_gold(0b100_0011, 0b110_0111, 0).unwrap();
        assert_eq!(seq.len(), 63);
    }

    #[test]
    fn gold_rejects_degenerate_pair() {
        let err = gen_gold(0b100_0011, 0b100_0011, 0).unwrap_err();
        match err {
            Error::NotPreferredPair { values, .. } => {
                assert!(values.contains(&63), "lag-0 self correlation must appear: {values:?}");
            }
            other => panic!("expected NotPreferredPair, got {other}"),
        }
    }

    #[test]
    fn gold_degree5_three_valued_cross_correlation() {
        // Classic degree-5 preferred pair x^5+x^2+1, x^5+x^4+x^3+x^2+1.
        // Exhaustive correlation over all 31 shifts.
        let (a, _) = fibonacci_mseq(0b10_0101).unwrap();
        let (b, _) = fibonacci_mseq(0b11_1101).unwrap();
        let mut values: Vec<i64> = periodic_cross_correlation(&a, &b);
        values.sort_unstable();
        values.dedup();
        assert_eq!(values, vec![-9, -1, 7]);
        // and the generator accepts the pair
        assert!(gen_gold(0b10_0101, 0b11_1101, 3).is_ok());
    }

    #[test]
    fn gold_shift_bounds() {
        assert!(gen_gold(0b10_0101, 0b11_1101, 31).is_err());
        assert!(gen_gold(0b10_0101, 0b11_1101, 30).is_ok());
    }

    #[test]
    fn golay_a128_shape() {
        let a = gen_golay_a128();
        assert_eq!(a.len(), 128);
        assert!(a.chips()[0] == 1 || a.chips()[0] == -1);
        // First chips pinned from an independent evaluation of the recursion.
        assert_eq!(
            &a.chips()[..16],
            &[1, -1, -1, 1, -1, 1, -1, 1, -1, -1, -1, -1, 1, 1, -1, -1]
        );
    }

    #[test]
    fn golay_complementarity_exact() {
        // Defining identity, exact in integer arithmetic:
        // r_a(k) + r_b(k) = 256 * delta(k).
        let a = gen_golay_a128();
        let b = gen_golay_b128();
        let ra = aperiodic_autocorrelation(a.chips());
        let rb = aperiodic_autocorrelation(b.chips());
        assert_eq!(ra[0] + rb[0], 256);
        for k in 1..128 {
            assert_eq!(ra[k] + rb[k], 0, "lag {k}");
        }
    }

    #[test]
    fn golay_kernel10_is_complementary() {
        let ra = aperiodic_autocorrelation(&GOLAY_KERNEL_10_A);
        let rb = aperiodic_autocorrelation(&GOLAY_KERNEL_10_B);
        assert_eq!(ra[0] + rb[0], 20);
        for k in 1..10 {
            assert_eq!(ra[k] + rb[k], 0, "lag {k}");
        }
    }

    #[test]
    fn golay_pair_all_supported_lengths() {
        for len in [2usize, 4, 8, 16, 32, 64, 128, 256, 10, 20, 40, 80, 160] {
            let (a, b) = golay_pair(len).unwrap();
            assert_eq!(a.len(), len);
            let ra = aperiodic_autocorrelation(&a);
            let rb = aperiodic_autocorrelation(&b);
            for k in 1..len {
                assert_eq!(ra[k] + rb[k], 0, "len {len} lag {k}");
            }
        }
        assert!(golay_pair(6).is_err());
        assert!(golay_pair(26).is_err());
    }

    #[test]
    fn ls_supported_and_unsupported_lengths() {
        let seq = gen_ls(256).unwrap();
        assert_eq!(seq.len(), 256);
        assert!(seq.chips().iter().all(|&c| c == 1 || c == -1));
        let err = gen_ls(7).unwrap_err();
        match err {
            Error::UnsupportedLsLength { requested, supported } => {
                assert_eq!(requested, 7);
                assert!(supported.contains("2^k"));
            }
            other => panic!("expected UnsupportedLsLength, got {other}"),
        }
        assert!(gen_ls(40).is_ok()); // 20 * 2
    }

    #[test]
    fn ls_padded_interference_free_window() {
        // Brute-force the correlation window: the zero guard plus the
        // complementary halves null the autocorrelation for small lags.
        let gap = 16;
        let chips = gen_ls_padded(64, gap).unwrap();
        let r = aperiodic_autocorrelation(&chips);
        assert_eq!(r[0], 64);
        for k in 1..=gap {
            assert_eq!(r[k], 0, "lag {k} inside the IFW");
        }
        assert_ne!(r[gap + 1], 0, "window must end after the guard");
    }

    #[test]
    fn autocorrelation_zero_lag_equals_length() {
        let glfsr = gen_glfsr(7, 0, 1).unwrap();
        let gold = gen_gold(0b10_0101, 0b11_1101, 5).unwrap();
        let golay = gen_golay_a128();
        let ls = gen_ls(64).unwrap();
        for seq in [&glfsr, &gold, &golay, &ls] {
            assert_eq!(periodic_autocorrelation(seq)[0], seq.len() as i64);
        }
    }

    #[test]
    fn all_ones_autocorrelation_is_constant() {
        let seq = CodeSequence::new(vec![1, 1, 1, 1], Family::Ls, CodeParams::Ls { length: 4 })
            .unwrap();
        let ac = periodic_autocorrelation(&seq);
        assert!(ac.iter().all(|&v| v == 4));
    }

    #[test]
    fn merit_report_glfsr255() {
        let seq = gen_glfsr(8, 0, 1).unwrap();
        let report = merit_report(&seq);
        assert_eq!(report.peak, 255);
        assert_eq!(report.max_off_peak_abs, 1);
        assert!((report.peak_to_sidelobe_db - 20.0 * 255f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn merit_report_golay_peak() {
        let report = merit_report(&gen_golay_a128());
        assert_eq!(report.peak, 128);
    }

    #[test]
    fn merit_report_deterministic() {
        let seq = gen_glfsr(8, 0, 1).unwrap();
        assert_eq!(merit_report(&seq), merit_report(&seq));
    }
}
