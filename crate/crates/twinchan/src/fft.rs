//! Internal FFT helpers shared by the emulator and the sounder.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward FFT in place.
pub(crate) fn fft_in_place(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

/// Inverse FFT in place, including the 1/N normalization.
pub(crate) fn ifft_in_place(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(buf.len()).process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Linear cross-correlation of a short real reference against a long real
/// sequence via FFT: `out[k] = sum_n x[n] * y[n+k]` for `k in 0..y.len()`,
/// with `y` treated as zero outside its support.
///
/// Equivalent to the naive evaluation to floating-point round-off; the
/// naive form stays in the test suite as the oracle.
pub(crate) fn xcorr_real_fft(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len() + y.len();
    let size = n.next_power_of_two();
    let mut fx: Vec<Complex64> = x
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut fy: Vec<Complex64> = y
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(size)
        .collect();
    fft_in_place(&mut fx);
    fft_in_place(&mut fy);
    // correlation: conj(X) * Y
    for (a, b) in fx.iter_mut().zip(fy.iter()) {
        *a = a.conj() * b;
    }
    ifft_in_place(&mut fx);
    fx.iter().take(y.len()).map(|c| c.re).collect()
}

/// Circular cross-correlation: `out[k] = sum_n x[n] * y[(n+k) mod y.len()]`
/// for `k in 0..y.len()`. `x` must not be longer than `y`.
pub(crate) fn xcorr_real_cyclic_fft(x: &[f64], y: &[f64]) -> Vec<f64> {
    let size = y.len();
    debug_assert!(x.len() <= size);
    let mut fx: Vec<Complex64> = x
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut fy: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut fx);
    fft_in_place(&mut fy);
    for (a, b) in fx.iter_mut().zip(fy.iter()) {
        *a = a.conj() * b;
    }
    ifft_in_place(&mut fx);
    fx.iter().map(|c| c.re).collect()
}
