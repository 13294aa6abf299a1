//! Unitary DFT on power-of-two lengths, backed by `rustfft`.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unitary transform (`1/√N` in both directions).
pub fn dft_in_place(x: &mut [Complex64], direction: Direction) -> Result<()> {
    let n = x.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match direction {
            Direction::Forward => p.plan_fft_forward(n),
            Direction::Inverse => p.plan_fft_inverse(n),
        }
    });
    fft.process(x);
    let scale = 1.0 / (n as f64).sqrt();
    for v in x.iter_mut() {
        *v *= scale;
    }
    Ok(())
}

pub fn dft(x: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
    let mut out = x.to_vec();
    dft_in_place(&mut out, direction)?;
    Ok(out)
}

/// Signed centre frequency of bin `k` on an `n`-point grid at `sample_rate_hz`.
/// Bins `0..=n/2` map to `[0, fs/2]`, the rest to negative frequencies.
pub fn bin_frequency(k: usize, n: usize, sample_rate_hz: f64) -> f64 {
    let bin_hz = sample_rate_hz / n as f64;
    if k <= n / 2 {
        k as f64 * bin_hz
    } else {
        (k as f64 - n as f64) * bin_hz
    }
}
