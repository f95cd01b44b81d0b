//! Unitary DFT helpers on top of rustfft.
//!
//! Every transform in the signal model is the unitary convention
//! (`1/sqrt(N)` both ways), so norms survive each stage unchanged. Plans are
//! cached per (length, direction) and shared across threads.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((len, inverse))
        .or_insert_with(|| {
            let direction = if inverse {
                FftDirection::Inverse
            } else {
                FftDirection::Forward
            };
            FftPlanner::new().plan_fft(len, direction)
        })
        .clone()
}

/// In-place unitary DFT: `X[k] = sum_n x[n] e^{-j2πkn/N} / sqrt(N)`.
pub fn dft_unitary(data: &mut [Complex64]) {
    let n = data.len();
    if n == 0 {
        return;
    }
    plan(n, false).process(data);
    let scale = 1.0 / (n as f64).sqrt();
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// In-place unitary inverse DFT: `x[n] = sum_k X[k] e^{+j2πkn/N} / sqrt(N)`.
pub fn idft_unitary(data: &mut [Complex64]) {
    let n = data.len();
    if n == 0 {
        return;
    }
    plan(n, true).process(data);
    let scale = 1.0 / (n as f64).sqrt();
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// In-place raw (unscaled) forward DFT.
pub fn dft_raw(data: &mut [Complex64]) {
    if !data.is_empty() {
        plan(data.len(), false).process(data);
    }
}

/// In-place raw (unscaled) inverse DFT, i.e. `sum_k X[k] e^{+j2πkn/N}`.
pub fn idft_raw(data: &mut [Complex64]) {
    if !data.is_empty() {
        plan(data.len(), true).process(data);
    }
}
