//! Discrete-time receive model with Kronecker-structured steering vectors.
//!
//! The sampled received signal admits the frequency-domain form
//!
//! `y = Σ_k α_k · F^H( F s ⊙ b(τ_k) ) ⊙ c(ν_k) + w`
//!
//! with the unitary length-NM DFT `F`, the frequency-domain steering vector
//! `b(τ)[n] = e^{-j2π n Δf τ / M}` and the temporal steering vector
//! `c(ν)[ℓ] = e^{+j2π ν ℓ T / N}`. Both factor as Kronecker products,
//! `b = b_N ⊗ b_M` and `c = c_M ⊗ c_N`: the `b_N`/`c_M` factors are the
//! classical OFDM range/velocity phase ramps, while `b_M` (inter-symbol) and
//! `c_N` (inter-carrier) carry the ISI/ICI structure that extends the
//! unambiguous region — `b` is periodic in τ with period `M/Δf` rather than
//! `1/Δf`, and `c` in ν with period `N/T` rather than `1/T`.

use crate::channel::{add_noise, RxSignal, TargetSet};
use crate::fft;
use crate::modem::{heisenberg_samples, DelayDopplerFrame};
use crate::params::OtfsParams;
use crate::Result;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Frequency-domain steering vector, length NM: element `n` carries the
/// phase of frequency sample `f_n = nΔf/M` delayed by `τ`.
pub fn steering_b(params: &OtfsParams, tau: f64) -> Vec<Complex64> {
    let nm = params.grid_size();
    let step = params.subcarrier_spacing() / params.n_symbols() as f64;
    (0..nm)
        .map(|n| Complex64::from_polar(1.0, -TAU * n as f64 * step * tau))
        .collect()
}

/// Temporal steering vector, length NM: element `ℓ` carries the Doppler
/// phase at sampling instant `t_ℓ = ℓT/N`.
pub fn steering_c(params: &OtfsParams, nu: f64) -> Vec<Complex64> {
    let nm = params.grid_size();
    let dt = params.sample_period();
    (0..nm)
        .map(|l| Complex64::from_polar(1.0, TAU * nu * l as f64 * dt))
        .collect()
}

/// The Kronecker factors of `b(τ)`: `(b_N, b_M)` with
/// `b_N[i] = e^{-j2π i Δf τ}` (fast-frequency, the classical OFDM range
/// ramp) and `b_M[m] = e^{-j2π m Δf τ / M}` (slow-frequency, the ISI term).
pub fn steering_b_factors(params: &OtfsParams, tau: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let df = params.subcarrier_spacing();
    let m_total = params.n_symbols() as f64;
    let b_n = (0..params.n_subcarriers())
        .map(|i| Complex64::from_polar(1.0, -TAU * i as f64 * df * tau))
        .collect();
    let b_m = (0..params.n_symbols())
        .map(|m| Complex64::from_polar(1.0, -TAU * m as f64 * df * tau / m_total))
        .collect();
    (b_n, b_m)
}

/// The Kronecker factors of `c(ν)`: `(c_M, c_N)` with
/// `c_M[m] = e^{+j2π m T ν}` (slow-time, the classical OFDM Doppler ramp)
/// and `c_N[p] = e^{+j2π p T ν / N}` (fast-time, the ICI term).
pub fn steering_c_factors(params: &OtfsParams, nu: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let t = params.symbol_duration();
    let n_total = params.n_subcarriers() as f64;
    let c_m = (0..params.n_symbols())
        .map(|m| Complex64::from_polar(1.0, TAU * m as f64 * t * nu))
        .collect();
    let c_n = (0..params.n_subcarriers())
        .map(|p| Complex64::from_polar(1.0, TAU * p as f64 * t * nu / n_total))
        .collect();
    (c_m, c_n)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

/// Applies one tap of the discrete model to the sampled transmit signal:
/// `α · F^H( F s ⊙ b(τ) ) ⊙ c(ν)`.
pub fn apply_tap(
    params: &OtfsParams,
    tx: &[Complex64],
    gain: Complex64,
    tau: f64,
    nu: f64,
) -> Vec<Complex64> {
    let mut spec = tx.to_vec();
    fft::dft_unitary(&mut spec);
    for (v, b) in spec.iter_mut().zip(steering_b(params, tau)) {
        *v *= b;
    }
    fft::idft_unitary(&mut spec);
    for (v, c) in spec.iter_mut().zip(steering_c(params, nu)) {
        *v = *v * c * gain;
    }
    spec
}

/// The detector-side receive model: superposition of [`apply_tap`] over all
/// targets plus complex Gaussian noise.
///
/// For delays on the sampling grid this reproduces
/// [`crate::channel::synthesize_rx`] exactly (the steering vector is then an
/// exact circular shift); fractional delays differ slightly because the
/// rectangular-pulse waveform is not bandlimited.
pub fn model_rx(
    params: &OtfsParams,
    frame: &DelayDopplerFrame,
    targets: &TargetSet,
    noise_variance: f64,
    noise_seed: u64,
) -> Result<RxSignal> {
    frame.check_dims(params)?;
    targets.validate(params)?;
    let tx = heisenberg_samples(params, frame)?;
    let mut samples = vec![Complex64::default(); params.grid_size()];
    for tap in targets.taps() {
        let echo = apply_tap(params, &tx.samples, tap.gain, tap.delay_s, tap.doppler_hz);
        for (acc, v) in samples.iter_mut().zip(echo) {
            *acc += v;
        }
    }
    add_noise(&mut samples, noise_variance, noise_seed);
    Ok(RxSignal {
        samples,
        noise_seed,
    })
}
