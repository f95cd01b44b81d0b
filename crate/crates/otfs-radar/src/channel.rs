//! Doubly selective point-target radar channel and the continuous-time
//! receive oracle.
//!
//! [`synthesize_rx`] builds the backscattered signal directly from the
//! channel definition: each tap delays the CP-extended transmit signal,
//! applies a Doppler phase ramp at the sampling instants and adds complex
//! Gaussian noise. Delays are applied through the closed-form transmit
//! evaluation, so there is no oversampling or interpolation error — this is
//! the ground truth against which the discrete model is verified.

use crate::modem::{evaluate_tx_cp, DelayDopplerFrame};
use crate::params::OtfsParams;
use crate::{Error, Result};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

/// One point target: complex gain, round-trip delay, Doppler shift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tap {
    pub gain: Complex64,
    pub delay_s: f64,
    pub doppler_hz: f64,
}

impl Tap {
    pub fn range_m(&self, params: &OtfsParams) -> f64 {
        params.delay_to_range(self.delay_s)
    }

    pub fn velocity_mps(&self, params: &OtfsParams) -> f64 {
        params.doppler_to_velocity(self.doppler_hz)
    }

    /// `|α|²/σ²` in dB.
    pub fn snr_db(&self, params: &OtfsParams) -> f64 {
        10.0 * (self.gain.norm_sqr() / params.noise_variance()).log10()
    }
}

/// A set of channel taps. Empty means the null hypothesis (noise only).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TargetSet {
    taps: Vec<Tap>,
}

impl TargetSet {
    pub fn new(taps: Vec<Tap>) -> Self {
        TargetSet { taps }
    }

    pub fn empty() -> Self {
        TargetSet::default()
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// The standing assumption of the single-CP model: every round-trip
    /// delay fits inside the cyclic prefix.
    pub fn validate(&self, params: &OtfsParams) -> Result<()> {
        for tap in &self.taps {
            if !tap.delay_s.is_finite() || tap.delay_s < 0.0 {
                return Err(Error::invalid(
                    "delay_s",
                    format!("must be finite and non-negative, got {}", tap.delay_s),
                ));
            }
            if tap.delay_s > params.cp_duration() {
                return Err(Error::DelayExceedsCp {
                    delay_s: tap.delay_s,
                    cp_s: params.cp_duration(),
                });
            }
            if !tap.doppler_hz.is_finite() {
                return Err(Error::invalid("doppler_hz", "must be finite"));
            }
        }
        Ok(())
    }
}

/// The sampled receive signal `y[ℓ] = y(ℓT/N)`, ℓ = 0..NM-1 (CP interval
/// already discarded).
#[derive(Clone, Debug)]
pub struct RxSignal {
    pub samples: Vec<Complex64>,
    pub noise_seed: u64,
}

/// Draws a channel gain with `|α|² = σ²·10^(snr_db/10)` and uniformly random
/// phase.
pub fn snr_to_gain(snr_db: f64, noise_variance: f64, rng: &mut ChaCha12Rng) -> Complex64 {
    let magnitude = (noise_variance * 10f64.powf(snr_db / 10.0)).sqrt();
    let phase: f64 = rng.random::<f64>() * TAU;
    Complex64::from_polar(magnitude, phase)
}

/// Adds i.i.d. circularly symmetric complex Gaussian noise of per-sample
/// variance σ² (σ²/2 per quadrature).
pub fn add_noise(samples: &mut [Complex64], noise_variance: f64, seed: u64) {
    if noise_variance == 0.0 {
        return;
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let scale = (noise_variance / 2.0).sqrt();
    for v in samples.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += Complex64::new(re * scale, im * scale);
    }
}

/// Synthesizes the backscattered signal at the sampling instants `ℓT/N`:
///
/// `y[ℓ] = Σ_k α_k · s_CP(ℓT/N − τ_k) · e^{j2πν_k ℓT/N} + w[ℓ]`
///
/// Fails when any tap delay exceeds the CP (the single-CP model would not
/// hold). Noise is reproducible from `noise_seed`.
pub fn synthesize_rx(
    params: &OtfsParams,
    frame: &DelayDopplerFrame,
    targets: &TargetSet,
    noise_variance: f64,
    noise_seed: u64,
) -> Result<RxSignal> {
    frame.check_dims(params)?;
    targets.validate(params)?;
    let nm = params.grid_size();
    let dt = params.sample_period();
    let mut samples = vec![Complex64::default(); nm];
    for tap in targets.taps() {
        for (l, acc) in samples.iter_mut().enumerate() {
            let t = l as f64 * dt;
            let echo = evaluate_tx_cp(params, frame, t - tap.delay_s)?;
            *acc += tap.gain * echo * Complex64::from_polar(1.0, TAU * tap.doppler_hz * t);
        }
    }
    add_noise(&mut samples, noise_variance, noise_seed);
    Ok(RxSignal {
        samples,
        noise_seed,
    })
}
