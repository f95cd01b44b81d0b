//! OTFS numerology and the derived resolution/ambiguity limits.
//!
//! [`OtfsParams`] holds the frame geometry (N subcarriers, M symbols,
//! subcarrier spacing, CP length, carrier) plus the physical constants every
//! other module needs. The symbol duration is always derived as `T = 1/Δf`,
//! never stored, so `T·Δf = 1` holds exactly.
//!
//! [`ResolutionLimits`] captures the central ambiguity arithmetic: the
//! standard unambiguous delay `min{1/Δf, T_cp}` versus the ISI-embracing
//! `min{M/Δf, T_cp}`, and the standard unambiguous Doppler `1/T` versus the
//! ICI-embracing `N/T`, together with their range/velocity views through
//! `τ = 2R/c` and `ν = 2v/λ`.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default propagation speed in m/s.
pub const SPEED_OF_LIGHT: f64 = 2.9979e8;

/// Immutable OTFS frame configuration. Cheap to copy; share freely across
/// worker threads.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtfsParams {
    n_subcarriers: usize,
    n_symbols: usize,
    subcarrier_spacing: f64,
    cp_duration: f64,
    carrier_frequency: f64,
    propagation_speed: f64,
    noise_variance: f64,
}

impl OtfsParams {
    /// Creates a validated parameter set with the default propagation speed.
    pub fn new(
        n_subcarriers: usize,
        n_symbols: usize,
        subcarrier_spacing: f64,
        cp_duration: f64,
        carrier_frequency: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        let p = OtfsParams {
            n_subcarriers,
            n_symbols,
            subcarrier_spacing,
            cp_duration,
            carrier_frequency,
            propagation_speed: SPEED_OF_LIGHT,
            noise_variance,
        };
        p.validate()?;
        Ok(p)
    }

    /// Replaces the propagation speed (e.g. `3.0e8` for textbook checks).
    pub fn with_propagation_speed(mut self, c: f64) -> Result<Self> {
        self.propagation_speed = c;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 {
            return Err(Error::invalid("n_subcarriers", "must be positive"));
        }
        if self.n_symbols == 0 {
            return Err(Error::invalid("n_symbols", "must be positive"));
        }
        if !self.subcarrier_spacing.is_finite() || self.subcarrier_spacing <= 0.0 {
            return Err(Error::invalid(
                "subcarrier_spacing_hz",
                format!("must be positive and finite, got {}", self.subcarrier_spacing),
            ));
        }
        if !self.carrier_frequency.is_finite() || self.carrier_frequency <= 0.0 {
            return Err(Error::invalid(
                "carrier_hz",
                format!("must be positive and finite, got {}", self.carrier_frequency),
            ));
        }
        if !self.cp_duration.is_finite() || self.cp_duration < 0.0 {
            return Err(Error::invalid(
                "cp_duration_s",
                format!("must be non-negative and finite, got {}", self.cp_duration),
            ));
        }
        if !self.propagation_speed.is_finite() || self.propagation_speed <= 0.0 {
            return Err(Error::invalid("propagation_speed", "must be positive"));
        }
        if !self.noise_variance.is_finite() || self.noise_variance < 0.0 {
            return Err(Error::invalid(
                "noise_variance",
                format!("must be non-negative and finite, got {}", self.noise_variance),
            ));
        }
        Ok(())
    }

    /// ISI-dominant preset: N=64, M=64, B=50 MHz, T_cp=7.68 µs, f_c=60 GHz.
    ///
    /// The subcarrier spacing is stored exactly as `B/N` = 781.25 kHz rather
    /// than a rounded value, keeping `T·Δf = 1` exact.
    pub fn isi_regime() -> Self {
        OtfsParams {
            n_subcarriers: 64,
            n_symbols: 64,
            subcarrier_spacing: 50e6 / 64.0,
            cp_duration: 7.68e-6,
            carrier_frequency: 60e9,
            propagation_speed: SPEED_OF_LIGHT,
            noise_variance: 1.0,
        }
    }

    /// ICI-dominant preset: N=1024, M=8, B=50 MHz, T_cp=20.48 µs, f_c=60 GHz.
    pub fn ici_regime() -> Self {
        OtfsParams {
            n_subcarriers: 1024,
            n_symbols: 8,
            subcarrier_spacing: 50e6 / 1024.0,
            cp_duration: 20.48e-6,
            carrier_frequency: 60e9,
            propagation_speed: SPEED_OF_LIGHT,
            noise_variance: 1.0,
        }
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    /// Number of samples per frame, `N·M`.
    pub fn grid_size(&self) -> usize {
        self.n_subcarriers * self.n_symbols
    }

    /// Subcarrier spacing Δf in Hz.
    pub fn subcarrier_spacing(&self) -> f64 {
        self.subcarrier_spacing
    }

    /// Symbol duration `T = 1/Δf` in seconds.
    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.subcarrier_spacing
    }

    /// Sampling interval `T/N` in seconds.
    pub fn sample_period(&self) -> f64 {
        self.symbol_duration() / self.n_subcarriers as f64
    }

    pub fn cp_duration(&self) -> f64 {
        self.cp_duration
    }

    pub fn carrier_frequency(&self) -> f64 {
        self.carrier_frequency
    }

    pub fn propagation_speed(&self) -> f64 {
        self.propagation_speed
    }

    /// Carrier wavelength `λ = c/f_c` in meters.
    pub fn wavelength(&self) -> f64 {
        self.propagation_speed / self.carrier_frequency
    }

    /// Per-sample noise power σ².
    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn with_noise_variance(mut self, noise_variance: f64) -> Result<Self> {
        self.noise_variance = noise_variance;
        self.validate()?;
        Ok(self)
    }

    /// Total bandwidth `B = N·Δf` in Hz.
    pub fn bandwidth(&self) -> f64 {
        self.n_subcarriers as f64 * self.subcarrier_spacing
    }

    /// Frame duration including the CP, `M·T + T_cp`, in seconds.
    pub fn frame_duration(&self) -> f64 {
        self.n_symbols as f64 * self.symbol_duration() + self.cp_duration
    }

    /// Round-trip delay to range: `R = cτ/2`.
    pub fn delay_to_range(&self, tau: f64) -> f64 {
        self.propagation_speed * tau / 2.0
    }

    /// Range to round-trip delay: `τ = 2R/c`.
    pub fn range_to_delay(&self, range: f64) -> f64 {
        2.0 * range / self.propagation_speed
    }

    /// Doppler shift to radial velocity: `v = λν/2` (positive = closing).
    pub fn doppler_to_velocity(&self, nu: f64) -> f64 {
        self.wavelength() * nu / 2.0
    }

    /// Radial velocity to Doppler shift: `ν = 2v/λ`.
    pub fn velocity_to_doppler(&self, velocity: f64) -> f64 {
        2.0 * velocity / self.wavelength()
    }

    /// Derives all resolution and ambiguity limits.
    pub fn limits(&self) -> ResolutionLimits {
        let df = self.subcarrier_spacing;
        let t = self.symbol_duration();
        let m = self.n_symbols as f64;
        let n = self.n_subcarriers as f64;

        let tau_max = (1.0 / df).min(self.cp_duration);
        let tau_max_isi = (m / df).min(self.cp_duration);
        let nu_max = 1.0 / t;
        let nu_max_ici = n / t;

        ResolutionLimits {
            range_resolution: self.propagation_speed / (2.0 * self.bandwidth()),
            velocity_resolution: self.wavelength() / (2.0 * m * t),
            tau_max,
            tau_max_isi,
            nu_max,
            nu_max_ici,
            r_max: self.delay_to_range(tau_max),
            r_max_isi: self.delay_to_range(tau_max_isi),
            // two-sided ± half-width: the unambiguous Doppler interval is
            // centered at zero, so the velocity view is ±λν_max/4
            v_max: self.wavelength() * nu_max / 4.0,
            v_max_ici: self.wavelength() * nu_max_ici / 4.0,
        }
    }
}

/// Resolutions and unambiguous detection limits, with and without ISI/ICI
/// embracing.
///
/// Delay quantities are one-sided (`[0, τ_max)`); Doppler and velocity
/// quantities are the half-widths of two-sided intervals (`±ν_max/2` maps to
/// `±v_max`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResolutionLimits {
    /// Range cell width `c/(2NΔf)` in meters.
    pub range_resolution: f64,
    /// Velocity cell width `λ/(2MT)` in m/s.
    pub velocity_resolution: f64,
    /// Standard unambiguous delay `min{1/Δf, T_cp}` in seconds.
    pub tau_max: f64,
    /// ISI-embracing unambiguous delay `min{M/Δf, T_cp}` in seconds.
    pub tau_max_isi: f64,
    /// Standard unambiguous Doppler span `1/T` in Hz.
    pub nu_max: f64,
    /// ICI-embracing unambiguous Doppler span `N/T` in Hz.
    pub nu_max_ici: f64,
    /// Standard maximum range in meters.
    pub r_max: f64,
    /// ISI-embracing maximum range in meters.
    pub r_max_isi: f64,
    /// Standard maximum velocity (±) in m/s.
    pub v_max: f64,
    /// ICI-embracing maximum velocity (±) in m/s.
    pub v_max_ici: f64,
}
