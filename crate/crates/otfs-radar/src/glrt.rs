//! GLRT detection statistic over a discretized delay-Doppler grid.
//!
//! For a single-target hypothesis with unknown (α, τ, ν), maximizing the
//! likelihood over α in closed form leaves the normalized matched-filter
//! statistic
//!
//! `L(τ, ν) = |s^H F^H B^H(τ) F C^H(ν) y|² / (σ² ‖s‖²)`
//!
//! which this module evaluates per cell and, for whole maps, through an
//! FFT factorization: per Doppler bin, one phase-ramp multiply of `y`, one
//! forward DFT, one conjugate multiply with `DFT(s)`, and one zero-padded
//! inverse DFT that yields every delay bin at once. The fast path is
//! algebraically identical to the per-cell form; a test pins them together.
//!
//! Because the steering vectors are periodic with `M/Δf` in delay and `N/T`
//! in Doppler, the statistic is unambiguous over exactly the ISI/ICI-embracing
//! region — that is what the detector exploits.

use crate::cfar::MapAxes;
use crate::discrete::steering_b;
use crate::fft;
use crate::params::OtfsParams;
use crate::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::TAU;

/// Search grid over the (τ, ν) plane.
///
/// Delay bins start at 0 with width `(T/N)/os_τ`; Doppler bins cover
/// `[-span/2, span/2)` with width `1/(MT)/os_ν`. Defaults search the whole
/// physically admissible region: delays up to the CP, Doppler across the
/// full ICI-embracing interval.
#[derive(Clone, Copy, Debug)]
pub struct DetectionGrid {
    delay_step: f64,
    n_delay: usize,
    doppler_start: f64,
    doppler_step: f64,
    n_doppler: usize,
    delay_period: f64,
    doppler_period: f64,
}

impl DetectionGrid {
    /// Resolution-matched grid (no oversampling) over the default region.
    pub fn new(params: &OtfsParams) -> Result<Self> {
        Self::with_options(params, None, None, 1, 1)
    }

    /// Grid with explicit search extents and integer oversampling factors.
    ///
    /// `tau_search_max` defaults to `T_cp` and must stay within the
    /// ISI-embracing unambiguous delay; `nu_span` defaults to `N/T` (the
    /// ICI-embracing Doppler interval) and must not exceed it.
    pub fn with_options(
        params: &OtfsParams,
        tau_search_max: Option<f64>,
        nu_span: Option<f64>,
        os_tau: usize,
        os_nu: usize,
    ) -> Result<Self> {
        if os_tau < 1 {
            return Err(Error::invalid("os_tau", "oversampling must be >= 1"));
        }
        if os_nu < 1 {
            return Err(Error::invalid("os_nu", "oversampling must be >= 1"));
        }
        let limits = params.limits();
        let tau_max = tau_search_max.unwrap_or_else(|| params.cp_duration());
        let nu_span = nu_span.unwrap_or(limits.nu_max_ici);
        if !tau_max.is_finite() || tau_max < 0.0 || tau_max > limits.tau_max_isi * (1.0 + 1e-12) {
            return Err(Error::GridBounds(format!(
                "delay search extent {} s outside [0, {} s]",
                tau_max, limits.tau_max_isi
            )));
        }
        if !nu_span.is_finite() || nu_span <= 0.0 || nu_span > limits.nu_max_ici * (1.0 + 1e-12) {
            return Err(Error::GridBounds(format!(
                "Doppler search span {} Hz outside (0, {} Hz]",
                nu_span, limits.nu_max_ici
            )));
        }

        let delay_step = params.sample_period() / os_tau as f64;
        let doppler_step =
            1.0 / (params.n_symbols() as f64 * params.symbol_duration() * os_nu as f64);
        // the zero-padded inverse DFT produces NM·os_τ lags, one delay
        // period; when tau_max is the full period the endpoint duplicates
        // bin 0 and is dropped
        let n_delay = ((tau_max / delay_step + 1e-9).floor() as usize + 1)
            .min(params.grid_size() * os_tau);
        let n_doppler = ((nu_span / doppler_step) + 1e-9).round().max(1.0) as usize;
        let delay_period = params.n_symbols() as f64 / params.subcarrier_spacing();
        Ok(DetectionGrid {
            delay_step,
            n_delay,
            doppler_start: -nu_span / 2.0,
            doppler_step,
            n_doppler,
            delay_period,
            doppler_period: limits.nu_max_ici,
        })
    }

    pub fn n_delay(&self) -> usize {
        self.n_delay
    }

    pub fn n_doppler(&self) -> usize {
        self.n_doppler
    }

    pub fn delay_step(&self) -> f64 {
        self.delay_step
    }

    pub fn doppler_step(&self) -> f64 {
        self.doppler_step
    }

    /// Center delay of bin `i`.
    pub fn delay_at(&self, i: usize) -> f64 {
        i as f64 * self.delay_step
    }

    /// Center Doppler of bin `j`.
    pub fn doppler_at(&self, j: usize) -> f64 {
        self.doppler_start + j as f64 * self.doppler_step
    }

    /// Axis description for CFAR and export. An axis is periodic exactly
    /// when its extent spans the full steering-vector period.
    pub fn axes(&self) -> MapAxes {
        let delay_extent = self.n_delay as f64 * self.delay_step;
        let doppler_extent = self.n_doppler as f64 * self.doppler_step;
        MapAxes {
            delay_origin: 0.0,
            delay_step: self.delay_step,
            doppler_origin: self.doppler_start,
            doppler_step: self.doppler_step,
            delay_periodic: (delay_extent - self.delay_period).abs() < self.delay_step * 1e-6,
            doppler_periodic: (doppler_extent - self.doppler_period).abs()
                < self.doppler_step * 1e-6,
        }
    }
}

/// The GLRT statistic evaluated on a [`DetectionGrid`]; `values[[i, j]]` is
/// `L(τ_i, ν_j)`.
#[derive(Clone, Debug)]
pub struct StatisticMap {
    pub values: Array2<f64>,
    pub grid: DetectionGrid,
}

impl StatisticMap {
    pub fn axes(&self) -> MapAxes {
        self.grid.axes()
    }

    /// Location and value of the global maximum.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for ((i, j), &v) in self.values.indexed_iter() {
            if v > best.2 {
                best = (i, j, v);
            }
        }
        best
    }
}

fn check_inputs(y: &[Complex64], s: &[Complex64], params: &OtfsParams) -> Result<f64> {
    let nm = params.grid_size();
    if y.len() != nm || s.len() != nm {
        return Err(Error::DimensionMismatch {
            expected: format!("length-{nm} sample vectors"),
            got: format!("y: {}, s: {}", y.len(), s.len()),
        });
    }
    let s_energy: f64 = s.iter().map(|v| v.norm_sqr()).sum();
    if s_energy <= 0.0 {
        return Err(Error::ZeroSignal);
    }
    Ok(s_energy)
}

fn unitary_spectrum(v: &[Complex64]) -> Vec<Complex64> {
    let mut spec = v.to_vec();
    fft::dft_unitary(&mut spec);
    spec
}

/// `s^H F^H B^H(τ) F C^H(ν) y` — the matched inner product shared by the
/// statistic and the gain estimate.
fn matched_inner(
    params: &OtfsParams,
    s_spec: &[Complex64],
    y: &[Complex64],
    tau: f64,
    nu: f64,
) -> Complex64 {
    let dt = params.sample_period();
    let mut z: Vec<Complex64> = y
        .iter()
        .enumerate()
        .map(|(l, v)| v * Complex64::from_polar(1.0, -TAU * nu * l as f64 * dt))
        .collect();
    fft::dft_unitary(&mut z);
    s_spec
        .iter()
        .zip(steering_b(params, tau))
        .zip(z.iter())
        .map(|((s, b), zv)| (s * b).conj() * zv)
        .sum()
}

/// The decision statistic `|s^H F^H B^H(τ) F C^H(ν) y|² / (σ²‖s‖²)`.
pub fn glrt_statistic(
    params: &OtfsParams,
    y: &[Complex64],
    s: &[Complex64],
    noise_variance: f64,
    tau: f64,
    nu: f64,
) -> Result<f64> {
    let s_energy = check_inputs(y, s, params)?;
    if !noise_variance.is_finite() || noise_variance <= 0.0 {
        return Err(Error::invalid(
            "noise_variance",
            "the statistic requires σ² > 0",
        ));
    }
    let inner = matched_inner(params, &unitary_spectrum(s), y, tau, nu);
    Ok(inner.norm_sqr() / (noise_variance * s_energy))
}

/// Closed-form ML channel gain at a fixed (τ, ν):
/// `α̂ = s^H F^H B^H(τ) F C^H(ν) y / ‖s‖²`.
pub fn estimate_alpha(
    params: &OtfsParams,
    y: &[Complex64],
    s: &[Complex64],
    tau: f64,
    nu: f64,
) -> Result<Complex64> {
    let s_energy = check_inputs(y, s, params)?;
    let inner = matched_inner(params, &unitary_spectrum(s), y, tau, nu);
    Ok(inner / s_energy)
}

/// Evaluates the statistic on every grid cell through the FFT fast path.
///
/// Doppler bins are independent and processed in parallel; each produces one
/// full delay column.
pub fn glrt_map(
    params: &OtfsParams,
    y: &[Complex64],
    s: &[Complex64],
    noise_variance: f64,
    grid: &DetectionGrid,
) -> Result<StatisticMap> {
    let s_energy = check_inputs(y, s, params)?;
    if !noise_variance.is_finite() || noise_variance <= 0.0 {
        return Err(Error::invalid(
            "noise_variance",
            "the statistic requires σ² > 0",
        ));
    }
    let nm = params.grid_size();
    let dt = params.sample_period();
    // padded length: delay lags at (T/N)/os_τ spacing over one period
    let os_tau = (params.sample_period() / grid.delay_step).round() as usize;
    let padded = nm * os_tau;

    let mut s_raw = s.to_vec();
    fft::dft_raw(&mut s_raw);
    let denom = noise_variance * s_energy;

    let columns: Vec<Vec<f64>> = (0..grid.n_doppler)
        .into_par_iter()
        .map(|j| {
            let nu = grid.doppler_at(j);
            let mut z: Vec<Complex64> = y
                .iter()
                .enumerate()
                .map(|(l, v)| v * Complex64::from_polar(1.0, -TAU * nu * l as f64 * dt))
                .collect();
            fft::dft_raw(&mut z);
            // conj(DFT s) ⊙ DFT z, normalized to the unitary convention
            let mut product = vec![Complex64::default(); padded];
            for n in 0..nm {
                product[n] = s_raw[n].conj() * z[n] / nm as f64;
            }
            fft::idft_raw(&mut product);
            product[..grid.n_delay]
                .iter()
                .map(|v| v.norm_sqr() / denom)
                .collect()
        })
        .collect();

    let mut values = Array2::zeros((grid.n_delay, grid.n_doppler));
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    Ok(StatisticMap {
        values,
        grid: *grid,
    })
}

/// Locally re-estimates a peak on an oversampled neighborhood.
///
/// Evaluates the statistic on a `(2·os_τ+1)×(2·os_ν+1)` patch centered at
/// `(tau0, nu0)` with spacings `delay_step/os_τ` and `doppler_step/os_ν`,
/// then applies 3-point parabolic interpolation per axis on the log
/// statistic. Detection bookkeeping stays on the coarse bins; this
/// refinement only feeds the RMSE metrics.
#[allow(clippy::too_many_arguments)]
pub fn refine_peak(
    params: &OtfsParams,
    y: &[Complex64],
    s: &[Complex64],
    tau0: f64,
    nu0: f64,
    delay_step: f64,
    doppler_step: f64,
    os_tau: usize,
    os_nu: usize,
) -> Result<(f64, f64)> {
    let s_spec = unitary_spectrum(s);
    check_inputs(y, s, params)?;
    let os_tau = os_tau.max(1) as isize;
    let os_nu = os_nu.max(1) as isize;
    let dtau = delay_step / os_tau as f64;
    let dnu = doppler_step / os_nu as f64;

    let mut patch = Array2::zeros(((2 * os_tau + 1) as usize, (2 * os_nu + 1) as usize));
    for (jj, row) in (-os_nu..=os_nu).enumerate() {
        let nu = nu0 + row as f64 * dnu;
        let dt = params.sample_period();
        let mut z: Vec<Complex64> = y
            .iter()
            .enumerate()
            .map(|(l, v)| v * Complex64::from_polar(1.0, -TAU * nu * l as f64 * dt))
            .collect();
        fft::dft_unitary(&mut z);
        for (ii, coli) in (-os_tau..=os_tau).enumerate() {
            let tau = (tau0 + coli as f64 * dtau).max(0.0);
            let inner: Complex64 = s_spec
                .iter()
                .zip(steering_b(params, tau))
                .zip(z.iter())
                .map(|((sv, b), zv)| (sv * b).conj() * zv)
                .sum();
            patch[[ii, jj]] = inner.norm_sqr();
        }
    }

    let mut best = (os_tau as usize, os_nu as usize);
    let mut best_v = f64::NEG_INFINITY;
    for ((i, j), &v) in patch.indexed_iter() {
        if v > best_v {
            best_v = v;
            best = (i, j);
        }
    }
    let (bi, bj) = best;
    let tau_hat = (tau0 + (bi as isize - os_tau) as f64 * dtau
        + parabolic_offset(&patch, bi, bj, true) * dtau)
        .max(0.0);
    let nu_hat = nu0
        + (bj as isize - os_nu) as f64 * dnu
        + parabolic_offset(&patch, bi, bj, false) * dnu;
    Ok((tau_hat, nu_hat))
}

/// Sub-bin offset in [-0.5, 0.5] from a 3-point parabola through the log
/// values; 0 when a neighbor is missing.
pub(crate) fn parabolic_offset(values: &Array2<f64>, i: usize, j: usize, along_rows: bool) -> f64 {
    let (ni, nj) = values.dim();
    let get = |di: isize| -> Option<f64> {
        let (ii, jj) = if along_rows {
            (i as isize + di, j as isize)
        } else {
            (i as isize, j as isize + di)
        };
        if ii < 0 || jj < 0 || ii >= ni as isize || jj >= nj as isize {
            return None;
        }
        let v = values[[ii as usize, jj as usize]];
        (v > 0.0).then(|| v.ln())
    };
    match (get(-1), get(0), get(1)) {
        (Some(lm), Some(l0), Some(lp)) => {
            let denom = lm - 2.0 * l0 + lp;
            if denom.abs() < 1e-300 {
                0.0
            } else {
                (0.5 * (lm - lp) / denom).clamp(-0.5, 0.5)
            }
        }
        _ => 0.0,
    }
}
