//! Conventional 2-D FFT OFDM-radar processing, used as the comparison
//! receiver.
//!
//! The sampled return is reshaped into fast-time × slow-time, transformed to
//! the frequency-time domain, divided element-wise by the known transmit
//! frame, and converted to a range-Doppler map with an IDFT across
//! subcarriers and a DFT across symbols. Applied to the single-CP OTFS
//! return this receiver inherits the classical ambiguity limits (delays fold
//! modulo `1/Δf`, Dopplers modulo `1/T`) and degrades under ISI/ICI — the
//! two effects the GLRT path embraces instead.

use crate::cfar::MapAxes;
use crate::fft;
use crate::modem::DelayDopplerFrame;
use crate::params::OtfsParams;
use crate::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;

/// Division guard: transmit cells below this magnitude are treated as
/// erasures. Never triggered by the constant-modulus constellations.
const DIVISION_FLOOR: f64 = 1e-6;

/// Squared-magnitude range-Doppler map, N delay bins × M Doppler bins with
/// the Doppler axis centered on zero.
#[derive(Clone, Debug)]
pub struct RangeDopplerMap {
    pub values: Array2<f64>,
    axes: MapAxes,
}

impl RangeDopplerMap {
    pub fn axes(&self) -> MapAxes {
        self.axes
    }

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

/// Standard 2-D FFT OFDM-radar processing of a single-CP OTFS return.
pub fn ofdm_2dfft(
    params: &OtfsParams,
    y: &[Complex64],
    frame: &DelayDopplerFrame,
) -> Result<RangeDopplerMap> {
    frame.check_dims(params)?;
    let (n, m) = (params.n_subcarriers(), params.n_symbols());
    if y.len() != n * m {
        return Err(Error::DimensionMismatch {
            expected: format!("length-{} sample vector", n * m),
            got: format!("{}", y.len()),
        });
    }

    // fast-time × slow-time, then per-symbol DFT to frequency-time
    let mut received = Array2::from_shape_fn((n, m), |(p, mm)| y[mm * n + p]);
    let mut col = vec![Complex64::default(); n];
    for mut column in received.columns_mut() {
        for (c, v) in col.iter_mut().zip(column.iter()) {
            *c = *v;
        }
        fft::dft_unitary(&mut col);
        for (v, c) in column.iter_mut().zip(col.iter()) {
            *v = *c;
        }
    }

    // element-wise channel estimate against the known transmit frame
    let x_ft = frame.x_ft();
    let mut quotient = Array2::from_elem((n, m), Complex64::default());
    for ((i, j), q) in quotient.indexed_iter_mut() {
        let x = x_ft[[i, j]];
        if x.norm() >= DIVISION_FLOOR {
            *q = received[[i, j]] / x;
        }
    }

    // IDFT across subcarriers -> delay, DFT across symbols -> Doppler
    for mut column in quotient.columns_mut() {
        for (c, v) in col.iter_mut().zip(column.iter()) {
            *c = *v;
        }
        fft::idft_unitary(&mut col);
        for (v, c) in column.iter_mut().zip(col.iter()) {
            *v = *c;
        }
    }
    for mut row in quotient.rows_mut() {
        fft::dft_unitary(row.as_slice_mut().expect("row-major layout"));
    }

    // center the Doppler axis on zero
    let half = m / 2;
    let values = Array2::from_shape_fn((n, m), |(d, jj)| {
        quotient[[d, (jj + m - half) % m]].norm_sqr()
    });

    let t_sym = params.symbol_duration();
    Ok(RangeDopplerMap {
        values,
        axes: MapAxes {
            delay_origin: 0.0,
            delay_step: params.sample_period(),
            doppler_origin: -(half as f64) / (m as f64 * t_sym),
            doppler_step: 1.0 / (m as f64 * t_sym),
            delay_periodic: true,
            doppler_periodic: true,
        },
    })
}
