//! OTFS radar sensing toolkit.
//!
//! Simulates a single-CP OTFS joint radar-communication link and detects
//! point targets from the backscattered time-domain signal. The receive
//! chain deliberately keeps two independent signal models:
//!
//! * [`channel::synthesize_rx`] samples the continuous-time backscatter
//!   directly from the channel definition (the simulation ground truth),
//! * [`discrete::model_rx`] applies the equivalent discrete frequency-domain
//!   model built from Kronecker-structured steering vectors (the detector's
//!   model).
//!
//! On-grid targets make the two agree to machine precision, which is the
//! correctness anchor for everything downstream: the GLRT statistic map
//! ([`glrt`]), the conventional 2-D FFT receiver ([`baseline`]), CA-CFAR
//! thresholding and truth association ([`cfar`]), and the Monte Carlo
//! experiment harness ([`experiments`]).
//!
//! ```
//! use otfs_radar::params::OtfsParams;
//!
//! let params = OtfsParams::isi_regime();
//! let limits = params.limits();
//! assert!((limits.r_max_isi / limits.r_max - 6.0).abs() < 1e-12);
//! ```

pub mod baseline;
pub mod cfar;
pub mod channel;
pub mod config;
pub mod discrete;
mod error;
pub mod experiments;
pub mod fft;
pub mod glrt;
pub mod io;
pub mod modem;
pub mod params;

pub use error::{Error, Result};

/// Splits one root seed into independent, reproducible sub-streams.
///
/// Trials, noise, data frames and gain phases all derive their seeds through
/// this, so parallel and serial runs of the same root seed agree exactly.
pub fn derive_seed(root: u64, stream: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the three words
    let mut z = root
        .wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
