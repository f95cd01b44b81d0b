//! Single-CP OTFS modulator: data frame generation, ISFFT, Heisenberg
//! transform, and closed-form evaluation of the CP-extended transmit signal.
//!
//! The delay-Doppler frame `X_dd` (N×M) maps to the frequency-time frame
//! `X = F_N · X_dd · F_M^H` via the inverse symplectic finite Fourier
//! transform, then each frequency-time column becomes `N` time samples
//! through a unitary IDFT (rectangular transmit pulse). One cyclic prefix
//! guards the whole frame, so in-frame delays act as circular shifts of the
//! full `N·M`-sample signal.

use crate::fft;
use crate::params::OtfsParams;
use crate::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::f64::consts::TAU;
use std::sync::OnceLock;

/// Transmit constellation for frame generation. Unit average symbol energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constellation {
    Qpsk,
    Qam16,
}

impl std::str::FromStr for Constellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" => Ok(Constellation::Qpsk),
            "16qam" | "qam16" => Ok(Constellation::Qam16),
            other => Err(Error::invalid(
                "constellation",
                format!("unknown constellation `{other}` (expected qpsk or 16qam)"),
            )),
        }
    }
}

/// Transmit pulse shape. Only the rectangular pulse is implemented; it is
/// what makes the sampling identities in this module exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PulseShape {
    #[default]
    Rectangular,
}

/// An N×M delay-Doppler data frame and its lazily computed frequency-time
/// image.
#[derive(Debug)]
pub struct DelayDopplerFrame {
    x_dd: Array2<Complex64>,
    x_ft: OnceLock<Array2<Complex64>>,
}

impl Clone for DelayDopplerFrame {
    fn clone(&self) -> Self {
        let x_ft = OnceLock::new();
        if let Some(ft) = self.x_ft.get() {
            let _ = x_ft.set(ft.clone());
        }
        DelayDopplerFrame {
            x_dd: self.x_dd.clone(),
            x_ft,
        }
    }
}

impl DelayDopplerFrame {
    /// Wraps an explicit symbol matrix (rows = delay bins, columns = Doppler
    /// bins).
    pub fn from_symbols(x_dd: Array2<Complex64>) -> Self {
        DelayDopplerFrame {
            x_dd,
            x_ft: OnceLock::new(),
        }
    }

    /// Draws a uniformly random data frame. Deterministic given the seed.
    pub fn random(params: &OtfsParams, constellation: Constellation, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let (n, m) = (params.n_subcarriers(), params.n_symbols());
        let x_dd = Array2::from_shape_fn((n, m), |_| draw_symbol(constellation, &mut rng));
        Self::from_symbols(x_dd)
    }

    /// Delay-Doppler symbols, N rows by M columns.
    pub fn x_dd(&self) -> &Array2<Complex64> {
        &self.x_dd
    }

    /// Frequency-time image `F_N · X_dd · F_M^H`, computed on first use.
    pub fn x_ft(&self) -> &Array2<Complex64> {
        self.x_ft.get_or_init(|| isfft(&self.x_dd))
    }

    /// (N, M)
    pub fn dim(&self) -> (usize, usize) {
        self.x_dd.dim()
    }

    /// Frobenius norm squared of the data frame.
    pub fn energy(&self) -> f64 {
        self.x_dd.iter().map(|x| x.norm_sqr()).sum()
    }

    pub(crate) fn check_dims(&self, params: &OtfsParams) -> Result<()> {
        let want = (params.n_subcarriers(), params.n_symbols());
        if self.dim() != want {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{} frame", want.0, want.1),
                got: format!("{}x{}", self.dim().0, self.dim().1),
            });
        }
        Ok(())
    }
}

fn draw_symbol(constellation: Constellation, rng: &mut ChaCha12Rng) -> Complex64 {
    match constellation {
        Constellation::Qpsk => {
            let scale = std::f64::consts::FRAC_1_SQRT_2;
            let re = if rng.random::<bool>() { scale } else { -scale };
            let im = if rng.random::<bool>() { scale } else { -scale };
            Complex64::new(re, im)
        }
        Constellation::Qam16 => {
            const LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
            let scale = 1.0 / 10f64.sqrt();
            let re = LEVELS[rng.random_range(0..4)] * scale;
            let im = LEVELS[rng.random_range(0..4)] * scale;
            Complex64::new(re, im)
        }
    }
}

/// Inverse symplectic finite Fourier transform: `F_N · X · F_M^H`, i.e. a
/// unitary N-point DFT down each column followed by a unitary M-point IDFT
/// along each row.
pub fn isfft(x_dd: &Array2<Complex64>) -> Array2<Complex64> {
    let (n, _m) = x_dd.dim();
    let mut out = x_dd.clone();
    let mut col = vec![Complex64::default(); n];
    for mut column in out.columns_mut() {
        for (c, v) in col.iter_mut().zip(column.iter()) {
            *c = *v;
        }
        fft::dft_unitary(&mut col);
        for (v, c) in column.iter_mut().zip(col.iter()) {
            *v = *c;
        }
    }
    for mut row in out.rows_mut() {
        fft::idft_unitary(row.as_slice_mut().expect("row-major layout"));
    }
    out
}

/// Symplectic finite Fourier transform, the exact inverse of [`isfft`]:
/// `F_N^H · X · F_M`.
pub fn sfft(x_ft: &Array2<Complex64>) -> Array2<Complex64> {
    let (n, _m) = x_ft.dim();
    let mut out = x_ft.clone();
    let mut col = vec![Complex64::default(); n];
    for mut column in out.columns_mut() {
        for (c, v) in col.iter_mut().zip(column.iter()) {
            *c = *v;
        }
        fft::idft_unitary(&mut col);
        for (v, c) in column.iter_mut().zip(col.iter()) {
            *v = *c;
        }
    }
    for mut row in out.rows_mut() {
        fft::dft_unitary(row.as_slice_mut().expect("row-major layout"));
    }
    out
}

/// The sampled transmit signal `s[ℓ] = s(ℓT/N)`, ℓ = 0..NM-1.
#[derive(Clone, Debug)]
pub struct TxSignal {
    pub samples: Vec<Complex64>,
    pub pulse_shape: PulseShape,
}

impl TxSignal {
    /// `‖s‖²`; equals the frame energy for the rectangular pulse.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x.norm_sqr()).sum()
    }
}

/// Heisenberg transform sampled at `t = ℓT/N`: sample `mN + p` is the p-th
/// entry of the unitary N-point IDFT of frequency-time column m.
pub fn heisenberg_samples(params: &OtfsParams, frame: &DelayDopplerFrame) -> Result<TxSignal> {
    frame.check_dims(params)?;
    let x_ft = frame.x_ft();
    let (n, m) = x_ft.dim();
    let mut samples = Vec::with_capacity(n * m);
    let mut col = vec![Complex64::default(); n];
    for j in 0..m {
        for (c, v) in col.iter_mut().zip(x_ft.column(j).iter()) {
            *c = *v;
        }
        fft::idft_unitary(&mut col);
        samples.extend_from_slice(&col);
    }
    Ok(TxSignal {
        samples,
        pulse_shape: PulseShape::Rectangular,
    })
}

/// Evaluates the CP-extended transmit signal `s_CP(t)` in closed form at any
/// real instant `t ∈ [-T_cp, MT]`.
///
/// Inside the frame this is the finite exponential sum of the symbol
/// containing `t`; on the CP interval it is the cyclic copy `s(t + MT)`.
/// The rectangular pulse makes the evaluation exact — no interpolation is
/// involved, which is what qualifies this as the simulation oracle.
pub fn evaluate_tx_cp(params: &OtfsParams, frame: &DelayDopplerFrame, t: f64) -> Result<Complex64> {
    frame.check_dims(params)?;
    let t_sym = params.symbol_duration();
    let m_total = params.n_symbols();
    let frame_span = m_total as f64 * t_sym;
    if !t.is_finite() || t < -params.cp_duration() || t > frame_span {
        return Err(Error::TimeOutOfRange {
            t,
            min: -params.cp_duration(),
            max: frame_span,
        });
    }
    let wrapped = if t < 0.0 { t + frame_span } else { t };
    // Symbol boundaries are the one discontinuity of the rectangular-pulse
    // waveform; instants meant to sit exactly on a boundary can round a hair
    // below it. Nudge the symbol pick so boundaries belong to the next
    // symbol; the residual |u| error is harmless because each s_m is
    // continuous and T-periodic in u.
    let m = ((wrapped / t_sym + 1e-9).floor() as usize).min(m_total - 1);
    let u = wrapped - m as f64 * t_sym;

    let x_ft = frame.x_ft();
    let n = params.n_subcarriers();
    let df = params.subcarrier_spacing();
    let mut acc = Complex64::default();
    for (i, x) in x_ft.column(m).iter().enumerate() {
        acc += x * Complex64::from_polar(1.0, TAU * i as f64 * df * u);
    }
    Ok(acc / (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frob(a: &Array2<Complex64>) -> f64 {
        a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    fn small_params() -> OtfsParams {
        OtfsParams::new(4, 4, 1.0e6, 1.0e-6, 60e9, 1.0).unwrap()
    }

    #[test]
    fn isfft_of_zero_frame_is_zero() {
        let x = Array2::from_elem((4, 4), Complex64::default());
        let out = isfft(&x);
        assert!(frob(&out) == 0.0);
    }

    #[test]
    fn isfft_of_unit_impulse_is_constant_quarter() {
        // N = M = 4: DFT of a (0,0) impulse spreads 1/sqrt(NM) = 1/4 everywhere
        let mut x = Array2::from_elem((4, 4), Complex64::default());
        x[[0, 0]] = Complex64::new(1.0, 0.0);
        let out = isfft(&x);
        for v in out.iter() {
            assert!((v - Complex64::new(0.25, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn sfft_inverts_isfft_and_preserves_norm() {
        let params = OtfsParams::new(16, 8, 1.0e6, 0.0, 60e9, 1.0).unwrap();
        let frame = DelayDopplerFrame::random(&params, Constellation::Qpsk, 11);
        let x = frame.x_dd();
        let ft = isfft(x);
        assert!((frob(&ft) - frob(x)).abs() / frob(x) < 1e-12);
        let back = sfft(&ft);
        let err = (&back - x).iter().map(|d| d.norm_sqr()).sum::<f64>().sqrt();
        assert!(err / frob(x) < 1e-12);
    }

    #[test]
    fn qpsk_frame_is_deterministic_and_on_constellation() {
        let params = small_params();
        let a = DelayDopplerFrame::random(&params, Constellation::Qpsk, 42);
        let b = DelayDopplerFrame::random(&params, Constellation::Qpsk, 42);
        assert_eq!(a.x_dd(), b.x_dd());
        let c = DelayDopplerFrame::random(&params, Constellation::Qpsk, 43);
        assert_ne!(a.x_dd(), c.x_dd());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for v in a.x_dd().iter() {
            assert!((v.re.abs() - s).abs() < 1e-15 && (v.im.abs() - s).abs() < 1e-15);
            assert!((v.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn qam16_mean_energy_near_unity() {
        // 10^4 symbols; per-symbol energy variance for unit-energy 16QAM is
        // E[|x|^4]-1 = 0.32, so 3σ of the mean is 3·sqrt(0.32/1e4) ≈ 0.017
        let params = OtfsParams::new(100, 100, 1.0e6, 0.0, 60e9, 1.0).unwrap();
        let frame = DelayDopplerFrame::random(&params, Constellation::Qam16, 7);
        let mean = frame.energy() / 1e4;
        assert!(
            (mean - 1.0).abs() < 0.017,
            "16QAM mean symbol energy {mean} outside 3σ of 1"
        );
    }

    #[test]
    fn heisenberg_impulse_column_gives_constant_symbol() {
        let params = small_params();
        let n = params.n_subcarriers();
        // frequency-time impulse at (n=0, m=2) -> symbol 2 is flat 1/sqrt(N)
        let mut x_ft = Array2::from_elem((4, 4), Complex64::default());
        x_ft[[0, 2]] = Complex64::new(1.0, 0.0);
        let frame = DelayDopplerFrame::from_symbols(sfft(&x_ft));
        let tx = heisenberg_samples(&params, &frame).unwrap();
        let expect = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
        for (l, v) in tx.samples.iter().enumerate() {
            if l / n == 2 {
                assert!((v - expect).norm() < 1e-12, "sample {l}");
            } else {
                assert!(v.norm() < 1e-12, "sample {l}");
            }
        }
    }

    #[test]
    fn parseval_through_the_modem() {
        let params = OtfsParams::new(32, 16, 2.0e6, 0.0, 60e9, 1.0).unwrap();
        let frame = DelayDopplerFrame::random(&params, Constellation::Qam16, 3);
        let tx = heisenberg_samples(&params, &frame).unwrap();
        assert_eq!(tx.samples.len(), params.grid_size());
        assert!((tx.energy() - frame.energy()).abs() / frame.energy() < 1e-12);
    }

    #[test]
    fn closed_form_matches_heisenberg_samples_on_the_grid() {
        let params = OtfsParams::new(8, 4, 1.0e6, 2.0e-6, 60e9, 1.0).unwrap();
        let frame = DelayDopplerFrame::random(&params, Constellation::Qpsk, 5);
        let tx = heisenberg_samples(&params, &frame).unwrap();
        let dt = params.sample_period();
        for (l, want) in tx.samples.iter().enumerate() {
            let got = evaluate_tx_cp(&params, &frame, l as f64 * dt).unwrap();
            assert!(
                (got - want).norm() < 1e-12 * want.norm().max(1.0),
                "sample {l}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn cp_interval_is_a_cyclic_copy() {
        let params = OtfsParams::new(8, 4, 1.0e6, 2.0e-6, 60e9, 1.0).unwrap();
        let frame = DelayDopplerFrame::random(&params, Constellation::Qpsk, 9);
        let frame_span = params.n_symbols() as f64 * params.symbol_duration();
        for eps in [1e-9, 3.3e-7, 1.9e-6] {
            let cp = evaluate_tx_cp(&params, &frame, -eps).unwrap();
            let tail = evaluate_tx_cp(&params, &frame, frame_span - eps).unwrap();
            assert!((cp - tail).norm() < 1e-12);
        }
    }

    #[test]
    fn cp_samples_equal_circular_shift_for_on_grid_delays() {
        let params = OtfsParams::new(8, 4, 1.0e6, 2.0e-6, 60e9, 1.0).unwrap();
        let frame = DelayDopplerFrame::random(&params, Constellation::Qpsk, 17);
        let tx = heisenberg_samples(&params, &frame).unwrap();
        let nm = params.grid_size();
        let dt = params.sample_period();
        // 2 µs CP = 16 samples; any integer shift q within it
        for q in [1usize, 7, 16] {
            for l in 0..nm {
                let got = evaluate_tx_cp(&params, &frame, l as f64 * dt - q as f64 * dt).unwrap();
                let want = tx.samples[(l + nm - q) % nm];
                assert!((got - want).norm() < 1e-11, "q={q} l={l}");
            }
        }
    }

    #[test]
    fn evaluate_rejects_out_of_range_times() {
        let params = small_params();
        let frame = DelayDopplerFrame::random(&params, Constellation::Qpsk, 1);
        let frame_span = params.n_symbols() as f64 * params.symbol_duration();
        assert!(evaluate_tx_cp(&params, &frame, -params.cp_duration() * 1.5).is_err());
        assert!(evaluate_tx_cp(&params, &frame, frame_span * 1.01).is_err());
        assert!(evaluate_tx_cp(&params, &frame, f64::NAN).is_err());
    }

    #[test]
    fn zero_frame_evaluates_to_zero_everywhere() {
        let params = small_params();
        let frame =
            DelayDopplerFrame::from_symbols(Array2::from_elem((4, 4), Complex64::default()));
        for t in [-5e-7, 0.0, 1.3e-6, 3.9e-6] {
            assert_eq!(
                evaluate_tx_cp(&params, &frame, t).unwrap(),
                Complex64::default()
            );
        }
        let tx = heisenberg_samples(&params, &frame).unwrap();
        assert!(tx.samples.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let params = OtfsParams::new(8, 8, 1.0e6, 0.0, 60e9, 1.0).unwrap();
        let frame = DelayDopplerFrame::random(&small_params(), Constellation::Qpsk, 1);
        assert!(heisenberg_samples(&params, &frame).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        // ISFFT is unitary: Frobenius norm preserved for arbitrary frames
        #[test]
        fn isfft_preserves_frobenius_norm(seed in 0u64..1u64 << 48) {
            let params = OtfsParams::new(16, 8, 1.0e6, 0.0, 60e9, 1.0).unwrap();
            let frame = DelayDopplerFrame::random(&params, Constellation::Qam16, seed);
            let x = frame.x_dd();
            let ft = isfft(x);
            prop_assert!(((frob(&ft) - frob(x)) / frob(x)).abs() < 1e-12);
        }

        // round trip through the symplectic pair is the identity
        #[test]
        fn sfft_isfft_roundtrip(seed in 0u64..1u64 << 48) {
            let params = OtfsParams::new(8, 8, 1.0e6, 0.0, 60e9, 1.0).unwrap();
            let frame = DelayDopplerFrame::random(&params, Constellation::Qpsk, seed);
            let back = sfft(&isfft(frame.x_dd()));
            let err = (&back - frame.x_dd())
                .iter()
                .map(|d| d.norm_sqr())
                .sum::<f64>()
                .sqrt();
            prop_assert!(err / frob(frame.x_dd()) < 1e-12);
        }
    }
}
