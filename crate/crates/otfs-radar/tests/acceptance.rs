//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `--nocapture`). Tolerances are pinned in
//! the constants below; the heavy Monte Carlo criteria run multi-minute
//! workloads and parallelize over trials.

use num_complex::Complex64;
use otfs_radar::cfar::{ca_cfar, AssociationMode, CfarConfig};
use otfs_radar::channel::{synthesize_rx, Tap, TargetSet};
use otfs_radar::discrete::{kron, model_rx, steering_b, steering_b_factors, steering_c, steering_c_factors};
use otfs_radar::experiments::{builtin_scenario, run_sweep, run_trial, Method};
use otfs_radar::glrt::{estimate_alpha, glrt_map, glrt_statistic, DetectionGrid};
use otfs_radar::modem::{heisenberg_samples, isfft, sfft, Constellation, DelayDopplerFrame};
use otfs_radar::params::OtfsParams;
use otfs_radar::derive_seed;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Root seed of the whole suite; every stochastic criterion derives from it.
const ROOT_SEED: u64 = 20250614;

fn pass(criterion: &str) {
    println!("criterion {criterion}: PASS");
}

/// |got - want| as a fraction of |want|.
fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    num / den
}

/// Criterion 1 — published-table reproduction.
///
/// Every printed resolution/ambiguity value must be met within 0.1% or
/// within half of its printed decimal precision (the table prints rounded
/// values: 15.3 m/s stands for 15.2588…), using the table's own c = 3e8
/// convention; the ISI range-extension ratio is exactly 6 and the ICI
/// velocity-extension factor exactly N = 1024.
#[test]
fn criterion_1_table_reproduction() {
    let isi = OtfsParams::isi_regime()
        .with_propagation_speed(3.0e8)
        .unwrap();
    let ici = OtfsParams::ici_regime()
        .with_propagation_speed(3.0e8)
        .unwrap();
    let li = isi.limits();
    let lc = ici.limits();

    // (value, printed, half of the printed least significant digit)
    let checks = [
        ("isi range_resolution", li.range_resolution, 3.0, 0.5),
        ("isi r_max", li.r_max, 192.0, 0.5),
        ("isi r_max_isi", li.r_max_isi, 1152.0, 0.5),
        ("isi velocity_resolution", li.velocity_resolution, 30.5, 0.05),
        ("isi v_max", li.v_max, 976.6, 0.05),
        ("ici range_resolution", lc.range_resolution, 3.0, 0.5),
        ("ici r_max", lc.r_max, 3072.0, 0.5),
        ("ici r_max_isi", lc.r_max_isi, 3072.0, 0.5),
        ("ici velocity_resolution", lc.velocity_resolution, 15.3, 0.05),
        ("ici v_max", lc.v_max, 61.0, 0.5),
    ];
    for (name, got, printed, half_lsd) in checks {
        let ok = rel(got, printed) <= 1e-3 || (got - printed).abs() <= half_lsd;
        assert!(ok, "{name}: computed {got} vs printed {printed}");
    }
    assert!((li.r_max_isi / li.r_max - 6.0).abs() < 1e-12, "ISI factor");
    assert!((li.tau_max_isi / li.tau_max - 6.0).abs() < 1e-12, "ISI factor");
    assert!(
        (lc.nu_max_ici / lc.nu_max - 1024.0).abs() < 1e-9,
        "ICI factor"
    );
    assert!(
        (lc.v_max_ici / lc.v_max - 1024.0).abs() < 1e-9,
        "ICI factor"
    );
    pass("1 (published-table reproduction)");
}

/// Criterion 2 — model-equivalence oracle.
///
/// 50 random single-target configurations with on-grid delays, arbitrary
/// Doppler (well beyond 1/T) and no noise: the discrete frequency-domain
/// model must match the continuous-time synthesis within 1e-10 relative ℓ2.
#[test]
fn criterion_2_model_equivalence() {
    let params = OtfsParams::isi_regime();
    let cp_samples = (params.cp_duration() / params.sample_period()).floor() as usize;
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(ROOT_SEED, 2, 0));
    for case in 0..50 {
        let frame = DelayDopplerFrame::random(&params, Constellation::Qpsk, rng.random());
        let shift = rng.random_range(0..=cp_samples);
        // up to ±3 subcarrier spacings of Doppler: far into the ICI regime
        let nu = (rng.random::<f64>() - 0.5) * 6.0 / params.symbol_duration();
        let gain = Complex64::from_polar(
            0.2 + rng.random::<f64>(),
            rng.random::<f64>() * std::f64::consts::TAU,
        );
        let targets = TargetSet::new(vec![Tap {
            gain,
            delay_s: shift as f64 * params.sample_period(),
            doppler_hz: nu,
        }]);
        let oracle = synthesize_rx(&params, &frame, &targets, 0.0, 0).unwrap();
        let model = model_rx(&params, &frame, &targets, 0.0, 0).unwrap();
        let err = rel_l2(&model.samples, &oracle.samples);
        assert!(
            err < 1e-10,
            "case {case}: shift {shift}, doppler {nu}: rel ℓ2 {err}"
        );
    }
    pass("2 (discrete model ≡ continuous oracle on the sampling grid)");
}

/// Criterion 3 — matched-filter peak identity.
///
/// Noise-free on-grid target: the statistic at the truth equals
/// |α|²·NM/σ² within 1e-9 relative and the ML gain estimate recovers α
/// within 1e-10 relative.
#[test]
fn criterion_3_matched_filter_peak_identity() {
    let params = OtfsParams::isi_regime();
    let frame =
        DelayDopplerFrame::random(&params, Constellation::Qpsk, derive_seed(ROOT_SEED, 3, 0));
    let s = heisenberg_samples(&params, &frame).unwrap().samples;
    let alpha = Complex64::from_polar(10.0, 0.7718);
    let tau = 52.0 * params.sample_period();
    let nu = -3.0 / (params.n_symbols() as f64 * params.symbol_duration());
    let targets = TargetSet::new(vec![Tap {
        gain: alpha,
        delay_s: tau,
        doppler_hz: nu,
    }]);
    let rx = synthesize_rx(&params, &frame, &targets, 0.0, 0).unwrap();

    let nm = params.grid_size() as f64;
    let want = alpha.norm_sqr() * nm; // σ² = 1
    let stat = glrt_statistic(&params, &rx.samples, &s, 1.0, tau, nu).unwrap();
    assert!(
        rel(stat, want) < 1e-9,
        "statistic {stat} vs |α|²NM/σ² = {want}"
    );
    let a_hat = estimate_alpha(&params, &rx.samples, &s, tau, nu).unwrap();
    assert!(
        (a_hat - alpha).norm() / alpha.norm() < 1e-10,
        "α̂ = {a_hat} vs α = {alpha}"
    );
    pass("3 (matched-filter peak identity and gain recovery)");
}

/// Criterion 4 — ambiguity surpassing in the ISI regime.
///
/// Scenario isi-a at the scripted SNRs: GLRT+CFAR finds all four targets at
/// their unambiguous ranges in ≥95/100 trials; the 2-D FFT baseline scored
/// at true positions finds at most two in ≥95/100 trials.
#[test]
fn criterion_4_isi_ambiguity_surpassing() {
    let scenario = builtin_scenario("isi-a").unwrap();
    let glrt_all_four = (0..100u64)
        .into_par_iter()
        .filter(|&trial| {
            let report =
                run_trial(&scenario, Method::Glrt, None, derive_seed(ROOT_SEED, 4, trial)).unwrap();
            report.matched_count() == 4
        })
        .count();
    assert!(
        glrt_all_four >= 95,
        "GLRT matched all four targets in only {glrt_all_four}/100 trials"
    );

    let fft_at_most_two = (0..100u64)
        .into_par_iter()
        .filter(|&trial| {
            let report = run_trial(
                &scenario,
                Method::Fft2d,
                Some(AssociationMode::Unambiguous),
                derive_seed(ROOT_SEED, 40, trial),
            )
            .unwrap();
            report.matched_count() <= 2
        })
        .count();
    assert!(
        fft_at_most_two >= 95,
        "baseline exceeded two unambiguous matches in {} trials",
        100 - fft_at_most_two
    );
    pass(&format!(
        "4 (ISI: GLRT all-4 in {glrt_all_four}/100, baseline ≤2 in {fft_at_most_two}/100)"
    ));
}

/// Criterion 5 — ambiguity surpassing in the ICI regime.
///
/// Scenario ici-a: GLRT resolves all four true (unwrapped) velocities in
/// ≥95/100 trials; the baseline at most two.
#[test]
fn criterion_5_ici_ambiguity_surpassing() {
    let scenario = builtin_scenario("ici-a").unwrap();
    let glrt_all_four = (0..100u64)
        .into_par_iter()
        .filter(|&trial| {
            let report =
                run_trial(&scenario, Method::Glrt, None, derive_seed(ROOT_SEED, 5, trial)).unwrap();
            report.matched_count() == 4
        })
        .count();
    assert!(
        glrt_all_four >= 95,
        "GLRT resolved all four velocities in only {glrt_all_four}/100 trials"
    );

    let fft_at_most_two = (0..100u64)
        .into_par_iter()
        .filter(|&trial| {
            let report = run_trial(
                &scenario,
                Method::Fft2d,
                Some(AssociationMode::Unambiguous),
                derive_seed(ROOT_SEED, 50, trial),
            )
            .unwrap();
            report.matched_count() <= 2
        })
        .count();
    assert!(
        fft_at_most_two >= 95,
        "baseline exceeded two unambiguous matches in {} trials",
        100 - fft_at_most_two
    );
    pass(&format!(
        "5 (ICI: GLRT all-4 in {glrt_all_four}/100, baseline ≤2 in {fft_at_most_two}/100)"
    ));
}

/// Criterion 6 — detection ordering over an SNR sweep.
///
/// Reference-target sweep over {0,5,10,15,20,25} dB with 100 trials per
/// point on isi-a: GLRT P_d is not below the baseline's beyond the 95%
/// binomial confidence bound anywhere, and GLRT range RMSE is no worse
/// wherever both methods exceed P_d = 0.5.
#[test]
fn criterion_6_detection_ordering() {
    let scenario = builtin_scenario("isi-a").unwrap();
    let snr_grid = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0];
    let n_trials = 100usize;
    let glrt = run_sweep(
        &scenario,
        Method::Glrt,
        None,
        &snr_grid,
        n_trials,
        derive_seed(ROOT_SEED, 6, 0),
    )
    .unwrap();
    let fft = run_sweep(
        &scenario,
        Method::Fft2d,
        None,
        &snr_grid,
        n_trials,
        derive_seed(ROOT_SEED, 6, 1),
    )
    .unwrap();

    for (g, f) in glrt.iter().zip(&fft) {
        let n = n_trials as f64;
        let margin = 1.959963984540054
            * ((g.p_detect * (1.0 - g.p_detect) + f.p_detect * (1.0 - f.p_detect)) / n).sqrt();
        assert!(
            g.p_detect >= f.p_detect - margin,
            "at {} dB: GLRT P_d {} below baseline {} beyond the binomial margin {margin}",
            g.snr_db,
            g.p_detect,
            f.p_detect
        );
        if g.p_detect > 0.5 && f.p_detect > 0.5 {
            let (g_rmse, f_rmse) = (g.rmse.unwrap(), f.rmse.unwrap());
            assert!(
                g_rmse <= f_rmse,
                "at {} dB: GLRT range RMSE {g_rmse} worse than baseline {f_rmse}",
                g.snr_db
            );
        }
    }
    let summary: Vec<String> = glrt
        .iter()
        .zip(&fft)
        .map(|(g, f)| format!("{}dB {:.2}/{:.2}", g.snr_db, g.p_detect, f.p_detect))
        .collect();
    pass(&format!(
        "6 (detection ordering GLRT/FFT P_d: {})",
        summary.join(", ")
    ));
}

/// Criterion 7 — CFAR calibration.
///
/// Over at least 10⁶ noise-only GLRT map cells, the empirical per-cell
/// false-alarm rate stays within a factor of two of the designed
/// P_fa = 1e-2.
#[test]
fn criterion_7_cfar_calibration() {
    let params = OtfsParams::isi_regime();
    let grid = DetectionGrid::new(&params).unwrap();
    let config = CfarConfig {
        p_fa: 1e-2,
        ..CfarConfig::default()
    };
    let mut cells = 0u64;
    let mut exceedances = 0u64;
    let mut map_index = 0u64;
    while cells < 1_000_000 {
        let frame = DelayDopplerFrame::random(
            &params,
            Constellation::Qpsk,
            derive_seed(ROOT_SEED, 7, map_index),
        );
        let tx = heisenberg_samples(&params, &frame).unwrap();
        let noise = synthesize_rx(
            &params,
            &frame,
            &TargetSet::empty(),
            1.0,
            derive_seed(ROOT_SEED, 70, map_index),
        )
        .unwrap();
        let map = glrt_map(&params, &noise.samples, &tx.samples, 1.0, &grid).unwrap();
        let out = ca_cfar(&map.values, &map.axes(), &config).unwrap();
        exceedances += out.mask.iter().filter(|&&m| m).count() as u64;
        cells += map.values.len() as u64;
        map_index += 1;
    }
    let rate = exceedances as f64 / cells as f64;
    assert!(
        rate > 0.5e-2 && rate < 2e-2,
        "empirical per-cell rate {rate} outside [0.5, 2]×1e-2 over {cells} cells"
    );
    pass(&format!(
        "7 (CFAR calibration: empirical {rate:.5} vs designed 0.01 over {cells} cells)"
    ));
}

/// Criterion 8 — structural invariants.
///
/// Kronecker/flat steering equality, delay/Doppler periodicities, ISFFT
/// unitarity, statistic phase/scale invariance with a stable argmax, and
/// fast-path/brute-force map agreement below 1e-10 on a 16×16 sub-grid.
#[test]
fn criterion_8_structural_invariants() {
    let params = OtfsParams::new(16, 8, 2.0e6, 2.0e-6, 60e9, 1.0).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(ROOT_SEED, 8, 0));

    // Kronecker == flat closed form for 100 random arguments
    for _ in 0..100 {
        let tau = (rng.random::<f64>() - 0.2) * 3.0e-6;
        let nu = (rng.random::<f64>() - 0.5) * 6.0e7;
        let (b_n, b_m) = steering_b_factors(&params, tau);
        let b = steering_b(&params, tau);
        let max_b = kron(&b_n, &b_m)
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0f64, f64::max);
        assert!(max_b < 1e-12, "b Kronecker mismatch {max_b}");
        let (c_m, c_n) = steering_c_factors(&params, nu);
        let c = steering_c(&params, nu);
        let max_c = kron(&c_m, &c_n)
            .iter()
            .zip(&c)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0f64, f64::max);
        assert!(max_c < 1e-12, "c Kronecker mismatch {max_c}");
    }

    // periodicity M/Δf in delay, N/T in Doppler
    let frame = DelayDopplerFrame::random(&params, Constellation::Qpsk, rng.random());
    let s = heisenberg_samples(&params, &frame).unwrap().samples;
    let y: Vec<Complex64> = (0..params.grid_size())
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let delay_period = params.n_symbols() as f64 / params.subcarrier_spacing();
    let doppler_period = params.n_subcarriers() as f64 / params.symbol_duration();
    let (tau, nu) = (0.73e-6, 8.3e5);
    let base = glrt_statistic(&params, &y, &s, 1.0, tau, nu).unwrap();
    let wrap_tau = glrt_statistic(&params, &y, &s, 1.0, tau + delay_period, nu).unwrap();
    let wrap_nu = glrt_statistic(&params, &y, &s, 1.0, tau, nu + doppler_period).unwrap();
    assert!(rel(wrap_tau, base) < 1e-9, "delay periodicity");
    assert!(rel(wrap_nu, base) < 1e-9, "Doppler periodicity");

    // ISFFT unitarity across 100 random frames
    for _ in 0..100 {
        let f = DelayDopplerFrame::random(&params, Constellation::Qam16, rng.random());
        let x = f.x_dd();
        let ft = isfft(x);
        let nx = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let nf = ft.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!((nx - nf).abs() / nx < 1e-12, "ISFFT unitarity");
        let back = sfft(&ft);
        let err = (&back - x).iter().map(|d| d.norm_sqr()).sum::<f64>().sqrt();
        assert!(err / nx < 1e-12, "SFFT inverse");
    }

    // phase and scale invariance of the statistic; argmax invariance
    let grid = DetectionGrid::new(&params).unwrap();
    let map = glrt_map(&params, &y, &s, 1.0, &grid).unwrap();
    let rotated: Vec<Complex64> = y
        .iter()
        .map(|v| v * Complex64::from_polar(1.0, 2.3))
        .collect();
    let rotated_stat = glrt_statistic(&params, &rotated, &s, 1.0, tau, nu).unwrap();
    assert!(rel(rotated_stat, base) < 1e-12, "phase invariance");
    let kappa = Complex64::new(0.4, -1.9);
    let scaled: Vec<Complex64> = y.iter().map(|v| v * kappa).collect();
    let scaled_stat = glrt_statistic(&params, &scaled, &s, 1.0, tau, nu).unwrap();
    assert!(
        rel(scaled_stat, kappa.norm_sqr() * base) < 1e-12,
        "quadratic scaling"
    );
    let scaled_map = glrt_map(&params, &scaled, &s, 1.0, &grid).unwrap();
    let (i1, j1, _) = map.argmax();
    let (i2, j2, _) = scaled_map.argmax();
    assert_eq!((i1, j1), (i2, j2), "argmax invariance under scaling");

    // fast path vs per-cell evaluation on a 16x16 sub-grid
    let sub = DetectionGrid::with_options(
        &params,
        Some(15.0 * params.sample_period()),
        Some(16.0 / (params.n_symbols() as f64 * params.symbol_duration())),
        1,
        1,
    )
    .unwrap();
    assert_eq!((sub.n_delay(), sub.n_doppler()), (16, 16));
    let fast = glrt_map(&params, &y, &s, 1.0, &sub).unwrap();
    for i in 0..16 {
        for j in 0..16 {
            let direct =
                glrt_statistic(&params, &y, &s, 1.0, sub.delay_at(i), sub.doppler_at(j)).unwrap();
            let diff = (fast.values[[i, j]] - direct).abs() / direct.abs().max(1e-12);
            assert!(diff < 1e-10, "fast path mismatch {diff} at ({i},{j})");
        }
    }
    pass("8 (structural invariants)");
}
