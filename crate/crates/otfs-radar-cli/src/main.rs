//! Command-line front end: ambiguity-limit tables, single-shot profiles,
//! Monte Carlo sweeps, CFAR calibration and debug dumps.
//!
//! Every command is deterministic given its configuration and `--seed`, and
//! exits nonzero with a diagnostic naming the offending field on any
//! invalid input. File outputs are assembled in memory and written in one
//! shot, so a failing run leaves no partial files behind.

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use otfs_radar::cfar::{ca_cfar, extract_peaks, AssociationMode, CfarConfig};
use otfs_radar::channel::{synthesize_rx, TargetSet};
use otfs_radar::config::{load_params, load_scenario};
use otfs_radar::discrete::{steering_b, steering_c};
use otfs_radar::experiments::{run_sweep, simulate_observation, Method, Scenario};
use otfs_radar::glrt::glrt_map;
use otfs_radar::io;
use otfs_radar::modem::{heisenberg_samples, Constellation, DelayDopplerFrame};
use otfs_radar::params::OtfsParams;
use otfs_radar::{baseline, derive_seed};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "otfs-radar",
    version,
    about = "OTFS radar sensing toolkit: GLRT detection beyond the classical ambiguity limits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Glrt,
    Fft2d,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Glrt => Method::Glrt,
            MethodArg::Fft2d => Method::Fft2d,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AssocArg {
    Folded,
    Unambiguous,
}

impl From<AssocArg> for AssociationMode {
    fn from(a: AssocArg) -> AssociationMode {
        match a {
            AssocArg::Folded => AssociationMode::Folded,
            AssocArg::Unambiguous => AssociationMode::Unambiguous,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the resolution and ambiguity limits of a parameter set
    Limits {
        /// Preset name (isi-regime, ici-regime) or params JSON path
        #[arg(long)]
        params: String,
        /// Also write the table as CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Extract a range or velocity profile from one simulated observation
    Profile(ProfileArgs),

    /// Monte Carlo detection/estimation sweep over the reference target SNR
    Mc(McArgs),

    /// Empirically verify the CA-CFAR false-alarm rate on noise-only maps
    CalibrateCfar {
        /// Preset name or params JSON path
        #[arg(long)]
        params: String,
        /// Designed per-cell false-alarm probability
        #[arg(long, default_value_t = 1e-2)]
        pfa: f64,
        /// Minimum number of cell decisions to accumulate
        #[arg(long, default_value_t = 1_000_000)]
        cells: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },

    /// Dump internal vectors and maps for debugging
    Dump(DumpArgs),
}

#[derive(Args)]
struct ProfileArgs {
    /// Scripted scenario name (isi-a, isi-b, ici-a, ici-b) or JSON path
    #[arg(long)]
    scenario: String,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Profile axis: `range@velocity` (range profile at a fixed velocity)
    /// or `velocity@range`
    #[arg(long)]
    axis: String,
    /// The fixed coordinate: velocity in m/s for range profiles, range in m
    /// for velocity profiles
    #[arg(long)]
    slice: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Override the scenario's CFAR false-alarm probability
    #[arg(long)]
    pfa: Option<f64>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    /// Scripted scenario name or JSON path
    #[arg(long)]
    scenario: String,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Comma-separated reference-target SNRs in dB, e.g. `0,5,10,15`
    #[arg(long, value_delimiter = ',', required = true)]
    snr: Vec<f64>,
    /// Monte Carlo trials per SNR point
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    trials: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Override the association convention (default: folded for fft2d,
    /// unambiguous for glrt)
    #[arg(long, value_enum)]
    assoc: Option<AssocArg>,
    /// Refinement oversampling along delay
    #[arg(long)]
    os_tau: Option<usize>,
    /// Refinement oversampling along Doppler
    #[arg(long)]
    os_nu: Option<usize>,
    /// Override the scenario's CFAR false-alarm probability
    #[arg(long)]
    pfa: Option<f64>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    /// What to dump
    #[arg(long, value_enum)]
    what: DumpKind,
    /// Preset or params file (for frame/tx/steering dumps)
    #[arg(long)]
    params: Option<String>,
    /// Scenario (for map dumps)
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Delay in seconds (steering-b)
    #[arg(long)]
    tau: Option<f64>,
    /// Doppler in Hz (steering-c)
    #[arg(long)]
    nu: Option<f64>,
    /// Output path; `.bin` selects the binary format where available
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DumpKind {
    Frame,
    Tx,
    SteeringB,
    SteeringC,
    GlrtMap,
    FftMap,
}

fn main() {
    if let Ok(threads) = std::env::var("OTFS_LAB_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Limits { params, out } => cmd_limits(&params, out.as_deref()),
        Command::Profile(args) => cmd_profile(args),
        Command::Mc(args) => cmd_mc(args),
        Command::CalibrateCfar {
            params,
            pfa,
            cells,
            seed,
        } => cmd_calibrate_cfar(&params, pfa, cells, seed),
        Command::Dump(args) => cmd_dump(args),
    }
}

/// Writes a finished buffer to a file, or stdout when no path is given.
fn deliver(out: Option<&Path>, buffer: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, buffer)
            .with_context(|| format!("writing {}", path.display()))?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(buffer)?;
        }
    }
    Ok(())
}

fn limit_rows(params: &OtfsParams) -> Vec<(&'static str, f64)> {
    let l = params.limits();
    vec![
        ("bandwidth_hz", params.bandwidth()),
        ("symbol_duration_s", params.symbol_duration()),
        ("frame_duration_s", params.frame_duration()),
        ("range_resolution_m", l.range_resolution),
        ("velocity_resolution_mps", l.velocity_resolution),
        ("tau_max_s", l.tau_max),
        ("tau_max_isi_s", l.tau_max_isi),
        ("nu_max_hz", l.nu_max),
        ("nu_max_ici_hz", l.nu_max_ici),
        ("r_max_m", l.r_max),
        ("r_max_isi_m", l.r_max_isi),
        ("v_max_mps", l.v_max),
        ("v_max_ici_mps", l.v_max_ici),
    ]
}

fn cmd_limits(spec: &str, out: Option<&Path>) -> anyhow::Result<()> {
    let params = load_params(spec)?;
    println!(
        "parameters: N={} M={} Δf={} Hz T_cp={} s f_c={} Hz σ²={}",
        params.n_subcarriers(),
        params.n_symbols(),
        params.subcarrier_spacing(),
        params.cp_duration(),
        params.carrier_frequency(),
        params.noise_variance()
    );
    for (name, value) in limit_rows(&params) {
        println!("{name:>24}  {value:.6}");
    }
    if out.is_some() {
        let mut csv = String::from("quantity,value\n");
        for (name, value) in limit_rows(&params) {
            csv.push_str(&format!("{name},{value:?}\n"));
        }
        deliver(out, csv.as_bytes())?;
    }
    Ok(())
}

fn cmd_profile(args: ProfileArgs) -> anyhow::Result<()> {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(pfa) = args.pfa {
        scenario.cfar.p_fa = pfa;
    }
    let params = scenario.params;
    let (frame, _targets, rx) = simulate_observation(&scenario, args.seed)?;
    let y = rx.samples;

    let (values, axes) = match Method::from(args.method) {
        Method::Glrt => {
            let tx = heisenberg_samples(&params, &frame)?;
            let grid = scenario.detection_grid()?;
            let map = glrt_map(&params, &y, &tx.samples, params.noise_variance(), &grid)?;
            (map.values, map.grid.axes())
        }
        Method::Fft2d => {
            let map = baseline::ofdm_2dfft(&params, &y, &frame)?;
            (map.values.clone(), map.axes())
        }
    };
    let cfar_out = ca_cfar(&values, &axes, &scenario.cfar)?;

    let (n_delay, n_doppler) = values.dim();
    let to_db = |v: f64| 10.0 * v.max(1e-300).log10();
    let mut buf = Vec::new();
    match args.axis.as_str() {
        "range@velocity" => {
            let nu = params.velocity_to_doppler(args.slice);
            let j = nearest_bin(axes.doppler_origin, axes.doppler_step, n_doppler, nu)
                .ok_or_else(|| anyhow!("slice velocity {} m/s outside the grid", args.slice))?;
            let axis = io::delay_axis(&axes, n_delay, params.propagation_speed() / 2.0);
            let stat: Vec<f64> = (0..n_delay).map(|i| to_db(values[[i, j]])).collect();
            let thr: Vec<f64> = (0..n_delay).map(|i| to_db(cfar_out.threshold[[i, j]])).collect();
            io::write_profile_csv(&mut buf, "range_m", &axis, &stat, Some(&thr))?;
        }
        "velocity@range" => {
            let tau = params.range_to_delay(args.slice);
            let i = nearest_bin(axes.delay_origin, axes.delay_step, n_delay, tau)
                .ok_or_else(|| anyhow!("slice range {} m outside the grid", args.slice))?;
            let axis = io::doppler_axis(&axes, n_doppler, params.wavelength() / 2.0);
            let stat: Vec<f64> = (0..n_doppler).map(|j| to_db(values[[i, j]])).collect();
            let thr: Vec<f64> =
                (0..n_doppler).map(|j| to_db(cfar_out.threshold[[i, j]])).collect();
            io::write_profile_csv(&mut buf, "velocity_mps", &axis, &stat, Some(&thr))?;
        }
        other => bail!("axis must be `range@velocity` or `velocity@range`, got `{other}`"),
    }
    deliver(args.out.as_deref(), &buf)
}

fn nearest_bin(origin: f64, step: f64, count: usize, value: f64) -> Option<usize> {
    let idx = ((value - origin) / step).round();
    (idx >= 0.0 && idx < count as f64).then_some(idx as usize)
}

fn cmd_mc(args: McArgs) -> anyhow::Result<()> {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(os_tau) = args.os_tau {
        scenario.os_tau = os_tau;
    }
    if let Some(os_nu) = args.os_nu {
        scenario.os_nu = os_nu;
    }
    if let Some(pfa) = args.pfa {
        scenario.cfar.p_fa = pfa;
    }
    let method = Method::from(args.method);
    let assoc = args.assoc.map(AssociationMode::from);
    let rows = run_sweep(
        &scenario,
        method,
        assoc,
        &args.snr,
        args.trials as usize,
        args.seed,
    )?;

    let provenance = serde_json::json!({
        "scenario": scenario.name,
        "config_hash": config_hash(&args, &scenario),
        "method": method.to_string(),
        "root_seed": args.seed,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let mut buf = Vec::new();
    {
        use std::io::Write;
        writeln!(&mut buf, "# {provenance}")?;
    }
    io::write_metrics_csv(&mut buf, &rows)?;
    deliver(args.out.as_deref(), &buf)
}

/// Hash of everything that determines the sweep output, for provenance.
fn config_hash(args: &McArgs, scenario: &Scenario) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!(
        "{}|{:?}|{:?}|{}|{}|{:?}|{}|{}|{:?}",
        scenario.name,
        scenario.targets,
        scenario.cfar,
        scenario.os_tau,
        scenario.os_nu,
        args.snr,
        args.trials,
        args.seed,
        args.assoc.map(AssociationMode::from),
    ));
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn cmd_calibrate_cfar(spec: &str, pfa: f64, min_cells: u64, seed: u64) -> anyhow::Result<()> {
    let params = load_params(spec)?;
    let config = CfarConfig {
        p_fa: pfa,
        ..CfarConfig::default()
    };
    let grid = otfs_radar::glrt::DetectionGrid::new(&params)?;

    let mut cells = 0u64;
    let mut exceedances = 0u64;
    let mut detections = 0u64;
    let mut maps = 0u64;
    while cells < min_cells {
        let frame = DelayDopplerFrame::random(
            &params,
            Constellation::Qpsk,
            derive_seed(seed, 10, maps),
        );
        let tx = heisenberg_samples(&params, &frame)?;
        let noise = synthesize_rx(
            &params,
            &frame,
            &TargetSet::empty(),
            params.noise_variance(),
            derive_seed(seed, 11, maps),
        )?;
        let map = glrt_map(&params, &noise.samples, &tx.samples, params.noise_variance(), &grid)?;
        let axes = map.axes();
        let out = ca_cfar(&map.values, &axes, &config)?;
        exceedances += out.mask.iter().filter(|&&m| m).count() as u64;
        detections += extract_peaks(&out.mask, &map.values, &axes).len() as u64;
        cells += map.values.len() as u64;
        maps += 1;
    }

    let rate = exceedances as f64 / cells as f64;
    let (lo, hi) = wilson_interval(exceedances, cells);
    println!("designed_pfa {pfa:e}");
    println!("cells {cells} (over {maps} noise-only maps)");
    println!("exceedances {exceedances}");
    println!("empirical_pfa {rate:e}");
    println!("wilson95 [{lo:e}, {hi:e}]");
    println!("declared_peaks {detections}");
    let verdict = if lo <= pfa && pfa <= hi { "PASS" } else { "CHECK" };
    println!("design_within_interval {verdict}");
    Ok(())
}

/// 95% Wilson score interval for a binomial proportion.
fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn cmd_dump(args: DumpArgs) -> anyhow::Result<()> {
    let binary = args.out.extension().is_some_and(|e| e == "bin");
    let mut buf = Vec::new();
    match args.what {
        DumpKind::Frame => {
            let params = load_params(args.params.as_deref().unwrap_or("isi-regime"))?;
            let frame =
                DelayDopplerFrame::random(&params, Constellation::Qpsk, derive_seed(args.seed, 1, 0));
            if binary {
                io::write_frame_bin(&mut buf, &frame)?;
            } else {
                io::write_frame_csv(&mut buf, &frame)?;
            }
        }
        DumpKind::Tx => {
            let params = load_params(args.params.as_deref().unwrap_or("isi-regime"))?;
            let frame =
                DelayDopplerFrame::random(&params, Constellation::Qpsk, derive_seed(args.seed, 1, 0));
            let tx = heisenberg_samples(&params, &frame)?;
            io::write_vector_csv(&mut buf, &tx.samples)?;
        }
        DumpKind::SteeringB => {
            let params = load_params(args.params.as_deref().unwrap_or("isi-regime"))?;
            let tau = args.tau.ok_or_else(|| anyhow!("--tau is required for steering-b"))?;
            io::write_vector_csv(&mut buf, &steering_b(&params, tau))?;
        }
        DumpKind::SteeringC => {
            let params = load_params(args.params.as_deref().unwrap_or("isi-regime"))?;
            let nu = args.nu.ok_or_else(|| anyhow!("--nu is required for steering-c"))?;
            io::write_vector_csv(&mut buf, &steering_c(&params, nu))?;
        }
        DumpKind::GlrtMap | DumpKind::FftMap => {
            let spec = args
                .scenario
                .as_deref()
                .ok_or_else(|| anyhow!("--scenario is required for map dumps"))?;
            let scenario = load_scenario(spec)?;
            let params = scenario.params;
            let (frame, _targets, rx) = simulate_observation(&scenario, args.seed)?;
            let y = rx.samples;
            let values = match args.what {
                DumpKind::GlrtMap => {
                    let tx = heisenberg_samples(&params, &frame)?;
                    let grid = scenario.detection_grid()?;
                    glrt_map(&params, &y, &tx.samples, params.noise_variance(), &grid)?.values
                }
                _ => baseline::ofdm_2dfft(&params, &y, &frame)?.values,
            };
            if binary {
                io::write_map_bin(&mut buf, &values)?;
            } else {
                io::write_map_csv(&mut buf, &values)?;
            }
        }
    }
    deliver(Some(&args.out), &buf)
}
