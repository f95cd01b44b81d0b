//! Cell-averaging CFAR, peak extraction and truth association.
//!
//! The threshold multiplier is the exact CA-CFAR design factor for
//! exponentially distributed cells, `γ = N_t (P_fa^{-1/N_t} - 1)`, applied
//! to the mean of a rectangular training band around each cell (guard band
//! excluded). Axes that span a full ambiguity period wrap; axes that cover
//! only part of it shrink the window at the edges, with `γ` recomputed for
//! the cells actually available.

use crate::channel::TargetSet;
use crate::params::OtfsParams;
use crate::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

/// Physical description of a detection map's two axes.
#[derive(Clone, Copy, Debug)]
pub struct MapAxes {
    pub delay_origin: f64,
    pub delay_step: f64,
    pub doppler_origin: f64,
    pub doppler_step: f64,
    /// Whether the delay axis spans a full ambiguity period (wraps).
    pub delay_periodic: bool,
    /// Whether the Doppler axis spans a full ambiguity period (wraps).
    pub doppler_periodic: bool,
}

impl MapAxes {
    pub fn delay_at(&self, bin: f64) -> f64 {
        self.delay_origin + bin * self.delay_step
    }

    pub fn doppler_at(&self, bin: f64) -> f64 {
        self.doppler_origin + bin * self.doppler_step
    }
}

/// CA-CFAR window geometry and design false-alarm probability.
///
/// `guard` and `training` are half-widths per axis (delay, Doppler); the
/// training band is the rectangular ring between the guard box and the
/// outer box.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CfarConfig {
    pub p_fa: f64,
    pub guard: (usize, usize),
    pub training: (usize, usize),
}

impl Default for CfarConfig {
    fn default() -> Self {
        CfarConfig {
            p_fa: 1e-4,
            guard: (2, 2),
            training: (4, 4),
        }
    }
}

impl CfarConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return Err(Error::invalid(
                "p_fa",
                format!("must lie in (0, 1), got {}", self.p_fa),
            ));
        }
        if self.training == (0, 0) {
            return Err(Error::EmptyTrainingBand);
        }
        Ok(())
    }

    /// Interior training-cell count.
    pub fn n_training(&self) -> usize {
        let outer = (2 * (self.guard.0 + self.training.0) + 1)
            * (2 * (self.guard.1 + self.training.1) + 1);
        let inner = (2 * self.guard.0 + 1) * (2 * self.guard.1 + 1);
        outer - inner
    }
}

/// Exact CA-CFAR threshold multiplier for `n_t` exponential training cells:
/// `γ = n_t (P_fa^{-1/n_t} - 1)`; tends to `-ln(P_fa)` as `n_t → ∞`.
pub fn threshold_factor(p_fa: f64, n_t: usize) -> f64 {
    let n = n_t as f64;
    n * (p_fa.powf(-1.0 / n) - 1.0)
}

/// CFAR decision mask and the per-cell threshold that produced it.
#[derive(Clone, Debug)]
pub struct CfarOutput {
    pub mask: Array2<bool>,
    pub threshold: Array2<f64>,
}

// Inclusive-box sums over a prefix-summed matrix padded by `pad` on each side.
struct PrefixSums {
    sums: Array2<f64>,
    counts: Array2<f64>,
    pad: (usize, usize),
}

impl PrefixSums {
    fn build(map: &Array2<f64>, axes_periodic: (bool, bool), pad: (usize, usize)) -> Self {
        let (rows, cols) = map.dim();
        let (pr, pc) = pad;
        let mut sums = Array2::zeros((rows + 2 * pr + 1, cols + 2 * pc + 1));
        let mut counts = Array2::zeros((rows + 2 * pr + 1, cols + 2 * pc + 1));
        for i in 0..rows + 2 * pr {
            for j in 0..cols + 2 * pc {
                let ri = i as isize - pr as isize;
                let cj = j as isize - pc as isize;
                let (value, present) = match (
                    resolve_index(ri, rows, axes_periodic.0),
                    resolve_index(cj, cols, axes_periodic.1),
                ) {
                    (Some(r), Some(c)) => (map[[r, c]], 1.0),
                    _ => (0.0, 0.0),
                };
                sums[[i + 1, j + 1]] =
                    value + sums[[i, j + 1]] + sums[[i + 1, j]] - sums[[i, j]];
                counts[[i + 1, j + 1]] =
                    present + counts[[i, j + 1]] + counts[[i + 1, j]] - counts[[i, j]];
            }
        }
        PrefixSums { sums, counts, pad }
    }

    /// Sum and element count of the inclusive box centered at (i, j) with
    /// half-widths (hr, hc), in original map coordinates.
    fn boxed(&self, i: usize, j: usize, hr: usize, hc: usize) -> (f64, f64) {
        let (pr, pc) = self.pad;
        let r0 = i + pr - hr;
        let r1 = i + pr + hr + 1;
        let c0 = j + pc - hc;
        let c1 = j + pc + hc + 1;
        let sum = self.sums[[r1, c1]] - self.sums[[r0, c1]] - self.sums[[r1, c0]]
            + self.sums[[r0, c0]];
        let count = self.counts[[r1, c1]] - self.counts[[r0, c1]] - self.counts[[r1, c0]]
            + self.counts[[r0, c0]];
        (sum, count)
    }
}

fn resolve_index(idx: isize, len: usize, periodic: bool) -> Option<usize> {
    if idx >= 0 && (idx as usize) < len {
        Some(idx as usize)
    } else if periodic {
        Some(idx.rem_euclid(len as isize) as usize)
    } else {
        None
    }
}

/// Cell-averaging CFAR over a detection map.
///
/// A cell is declared when `value > γ(N_t) · mean(training cells)`. Guard
/// cells never train. Periodic axes wrap; on non-periodic axes the training
/// band shrinks near the map edge and `γ` adapts to the shrunken count.
pub fn ca_cfar(map: &Array2<f64>, axes: &MapAxes, config: &CfarConfig) -> Result<CfarOutput> {
    config.validate()?;
    let (rows, cols) = map.dim();
    let (gd, gv) = config.guard;
    let (td, tv) = config.training;
    let pad = (gd + td, gv + tv);
    let prefix = PrefixSums::build(map, (axes.delay_periodic, axes.doppler_periodic), pad);

    let mut mask = Array2::from_elem((rows, cols), false);
    let mut threshold = Array2::from_elem((rows, cols), f64::INFINITY);
    for i in 0..rows {
        for j in 0..cols {
            let (outer_sum, outer_cnt) = prefix.boxed(i, j, gd + td, gv + tv);
            let (guard_sum, guard_cnt) = prefix.boxed(i, j, gd, gv);
            let sum = outer_sum - guard_sum;
            let count = (outer_cnt - guard_cnt).round();
            if count < 1.0 {
                continue;
            }
            let gamma = threshold_factor(config.p_fa, count as usize);
            let thr = gamma * (sum / count);
            threshold[[i, j]] = thr;
            mask[[i, j]] = map[[i, j]] > thr;
        }
    }
    Ok(CfarOutput { mask, threshold })
}

/// One declared target.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Detection {
    pub delay_bin: usize,
    pub doppler_bin: usize,
    /// Statistic value at the peak cell.
    pub value: f64,
    /// Bin-center positions (association operates on these).
    pub delay_s: f64,
    pub doppler_hz: f64,
    /// Sub-bin refined positions (RMSE operates on these).
    pub refined_delay_s: f64,
    pub refined_doppler_hz: f64,
    /// ML gain estimate at the peak, when the detector provides one.
    pub alpha: Option<Complex64>,
}

fn neighbor(map: &Array2<f64>, axes: &MapAxes, i: isize, j: isize) -> Option<f64> {
    let (rows, cols) = map.dim();
    let r = resolve_index(i, rows, axes.delay_periodic)?;
    let c = resolve_index(j, cols, axes.doppler_periodic)?;
    Some(map[[r, c]])
}

fn log_parabolic_offset(vm: Option<f64>, v0: f64, vp: Option<f64>) -> f64 {
    match (vm, vp) {
        (Some(a), Some(b)) if a > 0.0 && v0 > 0.0 && b > 0.0 => {
            let (la, l0, lb) = (a.ln(), v0.ln(), b.ln());
            let denom = la - 2.0 * l0 + lb;
            if denom.abs() < 1e-300 {
                0.0
            } else {
                (0.5 * (la - lb) / denom).clamp(-0.5, 0.5)
            }
        }
        _ => 0.0,
    }
}

/// Extracts CFAR-passing cells that are strict local maxima over their 3×3
/// neighborhood (wrapping on periodic axes), with 3-point parabolic
/// sub-bin refinement per axis.
pub fn extract_peaks(mask: &Array2<bool>, map: &Array2<f64>, axes: &MapAxes) -> Vec<Detection> {
    assert_eq!(mask.dim(), map.dim(), "mask/map shape mismatch");
    let mut peaks = Vec::new();
    for ((i, j), &hit) in mask.indexed_iter() {
        if !hit {
            continue;
        }
        let v0 = map[[i, j]];
        let mut is_max = true;
        'scan: for di in -1isize..=1 {
            for dj in -1isize..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                if let Some(v) = neighbor(map, axes, i as isize + di, j as isize + dj) {
                    if v >= v0 {
                        is_max = false;
                        break 'scan;
                    }
                }
            }
        }
        if !is_max {
            continue;
        }
        let d_off = log_parabolic_offset(
            neighbor(map, axes, i as isize - 1, j as isize),
            v0,
            neighbor(map, axes, i as isize + 1, j as isize),
        );
        let v_off = log_parabolic_offset(
            neighbor(map, axes, i as isize, j as isize - 1),
            v0,
            neighbor(map, axes, i as isize, j as isize + 1),
        );
        peaks.push(Detection {
            delay_bin: i,
            doppler_bin: j,
            value: v0,
            delay_s: axes.delay_at(i as f64),
            doppler_hz: axes.doppler_at(j as f64),
            refined_delay_s: axes.delay_at(i as f64 + d_off),
            refined_doppler_hz: axes.doppler_at(j as f64 + v_off),
            alpha: None,
        });
    }
    peaks
}

/// How truth positions are interpreted when matching detections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AssociationMode {
    /// Compare against true positions; a folded detection of an
    /// out-of-ambiguity target counts as a false alarm.
    Unambiguous,
    /// Wrap the truth into the classical ambiguity intervals first, so a
    /// detection at the folded position counts as a hit.
    Folded,
}

/// A detection paired with a target, with refined-position errors.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TargetMatch {
    pub detection_index: usize,
    pub range_error_m: f64,
    pub velocity_error_mps: f64,
}

/// Per-trial detection outcome: every detection is either matched to exactly
/// one target or counted as a false alarm.
#[derive(Clone, Debug, Serialize)]
pub struct DetectionReport {
    pub detections: Vec<Detection>,
    /// Entry k describes target k (None = miss).
    pub matches: Vec<Option<TargetMatch>>,
    pub false_alarm_count: usize,
    pub association_mode: AssociationMode,
}

impl DetectionReport {
    pub fn matched_count(&self) -> usize {
        self.matches.iter().filter(|m| m.is_some()).count()
    }
}

fn wrap_into(x: f64, lo: f64, span: f64) -> f64 {
    lo + (x - lo).rem_euclid(span)
}

fn axis_error(est: f64, truth: f64, folded: Option<f64>) -> f64 {
    match folded {
        // circular distance within the folded span, sign toward the estimate
        Some(span) => {
            let d = (est - truth).rem_euclid(span);
            if d > span / 2.0 {
                d - span
            } else {
                d
            }
        }
        None => est - truth,
    }
}

/// Greedy nearest-neighbor association with a one-resolution-cell gate per
/// axis. Detections are visited in descending statistic order; each target
/// is matched at most once; leftovers are false alarms.
pub fn associate(
    params: &OtfsParams,
    detections: &[Detection],
    targets: &TargetSet,
    mode: AssociationMode,
) -> DetectionReport {
    let limits = params.limits();
    let (range_span, velocity_span) = (2.0 * limits.r_max, 2.0 * limits.v_max);
    let truth: Vec<(f64, f64)> = targets
        .taps()
        .iter()
        .map(|tap| {
            let r = tap.range_m(params);
            let v = tap.velocity_mps(params);
            match mode {
                AssociationMode::Unambiguous => (r, v),
                AssociationMode::Folded => (
                    wrap_into(r, 0.0, range_span),
                    wrap_into(v, -limits.v_max, velocity_span),
                ),
            }
        })
        .collect();

    let folded_spans = match mode {
        AssociationMode::Unambiguous => None,
        AssociationMode::Folded => Some((range_span, velocity_span)),
    };

    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| detections[b].value.partial_cmp(&detections[a].value).unwrap());

    let mut matches: Vec<Option<TargetMatch>> = vec![None; truth.len()];
    let mut false_alarms = 0usize;
    for det_idx in order {
        let det = &detections[det_idx];
        let det_range = params.delay_to_range(det.delay_s);
        let det_velocity = params.doppler_to_velocity(det.doppler_hz);
        let mut best: Option<(usize, f64)> = None;
        for (k, &(r_k, v_k)) in truth.iter().enumerate() {
            if matches[k].is_some() {
                continue;
            }
            let dr = axis_error(det_range, r_k, folded_spans.map(|s| s.0)).abs();
            let dv = axis_error(det_velocity, v_k, folded_spans.map(|s| s.1)).abs();
            if dr <= limits.range_resolution && dv <= limits.velocity_resolution {
                let dist = (dr / limits.range_resolution).hypot(dv / limits.velocity_resolution);
                if best.is_none_or(|(_, d)| dist < d) {
                    best = Some((k, dist));
                }
            }
        }
        match best {
            Some((k, _)) => {
                let refined_range = params.delay_to_range(det.refined_delay_s);
                let refined_velocity = params.doppler_to_velocity(det.refined_doppler_hz);
                matches[k] = Some(TargetMatch {
                    detection_index: det_idx,
                    range_error_m: axis_error(
                        refined_range,
                        truth[k].0,
                        folded_spans.map(|s| s.0),
                    ),
                    velocity_error_mps: axis_error(
                        refined_velocity,
                        truth[k].1,
                        folded_spans.map(|s| s.1),
                    ),
                });
            }
            None => false_alarms += 1,
        }
    }
    DetectionReport {
        detections: detections.to_vec(),
        matches,
        false_alarm_count: false_alarms,
        association_mode: mode,
    }
}
