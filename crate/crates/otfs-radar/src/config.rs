//! File-based configuration: parameter presets and scenario descriptions.
//!
//! Both file kinds are JSON. A parameter file pins the numerology:
//!
//! ```json
//! {
//!   "carrier_hz": 60e9,
//!   "subcarrier_spacing_hz": 781250.0,
//!   "n_subcarriers": 64,
//!   "n_symbols": 64,
//!   "cp_duration_s": 7.68e-6,
//!   "noise_variance": 1.0
//! }
//! ```
//!
//! A scenario file references a preset (or embeds parameters) and lists
//! targets; each target gives exactly one of `range_m`/`delay_s`, one of
//! `velocity_mps`/`doppler_hz`, and one of `snr_db`/`gain_complex`.
//! Parsers reject unknown fields so typos surface as errors instead of
//! silently becoming defaults.

use crate::cfar::CfarConfig;
use crate::experiments::{RmseAxis, Scenario, ScenarioTarget};
use crate::params::OtfsParams;
use crate::{Error, Result};
use serde::Deserialize;
use std::path::Path;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub carrier_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    pub cp_duration_s: f64,
    pub noise_variance: f64,
}

impl ParamsFile {
    pub fn into_params(self) -> Result<OtfsParams> {
        OtfsParams::new(
            self.n_subcarriers,
            self.n_symbols,
            self.subcarrier_spacing_hz,
            self.cp_duration_s,
            self.carrier_hz,
            self.noise_variance,
        )
    }
}

/// Parses a parameter file from raw JSON bytes.
pub fn parse_params_json(bytes: &[u8]) -> Result<OtfsParams> {
    let file: ParamsFile = serde_json::from_slice(bytes)?;
    file.into_params()
}

/// Resolves a parameter spec: a named preset (`isi-regime`, `ici-regime`) or
/// a path to a JSON file.
pub fn load_params(spec: &str) -> Result<OtfsParams> {
    match spec.to_ascii_lowercase().as_str() {
        "isi-regime" | "isi" => Ok(OtfsParams::isi_regime()),
        "ici-regime" | "ici" => Ok(OtfsParams::ici_regime()),
        _ => {
            let bytes = std::fs::read(Path::new(spec))
                .map_err(|e| Error::Config(format!("cannot read params file `{spec}`: {e}")))?;
            parse_params_json(&bytes)
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub range_m: Option<f64>,
    pub delay_s: Option<f64>,
    pub velocity_mps: Option<f64>,
    pub doppler_hz: Option<f64>,
    pub snr_db: Option<f64>,
    /// `[re, im]`
    pub gain_complex: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfarFile {
    pub p_fa: Option<f64>,
    pub guard: Option<[usize; 2]>,
    pub training: Option<[usize; 2]>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub os_tau: Option<usize>,
    pub os_nu: Option<usize>,
    pub tau_search_max_s: Option<f64>,
    pub nu_search_span_hz: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: Option<String>,
    pub preset: Option<String>,
    pub params: Option<ParamsFile>,
    pub targets: Vec<TargetEntry>,
    pub reference_index: Option<usize>,
    pub cfar: Option<CfarFile>,
    pub grid: Option<GridFile>,
    /// "range" or "velocity"
    pub rmse_axis: Option<String>,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let params = match (self.preset, self.params) {
            (Some(p), None) => load_params(&p)?,
            (None, Some(f)) => f.into_params()?,
            (None, None) => {
                return Err(Error::invalid(
                    "preset",
                    "scenario needs `preset` or `params`",
                ))
            }
            (Some(_), Some(_)) => {
                return Err(Error::invalid(
                    "preset",
                    "give `preset` or `params`, not both",
                ))
            }
        };

        let mut targets = Vec::with_capacity(self.targets.len());
        for entry in self.targets {
            let range_m = match (entry.range_m, entry.delay_s) {
                (Some(r), None) => r,
                (None, Some(tau)) => params.delay_to_range(tau),
                (None, None) => {
                    return Err(Error::invalid("range_m/delay_s", "one form is required"))
                }
                _ => return Err(Error::invalid("range_m/delay_s", "both given, pick one")),
            };
            let velocity_mps = match (entry.velocity_mps, entry.doppler_hz) {
                (Some(v), None) => v,
                (None, Some(nu)) => params.doppler_to_velocity(nu),
                (None, None) => {
                    return Err(Error::invalid(
                        "velocity_mps/doppler_hz",
                        "one form is required",
                    ))
                }
                _ => {
                    return Err(Error::invalid(
                        "velocity_mps/doppler_hz",
                        "both given, pick one",
                    ))
                }
            };
            let (snr_db, fixed_gain) = match (entry.snr_db, entry.gain_complex) {
                (Some(snr), None) => (snr, None),
                (None, Some([re, im])) => {
                    let power = re * re + im * im;
                    let snr = 10.0 * (power / params.noise_variance()).log10();
                    (snr, Some((re, im)))
                }
                (None, None) => {
                    return Err(Error::invalid(
                        "snr_db/gain_complex",
                        "one form is required",
                    ))
                }
                _ => {
                    return Err(Error::invalid(
                        "snr_db/gain_complex",
                        "both given, pick one",
                    ))
                }
            };
            targets.push(ScenarioTarget {
                range_m,
                velocity_mps,
                snr_db,
                fixed_gain,
            });
        }

        let cfar_file = self.cfar.unwrap_or_default();
        let defaults = CfarConfig::default();
        let cfar = CfarConfig {
            p_fa: cfar_file.p_fa.unwrap_or(defaults.p_fa),
            guard: cfar_file.guard.map_or(defaults.guard, |g| (g[0], g[1])),
            training: cfar_file
                .training
                .map_or(defaults.training, |t| (t[0], t[1])),
        };
        let grid = self.grid.unwrap_or_default();
        let rmse_axis = match self.rmse_axis.as_deref() {
            None | Some("range") => RmseAxis::Range,
            Some("velocity") => RmseAxis::Velocity,
            Some(other) => {
                return Err(Error::invalid(
                    "rmse_axis",
                    format!("`{other}` is not `range` or `velocity`"),
                ))
            }
        };

        let reference_index = self
            .reference_index
            .unwrap_or(usize::from(targets.len() >= 2));
        let scenario = Scenario {
            name: self.name.unwrap_or_else(|| "scenario".into()),
            params,
            targets,
            reference_index,
            cfar,
            tau_search_max: grid.tau_search_max_s,
            nu_search_span: grid.nu_search_span_hz,
            os_tau: grid.os_tau.unwrap_or(4),
            os_nu: grid.os_nu.unwrap_or(4),
            rmse_axis,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Parses a scenario from raw JSON bytes.
pub fn parse_scenario_json(bytes: &[u8]) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_slice(bytes)?;
    file.into_scenario()
}

/// Resolves a scenario spec: a scripted name (`isi-a`, `isi-b`, `ici-a`,
/// `ici-b`) or a path to a JSON file.
pub fn load_scenario(spec: &str) -> Result<Scenario> {
    if let Some(s) = crate::experiments::builtin_scenario(spec) {
        return Ok(s);
    }
    let bytes = std::fs::read(Path::new(spec))
        .map_err(|e| Error::Config(format!("cannot read scenario file `{spec}`: {e}")))?;
    parse_scenario_json(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ISI_JSON: &str = r#"{
        "carrier_hz": 60e9,
        "subcarrier_spacing_hz": 781250.0,
        "n_subcarriers": 64,
        "n_symbols": 64,
        "cp_duration_s": 7.68e-6,
        "noise_variance": 1.0
    }"#;

    #[test]
    fn params_roundtrip_matches_the_preset() {
        let parsed = parse_params_json(ISI_JSON.as_bytes()).unwrap();
        assert_eq!(parsed, OtfsParams::isi_regime());
    }

    #[test]
    fn preset_names_resolve_without_files() {
        assert_eq!(load_params("isi-regime").unwrap(), OtfsParams::isi_regime());
        assert_eq!(load_params("ICI-REGIME").unwrap(), OtfsParams::ici_regime());
        assert!(load_params("/no/such/file.json").is_err());
    }

    #[test]
    fn invalid_params_files_are_rejected_with_field_names() {
        let bad = br#"{"carrier_hz": 0.0, "subcarrier_spacing_hz": 1.0,
            "n_subcarriers": 4, "n_symbols": 4, "cp_duration_s": 0.0,
            "noise_variance": 1.0}"#;
        let err = parse_params_json(bad).unwrap_err();
        assert!(err.to_string().contains("carrier_hz"), "{err}");

        let unknown = br#"{"carrier_hz": 1.0, "subcarrier_spacing_hz": 1.0,
            "n_subcarriers": 4, "n_symbols": 4, "cp_duration_s": 0.0,
            "noise_variance": 1.0, "sample_rate": 8}"#;
        assert!(parse_params_json(unknown).is_err());
        assert!(parse_params_json(b"not json").is_err());
        assert!(parse_params_json(b"").is_err());
    }

    #[test]
    fn scenario_with_alternative_target_forms() {
        let json = br#"{
            "preset": "isi-regime",
            "targets": [
                {"range_m": 50.0, "velocity_mps": 20.0, "snr_db": 25.0},
                {"delay_s": 8.0e-7, "doppler_hz": 8000.0, "gain_complex": [3.0, -4.0]}
            ],
            "cfar": {"p_fa": 1e-3},
            "grid": {"os_tau": 2},
            "rmse_axis": "range"
        }"#;
        let scenario = parse_scenario_json(json).unwrap();
        assert_eq!(scenario.targets.len(), 2);
        assert_eq!(scenario.reference_index, 1);
        assert_eq!(scenario.cfar.p_fa, 1e-3);
        assert_eq!(scenario.os_tau, 2);
        assert_eq!(scenario.os_nu, 4);
        // delay_s converts through τ = 2R/c
        let r = scenario.targets[1].range_m;
        assert!((r - scenario.params.delay_to_range(8.0e-7)).abs() < 1e-9);
        // gain_complex pins the gain and implies its SNR
        let t = &scenario.targets[1];
        assert_eq!(t.fixed_gain, Some((3.0, -4.0)));
        assert!((t.snr_db - 10.0 * 25.0f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn scenario_rejects_ambiguous_or_missing_forms() {
        let both = br#"{"preset": "isi-regime", "targets": [
            {"range_m": 1.0, "delay_s": 1e-9, "velocity_mps": 0.0, "snr_db": 0.0}]}"#;
        assert!(parse_scenario_json(both).is_err());
        let neither = br#"{"preset": "isi-regime", "targets": [
            {"velocity_mps": 0.0, "snr_db": 0.0}]}"#;
        assert!(parse_scenario_json(neither).is_err());
        let no_params = br#"{"targets": []}"#;
        assert!(parse_scenario_json(no_params).is_err());
        let bad_axis = br#"{"preset": "isi-regime", "targets": [], "rmse_axis": "angle"}"#;
        assert!(parse_scenario_json(bad_axis).is_err());
        // delay beyond the CP is caught at scenario validation
        let too_far = br#"{"preset": "isi-regime", "targets": [
            {"range_m": 9000.0, "velocity_mps": 0.0, "snr_db": 0.0}]}"#;
        assert!(parse_scenario_json(too_far).is_err());
    }

    #[test]
    fn builtin_names_take_precedence_in_load_scenario() {
        let s = load_scenario("ici-a").unwrap();
        assert_eq!(s.name, "ici-a");
        assert_eq!(s.targets.len(), 4);
    }

    #[test]
    fn empty_target_list_is_a_valid_h0_scenario() {
        let json = br#"{"preset": "isi-regime", "targets": []}"#;
        let scenario = parse_scenario_json(json).unwrap();
        assert!(scenario.targets.is_empty());
    }
}
