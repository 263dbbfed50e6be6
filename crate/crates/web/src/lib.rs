//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string; errors become a JS exception whose
//! message is the library's error text.

use serde::Serialize;
use swapsim::config::{Preset, RunConfig};
use swapsim::photonics::{random_walk_phase, ONE_WAVELENGTH_PER_400S};
use swapsim::pipeline::{count_tables, postselect_fourfold, run_experiment, ScheduleEntry};
use swapsim::qstate::{correlation_qm, AnalyzerAngle};
use swapsim::rng::{substream, Stream};
use swapsim::stats::{
    allan_variance, chsh_from_tables, correlation, fidelity_from_correlation, loglog_slope,
    violation_threshold, ChshSettings, CorrelationEstimate,
};
use wasm_bindgen::prelude::*;

fn paper_config(overlap_v: f64, diagonal_visibility: f64, seed: u64) -> swapsim::Result<RunConfig> {
    let mut cfg = RunConfig::preset(Preset::Paper, seed)?;
    cfg.overlap_v = Some(overlap_v);
    cfg.source.visibility.diagonal = diagonal_visibility;
    cfg.validate()?;
    Ok(cfg)
}

fn to_js<T: Serialize>(r: swapsim::Result<T>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[derive(Serialize)]
pub struct Prediction {
    pub s: f64,
    pub threshold_fidelity: f64,
    pub acceptance: f64,
    pub angles_deg: Vec<f64>,
    pub fidelity: Vec<f64>,
}

pub fn prediction(overlap_v: f64, diagonal_visibility: f64) -> swapsim::Result<Prediction> {
    let exp = paper_config(overlap_v, diagonal_visibility, 0)?.to_experiment()?;
    let (acceptance, post) = exp.cross_pair_channel()?;
    let rho = post.ok_or_else(|| swapsim::Error::InsufficientData("no accepted events".into()))?;
    let e = |a: AnalyzerAngle, b: AnalyzerAngle| correlation_qm(&rho, a, b);
    let [p1, p2, p3, p4] = ChshSettings::canonical().pairs();
    let s = (e(p1.0, p1.1)? - e(p2.0, p2.1)?).abs() + (e(p3.0, p3.1)? + e(p4.0, p4.1)?).abs();
    let angles_deg: Vec<f64> = (0..=36).map(|k| 5.0 * k as f64).collect();
    let fidelity = angles_deg
        .iter()
        .map(|&a| {
            let est = CorrelationEstimate::external(e(a.into(), a.into())?, 0.0, a, a);
            Ok(fidelity_from_correlation(&est)?.f)
        })
        .collect::<swapsim::Result<_>>()?;
    Ok(Prediction {
        s,
        threshold_fidelity: violation_threshold(),
        acceptance,
        angles_deg,
        fidelity,
    })
}

/// Exact CHSH value and equal-angle fidelity curve of the swapped state.
#[wasm_bindgen(js_name = predict)]
pub fn predict_js(overlap_v: f64, diagonal_visibility: f64) -> Result<String, JsError> {
    to_js(prediction(overlap_v, diagonal_visibility))
}

#[derive(Serialize)]
pub struct SettingResult {
    pub phi0_deg: f64,
    pub phi3_deg: f64,
    pub counts: [u64; 4],
    pub e: f64,
    pub sigma_e: f64,
}

#[derive(Serialize)]
pub struct RunResult {
    pub fourfolds: usize,
    pub settings: Vec<SettingResult>,
    pub s: f64,
    pub sigma_s: f64,
    pub significance: f64,
}

pub fn run(
    overlap_v: f64,
    diagonal_visibility: f64,
    seconds: f64,
    seed: u64,
) -> swapsim::Result<RunResult> {
    let mut cfg = paper_config(overlap_v, diagonal_visibility, seed)?;
    for e in &mut cfg.schedule {
        e.duration_s = seconds;
    }
    let log = run_experiment(&cfg.to_experiment()?)?;
    let records = postselect_fourfold(&log, cfg.coincidence_window)?;
    let pairs: Vec<_> = cfg.schedule.iter().map(ScheduleEntry::setting).collect();
    let tables = count_tables(&records, &pairs);
    let settings = tables
        .iter()
        .map(|t| {
            let est = correlation(t)?;
            Ok(SettingResult {
                phi0_deg: t.phi0.degrees(),
                phi3_deg: t.phi3.degrees(),
                counts: [t.n_pp, t.n_pm, t.n_mp, t.n_mm],
                e: est.e,
                sigma_e: est.sigma_e,
            })
        })
        .collect::<swapsim::Result<_>>()?;
    let chsh = chsh_from_tables(&tables, ChshSettings::canonical())?;
    Ok(RunResult {
        fourfolds: records.len(),
        settings,
        s: chsh.s,
        sigma_s: chsh.sigma_s,
        significance: chsh.significance,
    })
}

/// Monte Carlo run of the four CHSH settings, `seconds` each.
#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(
    overlap_v: f64,
    diagonal_visibility: f64,
    seconds: f64,
    seed: u32,
) -> Result<String, JsError> {
    to_js(run(overlap_v, diagonal_visibility, seconds, seed as u64))
}

#[derive(Serialize)]
pub struct AllanCurve {
    pub taus_s: Vec<f64>,
    pub adev_wavelengths: Vec<f64>,
    pub slope: f64,
}

/// Allan deviation of a pump-phase random walk, averaged over realizations.
/// `wavelengths_per_400s` scales the default one-wavelength-in-400 s walk.
pub fn allan_curve(
    wavelengths_per_400s: f64,
    duration_s: f64,
    realizations: u32,
    seed: u64,
) -> swapsim::Result<AllanCurve> {
    let sigma = wavelengths_per_400s * ONE_WAVELENGTH_PER_400S;
    let taus: Vec<f64> = [
        1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0,
    ]
    .into_iter()
    .filter(|t| 3.0 * t <= duration_s)
    .collect();
    let n = realizations.max(1);
    let mut avar = vec![0.0; taus.len()];
    for r in 0..n {
        let mut rng = substream(seed, Stream::Phase, r as u64);
        let drift = random_walk_phase(sigma, 1.0, duration_s, &mut rng)?;
        for (acc, v) in avar.iter_mut().zip(allan_variance(&drift, &taus)?.avar) {
            *acc += v / n as f64;
        }
    }
    let adev: Vec<f64> = avar
        .iter()
        .map(|v| v.sqrt() / (2.0 * std::f64::consts::PI))
        .collect();
    let slope = if adev.iter().all(|a| *a > 0.0) {
        loglog_slope(&taus, &adev)
    } else {
        0.0
    };
    Ok(AllanCurve {
        taus_s: taus,
        adev_wavelengths: adev,
        slope,
    })
}

#[wasm_bindgen(js_name = allan)]
pub fn allan_js(
    wavelengths_per_400s: f64,
    duration_s: f64,
    realizations: u32,
    seed: u32,
) -> Result<String, JsError> {
    to_js(allan_curve(
        wavelengths_per_400s,
        duration_s,
        realizations,
        seed as u64,
    ))
}
