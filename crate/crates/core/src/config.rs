//! Run configuration file and the built-in presets.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::photonics::{indistinguishability, ModeOverlap, SourceConfig, SourceVisibility};
use crate::pipeline::{calibrate_pair_prob, Experiment, Geometry, ScheduleEntry, DEFAULT_WINDOW};
use crate::stats::ChshSettings;

pub const CONFIG_VERSION: u32 = 1;

/// Reported fourfold rate of the reference experiment, per second.
pub const PAPER_FOURFOLD_RATE: f64 = 0.0065;
/// Duration of one correlation measurement in the reference experiment.
pub const PAPER_DURATION_S: f64 = 16_000.0;
/// Fidelity attributed to the Bell-state analysis itself.
pub const PAPER_BSA_FIDELITY: f64 = 0.92;
/// Diagonal-basis source visibility that puts the 45° fidelity at ≈0.84.
pub const PAPER_DIAGONAL_VISIBILITY: f64 = 0.94;
/// Extra delay of Alice's detections in the delayed-choice run.
pub const DELAYED_CHOICE_DELAY_S: f64 = 50e-9;
/// Same-mode double pairs per source as a multiple of `pair_prob²`; both
/// sources together then match the cross-source four-photon probability.
pub const PAPER_DOUBLE_RATIO: f64 = 0.5;

/// Overlap `v` that gives an accepted-state fidelity `f` from an ideal
/// source: `f = (3v + 1)/4`.
pub fn overlap_for_bsa_fidelity(f: f64) -> f64 {
    (4.0 * f - 1.0) / 3.0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_shards() -> usize {
    1
}

fn default_window() -> f64 {
    DEFAULT_WINDOW
}

/// Versioned JSON run configuration. Angles are in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    pub source: SourceConfig,
    /// Two-photon overlap at the analyzer; exclusive with `delay`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap_v: Option<f64>,
    /// Relative arrival delay of photons 1 and 2 in seconds; exclusive with
    /// `overlap_v`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<f64>,
    #[serde(default)]
    pub geometry: Geometry,
    pub schedule: Vec<ScheduleEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_fidelity: Option<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_shards")]
    pub shards: usize,
    #[serde(default = "default_window")]
    pub coincidence_window: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Ideal,
    Paper,
    Delayed,
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(Preset::Ideal),
            "paper" => Ok(Preset::Paper),
            "delayed" => Ok(Preset::Delayed),
            other => Err(Error::Config(format!("unknown preset '{other}'"))),
        }
    }
}

fn canonical_schedule(duration_s: f64) -> Vec<ScheduleEntry> {
    ChshSettings::canonical()
        .pairs()
        .iter()
        .map(|(a, b)| ScheduleEntry::new(a.degrees(), b.degrees(), duration_s))
        .collect()
}

impl RunConfig {
    pub fn preset(preset: Preset, seed: u64) -> Result<Self> {
        match preset {
            Preset::Ideal => Ok(RunConfig {
                version: CONFIG_VERSION,
                seed,
                source: SourceConfig {
                    pair_prob: 1.0,
                    double_pair_prob: 0.0,
                    detector_efficiency: 1.0,
                    ..SourceConfig::default()
                },
                overlap_v: Some(1.0),
                delay: None,
                geometry: Geometry::default(),
                // 76 000 pulses, ≈19 000 fourfolds per setting
                schedule: canonical_schedule(1e-3),
                noise_fidelity: None,
                output_dir: default_output_dir(),
                shards: 1,
                coincidence_window: DEFAULT_WINDOW,
            }),
            Preset::Paper => {
                let v = overlap_for_bsa_fidelity(PAPER_BSA_FIDELITY);
                let mut source = SourceConfig {
                    visibility: SourceVisibility {
                        hv: 1.0,
                        diagonal: PAPER_DIAGONAL_VISIBILITY,
                    },
                    ..SourceConfig::default()
                };
                let p =
                    calibrate_pair_prob(&source, 0.25, PAPER_FOURFOLD_RATE, PAPER_DOUBLE_RATIO)?;
                source.pair_prob = p;
                source.double_pair_prob = PAPER_DOUBLE_RATIO * p * p;
                Ok(RunConfig {
                    version: CONFIG_VERSION,
                    seed,
                    source,
                    overlap_v: Some(v),
                    delay: None,
                    geometry: Geometry::default(),
                    schedule: canonical_schedule(PAPER_DURATION_S),
                    noise_fidelity: None,
                    output_dir: default_output_dir(),
                    shards: 1,
                    coincidence_window: DEFAULT_WINDOW,
                })
            }
            Preset::Delayed => {
                let mut cfg = RunConfig::preset(Preset::Paper, seed)?;
                cfg.geometry.alice_delay = DELAYED_CHOICE_DELAY_S;
                Ok(cfg)
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.overlap_v.is_some() == self.delay.is_some() {
            return Err(Error::Config(
                "exactly one of overlap_v and delay must be set".into(),
            ));
        }
        if self.coincidence_window < self.geometry.detector_resolution {
            return Err(Error::Config(
                "coincidence_window is shorter than the detector resolution".into(),
            ));
        }
        self.overlap()?;
        self.to_experiment_unchecked()?.validate()
    }

    pub fn overlap(&self) -> Result<ModeOverlap> {
        match (self.overlap_v, self.delay) {
            (Some(v), None) => ModeOverlap::new(v),
            (None, Some(d)) => indistinguishability(d, self.source.coherence_time),
            _ => Err(Error::Config(
                "exactly one of overlap_v and delay must be set".into(),
            )),
        }
    }

    fn to_experiment_unchecked(&self) -> Result<Experiment> {
        Ok(Experiment {
            source: self.source.clone(),
            overlap: self.overlap()?,
            noise_fidelity: self.noise_fidelity,
            geometry: self.geometry,
            schedule: self.schedule.clone(),
            seed: self.seed,
            shards: self.shards,
        })
    }

    pub fn to_experiment(&self) -> Result<Experiment> {
        self.validate()?;
        self.to_experiment_unchecked()
    }

    /// SHA-256 (hex, first 16 digits) of every field that can influence the
    /// simulated counts. Geometry and the output directory only move
    /// timestamps or files, so they are left out.
    pub fn statistics_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("geometry");
            map.remove("output_dir");
        }
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
