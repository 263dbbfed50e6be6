use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode index {0}: modes are 0..=3")]
    InvalidMode(usize),
    #[error("duplicate mode {0}")]
    DuplicateMode(usize),
    #[error("mode sets overlap on mode {0}")]
    OverlappingModes(usize),
    #[error("mode {0} is not part of this state")]
    MissingMode(usize),
    #[error("expected a {expected}-photon state, got {got}")]
    PhotonCount { expected: usize, got: usize },
    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("count table is empty")]
    EmptyCounts,
    #[error("settings do not form a CHSH layout: {0}")]
    SettingsMismatch(String),
    #[error("correlation prediction vanishes at ({phi0}°, {phi3}°); fidelity inversion undefined")]
    UndefinedInversion { phi0: f64, phi3: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("record for pulse {0} has no classical message")]
    UnmatchedRecord(u64),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
