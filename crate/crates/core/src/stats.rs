//! Estimators and tests on coincidence counts and phase records.

use std::f64::consts::SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photonics::PhaseDrift;
use crate::qstate::{singlet_correlation, AnalyzerAngle};

/// Coincidence counts `N_ij(φ0, φ3)` for analyzer channels `i, j ∈ {+, −}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    pub phi0: AnalyzerAngle,
    pub phi3: AnalyzerAngle,
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
}

impl CountTable {
    pub fn empty(phi0: AnalyzerAngle, phi3: AnalyzerAngle) -> Self {
        CountTable {
            phi0,
            phi3,
            n_pp: 0,
            n_pm: 0,
            n_mp: 0,
            n_mm: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.n_pp + self.n_pm + self.n_mp + self.n_mm
    }

    /// Adds one coincidence; `true` means the "+" channel.
    pub fn record(&mut self, plus0: bool, plus3: bool) {
        match (plus0, plus3) {
            (true, true) => self.n_pp += 1,
            (true, false) => self.n_pm += 1,
            (false, true) => self.n_mp += 1,
            (false, false) => self.n_mm += 1,
        }
    }

    pub fn same_setting(&self, phi0: AnalyzerAngle, phi3: AnalyzerAngle) -> bool {
        same_angle(self.phi0, phi0) && same_angle(self.phi3, phi3)
    }
}

fn same_angle(a: AnalyzerAngle, b: AnalyzerAngle) -> bool {
    let d = (a.degrees() - b.degrees()).abs();
    d < 1e-9 || (180.0 - d) < 1e-9
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub e: f64,
    pub sigma_e: f64,
    /// Zero for estimates supplied from outside (no count table).
    pub total_counts: u64,
    pub phi0: AnalyzerAngle,
    pub phi3: AnalyzerAngle,
}

impl CorrelationEstimate {
    /// Estimate supplied directly, e.g. a published value.
    pub fn external(e: f64, sigma_e: f64, phi0: f64, phi3: f64) -> Self {
        CorrelationEstimate {
            e,
            sigma_e,
            total_counts: 0,
            phi0: phi0.into(),
            phi3: phi3.into(),
        }
    }
}

/// `E = (N₊₊ − N₊₋ − N₋₊ + N₋₋)/ΣN` with multinomial error `√((1 − E²)/N)`.
pub fn correlation(counts: &CountTable) -> Result<CorrelationEstimate> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::EmptyCounts);
    }
    let nf = n as f64;
    let e =
        (counts.n_pp as f64 - counts.n_pm as f64 - counts.n_mp as f64 + counts.n_mm as f64) / nf;
    Ok(CorrelationEstimate {
        e,
        sigma_e: ((1.0 - e * e).max(0.0) / nf).sqrt(),
        total_counts: n,
        phi0: counts.phi0,
        phi3: counts.phi3,
    })
}

/// Analyzer settings `(φ0′, φ0″, φ3′, φ3″)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a1: AnalyzerAngle,
    pub a2: AnalyzerAngle,
    pub b1: AnalyzerAngle,
    pub b2: AnalyzerAngle,
}

impl ChshSettings {
    pub fn new(a1: f64, a2: f64, b1: f64, b2: f64) -> Self {
        ChshSettings {
            a1: a1.into(),
            a2: a2.into(),
            b1: b1.into(),
            b2: b2.into(),
        }
    }

    /// `(0°, 45°)` for photon 0 and `(22.5°, 67.5°)` for photon 3.
    pub fn canonical() -> Self {
        ChshSettings::new(0.0, 45.0, 22.5, 67.5)
    }

    /// Setting pairs in CHSH order: (a1,b1), (a1,b2), (a2,b1), (a2,b2).
    pub fn pairs(&self) -> [(AnalyzerAngle, AnalyzerAngle); 4] {
        [
            (self.a1, self.b1),
            (self.a1, self.b2),
            (self.a2, self.b1),
            (self.a2, self.b2),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub s: f64,
    pub sigma_s: f64,
    /// `(S − 2)/σ_S`; nonpositive when there is no violation.
    pub significance: f64,
    pub settings: ChshSettings,
}

/// Bell parameter `S = |E₁ − E₂| + |E₃ + E₄|` with errors added in quadrature.
/// The estimates must be ordered as in [`ChshSettings::pairs`].
pub fn chsh(estimates: &[CorrelationEstimate; 4]) -> Result<ChshResult> {
    let [e1, e2, e3, e4] = estimates;
    let settings = ChshSettings {
        a1: e1.phi0,
        a2: e3.phi0,
        b1: e1.phi3,
        b2: e2.phi3,
    };
    for (est, (a, b)) in estimates.iter().zip(settings.pairs()) {
        if !(same_angle(est.phi0, a) && same_angle(est.phi3, b)) {
            return Err(Error::SettingsMismatch(format!(
                "estimate at ({}°, {}°) where ({}°, {}°) was expected",
                est.phi0.degrees(),
                est.phi3.degrees(),
                a.degrees(),
                b.degrees()
            )));
        }
    }
    if same_angle(settings.a1, settings.a2) || same_angle(settings.b1, settings.b2) {
        return Err(Error::SettingsMismatch(
            "each side needs two distinct settings".into(),
        ));
    }
    let s = (e1.e - e2.e).abs() + (e3.e + e4.e).abs();
    let sigma_s = estimates
        .iter()
        .map(|e| e.sigma_e * e.sigma_e)
        .sum::<f64>()
        .sqrt();
    let excess = s - 2.0;
    let significance = if sigma_s > 0.0 {
        excess / sigma_s
    } else if excess > 0.0 {
        f64::INFINITY
    } else if excess < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    };
    Ok(ChshResult {
        s,
        sigma_s,
        significance,
        settings,
    })
}

/// Picks the four tables matching `settings` and evaluates CHSH.
pub fn chsh_from_tables(tables: &[CountTable], settings: ChshSettings) -> Result<ChshResult> {
    let mut ests = Vec::with_capacity(4);
    for (a, b) in settings.pairs() {
        let t = tables
            .iter()
            .find(|t| t.same_setting(a, b))
            .ok_or_else(|| {
                Error::SettingsMismatch(format!(
                    "no counts for setting ({}°, {}°)",
                    a.degrees(),
                    b.degrees()
                ))
            })?;
        ests.push(correlation(t)?);
    }
    chsh(&[ests[0], ests[1], ests[2], ests[3]])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub f: f64,
    pub sigma_f: f64,
}

/// Inverts `E_exp = (4F − 1)/3 · E_QM` at the estimate's settings.
pub fn fidelity_from_correlation(est: &CorrelationEstimate) -> Result<FidelityEstimate> {
    let e_qm = singlet_correlation(est.phi0, est.phi3);
    if e_qm.abs() < 1e-9 {
        return Err(Error::UndefinedInversion {
            phi0: est.phi0.degrees(),
            phi3: est.phi3.degrees(),
        });
    }
    Ok(FidelityEstimate {
        f: (3.0 * est.e / e_qm + 1.0) / 4.0,
        sigma_f: 0.75 * est.sigma_e / e_qm.abs(),
    })
}

/// CHSH value of a Werner state with singlet fidelity `f` at optimal settings.
pub fn werner_chsh(f: f64) -> f64 {
    (4.0 * f - 1.0) / 3.0 * 2.0 * SQRT_2
}

/// Smallest Werner fidelity whose optimal CHSH value exceeds 2:
/// `(3/√2 + 1)/4 ≈ 0.7803`.
pub fn violation_threshold() -> f64 {
    (3.0 / SQRT_2 + 1.0) / 4.0
}

/// Deterministic local strategy: outcome (±1) for each of the two settings
/// on each side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LhvStrategy {
    pub alice: [i8; 2],
    pub bob: [i8; 2],
}

impl LhvStrategy {
    pub fn all() -> impl Iterator<Item = LhvStrategy> {
        (0u8..16).map(|bits| {
            let pm = |b: u8| if bits >> b & 1 == 0 { 1 } else { -1 };
            LhvStrategy {
                alice: [pm(0), pm(1)],
                bob: [pm(2), pm(3)],
            }
        })
    }

    /// Correlations in [`ChshSettings::pairs`] order.
    pub fn correlations(&self) -> [f64; 4] {
        let [a1, a2] = self.alice.map(f64::from);
        let [b1, b2] = self.bob.map(f64::from);
        [a1 * b1, a1 * b2, a2 * b1, a2 * b2]
    }

    pub fn s(&self) -> f64 {
        let [c1, c2, c3, c4] = self.correlations();
        (c1 - c2).abs() + (c3 + c4).abs()
    }
}

/// Maximum CHSH value over all 16 deterministic local strategies. The
/// settings only label the inputs; the bound does not depend on them.
pub fn lhv_bound(_settings: &ChshSettings) -> f64 {
    LhvStrategy::all()
        .map(|s| s.s())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Local hidden-variable event stream: each event draws a shared
/// polarization angle λ uniform on [0°, 180°); photon 0 answers "+" iff its
/// analyzer lies within 45° of λ, photon 3 answers the opposite.
pub fn simulate_lhv(
    settings: &ChshSettings,
    events_per_setting: u64,
    rng: &mut impl Rng,
) -> Vec<CountTable> {
    let outcome = |phi: AnalyzerAngle, lambda: f64| (2.0 * (phi.radians() - lambda)).cos() >= 0.0;
    settings
        .pairs()
        .iter()
        .map(|&(a, b)| {
            let mut t = CountTable::empty(a, b);
            for _ in 0..events_per_setting {
                let lambda = rng.random::<f64>() * std::f64::consts::PI;
                t.record(outcome(a, lambda), !outcome(b, lambda));
            }
            t
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllanSeries {
    pub taus: Vec<f64>,
    pub avar: Vec<f64>,
    pub adev: Vec<f64>,
}

/// Non-overlapping two-sample Allan variance of the phase record:
/// `σ²(τ) = ½ ⟨(ȳ_{k+1} − ȳ_k)²⟩` over consecutive τ-averages.
///
/// Each τ must be an integer multiple of the sample interval and leave at
/// least three averaging bins.
pub fn allan_variance(drift: &PhaseDrift, taus: &[f64]) -> Result<AllanSeries> {
    if taus.is_empty() {
        return Err(Error::Config("no averaging times given".into()));
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "averaging times must be strictly increasing".into(),
        ));
    }
    let dt = drift.sample_interval;
    let n = drift.samples.len();
    let mut avar = Vec::with_capacity(taus.len());
    for &tau in taus {
        let m = (tau / dt).round();
        if m < 1.0 || (m * dt - tau).abs() > 1e-9 * tau.max(dt) {
            return Err(Error::Config(format!(
                "tau {tau} s is not a positive multiple of the {dt} s sample interval"
            )));
        }
        let m = m as usize;
        let bins = n / m;
        if bins < 3 {
            return Err(Error::InsufficientData(format!(
                "tau {tau} s leaves {bins} averaging bins (need 3)"
            )));
        }
        let means: Vec<f64> = drift.samples[..bins * m]
            .chunks_exact(m)
            .map(|c| c.iter().sum::<f64>() / m as f64)
            .collect();
        let sum: f64 = means.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        avar.push(0.5 * sum / (bins - 1) as f64);
    }
    Ok(AllanSeries {
        taus: taus.to_vec(),
        adev: avar.iter().map(|v| v.sqrt()).collect(),
        avar,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
