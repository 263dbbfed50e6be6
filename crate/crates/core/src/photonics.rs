//! Stochastic physical layer: pulsed pair sources, detectors, the
//! beam-splitter Bell-state analyzer and pump-phase drift.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{make_bell, BellLabel, DensityOp};

/// Random-walk strength giving a 1σ drift of one wavelength (2π) after 400 s.
pub const ONE_WAVELENGTH_PER_400S: f64 = 2.0 * PI / 20.0;

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            lo: 0.0,
            hi: 1.0,
        })
    }
}

/// Two-parameter source imperfection: correlation visibility in the H/V
/// basis and in the diagonal (±45°) basis. `(1, 1)` is a perfect singlet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceVisibility {
    pub hv: f64,
    pub diagonal: f64,
}

impl Default for SourceVisibility {
    fn default() -> Self {
        SourceVisibility {
            hv: 1.0,
            diagonal: 1.0,
        }
    }
}

impl SourceVisibility {
    pub fn validate(&self) -> Result<()> {
        check_unit("visibility.hv", self.hv)?;
        check_unit("visibility.diagonal", self.diagonal)?;
        if self.diagonal > (1.0 + self.hv) / 2.0 + 1e-12 {
            return Err(Error::Config(format!(
                "diagonal visibility {} exceeds (1 + hv)/2 = {}; state would not be positive",
                self.diagonal,
                (1.0 + self.hv) / 2.0
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Pump pulses per second.
    pub rep_rate: f64,
    /// Probability of exactly one pair per source per pulse.
    pub pair_prob: f64,
    /// Probability of two pairs in the same modes per source per pulse.
    pub double_pair_prob: f64,
    pub detector_efficiency: f64,
    /// Seconds; set by the narrowest spectral filter.
    pub coherence_time: f64,
    /// Pump pulse width in seconds.
    pub pulse_width: f64,
    #[serde(default)]
    pub visibility: SourceVisibility,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            rep_rate: 76e6,
            pair_prob: 1e-4,
            double_pair_prob: 0.5e-8,
            detector_efficiency: 0.40,
            // λ²/(cΔλ) for 788 nm photons behind a 1 nm filter
            coherence_time: 2.07e-12,
            pulse_width: 200e-15,
            visibility: SourceVisibility::default(),
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rep_rate > 0.0 && self.rep_rate.is_finite()) {
            return Err(Error::Config(format!(
                "rep_rate must be positive, got {}",
                self.rep_rate
            )));
        }
        check_unit("pair_prob", self.pair_prob)?;
        check_unit("double_pair_prob", self.double_pair_prob)?;
        check_unit("detector_efficiency", self.detector_efficiency)?;
        if self.double_pair_prob > self.pair_prob {
            return Err(Error::Config("double_pair_prob exceeds pair_prob".into()));
        }
        if self.pair_prob + self.double_pair_prob > 1.0 {
            return Err(Error::Config(
                "pair_prob + double_pair_prob exceeds 1".into(),
            ));
        }
        if !(self.coherence_time > 0.0) {
            return Err(Error::Config("coherence_time must be positive".into()));
        }
        if !(self.pulse_width >= 0.0) {
            return Err(Error::Config("pulse_width must be nonnegative".into()));
        }
        self.visibility.validate()
    }

    /// Pair state emitted by `source` (Bell-diagonal around the singlet).
    pub fn source_state(&self, source: Source) -> Result<DensityOp> {
        let (a, b) = source.modes();
        let v = self.visibility;
        DensityOp::bell_diagonal(a, b, [-v.diagonal, -v.diagonal, -v.hv])
    }

    /// Joint four-photon state when both sources emit one pair.
    pub fn product_state(&self) -> Result<DensityOp> {
        self.source_state(Source::I)?
            .tensor(&self.source_state(Source::II)?)
    }

    pub fn pulse_period(&self) -> f64 {
        1.0 / self.rep_rate
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    I,
    II,
}

impl Source {
    /// Modes filled by this source: I → (0, 1), II → (2, 3).
    pub fn modes(self) -> (usize, usize) {
        match self {
            Source::I => (0, 1),
            Source::II => (2, 3),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairKind {
    SinglePair,
    DoublePairSameModes,
}

/// Identifier of one emission, packed as `pulse · 4 + source · 2 + kind`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Provenance(pub u64);

impl Provenance {
    pub fn new(pulse_index: u64, source: Source, kind: PairKind) -> Self {
        let s = match source {
            Source::I => 0,
            Source::II => 2,
        };
        let k = match kind {
            PairKind::SinglePair => 0,
            PairKind::DoublePairSameModes => 1,
        };
        Provenance(pulse_index * 4 + s + k)
    }

    pub fn pulse_index(self) -> u64 {
        self.0 / 4
    }

    pub fn source(self) -> Source {
        if self.0 & 2 == 0 {
            Source::I
        } else {
            Source::II
        }
    }

    pub fn kind(self) -> PairKind {
        if self.0 & 1 == 0 {
            PairKind::SinglePair
        } else {
            PairKind::DoublePairSameModes
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmissionEvent {
    pub pulse_index: u64,
    pub source: Source,
    pub kind: PairKind,
}

impl EmissionEvent {
    pub fn provenance(&self) -> Provenance {
        Provenance::new(self.pulse_index, self.source, self.kind)
    }

    pub fn num_pairs(&self) -> usize {
        match self.kind {
            PairKind::SinglePair => 1,
            PairKind::DoublePairSameModes => 2,
        }
    }
}

fn draw_kind(config: &SourceConfig, rng: &mut impl Rng) -> Option<PairKind> {
    let u: f64 = rng.random();
    if u < config.pair_prob {
        Some(PairKind::SinglePair)
    } else if u < config.pair_prob + config.double_pair_prob {
        Some(PairKind::DoublePairSameModes)
    } else {
        None
    }
}

/// Independent emission draws for both sources on one pulse. When both
/// sources emit one pair, the joint state is the product of the two pair
/// states ([`SourceConfig::product_state`]).
pub fn emit(config: &SourceConfig, pulse_index: u64, rng: &mut impl Rng) -> Vec<EmissionEvent> {
    [Source::I, Source::II]
        .into_iter()
        .filter_map(|source| {
            draw_kind(config, rng).map(|kind| EmissionEvent {
                pulse_index,
                source,
                kind,
            })
        })
        .collect()
}

/// Pairs emitted by source I and source II on one pulse (0, 1 or 2 each).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Composition {
    pub source_i: u8,
    pub source_ii: u8,
}

impl Composition {
    /// Every composition with at least two pairs in total.
    pub const MULTI_PAIR: [Composition; 6] = [
        Composition {
            source_i: 1,
            source_ii: 1,
        },
        Composition {
            source_i: 2,
            source_ii: 0,
        },
        Composition {
            source_i: 0,
            source_ii: 2,
        },
        Composition {
            source_i: 2,
            source_ii: 1,
        },
        Composition {
            source_i: 1,
            source_ii: 2,
        },
        Composition {
            source_i: 2,
            source_ii: 2,
        },
    ];

    pub fn probability(self, config: &SourceConfig) -> f64 {
        let p = |k: u8| match k {
            0 => 1.0 - config.pair_prob - config.double_pair_prob,
            1 => config.pair_prob,
            _ => config.double_pair_prob,
        };
        p(self.source_i) * p(self.source_ii)
    }

    pub fn events(self, pulse_index: u64) -> Vec<EmissionEvent> {
        let kind = |k: u8| match k {
            1 => Some(PairKind::SinglePair),
            2 => Some(PairKind::DoublePairSameModes),
            _ => None,
        };
        [(Source::I, self.source_i), (Source::II, self.source_ii)]
            .into_iter()
            .filter_map(|(source, k)| {
                kind(k).map(|kind| EmissionEvent {
                    pulse_index,
                    source,
                    kind,
                })
            })
            .collect()
    }

    /// True when the pulse carries exactly one pair per source, the only
    /// case that interferes in the analyzer.
    pub fn is_cross_pair(self) -> bool {
        self.source_i == 1 && self.source_ii == 1
    }
}

/// Samples only the pulses that carry two or more pairs.
///
/// Pulses with fewer than two pairs put at most one photon into the
/// analyzer and can never produce an analyzer coincidence, so skipping
/// them is exact for every coincidence statistic. Gaps between multi-pair
/// pulses are geometric.
#[derive(Clone, Debug)]
pub struct MultiPairSampler {
    per_pulse: f64,
    gap: Option<rand_distr::Geometric>,
    pick: Option<rand_distr::weighted::WeightedIndex<f64>>,
}

impl MultiPairSampler {
    pub fn new(config: &SourceConfig) -> Result<Self> {
        let weights: Vec<f64> = Composition::MULTI_PAIR
            .iter()
            .map(|c| c.probability(config))
            .collect();
        let per_pulse: f64 = weights.iter().sum::<f64>().min(1.0);
        if per_pulse <= 0.0 {
            return Ok(MultiPairSampler {
                per_pulse: 0.0,
                gap: None,
                pick: None,
            });
        }
        let gap =
            rand_distr::Geometric::new(per_pulse).map_err(|e| Error::Config(e.to_string()))?;
        let pick = rand_distr::weighted::WeightedIndex::new(&weights)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(MultiPairSampler {
            per_pulse,
            gap: Some(gap),
            pick: Some(pick),
        })
    }

    /// Probability that a pulse carries two or more pairs.
    pub fn per_pulse(&self) -> f64 {
        self.per_pulse
    }

    /// Next multi-pair pulse at or after `from`, if it falls before `end`.
    pub fn next(&self, from: u64, end: u64, rng: &mut impl Rng) -> Option<(u64, Composition)> {
        let (gap, pick) = (self.gap.as_ref()?, self.pick.as_ref()?);
        let pulse = from.checked_add(gap.sample(rng))?;
        if pulse >= end {
            return None;
        }
        Some((pulse, Composition::MULTI_PAIR[pick.sample(rng)]))
    }
}

/// Two-photon indistinguishability at the analyzer beam splitter.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ModeOverlap(f64);

impl ModeOverlap {
    pub fn new(v: f64) -> Result<Self> {
        check_unit("overlap", v)?;
        Ok(ModeOverlap(v))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ModeOverlap {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        ModeOverlap::new(v)
    }
}

impl From<ModeOverlap> for f64 {
    fn from(v: ModeOverlap) -> f64 {
        v.0
    }
}

/// Gaussian overlap kernel `exp(−(delay/τc)²)`.
pub fn indistinguishability(relative_delay: f64, coherence_time: f64) -> Result<ModeOverlap> {
    if !(coherence_time > 0.0) {
        return Err(Error::Config(format!(
            "coherence_time must be positive, got {coherence_time}"
        )));
    }
    let x = relative_delay / coherence_time;
    ModeOverlap::new((-x * x).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BsaBranch {
    /// Photons interfered; pair (1,2) projected onto Ψ⁻.
    Coherent,
    /// Photons distinguishable; the analyzer outcome carries no correlation
    /// with modes 0 and 3.
    Uncorrelated,
}

/// Cross-output coincidence channel of the beam-splitter analyzer.
///
/// With overlap `v` the analyzer acts as a convex mixture of two branches:
/// with weight `v` the Ψ⁻ projector on modes (1,2) is applied coherently;
/// with weight `1 − v` the photons are distinguishable, so the analyzer
/// fires with the Ψ⁻ weight of the (1,2) marginal while modes (0,3) are
/// left in their own marginal state.
#[derive(Clone, Debug)]
pub struct BsaChannel {
    pub overlap: ModeOverlap,
    pub coherent_probability: f64,
    pub uncorrelated_probability: f64,
    pub coherent_state: Option<DensityOp>,
    pub uncorrelated_state: Option<DensityOp>,
}

impl BsaChannel {
    pub fn new(joint: &DensityOp, overlap: ModeOverlap) -> Result<Self> {
        if joint.modes() != [0, 1, 2, 3] {
            return Err(Error::PhotonCount {
                expected: 4,
                got: joint.num_photons(),
            });
        }
        let singlet = DensityOp::from_ket(&make_bell(BellLabel::PsiMinus, 1, 2)?);
        let (pc, projected) = joint.apply_projector(singlet.matrix(), &[1, 2])?;
        let coherent_state = projected.map(|r| r.partial_trace(&[0, 3])).transpose()?;
        let pd =
            joint
                .partial_trace(&[1, 2])?
                .overlap_with(&make_bell(BellLabel::PsiMinus, 1, 2)?)?;
        let uncorrelated_state = if pd > 1e-15 {
            Some(joint.partial_trace(&[0, 3])?)
        } else {
            None
        };
        Ok(BsaChannel {
            overlap,
            coherent_probability: pc,
            uncorrelated_probability: pd,
            coherent_state,
            uncorrelated_state,
        })
    }

    fn weights(&self) -> (f64, f64) {
        let v = self.overlap.value();
        (
            v * self.coherent_probability,
            (1.0 - v) * self.uncorrelated_probability,
        )
    }

    /// Probability that the analyzer reports Ψ⁻.
    pub fn acceptance(&self) -> f64 {
        let (a, b) = self.weights();
        a + b
    }

    /// Accepted state of modes (0,3), averaged over both branches.
    pub fn post_state(&self) -> Option<DensityOp> {
        let (a, b) = self.weights();
        let mut parts = Vec::new();
        if let Some(s) = &self.coherent_state {
            if a > 0.0 {
                parts.push((a, s));
            }
        }
        if let Some(s) = &self.uncorrelated_state {
            if b > 0.0 {
                parts.push((b, s));
            }
        }
        if parts.is_empty() {
            None
        } else {
            DensityOp::mixture(&parts).ok()
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> BsaOutcome {
        let (a, b) = self.weights();
        let u: f64 = rng.random();
        if u < a {
            if let Some(s) = &self.coherent_state {
                return BsaOutcome::Accepted {
                    branch: BsaBranch::Coherent,
                    post_state: s.clone(),
                };
            }
        } else if u < a + b {
            if let Some(s) = &self.uncorrelated_state {
                return BsaOutcome::Accepted {
                    branch: BsaBranch::Uncorrelated,
                    post_state: s.clone(),
                };
            }
        }
        BsaOutcome::Reject
    }
}

#[derive(Clone, Debug)]
pub enum BsaOutcome {
    /// Ψ⁻ reported; `post_state` lives on modes (0,3) and is the state of
    /// the sampled branch.
    Accepted {
        branch: BsaBranch,
        post_state: DensityOp,
    },
    Reject,
}

impl BsaOutcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, BsaOutcome::Accepted { .. })
    }
}

/// One shot of the analyzer on a joint state. Inputs without photons in
/// both modes 1 and 2 are rejected.
pub fn bsa_detect(
    joint: &DensityOp,
    overlap: ModeOverlap,
    rng: &mut impl Rng,
) -> Result<BsaOutcome> {
    if !(joint.modes().contains(&1) && joint.modes().contains(&2)) {
        return Ok(BsaOutcome::Reject);
    }
    Ok(BsaChannel::new(joint, overlap)?.sample(rng))
}

/// Uniformly sampled, unwrapped pump phase in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDrift {
    pub sample_interval: f64,
    pub samples: Vec<f64>,
}

impl PhaseDrift {
    pub fn new(sample_interval: f64, samples: Vec<f64>) -> Result<Self> {
        if !(sample_interval > 0.0) {
            return Err(Error::Config("sample_interval must be positive".into()));
        }
        if samples.len() < 2 {
            return Err(Error::InsufficientData(
                "phase series needs at least 2 samples".into(),
            ));
        }
        Ok(PhaseDrift {
            sample_interval,
            samples,
        })
    }

    pub fn duration(&self) -> f64 {
        self.sample_interval * (self.samples.len() - 1) as f64
    }

    /// Phase at the last sample relative to the first.
    pub fn net_drift(&self) -> f64 {
        self.samples[self.samples.len() - 1] - self.samples[0]
    }

    pub fn max_abs_excursion(&self) -> f64 {
        let start = self.samples[0];
        self.samples
            .iter()
            .map(|p| (p - start).abs())
            .fold(0.0, f64::max)
    }
}

/// Wiener-process phase: `φ(t + dt) = φ(t) + N(0, σ² dt)`, starting at 0.
pub fn random_walk_phase(
    sigma_per_sqrt_s: f64,
    sample_interval: f64,
    duration: f64,
    rng: &mut impl Rng,
) -> Result<PhaseDrift> {
    if !(sample_interval > 0.0 && duration > 0.0) {
        return Err(Error::Config(
            "sample_interval and duration must be positive".into(),
        ));
    }
    if !(sigma_per_sqrt_s >= 0.0) {
        return Err(Error::Config("sigma must be nonnegative".into()));
    }
    let steps = (duration / sample_interval).round().max(1.0) as usize;
    let step = Normal::new(0.0, sigma_per_sqrt_s * sample_interval.sqrt())
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut phase = 0.0;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(phase);
    for _ in 0..steps {
        phase += step.sample(rng);
        samples.push(phase);
    }
    PhaseDrift::new(sample_interval, samples)
}

/// Bernoulli thinning by detector efficiency. Always consumes one uniform
/// so later draws do not depend on `photon_present`.
pub fn detect(photon_present: bool, efficiency: f64, rng: &mut impl Rng) -> bool {
    let u: f64 = rng.random();
    photon_present && u < efficiency
}
