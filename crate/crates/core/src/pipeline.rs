//! Alice/Bob/Victor protocol harness: event-log generation, fourfold
//! post-selection, classical-message sorting, delayed choice and the
//! space-like separation audit.
//!
//! Events are binned per pump pulse, so coincidences are matched by pulse
//! index; timestamps only matter for the separation audit. Only pulses on
//! which Alice's D1∧D2 logic fired are acquired, since no other pulse can
//! contribute a fourfold.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photonics::{
    detect, BsaChannel, Composition, ModeOverlap, MultiPairSampler, PairKind, Provenance, Source,
    SourceConfig,
};
use crate::qstate::{joint_probabilities, werner, AnalyzerAngle, BellLabel, DensityOp};
use crate::rng::{substream, SimRng, Stream};
use crate::stats::CountTable;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default fourfold coincidence window, seconds.
pub const DEFAULT_WINDOW: f64 = 2e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Station {
    AliceD1,
    AliceD2,
    BobMode0,
    BobMode3,
}

impl Station {
    pub fn as_str(self) -> &'static str {
        match self {
            Station::AliceD1 => "alice_d1",
            Station::AliceD2 => "alice_d2",
            Station::BobMode0 => "bob_mode0",
            Station::BobMode3 => "bob_mode3",
        }
    }

    pub fn is_alice(self) -> bool {
        matches!(self, Station::AliceD1 | Station::AliceD2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Plus,
    Minus,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Plus => "plus",
            Channel::Minus => "minus",
        }
    }

    pub fn is_plus(self) -> bool {
        self == Channel::Plus
    }

    fn from_plus(plus: bool) -> Self {
        if plus {
            Channel::Plus
        } else {
            Channel::Minus
        }
    }
}

/// One detector click.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhotonEvent {
    pub pulse: u64,
    /// Absolute time in seconds.
    pub t: f64,
    pub station: Station,
    /// Bob only.
    pub channel: Option<Channel>,
    /// Bob only.
    pub setting: Option<AnalyzerAngle>,
    pub prov: Provenance,
}

impl PhotonEvent {
    fn sort_key(&self) -> (u64, Station, Option<Channel>) {
        (self.pulse, self.station, self.channel)
    }
}

/// Time-ordered-by-pulse list of detector clicks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<PhotonEvent>,
}

impl EventLog {
    pub fn new(mut events: Vec<PhotonEvent>) -> Self {
        events.sort_by_key(PhotonEvent::sort_key);
        EventLog { events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events grouped by pulse, in pulse order.
    pub fn pulses(&self) -> impl Iterator<Item = &[PhotonEvent]> {
        self.events.chunk_by(|a, b| a.pulse == b.pulse)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Metres between Alice's and Bob's detectors.
    pub alice_bob_separation: f64,
    /// Detector timing resolution, seconds.
    pub detector_resolution: f64,
    /// Extra fibre delay before Alice's detectors, seconds.
    pub alice_delay: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            alice_bob_separation: 2.5,
            detector_resolution: 1e-9,
            alice_delay: 0.0,
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x >= 0.0 && x.is_finite();
        if ok(self.alice_bob_separation) && ok(self.detector_resolution) && ok(self.alice_delay) {
            Ok(())
        } else {
            Err(Error::Config(
                "geometry values must be finite and nonnegative".into(),
            ))
        }
    }

    /// Light travel time between the stations.
    pub fn signaling_time(&self) -> f64 {
        self.alice_bob_separation / SPEED_OF_LIGHT
    }
}

/// Bob-side measurement recorded in a fourfold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BobResult {
    pub channel: Channel,
    pub setting: AnalyzerAngle,
    pub t: f64,
    pub prov: Provenance,
}

/// Post-selected fourfold coincidence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourfoldRecord {
    pub pulse: u64,
    pub alice_outcome: BellLabel,
    /// Later of Alice's two clicks.
    pub t_alice: f64,
    pub alice_prov: [Provenance; 2],
    pub bob0: BobResult,
    pub bob3: BobResult,
}

/// One scheduled analyzer setting and how long to run it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub phi0_deg: f64,
    pub phi3_deg: f64,
    pub duration_s: f64,
}

impl ScheduleEntry {
    pub fn new(phi0_deg: f64, phi3_deg: f64, duration_s: f64) -> Self {
        ScheduleEntry {
            phi0_deg,
            phi3_deg,
            duration_s,
        }
    }

    pub fn setting(&self) -> (AnalyzerAngle, AnalyzerAngle) {
        (self.phi0_deg.into(), self.phi3_deg.into())
    }
}

/// Everything needed to generate an event log.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub source: SourceConfig,
    pub overlap: ModeOverlap,
    /// When set, the accepted state of modes (0,3) is replaced by a Werner
    /// state of this fidelity (analytic noise mode).
    pub noise_fidelity: Option<f64>,
    pub geometry: Geometry,
    pub schedule: Vec<ScheduleEntry>,
    pub seed: u64,
    pub shards: usize,
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.geometry.validate()?;
        if self.schedule.is_empty() {
            return Err(Error::Config("settings schedule is empty".into()));
        }
        if self.shards == 0 {
            return Err(Error::Config("shards must be at least 1".into()));
        }
        for e in &self.schedule {
            if !(e.duration_s >= 0.0 && e.duration_s.is_finite()) {
                return Err(Error::Config(format!("bad duration {}", e.duration_s)));
            }
            if !(e.phi0_deg.is_finite() && e.phi3_deg.is_finite()) {
                return Err(Error::Config("analyzer angles must be finite".into()));
            }
        }
        if let Some(f) = self.noise_fidelity {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::OutOfRange {
                    name: "noise_fidelity",
                    value: f,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        Ok(())
    }

    /// Analyzer acceptance and accepted (0,3) state for a one-pair-per-source
    /// pulse.
    pub fn cross_pair_channel(&self) -> Result<(f64, Option<DensityOp>)> {
        let channel = BsaChannel::new(&self.source.product_state()?, self.overlap)?;
        let acceptance = channel.acceptance();
        let post = match self.noise_fidelity {
            Some(f) => Some(werner(f, 0, 3)?),
            None => channel.post_state(),
        };
        Ok((acceptance, post))
    }

    /// Number of pump pulses spent on each schedule entry.
    pub fn pulses_per_entry(&self) -> Vec<u64> {
        self.schedule
            .iter()
            .map(|e| (e.duration_s * self.source.rep_rate).round() as u64)
            .collect()
    }
}

/// Precomputed per-setting quantities for pulse simulation.
struct SettingContext {
    phi0: AnalyzerAngle,
    phi3: AnalyzerAngle,
    acceptance: f64,
    /// `[p₊₊, p₊₋, p₋₊, p₋₋]` for the accepted cross-pair state.
    joint: [f64; 4],
}

fn sample_index(probs: &[f64; 4], rng: &mut SimRng) -> usize {
    let total: f64 = probs.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    3
}

/// Clicks produced by `n` photons in one two-channel analyzer, each with a
/// uniformly random channel. One event per clicking channel.
#[allow(clippy::too_many_arguments)]
fn classical_bob(
    pulse: u64,
    t: f64,
    station: Station,
    setting: AnalyzerAngle,
    prov: Provenance,
    n: u8,
    efficiency: f64,
    analyzer: &mut SimRng,
    detectors: &mut SimRng,
) -> Vec<PhotonEvent> {
    let mut clicked: [bool; 2] = [false; 2];
    for _ in 0..n {
        let plus = analyzer.random::<f64>() < 0.5;
        if detect(true, efficiency, detectors) {
            clicked[usize::from(!plus)] = true;
        }
    }
    [Channel::Plus, Channel::Minus]
        .into_iter()
        .zip(clicked)
        .filter(|(_, c)| *c)
        .map(|(channel, _)| PhotonEvent {
            pulse,
            t,
            station,
            channel: Some(channel),
            setting: Some(setting),
            prov,
        })
        .collect()
}

/// Simulates one multi-pair pulse. Returns nothing unless Alice's D1∧D2
/// coincidence fired.
fn simulate_pulse(
    seed: u64,
    pulse: u64,
    comp: Composition,
    source: &SourceConfig,
    ctx: &SettingContext,
) -> Vec<PhotonEvent> {
    let eta = source.detector_efficiency;
    let t = pulse as f64 * source.pulse_period();
    let mut bsa = substream(seed, Stream::Bsa, pulse);
    let mut analyzer = substream(seed, Stream::Analyzer, pulse);
    let mut detectors = substream(seed, Stream::Detectors, pulse);
    let kind = |k: u8| {
        if k == 2 {
            PairKind::DoublePairSameModes
        } else {
            PairKind::SinglePair
        }
    };
    let prov_i = Provenance::new(pulse, Source::I, kind(comp.source_i));
    let prov_ii = Provenance::new(pulse, Source::II, kind(comp.source_ii));
    let alice = |station, prov| PhotonEvent {
        pulse,
        t,
        station,
        channel: None,
        setting: None,
        prov,
    };
    let bob = |station, channel, setting, prov| PhotonEvent {
        pulse,
        t,
        station,
        channel: Some(channel),
        setting: Some(setting),
        prov,
    };

    if comp.is_cross_pair() {
        if bsa.random::<f64>() >= ctx.acceptance {
            return Vec::new();
        }
        // Ψ⁻ leaves the beam splitter one photon per output
        let (d1, d2) = if bsa.random::<f64>() < 0.5 {
            (prov_i, prov_ii)
        } else {
            (prov_ii, prov_i)
        };
        let hit1 = detect(true, eta, &mut detectors);
        let hit2 = detect(true, eta, &mut detectors);
        if !(hit1 && hit2) {
            return Vec::new();
        }
        let outcome = sample_index(&ctx.joint, &mut analyzer);
        let mut out = vec![alice(Station::AliceD1, d1), alice(Station::AliceD2, d2)];
        if detect(true, eta, &mut detectors) {
            out.push(bob(
                Station::BobMode0,
                Channel::from_plus(outcome < 2),
                ctx.phi0,
                prov_i,
            ));
        }
        if detect(true, eta, &mut detectors) {
            out.push(bob(
                Station::BobMode3,
                Channel::from_plus(outcome.is_multiple_of(2)),
                ctx.phi3,
                prov_ii,
            ));
        }
        return out;
    }

    // Same-mode double pairs: classical occupancy, no interference.
    let photons = std::iter::repeat_n(prov_i, comp.source_i as usize)
        .chain(std::iter::repeat_n(prov_ii, comp.source_ii as usize));
    let mut first_click: [Option<Provenance>; 2] = [None, None];
    for prov in photons {
        let port = usize::from(bsa.random::<f64>() >= 0.5);
        if detect(true, eta, &mut detectors) && first_click[port].is_none() {
            first_click[port] = Some(prov);
        }
    }
    let (Some(d1), Some(d2)) = (first_click[0], first_click[1]) else {
        return Vec::new();
    };
    let mut out = vec![alice(Station::AliceD1, d1), alice(Station::AliceD2, d2)];
    out.extend(classical_bob(
        pulse,
        t,
        Station::BobMode0,
        ctx.phi0,
        prov_i,
        comp.source_i,
        eta,
        &mut analyzer,
        &mut detectors,
    ));
    out.extend(classical_bob(
        pulse,
        t,
        Station::BobMode3,
        ctx.phi3,
        prov_ii,
        comp.source_ii,
        eta,
        &mut analyzer,
        &mut detectors,
    ));
    out
}

/// Generates the acquired event log for the whole schedule. Deterministic
/// for a fixed `(seed, shards)`; Alice's timestamps include the geometry's
/// fibre delay.
pub fn run_experiment(exp: &Experiment) -> Result<EventLog> {
    exp.validate()?;
    let (acceptance, post) = exp.cross_pair_channel()?;
    let sampler = MultiPairSampler::new(&exp.source)?;
    let mut events = Vec::new();
    let mut start = 0u64;
    for (k, (entry, n)) in exp.schedule.iter().zip(exp.pulses_per_entry()).enumerate() {
        let (phi0, phi3) = entry.setting();
        let joint = match &post {
            Some(rho) => joint_probabilities(rho, phi0, phi3)?,
            None => [0.25; 4],
        };
        let ctx = SettingContext {
            phi0,
            phi3,
            acceptance: if post.is_some() { acceptance } else { 0.0 },
            joint,
        };
        let shards = exp.shards as u64;
        let chunk = n.div_ceil(shards).max(1);
        let shard_events: Vec<Vec<PhotonEvent>> = (0..shards)
            .into_par_iter()
            .map(|s| {
                let lo = start + (s * chunk).min(n);
                let hi = start + ((s + 1) * chunk).min(n);
                let mut rng = substream(exp.seed, Stream::Sources, ((k as u64) << 32) | s);
                let mut out = Vec::new();
                let mut from = lo;
                while let Some((pulse, comp)) = sampler.next(from, hi, &mut rng) {
                    out.extend(simulate_pulse(exp.seed, pulse, comp, &exp.source, &ctx));
                    from = pulse + 1;
                }
                out
            })
            .collect();
        events.extend(shard_events.into_iter().flatten());
        start += n;
    }
    apply_delay(&EventLog::new(events), exp.geometry.alice_delay)
}

/// Shifts every Alice timestamp by `alice_delay`; nothing else changes.
pub fn apply_delay(log: &EventLog, alice_delay: f64) -> Result<EventLog> {
    if !(alice_delay >= 0.0 && alice_delay.is_finite()) {
        return Err(Error::Config(format!(
            "alice_delay must be nonnegative, got {alice_delay}"
        )));
    }
    Ok(EventLog {
        events: log
            .events
            .iter()
            .map(|e| {
                let mut e = *e;
                if e.station.is_alice() {
                    e.t += alice_delay;
                }
                e
            })
            .collect(),
    })
}

/// Keeps pulses with an Alice D1∧D2 coincidence inside `window` and exactly
/// one Bob click in each of modes 0 and 3.
pub fn postselect_fourfold(log: &EventLog, window: f64) -> Result<Vec<FourfoldRecord>> {
    if !(window > 0.0) {
        return Err(Error::Config(format!(
            "coincidence window must be positive, got {window}"
        )));
    }
    let mut out = Vec::new();
    for group in log.pulses() {
        let of = |st: Station| group.iter().filter(move |e| e.station == st);
        let (Some(d1), Some(d2)) = (of(Station::AliceD1).next(), of(Station::AliceD2).next())
        else {
            continue;
        };
        if (d1.t - d2.t).abs() > window {
            continue;
        }
        let b0: Vec<_> = of(Station::BobMode0).collect();
        let b3: Vec<_> = of(Station::BobMode3).collect();
        if b0.len() != 1 || b3.len() != 1 {
            continue;
        }
        let (b0, b3) = (b0[0], b3[0]);
        // mode 0 is only fed by source I and mode 3 only by source II
        if b0.prov.source() != Source::I || b3.prov.source() != Source::II {
            continue;
        }
        let bob = |e: &PhotonEvent| -> Option<BobResult> {
            Some(BobResult {
                channel: e.channel?,
                setting: e.setting?,
                t: e.t,
                prov: e.prov,
            })
        };
        let (Some(bob0), Some(bob3)) = (bob(b0), bob(b3)) else {
            continue;
        };
        out.push(FourfoldRecord {
            pulse: d1.pulse,
            alice_outcome: BellLabel::PsiMinus,
            t_alice: d1.t.max(d2.t),
            alice_prov: [d1.prov, d2.prov],
            bob0,
            bob3,
        });
    }
    Ok(out)
}

/// Tallies fourfolds into one count table per listed setting (zero tables
/// included). Records at unlisted settings are ignored.
pub fn count_tables(
    records: &[FourfoldRecord],
    settings: &[(AnalyzerAngle, AnalyzerAngle)],
) -> Vec<CountTable> {
    let mut tables: Vec<CountTable> = Vec::new();
    for &(a, b) in settings {
        if !tables.iter().any(|t| t.same_setting(a, b)) {
            tables.push(CountTable::empty(a, b));
        }
    }
    for r in records {
        if let Some(t) = tables
            .iter_mut()
            .find(|t| t.same_setting(r.bob0.setting, r.bob3.setting))
        {
            t.record(r.bob0.channel.is_plus(), r.bob3.channel.is_plus());
        }
    }
    tables
}

/// Classical message from Alice to Victor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AliceMessage {
    pub pulse: u64,
    pub outcome: BellLabel,
    pub sent_at: f64,
}

/// Alice's analyzer reports: one Ψ⁻ message per pulse with a D1∧D2
/// coincidence.
pub fn alice_messages(log: &EventLog) -> Vec<AliceMessage> {
    log.pulses()
        .filter_map(|g| {
            let d1 = g.iter().find(|e| e.station == Station::AliceD1)?;
            let d2 = g.iter().find(|e| e.station == Station::AliceD2)?;
            Some(AliceMessage {
                pulse: d1.pulse,
                outcome: BellLabel::PsiMinus,
                sent_at: d1.t.max(d2.t),
            })
        })
        .collect()
}

/// In-process ordered queue carrying Alice's messages with fixed latency.
#[derive(Clone, Debug, Default)]
pub struct ClassicalChannel {
    latency: f64,
    queue: VecDeque<(f64, AliceMessage)>,
}

impl ClassicalChannel {
    pub fn new(latency: f64) -> Self {
        ClassicalChannel {
            latency,
            queue: VecDeque::new(),
        }
    }

    /// Messages must be sent in nondecreasing `sent_at` order.
    pub fn send(&mut self, msg: AliceMessage) {
        self.queue.push_back((msg.sent_at + self.latency, msg));
    }

    /// Messages whose arrival time is at or before `now`.
    pub fn deliver_until(&mut self, now: f64) -> Vec<AliceMessage> {
        let mut out = Vec::new();
        while self.queue.front().is_some_and(|(at, _)| *at <= now) {
            out.push(self.queue.pop_front().unwrap().1);
        }
        out
    }

    pub fn drain(&mut self) -> Vec<AliceMessage> {
        self.queue.drain(..).map(|(_, m)| m).collect()
    }
}

/// Victor's sorting of Bob's fourfolds into subsets by Alice's outcome.
pub fn victor_sort(
    records: &[FourfoldRecord],
    messages: &[AliceMessage],
) -> Result<BTreeMap<BellLabel, Vec<FourfoldRecord>>> {
    let by_pulse: HashMap<u64, BellLabel> = messages.iter().map(|m| (m.pulse, m.outcome)).collect();
    let mut out: BTreeMap<BellLabel, Vec<FourfoldRecord>> = BTreeMap::new();
    for r in records {
        let label = by_pulse
            .get(&r.pulse)
            .ok_or(Error::UnmatchedRecord(r.pulse))?;
        out.entry(*label).or_default().push(*r);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Separation {
    Spacelike,
    Timelike,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpacelikeReport {
    /// Zero when there are no records.
    pub fraction_spacelike: f64,
    pub classifications: Vec<(u64, Separation)>,
}

/// A record is space-like when both of Bob's clicks differ from Alice's
/// completion time by less than the light travel time, after allowing for
/// the detector timing resolution.
pub fn spacelike_audit(records: &[FourfoldRecord], geometry: &Geometry) -> Result<SpacelikeReport> {
    geometry.validate()?;
    let limit = geometry.signaling_time();
    let classifications: Vec<(u64, Separation)> = records
        .iter()
        .map(|r| {
            let gap = (r.t_alice - r.bob0.t)
                .abs()
                .max((r.t_alice - r.bob3.t).abs());
            let sep = if gap + geometry.detector_resolution < limit {
                Separation::Spacelike
            } else {
                Separation::Timelike
            };
            (r.pulse, sep)
        })
        .collect();
    let n = classifications.len();
    let spacelike = classifications
        .iter()
        .filter(|(_, s)| *s == Separation::Spacelike)
        .count();
    Ok(SpacelikeReport {
        fraction_spacelike: if n == 0 {
            0.0
        } else {
            spacelike as f64 / n as f64
        },
        classifications,
    })
}

/// Probability that one mode holding `n` photons yields exactly one click
/// (two photons in the same channel give a single click).
fn single_click_probability(n: u8, eta: f64) -> f64 {
    match n {
        0 => 0.0,
        1 => eta,
        _ => 2.0 * eta * (1.0 - eta) + 0.5 * eta * eta,
    }
}

/// Probability that `m` randomly routed photons fire both D1 and D2.
fn alice_coincidence_probability(m: u8, eta: f64) -> f64 {
    let m = i32::from(m);
    1.0 - 2.0 * (1.0 - eta / 2.0).powi(m) + (1.0 - eta).powi(m)
}

/// Per-pulse probability of a post-selected fourfold for one composition.
pub fn fourfold_probability(comp: Composition, acceptance: f64, eta: f64) -> f64 {
    if comp.is_cross_pair() {
        return acceptance * eta.powi(4);
    }
    alice_coincidence_probability(comp.source_i + comp.source_ii, eta)
        * single_click_probability(comp.source_i, eta)
        * single_click_probability(comp.source_ii, eta)
}

/// Expected fourfolds per second for a source configuration and analyzer
/// acceptance.
pub fn expected_fourfold_rate(source: &SourceConfig, acceptance: f64) -> f64 {
    source.rep_rate
        * Composition::MULTI_PAIR
            .iter()
            .map(|&c| {
                c.probability(source)
                    * fourfold_probability(c, acceptance, source.detector_efficiency)
            })
            .sum::<f64>()
}

/// Solves for the single-pair probability that yields `target_rate`
/// fourfolds per second, with the same-mode double-pair probability tied
/// to it as `double_ratio · p²`. Bisection on `p ∈ (0, 0.5]`.
pub fn calibrate_pair_prob(
    template: &SourceConfig,
    acceptance: f64,
    target_rate: f64,
    double_ratio: f64,
) -> Result<f64> {
    let rate = |p: f64| {
        let cfg = SourceConfig {
            pair_prob: p,
            double_pair_prob: double_ratio * p * p,
            ..template.clone()
        };
        expected_fourfold_rate(&cfg, acceptance)
    };
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    if !(target_rate > 0.0) || rate(hi) < target_rate {
        return Err(Error::Config(format!(
            "fourfold rate {target_rate}/s is not reachable with this source"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) < target_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
