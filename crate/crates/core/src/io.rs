//! On-disk formats: newline-delimited JSON event logs and CSV tables.
//!
//! Every file starts with a run manifest. CSV files carry it as a `#`
//! comment line; event logs carry it as a first JSON line with a single
//! `manifest` key.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photonics::Provenance;
use crate::pipeline::{Channel, EventLog, FourfoldRecord, PhotonEvent, Station};
use crate::qstate::AnalyzerAngle;
use crate::stats::CountTable;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
}

impl Manifest {
    pub fn new(seed: u64, config_hash: impl Into<String>) -> Self {
        Manifest {
            tool: "swapsim".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config_hash: config_hash.into(),
        }
    }

    pub fn comment_line(&self) -> String {
        format!(
            "# {} {} seed={} config={}",
            self.tool, self.version, self.seed, self.config_hash
        )
    }

    /// Inverse of [`Manifest::comment_line`].
    pub fn parse_comment_line(line: &str) -> Option<Manifest> {
        let mut parts = line.strip_prefix("# ")?.split_whitespace();
        let tool = parts.next()?.to_string();
        let version = parts.next()?.to_string();
        let seed = parts.next()?.strip_prefix("seed=")?.parse().ok()?;
        let config_hash = parts.next()?.strip_prefix("config=")?.to_string();
        if parts.next().is_some() {
            return None;
        }
        Some(Manifest {
            tool,
            version,
            seed,
            config_hash,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventLine {
    pulse: u64,
    t: f64,
    station: Station,
    channel: Option<Channel>,
    setting_deg: Option<f64>,
    prov: u64,
}

#[derive(Serialize, Deserialize)]
struct ManifestLine {
    manifest: Manifest,
}

pub fn write_events_ndjson<W: Write>(mut w: W, log: &EventLog, manifest: &Manifest) -> Result<()> {
    serde_json::to_writer(
        &mut w,
        &ManifestLine {
            manifest: manifest.clone(),
        },
    )?;
    w.write_all(b"\n")?;
    for e in &log.events {
        let line = EventLine {
            pulse: e.pulse,
            t: e.t,
            station: e.station,
            channel: e.channel,
            setting_deg: e.setting.map(AnalyzerAngle::degrees),
            prov: e.prov.0,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an event log; a leading manifest line is optional.
pub fn read_events_ndjson<R: BufRead>(r: R) -> Result<(Option<Manifest>, EventLog)> {
    let mut manifest = None;
    let mut events = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 {
            if let Ok(m) = serde_json::from_str::<ManifestLine>(&line) {
                manifest = Some(m.manifest);
                continue;
            }
        }
        let e: EventLine = serde_json::from_str(&line)?;
        events.push(PhotonEvent {
            pulse: e.pulse,
            t: e.t,
            station: e.station,
            channel: e.channel,
            setting: e.setting_deg.map(AnalyzerAngle::new),
            prov: Provenance(e.prov),
        });
    }
    Ok((manifest, EventLog::new(events)))
}

pub fn write_fourfolds_csv<W: Write>(
    mut w: W,
    records: &[FourfoldRecord],
    manifest: &Manifest,
) -> Result<()> {
    writeln!(w, "{}", manifest.comment_line())?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "pulse",
        "alice_outcome",
        "bob0_channel",
        "bob0_deg",
        "bob3_channel",
        "bob3_deg",
        "t_alice",
        "t_bob0",
        "t_bob3",
    ])?;
    for r in records {
        csv.write_record([
            r.pulse.to_string(),
            r.alice_outcome.to_string(),
            r.bob0.channel.as_str().to_string(),
            r.bob0.setting.degrees().to_string(),
            r.bob3.channel.as_str().to_string(),
            r.bob3.setting.degrees().to_string(),
            r.t_alice.to_string(),
            r.bob0.t.to_string(),
            r.bob3.t.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct CountRow {
    phi0_deg: f64,
    phi3_deg: f64,
    n_pp: u64,
    n_pm: u64,
    n_mp: u64,
    n_mm: u64,
}

pub fn write_counts_csv<W: Write>(
    mut w: W,
    tables: &[CountTable],
    manifest: Option<&Manifest>,
) -> Result<()> {
    if let Some(m) = manifest {
        writeln!(w, "{}", m.comment_line())?;
    }
    let mut csv = csv::Writer::from_writer(w);
    for t in tables {
        csv.serialize(CountRow {
            phi0_deg: t.phi0.degrees(),
            phi3_deg: t.phi3.degrees(),
            n_pp: t.n_pp,
            n_pm: t.n_pm,
            n_mp: t.n_mp,
            n_mm: t.n_mm,
        })?;
    }
    csv.flush()?;
    Ok(())
}

/// Reads a count-table CSV (columns `phi0_deg, phi3_deg, n_pp, n_pm, n_mp,
/// n_mm`); `#` lines are skipped.
pub fn read_counts_csv<R: std::io::Read>(r: R) -> Result<Vec<CountTable>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut out = Vec::new();
    for row in rdr.deserialize::<CountRow>() {
        let row = row?;
        if !(row.phi0_deg.is_finite() && row.phi3_deg.is_finite()) {
            return Err(Error::Config("non-finite angle in counts file".into()));
        }
        out.push(CountTable {
            phi0: row.phi0_deg.into(),
            phi3: row.phi3_deg.into(),
            n_pp: row.n_pp,
            n_pm: row.n_pm,
            n_mp: row.n_mp,
            n_mm: row.n_mm,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photonics::{PairKind, Source};

    #[test]
    fn event_lines_have_exact_fields() {
        let log = EventLog::new(vec![
            PhotonEvent {
                pulse: 7,
                t: 9.2e-8,
                station: Station::BobMode3,
                channel: Some(Channel::Minus),
                setting: Some(67.5.into()),
                prov: Provenance::new(7, Source::II, PairKind::SinglePair),
            },
            PhotonEvent {
                pulse: 7,
                t: 1.42e-7,
                station: Station::AliceD1,
                channel: None,
                setting: None,
                prov: Provenance::new(7, Source::I, PairKind::SinglePair),
            },
        ]);
        let mut buf = Vec::new();
        write_events_ndjson(&mut buf, &log, &Manifest::new(1, "abc")).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("{\"manifest\""));
        assert_eq!(
            lines[1],
            r#"{"pulse":7,"t":1.42e-7,"station":"alice_d1","channel":null,"setting_deg":null,"prov":28}"#
        );
        assert_eq!(
            lines[2],
            r#"{"pulse":7,"t":9.2e-8,"station":"bob_mode3","channel":"minus","setting_deg":67.5,"prov":30}"#
        );
        let (m, back) = read_events_ndjson(&buf[..]).unwrap();
        assert_eq!(m.unwrap().seed, 1);
        assert_eq!(back, log);
    }

    #[test]
    fn counts_csv_with_comment() {
        let text =
            "# produced elsewhere\nphi0_deg,phi3_deg,n_pp,n_pm,n_mp,n_mm\n0,22.5,10,44,42,8\n";
        let t = read_counts_csv(text.as_bytes()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].total(), 104);
        let mut buf = Vec::new();
        write_counts_csv(&mut buf, &t, Some(&Manifest::new(3, "ff"))).unwrap();
        let again = read_counts_csv(&buf[..]).unwrap();
        assert_eq!(again, t);
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(
            Manifest::parse_comment_line(first),
            Some(Manifest::new(3, "ff"))
        );
        assert_eq!(Manifest::parse_comment_line("# produced elsewhere"), None);
    }

    #[test]
    fn malformed_counts_rejected() {
        let text = "phi0_deg,phi3_deg,n_pp,n_pm,n_mp,n_mm\n0,22.5,10,-4,42,8\n";
        assert!(read_counts_csv(text.as_bytes()).is_err());
    }
}
