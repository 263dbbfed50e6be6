//! Small writers shared by the commands: CSV tables with a manifest comment
//! and JSON documents with a `manifest` field.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use swapsim::io::Manifest;

use crate::commands::CliError;

/// Header row plus data rows, rendered as CSV under a manifest comment.
pub fn csv_table(
    manifest: &Manifest,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    writeln!(buf, "{}", manifest.comment_line())?;
    let mut w = csv::Writer::from_writer(&mut buf);
    w.write_record(header).map_err(swapsim::Error::from)?;
    for r in rows {
        w.write_record(r).map_err(swapsim::Error::from)?;
    }
    w.flush()?;
    drop(w);
    Ok(buf)
}

#[derive(Serialize)]
struct WithManifest<'a, T: Serialize> {
    manifest: &'a Manifest,
    #[serde(flatten)]
    body: &'a T,
}

pub fn json_doc<T: Serialize>(manifest: &Manifest, body: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = serde_json::to_vec_pretty(&WithManifest { manifest, body })
        .map_err(swapsim::Error::from)?;
    buf.push(b'\n');
    Ok(buf)
}

/// Writes `bytes` to `dir/name` when a directory is given, otherwise to
/// stdout.
pub fn emit(dir: Option<&Path>, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    match dir {
        Some(d) => write_file(d, name, bytes),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, bytes)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// First 16 hex digits of SHA-256.
pub fn short_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn fmt(x: f64) -> String {
    format!("{x}")
}
