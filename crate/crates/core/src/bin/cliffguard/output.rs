//! Writing JSON envelopes, CSV tables and human summaries.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use cliffguard::manifest::RunManifest;
use cliffguard::{Error, Result};

use crate::OutArgs;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    manifest: &'a RunManifest,
    manifest_digest: String,
    result: &'a T,
}

pub fn envelope_json<T: Serialize>(manifest: &RunManifest, result: &T) -> Result<String> {
    let env = Envelope {
        manifest,
        manifest_digest: manifest.digest(),
        result,
    };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

/// JSON to `--out` and/or stdout (`--json`); otherwise the text summary.
pub fn emit<T: Serialize>(
    out: &OutArgs,
    manifest: &RunManifest,
    result: &T,
    text: impl FnOnce() -> String,
) -> Result<()> {
    let json = envelope_json(manifest, result)?;
    if let Some(p) = &out.out {
        write_file(p, &json)?;
    }
    let mut stdout = std::io::stdout().lock();
    let body = if out.json { json } else { text() };
    stdout.write_all(body.as_bytes()).map_err(|e| Error::Io {
        path: "<stdout>".into(),
        source: e,
    })
}

/// CSV with a leading `# manifest_digest=` comment line.
pub fn write_csv(
    path: &Path,
    manifest: &RunManifest,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut buf = format!("# manifest_digest={}\n", manifest.digest()).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
    }
    std::fs::write(path, buf).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}
