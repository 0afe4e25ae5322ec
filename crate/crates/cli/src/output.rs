//! Artifact emission: provenance header, atomic writes, CSV and JSON bodies.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Provenance carried by every emitted file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Header {
    /// Hashes the effective configuration. The output directory is left out
    /// so identical runs into different directories share a hash.
    pub fn new(config: &RunConfig) -> Self {
        let mut hashed = config.clone();
        hashed.out = None;
        let canonical = serde_json::to_string(&hashed).expect("config serializes");
        Self {
            tool: "clockvmc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: hex::encode(Sha256::digest(canonical.as_bytes())),
            seed: config.seed,
        }
    }

    /// `# clockvmc <version> config_hash=<hex> seed=<n>`
    pub fn line(&self) -> String {
        format!("# {} {} config_hash={} seed={}", self.tool, self.version, self.config_hash, self.seed)
    }
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| CliError::Config(format!("bad output path {}", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Serializes `rows` as CSV below the header line and writes atomically.
pub fn write_csv<R: Serialize>(path: &Path, header: &Header, rows: &[R]) -> Result<()> {
    let mut buf = format!("{}\n", header.line()).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    if rows.is_empty() {
        log::warn!("{} has no rows", path.display());
    }
    write_atomic(path, &buf)
}

/// Reads a CSV written by [`write_csv`], skipping the header line.
pub fn read_csv<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<R>> {
    let text = std::fs::read_to_string(path)?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    Ok(r.deserialize().collect::<Result<Vec<R>, _>>()?)
}

#[derive(Serialize, Deserialize)]
pub struct Wrapped<D> {
    pub header: Header,
    pub data: D,
}

/// Writes `{"header": …, "data": …}` atomically.
pub fn write_json<D: Serialize>(path: &Path, header: &Header, data: &D) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&Wrapped { header: header.clone(), data })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<Wrapped<D>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(CliError::Missing(path.display().to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Row {
        a: usize,
        b: f64,
        c: Option<f64>,
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let rows = vec![Row { a: 1, b: 0.1 + 0.2, c: None }, Row { a: 2, b: -1e-300, c: Some(f64::MAX) }];
        let h = Header::new(&RunConfig::default());
        write_csv(&path, &h, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# clockvmc "));
        assert_eq!(read_csv::<Row>(&path).unwrap(), rows);
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = RunConfig::default();
        let b = RunConfig { out: Some("elsewhere".into()), ..a.clone() };
        let c = RunConfig { seed: 1, ..a.clone() };
        assert_eq!(Header::new(&a).config_hash, Header::new(&b).config_hash);
        assert_ne!(Header::new(&a).config_hash, Header::new(&c).config_hash);
        assert_eq!(Header::new(&a).config_hash.len(), 64);
    }
}
