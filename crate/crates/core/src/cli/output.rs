//! Output directory handling: atomic writes, table emission, run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Writes `bytes` to `path` via a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run. Contains no timestamps or host
/// details so identical runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, without `--out`.
    pub argv: Vec<String>,
    pub seed: u64,
    pub format: Format,
    pub config: serde_json::Value,
    pub outputs: Vec<OutputFile>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Collects the files written by one command.
pub struct Sink {
    dir: PathBuf,
    format: Format,
    outputs: Vec<OutputFile>,
}

impl Sink {
    pub fn new(dir: PathBuf, format: Format) -> Self {
        Self {
            dir,
            format,
            outputs: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn outputs(&self) -> &[OutputFile] {
        &self.outputs
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.outputs.push(OutputFile {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `rows` as `<stem>.csv` or `<stem>.json` depending on the run
    /// format. Rows must serialize to flat records.
    pub fn table<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<PathBuf> {
        match self.format {
            Format::Json => self.json(&format!("{stem}.json"), rows),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in rows {
                    w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
                self.write(&format!("{stem}.csv"), &bytes)
            }
        }
    }

    pub fn finish(self, mut manifest: Manifest) -> Result<PathBuf> {
        manifest.outputs = self.outputs;
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join(MANIFEST_FILE);
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a_us: f64,
        b: u32,
    }

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path().join("sub")).unwrap().count(), 1);
    }

    #[test]
    fn tables_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let rows = [Row { a_us: 1.5, b: 2 }];
        let mut s = Sink::new(dir.path().to_path_buf(), Format::Csv);
        let p = s.table("t", &rows).unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "a_us,b\n1.5,2\n");
        let mut j = Sink::new(dir.path().to_path_buf(), Format::Json);
        let p = j.table("t", &rows).unwrap();
        assert!(fs::read_to_string(p).unwrap().contains("\"a_us\": 1.5"));
        let m = Manifest {
            tool: "mcaimem".into(),
            version: "0".into(),
            command: "x".into(),
            argv: vec![],
            seed: 1,
            format: Format::Csv,
            config: serde_json::Value::Null,
            outputs: vec![],
        };
        let mp = s.finish(m).unwrap();
        let back = read_manifest(&mp).unwrap();
        assert_eq!(back.outputs.len(), 1);
        assert_eq!(back.outputs[0].sha256, sha256_hex(b"a_us,b\n1.5,2\n"));
    }
}
