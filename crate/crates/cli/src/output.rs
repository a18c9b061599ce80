//! Output files. Every CSV starts with a comment line recording the hash of
//! the effective configuration and the seed.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::CliResult;

/// Effective parameters of one invocation. Output locations are left out so
/// that reruns into different directories share a hash.
#[derive(Debug, Clone, Default)]
pub struct Provenance {
    entries: BTreeMap<String, String>,
    seed: u64,
}

impl Provenance {
    pub fn new(command: &str, seed: u64) -> Provenance {
        let mut p = Provenance { entries: BTreeMap::new(), seed };
        p.set("command", command);
        p.set("seed", seed);
        p
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.insert(key.to_string(), value.to_string());
        self
    }

    /// Records an input file by content digest.
    pub fn input(&mut self, key: &str, path: &Path) -> CliResult<&mut Self> {
        let digest = Sha256::digest(fs::read(path)?);
        Ok(self.set(key, hex::encode(digest)))
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.entries {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    /// Comment text without the leading `#`.
    pub fn comment(&self) -> String {
        format!("ensemblekit config_hash={} seed={}", self.hash(), self.seed)
    }
}

/// A CSV file with the provenance comment and a header row.
pub struct CsvOut {
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create(path: &Path, prov: &Provenance, header: &[&str]) -> CliResult<CsvOut> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut file = BufWriter::new(File::create(path)?);
        writeln!(file, "# {}", prov.comment())?;
        let mut inner = csv::Writer::from_writer(file);
        inner.write_record(header)?;
        Ok(CsvOut { inner })
    }

    pub fn row<I, T>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.inner.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Creates (if needed) and returns the output directory.
pub fn out_dir(path: &Path) -> CliResult<PathBuf> {
    fs::create_dir_all(path)?;
    Ok(path.to_path_buf())
}

/// Creates a plain file for core writers that take their own comment.
pub fn create(path: &Path) -> CliResult<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(File::create(path)?)
}
