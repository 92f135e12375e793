use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

/// Every CSV the tool writes starts with this comment line, followed by the
/// schema id, e.g. `# schema: equilibrium/v1`.
pub const SCHEMA_PREFIX: &str = "# schema: ";

pub const MANIFEST_SCHEMA: &str = "manifest/v1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory of one run. Workers hand results back; only this
/// struct touches the filesystem.
pub struct Run {
    dir: PathBuf,
    outputs: Vec<(String, String)>,
    warnings: Vec<String>,
    seeds: BTreeMap<String, u64>,
}

impl Run {
    pub fn create(dir: &Path) -> Result<Run> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Run { dir: dir.to_path_buf(), outputs: Vec::new(), warnings: Vec::new(), seeds: BTreeMap::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    pub fn seed(&mut self, name: impl Into<String>, seed: u64) -> u64 {
        self.seeds.insert(name.into(), seed);
        seed
    }

    fn open(&mut self, name: &str, schema: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push((name.to_string(), schema.to_string()));
        Ok(BufWriter::new(f))
    }

    /// Opens a CSV and writes its schema line; the caller writes the header.
    pub fn csv_raw(&mut self, name: &str, schema: &str) -> Result<BufWriter<File>> {
        let mut w = self.open(name, schema)?;
        writeln!(w, "{SCHEMA_PREFIX}{schema}")?;
        Ok(w)
    }

    /// A CSV writer positioned after the schema line.
    pub fn csv(&mut self, name: &str, schema: &str) -> Result<csv::Writer<BufWriter<File>>> {
        Ok(csv::Writer::from_writer(self.csv_raw(name, schema)?))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, schema: &str, value: &T) -> Result<()> {
        let mut w = self.open(name, schema)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Records a file written by someone else (plots).
    pub fn record(&mut self, name: &str, kind: &str) {
        self.outputs.push((name.to_string(), kind.to_string()));
    }

    /// Writes `manifest.json`. Contains no wall-clock data, so it is as
    /// reproducible as the results.
    pub fn finish(mut self, experiment: &str, config: &Value, threads: usize, violations: usize) -> Result<Value> {
        let canonical = serde_json::to_vec(config)?;
        let outputs: Vec<Value> = self.outputs.iter().map(|(f, s)| json!({ "file": f, "schema": s })).collect();
        let manifest = json!({
            "schema": MANIFEST_SCHEMA,
            "tool": "supermarket",
            "code_version": env!("CARGO_PKG_VERSION"),
            "experiment": experiment,
            "config_hash": format!("sha256:{}", sha256_hex(&canonical)),
            "config": config,
            "seeds": self.seeds,
            "threads": threads,
            "outputs": outputs,
            "warnings": self.warnings,
            "violations": violations,
        });
        let mut w = self.open("manifest.json", MANIFEST_SCHEMA)?;
        self.outputs.pop();
        serde_json::to_writer_pretty(&mut w, &manifest)?;
        writeln!(w)?;
        w.flush()?;
        Ok(manifest)
    }
}

/// Schema id of a CSV written by this tool; None for an empty file.
pub fn read_schema(path: &Path) -> Result<Option<String>> {
    let f = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut first = String::new();
    BufReader::new(f).read_line(&mut first)?;
    if first.trim().is_empty() {
        return Ok(None);
    }
    match first.trim_end().strip_prefix(SCHEMA_PREFIX) {
        Some(s) => Ok(Some(s.to_string())),
        None => Err(crate::config::usage(format!("{}: no schema line, not a result file", path.display()))),
    }
}

/// Header and rows of a result CSV, skipping the schema line.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).flexible(false).from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn schema_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = Run::create(dir.path()).unwrap();
        let mut w = run.csv("t.csv", "test/v1").unwrap();
        w.write_record(["a", "b"]).unwrap();
        w.write_record(["1", "2"]).unwrap();
        w.flush().unwrap();
        drop(w);
        let p = dir.path().join("t.csv");
        assert_eq!(read_schema(&p).unwrap().as_deref(), Some("test/v1"));
        let (h, rows) = read_table(&p).unwrap();
        assert_eq!(h, ["a", "b"]);
        assert_eq!(rows, [["1", "2"]]);
        let m = run.finish("x", &json!({"a": 1}), 1, 0).unwrap();
        assert_eq!(m["outputs"][0]["schema"], "test/v1");
        assert!(dir.path().join("manifest.json").exists());
    }
}
