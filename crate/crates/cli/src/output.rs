//! Artifact files: JSON-lines records and CSV tables, both carrying the
//! resolved configuration.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Name of the marker written when a command fails.
pub const FAILURE_MARKER: &str = "FAILED";

#[derive(Serialize)]
pub struct Record<'a> {
    pub kind: &'a str,
    pub config: &'a BTreeMap<String, String>,
    /// Flat scalars, collected into CSV by `report`.
    pub summary: BTreeMap<String, Value>,
    pub detail: Value,
}

pub struct Artifacts {
    dir: PathBuf,
    header: BTreeMap<String, String>,
}

impl Artifacts {
    pub fn create(dir: &Path, header: BTreeMap<String, String>) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        let probe = dir.join(".write-test");
        File::create(&probe).with_context(|| format!("output directory {} is not writable", dir.display()))?;
        fs::remove_file(&probe)?;
        let _ = fs::remove_file(dir.join(FAILURE_MARKER));
        Ok(Self { dir: dir.to_path_buf(), header })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Appends one record to `<kind>.jsonl`.
    pub fn record(&self, kind: &str, summary: BTreeMap<String, Value>, detail: Value) -> Result<()> {
        let rec = Record { kind, config: &self.header, summary, detail };
        let path = self.dir.join(format!("{kind}.jsonl"));
        let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
        serde_json::to_writer(&mut f, &rec)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    /// Starts a CSV file whose first lines are `# key = value` comments.
    pub fn csv(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let mut f = BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?);
        for (k, v) in &self.header {
            writeln!(f, "# {k} = {v}")?;
        }
        Ok(f)
    }

    /// Removes the record files a command is about to regenerate.
    pub fn reset(&self, kind: &str) -> Result<()> {
        let path = self.dir.join(format!("{kind}.jsonl"));
        if path.exists() {
            fs::remove_file(path)?;
        }
        Ok(())
    }

    pub fn mark_failed(&self, message: &str) -> Result<()> {
        fs::write(self.dir.join(FAILURE_MARKER), format!("{message}\n"))?;
        Ok(())
    }
}

/// Builds a summary map from `(name, value)` pairs.
pub fn summary<I, K, V>(pairs: I) -> BTreeMap<String, Value>
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<Value>,
{
    pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}

/// Collects every `*.jsonl` record in `dir` into one `report_<kind>.csv` per
/// kind, columns taken from the union of summary keys. Returns the files written.
pub fn write_report(dir: &Path, artifacts: &Artifacts) -> Result<Vec<PathBuf>> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    entries.sort();
    let mut by_kind: BTreeMap<String, Vec<BTreeMap<String, Value>>> = BTreeMap::new();
    for path in &entries {
        let text = fs::read_to_string(path)?;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let v: Value = serde_json::from_str(line).with_context(|| format!("{}:{}: bad record", path.display(), i + 1))?;
            let kind = v["kind"].as_str().unwrap_or("unknown").to_string();
            let row = v["summary"].as_object().map(|o| o.iter().map(|(k, v)| (k.clone(), v.clone())).collect()).unwrap_or_default();
            by_kind.entry(kind).or_default().push(row);
        }
    }
    let mut written = Vec::new();
    for (kind, rows) in by_kind {
        let columns: Vec<String> = rows.iter().flat_map(|r| r.keys().cloned()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let name = format!("report_{kind}.csv");
        let mut f = artifacts.csv(&name)?;
        writeln!(f, "{}", columns.join(","))?;
        for row in &rows {
            let cells: Vec<String> = columns.iter().map(|c| row.get(c).map(cell).unwrap_or_default()).collect();
            writeln!(f, "{}", cells.join(","))?;
        }
        f.flush()?;
        written.push(dir.join(name));
    }
    Ok(written)
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}
