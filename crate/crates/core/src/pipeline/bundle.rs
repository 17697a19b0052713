//! Output bundle: files are staged in a temporary directory next to the
//! output directory and moved in only when a command succeeds.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SOFTWARE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub input_hashes: BTreeMap<String, String>,
    pub config: Value,
    pub software_version: String,
    /// SHA-256 over the three fields above.
    pub hash: String,
}

impl Provenance {
    pub fn new(input_hashes: BTreeMap<String, String>, config: Value) -> Self {
        let body = json!({
            "input_hashes": input_hashes,
            "config": config,
            "software_version": SOFTWARE_VERSION,
        });
        let hash = hex::encode(Sha256::digest(body.to_string().as_bytes()));
        Self {
            input_hashes,
            config,
            software_version: SOFTWARE_VERSION.to_string(),
            hash,
        }
    }
}

/// Files written by one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultBundle {
    pub output_dir: PathBuf,
    /// Relative path → hex SHA-256 of the file bytes.
    pub files: BTreeMap<String, String>,
    pub provenance: Provenance,
}

/// One table cell: the text written to CSV plus the JSON sidecar entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub text: String,
    pub value: Value,
    pub spec_id: Option<String>,
    pub source: Option<String>,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        let s = s.into();
        Self {
            value: Value::String(s.clone()),
            text: s,
            spec_id: None,
            source: None,
        }
    }

    pub fn num(v: f64) -> Self {
        Self {
            text: fmt_num(v),
            value: if v.is_finite() { json!(v) } else { Value::Null },
            spec_id: None,
            source: None,
        }
    }

    pub fn opt(v: Option<f64>) -> Self {
        v.map_or_else(Self::missing, Self::num)
    }

    pub fn int(v: usize) -> Self {
        Self {
            text: v.to_string(),
            value: json!(v),
            spec_id: None,
            source: None,
        }
    }

    pub fn missing() -> Self {
        Self {
            text: String::new(),
            value: Value::Null,
            spec_id: None,
            source: None,
        }
    }

    pub fn traced(mut self, spec_id: &str, source: impl Into<String>) -> Self {
        self.spec_id = Some(spec_id.to_string());
        self.source = Some(source.into());
        self
    }
}

pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// p-value as shown in human-readable tables.
pub fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".into()
    } else {
        format!("{p:.3}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn sidecar(&self, provenance: &str) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let cells: serde_json::Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(col, cell)| {
                        let mut entry = json!({ "value": cell.value });
                        if let Some(id) = &cell.spec_id {
                            entry["spec_id"] = json!(id);
                        }
                        if let Some(src) = &cell.source {
                            entry["column_label"] = json!(src);
                        }
                        (col.clone(), entry)
                    })
                    .collect();
                Value::Object(cells)
            })
            .collect();
        json!({ "provenance": provenance, "columns": self.columns, "rows": rows })
    }
}

pub struct BundleWriter {
    out_dir: PathBuf,
    staging: tempfile::TempDir,
    provenance: Provenance,
    files: BTreeMap<String, String>,
}

impl BundleWriter {
    pub fn new(out_dir: &Path, provenance: Provenance) -> Result<Self> {
        // Staged beside the output directory so a failed run leaves no trace in it.
        let parent = match out_dir.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        let staging = tempfile::Builder::new()
            .prefix(".novelty-staging-")
            .tempdir_in(parent)
            .map_err(|e| Error::io(parent, e))?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            staging,
            provenance,
            files: BTreeMap::new(),
        })
    }

    pub fn provenance_hash(&self) -> &str {
        &self.provenance.hash
    }

    fn put(&mut self, name: &str, bytes: Vec<u8>) -> Result<()> {
        let path = self.staging.path().join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        self.files
            .insert(name.to_string(), hex::encode(Sha256::digest(&bytes)));
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
    }

    /// CSV with a leading `# provenance=<hash>` comment line.
    pub fn write_csv(&mut self, name: &str, table: &Table) -> Result<()> {
        let mut out = format!("# provenance={}\n", self.provenance.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let io = |e: csv::Error| Error::io(name, std::io::Error::other(e));
            w.write_record(&table.columns).map_err(io)?;
            for row in &table.rows {
                w.write_record(row.iter().map(|c| c.text.as_str())).map_err(io)?;
            }
            w.flush().map_err(|e| Error::io(name, e))?;
        }
        self.put(name, out)
    }

    /// CSV plus a `.json` sidecar tracing every cell.
    pub fn write_table(&mut self, stem: &str, table: &Table) -> Result<()> {
        self.write_csv(&format!("{stem}.csv"), table)?;
        let sidecar = table.sidecar(&self.provenance.hash);
        self.write_json(&format!("{stem}.json"), &sidecar)
    }

    /// JSON with a top-level `provenance` field holding the provenance hash.
    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut value = value.clone();
        if let Some(obj) = value.as_object_mut() {
            obj.insert("provenance".into(), json!(self.provenance.hash));
        }
        let mut bytes = serde_json::to_vec_pretty(&value).expect("json");
        bytes.push(b'\n');
        self.put(name, bytes)
    }

    /// Writes `manifest.<command>.json` and moves everything into place.
    pub fn finish(mut self, command: &str) -> Result<ResultBundle> {
        let manifest = json!({
            "command": command,
            "files": self.files,
            "provenance": self.provenance,
        });
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("json");
        bytes.push(b'\n');
        self.put(&format!("manifest.{command}.json"), bytes)?;
        fs::create_dir_all(&self.out_dir).map_err(|e| Error::io(&self.out_dir, e))?;
        for name in self.files.keys() {
            let from = self.staging.path().join(name);
            let to = self.out_dir.join(name);
            if let Some(parent) = to.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::rename(&from, &to).map_err(|e| Error::io(&to, e))?;
        }
        Ok(ResultBundle {
            output_dir: self.out_dir,
            files: self.files,
            provenance: self.provenance,
        })
    }
}
