//! Byte-stable artifact writing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use super::explain::ExplanationDocument;
use crate::evaluation::{BenchmarkGrid, ClassificationReport};
use crate::{Error, Result};

/// Rounds every non-integer number to six decimals and sorts object keys.
pub fn canonical(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let sorted: BTreeMap<String, Value> = m.into_iter().map(|(k, v)| (k, canonical(v))).collect();
            Value::Object(sorted.into_iter().collect::<Map<_, _>>())
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            format!("{x:.6}").parse::<f64>().map(Value::from).unwrap_or(Value::Null)
        }
        other => other,
    }
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&canonical(serde_json::to_value(value)?))?;
    s.push('\n');
    Ok(s)
}

/// Files written by one command. On failure, [`OutputSet::discard`] removes
/// everything written so far so no partial run is left behind.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputSet {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(OutputSet { dir, written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn discard(self) {
        for p in self.written {
            let _ = fs::remove_file(p);
        }
    }

    pub fn finish(self) -> Vec<PathBuf> {
        self.written
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Plotdata,
}

/// Everything a run produces besides the model itself.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ReportBundle {
    pub config_hash: String,
    pub seed: u64,
    /// TOML snapshot of the effective configuration.
    #[serde(skip)]
    pub config_snapshot: String,
    /// Classification reports keyed by partition name.
    pub classification: BTreeMap<String, ClassificationReport>,
    #[serde(skip)]
    pub grid: Option<BenchmarkGrid>,
    pub explanations: Vec<ExplanationDocument>,
}

impl ReportBundle {
    pub fn classification_csv(&self) -> String {
        let mut out = String::from("partition,n,tp,fp,tn,fn,accuracy,precision,recall,f1,config_hash,seed\n");
        for (name, r) in &self.classification {
            let c = &r.confusion;
            let _ = writeln!(
                out,
                "{name},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{}",
                r.n, c.tp, c.fp, c.tn, c.fn_, r.accuracy, r.precision, r.recall, r.f1, self.config_hash, self.seed
            );
        }
        out
    }
}

/// Writes the bundle's artifacts in `format` and returns their names.
pub fn emit_report(bundle: &ReportBundle, format: ReportFormat, out: &mut OutputSet) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    match format {
        ReportFormat::Csv => {
            if !bundle.classification.is_empty() {
                paths.push(out.write("report.csv", bundle.classification_csv())?);
            }
            if let Some(g) = &bundle.grid {
                paths.push(out.write("grid.csv", g.to_csv())?);
            }
        }
        ReportFormat::Json => {
            if !bundle.classification.is_empty() || !bundle.explanations.is_empty() {
                paths.push(out.write("report.json", to_canonical_json(bundle)?)?);
            }
            if let Some(g) = &bundle.grid {
                paths.push(out.write("grid.json", to_canonical_json(&g.to_json())?)?);
            }
        }
        ReportFormat::Plotdata => {
            if let Some(g) = &bundle.grid {
                paths.push(out.write("plotdata.json", to_canonical_json(&g.to_plotdata())?)?);
            }
        }
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn canonical_rounds_and_sorts() {
        let v = canonical(json!({"b": 0.1234567891, "a": [1, 2.5], "c": {"z": 1, "y": 1.0e-9}}));
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"a":[1,2.5],"b":0.123457,"c":{"y":0.0,"z":1}}"#
        );
    }

    #[test]
    fn discard_removes_written_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputSet::new(dir.path().join("run")).unwrap();
        let p = out.write("a.txt", "x").unwrap();
        assert!(p.exists());
        out.discard();
        assert!(!p.exists());
    }
}
