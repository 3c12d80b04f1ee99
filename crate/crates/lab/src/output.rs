//! CSV and JSON output. Every CSV row starts with the run id, the module
//! version and the configuration hash.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::LabError;

/// Leading columns of every row.
pub const PROVENANCE_COLUMNS: [&str; 3] = ["run_id", "module_version", "config_hash"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub run_id: String,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(run_id: impl Into<String>, config_hash: impl Into<String>) -> Self {
        Self {
            run_id: run_id.into(),
            config_hash: config_hash.into(),
        }
    }

    fn cells(&self) -> [String; 3] {
        [
            self.run_id.clone(),
            mfsc_core::VERSION.to_string(),
            self.config_hash.clone(),
        ]
    }
}

/// Shortest round-trip representation; `NaN` and infinities spelled out.
pub fn fmt(v: f64) -> String {
    format!("{v:?}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Writes a table with the provenance columns prepended.
pub struct Table<W: Write> {
    writer: csv::Writer<W>,
    provenance: Provenance,
    width: usize,
}

impl<W: Write> Table<W> {
    pub fn new(out: W, provenance: Provenance, columns: &[&str]) -> Result<Self, LabError> {
        let mut writer = csv::Writer::from_writer(out);
        let header: Vec<&str> = PROVENANCE_COLUMNS.iter().chain(columns).copied().collect();
        writer.write_record(&header)?;
        Ok(Self {
            writer,
            provenance,
            width: columns.len(),
        })
    }

    pub fn row(&mut self, cells: &[String]) -> Result<(), LabError> {
        assert_eq!(cells.len(), self.width, "row width does not match the header");
        let mut rec: Vec<String> = self.provenance.cells().to_vec();
        rec.extend_from_slice(cells);
        self.writer.write_record(&rec)?;
        Ok(())
    }

    pub fn set_run_id(&mut self, run_id: impl Into<String>) {
        self.provenance.run_id = run_id.into();
    }

    pub fn finish(mut self) -> Result<(), LabError> {
        self.writer.flush()?;
        Ok(())
    }
}

pub fn create_table(path: &Path, provenance: Provenance, columns: &[&str]) -> Result<Table<File>, LabError> {
    Table::new(File::create(path)?, provenance, columns)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LabError> {
    let f = File::create(path)?;
    serde_json::to_writer(std::io::BufWriter::new(f), value)?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, LabError> {
    let f = File::open(path).map_err(|e| LabError::Config(format!("cannot open {}: {e}", path.display())))?;
    serde_json::from_reader(std::io::BufReader::new(f))
        .map_err(|e| LabError::Config(format!("cannot parse {}: {e}", path.display())))
}
