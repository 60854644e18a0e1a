use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Frequency unit of a preset and the matching time column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Units {
    pub frequency: &'static str,
    pub time: &'static str,
    /// Multiplies simulation times to give reported times.
    pub time_scale: f64,
}

impl Units {
    pub const OMEGA_C: Units = Units {
        frequency: "Omega_c",
        time: "1/Omega_c",
        time_scale: 1.0,
    };
    pub const G_EFF: Units = Units {
        frequency: "g_eff",
        time: "1/g_eff",
        time_scale: 1.0,
    };
    /// Simulations in angular MHz; times reported in microseconds.
    pub const MHZ: Units = Units {
        frequency: "2pi*MHz",
        time: "us",
        time_scale: 1.0 / std::f64::consts::TAU,
    };
}

/// One CSV file. Every row carries the two label columns
/// `time_unit,observable` followed by the numeric columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub time_unit: String,
    pub observable: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, units: Units, observable: impl Into<String>, columns: Vec<String>) -> Self {
        Self {
            name: name.into(),
            time_unit: units.time.to_owned(),
            observable: observable.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    /// Column by header name.
    pub fn column(&self, header: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == header)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time_unit,observable");
        for c in &self.columns {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        for row in &self.rows {
            s.push_str(&self.time_unit);
            s.push(',');
            s.push_str(&self.observable);
            for v in row {
                // 12 significant digits
                let _ = write!(s, ",{v:.11e}");
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Sequential writer for one run directory; records a checksum per file.
pub(crate) struct RunWriter {
    dir: PathBuf,
    pub artifacts: Vec<Artifact>,
}

impl RunWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, data: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), data)?;
        self.artifacts.push(Artifact {
            file: name.to_owned(),
            sha256: sha256_hex(data),
            bytes: data.len(),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Written last and not listed among its own artifacts.
    pub fn finish<T: Serialize>(self, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}
