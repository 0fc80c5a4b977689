//! CSV tables and run manifests.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ExperimentError, PresetOutput};

/// A rectangular numeric table. NaN cells are written as empty fields and
/// mark missing data.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> Result<String, ExperimentError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| format_number(x)))?;
        }
        let bytes = w.into_inner().map_err(|e| ExperimentError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is ascii"))
    }
}

/// Nine significant digits, trailing zeros trimmed; NaN becomes "".
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return String::new();
    }
    if x == 0.0 {
        return "0".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Provenance sidecar written next to every run's tables.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub parameters: toml::Table,
}

/// Writes one CSV per table plus `<name>.manifest.toml` into `dir`.
pub fn write_outputs(dir: &Path, out: &PresetOutput) -> Result<Vec<PathBuf>, ExperimentError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for table in &out.tables {
        let path = dir.join(format!("{}.csv", table.name));
        std::fs::write(&path, table.to_csv()?)?;
        written.push(path);
    }
    let manifest = Manifest {
        experiment: out.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: out.seed,
        outputs: out.tables.iter().map(|t| format!("{}.csv", t.name)).collect(),
        parameters: out.parameters.clone(),
    };
    let path = dir.join(format!("{}.manifest.toml", out.name));
    let text = toml::to_string_pretty(&manifest).map_err(|e| ExperimentError::Io(e.to_string()))?;
    std::fs::write(&path, text)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(44.0), "44");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333");
        assert_eq!(format_number(123456.789012), "123456.789");
        assert_eq!(format_number(-2.5), "-2.5");
        assert_eq!(format_number(1.5e-7), "1.5e-7");
        assert_eq!(format_number(6.02214076e23), "6.02214076e23");
        assert_eq!(format_number(f64::NAN), "");
    }

    #[test]
    fn csv_rendering() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec![1.0, f64::NAN]);
        t.push(vec![0.1, 2.0]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n1,\n0.1,2\n");
        assert_eq!(t.column("b").unwrap()[1], 2.0);
    }
}
