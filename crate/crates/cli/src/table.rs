//! Result tables and their CSV/JSON serialization.
//!
//! Floats are written with 17 significant digits (`{:.16e}`) so that a
//! table round-trips every `f64` exactly and reruns are byte-identical.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv_text(&self) -> String {
        match self {
            Cell::Float(v) => float_text(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json_text(&self) -> String {
        match self {
            Cell::Float(v) if v.is_finite() => float_text(*v),
            Cell::Float(_) => "null".into(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => serde_json::to_string(s).expect("string"),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

pub fn float_text(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

/// Run metadata attached to every table.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub scenario: String,
    /// SHA-256 of the canonical resolved scenario.
    pub scenario_hash: String,
    pub schedule: Vec<f64>,
    /// `(name, value)` in a fixed order.
    pub tolerances: Vec<(String, f64)>,
}

impl Provenance {
    pub fn json(&self) -> String {
        let mut s = String::new();
        write!(s, "{{\"scenario\":{},", serde_json::to_string(&self.scenario).expect("string")).unwrap();
        write!(s, "\"scenario_hash\":\"{}\",", self.scenario_hash).unwrap();
        let sched: Vec<String> = self.schedule.iter().map(|e| float_text(*e)).collect();
        write!(s, "\"schedule\":[{}],", sched.join(",")).unwrap();
        let tol: Vec<String> = self
            .tolerances
            .iter()
            .map(|(k, v)| format!("{}:{}", serde_json::to_string(k).expect("string"), float_text(*v)))
            .collect();
        write!(s, "\"tolerances\":{{{}}}}}", tol.join(",")).unwrap();
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self { name: name.into(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv_text))?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }

    pub fn json(&self, provenance: &Provenance) -> String {
        let mut s = String::new();
        writeln!(s, "{{\n  \"table\": {},", serde_json::to_string(&self.name).expect("string")).unwrap();
        let cols: Vec<String> = self.columns.iter().map(|c| format!("\"{c}\"")).collect();
        writeln!(s, "  \"columns\": [{}],", cols.join(", ")).unwrap();
        writeln!(s, "  \"provenance\": {},", provenance.json()).unwrap();
        s.push_str("  \"rows\": [");
        for (i, row) in self.rows.iter().enumerate() {
            s.push_str(if i == 0 { "\n    {" } else { ",\n    {" });
            let fields: Vec<String> =
                self.columns.iter().zip(row).map(|(c, v)| format!("\"{c}\": {}", v.json_text())).collect();
            s.push_str(&fields.join(", "));
            s.push('}');
        }
        s.push_str(if self.rows.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" });
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

/// Writes each table as `<name>.csv` and/or `<name>.json` under `dir`.
/// CSV output also writes the provenance block to `provenance.json`.
pub fn emit_tables(tables: &[ResultTable], dir: &Path, format: Format, provenance: &Provenance) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for t in tables {
        if matches!(format, Format::Csv | Format::Both) {
            let p = dir.join(format!("{}.csv", t.name));
            std::fs::write(&p, t.csv()?)?;
            paths.push(p);
        }
        if matches!(format, Format::Json | Format::Both) {
            let p = dir.join(format!("{}.json", t.name));
            std::fs::write(&p, t.json(provenance))?;
            paths.push(p);
        }
    }
    if matches!(format, Format::Csv) {
        let p = dir.join("provenance.json");
        std::fs::write(&p, provenance.json() + "\n")?;
        paths.push(p);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn prov() -> Provenance {
        Provenance {
            scenario: "t".into(),
            scenario_hash: "00".into(),
            schedule: vec![0.5, 0.25],
            tolerances: vec![("identity".into(), 1e-9)],
        }
    }

    #[test]
    fn floats_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.12345679, f64::MIN_POSITIVE] {
            assert_eq!(float_text(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(float_text(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = ResultTable::new("shadow", &["epsilon", "component", "sup_distance"]);
        t.push(vec![0.5.into(), "XX".into(), 0.25.into()]);
        let text = String::from_utf8(t.csv().unwrap()).unwrap();
        assert_eq!(text, "epsilon,component,sup_distance\n5.0000000000000000e-1,XX,2.5000000000000000e-1\n");
    }

    #[test]
    fn json_is_valid_and_mirrors_rows() {
        let mut t = ResultTable::new("x", &["epsilon", "ok", "value"]);
        t.push(vec![0.5.into(), true.into(), f64::NAN.into()]);
        let v: Value = serde_json::from_str(&t.json(&prov())).unwrap();
        assert_eq!(v["rows"][0]["epsilon"], 0.5);
        assert_eq!(v["rows"][0]["ok"], true);
        assert!(v["rows"][0]["value"].is_null());
        assert_eq!(v["provenance"]["tolerances"]["identity"], 1e-9);
    }
}
