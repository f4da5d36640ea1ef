//! Measured qubit parameters, one CSV row per qubit.
//!
//! Header: `qubit,f_r_GHz,f_q_GHz,eta_MHz,chi_MHz,T1_us,T2s_us,T2e_us`. Blank
//! cells (or `---`) mark values that were not measured.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

pub const HEADER: [&str; 8] = [
    "qubit", "f_r_GHz", "f_q_GHz", "eta_MHz", "chi_MHz", "T1_us", "T2s_us", "T2e_us",
];

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    /// `row` counts data rows from 1.
    #[error("row {row} ({label}): {message}")]
    Row {
        row: usize,
        label: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasuredQubitRecord {
    pub label: String,
    /// Readout resonator frequency, GHz.
    pub f_r: f64,
    /// Qubit frequency, GHz.
    pub f_q: f64,
    /// Anharmonicity `f01 - f12`, MHz.
    pub eta: Option<f64>,
    /// Dispersive shift, MHz.
    pub chi: Option<f64>,
    /// Relaxation and dephasing times, us.
    pub t1: Option<f64>,
    pub t2_star: Option<f64>,
    pub t2_echo: Option<f64>,
}

impl MeasuredQubitRecord {
    pub fn new(label: &str, f_r: f64, f_q: f64) -> Self {
        Self {
            label: label.into(),
            f_r,
            f_q,
            eta: None,
            chi: None,
            t1: None,
            t2_star: None,
            t2_echo: None,
        }
    }

    pub fn with_eta(mut self, eta_mhz: f64) -> Self {
        self.eta = Some(eta_mhz);
        self
    }

    pub fn with_chi(mut self, chi_mhz: f64) -> Self {
        self.chi = Some(chi_mhz);
        self
    }

    pub fn with_t1(mut self, t1_us: f64) -> Self {
        self.t1 = Some(t1_us);
        self
    }

    /// Cells in [`HEADER`] order; `None` prints blank.
    pub fn cells(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.label.clone(),
            self.f_r.to_string(),
            self.f_q.to_string(),
            opt(self.eta),
            opt(self.chi),
            opt(self.t1),
            opt(self.t2_star),
            opt(self.t2_echo),
        ]
    }
}

fn parse_cell(cell: &str) -> Result<Option<f64>, String> {
    let s = cell.trim();
    if s.is_empty() || s.chars().all(|c| c == '-') {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(v.is_finite() && v > 0.0) {
        return Err(format!("`{s}` must be positive"));
    }
    Ok(Some(v))
}

/// Parse records; extra columns are ignored.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<MeasuredQubitRecord>, RecordError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(None)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col: Vec<usize> = HEADER
        .iter()
        .map(|h| {
            headers
                .iter()
                .position(|x| x == *h)
                .ok_or_else(|| RecordError::MissingColumn((*h).into()))
        })
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let label = rec.get(col[0]).unwrap_or("").to_string();
        let err = |message: String| RecordError::Row {
            row,
            label: label.clone(),
            message,
        };
        let mut v = [None; 8];
        for k in 1..8 {
            v[k] = parse_cell(rec.get(col[k]).unwrap_or(""))
                .map_err(|m| err(format!("{}: {m}", HEADER[k])))?;
        }
        let f_r = v[1].ok_or_else(|| err("f_r_GHz is required".into()))?;
        let f_q = v[2].ok_or_else(|| err("f_q_GHz is required".into()))?;
        if label.is_empty() {
            return Err(err("qubit label is empty".into()));
        }
        out.push(MeasuredQubitRecord {
            label,
            f_r,
            f_q,
            eta: v[3],
            chi: v[4],
            t1: v[5],
            t2_star: v[6],
            t2_echo: v[7],
        });
    }
    Ok(out)
}

pub fn read_records_path(path: &Path) -> Result<Vec<MeasuredQubitRecord>, RecordError> {
    read_records(std::fs::File::open(path)?)
}

pub fn write_records<W: Write>(writer: W, records: &[MeasuredQubitRecord]) -> Result<(), RecordError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record(r.cells())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "qubit,f_r_GHz,f_q_GHz,eta_MHz,chi_MHz,T1_us,T2s_us,T2e_us\n\
                          #1Q1,6.856,4.8,222.1,,27.7,19.5,36.8\n\
                          Q3,7.166,4.412,---,0.65,136.3,42.0,176.0\n";

    #[test]
    fn blanks_and_dashes_are_missing() {
        let r = read_records(SAMPLE.as_bytes()).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].label, "#1Q1");
        assert_eq!(r[0].eta, Some(222.1));
        assert_eq!(r[0].chi, None);
        assert_eq!(r[1].eta, None);
        assert_eq!(r[1].chi, Some(0.65));
    }

    #[test]
    fn round_trip() {
        let r = read_records(SAMPLE.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_records(&mut buf, &r).unwrap();
        let back = read_records(buf.as_slice()).unwrap();
        assert_eq!(r, back);
    }

    #[test]
    fn errors_name_the_row() {
        let bad = "qubit,f_r_GHz,f_q_GHz,eta_MHz,chi_MHz,T1_us,T2s_us,T2e_us\nA,7,4.5,,,,,\nB,7,abc,,,,,\n";
        let e = read_records(bad.as_bytes()).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("row 2") && msg.contains("B") && msg.contains("f_q_GHz"), "{msg}");
        let neg = "qubit,f_r_GHz,f_q_GHz,eta_MHz,chi_MHz,T1_us,T2s_us,T2e_us\nA,7,4.5,-3,,,,\n";
        assert!(read_records(neg.as_bytes()).is_err());
        let missing = "qubit,f_r_GHz\nA,7\n";
        assert!(matches!(read_records(missing.as_bytes()), Err(RecordError::MissingColumn(_))));
    }

    #[test]
    fn shipped_tables_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        for (name, rows) in [("flipmon.csv", 12), ("planar_transmon.csv", 5), ("flip_chip_coupled.csv", 4)] {
            let r = read_records_path(&dir.join(name)).unwrap();
            assert_eq!(r.len(), rows, "{name}");
            assert!(r.iter().all(|q| q.f_q < q.f_r));
        }
    }
}
