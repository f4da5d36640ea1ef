//! Raw potential dumps: a little-endian `f64` array plus a TOML header.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::solution::FieldSolution;
use super::SolverError;
use crate::geometry::Axis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDumpHeader {
    /// Node counts along x, y, z. The array is ordered with z fastest.
    pub dims: [usize; 3],
    /// Name of the binary file, relative to the header.
    pub data: String,
    pub dtype: String,
    pub residual: f64,
    pub iterations: usize,
    /// Net voltages, volts.
    pub drive: BTreeMap<String, f64>,
    /// Grid lines, meters.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

/// Write `<stem>.toml` and `<stem>.bin`; returns both paths.
pub fn write_field_dump(solution: &FieldSolution, stem: &Path) -> Result<(PathBuf, PathBuf), SolverError> {
    let grid = solution.grid();
    let bin = stem.with_extension("bin");
    let header_path = stem.with_extension("toml");
    let drive = grid
        .geometry()
        .electrical_nets()
        .iter()
        .zip(solution.drive())
        .map(|(n, v)| (n.name.clone(), *v))
        .collect();
    let header = FieldDumpHeader {
        dims: grid.dims(),
        data: bin.file_name().unwrap().to_string_lossy().into_owned(),
        dtype: "f64le".into(),
        residual: solution.residual(),
        iterations: solution.iterations(),
        drive,
        x: grid.lines(Axis::X).to_vec(),
        y: grid.lines(Axis::Y).to_vec(),
        z: grid.lines(Axis::Z).to_vec(),
    };
    let bytes: Vec<u8> = solution.potential().iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&bin, bytes)?;
    let text = toml::to_string(&header).map_err(|e| SolverError::Dump(e.to_string()))?;
    fs::write(&header_path, text)?;
    Ok((header_path, bin))
}

/// Read a dump back from its header path.
pub fn read_field_dump(header_path: &Path) -> Result<(FieldDumpHeader, Vec<f64>), SolverError> {
    let text = fs::read_to_string(header_path)?;
    let header: FieldDumpHeader = toml::from_str(&text).map_err(|e| SolverError::Dump(e.to_string()))?;
    let bin = header_path.with_file_name(&header.data);
    let bytes = fs::read(bin)?;
    let n: usize = header.dims.iter().product();
    if bytes.len() != 8 * n {
        return Err(SolverError::Dump(format!(
            "expected {} bytes for {:?} nodes, found {}",
            8 * n,
            header.dims,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, values))
}
