//! Finite-volume electrostatics on rectilinear grids.
//!
//! The unknowns are node potentials. Each cell carries one permittivity, and
//! the flux coefficient of a grid edge collects the quarter of every adjacent
//! cell's cross-section, weighted by that cell's permittivity. Because material
//! boundaries always fall on grid planes this is the exact series/parallel
//! combination of the adjacent cells. The discrete energy `1/2 phi^T A phi`
//! is reproduced exactly by [`FieldSolution::energy`], so charges, energies
//! and capacitances are mutually consistent.

mod capacitance;
mod dump;
pub mod grid;
pub(crate) mod operator;
mod slice;
mod solution;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use capacitance::{capacitance_matrix, qubit_mode_voltages, CapacitanceMatrix, CapacitanceRun};
pub use dump::{read_field_dump, write_field_dump, FieldDumpHeader};
pub use grid::{build_grid, feature_grid, GridPolicy, RectilinearGrid, SurfaceElement};
pub use slice::{field_slice, FieldSlice, SlicePlane};
pub use solution::FieldSolution;

use crate::defaults;
use operator::{pcg, Preconditioner};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("net `{0}` not found")]
    NetNotFound(String),
    #[error("invalid drive: {0}")]
    InvalidDrive(String),
    #[error("mesh needs {nodes} nodes, above the cap of {cap}")]
    MeshBudgetExceeded { nodes: usize, cap: usize },
    #[error("cell aspect ratio {aspect:.1} exceeds the configured maximum {max}")]
    AspectRatioExceeded { aspect: f64, max: f64 },
    #[error("invalid mesh policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),
    #[error("slice plane {axis}={position} um lies outside the domain")]
    PlaneOutsideDomain { axis: crate::geometry::Axis, position: f64 },
    #[error("no conductor nets to drive")]
    NoNets,
    #[error("malformed field dump: {0}")]
    Dump(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Net voltages, volts. Nets not listed are held at 0 V.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DriveVector(pub BTreeMap<String, f64>);

impl DriveVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, net: &str, volts: f64) -> Self {
        self.0.insert(net.to_string(), volts);
        self
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|(k, v)| (k.clone(), v * factor)).collect())
    }

    /// Per-electrical-net voltages for `grid`.
    pub fn resolve(&self, grid: &RectilinearGrid) -> Result<Vec<f64>, SolverError> {
        let g = grid.geometry();
        let mut volts = vec![0.0; g.electrical_nets().len()];
        for (name, &v) in &self.0 {
            if !v.is_finite() {
                return Err(SolverError::InvalidDrive(format!("{name} = {v}")));
            }
            let i = g
                .net_index(name)
                .ok_or_else(|| SolverError::NetNotFound(name.clone()))?;
            volts[i] = v;
        }
        Ok(volts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerKind {
    /// Modified incomplete Cholesky, zero fill.
    #[default]
    Mic,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Relative residual `|b - A x| / |b|` at which iteration stops.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Fixed-order reductions, so repeated runs are bit-identical.
    pub deterministic: bool,
    pub preconditioner: PreconditionerKind,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: defaults::SOLVER_TOLERANCE,
            max_iter: defaults::SOLVER_MAX_ITER,
            deterministic: true,
            preconditioner: PreconditionerKind::Mic,
        }
    }
}

impl SolverSettings {
    fn validate(&self) -> Result<(), SolverError> {
        if !(self.tolerance > 0.0) || self.tolerance >= 1.0 {
            return Err(SolverError::InvalidSettings(format!(
                "tolerance must be in (0, 1), got {}",
                self.tolerance
            )));
        }
        if self.max_iter == 0 {
            return Err(SolverError::InvalidSettings("max_iter must be > 0".into()));
        }
        Ok(())
    }
}

/// Solve for the potential with conductors held at `drive`.
pub fn solve(
    grid: &Arc<RectilinearGrid>,
    drive: &DriveVector,
    settings: &SolverSettings,
) -> Result<FieldSolution, SolverError> {
    let volts = drive.resolve(grid)?;
    solve_nets(grid, &volts, settings, None)
}

/// As [`solve`], with per-electrical-net voltages and an optional initial guess.
pub fn solve_nets(
    grid: &Arc<RectilinearGrid>,
    volts: &[f64],
    settings: &SolverSettings,
    guess: Option<&[f64]>,
) -> Result<FieldSolution, SolverError> {
    settings.validate()?;
    let op = grid.operator();
    let nets = grid.raw_node_nets();
    let mut x: Vec<f64> = match guess {
        Some(g) => g.to_vec(),
        None => vec![0.0; grid.node_count()],
    };
    for (n, xn) in x.iter_mut().enumerate() {
        if op.fixed[n] {
            let net = nets[n];
            *xn = if net == grid::NO_NET { 0.0 } else { volts[net as usize] };
        }
    }
    let precon = match settings.preconditioner {
        PreconditionerKind::Mic => Preconditioner::Mic(op.mic()),
        PreconditionerKind::Jacobi => Preconditioner::Jacobi,
    };
    let (iterations, residual) = pcg(op, &op.fixed, &precon, &mut x, settings)?;
    Ok(FieldSolution::new(grid.clone(), x, volts.to_vec(), residual, iterations))
}

/// Solve with arbitrary prescribed node values (`Some(v)` fixes a node) on top
/// of the grid's own conductors and grounded faces, which keep their drive of
/// 0 V unless prescribed. Used for manufactured-solution checks.
pub fn solve_prescribed(
    grid: &Arc<RectilinearGrid>,
    prescribed: &[Option<f64>],
    settings: &SolverSettings,
) -> Result<FieldSolution, SolverError> {
    settings.validate()?;
    if prescribed.len() != grid.node_count() {
        return Err(SolverError::InvalidDrive(format!(
            "expected {} node values, got {}",
            grid.node_count(),
            prescribed.len()
        )));
    }
    let op = grid.operator();
    let fixed: Vec<bool> = prescribed
        .iter()
        .zip(&op.fixed)
        .map(|(p, &f)| p.is_some() || f)
        .collect();
    let mut x: Vec<f64> = prescribed.iter().map(|p| p.unwrap_or(0.0)).collect();
    let precon = match settings.preconditioner {
        PreconditionerKind::Mic => Preconditioner::Owned(op.build_mic(&fixed)),
        PreconditionerKind::Jacobi => Preconditioner::Jacobi,
    };
    let (iterations, residual) = pcg(op, &fixed, &precon, &mut x, settings)?;
    let volts = vec![0.0; grid.geometry().electrical_nets().len()];
    Ok(FieldSolution::new(grid.clone(), x, volts, residual, iterations))
}
