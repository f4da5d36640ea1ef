use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::grid::RectilinearGrid;
use super::solution::FieldSolution;
use super::{solve_nets, SolverError, SolverSettings};
use crate::geometry::NetRole;

/// Maxwell capacitance matrix over the electrical nets, farads.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacitanceMatrix {
    pub nets: Vec<String>,
    pub roles: Vec<NetRole>,
    /// Symmetrized entries.
    pub entries: Vec<Vec<f64>>,
    /// `raw[i][j]`: charge on net j with net i at 1 V and all others at 0 V.
    pub raw: Vec<Vec<f64>>,
    /// Largest `|C_ij - C_ji| / max(|C_ij|, |C_ji|)` before symmetrization.
    pub asymmetry: f64,
}

impl CapacitanceMatrix {
    /// Build from raw solve charges, symmetrizing by averaging.
    pub fn from_raw(nets: Vec<String>, roles: Vec<NetRole>, raw: Vec<Vec<f64>>) -> Self {
        let n = raw.len();
        let mut entries = raw.clone();
        let mut asymmetry: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (raw[i][j], raw[j][i]);
                let scale = a.abs().max(b.abs());
                if scale > 0.0 {
                    asymmetry = asymmetry.max((a - b).abs() / scale);
                }
                let m = 0.5 * (a + b);
                entries[i][j] = m;
                entries[j][i] = m;
            }
        }
        Self {
            nets,
            roles,
            entries,
            raw,
            asymmetry,
        }
    }

    pub fn len(&self) -> usize {
        self.nets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nets.is_empty()
    }

    pub fn index(&self, net: &str) -> Option<usize> {
        self.nets.iter().position(|n| n == net)
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.entries[self.index(a)?][self.index(b)?])
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.entries[i].iter().sum()
    }

    /// First net with the given role.
    pub fn net_with_role(&self, role: NetRole) -> Option<&str> {
        self.roles
            .iter()
            .position(|&r| r == role)
            .map(|i| self.nets[i].as_str())
    }

    /// Multiply every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |m: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            m.iter().map(|r| r.iter().map(|v| v * factor).collect()).collect()
        };
        Self {
            entries: scale(&self.entries),
            raw: scale(&self.raw),
            ..self.clone()
        }
    }
}

/// A capacitance extraction together with the unit-drive solutions behind it.
#[derive(Debug, Clone)]
pub struct CapacitanceRun {
    pub matrix: CapacitanceMatrix,
    /// Solution `i` has net `i` at 1 V and all others at 0 V.
    pub solutions: Vec<FieldSolution>,
}

impl CapacitanceRun {
    /// The field of the qubit mode between two pads (see
    /// [`qubit_mode_voltages`]), assembled by superposition and then polished
    /// by a warm-started solve.
    pub fn qubit_mode_solution(
        &self,
        pad_a: &str,
        pad_b: &str,
        settings: &SolverSettings,
    ) -> Result<FieldSolution, SolverError> {
        let (va, vb) = qubit_mode_voltages(&self.matrix, pad_a, pad_b)?;
        let ia = self.matrix.index(pad_a).unwrap();
        let ib = self.matrix.index(pad_b).unwrap();
        let guess = self.solutions[ia].combine(va, &self.solutions[ib], vb);
        let grid = guess.grid().clone();
        let volts = guess.drive().to_vec();
        solve_nets(&grid, &volts, settings, Some(guess.potential()))
    }
}

/// One solve per electrical net at 1 V with every other net grounded.
/// Solves run concurrently; results are identical to a sequential run.
pub fn capacitance_matrix(
    grid: &Arc<RectilinearGrid>,
    settings: &SolverSettings,
) -> Result<CapacitanceRun, SolverError> {
    let g = grid.geometry();
    let n = g.electrical_nets().len();
    if n == 0 {
        return Err(SolverError::NoNets);
    }
    // Build the shared operator and preconditioner once, up front.
    grid.operator().mic();
    let solutions: Vec<FieldSolution> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut volts = vec![0.0; n];
            volts[i] = 1.0;
            solve_nets(grid, &volts, settings, None)
        })
        .collect::<Result<_, _>>()?;
    let raw: Vec<Vec<f64>> = solutions.iter().map(FieldSolution::charges).collect();
    let nets = g.electrical_nets().iter().map(|e| e.name.clone()).collect();
    let roles = g.electrical_nets().iter().map(|e| e.role).collect();
    Ok(CapacitanceRun {
        matrix: CapacitanceMatrix::from_raw(nets, roles, raw),
        solutions,
    })
}

/// Pad voltages of the qubit mode: the two pads float with charges `+q` and
/// `-q` while every other net is grounded, normalized to `V_a - V_b = 1`.
/// Without any path to ground the mode is simply `(1, 0)`.
pub fn qubit_mode_voltages(
    cmat: &CapacitanceMatrix,
    pad_a: &str,
    pad_b: &str,
) -> Result<(f64, f64), SolverError> {
    let ia = cmat
        .index(pad_a)
        .ok_or_else(|| SolverError::NetNotFound(pad_a.into()))?;
    let ib = cmat
        .index(pad_b)
        .ok_or_else(|| SolverError::NetNotFound(pad_b.into()))?;
    let c = &cmat.entries;
    let (caa, cab, cbb) = (c[ia][ia], c[ia][ib], c[ib][ib]);
    let det = caa * cbb - cab * cab;
    if !(det > 1e-9 * caa * cbb) {
        return Ok((1.0, 0.0));
    }
    // C_ff^{-1} (1, -1)
    let va = (cbb + cab) / det;
    let vb = -(caa + cab) / det;
    let s = va - vb;
    Ok((va / s, vb / s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(raw: Vec<Vec<f64>>) -> CapacitanceMatrix {
        let n = raw.len();
        CapacitanceMatrix::from_raw(
            (0..n).map(|i| format!("n{i}")).collect(),
            vec![NetRole::Other; n],
            raw,
        )
    }

    #[test]
    fn symmetrization_and_asymmetry() {
        let m = matrix(vec![vec![2.0, -1.0], vec![-1.02, 3.0]]);
        assert!((m.asymmetry - 0.02 / 1.02).abs() < 1e-12);
        assert_eq!(m.entries[0][1], m.entries[1][0]);
        assert!((m.entries[0][1] + 1.01).abs() < 1e-12);
    }

    #[test]
    fn qubit_mode_splits_by_ground_capacitance() {
        // C_ag = 1, C_bg = 3, C_ab = 5.
        let m = matrix(vec![vec![6.0, -5.0], vec![-5.0, 8.0]]);
        let (va, vb) = qubit_mode_voltages(&m, "n0", "n1").unwrap();
        assert!((va - vb - 1.0).abs() < 1e-12);
        // Equal and opposite charge on a series C_ag - C_bg pair: va * 1 = -vb * 3.
        assert!((va * 1.0 + vb * 3.0).abs() < 1e-12);
        let floating = matrix(vec![vec![5.0, -5.0], vec![-5.0, 5.0]]);
        assert_eq!(qubit_mode_voltages(&floating, "n0", "n1").unwrap(), (1.0, 0.0));
    }
}
