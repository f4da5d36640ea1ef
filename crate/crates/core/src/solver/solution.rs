use std::sync::Arc;

use super::grid::RectilinearGrid;
use super::SolverError;
use crate::constants::VACUUM_PERMITTIVITY;
use crate::geometry::Axis;

/// Node potentials for one drive configuration.
#[derive(Debug, Clone)]
pub struct FieldSolution {
    grid: Arc<RectilinearGrid>,
    potential: Vec<f64>,
    drive: Vec<f64>,
    residual: f64,
    iterations: usize,
}

impl FieldSolution {
    pub(crate) fn new(
        grid: Arc<RectilinearGrid>,
        potential: Vec<f64>,
        drive: Vec<f64>,
        residual: f64,
        iterations: usize,
    ) -> Self {
        Self {
            grid,
            potential,
            drive,
            residual,
            iterations,
        }
    }

    pub fn grid(&self) -> &Arc<RectilinearGrid> {
        &self.grid
    }

    /// Potential per node, volts, in `(i * ny + j) * nz + k` order.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Voltage of each electrical net.
    pub fn drive(&self) -> &[f64] {
        &self.drive
    }

    /// Achieved relative residual.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Cell-averaged squared field components `(<Ex^2>, <Ey^2>, <Ez^2>)`,
    /// each the mean over the four cell edges parallel to that axis.
    pub fn cell_field_squared(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let g = &self.grid;
        let phi = |a: usize, b: usize, c: usize| self.potential[g.node_index(a, b, c)];
        let (hx, hy, hz) = (g.width(Axis::X, i), g.width(Axis::Y, j), g.width(Axis::Z, k));
        let mut ex = 0.0;
        let mut ey = 0.0;
        let mut ez = 0.0;
        for s in 0..2 {
            for t in 0..2 {
                ex += (phi(i + 1, j + s, k + t) - phi(i, j + s, k + t)).powi(2);
                ey += (phi(i + s, j + 1, k + t) - phi(i + s, j, k + t)).powi(2);
                ez += (phi(i + s, j + t, k + 1) - phi(i + s, j + t, k)).powi(2);
            }
        }
        [
            0.25 * ex / (hx * hx),
            0.25 * ey / (hy * hy),
            0.25 * ez / (hz * hz),
        ]
    }

    /// Field at the cell center (the gradient of the trilinear interpolant).
    pub fn cell_field(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let g = &self.grid;
        let phi = |a: usize, b: usize, c: usize| self.potential[g.node_index(a, b, c)];
        let (hx, hy, hz) = (g.width(Axis::X, i), g.width(Axis::Y, j), g.width(Axis::Z, k));
        let mut e = [0.0; 3];
        for s in 0..2 {
            for t in 0..2 {
                e[0] -= phi(i + 1, j + s, k + t) - phi(i, j + s, k + t);
                e[1] -= phi(i + s, j + 1, k + t) - phi(i + s, j, k + t);
                e[2] -= phi(i + s, j + t, k + 1) - phi(i + s, j + t, k);
            }
        }
        [0.25 * e[0] / hx, 0.25 * e[1] / hy, 0.25 * e[2] / hz]
    }

    /// Electrostatic energy stored in one cell, joules.
    pub fn cell_energy(&self, i: usize, j: usize, k: usize) -> f64 {
        let g = &self.grid;
        let eps = g.geometry().epsilon(g.cell_material_at(i, j, k));
        let vol = g.width(Axis::X, i) * g.width(Axis::Y, j) * g.width(Axis::Z, k);
        let e2 = self.cell_field_squared(i, j, k);
        0.5 * VACUUM_PERMITTIVITY * eps * vol * (e2[0] + e2[1] + e2[2])
    }

    /// Sum of [`Self::cell_energy`] over cells accepted by `keep(i, j, k)`,
    /// in a fixed order.
    pub fn energy_where(&self, keep: impl Fn(usize, usize, usize) -> bool + Sync) -> f64 {
        use rayon::prelude::*;
        let d = self.grid.dims();
        let partial: Vec<f64> = (0..d[0] - 1)
            .into_par_iter()
            .map(|i| {
                let mut s = 0.0;
                for j in 0..d[1] - 1 {
                    for k in 0..d[2] - 1 {
                        if keep(i, j, k) {
                            s += self.cell_energy(i, j, k);
                        }
                    }
                }
                s
            })
            .collect();
        partial.iter().sum()
    }

    /// Total energy `1/2 eps0 phi^T A phi`, joules.
    pub fn energy(&self) -> f64 {
        self.energy_where(|_, _, _| true)
    }

    /// Charge on an electrical net (by net name), coulombs: the flux out of
    /// the dual cells of all its nodes.
    pub fn charge_on_net(&self, net: &str) -> Result<f64, SolverError> {
        let idx = self
            .grid
            .geometry()
            .net_index(net)
            .ok_or_else(|| SolverError::NetNotFound(net.to_string()))?;
        Ok(self.charges()[idx])
    }

    /// Charges of all electrical nets, coulombs.
    pub fn charges(&self) -> Vec<f64> {
        let op = self.grid.operator();
        let nets = self.grid.raw_node_nets();
        let mut q = vec![0.0; self.drive.len()];
        for (node, &net) in nets.iter().enumerate() {
            if net != super::grid::NO_NET {
                q[net as usize] += op.apply_row(&self.potential, node);
            }
        }
        q.iter().map(|v| v * VACUUM_PERMITTIVITY).collect()
    }

    /// `phi(a) * self + phi(b) * other`, sharing the grid. Residual metadata is
    /// a bound from the inputs.
    pub(crate) fn combine(&self, a: f64, other: &FieldSolution, b: f64) -> FieldSolution {
        let potential = self
            .potential
            .iter()
            .zip(&other.potential)
            .map(|(x, y)| a * x + b * y)
            .collect();
        let drive = self.drive.iter().zip(&other.drive).map(|(x, y)| a * x + b * y).collect();
        FieldSolution {
            grid: self.grid.clone(),
            potential,
            drive,
            residual: self.residual.max(other.residual),
            iterations: 0,
        }
    }
}
