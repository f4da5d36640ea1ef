use std::str::FromStr;

use serde::Serialize;

use super::solution::FieldSolution;
use super::SolverError;
use crate::constants::MICRON;
use crate::geometry::Axis;

/// A plane normal to `axis` at `position` (um), sampled on a regular
/// `samples.0 x samples.1` lattice over `window` (um, defaults to the domain).
#[derive(Debug, Clone, PartialEq)]
pub struct SlicePlane {
    pub axis: Axis,
    pub position: f64,
    pub samples: (usize, usize),
    pub window: Option<[[f64; 2]; 2]>,
}

impl SlicePlane {
    pub fn new(axis: Axis, position: f64) -> Self {
        Self {
            axis,
            position,
            samples: (300, 150),
            window: None,
        }
    }

    pub fn with_samples(mut self, nu: usize, nv: usize) -> Self {
        self.samples = (nu, nv);
        self
    }

    pub fn with_window(mut self, u: [f64; 2], v: [f64; 2]) -> Self {
        self.window = Some([u, v]);
        self
    }
}

impl FromStr for SlicePlane {
    type Err = String;

    /// Parses `y=0`, `z=2.5`, ...
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, v) = s
            .split_once('=')
            .ok_or_else(|| format!("expected AXIS=POSITION, got `{s}`"))?;
        let axis = match a.trim() {
            "x" => Axis::X,
            "y" => Axis::Y,
            "z" => Axis::Z,
            other => return Err(format!("unknown axis `{other}`")),
        };
        let position = v
            .trim()
            .parse()
            .map_err(|_| format!("invalid position `{}`", v.trim()))?;
        Ok(Self::new(axis, position))
    }
}

/// Regularly sampled `|E|` (V/m) on a plane. `values[iv][iu]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSlice {
    pub axis: Axis,
    pub position: f64,
    /// In-plane axes, in `axis.others()` order.
    pub u_axis: Axis,
    pub v_axis: Axis,
    /// Sample coordinates, um.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl FieldSlice {
    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// Long-format CSV: `<u>_um,<v>_um,E_V_per_m`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}_um,{}_um,E_V_per_m\n", self.u_axis, self.v_axis);
        for (iv, row) in self.values.iter().enumerate() {
            for (iu, e) in row.iter().enumerate() {
                out.push_str(&format!("{},{},{:e}\n", self.u[iu], self.v[iv], e));
            }
        }
        out
    }
}

/// Sample `|E|` on a plane. Points inside conductors read exactly zero.
pub fn field_slice(solution: &FieldSolution, plane: &SlicePlane) -> Result<FieldSlice, SolverError> {
    let grid = solution.grid();
    let g = grid.geometry();
    let dom = g.domain();
    let a = plane.axis.index();
    if !(plane.position >= dom.min[a] && plane.position <= dom.max[a]) {
        return Err(SolverError::PlaneOutsideDomain {
            axis: plane.axis,
            position: plane.position,
        });
    }
    let (ua, va) = plane.axis.others();
    let [wu, wv] = plane.window.unwrap_or([
        [dom.min[ua.index()], dom.max[ua.index()]],
        [dom.min[va.index()], dom.max[va.index()]],
    ]);
    let (nu, nv) = (plane.samples.0.max(2), plane.samples.1.max(2));
    let lattice = |w: [f64; 2], n: usize| -> Vec<f64> {
        (0..n)
            .map(|i| w[0] + (w[1] - w[0]) * (i as f64 + 0.5) / n as f64)
            .collect()
    };
    let u = lattice(wu, nu);
    let v = lattice(wv, nv);
    let cell_a = grid
        .locate_cell(plane.axis, plane.position * MICRON)
        .expect("position checked against the domain");
    let conductors: Vec<_> = g
        .solids()
        .iter()
        .enumerate()
        .filter(|(s, _)| g.solid_net(*s).is_some())
        .map(|(_, s)| s.bounds)
        .collect();
    let values = v
        .iter()
        .map(|&pv| {
            u.iter()
                .map(|&pu| {
                    let mut p = [0.0; 3];
                    p[a] = plane.position;
                    p[ua.index()] = pu;
                    p[va.index()] = pv;
                    if conductors.iter().any(|b| b.contains(p)) {
                        return 0.0;
                    }
                    let mut idx = [0; 3];
                    idx[a] = cell_a;
                    idx[ua.index()] = grid.locate_cell(ua, pu * MICRON).unwrap_or(0);
                    idx[va.index()] = grid.locate_cell(va, pv * MICRON).unwrap_or(0);
                    if grid.cell_is_metal(grid.cell_index(idx[0], idx[1], idx[2])) {
                        return 0.0;
                    }
                    let e = solution.cell_field(idx[0], idx[1], idx[2]);
                    (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt()
                })
                .collect()
        })
        .collect();
    Ok(FieldSlice {
        axis: plane.axis,
        position: plane.position,
        u_axis: ua,
        v_axis: va,
        u,
        v,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plane_specs() {
        let p: SlicePlane = "y=0".parse().unwrap();
        assert_eq!((p.axis, p.position), (Axis::Y, 0.0));
        let p: SlicePlane = " z = 2.5".parse().unwrap();
        assert_eq!((p.axis, p.position), (Axis::Z, 2.5));
        assert!("w=1".parse::<SlicePlane>().is_err());
        assert!("y".parse::<SlicePlane>().is_err());
        assert!("y=abc".parse::<SlicePlane>().is_err());
    }
}
