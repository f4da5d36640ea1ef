//! Rectilinear (tensor-product) grids fitted to a device geometry.
//!
//! Potentials live on nodes, materials on cells. Conductor solids mark the
//! nodes inside their closed boxes; films thinner than the sheet threshold are
//! collapsed onto the single node plane of their exposed face.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::operator::Operator;
use super::SolverError;
use crate::constants::MICRON;
use crate::geometry::{Axis, ChipSide, MaterialKind, SurfaceClass, ValidatedGeometry};

pub(crate) const NO_NET: u32 = u32::MAX;
const COORD_TOL: f64 = 1e-7;

/// Meshing policy. Lengths in micrometers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridPolicy {
    /// Cell size at surfaces along z (and laterally unless overridden).
    pub min_cell: f64,
    /// Cell size at surfaces along x and y; defaults to `min_cell`.
    pub min_cell_lateral: Option<f64>,
    /// Distance from each surface over which cells stay at the minimum size.
    pub refine_near_surfaces: f64,
    /// Largest allowed ratio between adjacent cell sizes.
    pub max_growth_ratio: f64,
    pub max_cell: f64,
    /// Largest allowed ratio between the longest and shortest edge of a cell.
    pub max_aspect: f64,
    pub max_nodes: usize,
    /// Conductors thinner than this along an axis are meshed as sheets.
    /// Defaults to the minimum cell size along that axis.
    pub sheet_threshold: Option<f64>,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            min_cell: 0.5,
            min_cell_lateral: Some(2.0),
            refine_near_surfaces: 2.5,
            max_growth_ratio: 1.5,
            max_cell: 40.0,
            max_aspect: 200.0,
            max_nodes: 4_000_000,
            sheet_threshold: None,
        }
    }
}

impl GridPolicy {
    pub fn min_cell_along(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Z => self.min_cell,
            _ => self.min_cell_lateral.unwrap_or(self.min_cell),
        }
    }

    fn sheet_threshold_along(&self, axis: Axis) -> f64 {
        self.sheet_threshold.unwrap_or_else(|| self.min_cell_along(axis))
    }

    /// The same policy with every length scaled by `factor` (0.5 halves all cells).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            min_cell: self.min_cell * factor,
            min_cell_lateral: self.min_cell_lateral.map(|v| v * factor),
            max_cell: self.max_cell * factor,
            // Keep the sheet classification fixed so refinement does not change topology.
            sheet_threshold: Some(self.sheet_threshold.unwrap_or(self.min_cell)),
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            ("min_cell", self.min_cell),
            ("min_cell_lateral", self.min_cell_lateral.unwrap_or(1.0)),
            ("max_cell", self.max_cell),
            ("max_aspect", self.max_aspect),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SolverError::InvalidPolicy(format!("{name} must be > 0")));
            }
        }
        if self.refine_near_surfaces < 0.0 {
            return Err(SolverError::InvalidPolicy("refine_near_surfaces must be >= 0".into()));
        }
        if !(self.max_growth_ratio >= 1.1) {
            return Err(SolverError::InvalidPolicy("max_growth_ratio must be >= 1.1".into()));
        }
        if self.max_cell < self.min_cell.max(self.min_cell_lateral.unwrap_or(0.0)) {
            return Err(SolverError::InvalidPolicy("max_cell smaller than min_cell".into()));
        }
        Ok(())
    }
}

/// A rectilinear grid with per-cell materials and per-node conductor nets.
#[derive(Debug)]
pub struct RectilinearGrid {
    geometry: Arc<ValidatedGeometry>,
    /// Grid lines per axis, meters.
    lines: [Vec<f64>; 3],
    cell_material: Vec<u16>,
    node_net: Vec<u32>,
    /// For faces normal to each axis: 1 + index of the conductor solid that
    /// covers the face, or 0.
    face_owner: [Vec<u32>; 3],
    operator: OnceLock<Operator>,
}

impl RectilinearGrid {
    /// Build a grid on explicit lines (micrometers). Every solid face must lie
    /// on a line, except conductor films collapsed to sheets.
    pub fn from_lines(
        geometry: Arc<ValidatedGeometry>,
        lines_um: [Vec<f64>; 3],
        sheet_threshold: [f64; 3],
    ) -> Result<Self, SolverError> {
        for (a, l) in lines_um.iter().enumerate() {
            if l.len() < 2 || l.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(SolverError::InvalidPolicy(format!(
                    "grid lines along {} must be strictly increasing with at least 2 entries",
                    Axis::from_index(a)
                )));
            }
        }
        let collapse = collapsed_solids(&geometry, sheet_threshold);
        let dims = [lines_um[0].len(), lines_um[1].len(), lines_um[2].len()];
        let nodes = dims[0] * dims[1] * dims[2];
        let cells = (dims[0] - 1) * (dims[1] - 1) * (dims[2] - 1);

        let locate = |axis: usize, v: f64| -> Result<usize, SolverError> {
            let l = &lines_um[axis];
            let i = l.partition_point(|&x| x < v - COORD_TOL);
            if i < l.len() && (l[i] - v).abs() <= COORD_TOL {
                Ok(i)
            } else {
                Err(SolverError::InvalidPolicy(format!(
                    "coordinate {v} um along {} is not on a grid line",
                    Axis::from_index(axis)
                )))
            }
        };

        // Cell materials: paint solids in order, skipping collapsed sheets.
        let mut cell_material = vec![geometry.background_material() as u16; cells];
        let cdims = [dims[0] - 1, dims[1] - 1, dims[2] - 1];
        for (s, solid) in geometry.solids().iter().enumerate() {
            if collapse[s].is_some() {
                continue;
            }
            let m = geometry.solid_material(s) as u16;
            let mut lo = [0; 3];
            let mut hi = [0; 3];
            for a in 0..3 {
                lo[a] = locate(a, solid.bounds.min[a])?;
                hi[a] = locate(a, solid.bounds.max[a])?;
            }
            for i in lo[0]..hi[0] {
                for j in lo[1]..hi[1] {
                    let base = (i * cdims[1] + j) * cdims[2];
                    cell_material[base + lo[2]..base + hi[2]].fill(m);
                }
            }
        }

        let mut node_net = vec![NO_NET; nodes];
        let mut face_owner = [
            vec![0u32; dims[0] * cdims[1] * cdims[2]],
            vec![0u32; dims[1] * cdims[0] * cdims[2]],
            vec![0u32; dims[2] * cdims[0] * cdims[1]],
        ];
        for (s, solid) in geometry.solids().iter().enumerate() {
            let Some(net) = geometry.solid_net(s) else { continue };
            let mut lo = [0; 3];
            let mut hi = [0; 3];
            for a in 0..3 {
                match collapse[s] {
                    Some((axis, plane)) if axis == a => {
                        lo[a] = locate(a, plane)?;
                        hi[a] = lo[a];
                    }
                    _ => {
                        lo[a] = locate(a, solid.bounds.min[a])?;
                        hi[a] = locate(a, solid.bounds.max[a])?;
                    }
                }
            }
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    let base = (i * dims[1] + j) * dims[2];
                    node_net[base + lo[2]..=base + hi[2]].fill(net as u32);
                }
            }
            for a in 0..3 {
                let (u, v) = Axis::from_index(a).others();
                let (u, v) = (u.index(), v.index());
                let (nu, nv) = (cdims[u], cdims[v]);
                for p in lo[a]..=hi[a] {
                    for iu in lo[u]..hi[u] {
                        let base = (p * nu + iu) * nv;
                        face_owner[a][base + lo[v]..base + hi[v]].fill(s as u32 + 1);
                    }
                }
            }
        }

        let lines = lines_um.map(|l| l.into_iter().map(|x| x * MICRON).collect::<Vec<_>>());
        let grid = Self {
            geometry,
            lines,
            cell_material,
            node_net,
            face_owner,
            operator: OnceLock::new(),
        };
        Ok(grid)
    }

    pub fn geometry(&self) -> &Arc<ValidatedGeometry> {
        &self.geometry
    }

    /// Grid lines along `axis`, meters.
    pub fn lines(&self, axis: Axis) -> &[f64] {
        &self.lines[axis.index()]
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.lines[0].len(), self.lines[1].len(), self.lines[2].len()]
    }

    pub fn node_count(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn cell_count(&self) -> usize {
        self.dims().iter().map(|d| d - 1).product()
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        let d = self.dims();
        (i * d[1] + j) * d[2] + k
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        let d = self.dims();
        (i * (d[1] - 1) + j) * (d[2] - 1) + k
    }

    /// Cell width along `axis` at index `i`, meters.
    #[inline]
    pub fn width(&self, axis: Axis, i: usize) -> f64 {
        let l = &self.lines[axis.index()];
        l[i + 1] - l[i]
    }

    pub fn cell_material(&self, cell: usize) -> usize {
        self.cell_material[cell] as usize
    }

    pub fn cell_material_at(&self, i: usize, j: usize, k: usize) -> usize {
        self.cell_material[self.cell_index(i, j, k)] as usize
    }

    /// Electrical net of a node, if it is a conductor node.
    pub fn node_net(&self, node: usize) -> Option<usize> {
        let n = self.node_net[node];
        (n != NO_NET).then_some(n as usize)
    }

    pub(crate) fn raw_node_nets(&self) -> &[u32] {
        &self.node_net
    }

    pub fn cell_is_metal(&self, cell: usize) -> bool {
        self.geometry.material_kind(self.cell_material(cell)) == MaterialKind::Conductor
    }

    pub(crate) fn operator(&self) -> &Operator {
        self.operator.get_or_init(|| Operator::assemble(self))
    }

    /// Whether the node lies on a grounded outer face.
    pub fn on_grounded_boundary(&self, i: usize, j: usize, k: usize) -> bool {
        let d = self.dims();
        let idx = [i, j, k];
        let b = self.geometry.boundary();
        (0..3).any(|a| {
            let axis = Axis::from_index(a);
            (idx[a] == 0 && b.face(axis, false) == crate::geometry::BoundaryKind::Grounded)
                || (idx[a] == d[a] - 1 && b.face(axis, true) == crate::geometry::BoundaryKind::Grounded)
        })
    }

    /// Smallest and largest cell width over all axes, meters.
    pub fn cell_size_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for l in &self.lines {
            for w in l.windows(2) {
                lo = lo.min(w[1] - w[0]);
                hi = hi.max(w[1] - w[0]);
            }
        }
        (lo, hi)
    }

    /// Worst cell aspect ratio (longest over shortest edge).
    pub fn max_aspect_ratio(&self) -> f64 {
        let ranges: Vec<(f64, f64)> = self
            .lines
            .iter()
            .map(|l| {
                l.windows(2).fold((f64::INFINITY, 0.0f64), |(lo, hi), w| {
                    (lo.min(w[1] - w[0]), hi.max(w[1] - w[0]))
                })
            })
            .collect();
        let mut worst: f64 = 1.0;
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    worst = worst.max(ranges[a].1 / ranges[b].0);
                }
            }
        }
        worst
    }

    /// Index of the cell containing coordinate `x` (meters) along `axis`.
    pub fn locate_cell(&self, axis: Axis, x: f64) -> Option<usize> {
        let l = &self.lines[axis.index()];
        if x < l[0] || x > l[l.len() - 1] {
            return None;
        }
        let i = l.partition_point(|&v| v <= x);
        Some(i.saturating_sub(1).min(l.len() - 2))
    }

    /// Classify every cell face that carries a metal, substrate or air interface.
    pub fn surface_elements(&self) -> Vec<SurfaceElement> {
        let dims = self.dims();
        let cdims = [dims[0] - 1, dims[1] - 1, dims[2] - 1];
        let g = &self.geometry;
        let mut out = Vec::new();
        for a in 0..3 {
            let axis = Axis::from_index(a);
            let (u, v) = axis.others();
            let (ui, vi) = (u.index(), v.index());
            for p in 0..dims[a] {
                for iu in 0..cdims[ui] {
                    for iv in 0..cdims[vi] {
                        let face = (p * cdims[ui] + iu) * cdims[vi] + iv;
                        let cell_at = |q: usize| {
                            let mut idx = [0; 3];
                            idx[a] = q;
                            idx[ui] = iu;
                            idx[vi] = iv;
                            self.cell_index(idx[0], idx[1], idx[2])
                        };
                        let lower = (p > 0).then(|| cell_at(p - 1));
                        let upper = (p < cdims[a]).then(|| cell_at(p));
                        let area = self.width(u, iu) * self.width(v, iv);
                        let center_z = match axis {
                            Axis::Z => self.lines[2][p],
                            _ => 0.5 * (self.lines[2][if vi == 2 { iv } else { iu }]
                                + self.lines[2][if vi == 2 { iv } else { iu } + 1]),
                        };
                        let side = g.chip_of_z(center_z / MICRON);
                        let owner = self.face_owner[a][face];
                        let base = SurfaceElement {
                            axis,
                            plane: p,
                            cell_u: iu,
                            cell_v: iv,
                            toward_upper: true,
                            class: SurfaceClass::MA,
                            side,
                            adjacent_material: 0,
                            area,
                            net: None,
                        };
                        if owner != 0 {
                            let solid = (owner - 1) as usize;
                            let net = g.solid_net(solid);
                            for (cell, toward_upper) in [(lower, false), (upper, true)] {
                                let Some(c) = cell else { continue };
                                let m = self.cell_material(c);
                                let class = match g.material_kind(m) {
                                    MaterialKind::Conductor => continue,
                                    _ if g.is_bump_solid(solid) && axis != Axis::Z => {
                                        SurfaceClass::BumpSurface
                                    }
                                    MaterialKind::Vacuum => SurfaceClass::MA,
                                    MaterialKind::Dielectric => SurfaceClass::MS,
                                };
                                out.push(SurfaceElement {
                                    toward_upper,
                                    class,
                                    adjacent_material: m,
                                    net,
                                    ..base
                                });
                            }
                        } else if let (Some(lo), Some(hi)) = (lower, upper) {
                            let (ml, mh) = (self.cell_material(lo), self.cell_material(hi));
                            let (kl, kh) = (g.material_kind(ml), g.material_kind(mh));
                            let substrate_side = match (kl, kh) {
                                (MaterialKind::Dielectric, MaterialKind::Vacuum) => Some((false, ml)),
                                (MaterialKind::Vacuum, MaterialKind::Dielectric) => Some((true, mh)),
                                _ => None,
                            };
                            if let Some((toward_upper, m)) = substrate_side {
                                out.push(SurfaceElement {
                                    toward_upper,
                                    class: SurfaceClass::SA,
                                    adjacent_material: m,
                                    ..base
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One classified face of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceElement {
    /// Face normal.
    pub axis: Axis,
    /// Grid line index along the normal.
    pub plane: usize,
    /// Cell indices along the two other axes (in `axis.others()` order).
    pub cell_u: usize,
    pub cell_v: usize,
    /// Metal faces: the adjacent medium lies toward +axis. SA faces: the
    /// substrate lies toward +axis.
    pub toward_upper: bool,
    pub class: SurfaceClass,
    pub side: ChipSide,
    /// Medium on the `toward_upper` side (substrate for SA faces).
    pub adjacent_material: usize,
    /// Face area, m^2.
    pub area: f64,
    pub net: Option<usize>,
}

/// For each solid, `Some((axis, plane_um))` if it is a conductor film meshed
/// as a sheet.
fn collapsed_solids(g: &ValidatedGeometry, threshold: [f64; 3]) -> Vec<Option<(usize, f64)>> {
    g.solids()
        .iter()
        .enumerate()
        .map(|(s, solid)| {
            g.solid_net(s)?;
            let a = (0..3)
                .filter(|&a| solid.bounds.extent(Axis::from_index(a)) < threshold[a])
                .min_by(|&x, &y| {
                    solid.bounds.extent(Axis::from_index(x))
                        .total_cmp(&solid.bounds.extent(Axis::from_index(y)))
                })?;
            // Snap onto the face that sees vacuum, preferring the upper one.
            let c = solid.bounds.center();
            let probe = |v: f64| {
                let mut p = c;
                p[a] = v;
                let m = g.material_at_filtered(p, |i| g.solid_net(i).is_none());
                g.material_kind(m) == MaterialKind::Vacuum
            };
            let delta = 1e-6 * (1.0 + solid.bounds.max[a].abs());
            let plane = if probe(solid.bounds.max[a] + delta) {
                solid.bounds.max[a]
            } else if probe(solid.bounds.min[a] - delta) {
                solid.bounds.min[a]
            } else {
                solid.bounds.max[a]
            };
            Some((a, plane))
        })
        .collect()
}

/// Key coordinates along one axis, with a flag marking refined (surface) ones.
fn key_coordinates(
    g: &ValidatedGeometry,
    axis: usize,
    collapse: &[Option<(usize, f64)>],
) -> Vec<(f64, bool)> {
    let dom = g.domain();
    let mut keys = vec![(dom.min[axis], false), (dom.max[axis], false)];
    for (s, solid) in g.solids().iter().enumerate() {
        match collapse[s] {
            Some((a, plane)) if a == axis => keys.push((plane, true)),
            _ => {
                keys.push((solid.bounds.min[axis], true));
                keys.push((solid.bounds.max[axis], true));
            }
        }
    }
    keys.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, bool)> = Vec::with_capacity(keys.len());
    for (x, refined) in keys {
        match out.last_mut() {
            Some(last) if (x - last.0).abs() <= COORD_TOL => last.1 |= refined,
            _ => out.push((x, refined)),
        }
    }
    // Faces on the domain boundary carry no field worth resolving.
    let n = out.len();
    out[0].1 = false;
    out[n - 1].1 = false;
    out
}

/// The coarsest grid that resolves every solid exactly: one line per solid face.
pub fn feature_grid(geometry: Arc<ValidatedGeometry>) -> RectilinearGrid {
    let collapse = vec![None; geometry.solids().len()];
    let lines = [0, 1, 2].map(|a| {
        key_coordinates(&geometry, a, &collapse)
            .into_iter()
            .map(|(x, _)| x)
            .collect::<Vec<_>>()
    });
    RectilinearGrid::from_lines(geometry, lines, [0.0; 3])
        .expect("feature lines contain every solid face")
}

/// Mesh a validated geometry according to `policy`.
pub fn build_grid(
    geometry: Arc<ValidatedGeometry>,
    policy: &GridPolicy,
) -> Result<RectilinearGrid, SolverError> {
    policy.validate()?;
    let thresholds = [0, 1, 2].map(|a| policy.sheet_threshold_along(Axis::from_index(a)));
    let collapse = collapsed_solids(&geometry, thresholds);
    let mut lines: [Vec<f64>; 3] = Default::default();
    for a in 0..3 {
        let keys = key_coordinates(&geometry, a, &collapse);
        lines[a] = graded_lines(&keys, policy, Axis::from_index(a));
    }
    let nodes: usize = lines.iter().map(Vec::len).product();
    if nodes > policy.max_nodes {
        return Err(SolverError::MeshBudgetExceeded {
            nodes,
            cap: policy.max_nodes,
        });
    }
    let grid = RectilinearGrid::from_lines(geometry, lines, thresholds)?;
    let aspect = grid.max_aspect_ratio();
    if aspect > policy.max_aspect {
        return Err(SolverError::AspectRatioExceeded {
            aspect,
            max: policy.max_aspect,
        });
    }
    Ok(grid)
}

/// Target cell size along the axis: cones of slope ln(g) around each key
/// coordinate, flat within the refinement band, capped at `max_cell`.
struct SizeField {
    points: Vec<(f64, f64, f64)>, // (x, size, band)
    slope: f64,
    cap: f64,
}

impl SizeField {
    fn at(&self, x: f64) -> f64 {
        self.points
            .iter()
            .map(|&(p, s, band)| s + self.slope * ((x - p).abs() - band).max(0.0))
            .fold(self.cap, f64::min)
    }
}

fn graded_lines(keys: &[(f64, bool)], policy: &GridPolicy, axis: Axis) -> Vec<f64> {
    let g = policy.max_growth_ratio;
    let hmin = policy.min_cell_along(axis);
    let n = keys.len();
    // Initial targets, clamped so that no key interval is shorter than its end cells.
    let mut points: Vec<(f64, f64, f64)> = keys
        .iter()
        .enumerate()
        .map(|(i, &(x, refined))| {
            let mut s = if refined { hmin } else { policy.max_cell };
            if i > 0 {
                s = s.min(x - keys[i - 1].0);
            }
            if i + 1 < n {
                s = s.min(keys[i + 1].0 - x);
            }
            let band = if refined { policy.refine_near_surfaces } else { 0.0 };
            (x, s, band)
        })
        .collect();
    // Slightly under the nominal slope so that sampled cells stay below g.
    let slope = 0.98 * g.ln();
    let field = SizeField {
        points: points.clone(),
        slope,
        cap: policy.max_cell,
    };
    for p in &mut points {
        p.1 = field.at(p.0);
    }
    let field = SizeField {
        points,
        slope,
        cap: policy.max_cell,
    };

    let intervals: Vec<Interval> = keys
        .windows(2)
        .map(|w| Interval::new(w[0].0, w[1].0, &field))
        .collect();
    let mut counts: Vec<usize> = intervals.iter().map(|iv| iv.total.ceil().max(1.0) as usize).collect();
    let mut cells: Vec<Vec<f64>> = intervals
        .iter()
        .zip(&counts)
        .map(|(iv, &c)| iv.cells(c))
        .collect();

    // Refine intervals until the size jump across every key coordinate is within g.
    for _ in 0..100_000 {
        let mut changed = false;
        for k in 0..intervals.len().saturating_sub(1) {
            let left = *cells[k].last().unwrap();
            let right = cells[k + 1][0];
            if left > g * right {
                counts[k] += 1;
                cells[k] = intervals[k].cells(counts[k]);
                changed = true;
            } else if right > g * left {
                counts[k + 1] += 1;
                cells[k + 1] = intervals[k + 1].cells(counts[k + 1]);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut lines = Vec::with_capacity(counts.iter().sum::<usize>() + 1);
    lines.push(keys[0].0);
    for (iv, c) in intervals.iter().zip(&cells) {
        let mut x = iv.a;
        for (idx, w) in c.iter().enumerate() {
            x += w;
            lines.push(if idx + 1 == c.len() { iv.b } else { x });
        }
    }
    lines
}

/// One key interval with its cumulative `integral dx / h(x)` table.
struct Interval {
    a: f64,
    b: f64,
    xs: Vec<f64>,
    xi: Vec<f64>,
    total: f64,
}

impl Interval {
    fn new(a: f64, b: f64, field: &SizeField) -> Self {
        const SAMPLES: usize = 4000;
        let mut xs = Vec::with_capacity(SAMPLES + 1);
        let mut xi = Vec::with_capacity(SAMPLES + 1);
        let mut acc = 0.0;
        let mut prev = 1.0 / field.at(a);
        xs.push(a);
        xi.push(0.0);
        for s in 1..=SAMPLES {
            let x = a + (b - a) * s as f64 / SAMPLES as f64;
            let cur = 1.0 / field.at(x);
            acc += 0.5 * (prev + cur) * (b - a) / SAMPLES as f64;
            prev = cur;
            xs.push(x);
            xi.push(acc);
        }
        Self { a, b, xs, xi, total: acc }
    }

    /// Widths of `n` cells equally spaced in the stretched coordinate.
    fn cells(&self, n: usize) -> Vec<f64> {
        let mut pos = Vec::with_capacity(n + 1);
        pos.push(self.a);
        let mut j = 0;
        for c in 1..n {
            let target = self.total * c as f64 / n as f64;
            while self.xi[j + 1] < target {
                j += 1;
            }
            let t = (target - self.xi[j]) / (self.xi[j + 1] - self.xi[j]);
            pos.push(self.xs[j] + t * (self.xs[j + 1] - self.xs[j]));
        }
        pos.push(self.b);
        pos.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{validate, Cuboid, DeviceGeometry, FlipmonParams, Material, Net, NetRole, Solid};

    fn plates(gap: f64) -> Arc<ValidatedGeometry> {
        let mut g = DeviceGeometry::new(Cuboid::new([0.0, 0.0, -10.0], [100.0, 100.0, gap + 10.0]));
        g.materials.push(Material::conductor("metal"));
        g.nets.push(Net::new("a", NetRole::PadBottom));
        g.nets.push(Net::new("b", NetRole::PadTop));
        g.solids.push(Solid::new(Cuboid::new([20.0, 20.0, -1.0], [80.0, 80.0, 0.0]), "metal", Some("a")));
        g.solids.push(Solid::new(Cuboid::new([20.0, 20.0, gap], [80.0, 80.0, gap + 1.0]), "metal", Some("b")));
        Arc::new(validate(g).unwrap())
    }

    fn ratios_ok(lines: &[f64], g: f64) -> bool {
        lines.windows(3).all(|w| {
            let (a, b) = (w[1] - w[0], w[2] - w[1]);
            a / b <= g * (1.0 + 1e-9) && b / a <= g * (1.0 + 1e-9)
        })
    }

    #[test]
    fn single_box_grid_has_only_feature_lines() {
        let mut g = DeviceGeometry::new(Cuboid::new([0.0; 3], [10.0, 10.0, 10.0]));
        g.materials.push(Material::dielectric("d", 4.0));
        g.solids.push(Solid::new(Cuboid::new([0.0; 3], [10.0, 10.0, 10.0]), "d", None));
        let grid = feature_grid(Arc::new(validate(g).unwrap()));
        assert_eq!(grid.dims(), [2, 2, 2]);
    }

    #[test]
    fn five_micron_gap_gets_ten_cells() {
        let policy = GridPolicy {
            min_cell: 0.5,
            min_cell_lateral: None,
            sheet_threshold: Some(0.1),
            ..GridPolicy::default()
        };
        let grid = build_grid(plates(5.0), &policy).unwrap();
        let z = grid.lines(Axis::Z);
        let inside = z.iter().filter(|&&v| v > 1e-12 && v < 5.0 * MICRON - 1e-12).count();
        assert!(inside + 1 >= 10, "only {} cells across the gap", inside + 1);
    }

    #[test]
    fn growth_ratio_is_honored() {
        for g in [1.2, 1.5, 2.0] {
            let policy = GridPolicy {
                max_growth_ratio: g,
                ..GridPolicy::default()
            };
            let geom = Arc::new(validate(FlipmonParams::default().build().unwrap()).unwrap());
            let grid = build_grid(geom, &policy).unwrap();
            for axis in Axis::ALL {
                assert!(ratios_ok(grid.lines(axis), g), "ratio violated along {axis} for g={g}");
                let (_, hi) = grid.cell_size_range();
                assert!(hi <= policy.max_cell * MICRON * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn sheets_collapse_onto_exposed_face() {
        let geom = Arc::new(validate(FlipmonParams::default().build().unwrap()).unwrap());
        let grid = build_grid(geom, &GridPolicy::default()).unwrap();
        let z = grid.lines(Axis::Z);
        // No line at the film underside (-0.1 um); lines at 0 and at the gap.
        assert!(!z.iter().any(|&v| (v + 0.1 * MICRON).abs() < 1e-12));
        assert!(z.iter().any(|&v| v.abs() < 1e-12));
        assert!(z.iter().any(|&v| (v - 5.0 * MICRON).abs() < 1e-12));
    }

    #[test]
    fn budget_is_enforced() {
        let policy = GridPolicy {
            max_nodes: 1000,
            ..GridPolicy::default()
        };
        let geom = Arc::new(validate(FlipmonParams::default().build().unwrap()).unwrap());
        assert!(matches!(
            build_grid(geom, &policy),
            Err(SolverError::MeshBudgetExceeded { .. })
        ));
    }

    #[test]
    fn lines_contain_every_solid_face() {
        let geom = plates(5.0);
        let grid = build_grid(geom.clone(), &GridPolicy { sheet_threshold: Some(0.0), ..GridPolicy::default() }).unwrap();
        for s in geom.solids() {
            for a in 0..3 {
                for v in [s.bounds.min[a], s.bounds.max[a]] {
                    assert!(grid.lines[a].iter().any(|&l| (l - v * MICRON).abs() < 1e-12));
                }
            }
        }
    }
}
