//! Energy participation ratios of bulk regions and thin interface layers.
//!
//! Bulk ratios are exact fractions of the discrete field energy and partition
//! unity. Interface layers are not meshed: each is a film of thickness `t` and
//! permittivity `eps_layer` whose field follows from the boundary conditions
//! at the face it coats, so its participation is a first-order addition.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::constants::{MICRON, VACUUM_PERMITTIVITY};
use crate::geometry::{Axis, ChipSide, Cuboid, InterfaceClass, MaterialKind, NetRole, SurfaceClass};
use crate::solver::{FieldSolution, RectilinearGrid, SurfaceElement};

/// How the perpendicular field of SA layers is sampled.
pub const SA_CONVENTION: &str = "substrate side (E_perp from the dielectric, E_par continuous)";

#[derive(Debug, Error, PartialEq)]
pub enum ParticipationError {
    #[error("region {0} contains no cells")]
    RegionEmpty(RegionId),
    #[error("no surfaces of class {0}")]
    EmptySurfaceSet(String),
    #[error("{0} is not a bulk region")]
    NotBulk(RegionId),
    #[error("the solution stores no energy")]
    ZeroEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RegionId {
    #[serde(rename = "Sub_t")]
    SubT,
    #[serde(rename = "Sub_b")]
    SubB,
    Vacuum,
    VacuumGapOnly,
    #[serde(rename = "MA_t")]
    MaT,
    #[serde(rename = "MS_t")]
    MsT,
    #[serde(rename = "SA_t")]
    SaT,
    #[serde(rename = "MA_b")]
    MaB,
    #[serde(rename = "MS_b")]
    MsB,
    #[serde(rename = "SA_b")]
    SaB,
    BumpSurface,
}

impl RegionId {
    pub const ALL: [RegionId; 11] = [
        RegionId::SubT,
        RegionId::MsT,
        RegionId::SaT,
        RegionId::MaT,
        RegionId::Vacuum,
        RegionId::VacuumGapOnly,
        RegionId::BumpSurface,
        RegionId::SubB,
        RegionId::MsB,
        RegionId::SaB,
        RegionId::MaB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegionId::SubT => "Sub_t",
            RegionId::SubB => "Sub_b",
            RegionId::Vacuum => "Vacuum",
            RegionId::VacuumGapOnly => "VacuumGapOnly",
            RegionId::MaT => "MA_t",
            RegionId::MsT => "MS_t",
            RegionId::SaT => "SA_t",
            RegionId::MaB => "MA_b",
            RegionId::MsB => "MS_b",
            RegionId::SaB => "SA_b",
            RegionId::BumpSurface => "BumpSurface",
        }
    }

    /// Label in the published table layout, which spells MS as "SM".
    pub fn table_label(self) -> &'static str {
        match self {
            RegionId::MsT => "SM_t",
            RegionId::MsB => "SM_b",
            other => other.name(),
        }
    }

    pub fn is_bulk(self) -> bool {
        matches!(
            self,
            RegionId::SubT | RegionId::SubB | RegionId::Vacuum | RegionId::VacuumGapOnly
        )
    }

    /// Interface class and chip side of a layer region.
    pub fn interface(self) -> Option<(InterfaceClass, ChipSide)> {
        use ChipSide::*;
        use InterfaceClass::*;
        Some(match self {
            RegionId::MaT => (MA, Top),
            RegionId::MsT => (MS, Top),
            RegionId::SaT => (SA, Top),
            RegionId::MaB => (MA, Bottom),
            RegionId::MsB => (MS, Bottom),
            RegionId::SaB => (SA, Bottom),
            _ => return None,
        })
    }

    fn from_interface(class: SurfaceClass, side: ChipSide) -> RegionId {
        match (class, side) {
            (SurfaceClass::MA, ChipSide::Top) => RegionId::MaT,
            (SurfaceClass::MS, ChipSide::Top) => RegionId::MsT,
            (SurfaceClass::SA, ChipSide::Top) => RegionId::SaT,
            (SurfaceClass::MA, ChipSide::Bottom) => RegionId::MaB,
            (SurfaceClass::MS, ChipSide::Bottom) => RegionId::MsB,
            (SurfaceClass::SA, ChipSide::Bottom) => RegionId::SaB,
            (SurfaceClass::BumpSurface, _) => RegionId::BumpSurface,
        }
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for RegionId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegionId::ALL
            .into_iter()
            .find(|r| r.name() == s || r.table_label() == s)
            .ok_or_else(|| format!("unknown region `{s}`"))
    }
}

/// Grid and layer settings a report was computed with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshInfo {
    pub dims: [usize; 3],
    pub nodes: usize,
    pub min_cell_um: f64,
    pub max_cell_um: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticipationReport {
    pub values: BTreeMap<RegionId, f64>,
    /// `|p_fine - p_coarse|` against a run on a grid with doubled cells.
    pub abs_error_est: BTreeMap<RegionId, f64>,
    /// Regions with no cells or faces; reported as 0.
    pub empty_regions: Vec<RegionId>,
    /// Interface layers switched off in the geometry; reported as 0.
    pub disabled_regions: Vec<RegionId>,
    pub total_energy: f64,
    /// `p(Sub_t) + p(Sub_b) + p(Vacuum)`.
    pub bulk_sum: f64,
    pub mesh: MeshInfo,
    pub thickness: f64,
    pub epsilon_layer: f64,
    pub sa_convention: &'static str,
}

impl ParticipationReport {
    pub fn get(&self, region: RegionId) -> f64 {
        self.values.get(&region).copied().unwrap_or(0.0)
    }

    /// Fill `abs_error_est` from a report computed on a coarser grid.
    pub fn with_error_estimate(mut self, coarse: &ParticipationReport) -> Self {
        self.abs_error_est = self
            .values
            .iter()
            .map(|(&r, &p)| (r, (p - coarse.get(r)).abs()))
            .collect();
        self
    }

    /// `region,p,abs_error_est`; the error column is blank when no estimate exists.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("region,p,abs_error_est\n");
        for r in RegionId::ALL {
            let err = self
                .abs_error_est
                .get(&r)
                .map(|e| format!("{e:.6e}"))
                .unwrap_or_default();
            out.push_str(&format!("{},{:.6e},{}\n", r.name(), self.get(r), err));
        }
        out
    }

    /// Plain-text block in the layout of the published participation table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "Energy participation ratios (t = {} nm, eps_layer = {})\n",
            sig3(self.thickness * 1e9),
            sig3(self.epsilon_layer)
        ));
        out.push_str(&format!("{:<14}{:>12}{:>12}\n", "component", "top", "bottom"));
        let row = |label: &str, t: RegionId, b: RegionId| {
            format!("{:<14}{:>12}{:>12}\n", label, sig3(self.get(t)), sig3(self.get(b)))
        };
        out.push_str(&row("Sub", RegionId::SubT, RegionId::SubB));
        out.push_str(&row("SM (=MS)", RegionId::MsT, RegionId::MsB));
        out.push_str(&row("SA", RegionId::SaT, RegionId::SaB));
        out.push_str(&row("MA", RegionId::MaT, RegionId::MaB));
        out.push_str(&format!("{:<14}{:>12}\n", "Vacuum", sig3(self.get(RegionId::Vacuum))));
        out.push_str(&format!(
            "{:<14}{:>12}\n",
            "  inter-pad",
            sig3(self.get(RegionId::VacuumGapOnly))
        ));
        out.push_str(&format!(
            "{:<14}{:>12}\n",
            "Bump surface",
            sig3(self.get(RegionId::BumpSurface))
        ));
        out.push_str(&format!("bulk sum: {}\n", sig3(self.bulk_sum)));
        out.push_str(&format!("SA convention: {}\n", self.sa_convention));
        if !self.empty_regions.is_empty() {
            let names: Vec<_> = self.empty_regions.iter().map(|r| r.name()).collect();
            out.push_str(&format!("empty regions (reported as 0): {}\n", names.join(", ")));
        }
        out
    }
}

/// Read the `region,p,...` CSV written by [`ParticipationReport::to_csv`].
pub fn read_participation_csv(text: &str) -> Result<BTreeMap<RegionId, f64>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty participation file")?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"region") || cols.get(1) != Some(&"p") {
        return Err(format!("expected a `region,p,...` header, got `{header}`"));
    }
    let mut out = BTreeMap::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let mut cells = line.split(',').map(str::trim);
        let region: RegionId = cells.next().unwrap_or("").parse().map_err(|e| format!("row {}: {e}", i + 1))?;
        let p: f64 = cells
            .next()
            .and_then(|c| c.parse().ok())
            .filter(|p: &f64| p.is_finite() && *p >= 0.0)
            .ok_or_else(|| format!("row {}: invalid participation", i + 1))?;
        out.insert(region, p);
    }
    Ok(out)
}

/// Three significant figures: plain notation in [1e-3, 1e4), scientific otherwise.
pub fn sig3(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    // Round first so that 0.9999 formats like 1.0.
    let x: f64 = format!("{x:.2e}").parse().unwrap();
    let a = x.abs();
    if (1e-3..1e4).contains(&a) {
        let decimals = (2 - a.log10().floor() as i32).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.2e}")
    }
}

fn energy_or_err(solution: &FieldSolution) -> Result<f64, ParticipationError> {
    let u = solution.energy();
    if u > 0.0 {
        Ok(u)
    } else {
        Err(ParticipationError::ZeroEnergy)
    }
}

/// Boxes between overlapping top-pad and bottom-pad solids, um.
fn inter_pad_boxes(grid: &RectilinearGrid) -> Vec<Cuboid> {
    let g = grid.geometry();
    let with_role = |role: NetRole| -> Vec<Cuboid> {
        g.solids()
            .iter()
            .enumerate()
            .filter(|(s, _)| {
                g.solid_net(*s)
                    .is_some_and(|n| g.electrical_nets()[n].role == role)
            })
            .map(|(_, s)| s.bounds)
            .collect()
    };
    let tops = with_role(NetRole::PadTop);
    let bottoms = with_role(NetRole::PadBottom);
    let mut boxes = Vec::new();
    for a in &tops {
        for b in &bottoms {
            if !a.overlaps_across(b, Axis::Z) {
                continue;
            }
            let (lo, hi) = if a.min[2] >= b.max[2] { (b, a) } else { (a, b) };
            if hi.min[2] <= lo.max[2] {
                continue;
            }
            boxes.push(Cuboid::new(
                [a.min[0].max(b.min[0]), a.min[1].max(b.min[1]), lo.max[2]],
                [a.max[0].min(b.max[0]), a.max[1].min(b.max[1]), hi.min[2]],
            ));
        }
    }
    boxes
}

fn cell_selector(grid: &RectilinearGrid, region: RegionId) -> Box<dyn Fn(usize, usize, usize) -> bool + Sync + '_> {
    let g = grid.geometry();
    let center = move |i: usize, j: usize, k: usize| -> [f64; 3] {
        let c = |a: Axis, n: usize| 0.5 * (grid.lines(a)[n] + grid.lines(a)[n + 1]) / MICRON;
        [c(Axis::X, i), c(Axis::Y, j), c(Axis::Z, k)]
    };
    let kind = move |i, j, k| g.material_kind(grid.cell_material_at(i, j, k));
    match region {
        RegionId::Vacuum => Box::new(move |i, j, k| kind(i, j, k) == MaterialKind::Vacuum),
        RegionId::SubT | RegionId::SubB => {
            let side = if region == RegionId::SubT {
                ChipSide::Top
            } else {
                ChipSide::Bottom
            };
            Box::new(move |i, j, k| {
                kind(i, j, k) == MaterialKind::Dielectric && g.chip_of_z(center(i, j, k)[2]) == side
            })
        }
        RegionId::VacuumGapOnly => {
            let boxes = inter_pad_boxes(grid);
            Box::new(move |i, j, k| {
                kind(i, j, k) == MaterialKind::Vacuum && {
                    let p = center(i, j, k);
                    boxes.iter().any(|b| b.contains(p))
                }
            })
        }
        _ => Box::new(|_, _, _| false),
    }
}

fn region_has_cells(grid: &RectilinearGrid, keep: &(dyn Fn(usize, usize, usize) -> bool + Sync)) -> bool {
    let d = grid.dims();
    (0..d[0] - 1).any(|i| (0..d[1] - 1).any(|j| (0..d[2] - 1).any(|k| keep(i, j, k))))
}

/// `p = (1/2 int eps0 eps |E|^2 dV over the region) / U_tot`.
pub fn bulk_participation(solution: &FieldSolution, region: RegionId) -> Result<f64, ParticipationError> {
    if !region.is_bulk() {
        return Err(ParticipationError::NotBulk(region));
    }
    let grid = solution.grid();
    let keep = cell_selector(grid, region);
    if !region_has_cells(grid, &*keep) {
        return Err(ParticipationError::RegionEmpty(region));
    }
    let u = energy_or_err(solution)?;
    Ok(solution.energy_where(&*keep) / u)
}

/// Node potentials along the face normal at one corner of a surface element,
/// from the face plane into the medium: `(phi0, phi1, phi2?)` and spacings.
struct NormalStencil {
    phi: [f64; 3],
    h: [f64; 2],
    second_order: bool,
}

fn normal_stencil(solution: &FieldSolution, e: &SurfaceElement, cu: usize, cv: usize) -> NormalStencil {
    let grid = solution.grid();
    let a = e.axis.index();
    let (ua, va) = e.axis.others();
    let lines = grid.lines(e.axis);
    let n = lines.len();
    let node_at = |p: usize| {
        let mut idx = [0; 3];
        idx[a] = p;
        idx[ua.index()] = cu;
        idx[va.index()] = cv;
        grid.node_index(idx[0], idx[1], idx[2])
    };
    let cell_at = |p: usize| {
        let mut idx = [0; 3];
        idx[a] = p;
        idx[ua.index()] = e.cell_u;
        idx[va.index()] = e.cell_v;
        grid.cell_material_at(idx[0], idx[1], idx[2])
    };
    let step = |p: usize, s: usize| -> Option<usize> {
        if e.toward_upper {
            (p + s < n).then_some(p + s)
        } else {
            p.checked_sub(s)
        }
    };
    let p0 = e.plane;
    let p1 = step(p0, 1).expect("surface elements always have a medium cell");
    let first_cell = if e.toward_upper { p0 } else { p1 };
    let phi = solution.potential();
    let h1 = (lines[p1] - lines[p0]).abs();
    let mut st = NormalStencil {
        phi: [phi[node_at(p0)], phi[node_at(p1)], 0.0],
        h: [h1, 0.0],
        second_order: false,
    };
    if let Some(p2) = step(p0, 2) {
        let second_cell = if e.toward_upper { p1 } else { p2 };
        if cell_at(second_cell) == cell_at(first_cell) && grid.node_net(node_at(p1)).is_none() {
            st.phi[2] = phi[node_at(p2)];
            st.h[1] = (lines[p2] - lines[p1]).abs();
            st.second_order = true;
        }
    }
    st
}

/// Normal field magnitude at a face, averaged over its four corners.
fn normal_field(solution: &FieldSolution, e: &SurfaceElement) -> f64 {
    let mut sum = 0.0;
    for cu in [e.cell_u, e.cell_u + 1] {
        for cv in [e.cell_v, e.cell_v + 1] {
            let s = normal_stencil(solution, e, cu, cv);
            let [u0, u1, u2] = s.phi;
            let [h1, h2] = s.h;
            let d = if s.second_order {
                -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * u0 + (h1 + h2) / (h1 * h2) * u1
                    - h1 / (h2 * (h1 + h2)) * u2
            } else {
                (u1 - u0) / h1
            };
            sum += d;
        }
    }
    0.25 * sum
}

/// Squared tangential field at the center of a face.
fn tangential_field_squared(solution: &FieldSolution, e: &SurfaceElement) -> f64 {
    let grid = solution.grid();
    let a = e.axis.index();
    let (ua, va) = e.axis.others();
    let phi = |cu: usize, cv: usize| {
        let mut idx = [0; 3];
        idx[a] = e.plane;
        idx[ua.index()] = cu;
        idx[va.index()] = cv;
        solution.potential()[grid.node_index(idx[0], idx[1], idx[2])]
    };
    let (u, v) = (e.cell_u, e.cell_v);
    let hu = grid.width(ua, u);
    let hv = grid.width(va, v);
    let eu = 0.5 * ((phi(u + 1, v) - phi(u, v)) + (phi(u + 1, v + 1) - phi(u, v + 1))) / hu;
    let ev = 0.5 * ((phi(u, v + 1) - phi(u, v)) + (phi(u + 1, v + 1) - phi(u + 1, v))) / hv;
    eu * eu + ev * ev
}

/// Metal-coated layer: `p = t int 1/2 eps0 (eps_adj^2 / eps_layer) E_perp^2 dS / U`,
/// with `E_perp` taken in the adjacent medium.
pub fn metal_interface_participation(
    solution: &FieldSolution,
    elements: &[SurfaceElement],
    thickness: f64,
    epsilon_layer: f64,
) -> Result<f64, ParticipationError> {
    if elements.is_empty() {
        return Err(ParticipationError::EmptySurfaceSet("metal".into()));
    }
    let u = energy_or_err(solution)?;
    let g = solution.grid().geometry();
    let sum: f64 = elements
        .iter()
        .map(|e| {
            let eps_adj = g.epsilon(e.adjacent_material);
            let en = normal_field(solution, e);
            0.5 * VACUUM_PERMITTIVITY * eps_adj * eps_adj / epsilon_layer * en * en * e.area
        })
        .sum();
    Ok(thickness * sum / u)
}

/// Substrate-air layer: `p = t int 1/2 eps0 [eps_layer E_par^2 +
/// (eps_sub^2 / eps_layer) E_perp,sub^2] dS / U`.
pub fn sa_interface_participation(
    solution: &FieldSolution,
    elements: &[SurfaceElement],
    thickness: f64,
    epsilon_layer: f64,
) -> Result<f64, ParticipationError> {
    if elements.is_empty() {
        return Err(ParticipationError::EmptySurfaceSet("SA".into()));
    }
    let u = energy_or_err(solution)?;
    let g = solution.grid().geometry();
    let sum: f64 = elements
        .iter()
        .map(|e| {
            let eps_sub = g.epsilon(e.adjacent_material);
            let en = normal_field(solution, e);
            let et2 = tangential_field_squared(solution, e);
            0.5 * VACUUM_PERMITTIVITY
                * (epsilon_layer * et2 + eps_sub * eps_sub / epsilon_layer * en * en)
                * e.area
        })
        .sum();
    Ok(thickness * sum / u)
}

/// Every region of [`RegionId::ALL`] for one solution. Interface layers use the
/// geometry's interface spec; bump lateral faces use the metal rule.
pub fn full_report(solution: &FieldSolution) -> Result<ParticipationReport, ParticipationError> {
    let grid = solution.grid();
    let g = grid.geometry();
    let spec = g.interface();
    let u = energy_or_err(solution)?;
    let elements = grid.surface_elements();
    let mut values = BTreeMap::new();
    let mut empty_regions = Vec::new();
    let mut disabled_regions = Vec::new();

    for r in RegionId::ALL.into_iter().filter(|r| r.is_bulk()) {
        match bulk_participation(solution, r) {
            Ok(p) => {
                values.insert(r, p);
            }
            Err(ParticipationError::RegionEmpty(_)) => {
                values.insert(r, 0.0);
                empty_regions.push(r);
            }
            Err(e) => return Err(e),
        }
    }

    let mut groups: BTreeMap<RegionId, Vec<SurfaceElement>> = BTreeMap::new();
    for e in elements {
        groups.entry(RegionId::from_interface(e.class, e.side)).or_default().push(e);
    }
    for r in RegionId::ALL.into_iter().filter(|r| !r.is_bulk()) {
        if let Some(key) = r.interface() {
            if !spec.classes.contains(&key) {
                values.insert(r, 0.0);
                disabled_regions.push(r);
                continue;
            }
        }
        let set = groups.get(&r).map(Vec::as_slice).unwrap_or(&[]);
        let p = match r {
            RegionId::SaT | RegionId::SaB => {
                sa_interface_participation(solution, set, spec.thickness, spec.epsilon_layer)
            }
            _ => metal_interface_participation(solution, set, spec.thickness, spec.epsilon_layer),
        };
        match p {
            Ok(p) => {
                values.insert(r, p);
            }
            Err(ParticipationError::EmptySurfaceSet(_)) => {
                values.insert(r, 0.0);
                empty_regions.push(r);
            }
            Err(e) => return Err(e),
        }
    }

    let bulk_sum = values[&RegionId::SubT] + values[&RegionId::SubB] + values[&RegionId::Vacuum];
    let (lo, hi) = grid.cell_size_range();
    Ok(ParticipationReport {
        values,
        abs_error_est: BTreeMap::new(),
        empty_regions,
        disabled_regions,
        total_energy: u,
        bulk_sum,
        mesh: MeshInfo {
            dims: grid.dims(),
            nodes: grid.node_count(),
            min_cell_um: lo / MICRON,
            max_cell_um: hi / MICRON,
            residual: solution.residual(),
        },
        thickness: spec.thickness,
        epsilon_layer: spec.epsilon_layer,
        sa_convention: SA_CONVENTION,
    })
}
