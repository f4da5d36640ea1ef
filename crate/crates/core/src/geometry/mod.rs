//! Flip-chip device stacks described as axis-aligned solids.
//!
//! Lengths in a [`DeviceGeometry`] are micrometers, exactly as written in
//! geometry files. The conversion to SI happens once, when the solver builds
//! its grid. Interface layer thickness is the only length held in meters.

mod io;
mod surfaces;
mod templates;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::defaults;

pub use io::{from_toml_str, read_geometry, to_toml_string, write_geometry};
pub use surfaces::{classify_surfaces, SurfaceClass, SurfacePatch, SurfaceSet};
pub use templates::{flipmon_template, planar_transmon_template, FlipmonParams, PlanarParams, PlatePairParams};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("solids {first} and {second} belong to different nets ({first_net}, {second_net}) but intersect{detail}")]
    Overlap {
        first: usize,
        second: usize,
        first_net: String,
        second_net: String,
        detail: String,
    },
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("solid {index} has non-positive extent along {axis}")]
    DegenerateSolid { index: usize, axis: Axis },
    #[error("invalid material `{name}`: {reason}")]
    InvalidMaterial { name: String, reason: String },
    #[error("solid {0} lies outside the domain")]
    OutsideDomain(usize),
    #[error("invalid interface spec: {0}")]
    InvalidInterface(String),
    #[error("invalid template parameters: {0}")]
    Template(String),
    #[error("failed to parse geometry: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One of the three Cartesian axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }

    /// The two remaining axes, in cyclic order.
    pub fn others(self) -> (Axis, Axis) {
        match self {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::X, Axis::Z),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// Axis-aligned box, micrometers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Cuboid {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    /// Box centered at `(cx, cy)` laterally, spanning `z0..z1`.
    pub fn centered(cx: f64, cy: f64, wx: f64, wy: f64, z0: f64, z1: f64) -> Self {
        Self::new(
            [cx - 0.5 * wx, cy - 0.5 * wy, z0],
            [cx + 0.5 * wx, cy + 0.5 * wy, z1],
        )
    }

    pub fn extent(&self, axis: Axis) -> f64 {
        self.max[axis.index()] - self.min[axis.index()]
    }

    pub fn volume(&self) -> f64 {
        Axis::ALL.iter().map(|&a| self.extent(a)).product()
    }

    pub fn center(&self) -> [f64; 3] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        ]
    }

    /// Closed containment test.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn contains_box(&self, other: &Cuboid) -> bool {
        (0..3).all(|a| other.min[a] >= self.min[a] && other.max[a] <= self.max[a])
    }

    /// Closed-set intersection: boxes that merely touch do intersect.
    pub fn touches(&self, other: &Cuboid) -> bool {
        (0..3).all(|a| self.min[a] <= other.max[a] && other.min[a] <= self.max[a])
    }

    /// Separation between two boxes along `axis` (0 if their projections overlap).
    pub fn separation(&self, other: &Cuboid, axis: Axis) -> f64 {
        let a = axis.index();
        (other.min[a] - self.max[a]).max(self.min[a] - other.max[a]).max(0.0)
    }

    /// Do the projections onto the plane normal to `axis` overlap with positive area?
    pub fn overlaps_across(&self, other: &Cuboid, axis: Axis) -> bool {
        let (u, v) = axis.others();
        [u, v].iter().all(|&b| {
            let i = b.index();
            self.min[i] < other.max[i] && other.min[i] < self.max[i]
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaterialKind {
    Conductor,
    Dielectric,
    Vacuum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    pub kind: MaterialKind,
    /// Relative permittivity; ignored for conductors.
    #[serde(default = "one")]
    pub epsilon_r: f64,
}

fn one() -> f64 {
    1.0
}

impl Material {
    pub fn vacuum() -> Self {
        Self {
            name: "vacuum".into(),
            kind: MaterialKind::Vacuum,
            epsilon_r: 1.0,
        }
    }

    pub fn dielectric(name: &str, epsilon_r: f64) -> Self {
        Self {
            name: name.into(),
            kind: MaterialKind::Dielectric,
            epsilon_r,
        }
    }

    pub fn conductor(name: &str) -> Self {
        Self {
            name: name.into(),
            kind: MaterialKind::Conductor,
            epsilon_r: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solid {
    #[serde(flatten)]
    pub bounds: Cuboid,
    pub material: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub net: Option<String>,
}

impl Solid {
    pub fn new(bounds: Cuboid, material: &str, net: Option<&str>) -> Self {
        Self {
            bounds,
            material: material.into(),
            net: net.map(Into::into),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetRole {
    /// Qubit island on the top chip (flipmon) or the first pad (planar).
    PadTop,
    /// Qubit island on the bottom chip (flipmon) or the second pad (planar).
    PadBottom,
    Ground,
    /// Indium bump; electrically merged into the net named by `connect_to`.
    Bump,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub name: String,
    pub role: NetRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connect_to: Option<String>,
}

impl Net {
    pub fn new(name: &str, role: NetRole) -> Self {
        Self {
            name: name.into(),
            role,
            connect_to: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChipSide {
    #[serde(rename = "top")]
    Top,
    #[serde(rename = "bottom")]
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InterfaceClass {
    MA,
    MS,
    SA,
}

/// Thin lossy layers that are not meshed but evaluated perturbatively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceSpec {
    /// Layer thickness, meters.
    pub thickness: f64,
    pub epsilon_layer: f64,
    /// Which (class, side) layers are evaluated.
    pub classes: BTreeSet<(InterfaceClass, ChipSide)>,
}

impl Default for InterfaceSpec {
    fn default() -> Self {
        let mut classes = BTreeSet::new();
        for c in [InterfaceClass::MA, InterfaceClass::MS, InterfaceClass::SA] {
            for s in [ChipSide::Top, ChipSide::Bottom] {
                classes.insert((c, s));
            }
        }
        Self {
            thickness: defaults::INTERFACE_THICKNESS_NM * crate::constants::NANOMETER,
            epsilon_layer: defaults::INTERFACE_EPSILON,
            classes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// Dirichlet, phi = 0.
    #[default]
    Grounded,
    /// Zero normal flux.
    Insulating,
}

/// Outer boundary condition per face, ordered `[-x, +x, -y, +y, -z, +z]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OuterBoundary {
    pub faces: [BoundaryKind; 6],
}

impl OuterBoundary {
    pub fn uniform(kind: BoundaryKind) -> Self {
        Self { faces: [kind; 6] }
    }

    pub fn face(&self, axis: Axis, upper: bool) -> BoundaryKind {
        self.faces[2 * axis.index() + usize::from(upper)]
    }

    pub fn any_grounded(&self) -> bool {
        self.faces.contains(&BoundaryKind::Grounded)
    }
}

impl Default for OuterBoundary {
    fn default() -> Self {
        Self::uniform(BoundaryKind::Grounded)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceGeometry {
    pub domain: Cuboid,
    /// Later solids override earlier ones where they overlap.
    pub solids: Vec<Solid>,
    pub materials: Vec<Material>,
    pub nets: Vec<Net>,
    pub interface: InterfaceSpec,
    pub boundary: OuterBoundary,
}

impl DeviceGeometry {
    pub fn new(domain: Cuboid) -> Self {
        Self {
            domain,
            solids: Vec::new(),
            materials: vec![Material::vacuum()],
            nets: Vec::new(),
            interface: InterfaceSpec::default(),
            boundary: OuterBoundary::default(),
        }
    }

    pub fn material(&self, name: &str) -> Option<&Material> {
        self.materials.iter().find(|m| m.name == name)
    }
}

/// An electrical node of the circuit: one net plus any bump nets merged into it.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectricalNet {
    pub name: String,
    pub role: NetRole,
    /// Indices into `DeviceGeometry::nets`.
    pub members: Vec<usize>,
}

/// A geometry whose invariants have been checked and whose references are
/// resolved to indices.
#[derive(Debug, Clone)]
pub struct ValidatedGeometry {
    geometry: DeviceGeometry,
    solid_material: Vec<usize>,
    solid_net: Vec<Option<usize>>,
    electrical_nets: Vec<ElectricalNet>,
    bump_solids: Vec<bool>,
    background: usize,
    chip_split_z: Option<f64>,
}

impl ValidatedGeometry {
    pub fn geometry(&self) -> &DeviceGeometry {
        &self.geometry
    }

    pub fn into_inner(self) -> DeviceGeometry {
        self.geometry
    }

    pub fn domain(&self) -> &Cuboid {
        &self.geometry.domain
    }

    pub fn solids(&self) -> &[Solid] {
        &self.geometry.solids
    }

    pub fn materials(&self) -> &[Material] {
        &self.geometry.materials
    }

    pub fn interface(&self) -> &InterfaceSpec {
        &self.geometry.interface
    }

    pub fn boundary(&self) -> &OuterBoundary {
        &self.geometry.boundary
    }

    /// Material index of each solid.
    pub fn solid_material(&self, solid: usize) -> usize {
        self.solid_material[solid]
    }

    /// Electrical net index of each conductor solid.
    pub fn solid_net(&self, solid: usize) -> Option<usize> {
        self.solid_net[solid]
    }

    pub fn is_bump_solid(&self, solid: usize) -> bool {
        self.bump_solids[solid]
    }

    pub fn electrical_nets(&self) -> &[ElectricalNet] {
        &self.electrical_nets
    }

    pub fn net_index(&self, name: &str) -> Option<usize> {
        self.electrical_nets.iter().position(|n| {
            n.name == name
                || n
                    .members
                    .iter()
                    .any(|&m| self.geometry.nets[m].name == name)
        })
    }

    pub fn nets_with_role(&self, role: NetRole) -> Vec<usize> {
        (0..self.electrical_nets.len())
            .filter(|&i| self.electrical_nets[i].role == role)
            .collect()
    }

    /// Material used where no solid is present.
    pub fn background_material(&self) -> usize {
        self.background
    }

    /// Material index at a point; last containing solid wins. Points on solid
    /// faces are ambiguous, so callers pass cell centers.
    pub fn material_at(&self, p: [f64; 3]) -> usize {
        self.material_at_filtered(p, |_| true)
    }

    /// As [`Self::material_at`], considering only solids accepted by `keep`.
    pub fn material_at_filtered(&self, p: [f64; 3], keep: impl Fn(usize) -> bool) -> usize {
        self.geometry
            .solids
            .iter()
            .enumerate()
            .rev()
            .find(|(i, s)| keep(*i) && s.bounds.contains(p))
            .map(|(i, _)| self.solid_material[i])
            .unwrap_or(self.background)
    }

    pub fn material_kind(&self, material: usize) -> MaterialKind {
        self.geometry.materials[material].kind
    }

    pub fn epsilon(&self, material: usize) -> f64 {
        let m = &self.geometry.materials[material];
        match m.kind {
            MaterialKind::Conductor => 1.0,
            _ => m.epsilon_r,
        }
    }

    /// z-plane separating the bottom chip from the top chip, if the stack has
    /// two chips. Everything is "bottom" for single-chip geometries.
    pub fn chip_split_z(&self) -> Option<f64> {
        self.chip_split_z
    }

    pub fn chip_of_z(&self, z: f64) -> ChipSide {
        match self.chip_split_z {
            Some(s) if z > s => ChipSide::Top,
            _ => ChipSide::Bottom,
        }
    }

    /// Minimum z-distance between conductor solids of two electrical nets whose
    /// footprints overlap.
    pub fn vertical_gap_between(&self, a: usize, b: usize) -> Option<f64> {
        let solids = &self.geometry.solids;
        let mut best: Option<f64> = None;
        for (i, si) in solids.iter().enumerate() {
            if self.solid_net[i] != Some(a) {
                continue;
            }
            for (j, sj) in solids.iter().enumerate() {
                if self.solid_net[j] != Some(b) || !si.bounds.overlaps_across(&sj.bounds, Axis::Z) {
                    continue;
                }
                let d = si.bounds.separation(&sj.bounds, Axis::Z);
                best = Some(best.map_or(d, |x: f64| x.min(d)));
            }
        }
        best
    }
}

/// Check every invariant and resolve material/net references.
pub fn validate(geometry: DeviceGeometry) -> Result<ValidatedGeometry, GeometryError> {
    let g = &geometry;
    for axis in Axis::ALL {
        if g.domain.extent(axis) <= 0.0 || !g.domain.extent(axis).is_finite() {
            return Err(GeometryError::DegenerateSolid {
                index: usize::MAX,
                axis,
            });
        }
    }

    let mut material_index = HashMap::new();
    for (i, m) in g.materials.iter().enumerate() {
        if material_index.insert(m.name.as_str(), i).is_some() {
            return Err(GeometryError::InvalidMaterial {
                name: m.name.clone(),
                reason: "duplicate name".into(),
            });
        }
        match m.kind {
            MaterialKind::Vacuum if m.epsilon_r != 1.0 => {
                return Err(GeometryError::InvalidMaterial {
                    name: m.name.clone(),
                    reason: "vacuum must have epsilon_r = 1".into(),
                })
            }
            MaterialKind::Dielectric if !(m.epsilon_r >= 1.0 && m.epsilon_r.is_finite()) => {
                return Err(GeometryError::InvalidMaterial {
                    name: m.name.clone(),
                    reason: format!("epsilon_r = {} < 1", m.epsilon_r),
                })
            }
            _ => {}
        }
    }
    let mut materials = g.materials.clone();
    let background = match g.materials.iter().position(|m| m.kind == MaterialKind::Vacuum) {
        Some(i) => i,
        None => {
            materials.push(Material {
                name: "__background_vacuum".into(),
                kind: MaterialKind::Vacuum,
                epsilon_r: 1.0,
            });
            materials.len() - 1
        }
    };

    let mut net_index = HashMap::new();
    for (i, n) in g.nets.iter().enumerate() {
        if net_index.insert(n.name.as_str(), i).is_some() {
            return Err(GeometryError::DanglingReference(format!(
                "duplicate net `{}`",
                n.name
            )));
        }
    }

    // Electrical nets: every non-bump net is its own node; bumps alias their target.
    let mut electrical_nets: Vec<ElectricalNet> = Vec::new();
    let mut net_to_electrical = vec![usize::MAX; g.nets.len()];
    for (i, n) in g.nets.iter().enumerate() {
        if n.role != NetRole::Bump {
            net_to_electrical[i] = electrical_nets.len();
            electrical_nets.push(ElectricalNet {
                name: n.name.clone(),
                role: n.role,
                members: vec![i],
            });
        }
    }
    for (i, n) in g.nets.iter().enumerate() {
        if n.role != NetRole::Bump {
            continue;
        }
        let target = n.connect_to.as_deref().ok_or_else(|| {
            GeometryError::DanglingReference(format!("bump net `{}` has no connect_to", n.name))
        })?;
        let t = *net_index.get(target).ok_or_else(|| {
            GeometryError::DanglingReference(format!(
                "bump net `{}` connects to unknown net `{target}`",
                n.name
            ))
        })?;
        if g.nets[t].role == NetRole::Bump {
            return Err(GeometryError::DanglingReference(format!(
                "bump net `{}` connects to another bump net",
                n.name
            )));
        }
        let e = net_to_electrical[t];
        net_to_electrical[i] = e;
        electrical_nets[e].members.push(i);
    }

    let mut solid_material = Vec::with_capacity(g.solids.len());
    let mut solid_net = Vec::with_capacity(g.solids.len());
    let mut bump_solids = Vec::with_capacity(g.solids.len());
    let mut referenced = vec![false; g.nets.len()];
    for (i, s) in g.solids.iter().enumerate() {
        for axis in Axis::ALL {
            let e = s.bounds.extent(axis);
            if !(e > 0.0) || !e.is_finite() {
                return Err(GeometryError::DegenerateSolid { index: i, axis });
            }
        }
        if !g.domain.contains_box(&s.bounds) {
            return Err(GeometryError::OutsideDomain(i));
        }
        let m = *material_index.get(s.material.as_str()).ok_or_else(|| {
            GeometryError::DanglingReference(format!(
                "solid {i} uses unknown material `{}`",
                s.material
            ))
        })?;
        let is_conductor = g.materials[m].kind == MaterialKind::Conductor;
        let net = match (&s.net, is_conductor) {
            (Some(name), true) => {
                let n = *net_index.get(name.as_str()).ok_or_else(|| {
                    GeometryError::DanglingReference(format!(
                        "solid {i} uses unknown net `{name}`"
                    ))
                })?;
                referenced[n] = true;
                bump_solids.push(g.nets[n].role == NetRole::Bump);
                Some(net_to_electrical[n])
            }
            (None, true) => {
                return Err(GeometryError::DanglingReference(format!(
                    "conductor solid {i} has no net"
                )))
            }
            (Some(name), false) => {
                return Err(GeometryError::DanglingReference(format!(
                    "non-conductor solid {i} references net `{name}`"
                )))
            }
            (None, false) => {
                bump_solids.push(false);
                None
            }
        };
        solid_material.push(m);
        solid_net.push(net);
    }
    if let Some(n) = referenced.iter().position(|r| !r) {
        return Err(GeometryError::DanglingReference(format!(
            "net `{}` has no conductor solid",
            g.nets[n].name
        )));
    }

    for i in 0..g.solids.len() {
        let Some(ni) = solid_net[i] else { continue };
        for j in (i + 1)..g.solids.len() {
            let Some(nj) = solid_net[j] else { continue };
            if ni != nj && g.solids[i].bounds.touches(&g.solids[j].bounds) {
                let (a, b) = (&g.solids[i].bounds, &g.solids[j].bounds);
                let gap_zero = (0..3).any(|k| a.max[k].min(b.max[k]) == a.min[k].max(b.min[k]));
                return Err(GeometryError::Overlap {
                    first: i,
                    second: j,
                    first_net: electrical_nets[ni].name.clone(),
                    second_net: electrical_nets[nj].name.clone(),
                    detail: if gap_zero { " (zero gap)".into() } else { String::new() },
                });
            }
        }
    }

    for (name, value) in [
        ("thickness", g.interface.thickness),
        ("epsilon_layer", g.interface.epsilon_layer),
    ] {
        if !value.is_finite() {
            return Err(GeometryError::InvalidInterface(format!("{name} is not finite")));
        }
    }
    if g.interface.thickness <= 0.0 {
        return Err(GeometryError::InvalidInterface("thickness must be > 0".into()));
    }
    if g.interface.epsilon_layer < 1.0 {
        return Err(GeometryError::InvalidInterface("epsilon_layer must be >= 1".into()));
    }

    let chip_split_z = chip_split(&geometry, &solid_material, &materials);

    let mut geometry = geometry;
    geometry.materials = materials;
    Ok(ValidatedGeometry {
        geometry,
        solid_material,
        solid_net,
        electrical_nets,
        bump_solids,
        background,
        chip_split_z,
    })
}

/// Midpoint of the widest z-gap between dielectric solids, if any.
fn chip_split(g: &DeviceGeometry, solid_material: &[usize], materials: &[Material]) -> Option<f64> {
    let mut spans: Vec<(f64, f64)> = g
        .solids
        .iter()
        .zip(solid_material)
        .filter(|(_, &m)| materials[m].kind == MaterialKind::Dielectric)
        .map(|(s, _)| (s.bounds.min[2], s.bounds.max[2]))
        .collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in spans {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
        .windows(2)
        .map(|w| (w[1].0 - w[0].1, 0.5 * (w[0].1 + w[1].0)))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, mid)| mid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_geometry() -> DeviceGeometry {
        DeviceGeometry::new(Cuboid::new([0.0; 3], [100.0, 100.0, 50.0]))
    }

    fn with_conductors(g: &mut DeviceGeometry) {
        g.materials.push(Material::conductor("metal"));
        g.nets.push(Net::new("top", NetRole::PadTop));
        g.nets.push(Net::new("bottom", NetRole::PadBottom));
    }

    #[test]
    fn empty_vacuum_box_is_valid() {
        let v = validate(box_geometry()).unwrap();
        assert!(v.electrical_nets().is_empty());
        assert_eq!(v.material_kind(v.material_at([1.0, 1.0, 1.0])), MaterialKind::Vacuum);
    }

    #[test]
    fn same_net_overlap_is_allowed() {
        let mut g = box_geometry();
        with_conductors(&mut g);
        g.nets.truncate(1);
        g.solids.push(Solid::new(
            Cuboid::new([10.0, 10.0, 10.0], [40.0, 40.0, 11.0]),
            "metal",
            Some("top"),
        ));
        g.solids.push(Solid::new(
            Cuboid::new([30.0, 30.0, 10.0], [60.0, 60.0, 11.0]),
            "metal",
            Some("top"),
        ));
        let v = validate(g).unwrap();
        assert_eq!(v.electrical_nets().len(), 1);
    }

    #[test]
    fn pads_sharing_a_face_are_rejected() {
        let mut g = box_geometry();
        with_conductors(&mut g);
        g.solids.push(Solid::new(
            Cuboid::new([10.0, 10.0, 10.0], [40.0, 40.0, 11.0]),
            "metal",
            Some("bottom"),
        ));
        g.solids.push(Solid::new(
            Cuboid::new([10.0, 10.0, 11.0], [40.0, 40.0, 12.0]),
            "metal",
            Some("top"),
        ));
        let err = validate(g).unwrap_err();
        assert!(matches!(err, GeometryError::Overlap { .. }), "{err}");
        assert!(err.to_string().contains("zero gap"));
    }

    #[test]
    fn unknown_references_and_degenerate_solids() {
        let mut g = box_geometry();
        g.solids.push(Solid::new(Cuboid::new([0.0; 3], [1.0; 3]), "unobtainium", None));
        assert!(matches!(validate(g).unwrap_err(), GeometryError::DanglingReference(_)));

        let mut g = box_geometry();
        with_conductors(&mut g);
        g.nets.truncate(1);
        g.solids.push(Solid::new(Cuboid::new([0.0; 3], [1.0; 3]), "metal", Some("nope")));
        assert!(matches!(validate(g).unwrap_err(), GeometryError::DanglingReference(_)));

        let mut g = box_geometry();
        g.solids.push(Solid::new(
            Cuboid::new([0.0; 3], [1.0, 0.0, 1.0]),
            "vacuum",
            None,
        ));
        assert!(matches!(
            validate(g).unwrap_err(),
            GeometryError::DegenerateSolid { axis: Axis::Y, .. }
        ));
    }

    #[test]
    fn nets_without_solids_are_dangling() {
        let mut g = box_geometry();
        with_conductors(&mut g);
        assert!(matches!(validate(g).unwrap_err(), GeometryError::DanglingReference(_)));
    }

    #[test]
    fn vacuum_must_have_unit_permittivity() {
        let mut g = box_geometry();
        g.materials[0].epsilon_r = 2.0;
        assert!(matches!(validate(g).unwrap_err(), GeometryError::InvalidMaterial { .. }));
    }

    #[test]
    fn chip_split_sits_between_substrates() {
        let mut g = box_geometry();
        g.materials.push(Material::dielectric("sapphire", 11.45));
        g.solids.push(Solid::new(Cuboid::new([0.0; 3], [100.0, 100.0, 20.0]), "sapphire", None));
        g.solids.push(Solid::new(
            Cuboid::new([0.0, 0.0, 30.0], [100.0, 100.0, 50.0]),
            "sapphire",
            None,
        ));
        let v = validate(g).unwrap();
        assert_eq!(v.chip_split_z(), Some(25.0));
        assert_eq!(v.chip_of_z(20.0), ChipSide::Bottom);
        assert_eq!(v.chip_of_z(30.0), ChipSide::Top);
    }
}
