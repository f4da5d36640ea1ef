//! Parametric device templates.
//!
//! Both templates place the metal as thin films embedded in the top of the
//! substrate, so the exposed metal surface is coplanar with the exposed
//! substrate surface. The solver meshes films thinner than its sheet threshold
//! as zero-thickness sheets on that exposed plane.

use serde::{Deserialize, Serialize};

use super::{
    BoundaryKind, Cuboid, DeviceGeometry, GeometryError, Material, Net, NetRole, OuterBoundary, Solid,
};
use crate::defaults;

const SUBSTRATE: &str = "sapphire";
const FILM: &str = "tantalum";
const INDIUM: &str = "indium";

/// Flip-chip transmon whose shunt capacitor is a vacuum-gap parallel plate.
///
/// Bottom chip (carrier, z <= 0): the bottom pad, the junction island and a
/// ground plane with a square cutout. Top chip (z >= gap): the top pad and its
/// own ground plane. An indium bump, modeled as a square prism with the same
/// cross-section as the round bump, joins the island to the top pad.
///
/// Plan view of the bottom chip (x to the right), inside the top pad footprint:
///
/// ```text
///  +-----------------------------+----+--------+
///  |                             | jg |        |
///  |        bottom pad           |    | island |  <- bump centered on island
///  |                             |    |        |
///  +-----------------------------+----+--------+
///  <----------------- pad_side ---------------->
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlipmonParams {
    /// Side of the square top pad, um.
    pub pad_side: f64,
    /// Vacuum gap between the two metal planes, um.
    pub gap_d: f64,
    /// Radius of the round bump; meshed as a square of equal area, um.
    pub bump_radius: f64,
    pub substrate_thickness: f64,
    pub sub_epsilon: f64,
    /// Width of the junction gap between island and bottom pad, um.
    pub junction_gap: f64,
    /// Island extends this far beyond the bump on every side, um.
    pub island_margin: f64,
    /// Distance from the top pad to the top ground-plane cutout, um.
    pub ground_gap_top: f64,
    /// Distance from the top-pad footprint to the bottom ground-plane cutout, um.
    pub ground_gap_bottom: f64,
    pub metal_thickness: f64,
    /// Vacuum beyond the back side of each substrate, um.
    pub outer_vacuum: f64,
    /// Domain width as a multiple of the ground-cutout width.
    pub domain_factor: f64,
}

impl Default for FlipmonParams {
    fn default() -> Self {
        Self {
            pad_side: 182.5,
            gap_d: defaults::GAP_UM,
            bump_radius: 10.0,
            substrate_thickness: 200.0,
            sub_epsilon: defaults::SUBSTRATE_EPSILON,
            junction_gap: 10.0,
            island_margin: 15.0,
            ground_gap_top: 30.0,
            ground_gap_bottom: 30.0,
            metal_thickness: 0.1,
            outer_vacuum: 100.0,
            domain_factor: 3.0,
        }
    }
}

impl FlipmonParams {
    /// Side of the square that replaces the round bump.
    pub fn bump_side(&self) -> f64 {
        self.bump_radius * std::f64::consts::PI.sqrt()
    }

    pub fn island_side(&self) -> f64 {
        self.bump_side() + 2.0 * self.island_margin
    }

    /// Overlap area of the two capacitor plates (bottom pad under top pad), um^2.
    pub fn plate_overlap_area(&self) -> f64 {
        let s = self.pad_side;
        s * (s - self.island_side() - self.junction_gap)
    }

    /// Set a named scalar parameter (used by sweeps).
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), GeometryError> {
        let slot = match name {
            "pad_side" => &mut self.pad_side,
            "gap_d" => &mut self.gap_d,
            "bump_radius" => &mut self.bump_radius,
            "substrate_thickness" => &mut self.substrate_thickness,
            "sub_epsilon" => &mut self.sub_epsilon,
            "junction_gap" => &mut self.junction_gap,
            "island_margin" => &mut self.island_margin,
            "ground_gap_top" => &mut self.ground_gap_top,
            "ground_gap_bottom" => &mut self.ground_gap_bottom,
            "metal_thickness" => &mut self.metal_thickness,
            "outer_vacuum" => &mut self.outer_vacuum,
            "domain_factor" => &mut self.domain_factor,
            other => {
                return Err(GeometryError::Template(format!(
                    "unknown flipmon parameter `{other}`"
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    pub fn build(&self) -> Result<DeviceGeometry, GeometryError> {
        let p = self;
        for (name, v) in [
            ("pad_side", p.pad_side),
            ("gap_d", p.gap_d),
            ("bump_radius", p.bump_radius),
            ("substrate_thickness", p.substrate_thickness),
            ("junction_gap", p.junction_gap),
            ("metal_thickness", p.metal_thickness),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(GeometryError::Template(format!("{name} must be > 0, got {v}")));
            }
        }
        if p.island_margin < 0.0 || p.ground_gap_top <= 0.0 || p.ground_gap_bottom <= 0.0 {
            return Err(GeometryError::Template(
                "island_margin must be >= 0 and ground gaps > 0".into(),
            ));
        }
        if p.sub_epsilon < 1.0 || p.domain_factor < 1.0 || p.outer_vacuum < 0.0 {
            return Err(GeometryError::Template(
                "sub_epsilon and domain_factor must be >= 1, outer_vacuum >= 0".into(),
            ));
        }
        let s = p.pad_side;
        let half = 0.5 * s;
        let w_island = p.island_side();
        if w_island + p.junction_gap >= s {
            return Err(GeometryError::Template(format!(
                "bump (side {:.2} um) with island margin does not fit inside the {s} um pad",
                p.bump_side()
            )));
        }

        let d = p.gap_d;
        let h = p.substrate_thickness;
        let t = p.metal_thickness;
        let cut_top = half + p.ground_gap_top;
        let cut_bottom = half + p.ground_gap_bottom;
        let l = p.domain_factor * cut_top.max(cut_bottom);
        let domain = Cuboid::new(
            [-l, -l, -h - p.outer_vacuum],
            [l, l, d + h + p.outer_vacuum],
        );

        let mut g = DeviceGeometry::new(domain);
        g.materials.push(Material::dielectric(SUBSTRATE, p.sub_epsilon));
        g.materials.push(Material::conductor(FILM));
        g.materials.push(Material::conductor(INDIUM));
        g.nets = vec![
            Net::new("ground", NetRole::Ground),
            Net::new("qubit_top", NetRole::PadTop),
            Net::new("qubit_bottom", NetRole::PadBottom),
            Net {
                name: "bump".into(),
                role: NetRole::Bump,
                connect_to: Some("qubit_top".into()),
            },
        ];

        g.solids.push(Solid::new(Cuboid::new([-l, -l, -h], [l, l, 0.0]), SUBSTRATE, None));
        g.solids.push(Solid::new(Cuboid::new([-l, -l, d], [l, l, d + h]), SUBSTRATE, None));

        ground_frame(&mut g, l, cut_bottom, -t, 0.0);
        ground_frame(&mut g, l, cut_top, d, d + t);

        // Bottom chip: capacitor plate and junction island.
        let island_x1 = half;
        let island_x0 = half - w_island;
        let plate_x1 = island_x0 - p.junction_gap;
        g.solids.push(Solid::new(
            Cuboid::new([-half, -half, -t], [plate_x1, half, 0.0]),
            FILM,
            Some("qubit_bottom"),
        ));
        g.solids.push(Solid::new(
            Cuboid::new([island_x0, -0.5 * w_island, -t], [island_x1, 0.5 * w_island, 0.0]),
            FILM,
            Some("qubit_top"),
        ));

        // Top chip plate.
        g.solids.push(Solid::new(
            Cuboid::new([-half, -half, d], [half, half, d + t]),
            FILM,
            Some("qubit_top"),
        ));

        let b = p.bump_side();
        let bx = 0.5 * (island_x0 + island_x1);
        g.solids.push(Solid::new(
            Cuboid::centered(bx, 0.0, b, b, 0.0, d),
            INDIUM,
            Some("bump"),
        ));
        Ok(g)
    }
}

/// Ground plane covering `[-l, l]^2` minus the square `[-cut, cut]^2`.
fn ground_frame(g: &mut DeviceGeometry, l: f64, cut: f64, z0: f64, z1: f64) {
    let parts = [
        Cuboid::new([-l, -l, z0], [-cut, l, z1]),
        Cuboid::new([cut, -l, z0], [l, l, z1]),
        Cuboid::new([-cut, -l, z0], [cut, -cut, z1]),
        Cuboid::new([-cut, cut, z0], [cut, l, z1]),
    ];
    for c in parts {
        g.solids.push(Solid::new(c, FILM, Some("ground")));
    }
}

/// Flipmon stack with the remaining parameters at their defaults.
pub fn flipmon_template(
    pad_side: f64,
    gap_d: f64,
    bump_radius: f64,
    substrate_thickness: f64,
    sub_epsilon: f64,
) -> Result<DeviceGeometry, GeometryError> {
    FlipmonParams {
        pad_side,
        gap_d,
        bump_radius,
        substrate_thickness,
        sub_epsilon,
        ..FlipmonParams::default()
    }
    .build()
}

/// Conventional coplanar transmon: two floating pads side by side on one
/// substrate, inside a cutout of the ground plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanarParams {
    /// Pad extent along x (the axis joining the pads), um.
    pub pad_width: f64,
    /// Pad extent along y, um.
    pub pad_length: f64,
    /// Edge-to-edge distance between the pads, um.
    pub pad_separation: f64,
    pub ground_gap: f64,
    pub substrate_thickness: f64,
    pub sub_epsilon: f64,
    pub metal_thickness: f64,
    /// Vacuum above the chip and below its back side, um.
    pub outer_vacuum: f64,
    pub domain_factor: f64,
}

impl Default for PlanarParams {
    fn default() -> Self {
        Self {
            pad_width: 120.0,
            pad_length: 400.0,
            pad_separation: 30.0,
            ground_gap: 60.0,
            substrate_thickness: 200.0,
            sub_epsilon: defaults::SUBSTRATE_EPSILON,
            metal_thickness: 0.1,
            outer_vacuum: 300.0,
            domain_factor: 3.0,
        }
    }
}

impl PlanarParams {
    pub fn build(&self) -> Result<DeviceGeometry, GeometryError> {
        let p = self;
        for (name, v) in [
            ("pad_width", p.pad_width),
            ("pad_length", p.pad_length),
            ("ground_gap", p.ground_gap),
            ("substrate_thickness", p.substrate_thickness),
            ("metal_thickness", p.metal_thickness),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(GeometryError::Template(format!("{name} must be > 0, got {v}")));
            }
        }
        if p.pad_separation < 0.0 || p.sub_epsilon < 1.0 || p.domain_factor < 1.0 {
            return Err(GeometryError::Template(
                "pad_separation must be >= 0; sub_epsilon, domain_factor >= 1".into(),
            ));
        }
        let h = p.substrate_thickness;
        let t = p.metal_thickness;
        let inner = 0.5 * p.pad_separation;
        let outer = inner + p.pad_width;
        let cut_x = outer + p.ground_gap;
        let cut_y = 0.5 * p.pad_length + p.ground_gap;
        let l = p.domain_factor * cut_x.max(cut_y);
        let domain = Cuboid::new([-l, -l, -h - p.outer_vacuum], [l, l, p.outer_vacuum]);

        let mut g = DeviceGeometry::new(domain);
        g.materials.push(Material::dielectric(SUBSTRATE, p.sub_epsilon));
        g.materials.push(Material::conductor(FILM));
        g.nets = vec![
            Net::new("ground", NetRole::Ground),
            Net::new("pad_a", NetRole::PadTop),
            Net::new("pad_b", NetRole::PadBottom),
        ];
        g.solids.push(Solid::new(Cuboid::new([-l, -l, -h], [l, l, 0.0]), SUBSTRATE, None));
        let parts = [
            Cuboid::new([-l, -l, -t], [-cut_x, l, 0.0]),
            Cuboid::new([cut_x, -l, -t], [l, l, 0.0]),
            Cuboid::new([-cut_x, -l, -t], [cut_x, -cut_y, 0.0]),
            Cuboid::new([-cut_x, cut_y, -t], [cut_x, l, 0.0]),
        ];
        for c in parts {
            g.solids.push(Solid::new(c, FILM, Some("ground")));
        }
        let y = 0.5 * p.pad_length;
        g.solids.push(Solid::new(
            Cuboid::new([-outer, -y, -t], [-inner, y, 0.0]),
            FILM,
            Some("pad_a"),
        ));
        g.solids.push(Solid::new(
            Cuboid::new([inner, -y, -t], [outer, y, 0.0]),
            FILM,
            Some("pad_b"),
        ));
        Ok(g)
    }
}

impl PlanarParams {
    /// Set a named scalar parameter (used by sweeps).
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), GeometryError> {
        let slot = match name {
            "pad_width" => &mut self.pad_width,
            "pad_length" => &mut self.pad_length,
            "pad_separation" => &mut self.pad_separation,
            "ground_gap" => &mut self.ground_gap,
            "substrate_thickness" => &mut self.substrate_thickness,
            "sub_epsilon" => &mut self.sub_epsilon,
            "metal_thickness" => &mut self.metal_thickness,
            "outer_vacuum" => &mut self.outer_vacuum,
            "domain_factor" => &mut self.domain_factor,
            other => {
                return Err(GeometryError::Template(format!(
                    "unknown planar parameter `{other}`"
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

/// Two plates filling the whole cross-section of an insulating box, so the
/// field between them is exactly uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlatePairParams {
    pub side: f64,
    pub gap_d: f64,
    pub plate_thickness: f64,
}

impl Default for PlatePairParams {
    fn default() -> Self {
        Self {
            side: 220.5,
            gap_d: defaults::GAP_UM,
            plate_thickness: 2.0,
        }
    }
}

impl PlatePairParams {
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), GeometryError> {
        let slot = match name {
            "side" => &mut self.side,
            "gap_d" => &mut self.gap_d,
            "plate_thickness" => &mut self.plate_thickness,
            other => {
                return Err(GeometryError::Template(format!(
                    "unknown plate-pair parameter `{other}`"
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    pub fn build(&self) -> Result<DeviceGeometry, GeometryError> {
        for (name, v) in [("side", self.side), ("gap_d", self.gap_d), ("plate_thickness", self.plate_thickness)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(GeometryError::Template(format!("{name} must be > 0, got {v}")));
            }
        }
        let (s, d, t) = (self.side, self.gap_d, self.plate_thickness);
        let mut g = DeviceGeometry::new(Cuboid::new([0.0, 0.0, -t], [s, s, d + t]));
        g.materials.push(Material::conductor(FILM));
        g.nets = vec![
            Net::new("plate_top", NetRole::PadTop),
            Net::new("plate_bottom", NetRole::PadBottom),
        ];
        g.solids.push(Solid::new(Cuboid::new([0.0, 0.0, -t], [s, s, 0.0]), FILM, Some("plate_bottom")));
        g.solids.push(Solid::new(Cuboid::new([0.0, 0.0, d], [s, s, d + t]), FILM, Some("plate_top")));
        g.boundary = OuterBoundary::uniform(BoundaryKind::Insulating);
        Ok(g)
    }
}

/// Planar transmon with explicit pad dimensions and default surroundings.
pub fn planar_transmon_template(
    pad_width: f64,
    pad_length: f64,
    pad_separation: f64,
    sub_epsilon: f64,
) -> Result<DeviceGeometry, GeometryError> {
    PlanarParams {
        pad_width,
        pad_length,
        pad_separation,
        sub_epsilon,
        ..PlanarParams::default()
    }
    .build()
}
