//! TOML geometry documents. See `docs/geometry-format.md` for the schema.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    BoundaryKind, ChipSide, Cuboid, DeviceGeometry, GeometryError, InterfaceClass, InterfaceSpec,
    Material, MaterialKind, Net, OuterBoundary, Solid,
};
use crate::constants::NANOMETER;
use crate::defaults;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    domain: Cuboid,
    #[serde(default)]
    materials: Vec<Material>,
    #[serde(default)]
    nets: Vec<Net>,
    #[serde(default)]
    solids: Vec<Solid>,
    #[serde(default)]
    interface: InterfaceDoc,
    #[serde(default)]
    boundary: BoundaryDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterfaceDoc {
    #[serde(default = "default_thickness_nm")]
    thickness_nm: f64,
    #[serde(default = "default_interface_epsilon")]
    epsilon: f64,
    /// Entries like `"MA_top"`; all six when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    classes: Option<Vec<String>>,
}

fn default_thickness_nm() -> f64 {
    defaults::INTERFACE_THICKNESS_NM
}

fn default_interface_epsilon() -> f64 {
    defaults::INTERFACE_EPSILON
}

impl Default for InterfaceDoc {
    fn default() -> Self {
        Self {
            thickness_nm: default_thickness_nm(),
            epsilon: default_interface_epsilon(),
            classes: None,
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryDoc {
    #[serde(default)]
    default: BoundaryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_min: Option<BoundaryKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_max: Option<BoundaryKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y_min: Option<BoundaryKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y_max: Option<BoundaryKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    z_min: Option<BoundaryKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    z_max: Option<BoundaryKind>,
}

fn class_name(c: InterfaceClass, s: ChipSide) -> String {
    let c = match c {
        InterfaceClass::MA => "MA",
        InterfaceClass::MS => "MS",
        InterfaceClass::SA => "SA",
    };
    let s = match s {
        ChipSide::Top => "top",
        ChipSide::Bottom => "bottom",
    };
    format!("{c}_{s}")
}

fn parse_class(name: &str) -> Result<(InterfaceClass, ChipSide), GeometryError> {
    let bad = || GeometryError::InvalidInterface(format!("unknown interface class `{name}`"));
    let (c, s) = name.split_once('_').ok_or_else(bad)?;
    let c = match c {
        "MA" => InterfaceClass::MA,
        // The SM spelling is accepted as an alias.
        "MS" | "SM" => InterfaceClass::MS,
        "SA" => InterfaceClass::SA,
        _ => return Err(bad()),
    };
    let s = match s {
        "top" | "t" => ChipSide::Top,
        "bottom" | "b" => ChipSide::Bottom,
        _ => return Err(bad()),
    };
    Ok((c, s))
}

/// Parse a geometry document. The result is not yet validated.
pub fn from_toml_str(text: &str) -> Result<DeviceGeometry, GeometryError> {
    let doc: Document = toml::from_str(text).map_err(|e| GeometryError::Parse(e.to_string()))?;
    let mut materials = doc.materials;
    if !materials.iter().any(|m| m.kind == MaterialKind::Vacuum) {
        materials.insert(0, Material::vacuum());
    }
    let classes = match &doc.interface.classes {
        None => InterfaceSpec::default().classes,
        Some(list) => list
            .iter()
            .map(|c| parse_class(c))
            .collect::<Result<BTreeSet<_>, _>>()?,
    };
    let b = &doc.boundary;
    let d = b.default;
    let boundary = OuterBoundary {
        faces: [
            b.x_min.unwrap_or(d),
            b.x_max.unwrap_or(d),
            b.y_min.unwrap_or(d),
            b.y_max.unwrap_or(d),
            b.z_min.unwrap_or(d),
            b.z_max.unwrap_or(d),
        ],
    };
    Ok(DeviceGeometry {
        domain: doc.domain,
        solids: doc.solids,
        materials,
        nets: doc.nets,
        interface: InterfaceSpec {
            thickness: doc.interface.thickness_nm * NANOMETER,
            epsilon_layer: doc.interface.epsilon,
            classes,
        },
        boundary,
    })
}

/// Serialize a geometry; [`from_toml_str`] reads it back unchanged.
pub fn to_toml_string(geometry: &DeviceGeometry) -> Result<String, GeometryError> {
    let all = InterfaceSpec::default().classes;
    let classes = (geometry.interface.classes != all).then(|| {
        geometry
            .interface
            .classes
            .iter()
            .map(|&(c, s)| class_name(c, s))
            .collect()
    });
    let f = geometry.boundary.faces;
    let d = f[0];
    let over = |k: BoundaryKind| (k != d).then_some(k);
    let doc = Document {
        domain: geometry.domain,
        materials: geometry.materials.clone(),
        nets: geometry.nets.clone(),
        solids: geometry.solids.clone(),
        interface: InterfaceDoc {
            thickness_nm: geometry.interface.thickness / NANOMETER,
            epsilon: geometry.interface.epsilon_layer,
            classes,
        },
        boundary: BoundaryDoc {
            default: d,
            x_min: over(f[0]),
            x_max: over(f[1]),
            y_min: over(f[2]),
            y_max: over(f[3]),
            z_min: over(f[4]),
            z_max: over(f[5]),
        },
    };
    toml::to_string(&doc).map_err(|e| GeometryError::Parse(e.to_string()))
}

pub fn read_geometry(path: impl AsRef<Path>) -> Result<DeviceGeometry, GeometryError> {
    let text = std::fs::read_to_string(path)?;
    from_toml_str(&text)
}

pub fn write_geometry(path: impl AsRef<Path>, geometry: &DeviceGeometry) -> Result<(), GeometryError> {
    std::fs::write(path, to_toml_string(geometry)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FlipmonParams;

    const PLATES: &str = r#"
[domain]
min = [0.0, 0.0, -20.0]
max = [100.0, 100.0, 25.0]

[[materials]]
name = "metal"
kind = "conductor"

[[nets]]
name = "bottom"
role = "pad_bottom"

[[nets]]
name = "top"
role = "pad_top"

[[solids]]
min = [0.0, 0.0, -0.1]
max = [100.0, 100.0, 0.0]
material = "metal"
net = "bottom"

[[solids]]
min = [0.0, 0.0, 5.0]
max = [100.0, 100.0, 5.1]
material = "metal"
net = "top"

[interface]
thickness_nm = 2.0
classes = ["MA_top", "SM_bottom"]

[boundary]
default = "insulating"
z_min = "grounded"
"#;

    #[test]
    fn parses_document() {
        let g = from_toml_str(PLATES).unwrap();
        assert_eq!(g.solids.len(), 2);
        assert_eq!(g.materials[0].kind, MaterialKind::Vacuum);
        assert!((g.interface.thickness - 2e-9).abs() < 1e-24);
        assert_eq!(g.interface.epsilon_layer, 10.0);
        assert!(g.interface.classes.contains(&(InterfaceClass::MS, ChipSide::Bottom)));
        assert_eq!(g.boundary.faces[4], BoundaryKind::Grounded);
        assert_eq!(g.boundary.faces[5], BoundaryKind::Insulating);
        super::super::validate(g).unwrap();
    }

    #[test]
    fn roundtrip_is_lossless() {
        let g = FlipmonParams::default().build().unwrap();
        let text = to_toml_string(&g).unwrap();
        assert_eq!(from_toml_str(&text).unwrap(), g);
        let p = from_toml_str(PLATES).unwrap();
        assert_eq!(from_toml_str(&to_toml_string(&p).unwrap()).unwrap(), p);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = PLATES.replace("[interface]", "[interface]\nfoo = 1");
        assert!(matches!(from_toml_str(&text), Err(GeometryError::Parse(_))));
        assert!(from_toml_str("domain = 3").is_err());
    }
}
