//! Surface classification: metal-air, metal-substrate, substrate-air and bump faces.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Axis, ChipSide, ValidatedGeometry};
use crate::constants::MICRON;
use crate::solver::grid::feature_grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SurfaceClass {
    /// Conductor facing vacuum.
    MA,
    /// Conductor facing a dielectric (written "SM" in some tables).
    MS,
    /// Uncovered dielectric facing vacuum.
    SA,
    /// Lateral faces of indium bumps.
    BumpSurface,
}

impl fmt::Display for SurfaceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            SurfaceClass::MA => "MA",
            SurfaceClass::MS => "MS",
            SurfaceClass::SA => "SA",
            SurfaceClass::BumpSurface => "BumpSurface",
        })
    }
}

/// One classified rectangle of an exterior surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePatch {
    pub class: SurfaceClass,
    pub side: ChipSide,
    pub normal: Axis,
    /// Center, micrometers.
    pub center: [f64; 3],
    /// Area, square micrometers.
    pub area: f64,
    /// Electrical net of the conductor, for metal faces.
    pub net: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct SurfaceSet {
    pub patches: Vec<SurfacePatch>,
}

impl SurfaceSet {
    /// Total area (um^2) of a class, optionally restricted to one chip.
    pub fn area(&self, class: SurfaceClass, side: Option<ChipSide>) -> f64 {
        self.patches
            .iter()
            .filter(|p| p.class == class && side.map_or(true, |s| p.side == s))
            .map(|p| p.area)
            .fold(0.0, |a, b| a + b)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SurfacePatch> {
        self.patches.iter()
    }
}

/// Label every exterior face of the solid model. Films are kept at their
/// drawn thickness here; the solver's sheet approximation does not apply.
pub fn classify_surfaces(geometry: &ValidatedGeometry) -> SurfaceSet {
    let grid = feature_grid(Arc::new(geometry.clone()));
    let patches = grid
        .surface_elements()
        .into_iter()
        .map(|e| {
            let (u, v) = e.axis.others();
            let mut center = [0.0; 3];
            center[e.axis.index()] = grid.lines(e.axis)[e.plane];
            center[u.index()] = 0.5 * (grid.lines(u)[e.cell_u] + grid.lines(u)[e.cell_u + 1]);
            center[v.index()] = 0.5 * (grid.lines(v)[e.cell_v] + grid.lines(v)[e.cell_v + 1]);
            SurfacePatch {
                class: e.class,
                side: e.side,
                normal: e.axis,
                center: center.map(|c| c / MICRON),
                area: e.area / (MICRON * MICRON),
                net: e.net,
            }
        })
        .collect();
    SurfaceSet { patches }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{validate, Cuboid, DeviceGeometry, FlipmonParams, Material, Net, NetRole, Solid};
    use proptest::prelude::*;

    fn slab_and_box(slab: (f64, f64), b: Cuboid) -> ValidatedGeometry {
        let mut g = DeviceGeometry::new(Cuboid::new([0.0; 3], [50.0, 50.0, 50.0]));
        g.materials.push(Material::dielectric("sub", 9.0));
        g.materials.push(Material::conductor("metal"));
        g.nets.push(Net::new("n", NetRole::Other));
        g.solids.push(Solid::new(Cuboid::new([0.0, 0.0, slab.0], [50.0, 50.0, slab.1]), "sub", None));
        g.solids.push(Solid::new(b, "metal", Some("n")));
        validate(g).unwrap()
    }

    #[test]
    fn plate_inner_faces_are_ma() {
        let g = validate(FlipmonParams::default().build().unwrap()).unwrap();
        let s = classify_surfaces(&g);
        let top_pad = g.net_index("qubit_top").unwrap();
        let gap = FlipmonParams::default().gap_d;
        let inner_ma: f64 = s
            .iter()
            .filter(|p| p.net == Some(top_pad) && p.normal == Axis::Z && (p.center[2] - gap).abs() < 1e-9)
            .map(|p| {
                assert_eq!(p.class, SurfaceClass::MA);
                p.area
            })
            .sum();
        assert!(inner_ma > 0.0);
        assert!(s.area(SurfaceClass::BumpSurface, None) > 0.0);
        assert!(s.area(SurfaceClass::SA, Some(ChipSide::Top)) > 0.0);
        assert!(s.area(SurfaceClass::SA, Some(ChipSide::Bottom)) > 0.0);
    }

    #[test]
    fn pad_on_substrate_has_ms_underside() {
        let g = slab_and_box((0.0, 10.0), Cuboid::new([10.0, 10.0, 10.0], [20.0, 30.0, 11.0]));
        let s = classify_surfaces(&g);
        assert!((s.area(SurfaceClass::MS, None) - 200.0).abs() < 1e-9);
        assert!((s.area(SurfaceClass::MA, None) - (200.0 + 2.0 * (10.0 + 20.0))).abs() < 1e-9);
    }

    #[test]
    fn fully_covered_substrate_has_no_sa() {
        let g = slab_and_box((0.0, 10.0), Cuboid::new([0.0, 0.0, 10.0], [50.0, 50.0, 11.0]));
        let s = classify_surfaces(&g);
        assert_eq!(s.area(SurfaceClass::SA, None), 0.0);
    }

    proptest! {
        #[test]
        fn metal_classes_partition_conductor_surface(
            lo in prop::array::uniform3(1u8..20), size in prop::array::uniform3(1u8..20),
            s0 in 0u8..25, st in 1u8..20,
        ) {
            let min = lo.map(f64::from);
            let max = [0, 1, 2].map(|k| min[k] + f64::from(size[k]));
            let slab = (f64::from(s0), f64::from(s0) + f64::from(st));
            let g = slab_and_box(slab, Cuboid::new(min, max));
            let s = classify_surfaces(&g);
            let (a, b, c) = (max[0] - min[0], max[1] - min[1], max[2] - min[2]);
            let total = 2.0 * (a * b + b * c + c * a);
            let metal = s.area(SurfaceClass::MA, None) + s.area(SurfaceClass::MS, None);
            prop_assert!((metal - total).abs() < 1e-9);
            // Faces inside the slab face substrate.
            let inside = |z: f64| z > slab.0 && z < slab.1;
            let zl = min[2].max(slab.0);
            let zh = max[2].min(slab.1);
            let mut ms = 2.0 * (a + b) * (zh - zl).max(0.0);
            if inside(min[2]) { ms += a * b; }
            if inside(max[2]) { ms += a * b; }
            if min[2] == slab.1 { ms += a * b; }
            if max[2] == slab.0 { ms += a * b; }
            prop_assert!((s.area(SurfaceClass::MS, None) - ms).abs() < 1e-9, "ms {} vs {}", s.area(SurfaceClass::MS, None), ms);
            let patches_ok = s.iter().all(|p| p.area > 0.0);
            prop_assert!(patches_ok);
        }
    }
}
