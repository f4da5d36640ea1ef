//! Two plates spanning the whole cross-section, first in vacuum and then with
//! a sapphire layer on the bottom plate. Both have closed forms.
//!
//! ```bash
//! cargo run --release --example parallel_plate
//! ```

use std::sync::Arc;

use flipmon::constants::{parallel_plate_capacitance, FEMTOFARAD, MICRON, VACUUM_PERMITTIVITY};
use flipmon::geometry::{validate, Cuboid, Material, PlatePairParams, Solid};
use flipmon::solver::{build_grid, capacitance_matrix, GridPolicy, SolverSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plates = PlatePairParams::default();
    let area = (plates.side * MICRON).powi(2);

    let vacuum = validate(plates.build()?)?;
    let grid = Arc::new(build_grid(Arc::new(vacuum), &GridPolicy::default())?);
    let run = capacitance_matrix(&grid, &SolverSettings::default())?;
    let c = -run.matrix.get("plate_top", "plate_bottom").unwrap();
    let exact = parallel_plate_capacitance(area, plates.gap_d * MICRON, 1.0);
    println!(
        "vacuum gap {} um: C = {:.4} fF, eps0 A / d = {:.4} fF ({:+.3e} relative)",
        plates.gap_d,
        c / FEMTOFARAD,
        exact / FEMTOFARAD,
        c / exact - 1.0
    );

    // 2 um of sapphire on the bottom plate, 3 um of vacuum above it.
    let (t, eps) = (2.0, 11.45);
    let mut g = plates.build()?;
    g.materials.push(Material::dielectric("sapphire", eps));
    g.solids.push(Solid::new(Cuboid::new([0.0, 0.0, 0.0], [plates.side, plates.side, t]), "sapphire", None));
    let grid = Arc::new(build_grid(Arc::new(validate(g)?), &GridPolicy::default())?);
    let run = capacitance_matrix(&grid, &SolverSettings::default())?;
    let c = -run.matrix.get("plate_top", "plate_bottom").unwrap();
    let exact = VACUUM_PERMITTIVITY * area / ((t / eps + plates.gap_d - t) * MICRON);
    println!(
        "series stack:      C = {:.4} fF, closed form  = {:.4} fF ({:+.3e} relative)",
        c / FEMTOFARAD,
        exact / FEMTOFARAD,
        c / exact - 1.0
    );
    Ok(())
}
