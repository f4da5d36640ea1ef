//! Load a device from a geometry file, list its surfaces by class, and solve
//! it. Any of the files under `data/geometries` works.
//!
//! ```bash
//! cargo run --release --example custom_geometry -- data/geometries/plate_pair.toml
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use flipmon::constants::FEMTOFARAD;
use flipmon::geometry::{classify_surfaces, read_geometry, validate, ChipSide, SurfaceClass};
use flipmon::solver::{build_grid, capacitance_matrix, GridPolicy, SolverSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/geometries/plate_pair.toml"));
    let geometry = Arc::new(validate(read_geometry(&path)?)?);
    let nets: Vec<_> = geometry.electrical_nets().iter().map(|n| format!("{} ({:?})", n.name, n.role)).collect();
    println!("{}: nets {}", path.display(), nets.join(", "));

    let surfaces = classify_surfaces(&geometry);
    for class in [SurfaceClass::MA, SurfaceClass::MS, SurfaceClass::SA, SurfaceClass::BumpSurface] {
        println!(
            "{class:<12} top {:>12.1} um^2   bottom {:>12.1} um^2",
            surfaces.area(class, Some(ChipSide::Top)),
            surfaces.area(class, Some(ChipSide::Bottom))
        );
    }

    let grid = Arc::new(build_grid(geometry, &GridPolicy::default())?);
    let run = capacitance_matrix(&grid, &SolverSettings::default())?;
    for (i, n) in run.matrix.nets.iter().enumerate() {
        let row: Vec<String> = run.matrix.entries[i].iter().map(|v| format!("{:.3}", v / FEMTOFARAD)).collect();
        println!("{n:>14}: [{}] fF", row.join(", "));
    }
    Ok(())
}
