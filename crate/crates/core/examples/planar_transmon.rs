//! A planar two-pad transmon for comparison: most of its field lives in the
//! substrate, and its interfaces sit where the field is strongest.
//!
//! ```bash
//! cargo run --release --example planar_transmon
//! ```

use std::sync::Arc;

use flipmon::constants::FEMTOFARAD;
use flipmon::geometry::{validate, PlanarParams};
use flipmon::participation::full_report;
use flipmon::solver::{build_grid, capacitance_matrix, GridPolicy, SolverSettings};
use flipmon::transmon::ec_from_capacitance;
use flipmon::RegionId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = PlanarParams::default();
    let geometry = Arc::new(validate(params.build()?)?);
    let grid = Arc::new(build_grid(geometry, &GridPolicy::default())?);
    let settings = SolverSettings::default();
    let run = capacitance_matrix(&grid, &settings)?;
    let ce = ec_from_capacitance(&run.matrix, ("pad_a", "pad_b"), 0.0)?;
    println!("C_sigma = {:.2} fF, E_C/h = {:.1} MHz", ce.c_sigma / FEMTOFARAD, ce.ec_ghz * 1e3);

    let report = full_report(&run.qubit_mode_solution("pad_a", "pad_b", &settings)?)?;
    println!("p(vacuum)    = {:.3}", report.get(RegionId::Vacuum));
    println!("p(substrate) = {:.3}", report.get(RegionId::SubB));
    for r in [RegionId::MaB, RegionId::MsB, RegionId::SaB] {
        println!("{:<13}= {:.2e}", format!("p({})", r.name()), report.get(r));
    }
    Ok(())
}
