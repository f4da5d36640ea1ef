//! Energy participation ratios of the flipmon qubit mode, in the layout of
//! the usual bulk / interface table.
//!
//! ```bash
//! cargo run --release --example participation_table
//! ```

use std::sync::Arc;

use flipmon::geometry::{validate, FlipmonParams};
use flipmon::participation::full_report;
use flipmon::solver::{build_grid, capacitance_matrix, GridPolicy, SolverSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let geometry = Arc::new(validate(FlipmonParams::default().build()?)?);
    let grid = Arc::new(build_grid(geometry, &GridPolicy::default())?);
    let settings = SolverSettings::default();
    let run = capacitance_matrix(&grid, &settings)?;
    // Pads float with +q and -q; the ground planes stay at 0 V.
    let mode = run.qubit_mode_solution("qubit_top", "qubit_bottom", &settings)?;
    let report = full_report(&mode)?;
    print!("{}", report.to_table());
    println!(
        "\nmesh {:?}, cells {:.2}..{:.1} um, residual {:.1e}",
        report.mesh.dims, report.mesh.min_cell_um, report.mesh.max_cell_um, report.mesh.residual
    );
    Ok(())
}
