//! |E| on the y = 0 plane through the flipmon: the gap between the plates
//! is bright, while the bump and the island it shorts to the top pad stay
//! dark. Writes `slice_y0.svg` and `slice_y0.csv` to the current directory.
//!
//! ```bash
//! cargo run --release --example field_slice
//! ```

use std::sync::Arc;

use flipmon::geometry::{validate, Axis, FlipmonParams};
use flipmon::render::{render_svg, RenderOptions};
use flipmon::solver::{build_grid, capacitance_matrix, field_slice, GridPolicy, SlicePlane, SolverSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = FlipmonParams::default();
    let geometry = Arc::new(validate(params.build()?)?);
    let grid = Arc::new(build_grid(geometry, &GridPolicy::default())?);
    let settings = SolverSettings::default();
    let run = capacitance_matrix(&grid, &settings)?;
    let mode = run.qubit_mode_solution("qubit_top", "qubit_bottom", &settings)?;

    let half = params.pad_side / 2.0 + 40.0;
    let plane = SlicePlane::new(Axis::Y, 0.0)
        .with_samples(400, 120)
        .with_window([-half, half], [-10.0, params.gap_d + 10.0]);
    let slice = field_slice(&mode, &plane)?;
    std::fs::write("slice_y0.csv", slice.to_csv())?;
    std::fs::write("slice_y0.svg", render_svg(&slice, &RenderOptions::default()))?;
    let zeros = slice.values.iter().flatten().filter(|&&e| e == 0.0).count();
    println!(
        "max |E| = {:.3e} V/m, {zeros} of {} samples inside metal; wrote slice_y0.svg",
        slice.max(),
        slice.u.len() * slice.v.len()
    );
    Ok(())
}
