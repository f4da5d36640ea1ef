//! How the charging energy follows the vacuum gap. A bare parallel-plate
//! capacitor scales exactly as d; the flipmon's ground capacitances dilute
//! that dependence.
//!
//! ```bash
//! cargo run --release --example gap_sweep
//! ```

use std::sync::Arc;

use flipmon::geometry::{validate, DeviceGeometry, FlipmonParams, GeometryError, PlatePairParams};
use flipmon::solver::{build_grid, capacitance_matrix, GridPolicy, SolverSettings};
use flipmon::transmon::ec_from_capacitance;

fn ec_mhz(device: DeviceGeometry, pads: (&str, &str)) -> Result<f64, Box<dyn std::error::Error>> {
    let grid = Arc::new(build_grid(Arc::new(validate(device)?), &GridPolicy::default())?);
    let run = capacitance_matrix(&grid, &SolverSettings::default())?;
    Ok(ec_from_capacitance(&run.matrix, pads, 0.0)?.ec_ghz * 1e3)
}

fn sweep(
    name: &str,
    gaps: &[f64],
    build: impl Fn(f64) -> Result<DeviceGeometry, GeometryError>,
    pads: (&str, &str),
) -> Result<(), Box<dyn std::error::Error>> {
    let ec: Vec<f64> = gaps.iter().map(|&d| ec_mhz(build(d)?, pads)).collect::<Result<_, _>>()?;
    for (d, e) in gaps.iter().zip(&ec) {
        println!("{name:<8} d = {d:.1} um  E_C/h = {e:.2} MHz");
    }
    let (first, last) = (ec[0], ec[ec.len() - 1]);
    println!(
        "{name:<8} E_C({}) / E_C({}) = {:.4}, +/-{:.1}% around the middle\n",
        gaps[gaps.len() - 1],
        gaps[0],
        last / first,
        50.0 * (last - first) / ec[ec.len() / 2]
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gaps = [4.6, 5.0, 5.4];
    sweep(
        "plates",
        &gaps,
        |d| PlatePairParams { gap_d: d, ..Default::default() }.build(),
        ("plate_top", "plate_bottom"),
    )?;
    sweep(
        "flipmon",
        &gaps,
        |d| FlipmonParams { gap_d: d, ..Default::default() }.build(),
        ("qubit_top", "qubit_bottom"),
    )?;
    Ok(())
}
