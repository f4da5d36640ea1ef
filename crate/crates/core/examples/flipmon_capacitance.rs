//! Maxwell capacitance matrix of the default flip-chip transmon and the
//! charging energy seen by its junction.
//!
//! ```bash
//! cargo run --release --example flipmon_capacitance
//! ```

use std::sync::Arc;
use std::time::Instant;

use flipmon::constants::FEMTOFARAD;
use flipmon::geometry::{validate, FlipmonParams};
use flipmon::solver::{build_grid, capacitance_matrix, GridPolicy, SolverSettings};
use flipmon::transmon::{ec_from_capacitance, spectrum, TransmonParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = FlipmonParams::default();
    let geometry = Arc::new(validate(params.build()?)?);
    let grid = Arc::new(build_grid(geometry, &GridPolicy::default())?);
    println!("grid {:?}, {} nodes", grid.dims(), grid.node_count());

    let t = Instant::now();
    let run = capacitance_matrix(&grid, &SolverSettings::default())?;
    println!("{} solves in {:.1?}", run.solutions.len(), t.elapsed());

    let m = &run.matrix;
    print!("{:>14}", "fF");
    for n in &m.nets {
        print!("{n:>14}");
    }
    println!();
    for (i, n) in m.nets.iter().enumerate() {
        print!("{n:>14}");
        for v in &m.entries[i] {
            print!("{:>14.3}", v / FEMTOFARAD);
        }
        println!();
    }
    println!("asymmetry before symmetrization: {:.2e}", m.asymmetry);

    let ce = ec_from_capacitance(m, ("qubit_top", "qubit_bottom"), 0.0)?;
    println!(
        "C12 = {:.2} fF, C1g = {:.2} fF, C2g = {:.2} fF -> C_sigma = {:.2} fF, E_C/h = {:.1} MHz",
        ce.c12 / FEMTOFARAD,
        ce.c1g / FEMTOFARAD,
        ce.c2g / FEMTOFARAD,
        ce.c_sigma / FEMTOFARAD,
        ce.ec_ghz * 1e3
    );
    let s = spectrum(&TransmonParams::new(15.0, ce.ec_ghz))?;
    println!("with E_J/h = 15 GHz: f01 = {:.3} GHz, eta = {:.1} MHz", s.f01, s.anharmonicity * 1e3);
    Ok(())
}
