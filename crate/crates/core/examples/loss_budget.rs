//! Loss budgets: predicted T1 from participations and loss tangents, the
//! inverse problem for one measured qubit, and separating a shared loss
//! tangent from a background rate with two designs.
//!
//! ```bash
//! cargo run --example loss_budget
//! ```

use std::collections::BTreeMap;

use flipmon::loss::{extract_tangent, predict_t1, two_design_decomposition, LossTangentTable};
use flipmon::records::MeasuredQubitRecord;
use flipmon::RegionId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Participations of a flipmon-like device (see the participation_table example).
    let p = BTreeMap::from([
        (RegionId::SubT, 0.116),
        (RegionId::SubB, 0.337),
        (RegionId::MsT, 1.69e-5),
        (RegionId::MsB, 5.92e-5),
        (RegionId::SaT, 2.63e-5),
        (RegionId::SaB, 8.88e-5),
        (RegionId::MaT, 2.99e-5),
        (RegionId::MaB, 2.85e-5),
    ]);
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/tangents.toml"))?;
    let tangents = LossTangentTable::from_toml_str(&text)?;
    let budget = predict_t1(&p, &tangents, 4.8)?;
    print!("{}", budget.to_csv());
    println!("T1 = {:.1} us", budget.t1_us.unwrap_or(f64::INFINITY));

    // Attribute all of a measured T1 to the metal-air interfaces.
    let q = MeasuredQubitRecord::new("Q", 6.9, 4.8).with_t1(40.0);
    let ma = BTreeMap::from([(RegionId::MaT, p[&RegionId::MaT] + p[&RegionId::MaB])]);
    let est = extract_tangent(&q, &ma, RegionId::MaT, 0.0)?;
    println!("T1 = 40 us with p_MA = {:.2e}: tan delta_MA <= {:.3e}", ma[&RegionId::MaT], est.tan_delta);

    // Two designs with different MA participation share tan delta and Gamma0.
    let (tan, gamma0) = (2e-3, 5e3);
    let t1 = |f: f64, p: f64| 1e6 / (2.0 * std::f64::consts::PI * f * 1e9 * p * tan + gamma0);
    let a = MeasuredQubitRecord::new("A", 6.9, 4.8).with_t1(t1(4.8, 6e-5));
    let b = MeasuredQubitRecord::new("B", 6.9, 4.5).with_t1(t1(4.5, 2e-5));
    let d = two_design_decomposition(&a, 6e-5, &b, 2e-5)?;
    println!(
        "two designs: tan delta = {:.4e}, Gamma0 = {:.1} /s (negative component: {})",
        d.tan_delta, d.background_rate, d.negative
    );
    Ok(())
}
