//! Fit E_J and E_C to measured qubit frequencies and anharmonicities, then
//! infer the qubit-resonator coupling from the dispersive shift.
//!
//! ```bash
//! cargo run --example fit_measured -- data/flipmon.csv
//! ```

use std::path::PathBuf;

use flipmon::loss::{g_from_chi, CHI_CONVENTION};
use flipmon::records::read_records_path;
use flipmon::transmon::{fit_ej_ec, spectrum, TransmonParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/flipmon.csv"));
    let records = read_records_path(&path)?;
    println!(
        "{:<6} {:>7} {:>7} {:>8} {:>8} {:>6} {:>9} {:>7}",
        "qubit", "f_q", "eta", "EJ GHz", "EC MHz", "EJ/EC", "residual", "g MHz"
    );
    for r in &records {
        let Some(eta) = r.eta else {
            println!("{:<6} {:>7} {:>7}   (no anharmonicity, not fitted)", r.label, r.f_q, "-");
            continue;
        };
        let fit = fit_ej_ec(r.f_q, eta / 1e3)?;
        // Forward check: the fitted parameters reproduce the measurement.
        let s = spectrum(&TransmonParams::new(fit.ej, fit.ec))?;
        let residual_hz = ((s.f01 - r.f_q).abs()).max((s.anharmonicity - eta / 1e3).abs()) * 1e9;
        let g = g_from_chi(r).map(|c| format!("{:.1}", c.g)).unwrap_or_else(|_| "-".into());
        println!(
            "{:<6} {:>7} {:>7} {:>8.3} {:>8.1} {:>6.1} {:>7.1}Hz {:>7}",
            r.label,
            r.f_q,
            eta,
            fit.ej,
            fit.ec * 1e3,
            fit.ratio(),
            residual_hz,
            g
        );
    }
    println!("g convention: {CHI_CONVENTION}");
    Ok(())
}
