//! Transmon levels from exact diagonalization in the charge basis: how the
//! anharmonicity approaches E_C and charge dispersion dies off as E_J/E_C
//! grows.
//!
//! ```bash
//! cargo run --example transmon_spectrum
//! ```

use flipmon::transmon::{charge_dispersion, spectrum, TransmonParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ec = 0.225;
    println!("E_C/h = {} MHz", ec * 1e3);
    println!("{:>8} {:>10} {:>10} {:>8} {:>14}", "EJ/EC", "f01 GHz", "eta MHz", "eta/EC", "dispersion Hz");
    for ratio in [1.0, 5.0, 10.0, 20.0, 40.0, 66.0, 100.0] {
        let p = TransmonParams::new(ratio * ec, ec);
        let s = spectrum(&p)?;
        let d = charge_dispersion(&p)?;
        println!(
            "{ratio:>8} {:>10.4} {:>10.2} {:>8.3} {:>14.3e}",
            s.f01,
            s.anharmonicity * 1e3,
            s.anharmonicity / ec,
            d * 1e9
        );
    }

    // Offset charge moves the levels only when E_J/E_C is small.
    let p = TransmonParams::new(ec, ec);
    for ng in [0.0, 0.25, 0.5] {
        let s = spectrum(&p.with_ng(ng))?;
        println!("EJ/EC = 1, ng = {ng}: f01 = {:.4} GHz", s.f01);
    }
    Ok(())
}
