//! Two-qubit Raman error floor versus wavelength; CSV on stdout.
//!
//! `cargo run --release --example wavelength_scan > scan.csv`

use raman_scatter::prelude::*;

fn main() -> Result<()> {
    let species = SpeciesData::ca40();
    let config = GateConfig::two_qubit_default(&species);
    let scan = wavelength_scan((880e-9, 1200e-9), 641, &config, &species, 1e-4)?;
    print!("{}", scan.to_csv());
    match scan.threshold_nm {
        Some(nm) => eprintln!("error floor stays below 1e-4 beyond {nm:.1} nm"),
        None => eprintln!("no crossing of 1e-4 in range"),
    }
    Ok(())
}
