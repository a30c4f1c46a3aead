//! Raman/Rayleigh error budgets of the single-qubit and two-qubit gates.
//!
//! `cargo run --example gate_budget [secular_mhz]`

use raman_scatter::prelude::*;

fn print(name: &str, b: &ErrorBudget) {
    println!("{name}");
    println!("  Omega_R = {:.4e} rad/s, t_gate = {:.3} us", b.rabi_frequency, b.gate_time * 1e6);
    println!("  P_Raman = {:.3e}  (S1/2 {:.2e}, D3/2 {:.2e}, other D5/2 {:.2e}, bit flip {:.2e})",
        b.p_raman, b.p_leak_s, b.p_leak_d3, b.p_leak_d5_outside, b.p_bitflip);
    println!("  Rayleigh bound {:.2e}", b.rayleigh_decoherence_bound);
    if let (Some(eta), Some(r)) = (b.lamb_dicke, b.recoil_bound) {
        println!("  eta = {eta:.4}, recoil bound {r:.2e}");
    }
}

fn main() -> Result<()> {
    let species = SpeciesData::ca40();
    let one = GateConfig::single_qubit_default(&species);
    print("single-qubit", &one_qubit_error(&one, &species)?);

    let mut two = GateConfig::two_qubit_default(&species);
    if let Some(f) = std::env::args().nth(1) {
        two.secular_frequency = f.parse::<f64>().map_err(|e| Error::InvalidArgument(e.to_string()))? * 1e6;
    }
    print(&format!("two-qubit, {} MHz", two.secular_frequency / 1e6), &two_qubit_error(&two, &species)?);

    // the Raman error does not depend on how hard the beams are driven
    let bright = two_qubit_error(&two.with_intensity_scale(10.0), &species)?;
    println!("10x intensity: P_Raman = {:.3e}", bright.p_raman);
    Ok(())
}
