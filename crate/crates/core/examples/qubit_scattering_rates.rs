//! Scattering rates per unit 976 nm intensity for the three measured
//! configurations, with and without the counter-rotating term.

use raman_scatter::prelude::*;

fn main() -> Result<()> {
    let species = SpeciesData::ca40();
    let rwa = ScatteringEngine::with_defaults(&species)?;
    let full = ScatteringEngine::new(&species, EngineOptions { counter_rotating: true, ..EngineOptions::default() })?;
    let zero_field = ScatteringEngine::new(&species, EngineOptions { zeeman: false, ..EngineOptions::default() })?;

    println!("{:<18}{:>14}{:>14}{:>14}", "config", "RWA", "with CR", "B = 0");
    println!("{:<18}{:>42}", "", "Gamma_SD / I  [1e-9 Hz/(W/m^2)]");
    let configs = [
        (Sublevel::up(), PolarizationKind::SigmaMinus),
        (Sublevel::down(), PolarizationKind::SigmaMinus),
        (Sublevel::down(), PolarizationKind::Pi),
    ];
    for (s, k) in configs {
        let laser = LaserField::pure(976e-9, k, 1.0)?;
        let g = |e: &ScatteringEngine| e.rate_per_intensity(s, &laser, Destination::ExitManifold).map(|g| g * 1e9);
        println!("{:<18}{:>14.4}{:>14.4}{:>14.6}", format!("m={:+} {k}", s.m), g(&rwa)?, g(&full)?, g(&zero_field)?);
    }

    let laser = LaserField::pure(976e-9, PolarizationKind::SigmaMinus, 8.7535e7)?;
    let b = rwa.rate_breakdown(Sublevel::up(), &laser)?;
    println!("\nat I = {:.4e} W/m^2 from |+5/2>:", laser.intensity);
    println!("  Gamma_SD      {:.4} Hz", b.gamma_sd * laser.intensity);
    println!("  Rayleigh      {:.4} Hz", b.gamma_elastic * laser.intensity);
    for (m, g) in &b.gamma_back {
        println!("  to D5/2 {m:+}  {:.4} Hz", g * laser.intensity);
    }
    Ok(())
}
