//! Load atomic data, inspect it, and round-trip it through JSON.
//!
//! `cargo run --example species_file [path/to/species.json]`

use raman_scatter::prelude::*;

fn main() -> Result<()> {
    let species = match std::env::args().nth(1) {
        Some(p) => load_species(p)?,
        None => SpeciesData::ca40(),
    };
    println!("{}: D5/2 lifetime {} s ± {} s", species.name, species.d5half_lifetime, species.d5half_lifetime_uncertainty);
    for label in ManifoldLabel::ALL {
        let m = species.manifold(label)?;
        println!("  {label:<5} E/h = {:>18.6} GHz   g_J = {:.5}", m.energy_hz / 1e9, lande_g(m));
    }
    for u in &species.upper_levels {
        for (lower, b) in &u.branching {
            let a = u.einstein_a(*lower).unwrap_or(0.0);
            let d2 = species.reduced_dipole_sq(u.manifold, *lower)?;
            println!("  {} -> {lower}: branching {b:.5}, A = {a:.4e} /s, |<||d||>|^2 = {d2:.4e} C^2 m^2", u.manifold);
        }
    }
    let reloaded = SpeciesData::from_json(&species.to_json()?)?;
    // lifetimes are stored in ns on disk, so compare to rounding
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
    let same = reloaded.manifolds == species.manifolds
        && reloaded
            .upper_levels
            .iter()
            .zip(&species.upper_levels)
            .all(|(a, b)| close(a.lifetime, b.lifetime) && a.branching == b.branching)
        && close(reloaded.d5half_lifetime, species.d5half_lifetime);
    println!("JSON round trip {}", if same { "ok" } else { "changed the data" });
    Ok(())
}
