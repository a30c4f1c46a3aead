//! Simulate the decay measurement at several intensities, subtract the
//! shutter-closed rate and fit Gamma_SD against intensity.

use raman_scatter::prelude::*;

fn main() -> Result<()> {
    let species = SpeciesData::ca40();
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2018);

    let closed = fit_exponential(&run_protocol(&ProtocolConfig { seed, ..ProtocolConfig::default() }, &species)?)?;
    println!("shutter closed: tau = {:.4} ± {:.4} s", closed.tau, closed.sigma_tau);

    let mut points = Vec::new();
    for (i, intensity) in [2.2e7, 4.4e7, 6.6e7, 8.7535e7].into_iter().enumerate() {
        let config = ProtocolConfig {
            laser: Some(LaserField::pure(976e-9, PolarizationKind::SigmaMinus, intensity)?),
            seed: seed + 1 + i as u64,
            ..ProtocolConfig::default()
        };
        let f = fit_exponential(&run_protocol(&config, &species)?)?;
        let g = subtract_natural(f.tau, f.sigma_tau, closed.tau, closed.sigma_tau)?;
        println!("I = {intensity:.3e} W/m^2: tau = {:.4} s, Gamma_SD = {:.4} ± {:.4} Hz", f.tau, g.gamma_sd, g.sigma);
        points.push(RatePoint { intensity, gamma: g.gamma_sd, sigma: g.sigma });
    }
    let fit = fit_rate_vs_intensity(&points)?;
    let engine = ScatteringEngine::with_defaults(&species)?;
    let theory = engine.rate_per_intensity(
        Sublevel::up(),
        &LaserField::pure(976e-9, PolarizationKind::SigmaMinus, 1.0)?,
        Destination::ExitManifold,
    )?;
    println!(
        "slope = ({:.3} ± {:.3}) e-9 Hz/(W/m^2), chi2 = {:.2}/{}; model input {:.3}e-9",
        fit.slope * 1e9,
        fit.sigma_slope * 1e9,
        fit.chi2,
        fit.dof,
        theory * 1e9
    );
    Ok(())
}
