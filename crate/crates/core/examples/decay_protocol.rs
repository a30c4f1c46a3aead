//! Monte Carlo of the shelve, illuminate, detect sequence with imperfect
//! preparation and readout, then a lifetime fit.

use raman_scatter::prelude::*;
use raman_scatter::sim::ConfusionMatrix;

fn main() -> Result<()> {
    let species = SpeciesData::ca40();
    let config = ProtocolConfig {
        initial: Sublevel::down(),
        laser: Some(LaserField::pure(976e-9, PolarizationKind::Pi, 1.2732e8)?),
        trials_per_delay: 20_000,
        prep_error: 0.002,
        classify_error: ConfusionMatrix::symmetric(0.001)?,
        ion_loss_per_trial: 1e-4,
        discard_on_up_detect: true,
        seed: 11,
        ..ProtocolConfig::default()
    };
    let data = run_protocol(&config, &species)?;
    println!("delay_s  kept  survived  discarded  lost");
    for r in &data.records {
        println!("{:7.2} {:6} {:9} {:10} {:5}", r.delay_s, r.n_effective(), r.n_survived, r.n_discarded, r.outcomes.lost);
    }
    let fixed = fit_exponential(&data)?;
    let free = raman_scatter::fit::fit_exponential_free_amplitude(&data)?;
    println!("fixed amplitude: tau = {:.4} ± {:.4} s, chi2/dof = {:.2}/{}", fixed.tau, fixed.sigma_tau, fixed.chi2, fixed.dof);
    println!("free amplitude:  tau = {:.4} ± {:.4} s, A = {:.4}", free.tau, free.sigma_tau, free.amplitude);

    let boot = bootstrap_uncertainty(&data, |d| fit_exponential(d).map(|f| f.tau), 200, 5)?;
    println!("bootstrap sigma_tau = {:.4} s over {} resamples", boot.sigma, boot.used);

    let bias = effective_decay_bias(&config, &species)?;
    println!("multi-scatter bias on the fitted rate: {:.3}% ± {:.3}%", 100.0 * bias.simulated, 100.0 * bias.sigma);
    Ok(())
}
