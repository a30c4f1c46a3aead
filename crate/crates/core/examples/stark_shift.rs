//! Differential light shift of the qubit and its use to calibrate intensity.
//! The engine returns shifts per unit intensity (Hz per W/m^2).

use raman_scatter::prelude::*;

fn main() -> Result<()> {
    let species = SpeciesData::ca40();
    let engine = ScatteringEngine::with_defaults(&species)?;
    let (up, down) = (Sublevel::up(), Sublevel::down());

    for k in [PolarizationKind::SigmaMinus, PolarizationKind::Pi, PolarizationKind::SigmaPlus] {
        let laser = LaserField::pure(976e-9, k, 1e8)?;
        let i = laser.intensity;
        println!(
            "{k:<7} I = 1e8 W/m^2: shift(+5/2) = {:>10.1} Hz, shift(+3/2) = {:>10.1} Hz, differential = {:>10.1} Hz",
            engine.stark_shift(&laser, up)? * i,
            engine.stark_shift(&laser, down)? * i,
            engine.differential_stark_shift(&laser, up, down)? * i
        );
    }

    // infer the intensity a measured differential shift corresponds to
    let probe = LaserField::pure(976e-9, PolarizationKind::SigmaMinus, 1.0)?;
    let measured_hz = -25_000.0;
    let i = engine.intensity_from_stark_shift(&probe, up, down, measured_hz)?;
    println!("differential shift {measured_hz} Hz  =>  I = {i:.4e} W/m^2");
    Ok(())
}
