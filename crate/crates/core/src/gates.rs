//! Scattering-limited error budgets for Raman gates on the D5/2 qubit.
//!
//! Conventions used throughout:
//! - single-photon Rabi frequency g = ⟨k|d·ε|s⟩ E₀/ħ with I = cε₀E₀²/2;
//! - Ω_R is the coefficient of the Pauli operator in the effective
//!   Hamiltonian, so a σx (π) rotation takes π/(2Ω_R);
//! - for the σz⊗σz gate, Ω_R is half the difference between the two qubit
//!   states' beat-note light-shift amplitudes.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{C, EPS0, HBAR};
use crate::error::{Error, Result};
use crate::scattering::{emission_rate_per_intensity, EngineOptions, LaserField, PolarizationKind, ScatteringEngine};
use crate::species::{ManifoldLabel, SpeciesData, Sublevel};

/// Default Raman wavelength (m).
pub const RAMAN_WAVELENGTH: f64 = 976e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub laser: LaserField,
    /// Propagation direction (normalized on use).
    pub direction: [f64; 3],
}

impl Beam {
    fn wavevector(&self) -> Result<[f64; 3]> {
        let n = self.direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::GateConfig("beam direction must be a nonzero vector".into()));
        }
        let k = 2.0 * PI / self.laser.wavelength;
        Ok(self.direction.map(|x| k * x / n))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    SingleQubitSigmaX,
    TwoQubitZz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub kind: GateKind,
    pub beams: Vec<Beam>,
    /// ω/2π (Hz).
    pub secular_frequency: f64,
    /// kg
    pub ion_mass: f64,
    /// (|↑⟩, |↓⟩)
    pub qubit: (Sublevel, Sublevel),
    pub engine: EngineOptions,
}

impl GateConfig {
    /// σ⁻ and π beams of equal intensity at 976 nm, crossed at 90°.
    pub fn single_qubit_default(species: &SpeciesData) -> Self {
        let i = 1e8;
        GateConfig {
            kind: GateKind::SingleQubitSigmaX,
            beams: vec![
                Beam {
                    laser: LaserField::pure(RAMAN_WAVELENGTH, PolarizationKind::SigmaMinus, i).expect("valid"),
                    direction: [0.0, 0.0, 1.0],
                },
                Beam {
                    laser: LaserField::pure(RAMAN_WAVELENGTH, PolarizationKind::Pi, i).expect("valid"),
                    direction: [1.0, 0.0, 0.0],
                },
            ],
            secular_frequency: 2e6,
            ion_mass: species.ion_mass,
            qubit: (Sublevel::up(), Sublevel::down()),
            engine: EngineOptions::default(),
        }
    }

    /// Counter-propagating σ⁻ beams of equal intensity at 976 nm, ω/2π = 2 MHz.
    pub fn two_qubit_default(species: &SpeciesData) -> Self {
        let i = 1e8;
        let beam = |dir: f64| Beam {
            laser: LaserField::pure(RAMAN_WAVELENGTH, PolarizationKind::SigmaMinus, i).expect("valid"),
            direction: [0.0, 0.0, dir],
        };
        GateConfig {
            kind: GateKind::TwoQubitZz,
            beams: vec![beam(1.0), beam(-1.0)],
            secular_frequency: 2e6,
            ion_mass: species.ion_mass,
            qubit: (Sublevel::up(), Sublevel::down()),
            engine: EngineOptions::default(),
        }
    }

    pub fn with_wavelength(&self, wavelength: f64) -> Self {
        let mut c = self.clone();
        for b in &mut c.beams {
            b.laser.wavelength = wavelength;
        }
        c
    }

    pub fn with_intensity_scale(&self, s: f64) -> Self {
        let mut c = self.clone();
        for b in &mut c.beams {
            b.laser.intensity *= s;
        }
        c
    }

    fn n_ions(&self) -> f64 {
        match self.kind {
            GateKind::SingleQubitSigmaX => 1.0,
            GateKind::TwoQubitZz => 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beams.len() != 2 {
            return Err(Error::GateConfig(format!("expected two beams, got {}", self.beams.len())));
        }
        for b in &self.beams {
            b.laser.validate()?;
            b.wavevector()?;
        }
        let (a, b) = self.qubit;
        if a == b || a.manifold != b.manifold {
            return Err(Error::GateConfig("qubit states must be two sublevels of one manifold".into()));
        }
        if !(self.ion_mass > 0.0) {
            return Err(Error::GateConfig("ion mass must be positive".into()));
        }
        if self.kind == GateKind::TwoQubitZz {
            let (i1, i2) = (self.beams[0].laser.intensity, self.beams[1].laser.intensity);
            if (i1 - i2).abs() > 1e-9 * i1.max(i2) {
                return Err(Error::GateConfig(format!(
                    "the zz gate needs equal beam intensities ({i1} vs {i2} W/m^2)"
                )));
            }
        }
        Ok(())
    }

    fn engine(&self, species: &SpeciesData) -> Result<ScatteringEngine> {
        ScatteringEngine::new(species, self.engine)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub p_raman: f64,
    pub p_leak_s: f64,
    pub p_leak_d3: f64,
    pub p_leak_d5_outside: f64,
    pub p_bitflip: f64,
    pub rayleigh_decoherence_bound: f64,
    /// Two-qubit gates only.
    pub recoil_bound: Option<f64>,
    /// rad/s
    pub rabi_frequency: f64,
    /// s
    pub gate_time: f64,
    /// Γ_Ram per ion, averaged over the qubit states (Hz).
    pub gamma_raman: f64,
    pub lamb_dicke: Option<f64>,
}

fn field_amplitude(intensity: f64) -> f64 {
    (2.0 * intensity / (C * EPS0)).sqrt()
}

// Σ_k g_a(s_a → k) g_b*(s_b → k) / (2Δ_k), rad/s
fn two_photon_sum(engine: &ScatteringEngine, a: &LaserField, sa: Sublevel, b: &LaserField, sb: Sublevel) -> Result<Complex64> {
    engine.check_detuning(sa.manifold, a)?;
    engine.check_detuning(sb.manifold, b)?;
    let species = engine.species();
    let field = if engine.options().zeeman { engine.options().field_gauss } else { 0.0 };
    let wa = a.angular_frequency();
    let w_sa = species.sublevel_angular_frequency(sa, field)?;
    let (ea, eb) = (field_amplitude(a.intensity), field_amplitude(b.intensity));
    let mut sum = Complex64::new(0.0, 0.0);
    for up in species.upper_levels_coupled_to(sa.manifold) {
        let j = species.manifold(up.manifold)?.j;
        for mk in j.projections() {
            let k = Sublevel::new(up.manifold, mk);
            let qa = (mk - sa.m).twice();
            let qb = (mk - sb.m).twice();
            if qa.abs() > 2 || qb.abs() > 2 || qa % 2 != 0 || qb % 2 != 0 {
                continue;
            }
            let ga = a.component(qa / 2) * engine.dipole(up.manifold, sa, qa / 2) * ea / HBAR;
            let gb = b.component(qb / 2) * engine.dipole(up.manifold, sb, qb / 2) * eb / HBAR;
            if ga.norm_sqr() == 0.0 || gb.norm_sqr() == 0.0 {
                continue;
            }
            let delta = wa - (species.sublevel_angular_frequency(k, field)? - w_sa);
            sum += ga * gb.conj() / (2.0 * delta);
        }
    }
    Ok(sum)
}

/// Ω_R (rad/s) for the configured gate.
pub fn two_photon_rabi(config: &GateConfig, species: &SpeciesData) -> Result<f64> {
    config.validate()?;
    let engine = config.engine(species)?;
    rabi_with(&engine, config)
}

fn rabi_with(engine: &ScatteringEngine, config: &GateConfig) -> Result<f64> {
    let (up, down) = config.qubit;
    let (b1, b2) = (&config.beams[0].laser, &config.beams[1].laser);
    match config.kind {
        GateKind::SingleQubitSigmaX => {
            // either beam may supply the leg from |↑⟩
            let x = two_photon_sum(engine, b1, up, b2, down)?.norm();
            let y = two_photon_sum(engine, b2, up, b1, down)?.norm();
            Ok(x.max(y) / 2.0)
        }
        GateKind::TwoQubitZz => {
            let bu = two_photon_sum(engine, b1, up, b2, up)?;
            let bd = two_photon_sum(engine, b1, down, b2, down)?;
            Ok((bu - bd).norm() / 2.0)
        }
    }
}

/// η = |Δk| √(ħ / 2mω).
pub fn lamb_dicke(config: &GateConfig) -> Result<f64> {
    if !(config.secular_frequency > 0.0 && config.secular_frequency.is_finite()) {
        return Err(Error::GateConfig(format!(
            "secular frequency must be positive, got {} Hz",
            config.secular_frequency
        )));
    }
    if config.beams.len() != 2 {
        return Err(Error::GateConfig("Lamb-Dicke parameter needs two beams".into()));
    }
    let k1 = config.beams[0].wavevector()?;
    let k2 = config.beams[1].wavevector()?;
    let dk = ((k1[0] - k2[0]).powi(2) + (k1[1] - k2[1]).powi(2) + (k1[2] - k2[2]).powi(2)).sqrt();
    Ok(dk * (HBAR / (2.0 * config.ion_mass * 2.0 * PI * config.secular_frequency)).sqrt())
}

/// P = (2/η) · π Γ_Ram / (2 Ω_R).
pub fn two_qubit_probability(gamma_raman: f64, rabi: f64, eta: f64) -> f64 {
    (2.0 / eta) * PI * gamma_raman / (2.0 * rabi)
}

/// P = π Γ_Ram / (2 Ω_R).
pub fn one_qubit_probability(gamma_raman: f64, rabi: f64) -> f64 {
    PI * gamma_raman / (2.0 * rabi)
}

#[derive(Default)]
struct RateSums {
    raman: f64,
    leak_s: f64,
    leak_d3: f64,
    leak_d5: f64,
    bitflip: f64,
    elastic: f64,
}

// state-averaged absolute rates (Hz) with all beams applied, summed incoherently over beams
fn averaged_rates(engine: &ScatteringEngine, config: &GateConfig) -> Result<RateSums> {
    let (up, down) = config.qubit;
    let mut r = RateSums::default();
    for (s, other) in [(up, down), (down, up)] {
        for beam in &config.beams {
            let i = beam.laser.intensity;
            let b = engine.rate_breakdown(s, &beam.laser)?;
            let by = |m: ManifoldLabel| b.gamma_by_manifold.get(&m).copied().unwrap_or(0.0);
            r.raman += 0.5 * b.gamma_raman * i;
            r.leak_s += 0.5 * by(ManifoldLabel::S12) * i;
            r.leak_d3 += 0.5 * by(ManifoldLabel::D32) * i;
            r.elastic += 0.5 * b.gamma_elastic * i;
            for (m, g) in &b.gamma_back {
                if *m == other.m {
                    r.bitflip += 0.5 * g * i;
                } else {
                    r.leak_d5 += 0.5 * g * i;
                }
            }
        }
    }
    Ok(r)
}

// Σ_beams Σ_q' |α_↑(q') − α_↓(q')|² K I  (Hz)
fn rayleigh_dephasing_rate(engine: &ScatteringEngine, config: &GateConfig) -> Result<f64> {
    let (up, down) = config.qubit;
    let mut rate = 0.0;
    for beam in &config.beams {
        let l = &beam.laser;
        for q in -1..=1 {
            let au = engine.kh_amplitude(up, up, l, q)?;
            let ad = engine.kh_amplitude(down, down, l, q)?;
            rate += emission_rate_per_intensity(au - ad, l.angular_frequency()) * l.intensity;
        }
    }
    Ok(rate)
}

fn budget(engine: &ScatteringEngine, config: &GateConfig, rabi: f64, gate_time: f64, eta: Option<f64>) -> Result<ErrorBudget> {
    let r = averaged_rates(engine, config)?;
    let n = config.n_ions();
    let p = |x: f64| (n * x * gate_time).min(1.0);
    let rayleigh = p(rayleigh_dephasing_rate(engine, config)?);
    let recoil = match config.kind {
        GateKind::TwoQubitZz => Some(recoil_from(config, r.elastic, gate_time)?),
        GateKind::SingleQubitSigmaX => None,
    };
    Ok(ErrorBudget {
        p_raman: p(r.raman),
        p_leak_s: p(r.leak_s),
        p_leak_d3: p(r.leak_d3),
        p_leak_d5_outside: p(r.leak_d5),
        p_bitflip: p(r.bitflip),
        rayleigh_decoherence_bound: rayleigh,
        recoil_bound: recoil,
        rabi_frequency: rabi,
        gate_time,
        gamma_raman: r.raman,
        lamb_dicke: eta,
    })
}

// 2 ions × Γ_el τ × η_photon², η_photon = k √(ħ/2mω)
fn recoil_from(config: &GateConfig, gamma_elastic: f64, gate_time: f64) -> Result<f64> {
    let k = 2.0 * PI / config.beams[0].laser.wavelength;
    let eta_photon = k * (HBAR / (2.0 * config.ion_mass * 2.0 * PI * config.secular_frequency)).sqrt();
    Ok((config.n_ions() * gamma_elastic * gate_time * eta_photon * eta_photon).min(1.0))
}

pub fn one_qubit_error(config: &GateConfig, species: &SpeciesData) -> Result<ErrorBudget> {
    if config.kind != GateKind::SingleQubitSigmaX {
        return Err(Error::GateConfig("one_qubit_error needs a single-qubit configuration".into()));
    }
    config.validate()?;
    let engine = config.engine(species)?;
    let rabi = rabi_with(&engine, config)?;
    if rabi == 0.0 {
        return Err(Error::ZeroRabi);
    }
    budget(&engine, config, rabi, PI / (2.0 * rabi), None)
}

pub fn two_qubit_error(config: &GateConfig, species: &SpeciesData) -> Result<ErrorBudget> {
    if config.kind != GateKind::TwoQubitZz {
        return Err(Error::GateConfig("two_qubit_error needs a zz configuration".into()));
    }
    config.validate()?;
    let engine = config.engine(species)?;
    let eta = lamb_dicke(config)?;
    if eta == 0.0 {
        return Err(Error::ZeroLambDicke);
    }
    let rabi = rabi_with(&engine, config)?;
    if rabi == 0.0 {
        return Err(Error::ZeroRabi);
    }
    budget(&engine, config, rabi, PI / (2.0 * eta * rabi), Some(eta))
}

pub fn gate_error(config: &GateConfig, species: &SpeciesData) -> Result<ErrorBudget> {
    match config.kind {
        GateKind::SingleQubitSigmaX => one_qubit_error(config, species),
        GateKind::TwoQubitZz => two_qubit_error(config, species),
    }
}

pub fn rayleigh_decoherence_bound(config: &GateConfig, species: &SpeciesData) -> Result<f64> {
    Ok(gate_error(config, species)?.rayleigh_decoherence_bound)
}

pub fn recoil_error_bound(config: &GateConfig, species: &SpeciesData) -> Result<f64> {
    two_qubit_error(config, species)?
        .recoil_bound
        .ok_or_else(|| Error::GateConfig("recoil bound is defined for the zz gate".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdFlag {
    Below,
    Above,
    Resonant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub wavelength_nm: f64,
    pub error_floor: Option<f64>,
    pub flag: ThresholdFlag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavelengthScan {
    pub threshold: f64,
    pub points: Vec<ScanPoint>,
    /// Wavelength beyond which the floor stays below `threshold`, by linear
    /// interpolation in log error at the last upward-to-downward crossing.
    pub threshold_nm: Option<f64>,
}

impl WavelengthScan {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("wavelength_nm,error_floor,threshold_flag\n");
        for p in &self.points {
            let flag = match p.flag {
                ThresholdFlag::Below => "below",
                ThresholdFlag::Above => "above",
                ThresholdFlag::Resonant => "resonant",
            };
            match p.error_floor {
                Some(e) => s.push_str(&format!("{:.4},{:.6e},{flag}\n", p.wavelength_nm, e)),
                None => s.push_str(&format!("{:.4},,{flag}\n", p.wavelength_nm)),
            }
        }
        s
    }
}

/// Error floor of the configured gate versus Raman wavelength.
pub fn wavelength_scan(range: (f64, f64), steps: usize, config: &GateConfig, species: &SpeciesData, threshold: f64) -> Result<WavelengthScan> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("bad wavelength range {lo}..{hi} m")));
    }
    if steps < 2 {
        return Err(Error::InvalidArgument("scan needs at least two steps".into()));
    }
    let points: Vec<ScanPoint> = (0..steps)
        .into_par_iter()
        .map(|i| {
            let wl = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
            match gate_error(&config.with_wavelength(wl), species) {
                Ok(b) => Ok(ScanPoint {
                    wavelength_nm: wl * 1e9,
                    error_floor: Some(b.p_raman),
                    flag: if b.p_raman < threshold { ThresholdFlag::Below } else { ThresholdFlag::Above },
                }),
                Err(Error::Resonance { .. }) => Ok(ScanPoint {
                    wavelength_nm: wl * 1e9,
                    error_floor: None,
                    flag: ThresholdFlag::Resonant,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let threshold_nm = crossing(&points, threshold);
    Ok(WavelengthScan {
        threshold,
        points,
        threshold_nm,
    })
}

fn crossing(points: &[ScanPoint], threshold: f64) -> Option<f64> {
    let last = points.last()?;
    if last.flag != ThresholdFlag::Below {
        return None;
    }
    // walk back to the first point of the final run below threshold
    let start = points.iter().rposition(|p| p.flag != ThresholdFlag::Below).map_or(0, |i| i + 1);
    if start == 0 {
        return Some(points[0].wavelength_nm);
    }
    let (a, b) = (&points[start - 1], &points[start]);
    match (a.error_floor, b.error_floor) {
        (Some(ea), Some(eb)) => {
            let f = (threshold.ln() - ea.ln()) / (eb.ln() - ea.ln());
            Some(a.wavelength_nm + f * (b.wavelength_nm - a.wavelength_nm))
        }
        _ => Some(b.wavelength_nm),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp() -> SpeciesData {
        SpeciesData::ca40()
    }

    #[test]
    fn lamb_dicke_default() {
        let c = GateConfig::two_qubit_default(&sp());
        let eta = lamb_dicke(&c).unwrap();
        assert!((eta - 0.102).abs() < 0.001, "{eta}");
        let mut c4 = c.clone();
        c4.secular_frequency *= 4.0;
        assert!((lamb_dicke(&c4).unwrap() / eta - 0.5).abs() < 1e-12);
        let mut co = c.clone();
        co.beams[1].direction = [0.0, 0.0, 1.0];
        assert_eq!(lamb_dicke(&co).unwrap(), 0.0);
        assert!(matches!(two_qubit_error(&co, &sp()), Err(Error::ZeroLambDicke)));
    }

    #[test]
    fn sigma_plus_pair_has_no_coupling() {
        let mut c = GateConfig::single_qubit_default(&sp());
        for b in &mut c.beams {
            b.laser.polarization = PolarizationKind::SigmaPlus.components();
        }
        assert_eq!(two_photon_rabi(&c, &sp()).unwrap(), 0.0);
        assert!(matches!(one_qubit_error(&c, &sp()), Err(Error::ZeroRabi)));
    }

    #[test]
    fn zero_intensity_is_zero_rabi() {
        let c = GateConfig::single_qubit_default(&sp()).with_intensity_scale(0.0);
        assert!(matches!(one_qubit_error(&c, &sp()), Err(Error::ZeroRabi)));
    }

    #[test]
    fn budget_adds_up() {
        for c in [GateConfig::single_qubit_default(&sp()), GateConfig::two_qubit_default(&sp())] {
            let b = gate_error(&c, &sp()).unwrap();
            let parts = b.p_leak_s + b.p_leak_d3 + b.p_leak_d5_outside + b.p_bitflip;
            assert!((parts / b.p_raman - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn eta_algebra() {
        let p = two_qubit_probability(1.0, 2.0, 0.1);
        assert_eq!(two_qubit_probability(1.0, 2.0, 0.05), 2.0 * p);
    }

    #[test]
    fn unequal_zz_intensities_rejected() {
        let mut c = GateConfig::two_qubit_default(&sp());
        c.beams[0].laser.intensity *= 2.0;
        assert!(matches!(two_qubit_error(&c, &sp()), Err(Error::GateConfig(_))));
    }

    #[test]
    fn csv_flags() {
        let scan = WavelengthScan {
            threshold: 1e-4,
            points: vec![
                ScanPoint { wavelength_nm: 850.0, error_floor: None, flag: ThresholdFlag::Resonant },
                ScanPoint { wavelength_nm: 900.0, error_floor: Some(2e-4), flag: ThresholdFlag::Above },
                ScanPoint { wavelength_nm: 1000.0, error_floor: Some(5e-5), flag: ThresholdFlag::Below },
            ],
            threshold_nm: None,
        };
        let csv = scan.to_csv();
        assert!(csv.contains("850.0000,,resonant"));
        let t = crossing(&scan.points, 1e-4).unwrap();
        assert!((t - 950.0).abs() < 1e-9);
    }
}
