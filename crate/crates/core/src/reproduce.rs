//! Whole-pipeline regression against the published numbers.
//!
//! Each `criterion_*` function computes one check, compares it with a pinned
//! target and tolerance, and reports a one-line verdict. The `reproduce`
//! subcommand and the acceptance tests both call these.

use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::angular::{clebsch_gordan, wigner3j, HalfInt};
use crate::error::Result;
use crate::fit::{fit_exponential, fit_rate_vs_intensity, subtract_natural, RatePoint};
use crate::gates::{one_qubit_error, two_qubit_error, wavelength_scan, GateConfig};
use crate::scattering::{Destination, EngineOptions, LaserField, PolarizationKind, ScatteringEngine};
use crate::sim::{effective_decay_bias, run_protocol, ProtocolConfig};
use crate::species::{zeeman_splitting, ManifoldLabel, SpeciesData, Sublevel};

/// Γ_SD/I targets (10⁻⁹ Hz per W/m²) and their quoted uncertainties.
pub const THEORY_RATES: [(f64, f64); 3] = [(3.60, 0.06), (2.16, 0.04), (1.44, 0.03)];
pub const RATIO_TOL: f64 = 1e-10;
pub const P1Q_TARGET: (f64, f64) = (1.25e-6, 0.02e-6);
pub const P2Q_TARGET: f64 = 5e-5;
pub const P2Q_REL_TOL: f64 = 0.20;
pub const RAYLEIGH_LIMIT: f64 = 1e-7;
pub const RECOIL_LIMIT: f64 = 1e-8;
pub const THRESHOLD_NM: (f64, f64) = (963.0, 5.0);
pub const ZEEMAN_TARGET_HZ: f64 = 2.63e6;
pub const ZEEMAN_REL_TOL: f64 = 0.01;
/// Fractional biases (percent) and tolerances (percentage points).
pub const BIAS_TARGETS: [(f64, f64); 2] = [(0.6, 0.3), (1.4, 0.4)];

pub const MAX_SIGMA_INTENSITY: f64 = 8.7535e7;
pub const MAX_PI_INTENSITY: f64 = 1.2732e8;
pub const DEFAULT_DELAYS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

/// The three measured configurations: (initial state, polarization).
pub fn measured_configs() -> [(Sublevel, PolarizationKind); 3] {
    [
        (Sublevel::up(), PolarizationKind::SigmaMinus),
        (Sublevel::down(), PolarizationKind::SigmaMinus),
        (Sublevel::down(), PolarizationKind::Pi),
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] criterion {}: {} | {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

fn timed(id: u32, name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Criterion {
    let t = Instant::now();
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    Criterion {
        id,
        name: name.to_string(),
        passed,
        detail,
        seconds: t.elapsed().as_secs_f64(),
    }
}

fn measured_rates(engine: &ScatteringEngine) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (o, (s, k)) in out.iter_mut().zip(measured_configs()) {
        let l = LaserField::pure(976e-9, k, 1.0)?;
        *o = engine.rate_per_intensity(s, &l, Destination::ExitManifold)?;
    }
    Ok(out)
}

pub fn criterion_1(species: &SpeciesData) -> Criterion {
    timed(1, "theory rates of the measured configurations", || {
        let rwa = measured_rates(&ScatteringEngine::with_defaults(species)?)?;
        let cr = measured_rates(&ScatteringEngine::new(
            species,
            EngineOptions {
                counter_rotating: true,
                ..EngineOptions::default()
            },
        )?)?;
        let mut ok = true;
        let mut parts = Vec::new();
        for (g, (target, tol)) in rwa.iter().zip(THEORY_RATES) {
            let v = g * 1e9;
            ok &= (v - target).abs() <= tol;
            parts.push(format!("{v:.3} vs {target:.2}±{tol:.2}"));
        }
        let crs: Vec<String> = cr.iter().map(|c| format!("{:.3}", c * 1e9)).collect();
        Ok((ok, format!("{} [1e-9 Hz/(W/m^2)]; counter-rotating model: {}", parts.join(", "), crs.join(", "))))
    })
}

fn ratio_check(species: &SpeciesData) -> Result<(f64, [f64; 3])> {
    let engine = ScatteringEngine::new(
        species,
        EngineOptions {
            zeeman: false,
            ..EngineOptions::default()
        },
    )?;
    let r = measured_rates(&engine)?;
    let unit = r[2] / 2.0;
    let dev = [r[0] / unit / 5.0 - 1.0, r[1] / unit / 3.0 - 1.0]
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()));
    Ok((dev, r))
}

pub fn criterion_2(species: &SpeciesData) -> Criterion {
    timed(2, "5:3:2 ratio", || {
        let (dev, _) = ratio_check(species)?;
        // same ratio with different atomic data
        let mut other = species.clone();
        for u in &mut other.upper_levels {
            u.lifetime *= 1.37;
            if let Some(b) = u.branching.get_mut(&ManifoldLabel::D32) {
                *b += 0.05;
            }
            if let Some(b) = u.branching.get_mut(&ManifoldLabel::S12) {
                *b -= 0.05;
            }
        }
        let (dev2, _) = ratio_check(&other)?;
        let worst = dev.max(dev2);
        Ok((
            worst <= RATIO_TOL,
            format!("max relative deviation {worst:.2e} (tol {RATIO_TOL:.0e}, zero field, two data sets)"),
        ))
    })
}

pub fn criterion_3(species: &SpeciesData) -> Criterion {
    timed(3, "gate error budgets", || {
        let b1 = one_qubit_error(&GateConfig::single_qubit_default(species), species)?;
        let b2 = two_qubit_error(&GateConfig::two_qubit_default(species), species)?;
        let recoil = b2.recoil_bound.unwrap_or(f64::NAN);
        let p1 = (b1.p_raman - P1Q_TARGET.0).abs() <= P1Q_TARGET.1;
        let p2 = (b2.p_raman / P2Q_TARGET - 1.0).abs() <= P2Q_REL_TOL;
        let ray = b1.rayleigh_decoherence_bound < RAYLEIGH_LIMIT;
        let rec = recoil < RECOIL_LIMIT;
        let mark = |b: bool| if b { "ok" } else { "out" };
        Ok((
            p1 && p2 && ray && rec,
            format!(
                "P1q {:.3e} vs 1.25e-6±0.02e-6 [{}]; P2q {:.3e} vs 5e-5±20% [{}]; Rayleigh {:.2e} < 1e-7 [{}]; recoil {:.2e} < 1e-8 [{}]",
                b1.p_raman,
                mark(p1),
                b2.p_raman,
                mark(p2),
                b1.rayleigh_decoherence_bound,
                mark(ray),
                recoil,
                mark(rec)
            ),
        ))
    })
}

pub fn criterion_4(species: &SpeciesData) -> Criterion {
    timed(4, "1e-4 threshold wavelength", || {
        let scan = wavelength_scan((900e-9, 1100e-9), 401, &GateConfig::two_qubit_default(species), species, 1e-4)?;
        let at = |nm: f64| {
            scan.points
                .iter()
                .min_by(|a, b| (a.wavelength_nm - nm).abs().total_cmp(&(b.wavelength_nm - nm).abs()))
                .and_then(|p| p.error_floor)
                .unwrap_or(f64::NAN)
        };
        match scan.threshold_nm {
            Some(t) => Ok((
                (t - THRESHOLD_NM.0).abs() <= THRESHOLD_NM.1,
                format!(
                    "crossing at {t:.1} nm vs 963±5 nm; floor {:.2e} at 963 nm, {:.2e} at 976 nm",
                    at(963.0),
                    at(976.0)
                ),
            )),
            None => Ok((false, "no crossing in 900-1100 nm".into())),
        }
    })
}

pub fn criterion_5(species: &SpeciesData) -> Criterion {
    timed(5, "D5/2 Zeeman splitting", || {
        let f = zeeman_splitting(species.manifold(ManifoldLabel::D52)?, 1.56)?;
        Ok((
            (f / ZEEMAN_TARGET_HZ - 1.0).abs() <= ZEEMAN_REL_TOL,
            format!("{:.4} MHz vs 2.63 MHz ±1%", f / 1e6),
        ))
    })
}

/// Simulate → fit → compare for (+5/2, σ⁻) at four intensities.
#[derive(Clone, Debug, Serialize)]
pub struct ClosedLoop {
    pub input_slope: f64,
    pub fitted_slope: f64,
    pub sigma_slope: f64,
    pub tau_nat_fit: f64,
    pub sigma_tau_nat: f64,
    pub points: Vec<RatePoint>,
}

pub fn closed_loop(species: &SpeciesData, seed: u64, trials: u64) -> Result<ClosedLoop> {
    let engine = ScatteringEngine::with_defaults(species)?;
    let probe = LaserField::pure(976e-9, PolarizationKind::SigmaMinus, 1.0)?;
    let input_slope = engine.rate_per_intensity(Sublevel::up(), &probe, Destination::ExitManifold)?;
    let base = ProtocolConfig {
        initial: Sublevel::up(),
        delays: DEFAULT_DELAYS.to_vec(),
        trials_per_delay: trials,
        seed,
        ..ProtocolConfig::default()
    };
    let closed = fit_exponential(&run_protocol(&base, species)?)?;
    let mut points = Vec::new();
    for (i, frac) in [0.25, 0.5, 0.75, 1.0].into_iter().enumerate() {
        let cfg = ProtocolConfig {
            laser: Some(probe.with_intensity(frac * MAX_SIGMA_INTENSITY)),
            seed: seed.wrapping_add(1 + i as u64),
            ..base.clone()
        };
        let f = fit_exponential(&run_protocol(&cfg, species)?)?;
        let g = subtract_natural(f.tau, f.sigma_tau, closed.tau, closed.sigma_tau)?;
        points.push(RatePoint {
            intensity: frac * MAX_SIGMA_INTENSITY,
            gamma: g.gamma_sd,
            sigma: g.sigma,
        });
    }
    let fit = fit_rate_vs_intensity(&points)?;
    Ok(ClosedLoop {
        input_slope,
        fitted_slope: fit.slope,
        sigma_slope: fit.sigma_slope,
        tau_nat_fit: closed.tau,
        sigma_tau_nat: closed.sigma_tau,
        points,
    })
}

pub fn criterion_6(species: &SpeciesData, seed: u64) -> Criterion {
    timed(6, "closed-loop simulate/fit", || {
        let c = closed_loop(species, seed, 10_000)?;
        let pull_slope = (c.fitted_slope - c.input_slope) / c.sigma_slope;
        let pull_tau = (c.tau_nat_fit - species.d5half_lifetime) / c.sigma_tau_nat;
        Ok((
            pull_slope.abs() <= 3.0 && pull_tau.abs() <= 3.0,
            format!(
                "slope {:.3e}±{:.2e} vs input {:.3e} ({pull_slope:+.2}σ); shutter-closed τ {:.4}±{:.4} s vs {:.3} s ({pull_tau:+.2}σ)",
                c.fitted_slope, c.sigma_slope, c.input_slope, c.tau_nat_fit, c.sigma_tau_nat, species.d5half_lifetime
            ),
        ))
    })
}

pub fn criterion_7(species: &SpeciesData, seed: u64, trials: u64) -> Criterion {
    timed(7, "double-scatter bias", || {
        let mut ok = true;
        let mut parts = Vec::new();
        for (s, (target, tol)) in [Sublevel::up(), Sublevel::down()].into_iter().zip(BIAS_TARGETS) {
            let cfg = ProtocolConfig {
                initial: s,
                laser: Some(LaserField::pure(976e-9, PolarizationKind::SigmaMinus, MAX_SIGMA_INTENSITY)?),
                delays: DEFAULT_DELAYS.to_vec(),
                trials_per_delay: trials,
                seed,
                ..ProtocolConfig::default()
            };
            let b = effective_decay_bias(&cfg, species)?;
            let pct = 100.0 * b.simulated;
            ok &= (pct - target).abs() <= tol;
            parts.push(format!(
                "{:+} sigma-: {pct:.3}±{:.3}% (expected-curve {:.3}%) vs {target}±{tol}",
                s.m,
                100.0 * b.sigma,
                100.0 * b.expected
            ));
        }
        Ok((ok, parts.join("; ")))
    })
}

/// Quick versions of the property suites.
pub fn criterion_8(species: &SpeciesData, seed: u64) -> Criterion {
    timed(8, "property suites", || {
        let mut failures = Vec::new();
        if let Some(e) = cg_properties()? {
            failures.push(e);
        }
        let engine = ScatteringEngine::with_defaults(species)?;
        let mut worst: f64 = 0.0;
        for s in species.sublevels(ManifoldLabel::D52)? {
            for k in [PolarizationKind::SigmaMinus, PolarizationKind::Pi, PolarizationKind::SigmaPlus] {
                let b = engine.rate_breakdown(s, &LaserField::pure(976e-9, k, 1.0)?)?;
                if b.gamma_total > 0.0 {
                    let sum = b.gamma_sd + b.gamma_back.values().sum::<f64>() + b.gamma_elastic;
                    worst = worst.max((sum / b.gamma_total - 1.0).abs());
                }
            }
        }
        if worst > 1e-10 {
            failures.push(format!("breakdown additivity {worst:e}"));
        }
        for base in [GateConfig::single_qubit_default(species), GateConfig::two_qubit_default(species)] {
            let a = crate::gates::gate_error(&base, species)?;
            for scale in [0.1, 10.0] {
                let b = crate::gates::gate_error(&base.with_intensity_scale(scale), species)?;
                let pairs = [
                    (a.p_raman, b.p_raman),
                    (a.p_leak_s, b.p_leak_s),
                    (a.p_bitflip, b.p_bitflip),
                    (a.rayleigh_decoherence_bound, b.rayleigh_decoherence_bound),
                ];
                if pairs.iter().any(|(x, y)| (y / x - 1.0).abs() > 1e-10) {
                    failures.push(format!("budget not intensity invariant at x{scale}"));
                }
            }
        }
        let cfg = ProtocolConfig {
            laser: Some(LaserField::pure(976e-9, PolarizationKind::Pi, MAX_PI_INTENSITY)?),
            initial: Sublevel::down(),
            trials_per_delay: 2000,
            discard_on_up_detect: true,
            seed,
            ..ProtocolConfig::default()
        };
        let a = serde_json::to_string(&run_protocol(&cfg, species)?)?;
        let b = serde_json::to_string(&run_protocol(&cfg, species)?)?;
        if a != b {
            failures.push("same seed gave different datasets".into());
        }
        let (mu, sd) = pull_distribution(species, seed, 200)?;
        if !(mu.abs() < 0.2 && (0.8..=1.25).contains(&sd)) {
            failures.push(format!("pull mean {mu:.3}, sd {sd:.3}"));
        }
        Ok((
            failures.is_empty(),
            if failures.is_empty() {
                format!("CG/3j 1e-12, additivity {worst:.1e}, invariance 1e-10, determinism, pulls mean {mu:+.3} sd {sd:.3}")
            } else {
                failures.join("; ")
            },
        ))
    })
}

fn cg_properties() -> Result<Option<String>> {
    let hs = |t: i32| HalfInt::from_twice(t);
    for tj1 in 0i32..=5 {
        for tj2 in 0..=5 {
            for tm1 in (-tj1..=tj1).step_by(2) {
                for tm2 in (-tj2..=tj2).step_by(2) {
                    let mut s = 0.0;
                    let mut tj = (tj1 - tj2).abs();
                    while tj <= tj1 + tj2 {
                        let tm = tm1 + tm2;
                        if tm.abs() <= tj {
                            let c = clebsch_gordan(hs(tj1), hs(tm1), hs(tj2), hs(tm2), hs(tj), hs(tm))?;
                            if c.abs() > 1.0 + 1e-15 {
                                return Ok(Some(format!("|CG| > 1 at j1={tj1}/2 j2={tj2}/2")));
                            }
                            s += c * c;
                        }
                        tj += 2;
                    }
                    if (s - 1.0).abs() > 1e-12 {
                        return Ok(Some(format!("CG orthogonality off by {:e}", s - 1.0)));
                    }
                }
            }
        }
    }
    for tj1 in 0i32..=4 {
        for tj2 in 0..=4 {
            for tj3 in (tj1 - tj2).abs()..=(tj1 + tj2) {
                for tm1 in (-tj1..=tj1).step_by(2) {
                    for tm2 in (-tj2..=tj2).step_by(2) {
                        let tm3 = -tm1 - tm2;
                        if tm3.abs() > tj3 || (tj3 - tm3) % 2 != 0 {
                            continue;
                        }
                        let (a, b, c, x, y, z) = (hs(tj1), hs(tj2), hs(tj3), hs(tm1), hs(tm2), hs(tm3));
                        let v = wigner3j(a, b, c, x, y, z)?;
                        let cyc = wigner3j(b, c, a, y, z, x)?;
                        let odd = wigner3j(b, a, c, y, x, z)?;
                        let sign = if ((tj1 + tj2 + tj3) / 2) % 2 == 0 { 1.0 } else { -1.0 };
                        if (v - cyc).abs() > 1e-12 || (odd - sign * v).abs() > 1e-12 {
                            return Ok(Some("3j permutation symmetry violated".into()));
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Mean and standard deviation of (fit − truth)/σ over shutter-closed repetitions.
pub fn pull_distribution(species: &SpeciesData, seed: u64, reps: u64) -> Result<(f64, f64)> {
    let truth = 1.0 / species.d5half_lifetime;
    let mut pulls = Vec::with_capacity(reps as usize);
    for r in 0..reps {
        let cfg = ProtocolConfig {
            trials_per_delay: 10_000,
            seed: seed.wrapping_mul(1_000_003).wrapping_add(r),
            ..ProtocolConfig::default()
        };
        let f = fit_exponential(&run_protocol(&cfg, species)?)?;
        pulls.push((f.rate - truth) / f.sigma_rate);
    }
    let n = pulls.len() as f64;
    let mu = pulls.iter().sum::<f64>() / n;
    let sd = (pulls.iter().map(|p| (p - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    Ok((mu, sd))
}

/// Default sizes for criterion 7.
pub const BIAS_TRIALS: u64 = 200_000;

pub fn run_all(species: &SpeciesData, seed: u64) -> Vec<Criterion> {
    vec![
        criterion_1(species),
        criterion_2(species),
        criterion_3(species),
        criterion_4(species),
        criterion_5(species),
        criterion_6(species, seed),
        criterion_7(species, seed, BIAS_TRIALS),
        criterion_8(species, seed),
    ]
}
