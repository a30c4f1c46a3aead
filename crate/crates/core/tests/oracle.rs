//! Independent reference calculations checked against the library.

use std::collections::HashMap;

use num_complex::Complex64;
use raman_scatter::constants::{C, EPS0, HBAR};
use raman_scatter::prelude::*;
use raman_scatter::scattering::emission_rate_per_intensity;

/// Clebsch-Gordan table built by lowering the stretched state and
/// Gram-Schmidt orthogonalization (Condon-Shortley phases), keyed by twice
/// the quantum numbers (j1, m1, j2, m2, J, M).
fn cg_by_lowering(tj1: i32, tj2: i32) -> HashMap<(i32, i32, i32, i32), f64> {
    let m1s: Vec<i32> = (-tj1..=tj1).step_by(2).collect();
    let m2s: Vec<i32> = (-tj2..=tj2).step_by(2).collect();
    let idx = |m1: i32, m2: i32| {
        let a = ((m1 + tj1) / 2) as usize;
        let b = ((m2 + tj2) / 2) as usize;
        a * m2s.len() + b
    };
    let dim = m1s.len() * m2s.len();
    // J- in units of ħ, applied to a product-basis vector
    let lower = |v: &[f64]| {
        let mut out = vec![0.0; dim];
        for &m1 in &m1s {
            for &m2 in &m2s {
                let c = v[idx(m1, m2)];
                if c == 0.0 {
                    continue;
                }
                let f = |tj: i32, tm: i32| {
                    let (j, m) = (tj as f64 / 2.0, tm as f64 / 2.0);
                    ((j + m) * (j - m + 1.0)).sqrt()
                };
                if m1 > -tj1 {
                    out[idx(m1 - 2, m2)] += c * f(tj1, m1);
                }
                if m2 > -tj2 {
                    out[idx(m1, m2 - 2)] += c * f(tj2, m2);
                }
            }
        }
        out
    };
    let mut states: HashMap<(i32, i32), Vec<f64>> = HashMap::new();
    let mut tj = tj1 + tj2;
    while tj >= (tj1 - tj2).abs() {
        // top state |J, J>: orthogonal to all higher-J states with M = J
        let mut v = vec![0.0; dim];
        for &m1 in &m1s {
            let m2 = tj - m1;
            if m2.abs() <= tj2 {
                v[idx(m1, m2)] = 1.0 + (m1 as f64) * 0.01;
            }
        }
        let mut tk = tj + 2;
        while tk <= tj1 + tj2 {
            let u = &states[&(tk, tj)];
            let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= d * y);
            tk += 2;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        // phase: <j1 j1; j2 (J - j1) | J J> > 0
        if v[idx(tj1, tj - tj1)] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let mut tm = tj;
        loop {
            states.insert((tj, tm), v.clone());
            if tm == -tj {
                break;
            }
            let j = tj as f64 / 2.0;
            let m = tm as f64 / 2.0;
            let f = ((j + m) * (j - m + 1.0)).sqrt();
            v = lower(&v).into_iter().map(|x| x / f).collect();
            tm -= 2;
        }
        tj -= 2;
    }
    let mut out = HashMap::new();
    for ((tj, tm), v) in &states {
        for &m1 in &m1s {
            let m2 = tm - m1;
            if m2.abs() <= tj2 {
                out.insert((m1, m2, *tj, *tm), v[idx(m1, m2)]);
            }
        }
    }
    out
}

#[test]
fn clebsch_gordan_matches_lowering_construction() {
    let h = HalfInt::from_twice;
    let mut checked = 0;
    for tj1 in 0..=5 {
        for tj2 in 0..=4 {
            for ((m1, m2, tj, tm), v) in cg_by_lowering(tj1, tj2) {
                let c = clebsch_gordan(h(tj1), h(m1), h(tj2), h(m2), h(tj), h(tm)).unwrap();
                assert!((c - v).abs() < 1e-12, "j1={tj1}/2 m1={m1}/2 j2={tj2}/2 m2={m2}/2 J={tj}/2: {c} vs {v}");
                checked += 1;
            }
        }
    }
    assert!(checked > 500);
}

fn zero_field_rwa(species: &SpeciesData) -> ScatteringEngine {
    ScatteringEngine::new(species, EngineOptions { zeeman: false, ..EngineOptions::default() }).unwrap()
}

/// Far-detuned single-intermediate picture: with a pure polarization the
/// intermediate sublevel is unique, so the rate into a lower manifold is the
/// virtual P3/2 population times its partial decay rate, rescaled by the
/// ratio of emitted to resonant frequency cubed.
fn population_times_branching(species: &SpeciesData, s: Sublevel, kind: PolarizationKind, lower: ManifoldLabel) -> f64 {
    let j_d = HalfInt::from_twice(5);
    let j_p = HalfInt::from_twice(3);
    let p32 = species.upper_level(ManifoldLabel::P32).unwrap();
    let w_dp = species.transition_angular_frequency(ManifoldLabel::P32, ManifoldLabel::D52).unwrap();
    let w_l = 2.0 * std::f64::consts::PI * C / 976e-9;
    let delta = w_l - w_dp;
    let q = HalfInt::from(kind.q());
    let mk = s.m + q;
    if mk.abs() > j_p {
        return 0.0;
    }
    let d2 = species.reduced_dipole_sq(ManifoldLabel::P32, ManifoldLabel::D52).unwrap();
    let cg = clebsch_gordan(j_d, s.m, HalfInt::ONE, q, j_p, mk).unwrap();
    let dip_sq = cg * cg * d2 / 4.0;
    // |Ω|² per intensity, E² = 2I/(cε0)
    let rabi_sq = dip_sq * 2.0 / (C * EPS0) / (HBAR * HBAR);
    let pop = rabi_sq / (4.0 * delta * delta);
    let w_emit = w_l + species.transition_angular_frequency(ManifoldLabel::D52, lower).unwrap();
    let w0 = species.transition_angular_frequency(ManifoldLabel::P32, lower).unwrap();
    pop * p32.einstein_a(lower).unwrap() * (w_emit / w0).powi(3)
}

#[test]
fn exit_rates_match_virtual_population_picture() {
    let species = SpeciesData::ca40();
    let engine = zero_field_rwa(&species);
    for s in species.sublevels(ManifoldLabel::D52).unwrap() {
        for kind in [PolarizationKind::SigmaMinus, PolarizationKind::Pi, PolarizationKind::SigmaPlus] {
            let laser = LaserField::pure(976e-9, kind, 1.0).unwrap();
            let b = engine.rate_breakdown(s, &laser).unwrap();
            for lower in [ManifoldLabel::S12, ManifoldLabel::D32] {
                let want = population_times_branching(&species, s, kind, lower);
                let got = b.gamma_by_manifold.get(&lower).copied().unwrap_or(0.0);
                assert!(
                    (got - want).abs() <= 1e-10 * want.max(1e-30),
                    "{s} {kind} -> {lower}: {got:e} vs {want:e}"
                );
            }
        }
    }
}

// frozen from exit_rates_match_virtual_population_picture's oracle at zero field
const ORACLE_RATES: [f64; 3] = [3.4815527682541e-9, 2.0889316609524605e-9, 1.3926211073016403e-9];

#[test]
fn frozen_measured_configuration_rates() {
    let species = SpeciesData::ca40();
    let engine = zero_field_rwa(&species);
    let configs = [
        (Sublevel::up(), PolarizationKind::SigmaMinus),
        (Sublevel::down(), PolarizationKind::SigmaMinus),
        (Sublevel::down(), PolarizationKind::Pi),
    ];
    for ((s, k), want) in configs.into_iter().zip(ORACLE_RATES) {
        let laser = LaserField::pure(976e-9, k, 1.0).unwrap();
        let oracle: f64 = [ManifoldLabel::S12, ManifoldLabel::D32]
            .into_iter()
            .map(|l| population_times_branching(&species, s, k, l))
            .sum();
        assert!((oracle / want - 1.0).abs() < 1e-9);
        let got = engine.rate_per_intensity(s, &laser, Destination::ExitManifold).unwrap();
        assert!((got / want - 1.0).abs() < 1e-9, "{got:e} vs {want:e}");
    }
}

#[test]
fn manifold_averaged_rate_is_isotropic() {
    let species = SpeciesData::ca40();
    let engine = zero_field_rwa(&species);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pols: Vec<[Complex64; 3]> = vec![
        PolarizationKind::SigmaMinus.components(),
        PolarizationKind::Pi.components(),
        PolarizationKind::SigmaPlus.components(),
        [Complex64::new(s, 0.0), Complex64::new(0.0, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.48), Complex64::new(0.64, 0.0)],
    ];
    let total = |p: &[Complex64; 3]| -> f64 {
        let laser = LaserField::new(976e-9, *p, 1.0).unwrap();
        species
            .sublevels(ManifoldLabel::D52)
            .unwrap()
            .into_iter()
            .map(|m| engine.rate_breakdown(m, &laser).unwrap().gamma_total)
            .sum()
    };
    let reference = total(&pols[0]);
    for p in &pols[1..] {
        let t = total(p);
        assert!((t / reference - 1.0).abs() < 1e-10, "{t:e} vs {reference:e}");
    }
}

#[test]
fn emission_rate_scales_as_frequency_cubed() {
    let a = Complex64::new(1e-39, 2e-39);
    let w = 1.9e15;
    let r1 = emission_rate_per_intensity(a, w);
    let r2 = emission_rate_per_intensity(a, 2.0 * w);
    assert!((r2 / r1 - 8.0).abs() < 1e-12);
    assert!((emission_rate_per_intensity(a * 3.0, w) / r1 - 9.0).abs() < 1e-12);
}

#[test]
fn qubit_light_shift_matches_two_level_formula() {
    let species = SpeciesData::ca40();
    let engine = zero_field_rwa(&species);
    let laser = LaserField::pure(976e-9, PolarizationKind::SigmaMinus, 1.0).unwrap();
    let j_d = HalfInt::from_twice(5);
    let j_p = HalfInt::from_twice(3);
    let w_dp = species.transition_angular_frequency(ManifoldLabel::P32, ManifoldLabel::D52).unwrap();
    let delta = laser.angular_frequency() - w_dp;
    let d2 = species.reduced_dipole_sq(ManifoldLabel::P32, ManifoldLabel::D52).unwrap();
    for s in [Sublevel::up(), Sublevel::down()] {
        let mk = s.m - HalfInt::ONE;
        let cg = clebsch_gordan(j_d, s.m, HalfInt::ONE, HalfInt::from(-1), j_p, mk).unwrap();
        let rabi_sq = cg * cg * d2 / 4.0 * 2.0 / (C * EPS0) / (HBAR * HBAR);
        let want = rabi_sq / (4.0 * delta) / (2.0 * std::f64::consts::PI);
        let got = engine.stark_shift(&laser, s).unwrap();
        assert!((got / want - 1.0).abs() < 1e-10, "{s}: {got:e} vs {want:e}");
    }
}

#[test]
fn uniformization_matches_jump_simulation() {
    use rand::SeedableRng;
    let species = SpeciesData::ca40();
    let cfg = ProtocolConfig {
        initial: Sublevel::down(),
        laser: Some(LaserField::pure(976e-9, PolarizationKind::Pi, 3e9).unwrap()),
        ..ProtocolConfig::default()
    };
    let m = build_rate_matrix(&cfg, &species).unwrap();
    let t = 0.3;
    let p = m.distribution_at(Sublevel::down(), t).unwrap();
    let n = 60_000;
    let mut counts = vec![0usize; m.n_states() + 1];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..n {
        match simulate_trial(&m, Sublevel::down(), t, &mut rng).unwrap() {
            raman_scatter::sim::TerminalState::Sublevel(s) => counts[m.index_of(s).unwrap()] += 1,
            raman_scatter::sim::TerminalState::Absorbed => counts[m.n_states()] += 1,
        }
    }
    for (c, q) in counts.iter().zip(&p) {
        let sd = (q * (1.0 - q) / n as f64).sqrt().max(1e-4);
        assert!(((*c as f64 / n as f64) - q).abs() < 5.0 * sd, "{c} vs {q}");
    }
}
