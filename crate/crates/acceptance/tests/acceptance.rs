//! One test per acceptance criterion; each prints a PASS/FAIL line with the
//! computed values and the pinned tolerance.

use raman_scatter::reproduce;
use raman_scatter::species::SpeciesData;
use raman_scatter_acceptance::check;

const SEED: u64 = 2018;

#[test]
fn criterion_1_theory_rates() {
    check(reproduce::criterion_1(&SpeciesData::ca40()));
}

#[test]
fn criterion_2_exact_ratio() {
    check(reproduce::criterion_2(&SpeciesData::ca40()));
}

#[test]
fn criterion_3_gate_errors() {
    check(reproduce::criterion_3(&SpeciesData::ca40()));
}

#[test]
fn criterion_4_threshold_scan() {
    check(reproduce::criterion_4(&SpeciesData::ca40()));
}

#[test]
fn criterion_5_zeeman() {
    check(reproduce::criterion_5(&SpeciesData::ca40()));
}

#[test]
fn criterion_6_closed_loop() {
    check(reproduce::criterion_6(&SpeciesData::ca40(), SEED));
}

#[test]
fn criterion_7_double_scatter_bias() {
    check(reproduce::criterion_7(&SpeciesData::ca40(), SEED, reproduce::BIAS_TRIALS));
}

#[test]
fn criterion_8_property_suites() {
    check(reproduce::criterion_8(&SpeciesData::ca40(), SEED));
}
