//! Level structure, lifetimes and branching fractions of the ion species.
//!
//! File units are declared in the key names (`energy_thz`, `lifetime_ns`,
//! `tau_nat_ms`, `ion_mass_amu`) and converted to SI once, at load time.
//! Everything after loading is SI.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::angular::HalfInt;
use crate::constants::{AMU, C, EPS0, GAUSS, H, HBAR, MU_B, THZ};
use crate::error::{Error, Result};

/// Bundled ⁴⁰Ca⁺ data file.
pub const CA40_JSON: &str = include_str!("../data/ca40.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ManifoldLabel {
    #[serde(rename = "S1/2")]
    S12,
    #[serde(rename = "D3/2")]
    D32,
    #[serde(rename = "D5/2")]
    D52,
    #[serde(rename = "P1/2")]
    P12,
    #[serde(rename = "P3/2")]
    P32,
}

impl ManifoldLabel {
    pub const ALL: [ManifoldLabel; 5] = [
        ManifoldLabel::S12,
        ManifoldLabel::D32,
        ManifoldLabel::D52,
        ManifoldLabel::P12,
        ManifoldLabel::P32,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ManifoldLabel::S12 => "S1/2",
            ManifoldLabel::D32 => "D3/2",
            ManifoldLabel::D52 => "D5/2",
            ManifoldLabel::P12 => "P1/2",
            ManifoldLabel::P32 => "P3/2",
        }
    }
}

impl fmt::Display for ManifoldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ManifoldLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        ManifoldLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(t) || l.as_str().replace('/', "") == t.replace('/', "").to_ascii_uppercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown manifold `{s}`")))
    }
}

/// A fine-structure manifold with LS quantum numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifold {
    pub label: ManifoldLabel,
    pub l: u32,
    pub s: HalfInt,
    pub j: HalfInt,
    /// Optical frequency above S1/2, in Hz.
    pub energy_hz: f64,
}

impl Manifold {
    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * self.energy_hz
    }

    pub fn sublevels(&self) -> impl DoubleEndedIterator<Item = Sublevel> + '_ {
        self.j.projections().map(move |m| Sublevel::new(self.label, m))
    }
}

/// A Zeeman sublevel `|manifold, m_J>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sublevel {
    pub manifold: ManifoldLabel,
    pub m: HalfInt,
}

impl Sublevel {
    pub const fn new(manifold: ManifoldLabel, m: HalfInt) -> Self {
        Sublevel { manifold, m }
    }

    /// `|D5/2, m>` from twice the projection.
    pub const fn d52(twice_m: i32) -> Self {
        Sublevel::new(ManifoldLabel::D52, HalfInt::from_twice(twice_m))
    }

    /// Qubit state |↑⟩ = |D5/2, +5/2⟩.
    pub const fn up() -> Self {
        Sublevel::d52(5)
    }

    /// Qubit state |↓⟩ = |D5/2, +3/2⟩.
    pub const fn down() -> Self {
        Sublevel::d52(3)
    }
}

impl fmt::Display for Sublevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}, {:+}>", self.manifold, self.m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpperLevelData {
    pub manifold: ManifoldLabel,
    /// Seconds.
    pub lifetime: f64,
    pub lifetime_rel_uncertainty: f64,
    pub branching: BTreeMap<ManifoldLabel, f64>,
}

impl UpperLevelData {
    /// Partial decay rate `A = branching / lifetime` (1/s).
    pub fn einstein_a(&self, lower: ManifoldLabel) -> Option<f64> {
        self.branching.get(&lower).map(|b| b / self.lifetime)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeciesData {
    pub name: String,
    pub manifolds: Vec<Manifold>,
    pub upper_levels: Vec<UpperLevelData>,
    /// D5/2 natural lifetime τ_nat (s).
    pub d5half_lifetime: f64,
    pub d5half_lifetime_uncertainty: f64,
    /// kg
    pub ion_mass: f64,
    pub sources: BTreeMap<String, String>,
}

// On-disk layout.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifoldFile {
    label: ManifoldLabel,
    #[serde(rename = "L")]
    l: u32,
    #[serde(rename = "S")]
    s: HalfInt,
    #[serde(rename = "J")]
    j: HalfInt,
    energy_thz: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UpperFile {
    manifold: ManifoldLabel,
    lifetime_ns: f64,
    #[serde(default)]
    lifetime_rel_uncertainty: f64,
    branching: BTreeMap<ManifoldLabel, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeciesFile {
    name: String,
    ion_mass_amu: f64,
    tau_nat_ms: f64,
    #[serde(default)]
    tau_nat_uncertainty_ms: f64,
    manifolds: Vec<ManifoldFile>,
    upper_levels: Vec<UpperFile>,
    #[serde(default)]
    sources: BTreeMap<String, String>,
}

/// Reads and validates a species file.
pub fn load_species(path: impl AsRef<Path>) -> Result<SpeciesData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    SpeciesData::from_json(&text)
}

impl SpeciesData {
    /// The bundled ⁴⁰Ca⁺ registry.
    pub fn ca40() -> SpeciesData {
        SpeciesData::from_json(CA40_JSON).expect("bundled species file is valid")
    }

    pub fn from_json(text: &str) -> Result<SpeciesData> {
        let raw: SpeciesFile = serde_json::from_str(text)?;
        let data = SpeciesData {
            name: raw.name,
            manifolds: raw
                .manifolds
                .into_iter()
                .map(|m| Manifold {
                    label: m.label,
                    l: m.l,
                    s: m.s,
                    j: m.j,
                    energy_hz: m.energy_thz * THZ,
                })
                .collect(),
            upper_levels: raw
                .upper_levels
                .into_iter()
                .map(|u| UpperLevelData {
                    manifold: u.manifold,
                    lifetime: u.lifetime_ns * 1e-9,
                    lifetime_rel_uncertainty: u.lifetime_rel_uncertainty,
                    branching: u.branching,
                })
                .collect(),
            d5half_lifetime: raw.tau_nat_ms * 1e-3,
            d5half_lifetime_uncertainty: raw.tau_nat_uncertainty_ms * 1e-3,
            ion_mass: raw.ion_mass_amu * AMU,
            sources: raw.sources,
        };
        data.validate()?;
        Ok(data)
    }

    /// Serializes back to the file layout (file units).
    pub fn to_json(&self) -> Result<String> {
        let raw = SpeciesFile {
            name: self.name.clone(),
            ion_mass_amu: self.ion_mass / AMU,
            tau_nat_ms: self.d5half_lifetime * 1e3,
            tau_nat_uncertainty_ms: self.d5half_lifetime_uncertainty * 1e3,
            manifolds: self
                .manifolds
                .iter()
                .map(|m| ManifoldFile {
                    label: m.label,
                    l: m.l,
                    s: m.s,
                    j: m.j,
                    energy_thz: m.energy_hz / THZ,
                })
                .collect(),
            upper_levels: self
                .upper_levels
                .iter()
                .map(|u| UpperFile {
                    manifold: u.manifold,
                    lifetime_ns: u.lifetime * 1e9,
                    lifetime_rel_uncertainty: u.lifetime_rel_uncertainty,
                    branching: u.branching.clone(),
                })
                .collect(),
            sources: self.sources.clone(),
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }

    fn validate(&self) -> Result<()> {
        fn v(field: impl Into<String>, reason: impl Into<String>) -> Error {
            Error::validation(field, reason)
        }
        if !(self.ion_mass > 0.0 && self.ion_mass.is_finite()) {
            return Err(v("ion_mass_amu", "must be positive"));
        }
        if !(self.d5half_lifetime > 0.0 && self.d5half_lifetime.is_finite()) {
            return Err(v("tau_nat_ms", "must be positive"));
        }
        if !(self.d5half_lifetime_uncertainty >= 0.0) {
            return Err(v("tau_nat_uncertainty_ms", "must be non-negative"));
        }
        for (i, m) in self.manifolds.iter().enumerate() {
            let field = format!("manifolds[{i}] ({})", m.label);
            if self.manifolds[..i].iter().any(|o| o.label == m.label) {
                return Err(v(field, "duplicate manifold label"));
            }
            let l2 = 2 * m.l as i32;
            if m.s.twice() < 0 || m.j.twice() < 0 {
                return Err(v(field, "negative S or J"));
            }
            if m.j.twice() < (l2 - m.s.twice()).abs() || m.j.twice() > l2 + m.s.twice() {
                return Err(v(field, format!("J = {} not in |L - S|..L + S", m.j)));
            }
            if (l2 + m.s.twice() - m.j.twice()) % 2 != 0 {
                return Err(v(field, "L + S - J must be an integer"));
            }
            if !m.energy_hz.is_finite() || m.energy_hz < 0.0 {
                return Err(v(field, "energy must be finite and non-negative"));
            }
        }
        let mut sorted: Vec<&Manifold> = self.manifolds.iter().collect();
        sorted.sort_by_key(|m| m.label);
        for pair in sorted.windows(2) {
            if pair[1].energy_hz <= pair[0].energy_hz {
                return Err(v(
                    format!("manifolds ({})", pair[1].label),
                    format!("energy must lie strictly above {}", pair[0].label),
                ));
            }
        }
        if self.manifold(ManifoldLabel::D52).is_err() {
            return Err(v("manifolds", "D5/2 manifold is required"));
        }
        for (i, u) in self.upper_levels.iter().enumerate() {
            let field = format!("upper_levels[{i}] ({})", u.manifold);
            let upper = self
                .manifold(u.manifold)
                .map_err(|_| v(field.clone(), "manifold not defined"))?;
            if self.upper_levels[..i].iter().any(|o| o.manifold == u.manifold) {
                return Err(v(field, "duplicate upper level"));
            }
            if !(u.lifetime > 0.0 && u.lifetime.is_finite()) {
                return Err(v(format!("{field}.lifetime_ns"), "must be positive"));
            }
            if !(0.0..1.0).contains(&u.lifetime_rel_uncertainty) {
                return Err(v(format!("{field}.lifetime_rel_uncertainty"), "must lie in [0, 1)"));
            }
            if u.branching.is_empty() {
                return Err(v(format!("{field}.branching"), "no decay channels"));
            }
            let mut sum = 0.0;
            for (lower, &b) in &u.branching {
                let bf = format!("{field}.branching.{lower}");
                if !(b > 0.0 && b < 1.0) && !(b == 1.0 && u.branching.len() == 1) {
                    return Err(v(bf, format!("fraction {b} outside (0, 1)")));
                }
                let low = self.manifold(*lower).map_err(|_| v(bf.clone(), "lower manifold not defined"))?;
                if low.energy_hz >= upper.energy_hz {
                    return Err(v(bf, "lower manifold is not below the upper level"));
                }
                if (low.l as i32 - upper.l as i32).abs() != 1 || (low.j.twice() - upper.j.twice()).abs() > 2 {
                    return Err(v(bf, "not an electric-dipole transition"));
                }
                sum += b;
            }
            if (sum - 1.0).abs() > 1e-6 {
                return Err(v(format!("{field}.branching"), format!("fractions sum to {sum}, expected 1")));
            }
        }
        Ok(())
    }

    pub fn manifold(&self, label: ManifoldLabel) -> Result<&Manifold> {
        self.manifolds
            .iter()
            .find(|m| m.label == label)
            .ok_or_else(|| Error::InvalidArgument(format!("manifold {label} not present in species data")))
    }

    pub fn upper_level(&self, label: ManifoldLabel) -> Option<&UpperLevelData> {
        self.upper_levels.iter().find(|u| u.manifold == label)
    }

    /// Upper levels with a dipole decay channel into `lower`.
    pub fn upper_levels_coupled_to(&self, lower: ManifoldLabel) -> impl Iterator<Item = &UpperLevelData> {
        self.upper_levels.iter().filter(move |u| u.branching.contains_key(&lower))
    }

    /// Angular frequency ω of the upper → lower transition (rad/s), zero field.
    pub fn transition_angular_frequency(&self, upper: ManifoldLabel, lower: ManifoldLabel) -> Result<f64> {
        Ok(self.manifold(upper)?.angular_frequency() - self.manifold(lower)?.angular_frequency())
    }

    /// |⟨lower‖d‖upper⟩|² in C² m², from the partial Einstein A coefficient.
    pub fn reduced_dipole_sq(&self, upper: ManifoldLabel, lower: ManifoldLabel) -> Result<f64> {
        let missing = || Error::MissingTransition {
            upper: upper.to_string(),
            lower: lower.to_string(),
        };
        let data = self.upper_level(upper).ok_or_else(missing)?;
        let a = data.einstein_a(lower).ok_or_else(missing)?;
        let omega = self.transition_angular_frequency(upper, lower)?;
        let j_up = self.manifold(upper)?.j;
        Ok(reduced_dipole_sq_from_a(a, omega, j_up))
    }

    /// Sublevel energy as an angular frequency including the linear Zeeman shift.
    pub fn sublevel_angular_frequency(&self, s: Sublevel, field_gauss: f64) -> Result<f64> {
        let m = self.manifold(s.manifold)?;
        Ok(m.angular_frequency() + lande_g(m) * s.m.value() * MU_B * field_gauss * GAUSS / HBAR)
    }

    pub fn sublevels(&self, label: ManifoldLabel) -> Result<Vec<Sublevel>> {
        Ok(self.manifold(label)?.sublevels().collect())
    }
}

/// `3π ε₀ ħ c³ (2J_up + 1) A / ω³`.
pub fn reduced_dipole_sq_from_a(a: f64, omega: f64, j_upper: HalfInt) -> f64 {
    3.0 * PI * EPS0 * HBAR * C.powi(3) * f64::from(j_upper.twice() + 1) * a / omega.powi(3)
}

/// Inverse of [`reduced_dipole_sq_from_a`].
pub fn einstein_a_from_reduced(d_sq: f64, omega: f64, j_upper: HalfInt) -> f64 {
    d_sq * omega.powi(3) / (3.0 * PI * EPS0 * HBAR * C.powi(3) * f64::from(j_upper.twice() + 1))
}

/// Landé g_J in the LS approximation (g_s = 2).
pub fn lande_g(m: &Manifold) -> f64 {
    let j = m.j.value();
    let s = m.s.value();
    let l = f64::from(m.l);
    if j == 0.0 {
        return 0.0;
    }
    1.0 + (j * (j + 1.0) + s * (s + 1.0) - l * (l + 1.0)) / (2.0 * j * (j + 1.0))
}

/// Frequency spacing (Hz) between adjacent sublevels at `field_gauss`.
pub fn zeeman_splitting(m: &Manifold, field_gauss: f64) -> Result<f64> {
    if !(field_gauss >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "magnetic field must be non-negative, got {field_gauss} G"
        )));
    }
    Ok(lande_g(m) * MU_B * field_gauss * GAUSS / H)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ca() -> SpeciesData {
        SpeciesData::ca40()
    }

    #[test]
    fn bundled_file_loads() {
        let s = ca();
        assert_eq!(s.name, "40Ca+");
        let p32 = s.upper_level(ManifoldLabel::P32).unwrap();
        assert_eq!(p32.branching[&ManifoldLabel::D52], 0.0588);
        assert!((s.d5half_lifetime - 1.168).abs() < 1e-15);
    }

    #[test]
    fn lande_factors() {
        let s = ca();
        let g = |l| lande_g(s.manifold(l).unwrap());
        assert!((g(ManifoldLabel::S12) - 2.0).abs() < 1e-15);
        assert!((g(ManifoldLabel::D52) - 1.2).abs() < 1e-15);
        assert!((g(ManifoldLabel::P32) - 4.0 / 3.0).abs() < 1e-15);
        assert!((g(ManifoldLabel::D32) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zeeman() {
        let s = ca();
        let d52 = s.manifold(ManifoldLabel::D52).unwrap();
        let f = zeeman_splitting(d52, 1.56).unwrap();
        assert!((f / 2.63e6 - 1.0).abs() < 0.01, "{f}");
        assert_eq!(zeeman_splitting(d52, 0.0).unwrap(), 0.0);
        let s12 = zeeman_splitting(s.manifold(ManifoldLabel::S12).unwrap(), 1.0).unwrap();
        assert!((s12 - 2.799_249e6).abs() < 1e2, "{s12}");
        assert!(zeeman_splitting(d52, -1.0).is_err());
    }

    #[test]
    fn reduced_element_round_trip() {
        let s = ca();
        let up = s.upper_level(ManifoldLabel::P32).unwrap();
        for (&low, &b) in &up.branching {
            let d2 = s.reduced_dipole_sq(ManifoldLabel::P32, low).unwrap();
            let w = s.transition_angular_frequency(ManifoldLabel::P32, low).unwrap();
            let a = einstein_a_from_reduced(d2, w, HalfInt::from_twice(3));
            assert!((a * up.lifetime / b - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn reduced_element_scaling() {
        let j = HalfInt::from_twice(3);
        let base = reduced_dipole_sq_from_a(1e6, 2e15, j);
        assert!((reduced_dipole_sq_from_a(2e6, 2e15, j) / base - 2.0).abs() < 1e-14);
        assert!((reduced_dipole_sq_from_a(1e6, 4e15, j) / base - 0.125).abs() < 1e-14);
    }

    #[test]
    fn missing_transition() {
        let s = ca();
        let e = s.reduced_dipole_sq(ManifoldLabel::P12, ManifoldLabel::D52).unwrap_err();
        assert!(matches!(e, Error::MissingTransition { .. }));
    }

    #[test]
    fn bad_branching_sum_names_field() {
        let text = CA40_JSON.replace("\"D5/2\": 0.0588", "\"D5/2\": 0.2588");
        match SpeciesData::from_json(&text).unwrap_err() {
            Error::Validation { field, .. } => assert!(field.contains("branching"), "{field}"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn misordered_energies_rejected() {
        let text = CA40_JSON.replace("409.2224012", "412.0");
        assert!(matches!(SpeciesData::from_json(&text), Err(Error::Validation { .. })));
    }

    #[test]
    fn json_round_trip() {
        let s = ca();
        let back = SpeciesData::from_json(&s.to_json().unwrap()).unwrap();
        assert!((back.ion_mass / s.ion_mass - 1.0).abs() < 1e-12);
        for (a, b) in back.manifolds.iter().zip(&s.manifolds) {
            assert!((a.energy_hz - b.energy_hz).abs() <= 1e-12 * b.energy_hz.max(1.0));
        }
    }

    #[test]
    fn label_parsing() {
        assert_eq!("D5/2".parse::<ManifoldLabel>().unwrap(), ManifoldLabel::D52);
        assert_eq!("p32".parse::<ManifoldLabel>().unwrap(), ManifoldLabel::P32);
        assert!("F7/2".parse::<ManifoldLabel>().is_err());
    }
}
