//! Stochastic simulation of the decay-rate measurement.
//!
//! Each trial prepares one D5/2 sublevel, evolves it under the continuous-time
//! rate matrix (laser scattering plus natural decay) for the delay, and is then
//! read out through a classifier with configurable error probabilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fit;
use crate::scattering::{EngineOptions, LaserField, ScatteringEngine};
use crate::species::{ManifoldLabel, SpeciesData, Sublevel};

/// Readout classes of the fluorescence check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrialOutcome {
    /// Bright on the first check: population left D5/2.
    FluorescesSD,
    /// Dark, then bright after the depump: D5/2 other than |↑⟩.
    DarkQubitLowerOrOther,
    /// Dark through the depump, bright after clearing D5/2.
    DarkUp,
    /// Never bright.
    Lost,
}

impl TrialOutcome {
    const READOUT: [TrialOutcome; 3] = [
        TrialOutcome::FluorescesSD,
        TrialOutcome::DarkQubitLowerOrOther,
        TrialOutcome::DarkUp,
    ];

    fn index(self) -> usize {
        match self {
            TrialOutcome::FluorescesSD => 0,
            TrialOutcome::DarkQubitLowerOrOther => 1,
            TrialOutcome::DarkUp => 2,
            TrialOutcome::Lost => 3,
        }
    }
}

/// Row-stochastic misreport probabilities over
/// (FluorescesSD, DarkQubitLowerOrOther, DarkUp): `p[true][reported]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[f64; 3]; 3]);

impl Default for ConfusionMatrix {
    fn default() -> Self {
        ConfusionMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }
}

impl ConfusionMatrix {
    /// Each outcome is misreported as each other outcome with probability `e`.
    pub fn symmetric(e: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&e) {
            return Err(Error::Protocol(format!("classify error {e} outside [0, 0.5]")));
        }
        let d = 1.0 - 2.0 * e;
        Ok(ConfusionMatrix([[d, e, e], [e, d, e], [e, e, d]]))
    }

    fn validate(&self) -> Result<()> {
        for (i, row) in self.0.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Protocol(format!("classify_error row {i} has entries outside [0, 1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::Protocol(format!("classify_error row {i} sums to {s}, expected 1")));
            }
        }
        Ok(())
    }

    fn apply(&self, truth: TrialOutcome, u: f64) -> TrialOutcome {
        let row = &self.0[truth.index()];
        let mut acc = 0.0;
        for (j, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return TrialOutcome::READOUT[j];
            }
        }
        truth
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub initial: Sublevel,
    /// `None` is the shutter-closed reference.
    pub laser: Option<LaserField>,
    /// Seconds, strictly positive and increasing.
    pub delays: Vec<f64>,
    pub trials_per_delay: u64,
    /// Probability that shelving failed and the ion starts outside D5/2.
    pub prep_error: f64,
    pub classify_error: ConfusionMatrix,
    /// Probability that the depump clears a non-|↑⟩ D5/2 sublevel.
    pub depump_fidelity: f64,
    pub ion_loss_per_trial: f64,
    pub discard_on_up_detect: bool,
    pub seed: u64,
    pub engine: EngineOptions,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            initial: Sublevel::up(),
            laser: None,
            delays: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            trials_per_delay: 10_000,
            prep_error: 0.0,
            classify_error: ConfusionMatrix::default(),
            depump_fidelity: 0.99,
            ion_loss_per_trial: 0.0,
            discard_on_up_detect: false,
            seed: 0,
            engine: EngineOptions::default(),
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delays.is_empty() {
            return Err(Error::Protocol("no delays given".into()));
        }
        if self.delays.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::Protocol("delays must be positive and finite".into()));
        }
        if self.delays.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Protocol("delays must be strictly increasing".into()));
        }
        if self.trials_per_delay == 0 {
            return Err(Error::Protocol("trials_per_delay must be at least 1".into()));
        }
        for (name, p) in [
            ("prep_error", self.prep_error),
            ("depump_fidelity", self.depump_fidelity),
            ("ion_loss_per_trial", self.ion_loss_per_trial),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Protocol(format!("{name} = {p} is not a probability")));
            }
        }
        if self.initial.manifold != ManifoldLabel::D52 {
            return Err(Error::Protocol(format!("initial state {} is not in D5/2", self.initial)));
        }
        if let Some(l) = &self.laser {
            l.validate()?;
        }
        self.classify_error.validate()
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Generator over the sublevels of one manifold plus an absorbing state.
///
/// `rates[i][j]` is the rate (1/s) from sublevel `i` to column `j`, where
/// columns `0..n` are sublevels and column `n` is the absorber. Diagonal
/// entries hold rates of scattering events that leave the state unchanged;
/// they do not affect the dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMatrix {
    pub states: Vec<Sublevel>,
    pub rates: Vec<Vec<f64>>,
}

impl RateMatrix {
    /// Laser scattering at the laser's intensity plus natural decay 1/τ_nat into the absorber.
    pub fn build(engine: &ScatteringEngine, laser: Option<&LaserField>, manifold: ManifoldLabel) -> Result<Self> {
        let species = engine.species();
        let states = species.sublevels(manifold)?;
        let n = states.len();
        let gamma_nat = 1.0 / species.d5half_lifetime;
        let mut rates = vec![vec![0.0; n + 1]; n];
        for (i, &s) in states.iter().enumerate() {
            rates[i][n] = gamma_nat;
            let Some(laser) = laser else { continue };
            if laser.intensity == 0.0 {
                continue;
            }
            let b = engine.rate_breakdown(s, laser)?;
            rates[i][n] += b.gamma_sd * laser.intensity;
            for (m, r) in &b.gamma_back {
                let j = states.iter().position(|t| t.m == *m).expect("final state in manifold");
                rates[i][j] += r * laser.intensity;
            }
        }
        Ok(RateMatrix { states, rates })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, s: Sublevel) -> Option<usize> {
        self.states.iter().position(|t| *t == s)
    }

    /// Total rate of leaving sublevel `i` (self-transitions excluded). Zero for the absorber.
    pub fn exit_rate(&self, i: usize) -> f64 {
        if i >= self.n_states() {
            return 0.0;
        }
        self.rates[i].iter().enumerate().filter(|(j, _)| *j != i).map(|(_, r)| r).sum()
    }

    /// Same total event rate, but every scatter back into the manifold
    /// returns to the starting sublevel: the single-step model.
    pub fn single_step(&self) -> RateMatrix {
        let n = self.n_states();
        let mut rates = self.rates.clone();
        for (i, row) in rates.iter_mut().enumerate() {
            let back: f64 = row[..n].iter().sum();
            row[..n].iter_mut().for_each(|r| *r = 0.0);
            row[i] = back;
        }
        RateMatrix {
            states: self.states.clone(),
            rates,
        }
    }

    /// Probability distribution over (sublevels..., absorber) at time `t`,
    /// by uniformization.
    pub fn distribution_at(&self, initial: Sublevel, t: f64) -> Result<Vec<f64>> {
        let n = self.n_states();
        let i0 = self
            .index_of(initial)
            .ok_or_else(|| Error::Protocol(format!("{initial} not in rate matrix")))?;
        let mut p = vec![0.0; n + 1];
        p[i0] = 1.0;
        let lambda = (0..n).map(|i| self.exit_rate(i)).fold(0.0, f64::max);
        if lambda == 0.0 || t == 0.0 {
            return Ok(p);
        }
        let lt = lambda * t;
        let mut weight = (-lt).exp();
        let mut out: Vec<f64> = p.iter().map(|x| x * weight).collect();
        let mut acc = weight;
        let mut k = 0u32;
        while 1.0 - acc > 1e-15 && k < 10_000 {
            let mut next = vec![0.0; n + 1];
            next[n] = p[n];
            for i in 0..n {
                if p[i] == 0.0 {
                    continue;
                }
                let stay = 1.0 - self.exit_rate(i) / lambda;
                next[i] += p[i] * stay;
                for j in 0..=n {
                    if j != i {
                        next[j] += p[i] * self.rates[i][j] / lambda;
                    }
                }
            }
            p = next;
            k += 1;
            weight *= lt / f64::from(k);
            acc += weight;
            out.iter_mut().zip(&p).for_each(|(o, x)| *o += weight * x);
        }
        Ok(out)
    }
}

pub fn build_rate_matrix(config: &ProtocolConfig, species: &SpeciesData) -> Result<RateMatrix> {
    config.validate()?;
    let engine = ScatteringEngine::new(species, config.engine)?;
    RateMatrix::build(&engine, config.laser.as_ref(), config.initial.manifold)
}

/// Where a trial ends up after its illumination period.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminalState {
    Sublevel(Sublevel),
    Absorbed,
}

fn jump(matrix: &RateMatrix, mut state: usize, t: f64, rng: &mut impl Rng) -> usize {
    let n = matrix.n_states();
    let mut left = t;
    while state < n {
        let row = &matrix.rates[state];
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            break;
        }
        let dt = Exp::new(total).expect("positive rate").sample(rng);
        if dt > left {
            break;
        }
        left -= dt;
        let mut u = rng.random::<f64>() * total;
        let mut next = n;
        for (j, r) in row.iter().enumerate() {
            if u < *r {
                next = j;
                break;
            }
            u -= r;
        }
        state = next;
    }
    state
}

/// Exact jump-chain evolution of one trial for time `t`.
pub fn simulate_trial(matrix: &RateMatrix, initial: Sublevel, t: f64, rng: &mut impl Rng) -> Result<TerminalState> {
    let i0 = matrix
        .index_of(initial)
        .ok_or_else(|| Error::Protocol(format!("{initial} not in rate matrix")))?;
    let end = jump(matrix, i0, t, rng);
    Ok(if end < matrix.n_states() {
        TerminalState::Sublevel(matrix.states[end])
    } else {
        TerminalState::Absorbed
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub fluoresces_sd: u64,
    pub dark_qubit_lower_or_other: u64,
    pub dark_up: u64,
    pub lost: u64,
}

impl OutcomeCounts {
    fn add(&mut self, o: TrialOutcome) {
        match o {
            TrialOutcome::FluorescesSD => self.fluoresces_sd += 1,
            TrialOutcome::DarkQubitLowerOrOther => self.dark_qubit_lower_or_other += 1,
            TrialOutcome::DarkUp => self.dark_up += 1,
            TrialOutcome::Lost => self.lost += 1,
        }
    }

    fn merge(mut self, o: OutcomeCounts) -> OutcomeCounts {
        self.fluoresces_sd += o.fluoresces_sd;
        self.dark_qubit_lower_or_other += o.dark_qubit_lower_or_other;
        self.dark_up += o.dark_up;
        self.lost += o.lost;
        self
    }

    pub fn total(&self) -> u64 {
        self.fluoresces_sd + self.dark_qubit_lower_or_other + self.dark_up + self.lost
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayRecord {
    pub delay_s: f64,
    pub n_trials: u64,
    pub n_survived: u64,
    pub n_exited: u64,
    pub n_discarded: u64,
    pub outcomes: OutcomeCounts,
}

impl DelayRecord {
    /// Trials that enter the survival statistics.
    pub fn n_effective(&self) -> u64 {
        self.n_trials - self.n_discarded
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub tool_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub initial: Sublevel,
    /// W/m², zero for the shutter-closed reference.
    pub intensity: f64,
    pub records: Vec<DelayRecord>,
    pub provenance: Option<Provenance>,
}

impl Dataset {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delay_s,n_trials,n_survived,n_discarded\n");
        for r in &self.records {
            s.push_str(&format!("{},{},{},{}\n", r.delay_s, r.n_trials, r.n_survived, r.n_discarded));
        }
        s
    }

    /// Reads the CSV export. Outcome histograms are not part of the CSV and
    /// are reconstructed as survived/exited/lost.
    pub fn from_csv(text: &str) -> Result<Dataset> {
        let mut records = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (lineno == 0 && line.starts_with("delay_s")) {
                continue;
            }
            let bad = || Error::InvalidArgument(format!("dataset CSV line {}: `{line}`", lineno + 1));
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(bad());
            }
            let delay_s: f64 = f[0].parse().map_err(|_| bad())?;
            let n_trials: u64 = f[1].parse().map_err(|_| bad())?;
            let n_survived: u64 = f[2].parse().map_err(|_| bad())?;
            let n_discarded: u64 = f[3].parse().map_err(|_| bad())?;
            if n_survived + n_discarded > n_trials {
                return Err(bad());
            }
            let n_exited = n_trials - n_survived - n_discarded;
            records.push(DelayRecord {
                delay_s,
                n_trials,
                n_survived,
                n_exited,
                n_discarded,
                outcomes: OutcomeCounts {
                    fluoresces_sd: n_exited,
                    dark_qubit_lower_or_other: n_survived,
                    dark_up: 0,
                    lost: n_discarded,
                },
            });
        }
        Ok(Dataset {
            initial: Sublevel::up(),
            intensity: f64::NAN,
            records,
            provenance: None,
        })
    }

    /// (delay, survived, effective trials) triples for fitting.
    pub fn survival_points(&self) -> Vec<(f64, f64, f64)> {
        self.records
            .iter()
            .map(|r| (r.delay_s, r.n_survived as f64, r.n_effective() as f64))
            .collect()
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// RNG for one trial; depends only on (seed, delay index, trial index).
pub fn trial_rng(seed: u64, delay_index: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(delay_index as u64)));
    rng.set_stream(trial);
    rng
}

fn run_one(config: &ProtocolConfig, matrix: &RateMatrix, i0: usize, delay: f64, rng: &mut ChaCha8Rng) -> TrialOutcome {
    let n = matrix.n_states();
    // fixed draw order keeps trials comparable across configurations
    let u_loss: f64 = rng.random();
    let u_prep: f64 = rng.random();
    let u_depump: f64 = rng.random();
    let u_class: f64 = rng.random();
    let start = if u_prep < config.prep_error { n } else { i0 };
    let end = jump(matrix, start, delay, rng);
    if u_loss < config.ion_loss_per_trial {
        return TrialOutcome::Lost;
    }
    let truth = if end >= n {
        TrialOutcome::FluorescesSD
    } else if matrix.states[end] == Sublevel::up() {
        TrialOutcome::DarkUp
    } else if u_depump < config.depump_fidelity {
        TrialOutcome::DarkQubitLowerOrOther
    } else {
        TrialOutcome::DarkUp
    };
    config.classify_error.apply(truth, u_class)
}

fn record_from_counts(config: &ProtocolConfig, delay: f64, counts: OutcomeCounts) -> DelayRecord {
    let mut n_discarded = counts.lost;
    let mut n_survived = counts.dark_qubit_lower_or_other + counts.dark_up;
    if config.discard_on_up_detect {
        n_discarded += counts.dark_up;
        n_survived -= counts.dark_up;
    }
    DelayRecord {
        delay_s: delay,
        n_trials: counts.total(),
        n_survived,
        n_exited: counts.fluoresces_sd,
        n_discarded,
        outcomes: counts,
    }
}

/// Runs the protocol against a prepared rate matrix.
pub fn run_with_matrix(config: &ProtocolConfig, matrix: &RateMatrix) -> Result<Dataset> {
    config.validate()?;
    let i0 = matrix
        .index_of(config.initial)
        .ok_or_else(|| Error::Protocol(format!("{} not in rate matrix", config.initial)))?;
    let records = config
        .delays
        .iter()
        .enumerate()
        .map(|(di, &delay)| {
            let counts = (0..config.trials_per_delay)
                .into_par_iter()
                .fold(OutcomeCounts::default, |mut acc, trial| {
                    let mut rng = trial_rng(config.seed, di, trial);
                    acc.add(run_one(config, matrix, i0, delay, &mut rng));
                    acc
                })
                .reduce(OutcomeCounts::default, OutcomeCounts::merge);
            record_from_counts(config, delay, counts)
        })
        .collect();
    Ok(Dataset {
        initial: config.initial,
        intensity: config.laser.as_ref().map_or(0.0, |l| l.intensity),
        records,
        provenance: Some(Provenance {
            config_sha256: config.digest(),
            seed: config.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }),
    })
}

pub fn run_protocol(config: &ProtocolConfig, species: &SpeciesData) -> Result<Dataset> {
    let matrix = build_rate_matrix(config, species)?;
    run_with_matrix(config, &matrix)
}

/// Apparent total decay rate from fitting the noiseless expected survival curve.
pub fn expected_effective_rate(matrix: &RateMatrix, initial: Sublevel, delays: &[f64], discard_up: bool) -> Result<f64> {
    let up = matrix.index_of(Sublevel::up());
    let n = matrix.n_states();
    let mut points = Vec::with_capacity(delays.len());
    for &t in delays {
        let p = matrix.distribution_at(initial, t)?;
        let in_manifold: f64 = p[..n].iter().sum();
        let p_up = up.map_or(0.0, |i| p[i]);
        let (k, m) = if discard_up {
            (in_manifold - p_up, 1.0 - p_up)
        } else {
            (in_manifold, 1.0)
        };
        points.push((t, k, m));
    }
    Ok(fit::fit_survival_curve(&points, false)?.rate)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasEstimate {
    /// Relative reduction of the apparent Γ_SD from the simulation.
    pub simulated: f64,
    /// Standard error of `simulated` from the paired fits.
    pub sigma: f64,
    /// Same quantity from the expected survival curve (no sampling noise).
    pub expected: f64,
    /// Γ_SD · I (Hz) of the single-step model.
    pub gamma_sd: f64,
}

/// Relative difference between the fitted Γ_SD of the full multi-step
/// simulation and of the single-step model.
///
/// Both are simulated with the same random streams; the single-step matrix
/// keeps the same total event rate but returns back-scattered population to
/// the starting sublevel, so the two runs differ only in trials with a
/// back-scatter event.
pub fn effective_decay_bias(config: &ProtocolConfig, species: &SpeciesData) -> Result<BiasEstimate> {
    config.validate()?;
    let laser = config
        .laser
        .as_ref()
        .ok_or_else(|| Error::Protocol("bias estimate needs the laser on".into()))?;
    let engine = ScatteringEngine::new(species, config.engine)?;
    let gamma_sd = engine.rate_per_intensity(config.initial, laser, crate::scattering::Destination::ExitManifold)? * laser.intensity;
    if gamma_sd <= 0.0 {
        return Err(Error::Protocol("laser does not scatter out of the initial state".into()));
    }
    let full = RateMatrix::build(&engine, Some(laser), config.initial.manifold)?;
    let single = full.single_step();
    let fit_full = fit::fit_exponential(&run_with_matrix(config, &full)?)?;
    let fit_single = fit::fit_exponential(&run_with_matrix(config, &single)?)?;
    let diff = fit_single.rate - fit_full.rate;
    // the paired difference is far less noisy than either fit; estimate its
    // spread from the trials that actually differ
    let sigma = paired_sigma(config, &full, &single)?;
    let expected_full = expected_effective_rate(&full, config.initial, &config.delays, config.discard_on_up_detect)?;
    let expected_single = expected_effective_rate(&single, config.initial, &config.delays, config.discard_on_up_detect)?;
    Ok(BiasEstimate {
        simulated: diff / gamma_sd,
        sigma: sigma / gamma_sd,
        expected: (expected_single - expected_full) / gamma_sd,
        gamma_sd,
    })
}

// Standard error of the paired rate difference via the delta method: each
// fitted rate is a weighted sum of per-delay survival fractions, so the
// difference inherits the per-delay variance of the paired fractions. Each
// fraction is a ratio (survived / kept), linearized per trial.
fn paired_sigma(config: &ProtocolConfig, full: &RateMatrix, single: &RateMatrix) -> Result<f64> {
    let i0 = full.index_of(config.initial).expect("validated");
    let mut info = 0.0;
    let mut var_num = 0.0;
    let rate = expected_effective_rate(single, config.initial, &config.delays, config.discard_on_up_detect)?;
    let keep = |o: TrialOutcome| !matches!(o, TrialOutcome::Lost) && !(config.discard_on_up_detect && o == TrialOutcome::DarkUp);
    let dark = |o: TrialOutcome| keep(o) && matches!(o, TrialOutcome::DarkQubitLowerOrOther | TrialOutcome::DarkUp);
    for (di, &t) in config.delays.iter().enumerate() {
        // histogram of (kept_a, survived_a, kept_b, survived_b) patterns
        let hist = (0..config.trials_per_delay)
            .into_par_iter()
            .fold(
                || [0u64; 16],
                |mut h, trial| {
                    let mut a = trial_rng(config.seed, di, trial);
                    let mut b = a.clone();
                    let oa = run_one(config, full, i0, t, &mut a);
                    let ob = run_one(config, single, i0, t, &mut b);
                    let code = usize::from(keep(oa)) | usize::from(dark(oa)) << 1 | usize::from(keep(ob)) << 2 | usize::from(dark(ob)) << 3;
                    h[code] += 1;
                    h
                },
            )
            .reduce(|| [0u64; 16], |mut x, y| {
                x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                x
            });
        let bit = |c: usize, k: u32| ((c >> k) & 1) as f64;
        let total = |k: u32| hist.iter().enumerate().map(|(c, &n)| n as f64 * bit(c, k)).sum::<f64>();
        let (ka, sa, kb, sb) = (total(0), total(1), total(2), total(3));
        if ka < 2.0 || kb < 2.0 {
            continue;
        }
        let (fa, fb) = (sa / ka, sb / kb);
        let m = 0.5 * (ka + kb);
        let (mut sz, mut sz2) = (0.0, 0.0);
        for (c, &n) in hist.iter().enumerate() {
            let z = (bit(c, 1) - fa * bit(c, 0)) - (bit(c, 3) - fb * bit(c, 2));
            sz += n as f64 * z;
            sz2 += n as f64 * z * z;
        }
        let big_n = config.trials_per_delay as f64;
        let var_frac = (sz2 - sz * sz / big_n) / (m * m);
        let p = (-rate * t).exp();
        info += m * t * t * p / ((1.0 - p) * (1.0 - p));
        let g = m * t / (1.0 - p);
        var_num += g * g * var_frac;
    }
    if info == 0.0 {
        return Ok(0.0);
    }
    Ok(var_num.sqrt() / info)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::PolarizationKind;

    fn species() -> SpeciesData {
        SpeciesData::ca40()
    }

    #[test]
    fn shutter_closed_matrix() {
        let cfg = ProtocolConfig::default();
        let m = build_rate_matrix(&cfg, &species()).unwrap();
        for i in 0..m.n_states() {
            assert_eq!(m.exit_rate(i), 1.0 / 1.168);
        }
        assert_eq!(m.exit_rate(m.n_states()), 0.0);
    }

    #[test]
    fn sigma_minus_destinations_from_up() {
        let cfg = ProtocolConfig {
            laser: Some(LaserField::pure(976e-9, PolarizationKind::SigmaMinus, 8.7e7).unwrap()),
            ..Default::default()
        };
        let m = build_rate_matrix(&cfg, &species()).unwrap();
        let i = m.index_of(Sublevel::up()).unwrap();
        let reach: Vec<i32> = (0..m.n_states())
            .filter(|&j| j != i && m.rates[i][j] > 0.0)
            .map(|j| m.states[j].m.twice())
            .collect();
        assert_eq!(reach, vec![1, 3]);
    }

    #[test]
    fn zero_delay_keeps_state() {
        let m = build_rate_matrix(&ProtocolConfig::default(), &species()).unwrap();
        let mut rng = trial_rng(1, 0, 0);
        assert_eq!(
            simulate_trial(&m, Sublevel::down(), 0.0, &mut rng).unwrap(),
            TerminalState::Sublevel(Sublevel::down())
        );
    }

    #[test]
    fn uniformization_matches_exponential() {
        let m = build_rate_matrix(&ProtocolConfig::default(), &species()).unwrap();
        let p = m.distribution_at(Sublevel::up(), 0.7).unwrap();
        let surv: f64 = p[..6].iter().sum();
        assert!((surv - (-0.7f64 / 1.168).exp()).abs() < 1e-13);
    }

    #[test]
    fn counts_partition() {
        let cfg = ProtocolConfig {
            laser: Some(LaserField::pure(976e-9, PolarizationKind::Pi, 1e8).unwrap()),
            initial: Sublevel::down(),
            trials_per_delay: 500,
            prep_error: 0.02,
            ion_loss_per_trial: 0.05,
            discard_on_up_detect: true,
            ..Default::default()
        };
        let d = run_protocol(&cfg, &species()).unwrap();
        for r in &d.records {
            assert_eq!(r.n_survived + r.n_exited + r.n_discarded, r.n_trials);
            assert_eq!(r.outcomes.total(), r.n_trials);
        }
    }

    #[test]
    fn bad_config() {
        let cfg = ProtocolConfig {
            delays: vec![0.5, 0.2],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ProtocolConfig {
            prep_error: 1.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn csv_round_trip() {
        let cfg = ProtocolConfig {
            trials_per_delay: 100,
            ..Default::default()
        };
        let d = run_protocol(&cfg, &species()).unwrap();
        let back = Dataset::from_csv(&d.to_csv()).unwrap();
        assert_eq!(back.survival_points(), d.survival_points());
    }
}
