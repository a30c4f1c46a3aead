//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or data-file failure, 2 usage, 3 physics
//! domain error, 4 acceptance regression in `reproduce`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::angular::HalfInt;
use crate::error::{Error, Result};
use crate::fit::{
    bootstrap_uncertainty, fit_exponential, fit_exponential_free_amplitude, fit_rate_vs_intensity, subtract_natural,
    FitResult, RatePoint,
};
use crate::gates::{gate_error, wavelength_scan, GateConfig, GateKind};
use crate::reproduce;
use crate::scattering::{intensity_from_power, rate_table_csv, EngineOptions, LaserField, PolarizationKind, ScatteringEngine};
use crate::sim::{run_protocol, sha256_hex, ConfusionMatrix, Dataset, ProtocolConfig};
use crate::species::{SpeciesData, Sublevel, CA40_JSON};

pub const SPECIES_ENV: &str = "RAMAN_SCATTER_SPECIES";

pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_REGRESSION: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "raman-scatter", version, about = "Raman scattering out of Ca+ D5/2: rates, gate errors, decay simulation")]
pub struct Cli {
    /// Species JSON (overrides $RAMAN_SCATTER_SPECIES and the bundled Ca-40 data).
    #[arg(long, global = true)]
    pub species: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Scattering rates out of one D5/2 sublevel.
    Rates(RatesArgs),
    /// Raman error budget of the default gates.
    GateErrors(GateArgs),
    /// Two-qubit error floor versus wavelength.
    Scan(ScanArgs),
    /// Simulate the shelve/illuminate/detect protocol.
    Simulate(SimulateArgs),
    /// Fit decay curves and the rate-vs-intensity slope.
    Fit(FitArgs),
    /// Run every acceptance check and print a pass/fail table.
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct BeamArgs {
    /// Peak intensity, W/m².
    #[arg(long, conflicts_with_all = ["power", "waist"])]
    pub intensity: Option<f64>,
    /// Beam power, W (needs --waist).
    #[arg(long, requires = "waist")]
    pub power: Option<f64>,
    /// 1/e² intensity radius, m.
    #[arg(long, requires = "power")]
    pub waist: Option<f64>,
}

impl BeamArgs {
    fn resolve(&self) -> Result<Option<f64>> {
        match (self.intensity, self.power, self.waist) {
            (Some(i), _, _) => Ok(Some(i)),
            (None, Some(p), Some(w)) => intensity_from_power(p, w).map(Some),
            _ => Ok(None),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct EngineArgs {
    /// Magnetic field, gauss.
    #[arg(long, default_value_t = 1.56)]
    pub field_gauss: f64,
    /// Ignore Zeeman shifts of the levels.
    #[arg(long)]
    pub no_zeeman: bool,
    /// Include the counter-rotating Kramers-Heisenberg term.
    #[arg(long)]
    pub counter_rotating: bool,
}

impl EngineArgs {
    fn options(&self) -> EngineOptions {
        EngineOptions {
            field_gauss: self.field_gauss,
            zeeman: !self.no_zeeman,
            counter_rotating: self.counter_rotating,
            ..EngineOptions::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct RatesArgs {
    /// Wavelength, m.
    #[arg(long, default_value_t = 976e-9)]
    pub wavelength: f64,
    #[arg(long, default_value = "sigma-")]
    pub pol: PolarizationKind,
    /// D5/2 projection, e.g. +5/2.
    #[arg(long, default_value = "+5/2", allow_hyphen_values = true)]
    pub m: HalfInt,
    #[command(flatten)]
    pub beam: BeamArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum GateChoice {
    #[value(name = "1q")]
    One,
    #[value(name = "2q")]
    Two,
    Both,
}

#[derive(Args, Debug)]
pub struct GateArgs {
    #[arg(long, value_enum, default_value_t = GateChoice::Both)]
    pub gate: GateChoice,
    /// Raman wavelength, m.
    #[arg(long)]
    pub wavelength: Option<f64>,
    /// Per-beam intensity, W/m² (replaces the default 1e8).
    #[arg(long)]
    pub intensity: Option<f64>,
    /// Axial secular frequency, MHz (two-qubit gate).
    #[arg(long)]
    pub secular_mhz: Option<f64>,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 900.0)]
    pub min_nm: f64,
    #[arg(long, default_value_t = 1100.0)]
    pub max_nm: f64,
    #[arg(long, default_value_t = 401)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub threshold: f64,
    #[arg(long)]
    pub secular_mhz: Option<f64>,
    /// CSV output path (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Full protocol configuration as JSON; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<HalfInt>,
    #[arg(long)]
    pub pol: Option<PolarizationKind>,
    #[arg(long)]
    pub wavelength: Option<f64>,
    #[command(flatten)]
    pub beam: BeamArgs,
    /// Comma-separated delays, s.
    #[arg(long, value_delimiter = ',')]
    pub delays: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub prep_error: Option<f64>,
    #[arg(long)]
    pub ion_loss: Option<f64>,
    #[arg(long)]
    pub depump_fidelity: Option<f64>,
    /// Symmetric misclassification probability between outcome classes.
    #[arg(long)]
    pub classify_error: Option<f64>,
    #[arg(long)]
    pub discard_up: bool,
    /// Output directory for dataset.json, dataset.csv and manifest.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Dataset JSON files written by `simulate`.
    #[arg(required = true)]
    pub datasets: Vec<PathBuf>,
    /// Shutter-closed dataset giving the natural lifetime; otherwise the species value is used.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub free_amplitude: bool,
    /// Bootstrap resamples for the lifetime uncertainty (0 = analytic only).
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    #[arg(long, default_value_t = 2018)]
    pub seed: u64,
    /// Directory for report.json and manifest.json.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub species_sha256: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub timestamp_unix: u64,
}

struct LoadedSpecies {
    data: SpeciesData,
    sha256: String,
}

fn load_species(flag: Option<&Path>) -> Result<LoadedSpecies> {
    let env = std::env::var_os(SPECIES_ENV).map(PathBuf::from);
    let path = flag.map(Path::to_path_buf).or(env);
    let text = match &path {
        Some(p) => fs::read_to_string(p).map_err(|source| Error::Io { path: p.clone(), source })?,
        None => CA40_JSON.to_string(),
    };
    Ok(LoadedSpecies {
        data: SpeciesData::from_json(&text)?,
        sha256: sha256_hex(text.as_bytes()),
    })
}

fn manifest(command: &str, config: Value, species: &LoadedSpecies, seed: Option<u64>) -> RunManifest {
    RunManifest {
        command: command.to_string(),
        config,
        species_sha256: species.sha256.clone(),
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Print to stdout, or write `out` plus its manifest sidecar.
fn emit(text: &str, out: Option<&Path>, m: &RunManifest) -> Result<()> {
    match out {
        Some(p) => {
            write_file(p, text)?;
            write_file(&sidecar(p), &serde_json::to_string_pretty(m)?)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_rates(a: &RatesArgs, sp: &LoadedSpecies) -> Result<i32> {
    let initial = Sublevel::new(crate::species::ManifoldLabel::D52, a.m);
    if a.m.abs() > HalfInt::from_twice(5) || a.m.is_integer() {
        return Err(Error::QuantumNumber(format!("m = {} is not a D5/2 projection", a.m)));
    }
    let intensity = a.beam.resolve()?;
    let engine = ScatteringEngine::new(&sp.data, a.engine.options())?;
    let laser = LaserField::pure(a.wavelength, a.pol, 1.0)?;
    let b = engine.rate_breakdown(initial, &laser)?;
    let rows = engine.rate_table(initial, &laser)?;
    let text = match a.format {
        Format::Csv => rate_table_csv(initial, &a.pol.to_string(), &rows),
        Format::Json => {
            let table: Vec<Value> = rows
                .iter()
                .map(|(f, r)| json!({"final": f.to_string(), "rate_per_intensity": r}))
                .collect();
            let mut v = json!({
                "wavelength_m": a.wavelength,
                "polarization": a.pol,
                "breakdown_per_intensity": b,
                "table_per_intensity": table,
            });
            if let Some(i) = intensity {
                v["intensity_w_m2"] = json!(i);
                v["gamma_sd_hz"] = json!(b.gamma_sd * i);
                v["gamma_total_hz"] = json!(b.gamma_total * i);
            }
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Table => {
            let mut s = format!(
                "initial {initial}, {} at {:.3} nm, B = {} G\n",
                a.pol,
                a.wavelength * 1e9,
                a.engine.field_gauss
            );
            let abs = |g: f64| intensity.map(|i| format!("  {:>12.4e}", g * i)).unwrap_or_default();
            s.push_str(&format!(
                "{:<26}{:>20}{}\n",
                "channel",
                "rate/I [Hz/(W/m^2)]",
                if intensity.is_some() { "     rate [Hz]" } else { "" }
            ));
            let mut line = |name: String, g: f64| s.push_str(&format!("{name:<26}{g:>20.4e}{}\n", abs(g)));
            line("Gamma_SD (to S1/2, D3/2)".into(), b.gamma_sd);
            for (m, g) in &b.gamma_by_manifold {
                line(format!("  to {m}"), *g);
            }
            for (m, g) in &b.gamma_back {
                line(format!("Raman to D5/2 {m:+}"), *g);
            }
            line("Rayleigh (elastic)".into(), b.gamma_elastic);
            line("Raman total".into(), b.gamma_raman);
            line("total".into(), b.gamma_total);
            s
        }
    };
    let m = manifest("rates", json!({"wavelength": a.wavelength, "pol": a.pol, "m": a.m, "intensity": intensity, "engine": a.engine.options()}), sp, None);
    emit(&text, a.out.as_deref(), &m)?;
    Ok(0)
}

fn gate_config(kind: GateKind, a: &GateArgs, species: &SpeciesData) -> Result<GateConfig> {
    let mut c = match kind {
        GateKind::SingleQubitSigmaX => GateConfig::single_qubit_default(species),
        GateKind::TwoQubitZz => GateConfig::two_qubit_default(species),
    };
    if let Some(w) = a.wavelength {
        c = c.with_wavelength(w);
    }
    if let Some(i) = a.intensity {
        for b in &mut c.beams {
            b.laser = b.laser.with_intensity(i);
        }
    }
    if let Some(f) = a.secular_mhz {
        c.secular_frequency = f * 1e6;
    }
    c.engine = a.engine.options();
    Ok(c)
}

fn cmd_gate_errors(a: &GateArgs, sp: &LoadedSpecies) -> Result<i32> {
    let kinds: &[GateKind] = match a.gate {
        GateChoice::One => &[GateKind::SingleQubitSigmaX],
        GateChoice::Two => &[GateKind::TwoQubitZz],
        GateChoice::Both => &[GateKind::SingleQubitSigmaX, GateKind::TwoQubitZz],
    };
    let mut reports = Vec::new();
    for &k in kinds {
        let c = gate_config(k, a, &sp.data)?;
        let b = gate_error(&c, &sp.data)?;
        reports.push((c, b));
    }
    let text = match a.format {
        Format::Json | Format::Csv => {
            let v: Vec<Value> = reports.iter().map(|(c, b)| json!({"config": c, "budget": b})).collect();
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Table => {
            let mut s = String::new();
            for (c, b) in &reports {
                let name = match c.kind {
                    GateKind::SingleQubitSigmaX => "single-qubit sigma_x",
                    GateKind::TwoQubitZz => "two-qubit sigma_z sigma_z",
                };
                s.push_str(&format!("{name}\n"));
                s.push_str(&format!("  Rabi frequency        {:.4e} rad/s\n", b.rabi_frequency));
                s.push_str(&format!("  gate time             {:.4e} s\n", b.gate_time));
                s.push_str(&format!("  Gamma_Ram             {:.4e} Hz\n", b.gamma_raman));
                if let Some(eta) = b.lamb_dicke {
                    s.push_str(&format!("  Lamb-Dicke eta        {eta:.5}\n"));
                }
                s.push_str(&format!("  P(Raman)              {:.4e}\n", b.p_raman));
                s.push_str(&format!("    leak to S1/2        {:.4e}\n", b.p_leak_s));
                s.push_str(&format!("    leak to D3/2        {:.4e}\n", b.p_leak_d3));
                s.push_str(&format!("    leak within D5/2    {:.4e}\n", b.p_leak_d5_outside));
                s.push_str(&format!("    qubit bit flip      {:.4e}\n", b.p_bitflip));
                s.push_str(&format!("  Rayleigh dephasing <= {:.4e}\n", b.rayleigh_decoherence_bound));
                if let Some(r) = b.recoil_bound {
                    s.push_str(&format!("  recoil error      <= {r:.4e}\n"));
                }
            }
            s
        }
    };
    let cfg: Vec<&GateConfig> = reports.iter().map(|(c, _)| c).collect();
    let m = manifest("gate-errors", serde_json::to_value(cfg)?, sp, None);
    emit(&text, a.out.as_deref(), &m)?;
    Ok(0)
}

fn cmd_scan(a: &ScanArgs, sp: &LoadedSpecies) -> Result<i32> {
    let mut c = GateConfig::two_qubit_default(&sp.data);
    if let Some(f) = a.secular_mhz {
        c.secular_frequency = f * 1e6;
    }
    let scan = wavelength_scan((a.min_nm * 1e-9, a.max_nm * 1e-9), a.steps, &c, &sp.data, a.threshold)?;
    let line = match scan.threshold_nm {
        Some(t) => format!("# threshold {:.1e} crossed at {t:.2} nm\n", a.threshold),
        None => format!("# threshold {:.1e} not crossed in range\n", a.threshold),
    };
    let m = manifest("scan", json!({"min_nm": a.min_nm, "max_nm": a.max_nm, "steps": a.steps, "threshold": a.threshold, "gate": c}), sp, None);
    match &a.out {
        Some(p) => {
            emit(&scan.to_csv(), Some(p), &m)?;
            eprint!("{line}");
        }
        None => print!("{}{line}", scan.to_csv()),
    }
    Ok(0)
}

fn protocol_from_args(a: &SimulateArgs) -> Result<ProtocolConfig> {
    let mut c = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| Error::Io { path: p.clone(), source })?;
            serde_json::from_str(&text)?
        }
        None => ProtocolConfig::default(),
    };
    if let Some(m) = a.m {
        c.initial = Sublevel::new(crate::species::ManifoldLabel::D52, m);
    }
    let intensity = a.beam.resolve()?;
    if intensity.is_some() || a.pol.is_some() || a.wavelength.is_some() {
        let base = c.laser.clone();
        let wl = a.wavelength.or(base.as_ref().map(|l| l.wavelength)).unwrap_or(976e-9);
        let i = intensity.or(base.as_ref().map(|l| l.intensity));
        let Some(i) = i else {
            return Err(Error::InvalidArgument("laser requested without --intensity or --power/--waist".into()));
        };
        let laser = match (a.pol, base) {
            (Some(k), _) => LaserField::pure(wl, k, i)?,
            (None, Some(l)) => LaserField::new(wl, l.polarization, i)?,
            (None, None) => LaserField::pure(wl, PolarizationKind::SigmaMinus, i)?,
        };
        c.laser = Some(laser);
    }
    if let Some(d) = &a.delays {
        c.delays = d.clone();
    }
    if let Some(n) = a.trials {
        c.trials_per_delay = n;
    }
    if let Some(s) = a.seed {
        c.seed = s;
    }
    if let Some(p) = a.prep_error {
        c.prep_error = p;
    }
    if let Some(p) = a.ion_loss {
        c.ion_loss_per_trial = p;
    }
    if let Some(p) = a.depump_fidelity {
        c.depump_fidelity = p;
    }
    if let Some(e) = a.classify_error {
        c.classify_error = ConfusionMatrix::symmetric(e)?;
    }
    if a.discard_up {
        c.discard_on_up_detect = true;
    }
    Ok(c)
}

fn cmd_simulate(a: &SimulateArgs, sp: &LoadedSpecies) -> Result<i32> {
    let c = protocol_from_args(a)?;
    let data = run_protocol(&c, &sp.data)?;
    let m = manifest("simulate", serde_json::to_value(&c)?, sp, Some(c.seed));
    write_file(&a.out_dir.join("dataset.json"), &(serde_json::to_string_pretty(&data)? + "\n"))?;
    write_file(&a.out_dir.join("dataset.csv"), &data.to_csv())?;
    write_file(&a.out_dir.join("manifest.json"), &serde_json::to_string_pretty(&m)?)?;
    println!("wrote {} delays x {} trials to {}", c.delays.len(), c.trials_per_delay, a.out_dir.display());
    Ok(0)
}

fn read_dataset(p: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(p).map_err(|source| Error::Io { path: p.to_path_buf(), source })?;
    if p.extension().is_some_and(|e| e == "csv") {
        Dataset::from_csv(&text)
    } else {
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Serialize)]
struct FitReport {
    natural_tau_s: f64,
    natural_sigma_tau_s: f64,
    datasets: Vec<(String, FitResult)>,
    slope: Option<FitResult>,
}

fn cmd_fit(a: &FitArgs, sp: &LoadedSpecies) -> Result<i32> {
    let fit = |d: &Dataset| if a.free_amplitude { fit_exponential_free_amplitude(d) } else { fit_exponential(d) };
    let method = if a.free_amplitude { "binomial-mle-free-amplitude" } else { "binomial-mle" };
    let (tau_nat, sigma_nat) = match &a.reference {
        Some(p) => {
            let f = fit(&read_dataset(p)?)?;
            (f.tau, f.sigma_tau)
        }
        None => (sp.data.d5half_lifetime, sp.data.d5half_lifetime_uncertainty),
    };
    let mut results = Vec::new();
    let mut points = Vec::new();
    for p in &a.datasets {
        let d = read_dataset(p)?;
        let f = fit(&d)?;
        let mut sigma_tau = f.sigma_tau;
        if a.bootstrap > 0 {
            let b = bootstrap_uncertainty(&d, |r| fit(r).map(|f| f.tau), a.bootstrap, a.seed)?;
            sigma_tau = b.sigma;
        }
        let mut r = FitResult {
            tau_s: Some(f.tau),
            sigma_tau_s: Some(sigma_tau),
            chi2: Some(f.chi2),
            dof: Some(f.dof),
            method: if a.bootstrap > 0 { format!("{method}+bootstrap") } else { method.to_string() },
            seed: (a.bootstrap > 0).then_some(a.seed),
            ..FitResult::default()
        };
        if d.intensity > 0.0 {
            let g = subtract_natural(f.tau, sigma_tau, tau_nat, sigma_nat)?;
            r.gamma_sd_hz = Some(g.gamma_sd);
            r.sigma_hz = Some(g.sigma);
            points.push(RatePoint {
                intensity: d.intensity,
                gamma: g.gamma_sd,
                sigma: g.sigma,
            });
        }
        results.push((p.display().to_string(), r));
    }
    let slope = if points.is_empty() {
        None
    } else {
        let s = fit_rate_vs_intensity(&points)?;
        Some(FitResult {
            slope_si: Some(s.slope),
            sigma_slope_si: Some(s.sigma_slope),
            chi2: Some(s.chi2),
            dof: Some(s.dof),
            method: "weighted-least-squares-through-origin".into(),
            ..FitResult::default()
        })
    };
    let report = FitReport {
        natural_tau_s: tau_nat,
        natural_sigma_tau_s: sigma_nat,
        datasets: results,
        slope,
    };
    let m = manifest(
        "fit",
        json!({"datasets": a.datasets, "reference": a.reference, "free_amplitude": a.free_amplitude, "bootstrap": a.bootstrap}),
        sp,
        Some(a.seed),
    );
    emit(&(serde_json::to_string_pretty(&report)? + "\n"), a.out.as_deref(), &m)?;
    Ok(0)
}

fn cmd_reproduce(a: &ReproduceArgs, sp: &LoadedSpecies) -> Result<i32> {
    let results = reproduce::run_all(&sp.data, a.seed);
    for c in &results {
        println!("{c}");
    }
    let passed = results.iter().filter(|c| c.passed).count();
    println!("{passed}/{} criteria passed", results.len());
    if let Some(dir) = &a.out_dir {
        let m = manifest("reproduce", json!({"seed": a.seed}), sp, Some(a.seed));
        write_file(&dir.join("report.json"), &serde_json::to_string_pretty(&results)?)?;
        write_file(&dir.join("manifest.json"), &serde_json::to_string_pretty(&m)?)?;
    }
    Ok(if passed == results.len() { 0 } else { EXIT_REGRESSION })
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Protocol(_) | Error::InsufficientResamples { .. } => EXIT_USAGE,
        e if e.is_domain_error() => EXIT_DOMAIN,
        _ => EXIT_IO,
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = load_species(cli.species.as_deref()).and_then(|sp| match &cli.command {
        Command::Rates(a) => cmd_rates(a, &sp),
        Command::GateErrors(a) => cmd_gate_errors(a, &sp),
        Command::Scan(a) => cmd_scan(a, &sp),
        Command::Simulate(a) => cmd_simulate(a, &sp),
        Command::Fit(a) => cmd_fit(a, &sp),
        Command::Reproduce(a) => cmd_reproduce(a, &sp),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(run(std::env::args_os()) as u8)
}
