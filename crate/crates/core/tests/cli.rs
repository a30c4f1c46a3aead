use std::fs;

use raman_scatter::cli::{run, EXIT_DOMAIN, EXIT_IO, EXIT_USAGE};

fn go(args: &[&str]) -> i32 {
    run(std::iter::once("raman-scatter").chain(args.iter().copied()))
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let out = out.to_str().unwrap();
    assert_eq!(go(&["rates", "--pol", "sigma-", "--m", "+5/2", "--wavelength", "976e-9", "--out", out]), 0);
    assert_eq!(go(&["rates", "--wavelength", "854e-9"]), EXIT_DOMAIN);
    assert_eq!(go(&["rates", "--pol", "circular"]), EXIT_USAGE);
    assert_eq!(go(&["rates", "--m", "7/2"]), EXIT_DOMAIN);
    assert_eq!(go(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(go(&["gate-errors", "--intensity", "0"]), EXIT_DOMAIN);
    assert_eq!(go(&["--species", "/nonexistent/species.json", "rates"]), EXIT_IO);
    assert_eq!(go(&["rates", "--intensity", "1e8", "--power", "1"]), EXIT_USAGE);
}

#[test]
fn rates_output_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rates.json");
    assert_eq!(go(&["rates", "--format", "json", "--intensity", "1e8", "--out", out.to_str().unwrap()]), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let g = v["breakdown_per_intensity"]["gamma_sd"].as_f64().unwrap();
    assert!((g * 1e9 - 3.48).abs() < 0.01);
    assert!((v["gamma_sd_hz"].as_f64().unwrap() - g * 1e8).abs() < 1e-12);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("rates.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "rates");
    assert_eq!(m["species_sha256"].as_str().unwrap().len(), 64);

    let csv = dir.path().join("plus.csv");
    assert_eq!(go(&["rates", "--pol", "sigma+", "--format", "csv", "--out", csv.to_str().unwrap()]), 0);
    let text = fs::read_to_string(csv).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0.0000000000e0")));
}

#[test]
fn species_flag_overrides_bundled_data() {
    let dir = tempfile::tempdir().unwrap();
    let text = raman_scatter::species::CA40_JSON.replace("6.639", "13.278");
    let path = dir.path().join("slow.json");
    fs::write(&path, text).unwrap();
    let out = dir.path().join("r.json");
    let args = ["--species", path.to_str().unwrap(), "rates", "--format", "json", "--out", out.to_str().unwrap()];
    assert_eq!(go(&args), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let g = v["breakdown_per_intensity"]["gamma_sd"].as_f64().unwrap();
    // both dipole couplings scale as 1/sqrt(tau)
    assert!((g * 1e9 - 3.48 / 4.0).abs() < 0.01, "{g}");
}

#[test]
fn simulate_is_deterministic_and_fit_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    let sim = |out: &str, extra: &[&str]| {
        let mut a = vec!["simulate", "--trials", "4000", "--seed", "5", "--out-dir", out];
        a.extend_from_slice(extra);
        go(&a)
    };
    let laser = ["--m", "+5/2", "--pol", "sigma-", "--intensity", "8.7535e7"];
    assert_eq!(sim(&d("a"), &laser), 0);
    assert_eq!(sim(&d("b"), &laser), 0);
    assert_eq!(sim(&d("closed"), &[]), 0);
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/dataset.json"), read("b/dataset.json"));
    assert_eq!(read("a/dataset.csv"), read("b/dataset.csv"));

    let fit = d("fit.json");
    let args = ["fit", &d("a/dataset.json"), "--reference", &d("closed/dataset.json"), "--out", &fit];
    assert_eq!(go(&args), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&fit).unwrap()).unwrap();
    let slope = v["slope"]["slope_si"].as_f64().unwrap();
    assert!((slope * 1e9 - 3.48).abs() < 0.6, "{slope}");
    assert!(dir.path().join("fit.json.manifest.json").exists());

    assert_eq!(go(&["simulate", "--trials", "10", "--prep-error", "2", "--out-dir", &d("bad")]), EXIT_USAGE);
}

#[test]
fn scan_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    assert_eq!(go(&["scan", "--min-nm", "950", "--max-nm", "1000", "--steps", "11", "--out", out.to_str().unwrap()]), 0);
    let text = fs::read_to_string(out).unwrap();
    assert!(text.starts_with("wavelength_nm,error_floor,threshold_flag"));
    assert_eq!(text.lines().count(), 12);
}
