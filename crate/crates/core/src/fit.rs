//! Decay and rate fits.
//!
//! Survival data are fitted by binomial maximum likelihood with the model
//! `A e^{-t/τ}` (A = 1 unless a free amplitude is requested). The rate
//! versus intensity fit is weighted least squares through the origin.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::Dataset;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    /// τ_meas (s).
    pub tau: f64,
    pub sigma_tau: f64,
    /// 1/τ (1/s).
    pub rate: f64,
    pub sigma_rate: f64,
    pub amplitude: f64,
    /// Only for free-amplitude fits.
    pub sigma_amplitude: Option<f64>,
    /// Pearson χ² of the fitted model.
    pub chi2: f64,
    pub dof: i64,
    pub log_likelihood: f64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn log_likelihood(points: &[(f64, f64, f64)], amp: f64, rate: f64) -> f64 {
    points
        .iter()
        .map(|&(t, k, n)| {
            let p = amp * (-rate * t).exp();
            let mut l = 0.0;
            if k > 0.0 {
                l += k * p.ln();
            }
            if n - k > 0.0 {
                l += (n - k) * (1.0 - p).max(f64::MIN_POSITIVE).ln();
            }
            l
        })
        .sum()
}

fn check_points(points: &[(f64, f64, f64)]) -> Result<()> {
    let used: Vec<_> = points.iter().filter(|p| p.2 > 0.0).collect();
    let mut ts: Vec<f64> = used.iter().map(|p| p.0).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    if ts.len() < 2 {
        return Err(Error::DegenerateFit("need at least two distinct delays with trials".into()));
    }
    for &&(t, k, n) in &used {
        if !(t > 0.0 && t.is_finite()) || k < 0.0 || k > n {
            return Err(Error::InvalidArgument(format!("bad survival point (t = {t}, k = {k}, n = {n})")));
        }
    }
    let survived: f64 = used.iter().map(|p| p.1).sum();
    let exited: f64 = used.iter().map(|p| p.2 - p.1).sum();
    if exited <= 0.0 {
        return Err(Error::UnboundedFit);
    }
    if survived <= 0.0 {
        return Err(Error::DegenerateFit("no survivors at any delay".into()));
    }
    Ok(())
}

fn rate_bracket(points: &[(f64, f64, f64)]) -> (f64, f64) {
    let tmin = points.iter().filter(|p| p.2 > 0.0).map(|p| p.0).fold(f64::INFINITY, f64::min);
    let tmax = points.iter().filter(|p| p.2 > 0.0).map(|p| p.0).fold(0.0, f64::max);
    ((1e-12 / tmax).ln(), (1e3 / tmin).ln())
}

fn pearson(points: &[(f64, f64, f64)], amp: f64, rate: f64) -> f64 {
    points
        .iter()
        .filter(|p| p.2 > 0.0)
        .map(|&(t, k, n)| {
            let p = amp * (-rate * t).exp();
            let v = n * p * (1.0 - p);
            if v > 0.0 {
                (k - n * p).powi(2) / v
            } else {
                0.0
            }
        })
        .sum()
}

/// Fits survival points `(delay s, survivors, trials)`; counts may be fractional.
pub fn fit_survival_curve(points: &[(f64, f64, f64)], free_amplitude: bool) -> Result<DecayFit> {
    check_points(points)?;
    let (lo, hi) = rate_bracket(points);
    let n_used = points.iter().filter(|p| p.2 > 0.0).count() as i64;
    if !free_amplitude {
        let u = golden_max(|u| log_likelihood(points, 1.0, u.exp()), lo, hi, 1e-13);
        let mut rate = u.exp();
        // Newton polish on the concave log-likelihood in r
        for _ in 0..3 {
            let (s, i) = score_info(points, rate);
            if i <= 0.0 {
                break;
            }
            let next = rate + s / i;
            if next > 0.0 && log_likelihood(points, 1.0, next) >= log_likelihood(points, 1.0, rate) {
                rate = next;
            }
        }
        let (_, info) = score_info(points, rate);
        let sigma_rate = 1.0 / info.sqrt();
        return Ok(DecayFit {
            tau: 1.0 / rate,
            sigma_tau: sigma_rate / (rate * rate),
            rate,
            sigma_rate,
            amplitude: 1.0,
            sigma_amplitude: None,
            chi2: pearson(points, 1.0, rate),
            dof: n_used - 1,
            log_likelihood: log_likelihood(points, 1.0, rate),
        });
    }
    if n_used < 3 {
        return Err(Error::DegenerateFit("free amplitude needs at least three delays".into()));
    }
    let profile = |u: f64| -> (f64, f64) {
        let r = u.exp();
        let a = golden_max(|a| log_likelihood(points, a, r), 1e-9, 1.0, 1e-12);
        (a, log_likelihood(points, a, r))
    };
    let u = golden_max(|u| profile(u).1, lo, hi, 1e-11);
    let rate = u.exp();
    let amp = profile(u).0;
    // observed information by central differences in (A, r)
    let ha = 1e-5 * amp.max(1e-3);
    let hr = 1e-5 * rate;
    let l = |a: f64, r: f64| log_likelihood(points, a, r);
    let l0 = l(amp, rate);
    let a_lo = (amp - ha).max(1e-12);
    let a_hi = amp + ha;
    let daa = (l(a_hi, rate) - 2.0 * l0 + l(a_lo, rate)) / (ha * ha);
    let drr = (l(amp, rate + hr) - 2.0 * l0 + l(amp, rate - hr)) / (hr * hr);
    let dar = (l(a_hi, rate + hr) - l(a_hi, rate - hr) - l(a_lo, rate + hr) + l(a_lo, rate - hr)) / (4.0 * ha * hr);
    let det = daa * drr - dar * dar;
    if !(det > 0.0) {
        return Err(Error::DegenerateFit("information matrix is singular".into()));
    }
    let var_r = -daa / det;
    let var_a = -drr / det;
    if !(var_r > 0.0 && var_a > 0.0) {
        return Err(Error::DegenerateFit("likelihood is not at a maximum".into()));
    }
    let sigma_rate = var_r.sqrt();
    Ok(DecayFit {
        tau: 1.0 / rate,
        sigma_tau: sigma_rate / (rate * rate),
        rate,
        sigma_rate,
        amplitude: amp,
        sigma_amplitude: Some(var_a.sqrt()),
        chi2: pearson(points, amp, rate),
        dof: n_used - 2,
        log_likelihood: l0,
    })
}

// score and observed information for the amplitude-1 model, in r
fn score_info(points: &[(f64, f64, f64)], r: f64) -> (f64, f64) {
    let mut s = 0.0;
    let mut i = 0.0;
    for &(t, k, n) in points {
        if n <= 0.0 {
            continue;
        }
        let p = (-r * t).exp();
        let q = -(-r * t).exp_m1();
        s += t * (n * p - k) / q;
        i += (n - k) * t * t * p / (q * q);
    }
    (s, i)
}

/// Amplitude-1 fit solved by Newton iteration on r directly.
///
/// Independent of the golden-section route in [`fit_survival_curve`]; the
/// two agree on the point estimate.
pub fn fit_decay_rate_newton(points: &[(f64, f64, f64)]) -> Result<f64> {
    check_points(points)?;
    // start from a log-linear estimate
    let (mut num, mut den) = (0.0, 0.0);
    for &(t, k, n) in points {
        if n > 0.0 && k > 0.0 {
            num += -(k / n).ln() * t;
            den += t * t;
        }
    }
    let mut r = if num > 0.0 { num / den } else { 1.0 / points.iter().map(|p| p.0).fold(0.0, f64::max) };
    for _ in 0..200 {
        let (s, i) = score_info(points, r);
        let mut step = s / i;
        while r + step <= 0.0 {
            step *= 0.5;
        }
        r += step;
        if step.abs() <= 1e-15 * r {
            break;
        }
    }
    Ok(r)
}

pub fn fit_exponential(data: &Dataset) -> Result<DecayFit> {
    fit_survival_curve(&data.survival_points(), false)
}

pub fn fit_exponential_free_amplitude(data: &Dataset) -> Result<DecayFit> {
    fit_survival_curve(&data.survival_points(), true)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NaturalSubtraction {
    /// Γ_SD = 1/τ_meas − 1/τ_nat (Hz).
    pub gamma_sd: f64,
    pub sigma: f64,
    /// τ_meas exceeds τ_nat by more than three combined standard deviations.
    pub unphysical: bool,
}

pub fn subtract_natural(tau_meas: f64, sigma_tau: f64, tau_nat: f64, sigma_nat: f64) -> Result<NaturalSubtraction> {
    if !(tau_meas > 0.0 && tau_nat > 0.0) {
        return Err(Error::InvalidArgument("lifetimes must be positive".into()));
    }
    if sigma_tau < 0.0 || sigma_nat < 0.0 {
        return Err(Error::InvalidArgument("uncertainties must be non-negative".into()));
    }
    let gamma_sd = 1.0 / tau_meas - 1.0 / tau_nat;
    let sigma = ((sigma_tau / (tau_meas * tau_meas)).powi(2) + (sigma_nat / (tau_nat * tau_nat)).powi(2)).sqrt();
    Ok(NaturalSubtraction {
        gamma_sd,
        sigma,
        unphysical: gamma_sd < -3.0 * sigma,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    /// W/m²
    pub intensity: f64,
    /// Hz
    pub gamma: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    /// Hz per W/m².
    pub slope: f64,
    pub sigma_slope: f64,
    pub chi2: f64,
    pub dof: i64,
    /// Intercept / σ_intercept from the same data with a free intercept;
    /// `None` with fewer than two distinct intensities.
    pub intercept_pull: Option<f64>,
}

pub fn fit_rate_vs_intensity(points: &[RatePoint]) -> Result<RateFit> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no rate points".into()));
    }
    for p in points {
        if !(p.sigma > 0.0) || !p.intensity.is_finite() || !p.gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("bad rate point {p:?}")));
        }
    }
    if points.len() == 1 {
        let p = points[0];
        if p.intensity == 0.0 {
            return Err(Error::RankDeficient("single point at zero intensity".into()));
        }
        return Ok(RateFit {
            slope: p.gamma / p.intensity,
            sigma_slope: p.sigma / p.intensity.abs(),
            chi2: 0.0,
            dof: 0,
            intercept_pull: None,
        });
    }
    let first = points[0].intensity;
    if points.iter().all(|p| p.intensity == first) {
        return Err(Error::RankDeficient("all points share one intensity".into()));
    }
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for p in points {
        let w = 1.0 / (p.sigma * p.sigma);
        sxx += w * p.intensity * p.intensity;
        sxy += w * p.intensity * p.gamma;
    }
    let slope = sxy / sxx;
    let chi2 = points
        .iter()
        .map(|p| ((p.gamma - slope * p.intensity) / p.sigma).powi(2))
        .sum();
    // free-intercept fit for the residual check
    let (mut s, mut sx, mut sy, mut sxx2, mut sxy2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let w = 1.0 / (p.sigma * p.sigma);
        s += w;
        sx += w * p.intensity;
        sy += w * p.gamma;
        sxx2 += w * p.intensity * p.intensity;
        sxy2 += w * p.intensity * p.gamma;
    }
    let det = s * sxx2 - sx * sx;
    let intercept = (sxx2 * sy - sx * sxy2) / det;
    let sigma_intercept = (sxx2 / det).sqrt();
    Ok(RateFit {
        slope,
        sigma_slope: 1.0 / sxx.sqrt(),
        chi2,
        dof: points.len() as i64 - 1,
        intercept_pull: Some(intercept / sigma_intercept),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub sigma: f64,
    pub mean: f64,
    pub used: usize,
    /// Resamples whose fit failed (e.g. no exits drawn).
    pub skipped: usize,
}

pub const MIN_RESAMPLES: usize = 100;

/// Nonparametric bootstrap over trials within each delay.
///
/// Resampling trials with replacement is equivalent to drawing the survivor
/// count from a binomial with the observed survival fraction.
pub fn bootstrap_uncertainty<F>(data: &Dataset, statistic: F, resamples: usize, seed: u64) -> Result<BootstrapResult>
where
    F: Fn(&Dataset) -> Result<f64> + Sync,
{
    if resamples < MIN_RESAMPLES {
        return Err(Error::InsufficientResamples {
            min: MIN_RESAMPLES,
            got: resamples,
        });
    }
    let values: Vec<Option<f64>> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut d = data.clone();
            for rec in &mut d.records {
                let n = rec.n_effective();
                if n == 0 {
                    continue;
                }
                let p = rec.n_survived as f64 / n as f64;
                let k = Binomial::new(n, p).expect("valid binomial").sample(&mut rng);
                rec.n_survived = k;
                rec.n_exited = n - k;
            }
            statistic(&d).ok().filter(|v| v.is_finite())
        })
        .collect();
    let ok: Vec<f64> = values.iter().flatten().copied().collect();
    let skipped = resamples - ok.len();
    if ok.len() < 2 {
        return Err(Error::DegenerateFit(format!("only {} of {resamples} resamples could be fitted", ok.len())));
    }
    let mean = ok.iter().sum::<f64>() / ok.len() as f64;
    let var = ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (ok.len() - 1) as f64;
    Ok(BootstrapResult {
        sigma: var.sqrt(),
        mean,
        used: ok.len(),
        skipped,
    })
}

/// Machine-readable fit summary.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub tau_s: Option<f64>,
    pub sigma_tau_s: Option<f64>,
    pub gamma_sd_hz: Option<f64>,
    pub sigma_hz: Option<f64>,
    pub slope_si: Option<f64>,
    pub sigma_slope_si: Option<f64>,
    pub chi2: Option<f64>,
    pub dof: Option<i64>,
    pub method: String,
    pub seed: Option<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(tau: f64, ts: &[f64]) -> Vec<(f64, f64, f64)> {
        ts.iter().map(|&t| (t, (-t / tau).exp() * 1000.0, 1000.0)).collect()
    }

    #[test]
    fn noiseless_recovery() {
        let f = fit_survival_curve(&exact(0.5, &[0.1, 0.3, 1.0]), false).unwrap();
        assert!((f.tau / 0.5 - 1.0).abs() < 1e-10, "{}", f.tau);
        assert!(f.chi2 < 1e-15);
        assert_eq!(f.dof, 2);
    }

    #[test]
    fn newton_route_agrees() {
        let pts = vec![(0.2, 812.0, 1000.0), (0.5, 610.0, 1000.0), (1.0, 371.0, 1000.0)];
        let a = fit_survival_curve(&pts, false).unwrap().rate;
        let b = fit_decay_rate_newton(&pts).unwrap();
        assert!((a / b - 1.0).abs() < 1e-9);
    }

    #[test]
    fn free_amplitude_recovers_both() {
        let pts: Vec<_> = [0.1, 0.4, 0.7, 1.0]
            .iter()
            .map(|&t| (t, 0.9 * (-t / 0.6f64).exp() * 1e4, 1e4))
            .collect();
        let f = fit_survival_curve(&pts, true).unwrap();
        assert!((f.amplitude - 0.9).abs() < 1e-6);
        assert!((f.tau - 0.6).abs() < 1e-5);
        assert!(f.sigma_amplitude.unwrap() > 0.0);
    }

    #[test]
    fn unbounded_and_degenerate() {
        let all = vec![(0.1, 10.0, 10.0), (0.2, 10.0, 10.0)];
        assert!(matches!(fit_survival_curve(&all, false), Err(Error::UnboundedFit)));
        let none = vec![(0.1, 0.0, 10.0), (0.2, 0.0, 10.0)];
        assert!(matches!(fit_survival_curve(&none, false), Err(Error::DegenerateFit(_))));
        let one = vec![(0.1, 5.0, 10.0)];
        assert!(fit_survival_curve(&one, false).is_err());
    }

    #[test]
    fn natural_subtraction() {
        let r = subtract_natural(0.2, 0.0, 1.168, 0.0).unwrap();
        assert!((r.gamma_sd - 4.143_835_616_438_356).abs() < 1e-12);
        let z = subtract_natural(1.168, 0.0, 1.168, 0.009).unwrap();
        assert_eq!(z.gamma_sd, 0.0);
        assert!((z.sigma - 0.009 / (1.168 * 1.168)).abs() < 1e-15);
        let bad = subtract_natural(2.0, 0.01, 1.168, 0.009).unwrap();
        assert!(bad.unphysical);
    }

    #[test]
    fn rate_line() {
        let pts: Vec<RatePoint> = [1e7, 3e7, 6e7, 9e7]
            .iter()
            .map(|&i| RatePoint {
                intensity: i,
                gamma: 3.6e-9 * i,
                sigma: 0.01,
            })
            .collect();
        let f = fit_rate_vs_intensity(&pts).unwrap();
        assert!((f.slope / 3.6e-9 - 1.0).abs() < 1e-12);
        assert!(f.intercept_pull.unwrap().abs() < 1e-6);
        let single = fit_rate_vs_intensity(&pts[..1]).unwrap();
        assert!((single.slope / 3.6e-9 - 1.0).abs() < 1e-12);
        assert!((single.sigma_slope - 0.01 / 1e7).abs() < 1e-20);
        let same = vec![pts[0], pts[0]];
        assert!(matches!(fit_rate_vs_intensity(&same), Err(Error::RankDeficient(_))));
    }
}
