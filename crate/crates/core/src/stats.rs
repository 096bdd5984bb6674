//! Statistical verdicts: Gaussian fits for CLT batches, Kolmogorov–Smirnov
//! machinery, the replica second-moment estimator, and the trial harness
//! that runs experiment generators over deterministic per-trial streams.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensembles::{sample_spike_with, PriorSpec};
use crate::error::{Error, Result};
use crate::free_energy::GaussianPrediction;
use crate::rng;

/// Minimum number of samples for a Gaussian fit to mean anything.
pub const MIN_FIT_SAMPLES: usize = 100;

/// Minimum number of trials for the CLT harness.
pub const MIN_TRIALS: usize = 100;

/// Largest signal-to-noise ratio the guarded second-moment estimator
/// accepts; beyond it the integrand is too heavy-tailed for plain Monte
/// Carlo to be trusted.
pub const SECOND_MOMENT_GUARD: f64 = 0.9;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Acceptance tolerances for [`gaussian_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitTolerances {
    /// Mean must satisfy `|m - mu| <= mean_z_max * sqrt(V_hat / n) + mean_allowance`.
    pub mean_z_max: f64,
    /// Absolute slack added to the mean band (finite-size drift allowance).
    pub mean_allowance: f64,
    /// Sample variance must lie within this relative band of the prediction.
    pub variance_rel_tol: f64,
    /// Kolmogorov–Smirnov p-value must be at least this.
    pub ks_p_min: f64,
    /// Run the KS test against a Gaussian recentered at the sample mean
    /// (predicted variance), absorbing `O(1/N)` mean drift.
    pub recenter_ks: bool,
}

impl Default for FitTolerances {
    fn default() -> Self {
        FitTolerances {
            mean_z_max: 3.0,
            mean_allowance: 0.0,
            variance_rel_tol: 0.35,
            ks_p_min: 1e-3,
            recenter_ks: true,
        }
    }
}

/// Verdict of a Gaussian fit, with every intermediate number needed to
/// audit it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitReport {
    pub n_samples: usize,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub predicted_mean: f64,
    pub predicted_variance: f64,
    /// `|m - mu| / sqrt(V_hat / n)`; infinite when the sample variance is 0.
    pub mean_z: f64,
    pub mean_pass: bool,
    /// `V_hat / V`; NaN in the degenerate zero-variance branch.
    pub variance_ratio: f64,
    pub variance_pass: bool,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub ks_pass: bool,
    pub pass: bool,
}

/// Sample mean and unbiased variance.
fn mean_and_variance(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    let variance = if samples.len() > 1 { ss / (n - 1.0) } else { 0.0 };
    (mean, variance)
}

/// Tests whether `samples` are compatible with the Gaussian `prediction`:
/// mean within a z-band (plus allowance), variance within a relative band,
/// and a Kolmogorov–Smirnov test at `ks_p_min`.
///
/// A prediction with zero variance switches to exact-match mode: the fit
/// passes iff all samples are identical and the common value sits within
/// `mean_allowance` of the predicted mean.  Zero sample variance against a
/// nonzero predicted variance is a statistics error (a degenerate sampler,
/// not a borderline fit).
pub fn gaussian_fit(
    samples: &[f64],
    prediction: &GaussianPrediction,
    tolerances: &FitTolerances,
) -> Result<FitReport> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::Statistics(format!(
            "gaussian fit needs at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Statistics("samples contain non-finite values".into()));
    }
    let (mean, variance) = mean_and_variance(samples);

    if prediction.variance == 0.0 {
        let all_equal = samples.windows(2).all(|w| w[0] == w[1]);
        let mean_err = (mean - prediction.mean).abs();
        let mean_pass = mean_err <= tolerances.mean_allowance;
        let pass = all_equal && mean_pass;
        return Ok(FitReport {
            n_samples: samples.len(),
            sample_mean: mean,
            sample_variance: variance,
            predicted_mean: prediction.mean,
            predicted_variance: 0.0,
            mean_z: if mean_err == 0.0 { 0.0 } else { f64::INFINITY },
            mean_pass,
            variance_ratio: f64::NAN,
            variance_pass: all_equal,
            ks_statistic: if all_equal { 0.0 } else { 1.0 },
            ks_p_value: if pass { 1.0 } else { 0.0 },
            ks_pass: all_equal,
            pass,
        });
    }

    if variance == 0.0 {
        return Err(Error::Statistics(
            "all samples are identical but the predicted variance is nonzero".into(),
        ));
    }

    let n = samples.len() as f64;
    let se = (variance / n).sqrt();
    let mean_err = (mean - prediction.mean).abs();
    let mean_z = mean_err / se;
    let mean_pass = mean_err <= tolerances.mean_z_max * se + tolerances.mean_allowance;

    let variance_ratio = variance / prediction.variance;
    let variance_pass = (variance - prediction.variance).abs()
        <= tolerances.variance_rel_tol * prediction.variance;

    let sigma = prediction.variance.sqrt();
    let center = if tolerances.recenter_ks { mean } else { prediction.mean };
    let d = ks_statistic(samples, |x| normal_cdf((x - center) / sigma))?;
    let p = kolmogorov_pvalue(d, samples.len());
    let ks_pass = p >= tolerances.ks_p_min;

    Ok(FitReport {
        n_samples: samples.len(),
        sample_mean: mean,
        sample_variance: variance,
        predicted_mean: prediction.mean,
        predicted_variance: prediction.variance,
        mean_z,
        mean_pass,
        variance_ratio,
        variance_pass,
        ks_statistic: d,
        ks_p_value: p,
        ks_pass,
        pass: mean_pass && variance_pass && ks_pass,
    })
}

/// Kolmogorov–Smirnov statistic of `samples` against the CDF `cdf`:
/// `D = max_i max((i+1)/n - F(x_(i)), F(x_(i)) - i/n)` over the sorted
/// sample.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Statistics("KS statistic of an empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples checked finite"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::Statistics(format!(
                "CDF returned {f} outside [0, 1] at x = {x}"
            )));
        }
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Asymptotic Kolmogorov p-value `P(D > d)` for sample size `n`, using the
/// Kolmogorov series in the fast-converging regime `t = sqrt(n) d > 1.18`
/// and the theta-function dual below it.
pub fn kolmogorov_pvalue(d: f64, n: usize) -> f64 {
    let t = (n as f64).sqrt() * d;
    if t <= 0.0 {
        return 1.0;
    }
    if t > 1.18 {
        let mut sum = 0.0;
        let mut sign = 1.0;
        for k in 1..=100 {
            let term = (-2.0 * (k as f64) * (k as f64) * t * t).exp();
            sum += sign * term;
            sign = -sign;
            if term < 1e-16 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let odd = (2 * k - 1) as f64;
            let term = (-odd * odd * std::f64::consts::PI.powi(2) / (8.0 * t * t)).exp();
            sum += term;
            if term < 1e-16 {
                break;
            }
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / t * sum;
        (1.0 - cdf).clamp(0.0, 1.0)
    }
}

/// A batch of per-trial statistics and the Gaussian law they should follow.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialBatch {
    pub samples: Vec<f64>,
    pub prediction: GaussianPrediction,
}

impl TrialBatch {
    pub fn new(samples: Vec<f64>, prediction: GaussianPrediction) -> Self {
        TrialBatch { samples, prediction }
    }

    pub fn fit(&self, tolerances: &FitTolerances) -> Result<FitReport> {
        gaussian_fit(&self.samples, &self.prediction, tolerances)
    }
}

fn with_trial_context(err: Error, trial: usize) -> Error {
    let tag = format!("trial {trial}: ");
    match err {
        Error::Config(m) => Error::Config(format!("{tag}{m}")),
        Error::Domain(m) => Error::Domain(format!("{tag}{m}")),
        Error::Numeric(m) => Error::Numeric(format!("{tag}{m}")),
        Error::Resource(m) => Error::Resource(format!("{tag}{m}")),
        Error::Model(m) => Error::Model(format!("{tag}{m}")),
        Error::Range(m) => Error::Range(format!("{tag}{m}")),
        Error::Statistics(m) => Error::Statistics(format!("{tag}{m}")),
        Error::Contract(m) => Error::Contract(format!("{tag}{m}")),
        Error::Io(e) => Error::Io(e),
    }
}

/// Runs `generator` once per trial over deterministic per-trial streams
/// `stream(master_seed, TRIAL, index)`, in parallel, and returns the results
/// in index order.
///
/// Parallel scheduling cannot change the output: every trial owns its
/// stream, results are placed by index, and when several trials fail, the
/// error of the smallest index is reported (tagged with that index).
pub fn clt_harness<F>(trials: usize, master_seed: u64, generator: F) -> Result<Vec<f64>>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if trials < MIN_TRIALS {
        return Err(Error::Config(format!(
            "CLT harness needs at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    let results: Vec<Result<f64>> = (0..trials)
        .into_par_iter()
        .map(|idx| {
            let mut rng = rng::stream(master_seed, rng::context::TRIAL, idx as u64);
            generator(idx, &mut rng)
        })
        .collect();
    let mut out = Vec::with_capacity(trials);
    for (idx, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.push(v),
            Err(e) => return Err(with_trial_context(e, idx)),
        }
    }
    Ok(out)
}

/// Monte Carlo estimate of the replica second-moment ratio together with
/// its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondMomentEstimate {
    /// Monte Carlo mean of `exp(N lambda <x, x'>^2 / 2)` (overlap
    /// normalized for norm-constrained priors).
    pub value: f64,
    pub stderr: f64,
    /// Effective sample size `(sum w)^2 / sum w^2` of the exponential
    /// weights; small values flag heavy-tail undersampling.
    pub ess: f64,
    /// The limiting value `(1 - lambda)^{-1/2}`.
    pub reference: f64,
    pub samples: usize,
}

/// Estimates `E exp(N lambda <x, x'>^2 / 2)` over independent spike pairs,
/// the second-moment functional whose `N -> infinity` limit is
/// `(1 - lambda)^{-1/2}` for `lambda < 1`.
///
/// For norm-constrained (normalized) priors the overlap is divided by
/// `|x| |x'|`.  Refuses `lambda > 0.9`, where the integrand's tails make
/// plain Monte Carlo silently unreliable — use
/// [`second_moment_estimate_unguarded`] to override.
pub fn second_moment_estimate(
    prior: &PriorSpec,
    lambda: f64,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<SecondMomentEstimate> {
    if lambda > SECOND_MOMENT_GUARD {
        return Err(Error::Domain(format!(
            "lambda = {lambda} > {SECOND_MOMENT_GUARD}: the exponential overlap moment is \
             heavy-tailed this close to 1; use the unguarded estimator if you accept the risk"
        )));
    }
    second_moment_estimate_unguarded(prior, lambda, n, samples, seed)
}

/// [`second_moment_estimate`] without the heavy-tail guard (still requires
/// `lambda < 1`, where the limit exists).
pub fn second_moment_estimate_unguarded(
    prior: &PriorSpec,
    lambda: f64,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<SecondMomentEstimate> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::Domain(format!(
            "signal-to-noise ratio lambda = {lambda} must be finite and >= 0"
        )));
    }
    if lambda >= 1.0 {
        return Err(Error::Domain(format!(
            "second moment diverges for lambda = {lambda} >= 1"
        )));
    }
    if n < 2 {
        return Err(Error::Config(format!("spike dimension n = {n} must be at least 2")));
    }
    if samples < 2 {
        return Err(Error::Config(format!(
            "second-moment estimate needs at least 2 samples, got {samples}"
        )));
    }
    let reference = 1.0 / (1.0 - lambda).sqrt();
    if lambda == 0.0 {
        return Ok(SecondMomentEstimate {
            value: 1.0,
            stderr: 0.0,
            ess: samples as f64,
            reference,
            samples,
        });
    }
    let normalized = prior.normalized();
    let mut rng = rng::stream(seed, rng::context::PAIR, 0);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let x = sample_spike_with(prior, n, &mut rng);
        let y = sample_spike_with(prior, n, &mut rng);
        let mut dot = 0.0;
        let mut nx = 0.0;
        let mut ny = 0.0;
        for k in 0..n {
            dot += x[k] * y[k];
            nx += x[k] * x[k];
            ny += y[k] * y[k];
        }
        let overlap_sq = if normalized {
            if nx == 0.0 || ny == 0.0 {
                0.0
            } else {
                dot * dot / (nx * ny)
            }
        } else {
            dot * dot
        };
        let w = (0.5 * n as f64 * lambda * overlap_sq).exp();
        sum += w;
        sum_sq += w * w;
    }
    let m = samples as f64;
    let value = sum / m;
    let var = (sum_sq / m - value * value).max(0.0);
    let stderr = (var / (m - 1.0)).sqrt();
    let ess = if sum_sq > 0.0 { sum * sum / sum_sq } else { m };
    Ok(SecondMomentEstimate { value, stderr, ess, reference, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn ks_statistic_hand_check() {
        // Nine equally spaced points against the uniform CDF: D = 0.1.
        let samples: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.1).abs() < 1e-12, "got {d}");
    }

    #[test]
    fn kolmogorov_pvalue_reference_points() {
        // Classical table values of the Kolmogorov distribution:
        // Q(1.36) ≈ 0.049, Q(1.22) ≈ 0.10, Q(1.63) ≈ 0.01.
        let q = |t: f64| kolmogorov_pvalue(t, 1);
        assert!((q(1.36) - 0.049).abs() < 2e-3, "{}", q(1.36));
        assert!((q(1.22) - 0.101).abs() < 2e-3, "{}", q(1.22));
        assert!((q(1.63) - 0.0100).abs() < 1e-3, "{}", q(1.63));
        // Both branches agree at the split point (straddle it by 1e-8 in t,
        // where Q itself moves by ~1e-8).
        let lo = kolmogorov_pvalue(1.18 - 1e-8, 1);
        let hi = kolmogorov_pvalue(1.18 + 1e-8, 1);
        assert!((lo - hi).abs() < 1e-6, "{lo} vs {hi}");
        assert_eq!(kolmogorov_pvalue(0.0, 50), 1.0);
    }

    #[test]
    fn gaussian_fit_accepts_true_gaussians_at_least_95_percent() {
        let prediction = GaussianPrediction::new(1.5, 0.49).unwrap();
        let tol = FitTolerances::default();
        let mut passes = 0;
        for rep in 0..100u64 {
            let mut rng = rng::stream(314, rng::context::TRIAL, rep);
            let samples: Vec<f64> = (0..300)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    1.5 + 0.7 * z
                })
                .collect();
            if gaussian_fit(&samples, &prediction, &tol).unwrap().pass {
                passes += 1;
            }
        }
        assert!(passes >= 95, "only {passes}/100 fits passed");
    }

    #[test]
    fn gaussian_fit_rejects_wrong_mean_and_wrong_variance() {
        let tol = FitTolerances::default();
        let mut rng = rng::stream(99, rng::context::TRIAL, 0);
        let samples: Vec<f64> = (0..400)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                2.0 + z
            })
            .collect();
        // Mean off by 5 standard errors.
        let off_mean = GaussianPrediction::new(2.0 + 5.0 / 20.0, 1.0).unwrap();
        let report = gaussian_fit(&samples, &off_mean, &tol).unwrap();
        assert!(!report.mean_pass);
        // Variance off by a factor 2.
        let off_var = GaussianPrediction::new(2.0, 2.0).unwrap();
        let report = gaussian_fit(&samples, &off_var, &tol).unwrap();
        assert!(!report.variance_pass);
        // Recentring rescues a small mean shift for the KS check only.
        let shifted = GaussianPrediction::new(2.02, 1.0).unwrap();
        let report = gaussian_fit(&samples, &shifted, &tol).unwrap();
        assert!(report.ks_pass);
    }

    #[test]
    fn zero_variance_prediction_requires_exact_match() {
        let tol = FitTolerances::default();
        let pred = GaussianPrediction::new(0.0, 0.0).unwrap();
        let zeros = vec![0.0; 150];
        let report = gaussian_fit(&zeros, &pred, &tol).unwrap();
        assert!(report.pass);
        let mut off = zeros.clone();
        off[3] = 1e-9;
        let report = gaussian_fit(&off, &pred, &tol).unwrap();
        assert!(!report.pass);
        // Degenerate samples against a nonzero prediction: statistics error.
        let pred = GaussianPrediction::new(0.0, 1.0).unwrap();
        assert!(matches!(
            gaussian_fit(&zeros, &pred, &tol),
            Err(Error::Statistics(_))
        ));
    }

    #[test]
    fn fit_needs_a_hundred_samples() {
        let pred = GaussianPrediction::new(0.0, 1.0).unwrap();
        let samples = vec![0.5; 99];
        assert!(matches!(
            gaussian_fit(&samples, &pred, &FitTolerances::default()),
            Err(Error::Statistics(_))
        ));
    }

    #[test]
    fn harness_is_deterministic_across_thread_counts() {
        let run = |threads: usize| -> Vec<f64> {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("pool");
            pool.install(|| {
                clt_harness(128, 505, |idx, rng| {
                    use rand::Rng as _;
                    Ok(idx as f64 + rng.random::<f64>())
                })
            })
            .unwrap()
        };
        let one = run(1);
        let four = run(4);
        assert_eq!(one, four);
        // Results are in index order: fractional parts aside, sorted.
        for (idx, v) in one.iter().enumerate() {
            assert!((v - idx as f64) >= 0.0 && (v - idx as f64) < 1.0);
        }
    }

    #[test]
    fn harness_reports_the_first_failing_trial() {
        let err = clt_harness(120, 7, |idx, _| {
            if idx >= 50 {
                Err(Error::Numeric(format!("boom at {idx}")))
            } else {
                Ok(0.0)
            }
        })
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("trial 50"), "got: {msg}");
        assert!(msg.contains("boom at 50"), "got: {msg}");
        assert!(matches!(err, Error::Numeric(_)));
    }

    #[test]
    fn harness_composes_with_exact_match_fit() {
        let samples = clt_harness(150, 1, |_, _| Ok(0.0)).unwrap();
        let pred = GaussianPrediction::new(0.0, 0.0).unwrap();
        let report = gaussian_fit(&samples, &pred, &FitTolerances::default()).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn harness_requires_enough_trials() {
        assert!(matches!(
            clt_harness(99, 7, |_, _| Ok(0.0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn second_moment_zero_lambda_is_exactly_one() {
        let prior = PriorSpec::rademacher();
        let est = second_moment_estimate(&prior, 0.0, 50, 100, 3).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.stderr, 0.0);
        assert_eq!(est.reference, 1.0);
    }

    #[test]
    fn second_moment_is_monotone_in_lambda() {
        let prior = PriorSpec::rademacher();
        let mut last = 0.0;
        for (i, &lambda) in [0.2, 0.4, 0.6].iter().enumerate() {
            let est = second_moment_estimate(&prior, lambda, 400, 20_000, 17).unwrap();
            assert!(
                est.value > last,
                "lambda = {lambda}: {} not above {last}",
                est.value
            );
            assert!(est.ess > 100.0, "ESS collapsed: {}", est.ess);
            last = est.value;
            let _ = i;
        }
    }

    #[test]
    fn second_moment_stderr_scales_like_inverse_sqrt_samples() {
        // lambda kept small so the weight's fourth moment is finite and the
        // empirical stderr is itself a stable statistic.
        let prior = PriorSpec::rademacher();
        let small = second_moment_estimate(&prior, 0.1, 300, 20_000, 23).unwrap();
        let large = second_moment_estimate(&prior, 0.1, 300, 80_000, 24).unwrap();
        let ratio = small.stderr / large.stderr;
        assert!(
            (ratio - 2.0).abs() <= 0.4,
            "stderr ratio {ratio} not within 20% of 2"
        );
    }

    #[test]
    fn second_moment_guard_and_domain_errors() {
        let prior = PriorSpec::rademacher();
        assert!(matches!(
            second_moment_estimate(&prior, 0.95, 100, 100, 1),
            Err(Error::Domain(_))
        ));
        // Unguarded accepts 0.95 but still rejects >= 1.
        assert!(second_moment_estimate_unguarded(&prior, 0.95, 50, 100, 1).is_ok());
        assert!(matches!(
            second_moment_estimate_unguarded(&prior, 1.0, 100, 100, 1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            second_moment_estimate(&prior, 0.5, 1, 100, 1),
            Err(Error::Config(_))
        ));
    }
}
