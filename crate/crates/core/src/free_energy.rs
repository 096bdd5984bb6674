//! Partition function and free energy of the quadratic spin model
//! H(x) = βN Σ_{i<j} W_ij x_i x_j / ‖x‖², with the predicted Gaussian law of
//! the centered fluctuation N·(F_N − β²/4).
//!
//! Exact evaluation enumerates sign vectors in Gray-code order, maintaining
//! local fields so each flip costs O(N), and accumulates a streaming
//! log-sum-exp. Monte Carlo evaluation averages the exponential over spike
//! draws and is exponentially noisy in N at fixed sample count — it exists as
//! a cross-check, not a workhorse.

use crate::ensembles::{sample_spike_with, PriorSpec, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::numeric::StreamingLse;
use crate::rng::{self, context};
use std::f64::consts::LN_2;

/// Largest N accepted by the exact enumerator unless a caller raises it.
pub const DEFAULT_EXACT_CAP: usize = 24;

/// How a partition function value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMethod {
    Exact,
    Mc,
}

/// One partition-function evaluation.
#[derive(Clone, Debug)]
pub struct FreeEnergySample {
    pub beta: f64,
    pub n: usize,
    pub log_z: f64,
    pub method: EvalMethod,
    /// Standard error of log Z; present only for Monte Carlo evaluations.
    pub stderr: Option<f64>,
}

impl FreeEnergySample {
    /// F_N = log Z / N.
    pub fn free_energy(&self) -> f64 {
        self.log_z / self.n as f64
    }

    pub fn fluctuation(&self) -> f64 {
        fluctuation_statistic(self)
    }
}

/// A predicted normal law for a fluctuation statistic.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct GaussianPrediction {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianPrediction {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() || variance < 0.0 {
            return Err(Error::Numeric(format!(
                "invalid Gaussian prediction (mean {mean}, variance {variance})"
            )));
        }
        Ok(GaussianPrediction { mean, variance })
    }
}

/// Diagnostics of one Gray-code scan.
#[derive(Clone, Copy, Debug)]
pub struct ScanDiagnostics {
    /// |incrementally maintained energy − recomputed energy| at the final state.
    pub drift: f64,
    /// Number of configurations visited (2^N).
    pub states: u64,
}

pub(crate) struct GrayScanResult {
    pub log_mean_exp: f64,
    pub drift: f64,
}

/// log((1/2^N) Σ_{σ∈{±1}^N} exp(Σ_{i<j} J_ij σ_i σ_j)) for a dense row-major
/// symmetric coupling matrix with zero diagonal.
pub(crate) fn gray_log_mean_exp(n: usize, couplings: &[f64]) -> GrayScanResult {
    assert!(n >= 1 && n < 48, "gray scan size {n} out of range");
    assert_eq!(couplings.len(), n * n);
    debug_assert!((0..n).all(|k| couplings[k * n + k] == 0.0), "diagonal must be zero");
    let mut sigma = vec![1.0f64; n];
    // Local fields f_j = Σ_{i≠j} J_ji σ_i; at the all-ones start these are row sums.
    let mut fields: Vec<f64> = (0..n).map(|j| couplings[j * n..(j + 1) * n].iter().sum()).collect();
    let mut h: f64 = 0.5 * fields.iter().sum::<f64>();
    let mut lse = StreamingLse::default();
    lse.push(h);
    let states: u64 = 1u64 << n;
    for c in 1..states {
        // Gray code flips exactly the lowest set bit position of the counter.
        let k = c.trailing_zeros() as usize;
        let old = sigma[k];
        // f_k excludes σ_k itself, so the energy delta uses the pre-flip field.
        h -= 2.0 * old * fields[k];
        sigma[k] = -old;
        let delta = -2.0 * old;
        let row = &couplings[k * n..(k + 1) * n];
        for (f, &j) in fields.iter_mut().zip(row) {
            *f += delta * j;
        }
        lse.push(h);
    }
    let mut h_direct = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            h_direct += couplings[i * n + j] * sigma[i] * sigma[j];
        }
    }
    GrayScanResult { log_mean_exp: lse.log_sum() - n as f64 * LN_2, drift: (h - h_direct).abs() }
}

/// Exact log Z over σ ∈ {±1}^N with the default size cap.
pub fn partition_function_exact(w: &SymmetricMatrix, beta: f64) -> Result<FreeEnergySample> {
    partition_function_exact_capped(w, beta, DEFAULT_EXACT_CAP)
}

/// Exact log Z with an explicit size cap.
pub fn partition_function_exact_capped(
    w: &SymmetricMatrix,
    beta: f64,
    cap: usize,
) -> Result<FreeEnergySample> {
    partition_function_exact_diagnostics(w, beta, cap).map(|(s, _)| s)
}

/// Exact log Z plus scan diagnostics (energy drift, state count).
pub fn partition_function_exact_diagnostics(
    w: &SymmetricMatrix,
    beta: f64,
    cap: usize,
) -> Result<(FreeEnergySample, ScanDiagnostics)> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::Domain(format!("inverse temperature beta = {beta} must be ≥ 0")));
    }
    let n = w.n();
    if n > cap {
        return Err(Error::Resource(format!(
            "exact enumeration over 2^{n} spin states exceeds the cap N ≤ {cap}"
        )));
    }
    let mut couplings = w.to_dense();
    for i in 0..n {
        for j in 0..n {
            couplings[i * n + j] = if i == j { 0.0 } else { beta * couplings[i * n + j] };
        }
    }
    let scan = gray_log_mean_exp(n, &couplings);
    let sample = FreeEnergySample {
        beta,
        n,
        log_z: scan.log_mean_exp,
        method: EvalMethod::Exact,
        stderr: None,
    };
    Ok((sample, ScanDiagnostics { drift: scan.drift, states: 1u64 << n }))
}

/// Monte Carlo log Z: log of the sample mean of exp(βN Σ_{i<j} W_ij x_i x_j /
/// ‖x‖²) over spike draws, with a delta-method standard error. The relative
/// variance of the underlying mean grows exponentially in N at fixed sample
/// count, so this estimator is only trustworthy at small sizes.
pub fn partition_function_mc(
    w: &SymmetricMatrix,
    beta: f64,
    prior: &PriorSpec,
    samples: usize,
    seed: u64,
) -> Result<FreeEnergySample> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::Domain(format!("inverse temperature beta = {beta} must be ≥ 0")));
    }
    if samples == 0 {
        return Err(Error::Config("Monte Carlo needs at least one sample".into()));
    }
    let n = w.n();
    let mut rng = rng::stream(seed, context::MC, 0);
    let mut exponents = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = sample_spike_with(prior, n, &mut rng);
        let norm_sq: f64 = x.iter().map(|v| v * v).sum();
        let s = if norm_sq > 0.0 {
            let mut quad = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    quad += w.get(i, j) * x[i] * x[j];
                }
            }
            beta * n as f64 * quad / norm_sq
        } else {
            // ‖x‖ = 0 ⇒ the exponent is defined as 0.
            0.0
        };
        exponents.push(s);
    }
    let m = samples as f64;
    let log_mean = crate::numeric::log_sum_exp(&exponents) - m.ln();
    let doubled: Vec<f64> = exponents.iter().map(|s| 2.0 * s).collect();
    let log_mean_sq = crate::numeric::log_sum_exp(&doubled) - m.ln();
    // stderr of log(mean) ≈ sqrt((E[e^{2s}]/E[e^s]² − 1)/M), all in log space.
    let rel_var = (log_mean_sq - 2.0 * log_mean).exp() - 1.0;
    let stderr = (rel_var.max(0.0) / m).sqrt();
    Ok(FreeEnergySample { beta, n, log_z: log_mean, method: EvalMethod::Mc, stderr: Some(stderr) })
}

/// Predicted law of N·(F_N − β²/4):
/// mean = ¼log(1−β²) + β²(1−m₄)/4 + β⁴(w₄−3)(m₄²−3)/48,
/// variance = −½[log(1−β²) + β² − β⁴(w₄−3)/4].
pub fn predict_free_energy_fluctuation(beta: f64, w4: f64, m4: f64) -> Result<GaussianPrediction> {
    if !(beta.is_finite() && beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!(
            "fluctuation law requires 0 < beta < 1, got {beta}"
        )));
    }
    if w4 < 1.0 || m4 < 1.0 {
        return Err(Error::Domain(format!(
            "normalized fourth moments must be ≥ 1 (w4 = {w4}, m4 = {m4})"
        )));
    }
    let b2 = beta * beta;
    let log1m = (-b2).ln_1p();
    let kappa4 = w4 - 3.0;
    let mean = 0.25 * log1m + b2 * (1.0 - m4) / 4.0 + b2 * b2 * kappa4 * (m4 * m4 - 3.0) / 48.0;
    let variance = -0.5 * (log1m + b2 - b2 * b2 * kappa4 / 4.0);
    GaussianPrediction::new(mean, variance)
}

/// N·(F_N − β²/4), evaluated as log Z − N β²/4 to avoid the divide-multiply
/// round trip.
pub fn fluctuation_statistic(sample: &FreeEnergySample) -> f64 {
    sample.log_z - sample.n as f64 * sample.beta * sample.beta / 4.0
}
