//! Desk-scale numerical laboratory for two asymptotically Gaussian statistics:
//! the recentered free energy of a generalized Sherrington-Kirkpatrick model,
//! and the log likelihood ratio of spiked Wigner matrix detection.
//!
//! Both laws are instances of one combinatorial calculus on edge-weighted
//! multigraphs, implemented in [`multigraph`]. The surrounding modules supply
//! the concrete models ([`ensembles`], [`density`], [`free_energy`],
//! [`likelihood`]) and the statistical harness that compares simulated
//! fluctuations with the predicted normal laws ([`stats`]).
//!
//! Everything is deterministic given a master seed: sampling goes through
//! counter-derived ChaCha streams (see [`rng`]) so that parallel trial
//! execution reproduces bit-identical results at any thread count.

pub mod density;
pub mod ensembles;
pub mod error;
pub mod free_energy;
pub mod likelihood;
pub mod multigraph;
pub mod numeric;
pub mod rng;
pub mod stats;

pub use density::{
    detection_error, fisher_information, lr_coefficient, rho_l, second_fisher, DensityCheck,
    DensityModel, FisherSet,
};
pub use ensembles::{
    disorder_moments, prior_moments, sample_spike, sample_spike_with, sample_wigner,
    verify_strict_subgaussian, DisorderFamily, DisorderMoments, DisorderSpec, PriorFamily,
    PriorMoments, PriorSpec, SpikeMode, SubgaussianReport, SymmetricMatrix,
};
pub use error::{Error, Result};
pub use free_energy::{
    fluctuation_statistic, partition_function_exact, partition_function_exact_capped,
    partition_function_exact_diagnostics, partition_function_mc, predict_free_energy_fluctuation,
    EvalMethod, FreeEnergySample, GaussianPrediction, ScanDiagnostics, DEFAULT_EXACT_CAP,
};
pub use likelihood::{
    log_lr, predict_loglr, sample_data_matrix, spike_log_ratio, truncated_expansion_lr,
    Hypothesis, LogLRSample, LogLrPrediction, NoisePair,
};
pub use multigraph::{
    census_to_csv, count_simple_cycles, cutoff_scan, cutoff_sum, decompose_simple_cycles,
    direct_product, enumerate_multicycles, expansion_sum, graph_stats, graph_weight,
    hermite_weights,
    is_multicycle, is_orthogonal, is_similar, multicycle_census, multicycle_variance,
    prior_factor, product_decomposition_gap, rho_prediction, CensusRow, CutoffReport,
    EdgeWeightSample, ExpansionMoments, GraphStats, MomentTable, Multigraph, PriorFactor,
    PriorFactorMode, RhoDecomposition,
};
pub use stats::{
    clt_harness, gaussian_fit, kolmogorov_pvalue, ks_statistic, normal_cdf,
    second_moment_estimate, second_moment_estimate_unguarded, FitReport, FitTolerances,
    SecondMomentEstimate, TrialBatch,
};
