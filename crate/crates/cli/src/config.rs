//! Versioned JSON experiment configuration: parsing (unknown keys rejected),
//! validation, and resolution into core model types. Every validation error
//! names the offending field path inside the config document.

use std::path::{Path, PathBuf};

use fluctlab::free_energy::EvalMethod;
use fluctlab::stats::FitTolerances;
use fluctlab::{
    fisher_information, DensityModel, DisorderSpec, Error, Hypothesis, NoisePair, PriorSpec,
    Result, DEFAULT_EXACT_CAP,
};
use fluctlab::multigraph::MAX_CUTOFF_NODES;
use serde::{Deserialize, Serialize};

/// The schema version this binary understands.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable consulted for the default worker count when neither
/// `--threads` nor the config's `threads` field is set.
pub const THREADS_ENV: &str = "FLUCTLAB_THREADS";

fn cfg_err(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{path}: {msg}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    FreeEnergyClt,
    LoglrClt,
    SecondMoment,
    GraphIdentities,
    CutoffScan,
    FisherTable,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::FreeEnergyClt => "free-energy-clt",
            ExperimentKind::LoglrClt => "loglr-clt",
            ExperimentKind::SecondMoment => "second-moment",
            ExperimentKind::GraphIdentities => "graph-identities",
            ExperimentKind::CutoffScan => "cutoff-scan",
            ExperimentKind::FisherTable => "fisher-table",
        }
    }
}

/// A model component given either as a registered name or inline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DisorderConfig {
    Name(String),
    Inline(DisorderInline),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderInline {
    pub family: String,
    /// Scaled diagonal second moment N·E[W_kk²]; defaults to the family's
    /// reference value (2 for gaussian, 1 otherwise).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w2: Option<f64>,
    /// Tabulated (x, log p) CSV for the off-diagonal density (family "custom").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub off_table: Option<PathBuf>,
    /// Tabulated CSV for the diagonal density; defaults to `off_table`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag_table: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorConfig {
    Name(String),
    Inline(PriorInline),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorInline {
    pub family: String,
    /// Divide each spike by its Euclidean norm (defaults to false; the
    /// rademacher family is norm-one either way).
    #[serde(default)]
    pub normalized: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensityConfig {
    Name(String),
    Inline(DensityInline),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityInline {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// Scale parameter (logistic) or variance (gaussian).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    /// Tabulated (x, log p) CSV; mutually exclusive with `family`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorConfig>,
    /// Off-diagonal noise density for likelihood-ratio evaluation and Fisher
    /// tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityConfig>,
    /// Diagonal noise density; defaults to a variance-2 gaussian (the GOE
    /// diagonal convention).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag_density: Option<DensityConfig>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSection {
    /// Inverse temperature grid (free-energy-clt).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    /// Signal-to-noise grid (loglr-clt, second-moment, fisher-table).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    /// Matrix dimension (free-energy-clt, loglr-clt, second-moment).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Number of independent disorder trials (CLT experiments).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Monte Carlo sample count (second-moment pairs; mc evaluation method).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Partition-function / likelihood evaluation: "exact" or "mc".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    /// Hypotheses to simulate for loglr-clt: subset of ["h0", "h1"].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<Vec<String>>,
    /// Node counts (graph-identities, cutoff-scan).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    /// Random weight draws per node count (graph-identities).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    /// Maximum edge multiplicity in the expansion (graph-identities).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_multiplicity: Option<u8>,
    /// Include diagonal factors in the expansion (graph-identities).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allow_self_loops: Option<bool>,
    /// Per-edge cycle weights (cutoff-scan).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    /// Largest size threshold scanned (cutoff-scan).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<u32>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_z_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_allowance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_p_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recenter_ks: Option<bool>,
    /// Relative band on the second-moment estimate vs its reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_band: Option<f64>,
    /// Relative tolerance for the expansion/direct-product identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub parameters: ParamSection,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Permit supercritical parameters (beta >= 1, lambda·F_p >= 1). Raw
    /// samples are still collected, but Gaussian predictions do not exist
    /// there and the fit is omitted.
    #[serde(default)]
    pub allow_supercritical: bool,
    #[serde(default)]
    pub tolerances: ToleranceSection,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config does not match schema: {e}")))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(cfg_err(
                "schema_version",
                format!("this build understands version {SCHEMA_VERSION}, got {}", config.schema_version),
            ));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Per-experiment parameters after validation, with supercriticality flags
/// resolved per grid point.
#[derive(Debug, Clone)]
pub enum Plan {
    FreeEnergyClt {
        betas: Vec<f64>,
        /// Parallel to `betas`: true where beta >= 1 (prediction omitted).
        supercritical: Vec<bool>,
        n: usize,
        trials: usize,
        method: EvalMethod,
        mc_samples: usize,
    },
    LoglrClt {
        lambdas: Vec<f64>,
        supercritical: Vec<bool>,
        hypotheses: Vec<Hypothesis>,
        n: usize,
        trials: usize,
        method: EvalMethod,
        mc_samples: usize,
    },
    SecondMoment {
        lambdas: Vec<f64>,
        /// Parallel to `lambdas`: true where the heavy-tail guard is waived.
        unguarded: Vec<bool>,
        n: usize,
        samples: usize,
    },
    GraphIdentities {
        n_list: Vec<usize>,
        draws: usize,
        max_multiplicity: u8,
        allow_self_loops: bool,
    },
    CutoffScan {
        n_list: Vec<usize>,
        alphas: Vec<f64>,
        s_max: u32,
    },
    FisherTable {
        lambdas: Vec<f64>,
        supercritical: Vec<bool>,
    },
}

/// Fully resolved run: core model objects plus the validated plan.
#[derive(Debug)]
pub struct Resolved {
    pub kind: ExperimentKind,
    pub disorder: DisorderSpec,
    pub prior: PriorSpec,
    pub noise: Option<NoisePair>,
    pub plan: Plan,
    pub fit: FitTolerances,
    pub rel_band: f64,
    pub identity_tol: f64,
    pub seed: u64,
}

pub fn resolve_disorder(config: Option<&DisorderConfig>) -> Result<DisorderSpec> {
    let path = "model.disorder";
    match config {
        None => Ok(DisorderSpec::gaussian_goe()),
        Some(DisorderConfig::Name(name)) => match name.as_str() {
            "gaussian" | "goe" => Ok(DisorderSpec::gaussian_goe()),
            "rademacher" => DisorderSpec::rademacher_scaled(1.0),
            "uniform" => DisorderSpec::uniform_scaled(1.0),
            other => Err(cfg_err(
                path,
                format!("unknown disorder family \"{other}\" (expected gaussian, rademacher, uniform, or an inline spec)"),
            )),
        },
        Some(DisorderConfig::Inline(inline)) => {
            let spec = match inline.family.as_str() {
                "gaussian" | "goe" => DisorderSpec::gaussian(inline.w2.unwrap_or(2.0)),
                "rademacher" => DisorderSpec::rademacher_scaled(inline.w2.unwrap_or(1.0)),
                "uniform" => DisorderSpec::uniform_scaled(inline.w2.unwrap_or(1.0)),
                "custom" => {
                    let off_path = inline.off_table.as_ref().ok_or_else(|| {
                        cfg_err("model.disorder.off_table", "required for the custom family")
                    })?;
                    let off = load_table_density("model.disorder.off_table", off_path)?;
                    let diag = match &inline.diag_table {
                        Some(p) => load_table_density("model.disorder.diag_table", p)?,
                        None => off.clone(),
                    };
                    DisorderSpec::custom_density(off, diag)
                }
                other => Err(Error::Config(format!("unsupported family \"{other}\""))),
            };
            spec.map_err(|e| cfg_err(path, e))
        }
    }
}

pub fn resolve_prior(config: Option<&PriorConfig>) -> Result<PriorSpec> {
    let path = "model.prior";
    let (family, normalized) = match config {
        None => return Ok(PriorSpec::rademacher()),
        Some(PriorConfig::Name(name)) => (name.clone(), false),
        Some(PriorConfig::Inline(inline)) => (inline.family.clone(), inline.normalized),
    };
    match family.as_str() {
        "rademacher" => Ok(PriorSpec::rademacher()),
        "gaussian" => Ok(PriorSpec::gaussian(normalized)),
        "uniform" => Ok(PriorSpec::uniform(normalized)),
        other => Err(cfg_err(
            path,
            format!("unknown prior family \"{other}\" (expected rademacher, gaussian, uniform)"),
        )),
    }
}

fn load_table_density(path_label: &str, file: &Path) -> Result<DensityModel> {
    let reader = std::fs::File::open(file)
        .map_err(|e| cfg_err(path_label, format!("cannot open {}: {e}", file.display())))?;
    DensityModel::from_log_table_csv(reader).map_err(|e| cfg_err(path_label, e))
}

pub fn resolve_density(
    path_label: &str,
    config: Option<&DensityConfig>,
    default: impl FnOnce() -> Result<DensityModel>,
) -> Result<DensityModel> {
    match config {
        None => default(),
        Some(DensityConfig::Name(name)) => match name.as_str() {
            "gaussian" => Ok(DensityModel::standard_gaussian()),
            "logistic" => Ok(DensityModel::logistic_unit_variance()),
            other => Err(cfg_err(
                path_label,
                format!("unknown density \"{other}\" (expected gaussian, logistic, or an inline spec)"),
            )),
        },
        Some(DensityConfig::Inline(inline)) => {
            if let Some(table) = &inline.table {
                if inline.family.is_some() {
                    return Err(cfg_err(path_label, "give either `family` or `table`, not both"));
                }
                return load_table_density(path_label, table);
            }
            let family = inline.family.as_deref().ok_or_else(|| {
                cfg_err(path_label, "inline density needs `family` or `table`")
            })?;
            let model = match family {
                "gaussian" => DensityModel::gaussian(inline.variance.unwrap_or(1.0)),
                "logistic" => match inline.scale {
                    Some(s) => DensityModel::logistic(s),
                    None => Ok(DensityModel::logistic_unit_variance()),
                },
                other => Err(Error::Config(format!("unsupported family \"{other}\""))),
            };
            model.map_err(|e| cfg_err(path_label, e))
        }
    }
}

fn resolve_noise(model: &ModelSection, disorder: &DisorderSpec) -> Result<NoisePair> {
    let off = match &model.density {
        Some(_) => resolve_density("model.density", model.density.as_ref(), || unreachable!())?,
        None => NoisePair::from_disorder(disorder)
            .map_err(|e| {
                cfg_err(
                    "model.density",
                    format!("no density given and the disorder family has none: {e}"),
                )
            })?
            .off()
            .clone(),
    };
    let diag = resolve_density("model.diag_density", model.diag_density.as_ref(), || {
        match &model.density {
            // Explicit off-diagonal density, no diagonal one: GOE convention.
            Some(_) => DensityModel::gaussian(2.0),
            None => Ok(NoisePair::from_disorder(disorder)
                .map_err(|e| cfg_err("model.diag_density", e))?
                .diag()
                .clone()),
        }
    })?;
    NoisePair::new(off, diag).map_err(|e| cfg_err("model.density", e))
}

fn nonempty_grid(path: &str, grid: Option<&Vec<f64>>) -> Result<Vec<f64>> {
    let grid = grid.ok_or_else(|| cfg_err(path, "required for this experiment"))?;
    if grid.is_empty() {
        return Err(cfg_err(path, "grid must be nonempty"));
    }
    for (i, v) in grid.iter().enumerate() {
        if !v.is_finite() {
            return Err(cfg_err(&format!("{path}[{i}]"), format!("value {v} is not finite")));
        }
    }
    Ok(grid.clone())
}

fn parse_method(params: &ParamSection) -> Result<(EvalMethod, usize)> {
    let method = match params.method.as_deref() {
        None | Some("exact") => EvalMethod::Exact,
        Some("mc") => EvalMethod::Mc,
        Some(other) => {
            return Err(cfg_err(
                "parameters.method",
                format!("unknown method \"{other}\" (expected exact or mc)"),
            ))
        }
    };
    let mc_samples = params.samples.unwrap_or(100_000);
    if method == EvalMethod::Mc && mc_samples < 2 {
        return Err(cfg_err("parameters.samples", "mc evaluation needs at least 2 samples"));
    }
    Ok((method, mc_samples))
}

fn clt_common(params: &ParamSection, method: EvalMethod) -> Result<(usize, usize)> {
    let n = params.n.ok_or_else(|| cfg_err("parameters.n", "required for this experiment"))?;
    if n < 2 {
        return Err(cfg_err("parameters.n", format!("dimension {n} must be at least 2")));
    }
    if method == EvalMethod::Exact && n > DEFAULT_EXACT_CAP {
        return Err(cfg_err(
            "parameters.n",
            format!(
                "exact enumeration is capped at N = {DEFAULT_EXACT_CAP} (2^N spin configurations); \
                 got {n}. Use \"method\": \"mc\" for larger N"
            ),
        ));
    }
    let trials =
        params.trials.ok_or_else(|| cfg_err("parameters.trials", "required for this experiment"))?;
    if trials < 100 {
        return Err(cfg_err(
            "parameters.trials",
            format!("at least 100 trials are needed for a stable distributional fit, got {trials}"),
        ));
    }
    Ok((n, trials))
}

/// Flags each beta that is at or beyond the critical point; errors unless the
/// override is set.
fn supercritical_betas(betas: &[f64], allow: bool) -> Result<Vec<bool>> {
    let mut flags = Vec::with_capacity(betas.len());
    for (i, &beta) in betas.iter().enumerate() {
        if beta < 0.0 {
            return Err(cfg_err(
                &format!("parameters.beta[{i}]"),
                format!("inverse temperature {beta} must be nonnegative"),
            ));
        }
        let hot = beta >= 1.0;
        if hot && !allow {
            return Err(cfg_err(
                &format!("parameters.beta[{i}]"),
                format!(
                    "beta = {beta} is supercritical (the Gaussian fluctuation theory requires \
                     beta < 1); set allow_supercritical = true to collect raw samples anyway"
                ),
            ));
        }
        flags.push(hot);
    }
    Ok(flags)
}

fn supercritical_lambdas(lambdas: &[f64], f_p: f64, allow: bool) -> Result<Vec<bool>> {
    let mut flags = Vec::with_capacity(lambdas.len());
    for (i, &lambda) in lambdas.iter().enumerate() {
        if lambda < 0.0 {
            return Err(cfg_err(
                &format!("parameters.lambda[{i}]"),
                format!("signal-to-noise ratio {lambda} must be nonnegative"),
            ));
        }
        let hot = lambda * f_p >= 1.0;
        if hot && !allow {
            return Err(cfg_err(
                &format!("parameters.lambda[{i}]"),
                format!(
                    "lambda·F_p = {:.6} >= 1 is supercritical (the Gaussian contiguity theory \
                     requires lambda·F_p < 1); set allow_supercritical = true to collect raw \
                     samples anyway",
                    lambda * f_p
                ),
            ));
        }
        flags.push(hot);
    }
    Ok(flags)
}

pub fn resolve(config: &ExperimentConfig) -> Result<Resolved> {
    let disorder = resolve_disorder(config.model.disorder.as_ref())?;
    let prior = resolve_prior(config.model.prior.as_ref())?;

    let mut fit = FitTolerances::default();
    let t = &config.tolerances;
    if let Some(v) = t.mean_z_max {
        fit.mean_z_max = v;
    }
    fit.mean_allowance = t.mean_allowance.unwrap_or(0.03);
    if let Some(v) = t.variance_rel_tol {
        fit.variance_rel_tol = v;
    }
    if let Some(v) = t.ks_p_min {
        fit.ks_p_min = v;
    }
    if let Some(v) = t.recenter_ks {
        fit.recenter_ks = v;
    }
    let rel_band = t.rel_band.unwrap_or(0.03);
    let identity_tol = t.identity_tol.unwrap_or(1e-10);
    for (label, value) in [
        ("tolerances.mean_z_max", fit.mean_z_max),
        ("tolerances.mean_allowance", fit.mean_allowance),
        ("tolerances.variance_rel_tol", fit.variance_rel_tol),
        ("tolerances.ks_p_min", fit.ks_p_min),
        ("tolerances.rel_band", rel_band),
        ("tolerances.identity_tol", identity_tol),
    ] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(cfg_err(label, format!("must be a nonnegative finite number, got {value}")));
        }
    }

    let params = &config.parameters;
    let mut noise = None;
    let plan = match config.experiment {
        ExperimentKind::FreeEnergyClt => {
            let betas = nonempty_grid("parameters.beta", params.beta.as_ref())?;
            let supercritical = supercritical_betas(&betas, config.allow_supercritical)?;
            let (method, mc_samples) = parse_method(params)?;
            let (n, trials) = clt_common(params, method)?;
            Plan::FreeEnergyClt { betas, supercritical, n, trials, method, mc_samples }
        }
        ExperimentKind::LoglrClt => {
            let pair = resolve_noise(&config.model, &disorder)?;
            let f_p = fisher_information(pair.off()).map_err(|e| cfg_err("model.density", e))?;
            let lambdas = nonempty_grid("parameters.lambda", params.lambda.as_ref())?;
            let supercritical =
                supercritical_lambdas(&lambdas, f_p, config.allow_supercritical)?;
            let (method, mc_samples) = parse_method(params)?;
            let (n, trials) = clt_common(params, method)?;
            let hypotheses = match &params.hypotheses {
                None => vec![Hypothesis::H0, Hypothesis::H1],
                Some(names) => {
                    if names.is_empty() {
                        return Err(cfg_err("parameters.hypotheses", "list must be nonempty"));
                    }
                    let mut out = Vec::new();
                    for (i, name) in names.iter().enumerate() {
                        out.push(match name.as_str() {
                            "h0" | "H0" => Hypothesis::H0,
                            "h1" | "H1" => Hypothesis::H1,
                            other => {
                                return Err(cfg_err(
                                    &format!("parameters.hypotheses[{i}]"),
                                    format!("unknown hypothesis \"{other}\" (expected h0 or h1)"),
                                ))
                            }
                        });
                    }
                    out
                }
            };
            noise = Some(pair);
            Plan::LoglrClt { lambdas, supercritical, hypotheses, n, trials, method, mc_samples }
        }
        ExperimentKind::SecondMoment => {
            let lambdas = nonempty_grid("parameters.lambda", params.lambda.as_ref())?;
            let mut unguarded = Vec::with_capacity(lambdas.len());
            for (i, &lambda) in lambdas.iter().enumerate() {
                let path = format!("parameters.lambda[{i}]");
                if !(0.0..1.0).contains(&lambda) {
                    return Err(cfg_err(
                        &path,
                        format!(
                            "lambda = {lambda} is outside [0, 1); the limiting second moment \
                             (1-lambda)^(-1/2) does not exist at or beyond 1"
                        ),
                    ));
                }
                let heavy = lambda > 0.9;
                if heavy && !config.allow_supercritical {
                    return Err(cfg_err(
                        &path,
                        format!(
                            "lambda = {lambda} > 0.9: the importance weights are heavy-tailed \
                             this close to 1; set allow_supercritical = true to run without \
                             the guard"
                        ),
                    ));
                }
                unguarded.push(heavy);
            }
            let n = params.n.ok_or_else(|| cfg_err("parameters.n", "required"))?;
            if n < 2 {
                return Err(cfg_err("parameters.n", format!("dimension {n} must be at least 2")));
            }
            let samples = params.samples.unwrap_or(100_000);
            if samples < 2 {
                return Err(cfg_err("parameters.samples", "need at least 2 spike pairs"));
            }
            Plan::SecondMoment { lambdas, unguarded, n, samples }
        }
        ExperimentKind::GraphIdentities => {
            if !prior.is_rademacher() {
                return Err(cfg_err(
                    "model.prior",
                    "graph-identities checks the sign-average identity, which needs the \
                     rademacher prior",
                ));
            }
            let n_list = params.n_list.clone().unwrap_or_else(|| vec![2, 3, 4]);
            if n_list.is_empty() {
                return Err(cfg_err("parameters.n_list", "list must be nonempty"));
            }
            for (i, &n) in n_list.iter().enumerate() {
                if !(2..=12).contains(&n) {
                    return Err(cfg_err(
                        &format!("parameters.n_list[{i}]"),
                        format!("the 2^N sign average is evaluated exhaustively; N = {n} is \
                                 outside 2..=12"),
                    ));
                }
            }
            let draws = params.draws.unwrap_or(20);
            if draws == 0 {
                return Err(cfg_err("parameters.draws", "need at least 1 draw"));
            }
            let max_multiplicity = params.max_multiplicity.unwrap_or(4);
            if !(1..=4).contains(&max_multiplicity) {
                return Err(cfg_err(
                    "parameters.max_multiplicity",
                    format!("expansion orders run 1..=4, got {max_multiplicity}"),
                ));
            }
            Plan::GraphIdentities {
                n_list,
                draws,
                max_multiplicity,
                allow_self_loops: params.allow_self_loops.unwrap_or(true),
            }
        }
        ExperimentKind::CutoffScan => {
            let n_list = params.n_list.clone().unwrap_or_else(|| vec![5, 6, 7]);
            if n_list.is_empty() {
                return Err(cfg_err("parameters.n_list", "list must be nonempty"));
            }
            for (i, &n) in n_list.iter().enumerate() {
                if !(2..=MAX_CUTOFF_NODES).contains(&n) {
                    return Err(cfg_err(
                        &format!("parameters.n_list[{i}]"),
                        format!("cutoff sums enumerate even subgraphs of K_N; N = {n} is \
                                 outside 2..={MAX_CUTOFF_NODES}"),
                    ));
                }
            }
            let alphas = match params.alpha.as_ref() {
                Some(_) => nonempty_grid("parameters.alpha", params.alpha.as_ref())?,
                None => vec![0.3, 0.5],
            };
            for (i, &alpha) in alphas.iter().enumerate() {
                if !(0.0..1.0).contains(&alpha) {
                    return Err(cfg_err(
                        &format!("parameters.alpha[{i}]"),
                        format!("per-edge weight alpha = {alpha} must lie in [0, 1)"),
                    ));
                }
            }
            let s_max = params.s_max.unwrap_or(10);
            if s_max == 0 {
                return Err(cfg_err("parameters.s_max", "must be at least 1"));
            }
            Plan::CutoffScan { n_list, alphas, s_max }
        }
        ExperimentKind::FisherTable => {
            let pair = resolve_noise(&config.model, &disorder)?;
            let f_p = fisher_information(pair.off()).map_err(|e| cfg_err("model.density", e))?;
            let lambdas = match params.lambda.as_ref() {
                Some(_) => nonempty_grid("parameters.lambda", params.lambda.as_ref())?,
                None => vec![0.1, 0.3, 0.5, 0.7, 0.9],
            };
            let supercritical =
                supercritical_lambdas(&lambdas, f_p, config.allow_supercritical)?;
            noise = Some(pair);
            Plan::FisherTable { lambdas, supercritical }
        }
    };

    Ok(Resolved {
        kind: config.experiment,
        disorder,
        prior,
        noise,
        plan,
        fit,
        rel_band,
        identity_tol,
        seed: config.seed,
    })
}

/// Thread-count resolution: CLI flag > config field > environment variable >
/// library default (0 lets the pool pick the core count).
pub fn resolve_threads(flag: Option<usize>, config: Option<usize>) -> Result<usize> {
    if let Some(t) = flag.or(config) {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(raw) => raw.trim().parse::<usize>().map_err(|_| {
            Error::Config(format!(
                "environment variable {THREADS_ENV} = {raw:?} is not a thread count"
            ))
        }),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(Error::Config(format!("environment variable {THREADS_ENV}: {e}"))),
    }
}
