//! Random-matrix disorder and spike/spin ensembles.
//!
//! [`DisorderSpec`] describes the law of one matrix entry: the off-diagonal
//! shape is normalized so N·E[W_ij²] = 1 and the diagonal carries variance
//! w₂/N with the same family shape. [`PriorSpec`] describes the spike entry
//! law with N·E[x_i²] = 1 and a table of normalized even moments
//! μ_d = E[(√N x₁)^d]. [`SymmetricMatrix`] is the shared dense container.

use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::numeric::adaptive_quadrature;
use crate::rng::{self, context};
use rand::distr::{Distribution, Uniform};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};

/// Default highest even degree kept in the prior moment table. Expansion
/// degrees at the supported sizes stay below this (max node degree 24 plus
/// two self-loop orders).
pub const DEFAULT_MAX_MU_DEGREE: usize = 32;
/// Number of grid points for inverse-CDF sampling of density-backed families.
const QUANTILE_GRID: usize = 8193;

// ---------------------------------------------------------------------------
// Disorder
// ---------------------------------------------------------------------------

/// Built-in families for the matrix-entry law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisorderFamily {
    /// N(0, 1/N) off-diagonal, N(0, w₂/N) diagonal.
    Gaussian,
    /// ±1/√N off-diagonal (w₄ = 1).
    RademacherScaled,
    /// Uniform on [−√3, √3]/√N (w₄ = 9/5).
    UniformScaled,
    /// User-supplied smooth symmetric densities for √N·entry.
    CustomDensity,
}

/// Entry law of the Wigner disorder matrix.
#[derive(Clone, Debug)]
pub struct DisorderSpec {
    family: DisorderFamily,
    w2: f64,
    w4: f64,
    /// Density of the unit-variance off-diagonal shape √N·W_ij (LR mode).
    off_density: Option<DensityModel>,
    /// Density of √N·W_kk (variance w₂; LR mode).
    diag_density: Option<DensityModel>,
    off_table: Option<QuantileTable>,
    diag_table: Option<QuantileTable>,
}

impl DisorderSpec {
    /// Gaussian disorder with diagonal variance scale w₂ (GOE has w₂ = 2).
    pub fn gaussian(w2: f64) -> Result<Self> {
        if !(w2.is_finite() && w2 >= 0.0) {
            return Err(Error::Config(format!("diagonal variance scale w2 = {w2} must be ≥ 0")));
        }
        let diag_density =
            if w2 > 0.0 { Some(DensityModel::gaussian(w2)?) } else { None };
        Ok(DisorderSpec {
            family: DisorderFamily::Gaussian,
            w2,
            w4: 3.0,
            off_density: Some(DensityModel::standard_gaussian()),
            diag_density,
            off_table: None,
            diag_table: None,
        })
    }

    /// Gaussian Orthogonal Ensemble normalization (w₂ = 2).
    pub fn gaussian_goe() -> Self {
        DisorderSpec::gaussian(2.0).expect("GOE parameters are valid")
    }

    /// Two-point ±1/√N entries; diagonal ±√(w₂/N).
    pub fn rademacher_scaled(w2: f64) -> Result<Self> {
        if !(w2.is_finite() && w2 >= 0.0) {
            return Err(Error::Config(format!("diagonal variance scale w2 = {w2} must be ≥ 0")));
        }
        Ok(DisorderSpec {
            family: DisorderFamily::RademacherScaled,
            w2,
            w4: 1.0,
            off_density: None,
            diag_density: None,
            off_table: None,
            diag_table: None,
        })
    }

    /// Uniform entries on [−√3, √3]/√N; diagonal scaled to variance w₂/N.
    pub fn uniform_scaled(w2: f64) -> Result<Self> {
        if !(w2.is_finite() && w2 >= 0.0) {
            return Err(Error::Config(format!("diagonal variance scale w2 = {w2} must be ≥ 0")));
        }
        Ok(DisorderSpec {
            family: DisorderFamily::UniformScaled,
            w2,
            w4: 9.0 / 5.0,
            off_density: None,
            diag_density: None,
            off_table: None,
            diag_table: None,
        })
    }

    /// Disorder backed by explicit densities for the normalized entries:
    /// `off` is the law of √N·W_ij (must have unit variance), `diag` the law
    /// of √N·W_kk (its variance becomes w₂).
    pub fn custom_density(off: DensityModel, diag: DensityModel) -> Result<Self> {
        off.validate()?;
        diag.validate()?;
        let off_var = off.variance()?;
        if (off_var - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "custom off-diagonal density has variance {off_var:.8}, expected 1 (scale the density so N·E[W_ij²] = 1)"
            )));
        }
        let w2 = diag.variance()?;
        let w4 = off.even_moment(4)?;
        if w4 < 1.0 - 1e-9 {
            return Err(Error::Config(format!(
                "custom density fourth moment {w4:.8} violates w4 ≥ 1"
            )));
        }
        let off_table = QuantileTable::from_density(&off)?;
        let diag_table = QuantileTable::from_density(&diag)?;
        Ok(DisorderSpec {
            family: DisorderFamily::CustomDensity,
            w2,
            w4,
            off_density: Some(off),
            diag_density: Some(diag),
            off_table: Some(off_table),
            diag_table: Some(diag_table),
        })
    }

    pub fn family(&self) -> DisorderFamily {
        self.family
    }

    pub fn w2(&self) -> f64 {
        self.w2
    }

    pub fn w4(&self) -> f64 {
        self.w4
    }

    /// Densities of the normalized entries (√N·W_ij, √N·W_kk), required by
    /// the likelihood-ratio machinery.
    pub fn density_pair(&self) -> Result<(&DensityModel, &DensityModel)> {
        match (&self.off_density, &self.diag_density) {
            (Some(p), Some(pd)) => Ok((p, pd)),
            _ => Err(Error::Model(format!(
                "disorder family {:?} (w2 = {}) lacks a smooth density pair; likelihood ratios need gaussian or custom-density disorder with w2 > 0",
                self.family, self.w2
            ))),
        }
    }

    /// Draw one unit-variance off-diagonal shape value √N·W_ij.
    pub fn sample_unit_shape(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.off_shape_sampler().draw(rng)
    }

    fn off_shape_sampler(&self) -> ShapeSampler<'_> {
        match self.family {
            DisorderFamily::Gaussian => ShapeSampler::Gaussian,
            DisorderFamily::RademacherScaled => ShapeSampler::Rademacher,
            DisorderFamily::UniformScaled => ShapeSampler::uniform_sqrt3(),
            DisorderFamily::CustomDensity => {
                ShapeSampler::Table(self.off_table.as_ref().expect("custom spec has table"))
            }
        }
    }

    /// Sampler for √N·W_kk (already carrying the √w₂ scale).
    fn diag_shape_sampler(&self) -> DiagSampler<'_> {
        match self.family {
            DisorderFamily::CustomDensity => DiagSampler {
                inner: ShapeSampler::Table(
                    self.diag_table.as_ref().expect("custom spec has table"),
                ),
                scale: 1.0,
            },
            _ => DiagSampler { inner: self.off_shape_sampler(), scale: self.w2.sqrt() },
        }
    }
}

/// Normalized first- through fourth-moment summary of the disorder law.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct DisorderMoments {
    pub w2: f64,
    pub w4: f64,
    pub kappa4: f64,
}

/// w₂, w₄ = N²E[W_ij⁴] and the excess kurtosis κ₄ = w₄ − 3.
pub fn disorder_moments(spec: &DisorderSpec) -> DisorderMoments {
    DisorderMoments { w2: spec.w2, w4: spec.w4, kappa4: spec.w4 - 3.0 }
}

enum ShapeSampler<'a> {
    Gaussian,
    Rademacher,
    Uniform(Uniform<f64>),
    Table(&'a QuantileTable),
}

impl ShapeSampler<'_> {
    fn uniform_sqrt3() -> Self {
        let bound = 3.0_f64.sqrt();
        ShapeSampler::Uniform(Uniform::new(-bound, bound).expect("valid uniform bounds"))
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            ShapeSampler::Gaussian => rng.sample(rand_distr::StandardNormal),
            ShapeSampler::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            ShapeSampler::Uniform(u) => u.sample(rng),
            ShapeSampler::Table(t) => t.sample(rng.random::<f64>()),
        }
    }
}

struct DiagSampler<'a> {
    inner: ShapeSampler<'a>,
    scale: f64,
}

impl DiagSampler<'_> {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.scale * self.inner.draw(rng)
    }
}

// ---------------------------------------------------------------------------
// Priors
// ---------------------------------------------------------------------------

/// Built-in spike/spin entry families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorFamily {
    /// ±1/√N entries; every normalized even moment is 1.
    Rademacher,
    /// N(0, 1/N) entries; μ_d = (d−1)!!.
    Gaussian,
    /// Uniform on [−√3, √3]/√N; μ_d = 3^{d/2}/(d+1).
    Uniform,
    /// Density on [−K, K] for √N·x₁, moments by quadrature.
    BoundedCustom,
}

/// Whether spike vectors are used as drawn or divided by their norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpikeMode {
    Iid,
    Normalized,
}

/// Entry law of the spike (likelihood) or spin (free energy) vector.
#[derive(Clone, Debug)]
pub struct PriorSpec {
    family: PriorFamily,
    normalized: bool,
    /// mu[k] = μ_{2k} = E[(√N x₁)^{2k}], k = 0..=max_degree/2.
    mu: Vec<f64>,
    max_degree: usize,
    density: Option<DensityModel>,
    bound: Option<f64>,
    table: Option<QuantileTable>,
}

impl PriorSpec {
    pub fn rademacher() -> Self {
        // ±1/√N vectors have unit norm, so the flag is irrelevant.
        PriorSpec::rademacher_with_mode(true)
    }

    /// Rademacher prior with an explicit mode flag; both modes produce
    /// bit-identical vectors since the norm is exactly 1.
    pub fn rademacher_with_mode(normalized: bool) -> Self {
        let half = DEFAULT_MAX_MU_DEGREE / 2;
        PriorSpec {
            family: PriorFamily::Rademacher,
            normalized,
            mu: vec![1.0; half + 1],
            max_degree: DEFAULT_MAX_MU_DEGREE,
            density: None,
            bound: None,
            table: None,
        }
    }

    pub fn gaussian(normalized: bool) -> Self {
        PriorSpec {
            family: PriorFamily::Gaussian,
            normalized,
            mu: gaussian_mu_table(DEFAULT_MAX_MU_DEGREE),
            max_degree: DEFAULT_MAX_MU_DEGREE,
            density: None,
            bound: None,
            table: None,
        }
    }

    pub fn uniform(normalized: bool) -> Self {
        PriorSpec {
            family: PriorFamily::Uniform,
            normalized,
            mu: uniform_mu_table(DEFAULT_MAX_MU_DEGREE),
            max_degree: DEFAULT_MAX_MU_DEGREE,
            density: None,
            bound: None,
            table: None,
        }
    }

    /// Prior given by a symmetric density for √N·x₁ supported on [−bound, bound].
    /// Unit variance is required; moments integrate to 1e-10 relative accuracy.
    pub fn bounded_custom(density: DensityModel, bound: f64, normalized: bool) -> Result<Self> {
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::Config(format!("custom prior bound {bound} must be positive")));
        }
        let mass = bounded_moment(&density, 0, bound)?;
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "custom prior density mass on [−{bound}, {bound}] is {mass:.12}, expected 1"
            )));
        }
        let var = bounded_moment(&density, 2, bound)?;
        if (var - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "custom prior variance {var:.8} must be 1 so that N·E[x_i²] = 1"
            )));
        }
        let half = DEFAULT_MAX_MU_DEGREE / 2;
        let mut mu = Vec::with_capacity(half + 1);
        for k in 0..=half {
            mu.push(bounded_moment(&density, 2 * k as u32, bound)?);
        }
        let table = QuantileTable::from_density_on(&density, bound)?;
        Ok(PriorSpec {
            family: PriorFamily::BoundedCustom,
            normalized,
            mu,
            max_degree: DEFAULT_MAX_MU_DEGREE,
            density: Some(density),
            bound: Some(bound),
            table: Some(table),
        })
    }

    pub fn family(&self) -> PriorFamily {
        self.family
    }

    pub fn is_rademacher(&self) -> bool {
        self.family == PriorFamily::Rademacher
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn spike_mode(&self) -> SpikeMode {
        if self.normalized {
            SpikeMode::Normalized
        } else {
            SpikeMode::Iid
        }
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// The density behind a custom prior, if any.
    pub fn density(&self) -> Option<&DensityModel> {
        self.density.as_ref()
    }

    /// Support bound of a custom prior (for √N·x₁), if any.
    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    /// μ_d = E[(√N x₁)^d]; zero for odd d, range error past the table.
    pub fn mu(&self, degree: usize) -> Result<f64> {
        if degree % 2 == 1 {
            return Ok(0.0);
        }
        self.mu.get(degree / 2).copied().ok_or_else(|| {
            Error::Range(format!(
                "moment degree {degree} beyond table maximum {}",
                self.max_degree
            ))
        })
    }

    pub fn m4(&self) -> f64 {
        self.mu[2]
    }

    pub fn m8(&self) -> f64 {
        self.mu[4]
    }

    fn entry_sampler(&self) -> ShapeSampler<'_> {
        match self.family {
            PriorFamily::Rademacher => ShapeSampler::Rademacher,
            PriorFamily::Gaussian => ShapeSampler::Gaussian,
            PriorFamily::Uniform => ShapeSampler::uniform_sqrt3(),
            PriorFamily::BoundedCustom => {
                ShapeSampler::Table(self.table.as_ref().expect("custom prior has table"))
            }
        }
    }
}

/// Normalized moment summary (m₄ = N²E[x₁⁴], m₈ = N⁴E[x₁⁸], full even table).
#[derive(Clone, Debug, serde::Serialize)]
pub struct PriorMoments {
    pub m4: f64,
    pub m8: f64,
    /// mu[k] = μ_{2k}.
    pub mu: Vec<f64>,
}

pub fn prior_moments(prior: &PriorSpec) -> PriorMoments {
    PriorMoments { m4: prior.m4(), m8: prior.m8(), mu: prior.mu.clone() }
}

fn gaussian_mu_table(max_degree: usize) -> Vec<f64> {
    // μ_{2k} = (2k−1)!! for the standard normal.
    let mut mu = vec![1.0];
    let mut acc = 1.0;
    for k in 1..=max_degree / 2 {
        acc *= (2 * k - 1) as f64;
        mu.push(acc);
    }
    mu
}

fn uniform_mu_table(max_degree: usize) -> Vec<f64> {
    // E[U^{2k}] for U uniform on [−√3, √3]: 3^k / (2k+1).
    (0..=max_degree / 2).map(|k| 3.0_f64.powi(k as i32) / (2 * k + 1) as f64).collect()
}

/// ∫_{−K}^{K} x^d q(x) dx to 1e-10 relative accuracy (two-pass tolerance).
fn bounded_moment(density: &DensityModel, degree: u32, bound: f64) -> Result<f64> {
    let f = |x: f64| x.powi(degree as i32) * density.density(x);
    let rough = adaptive_quadrature(&f, -bound, bound, 1e-6)?;
    adaptive_quadrature(&f, -bound, bound, 1e-10 * rough.abs().max(1.0))
}

// ---------------------------------------------------------------------------
// Symmetric matrix container
// ---------------------------------------------------------------------------

/// Dense symmetric matrix stored as the row-major upper triangle
/// (diagonal included), so W_ij == W_ji holds by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix { n, data: vec![0.0; n * (n + 1) / 2] }
    }

    /// Build from an entry function evaluated on the upper triangle (i ≤ j).
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymmetricMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                let idx = m.index(i, j);
                m.data[idx] = v;
            }
        }
        m
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        a * self.n - a * (a + 1) / 2 + b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let idx = self.index(i, j);
        self.data[idx] = value;
    }

    /// Add scale·x_i·x_j to every entry (the rank-one spike deformation).
    pub fn add_rank_one(&mut self, scale: f64, x: &[f64]) {
        assert_eq!(x.len(), self.n, "rank-one update dimension mismatch");
        for i in 0..self.n {
            for j in i..self.n {
                let idx = self.index(i, j);
                self.data[idx] += scale * x[i] * x[j];
            }
        }
    }

    /// New matrix with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        SymmetricMatrix { n: self.n, data: self.data.iter().map(|v| v * factor).collect() }
    }

    /// Full row-major n×n copy (contiguous rows for the scan kernels).
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.get(i, j);
                dense[i * self.n + j] = v;
                dense[j * self.n + i] = v;
            }
        }
        dense
    }

    /// y = W·v.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for j in i..self.n {
                let w = self.get(i, j);
                y[i] += w * v[j];
                if i != j {
                    y[j] += w * v[i];
                }
            }
        }
        y
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Flat binary layout: u64 little-endian node count, then the row-major
    /// upper triangle (diagonal included) as f64 little-endian.
    pub fn write_binary<Wr: Write>(&self, mut out: Wr) -> Result<()> {
        out.write_all(&(self.n as u64).to_le_bytes())?;
        for v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; 8];
        input.read_exact(&mut header)?;
        let n = u64::from_le_bytes(header) as usize;
        if n == 0 || n > 100_000 {
            return Err(Error::Config(format!("matrix header n = {n} out of range")));
        }
        let len = n * (n + 1) / 2;
        let mut data = Vec::with_capacity(len);
        let mut buf = [0u8; 8];
        for _ in 0..len {
            input.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        let m = SymmetricMatrix { n, data };
        if !m.all_finite() {
            return Err(Error::Config("matrix file contains non-finite entries".into()));
        }
        Ok(m)
    }

    /// Debug CSV: header `i,j,value`, one row per upper-triangle entry.
    pub fn write_csv<Wr: Write>(&self, out: Wr) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "value"]).map_err(csv_err)?;
        for i in 0..self.n {
            for j in i..self.n {
                w.write_record([i.to_string(), j.to_string(), format!("{:.17e}", self.get(i, j))])
                    .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Draw a Wigner matrix: upper triangle filled lexicographically, off-diagonal
/// variance 1/N, diagonal variance w₂/N. Bit-identical for fixed (spec, N, seed).
pub fn sample_wigner(spec: &DisorderSpec, n: usize, seed: u64) -> Result<SymmetricMatrix> {
    if n < 2 {
        return Err(Error::Config(format!("matrix size N = {n} must be at least 2")));
    }
    let mut rng = rng::stream(seed, context::DISORDER, 0);
    let off = spec.off_shape_sampler();
    let diag = spec.diag_shape_sampler();
    let scale = 1.0 / (n as f64).sqrt();
    Ok(SymmetricMatrix::from_fn(n, |i, j| {
        if i == j {
            scale * diag.draw(&mut rng)
        } else {
            scale * off.draw(&mut rng)
        }
    }))
}

/// Draw a spike/spin vector with E[x_i²] = 1/N; divides by the Euclidean norm
/// when the prior is normalized. An exactly zero draw is returned as the zero
/// vector, encoding the convention x_i x_j/‖x‖² = 0.
pub fn sample_spike(prior: &PriorSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Config("spike dimension must be positive".into()));
    }
    let mut rng = rng::stream(seed, context::SPIKE, 0);
    Ok(sample_spike_with(prior, n, &mut rng))
}

/// Spike draw on a caller-provided stream (used by trial harnesses that fold
/// several draws into one stream).
pub fn sample_spike_with(prior: &PriorSpec, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let sampler = prior.entry_sampler();
    let scale = 1.0 / (n as f64).sqrt();
    let mut x: Vec<f64> = (0..n).map(|_| scale * sampler.draw(rng)).collect();
    // Rademacher vectors already have unit norm; skipping the division keeps
    // them bit-identical between iid and normalized modes.
    if prior.normalized && !prior.is_rademacher() {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut x {
                *v /= norm;
            }
        }
    }
    x
}

// ---------------------------------------------------------------------------
// Sub-Gaussian check
// ---------------------------------------------------------------------------

/// One grid point of the moment-generating-function comparison.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct SubgaussianRow {
    pub alpha: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    /// estimate − bound (negative is good).
    pub excess: f64,
}

/// Outcome of [`verify_strict_subgaussian`].
#[derive(Clone, Debug, serde::Serialize)]
pub struct SubgaussianReport {
    pub rows: Vec<SubgaussianRow>,
    pub max_excess: f64,
    /// True iff estimate ≤ exp(α²/2) + 3·stderr at every grid point.
    pub pass: bool,
}

/// Monte Carlo check of E[e^{αz}] ≤ e^{α²/2} for z = √N·W_ij.
pub fn verify_strict_subgaussian(
    spec: &DisorderSpec,
    alpha_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<SubgaussianReport> {
    let sampler = spec.off_shape_sampler();
    verify_strict_subgaussian_with(|rng| sampler.draw(rng), alpha_grid, samples, seed)
}

/// Same check for an arbitrary unit-variance symmetric law given by a sampler
/// closure (used to exhibit laws that are *not* strictly sub-Gaussian).
pub fn verify_strict_subgaussian_with(
    mut draw: impl FnMut(&mut ChaCha8Rng) -> f64,
    alpha_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<SubgaussianReport> {
    if alpha_grid.is_empty() {
        return Err(Error::Config("sub-Gaussian check needs a nonempty alpha grid".into()));
    }
    if samples < 2 {
        return Err(Error::Config("sub-Gaussian check needs at least 2 samples".into()));
    }
    let mut rng = rng::stream(seed, context::SUBGAUSSIAN, 0);
    let draws: Vec<f64> = (0..samples).map(|_| draw(&mut rng)).collect();
    let mut rows = Vec::with_capacity(alpha_grid.len());
    let mut max_excess = f64::NEG_INFINITY;
    let mut pass = true;
    for &alpha in alpha_grid {
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for &z in &draws {
            let e = (alpha * z).exp();
            sum += e;
            sumsq += e * e;
        }
        let m = samples as f64;
        let estimate = sum / m;
        let var = (sumsq / m - estimate * estimate).max(0.0) * m / (m - 1.0);
        let stderr = (var / m).sqrt();
        let bound = (alpha * alpha / 2.0).exp();
        let excess = estimate - bound;
        max_excess = max_excess.max(excess);
        if estimate > bound + 3.0 * stderr {
            pass = false;
        }
        rows.push(SubgaussianRow { alpha, estimate, stderr, bound, excess });
    }
    Ok(SubgaussianReport { rows, max_excess, pass })
}

// ---------------------------------------------------------------------------
// Inverse-CDF table for density-backed families
// ---------------------------------------------------------------------------

/// Piecewise-linear inverse CDF on a uniform grid over the effective support.
#[derive(Clone, Debug)]
struct QuantileTable {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl QuantileTable {
    fn from_density(p: &DensityModel) -> Result<Self> {
        QuantileTable::from_density_on(p, p.support_radius()?)
    }

    fn from_density_on(p: &DensityModel, radius: f64) -> Result<Self> {
        let n = QUANTILE_GRID;
        let h = 2.0 * radius / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|k| -radius + k as f64 * h).collect();
        let ps: Vec<f64> = xs.iter().map(|&x| p.density(x).max(0.0)).collect();
        let mut cdf = Vec::with_capacity(n);
        cdf.push(0.0);
        let mut acc = 0.0;
        for k in 1..n {
            acc += 0.5 * h * (ps[k - 1] + ps[k]);
            cdf.push(acc);
        }
        let total = *cdf.last().unwrap();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::Numeric(format!("density mass on sampling grid is {total}")));
        }
        for c in &mut cdf {
            *c /= total;
        }
        Ok(QuantileTable { xs, cdf })
    }

    /// Map u ∈ [0, 1) to a sample by linear interpolation of the inverse CDF.
    fn sample(&self, u: f64) -> f64 {
        let idx = match self.cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        let idx = idx.min(self.cdf.len() - 2);
        let (c0, c1) = (self.cdf[idx], self.cdf[idx + 1]);
        if c1 <= c0 {
            return self.xs[idx];
        }
        let t = ((u - c0) / (c1 - c0)).clamp(0.0, 1.0);
        self.xs[idx] + t * (self.xs[idx + 1] - self.xs[idx])
    }
}
