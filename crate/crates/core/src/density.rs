//! Smooth symmetric noise densities and their likelihood-ratio functionals.
//!
//! A [`DensityModel`] exposes p, log p and the derivative ratios p⁽ⁿ⁾/p up to
//! order 5 (analytic for the built-in families, finite-difference otherwise).
//! On top of it sit the three quadratic functionals that control spiked-matrix
//! detection: F = ∫(p′)²/p, its diagonal counterpart, and G = ∫(p″)²/p, plus
//! the asymptotic log-LR parameter ρ_L(λ) and the optimal-test error bound.

use crate::error::{Error, Result};
use crate::numeric::{numeric_derivative_ratio, symmetric_quadrature};
use std::f64::consts::PI;

/// Relative cutoff under which the density is treated as zero when choosing
/// the quadrature window.
const SUPPORT_CUTOFF: f64 = 1e-16;
/// Absolute tolerance for the Fisher-functional quadratures.
const FISHER_TOL: f64 = 1e-10;

/// A smooth, positive, symmetric probability density on the real line.
#[derive(Clone, Debug)]
pub struct DensityModel {
    kind: DensityKind,
}

#[derive(Clone, Debug)]
enum DensityKind {
    Gaussian { sigma: f64 },
    Logistic { scale: f64 },
    Tabulated(Box<TabulatedDensity>),
}

impl DensityModel {
    /// Centered normal with the given variance.
    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::Config(format!(
                "gaussian density needs positive variance, got {variance}"
            )));
        }
        Ok(DensityModel { kind: DensityKind::Gaussian { sigma: variance.sqrt() } })
    }

    /// Standard normal.
    pub fn standard_gaussian() -> Self {
        DensityModel { kind: DensityKind::Gaussian { sigma: 1.0 } }
    }

    /// Logistic density with the given scale (variance = π²scale²/3).
    pub fn logistic(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Config(format!(
                "logistic density needs positive scale, got {scale}"
            )));
        }
        Ok(DensityModel { kind: DensityKind::Logistic { scale } })
    }

    /// Logistic density scaled to unit variance (scale = √3/π).
    pub fn logistic_unit_variance() -> Self {
        DensityModel { kind: DensityKind::Logistic { scale: 3.0_f64.sqrt() / PI } }
    }

    /// Density given as a (x, log p) table on a symmetric grid, interpolated
    /// with a natural cubic spline. Evaluation outside the grid is an error
    /// condition surfaced by the derivative and coefficient paths.
    pub fn from_log_table(points: &[(f64, f64)]) -> Result<Self> {
        TabulatedDensity::new(points).map(|t| DensityModel { kind: DensityKind::Tabulated(Box::new(t)) })
    }

    /// Read a (x, log_p) table from CSV with a `x,log_p` header row.
    pub fn from_log_table_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        {
            let headers = rdr.headers().map_err(|e| Error::Config(format!("density table: {e}")))?;
            if headers.len() < 2 || &headers[0] != "x" || &headers[1] != "log_p" {
                return Err(Error::Config(
                    "density table must have header 'x,log_p'".into(),
                ));
            }
        }
        let mut points = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Config(format!("density table: {e}")))?;
            let x: f64 = record[0]
                .parse()
                .map_err(|e| Error::Config(format!("density table x: {e}")))?;
            let lp: f64 = record[1]
                .parse()
                .map_err(|e| Error::Config(format!("density table log_p: {e}")))?;
            points.push((x, lp));
        }
        Self::from_log_table(&points)
    }

    /// log p(x). Returns −∞ outside a tabulated grid.
    pub fn log_density(&self, x: f64) -> f64 {
        match &self.kind {
            DensityKind::Gaussian { sigma } => {
                let z = x / sigma;
                -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * PI).ln()
            }
            DensityKind::Logistic { scale } => {
                // p = sech²(x/2s)/(4s); the sech form keeps both tails exact.
                let u = x / (2.0 * scale);
                -2.0 * (u.abs() + (-2.0 * u.abs()).exp().ln_1p() - 2.0_f64.ln())
                    - (4.0 * scale).ln()
            }
            DensityKind::Tabulated(t) => t.log_density(x),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// p⁽ⁿ⁾(x)/p(x) for n in 1..=5; analytic for the built-in families.
    pub fn derivative_ratio(&self, n: usize, x: f64) -> Result<f64> {
        if !(1..=5).contains(&n) {
            return Err(Error::Domain(format!(
                "derivative order {n} outside supported range 1..=5"
            )));
        }
        match &self.kind {
            DensityKind::Gaussian { sigma } => {
                // p⁽ⁿ⁾/p = (−1)ⁿ σ⁻ⁿ Heₙ(x/σ) with probabilists' Hermite Heₙ.
                let z = x / sigma;
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                Ok(sign * hermite_prob(n, z) / sigma.powi(n as i32))
            }
            DensityKind::Logistic { scale } => Ok(logistic_ratio(n, x, *scale)),
            DensityKind::Tabulated(t) => {
                if !t.contains(x) {
                    return Err(Error::Numeric(format!(
                        "x = {x} outside tabulated density range [{:.3}, {:.3}]",
                        -t.radius, t.radius
                    )));
                }
                numeric_derivative_ratio(&|y| t.log_density(y), n, x)
            }
        }
    }

    /// p⁽ⁿ⁾(x) itself (n = 0 returns p).
    pub fn derivative(&self, n: usize, x: f64) -> Result<f64> {
        if n == 0 {
            return Ok(self.density(x));
        }
        Ok(self.derivative_ratio(n, x)? * self.density(x))
    }

    /// Finite-difference p⁽ⁿ⁾/p regardless of family; cross-check path for the
    /// analytic formulas.
    pub fn numeric_derivative_ratio(&self, n: usize, x: f64) -> Result<f64> {
        numeric_derivative_ratio(&|y| self.log_density(y), n, x)
    }

    /// Half-width of the effective support: smallest power-of-two-ish radius
    /// where p drops below 1e-16·p(0). Tabulated densities report their grid
    /// half-width so quadratures never cross the interpolation boundary.
    pub fn support_radius(&self) -> Result<f64> {
        if let DensityKind::Tabulated(t) = &self.kind {
            return Ok(t.radius);
        }
        let center = self.density(0.0);
        if !(center.is_finite() && center > 0.0) {
            return Err(Error::Numeric(format!("density at 0 is {center}")));
        }
        let mut r: f64 = 1.0;
        while self.density(r) >= SUPPORT_CUTOFF * center {
            r *= 2.0;
            if r > 1e6 {
                return Err(Error::Numeric(
                    "density tail does not decay below cutoff by |x| = 1e6".into(),
                ));
            }
        }
        Ok(r)
    }

    /// ∫x²p(x)dx by quadrature (analytic families short-circuit).
    pub fn variance(&self) -> Result<f64> {
        match &self.kind {
            DensityKind::Gaussian { sigma } => Ok(sigma * sigma),
            DensityKind::Logistic { scale } => Ok(scale * scale * PI * PI / 3.0),
            DensityKind::Tabulated(_) => {
                let r = self.support_radius()?;
                symmetric_quadrature(&|x| x * x * self.density(x), r, FISHER_TOL)
            }
        }
    }

    /// Even moment ∫xᵈp(x)dx by quadrature.
    pub fn even_moment(&self, degree: u32) -> Result<f64> {
        if degree % 2 != 0 {
            return Err(Error::Domain(format!(
                "moment of odd degree {degree} vanishes by symmetry; request even degrees"
            )));
        }
        let r = self.support_radius()?;
        symmetric_quadrature(&|x| x.powi(degree as i32) * self.density(x), r, FISHER_TOL)
    }

    /// Normalization and symmetry diagnostics on a fixed grid.
    pub fn validate(&self) -> Result<DensityCheck> {
        let r = self.support_radius()?;
        let mass = symmetric_quadrature(&|x| self.density(x), r, FISHER_TOL)?;
        let mut asym: f64 = 0.0;
        let steps = 512;
        for k in 0..=steps {
            let x = r * k as f64 / steps as f64;
            asym = asym.max((self.density(x) - self.density(-x)).abs());
        }
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "density mass {mass:.12} deviates from 1 beyond 1e-9"
            )));
        }
        if asym > 1e-12 {
            return Err(Error::Config(format!(
                "density asymmetry {asym:.3e} beyond 1e-12"
            )));
        }
        Ok(DensityCheck { mass, max_asymmetry: asym, support_radius: r })
    }
}

/// Result of [`DensityModel::validate`].
#[derive(Clone, Copy, Debug)]
pub struct DensityCheck {
    pub mass: f64,
    pub max_asymmetry: f64,
    pub support_radius: f64,
}

/// Probabilists' Hermite polynomial Heₙ(z), n ≤ 5.
fn hermite_prob(n: usize, z: f64) -> f64 {
    let mut prev = 1.0; // He₀
    if n == 0 {
        return prev;
    }
    let mut cur = z; // He₁
    for k in 1..n {
        let next = z * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Logistic p⁽ⁿ⁾/p as a polynomial in t = tanh(x/2s); obtained by iterating
/// r_{n+1} = r_n′ + r_n·r_1 with r_1 = −2ut, u = 1/(2s).
fn logistic_ratio(n: usize, x: f64, scale: f64) -> f64 {
    let u = 1.0 / (2.0 * scale);
    let t = (u * x).tanh();
    let t2 = t * t;
    match n {
        1 => -2.0 * u * t,
        2 => u.powi(2) * (6.0 * t2 - 2.0),
        3 => u.powi(3) * (16.0 * t - 24.0 * t * t2),
        4 => u.powi(4) * (16.0 - 120.0 * t2 + 120.0 * t2 * t2),
        5 => u.powi(5) * (-272.0 * t + 960.0 * t * t2 - 720.0 * t * t2 * t2),
        _ => unreachable!(),
    }
}

/// Natural cubic spline over a strictly increasing symmetric grid of log p.
#[derive(Clone, Debug)]
struct TabulatedDensity {
    xs: Vec<f64>,
    ys: Vec<f64>,
    second: Vec<f64>,
    radius: f64,
}

impl TabulatedDensity {
    fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 8 {
            return Err(Error::Config(format!(
                "density table needs at least 8 points, got {}",
                points.len()
            )));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("density table x values must be strictly increasing".into()));
        }
        if ys.iter().any(|y| !y.is_finite()) || xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("density table contains non-finite entries".into()));
        }
        let lo = xs[0];
        let hi = *xs.last().unwrap();
        if (lo + hi).abs() > 1e-9 * hi.abs().max(1.0) {
            return Err(Error::Config(format!(
                "density table range [{lo}, {hi}] is not symmetric about 0"
            )));
        }
        let second = natural_spline_second_derivatives(&xs, &ys);
        Ok(TabulatedDensity { radius: hi, xs, ys, second })
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.xs[0] && x <= *self.xs.last().unwrap()
    }

    fn log_density(&self, x: f64) -> f64 {
        if !self.contains(x) {
            return f64::NEG_INFINITY;
        }
        let idx = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        };
        let (x0, x1) = (self.xs[idx], self.xs[idx + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * self.ys[idx]
            + b * self.ys[idx + 1]
            + ((a * a * a - a) * self.second[idx] + (b * b * b - b) * self.second[idx + 1])
                * h
                * h
                / 6.0
    }
}

/// Second derivatives for a natural cubic spline (tridiagonal solve).
fn natural_spline_second_derivatives(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut m = vec![0.0; n];
    let mut u = vec![0.0; n];
    for i in 1..n - 1 {
        let sig = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
        let p = sig * m[i - 1] + 2.0;
        m[i] = (sig - 1.0) / p;
        let slope_r = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        let slope_l = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
        u[i] = (6.0 * (slope_r - slope_l) / (xs[i + 1] - xs[i - 1]) - sig * u[i - 1]) / p;
    }
    for i in (0..n - 1).rev() {
        m[i] = m[i] * m[i + 1] + u[i];
    }
    m
}

/// The three detection functionals: F = ∫(p′)²/p for the off-diagonal noise,
/// the same functional for the diagonal noise, and G = ∫(p″)²/p.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct FisherSet {
    pub f_p: f64,
    pub f_d: f64,
    pub g_p: f64,
}

impl FisherSet {
    pub fn new(f_p: f64, f_d: f64, g_p: f64) -> Result<Self> {
        if !(f_p > 0.0 && f_d > 0.0 && g_p > 0.0) {
            return Err(Error::Config(format!(
                "Fisher functionals must be positive: F_p={f_p}, F_d={f_d}, G_p={g_p}"
            )));
        }
        Ok(FisherSet { f_p, f_d, g_p })
    }

    /// Compute all three functionals from an off-diagonal/diagonal density pair.
    pub fn from_densities(p: &DensityModel, p_d: &DensityModel) -> Result<Self> {
        FisherSet::new(fisher_information(p)?, fisher_information(p_d)?, second_fisher(p)?)
    }
}

/// ∫(p′(x))²/p(x) dx, the Fisher information of the location family of p.
pub fn fisher_information(p: &DensityModel) -> Result<f64> {
    let r = p.support_radius()?;
    let integrand = |x: f64| match p.derivative_ratio(1, x) {
        Ok(r1) => r1 * r1 * p.density(x),
        Err(_) => f64::NAN, // surfaces as a quadrature numeric error
    };
    symmetric_quadrature(&integrand, r, FISHER_TOL)
}

/// ∫(p″(x))²/p(x) dx.
pub fn second_fisher(p: &DensityModel) -> Result<f64> {
    let r = p.support_radius()?;
    let integrand = |x: f64| match p.derivative_ratio(2, x) {
        Ok(r2) => r2 * r2 * p.density(x),
        Err(_) => f64::NAN,
    };
    symmetric_quadrature(&integrand, r, FISHER_TOL)
}

/// Taylor coefficient of the per-entry likelihood ratio:
/// (−1)ⁿ λ^{n/2} p⁽ⁿ⁾(w) / (n!·p(w)). Orders 1..=4 apply to off-diagonal
/// entries, 1..=2 to diagonal ones.
pub fn lr_coefficient(p: &DensityModel, n: usize, lambda: f64, w: f64) -> Result<f64> {
    if !(1..=4).contains(&n) {
        return Err(Error::Domain(format!("lr coefficient order {n} outside 1..=4")));
    }
    if lambda < 0.0 {
        return Err(Error::Domain(format!("negative signal-to-noise ratio {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let factorial = [1.0, 1.0, 2.0, 6.0, 24.0][n];
    Ok(sign * lambda.powf(n as f64 / 2.0) * p.derivative_ratio(n, w)? / factorial)
}

/// Asymptotic log likelihood ratio parameter
/// ρ_L = −¼[log(1−λF) + λ(F−2F_d) + (λ²/4)(2F²−G)].
pub fn rho_l(lambda: f64, fs: &FisherSet) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::Domain(format!("negative signal-to-noise ratio {lambda}")));
    }
    let lf = lambda * fs.f_p;
    if lf >= 1.0 {
        return Err(Error::Domain(format!(
            "supercritical signal: λ·F_p = {lf:.6} ≥ 1"
        )));
    }
    let rho = -0.25
        * ((-lf).ln_1p()
            + lambda * (fs.f_p - 2.0 * fs.f_d)
            + lambda * lambda / 4.0 * (2.0 * fs.f_p * fs.f_p - fs.g_p));
    // ρ_L = ρ₁+ρ₂+ρ₃ with every part nonnegative, so a materially negative
    // value can only mean an invalid Fisher set; flag instead of clamping.
    if rho < -1e-12 {
        return Err(Error::Numeric(format!(
            "asymptotic variance parameter came out negative ({rho:.3e}); Fisher set {fs:?} is inconsistent"
        )));
    }
    Ok(rho.max(0.0))
}

/// Minimal Type-I + Type-II error of any test, erfc(√ρ/2) ∈ (0, 1].
pub fn detection_error(rho: f64) -> Result<f64> {
    if rho < 0.0 || !rho.is_finite() {
        return Err(Error::Domain(format!("detection error needs ρ ≥ 0, got {rho}")));
    }
    Ok(libm::erfc(rho.sqrt() / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_log_density_normalizes() {
        let p = DensityModel::standard_gaussian();
        let c = p.validate().unwrap();
        assert!((c.mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn logistic_unit_variance_is_unit() {
        let p = DensityModel::logistic_unit_variance();
        assert!((p.variance().unwrap() - 1.0).abs() < 1e-12);
        assert!((p.validate().unwrap().mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_ratios_follow_hermite_recurrence() {
        let p = DensityModel::gaussian(1.0).unwrap();
        let x = 1.3;
        assert!((p.derivative_ratio(1, x).unwrap() + x).abs() < 1e-14);
        assert!((p.derivative_ratio(2, x).unwrap() - (x * x - 1.0)).abs() < 1e-14);
        assert!((p.derivative_ratio(3, x).unwrap() + (x.powi(3) - 3.0 * x)).abs() < 1e-13);
        assert!(
            (p.derivative_ratio(4, x).unwrap() - (x.powi(4) - 6.0 * x * x + 3.0)).abs() < 1e-13
        );
    }

    #[test]
    fn logistic_ratios_match_finite_differences() {
        let p = DensityModel::logistic_unit_variance();
        let tol = [1e-7, 1e-6, 1e-4, 5e-3, 5e-2];
        for n in 1..=5 {
            for &x in &[0.0, 0.4, -0.9, 1.8, 3.0] {
                let analytic = p.derivative_ratio(n, x).unwrap();
                let numeric = p.numeric_derivative_ratio(n, x).unwrap();
                assert!(
                    (analytic - numeric).abs() <= tol[n - 1] * (1.0 + analytic.abs()),
                    "n={n} x={x}: analytic {analytic}, numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn fisher_information_of_standard_gaussian_is_one() {
        let p = DensityModel::standard_gaussian();
        assert!((fisher_information(&p).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fisher_information_scales_inversely_with_variance() {
        let p = DensityModel::gaussian(2.0).unwrap();
        assert!((fisher_information(&p).unwrap() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn second_fisher_of_standard_gaussian_is_two() {
        let p = DensityModel::standard_gaussian();
        assert!((second_fisher(&p).unwrap() - 2.0).abs() < 1e-7);
        let p2 = DensityModel::gaussian(2.0).unwrap();
        assert!((second_fisher(&p2).unwrap() - 0.5).abs() < 1e-7);
    }

    #[test]
    fn cauchy_schwarz_between_fisher_functionals() {
        for p in [
            DensityModel::standard_gaussian(),
            DensityModel::logistic_unit_variance(),
            DensityModel::gaussian(0.7).unwrap(),
        ] {
            let f = fisher_information(&p).unwrap();
            let g = second_fisher(&p).unwrap();
            assert!(g + 1e-9 >= f * f, "G = {g} < F² = {}", f * f);
        }
    }

    #[test]
    fn lr_coefficient_hand_values() {
        let p = DensityModel::standard_gaussian();
        // n=1, λ=0.25, w=1: (−1)·0.5·(−1) = 0.5
        assert!((lr_coefficient(&p, 1, 0.25, 1.0).unwrap() - 0.5).abs() < 1e-12);
        // n=2, λ=1, w=0: (0−1)/2 = −0.5
        assert!((lr_coefficient(&p, 2, 1.0, 0.0).unwrap() + 0.5).abs() < 1e-12);
        for n in 1..=4 {
            assert_eq!(lr_coefficient(&p, n, 0.0, 0.3).unwrap(), 0.0);
        }
    }

    #[test]
    fn lr_coefficients_match_hermite_closed_forms() {
        let p = DensityModel::standard_gaussian();
        let lambda: f64 = 0.37;
        for &w in &[-4.8f64, -2.1, 0.0, 0.9, 3.3, 5.0] {
            let sq = lambda.sqrt();
            let expected = [
                sq * w,
                lambda / 2.0 * (w * w - 1.0),
                lambda.powf(1.5) / 6.0 * (w.powi(3) - 3.0 * w),
                lambda * lambda / 24.0 * (w.powi(4) - 6.0 * w * w + 3.0),
            ];
            for n in 1..=4 {
                let got = lr_coefficient(&p, n, lambda, w).unwrap();
                assert!(
                    (got - expected[n - 1]).abs() <= 1e-9 * (1.0 + expected[n - 1].abs()),
                    "n={n} w={w}: got {got}, expected {}",
                    expected[n - 1]
                );
            }
        }
    }

    #[test]
    fn rho_l_gaussian_noise_closed_form() {
        let fs = FisherSet::new(1.0, 0.5, 2.0).unwrap();
        // λ(F−2F_d) and (λ²/4)(2F²−G) vanish, leaving −¼log(1−λ).
        let rho = rho_l(0.5, &fs).unwrap();
        assert!((rho + 0.25 * 0.5_f64.ln()).abs() < 1e-12);
        let rho3 = rho_l(0.3, &fs).unwrap();
        assert!((rho3 + 0.25 * 0.7_f64.ln()).abs() < 1e-12);
        assert_eq!(rho_l(0.0, &fs).unwrap(), 0.0);
    }

    #[test]
    fn rho_l_rejects_supercritical_signal() {
        let fs = FisherSet::new(1.0, 0.5, 2.0).unwrap();
        assert!(matches!(rho_l(1.0, &fs), Err(Error::Domain(_))));
        assert!(matches!(rho_l(1.7, &fs), Err(Error::Domain(_))));
    }

    #[test]
    fn rho_l_diverges_toward_threshold() {
        let fs = FisherSet::new(1.0, 0.5, 2.0).unwrap();
        let near = rho_l(1.0 - 1e-9, &fs).unwrap();
        assert!(near > 4.0);
    }

    #[test]
    fn detection_error_limits() {
        assert_eq!(detection_error(0.0).unwrap(), 1.0);
        let e1 = detection_error(0.17329).unwrap();
        assert!((e1 - 0.7685).abs() < 5e-4);
        let lo = detection_error(0.1).unwrap();
        let hi = detection_error(0.2).unwrap();
        assert!(hi < lo);
        assert!(detection_error(-0.1).is_err());
    }

    #[test]
    fn tabulated_gaussian_tracks_analytic() {
        let grid: Vec<(f64, f64)> = (-320..=320)
            .map(|k| {
                let x = k as f64 * 0.025;
                (x, -0.5 * x * x - 0.5 * (2.0 * PI).ln())
            })
            .collect();
        let tab = DensityModel::from_log_table(&grid).unwrap();
        let exact = DensityModel::standard_gaussian();
        for &x in &[0.0, 0.7, -1.9, 3.1] {
            assert!((tab.log_density(x) - exact.log_density(x)).abs() < 1e-8);
            let r1t = tab.derivative_ratio(1, x).unwrap();
            let r1e = exact.derivative_ratio(1, x).unwrap();
            assert!((r1t - r1e).abs() < 1e-4, "x={x}: {r1t} vs {r1e}");
        }
        let f = fisher_information(&tab).unwrap();
        assert!((f - 1.0).abs() < 1e-3, "tabulated Fisher info {f}");
    }

    #[test]
    fn tabulated_rejects_asymmetric_or_disordered_grids() {
        let bad_range: Vec<(f64, f64)> = (0..16).map(|k| (k as f64, -1.0)).collect();
        assert!(DensityModel::from_log_table(&bad_range).is_err());
        let mut bad_order: Vec<(f64, f64)> =
            (-8..=8).map(|k| (k as f64 * 0.5, -1.0)).collect();
        bad_order.swap(3, 4);
        assert!(DensityModel::from_log_table(&bad_order).is_err());
    }

    #[test]
    fn tabulated_out_of_range_is_reported() {
        let grid: Vec<(f64, f64)> = (-40..=40)
            .map(|k| {
                let x = k as f64 * 0.1;
                (x, -0.5 * x * x)
            })
            .collect();
        let tab = DensityModel::from_log_table(&grid).unwrap();
        assert!(matches!(tab.derivative_ratio(1, 7.0), Err(Error::Numeric(_))));
    }
}
