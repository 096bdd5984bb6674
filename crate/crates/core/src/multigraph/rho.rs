//! The limiting fluctuation parameter of the multicycle expansion.
//!
//! For centered, pairwise-independent edge weights the expansion's Gaussian
//! limit has a variance assembled from three disjoint families of
//! multicycles: simple cycles of length at least three, isolated double
//! edges, and single self-loops.  Writing `f`, `g`, `f_diag` for the second
//! moments of the order-1 off-diagonal, order-2 off-diagonal, and order-1
//! diagonal weights, the three contributions are
//!
//! ```text
//! rho1 = sum_{k >= 3} f^k / (4k) = -(1/4) (log(1 - f) + f + f^2/2)
//! rho2 = g / 4
//! rho3 = f_diag / 2
//! ```
//!
//! and `rho = rho1 + rho2 + rho3` in closed form.  Specializing the moments
//! reproduces both headline predictions: half the free-energy fluctuation
//! variance, and the log-likelihood-ratio parameter `rho_L`.

use serde::Serialize;

use crate::density::FisherSet;
use crate::error::{Error, Result};

/// Second moments of the edge-weight families feeding the expansion:
/// `f = E[(P^(1))^2]`, `g = E[(P^(2))^2]`, `c3`, `c4` for orders three and
/// four, and `f_diag`, `c2_diag` for the diagonal families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionMoments {
    pub f: f64,
    pub g: f64,
    pub c3: f64,
    pub c4: f64,
    pub f_diag: f64,
    pub c2_diag: f64,
}

fn check_nonnegative(name: &str, value: f64) -> Result<f64> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::Domain(format!(
            "expansion moment {name} = {value} must be finite and >= 0"
        )));
    }
    Ok(value)
}

impl ExpansionMoments {
    /// Moments for the variance calculation alone (`rho_prediction` uses
    /// only `f`, `g`, `f_diag`); higher orders are set to zero.
    pub fn new(f: f64, g: f64, f_diag: f64) -> Result<Self> {
        Ok(ExpansionMoments {
            f: check_nonnegative("f", f)?,
            g: check_nonnegative("g", g)?,
            c3: 0.0,
            c4: 0.0,
            f_diag: check_nonnegative("f_diag", f_diag)?,
            c2_diag: 0.0,
        })
    }

    /// Replaces the higher-order second moments.
    pub fn with_higher(mut self, c3: f64, c4: f64, c2_diag: f64) -> Result<Self> {
        self.c3 = check_nonnegative("c3", c3)?;
        self.c4 = check_nonnegative("c4", c4)?;
        self.c2_diag = check_nonnegative("c2_diag", c2_diag)?;
        Ok(self)
    }

    /// Free-energy instantiation: `f = beta^2`, `g = beta^4 (w4 - 1) / 4`,
    /// no diagonal weights.  Orders three and four need the sixth and
    /// eighth disorder moments; see [`ExpansionMoments::hermite_moments`].
    pub fn free_energy(beta: f64, w4: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::Domain(format!("beta = {beta} must be finite and >= 0")));
        }
        if !w4.is_finite() || w4 < 1.0 {
            return Err(Error::Domain(format!("fourth moment w4 = {w4} must be >= 1")));
        }
        let b2 = beta * beta;
        ExpansionMoments::new(b2, b2 * b2 * (w4 - 1.0) / 4.0, 0.0)
    }

    /// Full second-moment set of the Hermite weight family under disorder
    /// with scaled moments `w4`, `w6`, `w8`:
    ///
    /// ```text
    /// c3 = beta^6  E[(u^3 - 3u)^2] / 36
    /// c4 = beta^8  E[(u^4 - 6u^2 + 6 - w4)^2] / 576
    /// ```
    pub fn hermite_moments(beta: f64, w4: f64, w6: f64, w8: f64) -> Result<Self> {
        let base = ExpansionMoments::free_energy(beta, w4)?;
        // Cauchy-Schwarz sanity: any genuine moment sequence satisfies
        // w6 >= w4^2 and w8 * w4 >= w6^2 (for unit second moment).
        if !w6.is_finite() || w6 < w4 * w4 {
            return Err(Error::Domain(format!(
                "sixth moment w6 = {w6} is inconsistent with w4 = {w4} (needs w6 >= w4^2)"
            )));
        }
        if !w8.is_finite() || w8 * w4 < w6 * w6 {
            return Err(Error::Domain(format!(
                "eighth moment w8 = {w8} is inconsistent with (w4, w6) = ({w4}, {w6})"
            )));
        }
        let b2 = beta * beta;
        let c3 = b2.powi(3) * (w6 - 6.0 * w4 + 9.0) / 36.0;
        let a = 6.0 - w4;
        let fourth_sq = w8 - 12.0 * w6 + (36.0 + 2.0 * a) * w4 - 12.0 * a + a * a;
        let c4 = b2.powi(4) * fourth_sq / 576.0;
        if c3 < -1e-12 || c4 < -1e-12 {
            return Err(Error::Domain(format!(
                "moments (w4, w6, w8) = ({w4}, {w6}, {w8}) give negative second moments"
            )));
        }
        base.with_higher(c3.max(0.0), c4.max(0.0), 0.0)
    }

    /// Hermite moments under standard Gaussian disorder
    /// (`w4, w6, w8 = 3, 15, 105`): `f = b^2`, `g = b^4/2`, `c3 = b^6/6`,
    /// `c4 = b^8/24`.
    pub fn hermite_gaussian(beta: f64) -> Result<Self> {
        ExpansionMoments::hermite_moments(beta, 3.0, 15.0, 105.0)
    }

    /// Log-likelihood-ratio instantiation from the noise Fisher
    /// functionals: `f = lambda F_p`, `g = lambda^2 G_p / 4`,
    /// `f_diag = lambda F_d`.  Orders beyond the second do not enter `rho`
    /// and are left zero.
    pub fn log_lr(lambda: f64, fisher: &FisherSet) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::Domain(format!(
                "signal-to-noise ratio lambda = {lambda} must be finite and >= 0"
            )));
        }
        ExpansionMoments::new(
            lambda * fisher.f_p,
            lambda * lambda * fisher.g_p / 4.0,
            lambda * fisher.f_d,
        )
    }
}

/// The fluctuation parameter and its three multicycle contributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoDecomposition {
    /// Total: `rho = rho1 + rho2 + rho3`.
    pub rho: f64,
    /// Simple cycles of length three and up.
    pub rho1: f64,
    /// Isolated double edges.
    pub rho2: f64,
    /// Single self-loops.
    pub rho3: f64,
}

/// Evaluates the limiting fluctuation parameter
///
/// ```text
/// rho = -(1/4) [log(1 - f) + (f - 2 f_diag) + f^2/2] + g/4
/// ```
///
/// together with its decomposition into cycle, double-edge, and self-loop
/// parts.  The two expressions are computed independently and
/// cross-checked to 1e-12 relative.
///
/// Requires `f < 1` (the geometric cycle series diverges at one).
pub fn rho_prediction(moments: &ExpansionMoments) -> Result<RhoDecomposition> {
    let f = check_nonnegative("f", moments.f)?;
    let g = check_nonnegative("g", moments.g)?;
    let f_diag = check_nonnegative("f_diag", moments.f_diag)?;
    if f >= 1.0 {
        return Err(Error::Domain(format!(
            "cycle moment f = {f} must be < 1 for the cycle series to converge"
        )));
    }
    let log1mf = (-f).ln_1p();
    let rho1 = -0.25 * (log1mf + f + 0.5 * f * f);
    let rho2 = 0.25 * g;
    let rho3 = 0.5 * f_diag;
    let rho = -0.25 * (log1mf + (f - 2.0 * f_diag) + 0.5 * f * f) + 0.25 * g;
    let parts = rho1 + rho2 + rho3;
    if (rho - parts).abs() > 1e-12 * rho.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "rho decomposition mismatch: closed form {rho} vs parts {parts}"
        )));
    }
    Ok(RhoDecomposition { rho, rho1, rho2, rho3 })
}
