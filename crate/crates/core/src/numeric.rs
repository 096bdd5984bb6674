//! Shared numeric kernels: stable log-sum-exp accumulation, compensated
//! summation, adaptive quadrature and finite-difference derivatives.

use crate::error::{Error, Result};

/// log(Σ exp(x_i)) over a slice, shifted by the maximum.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Streaming log-sum-exp with a running maximum, for accumulations too large
/// to buffer (2^N spin configurations). Rescales the partial sum whenever a
/// new maximum arrives, so no intermediate ever overflows.
#[derive(Clone, Debug)]
pub struct StreamingLse {
    max: f64,
    sum: f64,
    count: u64,
}

impl StreamingLse {
    pub fn new() -> Self {
        StreamingLse { max: f64::NEG_INFINITY, sum: 0.0, count: 0 }
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    /// log(Σ exp(x_i)) over everything pushed so far.
    pub fn log_sum(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }

    /// log((1/count)·Σ exp(x_i)).
    pub fn log_mean(&self) -> f64 {
        self.log_sum() - (self.count as f64).ln()
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

impl Default for StreamingLse {
    fn default() -> Self {
        Self::new()
    }
}

/// Neumaier-compensated accumulator. Used where sums of many mixed-magnitude
/// terms must hold up against 1e-10-relative identity checks.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

const MAX_QUADRATURE_DEPTH: u32 = 48;

/// Hard cap on integrand evaluations per call; exceeding it means the
/// requested tolerance sits below the integrand's own evaluation noise, and
/// no amount of refinement can honestly reach it.
const QUADRATURE_EVAL_BUDGET: u64 = 2_000_000;

struct QuadState {
    evals: u64,
    /// Residuals at the roundoff scale of the whole integral carry no
    /// information; refinement stops there even if the cascaded tolerance
    /// has been halved below it.
    noise_floor: f64,
}

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance
/// `tol`. The interval is first cut into coarse panels (so structure away
/// from the midpoint is not missed), then each panel is subdivided where the
/// local Richardson error estimate demands it.
pub fn adaptive_quadrature<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::Domain(format!(
            "quadrature interval [{a}, {b}] must be finite and increasing"
        )));
    }
    if tol <= 0.0 {
        return Err(Error::Domain("quadrature tolerance must be positive".into()));
    }
    let panels = 16;
    let h = (b - a) / panels as f64;
    let mut state = QuadState { evals: 0, noise_floor: 0.0 };
    // Coarse pass: cache panel evaluations and estimate the scale of
    // integral-of-|f| that sets the roundoff floor for refinement.
    let mut coarse = Vec::with_capacity(panels);
    let mut scale = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let hi = if k == panels - 1 { b } else { lo + h };
        let mid = 0.5 * (lo + hi);
        let flo = eval(f, lo, &mut state)?;
        let fmid = eval(f, mid, &mut state)?;
        let fhi = eval(f, hi, &mut state)?;
        scale += (hi - lo) / 6.0 * (flo.abs() + 4.0 * fmid.abs() + fhi.abs());
        coarse.push((lo, hi, flo, fmid, fhi));
    }
    state.noise_floor = 64.0 * f64::EPSILON * scale;
    let mut total = CompensatedSum::new();
    for (lo, hi, flo, fmid, fhi) in coarse {
        let whole = simpson(lo, hi, flo, fmid, fhi);
        total.add(simpson_refine(
            f,
            lo,
            hi,
            flo,
            fmid,
            fhi,
            whole,
            tol / panels as f64,
            MAX_QUADRATURE_DEPTH,
            &mut state,
        )?);
    }
    Ok(total.value())
}

/// Full-line integral of an even integrand: computed on [0, radius] and
/// doubled.
pub fn symmetric_quadrature<F: Fn(f64) -> f64>(f: &F, radius: f64, tol: f64) -> Result<f64> {
    Ok(2.0 * adaptive_quadrature(f, 0.0, radius, tol / 2.0)?)
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64, state: &mut QuadState) -> Result<f64> {
    state.evals += 1;
    if state.evals > QUADRATURE_EVAL_BUDGET {
        return Err(Error::Numeric(format!(
            "quadrature exceeded {QUADRATURE_EVAL_BUDGET} evaluations; the requested tolerance \
             is below what the integrand can be evaluated to"
        )));
    }
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::Numeric(format!("integrand returned {y} at x = {x}")))
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    state: &mut QuadState,
) -> Result<f64> {
    // Panels at floating-point resolution (kinks, support edges) cannot be
    // subdivided meaningfully and contribute below any usable tolerance.
    if b - a <= 1e-13 * (1.0 + a.abs() + b.abs()) {
        return Ok(whole);
    }
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(f, lm, state)?;
    let frm = eval(f, rm, state)?;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // 15 = 2^4 - 1: Simpson's rule is 4th order, so the two-panel estimate
    // overshoots the error of (left + right) by that factor. The cascaded
    // tolerance halves with each level while a roundoff-dominated residual
    // does not, so the global noise floor is the second way to accept.
    if delta.abs() <= 15.0 * tol || delta.abs() <= state.noise_floor {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "quadrature failed to converge on [{a}, {b}]: residual {:.3e} > {:.3e}",
            delta.abs(),
            15.0 * tol
        )));
    }
    let l = simpson_refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, state)?;
    let r = simpson_refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, state)?;
    Ok(l + r)
}

/// n-th derivative of y ↦ exp(log_p(y) − log_p(x)) at x, i.e. p⁽ⁿ⁾(x)/p(x),
/// for n in 1..=5. Central differences on the ratio (which is exactly 1 at x,
/// so cancellation stays benign) with step h = ε^{1/(n+2)}·(1+|x|) and one
/// Richardson level over the pair (2h, h).
pub fn numeric_derivative_ratio<F: Fn(f64) -> f64>(log_p: &F, n: usize, x: f64) -> Result<f64> {
    if !(1..=5).contains(&n) {
        return Err(Error::Domain(format!(
            "derivative order {n} outside supported range 1..=5"
        )));
    }
    let base = log_p(x);
    if !base.is_finite() {
        return Err(Error::Numeric(format!("log-density is {base} at x = {x}")));
    }
    let g = |y: f64| (log_p(y) - base).exp();
    let h = f64::EPSILON.powf(1.0 / (n as f64 + 2.0)) * (1.0 + x.abs());
    let coarse = central_stencil(&g, n, x, 2.0 * h);
    let fine = central_stencil(&g, n, x, h);
    let factor = 4.0; // both stencils have O(h²) leading error
    let value = (factor * fine - coarse) / (factor - 1.0);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numeric(format!(
            "finite-difference derivative of order {n} diverged at x = {x}"
        )))
    }
}

fn central_stencil<F: Fn(f64) -> f64>(g: &F, n: usize, x: f64, h: f64) -> f64 {
    match n {
        1 => (g(x + h) - g(x - h)) / (2.0 * h),
        2 => (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h),
        3 => (g(x + 2.0 * h) - 2.0 * g(x + h) + 2.0 * g(x - h) - g(x - 2.0 * h)) / (2.0 * h * h * h),
        4 => {
            (g(x + 2.0 * h) - 4.0 * g(x + h) + 6.0 * g(x) - 4.0 * g(x - h) + g(x - 2.0 * h))
                / (h * h * h * h)
        }
        5 => {
            (g(x + 3.0 * h) - 4.0 * g(x + 2.0 * h) + 5.0 * g(x + h) - 5.0 * g(x - h)
                + 4.0 * g(x - 2.0 * h)
                - g(x - 3.0 * h))
                / (2.0 * h.powi(5))
        }
        _ => unreachable!(),
    }
}
