//! Edge-weight families attached to a disorder realization, the weight
//! product `Z(γ)`, prior factors `Y(γ)`, and the pairwise-moment machinery
//! used to decide when two multicycles are uncorrelated.

use rand::Rng as _;

use crate::ensembles::{sample_spike_with, PriorSpec, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::rng;

use super::rho::ExpansionMoments;
use super::{graph_stats, Multigraph};

/// Largest off-diagonal weight order carried by a weight sample.
pub const MAX_OFF_ORDER: u8 = 4;
/// Largest diagonal weight order carried by a weight sample.
pub const MAX_DIAG_ORDER: u8 = 2;

/// One realization of per-edge weights: four symmetric off-diagonal families
/// `P^(1..4)_ij` and two diagonal families `P^(1..2)_kk`.  Order-zero weights
/// are implicitly one.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeightSample {
    n: usize,
    off: [Vec<f64>; 4],
    diag: [Vec<f64>; 2],
}

impl EdgeWeightSample {
    /// All-zero weights on `n` nodes.
    pub fn zeros(n: usize) -> Self {
        EdgeWeightSample {
            n,
            off: std::array::from_fn(|_| vec![0.0; n * n]),
            diag: std::array::from_fn(|_| vec![0.0; n]),
        }
    }

    /// Builds weights from closures `off_fn(order, i, j)` (called once per
    /// unordered pair with `i < j`) and `diag_fn(order, k)`.
    pub fn from_fns(
        n: usize,
        mut off_fn: impl FnMut(u8, usize, usize) -> f64,
        mut diag_fn: impl FnMut(u8, usize) -> f64,
    ) -> Self {
        let mut w = EdgeWeightSample::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                for order in 1..=MAX_OFF_ORDER {
                    w.set_off(order, i, j, off_fn(order, i, j));
                }
            }
        }
        for k in 0..n {
            for order in 1..=MAX_DIAG_ORDER {
                w.set_diag(order, k, diag_fn(order, k));
            }
        }
        w
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Off-diagonal weight of the given order (1..=4) on pair `{i, j}`.
    pub fn off(&self, order: u8, i: usize, j: usize) -> f64 {
        assert!((1..=MAX_OFF_ORDER).contains(&order), "off-diagonal order {order} out of 1..=4");
        assert!(i != j && i < self.n && j < self.n, "pair ({i}, {j}) out of range");
        self.off[usize::from(order) - 1][i * self.n + j]
    }

    /// Diagonal weight of the given order (1..=2) at node `k`.
    pub fn diag(&self, order: u8, k: usize) -> f64 {
        assert!((1..=MAX_DIAG_ORDER).contains(&order), "diagonal order {order} out of 1..=2");
        assert!(k < self.n, "node {k} out of range");
        self.diag[usize::from(order) - 1][k]
    }

    /// Sets the off-diagonal weight symmetrically on `{i, j}`.
    pub fn set_off(&mut self, order: u8, i: usize, j: usize, value: f64) {
        assert!((1..=MAX_OFF_ORDER).contains(&order), "off-diagonal order {order} out of 1..=4");
        assert!(i != j && i < self.n && j < self.n, "pair ({i}, {j}) out of range");
        let fam = &mut self.off[usize::from(order) - 1];
        fam[i * self.n + j] = value;
        fam[j * self.n + i] = value;
    }

    pub fn set_diag(&mut self, order: u8, k: usize, value: f64) {
        assert!((1..=MAX_DIAG_ORDER).contains(&order), "diagonal order {order} out of 1..=2");
        assert!(k < self.n, "node {k} out of range");
        self.diag[usize::from(order) - 1][k] = value;
    }

    /// Independent uniform `[-1, 1]` weights in every family; a generic
    /// stand-in for identity tests that must hold for arbitrary weights.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut r = rng::stream(seed, rng::context::DISORDER, 1);
        let mut w = EdgeWeightSample::zeros(n);
        for order in 1..=MAX_OFF_ORDER {
            for i in 0..n {
                for j in (i + 1)..n {
                    w.set_off(order, i, j, r.random_range(-1.0..=1.0));
                }
            }
        }
        for order in 1..=MAX_DIAG_ORDER {
            for k in 0..n {
                w.set_diag(order, k, r.random_range(-1.0..=1.0));
            }
        }
        w
    }
}

/// Hermite-family weights for the centered quadratic-interaction free
/// energy: with `u = sqrt(N) W_ij`,
///
/// ```text
/// P^(1) = beta u
/// P^(2) = (beta^2 / 2) (u^2 - 1)
/// P^(3) = (beta^3 / 6) (u^3 - 3u)
/// P^(4) = (beta^4 / 24) (u^4 - 6u^2 + 6 - w4)
/// ```
///
/// where `w4` is the fourth moment of the scaled off-diagonal disorder.
/// The first three are probabilists' Hermite polynomials; the fourth is
/// recentered so that it has mean zero under the actual disorder law.
/// Diagonal weights are identically zero because the interaction excludes
/// self-couplings.
pub fn hermite_weights(w: &SymmetricMatrix, beta: f64, w4: f64) -> Result<EdgeWeightSample> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::Domain(format!("hermite weights need beta >= 0, got {beta}")));
    }
    if !w4.is_finite() || w4 < 1.0 {
        return Err(Error::Domain(format!(
            "fourth moment w4 = {w4} must be finite and >= 1"
        )));
    }
    let n = w.n();
    let sqrt_n = (n as f64).sqrt();
    let b2 = beta * beta;
    let mut sample = EdgeWeightSample::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let u = sqrt_n * w.get(i, j);
            if !u.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite disorder entry at ({i}, {j})"
                )));
            }
            let u2 = u * u;
            sample.set_off(1, i, j, beta * u);
            sample.set_off(2, i, j, 0.5 * b2 * (u2 - 1.0));
            sample.set_off(3, i, j, b2 * beta / 6.0 * (u2 - 3.0) * u);
            sample.set_off(4, i, j, b2 * b2 / 24.0 * (u2 * u2 - 6.0 * u2 + 6.0 - w4));
        }
    }
    Ok(sample)
}

/// The weight product `Z(γ) = prod_{i<j} P^(m_ij)_ij * prod_k P^(m_kk)_kk`
/// over the edges of `γ` (empty product = 1).
///
/// Multiplicities above 4 off-diagonal or 2 diagonal have no attached weight
/// family and are a model error.
pub fn graph_weight(graph: &Multigraph, weights: &EdgeWeightSample) -> Result<f64> {
    if graph.n() > weights.n() {
        return Err(Error::Config(format!(
            "graph on {} nodes does not fit weights on {} nodes",
            graph.n(),
            weights.n()
        )));
    }
    let mut product = 1.0;
    for (i, j, m) in graph.edges() {
        if i == j {
            if m > MAX_DIAG_ORDER {
                return Err(Error::Model(format!(
                    "self-loop multiplicity {m} at node {i} exceeds the weight family cap {MAX_DIAG_ORDER}"
                )));
            }
            product *= weights.diag(m, i);
        } else {
            if m > MAX_OFF_ORDER {
                return Err(Error::Model(format!(
                    "multiplicity {m} on pair ({i}, {j}) exceeds the weight family cap {MAX_OFF_ORDER}"
                )));
            }
            product *= weights.off(m, i, j);
        }
    }
    Ok(product)
}

/// How the prior factor `Y(γ)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorFactorMode {
    /// Exact product of per-node moments `prod_k mu_{d_k}` for independent
    /// entries.
    IidAnalytic,
    /// Monte Carlo estimate of `E[prod_k (sqrt(N) x_k / |x|)^{d_k}]` for
    /// norm-constrained spikes.
    NormalizedMc,
}

/// A prior factor together with its Monte Carlo standard error (absent for
/// analytic evaluations, zero when the value is exact by symmetry).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorFactor {
    pub value: f64,
    pub stderr: Option<f64>,
}

/// Evaluates the prior factor `Y(γ)` of a multigraph under the given prior.
///
/// Any node of odd degree forces `Y(γ) = 0` exactly in both modes: entry
/// distributions are symmetric, so odd coordinate powers integrate to zero
/// (for the normalized law too, since the norm is sign-invariant).  The
/// Rademacher prior is always evaluated analytically — its normalized and
/// iid factors coincide (every even power of a sign is one).
///
/// The ambient dimension is `graph.n()`: isolated nodes contribute degree
/// zero but still count toward the spike length in the normalized mode.
pub fn prior_factor(
    graph: &Multigraph,
    prior: &PriorSpec,
    mode: PriorFactorMode,
    samples: usize,
    seed: u64,
) -> Result<PriorFactor> {
    let degrees = graph.degrees();
    if degrees.iter().any(|&d| d % 2 == 1) {
        let stderr = match mode {
            PriorFactorMode::IidAnalytic => None,
            PriorFactorMode::NormalizedMc => Some(0.0),
        };
        return Ok(PriorFactor { value: 0.0, stderr });
    }
    match mode {
        PriorFactorMode::IidAnalytic => {
            let mut value = 1.0;
            for &d in &degrees {
                if d > 0 {
                    value *= prior.mu(d as usize)?;
                }
            }
            Ok(PriorFactor { value, stderr: None })
        }
        PriorFactorMode::NormalizedMc => {
            if prior.is_rademacher() {
                // Exact: each factor is a sign raised to an even power.
                return Ok(PriorFactor { value: 1.0, stderr: Some(0.0) });
            }
            if samples == 0 {
                return Err(Error::Config(
                    "normalized-mc prior factor needs at least one sample".into(),
                ));
            }
            if degrees.iter().all(|&d| d == 0) {
                return Ok(PriorFactor { value: 1.0, stderr: Some(0.0) });
            }
            let n = graph.n();
            let sqrt_n = (n as f64).sqrt();
            let mut r = rng::stream(seed, rng::context::MC, 0);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..samples {
                let x = sample_spike_with(prior, n, &mut r);
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let term = if norm == 0.0 {
                    0.0
                } else {
                    let mut product = 1.0;
                    for (k, &d) in degrees.iter().enumerate() {
                        if d > 0 {
                            product *= (sqrt_n * x[k] / norm).powi(d as i32);
                        }
                    }
                    product
                };
                sum += term;
                sum_sq += term * term;
            }
            let m = samples as f64;
            let mean = sum / m;
            let var = (sum_sq / m - mean * mean).max(0.0);
            let stderr = if samples > 1 { (var / (m - 1.0)).sqrt() } else { var.sqrt() };
            Ok(PriorFactor { value: mean, stderr: Some(stderr) })
        }
    }
}

/// Table of pairwise weight moments `E[P^(a) P^(b)]` shared by all
/// off-diagonal pairs, plus the diagonal analogue, with order zero denoting
/// the constant weight one.  Entries are optional so partially known
/// families surface a model error instead of a silent wrong answer.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    off: [[Option<f64>; 5]; 5],
    diag: [[Option<f64>; 3]; 3],
}

impl MomentTable {
    /// Table knowing only `E[1 * 1] = 1`.
    pub fn new() -> Self {
        let mut off = [[None; 5]; 5];
        let mut diag = [[None; 3]; 3];
        off[0][0] = Some(1.0);
        diag[0][0] = Some(1.0);
        MomentTable { off, diag }
    }

    /// Records `E[P^(a) P^(b)]` for off-diagonal weights (symmetrically).
    pub fn set_off(&mut self, a: u8, b: u8, value: f64) -> Result<()> {
        if a > MAX_OFF_ORDER || b > MAX_OFF_ORDER {
            return Err(Error::Model(format!(
                "off-diagonal moment order ({a}, {b}) exceeds the cap {MAX_OFF_ORDER}"
            )));
        }
        self.off[usize::from(a)][usize::from(b)] = Some(value);
        self.off[usize::from(b)][usize::from(a)] = Some(value);
        Ok(())
    }

    /// Records `E[P_d^(a) P_d^(b)]` for diagonal weights (symmetrically).
    pub fn set_diag(&mut self, a: u8, b: u8, value: f64) -> Result<()> {
        if a > MAX_DIAG_ORDER || b > MAX_DIAG_ORDER {
            return Err(Error::Model(format!(
                "diagonal moment order ({a}, {b}) exceeds the cap {MAX_DIAG_ORDER}"
            )));
        }
        self.diag[usize::from(a)][usize::from(b)] = Some(value);
        self.diag[usize::from(b)][usize::from(a)] = Some(value);
        Ok(())
    }

    pub fn off_moment(&self, a: u8, b: u8) -> Result<f64> {
        if a > MAX_OFF_ORDER || b > MAX_OFF_ORDER {
            return Err(Error::Model(format!(
                "off-diagonal moment order ({a}, {b}) exceeds the cap {MAX_OFF_ORDER}"
            )));
        }
        self.off[usize::from(a)][usize::from(b)].ok_or_else(|| {
            Error::Model(format!(
                "no tabulated moment E[P^({a}) P^({b})] for off-diagonal weights"
            ))
        })
    }

    pub fn diag_moment(&self, a: u8, b: u8) -> Result<f64> {
        if a > MAX_DIAG_ORDER || b > MAX_DIAG_ORDER {
            return Err(Error::Model(format!(
                "diagonal moment order ({a}, {b}) exceeds the cap {MAX_DIAG_ORDER}"
            )));
        }
        self.diag[usize::from(a)][usize::from(b)].ok_or_else(|| {
            Error::Model(format!(
                "no tabulated moment E[P_d^({a}) P_d^({b})] for diagonal weights"
            ))
        })
    }

    /// Moment table of the Hermite weight family under Gaussian disorder:
    /// distinct orders are orthogonal, every order is centered, and equal
    /// orders have the second moments of
    /// [`ExpansionMoments::hermite_gaussian`].  Diagonal weights are
    /// identically zero.
    pub fn hermite_gaussian(beta: f64) -> Result<Self> {
        let m = ExpansionMoments::hermite_gaussian(beta)?;
        let mut t = MomentTable::new();
        let diagonal = [1.0, m.f, m.g, m.c3, m.c4];
        for a in 0..=MAX_OFF_ORDER {
            for b in 0..=MAX_OFF_ORDER {
                let value = if a == b { diagonal[usize::from(a)] } else { 0.0 };
                t.set_off(a, b, value)?;
            }
        }
        for a in 0..=MAX_DIAG_ORDER {
            for b in 0..=MAX_DIAG_ORDER {
                let value = if a == 0 && b == 0 { 1.0 } else { 0.0 };
                t.set_diag(a, b, value)?;
            }
        }
        Ok(t)
    }
}

impl Default for MomentTable {
    fn default() -> Self {
        MomentTable::new()
    }
}

/// Decides whether `E[Z(γ) Z(γ')] = 0` using the per-pair factorization
/// over independent edges: the expectation factors as a product of pairwise
/// moments `E[P^(a) P^(b)]` over the union of the two supports, so the
/// graphs are orthogonal exactly when some factor vanishes.
///
/// Every factor is looked up before deciding, so a missing moment anywhere
/// in the union is a model error even if another factor is already zero.
pub fn is_orthogonal(a: &Multigraph, b: &Multigraph, table: &MomentTable) -> Result<bool> {
    let mut pairs: Vec<(usize, usize)> = a.support();
    pairs.extend(b.support());
    pairs.sort_unstable();
    pairs.dedup();
    let mut any_zero = false;
    for (i, j) in pairs {
        let ma = a.multiplicity(i, j);
        let mb = b.multiplicity(i, j);
        let factor = if i == j {
            table.diag_moment(ma, mb)?
        } else {
            table.off_moment(ma, mb)?
        };
        if factor == 0.0 {
            any_zero = true;
        }
    }
    Ok(any_zero)
}

/// Exact variance of the weight product over the disorder:
/// `E[Z(γ)^2] = f^{n_1} g^{n_2} c3^{n_3} c4^{n_4} * f_diag^{l_1} c2_diag^{l_2}`
/// where `n_r` counts off-diagonal pairs of multiplicity `r` and `l_r`
/// counts self-loops of multiplicity `r`.  Centered weights make this the
/// variance of `Z(γ)`.
pub fn multicycle_variance(graph: &Multigraph, moments: &ExpansionMoments) -> Result<f64> {
    let stats = graph_stats(graph);
    for r in (usize::from(MAX_OFF_ORDER) + 1)..=stats.pair_mult_counts.len() {
        if stats.pairs_with_multiplicity(r) > 0 {
            return Err(Error::Model(format!(
                "no second moment for off-diagonal multiplicity {r}"
            )));
        }
    }
    for r in (usize::from(MAX_DIAG_ORDER) + 1)..=stats.loop_mult_counts.len() {
        if stats.loops_with_multiplicity(r) > 0 {
            return Err(Error::Model(format!(
                "no second moment for self-loop multiplicity {r}"
            )));
        }
    }
    let powers = [
        (moments.f, stats.pairs_with_multiplicity(1)),
        (moments.g, stats.pairs_with_multiplicity(2)),
        (moments.c3, stats.pairs_with_multiplicity(3)),
        (moments.c4, stats.pairs_with_multiplicity(4)),
        (moments.f_diag, stats.loops_with_multiplicity(1)),
        (moments.c2_diag, stats.loops_with_multiplicity(2)),
    ];
    let mut value = 1.0;
    for (base, count) in powers {
        if count > 0 {
            value *= base.powi(count as i32);
        }
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::super::{triangle, Multigraph};
    use super::*;

    fn constant_weights(n: usize, off: [f64; 4], diag: [f64; 2]) -> EdgeWeightSample {
        EdgeWeightSample::from_fns(
            n,
            |order, _, _| off[usize::from(order) - 1],
            |order, _| diag[usize::from(order) - 1],
        )
    }

    #[test]
    fn hermite_weights_at_zero_disorder() {
        let w = SymmetricMatrix::zeros(3);
        let beta = 0.7;
        let w4 = 1.8;
        let s = hermite_weights(&w, beta, w4).unwrap();
        let b2 = beta * beta;
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert_eq!(s.off(1, i, j), 0.0);
                assert!((s.off(2, i, j) + 0.5 * b2).abs() < 1e-15);
                assert_eq!(s.off(3, i, j), 0.0);
                let expect4 = b2 * b2 / 24.0 * (6.0 - w4);
                assert!((s.off(4, i, j) - expect4).abs() < 1e-15);
            }
            assert_eq!(s.diag(1, i), 0.0);
            assert_eq!(s.diag(2, i), 0.0);
        }
    }

    #[test]
    fn hermite_weights_match_polynomials_at_a_known_entry() {
        let n = 4;
        let mut w = SymmetricMatrix::zeros(n);
        w.set(0, 1, 0.9); // u = 2 * 0.9 = 1.8
        let beta = 0.5;
        let s = hermite_weights(&w, beta, 3.0).unwrap();
        let u: f64 = 1.8;
        assert!((s.off(1, 0, 1) - beta * u).abs() < 1e-14);
        assert!((s.off(2, 0, 1) - 0.125 * (u * u - 1.0)).abs() < 1e-14);
        assert!((s.off(3, 0, 1) - beta.powi(3) / 6.0 * (u.powi(3) - 3.0 * u)).abs() < 1e-14);
        let he4 = u.powi(4) - 6.0 * u * u + 3.0;
        assert!((s.off(4, 0, 1) - beta.powi(4) / 24.0 * he4).abs() < 1e-14);
        // Symmetric access.
        assert_eq!(s.off(3, 1, 0), s.off(3, 0, 1));
    }

    #[test]
    fn hermite_weights_reject_bad_parameters() {
        let w = SymmetricMatrix::zeros(3);
        assert!(matches!(hermite_weights(&w, -0.1, 3.0), Err(Error::Domain(_))));
        assert!(matches!(hermite_weights(&w, 0.5, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn graph_weight_of_empty_graph_is_one() {
        let weights = constant_weights(4, [2.0, 3.0, 5.0, 7.0], [11.0, 13.0]);
        let g = Multigraph::empty(4);
        assert_eq!(graph_weight(&g, &weights).unwrap(), 1.0);
    }

    #[test]
    fn graph_weight_multiplies_edge_families() {
        let weights = constant_weights(4, [2.0, 3.0, 5.0, 7.0], [11.0, 13.0]);
        // Triangle of single edges: 2^3.
        let t = triangle(4, 0, 1, 2).unwrap();
        assert_eq!(graph_weight(&t, &weights).unwrap(), 8.0);
        // Mixed: single + double + self-loop of order 2.
        let g = Multigraph::from_edges(4, &[(0, 1, 1), (1, 2, 2), (3, 3, 2)]).unwrap();
        assert_eq!(graph_weight(&g, &weights).unwrap(), 2.0 * 3.0 * 13.0);
    }

    #[test]
    fn graph_weight_is_multiplicative_over_disjoint_supports() {
        let weights = EdgeWeightSample::random(6, 31);
        let a = Multigraph::from_edges(6, &[(0, 1, 2), (1, 2, 1), (0, 2, 1)]).unwrap();
        let b = Multigraph::from_edges(6, &[(3, 4, 4), (5, 5, 1)]).unwrap();
        let mut union_edges: Vec<(usize, usize, u8)> = a.edges().collect();
        union_edges.extend(b.edges());
        let union = Multigraph::from_edges(6, &union_edges).unwrap();
        let za = graph_weight(&a, &weights).unwrap();
        let zb = graph_weight(&b, &weights).unwrap();
        let zu = graph_weight(&union, &weights).unwrap();
        assert!((zu - za * zb).abs() <= 1e-12 * zu.abs().max(1.0));
    }

    #[test]
    fn graph_weight_rejects_over_cap_multiplicities() {
        let weights = constant_weights(3, [1.0; 4], [1.0; 2]);
        let g5 = Multigraph::from_edges(3, &[(0, 1, 5)]).unwrap();
        assert!(matches!(graph_weight(&g5, &weights), Err(Error::Model(_))));
        let loop3 = Multigraph::from_edges(3, &[(2, 2, 3)]).unwrap();
        assert!(matches!(graph_weight(&loop3, &weights), Err(Error::Model(_))));
        let big = Multigraph::empty(5);
        assert!(matches!(graph_weight(&big, &weights), Err(Error::Config(_))));
    }

    #[test]
    fn prior_factor_examples() {
        use crate::ensembles::PriorSpec;
        let rad = PriorSpec::rademacher();
        let gauss = PriorSpec::gaussian(false);
        let unif = PriorSpec::uniform(false);

        // Rademacher: every multicycle has factor one.
        let t = triangle(4, 0, 1, 2).unwrap();
        let y = prior_factor(&t, &rad, PriorFactorMode::IidAnalytic, 0, 0).unwrap();
        assert_eq!(y.value, 1.0);
        assert_eq!(y.stderr, None);

        // Gaussian on a square (all degrees 2): mu_2^4 = 1.
        let sq = Multigraph::from_edges(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1)]).unwrap();
        let y = prior_factor(&sq, &gauss, PriorFactorMode::IidAnalytic, 0, 0).unwrap();
        assert!((y.value - 1.0).abs() < 1e-12);

        // Gaussian butterfly lobe (degrees 2, 4, 2): mu_4 = 3.
        let b = Multigraph::from_edges(3, &[(0, 1, 2), (1, 2, 2)]).unwrap();
        let y = prior_factor(&b, &gauss, PriorFactorMode::IidAnalytic, 0, 0).unwrap();
        assert!((y.value - 3.0).abs() < 1e-12);

        // Uniform prior: mu_4 = 9/5.
        let y = prior_factor(&b, &unif, PriorFactorMode::IidAnalytic, 0, 0).unwrap();
        assert!((y.value - 1.8).abs() < 1e-9, "got {}", y.value);

        // Odd degree kills the factor exactly.
        let e = Multigraph::from_edges(3, &[(0, 1, 1)]).unwrap();
        let y = prior_factor(&e, &gauss, PriorFactorMode::IidAnalytic, 0, 0).unwrap();
        assert_eq!(y.value, 0.0);
        let y = prior_factor(&e, &gauss, PriorFactorMode::NormalizedMc, 10, 3).unwrap();
        assert_eq!(y.value, 0.0);
        assert_eq!(y.stderr, Some(0.0));
    }

    #[test]
    fn prior_factor_beyond_moment_table_is_a_range_error() {
        use crate::ensembles::PriorSpec;
        let gauss = PriorSpec::gaussian(false);
        // Star with 9 quadruple edges: center degree 36 > default table cap.
        let mut edges = Vec::new();
        for leaf in 1..10 {
            edges.push((0usize, leaf, 4u8));
        }
        let star = Multigraph::from_edges(10, &edges).unwrap();
        assert!(matches!(
            prior_factor(&star, &gauss, PriorFactorMode::IidAnalytic, 0, 0),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn normalized_mc_rademacher_is_exact_and_sampling_free() {
        use crate::ensembles::PriorSpec;
        let rad = PriorSpec::rademacher();
        let t = triangle(5, 0, 1, 2).unwrap();
        let y = prior_factor(&t, &rad, PriorFactorMode::NormalizedMc, 0, 0).unwrap();
        assert_eq!(y.value, 1.0);
        assert_eq!(y.stderr, Some(0.0));
    }

    #[test]
    fn normalized_mc_matches_sphere_average_on_double_edge() {
        use crate::ensembles::PriorSpec;
        // For a unit vector u on the circle (n = 2),
        // E[(sqrt(2) u_0)^2 (sqrt(2) u_1)^2] = 4 E[cos^2 sin^2] = 1/2,
        // while the iid factor would be mu_2^2 = 1.
        let gauss = PriorSpec::gaussian(true);
        let g = Multigraph::from_edges(2, &[(0, 1, 2)]).unwrap();
        let y = prior_factor(&g, &gauss, PriorFactorMode::NormalizedMc, 40_000, 11).unwrap();
        let se = y.stderr.unwrap();
        assert!(se > 0.0 && se < 0.01, "stderr {se}");
        assert!((y.value - 0.5).abs() < 4.0 * se, "value {} se {se}", y.value);
    }

    #[test]
    fn orthogonality_from_hermite_gaussian_table() {
        let table = MomentTable::hermite_gaussian(0.6).unwrap();
        let t1 = triangle(4, 0, 1, 2).unwrap();
        let t2 = triangle(4, 0, 1, 3).unwrap();
        // Distinct supports leave a bare first moment somewhere.
        assert!(is_orthogonal(&t1, &t2, &table).unwrap());
        // Identical graphs pair every edge with itself.
        assert!(!is_orthogonal(&t1, &t1, &table).unwrap());
        // Same pair, multiplicities 1 vs 2: E[P1 P2] = 0.
        let e1 = Multigraph::from_edges(2, &[(0, 1, 1)]).unwrap();
        let e2 = Multigraph::from_edges(2, &[(0, 1, 2)]).unwrap();
        assert!(is_orthogonal(&e1, &e2, &table).unwrap());
        // Similar graphs (1 vs 3 on one edge) are still orthogonal under
        // Gaussian disorder because Hermite orders are orthogonal.
        let t3 = Multigraph::from_edges(4, &[(0, 1, 3), (1, 2, 1), (0, 2, 1)]).unwrap();
        assert!(is_orthogonal(&t1, &t3, &table).unwrap());
    }

    #[test]
    fn non_gaussian_cross_moment_breaks_orthogonality() {
        // A custom table where E[P1 P3] != 0, as for skew-free but
        // non-Gaussian disorder: the similar pair becomes correlated.
        let mut table = MomentTable::hermite_gaussian(0.6).unwrap();
        table.set_off(1, 3, 0.25).unwrap();
        let t1 = triangle(4, 0, 1, 2).unwrap();
        let t3 = Multigraph::from_edges(4, &[(0, 1, 3), (1, 2, 1), (0, 2, 1)]).unwrap();
        assert!(!is_orthogonal(&t1, &t3, &table).unwrap());
    }

    #[test]
    fn missing_moment_is_a_model_error_even_with_a_zero_factor() {
        let mut table = MomentTable::new();
        table.set_off(1, 0, 0.0).unwrap();
        // Pair (0,1) gives a zero factor, but pair (1,2) needs E[P1 P1],
        // which is absent.
        let a = Multigraph::from_edges(3, &[(0, 1, 1), (1, 2, 1)]).unwrap();
        let b = Multigraph::from_edges(3, &[(1, 2, 1)]).unwrap();
        assert!(matches!(is_orthogonal(&a, &b, &table), Err(Error::Model(_))));
    }

    #[test]
    fn multicycle_variance_uses_the_multiplicity_census() {
        let m = ExpansionMoments::hermite_gaussian(0.5).unwrap();
        // Triangle with one doubled edge: f^2 * g.
        let g = Multigraph::from_edges(3, &[(0, 1, 2), (1, 2, 1), (0, 2, 1)]).unwrap();
        let v = multicycle_variance(&g, &m).unwrap();
        assert!((v - m.f * m.f * m.g).abs() < 1e-15);
        // Quadruple edge: c4.
        let q = Multigraph::from_edges(2, &[(0, 1, 4)]).unwrap();
        assert!((multicycle_variance(&q, &m).unwrap() - m.c4).abs() < 1e-18);
        // Over-cap multiplicity is a model error.
        let over = Multigraph::from_edges(2, &[(0, 1, 5)]).unwrap();
        assert!(matches!(multicycle_variance(&over, &m), Err(Error::Model(_))));
    }
}
