//! The multicycle expansion sum `X = sum_γ N^{-m(γ)/2} Y(γ) Z(γ)` and the
//! direct per-spike product it re-sums.
//!
//! Two evaluation strategies are used, both exact:
//!
//! * For the Rademacher prior, every prior factor of an even-degree graph is
//!   one, so only degree *parities* matter.  A dynamic program over the
//!   2^n parity masks evaluates the sum in `O(pairs * 2^n)`.
//! * For general priors, a depth-first walk over off-diagonal multiplicity
//!   assignments tracks exact degrees and folds the self-loop sum into a
//!   per-node bracket `s_k(d) = sum_m N^{-m/2} P_d^(m) mu_{d + 2m}` at each
//!   leaf.  Branches are pruned as soon as a node's degree parity is fixed
//!   odd, since odd moments vanish for symmetric priors.

use crate::ensembles::{PriorSpec, SpikeMode};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

use super::enumerate::offdiag_pairs;
use super::weights::{graph_weight, EdgeWeightSample, MAX_DIAG_ORDER, MAX_OFF_ORDER};
use super::{decompose_simple_cycles, enumerate_multicycles};

/// Node cap for exact expansion sums; the multicycle family grows far too
/// fast beyond this.
pub const MAX_EXPANSION_NODES: usize = 6;

fn check_expansion_args(
    n: usize,
    weights: &EdgeWeightSample,
    ell: u8,
    context: &str,
) -> Result<()> {
    if n < 2 || n > MAX_EXPANSION_NODES {
        return Err(Error::Resource(format!(
            "{context} supports 2..={MAX_EXPANSION_NODES} nodes, got {n}"
        )));
    }
    if weights.n() < n {
        return Err(Error::Config(format!(
            "{context}: weights cover {} nodes but {n} were requested",
            weights.n()
        )));
    }
    if ell == 0 || ell > MAX_OFF_ORDER {
        return Err(Error::Config(format!(
            "{context}: multiplicity bound ell must lie in 1..={MAX_OFF_ORDER}, got {ell}"
        )));
    }
    Ok(())
}

/// Per-pair scaled weights `q[m] = N^{-m/2} P^(m)`; order zero is one.
fn scaled_pair_weights(
    n: usize,
    weights: &EdgeWeightSample,
    ell: u8,
    pairs: &[(usize, usize)],
) -> Vec<[f64; 5]> {
    let root = (n as f64).sqrt();
    let mut scale = [1.0; 5];
    for m in 1..=4usize {
        scale[m] = scale[m - 1] / root;
    }
    pairs
        .iter()
        .map(|&(i, j)| {
            let mut q = [0.0; 5];
            q[0] = 1.0;
            for m in 1..=usize::from(ell) {
                q[m] = scale[m] * weights.off(m as u8, i, j);
            }
            q
        })
        .collect()
}

/// Per-node scaled diagonal weights `r[m] = N^{-m/2} P_d^(m)`.
fn scaled_loop_weights(n: usize, weights: &EdgeWeightSample, loop_cap: u8) -> Vec<[f64; 3]> {
    let root = (n as f64).sqrt();
    (0..n)
        .map(|k| {
            let mut r = [0.0; 3];
            r[0] = 1.0;
            for m in 1..=usize::from(loop_cap) {
                r[m] = weights.diag(m as u8, k) / root.powi(m as i32);
            }
            r
        })
        .collect()
}

/// Rademacher-prior evaluation: dynamic program over degree-parity masks.
fn expansion_sum_parity_dp(
    n: usize,
    q: &[[f64; 5]],
    pairs: &[(usize, usize)],
    loops: &[[f64; 3]],
    ell: u8,
    loop_cap: u8,
) -> f64 {
    let states = 1usize << n;
    let mut dp = vec![0.0f64; states];
    dp[0] = 1.0;
    let mut next = vec![0.0f64; states];
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let mut even = 0.0;
        let mut odd = 0.0;
        for m in 0..=usize::from(ell) {
            if m % 2 == 0 {
                even += q[p][m];
            } else {
                odd += q[p][m];
            }
        }
        let flip = (1usize << i) | (1usize << j);
        for (mask, slot) in next.iter_mut().enumerate() {
            *slot = even * dp[mask] + odd * dp[mask ^ flip];
        }
        std::mem::swap(&mut dp, &mut next);
    }
    // Self-loops keep parities even and factor per node; the Rademacher
    // prior factor of the resulting even-degree graph is one.
    let mut total = dp[0];
    for r in loops.iter().take(n) {
        let mut bracket = 0.0;
        for m in 0..=usize::from(loop_cap) {
            bracket += r[m];
        }
        total *= bracket;
    }
    total
}

struct DegreeDfs<'a> {
    pairs: &'a [(usize, usize)],
    q: &'a [[f64; 5]],
    loops: &'a [[f64; 3]],
    finalized_after: Vec<Vec<usize>>,
    prior: &'a PriorSpec,
    ell: u8,
    loop_cap: u8,
    degrees: Vec<u32>,
    total: CompensatedSum,
}

impl DegreeDfs<'_> {
    fn leaf(&mut self, acc: f64) -> Result<()> {
        let mut term = acc;
        for (k, &d) in self.degrees.iter().enumerate() {
            debug_assert!(d % 2 == 0);
            let mut bracket = 0.0;
            for m in 0..=usize::from(self.loop_cap) {
                bracket += self.loops[k][m] * self.prior.mu(d as usize + 2 * m)?;
            }
            term *= bracket;
        }
        self.total.add(term);
        Ok(())
    }

    fn walk(&mut self, p: usize, acc: f64) -> Result<()> {
        if p == self.pairs.len() {
            return self.leaf(acc);
        }
        let (i, j) = self.pairs[p];
        for m in 0..=u32::from(self.ell) {
            let next = acc * self.q[p][m as usize];
            self.degrees[i] += m;
            self.degrees[j] += m;
            let viable = next != 0.0
                && self
                    .finalized_after[p]
                    .iter()
                    .all(|&k| self.degrees[k] % 2 == 0);
            if viable {
                self.walk(p + 1, next)?;
            }
            self.degrees[i] -= m;
            self.degrees[j] -= m;
        }
        Ok(())
    }
}

/// General-prior evaluation: exact depth-first sum over multiplicity
/// assignments with degree tracking.
fn expansion_sum_dfs(
    n: usize,
    q: &[[f64; 5]],
    pairs: &[(usize, usize)],
    loops: &[[f64; 3]],
    prior: &PriorSpec,
    ell: u8,
    loop_cap: u8,
) -> Result<f64> {
    let mut finalized_after: Vec<Vec<usize>> = vec![Vec::new(); pairs.len()];
    for (p, &(i, j)) in pairs.iter().enumerate() {
        if j == n - 1 {
            finalized_after[p].push(i);
        }
        if p + 1 == pairs.len() {
            finalized_after[p].push(j);
        }
    }
    let mut dfs = DegreeDfs {
        pairs,
        q,
        loops,
        finalized_after,
        prior,
        ell,
        loop_cap,
        degrees: vec![0; n],
        total: CompensatedSum::new(),
    };
    if pairs.is_empty() {
        dfs.leaf(1.0)?;
    } else {
        dfs.walk(0, 1.0)?;
    }
    Ok(dfs.total.value())
}

/// Evaluates the expansion sum
/// `X = sum_γ N^{-m(γ)/2} Y(γ) Z(γ)`
/// over all multicycles on `n` nodes with off-diagonal multiplicities up to
/// `ell` (and self-loops up to 2 when allowed), exactly.
///
/// Prior factors are the analytic per-node moments `prod_k mu_{d_k}` of the
/// prior's entry law; for the Rademacher prior this coincides with the
/// normalized factor and a fast parity-space dynamic program is used.
pub fn expansion_sum(
    n: usize,
    weights: &EdgeWeightSample,
    prior: &PriorSpec,
    ell: u8,
    allow_self_loops: bool,
) -> Result<f64> {
    check_expansion_args(n, weights, ell, "expansion sum")?;
    let pairs = offdiag_pairs(n);
    let q = scaled_pair_weights(n, weights, ell, &pairs);
    let loop_cap = if allow_self_loops { ell.min(MAX_DIAG_ORDER) } else { 0 };
    let loops = scaled_loop_weights(n, weights, loop_cap);
    if prior.is_rademacher() {
        Ok(expansion_sum_parity_dp(n, &q, &pairs, &loops, ell, loop_cap))
    } else {
        expansion_sum_dfs(n, &q, &pairs, &loops, prior, ell, loop_cap)
    }
}

/// Evaluates the direct product the expansion re-sums, at one spike vector:
///
/// ```text
/// prod_{i<j} (1 + sum_m P^(m)_ij t_ij^m) * prod_k (1 + sum_m P_d^(m)_kk t_k^m)
/// ```
///
/// with `t_ij = sqrt(N) x_i x_j` and `t_k = sqrt(N) x_k^2` in iid mode; the
/// normalized mode divides the arguments by `|x|^2` (a zero vector is read
/// as "all arguments zero", giving product one).  Off-diagonal factors run
/// to order four, diagonal factors to order two.
pub fn direct_product(
    n: usize,
    weights: &EdgeWeightSample,
    x: &[f64],
    mode: SpikeMode,
) -> Result<f64> {
    if x.len() != n {
        return Err(Error::Config(format!(
            "spike has {} entries but n = {n}",
            x.len()
        )));
    }
    if weights.n() < n {
        return Err(Error::Config(format!(
            "direct product: weights cover {} nodes but {n} were requested",
            weights.n()
        )));
    }
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    let denom = match mode {
        SpikeMode::Iid => 1.0,
        SpikeMode::Normalized => {
            if norm_sq == 0.0 {
                return Ok(1.0);
            }
            norm_sq
        }
    };
    let root = (n as f64).sqrt();
    let mut product = 1.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let t = root * x[i] * x[j] / denom;
            let mut factor = 1.0;
            let mut power = 1.0;
            for m in 1..=MAX_OFF_ORDER {
                power *= t;
                factor += weights.off(m, i, j) * power;
            }
            product *= factor;
        }
    }
    for (k, &xk) in x.iter().enumerate() {
        let t = root * xk * xk / denom;
        let mut factor = 1.0;
        let mut power = 1.0;
        for m in 1..=MAX_DIAG_ORDER {
            power *= t;
            factor += weights.diag(m, k) * power;
        }
        product *= factor;
    }
    Ok(product)
}

/// Absolute gap between the exact expansion sum (Rademacher prior, full
/// universe) and its product-form approximation over *distinct simple
/// cycles*, double edges, and single self-loops:
///
/// ```text
/// prod_{simple cycles c} (1 + N^{-|c|/2} Z(c))
///   * prod_{i<j} (1 + P^(2)_ij / N)
///   * prod_k (1 + P_d^(1)_kk / sqrt(N))
/// ```
///
/// The product expands into a subfamily of multicycles (and mis-weights
/// overlapping cycle unions), so the gap is nonzero in general but shrinks
/// as `n` grows when the weight families are centered.
pub fn product_decomposition_gap(n: usize, weights: &EdgeWeightSample) -> Result<f64> {
    check_expansion_args(n, weights, MAX_OFF_ORDER, "product decomposition")?;
    let exact = expansion_sum(n, weights, &PriorSpec::rademacher(), MAX_OFF_ORDER, true)?;
    let root = (n as f64).sqrt();
    let mut product = 1.0;
    for graph in enumerate_multicycles(n, 1, false, None)? {
        if graph.is_empty() {
            continue;
        }
        let cycles = decompose_simple_cycles(&graph)?;
        if cycles.len() != 1 {
            continue;
        }
        let size: u32 = graph.edges().map(|(_, _, m)| u32::from(m)).sum();
        product *= 1.0 + graph_weight(&graph, weights)? / root.powi(size as i32);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            product *= 1.0 + weights.off(2, i, j) / n as f64;
        }
    }
    for k in 0..n {
        product *= 1.0 + weights.diag(1, k) / root;
    }
    Ok((exact - product).abs())
}

/// Enumeration-based reference for the expansion sum: composes
/// `enumerate_multicycles`, `graph_weight`, and the prior's moment table
/// directly.  Exponentially slower than [`expansion_sum`]; used to
/// cross-validate it.
pub fn expansion_sum_by_enumeration(
    n: usize,
    weights: &EdgeWeightSample,
    prior: &PriorSpec,
    ell: u8,
    allow_self_loops: bool,
) -> Result<f64> {
    check_expansion_args(n, weights, ell, "expansion sum (enumeration)")?;
    let root = (n as f64).sqrt();
    let mut total = CompensatedSum::new();
    super::for_each_multicycle(n, ell, allow_self_loops, None, |graph| {
        let mut term = graph_weight(graph, weights)?;
        let mut size = 0u32;
        for (_, _, m) in graph.edges() {
            size += u32::from(m);
        }
        for &d in &graph.degrees() {
            if d > 0 {
                term *= prior.mu(d as usize)?;
            }
        }
        total.add(term / root.powi(size as i32));
        Ok(())
    })?;
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng as _;

    #[test]
    fn zero_weights_leave_only_the_empty_graph() {
        let weights = EdgeWeightSample::zeros(4);
        let x = expansion_sum(4, &weights, &PriorSpec::rademacher(), 4, true).unwrap();
        assert_eq!(x, 1.0);
        let x = expansion_sum(4, &weights, &PriorSpec::gaussian(false), 4, true).unwrap();
        assert_eq!(x, 1.0);
    }

    #[test]
    fn two_nodes_by_hand_with_rademacher_prior() {
        // Pairs: one off-diagonal pair and two self-loops.  With n = 2,
        // X = (1 + P2/2 + P4/4) * prod_k (1 + Pd1/sqrt(2) + Pd2/2):
        // odd off-diagonal orders have odd degrees and drop out.
        let mut w = EdgeWeightSample::zeros(2);
        w.set_off(1, 0, 1, 0.3);
        w.set_off(2, 0, 1, -0.4);
        w.set_off(3, 0, 1, 0.9);
        w.set_off(4, 0, 1, 0.2);
        w.set_diag(1, 0, 0.5);
        w.set_diag(2, 0, -0.1);
        w.set_diag(1, 1, -0.7);
        w.set_diag(2, 1, 0.6);
        let x = expansion_sum(2, &w, &PriorSpec::rademacher(), 4, true).unwrap();
        let root2 = 2.0f64.sqrt();
        let expect = (1.0 - 0.4 / 2.0 + 0.2 / 4.0)
            * (1.0 + 0.5 / root2 - 0.1 / 2.0)
            * (1.0 - 0.7 / root2 + 0.6 / 2.0);
        assert!((x - expect).abs() < 1e-14, "{x} vs {expect}");
    }

    #[test]
    fn dfs_and_parity_dp_agree_on_a_mu_one_prior() {
        // Forcing the DFS path with a Rademacher moment table: bounded
        // custom priors are not Rademacher, so compare DFS output for the
        // Gaussian prior against enumeration instead, and DP against DFS
        // via the public entry point with mu == 1 everywhere (Rademacher).
        for n in [3usize, 4] {
            let weights = EdgeWeightSample::random(n, 2024 + n as u64);
            let pairs = offdiag_pairs(n);
            let q = scaled_pair_weights(n, &weights, 4, &pairs);
            let loops = scaled_loop_weights(n, &weights, 2);
            let prior = PriorSpec::rademacher();
            let dp = expansion_sum_parity_dp(n, &q, &pairs, &loops, 4, 2);
            let dfs = expansion_sum_dfs(n, &q, &pairs, &loops, &prior, 4, 2).unwrap();
            assert!(
                (dp - dfs).abs() <= 1e-12 * dp.abs().max(1.0),
                "n = {n}: dp {dp} vs dfs {dfs}"
            );
        }
    }

    #[test]
    fn expansion_matches_enumeration_reference_for_general_priors() {
        for (n, prior) in [
            (3usize, PriorSpec::gaussian(false)),
            (3, PriorSpec::uniform(false)),
            (4, PriorSpec::gaussian(false)),
        ] {
            let weights = EdgeWeightSample::random(n, 7 + n as u64);
            let fast = expansion_sum(n, &weights, &prior, 4, true).unwrap();
            let slow = expansion_sum_by_enumeration(n, &weights, &prior, 4, true).unwrap();
            assert!(
                (fast - slow).abs() <= 1e-11 * fast.abs().max(1.0),
                "n = {n}: fast {fast} vs enumeration {slow}"
            );
        }
    }

    #[test]
    fn sign_average_of_direct_product_equals_rademacher_expansion() {
        let n = 3;
        for draw in 0..20u64 {
            let weights = EdgeWeightSample::random(n, 100 + draw);
            let scale = 1.0 / (n as f64).sqrt();
            let mut sum = 0.0;
            for bits in 0..(1u32 << n) {
                let x: Vec<f64> = (0..n)
                    .map(|k| if bits >> k & 1 == 1 { -scale } else { scale })
                    .collect();
                sum += direct_product(n, &weights, &x, SpikeMode::Iid).unwrap();
            }
            sum /= (1u32 << n) as f64;
            let expansion =
                expansion_sum(n, &weights, &PriorSpec::rademacher(), 4, true).unwrap();
            assert!(
                (sum - expansion).abs() <= 1e-10 * (1.0 + expansion.abs()),
                "draw {draw}: average {sum} vs expansion {expansion}"
            );
        }
    }

    #[test]
    fn truncating_ell_equals_zeroing_the_top_family() {
        let n = 4;
        let weights = EdgeWeightSample::random(n, 55);
        let mut truncated = weights.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                truncated.set_off(4, i, j, 0.0);
            }
        }
        for prior in [PriorSpec::rademacher(), PriorSpec::gaussian(false)] {
            let ell3 = expansion_sum(n, &weights, &prior, 3, false).unwrap();
            let zeroed = expansion_sum(n, &truncated, &prior, 4, false).unwrap();
            assert!(
                (ell3 - zeroed).abs() <= 1e-12 * ell3.abs().max(1.0),
                "{ell3} vs {zeroed}"
            );
        }
    }

    #[test]
    fn direct_product_of_zero_vector_is_one_in_normalized_mode() {
        let weights = EdgeWeightSample::random(3, 9);
        let x = vec![0.0; 3];
        assert_eq!(
            direct_product(3, &weights, &x, SpikeMode::Normalized).unwrap(),
            1.0
        );
    }

    #[test]
    fn direct_product_two_nodes_by_hand() {
        let mut w = EdgeWeightSample::zeros(2);
        w.set_off(1, 0, 1, 0.5);
        w.set_off(2, 0, 1, 0.25);
        w.set_diag(1, 0, 1.0);
        let x = [0.6, -0.2];
        let root2 = 2.0f64.sqrt();
        let t = root2 * x[0] * x[1];
        let expect = (1.0 + 0.5 * t + 0.25 * t * t) * (1.0 + root2 * x[0] * x[0]);
        let got = direct_product(2, &w, &x, SpikeMode::Iid).unwrap();
        assert!((got - expect).abs() < 1e-14);
    }

    #[test]
    fn normalized_direct_product_is_scale_invariant() {
        let weights = EdgeWeightSample::random(4, 77);
        let mut r = rng::stream(4, rng::context::MC, 0);
        let x: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..=1.0)).collect();
        let scaled: Vec<f64> = x.iter().map(|v| 3.7 * v).collect();
        let a = direct_product(4, &weights, &x, SpikeMode::Normalized).unwrap();
        let b = direct_product(4, &weights, &scaled, SpikeMode::Normalized).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn expansion_caps_are_enforced() {
        let weights = EdgeWeightSample::zeros(8);
        let prior = PriorSpec::rademacher();
        assert!(matches!(
            expansion_sum(7, &weights, &prior, 4, true),
            Err(Error::Resource(_))
        ));
        assert!(matches!(
            expansion_sum(4, &weights, &prior, 5, true),
            Err(Error::Config(_))
        ));
        let small = EdgeWeightSample::zeros(3);
        assert!(matches!(
            expansion_sum(4, &small, &prior, 4, true),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn product_decomposition_gap_is_small_and_positive() {
        // Smoke test here; the shrink-with-n study lives in integration
        // tests.  Hermite weights at moderate beta keep all families small.
        let w = crate::ensembles::sample_wigner(
            &crate::ensembles::DisorderSpec::gaussian(0.0).unwrap(),
            5,
            424242,
        )
        .unwrap();
        let weights = crate::multigraph::hermite_weights(&w, 0.4, 3.0).unwrap();
        let gap = product_decomposition_gap(5, &weights).unwrap();
        assert!(gap.is_finite());
        assert!(gap < 0.5, "gap unexpectedly large: {gap}");
    }
}
