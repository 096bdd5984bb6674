//! Simple-cycle structure of 1-multicycles: greedy decomposition into
//! edge-disjoint simple cycles, exact cycle counting, and the cutoff tail
//! sums that control how much of the expansion long cycles can carry.

use serde::Serialize;

use crate::error::{Error, Result};

use super::enumerate::offdiag_pairs;
use super::Multigraph;

/// Node cap for cutoff sums (the even-subgraph walk is `2^(n(n-1)/2)`).
pub const MAX_CUTOFF_NODES: usize = 7;

/// Decomposes a 1-multicycle (every multiplicity one, no self-loops, all
/// degrees even) into edge-disjoint simple cycles.
///
/// The walk is deterministic: start from the node of largest remaining
/// degree (smallest index on ties), always leave along the unused edge to
/// the smallest neighbor, and extract a cycle whenever the walk revisits a
/// node currently on the path.  Parity keeps the walk alive: arriving at a
/// node always leaves it an unused edge unless the walk is back at its
/// start with nothing left.
///
/// Returns each cycle as its node sequence in walk order (the closing edge
/// back to the first node is implicit).  The union of the returned cycles'
/// edges is exactly the input edge set.
pub fn decompose_simple_cycles(graph: &Multigraph) -> Result<Vec<Vec<usize>>> {
    let n = graph.n();
    let mut adj: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); n];
    let mut edges_left = 0usize;
    for (i, j, m) in graph.edges() {
        if i == j {
            return Err(Error::Contract(format!(
                "decomposition needs a 1-multicycle: self-loop at node {i}"
            )));
        }
        if m != 1 {
            return Err(Error::Contract(format!(
                "decomposition needs a 1-multicycle: pair ({i}, {j}) has multiplicity {m}"
            )));
        }
        adj[i].insert(j);
        adj[j].insert(i);
        edges_left += 1;
    }
    for (k, neighbors) in adj.iter().enumerate() {
        if neighbors.len() % 2 != 0 {
            return Err(Error::Contract(format!(
                "decomposition needs a multicycle: node {k} has odd degree {}",
                neighbors.len()
            )));
        }
    }

    let mut cycles: Vec<Vec<usize>> = Vec::new();
    // Position of each node on the current path, or usize::MAX.
    let mut pos = vec![usize::MAX; n];
    while edges_left > 0 {
        let start = (0..n)
            .filter(|&k| !adj[k].is_empty())
            .max_by_key(|&k| (adj[k].len(), std::cmp::Reverse(k)))
            .expect("edges remain, so some node has positive degree");
        let mut path = vec![start];
        pos[start] = 0;
        loop {
            let cur = *path.last().expect("path is never empty inside the walk");
            let Some(&next) = adj[cur].iter().next() else {
                // Only the walk's start can be exhausted (even degrees).
                debug_assert_eq!(path.len(), 1);
                pos[cur] = usize::MAX;
                break;
            };
            adj[cur].remove(&next);
            adj[next].remove(&cur);
            edges_left -= 1;
            if pos[next] != usize::MAX {
                // Close the loop: everything from `next`'s position on.
                let cycle: Vec<usize> = path.split_off(pos[next]);
                for &node in &cycle {
                    pos[node] = usize::MAX;
                }
                path.push(next);
                pos[next] = path.len() - 1;
                cycles.push(cycle);
            } else {
                path.push(next);
                pos[next] = path.len() - 1;
            }
        }
    }
    Ok(cycles)
}

/// Exact number of simple cycles through `k` labeled nodes out of `n`:
/// `n (n-1) ... (n-k+1) / (2k)`.  Cycles need `k >= 3`; `k > n` gives zero.
pub fn count_simple_cycles(n: usize, k: usize) -> Result<u128> {
    if k < 3 {
        return Err(Error::Domain(format!(
            "simple cycles have at least 3 nodes, got k = {k}"
        )));
    }
    if k > n {
        return Ok(0);
    }
    let mut falling: u128 = 1;
    for step in 0..k {
        falling = falling.checked_mul((n - step) as u128).ok_or_else(|| {
            Error::Resource(format!("cycle count overflows u128 for n = {n}, k = {k}"))
        })?;
    }
    // The count is an integer: falling = C(n,k) k! and the cycle count is
    // C(n,k) (k-1)!/2, so 2k divides the falling factorial.
    Ok(falling / (2 * k as u128))
}

/// Histogram of even subgraphs of the complete graph on `n` nodes by edge
/// count, via a Gray-code walk that toggles one edge per step.
fn even_subgraph_histogram(n: usize) -> Vec<u64> {
    let pairs = offdiag_pairs(n);
    let p = pairs.len();
    let mut hist = vec![0u64; p + 1];
    hist[0] += 1; // empty graph
    let mut parity: u32 = 0;
    let mut in_graph: u32 = 0;
    let mut edges = 0usize;
    for c in 1u64..(1u64 << p) {
        let e = c.trailing_zeros() as usize;
        let bit = 1u32 << e;
        let (i, j) = pairs[e];
        parity ^= (1 << i) | (1 << j);
        if in_graph & bit != 0 {
            edges -= 1;
        } else {
            edges += 1;
        }
        in_graph ^= bit;
        if parity == 0 {
            hist[edges] += 1;
        }
    }
    hist
}

/// Tail sum of the cutoff lemma at threshold `s`, with its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffReport {
    /// Threshold on the number of edges.
    pub s: u32,
    /// `sum_{1-multicycles γ with n(γ) >= s} (alpha / n)^{m(γ)}`.
    pub sum: f64,
    /// The claimed bound `s * alpha^s`.
    pub bound: f64,
    /// Whether `sum <= bound`.
    pub holds: bool,
}

/// Evaluates the cutoff tail sum over simple multicycles (1-multicycles
/// without self-loops, i.e. even subgraphs of the complete graph) with at
/// least `s` edges, at cycle weight `alpha / n` per edge, and compares it
/// against the bound `s * alpha^s`.
pub fn cutoff_sum(n: usize, alpha: f64, s: u32) -> Result<CutoffReport> {
    if n < 2 || n > MAX_CUTOFF_NODES {
        return Err(Error::Resource(format!(
            "cutoff sum supports 2..={MAX_CUTOFF_NODES} nodes, got {n}"
        )));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain(format!(
            "cutoff weight alpha = {alpha} must lie in [0, 1)"
        )));
    }
    if s == 0 {
        return Err(Error::Domain("cutoff threshold s must be at least 1".into()));
    }
    let hist = even_subgraph_histogram(n);
    let per_edge = alpha / n as f64;
    let mut sum = 0.0;
    for (k, &count) in hist.iter().enumerate().skip(s as usize) {
        if count > 0 {
            sum += count as f64 * per_edge.powi(k as i32);
        }
    }
    let bound = s as f64 * alpha.powi(s as i32);
    Ok(CutoffReport { s, sum, bound, holds: sum <= bound })
}

/// Cutoff reports for every threshold `1..=s_max` (one histogram pass).
pub fn cutoff_scan(n: usize, alpha: f64, s_max: u32) -> Result<Vec<CutoffReport>> {
    if s_max == 0 {
        return Err(Error::Domain("cutoff scan needs s_max >= 1".into()));
    }
    (1..=s_max).map(|s| cutoff_sum(n, alpha, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn cycle_edge_multiset(cycles: &[Vec<usize>]) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for cycle in cycles {
            for w in 0..cycle.len() {
                let a = cycle[w];
                let b = cycle[(w + 1) % cycle.len()];
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges
    }

    #[test]
    fn triangle_decomposes_to_itself() {
        let t = super::super::triangle(3, 0, 1, 2).unwrap();
        let cycles = decompose_simple_cycles(&t).unwrap();
        assert_eq!(cycles, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn butterfly_splits_at_the_shared_node() {
        let g = Multigraph::from_edges(
            5,
            &[(0, 1, 1), (1, 2, 1), (0, 2, 1), (0, 3, 1), (3, 4, 1), (0, 4, 1)],
        )
        .unwrap();
        let cycles = decompose_simple_cycles(&g).unwrap();
        assert_eq!(cycles, vec![vec![0, 1, 2], vec![0, 3, 4]]);
    }

    #[test]
    fn disjoint_triangle_and_square() {
        let g = Multigraph::from_edges(
            7,
            &[(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (5, 6, 1), (3, 6, 1)],
        )
        .unwrap();
        let cycles = decompose_simple_cycles(&g).unwrap();
        assert_eq!(cycles.len(), 2);
        // Union of cycle edges is exactly the input edge set.
        let input: Vec<(usize, usize)> = g.edges().map(|(i, j, _)| (i, j)).collect();
        assert_eq!(cycle_edge_multiset(&cycles), input);
    }

    #[test]
    fn complete_graph_on_five_nodes_decomposes_cleanly() {
        // K5 is 4-regular, hence a 1-multicycle; check edge-disjointness
        // and exact coverage rather than a particular cycle list.
        let mut edges = Vec::new();
        for i in 0..5usize {
            for j in (i + 1)..5 {
                edges.push((i, j, 1u8));
            }
        }
        let g = Multigraph::from_edges(5, &edges).unwrap();
        let cycles = decompose_simple_cycles(&g).unwrap();
        for cycle in &cycles {
            assert!(cycle.len() >= 3);
            let distinct: BTreeSet<_> = cycle.iter().collect();
            assert_eq!(distinct.len(), cycle.len(), "repeated node in {cycle:?}");
        }
        let input: Vec<(usize, usize)> = g.edges().map(|(i, j, _)| (i, j)).collect();
        assert_eq!(cycle_edge_multiset(&cycles), input);
    }

    #[test]
    fn non_one_multicycles_are_contract_errors() {
        let doubled = Multigraph::from_edges(3, &[(0, 1, 2), (1, 2, 1), (0, 2, 1)]).unwrap();
        assert!(matches!(decompose_simple_cycles(&doubled), Err(Error::Contract(_))));
        let looped = Multigraph::from_edges(3, &[(0, 0, 1)]).unwrap();
        assert!(matches!(decompose_simple_cycles(&looped), Err(Error::Contract(_))));
        let odd = Multigraph::from_edges(3, &[(0, 1, 1)]).unwrap();
        assert!(matches!(decompose_simple_cycles(&odd), Err(Error::Contract(_))));
        // Empty graph: zero cycles, no error.
        assert!(decompose_simple_cycles(&Multigraph::empty(3)).unwrap().is_empty());
    }

    #[test]
    fn cycle_counts_match_the_falling_factorial_formula() {
        assert_eq!(count_simple_cycles(3, 3).unwrap(), 1);
        assert_eq!(count_simple_cycles(4, 4).unwrap(), 3);
        assert_eq!(count_simple_cycles(5, 3).unwrap(), 10);
        assert_eq!(count_simple_cycles(6, 3).unwrap(), 20);
        assert_eq!(count_simple_cycles(5, 4).unwrap(), 15);
        assert_eq!(count_simple_cycles(4, 5).unwrap(), 0);
        assert!(matches!(count_simple_cycles(5, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn even_subgraph_histogram_matches_direct_enumeration() {
        for n in 3..=5usize {
            let pairs = offdiag_pairs(n);
            let mut direct = vec![0u64; pairs.len() + 1];
            for mask in 0u64..(1 << pairs.len()) {
                let mut deg = vec![0u32; n];
                let mut edges = 0usize;
                for (e, &(i, j)) in pairs.iter().enumerate() {
                    if mask >> e & 1 == 1 {
                        deg[i] += 1;
                        deg[j] += 1;
                        edges += 1;
                    }
                }
                if deg.iter().all(|&d| d % 2 == 0) {
                    direct[edges] += 1;
                }
            }
            assert_eq!(even_subgraph_histogram(n), direct, "n = {n}");
            let total: u64 = direct.iter().sum();
            assert_eq!(total, 1 << (pairs.len() - n + 1), "n = {n}");
        }
    }

    #[test]
    fn cutoff_hand_values_on_four_nodes() {
        // Even subgraphs of K4: 4 triangles (3 edges) + 3 squares (4 edges).
        let report = cutoff_sum(4, 0.5, 3).unwrap();
        let expect = 4.0 * 0.125f64.powi(3) + 3.0 * 0.125f64.powi(4);
        assert!((report.sum - expect).abs() < 1e-15);
        assert!((report.sum - 0.008544921875).abs() < 1e-15);
        assert!((report.bound - 0.375).abs() < 1e-15);
        assert!(report.holds);

        // No even subgraph of K4 has five or more edges.
        let report = cutoff_sum(4, 0.5, 5).unwrap();
        assert_eq!(report.sum, 0.0);
        assert!(report.holds);
    }

    #[test]
    fn cutoff_scan_is_monotone_in_s_and_validates_inputs() {
        let reports = cutoff_scan(5, 0.4, 8).unwrap();
        assert_eq!(reports.len(), 8);
        for w in reports.windows(2) {
            assert!(w[1].sum <= w[0].sum, "tail sums must shrink with s");
        }
        assert!(matches!(cutoff_sum(8, 0.5, 3), Err(Error::Resource(_))));
        assert!(matches!(cutoff_sum(4, 1.0, 3), Err(Error::Domain(_))));
        assert!(matches!(cutoff_sum(4, -0.1, 3), Err(Error::Domain(_))));
        assert!(matches!(cutoff_sum(4, 0.5, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn alpha_zero_tail_is_zero_and_holds() {
        let report = cutoff_sum(5, 0.0, 3).unwrap();
        assert_eq!(report.sum, 0.0);
        assert_eq!(report.bound, 0.0);
        assert!(report.holds);
    }
}
