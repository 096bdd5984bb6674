//! Labeled multigraphs on `{0, …, n-1}` and the expansion calculus built on
//! them: multicycle enumeration, edge-weight products, prior factors, the
//! fused expansion sum, simple-cycle decompositions, cutoff tail sums, and
//! the limiting variance bookkeeping (`rho_prediction`).
//!
//! Edges are unordered pairs `{i, j}` with integer multiplicities; `i == j`
//! is a self-loop.  The degree convention is
//! `d_k = sum_{j != k} m_kj + 2 * m_kk`: a self-loop contributes two to the
//! degree of its node.  The size of a graph counts every multiplicity once,
//! self-loops included, so `size = (1/2) * sum_k d_k`.

mod cycles;
mod enumerate;
mod expansion;
mod rho;
mod weights;

pub use cycles::{
    count_simple_cycles, cutoff_scan, cutoff_sum, decompose_simple_cycles, CutoffReport,
    MAX_CUTOFF_NODES,
};
pub use enumerate::{
    census_to_csv, enumerate_multicycles, for_each_multicycle, multicycle_census, CensusRow,
    MAX_ENUMERATION_NODES, MAX_LOOP_MULTIPLICITY,
};
pub use expansion::{
    direct_product, expansion_sum, expansion_sum_by_enumeration, product_decomposition_gap,
    MAX_EXPANSION_NODES,
};
pub use rho::{rho_prediction, ExpansionMoments, RhoDecomposition};
pub use weights::{
    graph_weight, hermite_weights, is_orthogonal, multicycle_variance, prior_factor,
    EdgeWeightSample, MomentTable, PriorFactor, PriorFactorMode, MAX_DIAG_ORDER, MAX_OFF_ORDER,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Largest multiplicity the container accepts on an unordered pair.
///
/// This is a sanity bound on storage, deliberately looser than the caps the
/// weight ops enforce (4 off-diagonal, 2 diagonal), so that over-cap graphs
/// can be constructed and fed to those ops to exercise their model errors.
pub const MAX_STORED_MULTIPLICITY: u8 = 8;

/// A finite labeled multigraph on nodes `0..n` with multiplicities on
/// unordered pairs.  Only pairs with nonzero multiplicity are stored, keyed
/// as `(min, max)`, so the representation is canonical: two graphs are equal
/// iff their node counts and edge maps are equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multigraph {
    n: usize,
    mult: BTreeMap<(u32, u32), u8>,
}

impl Multigraph {
    /// The empty graph (no edges) on `n` labeled nodes.
    pub fn empty(n: usize) -> Self {
        Multigraph { n, mult: BTreeMap::new() }
    }

    /// Builds a graph from `(i, j, multiplicity)` triples.  Pairs are
    /// normalized to `(min, max)`; listing the same pair twice is rejected
    /// rather than summed so that typos do not silently change a graph.
    pub fn from_edges(n: usize, edges: &[(usize, usize, u8)]) -> Result<Self> {
        let mut g = Multigraph::empty(n);
        for &(i, j, m) in edges {
            if g.multiplicity(i, j) != 0 {
                return Err(Error::Config(format!(
                    "edge ({i}, {j}) listed more than once"
                )));
            }
            g.set_multiplicity(i, j, m)?;
        }
        Ok(g)
    }

    /// Number of labeled nodes (isolated nodes count).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Multiplicity of the unordered pair `{i, j}`; zero when absent or out
    /// of range.
    pub fn multiplicity(&self, i: usize, j: usize) -> u8 {
        if i >= self.n || j >= self.n {
            return 0;
        }
        let key = (i.min(j) as u32, i.max(j) as u32);
        self.mult.get(&key).copied().unwrap_or(0)
    }

    /// Sets the multiplicity of `{i, j}`; `m = 0` removes the pair.
    pub fn set_multiplicity(&mut self, i: usize, j: usize, m: u8) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::Config(format!(
                "edge ({i}, {j}) out of range for a graph on {} nodes",
                self.n
            )));
        }
        if m > MAX_STORED_MULTIPLICITY {
            return Err(Error::Config(format!(
                "multiplicity {m} on edge ({i}, {j}) exceeds the storage cap {MAX_STORED_MULTIPLICITY}"
            )));
        }
        let key = (i.min(j) as u32, i.max(j) as u32);
        if m == 0 {
            self.mult.remove(&key);
        } else {
            self.mult.insert(key, m);
        }
        Ok(())
    }

    /// True when the graph has no edges at all.
    pub fn is_empty(&self) -> bool {
        self.mult.is_empty()
    }

    /// Iterates over present pairs in lexicographic `(i, j)` order with
    /// `i <= j`, yielding `(i, j, multiplicity)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u8)> + '_ {
        self.mult.iter().map(|(&(i, j), &m)| (i as usize, j as usize, m))
    }

    /// The set of present unordered pairs (the support), in lexicographic
    /// order.
    pub fn support(&self) -> Vec<(usize, usize)> {
        self.mult.keys().map(|&(i, j)| (i as usize, j as usize)).collect()
    }

    /// Degrees of all nodes under the convention
    /// `d_k = sum_{j != k} m_kj + 2 * m_kk`.
    pub fn degrees(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.n];
        for (&(i, j), &m) in &self.mult {
            if i == j {
                d[i as usize] += 2 * u32::from(m);
            } else {
                d[i as usize] += u32::from(m);
                d[j as usize] += u32::from(m);
            }
        }
        d
    }

    /// True when the pair `{k, k}` is present for some node.
    pub fn has_self_loops(&self) -> bool {
        self.mult.keys().any(|&(i, j)| i == j)
    }

    /// Serializes the edge list as one `i j m` line per present pair, in
    /// lexicographic pair order.  Equal graphs on the same node set produce
    /// byte-identical text, so files can be compared directly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (&(i, j), &m) in &self.mult {
            writeln!(out, "{i} {j} {m}").expect("writing to String cannot fail");
        }
        out
    }

    /// Parses the `i j m` line format produced by [`Multigraph::to_text`].
    /// Blank lines and lines starting with `#` are ignored; pairs are
    /// normalized, and repeated pairs are rejected.
    pub fn from_text(n: usize, text: &str) -> Result<Self> {
        let mut g = Multigraph::empty(n);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let mut next = |what: &str| -> Result<usize> {
                let tok = fields.next().ok_or_else(|| {
                    Error::Config(format!(
                        "edge list line {}: missing {what} in {line:?}",
                        lineno + 1
                    ))
                })?;
                tok.parse::<usize>().map_err(|_| {
                    Error::Config(format!(
                        "edge list line {}: {what} {tok:?} is not a non-negative integer",
                        lineno + 1
                    ))
                })
            };
            let i = next("node index i")?;
            let j = next("node index j")?;
            let m = next("multiplicity m")?;
            if fields.next().is_some() {
                return Err(Error::Config(format!(
                    "edge list line {}: trailing tokens in {line:?}",
                    lineno + 1
                )));
            }
            if m == 0 || m > usize::from(MAX_STORED_MULTIPLICITY) {
                return Err(Error::Config(format!(
                    "edge list line {}: multiplicity {m} outside 1..={MAX_STORED_MULTIPLICITY}",
                    lineno + 1
                )));
            }
            if g.multiplicity(i, j) != 0 {
                return Err(Error::Config(format!(
                    "edge list line {}: pair ({i}, {j}) already defined",
                    lineno + 1
                )));
            }
            g.set_multiplicity(i, j, m as u8)?;
        }
        Ok(g)
    }
}

/// Summary statistics of a multigraph: its size, length, multiplicity
/// census, and degree sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphStats {
    /// Total size `m`: the sum of all multiplicities, self-loops included.
    pub size: u32,
    /// Length `n`: the number of distinct present pairs (self-loops
    /// included).
    pub length: u32,
    /// `pair_mult_counts[r - 1]` is the number of off-diagonal pairs with
    /// multiplicity exactly `r`.
    pub pair_mult_counts: [u32; MAX_STORED_MULTIPLICITY as usize],
    /// `loop_mult_counts[r - 1]` is the number of self-loops with
    /// multiplicity exactly `r`.
    pub loop_mult_counts: [u32; MAX_STORED_MULTIPLICITY as usize],
    /// Degrees of all `n` nodes (`d_k = sum_{j != k} m_kj + 2 m_kk`).
    pub degrees: Vec<u32>,
}

impl GraphStats {
    /// Number of off-diagonal pairs carried with multiplicity exactly `r`.
    pub fn pairs_with_multiplicity(&self, r: usize) -> u32 {
        if r == 0 || r > self.pair_mult_counts.len() {
            0
        } else {
            self.pair_mult_counts[r - 1]
        }
    }

    /// Number of self-loops with multiplicity exactly `r`.
    pub fn loops_with_multiplicity(&self, r: usize) -> u32 {
        if r == 0 || r > self.loop_mult_counts.len() {
            0
        } else {
            self.loop_mult_counts[r - 1]
        }
    }
}

/// Computes size, length, multiplicity census, and degrees in one pass.
pub fn graph_stats(graph: &Multigraph) -> GraphStats {
    let mut size = 0u32;
    let mut length = 0u32;
    let mut pair_mult_counts = [0u32; MAX_STORED_MULTIPLICITY as usize];
    let mut loop_mult_counts = [0u32; MAX_STORED_MULTIPLICITY as usize];
    for (i, j, m) in graph.edges() {
        size += u32::from(m);
        length += 1;
        if i == j {
            loop_mult_counts[usize::from(m) - 1] += 1;
        } else {
            pair_mult_counts[usize::from(m) - 1] += 1;
        }
    }
    GraphStats {
        size,
        length,
        pair_mult_counts,
        loop_mult_counts,
        degrees: graph.degrees(),
    }
}

/// A multicycle is a multigraph in which every node has even degree (under
/// the self-loops-count-twice convention).  The empty graph qualifies.
pub fn is_multicycle(graph: &Multigraph) -> bool {
    graph.degrees().iter().all(|&d| d % 2 == 0)
}

/// Two multigraphs are similar when they have the same support (the same set
/// of present pairs) and the multiplicities on every pair differ by an even
/// number.  Similar graphs have correlated weight products; dissimilar
/// multicycles built from centered, symmetric weights are uncorrelated.
pub fn is_similar(a: &Multigraph, b: &Multigraph) -> bool {
    if a.n != b.n || a.mult.len() != b.mult.len() {
        return false;
    }
    a.mult.iter().zip(b.mult.iter()).all(|((pa, &ma), (pb, &mb))| {
        pa == pb && (i16::from(ma) - i16::from(mb)) % 2 == 0
    })
}

/// Triangle on nodes `{a, b, c}` with unit multiplicities; a convenience for
/// tests and examples.
pub fn triangle(n: usize, a: usize, b: usize, c: usize) -> Result<Multigraph> {
    if a == b || b == c || a == c {
        return Err(Error::Config("triangle nodes must be distinct".into()));
    }
    Multigraph::from_edges(n, &[(a, b, 1), (b, c, 1), (a, c, 1)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn butterfly_left_lobe_stats() {
        // Path 0 = 1 = 2 with both edges doubled: degrees (2, 4, 2),
        // size 4, length 2, two pairs of multiplicity 2.
        let g = Multigraph::from_edges(3, &[(0, 1, 2), (1, 2, 2)]).unwrap();
        let s = graph_stats(&g);
        assert_eq!(s.size, 4);
        assert_eq!(s.length, 2);
        assert_eq!(s.degrees, vec![2, 4, 2]);
        assert_eq!(s.pairs_with_multiplicity(2), 2);
        assert_eq!(s.pairs_with_multiplicity(1), 0);
        assert!(is_multicycle(&g));
    }

    #[test]
    fn self_loop_counts_twice_in_degree_and_once_in_size() {
        let mut g = Multigraph::empty(2);
        g.set_multiplicity(1, 1, 1).unwrap();
        let s = graph_stats(&g);
        assert_eq!(s.degrees, vec![0, 2]);
        assert_eq!(s.size, 1);
        assert_eq!(s.length, 1);
        assert_eq!(s.loops_with_multiplicity(1), 1);
        // Degree 2 is even, so a single self-loop is a multicycle.
        assert!(is_multicycle(&g));
        // Size is half the degree sum, self-loops included.
        let degree_sum: u32 = s.degrees.iter().sum();
        assert_eq!(2 * s.size, degree_sum);
    }

    #[test]
    fn triangle_is_a_multicycle_and_single_edge_is_not() {
        let t = triangle(3, 0, 1, 2).unwrap();
        assert!(is_multicycle(&t));
        let e = Multigraph::from_edges(3, &[(0, 1, 1)]).unwrap();
        assert!(!is_multicycle(&e));
        assert!(is_multicycle(&Multigraph::empty(4)));
    }

    #[test]
    fn size_is_half_the_degree_sum_with_self_loops() {
        // Mixed graph: triangle plus a double self-loop and a double edge.
        let g = Multigraph::from_edges(
            5,
            &[(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 3, 2), (3, 4, 2)],
        )
        .unwrap();
        let s = graph_stats(&g);
        let degree_sum: u32 = s.degrees.iter().sum();
        assert_eq!(2 * s.size, degree_sum);
        assert_eq!(s.size, 7);
        assert_eq!(s.length, 5);
        assert_eq!(s.loops_with_multiplicity(2), 1);
    }

    #[test]
    fn similarity_requires_same_support_and_even_differences() {
        let t = triangle(3, 0, 1, 2).unwrap();
        // Same triangle with one edge tripled: difference 2 on one pair.
        let t3 = Multigraph::from_edges(3, &[(0, 1, 3), (1, 2, 1), (0, 2, 1)]).unwrap();
        assert!(is_similar(&t, &t3));
        assert!(is_similar(&t3, &t));
        assert!(is_similar(&t, &t));
        // A doubled edge breaks the parity on that pair.
        let t2 = Multigraph::from_edges(3, &[(0, 1, 2), (1, 2, 1), (0, 2, 1)]).unwrap();
        assert!(!is_similar(&t, &t2));
        // Different support: square vs triangle.
        let sq = Multigraph::from_edges(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1)]).unwrap();
        let t4 = triangle(4, 0, 1, 2).unwrap();
        assert!(!is_similar(&sq, &t4));
    }

    #[test]
    fn text_round_trip_is_canonical() {
        let g = Multigraph::from_edges(4, &[(2, 1, 3), (0, 3, 1), (2, 2, 2)]).unwrap();
        let text = g.to_text();
        // Pairs are normalized and sorted, so the text is canonical.
        assert_eq!(text, "0 3 1\n1 2 3\n2 2 2\n");
        let back = Multigraph::from_text(4, &text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_text(), text);
        // Comments and blank lines are tolerated on input.
        let with_comments = format!("# census\n\n{text}");
        assert_eq!(Multigraph::from_text(4, &with_comments).unwrap(), g);
    }

    #[test]
    fn text_parse_errors_name_the_line() {
        let err = Multigraph::from_text(3, "0 1\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "got: {err}");
        let err = Multigraph::from_text(3, "0 1 1\n0 1 2\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "got: {err}");
        let err = Multigraph::from_text(3, "0 5 1\n").unwrap_err();
        assert!(err.to_string().contains("out of range"), "got: {err}");
        let err = Multigraph::from_text(3, "0 1 0\n").unwrap_err();
        assert!(err.to_string().contains("multiplicity"), "got: {err}");
    }

    #[test]
    fn construction_rejects_out_of_range_and_duplicates() {
        assert!(Multigraph::from_edges(3, &[(0, 3, 1)]).is_err());
        assert!(Multigraph::from_edges(3, &[(0, 1, 1), (1, 0, 1)]).is_err());
        assert!(Multigraph::from_edges(3, &[(0, 1, 9)]).is_err());
        // Setting multiplicity zero removes the pair.
        let mut g = Multigraph::from_edges(3, &[(0, 1, 2)]).unwrap();
        g.set_multiplicity(1, 0, 0).unwrap();
        assert!(g.is_empty());
    }
}
