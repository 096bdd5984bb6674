//! Streaming enumeration of multicycles (even-degree multigraphs) on a fixed
//! labeled node set.
//!
//! The enumeration order is deterministic: off-diagonal pairs in
//! lexicographic order form the most significant digits of a mixed-radix
//! counter over multiplicities `0..=ell`, followed by self-loops
//! `(0,0), …, (n-1,n-1)` with multiplicities `0..=min(ell, 2)`.  The empty
//! graph is therefore always visited first.  Parity pruning cuts each branch
//! at the last pair touching a node: self-loops add two to a degree, so a
//! node's degree parity is fixed once all its off-diagonal pairs are chosen.

use serde::Serialize;

use crate::error::{Error, Result};

use super::{Multigraph, MAX_STORED_MULTIPLICITY};

/// Node-count cap for enumeration; beyond this the multicycle family is far
/// too large to walk exhaustively.
pub const MAX_ENUMERATION_NODES: usize = 8;

/// Cap on self-loop multiplicities in the enumeration universe.
pub const MAX_LOOP_MULTIPLICITY: u8 = 2;

/// Hard cap on the number of graphs [`enumerate_multicycles`] will collect
/// into memory.  Streaming via [`for_each_multicycle`] has no such cap.
const MAX_COLLECTED: usize = 2_000_000;

pub(crate) fn offdiag_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n.saturating_mul(n.saturating_sub(1)) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    pairs
}

struct Walker<'a, F> {
    ell: u8,
    loop_cap: u8,
    max_size: Option<u32>,
    pairs: Vec<(usize, usize)>,
    /// Nodes whose off-diagonal degree is complete once pair `p` is chosen.
    finalized_after: Vec<Vec<usize>>,
    graph: Multigraph,
    parity: Vec<u8>,
    size: u32,
    callback: &'a mut F,
}

impl<F: FnMut(&Multigraph) -> Result<()>> Walker<'_, F> {
    fn fits(&self, extra: u8) -> bool {
        match self.max_size {
            Some(cap) => self.size + u32::from(extra) <= cap,
            None => true,
        }
    }

    fn walk_pairs(&mut self, p: usize) -> Result<()> {
        if p == self.pairs.len() {
            debug_assert!(self.parity.iter().all(|&b| b == 0));
            return self.walk_loops(0);
        }
        let (i, j) = self.pairs[p];
        for m in 0..=self.ell {
            if !self.fits(m) {
                break;
            }
            self.graph.set_multiplicity(i, j, m)?;
            self.size += u32::from(m);
            if m % 2 == 1 {
                self.parity[i] ^= 1;
                self.parity[j] ^= 1;
            }
            let viable = self.finalized_after[p].iter().all(|&k| self.parity[k] == 0);
            if viable {
                self.walk_pairs(p + 1)?;
            }
            if m % 2 == 1 {
                self.parity[i] ^= 1;
                self.parity[j] ^= 1;
            }
            self.size -= u32::from(m);
        }
        self.graph.set_multiplicity(i, j, 0)?;
        Ok(())
    }

    fn walk_loops(&mut self, k: usize) -> Result<()> {
        if k == self.graph.n() {
            return (self.callback)(&self.graph);
        }
        for m in 0..=self.loop_cap {
            if !self.fits(m) {
                break;
            }
            self.graph.set_multiplicity(k, k, m)?;
            self.size += u32::from(m);
            self.walk_loops(k + 1)?;
            self.size -= u32::from(m);
        }
        self.graph.set_multiplicity(k, k, 0)?;
        Ok(())
    }
}

/// Visits every multicycle on `n` nodes with off-diagonal multiplicities at
/// most `ell` (and self-loop multiplicities at most `min(ell, 2)` when
/// `allow_self_loops` is set), each exactly once, in the mixed-radix order
/// described in the module docs.  `max_size` bounds the total size of the
/// visited graphs.  The callback may return an error to abort the walk.
pub fn for_each_multicycle<F>(
    n: usize,
    ell: u8,
    allow_self_loops: bool,
    max_size: Option<u32>,
    mut callback: F,
) -> Result<()>
where
    F: FnMut(&Multigraph) -> Result<()>,
{
    if n == 0 || n > MAX_ENUMERATION_NODES {
        return Err(Error::Resource(format!(
            "multicycle enumeration supports 1..={MAX_ENUMERATION_NODES} nodes, got {n}"
        )));
    }
    if ell == 0 || ell > MAX_STORED_MULTIPLICITY {
        return Err(Error::Config(format!(
            "multiplicity bound ell must lie in 1..={MAX_STORED_MULTIPLICITY}, got {ell}"
        )));
    }
    let pairs = offdiag_pairs(n);
    let mut finalized_after: Vec<Vec<usize>> = vec![Vec::new(); pairs.len()];
    for (p, &(i, j)) in pairs.iter().enumerate() {
        // Pair (i, n-1) is the last pair involving i; the final pair also
        // completes node n-1.  Degree-sum parity makes the very last check
        // redundant, but it is cheap and keeps the invariant local.
        if j == n - 1 {
            finalized_after[p].push(i);
        }
        if p + 1 == pairs.len() {
            finalized_after[p].push(j);
        }
    }
    let mut walker = Walker {
        ell,
        loop_cap: if allow_self_loops { ell.min(MAX_LOOP_MULTIPLICITY) } else { 0 },
        max_size,
        pairs,
        finalized_after,
        graph: Multigraph::empty(n),
        parity: vec![0; n],
        size: 0,
        callback: &mut callback,
    };
    walker.walk_pairs(0)
}

/// Collects the multicycles visited by [`for_each_multicycle`] into a
/// vector, in visitation order.
pub fn enumerate_multicycles(
    n: usize,
    ell: u8,
    allow_self_loops: bool,
    max_size: Option<u32>,
) -> Result<Vec<Multigraph>> {
    let mut out = Vec::new();
    for_each_multicycle(n, ell, allow_self_loops, max_size, |g| {
        if out.len() >= MAX_COLLECTED {
            return Err(Error::Resource(format!(
                "more than {MAX_COLLECTED} multicycles; use for_each_multicycle to stream"
            )));
        }
        out.push(g.clone());
        Ok(())
    })?;
    Ok(out)
}

/// One row of a multicycle census: how many multicycles of each total size
/// exist on `n` nodes with multiplicity bound `ell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CensusRow {
    pub n: usize,
    pub ell: u8,
    pub size: u32,
    pub count: u64,
}

/// Tabulates multicycle counts by size.  Rows are sorted by size and include
/// the empty graph as size zero.
pub fn multicycle_census(
    n: usize,
    ell: u8,
    allow_self_loops: bool,
    max_size: Option<u32>,
) -> Result<Vec<CensusRow>> {
    let mut counts: Vec<u64> = Vec::new();
    for_each_multicycle(n, ell, allow_self_loops, max_size, |g| {
        let size = g.edges().map(|(_, _, m)| u32::from(m)).sum::<u32>() as usize;
        if counts.len() <= size {
            counts.resize(size + 1, 0);
        }
        counts[size] += 1;
        Ok(())
    })?;
    Ok(counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(size, count)| CensusRow { n, ell, size: size as u32, count })
        .collect())
}

/// Writes census rows as CSV (`n,ell,size,count`) for regression snapshots.
pub fn census_to_csv<W: std::io::Write>(rows: &[CensusRow], mut writer: W) -> Result<()> {
    writeln!(writer, "n,ell,size,count")?;
    for r in rows {
        writeln!(writer, "{},{},{},{}", r.n, r.ell, r.size, r.count)?;
    }
    Ok(())
}
