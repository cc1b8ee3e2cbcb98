//! Finite-length codes: Tanner graphs grown by progressive edge growth,
//! systematic encoders, and the two-level source code whose extra parity
//! checks carry the bin index.

mod code;
mod gf2;

pub use code::{build_two_level_code, BuildReport, CodeFile, RelayCode, TwoLevelCode, CODE_FORMAT};
pub use gf2::SystematicEncoder;

use crate::degree::DegreeDistribution;
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Bipartite graph given by the sorted variable list of every check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct TannerGraph {
    n: usize,
    checks: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    n: usize,
    checks: Vec<Vec<u32>>,
}

impl TryFrom<RawGraph> for TannerGraph {
    type Error = Error;
    fn try_from(raw: RawGraph) -> Result<Self> {
        Self::new(raw.n, raw.checks)
    }
}

impl From<TannerGraph> for RawGraph {
    fn from(g: TannerGraph) -> Self {
        Self { n: g.n, checks: g.checks }
    }
}

impl TannerGraph {
    /// Sorts each check and rejects repeated or out-of-range variables.
    pub fn new(n: usize, mut checks: Vec<Vec<u32>>) -> Result<Self> {
        for (c, vars) in checks.iter_mut().enumerate() {
            vars.sort_unstable();
            if vars.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter(format!("check {c} repeats a variable")));
            }
            if vars.last().is_some_and(|&v| v as usize >= n) {
                return Err(Error::InvalidParameter(format!("check {c} exceeds {n} variables")));
            }
        }
        Ok(Self { n, checks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.checks.len()
    }

    pub fn checks(&self) -> &[Vec<u32>] {
        &self.checks
    }

    pub fn edges(&self) -> usize {
        self.checks.iter().map(Vec::len).sum()
    }

    pub fn check_degrees(&self) -> Vec<usize> {
        self.checks.iter().map(Vec::len).collect()
    }

    pub fn var_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        self.checks.iter().flatten().for_each(|&v| d[v as usize] += 1);
        d
    }

    /// Checks adjacent to each variable, ascending.
    pub fn var_adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n];
        for (c, vars) in self.checks.iter().enumerate() {
            vars.iter().for_each(|&v| adj[v as usize].push(c as u32));
        }
        adj
    }

    /// `H * bits` over GF(2).
    pub fn syndrome(&self, bits: &[u8]) -> Vec<u8> {
        assert_eq!(bits.len(), self.n, "word length");
        self.checks
            .iter()
            .map(|vars| vars.iter().fold(0, |s, &v| s ^ (bits[v as usize] & 1)))
            .collect()
    }

    /// Number of 4-cycles: pairs of checks sharing two variables, counted
    /// once per shared variable pair.
    pub fn four_cycles(&self) -> usize {
        let adj = self.var_adjacency();
        let mut shared = vec![0usize; self.m()];
        let mut total = 0;
        for (c, vars) in self.checks.iter().enumerate() {
            let mut touched = Vec::new();
            for &v in vars {
                for &o in &adj[v as usize] {
                    let o = o as usize;
                    if o > c {
                        if shared[o] == 0 {
                            touched.push(o);
                        }
                        shared[o] += 1;
                    }
                }
            }
            for o in touched {
                total += shared[o] * (shared[o] - 1) / 2;
                shared[o] = 0;
            }
        }
        total
    }

    /// Both graphs stacked on the same variables.
    pub fn stack(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::InvalidParameter("stacked graphs differ in length".into()));
        }
        let mut checks = self.checks.clone();
        checks.extend(other.checks.iter().cloned());
        Ok(Self { n: self.n, checks })
    }
}

/// Edge-perspective fractions of a degree sequence; degree 0 is skipped.
pub fn edge_fractions(degrees: &[usize]) -> Vec<(usize, f64)> {
    let total: usize = degrees.iter().sum();
    let mut counts = std::collections::BTreeMap::new();
    degrees.iter().filter(|&&d| d > 0).for_each(|&d| *counts.entry(d).or_insert(0usize) += d);
    counts.into_iter().map(|(d, e)| (d, e as f64 / total as f64)).collect()
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Node degrees realising `dist` on `node_count` nodes. Node counts follow
/// the node-perspective fractions by largest-remainder rounding; the seed
/// only decides which node receives which degree.
pub fn sample_degree_sequence(
    dist: &DegreeDistribution,
    node_count: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if node_count < dist.max_degree() {
        return Err(Error::UnrealizableDistribution(format!(
            "{node_count} nodes cannot realise degree {}",
            dist.max_degree()
        )));
    }
    let nodes = dist.node_fractions();
    let ideal: Vec<f64> = nodes.iter().map(|&(_, f)| f * node_count as f64).collect();
    let mut counts: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (ideal[a] - ideal[a].floor(), ideal[b] - ideal[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let missing = node_count - counts.iter().sum::<usize>();
    order.iter().take(missing).for_each(|&i| counts[i] += 1);

    let mut degrees: Vec<usize> = nodes
        .iter()
        .zip(&counts)
        .flat_map(|(&(d, _), &c)| std::iter::repeat_n(d, c))
        .collect();
    degrees.shuffle(&mut rng_for(seed, 0));
    Ok(degrees)
}

/// Moves the degree total to `target` one edge at a time: surplus comes off
/// the highest-degree node, deficit goes onto the lowest, so the spread of
/// the sequence never grows. Degrees stay within `[min, max]`.
pub fn match_edge_total(degrees: &mut [usize], target: usize, min: usize, max: usize) -> Result<()> {
    let mut total: usize = degrees.iter().sum();
    while total != target {
        let pick = if total > target {
            degrees.iter().enumerate().filter(|d| *d.1 > min).max_by_key(|&(i, &d)| (d, usize::MAX - i))
        } else {
            degrees.iter().enumerate().filter(|d| *d.1 < max).min_by_key(|&(i, &d)| (d, i))
        };
        let Some((i, _)) = pick else {
            return Err(Error::UnrealizableDistribution(format!(
                "{} nodes cannot carry {target} edges with degrees in [{min}, {max}]",
                degrees.len()
            )));
        };
        if total > target {
            degrees[i] -= 1;
            total -= 1;
        } else {
            degrees[i] += 1;
            total += 1;
        }
    }
    Ok(())
}

/// When every nonzero degree is even the rows of the graph sum to zero and
/// the matrix is rank deficient whatever the wiring; trading one edge
/// between two nodes breaks that without changing the total.
pub(crate) fn break_even_parity(degrees: &mut [usize]) {
    let nonzero = || degrees.iter().enumerate().filter(|d| *d.1 > 0);
    if nonzero().any(|(_, &d)| d % 2 == 1) || nonzero().count() < 2 {
        return;
    }
    let hi = nonzero().max_by_key(|&(i, &d)| (d, usize::MAX - i)).map(|d| d.0).unwrap();
    let lo = nonzero().filter(|d| d.0 != hi).min_by_key(|&(i, &d)| (d, i)).map(|d| d.0).unwrap();
    degrees[hi] -= 1;
    degrees[lo] += 1;
}

/// How far each edge placement looks for a distant check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GirthTarget {
    /// Only avoid checks within two hops, which rules out 4-cycles
    /// whenever such a check exists. Cost per edge is local.
    FourCycleFree,
    /// Look [`PEG_MAX_DEPTH`] levels deep for the farthest check.
    BestEffort,
}

impl GirthTarget {
    fn depth(self) -> usize {
        match self {
            Self::FourCycleFree => 1,
            Self::BestEffort => PEG_MAX_DEPTH,
        }
    }
}

/// BFS levels explored per edge in best-effort mode. An edge placed beyond
/// this depth closes no cycle shorter than `2 * PEG_MAX_DEPTH + 4`; looking
/// further costs a full graph traversal per edge.
pub const PEG_MAX_DEPTH: usize = 3;

/// Progressive edge growth for the given degree sequences.
pub fn construct_graph(
    var_degrees: &[usize],
    check_degrees: &[usize],
    seed: u64,
    girth: GirthTarget,
) -> Result<TannerGraph> {
    let empty = TannerGraph { n: var_degrees.len(), checks: Vec::new() };
    construct_graph_over(&empty, var_degrees, check_degrees, seed, girth)
}

/// Grows new checks onto the variables of `base`. Cycles are measured in
/// the combined graph, so the stacked matrix is what ends up sparse in short
/// cycles. Only the new checks are returned.
pub fn construct_graph_over(
    base: &TannerGraph,
    var_degrees: &[usize],
    check_degrees: &[usize],
    seed: u64,
    girth: GirthTarget,
) -> Result<TannerGraph> {
    let n = base.n();
    if var_degrees.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{} variable degrees for {n} variables",
            var_degrees.len()
        )));
    }
    let (ev, ec) = (var_degrees.iter().sum::<usize>(), check_degrees.iter().sum::<usize>());
    if ev != ec {
        return Err(Error::UnrealizableDistribution(format!(
            "variable side has {ev} edges, check side {ec}"
        )));
    }
    if let Some(&d) = var_degrees.iter().find(|&&d| d > check_degrees.len()) {
        return Err(Error::UnrealizableDistribution(format!(
            "variable degree {d} exceeds the {} available checks",
            check_degrees.len()
        )));
    }
    if let Some(&d) = check_degrees.iter().find(|&&d| d > n) {
        return Err(Error::UnrealizableDistribution(format!("check degree {d} exceeds {n} variables")));
    }
    let mut rng = rng_for(seed, 1);
    Ok(Peg::new(base, check_degrees, girth.depth()).grow(var_degrees, &mut rng))
}

/// Working state of one progressive-edge-growth pass. Check ids below
/// `first_new` belong to the base graph and are never extended.
struct Peg {
    first_new: usize,
    var_adj: Vec<Vec<u32>>,
    chk_adj: Vec<Vec<u32>>,
    target: Vec<usize>,
    available: usize,
    chk_mark: Vec<u32>,
    var_mark: Vec<u32>,
    epoch: u32,
    max_depth: usize,
}

impl Peg {
    fn new(base: &TannerGraph, check_degrees: &[usize], max_depth: usize) -> Self {
        let first_new = base.m();
        let mut chk_adj = base.checks.clone();
        chk_adj.extend(check_degrees.iter().map(|&d| Vec::with_capacity(d)));
        let mut target = vec![0; first_new];
        target.extend_from_slice(check_degrees);
        let available = check_degrees.iter().filter(|&&d| d > 0).count();
        Self {
            first_new,
            var_adj: base.var_adjacency(),
            chk_mark: vec![0; chk_adj.len()],
            chk_adj,
            target,
            available,
            var_mark: vec![0; base.n()],
            epoch: 0,
            max_depth,
        }
    }

    fn has_room(&self, c: usize) -> bool {
        c >= self.first_new && self.chk_adj[c].len() < self.target[c]
    }

    fn grow(mut self, var_degrees: &[usize], rng: &mut ChaCha8Rng) -> TannerGraph {
        let mut order: Vec<usize> = (0..var_degrees.len()).filter(|&v| var_degrees[v] > 0).collect();
        order.sort_by_key(|&v| (var_degrees[v], v));
        for v in order {
            for _ in 0..var_degrees[v] {
                let c = self.choose(v, rng);
                self.chk_adj[c].push(v as u32);
                self.var_adj[v].push(c as u32);
                if self.chk_adj[c].len() == self.target[c] {
                    self.available -= 1;
                }
            }
        }
        let n = self.var_adj.len();
        let mut checks = self.chk_adj.split_off(self.first_new);
        checks.iter_mut().for_each(|c| c.sort_unstable());
        TannerGraph { n, checks }
    }

    /// The new check farthest from `v` in the current graph, least filled
    /// among equals, ties broken at random.
    fn choose(&mut self, v: usize, rng: &mut ChaCha8Rng) -> usize {
        self.epoch += 1;
        let epoch = self.epoch;
        self.var_mark[v] = epoch;
        let mut frontier: Vec<usize> = Vec::new();
        let mut open = self.available;
        for &c in &self.var_adj[v] {
            let c = c as usize;
            self.chk_mark[c] = epoch;
            frontier.push(c);
            if self.has_room(c) {
                open -= 1;
            }
        }
        let candidates: Vec<usize> = if self.var_adj[v].is_empty() {
            self.unreached(epoch)
        } else if open == 0 {
            // every check with room is already a neighbour
            Vec::new()
        } else {
            let mut depth = 0;
            loop {
                depth += 1;
                let mut next = Vec::new();
                for &c in &frontier {
                    for &u in &self.chk_adj[c] {
                        let u = u as usize;
                        if self.var_mark[u] == epoch {
                            continue;
                        }
                        self.var_mark[u] = epoch;
                        for &d in &self.var_adj[u] {
                            let d = d as usize;
                            if self.chk_mark[d] != epoch {
                                self.chk_mark[d] = epoch;
                                next.push(d);
                            }
                        }
                    }
                }
                if next.is_empty() {
                    break self.unreached(epoch);
                }
                let fresh = next.iter().filter(|&&c| self.has_room(c)).count();
                if fresh == open {
                    break next.into_iter().filter(|&c| self.has_room(c)).collect();
                }
                if depth == self.max_depth {
                    for &c in &next {
                        self.chk_mark[c] = epoch;
                    }
                    break self.unreached(epoch);
                }
                open -= fresh;
                frontier = next;
            }
        };
        let candidates = if candidates.is_empty() {
            // overfill a non-neighbour rather than repeat an edge
            let taken: std::collections::HashSet<u32> = self.var_adj[v].iter().copied().collect();
            (self.first_new..self.chk_adj.len()).filter(|c| !taken.contains(&(*c as u32))).collect()
        } else {
            candidates
        };
        let least = candidates.iter().map(|&c| self.chk_adj[c].len()).min().expect("some check is free");
        let ties: Vec<usize> = candidates.into_iter().filter(|&c| self.chk_adj[c].len() == least).collect();
        ties[rng.random_range(0..ties.len())]
    }

    fn unreached(&self, epoch: u32) -> Vec<usize> {
        (self.first_new..self.chk_adj.len())
            .filter(|&c| self.chk_mark[c] != epoch && self.has_room(c))
            .collect()
    }
}
