//! The two-level source code, the relay code and their file container.

use super::gf2::{BitRows, SystematicEncoder};
use super::{
    break_even_parity, construct_graph, construct_graph_over, edge_fractions, match_edge_total,
    rng_for, sample_degree_sequence, GirthTarget, TannerGraph,
};
use crate::degree::DegreeDistribution;
use crate::optimizer::{content_hash, design_rate, DesignFile, Metadata, TwoLevelDesign};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

/// Format tag written into every code file.
pub const CODE_FORMAT: &str = "relay-ldpc-code/1";

const REPAIR_ATTEMPTS: u64 = 10;

/// Source code: `h1` defines the codewords, `h2` adds the parity checks
/// whose values form the bin index.
#[derive(Debug, Clone)]
pub struct TwoLevelCode {
    h1: TannerGraph,
    h2: TannerGraph,
    encoder: SystematicEncoder,
}

impl TwoLevelCode {
    /// Requires `h1` and the stacked matrix to have full row rank.
    pub fn from_graphs(h1: TannerGraph, h2: TannerGraph) -> Result<Self> {
        let (encoder, rank) = SystematicEncoder::new(&h1);
        if rank != h1.m() {
            return Err(Error::RankDeficient { what: "h1", rank, expected: h1.m() });
        }
        let stacked = BitRows::from_graphs(&[&h1, &h2]).rank();
        if stacked != h1.m() + h2.m() {
            return Err(Error::RankDeficient {
                what: "stacked h1/h2",
                rank: stacked,
                expected: h1.m() + h2.m(),
            });
        }
        Ok(Self { h1, h2, encoder })
    }

    pub fn n(&self) -> usize {
        self.h1.n()
    }

    pub fn k1(&self) -> usize {
        self.h1.m()
    }

    pub fn k2(&self) -> usize {
        self.h2.m()
    }

    /// Message length `n - k1`.
    pub fn message_len(&self) -> usize {
        self.encoder.dimension()
    }

    pub fn h1(&self) -> &TannerGraph {
        &self.h1
    }

    pub fn h2(&self) -> &TannerGraph {
        &self.h2
    }

    pub fn encoder(&self) -> &SystematicEncoder {
        &self.encoder
    }

    pub fn encode(&self, message: &[u8]) -> Vec<u8> {
        self.encoder.encode(message)
    }

    /// The bin index `h2 * c` of a codeword of `h1`.
    pub fn compute_bin_index(&self, codeword: &[u8]) -> Result<Vec<u8>> {
        if self.h1.syndrome(codeword).iter().any(|&s| s == 1) {
            return Err(Error::NotACodeword);
        }
        Ok(self.h2.syndrome(codeword))
    }
}

/// Relay code: its `n - k3 = k2` message bits are the bin index.
#[derive(Debug, Clone)]
pub struct RelayCode {
    graph: TannerGraph,
    encoder: SystematicEncoder,
}

impl RelayCode {
    pub fn from_graph(graph: TannerGraph) -> Result<Self> {
        let (encoder, rank) = SystematicEncoder::new(&graph);
        if rank != graph.m() {
            return Err(Error::RankDeficient { what: "relay code", rank, expected: graph.m() });
        }
        Ok(Self { graph, encoder })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn k3(&self) -> usize {
        self.graph.m()
    }

    pub fn message_len(&self) -> usize {
        self.encoder.dimension()
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    pub fn encoder(&self) -> &SystematicEncoder {
        &self.encoder
    }

    pub fn encode(&self, bin_index: &[u8]) -> Vec<u8> {
        self.encoder.encode(bin_index)
    }
}

/// What construction achieved, for the code file and for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildReport {
    /// Graph draws needed per component before the rank conditions held.
    pub attempts_h1: u64,
    pub attempts_h2: u64,
    pub attempts_relay: u64,
    pub four_cycles_h1: usize,
    pub four_cycles_stacked: usize,
    pub four_cycles_relay: usize,
    pub edges_h1: usize,
    pub edges_h2: usize,
    pub edges_relay: usize,
    /// `E1 / (E1 + E2)`.
    pub realized_mu: f64,
    /// `(n - k1) / n`.
    pub rate_h1: f64,
    /// `k2 / n`.
    pub rate_relay: f64,
    pub lambda1: Vec<(usize, f64)>,
    pub lambda2prime: Vec<(usize, f64)>,
    pub lambda3: Vec<(usize, f64)>,
}

fn check_side(rho: &DegreeDistribution, m: usize, edges: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    // a concentrated check distribution may list degrees above m for tiny m
    let mut d = if m >= rho.max_degree() {
        sample_degree_sequence(rho, m, seed)?
    } else {
        vec![rho.max_degree(); m]
    };
    match_edge_total(&mut d, edges, 1, n)?;
    Ok(d)
}

fn graph_for(
    lambda: &DegreeDistribution,
    rho: &DegreeDistribution,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<TannerGraph> {
    let mut var = sample_degree_sequence(lambda, n, seed)?;
    break_even_parity(&mut var);
    let checks = check_side(rho, m, var.iter().sum(), n, seed ^ 0x5eed)?;
    construct_graph(&var, &checks, seed, GirthTarget::BestEffort)
}

/// Builds both codes at block length `n`. The bin-index width
/// `k2 = round(n R0*)` is fixed first and `k3 = n - k2` follows, so the
/// relay code carries exactly the bin index. A component whose rank
/// condition fails is regrown from a fresh seed, at most ten times.
pub fn build_two_level_code(
    design: &TwoLevelDesign,
    n: usize,
    seed: u64,
) -> Result<(TwoLevelCode, RelayCode, BuildReport)> {
    let k2 = (n as f64 * design.r0_star).round() as usize;
    let k3 = n - k2;
    let rate1 = design_rate(&design.lambda1, &design.rho1);
    let k1 = (n as f64 * (1.0 - rate1)).round() as usize;
    if k1 + k2 > n {
        return Err(Error::UnrealizableDistribution(format!(
            "k1 = {k1} and k2 = {k2} leave no message bits at n = {n}"
        )));
    }
    let stream = |component: u64, attempt: u64| {
        use rand::RngCore;
        rng_for(seed, component * 64 + attempt).next_u64()
    };

    let mut attempts_h1 = 0;
    let mut attempts_h2 = 0;
    let two_level = 'outer: loop {
        attempts_h1 += 1;
        let h1 = graph_for(&design.lambda1, &design.rho1, n, k1, stream(1, attempts_h1))?;
        if BitRows::from_graphs(&[&h1]).rank() != k1 {
            if attempts_h1 == REPAIR_ATTEMPTS {
                let rank = BitRows::from_graphs(&[&h1]).rank();
                return Err(Error::RankDeficient { what: "h1", rank, expected: k1 });
            }
            continue;
        }
        let e1 = h1.edges();
        for attempt in 1..=REPAIR_ATTEMPTS {
            attempts_h2 += 1;
            let h2 = grow_h2(design, &h1, k2, e1, stream(2, attempts_h2))?;
            match TwoLevelCode::from_graphs(h1.clone(), h2) {
                Ok(code) => break 'outer code,
                Err(e @ Error::RankDeficient { .. }) if attempt == REPAIR_ATTEMPTS => return Err(e),
                Err(Error::RankDeficient { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
    };

    let mut attempts_relay = 0;
    let relay = loop {
        attempts_relay += 1;
        let g = graph_for(&design.lambda3, &design.rho3, n, k3, stream(3, attempts_relay))?;
        match RelayCode::from_graph(g) {
            Ok(code) => break code,
            Err(e @ Error::RankDeficient { .. }) if attempts_relay == REPAIR_ATTEMPTS => return Err(e),
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    };

    let (e1, e2, e3) = (two_level.h1.edges(), two_level.h2.edges(), relay.graph.edges());
    let report = BuildReport {
        attempts_h1,
        attempts_h2,
        attempts_relay,
        four_cycles_h1: two_level.h1.four_cycles(),
        four_cycles_stacked: two_level.h1.stack(&two_level.h2)?.four_cycles(),
        four_cycles_relay: relay.graph.four_cycles(),
        edges_h1: e1,
        edges_h2: e2,
        edges_relay: e3,
        realized_mu: e1 as f64 / (e1 + e2) as f64,
        rate_h1: (n - k1) as f64 / n as f64,
        rate_relay: k2 as f64 / n as f64,
        lambda1: edge_fractions(&two_level.h1.var_degrees()),
        lambda2prime: edge_fractions(&two_level.h2.var_degrees()),
        lambda3: edge_fractions(&relay.graph.var_degrees()),
    };
    Ok((two_level, relay, report))
}

/// The extra checks: edge count set by the design's `mu`, variable sockets
/// drawn from `lambda2'` on a random subset of the variables.
fn grow_h2(design: &TwoLevelDesign, h1: &TannerGraph, k2: usize, e1: usize, seed: u64) -> Result<TannerGraph> {
    let n = h1.n();
    if k2 == 0 {
        return TannerGraph::new(n, Vec::new());
    }
    let edges = if design.mu < 1.0 {
        (e1 as f64 * (1.0 - design.mu) / design.mu).round() as usize
    } else {
        (k2 as f64 * design.rho2prime.average_degree()).round() as usize
    };
    let edges = edges.max(k2);
    let holders = ((edges as f64 / design.lambda2prime.average_degree()).round() as usize)
        .clamp(design.lambda2prime.max_degree().min(n), n);
    let mut degrees = sample_degree_sequence(&design.lambda2prime, holders, seed)?;
    match_edge_total(&mut degrees, edges, 1, k2)?;
    break_even_parity(&mut degrees);

    let mut slots: Vec<usize> = (0..n).collect();
    slots.shuffle(&mut rng_for(seed, 0));
    let mut var = vec![0; n];
    for (&v, d) in slots.iter().zip(degrees) {
        var[v] = d;
    }
    let checks = check_side(&design.rho2prime, k2, edges, n, seed ^ 0x5eed)?;
    construct_graph_over(h1, &var, &checks, seed, GirthTarget::BestEffort)
}

/// Everything needed to rebuild both codes bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeFile {
    pub format: String,
    pub toolkit_version: String,
    pub n: usize,
    pub k1: usize,
    pub k2: usize,
    pub k3: usize,
    pub seed: u64,
    /// Content hash of the design file the codes were built from.
    pub design_hash: String,
    pub report: BuildReport,
    pub h1: TannerGraph,
    pub h2: TannerGraph,
    pub relay: TannerGraph,
    /// Excluded from the content hash.
    pub metadata: Metadata,
}

impl CodeFile {
    pub fn build(design: &DesignFile, n: usize, seed: u64) -> Result<(Self, TwoLevelCode, RelayCode)> {
        let (code, relay, report) = build_two_level_code(&design.design, n, seed)?;
        let file = Self::new(design.hash()?, seed, &code, &relay, report)?;
        Ok((file, code, relay))
    }

    pub fn new(
        design_hash: String,
        seed: u64,
        code: &TwoLevelCode,
        relay: &RelayCode,
        report: BuildReport,
    ) -> Result<Self> {
        if code.n() != relay.n() {
            return Err(Error::ConfigMismatch(format!(
                "source code length {} differs from relay code length {}",
                code.n(),
                relay.n()
            )));
        }
        Ok(Self {
            format: CODE_FORMAT.to_string(),
            toolkit_version: crate::VERSION.to_string(),
            n: code.n(),
            k1: code.k1(),
            k2: code.k2(),
            k3: relay.k3(),
            seed,
            design_hash,
            report,
            h1: code.h1.clone(),
            h2: code.h2.clone(),
            relay: relay.graph.clone(),
            metadata: Metadata::now(),
        })
    }

    /// Rebuilds the encoders and checks the recorded dimensions.
    pub fn codes(&self) -> Result<(TwoLevelCode, RelayCode)> {
        let code = TwoLevelCode::from_graphs(self.h1.clone(), self.h2.clone())?;
        let relay = RelayCode::from_graph(self.relay.clone())?;
        let dims = (code.n(), code.k1(), code.k2(), relay.n(), relay.k3());
        if dims != (self.n, self.k1, self.k2, self.n, self.k3) || relay.message_len() != self.k2 {
            return Err(Error::ConfigMismatch(format!(
                "code file dimensions (n, k1, k2, k3) = ({}, {}, {}, {}) disagree with its graphs",
                self.n, self.k1, self.k2, self.k3
            )));
        }
        Ok((code, relay))
    }

    pub fn hash(&self) -> Result<String> {
        content_hash(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        if file.format != CODE_FORMAT {
            return Err(Error::ConfigMismatch(format!(
                "code format {:?}, expected {CODE_FORMAT:?}",
                file.format
            )));
        }
        Ok(file)
    }
}
