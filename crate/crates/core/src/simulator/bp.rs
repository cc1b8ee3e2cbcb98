//! Flooding sum-product decoding against a target syndrome.

use crate::codegen::TannerGraph;

/// Magnitude cap on channel and check messages; stands in for certainty.
pub const LLR_CLAMP: f64 = 50.0;
const PHI_FLOOR: f64 = 1e-12;

/// Default iteration budget.
pub const DEFAULT_MAX_ITERS: usize = 100;

/// Edge-indexed form of one or more stacked parity-check graphs.
#[derive(Debug, Clone)]
pub struct BpGraph {
    n: usize,
    /// Edges of check `c` are `check_ptr[c]..check_ptr[c + 1]`.
    check_ptr: Vec<usize>,
    edge_var: Vec<u32>,
    /// Edges of variable `v` are `var_edges[var_ptr[v]..var_ptr[v + 1]]`.
    var_ptr: Vec<usize>,
    var_edges: Vec<u32>,
}

impl BpGraph {
    /// Stacks the graphs in order; all must share the variable count.
    pub fn new(graphs: &[&TannerGraph]) -> Self {
        let n = graphs.first().map_or(0, |g| g.n());
        assert!(graphs.iter().all(|g| g.n() == n), "stacked graphs differ in length");
        let mut check_ptr = vec![0];
        let mut edge_var = Vec::new();
        for g in graphs {
            for vars in g.checks() {
                edge_var.extend_from_slice(vars);
                check_ptr.push(edge_var.len());
            }
        }
        let mut var_ptr = vec![0; n + 1];
        edge_var.iter().for_each(|&v| var_ptr[v as usize + 1] += 1);
        for v in 0..n {
            var_ptr[v + 1] += var_ptr[v];
        }
        let mut fill = var_ptr.clone();
        let mut var_edges = vec![0; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v as usize]] = e as u32;
            fill[v as usize] += 1;
        }
        Self { n, check_ptr, edge_var, var_ptr, var_edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.check_ptr.len() - 1
    }

    pub fn syndrome(&self, bits: &[u8]) -> Vec<u8> {
        (0..self.m())
            .map(|c| {
                self.edge_var[self.check_ptr[c]..self.check_ptr[c + 1]]
                    .iter()
                    .fold(0, |s, &v| s ^ bits[v as usize])
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpOutcome {
    pub bits: Vec<u8>,
    pub converged: bool,
    /// Iterations run, counted from 1.
    pub iterations: usize,
}

/// `-ln tanh(x / 2)`, its own inverse on `(0, inf)`.
fn phi(x: f64) -> f64 {
    let e = (-x.max(PHI_FLOOR)).exp();
    (e.ln_1p() - (-e).ln_1p()).max(0.0)
}

/// Sum-product decoding where check `c` must equal `syndrome[c]`; a check
/// with syndrome 1 flips the sign of its outgoing messages. A bit decides to
/// 1 when its posterior has the sign bit set, so that negating every LLR
/// maps decisions exactly. Stops at the first iteration whose decisions meet
/// the syndrome.
pub fn bp_decode_syndrome(graph: &BpGraph, llr: &[f64], syndrome: &[u8], max_iters: usize) -> BpOutcome {
    assert_eq!(llr.len(), graph.n, "llr length");
    assert_eq!(syndrome.len(), graph.m(), "syndrome length");
    let channel: Vec<f64> = llr.iter().map(|l| l.clamp(-LLR_CLAMP, LLR_CLAMP)).collect();
    let edges = graph.edge_var.len();
    let mut c2v = vec![0.0f64; edges];
    let mut v2c = vec![0.0f64; edges];
    let mut mag = vec![0.0f64; edges];
    let mut bits = vec![0u8; graph.n];

    for iteration in 1..=max_iters.max(1) {
        for v in 0..graph.n {
            let es = &graph.var_edges[graph.var_ptr[v]..graph.var_ptr[v + 1]];
            let total = es.iter().fold(channel[v], |s, &e| s + c2v[e as usize]);
            for &e in es {
                v2c[e as usize] = total - c2v[e as usize];
            }
        }
        for c in 0..graph.m() {
            let range = graph.check_ptr[c]..graph.check_ptr[c + 1];
            let mut negative = syndrome[c] & 1 == 1;
            let mut sum = 0.0;
            for e in range.clone() {
                negative ^= v2c[e].is_sign_negative();
                mag[e] = phi(v2c[e].abs());
                sum += mag[e];
            }
            for e in range {
                let out = phi(sum - mag[e]).min(LLR_CLAMP);
                let flip = negative ^ v2c[e].is_sign_negative();
                c2v[e] = if flip { -out } else { out };
            }
        }
        for v in 0..graph.n {
            let es = &graph.var_edges[graph.var_ptr[v]..graph.var_ptr[v + 1]];
            let total = es.iter().fold(channel[v], |s, &e| s + c2v[e as usize]);
            bits[v] = total.is_sign_negative() as u8;
        }
        let satisfied = (0..graph.m()).all(|c| {
            graph.edge_var[graph.check_ptr[c]..graph.check_ptr[c + 1]]
                .iter()
                .fold(syndrome[c] & 1, |s, &v| s ^ bits[v as usize])
                == 0
        });
        if satisfied {
            return BpOutcome { bits, converged: true, iterations: iteration };
        }
    }
    BpOutcome { bits, converged: false, iterations: max_iters.max(1) }
}
