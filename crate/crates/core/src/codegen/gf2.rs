//! Dense bit-packed GF(2) linear algebra for encoders and rank checks.

use super::TannerGraph;

/// Row-major bit matrix, 64 columns per word.
#[derive(Debug, Clone)]
pub(crate) struct BitRows {
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitRows {
    fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        Self { cols, words, data: vec![0; rows * words] }
    }

    pub fn from_graphs(graphs: &[&TannerGraph]) -> Self {
        let rows: usize = graphs.iter().map(|g| g.m()).sum();
        let mut out = Self::zeros(rows, graphs[0].n());
        let mut r = 0;
        for g in graphs {
            for check in g.checks() {
                for &v in check {
                    out.set(r, v as usize);
                }
                r += 1;
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.words.max(1)
    }

    fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    fn set(&mut self, r: usize, c: usize) {
        self.data[r * self.words + c / 64] |= 1 << (c % 64);
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for w in 0..self.words {
                self.data.swap(a * self.words + w, b * self.words + w);
            }
        }
    }

    /// `row[dst] ^= row[src]`, touching only words from `from` on.
    fn xor_into(&mut self, dst: usize, src: usize, from: usize) {
        let (w, d) = (self.words, &mut self.data);
        for k in from..w {
            d[dst * w + k] ^= d[src * w + k];
        }
    }

    /// Reduced row echelon form in place. Returns the pivot column of each
    /// of the first `rank` rows.
    pub fn reduce(&mut self) -> Vec<usize> {
        let rows = self.rows();
        let mut pivots = Vec::new();
        for c in 0..self.cols {
            let rank = pivots.len();
            if rank == rows {
                break;
            }
            let Some(p) = (rank..rows).find(|&r| self.get(r, c)) else { continue };
            self.swap_rows(rank, p);
            let from = c / 64;
            for r in 0..rows {
                if r != rank && self.get(r, c) {
                    self.xor_into(r, rank, from);
                }
            }
            pivots.push(c);
        }
        pivots
    }

    pub fn rank(mut self) -> usize {
        self.reduce().len()
    }
}

/// Systematic encoder: message bits sit on the non-pivot columns of the
/// reduced parity-check matrix and every pivot bit is a parity of them.
#[derive(Debug, Clone)]
pub struct SystematicEncoder {
    n: usize,
    info: Vec<usize>,
    pivots: Vec<usize>,
    /// `parity[i]` packs row `i` of the reduced matrix restricted to `info`.
    parity: BitRows,
}

impl SystematicEncoder {
    /// Encoder for the code with parity checks `graph`, and its rank.
    pub fn new(graph: &TannerGraph) -> (Self, usize) {
        let mut m = BitRows::from_graphs(&[graph]);
        let pivots = m.reduce();
        let n = graph.n();
        let mut is_pivot = vec![false; n];
        pivots.iter().for_each(|&c| is_pivot[c] = true);
        let info: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let mut parity = BitRows::zeros(pivots.len(), info.len());
        for i in 0..pivots.len() {
            for (j, &c) in info.iter().enumerate() {
                if m.get(i, c) {
                    parity.set(i, j);
                }
            }
        }
        let rank = pivots.len();
        (Self { n, info, pivots, parity }, rank)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of message bits.
    pub fn dimension(&self) -> usize {
        self.info.len()
    }

    /// Codeword positions carrying the message, ascending.
    pub fn info_positions(&self) -> &[usize] {
        &self.info
    }

    /// Codeword for `message` (one bit per byte, values 0/1).
    pub fn encode(&self, message: &[u8]) -> Vec<u8> {
        assert_eq!(message.len(), self.info.len(), "message length");
        let mut packed = vec![0u64; self.info.len().div_ceil(64)];
        for (j, &b) in message.iter().enumerate() {
            if b & 1 == 1 {
                packed[j / 64] |= 1 << (j % 64);
            }
        }
        let mut word = vec![0u8; self.n];
        for (&c, &b) in self.info.iter().zip(message) {
            word[c] = b & 1;
        }
        for (i, &c) in self.pivots.iter().enumerate() {
            let ones: u32 = self
                .parity
                .row(i)
                .iter()
                .zip(&packed)
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            word[c] = (ones & 1) as u8;
        }
        word
    }

    /// Message bits of a codeword.
    pub fn extract(&self, codeword: &[u8]) -> Vec<u8> {
        self.info.iter().map(|&c| codeword[c]).collect()
    }
}
