//! Monte Carlo run of the block-Markov decode-and-forward protocol.
//!
//! In block `i` the source sends a fresh codeword `c_i` superposed on a
//! coherent copy of the relay codeword for the bin index `s_{i-1}`. The relay
//! removes its own contribution, decodes `c_i` and transmits the relay
//! codeword of its estimate of `s_i` in block `i + 1`. The destination first
//! decodes `s_{i-1}` from block `i`, treating the fresh codeword as noise,
//! then returns to its buffered copy of block `i - 1`, removes the relay
//! codeword it decoded one block earlier and decodes `c_{i-1}` with the bin
//! index as extra parity checks. Every party knows `s_0 = 0`; block `B`
//! carries a known dummy message.

mod bp;

pub use bp::{bp_decode_syndrome, BpGraph, BpOutcome, DEFAULT_MAX_ITERS, LLR_CLAMP};

use crate::channel::{coherent_amplitude, PowerSplit, RelayChannelParams, SnrTriple};
use crate::codegen::{RelayCode, TwoLevelCode};
use crate::special::to_db;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Smallest noise variance used; a zero noise scale maps here.
pub const NOISE_FLOOR: f64 = 1e-30;

fn antipodal(bit: u8) -> f64 {
    1.0 - 2.0 * f64::from(bit & 1)
}

/// Source symbols `sqrt(alpha P) (1 - 2 c_new) + sqrt((1 - alpha) P) (1 - 2 c_relay)`.
pub fn modulate_superposition(
    c_new: &[u8],
    c_relay: &[u8],
    params: &RelayChannelParams,
    split: PowerSplit,
) -> Vec<f64> {
    assert_eq!(c_new.len(), c_relay.len(), "codeword lengths");
    let a = (split.alpha() * params.p()).sqrt();
    let r = ((1.0 - split.alpha()) * params.p()).sqrt();
    c_new.iter().zip(c_relay).map(|(&u, &w)| a * antipodal(u) + r * antipodal(w)).collect()
}

/// Relay symbols `sqrt(P1) (1 - 2 c_relay)`.
pub fn relay_samples(c_relay: &[u8], params: &RelayChannelParams) -> Vec<f64> {
    let amp = params.p1().sqrt();
    c_relay.iter().map(|&b| amp * antipodal(b)).collect()
}

/// Noise variances actually applied in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Noise {
    pub n1: f64,
    pub n2: f64,
}

impl Noise {
    /// `(N1, N2)` times `scale`, floored at [`NOISE_FLOOR`].
    pub fn scaled(params: &RelayChannelParams, scale: f64) -> Self {
        Self {
            n1: (params.n1() * scale).max(NOISE_FLOOR),
            n2: (params.n2() * scale).max(NOISE_FLOOR),
        }
    }
}

/// `y1 = x + z1` and `y = y1 + x1 + z2`.
pub fn transmit(x: &[f64], x1: &[f64], noise: Noise, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(x.len(), x1.len(), "sample lengths");
    let (s1, s2) = (noise.n1.sqrt(), noise.n2.sqrt());
    let mut y1 = Vec::with_capacity(x.len());
    let mut y = Vec::with_capacity(x.len());
    for (&xs, &rs) in x.iter().zip(x1) {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let a = xs + s1 * z1;
        y1.push(a);
        y.push(a + rs + s2 * z2);
    }
    (y1, y)
}

/// Relay LLRs for the fresh codeword once its own transmission is removed.
pub fn llr_relay(
    y1: &[f64],
    known_relay_bits: &[u8],
    params: &RelayChannelParams,
    split: PowerSplit,
    noise: Noise,
) -> Vec<f64> {
    let a = (split.alpha() * params.p()).sqrt();
    let r = ((1.0 - split.alpha()) * params.p()).sqrt();
    y1.iter()
        .zip(known_relay_bits)
        .map(|(&y, &b)| 2.0 * a * (y - r * antipodal(b)) / noise.n1)
        .collect()
}

/// How the destination's first stage models the fresh codeword.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage1Llr {
    /// Exact two-component mixture.
    #[default]
    Mixture,
    /// Interference folded into Gaussian noise of variance `sigma^2 + a^2`.
    Gaussian,
}

fn log_sum_exp(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    m + (-(x - y).abs()).exp().ln_1p()
}

/// LLRs of the relay-codeword bits from the destination observation, with
/// amplitude `b = sqrt(P1) + sqrt((1 - alpha) P)`, interference `+-a`,
/// `a = sqrt(alpha P)`, and noise variance `N1 + N2`.
pub fn llr_destination_stage1(
    y: &[f64],
    params: &RelayChannelParams,
    split: PowerSplit,
    noise: Noise,
    mode: Stage1Llr,
) -> Vec<f64> {
    let b = coherent_amplitude(params, split);
    let a = (split.alpha() * params.p()).sqrt();
    let var = noise.n1 + noise.n2;
    match mode {
        Stage1Llr::Mixture => y
            .iter()
            .map(|&y| {
                let e = |m: f64| -(y - m) * (y - m) / (2.0 * var);
                log_sum_exp(e(b + a), e(b - a)) - log_sum_exp(e(-b + a), e(-b - a))
            })
            .collect(),
        Stage1Llr::Gaussian => y.iter().map(|&y| 2.0 * b * y / (var + a * a)).collect(),
    }
}

/// LLRs of the relay-codeword bits when the fresh codeword is known, as in
/// the final block whose dummy message every party knows.
pub fn llr_destination_known_fresh(
    y: &[f64],
    fresh_bits: &[u8],
    params: &RelayChannelParams,
    split: PowerSplit,
    noise: Noise,
) -> Vec<f64> {
    let b = coherent_amplitude(params, split);
    let a = (split.alpha() * params.p()).sqrt();
    let var = noise.n1 + noise.n2;
    y.iter()
        .zip(fresh_bits)
        .map(|(&y, &c)| 2.0 * b * (y - a * antipodal(c)) / var)
        .collect()
}

/// LLRs of the fresh codeword at the destination once the relay codeword
/// `relay_bits` is subtracted.
pub fn llr_destination_stage2(
    y: &[f64],
    relay_bits: &[u8],
    params: &RelayChannelParams,
    split: PowerSplit,
    noise: Noise,
) -> Vec<f64> {
    let b = coherent_amplitude(params, split);
    let a = (split.alpha() * params.p()).sqrt();
    let var = noise.n1 + noise.n2;
    y.iter()
        .zip(relay_bits)
        .map(|(&y, &w)| 2.0 * a * (y - b * antipodal(w)) / var)
        .collect()
}

/// One simulation operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub params: RelayChannelParams,
    pub split: PowerSplit,
    pub blocks: usize,
    pub max_bp_iters: usize,
    pub seed: u64,
    pub genie_relay: bool,
    pub genie_bin: bool,
    pub trials: usize,
    pub noise_scale: f64,
    pub stage1_llr: Stage1Llr,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.blocks < 2 {
            return Err(Error::InvalidParameter(format!("blocks = {} (need at least 2)", self.blocks)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be positive".into()));
        }
        if self.max_bp_iters == 0 {
            return Err(Error::InvalidParameter("max_bp_iters must be positive".into()));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise_scale {}", self.noise_scale)));
        }
        Ok(())
    }
}

/// Decoder graphs built once per run and shared by all trials.
pub struct Decoders<'a> {
    source: &'a TwoLevelCode,
    relay: &'a RelayCode,
    h1: BpGraph,
    stacked: BpGraph,
    relay_graph: BpGraph,
}

impl<'a> Decoders<'a> {
    pub fn new(source: &'a TwoLevelCode, relay: &'a RelayCode) -> Result<Self> {
        if source.n() != relay.n() || relay.message_len() != source.k2() {
            return Err(Error::ConfigMismatch(format!(
                "relay code (n = {}, message {}) does not carry the bin index of the source code \
                 (n = {}, k2 = {})",
                relay.n(),
                relay.message_len(),
                source.n(),
                source.k2()
            )));
        }
        Ok(Self {
            source,
            relay,
            h1: BpGraph::new(&[source.h1()]),
            stacked: BpGraph::new(&[source.h1(), source.h2()]),
            relay_graph: BpGraph::new(&[relay.graph()]),
        })
    }
}

/// Error counts and iteration histograms of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub noise_scale: f64,
    pub trials: usize,
    pub blocks: usize,
    pub genie_relay: bool,
    pub genie_bin: bool,
    pub seed: u64,
    /// `(B - 1) / B`: share of blocks carrying a message.
    pub rate_factor: f64,
    pub relay_blocks: u64,
    pub relay_block_errors: u64,
    pub bin_blocks: u64,
    pub bin_block_errors: u64,
    pub dest_blocks: u64,
    pub dest_block_errors: u64,
    pub message_bits: u64,
    pub bit_errors: u64,
    /// Converged second-stage decodes whose output misses a target check.
    pub syndrome_violations: u64,
    /// `iters_*[k]` counts decodes that ran `k` iterations.
    pub iters_relay: Vec<u64>,
    pub iters_stage1: Vec<u64>,
    pub iters_stage2: Vec<u64>,
    /// Empirical mean transmit powers.
    pub source_power: f64,
    pub relay_power: f64,
    #[serde(skip)]
    power_samples: u64,
}

fn rate(errors: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        errors as f64 / total as f64
    }
}

fn histogram_mean(h: &[u64]) -> f64 {
    let count: u64 = h.iter().sum();
    if count == 0 {
        return 0.0;
    }
    h.iter().enumerate().map(|(k, &c)| k as f64 * c as f64).sum::<f64>() / count as f64
}

/// Wilson score interval for `errors` out of `total` at `z` standard
/// deviations.
pub fn binomial_interval(errors: u64, total: u64, z: f64) -> (f64, f64) {
    if total == 0 {
        return (0.0, 1.0);
    }
    let n = total as f64;
    let p = errors as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Column names of [`SimReport::csv_row`].
pub const CSV_HEADER: &str = "noise_scale,snr1_db,snr2_db,snr3_db,trials,relay_bler,bin_bler,dest_bler,\
e2e_ber,mean_bp_iters_stage1,mean_bp_iters_stage2,genie_relay,genie_bin,seed";

impl SimReport {
    fn empty(config: &SimConfig) -> Self {
        let bins = config.max_bp_iters + 1;
        Self {
            noise_scale: config.noise_scale,
            trials: 0,
            blocks: config.blocks,
            genie_relay: config.genie_relay,
            genie_bin: config.genie_bin,
            seed: config.seed,
            rate_factor: (config.blocks - 1) as f64 / config.blocks as f64,
            relay_blocks: 0,
            relay_block_errors: 0,
            bin_blocks: 0,
            bin_block_errors: 0,
            dest_blocks: 0,
            dest_block_errors: 0,
            message_bits: 0,
            bit_errors: 0,
            syndrome_violations: 0,
            iters_relay: vec![0; bins],
            iters_stage1: vec![0; bins],
            iters_stage2: vec![0; bins],
            source_power: 0.0,
            relay_power: 0.0,
            power_samples: 0,
        }
    }

    fn absorb(&mut self, other: &Self) {
        let total = self.power_samples + other.power_samples;
        if total > 0 {
            let (w, v) = (self.power_samples as f64, other.power_samples as f64);
            self.source_power = (self.source_power * w + other.source_power * v) / total as f64;
            self.relay_power = (self.relay_power * w + other.relay_power * v) / total as f64;
        }
        self.power_samples = total;
        self.trials += other.trials;
        self.relay_blocks += other.relay_blocks;
        self.relay_block_errors += other.relay_block_errors;
        self.bin_blocks += other.bin_blocks;
        self.bin_block_errors += other.bin_block_errors;
        self.dest_blocks += other.dest_blocks;
        self.dest_block_errors += other.dest_block_errors;
        self.message_bits += other.message_bits;
        self.bit_errors += other.bit_errors;
        self.syndrome_violations += other.syndrome_violations;
        for (a, b) in [
            (&mut self.iters_relay, &other.iters_relay),
            (&mut self.iters_stage1, &other.iters_stage1),
            (&mut self.iters_stage2, &other.iters_stage2),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn relay_bler(&self) -> f64 {
        rate(self.relay_block_errors, self.relay_blocks)
    }

    pub fn bin_bler(&self) -> f64 {
        rate(self.bin_block_errors, self.bin_blocks)
    }

    pub fn dest_bler(&self) -> f64 {
        rate(self.dest_block_errors, self.dest_blocks)
    }

    pub fn e2e_ber(&self) -> f64 {
        rate(self.bit_errors, self.message_bits)
    }

    pub fn mean_iters_stage1(&self) -> f64 {
        histogram_mean(&self.iters_stage1)
    }

    pub fn mean_iters_stage2(&self) -> f64 {
        histogram_mean(&self.iters_stage2)
    }

    /// One CSV line matching [`CSV_HEADER`]; SNRs are those of the scaled
    /// channel.
    pub fn csv_row(&self, params: &RelayChannelParams, split: PowerSplit) -> String {
        let noise = Noise::scaled(params, self.noise_scale);
        let scaled = RelayChannelParams::new(params.p(), params.p1(), noise.n1, noise.n2)
            .expect("scaling keeps the parameters valid");
        let snr = SnrTriple::new(&scaled, split);
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.noise_scale,
            to_db(snr.snr1),
            to_db(snr.snr2),
            to_db(snr.snr3),
            self.trials,
            self.relay_bler(),
            self.bin_bler(),
            self.dest_bler(),
            self.e2e_ber(),
            self.mean_iters_stage1(),
            self.mean_iters_stage2(),
            self.genie_relay,
            self.genie_bin,
            self.seed
        )
    }
}

fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.random::<bool>() as u8).collect()
}

/// Per-trial generator: the master seed selects the key, the trial index
/// the stream, so trials are independent of scheduling.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn run_trial(config: &SimConfig, dec: &Decoders, trial: u64) -> SimReport {
    let mut tally = SimReport::empty(config);
    tally.trials = 1;
    let mut rng = trial_rng(config.seed, trial);
    let (params, split) = (&config.params, config.split);
    let noise = Noise::scaled(params, config.noise_scale);
    let (src, relay) = (dec.source, dec.relay);
    let (n, k2) = (src.n(), src.k2());
    let iters = config.max_bp_iters;

    // s_{i-1} as the source, the relay and the destination know it
    let mut s_source = vec![0u8; k2];
    let mut s_relay = vec![0u8; k2];
    // destination's estimate of s_{i-2}, which fixes block i-1's relay part
    let mut s_dest_older = vec![0u8; k2];
    // block i-1 kept for the second stage
    let mut held: Option<(Vec<f64>, Vec<u8>, Vec<u8>, Vec<u8>)> = None;
    let mut power = (0.0, 0.0);

    for block in 1..=config.blocks {
        let message =
            if block < config.blocks { random_bits(&mut rng, src.message_len()) } else { vec![0; src.message_len()] };
        let codeword = src.encode(&message);
        let bin = src.h2().syndrome(&codeword);
        let coherent = relay.encode(&s_source);
        let sent = if s_relay == s_source { coherent.clone() } else { relay.encode(&s_relay) };
        let x = modulate_superposition(&codeword, &coherent, params, split);
        let x1 = relay_samples(&sent, params);
        power.0 += x.iter().map(|v| v * v).sum::<f64>();
        power.1 += x1.iter().map(|v| v * v).sum::<f64>();
        let (y1, y) = transmit(&x, &x1, noise, &mut rng);

        if block < config.blocks {
            tally.relay_blocks += 1;
            s_relay = if config.genie_relay {
                bin.clone()
            } else {
                let llr = llr_relay(&y1, &sent, params, split, noise);
                let out = bp_decode_syndrome(&dec.h1, &llr, &vec![0; src.k1()], iters);
                tally.iters_relay[out.iterations] += 1;
                tally.relay_block_errors += u64::from(out.bits != codeword);
                src.h2().syndrome(&out.bits)
            };
        }

        if block >= 2 {
            let (y_prev, c_prev, m_prev, bin_prev) = held.take().expect("previous block is buffered");
            tally.bin_blocks += 1;
            let s_hat = if config.genie_bin {
                bin_prev.clone()
            } else {
                let llr = if block == config.blocks {
                    llr_destination_known_fresh(&y, &codeword, params, split, noise)
                } else {
                    llr_destination_stage1(&y, params, split, noise, config.stage1_llr)
                };
                let out = bp_decode_syndrome(&dec.relay_graph, &llr, &vec![0; relay.k3()], iters);
                tally.iters_stage1[out.iterations] += 1;
                relay.encoder().extract(&out.bits)
            };
            tally.bin_block_errors += u64::from(s_hat != bin_prev);

            let relay_part = relay.encode(&s_dest_older);
            let llr = llr_destination_stage2(&y_prev, &relay_part, params, split, noise);
            let mut target = vec![0u8; src.k1()];
            target.extend_from_slice(&s_hat);
            let out = bp_decode_syndrome(&dec.stacked, &llr, &target, iters);
            tally.iters_stage2[out.iterations] += 1;
            if out.converged && dec.stacked.syndrome(&out.bits) != target {
                tally.syndrome_violations += 1;
            }
            tally.dest_blocks += 1;
            tally.dest_block_errors += u64::from(out.bits != c_prev);
            let decoded = src.encoder().extract(&out.bits);
            tally.message_bits += m_prev.len() as u64;
            tally.bit_errors += decoded.iter().zip(&m_prev).filter(|(a, b)| a != b).count() as u64;
            s_dest_older = s_hat;
        }
        held = Some((y, codeword, message, bin.clone()));
        s_source = bin;
    }
    let samples = (config.blocks * n) as u64;
    tally.power_samples = samples;
    tally.source_power = power.0 / samples as f64;
    tally.relay_power = power.1 / samples as f64;
    tally
}

/// Runs `config.trials` independent transmissions of `B` blocks. Trials run
/// in parallel on the current rayon pool; the result does not depend on the
/// number of workers.
pub fn run_block_markov(config: &SimConfig, source: &TwoLevelCode, relay: &RelayCode) -> Result<SimReport> {
    config.validate()?;
    let dec = Decoders::new(source, relay)?;
    Ok(run_with(config, &dec))
}

fn run_with(config: &SimConfig, dec: &Decoders) -> SimReport {
    let per_trial: Vec<SimReport> =
        (0..config.trials as u64).into_par_iter().map(|t| run_trial(config, dec, t)).collect();
    let mut report = SimReport::empty(config);
    per_trial.iter().for_each(|t| report.absorb(t));
    report
}

/// One report per noise scale, all with the same seed and trial streams.
pub fn run_sweep(
    config: &SimConfig,
    source: &TwoLevelCode,
    relay: &RelayCode,
    noise_scales: &[f64],
) -> Result<Vec<SimReport>> {
    config.validate()?;
    let dec = Decoders::new(source, relay)?;
    noise_scales
        .iter()
        .map(|&noise_scale| {
            let point = SimConfig { noise_scale, ..config.clone() };
            point.validate()?;
            Ok(run_with(&point, &dec))
        })
        .collect()
}
