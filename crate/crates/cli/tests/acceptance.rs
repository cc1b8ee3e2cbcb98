//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances and runtime budgets are fixed here, not tuned.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use relay_ldpc::channel::{
    bi_awgn_capacity, bin_index_rate, composite_destination_rate, destination_conditional_rate, relay_link_rate,
    solve_optimal_alpha, PowerSplit, RelayChannelParams, DEFAULT_CAPACITY_POINTS,
};
use relay_ldpc::codegen::{construct_graph, construct_graph_over, CodeFile, GirthTarget, RelayCode, TwoLevelCode};
use relay_ldpc::degree::DegreeDistribution;
use relay_ldpc::exit::{initial_error_probability, is_open, threshold_search, ExitChartSet, ProbabilityGrid, DEFAULT_MARGIN};
use relay_ldpc::lp::{lp_solve, Constraint, LinearProgram, LpOutcome, Relation};
use relay_ldpc::optimizer::{optimize_single_code, run_design, DesignConfig, DesignFile};
use relay_ldpc::simulator::{bp_decode_syndrome, run_block_markov, run_sweep, BpGraph, SimConfig, SimReport, Stage1Llr};
use relay_ldpc::Error;
use statrs::distribution::{ContinuousCDF, Normal};
use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn reference() -> RelayChannelParams {
    RelayChannelParams::new(4.0, 1.0, 1.0, 1.0).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng) -> RelayChannelParams {
    let mut draw = || 10f64.powf(rng.random_range(-1.5..1.5));
    RelayChannelParams::new(draw(), draw(), draw(), draw()).unwrap()
}

// 1 -------------------------------------------------------------------------

fn alpha_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut interior, mut boundary) = (0, 0);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    while interior < 1000 || boundary < 1000 {
        let p = random_params(&mut rng);
        let opt = solve_optimal_alpha(&p, 1e-12).unwrap();
        let alpha = opt.split.alpha();
        if p.p() * p.n2() > p.p1() * p.n1() {
            if interior == 1000 {
                continue;
            }
            interior += 1;
            let s = opt.split;
            let residual = (relay_link_rate(&p, s) - composite_destination_rate(&p, s)).abs() / opt.rates.capacity;
            worst = worst.max(residual);
            let min_rate = |a: f64| {
                let s = PowerSplit::new(a.clamp(0.0, 1.0)).unwrap();
                relay_link_rate(&p, s).min(composite_destination_rate(&p, s))
            };
            let best = min_rate(alpha);
            if residual >= 1e-9 || best < min_rate(alpha - 0.01) || best < min_rate(alpha + 0.01) {
                failures.push(format!("{p:?}"));
            }
        } else {
            if boundary == 1000 {
                continue;
            }
            boundary += 1;
            if alpha != 1.0 {
                failures.push(format!("{p:?} gave alpha {alpha}"));
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!("1000 interior + 1000 boundary draws, max residual {worst:.1e} C, {} failures", failures.len()),
    )
}

// 2 -------------------------------------------------------------------------

fn rate_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let p = random_params(&mut rng);
        let s = PowerSplit::new(rng.random_range(0.0..=1.0)).unwrap();
        let total = composite_destination_rate(&p, s);
        let parts = bin_index_rate(&p, s) + destination_conditional_rate(&p, s);
        worst = worst.max((total - parts).abs() / total);
    }
    verdict(worst < 1e-12, format!("10^5 draws, max relative deviation {worst:.1e}"))
}

// 3 -------------------------------------------------------------------------

/// Monte Carlo density evolution under the symmetric-Gaussian message model.
struct McOracle {
    rng: ChaCha8Rng,
    normal: Normal,
}

impl McOracle {
    fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), normal: Normal::new(0.0, 1.0).unwrap() }
    }

    /// Check outputs of a degree-`dc` node fed `N(m, 2m)` messages whose
    /// error probability is `p`.
    fn check_outputs(&mut self, p: f64, dc: usize, count: usize) -> Vec<f64> {
        let z = -self.normal.inverse_cdf(p);
        let m = 2.0 * z * z;
        let sd = (2.0 * m).sqrt();
        (0..count)
            .map(|_| {
                let prod: f64 = (1..dc)
                    .map(|_| {
                        let x: f64 = m + sd * self.rng.sample::<f64, _>(StandardNormal);
                        (x / 2.0).tanh()
                    })
                    .product();
                2.0 * prod.clamp(-1.0 + 1e-15, 1.0 - 1e-15).atanh()
            })
            .collect()
    }

    /// Error probability of a degree-`d` variable node at `snr` whose check
    /// inputs are drawn from `pool`.
    fn variable_error(&mut self, pool: &[f64], snr: f64, d: usize, count: usize) -> f64 {
        let mut errors = 0.0;
        for _ in 0..count {
            let z: f64 = self.rng.sample(StandardNormal);
            let mut l = 2.0 * snr + 2.0 * snr.sqrt() * z;
            for _ in 1..d {
                l += pool[self.rng.random_range(0..pool.len())];
            }
            if l < 0.0 {
                errors += 1.0;
            } else if l == 0.0 {
                errors += 0.5;
            }
        }
        errors / count as f64
    }

    /// Openness of the regular `(dv, dc)` chart at `snr` on `points`
    /// log-spaced probabilities below the channel's own.
    fn regular_open(&mut self, dv: usize, dc: usize, snr: f64, points: usize, count: usize) -> bool {
        let p0 = initial_error_probability(snr);
        (0..points).all(|k| {
            let p = p0 * 1e-6f64.powf(k as f64 / (points - 1) as f64);
            let pool = self.check_outputs(p, dc, count);
            self.variable_error(&pool, snr, dv, count) <= p
        })
    }
}

fn exit_engine_vs_oracle() -> Verdict {
    const SAMPLES: usize = 1_000_000;
    let split = solve_optimal_alpha(&reference(), 1e-12).unwrap();
    let snrs = [split.snrs.snr1, split.snrs.snr2, split.snrs.snr3];
    let degrees = [2, 3, 4, 6, 10];
    let rho = DegreeDistribution::regular(6).unwrap();
    let mut oracle = McOracle::new(3);
    let mut worst = 0.0f64;
    for &snr in &snrs {
        let grid = ProbabilityGrid::logarithmic(initial_error_probability(snr), 24, 1e-6).unwrap();
        let set = ExitChartSet::compute(snr, &rho, &grid, &degrees).unwrap();
        for (k, &p) in grid.points().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let pool = oracle.check_outputs(p, 6, SAMPLES);
            for &d in &degrees {
                let mc = oracle.variable_error(&pool, snr, d, SAMPLES);
                worst = worst.max((mc - set.chart(d).unwrap()[k]).abs());
            }
        }
    }
    let l3 = DegreeDistribution::regular(3).unwrap();
    let engine = threshold_search(&l3, &rho, 0.5, 3.0, 1e-4).unwrap();
    let (mut lo, mut hi) = (0.5f64, 3.0f64);
    while hi / lo - 1.0 > 1e-3 {
        let mid = (lo * hi).sqrt();
        if oracle.regular_open(3, 6, mid, 40, 400_000) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mc_threshold = (lo * hi).sqrt();
    let gap_db = 10.0 * (engine / mc_threshold).log10();
    verdict(
        worst < 0.005 && gap_db.abs() < 0.05,
        format!(
            "max chart deviation {worst:.4} over 3 snrs x 5 degrees x 24 points; (3,6) threshold {:.3} dB vs oracle {:.3} dB",
            10.0 * engine.log10(),
            10.0 * mc_threshold.log10()
        ),
    )
}

// 4 -------------------------------------------------------------------------

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn lp_feasible(lp: &LinearProgram, x: &[f64]) -> bool {
    let tol = 1e-9;
    x.iter().all(|&v| v >= -tol)
        && lp.constraints.iter().all(|c| {
            let act: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            match c.relation {
                Relation::Le => act <= c.rhs + tol,
                Relation::Ge => act >= c.rhs - tol,
                Relation::Eq => (act - c.rhs).abs() <= tol,
            }
        })
}

/// Best objective over every basic point: each choice of `n` tight rows
/// among the constraints and the sign bounds.
fn vertex_oracle(lp: &LinearProgram) -> Option<f64> {
    let n = lp.objective.len();
    let mut rows: Vec<(Vec<f64>, f64)> = lp.constraints.iter().map(|c| (c.coeffs.clone(), c.rhs)).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e, 0.0));
    }
    let mut best: Option<f64> = None;
    for mask in 0u32..1 << rows.len() {
        if mask.count_ones() as usize != n {
            continue;
        }
        let chosen: Vec<usize> = (0..rows.len()).filter(|&i| mask >> i & 1 == 1).collect();
        let a = chosen.iter().map(|&i| rows[i].0.clone()).collect();
        let b = chosen.iter().map(|&i| rows[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if lp_feasible(lp, &x) {
                let obj: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
    }
    best
}

fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(1..=5);
    let mut constraints: Vec<Constraint> = (0..m)
        .map(|_| {
            let coeffs = (0..n).map(|_| rng.random_range(-3..=3) as f64).collect();
            let relation = match rng.random_range(0..5) {
                0 => Relation::Eq,
                1 | 2 => Relation::Ge,
                _ => Relation::Le,
            };
            Constraint::new(coeffs, relation, rng.random_range(-4..=6) as f64)
        })
        .collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        constraints.push(Constraint::le(e, rng.random_range(1..=5) as f64));
    }
    let objective = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    LinearProgram { objective, constraints }
}

fn lp_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let lp = random_lp(&mut rng);
        match (lp_solve(&lp).unwrap(), vertex_oracle(&lp)) {
            (LpOutcome::Optimal(s), Some(best)) => {
                let err = (s.objective - best).abs();
                worst = worst.max(err);
                if err > 1e-9 || !lp_feasible(&lp, &s.x) {
                    mismatches += 1;
                }
            }
            (LpOutcome::Infeasible, None) => {}
            _ => mismatches += 1,
        }
    }
    let mut singleton_mismatches = 0;
    let mut singletons = 0;
    let mut open_sets = 0;
    for snr in [0.6, 1.2, 2.5] {
        for dc in [4, 6, 8] {
            let rho = DegreeDistribution::regular(dc).unwrap();
            let grid = ProbabilityGrid::logarithmic(initial_error_probability(snr), 60, 1e-6).unwrap();
            let all = ExitChartSet::compute_range(snr, &rho, &grid, 8).unwrap();
            for d in 2..=8 {
                let mut charts = all.clone();
                charts.charts.retain(|&k, _| k == d);
                let open = is_open(charts.chart(d).unwrap(), &grid, DEFAULT_MARGIN);
                let agrees = match optimize_single_code(&charts, DEFAULT_MARGIN) {
                    Ok(design) => open && design.lambda.atoms() == [(d, 1.0)],
                    Err(Error::Infeasible(_)) => !open,
                    Err(_) => false,
                };
                singletons += 1;
                open_sets += usize::from(open);
                singleton_mismatches += usize::from(!agrees);
            }
        }
    }
    verdict(
        mismatches == 0 && singleton_mismatches == 0,
        format!(
            "200 LPs, {mismatches} mismatches, max objective error {worst:.1e}; {singletons} singleton degree sets ({open_sets} open), {singleton_mismatches} disagreements"
        ),
    )
}

// 5 -------------------------------------------------------------------------

fn design_quality() -> Verdict {
    let p = reference();
    let outcome = match run_design(&p, &DesignConfig::default()) {
        Ok(o) => o,
        Err(e) => return verdict(false, format!("design failed: {e}")),
    };
    let s = outcome.split.snrs;
    let c = |snr| bi_awgn_capacity(snr, DEFAULT_CAPACITY_POINTS);
    let (c1, c2, c3) = (c(s.snr1), c(s.snr2), c(s.snr3));
    let d = &outcome.design;
    let relay_ok = d.r0_star >= 0.90 * c3;
    let source_bound = c1.min(c2 + d.r0_star);
    let source_ok = d.r >= 0.85 * source_bound;
    let open = outcome.verification.is_open();
    verdict(
        relay_ok && source_ok && open,
        format!(
            "R0* = {:.4} = {:.3} c3; r = {:.4} = {:.3} of min(c1, c2 + R0*); re-verified open: {open}",
            d.r0_star,
            d.r0_star / c3,
            d.r,
            d.r / source_bound
        ),
    )
}

// 6 -------------------------------------------------------------------------

fn dense(rows: &[Vec<u32>], n: usize) -> Vec<Vec<u8>> {
    rows.iter()
        .map(|vars| {
            let mut row = vec![0u8; n];
            vars.iter().for_each(|&v| row[v as usize] = 1);
            row
        })
        .collect()
}

fn dense_syndrome(h: &[Vec<u8>], x: &[u8]) -> Vec<u8> {
    h.iter().map(|row| row.iter().zip(x).fold(0, |s, (a, b)| s ^ (a & b))).collect()
}

fn dense_rank(mut rows: Vec<Vec<u8>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][c] == 1) else { continue };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && rows[r][c] == 1 {
                let pivot = rows[rank].clone();
                rows[r].iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        rank += 1;
    }
    rank
}

fn binning_exhaustive() -> Verdict {
    let mut var = vec![2; 6];
    var.extend([3; 6]);
    let code = (0..200).find_map(|seed| {
        let h1 = construct_graph(&var, &[5; 6], seed, GirthTarget::BestEffort).ok()?;
        let h2 = construct_graph_over(&h1, &[1; 12], &[4; 3], seed, GirthTarget::BestEffort).ok()?;
        TwoLevelCode::from_graphs(h1, h2).ok()
    });
    let Some(code) = code else { return verdict(false, "no toy code with full stacked rank") };
    let h1 = dense(code.h1().checks(), 12);
    let h2 = dense(code.h2().checks(), 12);
    let rank = dense_rank(h1.iter().chain(&h2).cloned().collect());
    let mut bins: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for w in 0..1u32 << 12 {
        let x: Vec<u8> = (0..12).map(|b| (w >> b & 1) as u8).collect();
        if dense_syndrome(&h1, &x).iter().all(|&s| s == 0) {
            *bins.entry(dense_syndrome(&h2, &x)).or_default() += 1;
        }
    }
    let codewords: usize = bins.values().sum();
    let equal = bins.len() == 8 && bins.values().all(|&c| c == 8);
    let dims = (code.n(), code.k1(), code.k2()) == (12, 6, 3);
    verdict(
        dims && rank == 9 && codewords == 64 && equal,
        format!("n=12 k1=6 k2=3, stacked rank {rank}, {codewords} codewords in {} bins of sizes {:?}", bins.len(), bins.values().collect::<Vec<_>>()),
    )
}

// 7 -------------------------------------------------------------------------

fn coset_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    let mut converged = 0;
    for instance in 0..100u64 {
        let h = construct_graph(&[3; 256], &[6; 128], instance, GirthTarget::BestEffort).unwrap();
        let g = BpGraph::new(&[&h]);
        let t: Vec<u8> = (0..256).map(|_| rng.random_range(0..2u8)).collect();
        let s = g.syndrome(&t);
        let sigma = 0.7 + 0.2 * (instance % 3) as f64;
        let llr: Vec<f64> = t
            .iter()
            .map(|&b| 2.0 * ((1.0 - 2.0 * b as f64) + sigma * rng.sample::<f64, _>(StandardNormal)) / (sigma * sigma))
            .collect();
        let flipped: Vec<f64> = llr.iter().zip(&t).map(|(&l, &b)| if b == 1 { -l } else { l }).collect();
        let direct = bp_decode_syndrome(&g, &llr, &s, 30);
        let shifted = bp_decode_syndrome(&g, &flipped, &vec![0; g.m()], 30);
        let back: Vec<u8> = shifted.bits.iter().zip(&t).map(|(a, b)| a ^ b).collect();
        let same = direct.bits == back
            && direct.converged == shifted.converged
            && direct.iterations == shifted.iterations;
        mismatches += usize::from(!same);
        converged += usize::from(direct.converged);
    }
    verdict(mismatches == 0, format!("100 instances at n=256 ({converged} converged), {mismatches} mismatches"))
}

// 8 -------------------------------------------------------------------------

fn design_and_build(backoff: f64) -> Result<(DesignFile, TwoLevelCode, RelayCode), Error> {
    let p = reference();
    let outcome = run_design(&p, &DesignConfig { backoff, ..Default::default() })?;
    let design = DesignFile::from_outcome(&p, &outcome, backoff);
    let (_, code, relay) = CodeFile::build(&design, 4096, 1)?;
    Ok((design, code, relay))
}

fn sim(design: &DesignFile, trials: usize, noise_scale: f64, genies: bool) -> SimConfig {
    SimConfig {
        params: design.params,
        split: design.split().unwrap(),
        blocks: 4,
        max_bp_iters: 100,
        seed: 8,
        genie_relay: genies,
        genie_bin: genies,
        trials,
        noise_scale,
        stage1_llr: Stage1Llr::Mixture,
    }
}

fn sigma(r: &SimReport) -> f64 {
    let p = r.dest_bler();
    (p * (1.0 - p) / r.dest_blocks as f64).sqrt()
}

fn end_to_end() -> Verdict {
    let (d15, c15, r15) = match design_and_build(0.15) {
        Ok(x) => x,
        Err(e) => return verdict(false, format!("15% design/build failed: {e}")),
    };
    let (d20, c20, r20) = match design_and_build(0.20) {
        Ok(x) => x,
        Err(e) => return verdict(false, format!("20% design/build failed: {e}")),
    };
    let noiseless = run_block_markov(&SimConfig { blocks: 10, ..sim(&d20, 20, 0.0, false) }, &c20, &r20).unwrap();
    let clean = noiseless.relay_block_errors + noiseless.bin_block_errors + noiseless.dest_block_errors + noiseless.bit_errors == 0;
    let genie = run_block_markov(&sim(&d15, 200, 1.0, true), &c15, &r15).unwrap();
    let full = run_block_markov(&sim(&d20, 200, 1.0, false), &c20, &r20).unwrap();
    let scales = [1.0, 1.2, 1.4];
    let sweep = run_sweep(&sim(&d20, 100, 1.0, false), &c20, &r20, &scales).unwrap();
    let monotone = sweep.windows(2).all(|w| {
        let band = 3.0 * (sigma(&w[0]).powi(2) + sigma(&w[1]).powi(2)).sqrt();
        w[0].dest_bler() <= w[1].dest_bler() + band
    });
    let sweep_text: Vec<String> =
        sweep.iter().map(|r| format!("{}: {:.3}", r.noise_scale, r.dest_bler())).collect();
    verdict(
        clean && genie.dest_bler() < 0.1 && full.dest_bler() < 0.2 && monotone,
        format!(
            "noiseless B=10 errors: {}; genie 15% dest BLER {:.4} ({} blocks); no-genie 20% dest BLER {:.4} (bin {:.4}, relay {:.4}); sweep dest BLER {}",
            if clean { "none" } else { "some" },
            genie.dest_bler(),
            genie.dest_blocks,
            full.dest_bler(),
            full.bin_bler(),
            full.relay_bler(),
            sweep_text.join(", ")
        ),
    )
}

// 9 -------------------------------------------------------------------------

const SMALL_RUN: &str = r#"{
  "channel": {"p": 4, "p1": 1, "n1": 1, "n2": 1},
  "design": {"max_var_degree": 12, "grid_points": 120, "backoff": 0.2},
  "code": {"n": 512, "seed": 5},
  "simulation": {"blocks": 3, "trials": 8, "noise_scales": [1.0, 1.3]}
}"#;

fn cli_outputs(dir: &Path, threads: &str) -> Result<[Vec<u8>; 4], String> {
    std::fs::write(dir.join("run.json"), SMALL_RUN).map_err(|e| e.to_string())?;
    let path = |name: &str| dir.join(name).to_str().unwrap().to_string();
    let cfg = path("run.json");
    for args in [
        vec!["capacity", "--config", &cfg, "--out", &path("capacity.json")],
        vec!["design", "--config", &cfg, "--out", &path("design.json")],
        vec!["build", "--design", &path("design.json"), "--config", &cfg, "--out", &path("code.json")],
        vec!["simulate", "--config", &cfg, "--design", &path("design.json"), "--code", &path("code.json"), "--out", &path("sim.csv")],
    ] {
        let out = Command::new(env!("CARGO_BIN_EXE_relay-ldpc"))
            .env("RELAY_LDPC_THREADS", threads)
            .args(&args)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
        }
    }
    let read = |name: &str| std::fs::read(dir.join(name)).map_err(|e| e.to_string());
    Ok([read("capacity.json")?, without_metadata(&read("design.json")?)?, without_metadata(&read("code.json")?)?, read("sim.csv")?])
}

/// The document with its `metadata` member (a creation time) removed.
fn without_metadata(bytes: &[u8]) -> Result<Vec<u8>, String> {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
    v.as_object_mut().and_then(|o| o.remove("metadata")).ok_or("no metadata member")?;
    serde_json::to_vec(&v).map_err(|e| e.to_string())
}

fn reproducibility() -> Verdict {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (first, second) = match (cli_outputs(a.path(), "1"), cli_outputs(b.path(), "3")) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return verdict(false, e),
    };
    let names = ["capacity", "design", "code", "csv"];
    let differing: Vec<&str> = names.iter().zip(first.iter().zip(&second)).filter(|(_, (x, y))| x != y).map(|(n, _)| *n).collect();
    verdict(
        differing.is_empty(),
        format!("capacity/design/build/simulate on 1 and 3 threads; differing outputs: {differing:?}"),
    )
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [(&str, Duration, fn() -> Verdict); 9] = [
        ("alpha* correctness", Duration::from_secs(1), alpha_correctness),
        ("rate identity", Duration::from_secs(1), rate_identity),
        ("EXIT engine vs Monte Carlo oracle", Duration::from_secs(300), exit_engine_vs_oracle),
        ("LP correctness", Duration::from_secs(10), lp_correctness),
        ("design quality", Duration::from_secs(120), design_quality),
        ("binning exhaustive check", Duration::from_secs(1), binning_exhaustive),
        ("syndrome-BP coset equivalence", Duration::from_secs(30), coset_equivalence),
        ("end-to-end protocol", Duration::from_secs(1200), end_to_end),
        ("reproducibility", Duration::from_secs(600), reproducibility),
    ];
    // numeric arguments select criteria; cargo's own flags are ignored
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(k + 1)) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let pass = v.pass && elapsed <= *budget;
        failed += usize::from(!pass);
        println!(
            "{} {}. {name}: {} [{:.1?} of {:.0?}]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            v.detail,
            elapsed,
            budget
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
