use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use relay_ldpc::channel::{solve_optimal_alpha, PowerSplit, RelayChannelParams};
use relay_ldpc::codegen::{build_two_level_code, construct_graph, GirthTarget, RelayCode, TwoLevelCode};
use relay_ldpc::degree::DegreeDistribution;
use relay_ldpc::optimizer::TwoLevelDesign;
use relay_ldpc::simulator::{
    bp_decode_syndrome, llr_destination_stage1, llr_destination_stage2, llr_relay, modulate_superposition,
    relay_samples, run_block_markov, run_sweep, transmit, BpGraph, Noise, SimConfig, SimReport, Stage1Llr,
};

fn reference() -> RelayChannelParams {
    RelayChannelParams::new(4.0, 1.0, 1.0, 1.0).unwrap()
}

fn split() -> PowerSplit {
    solve_optimal_alpha(&reference(), 1e-12).unwrap().split
}

/// (3,6) source code with a third of the edges on extra checks, and a
/// (3,4) relay code whose threshold sits close to the reference snr3.
fn codes(n: usize) -> (TwoLevelCode, RelayCode) {
    let l3 = DegreeDistribution::regular(3).unwrap();
    let r6 = DegreeDistribution::regular(6).unwrap();
    let design = TwoLevelDesign {
        lambda1: l3.clone(),
        lambda2prime: l3.clone(),
        lambda2: l3.clone(),
        lambda3: l3,
        rho1: r6.clone(),
        rho2prime: r6.clone(),
        rho2: r6,
        rho3: DegreeDistribution::regular(4).unwrap(),
        mu: 2.0 / 3.0,
        r: 0.5,
        r0_star: 0.25,
    };
    let (code, relay, _) = build_two_level_code(&design, n, 21).unwrap();
    (code, relay)
}

fn config(trials: usize, noise_scale: f64) -> SimConfig {
    SimConfig {
        params: reference(),
        split: split(),
        blocks: 4,
        max_bp_iters: 60,
        seed: 17,
        genie_relay: false,
        genie_bin: false,
        trials,
        noise_scale,
        stage1_llr: Stage1Llr::Mixture,
    }
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

fn translate(llr: &[f64], t: &[u8]) -> Vec<f64> {
    llr.iter().zip(t).map(|(&l, &b)| if b == 1 { -l } else { l }).collect()
}

#[test]
fn syndrome_decoding_commutes_with_coset_translation() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let mut converged = 0;
    for instance in 0..100u64 {
        let h = construct_graph(&[3; 256], &[6; 128], instance, GirthTarget::BestEffort).unwrap();
        let g = BpGraph::new(&[&h]);
        let t: Vec<u8> = (0..256).map(|_| rng.random_range(0..2u8)).collect();
        let s = g.syndrome(&t);
        // noisy observation of t at a noise level where some instances fail
        let sigma = 0.7 + 0.2 * (instance % 3) as f64;
        let llr: Vec<f64> = t
            .iter()
            .map(|&b| {
                let z: f64 = rng.sample(StandardNormal);
                2.0 * ((1.0 - 2.0 * b as f64) + sigma * z) / (sigma * sigma)
            })
            .collect();
        let direct = bp_decode_syndrome(&g, &llr, &s, 30);
        let shifted = bp_decode_syndrome(&g, &translate(&llr, &t), &vec![0; g.m()], 30);
        let back: Vec<u8> = shifted.bits.iter().zip(&t).map(|(a, b)| a ^ b).collect();
        assert_eq!(direct.bits, back, "instance {instance}");
        assert_eq!((direct.converged, direct.iterations), (shifted.converged, shifted.iterations));
        converged += usize::from(direct.converged);
    }
    // both outcomes must be exercised
    assert!(converged > 0 && converged < 100, "{converged}");
}

#[test]
fn noiseless_run_has_no_errors() {
    let (code, relay) = codes(512);
    let cfg = SimConfig { blocks: 10, ..config(4, 0.0) };
    let rep = run_block_markov(&cfg, &code, &relay).unwrap();
    assert_eq!(rep.dest_blocks, 4 * 9);
    assert_eq!(
        (rep.relay_block_errors, rep.bin_block_errors, rep.dest_block_errors, rep.bit_errors),
        (0, 0, 0, 0)
    );
    assert_eq!(rep.syndrome_violations, 0);
    assert!((rep.rate_factor - 0.9).abs() < 1e-15);
}

#[test]
fn transmit_powers_match_the_budget() {
    let (code, relay) = codes(512);
    let cfg = config(10, 1.0);
    let rep = run_block_markov(&cfg, &code, &relay).unwrap();
    let p = reference();
    let alpha = cfg.split.alpha();
    // x^2 = P + 2 a r (+-1), so the per-sample spread of x^2 is 2 a r
    let spread = 2.0 * (alpha * p.p()).sqrt() * ((1.0 - alpha) * p.p()).sqrt();
    let samples = (cfg.trials * cfg.blocks * code.n()) as f64;
    assert!((rep.source_power - p.p()).abs() < 3.0 * spread / samples.sqrt(), "{}", rep.source_power);
    assert!((rep.relay_power - p.p1()).abs() < 1e-12);
}

#[test]
fn channel_noise_has_the_configured_variances() {
    let p = reference();
    let noise = Noise::scaled(&p, 1.0);
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 1.5 } else { -0.5 }).collect();
    let x1 = vec![0.75; n];
    let (y1, y) = transmit(&x, &x1, noise, &mut rng);
    let total: Vec<f64> = (0..n).map(|k| y[k] - x[k] - x1[k]).collect();
    let second: Vec<f64> = (0..n).map(|k| y[k] - y1[k] - x1[k]).collect();
    let first: Vec<f64> = (0..n).map(|k| y1[k] - x[k]).collect();
    assert!((sample_variance(&total) / (p.n1() + p.n2()) - 1.0).abs() < 0.01);
    assert!((sample_variance(&second) / p.n2() - 1.0).abs() < 0.01);
    assert!((sample_variance(&first) / p.n1() - 1.0).abs() < 0.01);
}

#[test]
fn relay_llrs_are_consistent_gaussians() {
    let p = reference();
    let split = split();
    let noise = Noise::scaled(&p, 1.0);
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let fresh = vec![0u8; n];
    let relay: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
    let x = modulate_superposition(&fresh, &relay, &p, split);
    let (y1, _) = transmit(&x, &relay_samples(&relay, &p), noise, &mut rng);
    let llr = llr_relay(&y1, &relay, &p, split, noise);
    let expected = 2.0 * split.alpha() * p.p() / p.n1();
    let mean = llr.iter().sum::<f64>() / n as f64;
    assert!((mean / expected - 1.0).abs() < 0.01, "{mean} vs {expected}");
    assert!((sample_variance(&llr) / (2.0 * expected) - 1.0).abs() < 0.01);
}

#[test]
fn mixture_and_gaussian_stage1_agree_under_weak_interference() {
    let p = reference();
    let noise = Noise::scaled(&p, 1.0);
    let sigma2 = noise.n1 + noise.n2;
    // a^2 / sigma^2 = alpha P / 2 < 0.1 needs alpha < 0.05
    for alpha in [0.01, 0.03, 0.049] {
        let split = PowerSplit::new(alpha).unwrap();
        assert!(alpha * p.p() / sigma2 < 0.1);
        let ys: Vec<f64> = (-60..=60).filter(|&k| k != 0).map(|k| k as f64 * 0.05).collect();
        let mix = llr_destination_stage1(&ys, &p, split, noise, Stage1Llr::Mixture);
        let gauss = llr_destination_stage1(&ys, &p, split, noise, Stage1Llr::Gaussian);
        for ((y, m), g) in ys.iter().zip(&mix).zip(&gauss) {
            assert!((m / g - 1.0).abs() < 0.05, "alpha {alpha} y {y}: {m} vs {g}");
        }
    }
}

#[test]
fn relay_link_is_no_worse_than_the_direct_link() {
    let (code, _) = codes(512);
    let p = reference();
    let split = split();
    let noise = Noise::scaled(&p, 1.6);
    let h1 = BpGraph::new(&[code.h1()]);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut relay_errors, mut dest_errors) = (0usize, 0usize);
    for _ in 0..40 {
        let msg: Vec<u8> = (0..code.message_len()).map(|_| rng.random_range(0..2u8)).collect();
        let c = code.encode(&msg);
        let w: Vec<u8> = (0..code.n()).map(|_| rng.random_range(0..2u8)).collect();
        let x = modulate_superposition(&c, &w, &p, split);
        let (y1, y) = transmit(&x, &relay_samples(&w, &p), noise, &mut rng);
        let zero = vec![0; code.h1().m()];
        let at_relay = bp_decode_syndrome(&h1, &llr_relay(&y1, &w, &p, split, noise), &zero, 60);
        let at_dest = bp_decode_syndrome(&h1, &llr_destination_stage2(&y, &w, &p, split, noise), &zero, 60);
        relay_errors += at_relay.bits.iter().zip(&c).filter(|(a, b)| a != b).count();
        dest_errors += at_dest.bits.iter().zip(&c).filter(|(a, b)| a != b).count();
    }
    assert!(dest_errors > 0, "operating point too clean to compare");
    assert!(relay_errors <= dest_errors, "{relay_errors} > {dest_errors}");
}

fn sigma(r: &SimReport) -> f64 {
    let p = r.dest_bler();
    (p * (1.0 - p) / r.dest_blocks as f64).sqrt()
}

#[test]
fn sweep_error_rates_fall_with_the_noise() {
    let (code, relay) = codes(512);
    let cfg = config(30, 1.0);
    let reports = run_sweep(&cfg, &code, &relay, &[0.6, 1.0, 1.4]).unwrap();
    assert!(reports[2].dest_block_errors > 0, "sweep never leaves the error-free region");
    for pair in reports.windows(2) {
        let (low, high) = (&pair[0], &pair[1]);
        let band = 3.0 * (sigma(low).powi(2) + sigma(high).powi(2)).sqrt();
        assert!(low.dest_bler() <= high.dest_bler() + band, "{} vs {}", low.dest_bler(), high.dest_bler());
        assert!(low.bin_bler() <= high.bin_bler() + band);
    }
    assert!(reports.iter().all(|r| r.syndrome_violations == 0));
}

#[test]
fn single_point_sweep_matches_a_run_and_repeats() {
    let (code, relay) = codes(512);
    let cfg = config(12, 1.2);
    let sweep = run_sweep(&cfg, &code, &relay, &[1.2]).unwrap();
    let direct = run_block_markov(&cfg, &code, &relay).unwrap();
    assert_eq!(sweep, vec![direct.clone()]);
    assert_eq!(run_block_markov(&cfg, &code, &relay).unwrap(), direct);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let threaded = pool.install(|| run_block_markov(&cfg, &code, &relay).unwrap());
    assert_eq!(threaded, direct);
    let other = run_block_markov(&SimConfig { seed: 18, ..cfg }, &code, &relay).unwrap();
    assert_ne!(other.iters_stage2, direct.iters_stage2);
}

#[test]
fn genies_never_add_errors() {
    let (code, relay) = codes(512);
    for scale in [1.0, 1.3] {
        let plain = run_block_markov(&config(20, scale), &code, &relay).unwrap();
        let genie =
            run_block_markov(&SimConfig { genie_relay: true, genie_bin: true, ..config(20, scale) }, &code, &relay)
                .unwrap();
        assert_eq!((genie.relay_block_errors, genie.bin_block_errors), (0, 0));
        assert!(genie.dest_block_errors <= plain.dest_block_errors, "scale {scale}");
        assert!(genie.bit_errors <= plain.bit_errors, "scale {scale}");
    }
}
