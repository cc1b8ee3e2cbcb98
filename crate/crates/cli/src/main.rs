//! `relay-ldpc`: capacity analysis, code design, construction and
//! simulation for the Gaussian degraded relay channel.

mod config;

use clap::{Args, Parser, Subcommand};
use config::{parse_noise_scales, RunConfig};
use relay_ldpc::channel::{bi_awgn_capacity, gaussian_capacity, solve_optimal_alpha, DEFAULT_CAPACITY_POINTS};
use relay_ldpc::codegen::CodeFile;
use relay_ldpc::optimizer::{run_design, Ceilings, DesignFile};
use relay_ldpc::simulator::{binomial_interval, run_sweep, SimConfig, SimReport, CSV_HEADER};
use relay_ldpc::Error;
use serde::Serialize;
use std::fs::OpenOptions;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const ALPHA_TOL: f64 = 1e-10;
const THREADS_VAR: &str = "RELAY_LDPC_THREADS";

#[derive(Parser)]
#[command(name = "relay-ldpc", version, about = "LDPC design and simulation for the Gaussian degraded relay channel")]
struct Cli {
    /// Extra diagnostics on stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal power split, capacity, design SNRs and rate ceilings.
    Capacity {
        #[arg(long)]
        config: PathBuf,
        /// Write the JSON summary here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Design the relay code and the two-level source code.
    Design {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Construct parity-check matrices from a design file.
    Build {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Supplies `code.n` and `code.seed` when the flags are absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the block-Markov protocol and append one CSV row per noise scale.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    code: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    genie_relay: bool,
    #[arg(long)]
    genie_bin: bool,
    /// Comma-separated multipliers of (N1, N2), e.g. "0.5,1.0,2.0".
    #[arg(long)]
    noise_scales: Option<String>,
}

/// A failure together with its exit code.
#[derive(Debug)]
enum Failure {
    Config(String),
    Infeasible(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Runtime(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Infeasible(m) => write!(f, "infeasible design: {m}"),
            Failure::Runtime(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible(_) => Failure::Infeasible(e.to_string()),
            Error::InvalidParameter(_)
            | Error::ConfigMismatch(_)
            | Error::Json(_)
            | Error::DegreeOutOfRange { .. }
            | Error::UnrealizableDistribution(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("relay-ldpc: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Outcome<()> {
    configure_threads()?;
    let verbose = cli.verbose;
    match cli.command {
        Command::Capacity { config, out } => cmd_capacity(&RunConfig::load(&config).map_err(Failure::Config)?, out.as_deref()),
        Command::Design { config, out } => cmd_design(&RunConfig::load(&config).map_err(Failure::Config)?, &out, verbose),
        Command::Build { design, out, config, n, seed } => {
            let knobs = match config {
                Some(path) => RunConfig::load(&path).map_err(Failure::Config)?.code,
                None => config::CodeKnobs::default(),
            };
            cmd_build(&design, &out, n.unwrap_or(knobs.n), seed.unwrap_or(knobs.seed), verbose)
        }
        Command::Simulate(args) => cmd_simulate(&args, verbose),
    }
}

fn configure_threads() -> Outcome<()> {
    let Ok(text) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let threads: usize =
        text.trim().parse().map_err(|_| Failure::Config(format!("{THREADS_VAR}={text:?} is not a count")))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn read_text(path: &Path) -> Outcome<String> {
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(text)
}

fn write_text(path: &Path, text: &str) -> Outcome<()> {
    std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Serialize)]
struct CapacitySummary {
    alpha: f64,
    relay_active: bool,
    capacity: f64,
    r0: f64,
    r_relay: f64,
    r_dest: f64,
    snr1: f64,
    snr2: f64,
    snr3: f64,
    snr1_db: f64,
    snr2_db: f64,
    snr3_db: f64,
    gaussian: Ceilings,
    binary: Ceilings,
}

fn cmd_capacity(config: &RunConfig, out: Option<&Path>) -> Outcome<()> {
    let opt = solve_optimal_alpha(&config.channel, ALPHA_TOL)?;
    let s = opt.snrs;
    let c = |snr: f64| bi_awgn_capacity(snr, DEFAULT_CAPACITY_POINTS);
    let summary = CapacitySummary {
        alpha: opt.split.alpha(),
        relay_active: config.channel.p1() > 0.0,
        capacity: opt.rates.capacity,
        r0: opt.rates.r0,
        r_relay: opt.rates.r_relay,
        r_dest: opt.rates.r_dest,
        snr1: s.snr1,
        snr2: s.snr2,
        snr3: s.snr3,
        snr1_db: db(s.snr1),
        snr2_db: db(s.snr2),
        snr3_db: db(s.snr3),
        gaussian: Ceilings { c1: gaussian_capacity(s.snr1), c2: gaussian_capacity(s.snr2), c3: gaussian_capacity(s.snr3) },
        binary: Ceilings { c1: c(s.snr1), c2: c(s.snr2), c3: c(s.snr3) },
    };
    let json = serde_json::to_string_pretty(&summary).map_err(Error::from)?;
    let mut table = String::new();
    if !summary.relay_active {
        table.push_str("relay inactive, α*=1\n");
    }
    table.push_str(&format!("alpha*      {:.6}\n", summary.alpha));
    table.push_str(&format!("capacity C  {:.6} bits/use\n", summary.capacity));
    table.push_str(&format!("R0          {:.6} bits/use\n", summary.r0));
    table.push_str("link   snr        snr_db   gaussian  binary\n");
    for (name, snr, g, b) in [
        ("1", s.snr1, summary.gaussian.c1, summary.binary.c1),
        ("2", s.snr2, summary.gaussian.c2, summary.binary.c2),
        ("3", s.snr3, summary.gaussian.c3, summary.binary.c3),
    ] {
        table.push_str(&format!("snr{name}   {snr:<10.6} {:>7.3}  {g:.6}  {b:.6}\n", db(snr)));
    }
    print!("{table}");
    match out {
        Some(path) => write_text(path, &json),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn cmd_design(config: &RunConfig, out: &Path, verbose: bool) -> Outcome<()> {
    let start = Instant::now();
    let outcome = run_design(&config.channel, &config.design)?;
    let file = DesignFile::from_outcome(&config.channel, &outcome, config.design.backoff);
    if verbose {
        eprintln!("design finished in {:.1?}", start.elapsed());
        eprintln!("verification: {:?}", file.verification);
    }
    let d = &file.design;
    let ceil = &file.ceilings;
    write_text(out, &file.to_json()?)?;
    println!("alpha*  {:.6}", file.alpha);
    println!("r       {:.6}  (binary-input bound {:.6}, gap {:.6})", d.r, ceil.source_bound(d.r0_star), ceil.source_bound(d.r0_star) - d.r);
    println!("R0*     {:.6}  (binary-input bound {:.6}, gap {:.6})", d.r0_star, ceil.c3, ceil.c3 - d.r0_star);
    println!("mu      {:.6}", d.mu);
    if let Some(gap) = file.backoff_gap {
        println!(
            "backoff {:.0}%: designed {:.2} dB below snr1/snr2, {:.2} dB below snr3",
            100.0 * file.backoff,
            gap.source_db,
            gap.relay_db
        );
    }
    println!("design  {}", out.display());
    Ok(())
}

fn cmd_build(design: &Path, out: &Path, n: usize, seed: u64, verbose: bool) -> Outcome<()> {
    let design = DesignFile::from_json(&read_text(design)?)?;
    let start = Instant::now();
    let (file, _, _) = CodeFile::build(&design, n, seed)?;
    if verbose {
        eprintln!("built in {:.1?}: {:?}", start.elapsed(), file.report);
    }
    write_text(out, &file.to_json()?)?;
    println!("n {}  k1 {}  k2 {}  k3 {}  mu {:.6}", file.n, file.k1, file.k2, file.k3, file.report.realized_mu);
    println!("code  {}", out.display());
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, verbose: bool) -> Outcome<()> {
    let config = RunConfig::load(&args.config).map_err(Failure::Config)?;
    let design = DesignFile::from_json(&read_text(&args.design)?)?;
    let code = CodeFile::from_json(&read_text(&args.code)?)?;
    if code.design_hash != design.hash()? {
        return Err(Failure::Config(format!(
            "{} was not built from {}",
            args.code.display(),
            args.design.display()
        )));
    }
    if design.params != config.channel {
        return Err(Failure::Config(format!("{} was designed for another channel", args.design.display())));
    }
    let sim = &config.simulation;
    let scales = match &args.noise_scales {
        Some(text) => parse_noise_scales(text).map_err(Failure::Config)?,
        None => sim.noise_scales.clone(),
    };
    let sim_config = SimConfig {
        params: config.channel,
        split: design.split()?,
        blocks: sim.blocks,
        max_bp_iters: sim.max_bp_iters,
        seed: args.seed.unwrap_or(sim.seed),
        genie_relay: args.genie_relay || sim.genie_relay,
        genie_bin: args.genie_bin || sim.genie_bin,
        trials: args.trials.unwrap_or(sim.trials),
        noise_scale: scales[0],
        stage1_llr: sim.stage1_llr,
    };
    sim_config.validate()?;
    let (source, relay) = code.codes()?;
    let start = Instant::now();
    let reports = run_sweep(&sim_config, &source, &relay, &scales)?;
    if verbose {
        eprintln!("{} trials x {} scales in {:.1?}", sim_config.trials, scales.len(), start.elapsed());
    }
    let rows: Vec<String> = reports.iter().map(|r| r.csv_row(&sim_config.params, sim_config.split)).collect();
    append_csv(&args.out, &rows)?;
    for r in &reports {
        print_summary(r);
    }
    Ok(())
}

/// Appends rows, writing the header first when the file is new or empty.
fn append_csv(path: &Path, rows: &[String]) -> Outcome<()> {
    let existing = std::fs::read_to_string(path).unwrap_or_default();
    if let Some(header) = existing.lines().next() {
        if header != CSV_HEADER {
            return Err(Failure::Config(format!("{} has a different CSV header", path.display())));
        }
    }
    let mut text = String::new();
    if existing.is_empty() {
        text.push_str(CSV_HEADER);
        text.push('\n');
    }
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    let io = |e: std::io::Error| Failure::Runtime(format!("{}: {e}", path.display()));
    OpenOptions::new().create(true).append(true).open(path).map_err(io)?.write_all(text.as_bytes()).map_err(io)
}

fn print_summary(r: &SimReport) {
    let interval = |errors: u64, total: u64| {
        let (lo, hi) = binomial_interval(errors, total, 1.96);
        format!("{:.4} [{lo:.4}, {hi:.4}]", if total == 0 { 0.0 } else { errors as f64 / total as f64 })
    };
    println!("noise scale {}  ({} trials, {} blocks)", r.noise_scale, r.trials, r.blocks);
    println!("  relay BLER  {}", interval(r.relay_block_errors, r.relay_blocks));
    println!("  bin BLER    {}", interval(r.bin_block_errors, r.bin_blocks));
    println!("  dest BLER   {}", interval(r.dest_block_errors, r.dest_blocks));
    println!("  e2e BER     {}", interval(r.bit_errors, r.message_bits));
}
