use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use twrc_core::latticelab::{Combining, LabConfig};
use twrc_sim::check::structural_suite;
use twrc_sim::lab::run_latticelab;
use twrc_sim::sweep::{run_sweep, SCHEME_EQUAL, SCHEME_MP};
use twrc_sim::SweepConfig;

const EXIT_VALIDATION: u8 = 1;
const EXIT_ACCEPTANCE: u8 = 2;

#[derive(Parser)]
#[command(name = "twrc", version, about = "Lattice-precoded two-way relaying: sweeps, lattice lab, checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Monte Carlo sum-rate sweep written as CSV.
    Sweep(SweepArgs),
    /// Noiseless end-to-end lattice frames; any decoding mismatch fails.
    Latticelab(LabArgs),
    /// Property suites.
    Check(CheckArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// `key = value` file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    ms_antennas: Option<String>,
    #[arg(long)]
    reciprocal: Option<String>,
    /// `a:b:step` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// `snr`, `snr+X`, `snr-X` or a fixed value in dB.
    #[arg(long, allow_hyphen_values = true)]
    pb_db: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pr_db: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pm_db: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// `exhaustive` or `random:N`.
    #[arg(long)]
    dpc: Option<String>,
    /// `equal` or `mp`: power rule used to rank DPC orders.
    #[arg(long)]
    power: Option<String>,
    #[arg(long)]
    xi_b: Option<String>,
    #[arg(long)]
    xi_m: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    mp_cap: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

impl SweepArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let all = [
            ("k", &self.k),
            ("ms_antennas", &self.ms_antennas),
            ("reciprocal", &self.reciprocal),
            ("snr_db", &self.snr_db),
            ("pb_db", &self.pb_db),
            ("pr_db", &self.pr_db),
            ("pm_db", &self.pm_db),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("dpc", &self.dpc),
            ("power", &self.power),
            ("xi_b", &self.xi_b),
            ("xi_m", &self.xi_m),
            ("eps", &self.eps),
            ("mp_cap", &self.mp_cap),
            ("out", &self.out),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CombiningArg {
    Coarse,
    Fine,
}

#[derive(Args)]
struct LabArgs {
    #[arg(long, default_value_t = 10_000)]
    frames: usize,
    /// Largest stream count; each frame draws K from `k-min..=k`.
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Channel uses per frame.
    #[arg(long, default_value_t = 64)]
    symbols: usize,
    /// Largest nesting ratio drawn for `q_B / q_C` and `q_M / q_B`.
    #[arg(long, default_value_t = 4)]
    max_ratio: u32,
    #[arg(long, value_enum, default_value_t = CombiningArg::Coarse)]
    combining: CombiningArg,
    /// Corrupt one relay symbol per frame and require every frame to be flagged.
    #[arg(long)]
    self_test: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Invariants,
    Lattice,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long, default_value_t = 100)]
    seeds: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn sweep(args: SweepArgs) -> anyhow::Result<u8> {
    let mut cfg = match &args.config {
        Some(p) => SweepConfig::from_file(p)?,
        None => SweepConfig::default(),
    };
    for (k, v) in args.overrides() {
        cfg.set(k, v)?;
    }
    let summary = run_sweep(&cfg)?;
    println!("wrote {} rows to {}", summary.rows, cfg.out.display());
    println!("snr_db  cutset  {SCHEME_EQUAL}  {SCHEME_MP}  gap_equal  gap_mp  uncertified");
    for p in &summary.points {
        println!(
            "{:>6}  {:>6.3}  {:>14.3}  {:>11.3}  {:>9.3}  {:>6.3}  {}",
            p.snr_db, p.mean_cutset, p.mean_sum_equal, p.mean_sum_mp, p.mean_gap_equal, p.mean_gap_mp, p.uncertified
        );
    }
    Ok(0)
}

fn latticelab(args: LabArgs) -> anyhow::Result<u8> {
    let cfg = LabConfig {
        frames: args.frames,
        k_min: args.k_min,
        k_max: args.k,
        symbols: args.symbols,
        seed: args.seed,
        max_ratio: args.max_ratio,
        combining: match args.combining {
            CombiningArg::Coarse => Combining::Coarse,
            CombiningArg::Fine => Combining::Fine,
        },
        inject_fault: args.self_test,
    };
    let r = run_latticelab(&cfg)?;
    if !r.self_test {
        for f in &r.failures {
            println!(
                "frame {} (seed {}): {} MS and {} BS symbol errors",
                f.frame, f.seed, f.report.ms_errors, f.report.bs_errors
            );
        }
    }
    let verdict = if r.passed() { "PASS" } else { "FAIL" };
    if r.self_test {
        println!("{verdict}: injected faults flagged in {}/{} frames", r.failures.len(), r.frames);
    } else {
        println!(
            "{verdict}: {}/{} frames failed, max codeword error {:.3e}",
            r.failures.len(),
            r.frames,
            r.max_error
        );
    }
    Ok(if r.passed() { 0 } else { EXIT_ACCEPTANCE })
}

fn check(args: CheckArgs) -> anyhow::Result<u8> {
    let passed = match args.suite {
        Suite::Invariants => {
            let r = structural_suite(args.seeds, 6, args.seed)?;
            println!(
                "{} cases: identity residual {:.2e}, unitarity {:.2e}, reconstruction {:.2e}, det identity {:.2e}, diagonal {:.2e}",
                r.cases, r.identity_residual, r.unitarity, r.reconstruction, r.det_identity, r.diag_mismatch
            );
            r.passed()
        }
        Suite::Lattice => {
            let base = LabConfig {
                frames: 1000,
                seed: args.seed,
                ..LabConfig::default()
            };
            let clean = run_latticelab(&base)?;
            let faulty = run_latticelab(&LabConfig {
                inject_fault: true,
                ..base
            })?;
            println!(
                "clean frames failed: {}/{}; injected faults flagged: {}/{}",
                clean.failures.len(),
                clean.frames,
                faulty.failures.len(),
                faulty.frames
            );
            clean.passed() && faulty.passed()
        }
    };
    println!("{}", if passed { "PASS" } else { "FAIL" });
    Ok(if passed { 0 } else { EXIT_ACCEPTANCE })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.cmd {
        Cmd::Sweep(a) => sweep(a),
        Cmd::Latticelab(a) => latticelab(a),
        Cmd::Check(a) => check(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}
