//! Seeded Monte Carlo sweep over SNR points and channel trials.

use std::fs::File;
use std::io::{BufWriter, Write};

use rayon::prelude::*;
use twrc_core::channel::derive_seed;
use twrc_core::powalloc::MpOptions;
use twrc_core::rates::{check_cutset_conditions, cutset_bounds, CutSetMode, CutSetConditions, Weights};
use twrc_core::search::{best_permutation, optimize_for, PowerStrategy};
use twrc_core::triangulate::{enumerate_permutations, PermutationStrategy};
use twrc_core::{gen_channels, Budgets, ChannelSet};

use crate::config::{DpcSearch, PowerRule, SweepConfig};
use crate::{SimError, VERSION};

pub const SCHEME_EQUAL: &str = "proposed-equal";
pub const SCHEME_MP: &str = "proposed-mp";
pub const SCHEME_CUTSET: &str = "cutset";

pub const CSV_HEADER: &str = "snr_db,trial,seed,perm,scheme,sum_rate,weighted_sum_rate,cutset_dl,cutset_ul,\
gap_to_cutset,mp_iterations,mp_certified,c1,c2,c3,c4";

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub trial: usize,
    /// Channel seed of the trial.
    pub seed: u64,
    /// Winning DPC order, empty for the cut-set row.
    pub perm: String,
    pub scheme: &'static str,
    pub sum_rate: f64,
    pub weighted_sum_rate: f64,
    pub cutset_dl: f64,
    pub cutset_ul: f64,
    pub gap_to_cutset: f64,
    pub mp_iterations: Option<usize>,
    pub mp_certified: Option<bool>,
    pub cutset_conditions: Option<[bool; 4]>,
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        let opt = |o: Option<String>| o.unwrap_or_default();
        let flags = match self.cutset_conditions {
            Some(f) => f.map(|b| (b as u8).to_string()).join(","),
            None => ",,,".to_string(),
        };
        format!(
            "{},{},{},{},{},{:.9},{:.9},{:.9},{:.9},{:.9},{},{},{}",
            self.snr_db,
            self.trial,
            self.seed,
            self.perm,
            self.scheme,
            self.sum_rate,
            self.weighted_sum_rate,
            self.cutset_dl,
            self.cutset_ul,
            self.gap_to_cutset,
            opt(self.mp_iterations.map(|v| v.to_string())),
            opt(self.mp_certified.map(|v| (v as u8).to_string())),
            flags,
        )
    }
}

/// Per-SNR averages over trials.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSummary {
    pub snr_db: f64,
    pub mean_sum_equal: f64,
    pub mean_sum_mp: f64,
    pub mean_cutset: f64,
    pub mean_gap_equal: f64,
    pub mean_gap_mp: f64,
    /// Trials whose allocation hit the iteration cap.
    pub uncertified: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSummary {
    pub rows: usize,
    pub points: Vec<PointSummary>,
}

fn weights(cfg: &SweepConfig) -> Weights {
    let n = cfg.streams();
    let expand = |w: &[f64]| if w.len() == 1 { vec![w[0]; n] } else { w.to_vec() };
    Weights {
        xi_b: expand(&cfg.xi_b),
        xi_m: expand(&cfg.xi_m),
    }
}

fn flags(t: &CutSetConditions) -> [bool; 4] {
    [t.c1, t.c2, t.c3, t.c4]
}

/// Seed of trial `trial`; the channel is shared by every SNR point.
pub fn trial_seed(cfg: &SweepConfig, trial: usize) -> u64 {
    derive_seed(cfg.seed, trial as u64)
}

/// Budgets at one grid point (σ² = 1, so budgets in dB are SNRs).
pub fn budgets_at(cfg: &SweepConfig, snr_db: f64) -> twrc_core::Result<Budgets> {
    Budgets::virtual_users(
        cfg.streams(),
        cfg.ms_antennas,
        1.0,
        cfg.pb_db.linear(snr_db),
        cfg.pr_db.linear(snr_db),
        cfg.pm_db.linear(snr_db),
    )
}

/// Channel realization of a trial at one grid point.
pub fn trial_channel(cfg: &SweepConfig, trial: usize, snr_db: f64) -> twrc_core::Result<ChannelSet> {
    gen_channels(cfg.streams(), trial_seed(cfg, trial), cfg.reciprocal, budgets_at(cfg, snr_db)?)
}

fn run_point(cfg: &SweepConfig, snr_db: f64, trial: usize) -> twrc_core::Result<Vec<SweepRow>> {
    let seed = trial_seed(cfg, trial);
    let k = cfg.streams();
    let ch = trial_channel(cfg, trial, snr_db)?;
    let w = weights(cfg);
    let strategy = match cfg.dpc {
        DpcSearch::Exhaustive => PermutationStrategy::Exhaustive,
        DpcSearch::Random(count) => PermutationStrategy::Random {
            count,
            seed: derive_seed(seed, u64::MAX),
        },
    };
    let candidates = enumerate_permutations(k, strategy)?;
    let opts = MpOptions {
        epsilon: cfg.eps,
        iteration_cap: cfg.mp_cap,
        ..MpOptions::default()
    };

    let eq = best_permutation(&ch, &candidates, &w, PowerStrategy::Equal)?;
    let mp = match cfg.power {
        PowerRule::Equal => optimize_for(&ch, eq.tri.clone(), &w, PowerStrategy::Optimal(opts))?,
        PowerRule::Mp => best_permutation(&ch, &candidates, &w, PowerStrategy::Optimal(opts))?,
    };
    let cut = cutset_bounds(&ch, CutSetMode::ExactEqualPower);
    let max_w = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);

    let row = |scheme, perm: String, sum: f64, wsum: f64| SweepRow {
        snr_db,
        trial,
        seed,
        perm,
        scheme,
        sum_rate: sum,
        weighted_sum_rate: wsum,
        cutset_dl: cut.dl,
        cutset_ul: cut.ul,
        gap_to_cutset: cut.total() - sum,
        mp_iterations: None,
        mp_certified: None,
        cutset_conditions: None,
    };
    let mut r_eq = row(SCHEME_EQUAL, eq.perm.canonical(), eq.tuple.sum_rate, eq.tuple.weighted_sum_rate);
    r_eq.cutset_conditions = Some(flags(&check_cutset_conditions(&eq.tri, &ch)));
    let mut r_mp = row(SCHEME_MP, mp.perm.canonical(), mp.tuple.sum_rate, mp.tuple.weighted_sum_rate);
    r_mp.cutset_conditions = Some(flags(&check_cutset_conditions(&mp.tri, &ch)));
    if let Some(sol) = &mp.mp {
        r_mp.mp_iterations = Some(sol.iterations);
        r_mp.mp_certified = Some(sol.certified);
    }
    let r_cut = row(
        SCHEME_CUTSET,
        String::new(),
        cut.total(),
        max_w(&w.xi_b) * cut.dl + max_w(&w.xi_m) * cut.ul,
    );
    Ok(vec![r_eq, r_mp, r_cut])
}

/// All rows in (snr, trial, scheme) order. Trials run in parallel.
pub fn simulate(cfg: &SweepConfig) -> Result<Vec<SweepRow>, SimError> {
    cfg.validate()?;
    let tasks: Vec<(f64, usize)> = cfg
        .snr_db
        .iter()
        .flat_map(|&s| (0..cfg.trials).map(move |t| (s, t)))
        .collect();
    let chunks = tasks
        .par_iter()
        .map(|&(snr_db, trial)| {
            run_point(cfg, snr_db, trial).map_err(|source| SimError::Trial { trial, snr_db, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

pub fn summarize(cfg: &SweepConfig, rows: &[SweepRow]) -> SweepSummary {
    let points = cfg
        .snr_db
        .iter()
        .map(|&snr| {
            let at = |scheme: &'static str| rows.iter().filter(move |r| r.snr_db == snr && r.scheme == scheme);
            let mean = |scheme: &'static str, f: &dyn Fn(&SweepRow) -> f64| {
                let (s, n) = at(scheme).fold((0.0, 0usize), |(s, n), r| (s + f(r), n + 1));
                s / n.max(1) as f64
            };
            PointSummary {
                snr_db: snr,
                mean_sum_equal: mean(SCHEME_EQUAL, &|r| r.sum_rate),
                mean_sum_mp: mean(SCHEME_MP, &|r| r.sum_rate),
                mean_cutset: mean(SCHEME_CUTSET, &|r| r.sum_rate),
                mean_gap_equal: mean(SCHEME_EQUAL, &|r| r.gap_to_cutset),
                mean_gap_mp: mean(SCHEME_MP, &|r| r.gap_to_cutset),
                uncertified: at(SCHEME_MP).filter(|r| r.mp_certified == Some(false)).count(),
            }
        })
        .collect();
    SweepSummary {
        rows: rows.len(),
        points,
    }
}

/// Metadata block, header row and rows.
pub fn write_csv<W: Write>(cfg: &SweepConfig, rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "# twrc sweep {VERSION}")?;
    for (k, v) in cfg.echo() {
        writeln!(w, "# {k} = {v}")?;
    }
    writeln!(w, "# noise variance 1; snr_db is the swept grid value; budgets in dB follow pb_db/pr_db/pm_db")?;
    writeln!(w, "# cutset: exact log-det with equal-power BS and relay covariances (no waterfilling)")?;
    writeln!(w, "# cutset weighted_sum_rate: max xi_b * cutset_dl + max xi_m * cutset_ul")?;
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    w.flush()
}

/// Simulates, writes the CSV to `cfg.out` and returns the per-point summary.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepSummary, SimError> {
    let rows = simulate(cfg)?;
    let file = File::create(&cfg.out).map_err(|e| SimError::Io { path: cfg.out.clone(), source: e })?;
    write_csv(cfg, &rows, BufWriter::new(file)).map_err(|e| SimError::Io { path: cfg.out.clone(), source: e })?;
    Ok(summarize(cfg, &rows))
}
