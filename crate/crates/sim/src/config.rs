//! Sweep configuration: `key = value` lines with `#` comments, overridable key by key.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::SimError;

/// Budget of one node in dB relative to σ², as a function of the swept SNR.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BudgetRule {
    /// `snr + offset`
    Tied(f64),
    Fixed(f64),
}

impl BudgetRule {
    pub fn db(&self, snr_db: f64) -> f64 {
        match *self {
            BudgetRule::Tied(off) => snr_db + off,
            BudgetRule::Fixed(v) => v,
        }
    }

    pub fn linear(&self, snr_db: f64) -> f64 {
        10f64.powf(self.db(snr_db) / 10.0)
    }

    fn parse(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("snr") {
            let rest = rest.trim();
            if rest.is_empty() {
                return Ok(BudgetRule::Tied(0.0));
            }
            let (sign, num) = match rest.split_at(1) {
                ("+", n) => (1.0, n),
                ("-", n) => (-1.0, n),
                _ => return Err(format!("expected snr, snr+X or snr-X, got {s:?}")),
            };
            let v: f64 = num.trim().parse().map_err(|_| format!("bad offset in {s:?}"))?;
            return Ok(BudgetRule::Tied(sign * v));
        }
        s.parse().map(BudgetRule::Fixed).map_err(|_| format!("bad budget {s:?}"))
    }
}

impl fmt::Display for BudgetRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BudgetRule::Tied(off) if off == 0.0 => write!(f, "snr"),
            BudgetRule::Tied(off) if off > 0.0 => write!(f, "snr+{off}"),
            BudgetRule::Tied(off) => write!(f, "snr-{}", -off),
            BudgetRule::Fixed(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DpcSearch {
    Exhaustive,
    Random(usize),
}

impl fmt::Display for DpcSearch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DpcSearch::Exhaustive => write!(f, "exhaustive"),
            DpcSearch::Random(n) => write!(f, "random:{n}"),
        }
    }
}

/// Power rule used to rank DPC orders.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PowerRule {
    /// Orders are ranked under equal power; the optimizer then runs on the winning order.
    Equal,
    /// Every candidate order is solved optimally.
    Mp,
}

impl fmt::Display for PowerRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PowerRule::Equal => "equal",
            PowerRule::Mp => "mp",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    /// Number of mobile stations.
    pub k: usize,
    /// Antennas per MS; each antenna becomes a virtual stream sharing the MS budget.
    pub ms_antennas: usize,
    pub reciprocal: bool,
    pub snr_db: Vec<f64>,
    pub pb_db: BudgetRule,
    pub pr_db: BudgetRule,
    pub pm_db: BudgetRule,
    pub trials: usize,
    pub seed: u64,
    pub dpc: DpcSearch,
    pub power: PowerRule,
    /// One value (broadcast) or one per stream.
    pub xi_b: Vec<f64>,
    pub xi_m: Vec<f64>,
    pub eps: f64,
    pub mp_cap: usize,
    pub out: PathBuf,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k: 4,
            ms_antennas: 1,
            reciprocal: false,
            snr_db: vec![25.0, 30.0, 35.0],
            pb_db: BudgetRule::Tied(0.0),
            pr_db: BudgetRule::Tied(0.0),
            pm_db: BudgetRule::Tied(0.0),
            trials: 100,
            seed: 1,
            dpc: DpcSearch::Exhaustive,
            power: PowerRule::Mp,
            xi_b: vec![1.0],
            xi_m: vec![1.0],
            eps: twrc_core::powalloc::DEFAULT_EPSILON,
            mp_cap: twrc_core::powalloc::DEFAULT_ITERATION_CAP,
            out: PathBuf::from("sweep.csv"),
        }
    }
}

pub const KEYS: &[&str] = &[
    "k",
    "ms_antennas",
    "reciprocal",
    "snr_db",
    "pb_db",
    "pr_db",
    "pm_db",
    "trials",
    "seed",
    "dpc",
    "power",
    "xi_b",
    "xi_m",
    "eps",
    "mp_cap",
    "out",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("{key}: cannot parse {v:?}"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got {v:?}")),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, String> {
    v.split(',').map(|s| parse_num(key, s.trim())).collect()
}

/// `a:b:step` (inclusive) or a comma list.
fn parse_grid(v: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step): (f64, f64, f64) = (parse_num("snr_db", a)?, parse_num("snr_db", b)?, parse_num("snr_db", step)?);
            if !(step > 0.0) || b < a {
                return Err(format!("snr_db: bad range {v:?}"));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + i as f64 * step).collect())
        }
        [_] => parse_list("snr_db", v),
        _ => Err(format!("snr_db: expected a:b:step or a list, got {v:?}")),
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl SweepConfig {
    /// Total stream count after the virtual-user expansion.
    pub fn streams(&self) -> usize {
        self.k * self.ms_antennas
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SimError> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        let r: Result<(), String> = (|| {
            match key.as_str() {
                "k" => self.k = parse_num(&key, v)?,
                "ms_antennas" => self.ms_antennas = parse_num(&key, v)?,
                "reciprocal" => self.reciprocal = parse_bool(&key, v)?,
                "snr_db" => self.snr_db = parse_grid(v)?,
                "pb_db" => self.pb_db = BudgetRule::parse(v)?,
                "pr_db" => self.pr_db = BudgetRule::parse(v)?,
                "pm_db" => self.pm_db = BudgetRule::parse(v)?,
                "trials" => self.trials = parse_num(&key, v)?,
                "seed" => self.seed = parse_num(&key, v)?,
                "dpc" => {
                    self.dpc = match v {
                        "exhaustive" => DpcSearch::Exhaustive,
                        _ => match v.strip_prefix("random:") {
                            Some(n) => DpcSearch::Random(parse_num(&key, n)?),
                            None => return Err(format!("dpc: expected exhaustive or random:N, got {v:?}")),
                        },
                    }
                }
                "power" => {
                    self.power = match v {
                        "equal" => PowerRule::Equal,
                        "mp" => PowerRule::Mp,
                        _ => return Err(format!("power: expected equal or mp, got {v:?}")),
                    }
                }
                "xi_b" => self.xi_b = parse_list(&key, v)?,
                "xi_m" => self.xi_m = parse_list(&key, v)?,
                "eps" => self.eps = parse_num(&key, v)?,
                "mp_cap" => self.mp_cap = parse_num(&key, v)?,
                "out" => self.out = PathBuf::from(v),
                _ => return Err(format!("unknown key {key:?}")),
            }
            Ok(())
        })();
        r.map_err(SimError::Config)
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), SimError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(SimError::Config(format!("line {}: expected key = value", n + 1)));
            };
            self.set(key, value)
                .map_err(|e| SimError::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io { path: path.to_path_buf(), source: e })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if self.k == 0 || self.ms_antennas == 0 {
            return bad("k and ms_antennas must be at least 1");
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|v| !v.is_finite()) {
            return bad("snr_db must be a non-empty list of finite values");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if let DpcSearch::Random(0) = self.dpc {
            return bad("random DPC search needs at least one order");
        }
        if self.dpc == DpcSearch::Exhaustive && self.streams() > twrc_core::triangulate::MAX_EXHAUSTIVE_K {
            return bad("exhaustive DPC search is limited to 6 streams; use dpc = random:N");
        }
        for w in [&self.xi_b, &self.xi_m] {
            if !(w.len() == 1 || w.len() == self.streams()) {
                return bad("weights must have one value or one per stream");
            }
            if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return bad("weights must be non-negative");
            }
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if self.mp_cap == 0 {
            return bad("mp_cap must be at least 1");
        }
        Ok(())
    }

    /// Canonical `key = value` echo, in `KEYS` order.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        KEYS.iter()
            .map(|&k| {
                let v = match k {
                    "k" => self.k.to_string(),
                    "ms_antennas" => self.ms_antennas.to_string(),
                    "reciprocal" => self.reciprocal.to_string(),
                    "snr_db" => fmt_list(&self.snr_db),
                    "pb_db" => self.pb_db.to_string(),
                    "pr_db" => self.pr_db.to_string(),
                    "pm_db" => self.pm_db.to_string(),
                    "trials" => self.trials.to_string(),
                    "seed" => self.seed.to_string(),
                    "dpc" => self.dpc.to_string(),
                    "power" => self.power.to_string(),
                    "xi_b" => fmt_list(&self.xi_b),
                    "xi_m" => fmt_list(&self.xi_m),
                    "eps" => self.eps.to_string(),
                    "mp_cap" => self.mp_cap.to_string(),
                    "out" => self.out.display().to_string(),
                    _ => unreachable!(),
                };
                (k, v)
            })
            .collect()
    }
}
