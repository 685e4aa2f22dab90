//! Parallel noiseless lattice campaigns.

use rayon::prelude::*;
use twrc_core::channel::derive_seed;
use twrc_core::latticelab::{lab_frame, FrameReport, LabConfig};

use crate::SimError;

#[derive(Clone, Debug, PartialEq)]
pub struct FrameFailure {
    pub frame: usize,
    /// Seed that regenerates the frame on its own.
    pub seed: u64,
    pub report: FrameReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabReport {
    pub frames: usize,
    pub failures: Vec<FrameFailure>,
    pub max_error: f64,
    /// Faults were injected on purpose; every frame is then expected to fail.
    pub self_test: bool,
}

impl LabReport {
    /// Zero failures normally; in self-test mode, every frame flagged.
    pub fn passed(&self) -> bool {
        if self.self_test {
            self.failures.len() == self.frames
        } else {
            self.failures.is_empty()
        }
    }
}

pub fn run_latticelab(cfg: &LabConfig) -> Result<LabReport, SimError> {
    if cfg.k_min == 0 || cfg.k_min > cfg.k_max || cfg.symbols == 0 || cfg.max_ratio == 0 || cfg.frames == 0 {
        return Err(SimError::Config("invalid lattice campaign configuration".into()));
    }
    let reports = (0..cfg.frames)
        .into_par_iter()
        .map(|f| lab_frame(cfg, f))
        .collect::<Result<Vec<_>, _>>()?;
    let max_error = reports.iter().map(|r| r.max_error).fold(0.0, f64::max);
    let failures = reports
        .into_iter()
        .enumerate()
        .filter(|(_, r)| !r.is_clean())
        .map(|(frame, report)| FrameFailure {
            frame,
            seed: derive_seed(cfg.seed, frame as u64),
            report,
        })
        .collect();
    Ok(LabReport {
        frames: cfg.frames,
        failures,
        max_error,
        self_test: cfg.inject_fault,
    })
}
