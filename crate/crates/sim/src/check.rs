//! Structural invariant suite over random channels and DPC orders.

use rayon::prelude::*;
use twrc_core::channel::{derive_seed, gaussian_matrix, rng_from_seed};
use twrc_core::matfact::singular_values_sq;
use twrc_core::triangulate::{enumerate_permutations, interference_identity_residual, PermutationStrategy};
use twrc_core::{gen_channels, triangularize, Budgets, CMat, Triangularization};

use crate::SimError;

pub const RESIDUAL_TOL: f64 = 1e-9;
pub const UNITARITY_TOL: f64 = 1e-12;
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
pub const DET_TOL: f64 = 1e-8;

/// Worst value of each measured invariant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InvariantReport {
    pub cases: usize,
    pub identity_residual: f64,
    pub unitarity: f64,
    /// Relative to the Frobenius norm of the factored matrix.
    pub reconstruction: f64,
    pub det_identity: f64,
    /// Relative mismatch between the diagonals of `R'_BR` and `R_BR`.
    pub diag_mismatch: f64,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.identity_residual <= RESIDUAL_TOL
            && self.unitarity <= UNITARITY_TOL
            && self.reconstruction <= RECONSTRUCTION_TOL
            && self.det_identity <= DET_TOL
            && self.diag_mismatch <= RECONSTRUCTION_TOL
    }

    fn merge(self, o: Self) -> Self {
        Self {
            cases: self.cases + o.cases,
            identity_residual: self.identity_residual.max(o.identity_residual),
            unitarity: self.unitarity.max(o.unitarity),
            reconstruction: self.reconstruction.max(o.reconstruction),
            det_identity: self.det_identity.max(o.det_identity),
            diag_mismatch: self.diag_mismatch.max(o.diag_mismatch),
        }
    }
}

fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    a.max_abs_diff(b) / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

fn measure(k: usize, seed: u64) -> Result<InvariantReport, SimError> {
    let ch = gen_channels(k, seed, seed % 2 == 0, Budgets::uniform(k, 1.0, 1.0, 1.0, 1.0))?;
    let perm = enumerate_permutations(k, PermutationStrategy::Random { count: 1, seed })?.remove(0);
    let tri: Triangularization = triangularize(&ch, &perm)?;
    let mut rng = rng_from_seed(derive_seed(seed, 1));
    let s_b = gaussian_matrix(&mut rng, k, 16);
    let s_m = gaussian_matrix(&mut rng, k, 16);

    let unitarity = [&tri.q_mr, &tri.q_br, &tri.q_rm, &tri.q_rb]
        .iter()
        .map(|q| q.unitarity_error())
        .fold(0.0, f64::max);

    let rec = [
        rel_diff(&tri.q_mr.matmul(&tri.r_mr)?, &ch.h_mr),
        rel_diff(&tri.r_br.matmul(&tri.q_br)?, &tri.q_mr.adjoint().matmul(&ch.h_br)?),
        rel_diff(&tri.l_rm.matmul(&tri.q_rm)?, &perm.permute_rows(&ch.h_rm)),
        rel_diff(&tri.q_rb.matmul(&tri.l_rb)?, &ch.h_rb.matmul(&tri.q_rm.adjoint())?),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let det = [(&tri.r_br, &ch.h_br), (&tri.r_mr, &ch.h_mr), (&tri.l_rm, &ch.h_rm), (&tri.l_rb, &ch.h_rb)]
        .iter()
        .map(|(t, h)| {
            let d: f64 = t.diagonal().iter().map(|z| z.norm_sqr()).product();
            let s: f64 = singular_values_sq(h).iter().product();
            (d - s).abs() / s
        })
        .fold(0.0, f64::max);

    let diag = (0..k)
        .map(|i| {
            let d = tri.r_br[(i, i)];
            (tri.rp_br[(i, i)] - d).norm() / d.norm()
        })
        .fold(0.0, f64::max);

    Ok(InvariantReport {
        cases: 1,
        identity_residual: interference_identity_residual(&tri, &s_b, &s_m)?,
        unitarity,
        reconstruction: rec,
        det_identity: det,
        diag_mismatch: diag,
    })
}

/// `seeds` random channels (alternately reciprocal) and orders for each `K` in `1..=k_max`.
pub fn structural_suite(seeds: u64, k_max: usize, base_seed: u64) -> Result<InvariantReport, SimError> {
    let cases: Vec<(usize, u64)> = (1..=k_max)
        .flat_map(|k| (0..seeds).map(move |s| (k, s)))
        .collect();
    cases
        .par_iter()
        .map(|&(k, s)| measure(k, derive_seed(base_seed, s * 64 + k as u64)))
        .try_reduce(InvariantReport::default, |a, b| Ok(a.merge(b)))
}
