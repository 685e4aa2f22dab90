//! Two-phase channel triangularization and the lattice-precoding matrices.
//!
//! Phase one: `H_MR = Q_MR R_MR` (QR) and `Q_MRᴴ H_BR = R_BR Q_BR` (RQ), so the relay sees
//! `R_BR S_B + R_MR S_M` after rotating by `Q_MRᴴ`. Phase two: `Φ H_RM = L_RM Q_RM` (LQ) and
//! `H_RB Q_RMᴴ = Q_RB L_RB` (QL).
//!
//! The strictly upper-triangular `U_R` and the modified BS factor `R'_BR` split the relay
//! observation into a decodable part and an interference part that `U_R` maps exactly from the
//! decodable part, which is what makes stream-by-stream cancellation at the relay possible.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;

use crate::channel::{derive_seed, rng_from_seed, ChannelSet};
use crate::cmat::{CMat, C64, ZERO};
use crate::error::{Error, Result};
use crate::matfact::{solve_upper, triangular_factor, FactorMode, RANK_TOL};

/// Largest `K` for which exhaustive permutation enumeration is allowed.
pub const MAX_EXHAUSTIVE_K: usize = 6;

/// DPC encoding order. `mu[n]` is the stream encoded at position `n`; `q` is the inverse map,
/// so stream `k` sits at position `q[k]`. Zero-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    mu: Vec<usize>,
    q: Vec<usize>,
}

impl Permutation {
    pub fn new(mu: Vec<usize>) -> Result<Self> {
        let k = mu.len();
        let mut q = alloc::vec![usize::MAX; k];
        for (pos, &stream) in mu.iter().enumerate() {
            if stream >= k || q[stream] != usize::MAX {
                return Err(Error::InvalidPermutation);
            }
            q[stream] = pos;
        }
        Ok(Self { mu, q })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            mu: (0..k).collect(),
            q: (0..k).collect(),
        }
    }

    /// Parses the one-based `1-3-2` form produced by `Display`.
    pub fn parse(s: &str) -> Result<Self> {
        let mu = s
            .split('-')
            .map(|t| t.trim().parse::<usize>().ok().and_then(|v| v.checked_sub(1)))
            .collect::<Option<Vec<_>>>()
            .ok_or(Error::InvalidPermutation)?;
        Self::new(mu)
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn mu(&self) -> &[usize] {
        &self.mu
    }

    pub fn q(&self) -> &[usize] {
        &self.q
    }

    /// `Φ A`: row `n` of the result is row `mu[n]` of `a`.
    pub fn permute_rows(&self, a: &CMat) -> CMat {
        CMat::from_fn(a.rows(), a.cols(), |i, j| a[(self.mu[i], j)])
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.mu.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{}", m + 1)?;
        }
        Ok(())
    }
}

impl Permutation {
    pub fn canonical(&self) -> String {
        alloc::format!("{self}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PermutationStrategy {
    Exhaustive,
    Random { count: usize, seed: u64 },
}

/// Lists DPC orders: every permutation in lexicographic order, or `count` seeded uniform draws.
pub fn enumerate_permutations(k: usize, strategy: PermutationStrategy) -> Result<Vec<Permutation>> {
    match strategy {
        PermutationStrategy::Exhaustive => {
            if k > MAX_EXHAUSTIVE_K {
                return Err(Error::TooLarge {
                    k,
                    max: MAX_EXHAUSTIVE_K,
                });
            }
            let mut cur: Vec<usize> = (0..k).collect();
            let mut out = Vec::new();
            loop {
                out.push(Permutation::new(cur.clone())?);
                if !next_permutation(&mut cur) {
                    break;
                }
            }
            Ok(out)
        }
        PermutationStrategy::Random { count, seed } => Ok((0..count)
            .map(|i| {
                let mut rng = rng_from_seed(derive_seed(seed, i as u64));
                let mut mu: Vec<usize> = (0..k).collect();
                mu.shuffle(&mut rng);
                Permutation::new(mu).expect("shuffle is a bijection")
            })
            .collect()),
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// All factors of the two-phase triangularization for one DPC order.
#[derive(Clone, Debug, PartialEq)]
pub struct Triangularization {
    pub q_mr: CMat,
    pub r_mr: CMat,
    pub q_br: CMat,
    pub r_br: CMat,
    pub q_rm: CMat,
    pub l_rm: CMat,
    pub q_rb: CMat,
    pub l_rb: CMat,
    /// Strictly upper-triangular relay cancellation matrix.
    pub u_r: CMat,
    /// `R'_BR = (R_MR)_diag R_MR⁻¹ R_BR`.
    pub rp_br: CMat,
    pub perm: Permutation,
    /// `r_MR(k,k) / r_BR(k,k)`.
    pub alpha: Vec<f64>,
    /// `σ² / r_BR(k,k)²`.
    pub sigma_k2: Vec<f64>,
}

/// Squared per-stream diagonal gains, indexed by stream `k` (not DPC position).
#[derive(Clone, Debug, PartialEq)]
pub struct StreamGains {
    pub r_br2: Vec<f64>,
    pub r_mr2: Vec<f64>,
    /// `l_RM(q_k, q_k)²`
    pub l_rm2: Vec<f64>,
    /// `l_RB(q_k, q_k)²`
    pub l_rb2: Vec<f64>,
}

impl Triangularization {
    pub fn k(&self) -> usize {
        self.r_br.rows()
    }

    pub fn gains(&self) -> StreamGains {
        let k = self.k();
        let q = self.perm.q();
        StreamGains {
            r_br2: (0..k).map(|i| self.r_br[(i, i)].norm_sqr()).collect(),
            r_mr2: (0..k).map(|i| self.r_mr[(i, i)].norm_sqr()).collect(),
            l_rm2: (0..k).map(|i| self.l_rm[(q[i], q[i])].norm_sqr()).collect(),
            l_rb2: (0..k).map(|i| self.l_rb[(q[i], q[i])].norm_sqr()).collect(),
        }
    }

    /// `(R_MR)_diag` as a matrix.
    pub fn r_mr_diag(&self) -> CMat {
        CMat::diag(&self.r_mr.diagonal())
    }
}

/// Builds the full triangularization of `ch` for DPC order `perm`.
pub fn triangularize(ch: &ChannelSet, perm: &Permutation) -> Result<Triangularization> {
    let k = ch.k();
    if perm.len() != k {
        return Err(Error::DimensionMismatch {
            expected: (k, 1),
            found: (perm.len(), 1),
        });
    }
    let mr = triangular_factor(&ch.h_mr, FactorMode::Qr)?;
    let br = triangular_factor(&mr.unitary.adjoint().mul(&ch.h_br), FactorMode::Rq)?;
    let rm = triangular_factor(&perm.permute_rows(&ch.h_rm), FactorMode::Lq)?;
    let rb = triangular_factor(&ch.h_rb.mul(&rm.unitary.adjoint()), FactorMode::Ql)?;

    let r_mr = mr.triangular;
    let r_br = br.triangular;

    let d_mr: Vec<f64> = (0..k).map(|i| r_mr[(i, i)].re).collect();
    let max_d = d_mr.iter().cloned().fold(0.0, f64::max);
    let min_d = d_mr.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_d > RANK_TOL * max_d) {
        return Err(Error::RankDeficient { ratio: min_d / max_d });
    }

    // U_R(i,j) = r_MR(i,j) / r_MR(j,j) above the diagonal.
    let u_r = CMat::from_fn(k, k, |i, j| if j > i { r_mr[(i, j)] / d_mr[j] } else { ZERO });

    // R'_BR = (R_MR)_diag R_MR⁻¹ R_BR, one back substitution.
    let x = solve_upper(&r_mr, &r_br)?;
    let rp_br = CMat::from_fn(k, k, |i, j| if j >= i { x[(i, j)] * d_mr[i] } else { ZERO });

    let alpha = (0..k).map(|i| d_mr[i] / r_br[(i, i)].re).collect();
    let sigma_k2 = (0..k).map(|i| ch.sigma2 / r_br[(i, i)].norm_sqr()).collect();

    Ok(Triangularization {
        q_mr: mr.unitary,
        r_mr,
        q_br: br.unitary,
        r_br,
        q_rm: rm.unitary,
        l_rm: rm.triangular,
        q_rb: rb.unitary,
        l_rb: rb.triangular,
        u_r,
        rp_br,
        perm: perm.clone(),
        alpha,
        sigma_k2,
    })
}

/// Max-entry residual of `U_R S̃ = W̃` for the given BS and MS signal blocks (`K x T` each),
/// with `S̃ = R'_BR S_B + (R_MR)_diag S_M` and `W̃ = (R_BR - R'_BR) S_B + (R_MR - (R_MR)_diag) S_M`.
pub fn interference_identity_residual(tri: &Triangularization, s_b: &CMat, s_m: &CMat) -> Result<f64> {
    let k = tri.k();
    if s_b.rows() != k || s_m.rows() != k || s_b.cols() != s_m.cols() {
        return Err(Error::DimensionMismatch {
            expected: (k, s_b.cols()),
            found: (s_m.rows(), s_m.cols()),
        });
    }
    let d_mr = tri.r_mr_diag();
    let s_tilde = tri.rp_br.mul(s_b).add(&d_mr.mul(s_m))?;
    let w_tilde = tri.r_br.sub(&tri.rp_br)?.mul(s_b).add(&tri.r_mr.sub(&d_mr)?.mul(s_m))?;
    Ok(tri.u_r.mul(&s_tilde).max_abs_diff(&w_tilde))
}

/// Known-interference coefficients `r'_BR(k,j) / r_BR(k,k)` for `j > k` (row `k` of the result).
pub fn precancel_coefficients(tri: &Triangularization) -> CMat {
    let k = tri.k();
    CMat::from_fn(k, k, |i, j| {
        if j > i {
            tri.rp_br[(i, j)] / tri.r_br[(i, i)]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}
