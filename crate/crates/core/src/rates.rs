//! Achievable rates of the lattice-precoded scheme, cut-set bounds and the high-SNR
//! optimality conditions.
//!
//! All rates are in bits per channel use and carry the ½ pre-log of the two-phase protocol.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::ChannelSet;
use crate::cmat::{CMat, C64};
use crate::error::{Error, Result};
use crate::matfact::{log2_det_hpd, singular_values_sq};
use crate::triangulate::{StreamGains, Triangularization};

/// Slack allowed on the per-node power sum.
pub const POWER_SLACK: f64 = 1e-9;

/// Per-stream transmit powers at the BS and the relay.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerProfile {
    pub p_b: Vec<f64>,
    pub p_r: Vec<f64>,
}

impl PowerProfile {
    pub fn equal(k: usize, p_b: f64, p_r: f64) -> Self {
        Self {
            p_b: vec![p_b / k as f64; k],
            p_r: vec![p_r / k as f64; k],
        }
    }

    pub fn equal_for(ch: &ChannelSet) -> Self {
        Self::equal(ch.k(), ch.p_b, ch.p_r)
    }

    /// Checks non-negativity and the two sum constraints.
    pub fn validate(&self, ch: &ChannelSet) -> Result<()> {
        let k = ch.k();
        if self.p_b.len() != k || self.p_r.len() != k {
            return Err(Error::DimensionMismatch {
                expected: (k, 2),
                found: (self.p_b.len(), self.p_r.len()),
            });
        }
        if self.p_b.iter().chain(&self.p_r).any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidParameter("stream powers must be non-negative"));
        }
        if self.p_b.iter().sum::<f64>() > ch.p_b + POWER_SLACK || self.p_r.iter().sum::<f64>() > ch.p_r + POWER_SLACK {
            return Err(Error::InvalidParameter("power profile exceeds the budget"));
        }
        Ok(())
    }
}

/// Rate weights for the BS->MS streams (`xi_b`) and the MS->BS streams (`xi_m`).
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    pub xi_b: Vec<f64>,
    pub xi_m: Vec<f64>,
}

impl Weights {
    pub fn uniform(k: usize, xi_b: f64, xi_m: f64) -> Self {
        Self {
            xi_b: vec![xi_b; k],
            xi_m: vec![xi_m; k],
        }
    }

    /// Unit weights: the weighted sum-rate is the sum rate.
    pub fn sum_rate(k: usize) -> Self {
        Self::uniform(k, 1.0, 1.0)
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.xi_b.len() != k || self.xi_m.len() != k {
            return Err(Error::DimensionMismatch {
                expected: (k, 2),
                found: (self.xi_b.len(), self.xi_m.len()),
            });
        }
        let all = || self.xi_b.iter().chain(&self.xi_m);
        if all().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("weights must be non-negative"));
        }
        if all().all(|w| *w == 0.0) {
            return Err(Error::InvalidParameter("weights must not all be zero"));
        }
        Ok(())
    }

    /// `[xi_B,1..K, xi_M,1..K]`
    pub fn concatenated(&self) -> Vec<f64> {
        self.xi_b.iter().chain(&self.xi_m).copied().collect()
    }
}

/// The four per-stream link rates.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkRates {
    pub b_to_r: Vec<f64>,
    pub m_to_r: Vec<f64>,
    pub r_to_m: Vec<f64>,
    pub r_to_b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateTuple {
    /// BS -> MS k.
    pub r_b: Vec<f64>,
    /// MS k -> BS.
    pub r_m: Vec<f64>,
    pub sum_rate: f64,
    pub weighted_sum_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutSet {
    /// Sum-rate bound BS -> MSs.
    pub dl: f64,
    /// Sum-rate bound MSs -> BS.
    pub ul: f64,
}

impl CutSet {
    pub fn total(&self) -> f64 {
        self.dl + self.ul
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutSetMode {
    /// Log-det form with equal-power BS/relay covariances and full MS power.
    ExactEqualPower,
    /// Singular-value log-product form, asymptotically equal to the exact form.
    HighSnr,
}

/// Power ratios and flags of the high-SNR cut-set achievability conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct CutSetConditions {
    pub rho_b: f64,
    pub rho_bk: Vec<f64>,
    pub rho_m: f64,
    pub rho_mk: Vec<f64>,
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub c4: bool,
}

impl CutSetConditions {
    /// One of C1/C2 and one of C3/C4.
    pub fn satisfied(&self) -> bool {
        (self.c1 || self.c2) && (self.c3 || self.c4)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub links: LinkRates,
    pub tuple: RateTuple,
    pub cutset: CutSet,
    pub cutset_conditions: CutSetConditions,
}

/// `½ log2(1 + snr)`
#[inline]
pub fn half_log2_1p(snr: f64) -> f64 {
    0.5 * libm::log2(1.0 + snr)
}

/// `(x - 1)⁺`, so that `½ log2(1 + (x - 1)⁺) = [½ log2 x]⁺`.
#[inline]
pub fn clamped_snr(x: f64) -> f64 {
    (x - 1.0).max(0.0)
}

/// Effective per-stream SNRs, BS->MS streams first, then MS->BS streams.
/// Stream rates are `½ log2(1 + SNR_i)`.
pub fn stream_snrs(gains: &StreamGains, sigma2: f64, pw: &PowerProfile, p_m: &[f64]) -> Vec<f64> {
    let k = gains.r_br2.len();
    let mut out = Vec::with_capacity(2 * k);
    for i in 0..k {
        let up = clamped_snr(gains.r_br2[i] * pw.p_b[i] / sigma2);
        let down = gains.l_rm2[i] * pw.p_r[i] / sigma2;
        out.push(up.min(down));
    }
    for i in 0..k {
        let up = clamped_snr(gains.r_mr2[i] * p_m[i] / sigma2);
        let down = gains.l_rb2[i] * pw.p_r[i] / sigma2;
        out.push(up.min(down));
    }
    out
}

/// Link rates of every stream under power profile `pw`.
pub fn stream_rates(tri: &Triangularization, pw: &PowerProfile, ch: &ChannelSet) -> Result<LinkRates> {
    pw.validate(ch)?;
    let g = tri.gains();
    let s2 = ch.sigma2;
    let k = ch.k();
    Ok(LinkRates {
        b_to_r: (0..k).map(|i| half_log2_1p(clamped_snr(g.r_br2[i] * pw.p_b[i] / s2))).collect(),
        m_to_r: (0..k).map(|i| half_log2_1p(clamped_snr(g.r_mr2[i] * ch.p_m[i] / s2))).collect(),
        r_to_m: (0..k).map(|i| half_log2_1p(g.l_rm2[i] * pw.p_r[i] / s2)).collect(),
        r_to_b: (0..k).map(|i| half_log2_1p(g.l_rb2[i] * pw.p_r[i] / s2)).collect(),
    })
}

/// Per-stream minimum rule, sum rate and weighted sum-rate.
pub fn achievable_tuple(links: &LinkRates, weights: &Weights) -> RateTuple {
    let r_b: Vec<f64> = links.b_to_r.iter().zip(&links.r_to_m).map(|(a, b)| a.min(*b)).collect();
    let r_m: Vec<f64> = links.m_to_r.iter().zip(&links.r_to_b).map(|(a, b)| a.min(*b)).collect();
    let sum_rate = r_b.iter().sum::<f64>() + r_m.iter().sum::<f64>();
    let weighted_sum_rate = r_b.iter().zip(&weights.xi_b).map(|(r, w)| r * w).sum::<f64>()
        + r_m.iter().zip(&weights.xi_m).map(|(r, w)| r * w).sum::<f64>();
    RateTuple {
        r_b,
        r_m,
        sum_rate,
        weighted_sum_rate,
    }
}

/// `½ log2 det(I + c H D Hᴴ)` with `D = diag(d)`.
fn half_log2_det_gram(h: &CMat, d: &[f64], c: f64) -> f64 {
    let k = h.rows();
    let mut m = CMat::identity(k);
    for i in 0..k {
        for j in i..k {
            let s: C64 = (0..h.cols()).map(|l| h[(i, l)] * h[(j, l)].conj() * d[l]).sum();
            m[(i, j)] += s * c;
            if j != i {
                m[(j, i)] = m[(i, j)].conj();
            }
        }
    }
    0.5 * log2_det_hpd(&m).expect("I + H D Hᴴ is positive definite")
}

/// Sum-rate cut-set bounds per direction.
pub fn cutset_bounds(ch: &ChannelSet, mode: CutSetMode) -> CutSet {
    let k = ch.k();
    let kf = k as f64;
    let s2 = ch.sigma2;
    match mode {
        CutSetMode::ExactEqualPower => {
            let ones = vec![1.0; k];
            let br = half_log2_det_gram(&ch.h_br, &ones, ch.p_b / (kf * s2));
            let rm = half_log2_det_gram(&ch.h_rm, &ones, ch.p_r / (kf * s2));
            let mr = half_log2_det_gram(&ch.h_mr, &ch.p_m, 1.0 / s2);
            let rb = half_log2_det_gram(&ch.h_rb, &ones, ch.p_r / (kf * s2));
            CutSet {
                dl: br.min(rm),
                ul: mr.min(rb),
            }
        }
        CutSetMode::HighSnr => {
            let log_sum = |h: &CMat| singular_values_sq(h).iter().map(|l| libm::log2(*l)).sum::<f64>();
            let lk = |p: f64| kf * libm::log2(p / (kf * s2));
            let br = 0.5 * (log_sum(&ch.h_br) + lk(ch.p_b));
            let rm = 0.5 * (log_sum(&ch.h_rm) + lk(ch.p_r));
            let rb = 0.5 * (log_sum(&ch.h_rb) + lk(ch.p_r));
            let mr = 0.5 * (log_sum(&ch.h_mr) + ch.p_m.iter().map(|p| libm::log2(p / s2)).sum::<f64>());
            CutSet {
                dl: br.min(rm),
                ul: mr.min(rb),
            }
        }
    }
}

fn geometric_mean(v: impl Iterator<Item = f64>) -> f64 {
    let mut n = 0usize;
    let mut acc = 0.0;
    for x in v {
        acc += libm::log(x);
        n += 1;
    }
    libm::exp(acc / n as f64)
}

/// Evaluates the ratios and C1..C4 against the budgets in `ch`.
pub fn check_cutset_conditions(tri: &Triangularization, ch: &ChannelSet) -> CutSetConditions {
    let g = tri.gains();
    let l_br = singular_values_sq(&ch.h_br);
    let l_rm = singular_values_sq(&ch.h_rm);
    let l_mr = singular_values_sq(&ch.h_mr);
    let l_rb = singular_values_sq(&ch.h_rb);

    let rho_b = geometric_mean(l_rm.iter().zip(&l_br).map(|(a, b)| a / b));
    let rho_m = geometric_mean(l_mr.iter().zip(&l_rb).map(|(a, b)| a / b));
    let rho_bk: Vec<f64> = g.l_rm2.iter().zip(&g.r_br2).map(|(a, b)| a / b).collect();
    let rho_mk: Vec<f64> = g.r_mr2.iter().zip(&g.l_rb2).map(|(a, b)| a / b).collect();

    let min_bk = rho_bk.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_bk = rho_bk.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let c1 = ch.p_b <= rho_b.min(min_bk) * ch.p_r;
    let c2 = ch.p_b >= rho_b.max(max_bk) * ch.p_r;

    let pm_geo = geometric_mean(ch.p_m.iter().copied());
    let mk_scaled = || rho_mk.iter().zip(&ch.p_m).map(|(r, p)| r * p);
    let min_mk = mk_scaled().fold(f64::INFINITY, f64::min);
    let max_mk = mk_scaled().fold(f64::NEG_INFINITY, f64::max);
    let c3 = ch.p_r <= (rho_m * pm_geo).min(min_mk);
    let c4 = ch.p_r >= (rho_m * pm_geo).max(max_mk);

    CutSetConditions {
        rho_b,
        rho_bk,
        rho_m,
        rho_mk,
        c1,
        c2,
        c3,
        c4,
    }
}

/// Full report for one triangularization, power profile and weight vector.
pub fn rate_report(tri: &Triangularization, pw: &PowerProfile, ch: &ChannelSet, weights: &Weights) -> Result<RateReport> {
    weights.validate(ch.k())?;
    let links = stream_rates(tri, pw, ch)?;
    let tuple = achievable_tuple(&links, weights);
    Ok(RateReport {
        links,
        tuple,
        cutset: cutset_bounds(ch, CutSetMode::ExactEqualPower),
        cutset_conditions: check_cutset_conditions(tri, ch),
    })
}

/// Weighted sum-rate computed straight from the effective SNRs.
pub fn weighted_sum_rate(gains: &StreamGains, sigma2: f64, pw: &PowerProfile, p_m: &[f64], weights: &[f64]) -> f64 {
    stream_snrs(gains, sigma2, pw, p_m)
        .iter()
        .zip(weights)
        .map(|(s, w)| w * half_log2_1p(*s))
        .sum()
}
