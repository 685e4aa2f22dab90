//! Globally optimal weighted sum-rate power allocation by monotonic programming.
//!
//! With `z_i = 1 + SNR_i(P)` the weighted sum-rate becomes `Γ(z) = Σ (ξ_i/2) log2 z_i`, an
//! increasing function maximized over `G ∩ H`, where `G` is the normal set of SNR vectors
//! reachable within the BS and relay budgets and `H = {z ≥ 1}`. The solver shrinks an outer
//! polyblock of `G ∩ H`: it repeatedly takes the vertex with the largest `Γ`, projects it onto
//! the upper boundary of `G` along the ray from the origin, and replaces it by the `2K` vertices
//! obtained by pulling one coordinate back to the projection.
//!
//! The projection `max {θ : θ z ∈ G}` splits into a BS part (closed form), a relay part
//! (bisection on a monotone piecewise-linear equation) and a constant MS part.
//!
//! Polyblock refinement alone converges slowly once `2K` reaches 8, so the solver also bounds
//! the optimum through Lagrangian duality (see `dual`); the polyblock loop only runs when that
//! bound does not already certify the incumbent.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

mod dual;

pub use dual::MAX_PIECE_STREAMS;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::rates::{clamped_snr, stream_snrs, weighted_sum_rate, PowerProfile, Weights};
use crate::triangulate::{StreamGains, Triangularization};

pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_ITERATION_CAP: usize = 100_000;

const BISECTION_STEPS: usize = 200;
/// Tolerance for membership of a projected point in `H = {z ≥ 1}`.
const H_TOL: f64 = 1e-12;

/// The weighted sum-rate program for one triangularization (fixed DPC order).
#[derive(Clone, Debug, PartialEq)]
pub struct MpProblem {
    /// `[xi_B, xi_M]`, length `2K`.
    pub weights: Vec<f64>,
    pub gains: StreamGains,
    pub sigma2: f64,
    pub p_b: f64,
    pub p_r: f64,
    pub p_m: Vec<f64>,
}

impl MpProblem {
    pub fn new(tri: &Triangularization, ch: &ChannelSet, weights: &Weights) -> Result<Self> {
        weights.validate(ch.k())?;
        Self::from_parts(tri.gains(), ch.sigma2, ch.p_b, ch.p_r, ch.p_m.clone(), weights.concatenated())
    }

    pub fn from_parts(
        gains: StreamGains,
        sigma2: f64,
        p_b: f64,
        p_r: f64,
        p_m: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let k = gains.r_br2.len();
        if [gains.r_mr2.len(), gains.l_rm2.len(), gains.l_rb2.len(), p_m.len()]
            .iter()
            .any(|&n| n != k)
            || weights.len() != 2 * k
        {
            return Err(Error::DimensionMismatch {
                expected: (k, 2 * k),
                found: (p_m.len(), weights.len()),
            });
        }
        let all_gains = gains.r_br2.iter().chain(&gains.r_mr2).chain(&gains.l_rm2).chain(&gains.l_rb2);
        if all_gains.clone().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidParameter("squared diagonal gains must be positive"));
        }
        if !(sigma2 > 0.0) || !(p_b >= 0.0) || !(p_r >= 0.0) {
            return Err(Error::InvalidParameter("noise must be positive and budgets non-negative"));
        }
        Ok(Self {
            weights,
            gains,
            sigma2,
            p_b,
            p_r,
            p_m,
        })
    }

    pub fn k(&self) -> usize {
        self.gains.r_br2.len()
    }

    /// `Γ(z) = Σ (ξ_i/2) log2 z_i`
    pub fn gamma(&self, z: &[f64]) -> f64 {
        gamma(&self.weights, z)
    }

    /// `σ² / r_BR(k,k)²`
    pub fn sigma_k2(&self) -> Vec<f64> {
        self.gains.r_br2.iter().map(|g| self.sigma2 / g).collect()
    }

    /// `1 + SNR_i(P)` for a power profile.
    pub fn snr_point(&self, pw: &PowerProfile) -> Vec<f64> {
        stream_snrs(&self.gains, self.sigma2, pw, &self.p_m)
            .into_iter()
            .map(|s| 1.0 + s)
            .collect()
    }

    /// Componentwise upper bound of `G ∩ H`: each stream alone gets the full BS and relay budget.
    pub fn initial_vertex(&self) -> Vec<f64> {
        let k = self.k();
        let g = &self.gains;
        let s2 = self.sigma2;
        let mut z = Vec::with_capacity(2 * k);
        for i in 0..k {
            z.push(1.0 + clamped_snr(g.r_br2[i] * self.p_b / s2).min(g.l_rm2[i] * self.p_r / s2));
        }
        for i in 0..k {
            z.push(1.0 + clamped_snr(g.r_mr2[i] * self.p_m[i] / s2).min(g.l_rb2[i] * self.p_r / s2));
        }
        z
    }

    /// Shrinks the box `[1, z]` to the smallest box still holding every `x ∈ G` with
    /// `x ≤ z` and `Γ(x) > level`. Returns false when no such point can exist.
    ///
    /// The level gives a lower corner `a` (each coordinate must carry its share of `level`);
    /// each upper coordinate is then capped by what the budgets leave once every other
    /// coordinate sits at `a`.
    pub fn reduce(&self, z: &mut [f64], level: f64) -> bool {
        let k = self.k();
        let g = &self.gains;
        let s2 = self.sigma2;
        let mut a = vec![1.0; 2 * k];
        for _ in 0..2 {
            let gz = self.gamma(z);
            if gz <= level {
                return false;
            }
            for i in 0..2 * k {
                let w = self.weights[i];
                if w > 0.0 {
                    a[i] = (z[i] * libm::exp2(-2.0 * (gz - level) / w)).max(1.0);
                }
            }
            let need_b = |i: usize, x: f64| if x > 1.0 { s2 / g.r_br2[i] * x } else { 0.0 };
            let need_rm = |i: usize, x: f64| ((x - 1.0) * s2 / g.l_rm2[i]).max(0.0);
            let need_rb = |i: usize, x: f64| ((x - 1.0) * s2 / g.l_rb2[i]).max(0.0);
            let nb: Vec<f64> = (0..k).map(|i| need_b(i, a[i])).collect();
            let nr: Vec<f64> = (0..k).map(|i| need_rm(i, a[i]).max(need_rb(i, a[k + i]))).collect();
            let (sum_b, sum_r) = (nb.iter().sum::<f64>(), nr.iter().sum::<f64>());
            let slack = 1.0 + 1e-12;
            if sum_b > self.p_b * slack + 1e-300 || sum_r > self.p_r * slack + 1e-300 {
                return false;
            }
            for i in 0..k {
                let ms_cap = 1.0 + clamped_snr(g.r_mr2[i] * self.p_m[i] / s2);
                if a[k + i] > ms_cap * slack {
                    return false;
                }
                let rem_b = (self.p_b - (sum_b - nb[i])).max(0.0);
                let rem_r = (self.p_r - (sum_r - nr[i])).max(0.0);
                let dl = (rem_b * g.r_br2[i] / s2).max(1.0).min(1.0 + rem_r * g.l_rm2[i] / s2);
                let ul = ms_cap.min(1.0 + rem_r * g.l_rb2[i] / s2);
                z[i] = z[i].min(dl * slack);
                z[k + i] = z[k + i].min(ul * slack);
            }
            if z.iter().zip(&a).any(|(zi, ai)| zi < ai) {
                return false;
            }
        }
        self.gamma(z) > level
    }

    pub fn weighted_sum_rate(&self, pw: &PowerProfile) -> f64 {
        weighted_sum_rate(&self.gains, self.sigma2, pw, &self.p_m, &self.weights)
    }
}

pub fn gamma(weights: &[f64], z: &[f64]) -> f64 {
    weights.iter().zip(z).map(|(w, zi)| 0.5 * w * libm::log2(*zi)).sum()
}

/// BS sub-problem: `max_P min_k (1 + (P_k/σ_k² - 1)⁺) / z_k` subject to `Σ P_k ≤ P_B`.
///
/// Closed form: sort `z` ascending, find the level `ℓ` bracketing `P_B`, then
/// `θ₁ = max(1/z_ℓ, P_B / Σ_{m≥ℓ} z_m σ_m²)`. Streams below the level get no power; the whole
/// budget is always handed out.
pub fn solve_p1(z: &[f64], sigma_k2: &[f64], p_b: f64) -> (f64, Vec<f64>) {
    let k = z.len();
    assert_eq!(sigma_k2.len(), k);
    if k == 0 {
        return (f64::INFINITY, Vec::new());
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)));

    // suffix[l] = Σ_{m ≥ l} z_{π_m} σ²_{π_m}
    let mut suffix = vec![0.0; k + 1];
    for l in (0..k).rev() {
        let s = order[l];
        suffix[l] = suffix[l + 1] + z[s] * sigma_k2[s];
    }

    let mut level = 0;
    for l in (0..k).rev() {
        let upper = if l == 0 { f64::INFINITY } else { suffix[l] / z[order[l - 1]] };
        if p_b < upper {
            level = l;
            break;
        }
    }

    let theta = (1.0 / z[order[level]]).max(p_b / suffix[level]);
    let mut alloc = vec![0.0; k];
    let mut spent = 0.0;
    for &s in &order[level + 1..] {
        alloc[s] = theta * z[s] * sigma_k2[s];
        spent += alloc[s];
    }
    alloc[order[level]] = (p_b - spent).max(0.0);
    (theta, alloc)
}

/// Relay power a stream needs so both its relay links reach `θ z`.
fn relay_need(theta: f64, z_dl: f64, z_ul: f64, l_rm2: f64, l_rb2: f64, sigma2: f64) -> f64 {
    let a = (theta * z_dl - 1.0) * sigma2 / l_rm2;
    let b = (theta * z_ul - 1.0) * sigma2 / l_rb2;
    a.max(b).max(0.0)
}

/// Left side of the relay equation, `Σ_k [max(..)]⁺`.
pub fn relay_power_needed(theta: f64, z: &[f64], l_rm2: &[f64], l_rb2: &[f64], sigma2: f64) -> f64 {
    let k = l_rm2.len();
    (0..k)
        .map(|i| relay_need(theta, z[i], z[k + i], l_rm2[i], l_rb2[i], sigma2))
        .sum()
}

/// Relay sub-problem: the largest `θ₂` whose required relay power equals `P_R`.
///
/// Bisection brackets the root of the monotone piecewise-linear left side; the final value is
/// the exact root of the linear piece active at the bracket.
pub fn solve_p2(z: &[f64], l_rm2: &[f64], l_rb2: &[f64], sigma2: f64, p_r: f64) -> (f64, Vec<f64>) {
    let k = l_rm2.len();
    assert_eq!(z.len(), 2 * k);
    assert_eq!(l_rb2.len(), k);
    let z_max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z_min = z.iter().cloned().fold(f64::INFINITY, f64::min);
    let l_max = l_rm2.iter().chain(l_rb2).cloned().fold(f64::NEG_INFINITY, f64::max);

    let h = |t: f64| relay_power_needed(t, z, l_rm2, l_rb2, sigma2);
    let mut lo = 1.0 / z_max;
    let mut hi = 1.0 / z_min + p_r * l_max / (sigma2 * z_min);
    if p_r <= 0.0 {
        hi = lo;
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < p_r {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Exact root of the linear piece active inside the bracket.
    let mid = 0.5 * (lo + hi);
    let (mut slope, mut offset) = (0.0, 0.0);
    for i in 0..k {
        let a = (mid * z[i] - 1.0) / l_rm2[i];
        let b = (mid * z[k + i] - 1.0) / l_rb2[i];
        if a.max(b) > 0.0 {
            if a >= b {
                slope += z[i] * sigma2 / l_rm2[i];
                offset += sigma2 / l_rm2[i];
            } else {
                slope += z[k + i] * sigma2 / l_rb2[i];
                offset += sigma2 / l_rb2[i];
            }
        }
    }
    let mut theta = hi;
    if slope > 0.0 {
        let exact = (p_r + offset) / slope;
        if exact >= lo && exact <= hi {
            theta = exact;
        }
    }
    if p_r <= 0.0 {
        theta = lo;
    }
    let alloc = (0..k)
        .map(|i| relay_need(theta, z[i], z[k + i], l_rm2[i], l_rb2[i], sigma2))
        .collect();
    (theta, alloc)
}

/// MS part: `min_k (1 + (r_MR² P_M,k / σ² - 1)⁺) / z_{K+k}`.
pub fn theta3(z_ul: &[f64], r_mr2: &[f64], p_m: &[f64], sigma2: f64) -> f64 {
    z_ul.iter()
        .zip(r_mr2.iter().zip(p_m))
        .map(|(z, (g, p))| (1.0 + clamped_snr(g * p / sigma2)) / z)
        .fold(f64::INFINITY, f64::min)
}

/// Result of projecting a vertex onto the upper boundary of `G`.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub theta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    /// `θ z`
    pub y: Vec<f64>,
    /// A power profile with `1 + SNR_i(P) ≥ y_i` for every `i`.
    pub profile: PowerProfile,
}

pub fn project(problem: &MpProblem, z: &[f64]) -> Projection {
    let k = problem.k();
    assert_eq!(z.len(), 2 * k);
    let g = &problem.gains;
    let (theta1, p_b) = solve_p1(&z[..k], &problem.sigma_k2(), problem.p_b);
    let (theta2, p_r) = solve_p2(z, &g.l_rm2, &g.l_rb2, problem.sigma2, problem.p_r);
    let theta3 = theta3(&z[k..], &g.r_mr2, &problem.p_m, problem.sigma2);
    let theta = theta1.min(theta2).min(theta3);
    Projection {
        theta,
        theta1,
        theta2,
        theta3,
        y: z.iter().map(|v| theta * v).collect(),
        profile: PowerProfile { p_b, p_r },
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpOptions {
    /// Relative accuracy: the result satisfies `(1 + ε) R_ws ≥ optimum`.
    pub epsilon: f64,
    /// Maximum number of vertex expansions before giving up on the certificate.
    pub iteration_cap: usize,
    /// Also bound the optimum by Lagrangian duality on each clamp pattern; this usually
    /// certifies the incumbent without any polyblock iterations.
    pub dual_bound: bool,
}

impl Default for MpOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            iteration_cap: DEFAULT_ITERATION_CAP,
            dual_bound: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpSolution {
    pub profile: PowerProfile,
    /// Weighted sum-rate achieved by `profile`.
    pub weighted_sum_rate: f64,
    /// Best feasible `z` found (`z̄`).
    pub z_best: Vec<f64>,
    /// False when the iteration cap stopped the search before the vertex set emptied.
    pub certified: bool,
    pub iterations: usize,
    /// Current best value after every iteration.
    pub cbv_trace: Vec<f64>,
    /// `Γ` of the best remaining vertex when the search stopped (an upper bound on the optimum).
    pub upper_bound: f64,
}

struct Vertex {
    z: Vec<f64>,
    gamma: f64,
}

fn dominated_by(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Maximizes the weighted sum-rate over the BS and relay allocations to relative accuracy `ε`.
///
/// The incumbent starts at equal power. With `dual_bound` set, the Lagrangian bound runs first
/// and supplies candidates; if it already certifies the incumbent the polyblock loop is skipped.
/// Otherwise the polyblock outer approximation runs until its best vertex falls below
/// `(1 + ε)` times the incumbent, or until the iteration cap (result flagged uncertified).
pub fn maximize_weighted_sum_rate(problem: &MpProblem, opts: MpOptions) -> Result<MpSolution> {
    if !(opts.epsilon > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive"));
    }
    let k = problem.k();

    // Incumbent from equal power allocation.
    let equal = PowerProfile::equal(k, problem.p_b, problem.p_r);
    let mut z_best = problem.snr_point(&equal);
    let mut cbv = problem.gamma(&z_best);
    let mut best_profile = equal;

    let mut dual_upper = f64::INFINITY;
    if opts.dual_bound {
        let target = cbv * (1.0 + opts.epsilon);
        let mut improve = |z: &[f64]| {
            let z: Vec<f64> = z.iter().map(|v| v.max(1.0)).collect();
            let proj = project(problem, &z);
            let achieved = problem.snr_point(&proj.profile);
            let ga = problem.gamma(&achieved);
            if ga > cbv {
                cbv = ga;
                z_best = achieved;
                best_profile = proj.profile;
            }
            cbv * (1.0 + opts.epsilon)
        };
        if let Some(ub) = dual::dual_bound(problem, target, &mut improve) {
            dual_upper = ub;
        }
    }

    let mut z0 = problem.initial_vertex();
    let mut vertices = Vec::new();
    if problem.reduce(&mut z0, cbv * (1.0 + opts.epsilon)) {
        vertices.push(Vertex {
            gamma: problem.gamma(&z0),
            z: z0,
        });
    }
    let mut iterations = 0;
    let mut cbv_trace = Vec::new();
    let mut certified = true;

    let upper_bound = loop {
        let threshold = cbv * (1.0 + opts.epsilon);
        if dual_upper <= threshold {
            break dual_upper;
        }
        vertices.retain(|v| v.gamma > threshold);
        let Some(idx) = (0..vertices.len()).max_by(|&a, &b| {
            vertices[a]
                .gamma
                .total_cmp(&vertices[b].gamma)
                .then_with(|| lex_cmp(&vertices[a].z, &vertices[b].z))
        }) else {
            break threshold.min(dual_upper);
        };
        if iterations >= opts.iteration_cap {
            certified = false;
            break vertices[idx].gamma.min(dual_upper);
        }
        let zn = vertices.swap_remove(idx).z;
        let proj = project(problem, &zn);
        iterations += 1;

        // The profile meets both budgets, so its own SNR point is feasible even when some
        // y_i dropped below 1.
        let achieved = problem.snr_point(&proj.profile);
        let ga = problem.gamma(&achieved);
        if ga > cbv {
            cbv = ga;
            z_best = achieved;
            best_profile = proj.profile.clone();
        }
        cbv_trace.push(cbv);
        if proj.theta >= 1.0 {
            // z^n itself is feasible; nothing above the incumbent remains in its box.
            continue;
        }

        let threshold = cbv * (1.0 + opts.epsilon);
        for i in 0..2 * k {
            if proj.y[i] < 1.0 - H_TOL {
                continue;
            }
            let mut child = zn.clone();
            child[i] = proj.y[i].max(1.0);
            if !problem.reduce(&mut child, threshold) {
                continue;
            }
            let g = problem.gamma(&child);
            if vertices.iter().any(|v| dominated_by(&child, &v.z)) {
                continue;
            }
            vertices.retain(|v| !dominated_by(&v.z, &child));
            vertices.push(Vertex { z: child, gamma: g });
        }
    };

    Ok(MpSolution {
        weighted_sum_rate: problem.weighted_sum_rate(&best_profile),
        profile: best_profile,
        z_best,
        certified,
        iterations,
        cbv_trace,
        upper_bound,
    })
}
