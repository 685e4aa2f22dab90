//! Lagrangian bound for the weighted sum-rate program.
//!
//! Fix the set `S` of BS streams that clear the clamp (`z_k > 1`). On that piece the feasible
//! set is convex in `z` (a linear BS budget, a convex piecewise-linear relay budget and box
//! limits from the MSs) and `Γ` is concave, so the dual function
//! `g(λ, ν) = λ P_B + ν P_R + Σ_k max_{z, p} [...]` upper-bounds the best point of the piece
//! and the bound is tight at the dual optimum. The per-stream inner maximization has a closed
//! form. The union of the pieces over all `S` is the whole feasible set.

use alloc::vec;
use alloc::vec::Vec;

use super::MpProblem;
use crate::rates::clamped_snr;

const BRACKET_STEPS: usize = 200;
const BISECTION_STEPS: usize = 64;

/// Per-stream constants, with weights rescaled so that `Σ w ln z` is in bits.
#[derive(Clone, Copy, Debug)]
struct Stream {
    w_dl: f64,
    w_ul: f64,
    /// BS power per unit of `z_k`: `σ² / r_BR²`.
    s: f64,
    /// Relay power per unit of `z_k - 1`: `σ² / l_RM²`.
    a: f64,
    /// Relay power per unit of `z_{K+k} - 1`: `σ² / l_RB²`.
    b: f64,
    /// MS-side cap on `z_{K+k}`.
    c: f64,
}

#[derive(Clone, Copy, Debug, Default)]
struct StreamOpt {
    value: f64,
    z_dl: f64,
    z_ul: f64,
    relay: f64,
}

impl Stream {
    fn eval(&self, lambda: f64, nu: f64, z_dl: f64, z_ul: f64) -> StreamOpt {
        let relay = (self.a * (z_dl - 1.0)).max(self.b * (z_ul - 1.0)).max(0.0);
        let value = self.w_dl * libm::log(z_dl) - lambda * self.s * z_dl + self.w_ul * libm::log(z_ul) - nu * relay;
        StreamOpt {
            value,
            z_dl,
            z_ul,
            relay,
        }
    }

    /// `max over z_dl ≥ 1, 1 ≤ z_ul ≤ c` of the stream's Lagrangian share.
    fn best_active(&self, lambda: f64, nu: f64) -> StreamOpt {
        let mut best = StreamOpt {
            value: f64::NEG_INFINITY,
            ..Default::default()
        };
        let mut consider = |o: StreamOpt| {
            if o.value > best.value || best.value == f64::NEG_INFINITY {
                best = o;
            }
        };
        let ul_edge = self.b * (self.c - 1.0);

        // Relay power set by the downlink, uplink at its cap.
        let denom = lambda * self.s + nu * self.a;
        let z_floor = 1.0 + ul_edge / self.a;
        let z_dl = if denom > 0.0 { (self.w_dl / denom).max(z_floor) } else { f64::INFINITY };
        if z_dl.is_finite() {
            consider(self.eval(lambda, nu, z_dl, self.c));
        } else if self.w_dl > 0.0 {
            return StreamOpt {
                value: f64::INFINITY,
                z_dl,
                z_ul: self.c,
                relay: f64::INFINITY,
            };
        } else {
            consider(self.eval(lambda, nu, z_floor, self.c));
        }

        // Relay power set by the uplink, downlink unconstrained by the relay.
        let z_dl = if lambda * self.s > 0.0 { (self.w_dl / (lambda * self.s)).max(1.0) } else if self.w_dl > 0.0 { f64::INFINITY } else { 1.0 };
        let z_ul = if nu * self.b > 0.0 { (self.w_ul / (nu * self.b)).clamp(1.0, self.c) } else if self.w_ul > 0.0 { self.c } else { 1.0 };
        if z_dl.is_finite() && self.b * (z_ul - 1.0) >= self.a * (z_dl - 1.0) {
            consider(self.eval(lambda, nu, z_dl, z_ul));
        }

        // Both links on the ridge a (z_dl - 1) = b (z_ul - 1) = t, 0 ≤ t ≤ b (c - 1).
        let kappa = lambda * self.s / self.a + nu;
        let t = if kappa > 0.0 {
            let bq = kappa * (self.a + self.b) - self.w_dl - self.w_ul;
            let cq = kappa * self.a * self.b - self.w_dl * self.b - self.w_ul * self.a;
            let disc = (bq * bq - 4.0 * kappa * cq).max(0.0);
            let sq = libm::sqrt(disc);
            // Larger root, in the cancellation-free form.
            if bq <= 0.0 {
                (-bq + sq) / (2.0 * kappa)
            } else if sq + bq > 0.0 {
                -2.0 * cq / (bq + sq)
            } else {
                0.0
            }
        } else {
            ul_edge
        };
        let t = t.clamp(0.0, ul_edge);
        consider(self.eval(lambda, nu, 1.0 + t / self.a, 1.0 + t / self.b));
        best
    }

    /// Stream held at `z_dl = 1` (outside the active set).
    fn best_inactive(&self, nu: f64) -> StreamOpt {
        let z_ul = if nu * self.b > 0.0 { (self.w_ul / (nu * self.b)).clamp(1.0, self.c) } else if self.w_ul > 0.0 { self.c } else { 1.0 };
        self.eval(0.0, nu, 1.0, z_ul)
    }
}

struct Piece<'a> {
    streams: &'a [Stream],
    active: Vec<bool>,
    p_b: f64,
    p_r: f64,
}

#[derive(Clone, Debug)]
struct DualPoint {
    g: f64,
    z: Vec<f64>,
    bs_used: f64,
    relay_used: f64,
}

impl Piece<'_> {
    fn evaluate(&self, lambda: f64, nu: f64) -> DualPoint {
        let k = self.streams.len();
        let mut z = vec![1.0; 2 * k];
        let mut g = lambda * self.p_b + nu * self.p_r;
        let (mut bs_used, mut relay_used) = (0.0, 0.0);
        for (i, st) in self.streams.iter().enumerate() {
            let o = if self.active[i] { st.best_active(lambda, nu) } else { st.best_inactive(nu) };
            g += o.value;
            z[i] = o.z_dl;
            z[k + i] = o.z_ul;
            if self.active[i] {
                bs_used += st.s * o.z_dl;
            }
            relay_used += o.relay;
        }
        DualPoint {
            g,
            z,
            bs_used,
            relay_used,
        }
    }

    fn any_active(&self) -> bool {
        self.active.iter().any(|a| *a)
    }

    /// Minimizes over `λ` for fixed `ν`; returns the bracket ends (BS-infeasible, BS-feasible).
    fn minimize_lambda(&self, nu: f64) -> (DualPoint, DualPoint) {
        let at0 = self.evaluate(0.0, nu);
        if !self.any_active() || at0.bs_used <= self.p_b {
            return (at0.clone(), at0);
        }
        let scale = self.streams.iter().map(|s| s.w_dl).sum::<f64>().max(1e-300) / self.p_b.max(1e-300);
        let (mut lo, mut hi) = (0.0, scale);
        let mut at_hi = self.evaluate(hi, nu);
        let mut steps = 0;
        while at_hi.bs_used > self.p_b && steps < BRACKET_STEPS {
            lo = hi;
            hi *= 2.0;
            at_hi = self.evaluate(hi, nu);
            steps += 1;
        }
        let mut at_lo = self.evaluate(lo, nu);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let m = self.evaluate(mid, nu);
            if m.bs_used > self.p_b {
                lo = mid;
                at_lo = m;
            } else {
                hi = mid;
                at_hi = m;
            }
        }
        (at_lo, at_hi)
    }

    /// Mixes the two bracket ends so the BS budget is met with equality when possible.
    fn mix_bs(&self, lo: &DualPoint, hi: &DualPoint) -> Vec<f64> {
        mix(&lo.z, lo.bs_used, &hi.z, hi.bs_used, self.p_b)
    }
}

/// Convex combination of `x` (over budget) and `y` (within budget) whose linear usage hits `budget`.
fn mix(x: &[f64], used_x: f64, y: &[f64], used_y: f64, budget: f64) -> Vec<f64> {
    if !(used_x > budget) || !(used_x > used_y) || !x.iter().all(|v| v.is_finite()) {
        return y.to_vec();
    }
    let t = ((budget - used_y) / (used_x - used_y)).clamp(0.0, 1.0);
    x.iter().zip(y).map(|(a, b)| t * a + (1.0 - t) * b).collect()
}

/// Outcome of bounding one piece.
pub(crate) struct PieceBound {
    /// Valid upper bound on `Γ` over the piece (bits).
    pub upper: f64,
    /// Primal candidates near the dual optimum (not necessarily feasible).
    pub candidates: Vec<Vec<f64>>,
}

fn streams_of(problem: &MpProblem) -> Vec<Stream> {
    let k = problem.k();
    let g = &problem.gains;
    let s2 = problem.sigma2;
    let to_nat = 0.5 / core::f64::consts::LN_2;
    (0..k)
        .map(|i| Stream {
            w_dl: problem.weights[i] * to_nat,
            w_ul: problem.weights[k + i] * to_nat,
            s: s2 / g.r_br2[i],
            a: s2 / g.l_rm2[i],
            b: s2 / g.l_rb2[i],
            c: 1.0 + clamped_snr(g.r_mr2[i] * problem.p_m[i] / s2),
        })
        .collect()
}

/// Minimizes the dual of one piece, stopping early once the bound drops to `target`.
fn bound_piece(streams: &[Stream], active: Vec<bool>, p_b: f64, p_r: f64, target: f64) -> PieceBound {
    let piece = Piece {
        streams,
        active,
        p_b,
        p_r,
    };
    let mut upper = f64::INFINITY;
    let mut candidates = Vec::new();
    let note = |lo: &DualPoint, hi: &DualPoint, upper: &mut f64| {
        *upper = upper.min(lo.g).min(hi.g);
    };

    let solve_nu = |nu: f64| {
        let (lo, hi) = piece.minimize_lambda(nu);
        let z = piece.mix_bs(&lo, &hi);
        (lo, hi, z)
    };

    let (lo0, hi0, z0) = solve_nu(0.0);
    note(&lo0, &hi0, &mut upper);
    if hi0.relay_used <= p_r {
        candidates.push(z0);
        return PieceBound { upper, candidates };
    }
    if upper <= target {
        return PieceBound { upper, candidates };
    }

    let scale = streams.iter().map(|s| s.w_dl + s.w_ul).sum::<f64>().max(1e-300) / p_r.max(1e-300);
    let (mut nu_lo, mut nu_hi) = (0.0, scale);
    let mut left = (hi0, z0);
    let (l, h, z) = solve_nu(nu_hi);
    note(&l, &h, &mut upper);
    let mut right = (h, z);
    let mut steps = 0;
    while relay_of(&right.1, streams) > p_r && steps < BRACKET_STEPS && upper > target {
        nu_lo = nu_hi;
        left = right;
        nu_hi *= 2.0;
        let (l, h, z) = solve_nu(nu_hi);
        note(&l, &h, &mut upper);
        right = (h, z);
        steps += 1;
    }
    for _ in 0..BISECTION_STEPS {
        if upper <= target {
            break;
        }
        let mid = 0.5 * (nu_lo + nu_hi);
        if mid <= nu_lo || mid >= nu_hi {
            break;
        }
        let (l, h, z) = solve_nu(mid);
        note(&l, &h, &mut upper);
        if relay_of(&z, streams) > p_r {
            nu_lo = mid;
            left = (h, z);
        } else {
            nu_hi = mid;
            right = (h, z);
        }
    }
    let (rl, rr) = (relay_of(&left.1, streams), relay_of(&right.1, streams));
    candidates.push(mix(&left.1, rl, &right.1, rr, p_r));
    candidates.push(right.1);
    PieceBound { upper, candidates }
}

fn relay_of(z: &[f64], streams: &[Stream]) -> f64 {
    let k = streams.len();
    streams
        .iter()
        .enumerate()
        .map(|(i, s)| (s.a * (z[i] - 1.0)).max(s.b * (z[k + i] - 1.0)).max(0.0))
        .sum()
}

/// Largest `K` for which every active set is enumerated.
pub const MAX_PIECE_STREAMS: usize = 12;

/// Upper bound on `max Γ` over the feasible set together with primal candidates. Pieces whose
/// bound falls to `target` are abandoned early; `improve` is called with each candidate so the
/// caller can raise `target` on the fly. Returns `None` when `K` is too large to enumerate.
pub(crate) fn dual_bound(
    problem: &MpProblem,
    mut target: f64,
    mut improve: impl FnMut(&[f64]) -> f64,
) -> Option<f64> {
    let k = problem.k();
    if k > MAX_PIECE_STREAMS {
        return None;
    }
    let streams = streams_of(problem);
    let mut masks: Vec<u32> = (0..1u32 << k).collect();
    // Larger active sets first: at moderate SNR they hold the optimum.
    masks.sort_by_key(|m| core::cmp::Reverse(m.count_ones()));
    let mut upper = f64::NEG_INFINITY;
    for mask in masks {
        let active: Vec<bool> = (0..k).map(|i| mask >> i & 1 == 1).collect();
        let need: f64 = (0..k).filter(|&i| active[i]).map(|i| streams[i].s).sum();
        if mask != 0 && need >= problem.p_b {
            // No point of this piece clears the clamp on every active stream.
            continue;
        }
        let pb = bound_piece(&streams, active, problem.p_b, problem.p_r, target);
        for z in &pb.candidates {
            target = target.max(improve(z));
        }
        upper = upper.max(pb.upper);
    }
    Some(upper)
}
