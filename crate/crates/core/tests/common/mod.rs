//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use twrc_core::cmat::{CMat, C64};

fn dot_conj(a: &[C64], q: &[C64]) -> C64 {
    a.iter().zip(q).map(|(x, y)| y.conj() * x).sum()
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Modified Gram-Schmidt over `vectors` in the given order. Returns orthonormal vectors and the
/// coefficients `coef[i][j] = <v_i, q_j>` for `j ≤ i` (in processing order).
fn mgs(vectors: Vec<Vec<C64>>) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
    let n = vectors.len();
    let mut qs: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut coef = vec![vec![C64::new(0.0, 0.0); n]; n];
    for (i, mut v) in vectors.into_iter().enumerate() {
        for j in 0..i {
            let r = dot_conj(&v, &qs[j]);
            coef[i][j] = r;
            for (x, q) in v.iter_mut().zip(&qs[j]) {
                *x -= r * q;
            }
        }
        let nv = norm(&v);
        coef[i][i] = C64::new(nv, 0.0);
        qs.push(v.into_iter().map(|x| x / nv).collect());
    }
    (qs, coef)
}

fn column(a: &CMat, j: usize) -> Vec<C64> {
    (0..a.rows()).map(|i| a[(i, j)]).collect()
}

fn row_conj(a: &CMat, i: usize) -> Vec<C64> {
    (0..a.cols()).map(|j| a[(i, j)].conj()).collect()
}

/// Reference `(unitary, triangular)` for each factorization mode, built directly from
/// Gram-Schmidt on columns (QR, QL) or on conjugated rows (RQ, LQ).
pub fn mgs_factor(a: &CMat, mode: &str) -> (CMat, CMat) {
    let n = a.rows();
    match mode {
        "qr" => {
            let (qs, c) = mgs((0..n).map(|j| column(a, j)).collect());
            (
                CMat::from_fn(n, n, |i, j| qs[j][i]),
                CMat::from_fn(n, n, |i, j| if i <= j { c[j][i] } else { C64::new(0.0, 0.0) }),
            )
        }
        "ql" => {
            // column j = Σ_{i ≥ j} q_i l(i, j): process columns last to first.
            let order: Vec<usize> = (0..n).rev().collect();
            let (qs, c) = mgs(order.iter().map(|&j| column(a, j)).collect());
            let q = CMat::from_fn(n, n, |i, j| qs[n - 1 - j][i]);
            let l = CMat::from_fn(n, n, |i, j| if i >= j { c[n - 1 - j][n - 1 - i] } else { C64::new(0.0, 0.0) });
            (q, l)
        }
        "lq" => {
            // row i = Σ_{j ≤ i} l(i, j) q_j; conjugate rows so the inner product matches.
            let (qs, c) = mgs((0..n).map(|i| row_conj(a, i)).collect());
            let q = CMat::from_fn(n, n, |i, j| qs[i][j].conj());
            let l = CMat::from_fn(n, n, |i, j| if j <= i { c[i][j].conj() } else { C64::new(0.0, 0.0) });
            (q, l)
        }
        "rq" => {
            // row i = Σ_{j ≥ i} r(i, j) q_j: process rows last to first.
            let order: Vec<usize> = (0..n).rev().collect();
            let (qs, c) = mgs(order.iter().map(|&i| row_conj(a, i)).collect());
            let q = CMat::from_fn(n, n, |i, j| qs[n - 1 - i][j].conj());
            let r = CMat::from_fn(n, n, |i, j| if j >= i { c[n - 1 - i][n - 1 - j].conj() } else { C64::new(0.0, 0.0) });
            (q, r)
        }
        _ => unreachable!(),
    }
}

/// Eigenvalues of a real symmetric matrix by cyclic two-sided Jacobi rotations, descending.
pub fn jacobi_eigenvalues(mut m: Vec<Vec<f64>>) -> Vec<f64> {
    let n = m.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        let scale: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum();
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Squared singular values of `a` from the real embedding of `AᴴA` (each eigenvalue appears twice).
pub fn oracle_singular_values_sq(a: &CMat) -> Vec<f64> {
    let b = a.adjoint().matmul(a).unwrap();
    let n = b.rows();
    let mut m = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = b[(i, j)];
            m[i][j] = z.re;
            m[i][n + j] = -z.im;
            m[n + i][j] = z.im;
            m[n + i][n + j] = z.re;
        }
    }
    jacobi_eigenvalues(m).into_iter().step_by(2).collect()
}

/// Maximizes `f` over the 2-D box `[0, x_max] x [0, y_max]` on an `n x n` grid, then refines by
/// repeatedly zooming a finer grid around the incumbent.
pub fn grid_max_2d(x_max: f64, y_max: f64, n: usize, zooms: usize, f: impl Fn(f64, f64) -> f64) -> (f64, f64, f64) {
    let (mut x0, mut x1, mut y0, mut y1) = (0.0, x_max, 0.0, y_max);
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for _ in 0..=zooms {
        for i in 0..=n {
            for j in 0..=n {
                let x = x0 + (x1 - x0) * i as f64 / n as f64;
                let y = y0 + (y1 - y0) * j as f64 / n as f64;
                let v = f(x, y);
                if v > best.0 {
                    best = (v, x, y);
                }
            }
        }
        let (dx, dy) = (2.0 * (x1 - x0) / n as f64, 2.0 * (y1 - y0) / n as f64);
        x0 = (best.1 - dx).max(0.0);
        x1 = (best.1 + dx).min(x_max);
        y0 = (best.2 - dy).max(0.0);
        y1 = (best.2 + dy).min(y_max);
    }
    best
}

use twrc_core::channel::{gen_channels, Budgets};
use twrc_core::powalloc::MpProblem;
use twrc_core::rates::{stream_snrs, PowerProfile, Weights};
use twrc_core::triangulate::{triangularize, Permutation};

/// `min_k (1 + (P_k/σ_k² - 1)⁺) / z_k`
pub fn p1_objective(z: &[f64], sigma_k2: &[f64], p: &[f64]) -> f64 {
    z.iter()
        .zip(sigma_k2)
        .zip(p)
        .map(|((z, s), p)| (1.0 + (p / s - 1.0).max(0.0)) / z)
        .fold(f64::INFINITY, f64::min)
}

/// Grid search for the BS max-min problem (K ≤ 3), with zoom refinement.
pub fn p1_grid_oracle(z: &[f64], sigma_k2: &[f64], p_b: f64) -> f64 {
    match z.len() {
        1 => p1_objective(z, sigma_k2, &[p_b]),
        2 => {
            let (mut lo, mut hi) = (0.0, p_b);
            let mut best = (f64::NEG_INFINITY, 0.0);
            for _ in 0..8 {
                let n = 2000;
                for i in 0..=n {
                    let x = lo + (hi - lo) * i as f64 / n as f64;
                    let v = p1_objective(z, sigma_k2, &[x, p_b - x]);
                    if v > best.0 {
                        best = (v, x);
                    }
                }
                let d = 2.0 * (hi - lo) / n as f64;
                lo = (best.1 - d).max(0.0);
                hi = (best.1 + d).min(p_b);
            }
            best.0
        }
        3 => {
            grid_max_2d(p_b, p_b, 400, 6, |x, y| {
                if x + y > p_b {
                    f64::NEG_INFINITY
                } else {
                    p1_objective(z, sigma_k2, &[x, y, p_b - x - y])
                }
            })
            .0
        }
        _ => unimplemented!(),
    }
}

/// K=2 profile with full budgets, parameterized by the first stream's shares.
pub fn profile2(p_b: f64, p_r: f64, x: f64, y: f64) -> PowerProfile {
    PowerProfile {
        p_b: vec![x, p_b - x],
        p_r: vec![y, p_r - y],
    }
}

/// Brute-force `max_P min_i (1 + SNR_i(P)) / z_i` for K=2 over a 200 x 200 grid (plus zoom).
pub fn project_grid_oracle(problem: &MpProblem, z: &[f64]) -> f64 {
    grid_max_2d(problem.p_b, problem.p_r, 200, 4, |x, y| {
        let snr = stream_snrs(&problem.gains, problem.sigma2, &profile2(problem.p_b, problem.p_r, x, y), &problem.p_m);
        snr.iter().zip(z).map(|(s, z)| (1.0 + s) / z).fold(f64::INFINITY, f64::min)
    })
    .0
}

/// Brute-force weighted sum-rate for K=2 over a 200 x 200 grid of full-budget splits (plus zoom).
pub fn mp_grid_oracle(problem: &MpProblem) -> f64 {
    grid_max_2d(problem.p_b, problem.p_r, 200, 4, |x, y| {
        problem.weighted_sum_rate(&profile2(problem.p_b, problem.p_r, x, y))
    })
    .0
}

/// Deterministic pseudo-random unit interval values for instance generation.
pub fn unit(seed: u64, i: u64) -> f64 {
    let v = twrc_core::channel::derive_seed(seed, i);
    (v >> 11) as f64 / (1u64 << 53) as f64
}

/// Random K-stream MP instance with budgets spread over 0-30 dB and weights in [0.1, 1].
pub fn random_problem(k: usize, seed: u64) -> MpProblem {
    let db = |i| 10f64.powf(3.0 * unit(seed, i));
    let (p_b, p_r, p_m) = (db(1), db(2), db(3));
    let ch = gen_channels(k, seed, false, Budgets::uniform(k, 1.0, p_b, p_r, p_m)).unwrap();
    let tri = triangularize(&ch, &Permutation::identity(k)).unwrap();
    let w = Weights {
        xi_b: (0..k).map(|i| 0.1 + 0.9 * unit(seed, 10 + i as u64)).collect(),
        xi_m: (0..k).map(|i| 0.1 + 0.9 * unit(seed, 20 + i as u64)).collect(),
    };
    MpProblem::new(&tri, &ch, &w).unwrap()
}
