//! Structured triangular factorizations of square complex matrices.
//!
//! Every factorization is built from one complex Householder QR kernel. RQ, LQ
//! and QL are obtained by running that kernel on a flipped or adjoint input and
//! mapping the factors back. The triangular factor is always normalized to a
//! real, non-negative diagonal, with the diagonal phases pushed into the unitary
//! factor, which makes the factors unique for full-rank inputs.

use alloc::vec::Vec;

use crate::cmat::{CMat, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Relative tolerance on `sigma_min / sigma_max` below which a matrix counts as singular.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FactorMode {
    /// `A = Q R`
    Qr,
    /// `A = R Q`
    Rq,
    /// `A = L Q`
    Lq,
    /// `A = Q L`
    Ql,
}

impl FactorMode {
    pub const ALL: [FactorMode; 4] = [FactorMode::Qr, FactorMode::Rq, FactorMode::Lq, FactorMode::Ql];

    /// Whether the triangular factor is upper (QR, RQ) or lower (LQ, QL).
    pub fn is_upper(self) -> bool {
        matches!(self, FactorMode::Qr | FactorMode::Rq)
    }

    /// Rebuilds `A` from `(unitary, triangular)` according to the mode.
    pub fn reconstruct(self, unitary: &CMat, triangular: &CMat) -> CMat {
        match self {
            FactorMode::Qr | FactorMode::Ql => unitary.mul(triangular),
            FactorMode::Rq | FactorMode::Lq => triangular.mul(unitary),
        }
    }
}

/// A unitary / triangular factor pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Factors {
    pub unitary: CMat,
    pub triangular: CMat,
}

/// Factors a square full-rank matrix in the requested mode.
pub fn triangular_factor(a: &CMat, mode: FactorMode) -> Result<Factors> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: (a.rows(), a.rows()),
            found: (a.rows(), a.cols()),
        });
    }
    check_rank(a)?;
    let n = a.rows();
    let factors = match mode {
        FactorMode::Qr => {
            let (q, r) = householder_qr(a);
            Factors {
                unitary: q,
                triangular: r,
            }
        }
        FactorMode::Rq => {
            // (J A)ᴴ = Q1 R1  =>  A = (J R1ᴴ J)(J Q1ᴴ)
            let (q1, r1) = householder_qr(&a.flip_rows().adjoint());
            Factors {
                unitary: q1.adjoint().flip_rows(),
                triangular: upper_part(&r1.adjoint().flip_rows().flip_cols()),
            }
        }
        FactorMode::Lq => {
            // Aᴴ = Q1 R1  =>  A = R1ᴴ Q1ᴴ
            let (q1, r1) = householder_qr(&a.adjoint());
            Factors {
                unitary: q1.adjoint(),
                triangular: lower_part(&r1.adjoint()),
            }
        }
        FactorMode::Ql => {
            // A J = Q1 R1  =>  A = (Q1 J)(J R1 J)
            let (q1, r1) = householder_qr(&a.flip_cols());
            Factors {
                unitary: q1.flip_cols(),
                triangular: lower_part(&r1.flip_rows().flip_cols()),
            }
        }
    };
    debug_assert_eq!(factors.triangular.rows(), n);
    Ok(factors)
}

/// Fails with `RankDeficient` when `sigma_min <= RANK_TOL * sigma_max`.
pub fn check_rank(a: &CMat) -> Result<()> {
    let lambda = singular_values_sq(a);
    let max = lambda.first().copied().unwrap_or(0.0);
    let min = lambda.last().copied().unwrap_or(0.0);
    let ratio = if max > 0.0 { libm::sqrt(min / max) } else { 0.0 };
    if ratio > RANK_TOL {
        Ok(())
    } else {
        Err(Error::RankDeficient { ratio })
    }
}

/// Householder QR with the diagonal of `R` normalized to be real and non-negative.
fn householder_qr(a: &CMat) -> (CMat, CMat) {
    let n = a.rows();
    let mut r = a.clone();
    let mut q = CMat::identity(n);
    let mut v: Vec<C64> = Vec::with_capacity(n);

    for k in 0..n.saturating_sub(1) {
        let norm_x = libm::sqrt((k..n).map(|i| r[(i, k)].norm_sqr()).sum::<f64>());
        if norm_x == 0.0 {
            continue;
        }
        let alpha = r[(k, k)];
        let phase = if alpha == ZERO { ONE } else { alpha / alpha.norm() };
        let beta = -phase * norm_x;

        v.clear();
        v.push(alpha - beta);
        v.extend((k + 1..n).map(|i| r[(i, k)]));
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;

        // R <- H R on the trailing block, H = I - tau v vᴴ.
        for j in k..n {
            let dot: C64 = (k..n).map(|i| v[i - k].conj() * r[(i, j)]).sum();
            let s = dot * tau;
            for i in k..n {
                r[(i, j)] -= v[i - k] * s;
            }
        }
        // Q <- Q H
        for i in 0..n {
            let dot: C64 = (k..n).map(|j| q[(i, j)] * v[j - k]).sum();
            let s = dot * tau;
            for j in k..n {
                q[(i, j)] -= s * v[j - k].conj();
            }
        }
        r[(k, k)] = beta;
        for i in k + 1..n {
            r[(i, k)] = ZERO;
        }
    }

    // Absorb diagonal phases: R <- D* R, Q <- Q D.
    for k in 0..n {
        let d = r[(k, k)];
        let m = d.norm();
        if m == 0.0 {
            continue;
        }
        let phase = d / m;
        if phase == ONE {
            continue;
        }
        let pc = phase.conj();
        for j in k..n {
            r[(k, j)] *= pc;
        }
        r[(k, k)] = C64::new(m, 0.0);
        for i in 0..n {
            q[(i, k)] *= phase;
        }
    }
    (q, upper_part(&r))
}

fn upper_part(m: &CMat) -> CMat {
    CMat::from_fn(m.rows(), m.cols(), |i, j| if j >= i { m[(i, j)] } else { ZERO })
}

fn lower_part(m: &CMat) -> CMat {
    CMat::from_fn(m.rows(), m.cols(), |i, j| if j <= i { m[(i, j)] } else { ZERO })
}

/// Squared singular values, descending, by one-sided (Hestenes) Jacobi on the columns of `a`.
pub fn singular_values_sq(a: &CMat) -> Vec<f64> {
    let m = a.rows();
    let n = a.cols();
    // Column-major working copy.
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();

    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                // Rotate column q's phase so that the cross term is real, then a real rotation.
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = libm::copysign(1.0, zeta) / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let yr = *y * phase;
                    let xn = *x * c - yr * s;
                    let yn = *x * s + yr * c;
                    *x = xn;
                    *y = yn;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut lambda: Vec<f64> = cols.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum()).collect();
    lambda.sort_by(|a, b| b.total_cmp(a));
    lambda
}

/// `log2 det M` for a Hermitian positive-definite `M`, by Cholesky.
pub fn log2_det_hpd(m: &CMat) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: (m.rows(), m.rows()),
            found: (m.rows(), m.cols()),
        });
    }
    let n = m.rows();
    let mut l = CMat::zeros(n, n);
    let mut acc = 0.0;
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::InvalidParameter("matrix is not positive definite"));
        }
        let ljj = libm::sqrt(d);
        l[(j, j)] = C64::new(ljj, 0.0);
        acc += libm::log2(d);
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(acc)
}

/// Solves `U X = B` for upper-triangular `U` with a non-zero diagonal.
pub fn solve_upper(u: &CMat, b: &CMat) -> Result<CMat> {
    let n = u.rows();
    if !u.is_square() || b.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: (n, b.cols()),
            found: (b.rows(), b.cols()),
        });
    }
    let mut x = CMat::zeros(n, b.cols());
    for c in 0..b.cols() {
        for i in (0..n).rev() {
            let mut s = b[(i, c)];
            for j in i + 1..n {
                s -= u[(i, j)] * x[(j, c)];
            }
            x[(i, c)] = s / u[(i, i)];
        }
    }
    Ok(x)
}
