//! Noiseless end-to-end lattice encode/decode chain.
//!
//! Every stream uses a chain of scaled integer lattices `Λ_M ⊆ Λ_B ⊆ Λ_C` applied
//! independently to the real and imaginary parts: `q_B = b q_C`, `q_M = m q_B`. BS codewords
//! are `Λ_C` points in the `Λ_B` cell, MS codewords are `Λ_C` points in the `Λ_M` cell. The
//! relay decodes the lattice sum of both codewords per stream, reduces it modulo the combining
//! lattice and forwards it with dirty paper coding; each end then strips its own contribution.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::channel::{gen_channels, rng_from_seed, Budgets, ChannelSet};
use crate::cmat::{CMat, C64};
use crate::error::{Error, Result};
use crate::triangulate::{triangularize, Permutation, Triangularization};

/// Agreement tolerance for decoded codewords.
pub const DECODE_TOL: f64 = 1e-9;

/// `x mod qZ` into `[-q/2, q/2)`.
#[inline]
pub fn mod_real(x: f64, q: f64) -> f64 {
    let r = x - q * libm::floor(x / q + 0.5);
    // floor can land a hair outside the cell for huge |x / q|
    if r >= 0.5 * q {
        r - q
    } else {
        r
    }
}

/// Componentwise `mod` on real and imaginary parts.
#[inline]
pub fn mod_lattice(z: C64, q: f64) -> C64 {
    C64::new(mod_real(z.re, q), mod_real(z.im, q))
}

/// Nearest point of `qZ + i qZ`.
#[inline]
pub fn snap(z: C64, q: f64) -> C64 {
    C64::new(q * libm::round(z.re / q), q * libm::round(z.im / q))
}

/// Lattice used by the relay to combine the two codewords.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Combining {
    /// `Λ_M`: both ends recover their partner's codeword for any spacing ratios.
    #[default]
    Coarse,
    /// `Λ_B`: the BS only learns the MS codeword modulo `Λ_B`, so it fails whenever `m > 1`.
    Fine,
}

/// Lattice chain of one stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeChain {
    pub q_c: f64,
    /// `q_B / q_C`
    pub b: u32,
    /// `q_M / q_B`
    pub m: u32,
}

impl Default for LatticeChain {
    fn default() -> Self {
        Self { q_c: 1.0, b: 4, m: 2 }
    }
}

impl LatticeChain {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_c > 0.0 && self.q_c.is_finite()) || self.b == 0 || self.m == 0 {
            return Err(Error::InvalidParameter("lattice spacings must be positive"));
        }
        Ok(())
    }

    pub fn q_b(&self) -> f64 {
        self.q_c * self.b as f64
    }

    pub fn q_m(&self) -> f64 {
        self.q_b() * self.m as f64
    }

    pub fn q_s(&self, combining: Combining) -> f64 {
        match combining {
            Combining::Coarse => self.q_m(),
            Combining::Fine => self.q_b(),
        }
    }
}

/// Deliberate corruption of the relay output, for checking that the decoders notice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fault {
    pub stream: usize,
    pub symbol: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeParams {
    /// One chain per stream.
    pub chains: Vec<LatticeChain>,
    pub combining: Combining,
    pub fault: Option<Fault>,
}

impl LatticeParams {
    pub fn uniform(k: usize, chain: LatticeChain) -> Self {
        Self {
            chains: vec![chain; k],
            combining: Combining::default(),
            fault: None,
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        if self.chains.len() != k {
            return Err(Error::DimensionMismatch {
                expected: (k, 1),
                found: (self.chains.len(), 1),
            });
        }
        self.chains.iter().try_for_each(LatticeChain::validate)
    }
}

/// Codewords and dithers of one frame, all `K x T`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameInput {
    pub c_b: CMat,
    pub c_m: CMat,
    pub d_b: CMat,
    pub d_m: CMat,
    pub d_r: CMat,
}

fn uniform_cell<R: Rng + ?Sized>(rng: &mut R, q: f64) -> C64 {
    C64::new(q * (rng.gen::<f64>() - 0.5), q * (rng.gen::<f64>() - 0.5))
}

fn codeword<R: Rng + ?Sized>(rng: &mut R, q_c: f64, points: u32, q: f64) -> C64 {
    let re = mod_real(rng.gen_range(0..points) as f64 * q_c, q);
    let im = mod_real(rng.gen_range(0..points) as f64 * q_c, q);
    C64::new(re, im)
}

/// Uniform codewords and dithers for `symbols` channel uses.
pub fn random_frame_input<R: Rng + ?Sized>(rng: &mut R, params: &LatticeParams, symbols: usize) -> FrameInput {
    let k = params.chains.len();
    let mut gen = |f: &mut dyn FnMut(&mut R, &LatticeChain) -> C64| {
        let mut m = CMat::zeros(k, symbols);
        for i in 0..k {
            for t in 0..symbols {
                m[(i, t)] = f(rng, &params.chains[i]);
            }
        }
        m
    };
    let c_b = gen(&mut |r, ch| codeword(r, ch.q_c, ch.b, ch.q_b()));
    let c_m = gen(&mut |r, ch| codeword(r, ch.q_c, ch.b * ch.m, ch.q_m()));
    let d_b = gen(&mut |r, ch| uniform_cell(r, ch.q_b()));
    let d_m = gen(&mut |r, ch| uniform_cell(r, ch.q_m()));
    let comb = params.combining;
    let d_r = gen(&mut |r, ch| uniform_cell(r, ch.q_s(comb)));
    FrameInput { c_b, c_m, d_b, d_m, d_r }
}

/// BS lattice precoding: returns `S_B` and the BS side information `S_B + V + D_B`, which
/// equals `C_B` up to a point of `Λ_B`. Streams are encoded from `K` down to 1 so the known
/// interference `v_k = Σ_{j>k} r'_BR(k,j)/r_BR(k,k) s_B,j` is available.
pub fn encode_bs(tri: &Triangularization, params: &LatticeParams, input: &FrameInput) -> (CMat, CMat) {
    let k = tri.k();
    let t = input.c_b.cols();
    let mut s_b = CMat::zeros(k, t);
    let mut side = CMat::zeros(k, t);
    for i in (0..k).rev() {
        let q = params.chains[i].q_b();
        let rkk = tri.r_br[(i, i)].re;
        for col in 0..t {
            let mut v = C64::new(0.0, 0.0);
            for j in i + 1..k {
                v += tri.rp_br[(i, j)] * s_b[(j, col)];
            }
            v /= rkk;
            let s = mod_lattice(input.c_b[(i, col)] - v - input.d_b[(i, col)], q);
            s_b[(i, col)] = s;
            side[(i, col)] = s + v + input.d_b[(i, col)];
        }
    }
    (s_b, side)
}

/// MS encoding: `s_M = ((c_M - d_M) mod Λ_M) / α`. Also returns the unscaled lattice part.
pub fn encode_ms(tri: &Triangularization, params: &LatticeParams, input: &FrameInput) -> (CMat, CMat) {
    let k = tri.k();
    let t = input.c_m.cols();
    let shaped = CMat::from_fn(k, t, |i, col| {
        mod_lattice(input.c_m[(i, col)] - input.d_m[(i, col)], params.chains[i].q_m())
    });
    let s_m = CMat::from_fn(k, t, |i, col| shaped[(i, col)] / tri.alpha[i]);
    (s_m, shaped)
}

/// Relay multiple-access front end and successive lattice decoding. Returns the network-coded
/// symbols `s_R` (stream-indexed, reduced modulo the combining lattice).
pub fn relay_decode(tri: &Triangularization, params: &LatticeParams, input: &FrameInput, y_r: &CMat) -> CMat {
    let k = tri.k();
    let t = y_r.cols();
    let y_tilde = tri.q_mr.adjoint().mul(y_r);
    let mut s_tilde = CMat::zeros(k, t);
    let mut s_r = CMat::zeros(k, t);
    for i in (0..k).rev() {
        let ch = params.chains[i];
        let rkk = tri.r_br[(i, i)].re;
        for col in 0..t {
            let mut z = y_tilde[(i, col)];
            for n in i + 1..k {
                z -= tri.u_r[(i, n)] * s_tilde[(n, col)];
            }
            let dith = input.d_b[(i, col)] + input.d_m[(i, col)];
            let w = snap(z / rkk + dith, ch.q_c);
            s_tilde[(i, col)] = (w - dith) * rkk;
            s_r[(i, col)] = mod_lattice(w, ch.q_s(params.combining));
        }
    }
    if let Some(f) = params.fault {
        if f.stream < k && f.symbol < t {
            let q = params.chains[f.stream].q_c;
            let q_s = params.chains[f.stream].q_s(params.combining);
            s_r[(f.stream, f.symbol)] = mod_lattice(s_r[(f.stream, f.symbol)] + C64::new(0.5 * q, 0.0), q_s);
        }
    }
    s_r
}

/// Lattice DPC over the DPC positions. Returns the pre-rotation DPC block `X_DPC`
/// (position-indexed); the relay transmits `Q_RMᴴ X_DPC`.
pub fn dpc_encode(tri: &Triangularization, params: &LatticeParams, input: &FrameInput, s_r: &CMat) -> CMat {
    let k = tri.k();
    let t = s_r.cols();
    let mu = tri.perm.mu();
    let mut x = CMat::zeros(k, t);
    for n in 0..k {
        let stream = mu[n];
        let q = params.chains[stream].q_s(params.combining);
        let lnn = tri.l_rm[(n, n)].re;
        for col in 0..t {
            let mut interf = C64::new(0.0, 0.0);
            for j in 0..n {
                interf += tri.l_rm[(n, j)] * x[(j, col)];
            }
            x[(n, col)] = mod_lattice(s_r[(stream, col)] - interf / lnn - input.d_r[(stream, col)], q);
        }
    }
    x
}

/// MS decoding: recovers `s_R` from its own antenna and strips its codeword.
/// `y_m` holds the received signal of every MS (row `k` is MS `k`). Returns `Ĉ_B`.
pub fn ms_decode(
    tri: &Triangularization,
    params: &LatticeParams,
    input: &FrameInput,
    shaped_m: &CMat,
    y_m: &CMat,
) -> CMat {
    let k = tri.k();
    let t = y_m.cols();
    let q = tri.perm.q();
    CMat::from_fn(k, t, |stream, col| {
        let ch = params.chains[stream];
        let lnn = tri.l_rm[(q[stream], q[stream])].re;
        let s_hat = mod_lattice(y_m[(stream, col)] / lnn + input.d_r[(stream, col)], ch.q_s(params.combining));
        mod_lattice(s_hat - shaped_m[(stream, col)] - input.d_m[(stream, col)], ch.q_b())
    })
}

/// BS decoding: undoes the relay rotation, forward-substitutes through `L_RB`, repeats the
/// DPC interference computation and strips its own side information. Returns `Ĉ_M`.
pub fn bs_decode(tri: &Triangularization, params: &LatticeParams, input: &FrameInput, side_b: &CMat, y_b: &CMat) -> CMat {
    let k = tri.k();
    let t = y_b.cols();
    let y_tilde = tri.q_rb.adjoint().mul(y_b);
    let mu = tri.perm.mu();
    let mut x = CMat::zeros(k, t);
    for n in 0..k {
        let lnn = tri.l_rb[(n, n)].re;
        for col in 0..t {
            let mut acc = y_tilde[(n, col)];
            for j in 0..n {
                acc -= tri.l_rb[(n, j)] * x[(j, col)];
            }
            x[(n, col)] = acc / lnn;
        }
    }
    let mut c_m = CMat::zeros(k, t);
    for n in 0..k {
        let stream = mu[n];
        let ch = params.chains[stream];
        let lnn = tri.l_rm[(n, n)].re;
        for col in 0..t {
            let mut interf = C64::new(0.0, 0.0);
            for j in 0..n {
                interf += tri.l_rm[(n, j)] * x[(j, col)];
            }
            let s_hat = mod_lattice(x[(n, col)] + interf / lnn + input.d_r[(stream, col)], ch.q_s(params.combining));
            c_m[(stream, col)] = mod_lattice(s_hat - side_b[(stream, col)], ch.q_m());
        }
    }
    c_m
}

/// Decoding errors of one frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FrameReport {
    /// Symbols where some MS decoded a wrong BS codeword.
    pub ms_errors: usize,
    /// Symbols where the BS decoded a wrong MS codeword.
    pub bs_errors: usize,
    /// Largest distance, modulo the codeword lattice, between a decoded and a sent codeword.
    pub max_error: f64,
}

impl FrameReport {
    pub fn is_clean(&self) -> bool {
        self.ms_errors == 0 && self.bs_errors == 0
    }
}

fn coset_distance(a: C64, b: C64, q: f64) -> f64 {
    let d = mod_lattice(a - b, q);
    d.re.abs().max(d.im.abs())
}

/// Runs both phases over the physical channels in `ch` (noiseless) and compares decisions.
pub fn run_frame(ch: &ChannelSet, tri: &Triangularization, params: &LatticeParams, input: &FrameInput) -> Result<FrameReport> {
    let k = ch.k();
    params.validate(k)?;
    let (s_b, side_b) = encode_bs(tri, params, input);
    let (s_m, shaped_m) = encode_ms(tri, params, input);
    let x_b = tri.q_br.adjoint().mul(&s_b);
    let y_r = ch.h_br.mul(&x_b).add(&ch.h_mr.mul(&s_m))?;
    let s_r = relay_decode(tri, params, input, &y_r);

    let x_dpc = dpc_encode(tri, params, input, &s_r);
    let x_r = tri.q_rm.adjoint().mul(&x_dpc);
    let y_m = ch.h_rm.mul(&x_r);
    let y_b = ch.h_rb.mul(&x_r);
    let c_b_hat = ms_decode(tri, params, input, &shaped_m, &y_m);
    let c_m_hat = bs_decode(tri, params, input, &side_b, &y_b);

    let mut report = FrameReport::default();
    for col in 0..input.c_b.cols() {
        let (mut ms_bad, mut bs_bad) = (false, false);
        for i in 0..k {
            let chain = params.chains[i];
            let eb = coset_distance(c_b_hat[(i, col)], input.c_b[(i, col)], chain.q_b());
            let em = coset_distance(c_m_hat[(i, col)], input.c_m[(i, col)], chain.q_m());
            report.max_error = report.max_error.max(eb).max(em);
            ms_bad |= !(eb <= DECODE_TOL);
            bs_bad |= !(em <= DECODE_TOL);
        }
        report.ms_errors += ms_bad as usize;
        report.bs_errors += bs_bad as usize;
    }
    Ok(report)
}

/// Randomized frame campaign.
#[derive(Clone, Debug, PartialEq)]
pub struct LabConfig {
    pub frames: usize,
    /// Stream counts drawn uniformly from this inclusive range.
    pub k_min: usize,
    pub k_max: usize,
    pub symbols: usize,
    pub seed: u64,
    /// Largest `b` and `m` drawn per stream (each uniform on `1..=max`).
    pub max_ratio: u32,
    pub combining: Combining,
    /// Corrupt one relay symbol in every frame.
    pub inject_fault: bool,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            frames: 1000,
            k_min: 1,
            k_max: 4,
            symbols: 64,
            seed: 1,
            max_ratio: 4,
            combining: Combining::Coarse,
            inject_fault: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabSummary {
    pub frames: usize,
    /// Frames with at least one MS-side error.
    pub ms_failed_frames: usize,
    /// Frames with at least one BS-side error.
    pub bs_failed_frames: usize,
    pub max_error: f64,
}

/// Frame `f` of a campaign: a fresh channel, DPC order, spacing set, codewords and dithers.
pub fn lab_frame(cfg: &LabConfig, f: usize) -> Result<FrameReport> {
    let mut rng = rng_from_seed(crate::channel::derive_seed(cfg.seed, f as u64));
    let k = rng.gen_range(cfg.k_min..=cfg.k_max);
    let ch = gen_channels(k, rng.gen(), false, Budgets::uniform(k, 1.0, 1.0, 1.0, 1.0))?;
    let mut mu: Vec<usize> = (0..k).collect();
    rand::seq::SliceRandom::shuffle(mu.as_mut_slice(), &mut rng);
    let tri = triangularize(&ch, &Permutation::new(mu)?)?;
    let chains = (0..k)
        .map(|_| LatticeChain {
            q_c: 0.5 + rng.gen::<f64>(),
            b: rng.gen_range(1..=cfg.max_ratio),
            m: rng.gen_range(1..=cfg.max_ratio),
        })
        .collect();
    let params = LatticeParams {
        chains,
        combining: cfg.combining,
        fault: cfg.inject_fault.then_some(Fault { stream: 0, symbol: 0 }),
    };
    let input = random_frame_input(&mut rng, &params, cfg.symbols);
    run_frame(&ch, &tri, &params, &input)
}

pub fn run_lab(cfg: &LabConfig) -> Result<LabSummary> {
    if cfg.k_min == 0 || cfg.k_min > cfg.k_max || cfg.symbols == 0 || cfg.max_ratio == 0 {
        return Err(Error::InvalidParameter("invalid lattice campaign configuration"));
    }
    let mut s = LabSummary::default();
    for f in 0..cfg.frames {
        let r = lab_frame(cfg, f)?;
        s.frames += 1;
        s.ms_failed_frames += (r.ms_errors > 0) as usize;
        s.bs_failed_frames += (r.bs_errors > 0) as usize;
        s.max_error = s.max_error.max(r.max_error);
    }
    Ok(s)
}
