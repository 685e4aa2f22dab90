//! Network realizations and seeded channel generation.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cmat::{CMat, C64};
use crate::error::{Error, Result};

/// Generator used for every random draw in the crate.
pub type SimRng = ChaCha8Rng;

/// One network realization: the four `K x K` channel matrices, noise variance and budgets.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    /// BS -> RS.
    pub h_br: CMat,
    /// MSs -> RS; column `k` is MS `k`.
    pub h_mr: CMat,
    /// RS -> BS.
    pub h_rb: CMat,
    /// RS -> MSs; row `k` is MS `k`.
    pub h_rm: CMat,
    pub sigma2: f64,
    pub p_b: f64,
    pub p_r: f64,
    /// Per-MS (or per virtual stream) power budgets.
    pub p_m: Vec<f64>,
}

/// Budgets and noise level shared by a set of realizations.
#[derive(Clone, Debug, PartialEq)]
pub struct Budgets {
    pub sigma2: f64,
    pub p_b: f64,
    pub p_r: f64,
    pub p_m: Vec<f64>,
}

impl Budgets {
    /// Same MS budget on every stream.
    pub fn uniform(k: usize, sigma2: f64, p_b: f64, p_r: f64, p_m: f64) -> Self {
        Self {
            sigma2,
            p_b,
            p_r,
            p_m: vec![p_m; k],
        }
    }

    /// Multi-antenna MSs as virtual users: `k` streams, `antennas` consecutive streams per MS,
    /// each MS budget split equally across its antennas.
    pub fn virtual_users(k: usize, antennas: usize, sigma2: f64, p_b: f64, p_r: f64, p_ms: f64) -> Result<Self> {
        if antennas == 0 || k % antennas != 0 {
            return Err(Error::InvalidParameter("stream count must be a multiple of MS antennas"));
        }
        Ok(Self::uniform(k, sigma2, p_b, p_r, p_ms / antennas as f64))
    }
}

impl ChannelSet {
    pub fn new(h_br: CMat, h_mr: CMat, h_rb: CMat, h_rm: CMat, budgets: Budgets) -> Result<Self> {
        let k = h_br.rows();
        for h in [&h_br, &h_mr, &h_rb, &h_rm] {
            if h.rows() != k || h.cols() != k {
                return Err(Error::DimensionMismatch {
                    expected: (k, k),
                    found: (h.rows(), h.cols()),
                });
            }
        }
        validate_budgets(k, &budgets)?;
        Ok(Self {
            h_br,
            h_mr,
            h_rb,
            h_rm,
            sigma2: budgets.sigma2,
            p_b: budgets.p_b,
            p_r: budgets.p_r,
            p_m: budgets.p_m,
        })
    }

    pub fn k(&self) -> usize {
        self.h_br.rows()
    }

    /// Replaces the budgets, keeping the channel matrices.
    pub fn with_budgets(&self, budgets: Budgets) -> Result<Self> {
        validate_budgets(self.k(), &budgets)?;
        Ok(Self {
            sigma2: budgets.sigma2,
            p_b: budgets.p_b,
            p_r: budgets.p_r,
            p_m: budgets.p_m,
            ..self.clone()
        })
    }

    pub fn budgets(&self) -> Budgets {
        Budgets {
            sigma2: self.sigma2,
            p_b: self.p_b,
            p_r: self.p_r,
            p_m: self.p_m.clone(),
        }
    }
}

fn validate_budgets(k: usize, b: &Budgets) -> Result<()> {
    if !(b.sigma2 > 0.0 && b.sigma2.is_finite()) {
        return Err(Error::InvalidParameter("noise variance must be positive"));
    }
    if !(b.p_b >= 0.0 && b.p_r >= 0.0 && b.p_b.is_finite() && b.p_r.is_finite()) {
        return Err(Error::InvalidParameter("power budgets must be non-negative"));
    }
    if b.p_m.len() != k {
        return Err(Error::DimensionMismatch {
            expected: (k, 1),
            found: (b.p_m.len(), 1),
        });
    }
    if b.p_m.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidParameter("MS power budgets must be non-negative"));
    }
    Ok(())
}

/// Mixes a base seed and a stream index into an independent 64-bit seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// One circularly symmetric complex Gaussian draw with unit variance (Box-Muller).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    let r = libm::sqrt(-libm::log(u1));
    let (s, c) = libm::sincos(core::f64::consts::TAU * u2);
    C64::new(r * c, r * s)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Draws a realization with i.i.d. CN(0, 1) entries. In reciprocal mode the reverse links are
/// exact transposes of the forward links.
pub fn gen_channels(k: usize, seed: u64, reciprocal: bool, budgets: Budgets) -> Result<ChannelSet> {
    if k == 0 {
        return Err(Error::InvalidParameter("stream count must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let h_br = gaussian_matrix(&mut rng, k, k);
    let h_mr = gaussian_matrix(&mut rng, k, k);
    let (h_rb, h_rm) = if reciprocal {
        (h_br.transpose(), h_mr.transpose())
    } else {
        (gaussian_matrix(&mut rng, k, k), gaussian_matrix(&mut rng, k, k))
    };
    ChannelSet::new(h_br, h_mr, h_rb, h_rm, budgets)
}
