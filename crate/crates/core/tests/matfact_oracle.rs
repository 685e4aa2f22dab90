mod common;

use common::{mgs_factor, oracle_singular_values_sq};
use twrc_core::channel::{gaussian_matrix, gen_channels, rng_from_seed, Budgets};
use twrc_core::matfact::{singular_values_sq, triangular_factor, FactorMode};
use twrc_core::{CMat, C64};

fn modes() -> [(FactorMode, &'static str); 4] {
    [
        (FactorMode::Qr, "qr"),
        (FactorMode::Rq, "rq"),
        (FactorMode::Lq, "lq"),
        (FactorMode::Ql, "ql"),
    ]
}

#[test]
fn oracle_reconstructs_its_input() {
    let mut rng = rng_from_seed(99);
    let a = gaussian_matrix(&mut rng, 3, 3);
    for (mode, name) in modes() {
        let (q, t) = mgs_factor(&a, name);
        assert!(mode.reconstruct(&q, &t).max_abs_diff(&a) < 1e-12, "{name}");
        assert!(q.unitarity_error() < 1e-12, "{name}");
    }
}

#[test]
fn factors_match_gram_schmidt_oracle() {
    for seed in 0..20 {
        let mut rng = rng_from_seed(seed);
        let a = gaussian_matrix(&mut rng, 3, 3);
        for (mode, name) in modes() {
            let f = triangular_factor(&a, mode).unwrap();
            let (q, t) = mgs_factor(&a, name);
            assert!(f.unitary.max_abs_diff(&q) <= 1e-8, "seed {seed} {name} unitary");
            assert!(f.triangular.max_abs_diff(&t) <= 1e-8, "seed {seed} {name} triangular");
        }
    }
}

#[test]
fn factor_contracts_on_random_inputs() {
    for k in 1..=6 {
        for seed in 0..30 {
            let mut rng = rng_from_seed(1000 * k as u64 + seed);
            let a = gaussian_matrix(&mut rng, k, k);
            let scale = a.frobenius_norm();
            for (mode, _) in modes() {
                let f = triangular_factor(&a, mode).unwrap();
                assert!(mode.reconstruct(&f.unitary, &f.triangular).max_abs_diff(&a) <= 1e-10 * scale);
                assert!(f.unitary.unitarity_error() <= 1e-12);
                let t = &f.triangular;
                if mode.is_upper() {
                    assert!(t.is_upper_triangular());
                } else {
                    assert!(t.is_lower_triangular());
                }
                for d in t.diagonal() {
                    assert!(d.im == 0.0 && d.re >= 0.0);
                }
            }
        }
    }
}

#[test]
fn singular_values_match_jacobi_oracle() {
    for seed in 0..20 {
        let mut rng = rng_from_seed(500 + seed);
        let a = gaussian_matrix(&mut rng, 3, 3);
        let got = singular_values_sq(&a);
        let want = oracle_singular_values_sq(&a);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-8 * w.abs().max(1e-300), "{got:?} vs {want:?}");
        }
    }
}

#[test]
fn determinant_identity() {
    for k in 1..=6 {
        for seed in 0..10 {
            let mut rng = rng_from_seed(77 + seed);
            let a = gaussian_matrix(&mut rng, k, k);
            let prod_sv: f64 = singular_values_sq(&a).iter().product();
            for (mode, _) in modes() {
                let f = triangular_factor(&a, mode).unwrap();
                let prod_diag: f64 = f.triangular.diagonal().iter().map(|d| d.norm_sqr()).product();
                assert!((prod_diag - prod_sv).abs() <= 1e-8 * prod_sv);
            }
        }
    }
}

#[test]
fn channel_entries_have_unit_power() {
    // 10⁶ draws from K=8 realizations: 15625 x 64 entries.
    let mut acc = 0.0;
    let (mut re2, mut im2) = (0.0, 0.0);
    let mut n = 0usize;
    for seed in 0..15625 {
        let ch = gen_channels(8, seed, true, Budgets::uniform(8, 1.0, 1.0, 1.0, 1.0)).unwrap();
        for z in ch.h_br.as_slice() {
            acc += z.norm_sqr();
            re2 += z.re * z.re;
            im2 += z.im * z.im;
            n += 1;
        }
    }
    assert_eq!(n, 1_000_000);
    let mean = acc / n as f64;
    assert!((0.99..=1.01).contains(&mean), "{mean}");
    assert!((re2 / n as f64 - 0.5).abs() < 0.01);
    assert!((im2 / n as f64 - 0.5).abs() < 0.01);
}

#[test]
fn phase_normalization_example() {
    let a = CMat::diag(&[C64::new(0.0, 2.0), C64::new(3.0, 0.0)]);
    let f = triangular_factor(&a, FactorMode::Qr).unwrap();
    let q = CMat::diag(&[C64::new(0.0, 1.0), C64::new(1.0, 0.0)]);
    assert!(f.unitary.max_abs_diff(&q) < 1e-15);
    assert!(f.triangular.max_abs_diff(&CMat::diag(&[C64::new(2.0, 0.0), C64::new(3.0, 0.0)])) < 1e-15);
}
