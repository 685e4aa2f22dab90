use proptest::prelude::*;
use twrc_core::channel::{gen_channels, rng_from_seed, Budgets};
use twrc_core::latticelab::{
    bs_decode, dpc_encode, encode_bs, encode_ms, mod_lattice, mod_real, ms_decode, random_frame_input, relay_decode,
    run_frame, Combining, FrameInput, LatticeChain, LatticeParams, DECODE_TOL,
};
use twrc_core::triangulate::{enumerate_permutations, triangularize, Permutation, PermutationStrategy};
use twrc_core::{ChannelSet, CMat, Triangularization, C64};

fn coset_distance(a: C64, b: C64, q: f64) -> f64 {
    let d = mod_lattice(a - b, q);
    d.re.abs().max(d.im.abs())
}

fn setup(k: usize, seed: u64) -> (ChannelSet, Triangularization) {
    let ch = gen_channels(k, seed, false, Budgets::uniform(k, 1.0, 1.0, 1.0, 1.0)).unwrap();
    let perm = enumerate_permutations(k, PermutationStrategy::Random { count: 1, seed })
        .unwrap()
        .remove(0);
    let tri = triangularize(&ch, &perm).unwrap();
    (ch, tri)
}

fn mixed_chains(k: usize, seed: u64) -> Vec<LatticeChain> {
    (0..k)
        .map(|i| LatticeChain {
            q_c: 0.5 + 0.25 * ((seed as usize + i) % 4) as f64,
            b: 1 + ((seed as usize + 2 * i) % 4) as u32,
            m: 1 + ((seed as usize + 3 * i) % 3) as u32,
        })
        .collect()
}

/// Uplink phase only: the relay's network-coded symbols.
fn relay_symbols(ch: &ChannelSet, tri: &Triangularization, params: &LatticeParams, input: &FrameInput) -> CMat {
    let (s_b, _) = encode_bs(tri, params, input);
    let (s_m, _) = encode_ms(tri, params, input);
    let x_b = tri.q_br.adjoint().matmul(&s_b).unwrap();
    let y_r = ch
        .h_br
        .matmul(&x_b)
        .unwrap()
        .add(&ch.h_mr.matmul(&s_m).unwrap())
        .unwrap();
    relay_decode(tri, params, input, &y_r)
}

fn frame_input(params: &LatticeParams, seed: u64, symbols: usize) -> FrameInput {
    random_frame_input(&mut rng_from_seed(seed), params, symbols)
}

#[test]
fn mod_reference_values() {
    assert_eq!(mod_real(5.0, 4.0), 1.0);
    assert_eq!(mod_real(1.0, 2.0), -1.0);
    assert_eq!(mod_real(-1.0, 2.0), -1.0);
    assert_eq!(mod_real(0.0, 3.0), 0.0);
}

#[test]
fn encoder_congruences() {
    for seed in 0..30 {
        let k = 1 + (seed as usize % 4);
        let (_, tri) = setup(k, seed);
        let params = LatticeParams {
            chains: mixed_chains(k, seed),
            combining: Combining::Coarse,
            fault: None,
        };
        let input = frame_input(&params, seed + 100, 16);
        let (s_b, side) = encode_bs(&tri, &params, &input);
        let (s_m, shaped) = encode_ms(&tri, &params, &input);
        for i in 0..k {
            let c = params.chains[i];
            for t in 0..16 {
                // BS symbols live in the Λ_B cell and the side information is c_B plus a Λ_B point.
                assert!(s_b[(i, t)].re >= -c.q_b() / 2.0 && s_b[(i, t)].re < c.q_b() / 2.0);
                assert!(coset_distance(side[(i, t)], input.c_b[(i, t)], c.q_b()) <= 1e-9);
                // MS: shaped part is c_M - d_M modulo Λ_M, and α s_M recovers it.
                let expect = mod_lattice(input.c_m[(i, t)] - input.d_m[(i, t)], c.q_m());
                assert!((shaped[(i, t)] - expect).norm() <= 1e-12);
                assert!((s_m[(i, t)] * tri.alpha[i] - shaped[(i, t)]).norm() <= 1e-12);
            }
        }
    }
}

#[test]
fn relay_matches_encoder_side_oracle() {
    for combining in [Combining::Coarse, Combining::Fine] {
        for seed in 0..40 {
            let k = 1 + (seed as usize % 5);
            let (ch, tri) = setup(k, seed);
            let params = LatticeParams {
                chains: mixed_chains(k, seed),
                combining,
                fault: None,
            };
            let input = frame_input(&params, seed + 7, 24);
            let (_, side) = encode_bs(&tri, &params, &input);
            let (_, shaped) = encode_ms(&tri, &params, &input);
            let s_r = relay_symbols(&ch, &tri, &params, &input);
            for i in 0..k {
                let q_s = params.chains[i].q_s(combining);
                for t in 0..24 {
                    let oracle = mod_lattice(side[(i, t)] + shaped[(i, t)] + input.d_m[(i, t)], q_s);
                    let d = coset_distance(s_r[(i, t)], oracle, q_s);
                    assert!(d <= 1e-9, "{combining:?} seed={seed} stream={i} distance={d}");
                    // Either way the relay knows c_B + c_M modulo Λ_B.
                    let q_b = params.chains[i].q_b();
                    let sum = input.c_b[(i, t)] + input.c_m[(i, t)];
                    assert!(coset_distance(s_r[(i, t)], sum, q_b) <= 1e-9);
                }
            }
        }
    }
}

#[test]
fn coarse_combining_decodes_any_ratio() {
    for seed in 0..60 {
        let k = 1 + (seed as usize % 4);
        let (ch, tri) = setup(k, seed);
        let params = LatticeParams {
            chains: mixed_chains(k, seed),
            combining: Combining::Coarse,
            fault: None,
        };
        let r = run_frame(&ch, &tri, &params, &frame_input(&params, seed, 32)).unwrap();
        assert!(r.is_clean(), "seed={seed} {r:?}");
        assert!(r.max_error <= DECODE_TOL);
    }
}

#[test]
fn fine_combining_fails_at_bs_when_coarse_is_strictly_coarser() {
    let k = 3;
    for seed in 0..10 {
        let (ch, tri) = setup(k, seed);
        let fine = |m| LatticeParams {
            chains: vec![LatticeChain { q_c: 1.0, b: 2, m }; k],
            combining: Combining::Fine,
            fault: None,
        };
        let p1 = fine(1);
        let r = run_frame(&ch, &tri, &p1, &frame_input(&p1, seed, 64)).unwrap();
        assert!(r.is_clean(), "m = 1 must decode: {r:?}");

        let p3 = fine(3);
        let r = run_frame(&ch, &tri, &p3, &frame_input(&p3, seed, 64)).unwrap();
        assert_eq!(r.ms_errors, 0, "the MS side only needs c_B modulo Λ_B");
        assert!(r.bs_errors > 0, "BS cannot resolve c_M beyond Λ_B");
    }
}

#[test]
fn shifting_bs_codeword_by_fine_lattice_point_leaves_relay_unchanged() {
    for seed in 0..20 {
        let k = 2 + (seed as usize % 3);
        let (ch, tri) = setup(k, seed);
        let params = LatticeParams {
            chains: mixed_chains(k, seed),
            combining: Combining::Coarse,
            fault: None,
        };
        let input = frame_input(&params, seed, 8);
        let base = relay_symbols(&ch, &tri, &params, &input);
        let mut shifted = input.clone();
        let j = seed as usize % k;
        for t in 0..8 {
            shifted.c_b[(j, t)] += C64::new(params.chains[j].q_b(), -params.chains[j].q_b());
        }
        let moved = relay_symbols(&ch, &tri, &params, &shifted);
        for i in 0..k {
            for t in 0..8 {
                let q_s = params.chains[i].q_s(Combining::Coarse);
                assert!(coset_distance(base[(i, t)], moved[(i, t)], q_s) <= 1e-9);
            }
        }
    }
}

#[test]
fn fine_relay_stream_ignores_other_streams_codewords() {
    // With Λ_B combining, s_R,k depends only on (c_B,k, c_M,k): the BS interference v is
    // fully precancelled.
    for seed in 0..20 {
        let k = 2 + (seed as usize % 3);
        let (ch, tri) = setup(k, seed);
        let params = LatticeParams {
            chains: mixed_chains(k, seed),
            combining: Combining::Fine,
            fault: None,
        };
        let input = frame_input(&params, seed, 8);
        let base = relay_symbols(&ch, &tri, &params, &input);
        let mut other = input.clone();
        let fresh = frame_input(&params, seed + 999, 8);
        for t in 0..8 {
            other.c_b[(0, t)] = fresh.c_b[(0, t)];
            other.c_m[(0, t)] = fresh.c_m[(0, t)];
        }
        let moved = relay_symbols(&ch, &tri, &params, &other);
        for i in 1..k {
            for t in 0..8 {
                let q_s = params.chains[i].q_s(Combining::Fine);
                assert!(coset_distance(base[(i, t)], moved[(i, t)], q_s) <= 1e-9);
            }
        }
    }
}

#[test]
fn decoding_is_dither_invariant() {
    let k = 3;
    let (ch, tri) = setup(k, 5);
    let params = LatticeParams {
        chains: mixed_chains(k, 5),
        combining: Combining::Coarse,
        fault: None,
    };
    let input = frame_input(&params, 1, 16);
    for seed in 0..20 {
        let fresh = frame_input(&params, 1000 + seed, 16);
        let redithered = FrameInput {
            d_b: fresh.d_b,
            d_m: fresh.d_m,
            d_r: fresh.d_r,
            ..input.clone()
        };
        let r = run_frame(&ch, &tri, &params, &redithered).unwrap();
        assert!(r.is_clean(), "dither seed {seed}: {r:?}");
    }
}

#[test]
fn decoders_agree_with_run_frame() {
    let k = 4;
    let (ch, tri) = setup(k, 3);
    let params = LatticeParams {
        chains: mixed_chains(k, 3),
        combining: Combining::Coarse,
        fault: None,
    };
    let input = frame_input(&params, 3, 16);
    let (_, side_b) = encode_bs(&tri, &params, &input);
    let (_, shaped_m) = encode_ms(&tri, &params, &input);
    let s_r = relay_symbols(&ch, &tri, &params, &input);
    let x_r = tri.q_rm.adjoint().matmul(&dpc_encode(&tri, &params, &input, &s_r)).unwrap();
    let c_b_hat = ms_decode(&tri, &params, &input, &shaped_m, &ch.h_rm.matmul(&x_r).unwrap());
    let c_m_hat = bs_decode(&tri, &params, &input, &side_b, &ch.h_rb.matmul(&x_r).unwrap());
    for i in 0..k {
        let c = params.chains[i];
        for t in 0..16 {
            assert!(coset_distance(c_b_hat[(i, t)], input.c_b[(i, t)], c.q_b()) <= DECODE_TOL);
            assert!(coset_distance(c_m_hat[(i, t)], input.c_m[(i, t)], c.q_m()) <= DECODE_TOL);
        }
    }
}

#[test]
fn scalar_and_diagonal_channels_decode() {
    let (ch, tri) = setup(1, 11);
    let params = LatticeParams::uniform(1, LatticeChain { q_c: 0.75, b: 3, m: 2 });
    assert!(run_frame(&ch, &tri, &params, &frame_input(&params, 2, 64)).unwrap().is_clean());

    let k = 3;
    let d = |v: &[f64]| CMat::diag(&v.iter().map(|x| C64::new(*x, 0.0)).collect::<Vec<_>>());
    let ch = ChannelSet::new(
        d(&[1.0, 0.7, 1.3]),
        d(&[0.9, 1.1, 0.5]),
        d(&[1.2, 0.8, 0.6]),
        d(&[0.4, 1.0, 1.5]),
        Budgets::uniform(k, 1.0, 1.0, 1.0, 1.0),
    )
    .unwrap();
    for mu in [vec![0, 1, 2], vec![2, 0, 1]] {
        let tri = triangularize(&ch, &Permutation::new(mu).unwrap()).unwrap();
        let params = LatticeParams::uniform(k, LatticeChain { q_c: 1.0, b: 2, m: 4 });
        assert!(run_frame(&ch, &tri, &params, &frame_input(&params, 4, 64)).unwrap().is_clean());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mod_lands_in_half_open_cell(x in -1e6f64..1e6, q in 0.01f64..100.0) {
        let r = mod_real(x, q);
        prop_assert!(r >= -q / 2.0 && r < q / 2.0);
        let n = (x - r) / q;
        prop_assert!((n - n.round()).abs() <= 1e-6 * (1.0 + n.abs()));
    }

    #[test]
    fn nested_mod_reduces_to_finer(x in -1e4f64..1e4, q in 0.1f64..10.0, m in 1u32..6) {
        // For Λ_M ⊆ Λ_B: (x mod Λ_M) mod Λ_B = x mod Λ_B.
        let a = mod_real(mod_real(x, q * m as f64), q);
        let b = mod_real(x, q);
        prop_assert!(mod_real(a - b, q).abs() <= 1e-9 * (1.0 + x.abs()));
    }

    #[test]
    fn random_frames_decode(seed in any::<u64>()) {
        let k = 1 + (seed % 4) as usize;
        let (ch, tri) = setup(k, seed);
        let params = LatticeParams {
            chains: mixed_chains(k, seed % 97),
            combining: Combining::Coarse,
            fault: None,
        };
        let r = run_frame(&ch, &tri, &params, &frame_input(&params, seed ^ 0x5a5a, 8)).unwrap();
        prop_assert!(r.is_clean(), "{:?}", r);
    }
}
