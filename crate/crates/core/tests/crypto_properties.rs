use encsec_core::elgamal::{self, decrypt, encrypt, eval, keygen};
use encsec_core::modgroup::{generate_group_params, random_below, GroupElement, GroupParams};
use encsec_core::updatable::{ct_update, dec_bar, eval_bar, key_update, recover_next_key, KeyEpoch};
use num_bigint::BigUint;
use num_traits::One;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toy() -> GroupParams {
    GroupParams::from_parts(23u32.into(), 11u32.into(), 2u32.into()).unwrap()
}

fn group(bits: u64, seed: u64) -> GroupParams {
    generate_group_params(bits, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn random_member(params: &GroupParams, rng: &mut ChaCha8Rng) -> GroupElement {
    params.g_pow(&random_below(rng, params.q()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn powers_of_generator_are_members(seed in any::<u64>(), k in any::<u64>()) {
        let params = group(32, seed % 16);
        let a = params.g_pow(&BigUint::from(k));
        prop_assert!(params.is_member(a.value()).unwrap());
    }

    #[test]
    fn nearest_member_is_idempotent_and_close(seed in 0u64..16, raw in any::<u64>()) {
        let params = group(32, seed);
        let p = params.p().clone();
        let target = BigUint::from(raw) % (&p - 1u32) + 1u32;
        let m = params.nearest_member(&target).unwrap();
        prop_assert_eq!(params.nearest_member(m.value()).unwrap(), m.clone());
        let dist = if m.value() > &target { m.value() - &target } else { &target - m.value() };
        prop_assert!(dist <= BigUint::from(64u32));
    }

    #[test]
    fn round_trip_and_homomorphism_toy(seed in any::<u64>()) {
        let params = toy();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pk, sk) = keygen(&params, &mut rng);
        let m1 = random_member(&params, &mut rng);
        let m2 = random_member(&params, &mut rng);
        let c1 = encrypt(&pk, &m1, &mut rng).unwrap();
        let c2 = encrypt(&pk, &m2, &mut rng).unwrap();
        prop_assert_eq!(decrypt(&sk, &c1), m1.clone());
        prop_assert_eq!(decrypt(&sk, &eval(&pk, &c1, &c2)), params.mul(&m1, &m2));
        for c in [&c1.c1, &c1.c2] {
            prop_assert!(params.is_member(c.value()).unwrap());
        }
    }

    #[test]
    fn round_trip_and_homomorphism_64bit(seed in any::<u64>()) {
        let params = group(64, seed % 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pk, sk) = keygen(&params, &mut rng);
        let m1 = random_member(&params, &mut rng);
        let m2 = random_member(&params, &mut rng);
        let c1 = encrypt(&pk, &m1, &mut rng).unwrap();
        let c2 = encrypt(&pk, &m2, &mut rng).unwrap();
        prop_assert_eq!(decrypt(&sk, &c1), m1.clone());
        prop_assert_eq!(decrypt(&sk, &eval(&pk, &c1, &c2)), params.mul(&m1, &m2));
    }

    #[test]
    fn cross_epoch_product(seed in any::<u64>(), gap in 0usize..=20, start in 0usize..5) {
        let params = group(64, seed % 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut epoch = KeyEpoch::generate(&params, &mut rng);
        for _ in 0..start {
            epoch = key_update(&epoch, &mut rng).0;
        }
        let first = epoch.clone();
        for _ in 0..gap {
            epoch = key_update(&epoch, &mut rng).0;
        }
        let m1 = random_member(&params, &mut rng);
        let m2 = random_member(&params, &mut rng);
        let ct1 = encrypt(&first.pk, &m1, &mut rng).unwrap();
        let ct2 = encrypt(&epoch.pk, &m2, &mut rng).unwrap();
        let ect = eval_bar(&first.pk, &ct1, &ct2);
        for c in [&ect.c1, &ect.c2, &ect.c3] {
            prop_assert!(params.is_member(c.value()).unwrap());
        }
        prop_assert_eq!(dec_bar(&first.sk, &epoch.sk, &ect), params.mul(&m1, &m2));
    }
}

#[test]
fn epoch_chain_keeps_plaintext() {
    let params = group(64, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let mut epoch = KeyEpoch::generate(&params, &mut rng);
        let m = random_member(&params, &mut rng);
        let mut ct = encrypt(&epoch.pk, &m, &mut rng).unwrap();
        for _ in 0..50 {
            let (next, token) = key_update(&epoch, &mut rng);
            assert_eq!(recover_next_key(&epoch.sk, &token), next.sk);
            assert_eq!(&token.h_old, epoch.pk.h());
            assert_eq!(params.mul(&token.h_old, &params.g_pow(&token.d)), *next.pk.h());
            ct = ct_update(&params, &ct, &token, &mut rng);
            epoch = next;
            assert_eq!(decrypt(&epoch.sk, &ct), m);
        }
        assert_eq!(epoch.t, 50);
    }
}

#[test]
fn next_secret_is_uniform_without_token() {
    // From a fixed epoch, repeated rotations should hit every s' in Z_11 evenly.
    let params = toy();
    let epoch = KeyEpoch::from_secret(&params, 0, 3u32.into()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let draws = 11_000usize;
    let mut counts = [0usize; 11];
    for _ in 0..draws {
        let (next, _) = key_update(&epoch, &mut rng);
        let s: usize = next.sk.exponent().try_into().unwrap();
        counts[s] += 1;
    }
    let expected = draws as f64 / 11.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 10 degrees of freedom, 99.9% quantile 29.59
    assert!(chi2 < 29.59, "chi-square {chi2}, counts {counts:?}");
}

#[test]
fn identity_is_encryptable_and_generator_is_member() {
    let params = group(48, 1);
    assert!(params.is_member(params.g()).unwrap());
    assert!(params.is_member(&BigUint::one()).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (pk, sk) = elgamal::keygen(&params, &mut rng);
    let ct = encrypt(&pk, &params.identity(), &mut rng).unwrap();
    assert_eq!(decrypt(&sk, &ct), params.identity());
}
