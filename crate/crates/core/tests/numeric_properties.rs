use encsec_core::codec::{decode, encode, CodecConfig, ScalingFactor};
use encsec_core::control::{run_encrypted_loop, run_plain_loop, ControllerParams, PlantModel};
use encsec_core::design::{
    lyapunov_residual, sic_upperbound_input, sic_upperbound_noise, solve_discrete_lyapunov, spectral_radius,
    SystemTraces, Variances,
};
use encsec_core::identification::{monte_carlo_error, AttackConfig};
use encsec_core::modgroup::{generate_group_params, GroupParams};
use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn group64() -> GroupParams {
    generate_group_params(64, &mut ChaCha8Rng::seed_from_u64(64)).unwrap()
}

/// Distance in quantization steps between `encode(x)` and the unprojected residue.
fn search_gap(x: f64, cfg: &CodecConfig) -> f64 {
    let m = encode(x, cfg).unwrap();
    let z = (x / cfg.delta()).round();
    (decode(&m, cfg, 0) - z).abs()
}

fn stable_matrix(n: usize, entries: &[f64], rho: f64) -> DMatrix<f64> {
    let raw = DMatrix::from_iterator(n, n, entries.iter().copied().take(n * n));
    let r = spectral_radius(&raw).unwrap();
    if r < 1e-12 {
        raw
    } else {
        raw * (rho / r)
    }
}

fn truncated_series(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let rho = spectral_radius(a).unwrap();
    let terms = if rho < 1e-12 {
        1
    } else {
        ((1e-12f64).ln() / rho.ln()).ceil() as usize + 50
    };
    let mut sum = q.clone();
    let mut power = DMatrix::identity(a.nrows(), a.ncols());
    for _ in 0..terms {
        power = a * power;
        sum += &power * q * power.transpose();
    }
    sum
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn codec_round_trip_within_gap(x in -50.0f64..50.0) {
        let cfg = CodecConfig::new(group64(), ScalingFactor::new(1e-3).unwrap(), 50.0).unwrap();
        prop_assume!((x / cfg.delta()).round().abs() >= 1.0);
        let gap = search_gap(x, &cfg);
        prop_assert!(gap <= 64.0);
        let back = decode(&encode(x, &cfg).unwrap(), &cfg, 1);
        prop_assert!((back - x).abs() <= (1.0 + gap) * cfg.delta() + 1e-12);
    }

    #[test]
    fn codec_products_keep_sign(x1 in -50.0f64..50.0, x2 in -50.0f64..50.0) {
        let cfg = CodecConfig::new(group64(), ScalingFactor::new(1e-3).unwrap(), 50.0).unwrap();
        let d = cfg.delta();
        prop_assume!((x1 / d).round().abs() >= 1.0 && (x2 / d).round().abs() >= 1.0);
        let m1 = encode(x1, &cfg).unwrap();
        let m2 = encode(x2, &cfg).unwrap();
        let gap = (1.0 + search_gap(x1, &cfg).max(search_gap(x2, &cfg))) * d;
        let prod = decode(&cfg.params().mul(&m1, &m2), &cfg, 2);
        let tol = 2.0 * gap * (x1.abs() + x2.abs()) + gap * gap;
        prop_assert!((prod - x1 * x2).abs() <= tol, "{prod} vs {}", x1 * x2);
    }

    #[test]
    fn lyapunov_matches_series(
        n in 1usize..=4,
        entries in prop::collection::vec(-1.0f64..1.0, 16),
        b in prop::collection::vec(-1.0f64..1.0, 16),
        rho in 0.0f64..0.95,
    ) {
        let a = stable_matrix(n, &entries, rho);
        let bm = DMatrix::from_iterator(n, n, b.iter().copied().take(n * n));
        let q = &bm * bm.transpose() + DMatrix::identity(n, n);
        let psi = solve_discrete_lyapunov(&a, &q).unwrap();
        prop_assert!(lyapunov_residual(&a, &psi, &q) <= 1e-9 * (1.0 + q.norm()));
        prop_assert!((&psi - truncated_series(&a, &q)).norm() <= 1e-8 * (1.0 + psi.norm()));
    }

    #[test]
    fn bound_ordering(
        n in 1usize..6, m in 1usize..6,
        tru in 0.0f64..20.0, extra in 0.0f64..20.0,
        r in 1e-3f64..1e3, samples in 2u64..1_000_000,
    ) {
        let traces = SystemTraces::new(n, m, tru, n as f64 + extra);
        let large = traces.sic_large_n(r, samples).unwrap();
        prop_assert!(large <= sic_upperbound_input(m, n, r, samples).unwrap() * (1.0 + 1e-12));
        let no_input = traces.sic_large_n(0.0, samples).unwrap();
        prop_assert!(no_input <= sic_upperbound_noise(m, n, samples).unwrap() * (1.0 + 1e-12));
    }
}

#[test]
fn full_complexity_approaches_large_n_form() {
    let traces = SystemTraces::new(4, 4, 2.0, 8.0);
    for (sigma_w2, sigma_x2) in [(0.1, 1.0), (1.0, 1.0), (10.0, 5.0)] {
        let v = Variances {
            sigma_x2,
            sigma_u2: 100.0 * sigma_w2,
            sigma_w2,
        };
        for samples in [100_000u64, 1_000_000, 10_000_000] {
            let ratio = traces.sic_full(&v, samples) / traces.sic_large_n(100.0, samples).unwrap();
            assert!((1.0 - ratio).abs() <= 1e-3, "ratio {ratio} at N={samples}");
        }
    }
}

fn sec6_model(sigma_w2: f64) -> PlantModel {
    // A = √0.5 I and B = I give Ψ_u = Ψ_w = 2I.
    let a = DMatrix::<f64>::identity(4, 4) * 0.5f64.sqrt();
    PlantModel::new(a, DMatrix::identity(4, 4), sigma_w2, 1.0).unwrap()
}

#[test]
fn error_medians_shrink_with_samples() {
    let model = sec6_model(1.0);
    let medians: Vec<f64> = [50usize, 100, 200, 400]
        .iter()
        .map(|&samples| {
            let atk = AttackConfig::new(1.0, samples, 0);
            monte_carlo_error(&model, &atk, 50, 7).unwrap().median()
        })
        .collect();
    let inversions = medians.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(inversions <= 1, "medians {medians:?}");
}

#[test]
fn error_respects_lower_bound_law() {
    let traces = SystemTraces::new(4, 4, 8.0, 8.0);
    for sigma_w2 in [0.1, 1.0] {
        for sigma_u2 in [0.1, 10.0] {
            let model = sec6_model(sigma_w2);
            let v = Variances {
                sigma_x2: 1.0,
                sigma_u2,
                sigma_w2,
            };
            for samples in [60usize, 300] {
                let mc = monte_carlo_error(&model, &AttackConfig::new(sigma_u2, samples, 0), 40, 11).unwrap();
                let gamma = traces.sic_full(&v, samples as u64);
                assert_eq!(mc.failures(), 0);
                assert!(
                    mc.mean() >= gamma - 3.0 * mc.standard_error(),
                    "σw²={sigma_w2} σu²={sigma_u2} N={samples}: {} < {gamma}",
                    mc.mean()
                );
            }
        }
    }
}

#[test]
fn encrypted_loop_error_scales_with_delta() {
    // Noise-free plant: the only mismatch is quantization.
    let a = DMatrix::<f64>::identity(2, 2) * 0.5f64.sqrt();
    let model = PlantModel::new(a, DMatrix::identity(2, 2), 0.0, 1.0).unwrap();
    let phi = ControllerParams::new(DMatrix::identity(2, 2) * -0.3);
    let params = generate_group_params(80, &mut ChaCha8Rng::seed_from_u64(80)).unwrap();
    let plain = run_plain_loop(&model, &phi, 30, 5).unwrap();
    let mut previous = f64::INFINITY;
    for delta in [1e-2, 1e-3, 1e-4] {
        let cfg = CodecConfig::new(params.clone(), ScalingFactor::new(delta).unwrap(), 10.0).unwrap();
        let enc = run_encrypted_loop(&model, &phi, &cfg, 30, 5).unwrap();
        let dev = enc.max_input_deviation(&plain);
        let audit = enc.audit.unwrap();
        assert_eq!(audit.exact_products, audit.products);
        assert!(dev <= 100.0 * delta, "Δ={delta}: deviation {dev}");
        assert!(dev <= previous / 2.0, "Δ={delta}: {dev} vs {previous}");
        previous = dev;
    }
}

#[test]
fn decode_power_zero_is_the_signed_residue() {
    let cfg = CodecConfig::new(group64(), ScalingFactor::new(0.5).unwrap(), 1000.0).unwrap();
    let p = cfg.params().p().clone();
    let m = cfg.params().nearest_member(&(&p - BigUint::from(7u32))).unwrap();
    let signed = decode(&m, &cfg, 0);
    let expect = -((&p - m.value()).to_f64().unwrap());
    assert_eq!(signed, expect);
}
