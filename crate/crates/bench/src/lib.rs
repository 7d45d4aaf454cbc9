//! Shared fixtures for the benchmarks.

use encsec_core::modgroup::{generate_group_params, GroupParams};
use encsec_core::PlantModel;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn group(bits: u64) -> GroupParams {
    generate_group_params(bits, &mut rng(bits)).expect("safe prime within budget")
}

/// `n`-state plant with `A = √0.5 I` and `B = I`.
pub fn diagonal_plant(n: usize, sigma_w2: f64) -> PlantModel {
    let a = DMatrix::<f64>::identity(n, n) * 0.5f64.sqrt();
    PlantModel::new(a, DMatrix::identity(n, n), sigma_w2, 1.0).expect("stable plant")
}

/// Stable `n × n` matrix with spectral radius about `rho`.
pub fn stable_matrix(n: usize, rho: f64, seed: u64) -> DMatrix<f64> {
    use rand::Rng;
    let mut r = rng(seed);
    let raw = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let radius = encsec_core::design::spectral_radius(&raw).expect("square");
    raw * (rho / radius)
}
