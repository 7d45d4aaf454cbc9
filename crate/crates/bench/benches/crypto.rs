use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use encsec_bench::{group, rng};
use encsec_core::elgamal::{decrypt, encrypt, keygen};
use encsec_core::modgroup::generate_group_params;
use encsec_core::updatable::{ct_update, dec_bar, eval_bar, key_update, KeyEpoch};

fn keygen_and_encrypt(c: &mut Criterion) {
    let mut g = c.benchmark_group("elgamal");
    for bits in [64u64, 256, 712] {
        let params = group(bits);
        let mut r = rng(1);
        let (pk, sk) = keygen(&params, &mut r);
        let m = params.generator();
        let ct = encrypt(&pk, &m, &mut r).unwrap();
        g.bench_with_input(BenchmarkId::new("keygen", bits), &params, |b, p| {
            b.iter(|| keygen(p, &mut r))
        });
        g.bench_with_input(BenchmarkId::new("encrypt", bits), &m, |b, m| {
            b.iter(|| encrypt(&pk, m, &mut r))
        });
        g.bench_with_input(BenchmarkId::new("decrypt", bits), &ct, |b, ct| {
            b.iter(|| decrypt(&sk, ct))
        });
    }
    g.finish();
}

fn updatable(c: &mut Criterion) {
    let mut g = c.benchmark_group("updatable");
    for bits in [64u64, 712] {
        let params = group(bits);
        let mut r = rng(2);
        let epoch0 = KeyEpoch::generate(&params, &mut r);
        let (epoch1, token) = key_update(&epoch0, &mut r);
        let m = params.generator();
        let ct0 = encrypt(&epoch0.pk, &m, &mut r).unwrap();
        let ct1 = encrypt(&epoch1.pk, &m, &mut r).unwrap();
        let ect = eval_bar(&epoch0.pk, &ct0, &ct1);
        g.bench_function(BenchmarkId::new("key_update", bits), |b| {
            b.iter(|| key_update(&epoch0, &mut r))
        });
        g.bench_function(BenchmarkId::new("ct_update", bits), |b| {
            b.iter(|| ct_update(&params, &ct0, &token, &mut r))
        });
        g.bench_function(BenchmarkId::new("eval_bar", bits), |b| {
            b.iter(|| eval_bar(&epoch0.pk, &ct0, &ct1))
        });
        g.bench_function(BenchmarkId::new("dec_bar", bits), |b| {
            b.iter(|| dec_bar(&epoch0.sk, &epoch1.sk, &ect))
        });
    }
    g.finish();
}

fn safe_prime(c: &mut Criterion) {
    let mut g = c.benchmark_group("safe_prime");
    g.sample_size(10);
    for bits in [64u64, 128, 256] {
        let mut r = rng(3);
        g.bench_function(BenchmarkId::from_parameter(bits), |b| {
            b.iter(|| generate_group_params(bits, &mut r).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, keygen_and_encrypt, updatable, safe_prime);
criterion_main!(benches);
