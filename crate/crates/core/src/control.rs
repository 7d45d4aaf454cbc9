//! Plant, encrypted linear controller and the closed-loop driver.
//!
//! The controller server holds `Enc(pk_0, Φ)` from epoch 0 forever. Every step
//! the plant side encrypts `x_t` under the current epoch key, the server
//! multiplies entry-wise with [`eval_bar`], and the plant opens the result
//! with `(sk_0, sk_t)` before rotating its key. Update tokens stay on the
//! plant side.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::codec::{self, CodecConfig};
use crate::elgamal::{self, Ciphertext, PublicKey};
use crate::error::{Error, Result};
use crate::modgroup::GroupElement;
use crate::updatable::{dec_bar, eval_bar, key_update, recover_next_key, ExtendedCiphertext, KeyEpoch};

/// `x⁺ = A x + B u + w`, `w ~ N(0, σ_w² I)`, `x_0 ~ N(0, σ_x² I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    sigma_w2: f64,
    sigma_x2: f64,
}

impl PlantModel {
    /// Checks shapes, Schur stability of `A` and nonnegative variances.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, sigma_w2: f64, sigma_x2: f64) -> Result<Self> {
        if !a.is_square() || b.nrows() != a.nrows() || b.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                context: "plant model",
                expected: "square A (n x n) and B (n x m)".into(),
                got: format!("A {:?}, B {:?}", a.shape(), b.shape()),
            });
        }
        crate::design::ensure_stable(&a)?;
        for (name, v) in [("sigma_w2", sigma_w2), ("sigma_x2", sigma_x2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(PlantModel {
            a,
            b,
            sigma_w2,
            sigma_x2,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn sigma_w2(&self) -> f64 {
        self.sigma_w2
    }

    pub fn sigma_x2(&self) -> f64 {
        self.sigma_x2
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub(crate) fn gaussian_vector<R: Rng + ?Sized>(len: usize, variance: f64, rng: &mut R) -> DVector<f64> {
        let normal = Normal::new(0.0, variance.sqrt()).expect("nonnegative variance");
        DVector::from_iterator(len, (0..len).map(|_| normal.sample(rng)))
    }

    pub fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        Self::gaussian_vector(self.n(), self.sigma_x2, rng)
    }

    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        Self::gaussian_vector(self.n(), self.sigma_w2, rng)
    }

    /// Deterministic part `A x + B u + w` for a given noise sample.
    pub fn step_with_noise(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("plant state", self.n(), x.len())?;
        check_len("plant input", self.m(), u.len())?;
        check_len("plant noise", self.n(), w.len())?;
        Ok(&self.a * x + &self.b * u + w)
    }
}

fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            got: got.to_string(),
        });
    }
    Ok(())
}

pub fn plant_step<R: Rng + ?Sized>(
    model: &PlantModel,
    x: &DVector<f64>,
    u: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    check_len("plant state", model.n(), x.len())?;
    check_len("plant input", model.m(), u.len())?;
    let w = model.sample_noise(rng);
    model.step_with_noise(x, u, &w)
}

/// Static feedback gain `Φ` (`m x n`), `u = Φ x`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerParams {
    pub phi: DMatrix<f64>,
}

impl ControllerParams {
    pub fn new(phi: DMatrix<f64>) -> Self {
        ControllerParams { phi }
    }

    fn check_against(&self, model: &PlantModel) -> Result<()> {
        if self.phi.shape() != (model.m(), model.n()) {
            return Err(Error::DimensionMismatch {
                context: "controller gain",
                expected: format!("{}x{}", model.m(), model.n()),
                got: format!("{}x{}", self.phi.nrows(), self.phi.ncols()),
            });
        }
        Ok(())
    }
}

pub type CiphertextMatrix = Vec<Vec<Ciphertext>>;
pub type ExtendedMatrix = Vec<Vec<ExtendedCiphertext>>;

/// Entry-wise cross-epoch products `eval_bar(pk_0, ctΦ[i][j], ctξ[j])`.
pub fn encrypted_controller(
    pk0: &PublicKey,
    ct_phi: &CiphertextMatrix,
    ct_xi: &[Ciphertext],
) -> Result<ExtendedMatrix> {
    ct_phi
        .iter()
        .map(|row| {
            check_len("encrypted controller row", ct_xi.len(), row.len())?;
            Ok(row.iter().zip(ct_xi).map(|(a, x)| eval_bar(pk0, a, x)).collect())
        })
        .collect()
}

/// The cloud side of the loop. It owns only the epoch-0 public key and the
/// encrypted gain; no method takes key-update material.
#[derive(Clone, Debug)]
pub struct ControllerServer {
    pk0: PublicKey,
    ct_phi: CiphertextMatrix,
}

impl ControllerServer {
    pub fn new(pk0: PublicKey, ct_phi: CiphertextMatrix) -> Self {
        ControllerServer { pk0, ct_phi }
    }

    pub fn respond(&self, ct_xi: &[Ciphertext]) -> Result<ExtendedMatrix> {
        encrypted_controller(&self.pk0, &self.ct_phi, ct_xi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopRecord {
    pub t: usize,
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    /// `Φ` applied to the quantized state, in the clear.
    pub u_ref: DVector<f64>,
    /// `max_i |u_i - u_ref_i|`.
    pub err: f64,
}

/// Cryptographic bookkeeping of an encrypted run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CryptoAudit {
    pub products: usize,
    /// Products whose two-key decryption equalled `m_Φ m_x mod p`.
    pub exact_products: usize,
    pub key_updates: usize,
    /// Epochs where the withheld token would have revealed the next key.
    pub token_recoveries: usize,
    pub tokens_sent_to_server: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopTrace {
    pub n: usize,
    pub m: usize,
    pub records: Vec<LoopRecord>,
    pub audit: Option<CryptoAudit>,
}

impl LoopTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn inputs(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.records.iter().map(|r| &r.u)
    }

    /// Largest entry-wise input difference against another run.
    pub fn max_input_deviation(&self, other: &LoopTrace) -> f64 {
        self.inputs()
            .zip(other.inputs())
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,x_1..x_n,u_1..u_m,uref_1..uref_m,err`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.n).map(|i| format!("x_{i}")));
        header.extend((1..=self.m).map(|i| format!("u_{i}")));
        header.extend((1..=self.m).map(|i| format!("uref_{i}")));
        header.push("err".into());
        writeln!(w, "{}", header.join(","))?;
        for r in &self.records {
            let mut row = vec![r.t.to_string()];
            row.extend(r.x.iter().map(f64::to_string));
            row.extend(r.u.iter().map(f64::to_string));
            row.extend(r.u_ref.iter().map(f64::to_string));
            row.push(r.err.to_string());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Noise and crypto randomness come from separate streams of one seed, so the
/// plain and encrypted loops see identical initial states and disturbances.
fn loop_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let noise = ChaCha8Rng::seed_from_u64(seed);
    let mut crypto = ChaCha8Rng::seed_from_u64(seed);
    crypto.set_stream(1);
    (noise, crypto)
}

/// Encodes `x`, replacing a value that rounds to zero by `+Δ`.
pub fn encode_nonzero(x: f64, cfg: &CodecConfig) -> Result<GroupElement> {
    match codec::encode(x, cfg) {
        Err(Error::ZeroEncoding { .. }) => codec::encode(cfg.delta(), cfg),
        other => other,
    }
}

pub fn run_encrypted_loop(
    model: &PlantModel,
    phi: &ControllerParams,
    cfg: &CodecConfig,
    steps: usize,
    seed: u64,
) -> Result<LoopTrace> {
    phi.check_against(model)?;
    if steps == 0 {
        return Err(Error::InvalidParameter("loop needs at least one step".into()));
    }
    let params = cfg.params();
    let (mut noise_rng, mut crypto_rng) = loop_rngs(seed);

    let epoch0 = KeyEpoch::generate(params, &mut crypto_rng);
    let phi_plain: Vec<Vec<GroupElement>> = phi
        .phi
        .row_iter()
        .map(|row| row.iter().map(|&v| encode_nonzero(v, cfg)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let ct_phi: CiphertextMatrix = phi_plain
        .iter()
        .map(|row| {
            row.iter()
                .map(|m| elgamal::encrypt(&epoch0.pk, m, &mut crypto_rng))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let server = ControllerServer::new(epoch0.pk.clone(), ct_phi);

    let mut audit = CryptoAudit::default();
    let mut epoch = epoch0.clone();
    let mut x = model.sample_initial_state(&mut noise_rng);
    let mut records = Vec::with_capacity(steps);

    for t in 0..steps {
        let step = |e: Error| e.at_step(t);
        let x_plain: Vec<GroupElement> = x
            .iter()
            .map(|&v| encode_nonzero(v, cfg))
            .collect::<Result<_>>()
            .map_err(step)?;
        let x_quant = DVector::from_iterator(x.len(), x_plain.iter().map(|m| codec::decode(m, cfg, 1)));
        let ct_x: Vec<Ciphertext> = x_plain
            .iter()
            .map(|m| elgamal::encrypt(&epoch.pk, m, &mut crypto_rng))
            .collect::<Result<_>>()
            .map_err(step)?;

        let response = server.respond(&ct_x).map_err(step)?;

        let mut products = DMatrix::<f64>::zeros(model.m(), model.n());
        for (i, row) in response.iter().enumerate() {
            for (j, ect) in row.iter().enumerate() {
                let m = dec_bar(&epoch0.sk, &epoch.sk, ect);
                audit.products += 1;
                if m == params.mul(&phi_plain[i][j], &x_plain[j]) {
                    audit.exact_products += 1;
                }
                products[(i, j)] = codec::decode(&m, cfg, 2);
            }
        }
        let u = codec::sum_rows(&products);
        let u_ref = &phi.phi * &x_quant;
        let err = (&u - &u_ref).amax();

        let x_next = plant_step(model, &x, &u, &mut noise_rng).map_err(step)?;
        records.push(LoopRecord { t, x, u, u_ref, err });
        x = x_next;

        let (next, token) = key_update(&epoch, &mut crypto_rng);
        audit.key_updates += 1;
        if recover_next_key(&epoch.sk, &token) == next.sk {
            audit.token_recoveries += 1;
        }
        epoch = next;
    }

    Ok(LoopTrace {
        n: model.n(),
        m: model.m(),
        records,
        audit: Some(audit),
    })
}

/// Same dynamics and noise stream as [`run_encrypted_loop`], `u = Φ x` in the clear.
pub fn run_plain_loop(model: &PlantModel, phi: &ControllerParams, steps: usize, seed: u64) -> Result<LoopTrace> {
    phi.check_against(model)?;
    if steps == 0 {
        return Err(Error::InvalidParameter("loop needs at least one step".into()));
    }
    let (mut noise_rng, _) = loop_rngs(seed);
    let mut x = model.sample_initial_state(&mut noise_rng);
    let mut records = Vec::with_capacity(steps);
    for t in 0..steps {
        let u = &phi.phi * &x;
        let x_next = plant_step(model, &x, &u, &mut noise_rng)?;
        records.push(LoopRecord {
            t,
            x,
            u_ref: u.clone(),
            u,
            err: 0.0,
        });
        x = x_next;
    }
    Ok(LoopTrace {
        n: model.n(),
        m: model.m(),
        records,
        audit: None,
    })
}
