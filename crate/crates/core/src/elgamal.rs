//! Textbook multiplicative ElGamal over a [`GroupParams`] subgroup.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::Rng;

use crate::error::{Error, Result};
use crate::modgroup::{GroupElement, GroupParams};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    params: GroupParams,
    h: GroupElement,
}

impl PublicKey {
    pub fn params(&self) -> &GroupParams {
        &self.params
    }

    /// `h = g^s mod p`.
    pub fn h(&self) -> &GroupElement {
        &self.h
    }

    pub(crate) fn from_parts(params: GroupParams, h: GroupElement) -> Self {
        PublicKey { params, h }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey {
    params: GroupParams,
    s: BigUint,
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

impl SecretKey {
    /// Checked constructor, `0 <= s < q`.
    pub fn new(params: &GroupParams, s: BigUint) -> Result<Self> {
        if &s >= params.q() {
            return Err(Error::Domain(format!("secret exponent must be below q, got {s}")));
        }
        Ok(SecretKey {
            params: params.clone(),
            s,
        })
    }

    pub fn exponent(&self) -> &BigUint {
        &self.s
    }

    pub fn params(&self) -> &GroupParams {
        &self.params
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey {
            params: self.params.clone(),
            h: self.params.g_pow(&self.s),
        }
    }
}

/// `(c1, c2) = (g^r, m h^r)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub c1: GroupElement,
    pub c2: GroupElement,
}

impl Ciphertext {
    /// Parses the `c1,c2` form and checks both components for membership.
    pub fn parse(params: &GroupParams, text: &str) -> Result<Self> {
        let parts = parse_components(text, 2)?;
        let mut it = parts.into_iter();
        Ok(Ciphertext {
            c1: GroupElement::new(params, it.next().unwrap())?,
            c2: GroupElement::new(params, it.next().unwrap())?,
        })
    }
}

impl fmt::Display for Ciphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.c1, self.c2)
    }
}

pub(crate) fn parse_components(text: &str, expected: usize) -> Result<Vec<BigUint>> {
    let parts: Vec<&str> = text.trim().split(',').collect();
    if parts.len() != expected {
        return Err(Error::Parse(format!(
            "expected {expected} comma-separated components, got {}",
            parts.len()
        )));
    }
    parts
        .into_iter()
        .map(|s| {
            BigUint::from_str(s.trim()).map_err(|_| Error::Parse(format!("`{}` is not a decimal integer", s.trim())))
        })
        .collect()
}

/// Encryption randomness. Zero is only reachable through
/// [`Nonce::insecure_zero`] because `r = 0` publishes the plaintext as `c2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nonce(BigUint);

impl Nonce {
    pub fn new(params: &GroupParams, r: BigUint) -> Result<Self> {
        if r.is_zero() || &r >= params.q() {
            return Err(Error::Domain(format!("nonce must lie in [1, q), got {r}")));
        }
        Ok(Nonce(r))
    }

    pub fn random<R: Rng + ?Sized>(params: &GroupParams, rng: &mut R) -> Self {
        Nonce(params.random_nonzero_scalar(rng))
    }

    /// Deterministic test mode only.
    pub fn insecure_zero() -> Self {
        Nonce(BigUint::zero())
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

pub fn keygen<R: Rng + ?Sized>(params: &GroupParams, rng: &mut R) -> (PublicKey, SecretKey) {
    let sk = SecretKey {
        params: params.clone(),
        s: params.random_scalar(rng),
    };
    (sk.public_key(), sk)
}

/// Key pair for a chosen exponent.
pub fn keygen_from_secret(params: &GroupParams, s: BigUint) -> Result<(PublicKey, SecretKey)> {
    let sk = SecretKey::new(params, s)?;
    Ok((sk.public_key(), sk))
}

pub fn encrypt<R: Rng + ?Sized>(pk: &PublicKey, m: &GroupElement, rng: &mut R) -> Result<Ciphertext> {
    let nonce = Nonce::random(&pk.params, rng);
    encrypt_with_nonce(pk, m, &nonce)
}

pub fn encrypt_with_nonce(pk: &PublicKey, m: &GroupElement, nonce: &Nonce) -> Result<Ciphertext> {
    let params = &pk.params;
    // GroupElement may come from another group; re-check against this one.
    if !params.is_member(m.value())? {
        return Err(Error::PlaintextNotInGroup);
    }
    let c1 = params.g_pow(&nonce.0);
    let c2 = params.mul(m, &params.pow(&pk.h, &nonce.0));
    Ok(Ciphertext { c1, c2 })
}

/// `c1^(q - s) * c2 mod p`.
pub fn decrypt(sk: &SecretKey, ct: &Ciphertext) -> GroupElement {
    let params = &sk.params;
    let mask_inv = params.pow(&ct.c1, &(params.q() - &sk.s));
    params.mul(&mask_inv, &ct.c2)
}

/// Component-wise product; decrypts to `m1 m2 mod p`.
pub fn eval(pk: &PublicKey, ct1: &Ciphertext, ct2: &Ciphertext) -> Ciphertext {
    let params = &pk.params;
    Ciphertext {
        c1: params.mul(&ct1.c1, &ct2.c1),
        c2: params.mul(&ct1.c2, &ct2.c2),
    }
}
