//! Key rotation for ElGamal plus cross-epoch evaluation.
//!
//! `key_update`/`ct_update` are the conventional dynamic-key algorithms: the
//! token `(h, d)` moves a ciphertext from epoch `t` to `t + 1`. Whoever holds
//! the token and the old secret key also learns the next one
//! ([`recover_next_key`]), so a controller server must never see it.
//!
//! [`eval_bar`] and [`dec_bar`] avoid that: two ciphertexts from different
//! epochs are multiplied into a three-component ciphertext which the key
//! owner opens with both epoch secrets. The server needs no token.

use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::Rng;

use crate::elgamal::{self, parse_components, Ciphertext, Nonce, PublicKey, SecretKey};
use crate::error::{Error, Result};
use crate::modgroup::{GroupElement, GroupParams};

/// `(h_old, d)` with `d = s' - s mod q`.
#[derive(Clone, PartialEq, Eq)]
pub struct UpdateToken {
    pub h_old: GroupElement,
    pub d: BigUint,
}

impl fmt::Debug for UpdateToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UpdateToken")
            .field("h_old", &self.h_old)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtendedCiphertext {
    pub c1: GroupElement,
    pub c2: GroupElement,
    pub c3: GroupElement,
}

impl ExtendedCiphertext {
    /// Parses `c1,c2,c3`.
    pub fn parse(params: &GroupParams, text: &str) -> Result<Self> {
        let mut it = parse_components(text, 3)?.into_iter();
        let mut next = || GroupElement::new(params, it.next().unwrap());
        Ok(ExtendedCiphertext {
            c1: next()?,
            c2: next()?,
            c3: next()?,
        })
    }
}

impl fmt::Display for ExtendedCiphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.c1, self.c2, self.c3)
    }
}

/// Key pair in force at time `t`.
#[derive(Clone, Debug)]
pub struct KeyEpoch {
    pub t: u64,
    pub pk: PublicKey,
    pub sk: SecretKey,
}

impl KeyEpoch {
    pub fn generate<R: Rng + ?Sized>(params: &GroupParams, rng: &mut R) -> Self {
        let (pk, sk) = elgamal::keygen(params, rng);
        KeyEpoch { t: 0, pk, sk }
    }

    pub fn from_secret(params: &GroupParams, t: u64, s: BigUint) -> Result<Self> {
        let (pk, sk) = elgamal::keygen_from_secret(params, s)?;
        Ok(KeyEpoch { t, pk, sk })
    }

    pub fn params(&self) -> &GroupParams {
        self.pk.params()
    }
}

/// Rotates to a fresh uniform secret.
pub fn key_update<R: Rng + ?Sized>(epoch: &KeyEpoch, rng: &mut R) -> (KeyEpoch, UpdateToken) {
    let s_new = epoch.params().random_scalar(rng);
    key_update_to(epoch, s_new).expect("random scalar is below q")
}

/// Rotation to a chosen secret `s_new`.
pub fn key_update_to(epoch: &KeyEpoch, s_new: BigUint) -> Result<(KeyEpoch, UpdateToken)> {
    let params = epoch.params();
    let q = params.q();
    if &s_new >= q {
        return Err(Error::Domain(format!("secret exponent must be below q, got {s_new}")));
    }
    let s = epoch.sk.exponent();
    // exponents live in Z_q, so the difference is reduced mod q
    let d = (&s_new + q - s) % q;
    let h_new = params.mul(epoch.pk.h(), &params.g_pow(&d));
    let sk = SecretKey::new(params, s_new)?;
    debug_assert_eq!(&h_new, sk.public_key().h());
    let next = KeyEpoch {
        t: epoch.t + 1,
        pk: PublicKey::from_parts(params.clone(), h_new),
        sk,
    };
    let token = UpdateToken {
        h_old: epoch.pk.h().clone(),
        d,
    };
    Ok((next, token))
}

/// Moves `ct` to the next epoch with fresh re-randomization.
pub fn ct_update<R: Rng + ?Sized>(
    params: &GroupParams,
    ct: &Ciphertext,
    token: &UpdateToken,
    rng: &mut R,
) -> Ciphertext {
    ct_update_with_nonce(params, ct, token, &Nonce::random(params, rng))
}

/// `(c1 g^r, (c1 g^r)^d c2 h^r)`.
pub fn ct_update_with_nonce(params: &GroupParams, ct: &Ciphertext, token: &UpdateToken, nonce: &Nonce) -> Ciphertext {
    let r = nonce.value();
    let c1 = params.mul(&ct.c1, &params.g_pow(r));
    let shifted = params.pow(&c1, &token.d);
    let mask = params.pow(&token.h_old, r);
    let c2 = params.mul(&params.mul(&shifted, &ct.c2), &mask);
    Ciphertext { c1, c2 }
}

/// Cross-epoch product `(ct1.c1, ct2.c1, ct1.c2 * ct2.c2)`.
///
/// Only the modulus of `pk` is used; operands may come from any two epochs.
pub fn eval_bar(pk: &PublicKey, ct1: &Ciphertext, ct2: &Ciphertext) -> ExtendedCiphertext {
    let product = elgamal::eval(pk, ct1, ct2);
    ExtendedCiphertext {
        c1: ct1.c1.clone(),
        c2: ct2.c1.clone(),
        c3: product.c2,
    }
}

/// Opens an [`eval_bar`] output. `sk1` belongs to the epoch of the first
/// operand, `sk2` to the second. Wrong keys yield an unrelated group element.
pub fn dec_bar(sk1: &SecretKey, sk2: &SecretKey, ect: &ExtendedCiphertext) -> GroupElement {
    let inner = elgamal::decrypt(
        sk2,
        &Ciphertext {
            c1: ect.c2.clone(),
            c2: ect.c3.clone(),
        },
    );
    elgamal::decrypt(
        sk1,
        &Ciphertext {
            c1: ect.c1.clone(),
            c2: inner,
        },
    )
}

/// `s + d mod q`: the next secret, recovered by anyone holding the token.
pub fn recover_next_key(sk: &SecretKey, token: &UpdateToken) -> SecretKey {
    let params = sk.params();
    let s = (sk.exponent() + &token.d) % params.q();
    SecretKey::new(params, s).expect("reduced mod q")
}

/// True when `d` leaves the key unchanged.
pub fn is_identity_token(token: &UpdateToken) -> bool {
    token.d.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> GroupParams {
        GroupParams::from_parts(23u32.into(), 11u32.into(), 2u32.into()).unwrap()
    }

    fn el(params: &GroupParams, v: u32) -> GroupElement {
        GroupElement::new(params, v.into()).unwrap()
    }

    fn ct(params: &GroupParams, c1: u32, c2: u32) -> Ciphertext {
        Ciphertext {
            c1: el(params, c1),
            c2: el(params, c2),
        }
    }

    #[test]
    fn key_update_examples() {
        let params = toy();
        let epoch = KeyEpoch::from_secret(&params, 0, 3u32.into()).unwrap();
        for (s_new, d, h_new) in [(7u32, 4u32, 13u32), (3, 0, 8), (1, 9, 2)] {
            let (next, token) = key_update_to(&epoch, s_new.into()).unwrap();
            assert_eq!(token.d, BigUint::from(d));
            assert_eq!(token.h_old, el(&params, 8));
            assert_eq!(next.pk.h(), &el(&params, h_new));
            assert_eq!(next.t, 1);
        }
        assert!(is_identity_token(&key_update_to(&epoch, 3u32.into()).unwrap().1));
    }

    #[test]
    fn ct_update_examples() {
        let params = toy();
        let epoch = KeyEpoch::from_secret(&params, 0, 3u32.into()).unwrap();
        let (next, token) = key_update_to(&epoch, 7u32.into()).unwrap();
        assert_eq!(token.d, BigUint::from(4u32));
        let nonce = Nonce::new(&params, 1u32.into()).unwrap();
        let updated = ct_update_with_nonce(&params, &ct(&params, 4, 3), &token, &nonce);
        assert_eq!(updated, ct(&params, 8, 2));
        assert_eq!(elgamal::decrypt(&next.sk, &updated), el(&params, 4));

        let (_, noop) = key_update_to(&epoch, 3u32.into()).unwrap();
        let same = ct_update_with_nonce(&params, &ct(&params, 4, 3), &noop, &Nonce::insecure_zero());
        assert_eq!(same, ct(&params, 4, 3));
    }

    #[test]
    fn eval_bar_and_dec_bar_examples() {
        let params = toy();
        let e0 = KeyEpoch::from_secret(&params, 0, 3u32.into()).unwrap();
        let e1 = KeyEpoch::from_secret(&params, 1, 7u32.into()).unwrap();
        let ct1 = ct(&params, 4, 3);
        let nonce = Nonce::new(&params, 3u32.into()).unwrap();
        let ct2 = elgamal::encrypt_with_nonce(&e1.pk, &el(&params, 2), &nonce).unwrap();
        assert_eq!(ct2, ct(&params, 8, 1));

        let ect = eval_bar(&e0.pk, &ct1, &ct2);
        assert_eq!(ect.to_string(), "4,8,3");
        // inner decryption under sk2 gives 6, the outer one 8 = 4 * 2
        let inner = elgamal::decrypt(&e1.sk, &ct(&params, 8, 3));
        assert_eq!(inner, el(&params, 6));
        assert_eq!(dec_bar(&e0.sk, &e1.sk, &ect), el(&params, 8));

        let zero = Nonce::insecure_zero();
        let a = elgamal::encrypt_with_nonce(&e0.pk, &el(&params, 4), &zero).unwrap();
        let b = elgamal::encrypt_with_nonce(&e1.pk, &el(&params, 9), &zero).unwrap();
        let ect = eval_bar(&e0.pk, &a, &b);
        assert_eq!(ect.to_string(), "1,1,13");
    }

    #[test]
    fn dec_bar_with_trivial_second_operand_is_plain_decrypt() {
        let params = toy();
        let e = KeyEpoch::from_secret(&params, 0, 3u32.into()).unwrap();
        let c = ct(&params, 13, 4);
        let ect = ExtendedCiphertext {
            c1: c.c1.clone(),
            c2: params.identity(),
            c3: c.c2.clone(),
        };
        assert_eq!(dec_bar(&e.sk, &e.sk, &ect), elgamal::decrypt(&e.sk, &c));
    }

    #[test]
    fn recover_next_key_examples() {
        let params = toy();
        let sk = SecretKey::new(&params, 3u32.into()).unwrap();
        let token = |d: u32| UpdateToken {
            h_old: el(&params, 8),
            d: d.into(),
        };
        assert_eq!(recover_next_key(&sk, &token(4)).exponent(), &BigUint::from(7u32));
        assert_eq!(recover_next_key(&sk, &token(0)).exponent(), &BigUint::from(3u32));
        assert_eq!(recover_next_key(&sk, &token(9)).exponent(), &BigUint::from(1u32));
    }

    #[test]
    fn extended_ciphertext_text_form() {
        let params = toy();
        let ect = ExtendedCiphertext::parse(&params, "4,8,3").unwrap();
        assert_eq!(ect.to_string(), "4,8,3");
        assert!(ExtendedCiphertext::parse(&params, "4,8").is_err());
        assert!(ExtendedCiphertext::parse(&params, "4,8,5").is_err());
    }
}
