//! Fixed-point encoding of bounded reals into the plaintext subgroup.
//!
//! `x` is scaled by `1/Δ` and rounded to an integer `z`; negative `z` wraps to
//! `p + z`, and the residue is projected onto the nearest subgroup member.
//! Decoding reads the symmetric representative in `(-p/2, p/2)`, so the sign
//! survives multiplication: `(p - a)(p - b) ≡ ab (mod p)`.

use nalgebra::{DMatrix, DVector};
use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::modgroup::{GroupElement, GroupParams};

/// Quantization step `Δ > 0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ScalingFactor(f64);

impl ScalingFactor {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidCodec(format!(
                "scaling factor must be positive, got {delta}"
            )));
        }
        Ok(ScalingFactor(delta))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct CodecConfig {
    params: GroupParams,
    delta: ScalingFactor,
    value_bound: f64,
}

impl CodecConfig {
    /// Requires `(value_bound / Δ)^2 < p / 2` so a product of two encodings
    /// never wraps around the modulus.
    pub fn new(params: GroupParams, delta: ScalingFactor, value_bound: f64) -> Result<Self> {
        if !(value_bound.is_finite() && value_bound > 0.0) {
            return Err(Error::InvalidCodec(format!(
                "value bound must be positive, got {value_bound}"
            )));
        }
        let half_p = params.p().to_f64().unwrap_or(f64::INFINITY) / 2.0;
        let span = value_bound / delta.get();
        if span * span >= half_p {
            return Err(Error::InvalidCodec(format!(
                "(value_bound / delta)^2 = {:e} must stay below p/2 = {:e}",
                span * span,
                half_p
            )));
        }
        Ok(CodecConfig {
            params,
            delta,
            value_bound,
        })
    }

    pub fn params(&self) -> &GroupParams {
        &self.params
    }

    pub fn delta(&self) -> f64 {
        self.delta.get()
    }

    pub fn value_bound(&self) -> f64 {
        self.value_bound
    }
}

/// Integer level `round(x / Δ)` as a big integer.
fn level(x: f64, delta: f64) -> BigInt {
    BigInt::from_f64((x / delta).round()).expect("finite")
}

pub fn encode(x: f64, cfg: &CodecConfig) -> Result<GroupElement> {
    if !x.is_finite() || x.abs() > cfg.value_bound {
        return Err(Error::OutOfBounds {
            x,
            bound: cfg.value_bound,
        });
    }
    let z = level(x, cfg.delta());
    if z.is_zero() {
        return Err(Error::ZeroEncoding { x, delta: cfg.delta() });
    }
    let p = BigInt::from_biguint(Sign::Plus, cfg.params.p().clone());
    let residue = if z.is_negative() { &p + &z } else { z };
    let residue = residue.to_biguint().expect("nonnegative");
    cfg.params.nearest_member(&residue)
}

/// `z' * Δ^power`, with `z'` the symmetric representative of `m`.
///
/// `power` is 1 for fresh encodings and 2 for products of two encodings.
pub fn decode(m: &GroupElement, cfg: &CodecConfig, power: u32) -> f64 {
    let signed = symmetric_representative(m.value(), cfg.params.p());
    signed.to_f64().expect("finite") * cfg.delta().powi(power as i32)
}

fn symmetric_representative(m: &BigUint, p: &BigUint) -> BigInt {
    let half = (p - 1u32) >> 1;
    let m_signed = BigInt::from_biguint(Sign::Plus, m.clone());
    if m <= &half {
        m_signed
    } else {
        m_signed - BigInt::from_biguint(Sign::Plus, p.clone())
    }
}

pub fn sum_rows(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.nrows(), m.row_iter().map(|row| row.iter().sum()))
}
