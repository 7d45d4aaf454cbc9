//! Prime-order subgroups of `Z_p^*` for safe primes `p = 2q + 1`.
//!
//! The plaintext and ciphertext space of the ElGamal layer is the subgroup of
//! quadratic residues, which has prime order `q`. Arithmetic is variable-time
//! `num-bigint`; this is a simulator, not a hardened implementation.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Miller-Rabin rounds; each round errs with probability at most 1/4.
pub const MR_ROUNDS: usize = 40;

/// Default number of safe-prime candidates tried before giving up.
pub const DEFAULT_ATTEMPT_BUDGET: u64 = 5_000_000;

pub const MIN_BITS: u64 = 16;

/// Uniform integer in `[0, bound)`, by rejection sampling on masked bytes.
pub fn random_below<R: Rng + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    assert!(!bound.is_zero(), "random_below: empty range");
    let bits = bound.bits();
    let nbytes = bits.div_ceil(8) as usize;
    let excess = (nbytes as u64) * 8 - bits;
    let mut buf = vec![0u8; nbytes];
    loop {
        rng.fill_bytes(&mut buf);
        // big-endian: mask the high byte down to `bits` bits
        buf[0] &= 0xffu8 >> excess;
        let candidate = BigUint::from_bytes_be(&buf);
        if &candidate < bound {
            return candidate;
        }
    }
}

/// Uniform integer in `[low, high)`.
pub fn random_range<R: Rng + ?Sized>(rng: &mut R, low: &BigUint, high: &BigUint) -> BigUint {
    assert!(low < high, "random_range: empty range");
    low + random_below(rng, &(high - low))
}

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        const LIMIT: usize = 4096;
        let mut composite = vec![false; LIMIT];
        let mut out = Vec::new();
        for i in 2..LIMIT {
            if !composite[i] {
                out.push(i as u32);
                let mut j = i * i;
                while j < LIMIT {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        out
    })
}

/// Miller-Rabin with `rounds` uniformly random bases.
pub fn is_probable_prime<R: Rng + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for &sp in small_primes().iter().take(64) {
        let sp = BigUint::from(sp);
        if n == &sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }
    let n_minus_one = n - 1u32;
    let shift = n_minus_one.trailing_zeros().unwrap_or(0);
    let odd = &n_minus_one >> shift;
    let three = BigUint::from(3u32);
    if n <= &three {
        return true;
    }
    'witness: for _ in 0..rounds {
        let a = random_range(rng, &two, &n_minus_one);
        let mut x = a.modpow(&odd, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..shift {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
            if x.is_one() {
                return false;
            }
        }
        return false;
    }
    true
}

#[derive(Debug, PartialEq, Eq)]
struct Params {
    p: BigUint,
    q: BigUint,
    g: BigUint,
    cofactor: BigUint,
}

/// Group description `(p, q, g)` with `p = cofactor * q + 1`.
///
/// Cheap to clone; the numbers live behind an `Arc`.
#[derive(Clone, PartialEq, Eq)]
pub struct GroupParams(Arc<Params>);

impl fmt::Debug for GroupParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupParams")
            .field("p", &self.0.p.to_string())
            .field("q", &self.0.q.to_string())
            .field("g", &self.0.g.to_string())
            .field("cofactor", &self.0.cofactor.to_string())
            .finish()
    }
}

/// A member of the order-`q` subgroup, stored as its canonical residue.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement(BigUint);

impl GroupElement {
    /// Checked constructor.
    pub fn new(params: &GroupParams, value: BigUint) -> Result<Self> {
        if params.is_member(&value)? {
            Ok(GroupElement(value))
        } else {
            Err(Error::PlaintextNotInGroup)
        }
    }

    /// Wraps a value already known to be a member (results of group operations).
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn from_trusted(value: BigUint) -> Self {
        GroupElement(value)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_value(self) -> BigUint {
        self.0
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl GroupParams {
    /// Builds parameters from explicit numbers and checks every invariant:
    /// `p` and `q` prime, `q | p - 1`, `g^q = 1` and `g != 1`.
    pub fn from_parts(p: BigUint, q: BigUint, g: BigUint) -> Result<Self> {
        // Deterministic witnesses keep validation reproducible.
        let mut rng = ChaCha20Rng::seed_from_u64(0x5eed_9a11);
        if !is_probable_prime(&q, MR_ROUNDS, &mut rng) {
            return Err(Error::InvalidGroup(format!("q = {q} is not prime")));
        }
        if !is_probable_prime(&p, MR_ROUNDS, &mut rng) {
            return Err(Error::InvalidGroup(format!("p = {p} is not prime")));
        }
        let (cofactor, rem) = (&p - 1u32).div_rem(&q);
        if !rem.is_zero() {
            return Err(Error::InvalidGroup(format!("q = {q} does not divide p - 1")));
        }
        if g.is_zero() || g >= p || g.is_one() {
            return Err(Error::InvalidGroup(format!("generator g = {g} out of range")));
        }
        if !g.modpow(&q, &p).is_one() {
            return Err(Error::InvalidGroup(format!("g = {g} does not have order q")));
        }
        Ok(GroupParams(Arc::new(Params { p, q, g, cofactor })))
    }

    pub fn p(&self) -> &BigUint {
        &self.0.p
    }

    pub fn q(&self) -> &BigUint {
        &self.0.q
    }

    pub fn g(&self) -> &BigUint {
        &self.0.g
    }

    pub fn cofactor(&self) -> &BigUint {
        &self.0.cofactor
    }

    pub fn bits(&self) -> u64 {
        self.0.p.bits()
    }

    pub fn generator(&self) -> GroupElement {
        GroupElement(self.0.g.clone())
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(BigUint::one())
    }

    /// `a^q mod p == 1`, for `0 < a < p`.
    pub fn is_member(&self, a: &BigUint) -> Result<bool> {
        if a.is_zero() || a >= self.p() {
            return Err(Error::Domain(format!("membership test needs 0 < a < p, got a = {a}")));
        }
        Ok(a.modpow(self.q(), self.p()).is_one())
    }

    /// Closest subgroup member to `target`; ties go to the smaller value.
    pub fn nearest_member(&self, target: &BigUint) -> Result<GroupElement> {
        if target.is_zero() || target >= self.p() {
            return Err(Error::Domain(format!(
                "nearest member needs 0 < target < p, got {target}"
            )));
        }
        let p = self.p();
        let mut dist = BigUint::zero();
        // 1 is always a member, so the search terminates before dist reaches p.
        loop {
            if &dist <= target {
                let below = target - &dist;
                if !below.is_zero() && self.is_member(&below)? {
                    return Ok(GroupElement(below));
                }
            }
            let above = target + &dist;
            if &above < p && self.is_member(&above)? {
                return Ok(GroupElement(above));
            }
            dist += 1u32;
        }
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement((&a.0 * &b.0) % self.p())
    }

    pub fn pow(&self, base: &GroupElement, exp: &BigUint) -> GroupElement {
        GroupElement(base.0.modpow(exp, self.p()))
    }

    /// `g^exp mod p`.
    pub fn g_pow(&self, exp: &BigUint) -> GroupElement {
        GroupElement(self.g().modpow(exp, self.p()))
    }

    /// Inverse via `a^(q-1)`, valid for subgroup members.
    pub fn inv(&self, a: &GroupElement) -> GroupElement {
        GroupElement(a.0.modpow(&(self.q() - 1u32), self.p()))
    }

    /// Uniform exponent in `Z_q`.
    pub fn random_scalar<R: Rng + ?Sized>(&self, rng: &mut R) -> BigUint {
        random_below(rng, self.q())
    }

    /// Uniform nonzero exponent in `[1, q)`.
    pub fn random_nonzero_scalar<R: Rng + ?Sized>(&self, rng: &mut R) -> BigUint {
        random_range(rng, &BigUint::one(), self.q())
    }

    /// Serializes as the `p=`/`q=`/`g=` key file.
    pub fn to_key_file(&self) -> String {
        format!("p={}\nq={}\ng={}\n", self.p(), self.q(), self.g())
    }

    pub fn from_key_file(text: &str) -> Result<Self> {
        let (mut p, mut q, mut g) = (None, None, None);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            let number = BigUint::from_str(value.trim()).map_err(|_| {
                Error::Parse(format!(
                    "line {}: `{}` is not a decimal integer",
                    lineno + 1,
                    value.trim()
                ))
            })?;
            let slot = match key.trim() {
                "p" => &mut p,
                "q" => &mut q,
                "g" => &mut g,
                other => return Err(Error::Parse(format!("line {}: unknown key `{other}`", lineno + 1))),
            };
            if slot.replace(number).is_some() {
                return Err(Error::Parse(format!(
                    "line {}: duplicate key `{}`",
                    lineno + 1,
                    key.trim()
                )));
            }
        }
        let missing = |name: &str| Error::Parse(format!("missing key `{name}`"));
        Self::from_parts(
            p.ok_or_else(|| missing("p"))?,
            q.ok_or_else(|| missing("q"))?,
            g.ok_or_else(|| missing("g"))?,
        )
    }
}

/// Random safe-prime group with `p` of exactly `bit_length` bits.
pub fn generate_group_params<R: Rng + ?Sized>(bit_length: u64, rng: &mut R) -> Result<GroupParams> {
    generate_group_params_with_budget(bit_length, DEFAULT_ATTEMPT_BUDGET, rng)
}

pub fn generate_group_params_with_budget<R: Rng + ?Sized>(
    bit_length: u64,
    max_attempts: u64,
    rng: &mut R,
) -> Result<GroupParams> {
    if bit_length < MIN_BITS {
        return Err(Error::Domain(format!(
            "group bit length must be at least {MIN_BITS}, got {bit_length}"
        )));
    }
    // q has bit_length - 1 bits with the top bit set, so p = 2q + 1 has bit_length bits.
    let q_bits = bit_length - 1;
    let top = BigUint::one() << (q_bits - 1);
    let sieve = small_primes();
    let two = BigUint::from(2u32);

    for _ in 0..max_attempts {
        let mut q = random_below(rng, &top) | &top;
        q.set_bit(0, true);

        // Reject when r | q or r | 2q + 1, i.e. q mod r is 0 or (r - 1) / 2.
        let sieved_out = sieve.iter().skip(1).any(|&r| {
            let rem = (&q % r).to_u32().unwrap_or(0);
            (rem == 0 || rem == (r - 1) / 2) && q != BigUint::from(r)
        });
        if sieved_out {
            continue;
        }
        let p = (&q << 1) + 1u32;
        // cheap Fermat filter on p before the expensive tests
        if !two.modpow(&(&p - 1u32), &p).is_one() {
            continue;
        }
        if !is_probable_prime(&q, MR_ROUNDS, rng) || !is_probable_prime(&p, MR_ROUNDS, rng) {
            continue;
        }
        let g = loop {
            let a = random_range(rng, &two, &(&p - 1u32));
            let g = a.modpow(&two, &p);
            if !g.is_one() {
                break g;
            }
        };
        return Ok(GroupParams(Arc::new(Params { p, q, g, cofactor: two })));
    }
    Err(Error::GenerationTimeout {
        bits: bit_length,
        attempts: max_attempts,
    })
}
