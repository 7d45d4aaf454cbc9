//! Security parameter design for an encrypted linear control loop.
//!
//! The adversary identifies `(A, B)` by least squares from `N` deciphered
//! samples. Its expected error is bounded below by the sample identifying
//! complexity `γ(N)`, built from the controllability Gramians `Ψ_u`, `Ψ_w`.
//! Breaking `N` ciphertexts from distinct key epochs costs `τ(N, λ) = 2^λ N / Υ`
//! seconds. The design picks the smallest `N*` with `γ(N*) < γ_c`, then the
//! smallest `λ*` with `τ(N*, λ*) > τ_c`, and finally the shortest key length
//! whose GNFS cost reaches `2^λ*`.
//!
//! Integer results are computed on exact rationals built from the binary
//! values of the `f64` inputs; nothing of size `2^λ` is ever a float.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Dense Kronecker solves beyond this size are refused.
pub const MAX_LYAPUNOV_DIM: usize = 50;

/// `ρ(A) ≥ 1 - STABILITY_MARGIN` counts as unstable.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Relative distance to an integer inside which a floor snaps to it.
pub const FLOOR_GUARD: f64 = 1e-12;

pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "spectral radius",
            expected: "square matrix".into(),
            got: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max))
}

pub fn ensure_stable(a: &DMatrix<f64>) -> Result<()> {
    let rho = spectral_radius(a)?;
    if rho.is_nan() || rho >= 1.0 - STABILITY_MARGIN {
        return Err(Error::Unstable { spectral_radius: rho });
    }
    Ok(())
}

/// Unique `Ψ` with `A Ψ Aᵀ - Ψ + Q = 0`, via `(I - A⊗A) vec(Ψ) = vec(Q)`.
pub fn solve_discrete_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || q.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            context: "discrete Lyapunov",
            expected: format!("square A and Q of matching size {n}x{n}"),
            got: format!("A {:?}, Q {:?}", a.shape(), q.shape()),
        });
    }
    if n > MAX_LYAPUNOV_DIM {
        return Err(Error::TooLarge {
            n,
            max: MAX_LYAPUNOV_DIM,
        });
    }
    let asym = (q - q.transpose()).norm();
    if asym > 1e-12 * (1.0 + q.norm()) {
        return Err(Error::InvalidParameter(format!(
            "Lyapunov right-hand side must be symmetric (asymmetry {asym:e})"
        )));
    }
    ensure_stable(a)?;

    let system = DMatrix::<f64>::identity(n * n, n * n) - a.kronecker(a);
    let rhs = nalgebra::DVector::from_column_slice(q.as_slice());
    let vec_psi = system.lu().solve(&rhs).ok_or(Error::Singular("I - A⊗A"))?;
    let psi = DMatrix::from_column_slice(n, n, vec_psi.as_slice());
    Ok((&psi + psi.transpose()) * 0.5)
}

/// Frobenius norm of `A Ψ Aᵀ - Ψ + Q`.
pub fn lyapunov_residual(a: &DMatrix<f64>, psi: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    (a * psi * a.transpose() - psi + q).norm()
}

/// Input and noise controllability Gramians of `x⁺ = A x + B u + w`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramianPair {
    pub psi_u: DMatrix<f64>,
    pub psi_w: DMatrix<f64>,
}

impl GramianPair {
    pub fn from_system(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Self> {
        if b.nrows() != a.nrows() {
            return Err(Error::DimensionMismatch {
                context: "Gramians",
                expected: format!("B with {} rows", a.nrows()),
                got: format!("{} rows", b.nrows()),
            });
        }
        let n = a.nrows();
        Ok(GramianPair {
            psi_u: solve_discrete_lyapunov(a, &(b * b.transpose()))?,
            psi_w: solve_discrete_lyapunov(a, &DMatrix::identity(n, n))?,
        })
    }
}

/// Dimensions and Gramian traces: everything `γ(N)` needs from the plant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemTraces {
    pub n: usize,
    pub m: usize,
    pub tr_psi_u: f64,
    pub tr_psi_w: f64,
}

impl SystemTraces {
    pub fn new(n: usize, m: usize, tr_psi_u: f64, tr_psi_w: f64) -> Self {
        SystemTraces {
            n,
            m,
            tr_psi_u,
            tr_psi_w,
        }
    }

    pub fn from_gramians(m: usize, gramians: &GramianPair) -> Self {
        SystemTraces {
            n: gramians.psi_w.nrows(),
            m,
            tr_psi_u: gramians.psi_u.trace(),
            tr_psi_w: gramians.psi_w.trace(),
        }
    }

    fn entries(&self) -> f64 {
        (self.m + self.n) as f64
    }

    /// Full sample identifying complexity, valid for every `N ≥ 1`.
    pub fn sic_full(&self, v: &Variances, n_samples: u64) -> f64 {
        let k = (n_samples as f64) - 1.0;
        let per_sample = v.sigma_u2 * (self.tr_psi_u + self.m as f64) + v.sigma_w2 * self.tr_psi_w;
        self.entries() * v.sigma_w2 / (v.sigma_x2 * self.tr_psi_w + k * per_sample)
    }

    /// Large-`N` form depending on the variances only through
    /// `R_σ = σ_u² / σ_w²`.
    pub fn sic_large_n(&self, r_sigma: f64, n_samples: u64) -> Result<f64> {
        require_two_samples(n_samples)?;
        let k = (n_samples - 1) as f64;
        Ok(self.entries() / (k * (r_sigma * (self.tr_psi_u + self.m as f64) + self.tr_psi_w)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Variances {
    pub sigma_x2: f64,
    pub sigma_u2: f64,
    pub sigma_w2: f64,
}

fn require_two_samples(n_samples: u64) -> Result<()> {
    if n_samples < 2 {
        return Err(Error::Domain(format!("need N >= 2 samples, got {n_samples}")));
    }
    Ok(())
}

/// Limit of the large-`N` complexity as `tr Ψ_u → 0` (input-dominated regime).
pub fn sic_upperbound_input(m: usize, n: usize, r_sigma: f64, n_samples: u64) -> Result<f64> {
    require_two_samples(n_samples)?;
    if r_sigma.is_nan() || r_sigma <= 0.0 {
        return Err(Error::Domain(format!("R_sigma must be positive, got {r_sigma}")));
    }
    Ok((m + n) as f64 / ((n_samples - 1) as f64 * m as f64 * r_sigma))
}

/// Noise-dominated bound, from `tr Ψ_w > n` for any nonzero stable `A`.
pub fn sic_upperbound_noise(m: usize, n: usize, n_samples: u64) -> Result<f64> {
    require_two_samples(n_samples)?;
    Ok((m + n) as f64 / ((n_samples - 1) as f64 * n as f64))
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

fn pow2(exp: u32) -> BigRational {
    BigRational::from_integer(BigInt::one() << exp)
}

/// `τ(N, λ) = 2^λ N / Υ` seconds.
pub fn deciphering_time(n_samples: u64, lambda: u32, upsilon: f64) -> f64 {
    let work = pow2(lambda) * BigRational::from_integer(n_samples.into());
    (work / rational(upsilon)).to_f64().unwrap_or(f64::INFINITY)
}

/// Exact test of `τ(N, λ) > τ_c`, i.e. `2^λ N > Υ τ_c`.
pub fn deciphering_exceeds(n_samples: u64, lambda: u32, upsilon: f64, tau_c: f64) -> bool {
    pow2(lambda) * BigRational::from_integer(n_samples.into()) > rational(upsilon) * rational(tau_c)
}

/// Acceptable error `γ_c`, defense period `τ_c` (s) and adversary rate `Υ` (FLOPS).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecurityRequirement {
    pub gamma_c: f64,
    pub tau_c: f64,
    pub upsilon: f64,
}

impl SecurityRequirement {
    pub fn new(gamma_c: f64, tau_c: f64, upsilon: f64) -> Result<Self> {
        for (name, v) in [("gamma_c", gamma_c), ("tau_c", tau_c), ("upsilon", upsilon)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(SecurityRequirement {
            gamma_c,
            tau_c,
            upsilon,
        })
    }
}

/// Secure iff no `N ≤ n_max` has both `γ(N) < γ_c` and `τ(N, λ) ≤ τ_c`.
///
/// `gamma` must be non-increasing; since `τ` grows with `N` only the first
/// sample size below the threshold needs checking.
pub fn is_secure(gamma: impl Fn(u64) -> f64, lambda: u32, req: &SecurityRequirement, n_max: u64) -> Result<bool> {
    if n_max == 0 || gamma(n_max).is_nan() || gamma(n_max) >= req.gamma_c {
        return Err(Error::Inconclusive {
            n_max,
            gamma: if n_max == 0 { f64::NAN } else { gamma(n_max) },
            gamma_c: req.gamma_c,
        });
    }
    let (mut lo, mut hi) = (1u64, n_max);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if gamma(mid) < req.gamma_c {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(deciphering_exceeds(lo, lambda, req.upsilon, req.tau_c))
}

fn floor_guarded(x: &BigRational) -> BigInt {
    let nearest = x.round();
    let gap = (x - &nearest).abs();
    let tol = x.abs() * rational(FLOOR_GUARD);
    if gap <= tol {
        nearest.to_integer()
    } else {
        x.floor().to_integer()
    }
}

/// Largest `L` with `2^L ≤ y`, for `y > 0`.
fn floor_log2(y: &BigRational) -> i64 {
    let int = y.floor().to_integer();
    if int >= BigInt::one() {
        return int.bits() as i64 - 1;
    }
    let mut l = 0i64;
    let mut scaled = y.clone();
    while scaled < BigRational::one() {
        scaled *= BigRational::from_integer(2.into());
        l -= 1;
    }
    l
}

/// `N* = ⌊(m+n) / (γ_c [R_σ (tr Ψ_u + m) + tr Ψ_w])⌋ + 2`.
pub fn minimum_dangerous_samples(traces: &SystemTraces, r_sigma: f64, gamma_c: f64) -> Result<u64> {
    if !(r_sigma >= 0.0 && traces.tr_psi_u >= 0.0 && traces.tr_psi_w >= 0.0) {
        return Err(Error::InvalidParameter(
            "R_sigma and Gramian traces must be nonnegative".into(),
        ));
    }
    let denom = rational(gamma_c)
        * (rational(r_sigma) * (rational(traces.tr_psi_u) + rational(traces.m as f64)) + rational(traces.tr_psi_w));
    if denom.is_zero() {
        return Err(Error::InvalidParameter("complexity denominator vanishes".into()));
    }
    let x = rational((traces.m + traces.n) as f64) / denom;
    (floor_guarded(&x) + 2u32)
        .to_u64()
        .ok_or_else(|| Error::InvalidParameter("N* overflows u64".into()))
}

/// `λ* = ⌊log₂(Υ τ_c / N*)⌋ + 1`, at least 1.
pub fn optimal_security_parameter(n_star: u64, req: &SecurityRequirement) -> u32 {
    let y = rational(req.upsilon) * rational(req.tau_c) / BigRational::from_integer(n_star.into());
    (floor_log2(&y) + 1).max(1) as u32
}

/// `(N*, λ*)` for the given plant traces and requirement.
pub fn design_security_parameter(traces: &SystemTraces, r_sigma: f64, req: &SecurityRequirement) -> Result<(u64, u32)> {
    let n_star = minimum_dangerous_samples(traces, r_sigma, req.gamma_c)?;
    Ok((n_star, optimal_security_parameter(n_star, req)))
}

/// `ln Ω(k)` for the general number field sieve on a `k`-bit modulus:
/// `(64/9)^{1/3} (ln 2^k)^{1/3} (ln ln 2^k)^{2/3}`.
pub fn ln_gnfs_cost(k: u64) -> f64 {
    let ln_n = k as f64 * std::f64::consts::LN_2;
    (64.0f64 / 9.0).cbrt() * ln_n.cbrt() * ln_n.ln().powf(2.0 / 3.0)
}

/// Smallest `k` with `ln Ω(k) ≥ λ ln 2`, for a cost that is increasing in `k ≥ 2`.
pub fn min_key_length_with(lambda: u32, ln_cost: impl Fn(u64) -> f64) -> u64 {
    let target = lambda as f64 * std::f64::consts::LN_2;
    let mut hi = 2u64;
    while ln_cost(hi) < target {
        hi *= 2;
    }
    let mut lo = 2u64;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ln_cost(mid) >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

pub fn min_key_length(lambda: u32) -> u64 {
    min_key_length_with(lambda, ln_gnfs_cost)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DesignResult {
    #[serde(rename = "N_star")]
    pub n_star: u64,
    pub lambda_star: u32,
    pub k_star: u64,
}

impl DesignResult {
    pub fn report(&self) -> String {
        format!(
            "minimum dangerous sample size N* = {}\noptimal security parameter lambda* = {} bit\nminimum key length k* = {} bit\n",
            self.n_star, self.lambda_star, self.k_star
        )
    }
}

/// Full pipeline: `N*`, `λ*`, then `k*` under the GNFS cost.
pub fn design(traces: &SystemTraces, r_sigma: f64, req: &SecurityRequirement) -> Result<DesignResult> {
    let (n_star, lambda_star) = design_security_parameter(traces, r_sigma, req)?;
    Ok(DesignResult {
        n_star,
        lambda_star,
        k_star: min_key_length(lambda_star),
    })
}
