//! Updatable multiplicative ElGamal with cross-epoch evaluation, encrypted
//! linear control loops, least-squares identification attacks against them,
//! and the security parameter design that keeps such attacks too slow.
//!
//! Module map:
//!
//! - [`modgroup`]: safe-prime groups, membership, nearest-member search
//! - [`elgamal`]: key generation, encryption, decryption, homomorphic product
//! - [`updatable`]: key/ciphertext rotation, cross-epoch `eval_bar`/`dec_bar`
//! - [`codec`]: fixed-point encoding into the plaintext subgroup
//! - [`control`]: plant, encrypted controller, closed-loop driver
//! - [`identification`]: probing-input data collection and least squares
//! - [`design`]: Gramians, identification complexity, `(N*, λ*, k*)`
//!
//! None of the big-integer arithmetic is constant time.

pub mod codec;
pub mod control;
pub mod design;
pub mod elgamal;
pub mod error;
pub mod identification;
pub mod modgroup;
pub mod updatable;

pub use codec::{CodecConfig, ScalingFactor};
pub use control::{ControllerParams, ControllerServer, CryptoAudit, LoopRecord, LoopTrace, PlantModel};
pub use design::{DesignResult, GramianPair, SecurityRequirement, SystemTraces, Variances};
pub use elgamal::{Ciphertext, Nonce, PublicKey, SecretKey};
pub use error::{Error, Result};
pub use identification::{AttackConfig, DataMatrices, IdentResult, MonteCarloResult, TrialOutcome};
pub use modgroup::{GroupElement, GroupParams};
pub use updatable::{ExtendedCiphertext, KeyEpoch, UpdateToken};
