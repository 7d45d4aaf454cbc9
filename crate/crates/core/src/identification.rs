//! Least-squares identification attack on the plant.
//!
//! The adversary injects i.i.d. Gaussian probing inputs over `[t_s, t_f]`,
//! reads the (deciphered) states and fits `[Â B̂] = X_f [X_p; U_p]^+`.
//! Deciphering itself is not simulated; its cost is `τ(N, λ)` in
//! [`crate::design`].

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::control::PlantModel;
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttackConfig {
    /// Probing input variance `σ_u²`.
    pub sigma_u2: f64,
    /// Sample count `N = t_f - t_s + 1`.
    pub n_samples: usize,
    /// Attack start; the plant runs unforced before it.
    pub t_s: usize,
}

impl AttackConfig {
    pub fn new(sigma_u2: f64, n_samples: usize, t_s: usize) -> Self {
        AttackConfig {
            sigma_u2,
            n_samples,
            t_s,
        }
    }

    /// `σ_u² > 0` and `N ≥ n + m + 1`.
    pub fn validate(&self, model: &PlantModel) -> Result<()> {
        if !(self.sigma_u2.is_finite() && self.sigma_u2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "probing variance must be positive, got {}",
                self.sigma_u2
            )));
        }
        let needed = model.n() + model.m() + 1;
        if self.n_samples < needed {
            return Err(Error::InvalidParameter(format!(
                "N = {} samples cannot identify {} parameters per row (need N >= {needed})",
                self.n_samples,
                model.n() + model.m()
            )));
        }
        Ok(())
    }
}

/// Stacked trajectory `X_f = A X_p + B U_p + W_p`, each with `N - 1` columns.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrices {
    pub xf: DMatrix<f64>,
    pub xp: DMatrix<f64>,
    pub up: DMatrix<f64>,
    /// Process noise, kept only so tests can check the data identity.
    pub wp: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentResult {
    pub a_hat: DMatrix<f64>,
    pub b_hat: DMatrix<f64>,
    pub epsilon: f64,
}

pub fn collect_data<R: Rng + ?Sized>(model: &PlantModel, atk: &AttackConfig, rng: &mut R) -> DataMatrices {
    let (n, m) = (model.n(), model.m());
    let cols = atk.n_samples.saturating_sub(1);
    let mut x = model.sample_initial_state(rng);
    let zero_u = nalgebra::DVector::zeros(m);
    for _ in 0..atk.t_s {
        let w = model.sample_noise(rng);
        x = model
            .step_with_noise(&x, &zero_u, &w)
            .expect("dimensions fixed by model");
    }
    let mut data = DataMatrices {
        xf: DMatrix::zeros(n, cols),
        xp: DMatrix::zeros(n, cols),
        up: DMatrix::zeros(m, cols),
        wp: DMatrix::zeros(n, cols),
    };
    for k in 0..cols {
        let u = PlantModel::gaussian_vector(m, atk.sigma_u2, rng);
        let w = model.sample_noise(rng);
        let next = model.step_with_noise(&x, &u, &w).expect("dimensions fixed by model");
        data.xp.set_column(k, &x);
        data.up.set_column(k, &u);
        data.wp.set_column(k, &w);
        data.xf.set_column(k, &next);
        x = next;
    }
    data
}

/// Least-squares fit through an SVD of `Dᵀ`, `D = [X_p; U_p]`.
pub fn least_squares_estimate(data: &DataMatrices) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, cols) = data.xp.shape();
    let m = data.up.nrows();
    if data.up.ncols() != cols || data.xf.shape() != (n, cols) {
        return Err(Error::DimensionMismatch {
            context: "least squares data",
            expected: format!("X_f, X_p {n}x{cols} and U_p {m}x{cols}"),
            got: format!("X_f {:?}, U_p {:?}", data.xf.shape(), data.up.shape()),
        });
    }
    let rows = n + m;
    let mut dt = DMatrix::<f64>::zeros(cols, rows);
    dt.view_mut((0, 0), (cols, n)).copy_from(&data.xp.transpose());
    dt.view_mut((0, n), (cols, m)).copy_from(&data.up.transpose());

    let svd = dt.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = RANK_TOLERANCE * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    if rank < rows {
        return Err(Error::RankDeficient { rank, expected: rows });
    }
    let theta_t = svd
        .solve(&data.xf.transpose(), cutoff)
        .map_err(|_| Error::Singular("least squares"))?;
    let theta = theta_t.transpose();
    Ok((theta.columns(0, n).into_owned(), theta.columns(n, m).into_owned()))
}

/// Mean squared entry error `‖[A B] - [Â B̂]‖_F² / (n (n + m))`.
pub fn estimation_error(a: &DMatrix<f64>, b: &DMatrix<f64>, a_hat: &DMatrix<f64>, b_hat: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != a_hat.shape() || b.shape() != b_hat.shape() || a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            context: "estimation error",
            expected: format!("A {:?}, B {:?}", a.shape(), b.shape()),
            got: format!("A_hat {:?}, B_hat {:?}", a_hat.shape(), b_hat.shape()),
        });
    }
    let entries = (a.len() + b.len()) as f64;
    Ok(((a - a_hat).norm_squared() + (b - b_hat).norm_squared()) / entries)
}

pub fn identify<R: Rng + ?Sized>(model: &PlantModel, atk: &AttackConfig, rng: &mut R) -> Result<IdentResult> {
    let data = collect_data(model, atk, rng);
    let (a_hat, b_hat) = least_squares_estimate(&data)?;
    let epsilon = estimation_error(model.a(), model.b(), &a_hat, &b_hat)?;
    Ok(IdentResult { a_hat, b_hat, epsilon })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    /// `Err` carries the failure text, e.g. a rank deficiency.
    pub epsilon: std::result::Result<f64, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloResult {
    pub trials: Vec<TrialOutcome>,
}

impl MonteCarloResult {
    pub fn successes(&self) -> impl Iterator<Item = f64> + '_ {
        self.trials.iter().filter_map(|t| t.epsilon.as_ref().ok().copied())
    }

    pub fn failures(&self) -> usize {
        self.trials.iter().filter(|t| t.epsilon.is_err()).count()
    }

    /// Arithmetic mean over successful trials, `NaN` when none succeeded.
    pub fn mean(&self) -> f64 {
        let (sum, count) = self.successes().fold((0.0, 0usize), |(s, c), e| (s + e, c + 1));
        if count == 0 {
            f64::NAN
        } else {
            sum / count as f64
        }
    }

    /// Standard error of the mean (sample standard deviation / √count).
    pub fn standard_error(&self) -> f64 {
        let values: Vec<f64> = self.successes().collect();
        let count = values.len();
        if count < 2 {
            return 0.0;
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        (var / count as f64).sqrt()
    }

    pub fn median(&self) -> f64 {
        let mut values: Vec<f64> = self.successes().collect();
        if values.is_empty() {
            return f64::NAN;
        }
        values.sort_by(f64::total_cmp);
        let mid = values.len() / 2;
        if values.len() % 2 == 0 {
            0.5 * (values[mid - 1] + values[mid])
        } else {
            values[mid]
        }
    }
}

/// Independent trials on ChaCha streams `0..trials` of `seed`, run in
/// parallel and returned in trial order.
pub fn monte_carlo_error(model: &PlantModel, atk: &AttackConfig, trials: usize, seed: u64) -> Result<MonteCarloResult> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    atk.validate(model)?;
    let trials = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            TrialOutcome {
                trial,
                epsilon: identify(model, atk, &mut rng)
                    .map(|r| r.epsilon)
                    .map_err(|e| e.to_string()),
            }
        })
        .collect();
    Ok(MonteCarloResult { trials })
}
