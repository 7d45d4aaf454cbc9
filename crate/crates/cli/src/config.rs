//! TOML run configuration.
//!
//! A file has up to five sections. Each subcommand checks that the sections
//! it needs are present, so a design-only file can omit `[codec]` and
//! `[loop]`.
//!
//! ```toml
//! [plant]
//! n = 4
//! m = 4
//! a = 0.7071067811865476     # scalar means a * I
//! b = [[1, 0], [0, 1], ...]  # or a nested row-major array
//! psi_u = 0.5                # optional Gramian overrides
//! psi_w = 2.0
//! sigma_w2 = 0.01
//! sigma_x2 = 1.0
//!
//! [attack]
//! r_sigma = 100.0            # or sigma_u2
//! n_min = 50
//! n_max = 1600
//! n_points = 6               # or n_grid = [...]
//! trials = 50
//! seed = 2024
//!
//! [requirement]
//! gamma_c = 1e-6
//! tau_c = 315360000.0
//! upsilon = 4.42e17
//!
//! [codec]
//! delta = 1e-3
//! value_bound = 10.0
//! key_bits = 64
//!
//! [loop]
//! steps = 50
//! phi = -0.3
//! ```

use std::path::Path;

use encsec_core::{design::GramianPair, ControllerParams, PlantModel, SecurityRequirement, SystemTraces, Variances};
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_TRIALS: usize = 50;

/// Names accepted by `--preset`.
pub const PRESETS: &[(&str, &str)] = &[
    ("paper_sec6", include_str!("../presets/paper_sec6.toml")),
    ("fig3a", include_str!("../presets/fig3a.toml")),
    ("fig3b", include_str!("../presets/fig3b.toml")),
    ("fig3c", include_str!("../presets/fig3c.toml")),
    ("fig3d", include_str!("../presets/fig3d.toml")),
    ("fig3e", include_str!("../presets/fig3e.toml")),
    ("fig3f", include_str!("../presets/fig3f.toml")),
    ("fig3g", include_str!("../presets/fig3g.toml")),
    ("fig3h", include_str!("../presets/fig3h.toml")),
    ("fig3i", include_str!("../presets/fig3i.toml")),
    ("fig4a", include_str!("../presets/fig4a.toml")),
    ("fig4b", include_str!("../presets/fig4b.toml")),
    ("fig4c", include_str!("../presets/fig4c.toml")),
    ("fig4d", include_str!("../presets/fig4d.toml")),
    ("fig4e", include_str!("../presets/fig4e.toml")),
    ("fig4f", include_str!("../presets/fig4f.toml")),
];

/// Scalar `s` (meaning `s * I`) or explicit rows.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

impl MatrixSpec {
    fn build(&self, rows: usize, cols: usize, path: &str) -> Result<DMatrix<f64>, CliError> {
        let m = match self {
            MatrixSpec::Scalar(s) => DMatrix::identity(rows, cols) * *s,
            MatrixSpec::Rows(data) => {
                if data.len() != rows {
                    return Err(config_err(path, format!("expected {rows} rows, got {}", data.len())));
                }
                for (i, row) in data.iter().enumerate() {
                    if row.len() != cols {
                        return Err(config_err(
                            &format!("{path}[{i}]"),
                            format!("expected {cols} columns, got {}", row.len()),
                        ));
                    }
                }
                DMatrix::from_fn(rows, cols, |i, j| data[i][j])
            }
        };
        if m.iter().any(|v| !v.is_finite()) {
            return Err(config_err(path, "entries must be finite".into()));
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub n: usize,
    pub m: usize,
    pub a: Option<MatrixSpec>,
    pub b: Option<MatrixSpec>,
    pub psi_u: Option<MatrixSpec>,
    pub psi_w: Option<MatrixSpec>,
    pub sigma_w2: f64,
    #[serde(default = "one")]
    pub sigma_x2: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub sigma_u2: Option<f64>,
    pub r_sigma: Option<f64>,
    pub n_grid: Option<Vec<u64>>,
    pub n_min: Option<u64>,
    pub n_max: Option<u64>,
    pub n_points: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub t_s: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementSection {
    pub gamma_c: f64,
    pub tau_c: f64,
    pub upsilon: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodecSection {
    pub delta: f64,
    pub value_bound: f64,
    pub key_bits: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSection {
    pub steps: usize,
    pub phi: MatrixSpec,
}

/// Parsed file; [`RunConfig::parse`] validates every section present.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub plant: Option<PlantSection>,
    pub attack: Option<AttackSection>,
    pub requirement: Option<RequirementSection>,
    pub codec: Option<CodecSection>,
    #[serde(rename = "loop")]
    pub loop_: Option<LoopSection>,
}

pub(crate) fn config_err(path: &str, msg: String) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

fn positive(path: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(config_err(path, format!("must be a positive number, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(config_err(path, format!("must be a non-negative number, got {v}")))
    }
}

impl RunConfig {
    /// Parses and validates every section that is present.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Some(p) = &self.plant {
            if p.a.is_some() || p.b.is_some() {
                self.plant_model()?;
            }
            self.traces()?;
        }
        if self.attack.is_some() {
            self.input_variance()?;
            self.n_grid()?;
            self.trials()?;
        }
        if self.requirement.is_some() {
            self.requirement()?;
        }
        if self.codec.is_some() {
            self.codec()?;
        }
        if self.loop_.is_some() {
            self.controller()?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            CliError::Config(format!("unknown preset `{name}` (available: {})", names.join(", ")))
        })?;
        Self::parse(text)
    }

    fn plant_section(&self) -> Result<&PlantSection, CliError> {
        self.plant
            .as_ref()
            .ok_or_else(|| config_err("plant", "section is required".into()))
    }

    fn attack_section(&self) -> Result<&AttackSection, CliError> {
        self.attack
            .as_ref()
            .ok_or_else(|| config_err("attack", "section is required".into()))
    }

    fn dims(&self) -> Result<(usize, usize), CliError> {
        let p = self.plant_section()?;
        if p.n == 0 {
            return Err(config_err("plant.n", "must be at least 1".into()));
        }
        if p.m == 0 {
            return Err(config_err("plant.m", "must be at least 1".into()));
        }
        Ok((p.n, p.m))
    }

    /// Simulated plant; needs `a` and `b`.
    pub fn plant_model(&self) -> Result<PlantModel, CliError> {
        let p = self.plant_section()?;
        let (n, m) = self.dims()?;
        let a =
            p.a.as_ref()
                .ok_or_else(|| config_err("plant.a", "required to simulate the plant".into()))?
                .build(n, n, "plant.a")?;
        let b =
            p.b.as_ref()
                .ok_or_else(|| config_err("plant.b", "required to simulate the plant".into()))?
                .build(n, m, "plant.b")?;
        let sigma_w2 = non_negative("plant.sigma_w2", p.sigma_w2)?;
        let sigma_x2 = non_negative("plant.sigma_x2", p.sigma_x2)?;
        PlantModel::new(a, b, sigma_w2, sigma_x2).map_err(|e| config_err("plant.a", e.to_string()))
    }

    /// Gramian traces from `psi_u`/`psi_w` when both are given, otherwise
    /// from the Lyapunov equations of `(a, b)`.
    pub fn traces(&self) -> Result<SystemTraces, CliError> {
        let p = self.plant_section()?;
        let (n, m) = self.dims()?;
        match (&p.psi_u, &p.psi_w) {
            (Some(u), Some(w)) => {
                let psi_u = u.build(n, n, "plant.psi_u")?;
                let psi_w = w.build(n, n, "plant.psi_w")?;
                Ok(SystemTraces::new(n, m, psi_u.trace(), psi_w.trace()))
            }
            (None, None) => {
                let model = self.plant_model()?;
                let g =
                    GramianPair::from_system(model.a(), model.b()).map_err(|e| config_err("plant.a", e.to_string()))?;
                Ok(SystemTraces::from_gramians(m, &g))
            }
            (Some(_), None) => Err(config_err(
                "plant.psi_w",
                "must be given together with plant.psi_u".into(),
            )),
            (None, Some(_)) => Err(config_err(
                "plant.psi_u",
                "must be given together with plant.psi_w".into(),
            )),
        }
    }

    /// Traces of the simulated `(a, b)`, ignoring any overrides.
    pub fn simulated_traces(&self) -> Result<SystemTraces, CliError> {
        let model = self.plant_model()?;
        let g = GramianPair::from_system(model.a(), model.b()).map_err(|e| config_err("plant.a", e.to_string()))?;
        Ok(SystemTraces::from_gramians(model.m(), &g))
    }

    /// `(σ_u², R_σ)` from whichever of `sigma_u2`, `r_sigma` is set.
    pub fn input_variance(&self) -> Result<(f64, f64), CliError> {
        let p = self.plant_section()?;
        let a = self.attack_section()?;
        match (a.sigma_u2, a.r_sigma) {
            (Some(su), None) => {
                let su = positive("attack.sigma_u2", su)?;
                let sw = positive("plant.sigma_w2", p.sigma_w2)?;
                Ok((su, su / sw))
            }
            (None, Some(r)) => {
                let r = positive("attack.r_sigma", r)?;
                Ok((r * non_negative("plant.sigma_w2", p.sigma_w2)?, r))
            }
            (Some(su), Some(r)) => {
                let su = positive("attack.sigma_u2", su)?;
                let r = positive("attack.r_sigma", r)?;
                let implied = su / positive("plant.sigma_w2", p.sigma_w2)?;
                if ((implied - r) / r).abs() > 1e-9 {
                    return Err(config_err(
                        "attack.r_sigma",
                        format!("disagrees with sigma_u2 / sigma_w2 = {implied}"),
                    ));
                }
                Ok((su, r))
            }
            (None, None) => Err(config_err("attack.sigma_u2", "set sigma_u2 or r_sigma".into())),
        }
    }

    pub fn variances(&self) -> Result<Variances, CliError> {
        let p = self.plant_section()?;
        let (sigma_u2, _) = self.input_variance()?;
        Ok(Variances {
            sigma_x2: non_negative("plant.sigma_x2", p.sigma_x2)?,
            sigma_u2,
            sigma_w2: positive("plant.sigma_w2", p.sigma_w2)?,
        })
    }

    /// Explicit `n_grid`, or `n_points` log-spaced integers in `[n_min, n_max]`.
    pub fn n_grid(&self) -> Result<Vec<u64>, CliError> {
        let a = self.attack_section()?;
        let grid = match (&a.n_grid, a.n_min, a.n_max, a.n_points) {
            (Some(grid), None, None, None) => grid.clone(),
            (None, Some(lo), Some(hi), Some(points)) => {
                if lo < 2 {
                    return Err(config_err("attack.n_min", format!("must be at least 2, got {lo}")));
                }
                if hi < lo {
                    return Err(config_err("attack.n_max", format!("must be at least n_min = {lo}")));
                }
                if points == 0 {
                    return Err(config_err("attack.n_points", "must be at least 1".into()));
                }
                log_grid(lo, hi, points)
            }
            (Some(_), _, _, _) => {
                return Err(config_err(
                    "attack.n_grid",
                    "cannot be combined with n_min/n_max/n_points".into(),
                ))
            }
            _ => {
                return Err(config_err(
                    "attack.n_grid",
                    "set n_grid, or all of n_min, n_max, n_points".into(),
                ))
            }
        };
        if grid.is_empty() {
            return Err(config_err("attack.n_grid", "must not be empty".into()));
        }
        if let Some(bad) = grid.iter().find(|&&v| v < 2) {
            return Err(config_err(
                "attack.n_grid",
                format!("every N must be at least 2, got {bad}"),
            ));
        }
        Ok(grid)
    }

    pub fn trials(&self) -> Result<usize, CliError> {
        match self.attack_section()?.trials.unwrap_or(DEFAULT_TRIALS) {
            0 => Err(config_err("attack.trials", "must be at least 1".into())),
            t => Ok(t),
        }
    }

    pub fn t_s(&self) -> Result<usize, CliError> {
        Ok(self.attack_section()?.t_s)
    }

    /// `--seed`, then `attack.seed`, then the default.
    pub fn seed(&self, cli: Option<u64>) -> u64 {
        cli.or(self.attack.as_ref().and_then(|a| a.seed))
            .unwrap_or(DEFAULT_SEED)
    }

    pub fn requirement(&self) -> Result<SecurityRequirement, CliError> {
        let r = self
            .requirement
            .as_ref()
            .ok_or_else(|| config_err("requirement", "section is required".into()))?;
        SecurityRequirement::new(
            positive("requirement.gamma_c", r.gamma_c)?,
            positive("requirement.tau_c", r.tau_c)?,
            positive("requirement.upsilon", r.upsilon)?,
        )
        .map_err(|e| config_err("requirement", e.to_string()))
    }

    pub fn codec(&self) -> Result<&CodecSection, CliError> {
        let c = self
            .codec
            .as_ref()
            .ok_or_else(|| config_err("codec", "section is required".into()))?;
        positive("codec.delta", c.delta)?;
        positive("codec.value_bound", c.value_bound)?;
        if c.key_bits < 16 {
            return Err(config_err(
                "codec.key_bits",
                format!("must be at least 16, got {}", c.key_bits),
            ));
        }
        Ok(c)
    }

    pub fn controller(&self) -> Result<(ControllerParams, usize), CliError> {
        let (n, m) = self.dims()?;
        let l = self
            .loop_
            .as_ref()
            .ok_or_else(|| config_err("loop", "section is required".into()))?;
        if l.steps == 0 {
            return Err(config_err("loop.steps", "must be at least 1".into()));
        }
        let phi = l.phi.build(m, n, "loop.phi")?;
        Ok((ControllerParams::new(phi), l.steps))
    }
}

/// `points` integers spaced evenly in `ln N`, rounded and deduplicated.
pub fn log_grid(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    if points == 1 {
        return vec![lo];
    }
    let (l, h) = ((lo as f64).ln(), (hi as f64).ln());
    let mut grid: Vec<u64> = (0..points)
        .map(|i| (l + (h - l) * i as f64 / (points - 1) as f64).exp().round() as u64)
        .map(|v| v.clamp(lo, hi))
        .collect();
    grid.dedup();
    grid
}
