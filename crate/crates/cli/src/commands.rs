use std::io::Write;

use encsec_core::codec::{CodecConfig, ScalingFactor};
use encsec_core::control::{run_encrypted_loop, run_plain_loop};
use encsec_core::design::{self, sic_upperbound_input, sic_upperbound_noise};
use encsec_core::identification::monte_carlo_error;
use encsec_core::modgroup::generate_group_params;
use encsec_core::{AttackConfig, CryptoAudit, DesignResult, LoopTrace, MonteCarloResult};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{config_err, RunConfig};
use crate::CliError;

pub fn design(cfg: &RunConfig) -> Result<DesignResult, CliError> {
    let req = cfg.requirement()?;
    let traces = cfg.traces()?;
    let (_, r_sigma) = cfg.input_variance()?;
    Ok(design::design(&traces, r_sigma, &req)?)
}

pub fn design_json(result: &DesignResult) -> String {
    serde_json::to_string(result).expect("plain integers serialize")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRow {
    pub n: u64,
    pub gamma_full: f64,
    pub gamma_large_n: f64,
    pub bound_input: f64,
    pub bound_noise: f64,
}

pub fn complexity_curve(cfg: &RunConfig) -> Result<Vec<CurveRow>, CliError> {
    let traces = cfg.traces()?;
    let v = cfg.variances()?;
    let (_, r_sigma) = cfg.input_variance()?;
    cfg.n_grid()?
        .into_iter()
        .map(|n| {
            Ok(CurveRow {
                n,
                gamma_full: traces.sic_full(&v, n),
                gamma_large_n: traces.sic_large_n(r_sigma, n)?,
                bound_input: sic_upperbound_input(traces.m, traces.n, r_sigma, n)?,
                bound_noise: sic_upperbound_noise(traces.m, traces.n, n)?,
            })
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(rows: &[CurveRow], w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["N", "gamma_full", "gamma_largeN", "bound_input", "bound_noise"])?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.gamma_full.to_string(),
            r.gamma_large_n.to_string(),
            r.bound_input.to_string(),
            r.bound_noise.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Monte Carlo results for one grid point.
#[derive(Clone, Debug)]
pub struct GridPoint {
    pub n: u64,
    /// Large-`N` complexity of the simulated plant.
    pub gamma: f64,
    /// Full complexity including the initial-state term.
    pub gamma_full: f64,
    pub result: MonteCarloResult,
}

#[derive(Clone, Debug)]
pub struct AttackSim {
    pub seed: u64,
    pub points: Vec<GridPoint>,
}

impl AttackSim {
    pub fn report(&self) -> String {
        let mut lines = vec![format!("seed {}", self.seed)];
        for p in &self.points {
            lines.push(format!(
                "N={:<6} mean_epsilon={:.4e} gamma={:.4e} failures={}",
                p.n,
                p.result.mean(),
                p.gamma,
                p.result.failures()
            ));
        }
        lines.join("\n")
    }
}

/// Every grid point uses the same seed; trials are ChaCha streams of it.
pub fn attack_sim(cfg: &RunConfig, seed: u64) -> Result<AttackSim, CliError> {
    let model = cfg.plant_model()?;
    let traces = cfg.simulated_traces()?;
    let v = cfg.variances()?;
    let r_sigma = v.sigma_u2 / v.sigma_w2;
    let trials = cfg.trials()?;
    let t_s = cfg.t_s()?;
    let mut points = Vec::new();
    for n in cfg.n_grid()? {
        let atk = AttackConfig::new(v.sigma_u2, n as usize, t_s);
        atk.validate(&model)
            .map_err(|e| config_err("attack.n_grid", e.to_string()))?;
        points.push(GridPoint {
            n,
            gamma: traces.sic_large_n(r_sigma, n)?,
            gamma_full: traces.sic_full(&v, n),
            result: monte_carlo_error(&model, &atk, trials, seed)?,
        });
    }
    Ok(AttackSim { seed, points })
}

/// `N,trial,epsilon,status`; `epsilon` is empty when the trial failed.
pub fn write_trials_csv<W: Write>(sim: &AttackSim, w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["N", "trial", "epsilon", "status"])?;
    for p in &sim.points {
        for t in &p.result.trials {
            let (eps, status) = match &t.epsilon {
                Ok(e) => (e.to_string(), "ok".to_string()),
                Err(msg) => (String::new(), msg.clone()),
            };
            out.write_record([p.n.to_string(), t.trial.to_string(), eps, status])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `N,mean_epsilon,gamma,gamma_full,sem,failures`.
pub fn write_summary_csv<W: Write>(sim: &AttackSim, w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["N", "mean_epsilon", "gamma", "gamma_full", "sem", "failures"])?;
    for p in &sim.points {
        out.write_record([
            p.n.to_string(),
            p.result.mean().to_string(),
            p.gamma.to_string(),
            p.gamma_full.to_string(),
            p.result.standard_error().to_string(),
            p.result.failures().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct LoopDemo {
    pub key_bits: u64,
    pub delta: f64,
    pub encrypted: LoopTrace,
    pub plain: LoopTrace,
    pub max_deviation: f64,
    pub audit: CryptoAudit,
}

impl LoopDemo {
    pub fn report(&self) -> String {
        let a = &self.audit;
        [
            format!("steps: {}", self.encrypted.len()),
            format!("key bits: {}, delta: {:e}", self.key_bits, self.delta),
            format!("max |u_enc - u_plain|: {:.6e}", self.max_deviation),
            format!("exact products: {}/{}", a.exact_products, a.products),
            format!("key updates: {}", a.key_updates),
            format!("client next-key recoveries: {}/{}", a.token_recoveries, a.key_updates),
            format!("tokens sent to controller: {}", a.tokens_sent_to_server),
            format!("controller can recover next key: {}", a.tokens_sent_to_server > 0),
        ]
        .join("\n")
    }
}

/// Key generation uses ChaCha stream 2 of `seed`; the loops use streams 0 and 1.
pub fn loop_demo(cfg: &RunConfig, seed: u64) -> Result<LoopDemo, CliError> {
    let model = cfg.plant_model()?;
    let codec = cfg.codec()?;
    let (phi, steps) = cfg.controller()?;
    if let Some(v) = phi.phi.iter().find(|v| v.abs() > codec.value_bound) {
        return Err(config_err(
            "loop.phi",
            format!("entry {v} exceeds codec.value_bound = {}", codec.value_bound),
        ));
    }
    let mut key_rng = ChaCha8Rng::seed_from_u64(seed);
    key_rng.set_stream(2);
    let params = generate_group_params(codec.key_bits, &mut key_rng)?;
    let delta = ScalingFactor::new(codec.delta).map_err(|e| config_err("codec.delta", e.to_string()))?;
    let codec_cfg = CodecConfig::new(params, delta, codec.value_bound)
        .map_err(|e| config_err("codec.value_bound", e.to_string()))?;
    let encrypted = run_encrypted_loop(&model, &phi, &codec_cfg, steps, seed)?;
    let plain = run_plain_loop(&model, &phi, steps, seed)?;
    let max_deviation = encrypted.max_input_deviation(&plain);
    let audit = encrypted.audit.unwrap_or_default();
    Ok(LoopDemo {
        key_bits: codec.key_bits,
        delta: codec.delta,
        encrypted,
        plain,
        max_deviation,
        audit,
    })
}
