//! Run configuration: one TOML document with a `command` plus `model`,
//! `solver`, `mc`, `queue`, and `convergence` sections as the command
//! requires. Validation reports the offending field path.

// Guards of the form `!(x > 0.0)` deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::Deserialize;

use matchq_core::hjb::SolverConfig;
use matchq_core::params::ModelParams;
use matchq_core::queuesim::{CostRates, InterarrivalSpec, PatienceSpec, QueueConfig};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    pub model: Option<ModelSection>,
    pub solver: Option<SolverSection>,
    pub mc: Option<McSection>,
    pub queue: Option<QueueSection>,
    pub convergence: Option<ConvergenceSection>,
}

fn default_output_dir() -> String {
    "out".to_string()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    SimulateDcp,
    SimulateQueue,
    Convergence,
    Check,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub sigma2: f64,
    pub beta: f64,
    pub alpha: f64,
    pub delta_b: f64,
    pub delta_s: f64,
    pub theta_b: f64,
    pub theta_s: f64,
    pub p_b: f64,
    pub p_s: f64,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub x_max: Option<f64>,
    pub x_min: Option<f64>,
    pub ode_tol: Option<f64>,
    pub w_big: Option<f64>,
    pub bisect_tol: Option<f64>,
    pub max_iter: Option<u32>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub reps: u32,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_max: Option<f64>,
    pub seed: Option<u64>,
    /// Initial state for the diffusion simulation.
    #[serde(default)]
    pub x0: f64,
    /// Also write the first replication's path as CSV.
    #[serde(default)]
    pub write_path: bool,
}

fn default_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum InterarrivalSection {
    Named(NamedFamily),
    Erlang {
        #[allow(dead_code)]
        family: ErlangTag,
        k: u32,
    },
    HyperExp {
        #[allow(dead_code)]
        family: HyperTag,
        scv: f64,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedFamily {
    Exponential,
    Deterministic,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErlangTag {
    Erlang,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HyperTag {
    Hyperexp2,
}

impl InterarrivalSection {
    fn to_spec(self) -> InterarrivalSpec {
        match self {
            InterarrivalSection::Named(NamedFamily::Exponential) => InterarrivalSpec::Exponential,
            InterarrivalSection::Named(NamedFamily::Deterministic) => {
                InterarrivalSpec::Deterministic
            }
            InterarrivalSection::Erlang { k, .. } => InterarrivalSpec::Erlang { k },
            InterarrivalSection::HyperExp { scv, .. } => InterarrivalSpec::HyperExp2 { scv },
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum PatienceSection {
    Never(NeverTag),
    WithHazard { family: HazardFamily, hazard: f64 },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeverTag {
    Never,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HazardFamily {
    Exponential,
    Uniform,
}

impl PatienceSection {
    fn to_spec(self) -> PatienceSpec {
        match self {
            PatienceSection::Never(_) => PatienceSpec::Never,
            PatienceSection::WithHazard { family: HazardFamily::Exponential, hazard } => {
                PatienceSpec::Exponential { hazard }
            }
            PatienceSection::WithHazard { family: HazardFamily::Uniform, hazard } => {
                PatienceSpec::Uniform { hazard }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueSection {
    pub n: u32,
    pub lambda0: f64,
    pub beta_b: f64,
    pub beta_s: f64,
    pub interarrival_b: InterarrivalSection,
    pub interarrival_s: InterarrivalSection,
    pub patience_b: PatienceSection,
    pub patience_s: PatienceSection,
    pub c_s: f64,
    pub c_b: f64,
    pub r_s: f64,
    pub r_b: f64,
    /// Blocking penalties and discount; fall back to the model section when
    /// absent.
    pub p_s: Option<f64>,
    pub p_b: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(default)]
    pub x0_hat: f64,
    /// Buffers for `simulate-queue`; omitted means unbounded.
    pub m_b: Option<i64>,
    pub m_s: Option<i64>,
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub n_list: Vec<u32>,
    pub reps: u32,
}

/// Configuration error with the offending field path.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error at `{}`: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { path: path.to_string(), message: message.into() }
}

impl RunConfig {
    pub fn model_params(&self) -> Result<ModelParams, ConfigError> {
        let m = self.model.as_ref().ok_or_else(|| err("model", "section required"))?;
        ModelParams::new(
            m.sigma2, m.beta, m.alpha, m.delta_b, m.delta_s, m.theta_b, m.theta_s, m.p_b, m.p_s,
        )
        .map_err(|e| err("model", e.to_string()))
    }

    pub fn solver_config(&self, p: &ModelParams) -> Result<SolverConfig, ConfigError> {
        let mut cfg = SolverConfig::for_params(p);
        if let Some(s) = &self.solver {
            if let Some(v) = s.x_max {
                cfg.x_max = v;
            }
            if let Some(v) = s.x_min {
                cfg.x_min = v;
            }
            if let Some(v) = s.ode_tol {
                cfg.ode_tol = v;
            }
            if let Some(v) = s.w_big {
                cfg.w_big = v;
            }
            if let Some(v) = s.bisect_tol {
                cfg.bisect_tol = v;
            }
            if let Some(v) = s.max_iter {
                cfg.max_iter = v;
            }
        }
        if !(cfg.x_min < 0.0 && 0.0 < cfg.x_max) {
            return Err(err("solver.x_min/x_max", "need x_min < 0 < x_max"));
        }
        for (path, v) in [("solver.ode_tol", cfg.ode_tol), ("solver.bisect_tol", cfg.bisect_tol)] {
            if !(v > 0.0) {
                return Err(err(path, "must be > 0"));
            }
        }
        let (t_s, t_b) = p.thresholds();
        if cfg.w_big <= t_s.max(t_b).max(p.p_s).max(p.p_b) {
            return Err(err("solver.w_big", "must exceed the thresholds and penalties"));
        }
        Ok(cfg)
    }

    pub fn mc(&self, seed_override: Option<u64>, alpha: f64) -> Result<ResolvedMc, ConfigError> {
        let m = self.mc.as_ref().ok_or_else(|| err("mc", "section required"))?;
        if m.reps < 2 {
            return Err(err("mc.reps", "need at least 2 replications"));
        }
        if !(m.dt > 0.0) {
            return Err(err("mc.dt", "must be > 0"));
        }
        let seed = seed_override
            .or(m.seed)
            .ok_or_else(|| err("mc.seed", "required for stochastic commands"))?;
        let t_max = m.t_max.unwrap_or(12.0 / alpha);
        if !(t_max > 0.0) {
            return Err(err("mc.t_max", "must be > 0"));
        }
        Ok(ResolvedMc { reps: m.reps, dt: m.dt, t_max, seed, x0: m.x0, write_path: m.write_path })
    }

    pub fn queue_config(&self) -> Result<QueueConfig, ConfigError> {
        let q = self.queue.as_ref().ok_or_else(|| err("queue", "section required"))?;
        let model = self.model.as_ref();
        let p_s = q
            .p_s
            .or(model.map(|m| m.p_s))
            .ok_or_else(|| err("queue.p_s", "required (or provide a model section)"))?;
        let p_b = q
            .p_b
            .or(model.map(|m| m.p_b))
            .ok_or_else(|| err("queue.p_b", "required (or provide a model section)"))?;
        let alpha = q
            .alpha
            .or(model.map(|m| m.alpha))
            .ok_or_else(|| err("queue.alpha", "required (or provide a model section)"))?;
        let cfg = QueueConfig {
            n: q.n,
            lambda0: q.lambda0,
            beta_b: q.beta_b,
            beta_s: q.beta_s,
            interarrival_b: q.interarrival_b.to_spec(),
            interarrival_s: q.interarrival_s.to_spec(),
            patience_b: q.patience_b.to_spec(),
            patience_s: q.patience_s.to_spec(),
            costs: CostRates { c_s: q.c_s, c_b: q.c_b, r_s: q.r_s, r_b: q.r_b, p_s, p_b, alpha },
            x0_hat: q.x0_hat,
        };
        cfg.validate().map_err(|e| err("queue", e.to_string()))?;
        Ok(cfg)
    }

    /// For the convergence study the queue section must converge to the
    /// model: matching noise scale, drift, hazards, and effective holding
    /// costs.
    pub fn validated_bridge(&self, p: &ModelParams) -> Result<QueueConfig, ConfigError> {
        let cfg = self.queue_config()?;
        let limit = cfg.limit_params().map_err(|e| err("queue", e.to_string()))?;
        let tol = 1e-9;
        let checks = [
            ("queue: sigma^2 of the bridge", limit.sigma2, p.sigma2),
            ("queue: beta_s - beta_b", limit.beta, p.beta),
            ("queue.patience_b hazard", limit.delta_b, p.delta_b),
            ("queue.patience_s hazard", limit.delta_s, p.delta_s),
            ("queue: c_b + r_b*delta_b", limit.theta_b, p.theta_b),
            ("queue: c_s + r_s*delta_s", limit.theta_s, p.theta_s),
            ("queue.p_b", limit.p_b, p.p_b),
            ("queue.p_s", limit.p_s, p.p_s),
            ("queue.alpha", limit.alpha, p.alpha),
        ];
        for (path, got, want) in checks {
            if (got - want).abs() > tol {
                return Err(err(path, format!("bridge mismatch: {got} vs model {want}")));
            }
        }
        Ok(cfg)
    }

    pub fn convergence(&self) -> Result<&ConvergenceSection, ConfigError> {
        let c = self.convergence.as_ref().ok_or_else(|| err("convergence", "section required"))?;
        if c.n_list.is_empty() {
            return Err(err("convergence.n_list", "must be nonempty"));
        }
        if c.reps < 2 {
            return Err(err("convergence.reps", "need at least 2 replications"));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ResolvedMc {
    pub reps: u32,
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
    pub x0: f64,
    pub write_path: bool,
}
