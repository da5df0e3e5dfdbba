//! Discrete-event simulation of the pre-limit double-ended queue.
//!
//! Buyers and sellers arrive by independent renewal processes with rates
//! `lambda^n = lambda0 n + beta sqrt(n)`, match instantly
//! first-come-first-match, abandon after generally distributed patience
//! times, and are blocked when their queue sits at the buffer limit. The
//! state is the imbalance (sellers minus buyers); under diffusion scaling
//! `X/sqrt(n)` approaches the controlled diffusion solved by [`crate::hjb`].
//!
//! Besides raw trajectories the module provides the discounted-cost
//! estimator, the scaled-process view with virtual (offered) waiting times,
//! the limit-relation diagnostics, and the convergence study that compares
//! translated threshold policies against the diffusion value across a range
//! of `n`.

mod diagnostics;
mod dist;
mod engine;

pub use diagnostics::{diagnostics, scale_trajectory, DiagnosticsReport, ScaledTrajectory};
pub use dist::{InterarrivalSpec, PatienceSpec};
pub use engine::Stay;

use alloc::vec::Vec;
use core::fmt;

use crate::diffusion::CostEstimate;
use crate::hjb::{self, HjbError, PolicySolution, SolverConfig};
use crate::math;
use crate::params::ModelParams;
use engine::Engine;

/// Customer class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Class {
    Seller,
    Buyer,
}

/// Cost rates of the pre-limit system. Holding and abandonment enter
/// separately here; their combination `theta = c + r delta` is a property of
/// the limit, not of the estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostRates {
    pub c_s: f64,
    pub c_b: f64,
    pub r_s: f64,
    pub r_b: f64,
    pub p_s: f64,
    pub p_b: f64,
    pub alpha: f64,
}

/// Description of the n-th system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueueConfig {
    /// Scale parameter.
    pub n: u32,
    /// Base arrival rate; both classes arrive at `lambda0 n + beta sqrt(n)`.
    pub lambda0: f64,
    pub beta_b: f64,
    pub beta_s: f64,
    pub interarrival_b: InterarrivalSpec,
    pub interarrival_s: InterarrivalSpec,
    pub patience_b: PatienceSpec,
    pub patience_s: PatienceSpec,
    pub costs: CostRates,
    /// Scaled initial imbalance; the initial count is `round(x0_hat sqrt n)`
    /// sellers (nonnegative, non-abandoning).
    pub x0_hat: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QueueError {
    /// A structural precondition on the configuration failed.
    Invalid { what: &'static str },
    /// The embedded diffusion solve failed (convergence study).
    Solver(HjbError),
}

impl fmt::Display for QueueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueueError::Invalid { what } => write!(f, "invalid queue configuration: {what}"),
            QueueError::Solver(e) => write!(f, "diffusion solve failed: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for QueueError {}

impl From<HjbError> for QueueError {
    fn from(e: HjbError) -> Self {
        QueueError::Solver(e)
    }
}

impl QueueConfig {
    pub fn sqrt_n(&self) -> f64 {
        math::sqrt(self.n as f64)
    }

    /// Buyer arrival rate `lambda0 n + beta_b sqrt(n)`.
    pub fn lambda_b(&self) -> f64 {
        self.lambda0 * self.n as f64 + self.beta_b * self.sqrt_n()
    }

    /// Seller arrival rate `lambda0 n + beta_s sqrt(n)`.
    pub fn lambda_s(&self) -> f64 {
        self.lambda0 * self.n as f64 + self.beta_s * self.sqrt_n()
    }

    /// Initial seller count `round(x0_hat sqrt n)`.
    pub fn initial_count(&self) -> i64 {
        math::round(self.x0_hat * self.sqrt_n()) as i64
    }

    pub fn validate(&self) -> Result<(), QueueError> {
        if self.n < 1 {
            return Err(QueueError::Invalid { what: "n must be >= 1" });
        }
        if !(self.lambda0 > 0.0) {
            return Err(QueueError::Invalid { what: "lambda0 must be > 0" });
        }
        if !(self.lambda_b() > 0.0) || !(self.lambda_s() > 0.0) {
            return Err(QueueError::Invalid { what: "arrival rates must be positive" });
        }
        if !self.interarrival_b.is_valid() || !self.interarrival_s.is_valid() {
            return Err(QueueError::Invalid { what: "interarrival spec" });
        }
        if !self.patience_b.is_valid() || !self.patience_s.is_valid() {
            return Err(QueueError::Invalid { what: "patience spec" });
        }
        if self.initial_count() < 0 {
            return Err(QueueError::Invalid { what: "initial imbalance must be >= 0" });
        }
        let c = &self.costs;
        for (name, v) in [
            ("c_s", c.c_s),
            ("c_b", c.c_b),
            ("r_s", c.r_s),
            ("r_b", c.r_b),
            ("p_s", c.p_s),
            ("p_b", c.p_b),
            ("alpha", c.alpha),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                let _ = name;
                return Err(QueueError::Invalid { what: "cost rates must be positive" });
            }
        }
        Ok(())
    }

    /// Diffusion parameters this sequence converges to:
    /// `sigma^2 = (scv_b + scv_s) lambda0`, `beta = beta_s - beta_b`,
    /// `delta` from the patience hazards, `theta = c + r delta`.
    pub fn limit_params(&self) -> Result<ModelParams, QueueError> {
        let sigma2 = (self.interarrival_b.scv() + self.interarrival_s.scv()) * self.lambda0;
        let delta_b = self.patience_b.delta();
        let delta_s = self.patience_s.delta();
        let c = &self.costs;
        ModelParams::new(
            sigma2,
            self.beta_s - self.beta_b,
            c.alpha,
            delta_b,
            delta_s,
            c.c_b + c.r_b * delta_b,
            c.c_s + c.r_s * delta_s,
            c.p_b,
            c.p_s,
        )
        .map_err(|_| QueueError::Invalid { what: "bridge to diffusion parameters" })
    }
}

/// Buffer lengths: the imbalance is confined to `[m_b, m_s]`; `None` means
/// unbounded on that side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BufferPolicy {
    /// Lower buffer (buyers), `<= -1` when finite.
    pub m_b: Option<i64>,
    /// Upper buffer (sellers), `>= 1` when finite.
    pub m_s: Option<i64>,
}

impl BufferPolicy {
    pub fn unbounded() -> Self {
        BufferPolicy { m_b: None, m_s: None }
    }

    pub fn new(m_b: Option<i64>, m_s: Option<i64>) -> Result<Self, QueueError> {
        if let Some(m) = m_b {
            if m > -1 {
                return Err(QueueError::Invalid { what: "m_b must be <= -1" });
            }
        }
        if let Some(m) = m_s {
            if m < 1 {
                return Err(QueueError::Invalid { what: "m_s must be >= 1" });
            }
        }
        Ok(BufferPolicy { m_b, m_s })
    }

    /// Translates scaled barriers onto the lattice:
    /// `m_b = -max(1, round(|a| sqrt n))`, `m_s = max(1, round(b sqrt n))`.
    pub fn translated(lower: Option<f64>, upper: Option<f64>, n: u32) -> Self {
        let sqrt_n = math::sqrt(n as f64);
        BufferPolicy {
            m_b: lower.map(|a| -(math::round(math::abs(a) * sqrt_n).max(1.0) as i64)),
            m_s: upper.map(|b| math::round(b * sqrt_n).max(1.0) as i64),
        }
    }

    /// Scaled barriers `m / sqrt(n)` as used by the diffusion comparison.
    pub fn scaled(&self, n: u32) -> (Option<f64>, Option<f64>) {
        let s = math::sqrt(n as f64);
        (self.m_b.map(|m| m as f64 / s), self.m_s.map(|m| m as f64 / s))
    }
}

/// A buffer policy evaluated along time. Constant policies implement this
/// directly; [`PiecewisePolicy`] carries a right-continuous step schedule.
pub trait BufferSchedule {
    fn policy_at(&self, t: f64) -> BufferPolicy;

    /// Whether the schedule never changes (enables stronger invariants).
    fn is_constant(&self) -> bool {
        false
    }
}

impl BufferSchedule for BufferPolicy {
    fn policy_at(&self, _t: f64) -> BufferPolicy {
        *self
    }

    fn is_constant(&self) -> bool {
        true
    }
}

/// Piecewise-constant buffer schedule: `steps[k] = (start_time, policy)`
/// applies on `[start_time, next_start)`. Admission control never evicts, so
/// a shrinking step only blocks future arrivals; the imbalance drains to the
/// new bound through matching and abandonment.
#[derive(Clone, Debug)]
pub struct PiecewisePolicy {
    steps: Vec<(f64, BufferPolicy)>,
}

impl PiecewisePolicy {
    pub fn new(steps: Vec<(f64, BufferPolicy)>) -> Result<Self, QueueError> {
        if steps.is_empty() || steps[0].0 != 0.0 {
            return Err(QueueError::Invalid { what: "schedule must start at t = 0" });
        }
        if steps.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(QueueError::Invalid { what: "schedule times must increase" });
        }
        Ok(PiecewisePolicy { steps })
    }

    pub fn steps(&self) -> &[(f64, BufferPolicy)] {
        &self.steps
    }
}

impl BufferSchedule for &PiecewisePolicy {
    fn policy_at(&self, t: f64) -> BufferPolicy {
        let idx = self.steps.partition_point(|&(s, _)| s <= t);
        self.steps[idx.saturating_sub(1)].1
    }
}

/// What happened at an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    /// The arrival matched the head of the opposite queue.
    ArrivalMatched(Class),
    /// The arrival joined its own queue.
    ArrivalAdmitted(Class),
    /// The arrival found its buffer full and was rejected.
    ArrivalBlocked(Class),
    /// A waiting customer's patience expired.
    Abandoned(Class),
}

/// One event-log row; counters are the values just after the event.
#[derive(Clone, Copy, Debug)]
pub struct EventRecord {
    pub t: f64,
    pub kind: EventKind,
    pub x: i64,
    pub a_s: u64,
    pub a_b: u64,
    pub g_s: u64,
    pub g_b: u64,
    pub u_s: u64,
    pub u_b: u64,
}

/// Full event-level output of one replication.
#[derive(Clone, Debug)]
pub struct QueueTrajectory {
    pub n: u32,
    pub t_end: f64,
    /// Imbalance before any initial removal.
    pub x0_pre: i64,
    /// Imbalance at time 0 (after initial removal).
    pub x0: i64,
    pub initial_removed: u64,
    pub events: Vec<EventRecord>,
    /// Arrival/departure instants of admitted sellers, in arrival order
    /// (initial customers first).
    pub stays_s: Vec<Stay>,
    /// Same for buyers.
    pub stays_b: Vec<Stay>,
}

impl QueueTrajectory {
    /// Final counter values `(a_s, a_b, g_s, g_b, u_s, u_b)`.
    pub fn final_counters(&self) -> (u64, u64, u64, u64, u64, u64) {
        match self.events.last() {
            Some(e) => (e.a_s, e.a_b, e.g_s, e.g_b, e.u_s, e.u_b),
            None => (0, 0, 0, 0, 0, self.initial_removed),
        }
    }

    /// Imbalance at the horizon.
    pub fn x_end(&self) -> i64 {
        self.events.last().map_or(self.x0, |e| e.x)
    }
}

/// Runs one replication and records the full event log.
pub fn simulate_queue(
    cfg: &QueueConfig,
    policy: BufferPolicy,
    t_end: f64,
    seed: u64,
) -> Result<QueueTrajectory, QueueError> {
    simulate_queue_rep(cfg, policy, t_end, seed, 0)
}

/// Same as [`simulate_queue`] with an explicit replication index (all
/// replications of one seed are mutually independent).
pub fn simulate_queue_rep(
    cfg: &QueueConfig,
    policy: BufferPolicy,
    t_end: f64,
    seed: u64,
    rep: u64,
) -> Result<QueueTrajectory, QueueError> {
    run_trajectory(cfg, policy, t_end, seed, rep)
}

/// Runs one replication under a time-varying buffer schedule.
pub fn simulate_queue_scheduled(
    cfg: &QueueConfig,
    schedule: &PiecewisePolicy,
    t_end: f64,
    seed: u64,
) -> Result<QueueTrajectory, QueueError> {
    run_trajectory(cfg, schedule, t_end, seed, 0)
}

fn run_trajectory<S: BufferSchedule>(
    cfg: &QueueConfig,
    schedule: S,
    t_end: f64,
    seed: u64,
    rep: u64,
) -> Result<QueueTrajectory, QueueError> {
    cfg.validate()?;
    let mut eng = Engine::new(cfg, schedule, t_end, seed, rep);
    let mut events = Vec::new();
    while let Some(ev) = eng.next() {
        events.push(EventRecord {
            t: ev.t,
            kind: ev.kind,
            x: eng.x,
            a_s: eng.a_s,
            a_b: eng.a_b,
            g_s: eng.g_s,
            g_b: eng.g_b,
            u_s: eng.u_s,
            u_b: eng.u_b,
        });
    }
    Ok(QueueTrajectory {
        n: cfg.n,
        t_end,
        x0_pre: eng.x0_pre,
        x0: eng.x0,
        initial_removed: eng.initial_removed,
        events,
        stays_s: eng.stays_s,
        stays_b: eng.stays_b,
    })
}

/// Diffusion-scaled discounted cost of one replication, accumulated on the
/// fly (no event log). The running cost uses the exact integral of
/// `e^{-alpha t}` over each constant-state interval; jump costs are
/// discounted at their event time.
fn replication_cost(
    cfg: &QueueConfig,
    policy: BufferPolicy,
    t_max: f64,
    seed: u64,
    rep: u64,
) -> f64 {
    let alpha = cfg.costs.alpha;
    let inv_sqrt_n = 1.0 / cfg.sqrt_n();
    let running = |x: i64| -> f64 {
        let xh = x as f64 * inv_sqrt_n;
        if xh >= 0.0 {
            cfg.costs.c_s * xh
        } else {
            -cfg.costs.c_b * xh
        }
    };
    let mut eng = Engine::new(cfg, policy, t_max, seed, rep);
    // Initial removals are seller-side blockings charged at full value.
    let mut cost = cfg.costs.p_s * eng.initial_removed as f64 * inv_sqrt_n;
    let mut x_prev = eng.x;
    let mut disc_prev = 1.0;
    while let Some(ev) = eng.next() {
        let disc = math::exp(-alpha * ev.t);
        cost += running(x_prev) * (disc_prev - disc) / alpha;
        let jump = match ev.kind {
            EventKind::Abandoned(Class::Seller) => cfg.costs.r_s,
            EventKind::Abandoned(Class::Buyer) => cfg.costs.r_b,
            EventKind::ArrivalBlocked(Class::Seller) => cfg.costs.p_s,
            EventKind::ArrivalBlocked(Class::Buyer) => cfg.costs.p_b,
            _ => 0.0,
        };
        cost += disc * jump * inv_sqrt_n;
        x_prev = eng.x;
        disc_prev = disc;
    }
    cost += running(x_prev) * (disc_prev - math::exp(-alpha * t_max)) / alpha;
    cost
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Monte Carlo estimate of the diffusion-scaled discounted cost under the
/// given buffer policy.
pub fn estimate_qcp_cost(
    cfg: &QueueConfig,
    policy: BufferPolicy,
    reps: u32,
    seed: u64,
    t_max: f64,
) -> Result<CostEstimate, QueueError> {
    cfg.validate()?;
    if reps < 2 {
        return Err(QueueError::Invalid { what: "need at least 2 replications" });
    }
    let costs: Vec<f64> =
        (0..reps).map(|r| replication_cost(cfg, policy, t_max, seed, r as u64)).collect();
    let mean = pairwise_sum(&costs) / reps as f64;
    let sq: Vec<f64> = costs.iter().map(|c| (c - mean) * (c - mean)).collect();
    let var = pairwise_sum(&sq) / (reps as f64 - 1.0);
    // Tail bound borrowed from the limit diffusion when the bridge exists:
    // the scaled process obeys the same second-moment growth.
    let tail = match cfg.limit_params() {
        Ok(p) => {
            let delta0 = p.delta_b.min(p.delta_s);
            let k = p.beta * p.beta / (2.0 * delta0) + p.sigma2;
            let theta_max = p.theta_s.max(p.theta_b);
            let x0 = cfg.x0_hat;
            theta_max
                * math::exp(-p.alpha * t_max)
                * (math::sqrt(x0 * x0 + k * t_max) / p.alpha
                    + math::sqrt(k) * math::sqrt(core::f64::consts::PI)
                        / (2.0 * p.alpha * math::sqrt(p.alpha)))
        }
        Err(_) => f64::INFINITY,
    };
    Ok(CostEstimate { mean, stderr: math::sqrt(var / reps as f64), reps, t_max, tail_bound: tail })
}

/// Which policy a convergence-study row used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolicyLabel {
    /// Barriers translated from the diffusion solution.
    Threshold,
    /// Threshold barriers shifted by `(d_lower, d_upper)` in scaled units.
    Perturbed { d_lower: f64, d_upper: f64 },
    /// No blocking at all.
    ZeroControl,
}

#[derive(Clone, Copy, Debug)]
pub struct ConvergenceRow {
    pub n: u32,
    pub label: PolicyLabel,
    pub m_b: Option<i64>,
    pub m_s: Option<i64>,
    pub mean: f64,
    pub stderr: f64,
    /// `|mean - v_ref|`.
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    /// Diffusion value `V(x0)` the costs are compared against.
    pub v_ref: f64,
    pub rows: Vec<ConvergenceRow>,
}

/// Sweeps system sizes, estimating the scaled cost under the translated
/// threshold policy, its four (or two, for one-sided regimes) barrier
/// perturbations of `+-0.1` in scaled units, and the no-blocking policy; all
/// policies at one `n` share the replication randomness.
pub fn convergence_study(
    p: &ModelParams,
    template: &QueueConfig,
    n_list: &[u32],
    reps: u32,
    seed: u64,
) -> Result<ConvergenceReport, QueueError> {
    let sol = hjb::solve(p, &SolverConfig::for_params(p))?;
    convergence_study_with_solution(&sol, template, n_list, reps, seed)
}

/// Same as [`convergence_study`] with a pre-computed diffusion solution.
pub fn convergence_study_with_solution(
    sol: &PolicySolution,
    template: &QueueConfig,
    n_list: &[u32],
    reps: u32,
    seed: u64,
) -> Result<ConvergenceReport, QueueError> {
    let (lower, upper) = sol.reflection_barriers();
    let v_ref = sol.q_at(template.x0_hat);
    let t_max = 12.0 / template.costs.alpha;
    let mut rows = Vec::new();
    for &n in n_list {
        let cfg = QueueConfig { n, ..*template };
        let mut run = |label: PolicyLabel, policy: BufferPolicy| -> Result<(), QueueError> {
            let est = estimate_qcp_cost(&cfg, policy, reps, seed, t_max)?;
            rows.push(ConvergenceRow {
                n,
                label,
                m_b: policy.m_b,
                m_s: policy.m_s,
                mean: est.mean,
                stderr: est.stderr,
                gap: math::abs(est.mean - v_ref),
            });
            Ok(())
        };
        run(PolicyLabel::Threshold, BufferPolicy::translated(lower, upper, n))?;
        let mut shifts: Vec<(f64, f64)> = Vec::new();
        match (lower, upper) {
            (Some(_), Some(_)) => {
                shifts.extend([(-0.1, -0.1), (-0.1, 0.1), (0.1, -0.1), (0.1, 0.1)])
            }
            (Some(_), None) => shifts.extend([(-0.1, 0.0), (0.1, 0.0)]),
            (None, Some(_)) => shifts.extend([(0.0, -0.1), (0.0, 0.1)]),
            (None, None) => {}
        }
        for (dl, du) in shifts {
            let policy = BufferPolicy::translated(lower.map(|a| a + dl), upper.map(|b| b + du), n);
            run(PolicyLabel::Perturbed { d_lower: dl, d_upper: du }, policy)?;
        }
        run(PolicyLabel::ZeroControl, BufferPolicy::unbounded())?;
    }
    Ok(ConvergenceReport { v_ref, rows })
}
