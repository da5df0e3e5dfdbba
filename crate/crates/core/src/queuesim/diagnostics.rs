//! Scaled-process views and limit-relation diagnostics.
//!
//! Three relations that hold asymptotically are measured on finite systems:
//!
//! * abandonment linearity: the scaled abandonment counters track
//!   `delta * integral of the scaled queue length`,
//! * the scaled queue length tracks `lambda0 x` the scaled virtual waiting
//!   time (the asymptotic Little's law),
//! * fluid-scaled blocking `U(T)/n` vanishes.
//!
//! The virtual (offered) waiting time at `t` is the delay an infinitely
//! patient arrival would see: every customer of its class waiting at `t`
//! must leave first (their real departure times are in the log), and the
//! next opposite-class arrival after that matches the virtual customer. It
//! is a post-processing diagnostic; the simulated path is not perturbed.

use alloc::vec::Vec;

use super::{Class, EventKind, QueueConfig, QueueTrajectory};
use crate::math;

/// Scaled processes sampled on a uniform grid, plus fluid blocking totals.
#[derive(Clone, Debug)]
pub struct ScaledTrajectory {
    pub t: Vec<f64>,
    /// `X / sqrt(n)`.
    pub x_hat: Vec<f64>,
    pub g_s_hat: Vec<f64>,
    pub g_b_hat: Vec<f64>,
    pub u_s_hat: Vec<f64>,
    pub u_b_hat: Vec<f64>,
    /// `sqrt(n) x` the virtual waiting time of an infinitely patient seller.
    pub v_s_hat: Vec<f64>,
    pub v_b_hat: Vec<f64>,
    /// Fluid-scaled blocking totals `U(T) / n`.
    pub u_s_bar: f64,
    pub u_b_bar: f64,
}

/// Residuals of the three limit relations, one replication.
#[derive(Clone, Copy, Debug, Default)]
pub struct DiagnosticsReport {
    /// `sup_t |G_s_hat(t) - delta_s Int X_hat^+ ds|`.
    pub abandonment_residual_s: f64,
    /// Buyer-side analogue.
    pub abandonment_residual_b: f64,
    /// `sup over the grid of |X_hat^+ - lambda0 V_s_hat|`.
    pub littles_residual_s: f64,
    pub littles_residual_b: f64,
    /// `(U_s(T) + U_b(T)) / n`.
    pub fluid_blocking: f64,
}

/// Departure-prefix maxima for one class: for each grid time, the last
/// departure among customers arrived by then and still waiting.
struct WaitIndex {
    arrivals: Vec<f64>,
    prefix_max_dep: Vec<f64>,
}

impl WaitIndex {
    fn new(stays: &[super::Stay]) -> Self {
        let arrivals: Vec<f64> = stays.iter().map(|s| s.arrived).collect();
        let mut prefix_max_dep = Vec::with_capacity(stays.len());
        let mut m = f64::NEG_INFINITY;
        for s in stays {
            m = m.max(s.departed);
            prefix_max_dep.push(m);
        }
        WaitIndex { arrivals, prefix_max_dep }
    }

    /// Latest departure among customers with `arrived <= t`; `-inf` if none
    /// arrived yet. Customers already departed by `t` cannot raise the value
    /// above `t`, so a result `<= t` means the queue is empty at `t`.
    fn last_departure_by(&self, t: f64) -> f64 {
        let idx = self.arrivals.partition_point(|&a| a <= t);
        if idx == 0 {
            f64::NEG_INFINITY
        } else {
            self.prefix_max_dep[idx - 1]
        }
    }
}

/// Virtual waiting time at `t`: zero when the class queue is empty,
/// otherwise the gap to the first opposite-class arrival after the queue
/// content of `t` has drained. Truncated at the horizon when the log ends
/// first.
fn virtual_wait(t: f64, t_end: f64, own: &WaitIndex, opposite_arrivals: &[f64]) -> f64 {
    let drain = own.last_departure_by(t);
    if drain <= t {
        return 0.0;
    }
    if drain >= t_end {
        return t_end - t;
    }
    let idx = opposite_arrivals.partition_point(|&a| a <= drain);
    match opposite_arrivals.get(idx) {
        Some(&match_t) => match_t - t,
        None => t_end - t,
    }
}

/// Samples the diffusion-scaled processes on a uniform grid of the given
/// step (the last cell is truncated to the horizon).
pub fn scale_trajectory(
    cfg: &QueueConfig,
    traj: &QueueTrajectory,
    grid_step: f64,
) -> ScaledTrajectory {
    assert!(grid_step > 0.0);
    let sqrt_n = cfg.sqrt_n();
    let n_cells = math::ceil(traj.t_end / grid_step - 1e-9).max(1.0) as usize;
    let mut out = ScaledTrajectory {
        t: Vec::with_capacity(n_cells + 1),
        x_hat: Vec::with_capacity(n_cells + 1),
        g_s_hat: Vec::with_capacity(n_cells + 1),
        g_b_hat: Vec::with_capacity(n_cells + 1),
        u_s_hat: Vec::with_capacity(n_cells + 1),
        u_b_hat: Vec::with_capacity(n_cells + 1),
        v_s_hat: Vec::with_capacity(n_cells + 1),
        v_b_hat: Vec::with_capacity(n_cells + 1),
        u_s_bar: 0.0,
        u_b_bar: 0.0,
    };

    let sellers = WaitIndex::new(&traj.stays_s);
    let buyers = WaitIndex::new(&traj.stays_b);
    let arrivals_of = |class: Class| -> Vec<f64> {
        traj.events
            .iter()
            .filter(|e| {
                matches!(
                    e.kind,
                    EventKind::ArrivalMatched(c)
                    | EventKind::ArrivalAdmitted(c)
                    | EventKind::ArrivalBlocked(c) if c == class
                )
            })
            .map(|e| e.t)
            .collect()
    };
    let seller_arrivals = arrivals_of(Class::Seller);
    let buyer_arrivals = arrivals_of(Class::Buyer);

    let mut ev = 0usize;
    let mut state = (traj.x0, 0u64, 0u64, traj.initial_removed, 0u64); // x, g_s, g_b, u_s, u_b
    for k in 0..=n_cells {
        let t = (k as f64 * grid_step).min(traj.t_end);
        while ev < traj.events.len() && traj.events[ev].t <= t {
            let e = &traj.events[ev];
            state = (e.x, e.g_s, e.g_b, e.u_s, e.u_b);
            ev += 1;
        }
        out.t.push(t);
        out.x_hat.push(state.0 as f64 / sqrt_n);
        out.g_s_hat.push(state.1 as f64 / sqrt_n);
        out.g_b_hat.push(state.2 as f64 / sqrt_n);
        out.u_s_hat.push(state.3 as f64 / sqrt_n);
        out.u_b_hat.push(state.4 as f64 / sqrt_n);
        out.v_s_hat.push(sqrt_n * virtual_wait(t, traj.t_end, &sellers, &buyer_arrivals));
        out.v_b_hat.push(sqrt_n * virtual_wait(t, traj.t_end, &buyers, &seller_arrivals));
    }
    let n = cfg.n as f64;
    let (_, _, _, _, u_s, u_b) = traj.final_counters();
    out.u_s_bar = u_s as f64 / n;
    out.u_b_bar = u_b as f64 / n;
    out
}

/// Computes the three limit-relation residuals for one replication.
///
/// The abandonment residual is evaluated event-exactly (the integral of the
/// piecewise-constant queue length is closed-form between events); the
/// Little's-law residual is evaluated on the scaled grid.
pub fn diagnostics(cfg: &QueueConfig, traj: &QueueTrajectory, grid_step: f64) -> DiagnosticsReport {
    let sqrt_n = cfg.sqrt_n();
    let delta_s = cfg.patience_s.delta();
    let delta_b = cfg.patience_b.delta();

    // Event-exact abandonment linearity.
    let mut res_s = 0.0_f64;
    let mut res_b = 0.0_f64;
    let mut int_pos = 0.0; // integral of X_hat^+
    let mut int_neg = 0.0; // integral of X_hat^-
    let mut t_prev = 0.0;
    let mut x_prev = traj.x0;
    let mut g_s_prev = 0.0;
    let mut g_b_prev = 0.0;
    let check = |int_pos: f64, int_neg: f64, g_s: f64, g_b: f64| {
        let r_s = math::abs(g_s - delta_s * int_pos);
        let r_b = math::abs(g_b - delta_b * int_neg);
        (r_s, r_b)
    };
    for e in traj.events.iter() {
        let dt = e.t - t_prev;
        let xh = x_prev as f64 / sqrt_n;
        int_pos += xh.max(0.0) * dt;
        int_neg += (-xh).max(0.0) * dt;
        // Residual just before the jump...
        let (r_s, r_b) = check(int_pos, int_neg, g_s_prev, g_b_prev);
        res_s = res_s.max(r_s);
        res_b = res_b.max(r_b);
        // ...and just after it.
        g_s_prev = e.g_s as f64 / sqrt_n;
        g_b_prev = e.g_b as f64 / sqrt_n;
        let (r_s, r_b) = check(int_pos, int_neg, g_s_prev, g_b_prev);
        res_s = res_s.max(r_s);
        res_b = res_b.max(r_b);
        t_prev = e.t;
        x_prev = e.x;
    }
    {
        let dt = traj.t_end - t_prev;
        let xh = x_prev as f64 / sqrt_n;
        int_pos += xh.max(0.0) * dt;
        int_neg += (-xh).max(0.0) * dt;
        let (r_s, r_b) = check(int_pos, int_neg, g_s_prev, g_b_prev);
        res_s = res_s.max(r_s);
        res_b = res_b.max(r_b);
    }

    let scaled = scale_trajectory(cfg, traj, grid_step);
    // Virtual waits measured close to the horizon are truncated by the end
    // of the log, which would contaminate the sup with an artifact that does
    // not shrink with n; leave a margin generously above the typical drain
    // time.
    let little_cutoff = traj.t_end - (2.0_f64).min(0.5 * traj.t_end);
    let mut little_s = 0.0_f64;
    let mut little_b = 0.0_f64;
    for k in 0..scaled.t.len() {
        if scaled.t[k] > little_cutoff {
            break;
        }
        let xp = scaled.x_hat[k].max(0.0);
        let xm = (-scaled.x_hat[k]).max(0.0);
        little_s = little_s.max(math::abs(xp - cfg.lambda0 * scaled.v_s_hat[k]));
        little_b = little_b.max(math::abs(xm - cfg.lambda0 * scaled.v_b_hat[k]));
    }

    DiagnosticsReport {
        abandonment_residual_s: res_s,
        abandonment_residual_b: res_b,
        littles_residual_s: little_s,
        littles_residual_b: little_b,
        fluid_blocking: scaled.u_s_bar + scaled.u_b_bar,
    }
}
