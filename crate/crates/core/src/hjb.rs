//! Free-boundary construction of the optimal-policy value function.
//!
//! With `W = Q'`, the dynamic-programming equation in the no-blocking region
//! becomes a second-order linear ODE with a kink at the origin:
//!
//! ```text
//! (sigma^2/2) W'' + (beta - delta_b x) W' - (alpha + delta_b) W - theta_b = 0   (x <= 0)
//! (sigma^2/2) W'' + (beta - delta_s x) W' - (alpha + delta_s) W + theta_s = 0   (x  > 0)
//! ```
//!
//! For each candidate lower barrier `a < 0`, `W_a` is shot from
//! `W_a(a) = -p_b`, `W_a'(a) = 0`. The family splits at a separatrix `c < 0`:
//! for `a < c` the solution diverges to `+inf`, for `a in (c, 0)` it has a
//! unique interior maximum `M(a)` at `r_a > 0` and then diverges to `-inf`.
//! `M` decreases continuously from `T_s` to `-p_b`, so in the two-sided
//! regime the optimal barriers are the unique `a*` with `M(a*) = p_s` and
//! `b* = r_{a*}` — where `W` touches `p_s` tangentially. In the one-sided
//! regimes the barrier is `c` itself (possibly after mirroring), and in the
//! zero-control regime `W` is glued from the two decaying homogeneous
//! solutions by smooth fit at the origin.
//!
//! `Q` is recovered from `alpha Q(0) = (sigma^2/2) W'(0) + beta W(0)` and
//! `Q' = W`, extended linearly with slopes `-p_b` / `p_s` beyond the
//! barriers.

use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::ode::{self, OdeError, OdeOptions};
use crate::params::{ModelParams, Regime};

/// Tabulation step for solution curves.
pub const TAB_STEP: f64 = 1e-3;
/// How far curves are extended beyond the barriers (constant-slope region).
const EXT_PAD: f64 = 1.5;
/// Overflow guard for the homogeneous backward integrations.
const RESCALE_LIMIT: f64 = 1e100;

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    /// Integration horizon on the positive axis (> 0).
    pub x_max: f64,
    /// Integration horizon on the negative axis (< 0).
    pub x_min: f64,
    /// Local error tolerance of the ODE integrator.
    pub ode_tol: f64,
    /// Divergence-detection magnitude.
    pub w_big: f64,
    /// Bisection tolerance on barrier abscissae.
    pub bisect_tol: f64,
    /// Cap on bisection / bracketing iterations.
    pub max_iter: u32,
}

impl SolverConfig {
    /// Derives horizons and guards from the model: solutions past the
    /// separatrix diverge super-linearly, so generous caps keep the
    /// classification robust while staying cheap.
    pub fn for_params(p: &ModelParams) -> Self {
        let (t_s, t_b) = p.thresholds();
        let x_max = 10.0_f64.max(10.0 * (math::abs(p.beta) + 1.0) / p.delta_b.min(p.delta_s));
        let w_big = (50.0 * t_s.max(t_b).max(1.0)).max(2.0 * p.p_s.max(p.p_b));
        SolverConfig {
            x_max,
            x_min: -x_max,
            ode_tol: 1e-10,
            w_big,
            bisect_tol: 1e-6,
            max_iter: 100,
        }
    }

    fn ode_opts(&self) -> OdeOptions {
        OdeOptions { rel_tol: self.ode_tol, abs_tol: self.ode_tol * 1e-2, max_step: 0.05 }
    }
}

/// A tabulated function with its first derivative.
#[derive(Clone, Debug, Default)]
pub struct Curve {
    /// Strictly increasing abscissae.
    pub grid: Vec<f64>,
    pub w: Vec<f64>,
    pub wp: Vec<f64>,
}

impl Curve {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Index of the last grid point `<= x` (clamped to the interior).
    fn bracket(&self, x: f64) -> usize {
        match self.grid.binary_search_by(|g| g.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.len() - 2),
        }
    }

    /// Linear interpolation of the value column; constant-slope extension
    /// outside the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        if self.len() == 1 {
            return self.w[0];
        }
        if x <= self.grid[0] {
            return self.w[0] + self.wp[0] * (x - self.grid[0]);
        }
        let n = self.len() - 1;
        if x >= self.grid[n] {
            return self.w[n] + self.wp[n] * (x - self.grid[n]);
        }
        let i = self.bracket(x);
        let t = (x - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.w[i] + t * (self.w[i + 1] - self.w[i])
    }

    /// Index of the grid node at the origin. All solver-produced curves place
    /// a node exactly at 0.
    fn origin_index(&self) -> usize {
        let mut best = 0;
        for (k, &x) in self.grid.iter().enumerate() {
            if math::abs(x) < math::abs(self.grid[best]) {
                best = k;
            }
        }
        debug_assert!(math::abs(self.grid[best]) < 1e-12);
        best
    }
}

/// Tail behavior of a shot `W_a` curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailClass {
    DivergesUp,
    DivergesDown,
    /// Reached the horizon without triggering the divergence guard. Measure
    /// zero in `a`; the barrier search treats it as the diverging-down side.
    Bounded,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HjbError {
    /// Integrator failure with the offending abscissa.
    Ode(OdeError),
    /// No diverging-up start was found before `64 x` the initial guess;
    /// signals `w_big` / `x_max` too small for these parameters.
    BracketNotFound { last_tried: f64 },
    /// The shot curve is monotone to the boundary; `a` lies outside `(c, 0)`.
    NoInteriorMax { a: f64 },
    /// The homogeneous decaying solution came out degenerate.
    ShootingFailure { side: &'static str },
}

impl From<OdeError> for HjbError {
    fn from(e: OdeError) -> Self {
        HjbError::Ode(e)
    }
}

impl fmt::Display for HjbError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HjbError::Ode(e) => write!(f, "{e}"),
            HjbError::BracketNotFound { last_tried } => {
                write!(f, "no diverging-up shot found down to a = {last_tried}; raise w_big/x_max")
            }
            HjbError::NoInteriorMax { a } => {
                write!(f, "W_a has no interior maximum for a = {a} (outside the separatrix range)")
            }
            HjbError::ShootingFailure { side } => {
                write!(f, "degenerate decaying homogeneous solution on the {side} side")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for HjbError {}

/// Solution bundle for one parameter set: regime, barriers, and the
/// tabulated `W` and `Q` curves (shared grid).
#[derive(Clone, Debug)]
pub struct PolicySolution {
    pub regime: Regime,
    /// Lower barrier (`a*` two-sided, `c` left-reflecting).
    pub a_star: Option<f64>,
    /// Upper barrier (`b*` two-sided, mirrored `c` right-reflecting).
    pub b_star: Option<f64>,
    /// Separatrix of the shot family, when one was computed.
    pub c: Option<f64>,
    pub w_curve: Curve,
    pub q_curve: Curve,
    /// Smooth-fit constants (zero-control regime only).
    pub k_s: Option<f64>,
    pub k_b: Option<f64>,
}

impl PolicySolution {
    pub fn w_at(&self, x: f64) -> f64 {
        self.w_curve.value_at(x)
    }

    pub fn q_at(&self, x: f64) -> f64 {
        self.q_curve.value_at(x)
    }

    /// Value at the origin.
    pub fn q0(&self) -> f64 {
        self.q_curve.w[self.q_curve.origin_index()]
    }

    /// Active reflection barriers as `(lower, upper)`.
    pub fn reflection_barriers(&self) -> (Option<f64>, Option<f64>) {
        match self.regime {
            Regime::ZeroControl => (None, None),
            Regime::TwoSided => (self.a_star, self.b_star),
            Regime::LeftReflect => (self.a_star, None),
            Regime::RightReflect => (None, self.b_star),
        }
    }
}

// ---------------------------------------------------------------------------
// ODE right-hand sides
// ---------------------------------------------------------------------------

/// Inhomogeneous equation on the buyer side (x <= 0).
fn rhs_left(p: &ModelParams) -> impl Fn(f64, [f64; 2]) -> [f64; 2] + '_ {
    let two_over_s2 = 2.0 / p.sigma2;
    move |x, y| {
        let wpp = ((p.alpha + p.delta_b) * y[0] + p.theta_b - (p.beta - p.delta_b * x) * y[1])
            * two_over_s2;
        [y[1], wpp]
    }
}

/// Inhomogeneous equation on the seller side (x >= 0).
fn rhs_right(p: &ModelParams) -> impl Fn(f64, [f64; 2]) -> [f64; 2] + '_ {
    let two_over_s2 = 2.0 / p.sigma2;
    move |x, y| {
        let wpp = ((p.alpha + p.delta_s) * y[0] - p.theta_s - (p.beta - p.delta_s * x) * y[1])
            * two_over_s2;
        [y[1], wpp]
    }
}

/// Homogeneous equation on the buyer side.
fn hom_left(p: &ModelParams) -> impl Fn(f64, [f64; 2]) -> [f64; 2] + '_ {
    let two_over_s2 = 2.0 / p.sigma2;
    move |x, y| {
        let upp = ((p.alpha + p.delta_b) * y[0] - (p.beta - p.delta_b * x) * y[1]) * two_over_s2;
        [y[1], upp]
    }
}

/// Homogeneous equation on the seller side.
fn hom_right(p: &ModelParams) -> impl Fn(f64, [f64; 2]) -> [f64; 2] + '_ {
    let two_over_s2 = 2.0 / p.sigma2;
    move |x, y| {
        let upp = ((p.alpha + p.delta_s) * y[0] - (p.beta - p.delta_s * x) * y[1]) * two_over_s2;
        [y[1], upp]
    }
}

// ---------------------------------------------------------------------------
// Shot family W_a
// ---------------------------------------------------------------------------

/// Integrates `W_a` from `(a, -p_b, 0)` across the origin up to `cfg.x_max`,
/// stopping once `|W| > w_big`. Nodes are the integrator's accepted steps.
pub fn integrate_wa(a: f64, p: &ModelParams, cfg: &SolverConfig) -> Result<Curve, HjbError> {
    assert!(a < 0.0, "shot start must be negative");
    let opts = cfg.ode_opts();
    let big = cfg.w_big;
    let mut curve = Curve::default();

    let (left, stopped) =
        ode::integrate_trace(&rhs_left(p), a, [-p.p_b, 0.0], 0.0, opts, |_x, y| {
            math::abs(y[0]) > big
        })?;
    for (k, &x) in left.xs.iter().enumerate() {
        curve.grid.push(x);
        curve.w.push(left.ys[k][0]);
        curve.wp.push(left.ys[k][1]);
    }
    if stopped {
        return Ok(curve);
    }

    let y0 = *left.ys.last().unwrap();
    let (right, _) = ode::integrate_trace(&rhs_right(p), 0.0, y0, cfg.x_max, opts, |_x, y| {
        math::abs(y[0]) > big
    })?;
    for (k, &x) in right.xs.iter().enumerate().skip(1) {
        curve.grid.push(x);
        curve.w.push(right.ys[k][0]);
        curve.wp.push(right.ys[k][1]);
    }
    Ok(curve)
}

/// Classifies the tail of a curve produced by [`integrate_wa`].
pub fn classify_tail(curve: &Curve, _p: &ModelParams, cfg: &SolverConfig) -> TailClass {
    let last = *curve.w.last().unwrap();
    if last > cfg.w_big {
        TailClass::DivergesUp
    } else if last < -cfg.w_big {
        TailClass::DivergesDown
    } else {
        TailClass::Bounded
    }
}

fn classify_a(a: f64, p: &ModelParams, cfg: &SolverConfig) -> Result<TailClass, HjbError> {
    Ok(classify_tail(&integrate_wa(a, p, cfg)?, p, cfg))
}

/// Locates the separatrix `c < 0` splitting diverging-up from diverging-down
/// shots, to within `bisect_tol`.
pub fn find_c(p: &ModelParams, cfg: &SolverConfig) -> Result<f64, HjbError> {
    // Small |a| diverges down; walk toward 0 if the initial probe does not.
    let mut a_down = -16.0 * cfg.bisect_tol;
    let mut tries = 0;
    while classify_a(a_down, p, cfg)? != TailClass::DivergesDown {
        a_down *= 0.5;
        tries += 1;
        if tries > cfg.max_iter {
            return Err(HjbError::BracketNotFound { last_tried: a_down });
        }
    }
    // Large |a| diverges up; double outward from -1.
    let mut a_up = -1.0;
    while classify_a(a_up, p, cfg)? != TailClass::DivergesUp {
        a_up *= 2.0;
        if a_up < -64.0 {
            return Err(HjbError::BracketNotFound { last_tried: a_up });
        }
    }
    let mut iter = 0;
    while a_down - a_up > cfg.bisect_tol && iter < cfg.max_iter {
        let mid = 0.5 * (a_up + a_down);
        // Bounded is measure zero in a; bracket it with the down side.
        if classify_a(mid, p, cfg)? == TailClass::DivergesUp {
            a_up = mid;
        } else {
            a_down = mid;
        }
        iter += 1;
    }
    Ok(0.5 * (a_up + a_down))
}

/// Maximum of the shot curve and its location, `(M(a), r_a)`.
///
/// Requires `a` in the separatrix range `(c, 0)`; a curve that is monotone to
/// the boundary yields [`HjbError::NoInteriorMax`]. The horizon doubles
/// automatically while the curve stays bounded without an interior maximum
/// (the maximum runs off to the right as `p_s` approaches its threshold).
pub fn max_of_wa(a: f64, p: &ModelParams, cfg: &SolverConfig) -> Result<(f64, f64), HjbError> {
    let mut local = *cfg;
    for _ in 0..8 {
        let curve = integrate_wa(a, p, &local)?;
        // First sign change of W' from + to - at or right of the origin (the
        // left branch is increasing; numerical wobble there is ignored).
        let mut found = None;
        for k in 0..curve.len() - 1 {
            if curve.grid[k] >= 0.0 && curve.wp[k] > 0.0 && curve.wp[k + 1] <= 0.0 {
                found = Some(k);
                break;
            }
        }
        let Some(k) = found else {
            // Shots started within rounding of the origin peak essentially
            // at 0: the first nonnegative node already has W' <= 0.
            if let Some(i0) = curve.grid.iter().position(|&x| x >= 0.0) {
                if curve.wp[i0] <= 0.0 {
                    return Ok((curve.w[i0], 1e-12));
                }
            }
            match classify_tail(&curve, p, &local) {
                TailClass::Bounded => {
                    local.x_max *= 2.0;
                    continue;
                }
                _ => return Err(HjbError::NoInteriorMax { a }),
            }
        };
        // Refine the stationary point by bisection on W' evaluated through
        // short re-integrations from the bracketing node.
        let f = rhs_right(p);
        let opts = local.ode_opts();
        let x0 = curve.grid[k];
        debug_assert!(x0 >= 0.0, "interior maximum bracketed left of the origin");
        let y0 = [curve.w[k], curve.wp[k]];
        let (mut lo, mut hi) = (x0, curve.grid[k + 1]);
        let mut y_at = y0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let y_mid = ode::integrate_to(&f, x0, y0, mid, opts)?;
            if y_mid[1] > 0.0 {
                lo = mid;
            } else {
                hi = mid;
                y_at = y_mid;
            }
            if hi - lo < 1e-13 * (1.0 + math::abs(hi)) {
                break;
            }
        }
        let r = 0.5 * (lo + hi);
        if r > 0.9 * local.x_max {
            local.x_max *= 2.0;
            continue;
        }
        return Ok((y_at[0], r));
    }
    Err(HjbError::NoInteriorMax { a })
}

/// Locates the two-sided barriers: the unique `a*` in `(c, 0)` with
/// `M(a*) = p_s`, and `b* = r_{a*}` where the maximum is attained.
pub fn find_barriers(p: &ModelParams, cfg: &SolverConfig) -> Result<(f64, f64), HjbError> {
    let c = find_c(p, cfg)?;
    find_barriers_with_c(c, p, cfg)
}

fn find_barriers_with_c(
    c: f64,
    p: &ModelParams,
    cfg: &SolverConfig,
) -> Result<(f64, f64), HjbError> {
    debug_assert_eq!(p.classify_regime(), Regime::TwoSided);
    // M decreases from T_s (at c+) to -p_b (at 0-).
    let mut lo = c;
    let mut hi = -cfg.bisect_tol.min(1e-6);
    let mut best: Option<(f64, f64, f64)> = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let m = match max_of_wa(mid, p, cfg) {
            Ok((m, r)) => {
                if best.is_none_or(|(_, mb, _)| math::abs(m - p.p_s) < math::abs(mb - p.p_s)) {
                    best = Some((mid, m, r));
                }
                m
            }
            // Monotone to the boundary: mid fell at or left of c.
            Err(HjbError::NoInteriorMax { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if m > p.p_s {
            lo = mid;
        } else {
            hi = mid;
        }
        if let Some((_, mb, _)) = best {
            if math::abs(mb - p.p_s) <= 1e-10 && hi - lo <= cfg.bisect_tol {
                break;
            }
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let (a_star, _, b_star) = best.ok_or(HjbError::NoInteriorMax { a: 0.5 * (lo + hi) })?;
    Ok((a_star, b_star))
}

// ---------------------------------------------------------------------------
// Zero-control solution
// ---------------------------------------------------------------------------

/// One decaying homogeneous solution tabulated over `nodes` (which run from
/// the far end toward 0), normalized to 1 at the origin. Integration runs in
/// the direction where the decaying solution dominates, with periodic
/// rescaling so steep parameter ranges cannot overflow. Returns per-node
/// `(u, u')` after normalization.
fn decaying_solution<F: Fn(f64, [f64; 2]) -> [f64; 2]>(
    f: &F,
    nodes_from_far: &[f64],
    slope_far: f64,
    opts: OdeOptions,
    side: &'static str,
) -> Result<Vec<[f64; 2]>, HjbError> {
    let mut y = [1.0, slope_far];
    let mut log_scale = 0.0_f64;
    let mut raw: Vec<([f64; 2], f64)> = Vec::with_capacity(nodes_from_far.len());
    raw.push((y, log_scale));
    for w in nodes_from_far.windows(2) {
        y = ode::integrate_to(f, w[0], y, w[1], opts)?;
        let mag = math::abs(y[0]).max(math::abs(y[1]));
        if mag > RESCALE_LIMIT {
            y = [y[0] / mag, y[1] / mag];
            log_scale += math::ln(mag);
        }
        raw.push((y, log_scale));
    }
    let (y0, l0) = *raw.last().unwrap();
    if !(y0[0] > 0.0) || !y0[0].is_finite() {
        return Err(HjbError::ShootingFailure { side });
    }
    Ok(raw
        .iter()
        .map(|&(v, l)| {
            let s = math::exp(l - l0) / y0[0];
            [v[0] * s, v[1] * s]
        })
        .collect())
}

/// Smooth-fit zero-control solution: `W = k_b Phi0 - T_b` on the left and
/// `W = k_s Psi0 + T_s` on the right, pasted C^1 at the origin. Returns the
/// tabulated `W` on `[x_min, x_max]` and the constants `(k_s, k_b)`.
pub fn solve_zero_control(
    p: &ModelParams,
    cfg: &SolverConfig,
) -> Result<(Curve, f64, f64), HjbError> {
    let (t_s, t_b) = p.thresholds();
    let opts = cfg.ode_opts();

    // Decaying solutions are integrated from the far ends toward 0, where
    // the unwanted (super-exponentially growing) mode dies off. The far-end
    // slope comes from the first-order balance of the equation there.
    let right_nodes_rev = uniform_nodes(cfg.x_max, 0.0, TAB_STEP);
    let slope_psi = (p.alpha + p.delta_s) / (p.beta - p.delta_s * cfg.x_max);
    let psi = decaying_solution(&hom_right(p), &right_nodes_rev, slope_psi, opts, "seller")?;

    let left_nodes = uniform_nodes(cfg.x_min, 0.0, TAB_STEP);
    let slope_phi = (p.alpha + p.delta_b) / (p.beta - p.delta_b * cfg.x_min);
    let phi = decaying_solution(&hom_left(p), &left_nodes, slope_phi, opts, "buyer")?;

    let psi_p0 = psi.last().unwrap()[1];
    let phi_p0 = phi.last().unwrap()[1];
    if !(psi_p0 < 0.0 && phi_p0 > 0.0) {
        return Err(HjbError::ShootingFailure { side: "smooth fit" });
    }
    let k_s = -(t_s + t_b) / (1.0 - psi_p0 / phi_p0);
    let k_b = k_s * psi_p0 / phi_p0;

    let mut curve = Curve::default();
    for (k, &x) in left_nodes.iter().enumerate() {
        curve.grid.push(x);
        curve.w.push(k_b * phi[k][0] - t_b);
        curve.wp.push(k_b * phi[k][1]);
    }
    // Right nodes run x_max -> 0; append reversed, skipping the shared 0.
    for k in (0..right_nodes_rev.len() - 1).rev() {
        curve.grid.push(right_nodes_rev[k]);
        curve.w.push(k_s * psi[k][0] + t_s);
        curve.wp.push(k_s * psi[k][1]);
    }
    Ok((curve, k_s, k_b))
}

// ---------------------------------------------------------------------------
// Value assembly and the full solve
// ---------------------------------------------------------------------------

/// Antiderivative of `W` anchored by
/// `alpha Q(0) = (sigma^2/2) W'(0) + beta W(0)`, on the same grid.
/// Cell integrals use the derivative-corrected trapezoid
/// `h (w0 + w1)/2 + h^2 (w0' - w1')/12`, exact for cubics.
pub fn assemble_q(w: &Curve, p: &ModelParams) -> Curve {
    let i0 = w.origin_index();
    let q0 = (0.5 * p.sigma2 * w.wp[i0] + p.beta * w.w[i0]) / p.alpha;
    let n = w.len();
    let mut q = alloc::vec![0.0; n];
    q[i0] = q0;
    let cell = |i: usize| -> f64 {
        let h = w.grid[i + 1] - w.grid[i];
        0.5 * h * (w.w[i] + w.w[i + 1]) + h * h / 12.0 * (w.wp[i] - w.wp[i + 1])
    };
    for i in i0..n - 1 {
        q[i + 1] = q[i] + cell(i);
    }
    for i in (0..i0).rev() {
        q[i] = q[i + 1] - cell(i);
    }
    Curve { grid: w.grid.clone(), w: q, wp: w.w.clone() }
}

/// Uniform nodes from `from` to `to` with step close to `target_h`; both
/// endpoints land exactly.
fn uniform_nodes(from: f64, to: f64, target_h: f64) -> Vec<f64> {
    let span = math::abs(to - from);
    let n = (span / target_h + 0.5).max(1.0) as usize;
    let mut nodes: Vec<f64> = (0..=n).map(|k| from + (to - from) * (k as f64 / n as f64)).collect();
    nodes[0] = from;
    nodes[n] = to;
    nodes
}

/// States of `W_a` on the two tabulation segments (left of 0, right of 0).
type SegmentStates = (Vec<[f64; 2]>, Vec<[f64; 2]>);

/// Tabulates `W_a` at the given nodes (`left_nodes` from `a` to 0,
/// `right_nodes` from 0 outward).
fn wa_at_nodes(
    a: f64,
    p: &ModelParams,
    cfg: &SolverConfig,
    left_nodes: &[f64],
    right_nodes: &[f64],
) -> Result<SegmentStates, HjbError> {
    let opts = cfg.ode_opts();
    debug_assert_eq!(left_nodes[0], a);
    let left = ode::integrate_nodes(&rhs_left(p), [-p.p_b, 0.0], left_nodes, opts)?;
    let y0 = *left.last().unwrap();
    let right = if right_nodes.len() > 1 {
        ode::integrate_nodes(&rhs_right(p), y0, right_nodes, opts)?
    } else {
        alloc::vec![y0]
    };
    Ok((left, right))
}

fn push_extension_left(curve: &mut Curve, from: f64, value: f64) {
    let ext = uniform_nodes(from - EXT_PAD, from, TAB_STEP);
    for &x in &ext[..ext.len() - 1] {
        curve.grid.push(x);
        curve.w.push(value);
        curve.wp.push(0.0);
    }
}

fn push_extension_right(curve: &mut Curve, from: f64, value: f64) {
    let ext = uniform_nodes(from, from + EXT_PAD, TAB_STEP);
    for &x in &ext[1..] {
        curve.grid.push(x);
        curve.w.push(value);
        curve.wp.push(0.0);
    }
}

/// Mirrors the solver configuration along with the model.
fn mirror_cfg(cfg: &SolverConfig) -> SolverConfig {
    SolverConfig { x_max: -cfg.x_min, x_min: -cfg.x_max, ..*cfg }
}

/// Maps a solution of the mirrored model back through `x -> -x`:
/// `W(x) = -W~(-x)`, so the grid reverses, the value column flips sign and
/// the derivative column keeps it; `Q` is re-anchored with the original
/// parameters.
fn unmirror(mirrored: &PolicySolution, p: &ModelParams, regime: Regime) -> PolicySolution {
    let n = mirrored.w_curve.len();
    let mut w =
        Curve { grid: Vec::with_capacity(n), w: Vec::with_capacity(n), wp: Vec::with_capacity(n) };
    for k in (0..n).rev() {
        w.grid.push(-mirrored.w_curve.grid[k]);
        w.w.push(-mirrored.w_curve.w[k]);
        w.wp.push(mirrored.w_curve.wp[k]);
    }
    let q = assemble_q(&w, p);
    PolicySolution {
        regime,
        a_star: mirrored.b_star.map(|b| -b),
        b_star: mirrored.a_star.map(|a| -a),
        c: None,
        w_curve: w,
        q_curve: q,
        k_s: None,
        k_b: None,
    }
}

fn solve_two_sided(p: &ModelParams, cfg: &SolverConfig) -> Result<PolicySolution, HjbError> {
    let c = find_c(p, cfg)?;
    let (a_star, b_star) = find_barriers_with_c(c, p, cfg)?;
    // Forward shooting integrates the seller side in its unstable direction;
    // its error grows like exp(delta_s b*^2 / sigma^2). When that dwarfs the
    // buyer-side factor — the barriers can then sit exponentially close to
    // the separatrix — solve the mirrored model instead, which swaps the two
    // segments and turns the stiff side into the stable one.
    let stiff_fwd = p.delta_s * b_star * b_star / p.sigma2;
    let stiff_bwd = p.delta_b * a_star * a_star / p.sigma2;
    if stiff_fwd > stiff_bwd + 2.0 {
        let pm = p.mirror();
        let mirrored = solve_two_sided_oriented(&pm, &mirror_cfg(cfg))?;
        let mut sol = unmirror(&mirrored, p, Regime::TwoSided);
        // c is a property of the original orientation; both it and the
        // re-derived a* are accurate to bisect_tol, but their true gap can
        // be below that resolution, so clamp to keep the ordering c <= a*.
        let a = sol.a_star.unwrap();
        sol.c = Some(if c < a { c } else { a - cfg.bisect_tol });
        return Ok(sol);
    }
    solve_two_sided_tabulated(p, cfg, c, a_star, b_star)
}

/// Two-sided solve without the conditioning dispatch (used on the mirrored
/// model, where the orientation has already been chosen).
fn solve_two_sided_oriented(
    p: &ModelParams,
    cfg: &SolverConfig,
) -> Result<PolicySolution, HjbError> {
    let c = find_c(p, cfg)?;
    let (a_star, b_star) = find_barriers_with_c(c, p, cfg)?;
    solve_two_sided_tabulated(p, cfg, c, a_star, b_star)
}

fn solve_two_sided_tabulated(
    p: &ModelParams,
    cfg: &SolverConfig,
    c: f64,
    a_star: f64,
    b_star: f64,
) -> Result<PolicySolution, HjbError> {
    let left_nodes = uniform_nodes(a_star, 0.0, TAB_STEP);
    let right_nodes = uniform_nodes(0.0, b_star, TAB_STEP);
    let (left, right) = wa_at_nodes(a_star, p, cfg, &left_nodes, &right_nodes)?;

    let mut w = Curve::default();
    push_extension_left(&mut w, a_star, -p.p_b);
    for (k, &x) in left_nodes.iter().enumerate() {
        w.grid.push(x);
        w.w.push(left[k][0]);
        w.wp.push(left[k][1]);
    }
    for (k, &x) in right_nodes.iter().enumerate().skip(1) {
        w.grid.push(x);
        w.w.push(right[k][0]);
        w.wp.push(right[k][1]);
    }
    push_extension_right(&mut w, b_star, p.p_s);

    let q = assemble_q(&w, p);
    Ok(PolicySolution {
        regime: Regime::TwoSided,
        a_star: Some(a_star),
        b_star: Some(b_star),
        c: Some(c),
        w_curve: w,
        q_curve: q,
        k_s: None,
        k_b: None,
    })
}

fn solve_left_reflect(p: &ModelParams, cfg: &SolverConfig) -> Result<PolicySolution, HjbError> {
    let c0 = find_c(p, cfg)?;
    let t_s = p.threshold_s();
    let opts = cfg.ode_opts();

    // Beyond the origin the bounded branch is proportional to the decaying
    // homogeneous solution; tabulating it by continuing the shot itself would
    // be swamped by the unstable mode within a unit or two.
    let right_nodes_rev = uniform_nodes(cfg.x_max, 0.0, TAB_STEP);
    let slope_psi = (p.alpha + p.delta_s) / (p.beta - p.delta_s * cfg.x_max);
    let psi = decaying_solution(&hom_right(p), &right_nodes_rev, slope_psi, opts, "seller")?;
    let psi_p0 = psi.last().unwrap()[1];

    // Polish the separatrix: on it the continuation data at 0 carries no
    // growing mode, i.e. W'(0) = (W(0) - T_s) Psi0'(0). Secant iteration on
    // that defect removes the O(bisect_tol) kink the plain bisection leaves.
    let defect = |a: f64| -> Result<f64, HjbError> {
        let y = ode::integrate_to(&rhs_left(p), a, [-p.p_b, 0.0], 0.0, opts)?;
        Ok(y[1] - (y[0] - t_s) * psi_p0)
    };
    let mut a0 = c0 - 2.0 * cfg.bisect_tol;
    let mut a1 = c0 + 2.0 * cfg.bisect_tol;
    let mut g0 = defect(a0)?;
    let mut c = c0;
    for _ in 0..30 {
        let g1 = defect(a1)?;
        if g1 == g0 {
            break;
        }
        let a2 = a1 - g1 * (a1 - a0) / (g1 - g0);
        a0 = a1;
        g0 = g1;
        a1 = a2;
        c = a2;
        if math::abs(a1 - a0) < 1e-14 {
            break;
        }
    }
    // The polish must stay inside the bisection bracket.
    if math::abs(c - c0) > cfg.bisect_tol || !c.is_finite() {
        c = c0;
    }

    let left_nodes = uniform_nodes(c, 0.0, TAB_STEP);
    let left = ode::integrate_nodes(&rhs_left(p), [-p.p_b, 0.0], &left_nodes, opts)?;
    let w0 = left.last().unwrap()[0];
    let scale = w0 - t_s;

    let mut w = Curve::default();
    push_extension_left(&mut w, c, -p.p_b);
    for (k, &x) in left_nodes.iter().enumerate() {
        w.grid.push(x);
        w.w.push(left[k][0]);
        w.wp.push(left[k][1]);
    }
    for k in (0..right_nodes_rev.len() - 1).rev() {
        w.grid.push(right_nodes_rev[k]);
        w.w.push(scale * psi[k][0] + t_s);
        w.wp.push(scale * psi[k][1]);
    }

    let q = assemble_q(&w, p);
    Ok(PolicySolution {
        regime: Regime::LeftReflect,
        a_star: Some(c),
        b_star: None,
        c: Some(c),
        w_curve: w,
        q_curve: q,
        k_s: None,
        k_b: None,
    })
}

/// Full solve: classifies the regime and builds the matching solution. The
/// right-reflecting case is handled by solving the mirrored model and
/// mapping the curves back through `x -> -x`.
pub fn solve(p: &ModelParams, cfg: &SolverConfig) -> Result<PolicySolution, HjbError> {
    match p.classify_regime() {
        Regime::ZeroControl => {
            let (w, k_s, k_b) = solve_zero_control(p, cfg)?;
            let q = assemble_q(&w, p);
            Ok(PolicySolution {
                regime: Regime::ZeroControl,
                a_star: None,
                b_star: None,
                c: None,
                w_curve: w,
                q_curve: q,
                k_s: Some(k_s),
                k_b: Some(k_b),
            })
        }
        Regime::TwoSided => solve_two_sided(p, cfg),
        Regime::LeftReflect => solve_left_reflect(p, cfg),
        Regime::RightReflect => {
            let mirrored = solve_left_reflect(&p.mirror(), &mirror_cfg(cfg))?;
            Ok(unmirror(&mirrored, p, Regime::RightReflect))
        }
    }
}

/// One row per grid node: `(x, GQ + C, W + p_b, p_s - W, Q)`.
pub type HjbBranchRow = (f64, f64, f64, f64, f64);

/// Pointwise dynamic-programming branches on the solution grid. The
/// generator term uses the stored derivative pair,
/// `GQ = (sigma^2/2) W' + (beta - h) W - alpha Q`.
pub fn hjb_branches(p: &ModelParams, sol: &PolicySolution) -> Vec<HjbBranchRow> {
    let w = &sol.w_curve;
    let q = &sol.q_curve;
    let mut out = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        let x = w.grid[i];
        let gen = 0.5 * p.sigma2 * w.wp[i] + (p.beta - p.drift_h(x)) * w.w[i] - p.alpha * q.w[i]
            + p.holding_cost(x);
        out.push((x, gen, w.w[i] + p.p_b, p.p_s - w.w[i], q.w[i]));
    }
    out
}
