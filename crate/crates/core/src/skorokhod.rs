//! Reflection (Skorokhod) maps on discretized paths.
//!
//! Paths are piecewise-constant right-continuous functions on a uniform time
//! grid. On that class the sup/inf formulas for the constant-barrier maps
//! reduce to running max/min scans, and the two-sided and time-varying maps
//! evaluate in a single O(n) pass.
//!
//! The three maps:
//!
//! * [`reflect_one_sided`] — `phi(t) = psi(t) + sup_{s<=t} (a - psi(s))^+`,
//! * [`reflect_two_sided`] — the composition of the one-sided map at `a` with
//!   `Lambda_{a,b}(g)(t) = g(t) - sup_{s<=t} [ (g(s)-b)^+ ∧ inf_{u in [s,t]} (g(u)-a) ]`,
//! * [`reflect_time_varying`] — `phi = psi - Theta(psi)` with
//!   `Theta(psi)(t) = max(b(t), h(t))`,
//!   `b(t) = min( (psi(0)-r(0))^+, inf_{u<=t} (psi(u)-l(u)) )`,
//!   `h(t) = sup_{s<=t} min( psi(s)-r(s), inf_{u in [s,t]} (psi(u)-l(u)) )`.
//!
//! For piecewise-constant input all three agree with the recursive clamp
//! projection to machine precision; the integration tests check that
//! equivalence on random walks, together with the Lipschitz
//! barrier-perturbation bound and the oscillation inequality.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// A piecewise-constant right-continuous function sampled on a uniform grid.
///
/// `values[k]` is the value on `[t0 + k dt, t0 + (k+1) dt)`; the domain is
/// `[t0, t0 + (len-1) dt]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

/// Output of a reflection map: the constrained path plus the lower/upper
/// pushing processes, both nondecreasing with
/// `phi(t) = psi(t) + eta_l(t) - eta_r(t)` on the grid.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub phi: Path,
    pub eta_l: Path,
    pub eta_r: Path,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SkorokhodError {
    EmptyPath,
    BadStep {
        dt: f64,
    },
    /// Two-sided map requires `a < b`.
    InvalidBarriers {
        a: f64,
        b: f64,
    },
    /// Time-varying map requires equal `(t0, dt, len)` on all three paths.
    MisalignedGrids,
    /// Time-varying map requires `inf (r - l) > 0`.
    DegenerateInterval {
        gap: f64,
    },
    /// Oscillation/modulus window outside the path domain.
    WindowOutOfDomain,
    BadDelta {
        delta: f64,
    },
}

impl fmt::Display for SkorokhodError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkorokhodError::EmptyPath => write!(f, "path has no samples"),
            SkorokhodError::BadStep { dt } => write!(f, "grid step must be > 0, got {dt}"),
            SkorokhodError::InvalidBarriers { a, b } => {
                write!(f, "need a < b, got a={a}, b={b}")
            }
            SkorokhodError::MisalignedGrids => write!(f, "paths are on different grids"),
            SkorokhodError::DegenerateInterval { gap } => {
                write!(f, "need inf(r - l) > 0, got {gap}")
            }
            SkorokhodError::WindowOutOfDomain => write!(f, "window outside path domain"),
            SkorokhodError::BadDelta { delta } => write!(f, "delta must be > 0, got {delta}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SkorokhodError {}

impl Path {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self, SkorokhodError> {
        if values.is_empty() {
            return Err(SkorokhodError::EmptyPath);
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SkorokhodError::BadStep { dt });
        }
        Ok(Path { t0, dt, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// Index of the grid cell containing `t` (value is constant on the cell).
    fn cell(&self, t: f64) -> usize {
        let k = crate::math::floor((t - self.t0) / self.dt + 1e-12) as isize;
        k.clamp(0, self.len() as isize - 1) as usize
    }

    fn same_grid(&self, other: &Path) -> bool {
        self.t0 == other.t0 && self.dt == other.dt && self.len() == other.len()
    }

    fn like(&self, values: Vec<f64>) -> Path {
        Path { t0: self.t0, dt: self.dt, values }
    }
}

/// One-sided map at the lower barrier `a`: `phi >= a`, `eta_r == 0`.
pub fn reflect_one_sided(psi: &Path, a: f64) -> Decomposition {
    let n = psi.len();
    let mut phi = Vec::with_capacity(n);
    let mut eta_l = Vec::with_capacity(n);
    let mut running = 0.0_f64;
    for &v in &psi.values {
        running = running.max(a - v);
        phi.push(v + running);
        eta_l.push(running);
    }
    Decomposition { phi: psi.like(phi), eta_l: psi.like(eta_l), eta_r: psi.like(vec![0.0; n]) }
}

/// Two-sided map on the constant interval `[a, b]`.
///
/// Computed as `Lambda_{a,b}` applied to the one-sided output `g`. The inner
/// `sup_s min((g(s)-b)^+, inf_{[s,t]}(g-a))` admits the O(n) recursion
/// `D_k = min( max(D_{k-1}, (g_k-b)^+), g_k - a )`, because taking the min
/// with the fresh infimum term commutes with the running sup.
pub fn reflect_two_sided(psi: &Path, a: f64, b: f64) -> Result<Decomposition, SkorokhodError> {
    if !(a < b) {
        return Err(SkorokhodError::InvalidBarriers { a, b });
    }
    let lower = reflect_one_sided(psi, a);
    let g = &lower.phi.values;
    let n = g.len();

    let mut phi = Vec::with_capacity(n);
    let mut eta_l = Vec::with_capacity(n);
    let mut eta_r = Vec::with_capacity(n);

    let mut d = (g[0] - b).max(0.0).min(g[0] - a);
    let mut d_prev = d;
    phi.push(g[0] - d);
    // At k = 0 all of d is upper pushing: d = (psi(0) - b)^+ there.
    eta_r.push(d);
    eta_l.push(lower.eta_l.values[0]);
    let mut undone = 0.0_f64;

    for k in 1..n {
        let h_k = (g[k] - b).max(0.0);
        let e_k = g[k] - a;
        d = d_prev.max(h_k).min(e_k);
        phi.push(g[k] - d);
        let dd = d - d_prev;
        // Positive increments of the subtraction are pushing at b; negative
        // ones are pushing at a on top of the one-sided term.
        eta_r.push(eta_r[k - 1] + dd.max(0.0));
        undone += (-dd).max(0.0);
        eta_l.push(lower.eta_l.values[k] + undone);
        d_prev = d;
    }

    Ok(Decomposition { phi: psi.like(phi), eta_l: psi.like(eta_l), eta_r: psi.like(eta_r) })
}

/// Two-sided map on the time-dependent interval `[l(t), r(t)]`.
///
/// All three paths must share one grid and `inf(r - l)` must be positive.
pub fn reflect_time_varying(
    psi: &Path,
    l: &Path,
    r: &Path,
) -> Result<Decomposition, SkorokhodError> {
    if !psi.same_grid(l) || !psi.same_grid(r) {
        return Err(SkorokhodError::MisalignedGrids);
    }
    let mut gap = f64::INFINITY;
    for k in 0..psi.len() {
        gap = gap.min(r.values[k] - l.values[k]);
    }
    if !(gap > 0.0) {
        return Err(SkorokhodError::DegenerateInterval { gap });
    }

    let n = psi.len();
    let mut phi = Vec::with_capacity(n);
    let mut eta_l = Vec::with_capacity(n);
    let mut eta_r = Vec::with_capacity(n);

    // b(t): running min of (psi - l), capped by the initial overshoot term.
    // h(t): same recursion as the constant-barrier map, with psi - r against
    // the running infimum of psi - l.
    let e0 = psi.values[0] - l.values[0];
    let mut b_run = (psi.values[0] - r.values[0]).max(0.0).min(e0);
    let mut h_run = (psi.values[0] - r.values[0]).min(e0);
    let mut theta_prev = b_run.max(h_run);
    phi.push(psi.values[0] - theta_prev);
    eta_l.push((-theta_prev).max(0.0));
    eta_r.push(theta_prev.max(0.0));

    for k in 1..n {
        let e_k = psi.values[k] - l.values[k];
        let h_k = psi.values[k] - r.values[k];
        b_run = b_run.min(e_k);
        h_run = h_run.max(h_k).min(e_k);
        let theta = b_run.max(h_run);
        phi.push(psi.values[k] - theta);
        let dd = theta - theta_prev;
        eta_l.push(eta_l[k - 1] + (-dd).max(0.0));
        eta_r.push(eta_r[k - 1] + dd.max(0.0));
        theta_prev = theta;
    }

    Ok(Decomposition { phi: psi.like(phi), eta_l: psi.like(eta_l), eta_r: psi.like(eta_r) })
}

/// `Osc(f, [t1, t2])`: sup of `|f(t) - f(s)|` over the window, i.e. max minus
/// min of the grid values whose cells intersect `[t1, t2]`.
pub fn oscillation(f: &Path, t1: f64, t2: f64) -> Result<f64, SkorokhodError> {
    if !(t1 <= t2) || t1 < f.t0 - 1e-12 || t2 > f.end_time() + 1e-12 {
        return Err(SkorokhodError::WindowOutOfDomain);
    }
    let i1 = f.cell(t1);
    let i2 = f.cell(t2);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in &f.values[i1..=i2] {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi - lo)
}

/// Modulus of continuity `omega(f, delta, T)`: sup of `|f(t) - f(s)|` over
/// pairs with `|t - s| < delta` in `[0 v t0, T]`.
pub fn modulus(f: &Path, delta: f64, t_end: f64) -> Result<f64, SkorokhodError> {
    if !(delta > 0.0) {
        return Err(SkorokhodError::BadDelta { delta });
    }
    if t_end > f.end_time() + 1e-12 || t_end < f.t0 {
        return Err(SkorokhodError::WindowOutOfDomain);
    }
    let last = f.cell(t_end);
    // Cells i < j contain times strictly less than delta apart iff
    // (j - i - 1) dt < delta.
    let w = (crate::math::floor(delta / f.dt - 1e-9) as usize).saturating_add(1);

    // Sliding-window max minus min with monotonic deques.
    let vals = &f.values[..=last];
    let mut best = 0.0_f64;
    let mut maxq: Vec<usize> = Vec::new();
    let mut minq: Vec<usize> = Vec::new();
    let mut head_max = 0usize;
    let mut head_min = 0usize;
    for j in 0..vals.len() {
        while maxq.len() > head_max && vals[*maxq.last().unwrap()] <= vals[j] {
            maxq.pop();
        }
        maxq.push(j);
        while minq.len() > head_min && vals[*minq.last().unwrap()] >= vals[j] {
            minq.pop();
        }
        minq.push(j);
        let lo_idx = j.saturating_sub(w);
        while maxq[head_max] < lo_idx {
            head_max += 1;
        }
        while minq[head_min] < lo_idx {
            head_min += 1;
        }
        best = best.max(vals[maxq[head_max]] - vals[minq[head_min]]);
    }
    Ok(best)
}
