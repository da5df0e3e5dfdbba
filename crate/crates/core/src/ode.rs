//! Adaptive Dormand–Prince 5(4) integration for two-dimensional systems.
//!
//! The free-boundary construction only ever integrates second-order linear
//! scalar ODEs written as first-order systems in `(W, W')`, so the integrator
//! is specialized to state type `[f64; 2]`. It supports both integration
//! directions, exact landing on caller-supplied nodes, and early stopping on
//! a state predicate (used for divergence detection).

use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Cap on |step|; `f64::INFINITY` disables it.
    pub max_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rel_tol: 1e-10, abs_tol: 1e-12, max_step: f64::INFINITY }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OdeError {
    /// Step size shrank below machine resolution at abscissa `x`.
    StepUnderflow { x: f64 },
}

impl fmt::Display for OdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OdeError::StepUnderflow { x } => {
                write!(f, "ODE step size underflow at x = {x}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for OdeError {}

/// Accepted integration nodes `(xs[k], ys[k])`.
#[derive(Clone, Debug, Default)]
pub struct OdeTrace {
    pub xs: Vec<f64>,
    pub ys: Vec<[f64; 2]>,
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th-order minus embedded 4th-order weights (error estimator).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Stepper<'a, F: Fn(f64, [f64; 2]) -> [f64; 2]> {
    f: &'a F,
    opts: OdeOptions,
    x: f64,
    y: [f64; 2],
    h: f64,
}

impl<'a, F: Fn(f64, [f64; 2]) -> [f64; 2]> Stepper<'a, F> {
    fn new(f: &'a F, x0: f64, y0: [f64; 2], direction: f64, opts: OdeOptions) -> Self {
        let h0 = 1e-4_f64.min(opts.max_step) * direction.signum();
        Stepper { f, opts, x: x0, y: y0, h: h0 }
    }

    /// One accepted step toward `x_limit` (never past it). Returns false when
    /// already at the limit.
    fn advance(&mut self, x_limit: f64) -> Result<bool, OdeError> {
        let dir = (x_limit - self.x).signum();
        if dir == 0.0 || (x_limit - self.x).abs() <= 1e-15 * (1.0 + self.x.abs()) {
            return Ok(false);
        }
        if self.h * dir <= 0.0 {
            self.h = -self.h;
        }
        loop {
            let remaining = x_limit - self.x;
            if self.h.abs() > remaining.abs() {
                self.h = remaining;
            }
            if self.h.abs() > self.opts.max_step {
                self.h = self.opts.max_step * dir;
            }
            let h = self.h;
            if h.abs() < 1e-14 * (1.0 + self.x.abs()) {
                return Err(OdeError::StepUnderflow { x: self.x });
            }
            let (x, y) = (self.x, self.y);
            let f = self.f;
            let k1 = f(x, y);
            let yt2 = [y[0] + h * A21 * k1[0], y[1] + h * A21 * k1[1]];
            let k2 = f(x + A21 * h, yt2);
            let yt3 =
                [y[0] + h * (A31 * k1[0] + A32 * k2[0]), y[1] + h * (A31 * k1[1] + A32 * k2[1])];
            let k3 = f(x + 0.3 * h, yt3);
            let yt4 = [
                y[0] + h * (A41 * k1[0] + A42 * k2[0] + A43 * k3[0]),
                y[1] + h * (A41 * k1[1] + A42 * k2[1] + A43 * k3[1]),
            ];
            let k4 = f(x + 0.8 * h, yt4);
            let yt5 = [
                y[0] + h * (A51 * k1[0] + A52 * k2[0] + A53 * k3[0] + A54 * k4[0]),
                y[1] + h * (A51 * k1[1] + A52 * k2[1] + A53 * k3[1] + A54 * k4[1]),
            ];
            let k5 = f(x + 8.0 / 9.0 * h, yt5);
            let yt6 = [
                y[0] + h * (A61 * k1[0] + A62 * k2[0] + A63 * k3[0] + A64 * k4[0] + A65 * k5[0]),
                y[1] + h * (A61 * k1[1] + A62 * k2[1] + A63 * k3[1] + A64 * k4[1] + A65 * k5[1]),
            ];
            let k6 = f(x + h, yt6);
            let y_new = [
                y[0] + h * (B1 * k1[0] + B3 * k3[0] + B4 * k4[0] + B5 * k5[0] + B6 * k6[0]),
                y[1] + h * (B1 * k1[1] + B3 * k3[1] + B4 * k4[1] + B5 * k5[1] + B6 * k6[1]),
            ];
            let k7 = f(x + h, y_new);
            let err = [
                h * (E1 * k1[0] + E3 * k3[0] + E4 * k4[0] + E5 * k5[0] + E6 * k6[0] + E7 * k7[0]),
                h * (E1 * k1[1] + E3 * k3[1] + E4 * k4[1] + E5 * k5[1] + E6 * k6[1] + E7 * k7[1]),
            ];
            let mut scaled = 0.0_f64;
            for i in 0..2 {
                let tol = self.opts.abs_tol
                    + self.opts.rel_tol * crate::math::abs(y[i]).max(crate::math::abs(y_new[i]));
                scaled = scaled.max(crate::math::abs(err[i]) / tol);
            }
            let factor = if scaled > 0.0 {
                (0.9 * crate::math::powf(scaled, -0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            if scaled <= 1.0 {
                self.x = x + h;
                self.y = y_new;
                self.h = h * factor;
                return Ok(true);
            }
            self.h = h * factor;
        }
    }
}

/// Integrates from `(x0, y0)` toward `x_end`, recording every accepted step.
///
/// `stop(x, y)` is checked after each accepted step; when it fires the trace
/// ends at that node and `stopped = true` is returned.
pub fn integrate_trace<F: Fn(f64, [f64; 2]) -> [f64; 2]>(
    f: &F,
    x0: f64,
    y0: [f64; 2],
    x_end: f64,
    opts: OdeOptions,
    stop: impl Fn(f64, [f64; 2]) -> bool,
) -> Result<(OdeTrace, bool), OdeError> {
    let mut trace = OdeTrace::default();
    trace.xs.push(x0);
    trace.ys.push(y0);
    let mut st = Stepper::new(f, x0, y0, x_end - x0, opts);
    while st.advance(x_end)? {
        trace.xs.push(st.x);
        trace.ys.push(st.y);
        if stop(st.x, st.y) {
            return Ok((trace, true));
        }
    }
    Ok((trace, false))
}

/// Integrates through `nodes` (monotone in either direction, first node is
/// the initial abscissa) and returns the state at every node.
pub fn integrate_nodes<F: Fn(f64, [f64; 2]) -> [f64; 2]>(
    f: &F,
    y0: [f64; 2],
    nodes: &[f64],
    opts: OdeOptions,
) -> Result<Vec<[f64; 2]>, OdeError> {
    debug_assert!(!nodes.is_empty());
    let mut out = Vec::with_capacity(nodes.len());
    out.push(y0);
    if nodes.len() == 1 {
        return Ok(out);
    }
    let mut st = Stepper::new(f, nodes[0], y0, nodes[nodes.len() - 1] - nodes[0], opts);
    for &target in &nodes[1..] {
        while st.advance(target)? {}
        st.x = target; // kill accumulated rounding; advance() stopped within tolerance
        out.push(st.y);
    }
    Ok(out)
}

/// Single-target convenience wrapper around [`integrate_nodes`].
pub fn integrate_to<F: Fn(f64, [f64; 2]) -> [f64; 2]>(
    f: &F,
    x0: f64,
    y0: [f64; 2],
    x_end: f64,
    opts: OdeOptions,
) -> Result<[f64; 2], OdeError> {
    if x_end == x0 {
        return Ok(y0);
    }
    Ok(integrate_nodes(f, y0, &[x0, x_end], opts)?[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> OdeOptions {
        OdeOptions { rel_tol: 1e-11, abs_tol: 1e-13, max_step: f64::INFINITY }
    }

    #[test]
    fn exponential_growth_forward_and_backward() {
        // y'' = y with y(0) = 1, y'(0) = 1 -> y = e^x.
        let f = |_x: f64, y: [f64; 2]| [y[1], y[0]];
        let y = integrate_to(&f, 0.0, [1.0, 1.0], 2.0, opts()).unwrap();
        assert!((y[0] - crate::math::exp(2.0)).abs() < 1e-9);
        let back = integrate_to(&f, 2.0, y, 0.0, opts()).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-9);
        assert!((back[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_through_nodes() {
        // y'' = -y, y(0) = 0, y'(0) = 1 -> y = sin(x).
        let f = |_x: f64, y: [f64; 2]| [y[1], -y[0]];
        let nodes: alloc::vec::Vec<f64> = (0..=100).map(|k| k as f64 * 0.05).collect();
        let ys = integrate_nodes(&f, [0.0, 1.0], &nodes, opts()).unwrap();
        for (k, y) in ys.iter().enumerate() {
            let x = nodes[k];
            assert!((y[0] - libm::sin(x)).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn trace_stops_on_predicate() {
        let f = |_x: f64, y: [f64; 2]| [y[1], y[0]];
        let (trace, stopped) =
            integrate_trace(&f, 0.0, [1.0, 1.0], 50.0, opts(), |_x, y| y[0] > 100.0).unwrap();
        assert!(stopped);
        let last = *trace.ys.last().unwrap();
        assert!(last[0] > 100.0);
        // e^x hits 100 near x = 4.6; the stop must fire well before 50.
        assert!(*trace.xs.last().unwrap() < 6.0);
    }

    #[test]
    fn variable_coefficients_match_closed_form() {
        // y' = -2x y (as a 2-system with dummy second component) -> e^{-x^2}.
        let f = |x: f64, y: [f64; 2]| [-2.0 * x * y[0], 0.0];
        let y = integrate_to(&f, 0.0, [1.0, 0.0], 3.0, opts()).unwrap();
        assert!((y[0] - crate::math::exp(-9.0)).abs() < 1e-12);
    }
}
