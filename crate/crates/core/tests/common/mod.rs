//! Shared oracles for the integration suites.
//!
//! Everything here is deliberately independent of the library's computation
//! paths: the reflection oracles are bare clamp recursions, and the
//! continuous-time-chain oracle is uniformization plus dense Gaussian
//! elimination. They are the "second route" the implementations are checked
//! against.

#![allow(dead_code)]

use matchq_core::rng::CounterRng;

/// Recursive one-clamp projection of a piecewise-constant path.
pub fn clamp_one_sided(psi: &[f64], a: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(psi.len());
    let mut phi = psi[0].max(a);
    out.push(phi);
    for k in 1..psi.len() {
        phi = (phi + (psi[k] - psi[k - 1])).max(a);
        out.push(phi);
    }
    out
}

/// Recursive two-clamp projection.
pub fn clamp_two_sided(psi: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(psi.len());
    let mut phi = psi[0].clamp(a, b);
    out.push(phi);
    for k in 1..psi.len() {
        phi = (phi + (psi[k] - psi[k - 1])).clamp(a, b);
        out.push(phi);
    }
    out
}

/// Per-step clamp against time-varying barriers.
pub fn clamp_time_varying(psi: &[f64], l: &[f64], r: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(psi.len());
    let mut phi = psi[0].clamp(l[0], r[0]);
    out.push(phi);
    for k in 1..psi.len() {
        phi = (phi + (psi[k] - psi[k - 1])).clamp(l[k], r[k]);
        out.push(phi);
    }
    out
}

/// Random +-step walk of length `n` starting at `x0`.
pub fn random_walk(rng: &CounterRng, n: usize, x0: f64, step: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(n);
    let mut x = x0;
    v.push(x);
    for k in 1..n {
        let u = rng.uniform_at(k as u64);
        x += if u < 0.5 { -step } else { step };
        v.push(x);
    }
    v
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Birth-death generator of the Markovian imbalance chain on `[m_b, m_s]`:
/// up-rate `lambda_s + delta_b x^-` (seller arrival / buyer abandonment),
/// down-rate `lambda_b + delta_s x^+`, with arrivals suppressed at the
/// respective buffer.
pub struct ImbalanceChain {
    pub m_b: i64,
    pub m_s: i64,
    pub lambda_s: f64,
    pub lambda_b: f64,
    pub delta_s: f64,
    pub delta_b: f64,
}

impl ImbalanceChain {
    pub fn size(&self) -> usize {
        (self.m_s - self.m_b + 1) as usize
    }

    pub fn index(&self, x: i64) -> usize {
        (x - self.m_b) as usize
    }

    pub fn state(&self, i: usize) -> i64 {
        self.m_b + i as i64
    }

    fn up_rate(&self, x: i64) -> f64 {
        let arrivals = if x < self.m_s { self.lambda_s } else { 0.0 };
        arrivals + self.delta_b * (-x).max(0) as f64
    }

    fn down_rate(&self, x: i64) -> f64 {
        let arrivals = if x > self.m_b { self.lambda_b } else { 0.0 };
        arrivals + self.delta_s * x.max(0) as f64
    }

    /// Dense generator matrix, row = from-state.
    pub fn generator(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            let x = self.state(i);
            let up = self.up_rate(x);
            let down = self.down_rate(x);
            if i + 1 < n {
                g[i][i + 1] = up;
            }
            if i > 0 {
                g[i][i - 1] = down;
            }
            g[i][i] = -(if i + 1 < n { up } else { 0.0 }) - (if i > 0 { down } else { 0.0 });
        }
        g
    }

    /// Transient distribution at time `t` from state `x0`, by uniformization.
    pub fn transient_law(&self, x0: i64, t: f64) -> Vec<f64> {
        let n = self.size();
        let g = self.generator();
        let mut rate_max = 0.0_f64;
        for (i, row) in g.iter().enumerate() {
            rate_max = rate_max.max(-row[i]);
        }
        let big = rate_max * 1.05 + 1.0;
        // P = I + G / big (substochastic-free by construction).
        let mut p = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                p[i][j] = g[i][j] / big + if i == j { 1.0 } else { 0.0 };
            }
        }
        let mut v = vec![0.0; n];
        v[self.index(x0)] = 1.0;
        let mut out = vec![0.0; n];
        let lt = big * t;
        let mut weight = (-lt).exp();
        let mut cum = weight;
        for j in 0..n {
            out[j] += weight * v[j];
        }
        let mut k = 1u64;
        while cum < 1.0 - 1e-13 && k < 100_000 {
            // v <- v P
            let mut next = vec![0.0; n];
            for (i, row) in p.iter().enumerate() {
                if v[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    next[j] += v[i] * row[j];
                }
            }
            v = next;
            weight *= lt / k as f64;
            cum += weight;
            for j in 0..n {
                out[j] += weight * v[j];
            }
            k += 1;
        }
        out
    }

    /// Exact discounted cost `E int_0^inf e^{-alpha t} rho(X_t) dt` from
    /// `x0`, i.e. the `x0` entry of `(alpha I - G)^{-1} rho`.
    #[allow(clippy::needless_range_loop)]
    pub fn discounted_cost(&self, x0: i64, alpha: f64, rho: &[f64]) -> f64 {
        let n = self.size();
        let g = self.generator();
        let mut a = vec![vec![0.0; n + 1]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = -g[i][j] + if i == j { alpha } else { 0.0 };
            }
            a[i][n] = rho[i];
        }
        // Gaussian elimination with partial pivoting.
        for col in 0..n {
            let mut piv = col;
            for row in col + 1..n {
                if a[row][col].abs() > a[piv][col].abs() {
                    piv = row;
                }
            }
            a.swap(col, piv);
            let d = a[col][col];
            assert!(d.abs() > 1e-14, "singular resolvent");
            for j in col..=n {
                a[col][j] /= d;
            }
            for row in 0..n {
                if row != col && a[row][col] != 0.0 {
                    let f = a[row][col];
                    for j in col..=n {
                        a[row][j] -= f * a[col][j];
                    }
                }
            }
        }
        a[self.index(x0)][n]
    }
}

/// Scaled cost rate of the chain in state `x`: holding plus expected
/// abandonment and blocking flows, all divided by `sqrt(n)`.
#[allow(clippy::too_many_arguments)]
pub fn qcp_cost_rate(
    chain: &ImbalanceChain,
    x: i64,
    n: u32,
    c_s: f64,
    c_b: f64,
    r_s: f64,
    r_b: f64,
    p_s: f64,
    p_b: f64,
) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let xh = x as f64 / sqrt_n;
    let holding = if xh >= 0.0 { c_s * xh } else { -c_b * xh };
    let abandonment =
        (r_s * chain.delta_s * x.max(0) as f64 + r_b * chain.delta_b * (-x).max(0) as f64) / sqrt_n;
    let blocking = (if x == chain.m_s { p_s * chain.lambda_s } else { 0.0 }
        + if x == chain.m_b { p_b * chain.lambda_b } else { 0.0 })
        / sqrt_n;
    holding + abandonment + blocking
}

/// Total-variation distance between two distributions on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
