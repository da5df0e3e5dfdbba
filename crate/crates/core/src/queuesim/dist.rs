//! Sampling specifications for interarrival and patience times.
//!
//! Interarrival families are parameterized by their squared coefficient of
//! variation and scaled to a caller-supplied mean, covering scv below, equal
//! to, and above one. Patience families expose the right derivative of their
//! distribution function at zero (the abandonment hazard slope); `Never` is a
//! testing escape hatch with no abandonment at all.

use crate::math;
use crate::rng::CounterRng;

/// Interarrival-time family. The mean is supplied at sampling time (it is
/// `1/lambda^n` for the n-th system); the family fixes the shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InterarrivalSpec {
    /// scv = 1.
    Exponential,
    /// scv = 0.
    Deterministic,
    /// Sum of `k` exponential phases; scv = 1/k.
    Erlang { k: u32 },
    /// Two-phase hyperexponential with balanced means; scv > 1.
    HyperExp2 { scv: f64 },
}

impl InterarrivalSpec {
    /// Squared coefficient of variation of the family.
    pub fn scv(&self) -> f64 {
        match self {
            InterarrivalSpec::Exponential => 1.0,
            InterarrivalSpec::Deterministic => 0.0,
            InterarrivalSpec::Erlang { k } => 1.0 / *k as f64,
            InterarrivalSpec::HyperExp2 { scv } => *scv,
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            InterarrivalSpec::Erlang { k } => *k >= 1,
            InterarrivalSpec::HyperExp2 { scv } => *scv > 1.0 && scv.is_finite(),
            _ => true,
        }
    }

    /// Underlying uniform draws consumed per sample (the counter stride).
    fn draws(&self) -> u64 {
        match self {
            InterarrivalSpec::Exponential => 1,
            InterarrivalSpec::Deterministic => 0,
            InterarrivalSpec::Erlang { k } => *k as u64,
            InterarrivalSpec::HyperExp2 { .. } => 2,
        }
    }

    /// Sample the gap preceding arrival number `idx` (0-based), with the
    /// given mean. Fully counter-addressed: the same `(rng, idx)` always
    /// yields the same value.
    pub fn sample(&self, rng: &CounterRng, idx: u64, mean: f64) -> f64 {
        let base = idx * self.draws().max(1);
        match self {
            InterarrivalSpec::Exponential => -mean * math::ln(rng.uniform_at(base)),
            InterarrivalSpec::Deterministic => mean,
            InterarrivalSpec::Erlang { k } => {
                let phase_mean = mean / *k as f64;
                let mut sum = 0.0;
                for j in 0..*k as u64 {
                    sum += -phase_mean * math::ln(rng.uniform_at(base + j));
                }
                sum
            }
            InterarrivalSpec::HyperExp2 { scv } => {
                // Balanced-means parameterization: p1/lam1 = p2/lam2 = mean/2.
                let p1 = 0.5 * (1.0 + math::sqrt((scv - 1.0) / (scv + 1.0)));
                let (p, u) = (rng.uniform_at(base), rng.uniform_at(base + 1));
                let rate = if p <= p1 { 2.0 * p1 / mean } else { 2.0 * (1.0 - p1) / mean };
                -math::ln(u) / rate
            }
        }
    }
}

/// Patience-time family; `hazard` is the right derivative of the CDF at 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PatienceSpec {
    Exponential {
        hazard: f64,
    },
    /// Uniform on `[0, 1/hazard]`, so `F(h) = hazard * h` exactly near 0.
    Uniform {
        hazard: f64,
    },
    /// Infinitely patient customers (diagnostics only).
    Never,
}

impl PatienceSpec {
    /// Hazard slope `delta`; 0 for `Never`.
    pub fn delta(&self) -> f64 {
        match self {
            PatienceSpec::Exponential { hazard } | PatienceSpec::Uniform { hazard } => *hazard,
            PatienceSpec::Never => 0.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            PatienceSpec::Exponential { hazard } | PatienceSpec::Uniform { hazard } => {
                *hazard > 0.0 && hazard.is_finite()
            }
            PatienceSpec::Never => true,
        }
    }

    /// Patience draw for the customer with arrival index `idx`; `None` means
    /// the customer never abandons.
    pub fn sample(&self, rng: &CounterRng, idx: u64) -> Option<f64> {
        match self {
            PatienceSpec::Exponential { hazard } => Some(-math::ln(rng.uniform_at(idx)) / hazard),
            PatienceSpec::Uniform { hazard } => Some(rng.uniform_at(idx) / hazard),
            PatienceSpec::Never => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(spec: InterarrivalSpec, mean: f64, n: u64) -> (f64, f64) {
        let rng = CounterRng::new(1234, 0);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..n {
            let v = spec.sample(&rng, i, mean);
            sum += v;
            sumsq += v * v;
        }
        let m = sum / n as f64;
        (m, sumsq / n as f64 - m * m)
    }

    #[test]
    fn interarrival_moments_match_specs_within_one_percent() {
        let n = 1_000_000;
        let mean = 0.4;
        for spec in [
            InterarrivalSpec::Exponential,
            InterarrivalSpec::Erlang { k: 2 },
            InterarrivalSpec::Erlang { k: 4 },
            InterarrivalSpec::HyperExp2 { scv: 2.0 },
        ] {
            let (m, v) = moments(spec, mean, n);
            let want_var = spec.scv() * mean * mean;
            assert!((m - mean).abs() < 0.01 * mean, "{spec:?}: mean {m}");
            assert!((v - want_var).abs() < 0.02 * want_var.max(1e-12), "{spec:?}: var {v}");
        }
        let (m, v) = moments(InterarrivalSpec::Deterministic, mean, 1000);
        assert!((m - mean).abs() < 1e-12);
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn patience_hazard_slope_at_zero() {
        // Empirical F(h)/h for small h approaches the stated hazard.
        let rng = CounterRng::new(77, 3);
        let n = 2_000_000u64;
        for spec in
            [PatienceSpec::Exponential { hazard: 2.0 }, PatienceSpec::Uniform { hazard: 2.0 }]
        {
            let h = 0.01;
            let mut below = 0u64;
            for i in 0..n {
                if spec.sample(&rng, i).unwrap() <= h {
                    below += 1;
                }
            }
            let slope = below as f64 / n as f64 / h;
            assert!((slope - 2.0).abs() < 0.05, "{spec:?}: slope {slope}");
        }
        assert_eq!(PatienceSpec::Never.sample(&rng, 0), None);
        assert_eq!(PatienceSpec::Never.delta(), 0.0);
    }

    #[test]
    fn uniform_patience_matches_hazard_exactly_in_distribution() {
        // Uniform on [0, 1/hazard]: F(h) = hazard*h for h in range.
        let spec = PatienceSpec::Uniform { hazard: 4.0 };
        let rng = CounterRng::new(5, 9);
        for i in 0..10_000 {
            let v = spec.sample(&rng, i).unwrap();
            assert!((0.0..=0.25).contains(&v));
        }
    }
}
