//! Diffusion-level model parameters, cost primitives, and regime
//! classification.
//!
//! The state process is `dX = (beta - h(X)) dt + sigma dB - dU_s + dU_b` with
//! restoring drift `h(x) = delta_s x^+ - delta_b x^-` and running cost
//! `C(x) = theta_s x^+ + theta_b x^-`; blocking controls are charged `p_s`
//! and `p_b` per unit. The per-class cost thresholds
//! `T = theta / (alpha + delta)` split the parameter space into four policy
//! regimes: blocking a class is worthwhile exactly when its penalty sits
//! strictly below its threshold.

use core::fmt;

/// Validated parameter tuple of the diffusion control problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Variance rate sigma^2 (> 0).
    pub sigma2: f64,
    /// Drift beta (any real).
    pub beta: f64,
    /// Discount rate alpha (> 0).
    pub alpha: f64,
    /// Buyer-side patience hazard slope (> 0).
    pub delta_b: f64,
    /// Seller-side patience hazard slope (> 0).
    pub delta_s: f64,
    /// Buyer-side effective holding-cost slope (> 0).
    pub theta_b: f64,
    /// Seller-side effective holding-cost slope (> 0).
    pub theta_s: f64,
    /// Penalty per blocked buyer (> 0).
    pub p_b: f64,
    /// Penalty per blocked seller (> 0).
    pub p_s: f64,
}

/// Which of the four optimal-policy regimes the parameters fall in.
///
/// Boundary ties `p = T` go to the "no blocking on that side" branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `p_s >= T_s` and `p_b >= T_b`: never block.
    ZeroControl,
    /// `p_s < T_s` and `p_b < T_b`: reflect on both barriers `a* < 0 < b*`.
    TwoSided,
    /// `p_s >= T_s` and `p_b < T_b`: reflect only at a lower barrier.
    LeftReflect,
    /// `p_s < T_s` and `p_b >= T_b`: reflect only at an upper barrier.
    RightReflect,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamError {
    /// A field that must be strictly positive was not.
    NonPositive { field: &'static str, value: f64 },
    /// A field was NaN or infinite.
    NonFinite { field: &'static str, value: f64 },
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::NonPositive { field, value } => {
                write!(f, "model parameter `{field}` must be > 0, got {value}")
            }
            ParamError::NonFinite { field, value } => {
                write!(f, "model parameter `{field}` must be finite, got {value}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ParamError {}

impl ModelParams {
    /// Validates and builds the parameter tuple. All fields except `beta`
    /// must be strictly positive; everything must be finite.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sigma2: f64,
        beta: f64,
        alpha: f64,
        delta_b: f64,
        delta_s: f64,
        theta_b: f64,
        theta_s: f64,
        p_b: f64,
        p_s: f64,
    ) -> Result<Self, ParamError> {
        let positive = [
            ("sigma2", sigma2),
            ("alpha", alpha),
            ("delta_b", delta_b),
            ("delta_s", delta_s),
            ("theta_b", theta_b),
            ("theta_s", theta_s),
            ("p_b", p_b),
            ("p_s", p_s),
        ];
        for (field, value) in positive {
            if !value.is_finite() {
                return Err(ParamError::NonFinite { field, value });
            }
            if value <= 0.0 {
                return Err(ParamError::NonPositive { field, value });
            }
        }
        if !beta.is_finite() {
            return Err(ParamError::NonFinite { field: "beta", value: beta });
        }
        Ok(ModelParams { sigma2, beta, alpha, delta_b, delta_s, theta_b, theta_s, p_b, p_s })
    }

    pub fn sigma(&self) -> f64 {
        crate::math::sqrt(self.sigma2)
    }

    /// Seller-side threshold `T_s = theta_s / (alpha + delta_s)`.
    pub fn threshold_s(&self) -> f64 {
        self.theta_s / (self.alpha + self.delta_s)
    }

    /// Buyer-side threshold `T_b = theta_b / (alpha + delta_b)`.
    pub fn threshold_b(&self) -> f64 {
        self.theta_b / (self.alpha + self.delta_b)
    }

    /// Both thresholds as `(T_s, T_b)`.
    pub fn thresholds(&self) -> (f64, f64) {
        (self.threshold_s(), self.threshold_b())
    }

    pub fn classify_regime(&self) -> Regime {
        let (t_s, t_b) = self.thresholds();
        match (self.p_s >= t_s, self.p_b >= t_b) {
            (true, true) => Regime::ZeroControl,
            (false, false) => Regime::TwoSided,
            (true, false) => Regime::LeftReflect,
            (false, true) => Regime::RightReflect,
        }
    }

    /// Restoring drift `h(x) = delta_s x^+ - delta_b x^-`.
    #[inline]
    pub fn drift_h(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.delta_s * x
        } else {
            self.delta_b * x
        }
    }

    /// Holding cost `C(x) = theta_s x^+ + theta_b x^-` (convex, nonnegative).
    #[inline]
    pub fn holding_cost(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.theta_s * x
        } else {
            -self.theta_b * x
        }
    }

    /// The `x -> -x` image of the model: swaps the buyer and seller roles and
    /// negates the drift. An involution; reduces the right-reflecting regime
    /// to the left-reflecting one.
    pub fn mirror(&self) -> Self {
        ModelParams {
            sigma2: self.sigma2,
            beta: -self.beta,
            alpha: self.alpha,
            delta_b: self.delta_s,
            delta_s: self.delta_b,
            theta_b: self.theta_s,
            theta_s: self.theta_b,
            p_b: self.p_s,
            p_s: self.p_b,
        }
    }
}
