/// The mask-survival schedule alpha(t) over continuous time t in (0, 1].
///
/// The log-linear schedule sets the cumulative noise rate r(t) = -ln(1 - t),
/// hence alpha(t) = exp(-r(t)) = 1 - t: survival decays linearly, alpha(1) = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSchedule {
    eps: f64,
}

impl NoiseSchedule {
    pub const DEFAULT_EPS: f64 = 1e-3;

    /// The log-linear schedule with the default minimum time.
    pub fn log_linear() -> NoiseSchedule {
        NoiseSchedule {
            eps: Self::DEFAULT_EPS,
        }
    }

    pub fn with_eps(eps: f64) -> NoiseSchedule {
        NoiseSchedule { eps }
    }

    /// Probability that a token survives unmasked at time t.
    pub fn alpha(&self, t: f64) -> f64 {
        1.0 - t
    }

    /// Minimum time used when evaluating the model on clean data.
    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        NoiseSchedule::log_linear()
    }
}
