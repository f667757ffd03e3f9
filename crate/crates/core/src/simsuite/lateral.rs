use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::params::LateralNoiseConfig;

/// Cross-track tracking disturbance for one attempt: a constant bias plus
/// an Ornstein-Uhlenbeck term, added to the lateral position setpoint.
#[derive(Debug, Clone)]
pub struct LateralNoise {
    bias: f64,
    colored: f64,
    sigma: f64,
    tau: f64,
    rng: ChaCha8Rng,
}

impl LateralNoise {
    pub fn new(cfg: &LateralNoiseConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (bias, colored) = if cfg.enabled {
            let b: f64 = StandardNormal.sample(&mut rng);
            let c: f64 = StandardNormal.sample(&mut rng);
            (cfg.bias_sigma * b, cfg.ou_sigma * c)
        } else {
            (0.0, 0.0)
        };
        Self {
            bias,
            colored,
            sigma: if cfg.enabled { cfg.ou_sigma } else { 0.0 },
            tau: cfg.ou_tau,
            rng,
        }
    }

    pub fn offset(&self) -> f64 {
        self.bias + self.colored
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Advances the colored term by `dt` (exact discretization) and returns
    /// the new offset.
    pub fn step(&mut self, dt: f64) -> f64 {
        if self.sigma > 0.0 {
            let phi = (-dt / self.tau).exp();
            let n: f64 = StandardNormal.sample(&mut self.rng);
            self.colored = phi * self.colored + self.sigma * (1.0 - phi * phi).sqrt() * n;
        }
        self.offset()
    }
}
