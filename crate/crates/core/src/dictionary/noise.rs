#[allow(unused_imports)]
use num_traits::Float;
use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Centered noise models with a closed-form bound `b ≥ E exp(|W|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// Degenerate at zero.
    Zero,
    /// Uniform on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
    /// `N(0, sigma²)` conditioned on `|W| ≤ bound`.
    TruncatedGaussian { sigma: f64, bound: f64 },
    /// Laplace with the given scale; the exponential moment is finite only
    /// for `scale < 1`.
    Laplace { scale: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            NoiseModel::Zero => true,
            NoiseModel::Uniform { half_width } => half_width > 0.0 && half_width.is_finite(),
            NoiseModel::TruncatedGaussian { sigma, bound } => {
                sigma > 0.0 && bound > 0.0 && sigma.is_finite() && bound.is_finite()
            }
            NoiseModel::Laplace { scale } => scale > 0.0 && scale < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(alloc::format!("invalid noise parameters: {self:?}")))
        }
    }

    /// Exact value of `E exp(|W|)`.
    pub fn exp_moment(&self) -> f64 {
        match *self {
            NoiseModel::Zero => 1.0,
            NoiseModel::Uniform { half_width: a } => a.exp_m1() / a,
            NoiseModel::TruncatedGaussian { sigma, bound } => {
                // ∫_{-c}^{c} e^{|w|} φ_σ(w) dw = 2 e^{σ²/2} [Φ(c/σ − σ) − Φ(−σ)]
                let mass = 2.0 * std_normal_cdf(bound / sigma) - 1.0;
                let upper = std_normal_cdf(bound / sigma - sigma) - std_normal_cdf(-sigma);
                2.0 * (0.5 * sigma * sigma).exp() * upper / mass
            }
            NoiseModel::Laplace { scale } => 1.0 / (1.0 - scale),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseModel::Zero => 0.0,
            NoiseModel::Uniform { half_width: a } => a * a / 3.0,
            NoiseModel::TruncatedGaussian { sigma, bound } => {
                let c = bound / sigma;
                let mass = 2.0 * std_normal_cdf(c) - 1.0;
                let density = (-0.5 * c * c).exp() / (2.0 * core::f64::consts::PI).sqrt();
                sigma * sigma * (1.0 - 2.0 * c * density / mass)
            }
            NoiseModel::Laplace { scale } => 2.0 * scale * scale,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::Zero => 0.0,
            NoiseModel::Uniform { half_width } => half_width * (2.0 * rng.random::<f64>() - 1.0),
            NoiseModel::TruncatedGaussian { sigma, bound } => loop {
                let z: f64 = rng.sample(StandardNormal);
                let w = sigma * z;
                if w.abs() <= bound {
                    break w;
                }
            },
            NoiseModel::Laplace { scale } => {
                let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
                -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exp_moments_closed_forms() {
        assert_eq!(NoiseModel::Zero.exp_moment(), 1.0);
        // (e - 1) / 1
        let u = NoiseModel::Uniform { half_width: 1.0 }.exp_moment();
        assert!((u - 1.718_281_828_459_045).abs() < 1e-14);
        assert!((NoiseModel::Laplace { scale: 0.5 }.exp_moment() - 2.0).abs() < 1e-15);
        // very wide truncation recovers the untruncated value 2 e^{1/2} Φ(1) for σ = 1
        let wide = NoiseModel::TruncatedGaussian { sigma: 1.0, bound: 40.0 }.exp_moment();
        assert!((wide - 2.0 * 0.5f64.exp() * 0.841_344_746_068_542_9).abs() < 1e-12);
    }

    #[test]
    fn rejects_heavy_laplace() {
        assert!(NoiseModel::Laplace { scale: 1.0 }.validate().is_err());
        assert!(NoiseModel::Uniform { half_width: -1.0 }.validate().is_err());
        assert!(NoiseModel::TruncatedGaussian { sigma: 1.0, bound: 2.0 }.validate().is_ok());
    }

    #[test]
    fn sample_moments_match_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        for model in [
            NoiseModel::Uniform { half_width: 1.5 },
            NoiseModel::TruncatedGaussian { sigma: 1.0, bound: 1.0 },
            NoiseModel::Laplace { scale: 0.4 },
        ] {
            let draws: alloc::vec::Vec<f64> = (0..n).map(|_| model.sample(&mut rng)).collect();
            let mean = draws.iter().sum::<f64>() / n as f64;
            let var = draws.iter().map(|w| w * w).sum::<f64>() / n as f64;
            let expm = draws.iter().map(|w| w.abs().exp()).sum::<f64>() / n as f64;
            assert!(mean.abs() < 0.01, "{model:?} mean {mean}");
            assert!((var - model.variance()).abs() < 0.02 * model.variance().max(0.1), "{model:?} var {var}");
            assert!((expm - model.exp_moment()).abs() < 0.02 * model.exp_moment(), "{model:?} {expm}");
        }
    }
}
