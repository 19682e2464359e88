#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rate of the tuning sequence `r_{n,M}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `A · sqrt(log(Mn)/n)`
    Sqrt,
    /// `A · (log(Mn)/n)^{1/4}`, for coarser nonparametric targets.
    Quarter,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningConfig {
    pub a: f64,
    pub regime: Regime,
    pub n: usize,
    pub m: usize,
    /// When set, require `M ≤ n^γ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_cap: Option<f64>,
}

pub fn tuning_sequence(cfg: &TuningConfig) -> Result<f64> {
    if cfg.n < 2 || cfg.m < 1 || !(cfg.a > 0.0) || !cfg.a.is_finite() {
        return Err(Error::Config(alloc::format!(
            "tuning needs n >= 2, M >= 1 and A > 0 (got n = {}, M = {}, A = {})",
            cfg.n,
            cfg.m,
            cfg.a
        )));
    }
    if let Some(gamma) = cfg.gamma_cap {
        let cap = (cfg.n as f64).powf(gamma);
        if cfg.m as f64 > cap {
            return Err(Error::GammaCapExceeded { m: cfg.m, n: cfg.n, gamma, cap });
        }
    }
    let base = ((cfg.m as f64) * (cfg.n as f64)).ln() / cfg.n as f64;
    Ok(match cfg.regime {
        Regime::Sqrt => cfg.a * base.sqrt(),
        Regime::Quarter => cfg.a * base.sqrt().sqrt(),
    })
}
