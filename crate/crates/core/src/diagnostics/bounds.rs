//! Explicit probability bounds behind the selection-consistency argument.
//!
//! The universal constants `c1`, `c2`, `B1`, `B2` and `D` are only known to
//! exist, so they are inputs (default 1). Every value here is a function of
//! the supplied constants, not a guarantee.

#[allow(unused_imports)]
use num_traits::Float;
use core::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::coherence::DEFAULT_COHERENCE;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundParams {
    /// `b ≥ E exp(|W|)`.
    pub noise_moment: f64,
    /// `L ≥ ‖f_j‖_∞`.
    pub sup: f64,
    /// `c0 ≤ ‖f_j‖`.
    pub norm_floor: f64,
    /// `L0 ≥ E f_i² f_j²`.
    pub fourth_moment: f64,
    /// `L1 ≥ ‖f‖_∞`.
    pub f_sup: f64,
    /// `L* ≥ ‖f − f*‖_∞`.
    pub sup_gap: f64,
    /// `L(λ) = ‖f − Σ λ_j f_j‖_∞` for the vector under study.
    pub sup_gap_lambda: f64,
    pub rate_c1: f64,
    pub rate_c2: f64,
    pub b1: f64,
    pub b2: f64,
    pub d: f64,
    /// Ball constant `C_f`.
    pub c_f: f64,
    /// Coherence constant `C`.
    pub coherence: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
            noise_moment: 1.0,
            sup: 1.0,
            norm_floor: 1.0,
            fourth_moment: 1.0,
            f_sup: 1.0,
            sup_gap: 1.0,
            sup_gap_lambda: 1.0,
            rate_c1: 1.0,
            rate_c2: 1.0,
            b1: 1.0,
            b2: 1.0,
            d: 1.0,
            c_f: 1e-3,
            coherence: DEFAULT_COHERENCE,
        }
    }
}

impl BoundParams {
    /// `δ = 2 C L² r`, the slack of the empirical inner-product event.
    pub fn delta(&self, r: f64) -> f64 {
        2.0 * self.coherence * self.sup * self.sup * r
    }

    /// `c0² / (64 L²) − C_f`; the approximation-event bound needs it positive.
    pub fn sup_gap_margin(&self) -> f64 {
        self.norm_floor * self.norm_floor / (64.0 * self.sup * self.sup) - self.c_f
    }

    /// Rate constants may be zero (degenerate bounds); everything else must
    /// be strictly positive. `sup_gap_lambda` may be zero when `f` is
    /// represented exactly.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("noise_moment", self.noise_moment),
            ("sup", self.sup),
            ("norm_floor", self.norm_floor),
            ("fourth_moment", self.fourth_moment),
            ("f_sup", self.f_sup),
            ("sup_gap", self.sup_gap),
            ("b1", self.b1),
            ("b2", self.b2),
            ("d", self.d),
            ("c_f", self.c_f),
            ("coherence", self.coherence),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::Config(alloc::format!("bound constant {name} must be positive, got {v}")));
        }
        let nonneg = [("rate_c1", self.rate_c1), ("rate_c2", self.rate_c2), ("sup_gap_lambda", self.sup_gap_lambda)];
        if let Some((name, v)) = nonneg.iter().find(|(_, v)| !(*v >= 0.0)) {
            return Err(Error::Config(alloc::format!("bound constant {name} must be nonnegative, got {v}")));
        }
        Ok(())
    }
}

/// A bound as evaluated and as reported (clipped to at most 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub raw: f64,
    pub clipped: f64,
}

impl BoundValue {
    fn new(raw: f64) -> Self {
        Self { raw, clipped: raw.min(1.0) }
    }
}

/// Bernstein tail `exp(−n ε² / (2 (w² + d ε)))`.
pub fn bernstein_bound(w2: f64, d: f64, eps: f64, n: usize) -> f64 {
    (-(n as f64) * eps * eps / (2.0 * (w2 + d * eps))).exp()
}

fn rate_min(p: &BoundParams, k: usize, r: f64) -> f64 {
    let (l2, l0, k) = (p.sup * p.sup, p.fourth_moment, k as f64);
    (r * r / l0).min(r / l2).min(1.0 / (l0 * k * k)).min(1.0 / (l2 * k))
}

fn misfit_term(p: &BoundParams, k: usize, r: f64, n: usize) -> f64 {
    if p.rate_c2 == 0.0 || k == 0 {
        return 1.0;
    }
    let lam = p.sup_gap_lambda;
    (-p.rate_c2 * (k as f64) / (lam * lam) * (n as f64) * r * r).exp()
}

/// `14 count² exp(−c1 n min{r²/L0, r/L², 1/(L0 k²), 1/(L² k)}) + exp(−c2 (k/L(λ)²) n r²)`.
fn deviation_bound(p: &BoundParams, count: f64, k: usize, r: f64, n: usize) -> f64 {
    let first = 14.0 * count * count * (-p.rate_c1 * n as f64 * rate_min(p, k, r)).exp();
    first + misfit_term(p, k, r, n)
}

/// Probability that `|λ̂ − λ|₁` exceeds `B1 r M(λ)`, for a vector `λ` with
/// `M(λ) = k` nonzero entries in a dictionary of size `m`.
pub fn l1_deviation_bound(p: &BoundParams, k: usize, r: f64, n: usize, m: usize) -> BoundValue {
    BoundValue::new(deviation_bound(p, m as f64, k, r, n))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetBounds {
    /// Deviation bound at the target `λ*` over the full dictionary.
    pub pi_star: BoundValue,
    /// Deviation bound for the restricted estimate over the `k*` target
    /// functions.
    pub p_star: BoundValue,
}

pub fn target_deviation_bounds(p: &BoundParams, k_star: usize, r: f64, n: usize, m: usize) -> TargetBounds {
    TargetBounds {
        pi_star: l1_deviation_bound(p, k_star, r, n, m),
        p_star: BoundValue::new(deviation_bound(p, k_star as f64, k_star, r, n)),
    }
}

/// Union bounds, summed over off-target indices, on the failure of each event
/// used to rule out false inclusions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventBounds {
    /// Noise correlation `(1/n)|Σ W_i f_k(X_i)| ≥ r‖f_k‖_n / 2`.
    pub noise_correlation: BoundValue,
    /// Column norm `‖f_k‖_n² < ‖f_k‖² / 4`.
    pub column_norm: BoundValue,
    /// Empirical inner products exceeding `2|⟨f_j, f_k⟩| + δ`.
    pub inner_product: BoundValue,
    /// Empirical misfit `(1/n) Σ |f − f*|(X_i) ≥ c0 r / (8L)`.
    pub approximation: BoundValue,
    pub sup_gap_margin: f64,
    /// `c0²/(64L²) ≤ C_f`: the approximation bound is void and reported as 1.
    pub margin_nonpositive: bool,
}

pub fn event_bounds(p: &BoundParams, r: f64, n: usize, m: usize) -> EventBounds {
    let (n, m2) = (n as f64, (m * m) as f64);
    let (b, c0, l, l0, c) = (p.noise_moment, p.norm_floor, p.sup, p.fourth_moment, p.coherence);
    let norm_term = (-n * c0 * c0 / (12.0 * l * l)).exp();

    let noise = 2.0 * m2 * (-n * r * r / (16.0 * b)).exp()
        + 2.0 * m2 * (-n * r * c0 / (8.0 * SQRT_2 * l)).exp()
        + 2.0 * m2 * norm_term;
    let column = m2 * norm_term;
    let inner = 2.0 * m2 * (-c * c * l.powi(4) * n * r * r / l0).exp() + 2.0 * m2 * (-c * l * n * r / 2.0).exp();

    let margin = p.sup_gap_margin();
    let approximation = if margin > 0.0 {
        let m = m as f64;
        BoundValue::new(
            m * (-p.c_f * margin * margin / 4.0 * n * r * r).exp()
                + m * (-margin / (4.0 * p.sup_gap) * n * r * r).exp(),
        )
    } else {
        BoundValue { raw: 1.0, clipped: 1.0 }
    };
    EventBounds {
        noise_correlation: BoundValue::new(noise),
        column_norm: BoundValue::new(column),
        inner_product: BoundValue::new(inner),
        approximation,
        sup_gap_margin: margin,
        margin_nonpositive: !(margin > 0.0),
    }
}
