//! Weighted ℓ1-penalized least squares.
//!
//! The estimator minimizes
//!
//! ```text
//! (1/n) Σ_i (Y_i − Σ_j λ_j f_j(X_i))² + 2 Σ_j ω_j |λ_j|,    ω_j = r ‖f_j‖_n.
//! ```
//!
//! With `A = diag(2ω_j)`, `F₁ = F A⁻¹` and `θ = Aλ` we have `Fλ = F₁θ`, and the
//! problem becomes the unit-weight Lasso `(1/n)‖Y − F₁θ‖² + Σ|θ_j|`. That
//! problem is solved by cyclic coordinate descent with exact soft-threshold
//! updates from `θ = 0`, and the estimate is mapped back as `λ̂ = A⁻¹θ̂`.
//!
//! Every returned solution carries a [`KktReport`] certifying the
//! subgradient optimality conditions on the original (unscaled) problem.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, Matrix};
use crate::{Error, Result};

/// Smallest admissible empirical column norm.
pub const DEFAULT_NORM_FLOOR: f64 = 1e-10;

/// Data-dependent penalty weights `ω_j = r · ‖f_j‖_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub r: f64,
    pub weights: Vec<f64>,
}

impl PenaltySpec {
    /// `pen(λ) = 2 Σ ω_j |λ_j|`.
    pub fn value(&self, lambda: &[f64]) -> f64 {
        2.0 * self.weights.iter().zip(lambda).map(|(w, l)| w * l.abs()).sum::<f64>()
    }

    pub fn restrict(&self, subset: &[usize]) -> PenaltySpec {
        PenaltySpec { r: self.r, weights: subset.iter().map(|&j| self.weights[j]).collect() }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn compute_penalty(col_norms: &[f64], r: f64) -> Result<PenaltySpec> {
    compute_penalty_with_floor(col_norms, r, DEFAULT_NORM_FLOOR)
}

/// Like [`compute_penalty`], refusing columns whose norm is below `floor`.
pub fn compute_penalty_with_floor(col_norms: &[f64], r: f64, floor: f64) -> Result<PenaltySpec> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Config(alloc::format!("tuning value r must be positive, got {r}")));
    }
    if let Some((column, &norm)) = col_norms.iter().enumerate().find(|(_, &v)| !(v >= floor)) {
        return Err(Error::DegenerateColumn { column, norm, floor });
    }
    Ok(PenaltySpec { r, weights: col_norms.iter().map(|v| r * v).collect() })
}

/// The unit-weight problem: `F₁ = F A⁻¹` with `A = diag(2ω_j)`.
#[derive(Clone, Debug)]
pub struct RescaledProblem {
    pub design: Matrix,
    /// Diagonal of `A`.
    pub scale: Vec<f64>,
}

pub fn rescale_problem(design: &Matrix, pen: &PenaltySpec) -> Result<RescaledProblem> {
    if pen.len() != design.ncols() {
        return Err(Error::Dimension("penalty and design disagree on M".into()));
    }
    if let Some((column, &w)) = pen.weights.iter().enumerate().find(|(_, &w)| !(w > 0.0)) {
        return Err(Error::DegenerateColumn { column, norm: w, floor: 0.0 });
    }
    let scale: Vec<f64> = pen.weights.iter().map(|w| 2.0 * w).collect();
    let mut scaled = design.clone();
    for (j, &a) in scale.iter().enumerate() {
        for v in scaled.column_mut(j) {
            *v /= a;
        }
    }
    Ok(RescaledProblem { design: scaled, scale })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stop when no coordinate of `θ` moves by more than this in a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
    /// `|λ_j| > zero_tol` puts `j` in the support.
    pub zero_tol: f64,
    /// Relative tolerance of the optimality certificate.
    pub kkt_tol: f64,
    /// Keep the objective value after every sweep.
    pub record_objective: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_sweeps: 100_000, zero_tol: 1e-12, kkt_tol: 1e-6, record_objective: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoSolution {
    pub lambda_hat: Vec<f64>,
    /// `θ̂ = Aλ̂`.
    pub theta_hat: Vec<f64>,
    pub support: Vec<usize>,
    pub objective: f64,
    pub sweeps: usize,
    pub kkt: KktReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktEntry {
    pub index: usize,
    pub value: f64,
}

/// Subgradient optimality report.
///
/// With `g_k = (2/n) Σ_i [Y_i − Σ_j λ_j f_j(X_i)] f_k(X_i)`:
/// - `active` holds `|g_k| − 2ω_k` for `λ_k ≠ 0` (zero at a minimizer);
/// - `inactive` holds the slack `2ω_k − |g_k|` for `λ_k = 0` (nonnegative at a
///   minimizer).
///
/// Violations are measured relative to `2ω_k`. On active coordinates the
/// violation is `|g_k − 2ω_k sign(λ_k)| / 2ω_k`, so a gradient with the wrong
/// sign is caught even when its magnitude matches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub active: Vec<KktEntry>,
    pub inactive: Vec<KktEntry>,
    pub max_violation: f64,
    pub tol: f64,
    pub pass: bool,
    /// Coordinates whose violation exceeds `tol`.
    pub flagged: Vec<usize>,
}

/// `sign(z) · max(|z| − γ, 0)`.
#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// `(1/n)‖Y − Fλ‖² + pen(λ)`.
pub fn objective(design: &Matrix, y: &[f64], pen: &PenaltySpec, lambda: &[f64]) -> f64 {
    let fitted = design.mul_vec(lambda);
    let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    rss / y.len() as f64 + pen.value(lambda)
}

/// Indices with `|λ_j| > zero_tol`, ascending.
pub fn support(lambda: &[f64], zero_tol: f64) -> Vec<usize> {
    lambda.iter().enumerate().filter(|(_, v)| v.abs() > zero_tol).map(|(j, _)| j).collect()
}

/// `(2/n) Fᵀ(Y − Fλ)`.
fn correlations_with_residual(design: &Matrix, y: &[f64], lambda: &[f64]) -> Vec<f64> {
    let fitted = design.mul_vec(lambda);
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let n = y.len() as f64;
    design.tr_mul_vec(&resid).into_iter().map(|v| 2.0 * v / n).collect()
}

/// Evaluates the optimality conditions of the weighted problem at `lambda`.
pub fn kkt_check(lambda: &[f64], design: &Matrix, y: &[f64], pen: &PenaltySpec, tol: f64) -> KktReport {
    let grad = correlations_with_residual(design, y, lambda);
    let mut report = KktReport {
        active: Vec::new(),
        inactive: Vec::new(),
        max_violation: 0.0,
        tol,
        pass: true,
        flagged: Vec::new(),
    };
    for (k, (&g, &l)) in grad.iter().zip(lambda).enumerate() {
        let level = 2.0 * pen.weights[k];
        let unit = if level > 0.0 { level } else { 1.0 };
        let violation = if l != 0.0 {
            report.active.push(KktEntry { index: k, value: g.abs() - level });
            (g - level * l.signum()).abs() / unit
        } else {
            let slack = level - g.abs();
            report.inactive.push(KktEntry { index: k, value: slack });
            (-slack).max(0.0) / unit
        };
        if violation > tol {
            report.flagged.push(k);
        }
        report.max_violation = report.max_violation.max(violation);
    }
    report.pass = report.flagged.is_empty();
    report
}

fn check_dims(design: &Matrix, y: &[f64], pen: &PenaltySpec) -> Result<()> {
    if design.nrows() != y.len() {
        return Err(Error::Dimension(alloc::format!(
            "design has {} rows but there are {} responses",
            design.nrows(),
            y.len()
        )));
    }
    if design.ncols() != pen.len() {
        return Err(Error::Dimension("penalty and design disagree on M".into()));
    }
    if y.is_empty() {
        return Err(Error::Config("no observations".into()));
    }
    Ok(())
}

/// Computes the weighted Lasso estimate by coordinate descent on the
/// rescaled problem.
///
/// The sweep stops once the largest coordinate change drops below
/// `opts.tol` and the optimality certificate passes; otherwise it continues
/// up to `opts.max_sweeps`, after which [`Error::Convergence`] carries the
/// last iterate.
pub fn solve_weighted_lasso(
    design: &Matrix,
    y: &[f64],
    pen: &PenaltySpec,
    opts: &SolverOptions,
) -> Result<LassoSolution> {
    check_dims(design, y, pen)?;
    let RescaledProblem { design: f1, scale } = rescale_problem(design, pen)?;
    let n = y.len() as f64;
    let m = f1.ncols();
    let curvature: Vec<f64> = (0..m).map(|j| dot(f1.column(j), f1.column(j)) / n).collect();

    let mut theta = vec![0.0; m];
    let mut resid = y.to_vec();
    let objective_of = |resid: &[f64], theta: &[f64]| {
        resid.iter().map(|r| r * r).sum::<f64>() / n + theta.iter().map(|t| t.abs()).sum::<f64>()
    };
    let mut current = objective_of(&resid, &theta);
    let mut trace = Vec::new();
    if opts.record_objective {
        trace.push(current);
    }

    let finish = |theta: &[f64], sweeps: usize, trace: Vec<f64>| {
        let lambda_hat: Vec<f64> = theta.iter().zip(&scale).map(|(t, a)| t / a).collect();
        let kkt = kkt_check(&lambda_hat, design, y, pen, opts.kkt_tol);
        LassoSolution {
            support: support(&lambda_hat, opts.zero_tol),
            objective: objective(design, y, pen, &lambda_hat),
            theta_hat: theta.to_vec(),
            lambda_hat,
            sweeps,
            kkt,
            objective_trace: trace,
        }
    };

    for sweep in 1..=opts.max_sweeps {
        let mut max_change: f64 = 0.0;
        for j in 0..m {
            let col = f1.column(j);
            let old = theta[j];
            let z = dot(col, &resid) / n + curvature[j] * old;
            let new = soft_threshold(z, 0.5) / curvature[j];
            if new != old {
                let delta = new - old;
                for (r, &v) in resid.iter_mut().zip(col) {
                    *r -= v * delta;
                }
                theta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        let next = objective_of(&resid, &theta);
        debug_assert!(next <= current + 1e-12 * current.abs().max(1.0), "objective increased");
        current = next;
        if opts.record_objective {
            trace.push(current);
        }
        if max_change < opts.tol {
            // refresh the running residual before certifying
            let fitted = f1.mul_vec(&theta);
            for ((r, yi), fi) in resid.iter_mut().zip(y).zip(&fitted) {
                *r = yi - fi;
            }
            let lambda_hat: Vec<f64> = theta.iter().zip(&scale).map(|(t, a)| t / a).collect();
            if kkt_check(&lambda_hat, design, y, pen, opts.kkt_tol).pass {
                return Ok(finish(&theta, sweep, trace));
            }
        }
    }
    Err(Error::Convergence { best: Box::new(finish(&theta, opts.max_sweeps, trace)) })
}

/// Solves the weighted problem over the columns in `subset` only and embeds
/// the result in `R^M` with zeros elsewhere.
///
/// An empty subset yields the zero vector.
pub fn solve_restricted(
    design: &Matrix,
    y: &[f64],
    pen: &PenaltySpec,
    subset: &[usize],
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    check_dims(design, y, pen)?;
    let m = design.ncols();
    validate_subset(subset, m)?;
    let mut embedded = vec![0.0; m];
    if subset.is_empty() {
        return Ok(embedded);
    }
    let sub = solve_weighted_lasso(&design.select_columns(subset), y, &pen.restrict(subset), opts)?;
    for (&j, &v) in subset.iter().zip(&sub.lambda_hat) {
        embedded[j] = v;
    }
    Ok(embedded)
}

pub(crate) fn validate_subset(subset: &[usize], m: usize) -> Result<()> {
    if subset.iter().any(|&j| j >= m) {
        return Err(Error::Config(alloc::format!("index set {subset:?} exceeds M = {m}")));
    }
    if subset.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("index sets must be strictly increasing".into()));
    }
    Ok(())
}

/// Strict dual feasibility of a restricted solution off its index set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualFeasibility {
    pub holds: bool,
    /// `2ω_k − |(2/n) Σ_i [Y_i − Σ_{j∈I} λ̃_j f_j(X_i)] f_k(X_i)|` for each `k ∉ I`.
    pub margins: Vec<KktEntry>,
}

/// Checks whether every coordinate outside `subset` satisfies the strict
/// inequality `|g_k| < 2ω_k` at `lambda_tilde`. When it does, `lambda_tilde`
/// solves the full problem and every solution vanishes off `subset`.
pub fn restricted_dual_feasibility(
    lambda_tilde: &[f64],
    design: &Matrix,
    y: &[f64],
    pen: &PenaltySpec,
    subset: &[usize],
) -> DualFeasibility {
    debug_assert!(lambda_tilde.iter().enumerate().all(|(j, &v)| v == 0.0 || subset.contains(&j)));
    let grad = correlations_with_residual(design, y, lambda_tilde);
    let margins: Vec<KktEntry> = (0..design.ncols())
        .filter(|k| !subset.contains(k))
        .map(|k| KktEntry { index: k, value: 2.0 * pen.weights[k] - grad[k].abs() })
        .collect();
    DualFeasibility { holds: margins.iter().all(|e| e.value > 0.0), margins }
}
