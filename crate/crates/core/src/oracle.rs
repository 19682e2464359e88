//! Population target of selection: the sparsest dictionary combination
//! inside the `L2(ν)` ball of squared radius `C_f r²` around `f`.
//!
//! The search is exhaustive. Subsets are visited by increasing size and, within a
//! size, in lexicographic order; the first size whose best fit enters the
//! ball is `k*`, and the best fit of that size (ties to the
//! lexicographically first subset) is `λ*`.

use alloc::vec;
use alloc::vec::Vec;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::dictionary::PopulationMoments;
use crate::linalg::{cholesky_solve, dot, Matrix};
use crate::{Error, Result};

/// Default cap on the dictionary size for exhaustive search.
pub const MAX_EXHAUSTIVE: usize = 20;

/// Relative pivot floor below which a principal Gram block counts as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

/// `‖Σ λ_j f_j − f‖² = λᵀGλ − 2λᵀc + ‖f‖²`.
pub fn approximation_error(lambda: &[f64], moments: &PopulationMoments) -> f64 {
    let g_lambda = moments.gram.mul_vec(lambda);
    dot(lambda, &g_lambda) - 2.0 * dot(lambda, &moments.cross) + moments.f_sq
}

/// Membership tolerance of the approximation ball, `1e-12 · max(1, ‖f‖²)`.
pub fn ball_tolerance(f_sq: f64) -> f64 {
    1e-12 * f_sq.max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetFit {
    pub subset: Vec<usize>,
    /// Coefficients in `subset` order.
    pub coefs: Vec<f64>,
    pub error: f64,
}

impl SubsetFit {
    pub fn embedded(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for (&j, &c) in self.subset.iter().zip(&self.coefs) {
            out[j] = c;
        }
        out
    }
}

/// Least-squares projection of `f` onto the span of `subset`.
///
/// Returns `None` when the principal Gram block on `subset` is singular.
pub fn best_subset_fit(subset: &[usize], moments: &PopulationMoments) -> Option<SubsetFit> {
    let block = moments.gram.principal(subset);
    let rhs: Vec<f64> = subset.iter().map(|&j| moments.cross[j]).collect();
    let coefs = cholesky_solve(&block, &rhs, SINGULAR_TOL)?;
    let mut fit = SubsetFit { subset: subset.to_vec(), coefs, error: 0.0 };
    fit.error = approximation_error(&fit.embedded(moments.len()), moments);
    Some(fit)
}

/// Radius of the approximation ball as the product `C_f · r²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub c_f: f64,
    pub r: f64,
}

impl Ball {
    pub fn radius(&self) -> f64 {
        self.c_f * self.r * self.r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub c_f: f64,
    pub r: f64,
    pub lambda_star: Vec<f64>,
    /// `λ*` restricted to the target support.
    pub mu_star: Vec<f64>,
    pub support: Vec<usize>,
    pub k_star: usize,
    /// `‖f* − f‖²`.
    pub approx_error: f64,
    /// `min_{j ∈ I*} |λ*_j|`; `None` for an empty support.
    pub min_signal: Option<f64>,
    /// `‖f − f*‖_∞` when it has been measured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_gap: Option<f64>,
    /// Subsets skipped during the search because their Gram block was singular.
    #[serde(default)]
    pub singular_skipped: usize,
}

impl TargetSpec {
    /// Target for a well-specified linear model `f = Σ λ_j f_j`: the support
    /// of `lambda` with zero approximation error.
    pub fn from_exact_representation(lambda: Vec<f64>, ball: Ball) -> Self {
        let support: Vec<usize> = lambda.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, _)| j).collect();
        Self::from_parts(lambda, support, 0.0, ball, 0)
    }

    fn from_parts(lambda_star: Vec<f64>, support: Vec<usize>, approx_error: f64, ball: Ball, skipped: usize) -> Self {
        let mu_star: Vec<f64> = support.iter().map(|&j| lambda_star[j]).collect();
        let min_signal = mu_star.iter().map(|v| v.abs()).reduce(f64::min);
        TargetSpec {
            c_f: ball.c_f,
            r: ball.r,
            k_star: support.len(),
            lambda_star,
            mu_star,
            support,
            approx_error,
            min_signal,
            sup_gap: None,
            singular_skipped: skipped,
        }
    }

    pub fn ball(&self) -> Ball {
        Ball { c_f: self.c_f, r: self.r }
    }

    pub fn with_sup_gap(mut self, gap: f64) -> Self {
        self.sup_gap = Some(gap);
        self
    }
}

/// Exhaustive search for `(λ*, I*, k*)`, with the size cap [`MAX_EXHAUSTIVE`].
pub fn target_set(moments: &PopulationMoments, ball: Ball) -> Result<TargetSpec> {
    target_set_with_limit(moments, ball, MAX_EXHAUSTIVE)
}

pub fn target_set_with_limit(moments: &PopulationMoments, ball: Ball, limit: usize) -> Result<TargetSpec> {
    let m = moments.len();
    if m > limit {
        return Err(Error::ExhaustiveLimit { m, limit });
    }
    let radius = ball.radius();
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Config(alloc::format!("ball radius must be positive, got {radius}")));
    }
    let threshold = radius + ball_tolerance(moments.f_sq);
    // no subset fits better than the whole span
    let all: Vec<usize> = (0..m).collect();
    if best_subset_fit(&all, moments).is_some_and(|full| full.error > threshold) {
        return Err(Error::EmptyLambda { radius });
    }
    let mut skipped = 0;
    for k in 0..=m {
        let mut best: Option<SubsetFit> = None;
        for subset in (0..m).combinations(k) {
            match best_subset_fit(&subset, moments) {
                Some(fit) => {
                    if best.as_ref().is_none_or(|b| fit.error < b.error) {
                        best = Some(fit);
                    }
                }
                None => skipped += 1,
            }
        }
        if let Some(fit) = best.filter(|b| b.error <= threshold) {
            let lambda = fit.embedded(m);
            return Ok(TargetSpec::from_parts(lambda, fit.subset, fit.error, ball, skipped));
        }
    }
    Err(Error::EmptyLambda { radius })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinSignalCheck {
    pub holds: bool,
    /// `c_n − B r`; `+∞` for an empty target.
    pub margin: f64,
}

/// Minimum-signal condition `min_{j ∈ I*} |λ*_j| > B r`.
pub fn check_min_signal(target: &TargetSpec, b: f64) -> MinSignalCheck {
    match target.min_signal {
        None => MinSignalCheck { holds: true, margin: f64::INFINITY },
        Some(c) => {
            let margin = c - b * target.r;
            MinSignalCheck { holds: c > b * target.r, margin }
        }
    }
}

/// Gram matrix of an orthonormal system of size `m`, for tests and examples.
pub fn orthonormal_moments(cross: Vec<f64>, f_sq: f64) -> Result<PopulationMoments> {
    PopulationMoments::new(Matrix::identity(cross.len()), cross, f_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_term() -> PopulationMoments {
        orthonormal_moments(vec![2.0, 1.0], 5.0).unwrap()
    }

    fn ball_with_radius(radius: f64) -> Ball {
        Ball { c_f: radius, r: 1.0 }
    }

    #[test]
    fn approximation_error_examples() {
        let m = two_term();
        assert_eq!(approximation_error(&[0.0, 0.0], &m), 5.0);
        assert_eq!(approximation_error(&[2.0, 0.0], &m), 1.0);
        let exact = orthonormal_moments(vec![1.0, 0.0], 1.0).unwrap();
        assert_eq!(approximation_error(&[1.0, 0.0], &exact), 0.0);
    }

    #[test]
    fn best_subset_fit_examples() {
        let m = two_term();
        let empty = best_subset_fit(&[], &m).unwrap();
        assert_eq!(empty.error, 5.0);
        let both = best_subset_fit(&[0, 1], &m).unwrap();
        assert_eq!(both.coefs, vec![2.0, 1.0]);
        assert_eq!(both.error, 0.0);
        let first = best_subset_fit(&[0], &m).unwrap();
        assert_eq!(first.coefs, vec![2.0]);
        assert_eq!(first.error, 1.0);
    }

    #[test]
    fn singular_subset_is_skipped() {
        // f_2 = f_1
        let gram = Matrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let m = PopulationMoments::new(gram, vec![1.0, 1.0, 1.0], 2.0).unwrap();
        assert!(best_subset_fit(&[0, 1], &m).is_none());
        let t = target_set(&m, ball_with_radius(0.1)).unwrap();
        assert_eq!(t.support, vec![0, 2]);
        assert_eq!(t.k_star, 2);
        assert!(t.singular_skipped >= 1);
    }

    #[test]
    fn exact_single_term() {
        let m = orthonormal_moments(vec![1.0, 0.0, 0.0], 1.0).unwrap();
        let t = target_set(&m, ball_with_radius(1e-3)).unwrap();
        assert_eq!(t.k_star, 1);
        assert_eq!(t.support, vec![0]);
        assert_eq!(t.lambda_star, vec![1.0, 0.0, 0.0]);
        assert_eq!(t.approx_error, 0.0);
    }

    #[test]
    fn radius_controls_sparsity() {
        let wide = target_set(&two_term(), ball_with_radius(1.5)).unwrap();
        assert_eq!((wide.k_star, wide.support.clone()), (1, vec![0]));
        assert_eq!(wide.lambda_star, vec![2.0, 0.0]);
        assert_eq!(wide.approx_error, 1.0);
        assert_eq!(wide.min_signal, Some(2.0));
        let narrow = target_set(&two_term(), ball_with_radius(0.5)).unwrap();
        assert_eq!((narrow.k_star, narrow.support.clone()), (2, vec![0, 1]));
        assert_eq!(narrow.approx_error, 0.0);
    }

    #[test]
    fn zero_is_a_target_when_f_is_small() {
        let t = target_set(&two_term(), ball_with_radius(6.0)).unwrap();
        assert_eq!(t.k_star, 0);
        assert!(t.support.is_empty());
        assert_eq!(t.min_signal, None);
        let c = check_min_signal(&t, 1.0);
        assert!(c.holds && c.margin == f64::INFINITY);
    }

    #[test]
    fn orthogonal_f_leaves_lambda_empty() {
        let m = orthonormal_moments(vec![0.0, 0.0], 5.0).unwrap();
        assert!(matches!(target_set(&m, ball_with_radius(1.0)), Err(Error::EmptyLambda { .. })));
    }

    #[test]
    fn unreachable_ball_fails_without_enumeration() {
        // 2^60 subsets would never finish; the full-span check answers at once
        let m = orthonormal_moments(vec![0.1; 60], 1.0).unwrap();
        let res = target_set_with_limit(&m, ball_with_radius(0.01), 60);
        assert!(matches!(res, Err(Error::EmptyLambda { .. })));
    }

    #[test]
    fn exhaustive_limit_and_bad_radius() {
        let m = orthonormal_moments(vec![0.0; 21], 1.0).unwrap();
        assert!(matches!(target_set(&m, ball_with_radius(1.0)), Err(Error::ExhaustiveLimit { m: 21, limit: 20 })));
        assert!(target_set(&two_term(), ball_with_radius(0.0)).is_err());
    }

    #[test]
    fn ties_go_to_lexicographically_first_subset() {
        let m = orthonormal_moments(vec![1.0, 1.0, 1.0], 3.0).unwrap();
        let t = target_set(&m, ball_with_radius(2.0)).unwrap();
        assert_eq!(t.support, vec![0]);
    }

    #[test]
    fn min_signal_examples() {
        let mut t = TargetSpec::from_exact_representation(vec![2.0, 0.0, -3.0], Ball { c_f: 1.0, r: 0.1 });
        assert_eq!(t.min_signal, Some(2.0));
        let c = check_min_signal(&t, 1.0);
        assert!(c.holds);
        assert!((c.margin - 1.9).abs() < 1e-15);
        t.r = 2.0;
        // c_n = B r exactly
        assert!(!check_min_signal(&t, 1.0).holds);
    }

    fn random_moments(seed: u64, m: usize) -> PopulationMoments {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // moments of m random functions on a 3m-point uniform support
        let p = 3 * m;
        let vals: Vec<Vec<f64>> = (0..m).map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let f: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let w = 1.0 / p as f64;
        let mut gram = Matrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                gram[(a, b)] = w * dot(&vals[a], &vals[b]);
            }
        }
        let cross = vals.iter().map(|v| w * dot(v, &f)).collect();
        PopulationMoments::new(gram, cross, w * dot(&f, &f)).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn target_is_minimal_and_monotone(seed in 0u64..5000, m in 1usize..8, frac in 0.05f64..0.9) {
            let moments = random_moments(seed, m);
            let all: Vec<usize> = (0..m).collect();
            let floor = best_subset_fit(&all, &moments).map_or(0.0, |f| f.error.max(0.0));
            let radius = floor + frac * (moments.f_sq - floor) + 1e-9;
            let t = target_set(&moments, ball_with_radius(radius)).unwrap();
            let thr = radius + ball_tolerance(moments.f_sq);
            prop_assert!(t.approx_error <= thr);
            if t.k_star >= 1 {
                for s in (0..m).combinations(t.k_star - 1) {
                    if let Some(fit) = best_subset_fit(&s, &moments) {
                        prop_assert!(fit.error > thr);
                    }
                }
            }
            let wider = target_set(&moments, ball_with_radius(radius * 1.5)).unwrap();
            prop_assert!(wider.k_star <= t.k_star);
            prop_assert_eq!(&target_set(&moments, ball_with_radius(radius)).unwrap(), &t);
        }

        #[test]
        fn fit_error_matches_quadratic_form(seed in 0u64..5000, m in 1usize..7) {
            let moments = random_moments(seed, m);
            let subset: Vec<usize> = (0..m).filter(|j| (seed >> j) & 1 == 1).collect();
            if let Some(fit) = best_subset_fit(&subset, &moments) {
                let direct = approximation_error(&fit.embedded(m), &moments);
                prop_assert!((direct - fit.error).abs() <= 1e-12);
                prop_assert!(fit.error >= -1e-12);
            }
        }
    }
}
