#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dictionary::PopulationMoments;
use crate::linalg::Matrix;
use crate::oracle::{approximation_error, ball_tolerance};
use crate::{Error, Result};

/// Default coherence constant `C` in `max |ρ(i, j)| ≤ C / k*`.
pub const DEFAULT_COHERENCE: f64 = 1.0 / 45.0;

/// `ρ(i, j) = ⟨f_i, f_j⟩ / (‖f_i‖ ‖f_j‖)`, with an exact unit diagonal and
/// entries clamped to `[-1, 1]`.
pub fn correlations(gram: &Matrix) -> Result<Matrix> {
    let m = gram.nrows();
    if let Some(index) = (0..m).find(|&i| !(gram[(i, i)] > 0.0)) {
        return Err(Error::DegenerateGram { index });
    }
    let norms: Vec<f64> = (0..m).map(|i| gram[(i, i)].sqrt()).collect();
    let mut rho = Matrix::identity(m);
    for i in 0..m {
        for j in i + 1..m {
            let v = (gram[(i, j)] / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            rho[(i, j)] = v;
            rho[(j, i)] = v;
        }
    }
    Ok(rho)
}

/// `max_{i ∈ rows} max_{j ∈ cols, j ≠ i} |ρ(i, j)|`, zero over an empty range.
fn max_abs_over(rho: &Matrix, rows: &[usize], cols: impl Fn(usize) -> bool) -> (f64, Option<(usize, usize)>) {
    let mut best = (0.0, None);
    for &i in rows {
        for j in (0..rho.ncols()).filter(|&j| j != i && cols(j)) {
            let v = rho[(i, j)].abs();
            if v > best.0 || best.1.is_none() {
                best = (v, Some((i, j)));
            }
        }
    }
    best
}

/// Largest absolute correlation between a member of `support` and any other
/// dictionary element.
pub fn coherence_over(rho: &Matrix, support: &[usize]) -> f64 {
    max_abs_over(rho, support, |_| true).0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub max_on_target: f64,
    /// Pair `(i, j)` attaining the maximum.
    pub worst_pair: Option<(usize, usize)>,
    /// `C / k*`; infinite for an empty target.
    pub threshold: f64,
    pub c: f64,
    pub holds: bool,
}

/// Coherence condition on the rows indexed by the target support. Columns
/// range over the whole dictionary; correlations among non-target elements
/// are unconstrained.
pub fn check_coherence(rho: &Matrix, support: &[usize], c: f64) -> CoherenceReport {
    let (max_on_target, worst_pair) = max_abs_over(rho, support, |_| true);
    let threshold = if support.is_empty() { f64::INFINITY } else { c / support.len() as f64 };
    CoherenceReport { max_on_target, worst_pair, threshold, c, holds: max_on_target <= threshold }
}

/// Whether `lambda` lies in the approximation ball of squared `radius` and
/// its support satisfies `ρ(λ) ≤ C / M(λ)`.
pub fn in_coherent_ball(lambda: &[f64], moments: &PopulationMoments, radius: f64, c: f64) -> Result<bool> {
    let rho = correlations(&moments.gram)?;
    let active: Vec<usize> = lambda.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, _)| j).collect();
    let in_ball = approximation_error(lambda, moments) <= radius + ball_tolerance(moments.f_sq);
    let coherent = active.is_empty() || coherence_over(&rho, &active) <= c / active.len() as f64;
    Ok(in_ball && coherent)
}

/// [`in_coherent_ball`] for the sub-dictionary `{f_j : j ∈ subset}`, with
/// `mu` indexed like `subset`.
pub fn in_coherent_ball_restricted(
    mu: &[f64],
    subset: &[usize],
    moments: &PopulationMoments,
    radius: f64,
    c: f64,
) -> Result<bool> {
    if mu.len() != subset.len() {
        return Err(Error::Dimension("coefficients and index set differ in length".into()));
    }
    in_coherent_ball(mu, &moments.restrict(subset), radius, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{orthonormal_moments, target_set, Ball};
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn correlation_examples() {
        assert_eq!(correlations(&Matrix::identity(3)).unwrap(), Matrix::identity(3));
        let g = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let rho = correlations(&g).unwrap();
        assert_eq!(rho.to_rows(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let g = Matrix::from_rows(&[vec![1.0, 0.1], vec![0.1, 1.0]]).unwrap();
        assert_eq!(correlations(&g).unwrap()[(0, 1)], 0.1);
        let g = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(correlations(&g), Err(Error::DegenerateGram { index: 1 })));
    }

    #[test]
    fn coherence_examples() {
        let r = check_coherence(&Matrix::identity(5), &[0, 3], DEFAULT_COHERENCE);
        assert!(r.holds && r.max_on_target == 0.0);

        let mut equi = Matrix::identity(4);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    equi[(i, j)] = 0.1;
                }
            }
        }
        let r = check_coherence(&equi, &[0, 1, 2], DEFAULT_COHERENCE);
        assert!((r.threshold - 1.0 / 135.0).abs() < 1e-17);
        assert!(!r.holds);

        let r = check_coherence(&Matrix::identity(1), &[0], DEFAULT_COHERENCE);
        assert!(r.holds && r.max_on_target == 0.0);
    }

    #[test]
    fn correlations_outside_target_are_unconstrained() {
        let mut rho = Matrix::identity(3);
        rho[(1, 2)] = 0.9;
        rho[(2, 1)] = 0.9;
        assert!(check_coherence(&rho, &[0], DEFAULT_COHERENCE).holds);
        assert!(!check_coherence(&rho, &[1], DEFAULT_COHERENCE).holds);
    }

    #[test]
    fn coherent_ball_membership() {
        let m = orthonormal_moments(vec![2.0, 1.0, 0.0], 5.0).unwrap();
        let ball = Ball { c_f: 1.5, r: 1.0 };
        let t = target_set(&m, ball).unwrap();
        assert!(in_coherent_ball(&t.lambda_star, &m, ball.radius(), DEFAULT_COHERENCE).unwrap());
        assert!(in_coherent_ball_restricted(&t.mu_star, &t.support, &m, ball.radius(), DEFAULT_COHERENCE).unwrap());
        assert!(!in_coherent_ball(&[0.0, 5.0, 0.0], &m, ball.radius(), DEFAULT_COHERENCE).unwrap());
        assert!(!in_coherent_ball(&[0.0, 0.0, 0.0], &m, ball.radius(), DEFAULT_COHERENCE).unwrap());
    }

    proptest! {
        #[test]
        fn correlations_of_psd_gram_are_valid(seed in 0u64..10_000, m in 1usize..8, p in 1usize..12) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let mut g = Matrix::zeros(m, m);
            for a in 0..m {
                for b in 0..m {
                    g[(a, b)] = crate::linalg::dot(&rows[a], &rows[b]);
                }
            }
            let rho = correlations(&g).unwrap();
            for a in 0..m {
                prop_assert_eq!(rho[(a, a)], 1.0);
                for b in 0..m {
                    prop_assert!(rho[(a, b)].abs() <= 1.0);
                    prop_assert_eq!(rho[(a, b)], rho[(b, a)]);
                }
            }
        }
    }
}
