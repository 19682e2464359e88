use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{empirical_norms, evaluate_design, DictFn, Dictionary, NoiseModel};
use crate::linalg::{rank, Matrix};
use crate::{Error, Result};

/// The regression function `f = Σ c_j f_j + Σ e_k g_k`: a combination of
/// dictionary members plus optional functions from outside the dictionary,
/// which make the linear model misspecified.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RegressionFn {
    #[serde(default)]
    pub dictionary_terms: Vec<(usize, f64)>,
    #[serde(default)]
    pub extra_terms: Vec<(f64, DictFn)>,
}

impl RegressionFn {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(mut self, j: usize, coef: f64) -> Self {
        self.dictionary_terms.push((j, coef));
        self
    }

    pub fn extra(mut self, coef: f64, g: DictFn) -> Self {
        self.extra_terms.push((coef, g));
        self
    }

    pub fn eval(&self, dictionary: &Dictionary, index: usize, x: &[f64]) -> Result<f64> {
        let domain = |reason| Error::Domain { index, reason };
        let mut v = 0.0;
        for &(j, c) in &self.dictionary_terms {
            let f = dictionary.funcs().get(j).ok_or_else(|| {
                Error::Config(alloc::format!("regression term refers to missing function {j}"))
            })?;
            v += c * f.eval(x).map_err(domain)?;
        }
        for (c, g) in &self.extra_terms {
            v += c * g.eval(x).map_err(domain)?;
        }
        Ok(v)
    }
}

/// Distribution of the design points.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignMeasure {
    /// Finitely supported; population moments are exact weighted sums.
    Discrete { points: Vec<Vec<f64>>, weights: Vec<f64> },
    /// Independent coordinates, uniform on `[low, high]`.
    UniformCube { dim: usize, low: f64, high: f64 },
    /// Independent standard normal coordinates clipped to `[-clip, clip]`.
    ClippedGaussian { dim: usize, clip: f64 },
    /// Known only through caller-supplied moments; cannot be sampled.
    MomentsOnly { dim: usize },
}

impl DesignMeasure {
    /// Uniform measure on the vertices of `{-1, 1}^dim`.
    pub fn hypercube(dim: usize) -> Self {
        let count = 1usize << dim;
        let points = (0..count)
            .map(|b| (0..dim).map(|i| if b >> i & 1 == 1 { 1.0 } else { -1.0 }).collect())
            .collect();
        DesignMeasure::Discrete { points, weights: vec![1.0 / count as f64; count] }
    }

    pub fn dim(&self) -> usize {
        match self {
            DesignMeasure::Discrete { points, .. } => points.first().map_or(0, Vec::len),
            DesignMeasure::UniformCube { dim, .. }
            | DesignMeasure::ClippedGaussian { dim, .. }
            | DesignMeasure::MomentsOnly { dim } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        match self {
            DesignMeasure::Discrete { points, weights } => {
                if points.is_empty() || points.len() != weights.len() {
                    return bad("discrete measure needs one weight per support point");
                }
                let d = points[0].len();
                if points.iter().any(|p| p.len() != d) {
                    return bad("support points have unequal dimensions");
                }
                if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
                    return bad("discrete weights must be nonnegative");
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return bad("discrete weights must sum to one");
                }
            }
            DesignMeasure::UniformCube { low, high, .. } => {
                if !(low < high) || !low.is_finite() || !high.is_finite() {
                    return bad("uniform cube needs low < high");
                }
            }
            DesignMeasure::ClippedGaussian { clip, .. } => {
                if !(*clip > 0.0) || !clip.is_finite() {
                    return bad("clipped Gaussian needs a positive finite clip");
                }
            }
            DesignMeasure::MomentsOnly { .. } => {}
        }
        Ok(())
    }
}

/// Population inner products under the design measure:
/// `gram[i][j] = ⟨f_i, f_j⟩`, `cross[j] = ⟨f_j, f⟩` and `f_sq = ‖f‖²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationMoments {
    pub gram: Matrix,
    pub cross: Vec<f64>,
    pub f_sq: f64,
}

impl PopulationMoments {
    pub fn new(gram: Matrix, cross: Vec<f64>, f_sq: f64) -> Result<Self> {
        let m = cross.len();
        if gram.nrows() != m || gram.ncols() != m {
            return Err(Error::Dimension(alloc::format!(
                "Gram matrix is {}x{} but there are {m} cross moments",
                gram.nrows(),
                gram.ncols()
            )));
        }
        Ok(Self { gram, cross, f_sq })
    }

    pub fn len(&self) -> usize {
        self.cross.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cross.is_empty()
    }

    /// Moments of the sub-dictionary indexed by `subset`.
    pub fn restrict(&self, subset: &[usize]) -> Self {
        Self {
            gram: self.gram.principal(subset),
            cross: subset.iter().map(|&j| self.cross[j]).collect(),
            f_sq: self.f_sq,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub dictionary: Dictionary,
    pub regression: RegressionFn,
    pub measure: DesignMeasure,
    pub noise: NoiseModel,
    /// Declared bound `L1 ≥ ‖f‖_∞`.
    pub f_sup_bound: f64,
    /// Closed-form moments for measures without an exact representation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<PopulationMoments>,
}

impl Scenario {
    pub fn new(
        dictionary: Dictionary,
        regression: RegressionFn,
        measure: DesignMeasure,
        noise: NoiseModel,
        f_sup_bound: f64,
    ) -> Result<Self> {
        let s = Self { dictionary, regression, measure, noise, f_sup_bound, moments: None };
        s.validate()?;
        Ok(s)
    }

    pub fn with_moments(mut self, moments: PopulationMoments) -> Result<Self> {
        if moments.len() != self.dictionary.len() {
            return Err(Error::Dimension("supplied moments do not match the dictionary".into()));
        }
        self.moments = Some(moments);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.measure.validate()?;
        self.noise.validate()?;
        if !(self.f_sup_bound > 0.0) {
            return Err(Error::Config("f_sup_bound must be positive".into()));
        }
        let m = self.dictionary.len();
        if let Some(&(j, _)) = self.regression.dictionary_terms.iter().find(|(j, _)| *j >= m) {
            return Err(Error::Config(alloc::format!("regression term {j} is outside the dictionary")));
        }
        Ok(())
    }
}

/// A realized data set: design points, responses, the design matrix and the
/// empirical column norms.
#[derive(Clone, Debug)]
pub struct Sample {
    pub xs: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    /// Noise realizations; known only for simulated data.
    pub noise: Option<Vec<f64>>,
    pub design: Matrix,
    pub col_norms: Vec<f64>,
    /// Whether the design has rank `min(n, M)`.
    pub full_rank: bool,
}

impl Sample {
    pub fn new(xs: Vec<Vec<f64>>, y: Vec<f64>, noise: Option<Vec<f64>>, design: Matrix) -> Result<Self> {
        let n = y.len();
        if design.nrows() != n || xs.len() != n || noise.as_ref().is_some_and(|w| w.len() != n) {
            return Err(Error::Dimension("sample components disagree on n".into()));
        }
        if n == 0 {
            return Err(Error::Config("a sample needs at least one observation".into()));
        }
        let col_norms = empirical_norms(&design);
        let full_rank = rank(&design) == n.min(design.ncols());
        Ok(Self { xs, y, noise, design, col_norms, full_rank })
    }

    /// Sample whose points are the rows of precomputed dictionary values.
    pub fn from_design(design: Matrix, y: Vec<f64>) -> Result<Self> {
        Self::new(design.to_rows(), y, None, design)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
}

/// Draws `n` iid design points and noise terms and forms `Y = f(X) + W`.
///
/// The stream is a ChaCha8 generator seeded with `seed` on stream `n`, so a
/// `(scenario, n, seed)` triple always reproduces the same sample.
pub fn sample_scenario(scenario: &Scenario, n: usize, seed: u64) -> Result<Sample> {
    if n == 0 {
        return Err(Error::Config("sample size must be positive".into()));
    }
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);

    let mut draw_point: alloc::boxed::Box<dyn FnMut(&mut ChaCha8Rng) -> Vec<f64>> = match &scenario.measure {
        DesignMeasure::Discrete { points, weights } => {
            let index = WeightedIndex::new(weights.iter().copied())
                .map_err(|e| Error::Config(alloc::format!("discrete weights: {e}")))?;
            alloc::boxed::Box::new(move |rng| points[index.sample(rng)].clone())
        }
        &DesignMeasure::UniformCube { dim, low, high } => alloc::boxed::Box::new(move |rng| {
            (0..dim).map(|_| low + (high - low) * rng.random::<f64>()).collect()
        }),
        &DesignMeasure::ClippedGaussian { dim, clip } => alloc::boxed::Box::new(move |rng| {
            (0..dim)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    z.clamp(-clip, clip)
                })
                .collect()
        }),
        DesignMeasure::MomentsOnly { .. } => {
            return Err(Error::Config("a moments-only measure cannot be sampled".into()))
        }
    };

    let mut xs = Vec::with_capacity(n);
    let mut noise = Vec::with_capacity(n);
    for _ in 0..n {
        xs.push(draw_point(&mut rng));
        noise.push(scenario.noise.sample(&mut rng));
    }
    let y = xs
        .iter()
        .zip(&noise)
        .enumerate()
        .map(|(i, (x, w))| Ok(scenario.regression.eval(&scenario.dictionary, i, x)? + w))
        .collect::<Result<Vec<_>>>()?;
    let design = evaluate_design(&scenario.dictionary, &xs)?;
    Sample::new(xs, y, Some(noise), design)
}

/// Exact population moments for discrete measures, or the caller-supplied
/// closed forms otherwise.
pub fn population_moments(scenario: &Scenario) -> Result<PopulationMoments> {
    match &scenario.measure {
        DesignMeasure::Discrete { points, weights } => {
            let design = evaluate_design(&scenario.dictionary, points)?;
            let m = design.ncols();
            let fvals = points
                .iter()
                .enumerate()
                .map(|(i, x)| scenario.regression.eval(&scenario.dictionary, i, x))
                .collect::<Result<Vec<_>>>()?;
            let mut gram = Matrix::zeros(m, m);
            for a in 0..m {
                for b in a..m {
                    let v: f64 = (0..points.len())
                        .map(|p| weights[p] * design[(p, a)] * design[(p, b)])
                        .sum();
                    gram[(a, b)] = v;
                    gram[(b, a)] = v;
                }
            }
            let cross = (0..m)
                .map(|j| (0..points.len()).map(|p| weights[p] * design[(p, j)] * fvals[p]).sum())
                .collect();
            let f_sq = weights.iter().zip(&fvals).map(|(w, f)| w * f * f).sum();
            PopulationMoments::new(gram, cross, f_sq)
        }
        _ => scenario.moments.clone().ok_or(Error::UnsupportedMeasure),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::DictionaryBounds;

    fn two_point(f: RegressionFn) -> Scenario {
        let dict = Dictionary::identity(1, DictionaryBounds::unit()).unwrap();
        let measure = DesignMeasure::Discrete { points: vec![vec![-1.0], vec![1.0]], weights: vec![0.5, 0.5] };
        Scenario::new(dict, f, measure, NoiseModel::Zero, 1.0).unwrap()
    }

    #[test]
    fn two_point_moments() {
        let m = population_moments(&two_point(RegressionFn::zero().term(0, 1.0))).unwrap();
        assert_eq!(m.gram, Matrix::identity(1));
        assert_eq!(m.cross, vec![1.0]);
        assert_eq!(m.f_sq, 1.0);
        let zero = population_moments(&two_point(RegressionFn::zero())).unwrap();
        assert_eq!(zero.cross, vec![0.0]);
        assert_eq!(zero.f_sq, 0.0);
    }

    #[test]
    fn zero_noise_gives_exact_responses() {
        let s = two_point(RegressionFn::zero().term(0, 2.0));
        let sample = sample_scenario(&s, 50, 3).unwrap();
        for (x, y) in sample.xs.iter().zip(&sample.y) {
            assert_eq!(*y, 2.0 * x[0]);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let mut s = two_point(RegressionFn::zero().term(0, 1.0));
        s.noise = NoiseModel::Laplace { scale: 0.3 };
        let a = sample_scenario(&s, 40, 9).unwrap();
        let b = sample_scenario(&s, 40, 9).unwrap();
        assert_eq!(a.y, b.y);
        assert_eq!(a.xs, b.xs);
        assert_eq!(a.noise, b.noise);
        let c = sample_scenario(&s, 40, 10).unwrap();
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn degenerate_weights_pick_one_point() {
        let mut s = two_point(RegressionFn::zero());
        s.measure = DesignMeasure::Discrete { points: vec![vec![0.25], vec![0.75]], weights: vec![1.0, 0.0] };
        let sample = sample_scenario(&s, 30, 1).unwrap();
        assert!(sample.xs.iter().all(|x| x[0] == 0.25));
        assert!(!sample.full_rank || sample.design.ncols() == 1);
    }

    #[test]
    fn moments_only_measure() {
        let mut s = two_point(RegressionFn::zero());
        s.measure = DesignMeasure::MomentsOnly { dim: 1 };
        assert!(matches!(sample_scenario(&s, 5, 0), Err(Error::Config(_))));
        assert!(matches!(population_moments(&s), Err(Error::UnsupportedMeasure)));
        let supplied = PopulationMoments::new(Matrix::identity(1), vec![0.5], 1.0).unwrap();
        let s = s.with_moments(supplied.clone()).unwrap();
        assert_eq!(population_moments(&s).unwrap(), supplied);
    }

    #[test]
    fn invalid_weights_rejected() {
        let mut s = two_point(RegressionFn::zero());
        s.measure = DesignMeasure::Discrete { points: vec![vec![0.0], vec![1.0]], weights: vec![0.7, 0.7] };
        assert!(s.validate().is_err());
    }

    #[test]
    fn empirical_gram_on_exhaustive_support_matches_population() {
        // Walsh dictionary on {-1,1}^3: a sample listing each vertex once has
        // empirical frequencies equal to the uniform weights.
        let dict = Dictionary::walsh(3, 7).unwrap();
        let measure = DesignMeasure::hypercube(3);
        let DesignMeasure::Discrete { points, .. } = measure.clone() else { unreachable!() };
        let s = Scenario::new(dict.clone(), RegressionFn::zero().term(2, 1.5), measure, NoiseModel::Zero, 2.0).unwrap();
        let pop = population_moments(&s).unwrap();
        let f = evaluate_design(&dict, &points).unwrap();
        let n = points.len() as f64;
        for a in 0..7 {
            for b in 0..7 {
                let emp = crate::linalg::dot(f.column(a), f.column(b)) / n;
                assert_eq!(emp, pop.gram[(a, b)]);
            }
        }
        assert_eq!(pop.gram, Matrix::identity(7));
    }

    #[test]
    fn empirical_gram_converges_at_large_n() {
        let dict = Dictionary::new(
            vec![DictFn::Coordinate(0), DictFn::Coordinate(1), DictFn::Monomial { factors: vec![(0, 1), (1, 1)] }],
            DictionaryBounds::unit(),
        )
        .unwrap();
        let s = Scenario::new(
            dict,
            RegressionFn::zero(),
            DesignMeasure::UniformCube { dim: 2, low: -1.0, high: 1.0 },
            NoiseModel::Zero,
            1.0,
        )
        .unwrap();
        let n = 100_000;
        let sample = sample_scenario(&s, n, 2024).unwrap();
        // uniform on [-1,1]^2: E x² = 1/3, E x²y² = 1/9, cross terms 0
        let gram = [[1.0 / 3.0, 0.0, 0.0], [0.0, 1.0 / 3.0, 0.0], [0.0, 0.0, 1.0 / 9.0]];
        let tol = 5.0 / (n as f64).sqrt();
        for a in 0..3 {
            for b in 0..3 {
                let emp = crate::linalg::dot(sample.design.column(a), sample.design.column(b)) / n as f64;
                assert!((emp - gram[a][b]).abs() < tol, "({a},{b}) {emp}");
            }
        }
    }
}
