//! Function dictionaries, regression scenarios, sampling and population moments.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::{Error, Result};

mod noise;
mod scenario;

pub use noise::NoiseModel;
pub use scenario::{
    population_moments, sample_scenario, DesignMeasure, PopulationMoments, RegressionFn, Sample,
    Scenario,
};

/// Caller-supplied evaluator. Not serializable.
#[derive(Clone)]
pub struct CustomFn {
    pub name: String,
    pub eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl CustomFn {
    pub fn new(name: impl Into<String>, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), eval: Arc::new(eval) }
    }
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFn").field("name", &self.name).finish_non_exhaustive()
    }
}

/// A real-valued function on `R^d`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictFn {
    Constant(f64),
    /// `x ↦ x[i]`.
    Coordinate(usize),
    /// `x ↦ Π x[i]^p` over the listed `(i, p)` factors. Walsh functions on
    /// the hypercube are monomials with unit powers.
    Monomial { factors: Vec<(usize, u32)> },
    /// `x ↦ Σ_p coeffs[p] · x[var]^p`.
    Polynomial { var: usize, coeffs: Vec<f64> },
    /// Value of a precomputed dictionary column; the point is the row of
    /// precomputed values for one observation.
    Precomputed(usize),
    #[serde(skip)]
    Custom(CustomFn),
}

impl DictFn {
    pub fn walsh(vars: &[usize]) -> Self {
        DictFn::Monomial { factors: vars.iter().map(|&v| (v, 1)).collect() }
    }

    /// Smallest point dimension this function can be evaluated on.
    pub fn required_dim(&self) -> usize {
        match self {
            DictFn::Constant(_) | DictFn::Custom(_) => 0,
            DictFn::Coordinate(i) | DictFn::Precomputed(i) => i + 1,
            DictFn::Monomial { factors } => factors.iter().map(|&(i, _)| i + 1).max().unwrap_or(0),
            DictFn::Polynomial { var, .. } => var + 1,
        }
    }

    pub fn eval(&self, x: &[f64]) -> core::result::Result<f64, String> {
        let coord = |i: usize| {
            x.get(i).copied().ok_or_else(|| {
                alloc::format!("coordinate {i} requested from a point of dimension {}", x.len())
            })
        };
        let value = match self {
            DictFn::Constant(c) => *c,
            DictFn::Coordinate(i) | DictFn::Precomputed(i) => coord(*i)?,
            DictFn::Monomial { factors } => {
                let mut v = 1.0;
                for &(i, p) in factors {
                    v *= coord(i)?.powi(p as i32);
                }
                v
            }
            DictFn::Polynomial { var, coeffs } => {
                let t = coord(*var)?;
                coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
            }
            DictFn::Custom(f) => (f.eval)(x),
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err("function value is not finite".to_string())
        }
    }
}

/// Declared constants for the dictionary: a sup-norm bound `L`, a floor
/// `c0` on the population norms and a bound `L0` on the mixed fourth
/// moments `E f_i² f_j²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DictionaryBounds {
    pub sup: f64,
    pub norm_floor: f64,
    pub fourth_moment: f64,
}

impl DictionaryBounds {
    /// Placeholder bounds for dictionaries built from data, where nothing is
    /// known a priori.
    pub fn unspecified() -> Self {
        Self { sup: f64::INFINITY, norm_floor: f64::MIN_POSITIVE, fourth_moment: f64::INFINITY }
    }

    /// Bounds for functions with values in `[-1, 1]` and unit norm, such as
    /// Walsh functions under the uniform measure on the hypercube.
    pub fn unit() -> Self {
        Self { sup: 1.0, norm_floor: 1.0, fourth_moment: 1.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Dictionary {
    funcs: Vec<DictFn>,
    bounds: DictionaryBounds,
}

impl Dictionary {
    pub fn new(funcs: Vec<DictFn>, bounds: DictionaryBounds) -> Result<Self> {
        if funcs.is_empty() {
            return Err(Error::Config("a dictionary needs at least one function".into()));
        }
        let DictionaryBounds { sup, norm_floor, fourth_moment } = bounds;
        if !(sup > 0.0 && norm_floor > 0.0 && fourth_moment > 0.0) {
            return Err(Error::Config("dictionary bounds must be strictly positive".into()));
        }
        Ok(Self { funcs, bounds })
    }

    /// `f_j(x) = x_j` for `j < dim`.
    pub fn identity(dim: usize, bounds: DictionaryBounds) -> Result<Self> {
        Self::new((0..dim).map(DictFn::Coordinate).collect(), bounds)
    }

    /// The first `count` non-constant Walsh functions on `{-1, 1}^dim`,
    /// ordered by degree and then lexicographically by variable set.
    pub fn walsh(dim: usize, count: usize) -> Result<Self> {
        let subsets = walsh_subsets(dim);
        if count > subsets.len() {
            return Err(Error::Config(alloc::format!(
                "only {} non-constant Walsh functions exist in dimension {dim}",
                subsets.len()
            )));
        }
        let funcs = subsets.iter().take(count).map(|s| DictFn::walsh(s)).collect();
        Self::new(funcs, DictionaryBounds::unit())
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    pub fn funcs(&self) -> &[DictFn] {
        &self.funcs
    }

    pub fn bounds(&self) -> DictionaryBounds {
        self.bounds
    }

    pub fn with_bounds(mut self, bounds: DictionaryBounds) -> Result<Self> {
        self.bounds = bounds;
        Self::new(self.funcs, bounds)
    }

    pub fn eval_point(&self, index: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.funcs
            .iter()
            .map(|f| f.eval(x).map_err(|reason| Error::Domain { index, reason }))
            .collect()
    }
}

/// Non-empty subsets of `{0, .., dim-1}` by size, then lexicographically.
pub fn walsh_subsets(dim: usize) -> Vec<Vec<usize>> {
    (1..=dim).flat_map(|k| (0..dim).combinations(k)).collect()
}

/// The `n × M` matrix with entries `f_j(x_i)`.
pub fn evaluate_design(dictionary: &Dictionary, xs: &[Vec<f64>]) -> Result<Matrix> {
    let (n, m) = (xs.len(), dictionary.len());
    let mut design = Matrix::zeros(n, m);
    for (i, x) in xs.iter().enumerate() {
        for (j, f) in dictionary.funcs.iter().enumerate() {
            design[(i, j)] = f.eval(x).map_err(|reason| Error::Domain { index: i, reason })?;
        }
    }
    Ok(design)
}

/// Empirical norms `‖f_j‖_n = sqrt(n⁻¹ Σ_i F[i,j]²)` of each column.
pub fn empirical_norms(design: &Matrix) -> Vec<f64> {
    let n = design.nrows() as f64;
    (0..design.ncols())
        .map(|j| (design.column(j).iter().map(|v| v * v).sum::<f64>() / n).sqrt())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identity_dictionary_on_identity_points() {
        let dict = Dictionary::identity(2, DictionaryBounds::unit()).unwrap();
        let f = evaluate_design(&dict, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(f, Matrix::identity(2));
    }

    #[test]
    fn constant_dictionary_gives_ones() {
        let dict = Dictionary::new(vec![DictFn::Constant(1.0)], DictionaryBounds::unit()).unwrap();
        let f = evaluate_design(&dict, &[vec![0.3], vec![-2.0], vec![7.0]]).unwrap();
        assert_eq!(f.column(0), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn polynomial_row() {
        let funcs = vec![
            DictFn::Polynomial { var: 0, coeffs: vec![0.0, 1.0] },
            DictFn::Polynomial { var: 0, coeffs: vec![0.0, 0.0, 1.0] },
        ];
        let dict = Dictionary::new(funcs, DictionaryBounds::unspecified()).unwrap();
        let f = evaluate_design(&dict, &[vec![2.0]]).unwrap();
        assert_eq!(f.row(0), vec![2.0, 4.0]);
    }

    #[test]
    fn domain_error_reports_offending_point() {
        let dict = Dictionary::identity(3, DictionaryBounds::unit()).unwrap();
        let err = evaluate_design(&dict, &[vec![1.0, 2.0, 3.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, Error::Domain { index: 1, .. }));
        let nan = Dictionary::new(
            vec![DictFn::Custom(CustomFn::new("log", |x: &[f64]| x[0].ln()))],
            DictionaryBounds::unspecified(),
        )
        .unwrap();
        assert!(matches!(evaluate_design(&nan, &[vec![1.0], vec![-1.0]]), Err(Error::Domain { index: 1, .. })));
    }

    #[test]
    fn empirical_norm_examples() {
        let f = Matrix::from_columns(2, &[vec![1.0, 1.0], vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let norms = empirical_norms(&f);
        assert_eq!(norms[0], 1.0);
        assert_eq!(norms[1], 0.0);
        // sqrt(25/2)
        assert!((norms[2] - 3.535_533_905_932_737_6).abs() < 1e-15);
    }

    #[test]
    fn scaled_identity_has_unit_norms() {
        let n = 7;
        let mut f = Matrix::identity(n);
        for j in 0..n {
            f[(j, j)] = (n as f64).sqrt();
        }
        for v in empirical_norms(&f) {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn walsh_order_and_count() {
        let subsets = walsh_subsets(3);
        assert_eq!(subsets.len(), 7);
        assert_eq!(subsets[0], vec![0]);
        assert_eq!(subsets[3], vec![0, 1]);
        assert_eq!(subsets[6], vec![0, 1, 2]);
        assert!(Dictionary::walsh(3, 8).is_err());
        let dict = Dictionary::walsh(3, 7).unwrap();
        assert_eq!(dict.eval_point(0, &[1.0, -1.0, -1.0]).unwrap()[6], 1.0);
    }

    #[test]
    fn rejects_bad_bounds_and_empty() {
        assert!(Dictionary::new(vec![], DictionaryBounds::unit()).is_err());
        let bounds = DictionaryBounds { sup: 0.0, ..DictionaryBounds::unit() };
        assert!(Dictionary::new(vec![DictFn::Coordinate(0)], bounds).is_err());
    }
}
