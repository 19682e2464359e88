//! Human-authored TOML specifications and their translation into core types.

use std::fs;
use std::path::Path;

use lasso_select_core::diagnostics::{
    audit_scenario, check_coherence, correlations, event_bounds, target_deviation_bounds, tuning_sequence,
    BoundParams, BoundValue, BoundsAudit, CoherenceReport, EventBounds, DEFAULT_COHERENCE,
};
use lasso_select_core::dictionary::{
    population_moments, sample_scenario, DesignMeasure, DictFn, Dictionary, DictionaryBounds, NoiseModel,
    PopulationMoments, RegressionFn, Scenario,
};
use lasso_select_core::harness::{EventSelection, ExperimentConfig, TuningRule};
use lasso_select_core::oracle::{
    check_min_signal, target_set_with_limit, Ball, MinSignalCheck, TargetSpec, MAX_EXHAUSTIVE,
};
use lasso_select_core::solver::SolverOptions;
use lasso_select_core::Matrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    Ok(toml::from_str(&text)?)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DictionarySpec {
    /// First `count` non-constant Walsh functions on `{-1, 1}^dim`.
    Walsh { dim: usize, count: usize, bounds: Option<DictionaryBounds> },
    /// Coordinate projections `x ↦ x_j`.
    Identity { dim: usize, bounds: Option<DictionaryBounds> },
    Explicit { funcs: Vec<DictFn>, bounds: Option<DictionaryBounds> },
}

impl DictionarySpec {
    pub fn build(&self) -> Result<Dictionary> {
        Ok(match self {
            DictionarySpec::Walsh { dim, count, bounds } => {
                let d = Dictionary::walsh(*dim, *count)?;
                match bounds {
                    Some(b) => d.with_bounds(*b)?,
                    None => d,
                }
            }
            DictionarySpec::Identity { dim, bounds } => {
                Dictionary::identity(*dim, bounds.unwrap_or_else(DictionaryBounds::unspecified))?
            }
            DictionarySpec::Explicit { funcs, bounds } => {
                Dictionary::new(funcs.clone(), bounds.unwrap_or_else(DictionaryBounds::unspecified))?
            }
        })
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// Uniform on the vertices of `{-1, 1}^dim`.
    Hypercube { dim: usize },
    Discrete { points: Vec<Vec<f64>>, weights: Vec<f64> },
    UniformCube { dim: usize, low: f64, high: f64 },
    ClippedGaussian { dim: usize, clip: f64 },
    MomentsOnly { dim: usize },
}

impl MeasureSpec {
    pub fn build(&self) -> DesignMeasure {
        match self.clone() {
            MeasureSpec::Hypercube { dim } => DesignMeasure::hypercube(dim),
            MeasureSpec::Discrete { points, weights } => DesignMeasure::Discrete { points, weights },
            MeasureSpec::UniformCube { dim, low, high } => DesignMeasure::UniformCube { dim, low, high },
            MeasureSpec::ClippedGaussian { dim, clip } => DesignMeasure::ClippedGaussian { dim, clip },
            MeasureSpec::MomentsOnly { dim } => DesignMeasure::MomentsOnly { dim },
        }
    }
}

/// A term of `f` outside the dictionary: either a Walsh function given by
/// its variables or an arbitrary function.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraTerm {
    pub coef: f64,
    pub walsh: Option<Vec<usize>>,
    pub func: Option<DictFn>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionSpec {
    /// `(j, coefficient)` pairs on dictionary functions.
    pub terms: Vec<(usize, f64)>,
    pub extra: Vec<ExtraTerm>,
}

impl RegressionSpec {
    pub fn build(&self) -> Result<RegressionFn> {
        let mut f = RegressionFn::zero();
        for &(j, c) in &self.terms {
            f = f.term(j, c);
        }
        for t in &self.extra {
            let g = match (&t.walsh, &t.func) {
                (Some(vars), None) => DictFn::walsh(vars),
                (None, Some(g)) => g.clone(),
                _ => return Err(Error::Config("each extra term needs exactly one of `walsh` or `func`".into())),
            };
            f = f.extra(t.coef, g);
        }
        Ok(f)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsSpec {
    pub gram: Vec<Vec<f64>>,
    pub cross: Vec<f64>,
    pub f_sq: f64,
}

impl MomentsSpec {
    pub fn build(&self) -> Result<PopulationMoments> {
        Ok(PopulationMoments::new(Matrix::from_rows(&self.gram)?, self.cross.clone(), self.f_sq)?)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub dictionary: DictionarySpec,
    #[serde(default)]
    pub regression: RegressionSpec,
    pub measure: MeasureSpec,
    #[serde(default = "zero_noise")]
    pub noise: NoiseModel,
    /// Declared `‖f‖_∞` bound; computed exactly for discrete measures when
    /// absent.
    pub f_sup_bound: Option<f64>,
    pub moments: Option<MomentsSpec>,
}

fn zero_noise() -> NoiseModel {
    NoiseModel::Zero
}

impl ScenarioSpec {
    pub fn build(&self) -> Result<Scenario> {
        let dictionary = self.dictionary.build()?;
        let regression = self.regression.build()?;
        let measure = self.measure.build();
        let f_sup = match (self.f_sup_bound, &measure) {
            (Some(b), _) => b,
            (None, DesignMeasure::Discrete { points, weights }) => {
                let mut sup: f64 = 0.0;
                for (i, (p, &w)) in points.iter().zip(weights).enumerate() {
                    if w > 0.0 {
                        sup = sup.max(regression.eval(&dictionary, i, p)?.abs());
                    }
                }
                // the declared bound must be positive even for f = 0
                sup.max(f64::MIN_POSITIVE)
            }
            (None, _) => return Err(Error::Config("f_sup_bound is required for non-discrete measures".into())),
        };
        let scenario = Scenario::new(dictionary, regression, measure, self.noise, f_sup)?;
        Ok(match &self.moments {
            Some(m) => scenario.with_moments(m.build()?)?,
            None => scenario,
        })
    }
}

/// Population moments of a scenario: supplied closed forms, or exact sums
/// over a discrete measure.
pub fn scenario_moments(scenario: &Scenario) -> Result<PopulationMoments> {
    match &scenario.moments {
        Some(m) => Ok(m.clone()),
        None => Ok(population_moments(scenario)?),
    }
}

/// Ball radius parameter: given directly, or `r_{n,M}` at a reference `n`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusSpec {
    pub r: Option<f64>,
    pub reference_n: Option<usize>,
}

impl RadiusSpec {
    fn resolve(&self, tuning: Option<&TuningRule>, m: usize) -> Result<f64> {
        match (self.r, self.reference_n, tuning) {
            (Some(r), None, _) => Ok(r),
            (None, Some(n), Some(t)) => Ok(tuning_sequence(&t.at(n, m))?),
            (None, Some(_), None) => Err(Error::Config("reference_n needs a tuning rule".into())),
            _ => Err(Error::Config("target needs exactly one of `r` or `reference_n`".into())),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "from", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetInput {
    /// Exhaustive search over the population moments.
    Oracle {
        c_f: f64,
        r: Option<f64>,
        reference_n: Option<usize>,
        limit: Option<usize>,
    },
    /// Known exact representation `f = Σ λ_j f_j`.
    Exact { c_f: f64, r: Option<f64>, reference_n: Option<usize>, coefficients: Vec<(usize, f64)> },
}

impl TargetInput {
    pub fn build(&self, scenario: &Scenario, tuning: Option<&TuningRule>) -> Result<TargetSpec> {
        let m = scenario.dictionary.len();
        let target = match *self {
            TargetInput::Oracle { c_f, r, reference_n, limit } => {
                let r = RadiusSpec { r, reference_n }.resolve(tuning, m)?;
                let moments = scenario_moments(scenario)?;
                target_set_with_limit(&moments, Ball { c_f, r }, limit.unwrap_or(MAX_EXHAUSTIVE))?
            }
            TargetInput::Exact { c_f, r, reference_n, ref coefficients } => {
                let r = RadiusSpec { r, reference_n }.resolve(tuning, m)?;
                let mut lambda = vec![0.0; m];
                for &(j, v) in coefficients {
                    *lambda.get_mut(j).ok_or_else(|| Error::Config(format!("coefficient index {j} >= M = {m}")))? = v;
                }
                TargetSpec::from_exact_representation(lambda, Ball { c_f, r })
            }
        };
        Ok(match scenario.measure {
            DesignMeasure::Discrete { .. } => {
                let gap = lasso_select_core::diagnostics::sup_gap(scenario, &target)?;
                target.with_sup_gap(gap)
            }
            _ => target,
        })
    }
}

fn default_b() -> f64 {
    1.0
}

fn default_coherence() -> f64 {
    DEFAULT_COHERENCE
}

fn default_ceiling() -> f64 {
    10.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: ScenarioSpec,
    pub target: TargetInput,
    pub tuning: TuningRule,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_b")]
    pub min_signal_b: f64,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub events: EventSelection,
    #[serde(default = "default_coherence")]
    pub coherence: f64,
    #[serde(default = "default_ceiling")]
    pub l1_ratio_ceiling: f64,
}

impl ExperimentSpec {
    pub fn build(&self) -> Result<ExperimentConfig> {
        let scenario = self.scenario.build()?;
        let target = self.target.build(&scenario, Some(&self.tuning))?;
        let cfg = ExperimentConfig {
            scenario,
            target,
            tuning: self.tuning,
            n_grid: self.n_grid.clone(),
            replicates: self.replicates,
            base_seed: self.base_seed,
            min_signal_b: self.min_signal_b,
            solver: self.solver,
            events: self.events,
            coherence: self.coherence,
            l1_ratio_ceiling: self.l1_ratio_ceiling,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_experiment(path: &Path) -> Result<ExperimentConfig> {
    load_toml::<ExperimentSpec>(path)?.build()
}

/// Input of the `oracle` command: a scenario or explicit moments, and a ball.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub scenario: Option<ScenarioSpec>,
    pub moments: Option<MomentsSpec>,
    pub c_f: f64,
    pub r: f64,
    pub limit: Option<usize>,
}

impl OracleSpec {
    pub fn run(&self) -> Result<TargetSpec> {
        let ball = Ball { c_f: self.c_f, r: self.r };
        let limit = self.limit.unwrap_or(MAX_EXHAUSTIVE);
        match (&self.scenario, &self.moments) {
            (Some(s), None) => {
                let scenario = s.build()?;
                TargetInput::Oracle { c_f: self.c_f, r: Some(self.r), reference_n: None, limit: Some(limit) }
                    .build(&scenario, None)
            }
            (None, Some(m)) => Ok(target_set_with_limit(&m.build()?, ball, limit)?),
            _ => Err(Error::Config("oracle needs exactly one of [scenario] or [moments]".into())),
        }
    }
}

/// Input of the `audit` command.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSpec {
    pub scenario: ScenarioSpec,
    pub target: TargetInput,
    pub tuning: Option<TuningRule>,
    #[serde(default = "default_b")]
    pub min_signal_b: f64,
    #[serde(default = "default_coherence")]
    pub coherence: f64,
    /// Declared `L* ≥ ‖f − f*‖_∞`.
    pub sup_gap_bound: Option<f64>,
    /// Sample used for the boundedness audit when the measure is not discrete.
    pub sample_n: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub target: TargetSpec,
    pub boundedness: BoundsAudit,
    pub coherence: Option<CoherenceReport>,
    pub min_signal: MinSignalCheck,
}

impl AuditSpec {
    pub fn run(&self) -> Result<AuditReport> {
        let scenario = self.scenario.build()?;
        let target = self.target.build(&scenario, self.tuning.as_ref())?;
        let sample = match (&scenario.measure, self.sample_n) {
            (DesignMeasure::Discrete { .. }, _) => None,
            (_, Some(n)) => Some(sample_scenario(&scenario, n, self.seed)?),
            (_, None) => return Err(Error::Config("sample_n is required for non-discrete measures".into())),
        };
        let boundedness = audit_scenario(&scenario, sample.as_ref(), Some(&target), self.sup_gap_bound)?;
        let coherence = match scenario_moments(&scenario) {
            Ok(m) => Some(check_coherence(&correlations(&m.gram)?, &target.support, self.coherence)),
            Err(Error::Core(lasso_select_core::Error::UnsupportedMeasure)) => None,
            Err(e) => return Err(e),
        };
        let min_signal = check_min_signal(&target, self.min_signal_b);
        Ok(AuditReport { target, boundedness, coherence, min_signal })
    }
}

/// Input of the `bounds` command.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    #[serde(default)]
    pub constants: BoundParams,
    pub k_star: usize,
    pub m: usize,
    pub n_grid: Vec<usize>,
    pub tuning: TuningRule,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsRow {
    pub n: usize,
    pub r: f64,
    pub pi_star: BoundValue,
    pub p_star: BoundValue,
    pub events: EventBounds,
    /// `M · p*`.
    pub m_p_star: f64,
}

impl BoundsSpec {
    pub fn table(&self) -> Result<Vec<BoundsRow>> {
        self.constants.validate()?;
        self.n_grid
            .iter()
            .map(|&n| {
                let r = tuning_sequence(&self.tuning.at(n, self.m))?;
                let t = target_deviation_bounds(&self.constants, self.k_star, r, n, self.m);
                Ok(BoundsRow {
                    n,
                    r,
                    pi_star: t.pi_star,
                    p_star: t.p_star,
                    events: event_bounds(&self.constants, r, n, self.m),
                    m_p_star: self.m as f64 * t.p_star.raw,
                })
            })
            .collect()
    }
}
