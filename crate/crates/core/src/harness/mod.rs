//! Seeded Monte Carlo replicates of the selection experiment and their
//! aggregation.
//!
//! A replicate at sample size `n` with seed `s` draws a sample, fits the
//! weighted Lasso at `r = tuning_sequence(n, M)`, compares `Î` with the target
//! support `I*`, and records the events used to rule out false inclusions.
//! Replicates are pure functions of `(config, n, seed)`; aggregation folds
//! them in seed order, so results do not depend on how replicates were
//! scheduled.

mod stats;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use stats::{wilson_interval, Interval, Z_95};

use crate::diagnostics::{check_coherence, correlations, tuning_sequence, CoherenceReport, Regime, TuningConfig};
use crate::dictionary::{population_moments, sample_scenario, DesignMeasure, PopulationMoments, Scenario};
use crate::linalg::dot;
use crate::oracle::{check_min_signal, MinSignalCheck, TargetSpec};
use crate::solver::{
    compute_penalty, restricted_dual_feasibility, solve_restricted, solve_weighted_lasso, SolverOptions,
};
use crate::{Error, Result};

/// Tuning rule; `M` is taken from the dictionary and `n` from the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningRule {
    pub a: f64,
    pub regime: Regime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_cap: Option<f64>,
}

impl TuningRule {
    pub fn at(&self, n: usize, m: usize) -> TuningConfig {
        TuningConfig { a: self.a, regime: self.regime, n, m, gamma_cap: self.gamma_cap }
    }
}

/// Which proof events each replicate evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EventSelection {
    pub b: bool,
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
}

impl Default for EventSelection {
    fn default() -> Self {
        Self { b: true, e1: true, e2: true, e3: true }
    }
}

fn default_coherence() -> f64 {
    crate::diagnostics::DEFAULT_COHERENCE
}

fn default_ceiling() -> f64 {
    10.0
}

fn default_b() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub target: TargetSpec,
    pub tuning: TuningRule,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    /// Constant `B` of the minimum-signal condition.
    #[serde(default = "default_b")]
    pub min_signal_b: f64,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub events: EventSelection,
    /// Coherence constant `C`, also used in `δ = 2 C L² r`.
    #[serde(default = "default_coherence")]
    pub coherence: f64,
    /// Ceiling on the mean of `|λ̂ − λ*|₁ / (k* r)`.
    #[serde(default = "default_ceiling")]
    pub l1_ratio_ceiling: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_grid must be nonempty and strictly increasing".into()));
        }
        let m = self.scenario.dictionary.len();
        if self.target.lambda_star.len() != m {
            return Err(Error::Dimension(alloc::format!(
                "target has {} coefficients for a dictionary of size {m}",
                self.target.lambda_star.len()
            )));
        }
        if !(self.coherence > 0.0) || !(self.l1_ratio_ceiling > 0.0) {
            return Err(Error::Config("coherence and l1_ratio_ceiling must be positive".into()));
        }
        if self.base_seed.checked_add(self.replicates as u64 - 1).is_none() {
            return Err(Error::Config("base_seed + replicates overflows".into()));
        }
        Ok(())
    }

    /// Seed of replicate `i`.
    pub fn seed(&self, i: usize) -> u64 {
        self.base_seed + i as u64
    }

    /// Every `(n, seed)` pair, grouped by `n` in grid order and by seed within.
    pub fn jobs(&self) -> Vec<(usize, u64)> {
        self.n_grid.iter().flat_map(|&n| (0..self.replicates).map(move |i| (n, self.base_seed + i as u64))).collect()
    }
}

/// Per-replicate record.
///
/// Event flags are `None` when not requested or not observable (E1 needs the
/// noise; E2 and E3 need population moments).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub seed: u64,
    pub n: usize,
    pub r: f64,
    pub i_hat: Vec<usize>,
    pub exact_recovery: bool,
    pub miss: bool,
    pub false_inclusion: bool,
    pub l1_error: f64,
    /// `l1_error / (k* r)`; `None` when `k* = 0`.
    pub l1_ratio: Option<f64>,
    pub event_b: Option<bool>,
    pub e1_all: Option<bool>,
    /// `‖f_k‖_n² ≥ ‖f_k‖²/4` for every `k ∉ I*`.
    pub e2_all: Option<bool>,
    /// Variant with `‖f‖²` in place of `‖f_k‖²`.
    pub e2_f_all: Option<bool>,
    pub e3_all: Option<bool>,
    pub kkt_pass: bool,
    pub kkt_max_violation: f64,
    pub sweeps: usize,
    pub full_rank: bool,
}

/// Outcome of one job: a result, or the reason the replicate was excluded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicateOutcome {
    Completed(ReplicateResult),
    Failed { n: usize, seed: u64, reason: String },
}

/// Population quantities shared by all replicates of an experiment.
#[derive(Clone, Debug)]
pub struct Prepared<'a> {
    pub cfg: &'a ExperimentConfig,
    pub moments: Option<PopulationMoments>,
}

impl<'a> Prepared<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let moments = match (&cfg.scenario.moments, &cfg.scenario.measure) {
            (Some(m), _) => Some(m.clone()),
            (None, DesignMeasure::Discrete { .. }) => Some(population_moments(&cfg.scenario)?),
            _ => None,
        };
        Ok(Self { cfg, moments })
    }

    /// Runs one replicate. Convergence failures become
    /// [`ReplicateOutcome::Failed`]; other errors propagate.
    pub fn outcome(&self, n: usize, seed: u64) -> Result<ReplicateOutcome> {
        match self.replicate(n, seed) {
            Ok(r) => Ok(ReplicateOutcome::Completed(r)),
            Err(e @ Error::Convergence { .. }) => {
                Ok(ReplicateOutcome::Failed { n, seed, reason: alloc::format!("{e}") })
            }
            Err(e) => Err(e),
        }
    }

    pub fn replicate(&self, n: usize, seed: u64) -> Result<ReplicateResult> {
        let cfg = self.cfg;
        let target = &cfg.target;
        let m = cfg.scenario.dictionary.len();
        let r = tuning_sequence(&cfg.tuning.at(n, m))?;
        let sample = sample_scenario(&cfg.scenario, n, seed)?;
        let pen = compute_penalty(&sample.col_norms, r)?;
        let sol = solve_weighted_lasso(&sample.design, &sample.y, &pen, &cfg.solver)?;

        let i_star = &target.support;
        let i_hat = sol.support.clone();
        let miss = i_star.iter().any(|j| !i_hat.contains(j));
        let false_inclusion = i_hat.iter().any(|j| !i_star.contains(j));
        let l1_error: f64 = sol.lambda_hat.iter().zip(&target.lambda_star).map(|(a, b)| (a - b).abs()).sum();
        let l1_ratio = (target.k_star > 0).then(|| l1_error / (target.k_star as f64 * r));

        let event_b = if cfg.events.b {
            let tilde = solve_restricted(&sample.design, &sample.y, &pen, i_star, &cfg.solver)?;
            Some(restricted_dual_feasibility(&tilde, &sample.design, &sample.y, &pen, i_star).holds)
        } else {
            None
        };

        let off_target: Vec<usize> = (0..m).filter(|k| !i_star.contains(k)).collect();
        let nf = n as f64;
        let e1_all = match (&sample.noise, cfg.events.e1) {
            (Some(w), true) => Some(off_target.iter().all(|&k| {
                (dot(w, sample.design.column(k)) / nf).abs() < r * sample.col_norms[k] / 2.0
            })),
            _ => None,
        };
        let (mut e2_all, mut e2_f_all, mut e3_all) = (None, None, None);
        if let Some(mom) = &self.moments {
            if cfg.events.e2 {
                let sq = |k: usize| sample.col_norms[k] * sample.col_norms[k];
                e2_all = Some(off_target.iter().all(|&k| sq(k) >= mom.gram[(k, k)] / 4.0));
                e2_f_all = Some(off_target.iter().all(|&k| sq(k) >= mom.f_sq / 4.0));
            }
            if cfg.events.e3 {
                let l = sup_constant(&cfg.scenario, &sample.design);
                let delta = 2.0 * cfg.coherence * l * l * r;
                e3_all = Some(off_target.iter().all(|&k| {
                    i_star.iter().all(|&j| {
                        let emp = dot(sample.design.column(j), sample.design.column(k)) / nf;
                        emp.abs() <= 2.0 * mom.gram[(j, k)].abs() + delta
                    })
                }));
            }
        }

        Ok(ReplicateResult {
            seed,
            n,
            r,
            exact_recovery: !miss && !false_inclusion,
            i_hat,
            miss,
            false_inclusion,
            l1_error,
            l1_ratio,
            event_b,
            e1_all,
            e2_all,
            e2_f_all,
            e3_all,
            kkt_pass: sol.kkt.pass,
            kkt_max_violation: sol.kkt.max_violation,
            sweeps: sol.sweeps,
            full_rank: sample.full_rank,
        })
    }
}

/// Declared `L`, or the largest observed `|f_j(X_i)|` when none was declared.
fn sup_constant(scenario: &Scenario, design: &crate::Matrix) -> f64 {
    let declared = scenario.dictionary.bounds().sup;
    if declared.is_finite() {
        declared
    } else {
        (0..design.ncols()).flat_map(|j| design.column(j).iter()).fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

/// One replicate, computed from scratch.
pub fn run_replicate(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<ReplicateResult> {
    Prepared::new(cfg)?.replicate(n, seed)
}

/// Frequency of an event among the replicates where it was observed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventFrequency {
    pub observed: usize,
    pub holds: usize,
    pub frequency: Option<f64>,
}

impl EventFrequency {
    fn tally(flags: impl Iterator<Item = Option<bool>>) -> Self {
        let (mut observed, mut holds) = (0, 0);
        for f in flags.flatten() {
            observed += 1;
            holds += usize::from(f);
        }
        Self { observed, holds, frequency: (observed > 0).then(|| holds as f64 / observed as f64) }
    }
}

/// Aggregates at one sample size, over completed replicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub r: f64,
    pub kstar_r: f64,
    pub completed: usize,
    pub failed: usize,
    pub exact: usize,
    pub miss: usize,
    pub false_inclusion: usize,
    /// Replicates with a miss or a false inclusion.
    pub miss_or_false: usize,
    pub p_exact: f64,
    pub p_miss: f64,
    pub p_false: f64,
    pub ci_exact: Interval,
    pub ci_miss: Interval,
    pub ci_false: Interval,
    pub mean_l1_ratio: Option<f64>,
    pub l1_ratio_within_ceiling: bool,
    pub event_b: EventFrequency,
    pub e1: EventFrequency,
    pub e2: EventFrequency,
    pub e2_f: EventFrequency,
    pub e3: EventFrequency,
    /// Replicates where event B held and yet `Î ⊄ I*`; always zero in theory.
    pub b_with_false_inclusion: usize,
    pub kkt_failures: usize,
}

impl Aggregate {
    /// `#exact = completed − #(miss ∪ false inclusion)`.
    pub fn decomposition_holds(&self) -> bool {
        self.exact + self.miss_or_false == self.completed
    }
}

fn aggregate(cfg: &ExperimentConfig, n: usize, outcomes: &[&ReplicateOutcome]) -> Result<Aggregate> {
    let done: Vec<&ReplicateResult> = outcomes
        .iter()
        .filter_map(|o| match o {
            ReplicateOutcome::Completed(r) => Some(r),
            ReplicateOutcome::Failed { .. } => None,
        })
        .collect();
    if done.is_empty() {
        return Err(Error::Experiment { n, replicates: outcomes.len() });
    }
    let count = |f: &dyn Fn(&ReplicateResult) -> bool| done.iter().filter(|r| f(r)).count();
    let completed = done.len();
    let exact = count(&|r| r.exact_recovery);
    let miss = count(&|r| r.miss);
    let false_inclusion = count(&|r| r.false_inclusion);
    let miss_or_false = count(&|r| r.miss || r.false_inclusion);
    let ratios: Vec<f64> = done.iter().filter_map(|r| r.l1_ratio).collect();
    let mean_l1_ratio = (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64);
    let r = done[0].r;
    let prob = |c: usize| c as f64 / completed as f64;
    let ci = |c: usize| wilson_interval(c, completed, Z_95);
    Ok(Aggregate {
        n,
        r,
        kstar_r: cfg.target.k_star as f64 * r,
        completed,
        failed: outcomes.len() - completed,
        exact,
        miss,
        false_inclusion,
        miss_or_false,
        p_exact: prob(exact),
        p_miss: prob(miss),
        p_false: prob(false_inclusion),
        ci_exact: ci(exact),
        ci_miss: ci(miss),
        ci_false: ci(false_inclusion),
        mean_l1_ratio,
        l1_ratio_within_ceiling: mean_l1_ratio.is_none_or(|v| v <= cfg.l1_ratio_ceiling),
        event_b: EventFrequency::tally(done.iter().map(|r| r.event_b)),
        e1: EventFrequency::tally(done.iter().map(|r| r.e1_all)),
        e2: EventFrequency::tally(done.iter().map(|r| r.e2_all)),
        e2_f: EventFrequency::tally(done.iter().map(|r| r.e2_f_all)),
        e3: EventFrequency::tally(done.iter().map(|r| r.e3_all)),
        b_with_false_inclusion: count(&|r| r.event_b == Some(true) && r.false_inclusion),
        kkt_failures: count(&|r| !r.kkt_pass),
    })
}

/// Checks run once per experiment on the population target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preconditions {
    /// Minimum signal against `B r` for `r` at the first grid point.
    pub min_signal: MinSignalCheck,
    pub coherence: Option<CoherenceReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub preconditions: Preconditions,
    pub outcomes: Vec<ReplicateOutcome>,
    pub aggregates: Vec<Aggregate>,
    /// Elapsed seconds, when measured; never serialized so that results
    /// files are reproducible.
    #[serde(skip)]
    pub wall_clock_secs: Option<f64>,
}

impl ExperimentResult {
    pub fn replicates(&self) -> impl Iterator<Item = &ReplicateResult> {
        self.outcomes.iter().filter_map(|o| match o {
            ReplicateOutcome::Completed(r) => Some(r),
            ReplicateOutcome::Failed { .. } => None,
        })
    }
}

/// Runs the experiment with a caller-supplied executor.
///
/// `exec` receives the job list from [`ExperimentConfig::jobs`] and a
/// replicate function, and must return the outcomes in job order; it is free
/// to evaluate jobs concurrently.
pub fn run_experiment_with<E>(cfg: &ExperimentConfig, exec: E) -> Result<ExperimentResult>
where
    E: FnOnce(&[(usize, u64)], &(dyn Fn(usize, u64) -> Result<ReplicateOutcome> + Sync)) -> Vec<Result<ReplicateOutcome>>,
{
    let prepared = Prepared::new(cfg)?;
    let jobs = cfg.jobs();
    let outcomes = exec(&jobs, &|n, seed| prepared.outcome(n, seed)).into_iter().collect::<Result<Vec<_>>>()?;
    if outcomes.len() != jobs.len() {
        return Err(Error::Dimension("executor returned the wrong number of outcomes".into()));
    }

    let aggregates = outcomes
        .chunks(cfg.replicates)
        .zip(&cfg.n_grid)
        .map(|(chunk, &n)| aggregate(cfg, n, &chunk.iter().collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;

    let m = cfg.scenario.dictionary.len();
    let r0 = tuning_sequence(&cfg.tuning.at(cfg.n_grid[0], m))?;
    let min_signal = check_min_signal(&TargetSpec { r: r0, ..cfg.target.clone() }, cfg.min_signal_b);
    let coherence = match &prepared.moments {
        Some(mom) => Some(check_coherence(&correlations(&mom.gram)?, &cfg.target.support, cfg.coherence)),
        None => None,
    };
    Ok(ExperimentResult {
        config: cfg.clone(),
        preconditions: Preconditions { min_signal, coherence },
        outcomes,
        aggregates,
        wall_clock_secs: None,
    })
}

/// Runs every replicate sequentially.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with(cfg, |jobs, f| jobs.iter().map(|&(n, s)| f(n, s)).collect())
}

/// Row of the consistency curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n: usize,
    pub r: f64,
    pub kstar_r: f64,
    pub p_exact: f64,
    pub p_miss: f64,
    pub p_false: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn curve_rows(result: &ExperimentResult) -> Vec<CurveRow> {
    result
        .aggregates
        .iter()
        .map(|a| CurveRow {
            n: a.n,
            r: a.r,
            kstar_r: a.kstar_r,
            p_exact: a.p_exact,
            p_miss: a.p_miss,
            p_false: a.p_false,
            ci_lo: a.ci_exact.lo,
            ci_hi: a.ci_exact.hi,
        })
        .collect()
}

pub fn consistency_curve(cfg: &ExperimentConfig) -> Result<Vec<CurveRow>> {
    Ok(curve_rows(&run_experiment(cfg)?))
}
