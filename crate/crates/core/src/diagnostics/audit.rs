#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dictionary::{evaluate_design, DesignMeasure, Dictionary, RegressionFn, Sample, Scenario};
use crate::oracle::TargetSpec;
use crate::{Error, Result};

/// Boundedness clauses audited on a dictionary and regression function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    /// `‖f_j‖_∞ ≤ L`
    SupNorm,
    /// `‖f_j‖ ≥ c0`
    NormFloor,
    /// `E f_i² f_j² ≤ L0`
    FourthMoment,
    /// `‖f‖_∞ ≤ L1`
    FSup,
    /// `‖f − f*‖_∞ ≤ L*`
    SupGap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClauseCheck {
    pub clause: Clause,
    pub measured: f64,
    pub declared: f64,
    pub pass: bool,
    /// Measured on sample points: sup-norms are lower bounds only and
    /// moments are empirical.
    pub empirical: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsAudit {
    pub checks: Vec<ClauseCheck>,
    pub pass: bool,
}

impl BoundsAudit {
    pub fn get(&self, clause: Clause) -> Option<&ClauseCheck> {
        self.checks.iter().find(|c| c.clause == clause)
    }
}

/// Points the audit is evaluated on.
#[derive(Clone, Copy, Debug)]
pub enum Evidence<'a> {
    /// Support and weights of a discrete measure; results are exact.
    Population { points: &'a [Vec<f64>], weights: &'a [f64] },
    /// Observed design points.
    Sample { points: &'a [Vec<f64>] },
}

#[derive(Clone, Copy, Debug)]
pub struct AuditInputs<'a> {
    pub dictionary: &'a Dictionary,
    pub regression: Option<&'a RegressionFn>,
    pub f_sup_bound: Option<f64>,
    pub target: Option<&'a TargetSpec>,
    pub sup_gap_bound: Option<f64>,
}

pub fn audit_bounds(evidence: Evidence<'_>, inputs: &AuditInputs<'_>) -> Result<BoundsAudit> {
    let (points, weights, empirical): (&[Vec<f64>], Vec<f64>, bool) = match evidence {
        Evidence::Population { points, weights } => (points, weights.to_vec(), false),
        Evidence::Sample { points } => {
            let w = 1.0 / points.len() as f64;
            (points, alloc::vec![w; points.len()], true)
        }
    };
    if points.is_empty() || points.len() != weights.len() {
        return Err(Error::Config("audit needs a nonempty, weighted set of points".into()));
    }
    let support: Vec<usize> = (0..points.len()).filter(|&p| weights[p] > 0.0).collect();
    let design = evaluate_design(inputs.dictionary, points)?;
    let m = design.ncols();
    let bounds = inputs.dictionary.bounds();
    let mut checks = Vec::new();

    let sup = support.iter().flat_map(|&p| (0..m).map(move |j| (p, j))).fold(0.0_f64, |acc, (p, j)| {
        acc.max(design[(p, j)].abs())
    });
    checks.push(ClauseCheck { clause: Clause::SupNorm, measured: sup, declared: bounds.sup, pass: sup <= bounds.sup, empirical });

    let min_norm = (0..m)
        .map(|j| support.iter().map(|&p| weights[p] * design[(p, j)] * design[(p, j)]).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min);
    checks.push(ClauseCheck {
        clause: Clause::NormFloor,
        measured: min_norm,
        declared: bounds.norm_floor,
        pass: min_norm >= bounds.norm_floor,
        empirical,
    });

    let mut fourth: f64 = 0.0;
    for a in 0..m {
        for b in a..m {
            let v: f64 = support
                .iter()
                .map(|&p| {
                    let (x, y) = (design[(p, a)], design[(p, b)]);
                    weights[p] * x * x * y * y
                })
                .sum();
            fourth = fourth.max(v);
        }
    }
    checks.push(ClauseCheck {
        clause: Clause::FourthMoment,
        measured: fourth,
        declared: bounds.fourth_moment,
        pass: fourth <= bounds.fourth_moment,
        empirical,
    });

    if let Some(reg) = inputs.regression {
        let fvals = support
            .iter()
            .map(|&p| reg.eval(inputs.dictionary, p, &points[p]))
            .collect::<Result<Vec<_>>>()?;
        if let Some(declared) = inputs.f_sup_bound {
            let measured = fvals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            checks.push(ClauseCheck { clause: Clause::FSup, measured, declared, pass: measured <= declared, empirical });
        }
        if let (Some(target), Some(declared)) = (inputs.target, inputs.sup_gap_bound) {
            let measured = support
                .iter()
                .zip(&fvals)
                .map(|(&p, f)| {
                    let fstar: f64 = target.support.iter().map(|&j| target.lambda_star[j] * design[(p, j)]).sum();
                    (f - fstar).abs()
                })
                .fold(0.0_f64, f64::max);
            checks.push(ClauseCheck { clause: Clause::SupGap, measured, declared, pass: measured <= declared, empirical });
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(BoundsAudit { checks, pass })
}

/// Audits a scenario exactly when its measure is discrete, otherwise on the
/// points of `sample`.
pub fn audit_scenario(
    scenario: &Scenario,
    sample: Option<&Sample>,
    target: Option<&TargetSpec>,
    sup_gap_bound: Option<f64>,
) -> Result<BoundsAudit> {
    let inputs = AuditInputs {
        dictionary: &scenario.dictionary,
        regression: Some(&scenario.regression),
        f_sup_bound: Some(scenario.f_sup_bound),
        target,
        sup_gap_bound,
    };
    match (&scenario.measure, sample) {
        (DesignMeasure::Discrete { points, weights }, _) => audit_bounds(Evidence::Population { points, weights }, &inputs),
        (_, Some(s)) => audit_bounds(Evidence::Sample { points: &s.xs }, &inputs),
        (_, None) => Err(Error::UnsupportedMeasure),
    }
}

/// `‖f − f*‖_∞` over the support of a discrete measure.
pub fn sup_gap(scenario: &Scenario, target: &TargetSpec) -> Result<f64> {
    let DesignMeasure::Discrete { points, weights } = &scenario.measure else {
        return Err(Error::UnsupportedMeasure);
    };
    let inputs = AuditInputs {
        dictionary: &scenario.dictionary,
        regression: Some(&scenario.regression),
        f_sup_bound: None,
        target: Some(target),
        sup_gap_bound: Some(f64::INFINITY),
    };
    let audit = audit_bounds(Evidence::Population { points, weights }, &inputs)?;
    Ok(audit.get(Clause::SupGap).map_or(0.0, |c| c.measured))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{population_moments, DictFn, DictionaryBounds, NoiseModel};
    use crate::oracle::{target_set, Ball};
    use alloc::vec;

    fn walsh_scenario() -> Scenario {
        let dict = Dictionary::walsh(3, 7).unwrap();
        let reg = RegressionFn::zero().term(0, 1.0).term(4, -0.5);
        Scenario::new(dict, reg, DesignMeasure::hypercube(3), NoiseModel::Zero, 1.5).unwrap()
    }

    #[test]
    fn sign_functions_pass_exactly() {
        let s = walsh_scenario();
        let audit = audit_scenario(&s, None, None, None).unwrap();
        assert!(audit.pass);
        let sup = audit.get(Clause::SupNorm).unwrap();
        assert_eq!((sup.measured, sup.empirical), (1.0, false));
        assert_eq!(audit.get(Clause::FSup).unwrap().measured, 1.5);
    }

    #[test]
    fn zero_function_fails_norm_floor() {
        let dict = Dictionary::new(
            vec![DictFn::Coordinate(0), DictFn::Constant(0.0)],
            DictionaryBounds { sup: 1.0, norm_floor: 0.1, fourth_moment: 1.0 },
        )
        .unwrap();
        let s = Scenario::new(dict, RegressionFn::zero(), DesignMeasure::hypercube(1), NoiseModel::Zero, 1.0).unwrap();
        let audit = audit_scenario(&s, None, None, None).unwrap();
        let floor = audit.get(Clause::NormFloor).unwrap();
        assert!(!floor.pass && floor.measured == 0.0);
        assert!(!audit.pass);
    }

    #[test]
    fn exact_fourth_moment_on_two_points() {
        // points 1 and 2 with weights 1/4, 3/4; f_1 = x, f_2 = x²
        let dict = Dictionary::new(
            vec![DictFn::Coordinate(0), DictFn::Polynomial { var: 0, coeffs: vec![0.0, 0.0, 1.0] }],
            DictionaryBounds { sup: 4.0, norm_floor: 1.0, fourth_moment: 200.0 },
        )
        .unwrap();
        let measure = DesignMeasure::Discrete { points: vec![vec![1.0], vec![2.0]], weights: vec![0.25, 0.75] };
        let s = Scenario::new(dict, RegressionFn::zero(), measure, NoiseModel::Zero, 1.0).unwrap();
        let audit = audit_scenario(&s, None, None, None).unwrap();
        // max over pairs of E f_i² f_j²: (x², x²) gives E x^8 = 1/4 + 3/4·256 = 192.25
        assert_eq!(audit.get(Clause::FourthMoment).unwrap().measured, 192.25);
        assert!(audit.pass);
    }

    #[test]
    fn sample_evidence_is_flagged_empirical() {
        let s = walsh_scenario();
        let sample = crate::dictionary::sample_scenario(&s, 20, 4).unwrap();
        let inputs = AuditInputs {
            dictionary: &s.dictionary,
            regression: Some(&s.regression),
            f_sup_bound: Some(s.f_sup_bound),
            target: None,
            sup_gap_bound: None,
        };
        let audit = audit_bounds(Evidence::Sample { points: &sample.xs }, &inputs).unwrap();
        assert!(audit.checks.iter().all(|c| c.empirical));
    }

    #[test]
    fn sup_gap_of_misspecified_target() {
        let dict = Dictionary::walsh(3, 3).unwrap();
        // f = f_1 + 0.1 · x1x2 (outside the dictionary)
        let reg = RegressionFn::zero().term(0, 1.0).extra(0.1, DictFn::walsh(&[0, 1]));
        let s = Scenario::new(dict, reg, DesignMeasure::hypercube(3), NoiseModel::Zero, 2.0).unwrap();
        let t = target_set(&population_moments(&s).unwrap(), Ball { c_f: 0.05, r: 1.0 }).unwrap();
        assert_eq!(t.support, vec![0]);
        assert!((sup_gap(&s, &t).unwrap() - 0.1).abs() < 1e-15);
    }
}
