use std::collections::HashMap;

use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::interval::clopper_pearson;
use super::{measure, opt, FiniteSupportDistribution, Learner, LearnerDescriptor};
use crate::error::{Error, Result};
use crate::ground::FinSet;
use crate::rational::{format_rational, fraction, fraction_opt, in_unit_interval, to_f64, Rational};

/// Largest number of sample tuples `eval_exact` enumerates unless told otherwise.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Trials per independently seeded block in `eval_mc`.
pub const BLOCK_TRIALS: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Exact,
    Mc,
}

/// How `eval_mc` derived its random streams: block `b` covers trials
/// `b*block_trials ..` and uses ChaCha8 seeded with `base_seed` on stream `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSchedule {
    pub generator: String,
    pub base_seed: u64,
    pub block_trials: u64,
    pub blocks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// Largest distance from the estimate to either 95% Clopper–Pearson bound.
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
    pub trials: u64,
    pub failures: u64,
    pub seed: u64,
    pub schedule: SeedSchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EMXReport {
    pub learner: LearnerDescriptor,
    pub mode: EvalMode,
    #[serde(with = "fraction")]
    pub epsilon: Rational,
    #[serde(with = "fraction")]
    pub delta: Rational,
    pub d: usize,
    pub support_size: usize,
    /// Exact failure probability; exact mode only.
    #[serde(default, with = "fraction_opt", skip_serializing_if = "Option::is_none")]
    pub failure_probability: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuples: Option<u64>,
    /// Sampled failure rate; Monte Carlo mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McEstimate>,
    pub satisfied: bool,
}

impl EMXReport {
    /// The exact value when known, otherwise the sampled estimate.
    pub fn failure_value(&self) -> f64 {
        match (&self.failure_probability, &self.mc) {
            (Some(q), _) => to_f64(q),
            (None, Some(mc)) => mc.estimate,
            (None, None) => f64::NAN,
        }
    }

    pub fn failure_text(&self) -> String {
        match (&self.failure_probability, &self.mc) {
            (Some(q), _) => format_rational(q),
            (None, Some(mc)) => mc.estimate.to_string(),
            (None, None) => String::new(),
        }
    }
}

/// One line of a sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dist_id: String,
    pub d: usize,
    pub epsilon: String,
    pub failure_prob: String,
    pub satisfied: bool,
}

impl SweepRow {
    pub fn new(dist_id: impl Into<String>, report: &EMXReport) -> Self {
        SweepRow {
            dist_id: dist_id.into(),
            d: report.d,
            epsilon: format_rational(&report.epsilon),
            failure_prob: report.failure_text(),
            satisfied: report.satisfied,
        }
    }
}

fn check_unit(name: &str, q: &Rational) -> Result<()> {
    if in_unit_interval(q) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must lie in [0,1], got {}",
            format_rational(q)
        )))
    }
}

/// Sums `P^d(S)` over every tuple `S` of support atoms with
/// `P(G(S)) <= 1 - epsilon`, in exact arithmetic.
pub fn eval_exact(
    learner: &Learner,
    p: &FiniteSupportDistribution,
    d: usize,
    epsilon: &Rational,
    delta: &Rational,
    budget: u64,
) -> Result<EMXReport> {
    check_unit("epsilon", epsilon)?;
    check_unit("delta", delta)?;
    let k = p.support_size();
    let tuples = u32::try_from(d)
        .ok()
        .and_then(|d| (k as u64).checked_pow(d))
        .filter(|&t| t <= budget)
        .ok_or_else(|| Error::BudgetExceeded {
            needed: format!("{k}^{d}"),
            budget,
        })?;
    let threshold = opt(p) - epsilon;
    let atoms = p.atoms();

    let failure = (0..tuples)
        .into_par_iter()
        .map_init(
            || (vec![0usize; d], HashMap::<FinSet, bool>::new()),
            |(sample, seen), mut code| {
                let mut weight = Rational::from_integer(1.into());
                for slot in sample.iter_mut().rev() {
                    let atom = &atoms[(code % k as u64) as usize];
                    code /= k as u64;
                    *slot = atom.rank;
                    weight *= &atom.p;
                }
                let out = learner.learn(sample)?;
                let fails = match seen.get(&out) {
                    Some(&f) => f,
                    None => {
                        let f = measure(p, &out) <= threshold;
                        seen.insert(out, f);
                        f
                    }
                };
                Ok(if fails { weight } else { Rational::zero() })
            },
        )
        .try_reduce(Rational::zero, |a, b| Ok(a + b))?;

    Ok(EMXReport {
        learner: learner.descriptor().clone(),
        mode: EvalMode::Exact,
        epsilon: epsilon.clone(),
        delta: delta.clone(),
        d,
        support_size: k,
        satisfied: failure <= *delta,
        failure_probability: Some(failure),
        tuples: Some(tuples),
        mc: None,
    })
}

/// Estimates the failure probability from `trials` samples drawn by inverse
/// CDF over the atom list. Trials are split into blocks of
/// [`BLOCK_TRIALS`]; block `b` draws from `ChaCha8Rng::seed_from_u64(seed)`
/// on stream `b`, so the result does not depend on the thread count.
pub fn eval_mc(
    learner: &Learner,
    p: &FiniteSupportDistribution,
    d: usize,
    epsilon: &Rational,
    delta: &Rational,
    trials: u64,
    seed: u64,
) -> Result<EMXReport> {
    check_unit("epsilon", epsilon)?;
    check_unit("delta", delta)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let threshold = opt(p) - epsilon;
    let cdf = p.cdf();
    let atoms = p.atoms();
    let blocks = trials.div_ceil(BLOCK_TRIALS);

    let failures = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
            let mut sample = vec![0usize; d];
            let mut seen = HashMap::<FinSet, bool>::new();
            let mut failed = 0u64;
            for _ in 0..count {
                for slot in sample.iter_mut() {
                    let u: f64 = rng.random();
                    let i = cdf.partition_point(|&c| c <= u).min(atoms.len() - 1);
                    *slot = atoms[i].rank;
                }
                let out = learner.learn(&sample)?;
                let fails = match seen.get(&out) {
                    Some(&f) => f,
                    None => {
                        let f = measure(p, &out) <= threshold;
                        seen.insert(out, f);
                        f
                    }
                };
                failed += u64::from(fails);
            }
            Ok(failed)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;

    let estimate = failures as f64 / trials as f64;
    let (lower, upper) = clopper_pearson(failures, trials, 0.05);
    let satisfied = estimate <= delta.to_f64().unwrap_or(f64::NAN);
    Ok(EMXReport {
        learner: learner.descriptor().clone(),
        mode: EvalMode::Mc,
        epsilon: epsilon.clone(),
        delta: delta.clone(),
        d,
        support_size: p.support_size(),
        failure_probability: None,
        tuples: None,
        mc: Some(McEstimate {
            estimate,
            half_width: (estimate - lower).max(upper - estimate),
            lower,
            upper,
            trials,
            failures,
            seed,
            schedule: SeedSchedule {
                generator: "ChaCha8Rng".into(),
                base_seed: seed,
                block_trials: BLOCK_TRIALS,
                blocks,
            },
        }),
        satisfied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emx::{empty_learner, random_distributions, rank_learner};
    use crate::rational::ratio;
    use proptest::prelude::*;

    /// Sequential enumeration with the tuple probability built from rank lookups.
    fn oracle_failure(p: &FiniteSupportDistribution, d: usize, eps: &Rational) -> Rational {
        let ranks: Vec<usize> = p.atoms().iter().map(|a| a.rank).collect();
        let prob = |r: usize| p.atoms().iter().find(|a| a.rank == r).unwrap().p.clone();
        let mut total = Rational::zero();
        let mut idx = vec![0usize; d];
        loop {
            let sample: Vec<usize> = idx.iter().map(|&i| ranks[i]).collect();
            let top = *sample.iter().max().unwrap();
            let covered: Rational = ranks.iter().filter(|&&r| r <= top).map(|&r| prob(r)).sum();
            if covered <= Rational::from_integer(1.into()) - eps {
                total += sample.iter().map(|&r| prob(r)).product::<Rational>();
            }
            let mut pos = d;
            loop {
                if pos == 0 {
                    return total;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < ranks.len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    #[test]
    fn uniform_five_gives_27_over_125() {
        let u5 = FiniteSupportDistribution::uniform(0..5).unwrap();
        let third = ratio(1, 3);
        let r = eval_exact(&rank_learner(), &u5, 3, &third, &third, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.failure_probability, Some(ratio(27, 125)));
        assert_eq!(r.tuples, Some(125));
        assert!(r.satisfied);
        assert_eq!(oracle_failure(&u5, 3, &third), ratio(27, 125));
        // atom order does not matter
        let shuffled = FiniteSupportDistribution::uniform([3, 0, 4, 1, 2]).unwrap();
        let r2 = eval_exact(&rank_learner(), &shuffled, 3, &third, &third, DEFAULT_BUDGET).unwrap();
        assert_eq!(r2.failure_probability, Some(ratio(27, 125)));
    }

    #[test]
    fn trivial_instances() {
        let third = ratio(1, 3);
        let point = FiniteSupportDistribution::point_mass(6);
        for d in 1..4 {
            let r = eval_exact(&rank_learner(), &point, d, &third, &third, DEFAULT_BUDGET).unwrap();
            assert_eq!(r.failure_probability, Some(ratio(0, 1)));
        }
        let u5 = FiniteSupportDistribution::uniform(0..5).unwrap();
        let r = eval_exact(&empty_learner(), &u5, 2, &third, &third, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.failure_probability, Some(ratio(1, 1)));
        assert!(!r.satisfied);
    }

    #[test]
    fn boundary_is_inclusive() {
        // bottom two of four atoms cover exactly 1/2 = 1 - epsilon
        let u4 = FiniteSupportDistribution::uniform(0..4).unwrap();
        let half = ratio(1, 2);
        let r = eval_exact(&rank_learner(), &u4, 1, &half, &half, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.failure_probability, Some(ratio(1, 2)));
        assert!(r.satisfied);
    }

    #[test]
    fn budget_is_enforced() {
        let u20 = FiniteSupportDistribution::uniform(0..20).unwrap();
        let third = ratio(1, 3);
        let err = eval_exact(&rank_learner(), &u20, 5, &third, &third, DEFAULT_BUDGET).unwrap_err();
        assert!(matches!(
            err,
            Error::BudgetExceeded {
                budget: DEFAULT_BUDGET,
                ..
            }
        ));
        assert!(eval_exact(&rank_learner(), &u20, 4, &third, &third, 160_000).is_ok());
        let err = eval_exact(&rank_learner(), &u20, 400, &third, &third, DEFAULT_BUDGET).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn parameters_are_checked() {
        let u5 = FiniteSupportDistribution::uniform(0..5).unwrap();
        let bad = ratio(4, 3);
        let third = ratio(1, 3);
        assert!(eval_exact(&rank_learner(), &u5, 3, &bad, &third, DEFAULT_BUDGET).is_err());
        assert!(eval_mc(&rank_learner(), &u5, 3, &third, &bad, 10, 1).is_err());
        assert!(eval_mc(&rank_learner(), &u5, 3, &third, &third, 0, 1).is_err());
    }

    #[test]
    fn mc_is_deterministic_and_close() {
        let u5 = FiniteSupportDistribution::uniform(0..5).unwrap();
        let third = ratio(1, 3);
        let a = eval_mc(&rank_learner(), &u5, 3, &third, &third, 20_000, 7).unwrap();
        let b = eval_mc(&rank_learner(), &u5, 3, &third, &third, 20_000, 7).unwrap();
        assert_eq!(a, b);
        let mc = a.mc.as_ref().unwrap();
        assert_eq!(mc.schedule.blocks, 5);
        assert!((mc.estimate - 27.0 / 125.0).abs() <= mc.half_width);
        let one = eval_mc(&rank_learner(), &u5, 3, &third, &third, 1, 3).unwrap();
        let e = one.mc.unwrap().estimate;
        assert!(e == 0.0 || e == 1.0);
    }

    #[test]
    fn report_json_shape() {
        let u5 = FiniteSupportDistribution::uniform(0..5).unwrap();
        let third = ratio(1, 3);
        let r = eval_exact(&rank_learner(), &u5, 3, &third, &third, DEFAULT_BUDGET).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["mode"], "exact");
        assert_eq!(v["failure_probability"], "27/125");
        assert_eq!(v["epsilon"], "1/3");
        let back: EMXReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
        let row = SweepRow::new("u5", &r);
        assert_eq!(row.failure_prob, "27/125");
    }

    #[test]
    fn tail_bound_on_random_distributions() {
        let third = ratio(1, 3);
        let bound = ratio(8, 27);
        for p in random_distributions(60, 8, 20, 99) {
            let r = eval_exact(&rank_learner(), &p, 3, &third, &third, DEFAULT_BUDGET).unwrap();
            let f = r.failure_probability.unwrap();
            assert_eq!(f, oracle_failure(&p, 3, &third));
            assert!(f <= bound);
            assert!(r.satisfied);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn exact_matches_oracle(seed in any::<u64>(), d in 1usize..4, e in 1i64..6) {
            let p = random_distributions(1, 6, 15, seed).pop().unwrap();
            let eps = ratio(e, 6);
            let r = eval_exact(&rank_learner(), &p, d, &eps, &eps, DEFAULT_BUDGET).unwrap();
            let f = r.failure_probability.unwrap();
            prop_assert!(in_unit_interval(&f));
            prop_assert_eq!(r.satisfied, f <= eps);
            prop_assert_eq!(f, oracle_failure(&p, d, &eps));
        }
    }
}
