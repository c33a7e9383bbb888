//! EMX learning at finite scale: finite-support distributions, learners,
//! and exact or sampled evaluation of
//! `Pr_{S ~ P^d}[ P(G(S)) <= Opt(P) - epsilon ] <= delta`.
//!
//! Learners work on ground ranks. Over `Fin(X)` the optimum is attained by
//! the support itself, so `Opt(P) = 1`.

mod bridge;
mod eval;
pub mod interval;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground::FinSet;
use crate::rational::{format_rational, fraction, Rational};

pub use bridge::{compression_size, learner_from_scheme, scheme_from_learner};
pub use eval::{
    eval_exact, eval_mc, EMXReport, EvalMode, McEstimate, SeedSchedule, SweepRow, BLOCK_TRIALS, DEFAULT_BUDGET,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub rank: usize,
    #[serde(with = "fraction")]
    pub p: Rational,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    atoms: Vec<Atom>,
}

/// A probability distribution on finitely many ground ranks, with exact
/// rational weights. Atom order is kept; sampling walks it as a CDF.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct FiniteSupportDistribution {
    atoms: Vec<Atom>,
}

impl FiniteSupportDistribution {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        let mut seen = BTreeSet::new();
        let mut total = Rational::zero();
        for a in &atoms {
            if !a.p.is_positive() {
                return Err(Error::InvalidDistribution(format!(
                    "atom {} has probability {}",
                    a.rank,
                    format_rational(&a.p)
                )));
            }
            if !seen.insert(a.rank) {
                return Err(Error::InvalidDistribution(format!("rank {} repeated", a.rank)));
            }
            total += &a.p;
        }
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {}",
                format_rational(&total)
            )));
        }
        Ok(FiniteSupportDistribution { atoms })
    }

    pub fn uniform(ranks: impl IntoIterator<Item = usize>) -> Result<Self> {
        let ranks: Vec<usize> = ranks.into_iter().collect();
        let p = Rational::new(1.into(), ranks.len().max(1).into());
        Self::new(ranks.into_iter().map(|rank| Atom { rank, p: p.clone() }).collect())
    }

    pub fn point_mass(rank: usize) -> Self {
        FiniteSupportDistribution {
            atoms: vec![Atom {
                rank,
                p: Rational::one(),
            }],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    pub fn support(&self) -> FinSet {
        let mut v: Vec<usize> = self.atoms.iter().map(|a| a.rank).collect();
        v.sort_unstable();
        FinSet::from_sorted_unchecked(v)
    }

    /// Running sums of the atom weights, computed exactly and then rounded.
    pub(crate) fn cdf(&self) -> Vec<f64> {
        let mut acc = Rational::zero();
        self.atoms
            .iter()
            .map(|a| {
                acc += &a.p;
                crate::rational::to_f64(&acc)
            })
            .collect()
    }
}

impl TryFrom<RawDistribution> for FiniteSupportDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        Self::new(raw.atoms)
    }
}

impl From<FiniteSupportDistribution> for RawDistribution {
    fn from(d: FiniteSupportDistribution) -> Self {
        RawDistribution { atoms: d.atoms }
    }
}

/// Total weight `P` puts on `set`.
pub fn measure(p: &FiniteSupportDistribution, set: &FinSet) -> Rational {
    p.atoms
        .iter()
        .filter(|a| set.contains(a.rank))
        .fold(Rational::zero(), |acc, a| acc + &a.p)
}

/// `sup` of the measure over all finite sets, which the support attains.
pub fn opt(_p: &FiniteSupportDistribution) -> Rational {
    Rational::one()
}

/// Name and parameters identifying a learner in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerDescriptor {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, serde_json::Value>,
}

type LearnFn = dyn Fn(&[usize]) -> Result<FinSet> + Send + Sync;

/// A map from sample tuples of ranks to finite sets of ranks.
#[derive(Clone)]
pub struct Learner {
    descriptor: LearnerDescriptor,
    rule: Arc<LearnFn>,
}

impl Learner {
    pub fn new<F>(descriptor: LearnerDescriptor, rule: F) -> Self
    where
        F: Fn(&[usize]) -> Result<FinSet> + Send + Sync + 'static,
    {
        Learner {
            descriptor,
            rule: Arc::new(rule),
        }
    }

    pub fn named<F>(name: &str, rule: F) -> Self
    where
        F: Fn(&[usize]) -> Result<FinSet> + Send + Sync + 'static,
    {
        let descriptor = LearnerDescriptor {
            name: name.to_string(),
            params: BTreeMap::new(),
        };
        Self::new(descriptor, rule)
    }

    pub fn descriptor(&self) -> &LearnerDescriptor {
        &self.descriptor
    }

    pub fn name(&self) -> &str {
        &self.descriptor.name
    }

    pub fn learn(&self, sample: &[usize]) -> Result<FinSet> {
        (self.rule)(sample)
    }
}

impl fmt::Debug for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Learner").field(&self.descriptor).finish()
    }
}

/// `G(S) = {0, …, max S}`.
pub fn rank_learner() -> Learner {
    Learner::named("rank", |sample| {
        sample
            .iter()
            .max()
            .map(|&top| FinSet::initial_segment(top))
            .ok_or(Error::EmptySample)
    })
}

/// Always outputs the empty set.
pub fn empty_learner() -> Learner {
    Learner::named("empty", |_| Ok(FinSet::empty()))
}

pub fn learner_by_name(name: &str) -> Result<Learner> {
    match name {
        "rank" => Ok(rank_learner()),
        "empty" => Ok(empty_learner()),
        other => Err(Error::InvalidArgument(format!(
            "unknown learner {other:?} (expected rank or empty)"
        ))),
    }
}

/// A distribution with 1..=`max_support` atoms on distinct ranks below
/// `rank_bound`, weights drawn from 1..=10 and normalized.
pub fn random_distribution<R: Rng>(rng: &mut R, max_support: usize, rank_bound: usize) -> FiniteSupportDistribution {
    assert!(max_support >= 1 && max_support <= rank_bound);
    let k = rng.random_range(1..=max_support);
    let ranks = sample(rng, rank_bound, k).into_vec();
    let weights: Vec<u64> = (0..k).map(|_| rng.random_range(1..=10)).collect();
    let total: u64 = weights.iter().sum();
    let atoms = ranks
        .into_iter()
        .zip(weights)
        .map(|(rank, w)| Atom {
            rank,
            p: Rational::new(w.into(), total.into()),
        })
        .collect();
    FiniteSupportDistribution { atoms }
}

/// `count` distributions from one seeded ChaCha8 stream.
pub fn random_distributions(
    count: usize,
    max_support: usize,
    rank_bound: usize,
    seed: u64,
) -> Vec<FiniteSupportDistribution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_distribution(&mut rng, max_support, rank_bound))
        .collect()
}
