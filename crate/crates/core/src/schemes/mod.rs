//! Monotone compression schemes as a pair `(sigma, eta)`.
//!
//! `sigma` picks a `d`-subset of every `m`-subset of the ground, `eta`
//! expands a `d`-subset back to a finite set that must cover every
//! argument compressed onto it. Both maps are either a named rule, an
//! explicit table (the interchange format), or an arbitrary closure
//! produced by another module.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground::{FinSet, OrderedGround};

mod audit;
mod reduce;
mod verify;

pub use audit::{fiber_growth_audit, AuditRow, FiberAudit};
pub use reduce::{reduce_scheme, Reduction};
pub use verify::{fiber, fiber_sizes, verify_scheme, verify_with_fibers, SchemeReport, Witness};

type MapFn = dyn Fn(&FinSet) -> Result<FinSet> + Send + Sync;

/// A named closure over finite sets.
#[derive(Clone)]
pub struct Rule {
    name: String,
    f: Arc<MapFn>,
}

impl Rule {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&FinSet) -> Result<FinSet> + Send + Sync + 'static,
    {
        Rule {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn call(&self, x: &FinSet) -> Result<FinSet> {
        (self.f)(x)
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Rule").field(&self.name).finish()
    }
}

pub type SetTable = Arc<BTreeMap<FinSet, FinSet>>;

/// The compressing map `[X]^m -> [X]^d`.
#[derive(Clone, Debug)]
pub enum Sigma {
    /// `x -> {max x}`.
    Max,
    /// Explicit table; arguments outside it are undefined.
    Table(SetTable),
    Rule(Rule),
}

impl Sigma {
    pub fn apply(&self, x: &FinSet) -> Result<FinSet> {
        match self {
            Sigma::Max => x
                .largest()
                .map(FinSet::singleton)
                .ok_or_else(|| Error::SigmaUndefined(x.clone())),
            Sigma::Table(t) => t.get(x).cloned().ok_or_else(|| Error::SigmaUndefined(x.clone())),
            Sigma::Rule(r) => r.call(x),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Sigma::Max => "max".into(),
            Sigma::Table(t) => format!("table[{}]", t.len()),
            Sigma::Rule(r) => r.name().into(),
        }
    }
}

/// The expanding map `[X]^d -> Fin(X)`.
#[derive(Clone, Debug)]
pub enum Eta {
    /// `y -> {0, …, max y}`, and `∅ -> ∅`.
    InitialSegment,
    /// Explicit table; arguments outside it expand to the empty set.
    Table(SetTable),
    Rule(Rule),
}

impl Eta {
    pub fn apply(&self, y: &FinSet) -> Result<FinSet> {
        match self {
            Eta::InitialSegment => Ok(y.largest().map(FinSet::initial_segment).unwrap_or_default()),
            Eta::Table(t) => Ok(t.get(y).cloned().unwrap_or_default()),
            Eta::Rule(r) => r.call(y),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Eta::InitialSegment => "initial-segment".into(),
            Eta::Table(t) => format!("table[{}]", t.len()),
            Eta::Rule(r) => r.name().into(),
        }
    }
}

/// An `m -> d` monotone compression scheme.
#[derive(Clone, Debug)]
pub struct CompressionScheme {
    m: usize,
    d: usize,
    sigma: Sigma,
    eta: Option<Eta>,
}

impl CompressionScheme {
    pub fn new(m: usize, d: usize, sigma: Sigma, eta: Option<Eta>) -> Result<Self> {
        if m <= d {
            return Err(Error::InvalidArity { m, d });
        }
        Ok(CompressionScheme { m, d, sigma, eta })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sigma_map(&self) -> &Sigma {
        &self.sigma
    }

    pub fn eta_map(&self) -> Option<&Eta> {
        self.eta.as_ref()
    }

    pub fn has_eta(&self) -> bool {
        self.eta.is_some()
    }

    pub fn with_eta(mut self, eta: Eta) -> Self {
        self.eta = Some(eta);
        self
    }

    /// Applies `sigma`, checking both arities.
    pub fn sigma(&self, x: &FinSet) -> Result<FinSet> {
        if x.len() != self.m {
            return Err(Error::ArityMismatch {
                expected: self.m,
                got: x.clone(),
            });
        }
        let y = self.sigma.apply(x)?;
        if y.len() != self.d {
            return Err(Error::ArityMismatch {
                expected: self.d,
                got: y,
            });
        }
        Ok(y)
    }

    /// Applies `eta`; `None` when the scheme carries no `eta`.
    pub fn eta(&self, y: &FinSet) -> Option<Result<FinSet>> {
        self.eta.as_ref().map(|e| e.apply(y))
    }

    pub fn describe(&self) -> String {
        let eta = self.eta.as_ref().map_or("none".into(), Eta::describe);
        format!("{}->{} sigma={} eta={}", self.m, self.d, self.sigma.describe(), eta)
    }
}

/// The `2 -> 1` scheme on the naturals: `sigma(x) = {max x}`,
/// `eta({n}) = {0, …, n}`.
pub fn max_scheme() -> CompressionScheme {
    CompressionScheme {
        m: 2,
        d: 1,
        sigma: Sigma::Max,
        eta: Some(Eta::InitialSegment),
    }
}

/// Replaces `eta` by the union of the fibers of `sigma`:
/// `eta(y) = ⋃ {x : sigma(x) = y}`, empty off the range.
pub fn eta_from_sigma(scheme: &CompressionScheme, ground: &OrderedGround) -> Result<CompressionScheme> {
    let unions = ground
        .k_subsets(scheme.m)?
        .par_bridge()
        .map(|x| scheme.sigma(&x).map(|y| (y, x)))
        .try_fold(HashMap::<FinSet, FinSet>::new, |mut acc, item| {
            let (y, x) = item?;
            let slot = acc.entry(y).or_default();
            *slot = slot.union(&x);
            Ok::<_, Error>(acc)
        })
        .try_reduce(HashMap::new, |mut a, b| {
            for (y, u) in b {
                let slot = a.entry(y).or_default();
                *slot = slot.union(&u);
            }
            Ok(a)
        })?;
    let table: BTreeMap<FinSet, FinSet> = unions.into_iter().collect();
    Ok(CompressionScheme {
        eta: Some(Eta::Table(Arc::new(table))),
        ..scheme.clone()
    })
}

/// Serialized form of a scheme: `sigma` and `eta` as `[argument, image]`
/// pairs of increasing arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeTable {
    pub m: usize,
    pub d: usize,
    pub ground_n: usize,
    pub sigma: Vec<(FinSet, FinSet)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<(FinSet, FinSet)>>,
}

impl SchemeTable {
    /// Materializes `scheme` over `[ground]^m`. `eta`, when present, is
    /// tabulated on the range of `sigma` only.
    pub fn from_scheme(scheme: &CompressionScheme, ground: &OrderedGround) -> Result<Self> {
        let sigma: Vec<(FinSet, FinSet)> = ground
            .k_subsets(scheme.m)?
            .par_bridge()
            .map(|x| scheme.sigma(&x).map(|y| (x, y)))
            .collect::<Result<_>>()?;
        let mut sigma = sigma;
        sigma.sort_unstable();
        let eta = match &scheme.eta {
            None => None,
            Some(e) => {
                let mut range: Vec<FinSet> = sigma.iter().map(|(_, y)| y.clone()).collect();
                range.sort_unstable();
                range.dedup();
                Some(
                    range
                        .into_par_iter()
                        .map(|y| e.apply(&y).map(|u| (y, u)))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
        };
        Ok(SchemeTable {
            m: scheme.m,
            d: scheme.d,
            ground_n: ground.size(),
            sigma,
            eta,
        })
    }

    pub fn into_scheme(self) -> Result<CompressionScheme> {
        if self.m <= self.d {
            return Err(Error::InvalidArity { m: self.m, d: self.d });
        }
        let ground = OrderedGround::naturals(self.ground_n);
        let sigma = collect_table(self.sigma, self.m, self.d, &ground)?;
        let eta = self
            .eta
            .map(|pairs| -> Result<Eta> {
                let mut t = BTreeMap::new();
                for (y, u) in pairs {
                    if y.len() != self.d {
                        return Err(Error::ArityMismatch {
                            expected: self.d,
                            got: y,
                        });
                    }
                    if t.insert(y.clone(), u).is_some() {
                        return Err(Error::Format(format!("eta defined twice on {y}")));
                    }
                }
                Ok(Eta::Table(Arc::new(t)))
            })
            .transpose()?;
        CompressionScheme::new(self.m, self.d, Sigma::Table(Arc::new(sigma)), eta)
    }
}

fn collect_table(
    pairs: Vec<(FinSet, FinSet)>,
    m: usize,
    d: usize,
    ground: &OrderedGround,
) -> Result<BTreeMap<FinSet, FinSet>> {
    let mut t = BTreeMap::new();
    for (x, y) in pairs {
        if x.len() != m {
            return Err(Error::ArityMismatch { expected: m, got: x });
        }
        if y.len() != d {
            return Err(Error::ArityMismatch { expected: d, got: y });
        }
        ground.check(&x)?;
        if t.insert(x.clone(), y).is_some() {
            return Err(Error::Format(format!("sigma defined twice on {x}")));
        }
    }
    Ok(t)
}
