use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{eta_from_sigma, CompressionScheme};
use crate::error::{Error, Result};
use crate::ground::{binomial, FinSet, OrderedGround};

/// A domain point together with its image under `sigma`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Witness {
    pub x: FinSet,
    pub image: FinSet,
}

/// Outcome of an exhaustive check of a scheme over `[ground]^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeReport {
    pub m: usize,
    pub d: usize,
    pub ground_n: usize,
    pub domain_size: usize,
    pub monotone_ok: bool,
    pub cover_ok: bool,
    /// `eta` was absent and replaced by the fiber union.
    pub eta_derived: bool,
    pub max_fiber: usize,
    /// fiber size -> number of images with a fiber of that size
    pub fiber_histogram: BTreeMap<usize, usize>,
    /// every fiber over `y` has at most `C(|eta(y)|, m)` elements
    pub fiber_bound_ok: bool,
    pub finite_to_one: bool,
    pub not_monotone_count: usize,
    pub cover_failure_count: usize,
    pub first_not_monotone: Option<Witness>,
    pub first_cover_failure: Option<Witness>,
}

impl SchemeReport {
    pub fn is_valid(&self) -> bool {
        self.monotone_ok && self.cover_ok
    }

    /// Converts the first recorded failure into an error.
    pub fn ensure_valid(&self) -> Result<()> {
        if let Some(w) = &self.first_not_monotone {
            return Err(Error::NotMonotone {
                x: w.x.clone(),
                image: w.image.clone(),
            });
        }
        if let Some(w) = &self.first_cover_failure {
            return Err(Error::CoverFailure { a: w.x.clone() });
        }
        Ok(())
    }
}

#[derive(Default)]
struct Partial {
    fibers: HashMap<FinSet, usize>,
    not_monotone: usize,
    cover_failures: usize,
    first_not_monotone: Option<Witness>,
    first_cover_failure: Option<Witness>,
    error: Option<(FinSet, Error)>,
}

fn keep_min<T: Ord>(slot: &mut Option<T>, candidate: Option<T>) {
    if let Some(c) = candidate {
        match slot {
            Some(cur) if *cur <= c => {}
            _ => *slot = Some(c),
        }
    }
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        for (y, c) in other.fibers {
            *self.fibers.entry(y).or_default() += c;
        }
        self.not_monotone += other.not_monotone;
        self.cover_failures += other.cover_failures;
        keep_min(&mut self.first_not_monotone, other.first_not_monotone);
        keep_min(&mut self.first_cover_failure, other.first_cover_failure);
        match (&self.error, other.error) {
            (Some((x, _)), Some((ox, oe))) if ox < *x => self.error = Some((ox, oe)),
            (None, Some(e)) => self.error = Some(e),
            _ => {}
        }
        self
    }
}

fn scan(scheme: &CompressionScheme, ground: &OrderedGround) -> Result<Partial> {
    let merged = ground
        .k_subsets(scheme.m())?
        .par_bridge()
        .fold(Partial::default, |mut acc, x| {
            let y = match scheme.sigma(&x) {
                Ok(y) => y,
                Err(e) => {
                    let cand = Partial {
                        error: Some((x, e)),
                        ..Partial::default()
                    };
                    return acc.merge(cand);
                }
            };
            if !y.is_subset_of(&x) {
                acc.not_monotone += 1;
                keep_min(
                    &mut acc.first_not_monotone,
                    Some(Witness {
                        x: x.clone(),
                        image: y.clone(),
                    }),
                );
            }
            if let Some(eta) = scheme.eta(&y) {
                match eta {
                    Ok(cover) if x.is_subset_of(&cover) => {}
                    Ok(_) => {
                        acc.cover_failures += 1;
                        keep_min(
                            &mut acc.first_cover_failure,
                            Some(Witness {
                                x: x.clone(),
                                image: y.clone(),
                            }),
                        );
                    }
                    Err(e) => {
                        let cand = Partial {
                            error: Some((x, e)),
                            ..Partial::default()
                        };
                        return acc.merge(cand);
                    }
                }
            }
            *acc.fibers.entry(y).or_default() += 1;
            acc
        })
        .reduce(Partial::default, Partial::merge);
    if let Some((_, e)) = merged.error {
        return Err(e);
    }
    Ok(merged)
}

/// Exhaustively checks monotonicity (`sigma(x) ⊆ x`), the cover property
/// (`x ⊆ eta(sigma(x))`) and the fiber structure of `sigma` on
/// `[ground]^m`. A scheme without `eta` is checked against the fiber-union
/// `eta`, which covers by construction.
///
/// Monotonicity and cover failures are reported in the result, not as
/// errors; use [`SchemeReport::ensure_valid`] to turn them into one.
pub fn verify_scheme(scheme: &CompressionScheme, ground: &OrderedGround) -> Result<SchemeReport> {
    verify_with_fibers(scheme, ground).map(|(r, _)| r)
}

/// [`verify_scheme`] plus the fiber size of every image of `sigma`.
pub fn verify_with_fibers(
    scheme: &CompressionScheme,
    ground: &OrderedGround,
) -> Result<(SchemeReport, BTreeMap<FinSet, usize>)> {
    let derived;
    let (scheme, eta_derived) = if scheme.has_eta() {
        (scheme, false)
    } else {
        derived = eta_from_sigma(scheme, ground)?;
        (&derived, true)
    };
    let scan = scan(scheme, ground)?;
    let fibers: BTreeMap<FinSet, usize> = scan.fibers.into_iter().collect();

    let bound_violations = fibers
        .par_iter()
        .map(|(y, &count)| -> Result<bool> {
            let cover = scheme.eta(y).expect("eta present")?;
            Ok(count as u128 > binomial(cover.len(), scheme.m()))
        })
        .collect::<Result<Vec<bool>>>()?;
    let fiber_bound_ok = !bound_violations.into_iter().any(|v| v);

    let mut fiber_histogram = BTreeMap::new();
    for &c in fibers.values() {
        *fiber_histogram.entry(c).or_insert(0) += 1;
    }
    let max_fiber = fiber_histogram.keys().next_back().copied().unwrap_or(0);
    let domain_size = fibers.values().sum();

    let report = SchemeReport {
        m: scheme.m(),
        d: scheme.d(),
        ground_n: ground.size(),
        domain_size,
        monotone_ok: scan.not_monotone == 0,
        cover_ok: scan.cover_failures == 0,
        eta_derived,
        max_fiber,
        fiber_histogram,
        fiber_bound_ok,
        finite_to_one: fiber_bound_ok,
        not_monotone_count: scan.not_monotone,
        cover_failure_count: scan.cover_failures,
        first_not_monotone: scan.first_not_monotone,
        first_cover_failure: scan.first_cover_failure,
    };
    Ok((report, fibers))
}

/// Fiber size of every image of `sigma` on `[ground]^m`.
pub fn fiber_sizes(scheme: &CompressionScheme, ground: &OrderedGround) -> Result<BTreeMap<FinSet, usize>> {
    let scan = ground
        .k_subsets(scheme.m())?
        .par_bridge()
        .map(|x| scheme.sigma(&x))
        .try_fold(HashMap::<FinSet, usize>::new, |mut acc, y| {
            *acc.entry(y?).or_default() += 1;
            Ok::<_, Error>(acc)
        })
        .try_reduce(HashMap::new, |mut a, b| {
            for (y, c) in b {
                *a.entry(y).or_default() += c;
            }
            Ok(a)
        })?;
    Ok(scan.into_iter().collect())
}

/// The fiber `sigma^{-1}(y)` within `[ground]^m`, in lexicographic order.
pub fn fiber(scheme: &CompressionScheme, ground: &OrderedGround, y: &FinSet) -> Result<Vec<FinSet>> {
    let mut out = Vec::new();
    for x in ground.k_subsets(scheme.m())? {
        if scheme.sigma(&x)? == *y {
            out.push(x);
        }
    }
    Ok(out)
}
