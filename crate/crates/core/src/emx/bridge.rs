//! Passing between learners and compression schemes.

use std::collections::BTreeMap;

use serde_json::json;

use super::{Learner, LearnerDescriptor};
use crate::error::{Error, Result};
use crate::ground::{subsets_of, FinSet};
use crate::schemes::{CompressionScheme, Eta, Rule, Sigma};

/// `ceil(3d / 2)`: the size a learner on `d`-samples compresses to.
pub fn compression_size(d: usize) -> usize {
    (3 * d).div_ceil(2)
}

/// Builds the `(m+1) -> m` scheme of a learner on `d`-samples, `m = ceil(3d/2)`.
///
/// `eta(B)` is the union of `G(T)` over the `d`-subsets `T` of `B`, and
/// `sigma(A)` is the lexicographically least `m`-subset `B` of `A` with
/// `A ⊆ eta(B)`. When no such `B` exists `sigma` fails with
/// `NoCompressingSubset`.
pub fn scheme_from_learner(learner: &Learner, d: usize) -> Result<CompressionScheme> {
    let m = compression_size(d);
    let g = learner.clone();
    let eta = Rule::new(format!("union of {} over {d}-subsets", learner.name()), move |b| {
        let mut out = FinSet::empty();
        for t in subsets_of(b, d) {
            out = out.union(&g.learn(t.as_slice())?);
        }
        Ok(out)
    });
    let cover = eta.clone();
    let sigma = Rule::new(format!("least covering {m}-subset"), move |a| {
        for b in subsets_of(a, m) {
            if a.is_subset_of(&cover.call(&b)?) {
                return Ok(b);
            }
        }
        Err(Error::NoCompressingSubset(a.clone()))
    });
    CompressionScheme::new(m + 1, m, Sigma::Rule(sigma), Some(Eta::Rule(eta)))
}

/// Learner of an `(m+1) -> m` scheme with `eta`.
///
/// The distinct sample points are compressed, lexicographically least
/// `(m+1)`-subset first, until at most `m` remain; short sets are padded
/// with the smallest ranks not yet present; the output is `eta` of the
/// resulting `m`-set.
pub fn learner_from_scheme(scheme: &CompressionScheme) -> Result<Learner> {
    if !scheme.has_eta() {
        return Err(Error::InvalidArgument(
            "learner_from_scheme needs a scheme with eta".into(),
        ));
    }
    if scheme.m() != scheme.d() + 1 {
        return Err(Error::InvalidArity {
            m: scheme.m(),
            d: scheme.d(),
        });
    }
    let m = scheme.d();
    let descriptor = LearnerDescriptor {
        name: "from-scheme".into(),
        params: BTreeMap::from([("scheme".to_string(), json!(scheme.describe()))]),
    };
    let scheme = scheme.clone();
    let head: Vec<usize> = (0..=m).collect();
    Ok(Learner::new(descriptor, move |sample| {
        let mut points = sample.to_vec();
        points.sort_unstable();
        points.dedup();
        let mut a = FinSet::from_sorted_unchecked(points);
        while a.len() > m {
            let first = a.select(&head);
            a = scheme.sigma(&first)?.union(&a.difference(&first));
        }
        let mut next = 0;
        while a.len() < m {
            if !a.contains(next) {
                a = a.with(next);
            }
            next += 1;
        }
        scheme.eta(&a).expect("eta checked at construction")
    }))
}
