use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{eta_from_sigma, CompressionScheme, Sigma};
use crate::error::{Error, Result};
use crate::ground::{FinSet, OrderedGround};

/// Result of dropping one dimension from a scheme.
#[derive(Debug, Clone)]
pub struct Reduction {
    /// The `m -> l` scheme on `{0, …, delta-1}`.
    pub scheme: CompressionScheme,
    pub ground: OrderedGround,
    /// `delta_0, delta_1, …, delta`, strictly increasing, last entry is the
    /// fixpoint.
    pub chain: Vec<usize>,
    pub delta: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionSummary {
    pub chain: Vec<usize>,
    pub delta: usize,
    pub m: usize,
    pub d: usize,
}

impl Reduction {
    pub fn summary(&self) -> ReductionSummary {
        ReductionSummary {
            chain: self.chain.clone(),
            delta: self.delta,
            m: self.scheme.m(),
            d: self.scheme.d(),
        }
    }
}

/// Turns an `(m+1) -> (l+1)` scheme on `{0, …, N-1}` into an `m -> l`
/// scheme on an initial segment `{0, …, delta-1}`.
///
/// `delta` is the least fixpoint above `delta0` of the closure step
/// "every `x` whose image lies below the bound lies below the next bound";
/// the new map is `x -> sigma(x ∪ {delta}) \ {delta}`.
pub fn reduce_scheme(scheme: &CompressionScheme, ground: &OrderedGround, delta0: usize) -> Result<Reduction> {
    let n = ground.size();
    if scheme.d() == 0 {
        return Err(Error::InvalidArity {
            m: scheme.m(),
            d: scheme.d(),
        });
    }
    if delta0 >= n {
        return Err(Error::GroundExhausted { bound: delta0, n });
    }

    // (max sigma(x), max x) over the whole domain
    let profile: Vec<(usize, usize)> = ground
        .k_subsets(scheme.m())?
        .par_bridge()
        .map(|x| {
            let y = scheme.sigma(&x)?;
            Ok((y.largest().expect("d >= 1"), x.largest().expect("m >= 1")))
        })
        .collect::<Result<_>>()?;

    let mut chain = vec![delta0];
    let mut current = delta0;
    loop {
        let next = profile
            .iter()
            .filter(|&&(img_max, _)| img_max < current)
            .map(|&(_, x_max)| x_max + 1)
            .fold(current, usize::max);
        if next == current {
            break;
        }
        if next >= n {
            return Err(Error::GroundExhausted { bound: next, n });
        }
        chain.push(next);
        current = next;
    }
    let delta = current;

    let reduced_ground = OrderedGround::naturals(delta);
    let table: BTreeMap<FinSet, FinSet> = reduced_ground
        .k_subsets(scheme.m() - 1)?
        .par_bridge()
        .map(|x| {
            let y = scheme.sigma(&x.with(delta))?;
            if !y.contains(delta) {
                return Err(Error::DeltaNotSelected { x, delta });
            }
            Ok((x, y.without(delta)))
        })
        .collect::<Result<_>>()?;

    let reduced = CompressionScheme::new(scheme.m() - 1, scheme.d() - 1, Sigma::Table(Arc::new(table)), None)?;
    let reduced = eta_from_sigma(&reduced, &reduced_ground)?;
    Ok(Reduction {
        scheme: reduced,
        ground: reduced_ground,
        chain,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{fiber_sizes, max_scheme, Rule};
    use proptest::prelude::*;

    #[test]
    fn max_scheme_chain_is_immediate() {
        let r = reduce_scheme(&max_scheme(), &OrderedGround::naturals(50), 10).unwrap();
        assert_eq!(r.delta, 10);
        assert_eq!(r.chain, vec![10]);
        assert_eq!((r.scheme.m(), r.scheme.d()), (1, 0));
        for a in 0..10 {
            assert_eq!(r.scheme.sigma(&FinSet::singleton(a)).unwrap(), FinSet::empty());
        }
        let fibers = fiber_sizes(&r.scheme, &r.ground).unwrap();
        assert_eq!(fibers, BTreeMap::from([(FinSet::empty(), 10)]));
    }

    #[test]
    fn min_based_scheme_exhausts_ground() {
        // sigma keeps the minimum: everything with a small minimum lands low,
        // so the chain must swallow the whole ground
        let min = Rule::new("min", |x: &FinSet| Ok(FinSet::singleton(x.smallest().unwrap())));
        let s = CompressionScheme::new(2, 1, Sigma::Rule(min), None).unwrap();
        let err = reduce_scheme(&s, &OrderedGround::naturals(30), 5).unwrap_err();
        assert_eq!(err, Error::GroundExhausted { bound: 30, n: 30 });
    }

    #[test]
    fn chain_grows_before_fixpoint() {
        // 2->1: keep max unless the pair is {a, a+1} with a even, then keep a.
        let rule = Rule::new("pairs", |x: &FinSet| {
            let (a, b) = (x.smallest().unwrap(), x.largest().unwrap());
            Ok(FinSet::singleton(if b == a + 1 && a % 2 == 0 { a } else { b }))
        });
        let s = CompressionScheme::new(2, 1, Sigma::Rule(rule), None).unwrap();
        let r = reduce_scheme(&s, &OrderedGround::naturals(20), 4).unwrap();
        // {4,5} maps to {4}, not below 4; {2,3} maps to {2} < 4 so 3 < bound already
        assert_eq!(r.chain, vec![4]);
        let r = reduce_scheme(&s, &OrderedGround::naturals(20), 5).unwrap();
        // {4,5} -> {4} < 5 forces bound 6; {6,7} -> {6} < 6? no. fixpoint 6
        assert_eq!(r.chain, vec![5, 6]);
        assert_eq!(r.delta, 6);
    }

    #[test]
    fn delta_not_selected_detected() {
        // pairs {a, b} with b odd keep a: for delta odd, sigma({a, delta}) omits delta
        let rule = Rule::new("odd-min", |x: &FinSet| {
            let (a, b) = (x.smallest().unwrap(), x.largest().unwrap());
            Ok(FinSet::singleton(if b % 2 == 1 { a } else { b }))
        });
        let s = CompressionScheme::new(2, 1, Sigma::Rule(rule), None).unwrap();
        // from delta0 = 3: {0,3} -> {0} < 3 needs bound 4; {0,5} -> {0} ... escalates
        let err = reduce_scheme(&s, &OrderedGround::naturals(12), 3).unwrap_err();
        assert!(matches!(err, Error::GroundExhausted { .. }));
        // with a closed chain only a non-monotone sigma can omit delta
        let escaping = Rule::new("escape", |x: &FinSet| {
            let (a, b) = (x.smallest().unwrap(), x.largest().unwrap());
            Ok(FinSet::singleton(if (a, b) == (5, 7) { 9 } else { b }))
        });
        let s = CompressionScheme::new(2, 1, Sigma::Rule(escaping), None).unwrap();
        let err = reduce_scheme(&s, &OrderedGround::naturals(12), 7).unwrap_err();
        assert_eq!(
            err,
            Error::DeltaNotSelected {
                x: FinSet::singleton(5),
                delta: 7
            }
        );
    }

    #[test]
    fn rejects_target_arity_zero_and_large_seed() {
        let s = CompressionScheme::new(1, 0, Sigma::Rule(Rule::new("e", |_| Ok(FinSet::empty()))), None).unwrap();
        assert!(matches!(
            reduce_scheme(&s, &OrderedGround::naturals(5), 1),
            Err(Error::InvalidArity { .. })
        ));
        assert_eq!(
            reduce_scheme(&max_scheme(), &OrderedGround::naturals(5), 5).unwrap_err(),
            Error::GroundExhausted { bound: 5, n: 5 }
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn chain_is_increasing_and_short(
            n in 4usize..16,
            delta0 in 1usize..8,
            picks in proptest::collection::vec(proptest::bool::ANY, 120),
        ) {
            prop_assume!(delta0 < n);
            let g = OrderedGround::naturals(n);
            let mut t = BTreeMap::new();
            for (i, x) in g.k_subsets(2).unwrap().enumerate() {
                let keep = if picks[i % picks.len()] { x.largest() } else { x.smallest() };
                t.insert(x, FinSet::singleton(keep.unwrap()));
            }
            let s = CompressionScheme::new(2, 1, Sigma::Table(Arc::new(t)), None).unwrap();
            match reduce_scheme(&s, &g, delta0) {
                Ok(r) => {
                    prop_assert!(r.chain.windows(2).all(|w| w[0] < w[1]));
                    prop_assert!(r.chain.len() <= n);
                    prop_assert_eq!(*r.chain.last().unwrap(), r.delta);
                    for x in r.ground.k_subsets(1).unwrap() {
                        let y = r.scheme.sigma(&x).unwrap();
                        prop_assert!(y.is_subset_of(&x));
                    }
                }
                Err(Error::GroundExhausted { .. }) | Err(Error::DeltaNotSelected { .. }) => {}
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}
