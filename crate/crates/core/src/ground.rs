//! Ordered ground sets and finite subsets stored as monotone enumerations.
//!
//! Every element of a ground is addressed by its rank (a `usize`); the
//! rational ground only changes how a rank is displayed. Everything
//! downstream depends on the order type alone.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite, linearly ordered ground set: the first `n` naturals, or the
/// first `n` rationals of `[0,1]` in diagonal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OrderedGround {
    Naturals { n: usize },
    Rationals { n: usize },
}

impl OrderedGround {
    pub fn naturals(n: usize) -> Self {
        OrderedGround::Naturals { n }
    }

    pub fn rationals(n: usize) -> Self {
        OrderedGround::Rationals { n }
    }

    pub fn size(&self) -> usize {
        match *self {
            OrderedGround::Naturals { n } | OrderedGround::Rationals { n } => n,
        }
    }

    pub fn contains(&self, rank: usize) -> bool {
        rank < self.size()
    }

    pub fn check(&self, set: &FinSet) -> Result<()> {
        match set.largest() {
            Some(r) if !self.contains(r) => Err(Error::OutsideGround {
                rank: r,
                n: self.size(),
            }),
            _ => Ok(()),
        }
    }

    /// Human-readable form of the element with the given rank.
    pub fn display(&self, rank: usize) -> String {
        match self {
            OrderedGround::Naturals { .. } => rank.to_string(),
            OrderedGround::Rationals { .. } => {
                let q = unrank_rational(rank);
                format!("{}/{}", q.numer(), q.denom())
            }
        }
    }

    pub fn display_set(&self, set: &FinSet) -> String {
        let parts: Vec<String> = set.iter().map(|r| self.display(r)).collect();
        format!("{{{}}}", parts.join(","))
    }

    pub fn k_subsets(&self, k: usize) -> Result<KSubsets> {
        k_subsets(self, k)
    }
}

/// A finite set of ranks, kept as its strictly increasing enumeration.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct FinSet(Vec<usize>);

impl FinSet {
    /// Wraps an already strictly increasing vector.
    pub fn new(elements: Vec<usize>) -> Result<Self> {
        if elements.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::NotIncreasing(elements));
        }
        Ok(FinSet(elements))
    }

    pub fn empty() -> Self {
        FinSet(Vec::new())
    }

    pub fn singleton(rank: usize) -> Self {
        FinSet(vec![rank])
    }

    /// `{0, 1, …, last}`.
    pub fn initial_segment(last: usize) -> Self {
        FinSet((0..=last).collect())
    }

    /// `{0, 1, …, len-1}`.
    pub fn range(len: usize) -> Self {
        FinSet((0..len).collect())
    }

    pub(crate) fn from_sorted_unchecked(elements: Vec<usize>) -> Self {
        debug_assert!(elements.windows(2).all(|w| w[0] < w[1]));
        FinSet(elements)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn largest(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn smallest(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn contains(&self, rank: usize) -> bool {
        self.0.binary_search(&rank).is_ok()
    }

    pub fn is_subset_of(&self, other: &FinSet) -> bool {
        // both sides sorted: a single merge pass
        let mut it = other.0.iter();
        'outer: for &a in &self.0 {
            for &b in it.by_ref() {
                if b == a {
                    continue 'outer;
                }
                if b > a {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn union(&self, other: &FinSet) -> FinSet {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        FinSet(out)
    }

    pub fn difference(&self, other: &FinSet) -> FinSet {
        FinSet(self.iter().filter(|&r| !other.contains(r)).collect())
    }

    pub fn without(&self, rank: usize) -> FinSet {
        FinSet(self.iter().filter(|&r| r != rank).collect())
    }

    pub fn with(&self, rank: usize) -> FinSet {
        self.union(&FinSet::singleton(rank))
    }

    /// Elements at the given positions of the enumeration.
    pub fn select(&self, positions: &[usize]) -> FinSet {
        FinSet(positions.iter().map(|&p| self.0[p]).collect())
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl TryFrom<Vec<usize>> for FinSet {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        FinSet::new(v)
    }
}

impl From<FinSet> for Vec<usize> {
    fn from(s: FinSet) -> Self {
        s.0
    }
}

impl fmt::Display for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "}}")
    }
}

/// Monotone enumeration of a finite collection of distinct ranks.
///
/// Duplicates are rejected rather than merged, since members of `[X]^m`
/// have distinct elements.
pub fn monotone_enum(raw: &[usize]) -> Result<FinSet> {
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut v = raw.to_vec();
    v.sort_unstable();
    if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateElement(w[0]));
    }
    Ok(FinSet(v))
}

fn totient(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Position of a reduced fraction of `[0,1]` in the diagonal enumeration
/// `0/1, 1/1, 1/2, 1/3, 2/3, 1/4, 3/4, …` (by denominator, then numerator).
pub fn rank_rational(q: Ratio<u64>) -> Result<usize> {
    let (num, den) = (*q.numer(), *q.denom());
    if den == 0 || num > den {
        return Err(Error::RationalOutOfRange { num, den });
    }
    if num.gcd(&den) != 1 {
        return Err(Error::NotReduced { num, den });
    }
    if den == 1 {
        return Ok(num as usize);
    }
    let before: u64 = 2 + (2..den).map(totient).sum::<u64>();
    let within = (1..num).filter(|p| p.gcd(&den) == 1).count() as u64;
    Ok((before + within) as usize)
}

/// Inverse of [`rank_rational`]. The returned ratio is in lowest terms.
pub fn unrank_rational(rank: usize) -> Ratio<u64> {
    if rank < 2 {
        return Ratio::new_raw(rank as u64, 1);
    }
    let mut r = (rank - 2) as u64;
    let mut den = 2u64;
    loop {
        let phi = totient(den);
        if r < phi {
            break;
        }
        r -= phi;
        den += 1;
    }
    let num = (1..den)
        .filter(|p| p.gcd(&den) == 1)
        .nth(r as usize)
        .expect("totient counts the coprime numerators");
    Ratio::new_raw(num, den)
}

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Lexicographic stream of the `k`-element subsets of `{0,…,n-1}`, as
/// position vectors.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    /// Yields nothing when `k > n`.
    pub fn new(n: usize, k: usize) -> Self {
        let current = (k <= n).then(|| (0..k).collect());
        Combinations { n, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let k = out.len();
        let mut next = out.clone();
        // rightmost position that can still advance
        let mut i = k;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                return Some(out);
            }
        }
        Some(out)
    }
}

/// All `k`-subsets of a ground in lexicographic order.
#[derive(Debug, Clone)]
pub struct KSubsets(Combinations);

impl Iterator for KSubsets {
    type Item = FinSet;

    fn next(&mut self) -> Option<FinSet> {
        self.0.next().map(FinSet)
    }
}

pub fn k_subsets(ground: &OrderedGround, k: usize) -> Result<KSubsets> {
    let n = ground.size();
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    Ok(KSubsets(Combinations::new(n, k)))
}

/// The `k`-subsets of a given set, lexicographic in its enumeration.
pub fn subsets_of(set: &FinSet, k: usize) -> impl Iterator<Item = FinSet> + '_ {
    Combinations::new(set.len(), k).map(move |pos| set.select(&pos))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fs(v: &[usize]) -> FinSet {
        FinSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn monotone_enum_sorts() {
        assert_eq!(monotone_enum(&[4, 1, 7]).unwrap(), fs(&[1, 4, 7]));
        assert_eq!(monotone_enum(&[3]).unwrap(), fs(&[3]));
    }

    #[test]
    fn monotone_enum_rejects_duplicates_and_empty() {
        assert_eq!(monotone_enum(&[2, 2]), Err(Error::DuplicateElement(2)));
        assert_eq!(monotone_enum(&[]), Err(Error::EmptyInput));
    }

    // brute-force list of reduced fractions in [0,1] ordered by
    // denominator, then numerator
    fn diagonal_oracle(count: usize) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut q = 1u64;
        while out.len() < count {
            for p in 0..=q {
                if p.gcd(&q) == 1 {
                    out.push((p, q));
                }
            }
            q += 1;
        }
        out.truncate(count);
        out
    }

    #[test]
    fn unrank_matches_diagonal_oracle() {
        let oracle = diagonal_oracle(2000);
        assert_eq!(oracle[0], (0, 1));
        assert_eq!(oracle[2], (1, 2));
        assert_eq!(&oracle[..5], &[(0, 1), (1, 1), (1, 2), (1, 3), (2, 3)]);
        for (r, &(p, q)) in oracle.iter().enumerate() {
            let got = unrank_rational(r);
            assert_eq!((*got.numer(), *got.denom()), (p, q), "rank {r}");
        }
    }

    #[test]
    fn rank_unrank_inverse_exhaustive() {
        for r in 0..=10_000 {
            assert_eq!(rank_rational(unrank_rational(r)).unwrap(), r);
        }
        assert_eq!(rank_rational(unrank_rational(17)).unwrap(), 17);
    }

    #[test]
    fn rank_rejects_unreduced_and_out_of_range() {
        assert_eq!(
            rank_rational(Ratio::new_raw(2, 4)),
            Err(Error::NotReduced { num: 2, den: 4 })
        );
        assert!(matches!(
            rank_rational(Ratio::new_raw(3, 2)),
            Err(Error::RationalOutOfRange { .. })
        ));
        assert!(matches!(
            rank_rational(Ratio::new_raw(0, 0)),
            Err(Error::RationalOutOfRange { .. })
        ));
    }

    #[test]
    fn rationals_display_by_rank() {
        let g = OrderedGround::rationals(10);
        assert_eq!(g.display(0), "0/1");
        assert_eq!(g.display(2), "1/2");
        assert_eq!(g.display_set(&fs(&[1, 3, 4])), "{1/1,1/3,2/3}");
    }

    #[test]
    fn k_subsets_examples() {
        let all: Vec<_> = k_subsets(&OrderedGround::naturals(4), 2).unwrap().collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], fs(&[0, 1]));
        assert_eq!(all[5], fs(&[2, 3]));

        let all: Vec<_> = k_subsets(&OrderedGround::naturals(3), 3).unwrap().collect();
        assert_eq!(all, vec![fs(&[0, 1, 2])]);

        assert_eq!(
            k_subsets(&OrderedGround::naturals(2), 3).unwrap_err(),
            Error::KTooLarge { k: 3, n: 2 }
        );

        let all: Vec<_> = k_subsets(&OrderedGround::naturals(5), 0).unwrap().collect();
        assert_eq!(all, vec![FinSet::empty()]);
    }

    fn factorial(n: usize) -> u128 {
        (1..=n as u128).product()
    }

    #[test]
    fn k_subset_counts_match_factorial_formula() {
        for n in 0..=12 {
            for k in 0..=n {
                let g = OrderedGround::naturals(n);
                let subsets: Vec<_> = k_subsets(&g, k).unwrap().collect();
                let expected = factorial(n) / (factorial(k) * factorial(n - k));
                assert_eq!(subsets.len() as u128, expected, "n={n} k={k}");
                assert_eq!(binomial(n, k), expected);
                assert!(subsets.windows(2).all(|w| w[0] < w[1]), "lexicographic");
            }
        }
    }

    #[test]
    fn subset_and_union() {
        let a = fs(&[1, 4, 7]);
        assert!(fs(&[1, 7]).is_subset_of(&a));
        assert!(FinSet::empty().is_subset_of(&a));
        assert!(!fs(&[1, 5]).is_subset_of(&a));
        assert!(!fs(&[8]).is_subset_of(&a));
        assert_eq!(a.union(&fs(&[0, 4, 9])), fs(&[0, 1, 4, 7, 9]));
        assert_eq!(a.without(4), fs(&[1, 7]));
        assert_eq!(a.with(5), fs(&[1, 4, 5, 7]));
    }

    #[test]
    fn finset_json_rejects_unsorted() {
        let s: FinSet = serde_json::from_str("[1,4,7]").unwrap();
        assert_eq!(s, fs(&[1, 4, 7]));
        assert!(serde_json::from_str::<FinSet>("[4,1]").is_err());
        let g: OrderedGround = serde_json::from_str(r#"{"kind":"rationals","n":100}"#).unwrap();
        assert_eq!(g, OrderedGround::rationals(100));
    }

    proptest! {
        #[test]
        fn monotone_enum_is_strictly_increasing(raw in proptest::collection::hash_set(0usize..1000, 1..40)) {
            let raw: Vec<usize> = raw.into_iter().collect();
            let s = monotone_enum(&raw).unwrap();
            prop_assert_eq!(s.len(), raw.len());
            prop_assert!(s.as_slice().windows(2).all(|w| w[0] < w[1]));
            prop_assert!(raw.iter().all(|&r| s.contains(r)));
        }

        #[test]
        fn subset_check_agrees_with_contains(
            a in proptest::collection::btree_set(0usize..30, 0..10),
            b in proptest::collection::btree_set(0usize..30, 0..20),
        ) {
            let fa = FinSet::new(a.iter().copied().collect()).unwrap();
            let fb = FinSet::new(b.iter().copied().collect()).unwrap();
            prop_assert_eq!(fa.is_subset_of(&fb), a.is_subset(&b));
            let u: Vec<usize> = a.union(&b).copied().collect();
            prop_assert_eq!(fa.union(&fb).into_vec(), u);
        }
    }
}
