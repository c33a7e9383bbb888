//! Kuratowski-type decompositions of finite powers `n^(k+2)` into `k+2`
//! parts, part `i` being finite in the direction of axis `i`, and the
//! `(k+2) -> (k+1)` compression schemes they induce.
//!
//! The construction is inductive. Level 0 splits `n^2` by `a <= b`. A point
//! of level `k+1` is routed by the position `j` of its largest coordinate:
//! the remaining coordinates are looked up in the level-`k` decomposition
//! chosen for the ordinal `alpha = x_j`, and the part `p` found there is
//! shifted past `j`. Part `i` then never holds a point whose largest
//! coordinate sits at position `i`, so along axis `i` the coordinate is
//! bounded by another, fixed, coordinate.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground::{FinSet, OrderedGround};
use crate::schemes::{eta_from_sigma, CompressionScheme, Rule, Sigma};

/// How the well-order of each ordinal `alpha + 1` is chosen when a lower
/// decomposition is transported onto it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OrderPolicy {
    Identity,
    /// A ChaCha8 permutation per ordinal, stream = ordinal.
    Seeded {
        seed: u64,
    },
}

impl OrderPolicy {
    /// A permutation of `{0, …, alpha}`.
    pub fn order(&self, alpha: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..=alpha).collect();
        if let OrderPolicy::Seeded { seed } = *self {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(alpha as u64);
            perm.shuffle(&mut rng);
        }
        perm
    }
}

pub fn random_order_policy(seed: u64) -> OrderPolicy {
    OrderPolicy::Seeded { seed }
}

/// Assignment of every point of `n^(k+2)` (row-major, first coordinate most
/// significant) to one of `k+2` parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub k: usize,
    pub n: usize,
    /// `None` for hand-built decompositions, which cannot be rebuilt at a
    /// larger size.
    #[serde(default)]
    pub policy: Option<OrderPolicy>,
    pub assign: Vec<u8>,
}

fn power(n: usize, dims: usize) -> usize {
    n.checked_pow(dims as u32).expect("power overflows usize")
}

impl Decomposition {
    pub fn dims(&self) -> usize {
        self.k + 2
    }

    pub fn num_points(&self) -> usize {
        power(self.n, self.dims())
    }

    pub fn ground(&self) -> OrderedGround {
        OrderedGround::naturals(self.n)
    }

    pub fn index(&self, point: &[usize]) -> usize {
        debug_assert_eq!(point.len(), self.dims());
        point.iter().fold(0, |acc, &c| acc * self.n + c)
    }

    pub fn point(&self, index: usize) -> Vec<usize> {
        decode(index, self.n, self.dims())
    }

    pub fn part(&self, point: &[usize]) -> usize {
        self.assign[self.index(point)] as usize
    }

    /// Builds an assignment from explicit parts, rejecting points covered
    /// twice or not at all.
    pub fn from_parts(k: usize, n: usize, parts: &[Vec<Vec<usize>>]) -> Result<Self> {
        let dims = k + 2;
        if parts.len() != dims {
            return Err(Error::InvalidArgument(format!(
                "expected {dims} parts, got {}",
                parts.len()
            )));
        }
        let total = power(n, dims);
        let mut assign = vec![u8::MAX; total];
        for (i, part) in parts.iter().enumerate() {
            for p in part {
                if p.len() != dims || p.iter().any(|&c| c >= n) {
                    return Err(Error::InvalidArgument(format!("point {p:?} outside {n}^{dims}")));
                }
                let idx = p.iter().fold(0, |acc, &c| acc * n + c);
                if assign[idx] != u8::MAX {
                    return Err(Error::NotPartition(p.clone()));
                }
                assign[idx] = i as u8;
            }
        }
        if let Some(idx) = assign.iter().position(|&a| a == u8::MAX) {
            return Err(Error::NotPartition(decode(idx, n, dims)));
        }
        Ok(Decomposition {
            k,
            n,
            policy: None,
            assign,
        })
    }

    /// The same decomposition seen through a coordinatewise permutation:
    /// `y` gets the part of `perm(y)`.
    fn transport(&self, perm: &[usize]) -> Decomposition {
        debug_assert_eq!(perm.len(), self.n);
        let assign = (0..self.num_points())
            .map(|idx| {
                let p: Vec<usize> = self.point(idx).into_iter().map(|c| perm[c]).collect();
                self.assign[self.index(&p)]
            })
            .collect();
        Decomposition { assign, ..self.clone() }
    }
}

fn decode(mut index: usize, n: usize, dims: usize) -> Vec<usize> {
    let mut p = vec![0; dims];
    for slot in p.iter_mut().rev() {
        *slot = index % n;
        index /= n;
    }
    p
}

/// Position of the largest coordinate, the last one among ties.
pub fn largest_position(point: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in point.iter().enumerate() {
        if c >= point[best] {
            best = i;
        }
    }
    best
}

/// Increasing enumeration of `{0, …, dims-1} \ {j}`, applied to `p`.
pub fn skip_position(j: usize, p: usize) -> usize {
    if p < j {
        p
    } else {
        p + 1
    }
}

/// The level-0 split of `n^2`: part 0 is `{(a, b) : a <= b}`, part 1 the rest.
pub fn base_decomposition(n: usize) -> Decomposition {
    let assign = (0..n * n).map(|idx| u8::from(idx / n > idx % n)).collect();
    Decomposition {
        k: 0,
        n,
        policy: Some(OrderPolicy::Identity),
        assign,
    }
}

/// One inductive step: builds level `lower_level + 1` on side `n` from a
/// level-`lower_level` decomposition of `(alpha+1)^(lower_level+2)` for every
/// ordinal `alpha < n`.
pub fn step_decomposition<F>(lower_level: usize, n: usize, chooser: F) -> Result<Decomposition>
where
    F: Fn(usize) -> Option<Arc<Decomposition>>,
{
    let choices: Vec<Arc<Decomposition>> = (0..n)
        .map(|alpha| {
            let d = chooser(alpha).ok_or(Error::ChooserMissing(alpha))?;
            if d.k != lower_level || d.n != alpha + 1 || d.assign.len() != d.num_points() {
                return Err(Error::ChooserMismatch {
                    alpha,
                    level: d.k,
                    side: d.n,
                });
            }
            Ok(d)
        })
        .collect::<Result<_>>()?;
    let dims = lower_level + 3;
    let assign = (0..power(n, dims))
        .into_par_iter()
        .map(|idx| {
            let x = decode(idx, n, dims);
            let j = largest_position(&x);
            let alpha = x[j];
            let rest: Vec<usize> = x
                .iter()
                .enumerate()
                .filter(|&(pos, _)| pos != j)
                .map(|(_, &c)| c)
                .collect();
            let p = choices[alpha].part(&rest);
            skip_position(j, p) as u8
        })
        .collect();
    Ok(Decomposition {
        k: lower_level + 1,
        n,
        policy: None,
        assign,
    })
}

/// Level-`k` decomposition of `n^(k+2)`. The chooser at ordinal `alpha` is
/// the level-`(k-1)` decomposition of `(alpha+1)^(k+1)`, transported along
/// `policy.order(alpha)`.
pub fn build_decomposition(k: usize, n: usize, policy: OrderPolicy) -> Result<Decomposition> {
    if n == 0 {
        return Err(Error::InvalidArgument("side length must be at least 1".into()));
    }
    // all sides 1..=n at the current level
    let mut level: Vec<Arc<Decomposition>> = (1..=n).map(|s| Arc::new(base_decomposition(s))).collect();
    for lower in 0..k {
        let choosers: Vec<Arc<Decomposition>> = level
            .par_iter()
            .enumerate()
            .map(|(alpha, d)| match policy {
                OrderPolicy::Identity => Arc::clone(d),
                _ => Arc::new(d.transport(&policy.order(alpha))),
            })
            .collect();
        let sides: Vec<usize> = if lower + 1 == k { vec![n] } else { (1..=n).collect() };
        let mut next = Vec::with_capacity(sides.len());
        for s in sides {
            let d = step_decomposition(lower, s, |alpha| choosers.get(alpha).cloned())?;
            next.push(Arc::new(d));
        }
        level = next;
    }
    let top = level.pop().expect("at least one side");
    let mut top = Arc::try_unwrap(top).unwrap_or_else(|a| (*a).clone());
    top.policy = Some(policy);
    Ok(top)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub k: usize,
    pub n: usize,
    pub partition_ok: bool,
    pub part_sizes: Vec<usize>,
    /// Per part `i`: the largest fiber along axis `i`.
    pub max_direction_fiber: Vec<usize>,
    /// Fibers inside `n^(k+2)` are unchanged in the decomposition rebuilt at
    /// `compared_n`. `None` when the decomposition has no policy.
    pub truncation_stable: Option<bool>,
    pub compared_n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberRow {
    pub part: usize,
    pub direction: usize,
    /// Other coordinates joined by `;`, with `*` on the free axis.
    pub fixed_coords: String,
    pub fiber_size: usize,
}

fn check_partition(d: &Decomposition) -> Result<()> {
    let dims = d.dims();
    let total = d.num_points();
    if d.assign.len() < total {
        return Err(Error::NotPartition(decode(d.assign.len(), d.n, dims)));
    }
    if d.assign.len() > total {
        return Err(Error::Format(format!(
            "assign has {} entries for {total} points",
            d.assign.len()
        )));
    }
    if let Some(idx) = d.assign.iter().position(|&a| a as usize >= dims) {
        return Err(Error::NotPartition(decode(idx, d.n, dims)));
    }
    Ok(())
}

/// Direction-`i` fiber sizes of part `i`, keyed by the point index with
/// coordinate `i` zeroed.
fn direction_fiber_counts(d: &Decomposition) -> Vec<BTreeMap<usize, usize>> {
    let dims = d.dims();
    let mut out = vec![BTreeMap::new(); dims];
    for (idx, &a) in d.assign.iter().enumerate() {
        let i = a as usize;
        let stride = power(d.n, dims - 1 - i);
        let coord = (idx / stride) % d.n;
        *out[i].entry(idx - coord * stride).or_insert(0) += 1;
    }
    out
}

/// Exhaustive check: partition, per-part direction fibers, and stability of
/// those fibers against the same policy built at `larger_n` (default `2n`).
pub fn check_decomposition(d: &Decomposition, larger_n: Option<usize>) -> Result<DecompositionReport> {
    check_partition(d)?;
    let dims = d.dims();
    let mut part_sizes = vec![0; dims];
    for &a in &d.assign {
        part_sizes[a as usize] += 1;
    }
    let max_direction_fiber = direction_fiber_counts(d)
        .iter()
        .map(|m| m.values().copied().max().unwrap_or(0))
        .collect();

    let (truncation_stable, compared_n) = match d.policy {
        None => (None, None),
        Some(policy) => {
            let big_n = larger_n.unwrap_or(2 * d.n);
            if big_n <= d.n {
                return Err(Error::InvalidArgument(format!(
                    "comparison side {big_n} must exceed {}",
                    d.n
                )));
            }
            let big = build_decomposition(d.k, big_n, policy)?;
            (Some(fibers_stable(d, &big)), Some(big_n))
        }
    };

    Ok(DecompositionReport {
        k: d.k,
        n: d.n,
        partition_ok: true,
        part_sizes,
        max_direction_fiber,
        truncation_stable,
        compared_n,
    })
}

/// For every part `i` and every choice of the other coordinates below
/// `small.n`, the axis-`i` fiber is the same set in both decompositions.
fn fibers_stable(small: &Decomposition, big: &Decomposition) -> bool {
    let dims = small.dims();
    (0..small.num_points()).into_par_iter().all(|idx| {
        let x = small.point(idx);
        (0..dims).all(|i| {
            if x[i] != 0 {
                return true; // one representative per fiber
            }
            let mut p = x.clone();
            let small_fiber = (0..small.n).filter(|&t| {
                p[i] = t;
                small.part(&p) == i
            });
            let small_fiber: Vec<usize> = small_fiber.collect();
            let mut p = x.clone();
            let big_fiber: Vec<usize> = (0..big.n)
                .filter(|&t| {
                    p[i] = t;
                    big.part(&p) == i
                })
                .collect();
            small_fiber == big_fiber
        })
    })
}

/// One row per non-empty direction fiber, for CSV export.
pub fn direction_fibers(d: &Decomposition) -> Result<Vec<FiberRow>> {
    check_partition(d)?;
    let dims = d.dims();
    let mut rows = Vec::new();
    for (i, counts) in direction_fiber_counts(d).into_iter().enumerate() {
        for (key, size) in counts {
            let p = d.point(key);
            let coords: Vec<String> = p
                .iter()
                .enumerate()
                .map(|(pos, c)| if pos == i { "*".to_string() } else { c.to_string() })
                .collect();
            rows.push(FiberRow {
                part: i,
                direction: i,
                fixed_coords: coords.join(";"),
                fiber_size: size,
            });
        }
    }
    debug_assert!(rows.iter().all(|r| r.part < dims));
    Ok(rows)
}

/// The `(k+2) -> (k+1)` scheme on `{0, …, n-1}` that drops from each
/// increasing tuple the coordinate indexed by its part. `eta` is the fiber
/// union.
pub fn scheme_from_decomposition(d: &Decomposition) -> Result<CompressionScheme> {
    check_partition(d)?;
    let dims = d.dims();
    let shared = Arc::new(d.clone());
    let name = format!("kuratowski(k={}, n={})", d.k, d.n);
    let rule = Rule::new(name, move |x: &FinSet| {
        let n = shared.n;
        if let Some(r) = x.iter().find(|&r| r >= n) {
            return Err(Error::OutsideGround { rank: r, n });
        }
        let i = shared.part(x.as_slice());
        Ok(x.without(x.as_slice()[i]))
    });
    let scheme = CompressionScheme::new(dims, dims - 1, Sigma::Rule(rule), None)?;
    eta_from_sigma(&scheme, &d.ground())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::verify_scheme;
    use proptest::prelude::*;

    fn fs(v: &[usize]) -> FinSet {
        FinSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn base_examples() {
        let d = base_decomposition(6);
        assert_eq!(d.part(&[3, 5]), 0);
        assert_eq!(d.part(&[5, 3]), 1);
        assert_eq!(d.part(&[4, 4]), 0);
    }

    #[test]
    fn base_direction_fibers() {
        let d = base_decomposition(50);
        let counts = direction_fiber_counts(&d);
        // part 0 along axis 0 at column c: {a : a <= c}
        for c in 0..50 {
            assert_eq!(counts[0][&d.index(&[0, c])], c + 1);
        }
        let r = check_decomposition(&d, None).unwrap();
        assert_eq!(r.part_sizes.iter().sum::<usize>(), 2500);
        assert_eq!(r.max_direction_fiber, vec![50, 49]);
        assert_eq!(r.truncation_stable, Some(true));
    }

    fn identity_chooser(alpha: usize) -> Option<Arc<Decomposition>> {
        Some(Arc::new(base_decomposition(alpha + 1)))
    }

    #[test]
    fn step_examples() {
        let d = step_decomposition(0, 8, identity_chooser).unwrap();
        assert_eq!(d.k, 1);
        assert_eq!(d.part(&[1, 4, 2]), 0);
        assert_eq!(d.part(&[4, 1, 2]), 1);
        assert_eq!(d.part(&[1, 2, 4]), 0);
    }

    #[test]
    fn step_chooser_errors() {
        assert_eq!(
            step_decomposition(0, 4, |a| (a < 2).then(|| Arc::new(base_decomposition(a + 1)))).unwrap_err(),
            Error::ChooserMissing(2)
        );
        assert_eq!(
            step_decomposition(0, 4, |a| Some(Arc::new(base_decomposition(a + 2)))).unwrap_err(),
            Error::ChooserMismatch {
                alpha: 0,
                level: 0,
                side: 2
            }
        );
    }

    #[test]
    fn identity_policy_level_zero_chooser_is_base() {
        let p = OrderPolicy::Identity;
        for alpha in 0..6 {
            let d = base_decomposition(alpha + 1);
            assert_eq!(d.transport(&p.order(alpha)), d);
        }
        assert_eq!(
            build_decomposition(0, 9, random_order_policy(3)).unwrap().assign,
            base_decomposition(9).assign
        );
    }

    #[test]
    fn build_partitions_power() {
        let d = build_decomposition(1, 8, OrderPolicy::Identity).unwrap();
        let r = check_decomposition(&d, None).unwrap();
        assert_eq!(r.part_sizes.iter().sum::<usize>(), 512);
        let d = build_decomposition(2, 5, OrderPolicy::Identity).unwrap();
        let r = check_decomposition(&d, None).unwrap();
        assert_eq!(r.part_sizes.len(), 4);
        assert_eq!(r.part_sizes.iter().sum::<usize>(), 625);
        assert_eq!(r.truncation_stable, Some(true));
    }

    #[test]
    fn truncation_stable_against_larger_side() {
        let d = build_decomposition(1, 12, OrderPolicy::Identity).unwrap();
        let r = check_decomposition(&d, Some(20)).unwrap();
        assert_eq!(r.truncation_stable, Some(true));
        assert_eq!(r.compared_n, Some(20));
        assert!(matches!(
            check_decomposition(&d, Some(12)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn tampered_decomposition_is_unstable() {
        let mut d = build_decomposition(1, 6, OrderPolicy::Identity).unwrap();
        // move (5,0,0) into part 0: its axis-0 fiber now reaches the truncation edge
        let idx = d.index(&[5, 0, 0]);
        assert_eq!(d.assign[idx], 1);
        d.assign[idx] = 0;
        let r = check_decomposition(&d, None).unwrap();
        assert_eq!(r.truncation_stable, Some(false));
    }

    #[test]
    fn double_assignment_is_not_partition() {
        let mut parts = vec![Vec::new(), Vec::new()];
        for a in 0..3 {
            for b in 0..3 {
                parts[usize::from(a > b)].push(vec![a, b]);
            }
        }
        assert!(Decomposition::from_parts(0, 3, &parts).is_ok());
        parts[1].push(vec![1, 1]);
        assert_eq!(
            Decomposition::from_parts(0, 3, &parts).unwrap_err(),
            Error::NotPartition(vec![1, 1])
        );
        parts[1].pop();
        parts[0].retain(|p| p != &vec![2, 2]);
        assert_eq!(
            Decomposition::from_parts(0, 3, &parts).unwrap_err(),
            Error::NotPartition(vec![2, 2])
        );
    }

    #[test]
    fn out_of_range_assignment_is_not_partition() {
        let mut d = base_decomposition(3);
        d.assign[4] = 7;
        assert_eq!(
            check_decomposition(&d, None).unwrap_err(),
            Error::NotPartition(vec![1, 1])
        );
        let mut d = base_decomposition(3);
        d.assign.pop();
        assert_eq!(
            check_decomposition(&d, None).unwrap_err(),
            Error::NotPartition(vec![2, 2])
        );
    }

    #[test]
    fn hand_built_decomposition_skips_stability() {
        let d = Decomposition {
            policy: None,
            ..base_decomposition(4)
        };
        let r = check_decomposition(&d, None).unwrap();
        assert_eq!(r.truncation_stable, None);
    }

    #[test]
    fn scheme_examples() {
        let d = build_decomposition(1, 12, OrderPolicy::Identity).unwrap();
        let s = scheme_from_decomposition(&d).unwrap();
        assert_eq!((s.m(), s.d()), (3, 2));
        assert_eq!(s.sigma(&fs(&[1, 2, 4])).unwrap(), fs(&[2, 4]));
        let r = verify_scheme(&s, &d.ground()).unwrap();
        assert!(r.monotone_ok && r.cover_ok);

        let s = scheme_from_decomposition(&base_decomposition(8)).unwrap();
        assert_eq!(s.sigma(&fs(&[3, 5])).unwrap(), fs(&[5]));
    }

    #[test]
    fn seeded_build_is_reproducible_and_valid() {
        let a = build_decomposition(1, 9, random_order_policy(11)).unwrap();
        let b = build_decomposition(1, 9, random_order_policy(11)).unwrap();
        assert_eq!(a, b);
        let c = build_decomposition(1, 9, random_order_policy(12)).unwrap();
        assert_ne!(a.assign, c.assign);
        for d in [&a, &c] {
            let r = check_decomposition(d, None).unwrap();
            assert_eq!(r.truncation_stable, Some(true));
        }
    }

    #[test]
    fn decomposition_json_shape() {
        let d = build_decomposition(1, 2, OrderPolicy::Seeded { seed: 4 }).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert!(json.starts_with(r#"{"k":1,"n":2,"policy":{"kind":"seeded","seed":4},"assign":["#));
        let back: Decomposition = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn fiber_rows_cover_every_point() {
        let d = build_decomposition(1, 5, OrderPolicy::Identity).unwrap();
        let rows = direction_fibers(&d).unwrap();
        assert_eq!(rows.iter().map(|r| r.fiber_size).sum::<usize>(), 125);
        assert!(rows
            .iter()
            .all(|r| r.fixed_coords.split(';').nth(r.direction) == Some("*")));
    }

    #[test]
    fn skip_position_is_a_bijection_onto_complement() {
        for dims in 2..6 {
            for j in 0..dims {
                let img: Vec<usize> = (0..dims - 1).map(|p| skip_position(j, p)).collect();
                let expect: Vec<usize> = (0..dims).filter(|&q| q != j).collect();
                assert_eq!(img, expect);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn part_never_equals_largest_position(k in 0usize..=2, n in 1usize..=7, seed in proptest::option::of(0u64..1000)) {
            let policy = seed.map_or(OrderPolicy::Identity, random_order_policy);
            let d = build_decomposition(k, n, policy).unwrap();
            for idx in 0..d.num_points() {
                let x = d.point(idx);
                prop_assert_ne!(d.part(&x), largest_position(&x));
            }
            let r = check_decomposition(&d, None).unwrap();
            prop_assert_eq!(r.part_sizes.iter().sum::<usize>(), d.num_points());
            prop_assert_eq!(r.truncation_stable, Some(true));
        }
    }
}
