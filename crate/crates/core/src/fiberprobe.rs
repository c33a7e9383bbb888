//! Sampling probes for selectors on increasing tuples in `[0,1]`.
//!
//! A selector takes a strictly increasing `(m+1)`-tuple to an `m`-tuple of
//! its own entries, i.e. it drops one coordinate. For a continuous selector
//! the dropped index is locally constant, so moving the dropped coordinate
//! alone never changes the image: every fiber contains a segment. The probes
//! here check both facts numerically and report the first counterexample.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for matching coordinates and comparing images.
pub const TAU: f64 = 1e-9;

/// Names of the bundled selectors.
pub const GALLERY: [&str; 4] = ["drop-last", "drop-first", "drop-middle", "parity"];

type SelectFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

#[derive(Clone)]
pub struct Selector {
    name: String,
    m: usize,
    claimed_continuous: bool,
    rule: Arc<SelectFn>,
}

impl Selector {
    pub fn new<F>(name: impl Into<String>, m: usize, claimed_continuous: bool, rule: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Selector {
            name: name.into(),
            m,
            claimed_continuous,
            rule: Arc::new(rule),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn claimed_continuous(&self) -> bool {
        self.claimed_continuous
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.m + 1 {
            return Err(Error::InvalidArgument(format!(
                "selector {} takes {} coordinates, got {}",
                self.name,
                self.m + 1,
                x.len()
            )));
        }
        Ok((self.rule)(x))
    }
}

impl fmt::Debug for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Selector")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("claimed_continuous", &self.claimed_continuous)
            .finish()
    }
}

fn dropping(x: &[f64], i: usize) -> Vec<f64> {
    let mut out = x.to_vec();
    out.remove(i);
    out
}

/// Looks up a bundled selector for `(m+1)`-tuples.
///
/// `parity` drops the first coordinate when `floor(10 * sum)` is even and
/// the last one otherwise; it is the discontinuous control.
pub fn gallery_selector(name: &str, m: usize) -> Result<Selector> {
    if m == 0 {
        return Err(Error::InvalidArgument("selectors need m >= 1".into()));
    }
    let sel = match name {
        "drop-last" => Selector::new(name, m, true, move |x| dropping(x, m)),
        "drop-first" => Selector::new(name, m, true, |x| dropping(x, 0)),
        "drop-middle" => Selector::new(name, m, true, move |x| dropping(x, m / 2)),
        "parity" => Selector::new(name, m, false, move |x| {
            let bucket = (10.0 * x.iter().sum::<f64>()).floor() as i64;
            dropping(x, if bucket % 2 == 0 { 0 } else { m })
        }),
        other => return Err(Error::UnknownSelector(other.to_string())),
    };
    Ok(sel)
}

/// A third of the smallest gap between consecutive coordinates.
pub fn epsilon_gap(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::InvalidArgument("need at least two coordinates".into()));
    }
    let gap = x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if gap <= TAU {
        return Err(Error::DegenerateGap(x.to_vec()));
    }
    Ok(gap / 3.0)
}

/// Index of the coordinate of `x` missing from `sel(x)`.
pub fn drop_index(sel: &Selector, x: &[f64]) -> Result<usize> {
    if x.windows(2).any(|w| w[1] - w[0] <= TAU) {
        return Err(Error::AmbiguousDrop(x.to_vec()));
    }
    let image = sel.apply(x)?;
    let not_sub = || Error::NotSubtuple {
        x: x.to_vec(),
        image: image.clone(),
    };
    if image.len() + 1 != x.len() {
        return Err(not_sub());
    }
    let mut used = vec![false; x.len()];
    for &y in &image {
        let (i, dist) = x
            .iter()
            .enumerate()
            .map(|(i, &xi)| (i, (xi - y).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("x is non-empty");
        if dist > TAU || used[i] {
            return Err(not_sub());
        }
        used[i] = true;
    }
    Ok(used.iter().position(|&u| !u).expect("one coordinate is left"))
}

fn same_image(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(p, q)| (p - q).abs() <= TAU)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constancy {
    pub locally_constant: bool,
    pub drop_index: usize,
    pub samples: usize,
    /// First sampled point whose dropped index differs.
    pub disagreement: Option<Vec<f64>>,
}

fn probe_with<R: Rng>(sel: &Selector, x: &[f64], radius: f64, trials: usize, rng: &mut R) -> Result<Constancy> {
    let gap = epsilon_gap(x)?;
    if radius > gap {
        return Err(Error::RadiusTooLarge { radius, gap });
    }
    let base = drop_index(sel, x)?;
    let mut y = x.to_vec();
    for _ in 0..trials {
        for (yi, &xi) in y.iter_mut().zip(x) {
            let lo = (xi - radius).max(0.0);
            let hi = (xi + radius).min(1.0);
            *yi = if hi > lo { rng.random_range(lo..hi) } else { xi };
        }
        if drop_index(sel, &y)? != base {
            return Ok(Constancy {
                locally_constant: false,
                drop_index: base,
                samples: trials,
                disagreement: Some(y),
            });
        }
    }
    Ok(Constancy {
        locally_constant: true,
        drop_index: base,
        samples: trials,
        disagreement: None,
    })
}

/// Samples `trials` points of the sup-norm `radius`-ball around `x`, clipped
/// to `[0,1]`, and compares their dropped index with that of `x`. With
/// `radius <= epsilon_gap(x)` every sample is still strictly increasing.
pub fn local_constancy_probe(sel: &Selector, x: &[f64], radius: f64, trials: usize, seed: u64) -> Result<Constancy> {
    probe_with(sel, x, radius, trials, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `k` points that differ from `x` only in the dropped coordinate, spread
/// evenly over the open `epsilon_gap`-window around it inside `[0,1]`.
/// Fails with `ImageDrift` at the first point whose image differs from
/// `sel(x)`.
pub fn fiber_sampler(sel: &Selector, x: &[f64], k: usize) -> Result<Vec<Vec<f64>>> {
    let i = drop_index(sel, x)?;
    let gap = epsilon_gap(x)?;
    let expected = sel.apply(x)?;
    let lo = (x[i] - gap).max(0.0);
    let hi = (x[i] + gap).min(1.0);
    let step = (hi - lo) / (k + 1) as f64;
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let mut y = x.to_vec();
        y[i] = lo + (j + 1) as f64 * step;
        let got = sel.apply(&y)?;
        if !same_image(&got, &expected) {
            return Err(Error::ImageDrift {
                point: y,
                expected,
                got,
            });
        }
        out.push(y);
    }
    Ok(out)
}

/// `x_i = (i+1)/(m+2)`. The coordinates sum to `(m+1)/2`, a multiple of
/// `0.1`, so moving any one of them within its gap window crosses a parity
/// boundary.
pub fn parity_boundary_point(m: usize) -> Vec<f64> {
    (0..=m).map(|i| (i + 1) as f64 / (m + 2) as f64).collect()
}

/// A uniformly random increasing `(m+1)`-tuple with gaps above `3 * TAU`.
pub fn random_probe_point<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = (0..=m).map(|_| rng.random::<f64>()).collect();
        x.sort_by(f64::total_cmp);
        if x.windows(2).all(|w| w[1] - w[0] > 3.0 * TAU) {
            return x;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftWitness {
    pub point: Vec<f64>,
    pub expected: Vec<f64>,
    pub got: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub selector: String,
    pub m: usize,
    pub claimed_continuous: bool,
    pub x: Vec<f64>,
    pub epsilon_gap: f64,
    pub drop_index: usize,
    pub radius: f64,
    pub trials: usize,
    pub locally_constant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disagreement: Option<Vec<f64>>,
    pub witnesses_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fiber_witnesses: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftWitness>,
    pub seed: u64,
    /// ChaCha8 stream the point's randomness came from.
    pub stream: u64,
}

impl ProbeReport {
    /// No disagreement and no drift.
    pub fn passed(&self) -> bool {
        self.locally_constant && self.drift.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeParams {
    pub trials: usize,
    /// Ball radius as a fraction of `epsilon_gap`.
    pub radius_fraction: f64,
    pub witnesses: usize,
    pub keep_witnesses: bool,
}

impl Default for ProbeParams {
    fn default() -> Self {
        ProbeParams {
            trials: 1000,
            radius_fraction: 0.5,
            witnesses: 1000,
            keep_witnesses: false,
        }
    }
}

fn probe_point_with(
    sel: &Selector,
    x: Vec<f64>,
    params: &ProbeParams,
    rng: &mut ChaCha8Rng,
    seed: u64,
    stream: u64,
) -> Result<ProbeReport> {
    let gap = epsilon_gap(&x)?;
    let radius = gap * params.radius_fraction;
    let local = probe_with(sel, &x, radius, params.trials, rng)?;
    let (witnesses, drift) = match fiber_sampler(sel, &x, params.witnesses) {
        Ok(w) => (w, None),
        Err(Error::ImageDrift { point, expected, got }) => (Vec::new(), Some(DriftWitness { point, expected, got })),
        Err(e) => return Err(e),
    };
    Ok(ProbeReport {
        selector: sel.name().to_string(),
        m: sel.m(),
        claimed_continuous: sel.claimed_continuous(),
        epsilon_gap: gap,
        drop_index: local.drop_index,
        radius,
        trials: params.trials,
        locally_constant: local.locally_constant,
        disagreement: local.disagreement,
        witnesses_count: witnesses.len(),
        fiber_witnesses: if params.keep_witnesses { witnesses } else { Vec::new() },
        drift,
        seed,
        stream,
        x,
    })
}

/// Local probe plus fiber sampling at a given point, randomness from
/// `seed` on stream 0.
pub fn probe_point(sel: &Selector, x: &[f64], params: &ProbeParams, seed: u64) -> Result<ProbeReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    probe_point_with(sel, x.to_vec(), params, &mut rng, seed, 0)
}

/// Probes `points` random points. Point `j` is drawn, and probed, from
/// `ChaCha8Rng::seed_from_u64(seed)` on stream `j`.
pub fn survey(sel: &Selector, points: usize, params: &ProbeParams, seed: u64) -> Result<Vec<ProbeReport>> {
    (0..points as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j);
            let x = random_probe_point(&mut rng, sel.m());
            probe_point_with(sel, x, params, &mut rng, seed, j)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const X: [f64; 3] = [0.1, 0.5, 0.9];

    #[test]
    fn epsilon_gap_examples() {
        assert!((epsilon_gap(&X).unwrap() - 0.4 / 3.0).abs() < 1e-15);
        assert!((epsilon_gap(&[0.0, 0.5, 1.0]).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(
            epsilon_gap(&[0.2, 0.2, 0.9]),
            Err(Error::DegenerateGap(vec![0.2, 0.2, 0.9]))
        );
    }

    #[test]
    fn drop_index_examples() {
        assert_eq!(drop_index(&gallery_selector("drop-last", 2).unwrap(), &X).unwrap(), 2);
        assert_eq!(drop_index(&gallery_selector("drop-first", 2).unwrap(), &X).unwrap(), 0);
        assert_eq!(drop_index(&gallery_selector("drop-middle", 2).unwrap(), &X).unwrap(), 1);
        let zeros = Selector::new("zeros", 2, false, |_| vec![0.0, 0.0]);
        assert!(matches!(drop_index(&zeros, &X), Err(Error::NotSubtuple { .. })));
        let twice = Selector::new("twice", 2, false, |x| vec![x[0], x[0]]);
        assert!(matches!(drop_index(&twice, &X), Err(Error::NotSubtuple { .. })));
        let near = [0.1, 0.1 + TAU / 2.0, 0.9];
        assert!(matches!(drop_index(&zeros, &near), Err(Error::AmbiguousDrop(_))));
        // an image off by less than the tolerance still matches
        let jitter = Selector::new("jitter", 2, true, |x| vec![x[0] + TAU / 4.0, x[1]]);
        assert_eq!(drop_index(&jitter, &X).unwrap(), 2);
    }

    #[test]
    fn unknown_selector() {
        assert_eq!(
            gallery_selector("nope", 2).unwrap_err(),
            Error::UnknownSelector("nope".into())
        );
    }

    #[test]
    fn local_probe_examples() {
        let last = gallery_selector("drop-last", 2).unwrap();
        let eps = epsilon_gap(&X).unwrap();
        assert!(
            local_constancy_probe(&last, &X, eps / 2.0, 1000, 1)
                .unwrap()
                .locally_constant
        );
        assert!(
            local_constancy_probe(&last, &X, eps / 2.0, 0, 1)
                .unwrap()
                .locally_constant
        );
        assert!(matches!(
            local_constancy_probe(&last, &X, 2.0 * eps, 10, 1),
            Err(Error::RadiusTooLarge { .. })
        ));
        let parity = gallery_selector("parity", 2).unwrap();
        let b = parity_boundary_point(2);
        let eps = epsilon_gap(&b).unwrap();
        let probe = local_constancy_probe(&parity, &b, eps / 2.0, 1000, 1).unwrap();
        assert!(!probe.locally_constant);
        let y = probe.disagreement.unwrap();
        assert_ne!(drop_index(&parity, &y).unwrap(), probe.drop_index);
    }

    #[test]
    fn fiber_sampler_examples() {
        let last = gallery_selector("drop-last", 2).unwrap();
        let pts = fiber_sampler(&last, &X, 1000).unwrap();
        assert_eq!(pts.len(), 1000);
        for w in pts.windows(2) {
            assert!(w[0][2] < w[1][2]);
        }
        for p in &pts {
            assert_eq!(&p[..2], &[0.1, 0.5]);
            assert_eq!(last.apply(p).unwrap(), vec![0.1, 0.5]);
        }
        let first = gallery_selector("drop-first", 2).unwrap();
        for p in fiber_sampler(&first, &X, 100).unwrap() {
            assert!(p[0] < 0.5);
            assert_eq!(first.apply(&p).unwrap(), vec![0.5, 0.9]);
        }
        let parity = gallery_selector("parity", 2).unwrap();
        assert!(matches!(
            fiber_sampler(&parity, &parity_boundary_point(2), 1000),
            Err(Error::ImageDrift { .. })
        ));
    }

    #[test]
    fn parity_drifts_at_boundary_for_several_m() {
        for m in 1..=6 {
            let parity = gallery_selector("parity", m).unwrap();
            let r = probe_point(&parity, &parity_boundary_point(m), &ProbeParams::default(), 5).unwrap();
            assert!(r.drift.is_some(), "m={m}");
            assert!(!r.passed());
        }
    }

    #[test]
    fn survey_is_seeded() {
        let sel = gallery_selector("drop-middle", 3).unwrap();
        let params = ProbeParams {
            trials: 50,
            witnesses: 20,
            ..ProbeParams::default()
        };
        let a = survey(&sel, 10, &params, 4).unwrap();
        assert_eq!(a, survey(&sel, 10, &params, 4).unwrap());
        assert!(a.iter().all(|r| r.passed() && r.witnesses_count == 20));
        assert_eq!(a[3].stream, 3);
        let json = serde_json::to_value(&a[0]).unwrap();
        for key in [
            "selector",
            "m",
            "x",
            "epsilon_gap",
            "drop_index",
            "locally_constant",
            "witnesses_count",
            "seed",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    proptest! {
        #[test]
        fn gap_scales_affinely(xs in prop::collection::vec(0.0f64..1.0, 2..6), a in 0.1f64..1.0, b in 0.0f64..0.5) {
            let mut x = xs;
            x.sort_by(f64::total_cmp);
            prop_assume!(x.windows(2).all(|w| w[1] - w[0] > 1e-6));
            let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let (ex, ey) = (epsilon_gap(&x).unwrap(), epsilon_gap(&y).unwrap());
            prop_assert!(ex > 0.0);
            prop_assert!((ey - a * ex).abs() < 1e-9);
        }

        #[test]
        fn sampled_fibers_share_the_image(seed in any::<u64>(), m in 1usize..5, which in 0usize..3) {
            let sel = gallery_selector(GALLERY[which], m).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_probe_point(&mut rng, m);
            let image = sel.apply(&x).unwrap();
            for y in fiber_sampler(&sel, &x, 50).unwrap() {
                prop_assert!(same_image(&sel.apply(&y).unwrap(), &image));
            }
        }
    }
}
