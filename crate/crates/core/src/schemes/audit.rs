use std::collections::BTreeMap;

use serde::Serialize;

use super::{verify_with_fibers, CompressionScheme};
use crate::error::{Error, Result};
use crate::ground::{FinSet, OrderedGround};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub n: usize,
    pub max_fiber: usize,
    pub monotone_ok: bool,
    pub cover_ok: bool,
    /// Every fiber seen at the previous size kept its size here. `None` on
    /// the first row.
    pub stable_from_previous: Option<bool>,
}

/// Max-fiber growth of a family of schemes over increasing truncations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberAudit {
    pub rows: Vec<AuditRow>,
    /// All consecutive rows were fiber-stable.
    pub finite_to_one: bool,
}

impl FiberAudit {
    pub fn max_fibers(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.max_fiber).collect()
    }
}

/// Verifies the scheme the family produces for each size and tabulates its
/// largest fiber.
///
/// On a finite ground every fiber is finite, so finiteness is judged by
/// stability: a fiber whose size changes when the ground grows is one that
/// keeps absorbing new points. A family like the one-dimension reduction of
/// the max scheme (every singleton maps to the empty set) shows up as a
/// max fiber growing with `n` and `finite_to_one = false`.
pub fn fiber_growth_audit<F>(family: F, sizes: &[usize]) -> Result<FiberAudit>
where
    F: Fn(usize) -> Result<(CompressionScheme, OrderedGround)>,
{
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "audit sizes must be increasing: {sizes:?}"
        )));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    let mut previous: Option<BTreeMap<FinSet, usize>> = None;
    for &n in sizes {
        let (scheme, ground) = family(n)?;
        let (report, fibers) = verify_with_fibers(&scheme, &ground)?;
        let stable = previous
            .as_ref()
            .map(|prev| prev.iter().all(|(y, c)| fibers.get(y) == Some(c)));
        rows.push(AuditRow {
            n,
            max_fiber: report.max_fiber,
            monotone_ok: report.monotone_ok,
            cover_ok: report.cover_ok,
            stable_from_previous: stable,
        });
        previous = Some(fibers);
    }
    let finite_to_one = rows.iter().all(|r| r.stable_from_previous != Some(false));
    Ok(FiberAudit { rows, finite_to_one })
}
