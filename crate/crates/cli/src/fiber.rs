use std::path::PathBuf;

use clap::{Args, Subcommand};
use emxcs_core::fiberprobe::{gallery_selector, parity_boundary_point, probe_point, survey, ProbeParams, GALLERY};
use serde::Serialize;
use serde_json::json;

use crate::output::{self, resolve_output, CliError, CliResult, Outcome};

#[derive(Debug, Subcommand)]
pub enum FiberCommand {
    /// Local-constancy probe and fiber sampling for a gallery selector
    Probe(ProbeArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeArgs {
    /// One of drop-last, drop-first, drop-middle, parity
    #[arg(long)]
    pub selector: String,
    /// Output arity; inputs have m+1 coordinates
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Samples per local-constancy probe
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random probe points
    #[arg(long, default_value_t = 1)]
    pub points: usize,
    /// Same-image points requested from the fiber sampler
    #[arg(long, default_value_t = 1000)]
    pub witnesses: usize,
    /// Ball radius as a fraction of the epsilon gap
    #[arg(long, default_value_t = 0.5)]
    pub radius_fraction: f64,
    /// Include the witness points in the report
    #[arg(long)]
    pub keep_witnesses: bool,
    /// Probe this point instead, e.g. 0.1,0.5,0.9
    #[arg(long, value_delimiter = ',')]
    pub at: Option<Vec<f64>>,
    /// Succeed only if drift is found; probes a parity boundary unless --at is given
    #[arg(long)]
    pub expect_drift: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ProbeArgs {
    pub fn resolved(mut self) -> CliResult<Self> {
        self.out = self.out.as_deref().map(resolve_output).transpose()?;
        Ok(self)
    }
}

pub fn probe(a: &ProbeArgs) -> CliResult<Outcome> {
    let sel = gallery_selector(&a.selector, a.m)?;
    if !(a.radius_fraction > 0.0 && a.radius_fraction <= 1.0) {
        return Err(CliError::usage("--radius-fraction must lie in (0, 1]"));
    }
    let params = ProbeParams {
        trials: a.trials,
        radius_fraction: a.radius_fraction,
        witnesses: a.witnesses,
        keep_witnesses: a.keep_witnesses,
    };
    let reports = match (&a.at, a.expect_drift) {
        (Some(x), _) => vec![probe_point(&sel, x, &params, a.seed)?],
        (None, true) => vec![probe_point(&sel, &parity_boundary_point(a.m), &params, a.seed)?],
        (None, false) => survey(&sel, a.points, &params, a.seed)?,
    };
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let drift = reports.iter().find_map(|r| r.drift.clone());
    let finding = if a.expect_drift {
        (failed == 0).then(|| CliError::finding("NoDrift", "expected drift but every probe passed"))
    } else if let Some(w) = &drift {
        Some(CliError::finding(
            "ImageDrift",
            format!("image at {:?} drifted from {:?} to {:?}", w.point, w.expected, w.got),
        ))
    } else {
        (failed > 0).then(|| CliError::finding("NotLocallyConstant", format!("{failed} probes disagreed")))
    };
    let result = json!({
        "selector": sel.name(),
        "claimed_continuous": sel.claimed_continuous(),
        "gallery": GALLERY,
        "points": reports.len(),
        "passed": reports.len() - failed,
        "failed": failed,
        "drift_found": failed > 0,
        "reports": output::to_value(&reports)?,
    });
    Ok(Outcome { result, finding })
}
