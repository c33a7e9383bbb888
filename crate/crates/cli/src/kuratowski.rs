use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use emxcs_core::kuratowski::{
    build_decomposition, check_decomposition, direction_fibers, scheme_from_decomposition, Decomposition, OrderPolicy,
};
use emxcs_core::schemes::{verify_scheme, SchemeTable};
use serde::Serialize;
use serde_json::json;

use crate::output::{self, resolve_input, resolve_output, write_csv, CliError, CliResult, Outcome};

#[derive(Debug, Subcommand)]
pub enum KuratowskiCommand {
    /// Build the level-k decomposition of n^(k+2)
    Build(BuildArgs),
    /// Check partition, direction fibers and truncation stability
    Check(CheckArgs),
    /// Turn a decomposition into a (k+2) -> (k+1) scheme and verify it
    ToScheme(ToSchemeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Identity,
    Seeded,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BuildArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = PolicyKind::Identity)]
    pub policy: PolicyKind,
    /// Seed for `--policy seeded`
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl BuildArgs {
    pub fn resolved(mut self) -> CliResult<Self> {
        self.out = self.out.as_deref().map(resolve_output).transpose()?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CheckArgs {
    /// Decomposition JSON
    pub file: PathBuf,
    /// Side of the rebuilt decomposition for the stability check (default 2n)
    #[arg(long)]
    pub larger_n: Option<usize>,
    /// Direction fibers as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CheckArgs {
    pub fn resolved(mut self) -> CliResult<Self> {
        self.file = resolve_input(&self.file)?;
        self.csv = self.csv.as_deref().map(resolve_output).transpose()?;
        self.out = self.out.as_deref().map(resolve_output).transpose()?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ToSchemeArgs {
    /// Decomposition JSON
    pub file: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ToSchemeArgs {
    pub fn resolved(mut self) -> CliResult<Self> {
        self.file = resolve_input(&self.file)?;
        self.out = self.out.as_deref().map(resolve_output).transpose()?;
        Ok(self)
    }
}

pub fn build(a: &BuildArgs) -> CliResult<Outcome> {
    let policy = match a.policy {
        PolicyKind::Identity => OrderPolicy::Identity,
        PolicyKind::Seeded => OrderPolicy::Seeded { seed: a.seed },
    };
    let d = build_decomposition(a.k, a.n, policy)?;
    Outcome::ok(&d)
}

pub fn check(a: &CheckArgs) -> CliResult<Outcome> {
    let d: Decomposition = output::read_payload(&a.file, None)?;
    let report = check_decomposition(&d, a.larger_n)?;
    if let Some(path) = &a.csv {
        write_csv(path, &direction_fibers(&d)?)?;
    }
    let finding = (report.truncation_stable == Some(false)).then(|| {
        CliError::finding(
            "TruncationUnstable",
            format!("fibers of the n={} build change at n={:?}", report.n, report.compared_n),
        )
    });
    Ok(Outcome::ok(&report)?.with_finding(finding))
}

pub fn to_scheme(a: &ToSchemeArgs) -> CliResult<Outcome> {
    let d: Decomposition = output::read_payload(&a.file, None)?;
    let scheme = scheme_from_decomposition(&d)?;
    let ground = d.ground();
    let report = verify_scheme(&scheme, &ground)?;
    let table = SchemeTable::from_scheme(&scheme, &ground)?;
    let finding = report.ensure_valid().err().map(CliError::from);
    let result = json!({
        "scheme": output::to_value(&table)?,
        "verification": output::to_value(&report)?,
    });
    Ok(Outcome { result, finding })
}
