use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use emxcs_core::schemes::{max_scheme, verify_with_fibers, CompressionScheme, SchemeTable};
use emxcs_core::OrderedGround;
use serde::Serialize;

use crate::output::{self, resolve_input, resolve_output, write_csv, CliError, CliResult, Outcome};

#[derive(Debug, Subcommand)]
pub enum SchemeCommand {
    /// Check monotonicity, cover and fiber bounds over [ground]^m
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedScheme {
    /// 2 -> 1, keep the maximum
    Max,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundKind {
    Naturals,
    Rationals,
}

impl GroundKind {
    pub fn ground(self, n: usize) -> OrderedGround {
        match self {
            GroundKind::Naturals => OrderedGround::naturals(n),
            GroundKind::Rationals => OrderedGround::rationals(n),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Built-in scheme
    #[arg(long, value_enum, conflicts_with = "table", required_unless_present = "table")]
    pub scheme: Option<NamedScheme>,
    /// Scheme table JSON (bare or as written by `kuratowski to-scheme`)
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Ground size; defaults to the table's
    #[arg(long)]
    pub ground_n: Option<usize>,
    #[arg(long, value_enum, default_value_t = GroundKind::Naturals)]
    pub ground: GroundKind,
    /// Fiber-size histogram as CSV (fiber_size,count)
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Per-image fiber sizes as CSV (image,fiber_size)
    #[arg(long)]
    pub fibers: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl VerifyArgs {
    pub fn resolved(mut self) -> CliResult<Self> {
        self.table = self.table.as_deref().map(resolve_input).transpose()?;
        self.csv = self.csv.as_deref().map(resolve_output).transpose()?;
        self.fibers = self.fibers.as_deref().map(resolve_output).transpose()?;
        self.out = self.out.as_deref().map(resolve_output).transpose()?;
        Ok(self)
    }
}

#[derive(Serialize)]
struct HistogramRow {
    fiber_size: usize,
    count: usize,
}

#[derive(Serialize)]
struct FiberSizeRow {
    image: String,
    fiber_size: usize,
}

pub fn verify(a: &VerifyArgs) -> CliResult<Outcome> {
    let (scheme, table_n): (CompressionScheme, Option<usize>) = match (&a.scheme, &a.table) {
        (Some(NamedScheme::Max), _) => (max_scheme(), None),
        (None, Some(path)) => {
            let table: SchemeTable = output::read_payload(path, Some("scheme"))?;
            let n = table.ground_n;
            (table.into_scheme()?, Some(n))
        }
        (None, None) => return Err(CliError::usage("give --scheme or --table")),
    };
    let n = a
        .ground_n
        .or(table_n)
        .ok_or_else(|| CliError::usage("--ground-n is required for built-in schemes"))?;
    let ground = a.ground.ground(n);
    let (report, fibers) = verify_with_fibers(&scheme, &ground)?;

    if let Some(path) = &a.csv {
        let rows: Vec<HistogramRow> = report
            .fiber_histogram
            .iter()
            .map(|(&fiber_size, &count)| HistogramRow { fiber_size, count })
            .collect();
        write_csv(path, &rows)?;
    }
    if let Some(path) = &a.fibers {
        let rows: Vec<FiberSizeRow> = fibers
            .iter()
            .map(|(y, &fiber_size)| FiberSizeRow {
                image: ground.display_set(y),
                fiber_size,
            })
            .collect();
        write_csv(path, &rows)?;
    }
    let finding = report.ensure_valid().err().map(CliError::from);
    Ok(Outcome::ok(&report)?.with_finding(finding))
}
