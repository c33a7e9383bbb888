use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use emxcs_core::emx::{
    compression_size, eval_exact, eval_mc, random_distributions, scheme_from_learner, EMXReport,
    FiniteSupportDistribution, Learner, SweepRow, DEFAULT_BUDGET,
};
use emxcs_core::rational::{parse_rational, Rational};
use emxcs_core::schemes::{verify_scheme, SchemeTable};
use emxcs_core::OrderedGround;
use serde::Serialize;
use serde_json::json;

use crate::output::{self, resolve_input, resolve_output, write_csv, CliError, CliResult, Outcome};

#[derive(Debug, Subcommand)]
pub enum EmxCommand {
    /// Failure probability of a learner on one distribution
    Eval(EvalArgs),
    /// Build the (m+1) -> m scheme of a learner and verify it
    DeriveScheme(DeriveArgs),
    /// Evaluate many distributions, one CSV row each
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerName {
    /// Initial segment up to the largest sampled rank
    Rank,
    /// Always the empty set
    Empty,
}

impl LearnerName {
    fn learner(self) -> Learner {
        match self {
            LearnerName::Rank => emxcs_core::emx::rank_learner(),
            LearnerName::Empty => emxcs_core::emx::empty_learner(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Mc,
}

/// Parameters shared by `eval` and `sweep`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalParams {
    #[arg(long, value_enum, default_value_t = LearnerName::Rank)]
    pub learner: LearnerName,
    /// Sample size
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// As "num/den"
    #[arg(long, default_value = "1/3")]
    pub epsilon: String,
    /// As "num/den"
    #[arg(long, default_value = "1/3")]
    pub delta: String,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// Monte Carlo trials
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Monte Carlo seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest number of tuples exact mode may enumerate
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
}

impl EvalParams {
    fn evaluate(&self, p: &FiniteSupportDistribution) -> CliResult<EMXReport> {
        let learner = self.learner.learner();
        let epsilon = rational_arg("--epsilon", &self.epsilon)?;
        let delta = rational_arg("--delta", &self.delta)?;
        let report = match self.mode {
            Mode::Exact => eval_exact(&learner, p, self.d, &epsilon, &delta, self.budget)?,
            Mode::Mc => eval_mc(&learner, p, self.d, &epsilon, &delta, self.trials, self.seed)?,
        };
        Ok(report)
    }
}

fn rational_arg(flag: &str, text: &str) -> CliResult<Rational> {
    parse_rational(text).map_err(|_| CliError::usage(format!("{flag} expects \"num/den\", got {text:?}")))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// Distribution JSON: {"atoms":[{"rank":r,"p":"num/den"},…]}
    #[arg(long)]
    pub dist: PathBuf,
    #[command(flatten)]
    pub params: EvalParams,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl EvalArgs {
    pub fn resolved(mut self) -> CliResult<Self> {
        self.dist = resolve_input(&self.dist)?;
        self.out = self.out.as_deref().map(resolve_output).transpose()?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DeriveArgs {
    #[arg(long, value_enum, default_value_t = LearnerName::Rank)]
    pub learner: LearnerName,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long)]
    pub ground_n: usize,
    /// Also write the scheme table
    #[arg(long)]
    pub table_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl DeriveArgs {
    pub fn resolved(mut self) -> CliResult<Self> {
        self.table_out = self.table_out.as_deref().map(resolve_output).transpose()?;
        self.out = self.out.as_deref().map(resolve_output).transpose()?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Distribution files; ids are the file stems
    #[arg(long = "dist", num_args = 1..)]
    pub dists: Vec<PathBuf>,
    /// Number of seeded random distributions to add
    #[arg(long, default_value_t = 0)]
    pub random_count: usize,
    #[arg(long, default_value_t = 8)]
    pub max_support: usize,
    /// Random atoms use ranks below this
    #[arg(long, default_value_t = 20)]
    pub rank_bound: usize,
    /// Seed for the random distributions
    #[arg(long, default_value_t = 0)]
    pub dist_seed: u64,
    #[command(flatten)]
    pub params: EvalParams,
    /// Rows as CSV (dist_id,d,epsilon,failure_prob,satisfied)
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SweepArgs {
    pub fn resolved(mut self) -> CliResult<Self> {
        self.dists = self.dists.iter().map(|p| resolve_input(p)).collect::<CliResult<_>>()?;
        self.csv = self.csv.as_deref().map(resolve_output).transpose()?;
        self.out = self.out.as_deref().map(resolve_output).transpose()?;
        Ok(self)
    }
}

fn unsatisfied(report: &EMXReport) -> Option<CliError> {
    (!report.satisfied).then(|| {
        CliError::finding(
            "NotSatisfied",
            format!(
                "failure probability {} exceeds delta {}",
                report.failure_text(),
                emxcs_core::rational::format_rational(&report.delta)
            ),
        )
    })
}

pub fn eval(a: &EvalArgs) -> CliResult<Outcome> {
    let p: FiniteSupportDistribution = output::read_payload(&a.dist, None)?;
    let report = a.params.evaluate(&p)?;
    let finding = unsatisfied(&report);
    Ok(Outcome::ok(&report)?.with_finding(finding))
}

pub fn derive_scheme(a: &DeriveArgs) -> CliResult<Outcome> {
    let learner = a.learner.learner();
    let scheme = scheme_from_learner(&learner, a.d)?;
    let ground = OrderedGround::naturals(a.ground_n);
    let report = verify_scheme(&scheme, &ground)?;
    if let Some(path) = &a.table_out {
        let table = SchemeTable::from_scheme(&scheme, &ground)?;
        output::write_file(
            path,
            &format!("{}\n", serde_json::to_string(&table).expect("table serializes")),
        )?;
    }
    let finding = report.ensure_valid().err().map(CliError::from);
    let result = json!({
        "learner": learner.descriptor(),
        "d": a.d,
        "m": compression_size(a.d),
        "scheme": scheme.describe(),
        "verification": output::to_value(&report)?,
    });
    Ok(Outcome { result, finding })
}

pub fn sweep(a: &SweepArgs) -> CliResult<Outcome> {
    let mut named: Vec<(String, FiniteSupportDistribution)> = Vec::new();
    for path in &a.dists {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        named.push((id, output::read_payload(path, None)?));
    }
    if a.random_count > 0 {
        if a.max_support == 0 || a.max_support > a.rank_bound {
            return Err(CliError::usage("need 1 <= --max-support <= --rank-bound"));
        }
        let random = random_distributions(a.random_count, a.max_support, a.rank_bound, a.dist_seed);
        named.extend(random.into_iter().enumerate().map(|(i, p)| (format!("random-{i}"), p)));
    }
    if named.is_empty() {
        return Err(CliError::usage("give --dist files or --random-count"));
    }
    let mut rows = Vec::with_capacity(named.len());
    for (id, p) in &named {
        rows.push(SweepRow::new(id.clone(), &a.params.evaluate(p)?));
    }
    if let Some(path) = &a.csv {
        write_csv(path, &rows)?;
    }
    let failed = rows.iter().filter(|r| !r.satisfied).count();
    let finding = (failed > 0).then(|| {
        CliError::finding(
            "NotSatisfied",
            format!("{failed} of {} distributions not satisfied", rows.len()),
        )
    });
    let result = json!({
        "count": rows.len(),
        "all_satisfied": failed == 0,
        "rows": output::to_value(&rows)?,
    });
    Ok(Outcome { result, finding })
}
