//! Command implementations behind the `mas-classify` binary.
//!
//! Every command returns the text it would print plus the files it read and
//! wrote, so the binary can attach a [`manifest::RunManifest`] and tests can
//! drive commands without spawning a process.

pub mod manifest;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mas_classify::dataset::{self, SchemaSelection, LABEL_COLUMN};
use mas_classify::org::{self, HeadPolicy, Outcome, PipelineConfig, PipelineError};
use mas_classify::pwla::{self, ReductionPolicy};
use mas_classify::runtime::trace_to_text;
use mas_classify::smffnn::{self, SmffnnError};
use mas_classify::zones;
use serde_json::{json, Value};

pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mas-classify", version, about = "Potential-weight classification and its agent pipeline")]
pub struct Cli {
    /// Write a JSON run manifest with input and output digests.
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize, weight and reduce the selected attributes.
    Weights(WeightsArgs),
    /// Train the one-epoch classifier and evaluate it.
    Train(TrainArgs),
    /// Assign classes to a data file with a saved model.
    Classify(ClassifyArgs),
    /// Run the acquisition, modeling and delivery agents on a scenario.
    Pipeline(PipelineArgs),
    /// Generate a synthetic zone scenario.
    Scenario(ScenarioArgs),
    /// Recompute the digests recorded in a manifest.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    /// Comma-separated attribute names; defaults to the columns the file's
    /// `# sources:` comment declares, or every column but id and label.
    #[arg(long, value_delimiter = ',')]
    pub select: Vec<String>,
    #[arg(long, default_value = "mean")]
    pub policy: ReductionPolicy,
    /// Snapshot path; defaults to the data path with a `.weights` extension.
    #[arg(long, value_name = "PATH")]
    pub snapshot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    #[arg(long, default_value = LABEL_COLUMN)]
    pub label: String,
    #[arg(long, value_delimiter = ',')]
    pub select: Vec<String>,
    #[arg(long, default_value = "mean")]
    pub policy: ReductionPolicy,
    /// Held-out share; 0 trains and evaluates on everything.
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_name = "MODEL")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long, value_name = "MODEL")]
    pub model: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, value_name = "PATH")]
    pub scenario: PathBuf,
    /// `approve`, `feedback:N` or `always-feedback`.
    #[arg(long, default_value = "approve")]
    pub head_policy: String,
    #[arg(long, value_name = "PATH")]
    pub trace: PathBuf,
    /// Report path; defaults to `report.txt` beside the trace.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Coverage plan over the approved classes.
    #[arg(long, value_name = "PATH")]
    pub coverage: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub select: Vec<String>,
    #[arg(long, default_value = "mean")]
    pub policy: ReductionPolicy,
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub max_cycles: usize,
    #[arg(long, default_value_t = 1_000)]
    pub max_steps: u64,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    #[arg(long = "main", default_value_t = 4)]
    pub k_main: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub manifest: PathBuf,
}

/// A failed command: exit code, error kind and message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    fn domain(kind: &str, message: impl fmt::Display) -> Self {
        CliError {
            code: EXIT_DOMAIN,
            kind: kind.to_string(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.message.starts_with(&self.kind) {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.kind, self.message)
        }
    }
}

macro_rules! domain_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::domain(e.kind(), &e)
            }
        }
    )*};
}
domain_from!(
    dataset::DatasetError,
    pwla::PwlaError,
    SmffnnError,
    zones::ZoneError,
    mas_classify::Error
);

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let code = match e {
            PipelineError::StepLimitExceeded { .. } => EXIT_LIMIT,
            _ => EXIT_DOMAIN,
        };
        CliError {
            code,
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::domain("Io", format!("{}: {e}", path.display()))
}

/// What a successful command printed and touched.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub command: &'static str,
    pub stdout: String,
    pub config: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Weights(a) => weights(a),
        Command::Train(a) => train(a),
        Command::Classify(a) => classify(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Scenario(a) => scenario(a),
        Command::Verify(a) => verify(a),
    }
}

/// Selected attributes, or the columns the file declares.
fn selection(data: &Path, select: &[String], label: Option<&str>) -> Result<SchemaSelection, CliError> {
    let names = if select.is_empty() {
        dataset::declared_attributes(data)?
            .into_iter()
            .filter(|c| Some(c.as_str()) != label)
            .collect()
    } else {
        select.to_vec()
    };
    let sel = SchemaSelection::new(names);
    Ok(match label {
        Some(l) => sel.with_label(l),
        None => sel,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn weights(a: &WeightsArgs) -> Result<Output, CliError> {
    let sel = selection(&a.data, &a.select, None)?;
    let ds = dataset::ingest_csv(&a.data, &sel)?;
    let pre = pwla::pretrain(&ds, a.policy)?;
    let (nm, pw) = (&pre.normalized, &pre.weights);

    let mut order: Vec<usize> = (0..pw.weights().len()).collect();
    order.sort_by(|&x, &y| {
        pw.weights()[y]
            .total_cmp(&pw.weights()[x])
            .then_with(|| pw.names()[x].cmp(&pw.names()[y]))
    });
    let mut out = format!("{:<28} {:>16}  {}\n", "attribute", "weight", "strong");
    for j in order {
        let flag = if pw.is_strong(j) { "yes" } else { "no" };
        out.push_str(&format!("{:<28} {:>16.6}  {}\n", pw.names()[j], pw.weights()[j], flag));
    }
    out.push_str(&format!(
        "policy {}; global mean {:.6}; {} of {} attributes strong\n",
        a.policy,
        nm.global_mean(),
        pw.strong().len(),
        pw.weights().len()
    ));

    let snapshot = a.snapshot.clone().unwrap_or_else(|| a.data.with_extension("weights"));
    write(&snapshot, &pwla::weight_snapshot(nm, pw))?;
    Ok(Output {
        command: "weights",
        stdout: out,
        config: json!({"select": sel.selected, "policy": a.policy.to_string()}),
        inputs: vec![a.data.clone()],
        outputs: vec![snapshot],
    })
}

pub fn train(a: &TrainArgs) -> Result<Output, CliError> {
    let sel = selection(&a.data, &a.select, Some(&a.label))?;
    let ds = dataset::ingest_csv(&a.data, &sel)?;
    let (train_ds, test_ds) = if a.test_fraction > 0.0 {
        dataset::split_train_test(&ds, a.test_fraction, a.seed)?
    } else {
        (ds.clone(), ds.clone())
    };
    let model = smffnn::fit(&train_ds, a.policy)?;
    let eval = smffnn::evaluate(&model, &test_ds)?;
    write(&a.out, &smffnn::model_snapshot(&model))?;

    let split = if a.test_fraction > 0.0 { "held-out" } else { "training" };
    let mut out = String::new();
    out.push_str(&format!("attributes      {}\n", model.attribute_names.join(",")));
    out.push_str(&format!("threshold       {}\n", model.threshold));
    out.push_str(&format!("orientation     {}\n", model.orientation));
    out.push_str(&format!("train accuracy  {:.3} ({} instances)\n", model.train_accuracy, train_ds.n_instances()));
    out.push_str(&format!("accuracy        {:.3} ({} {split} instances)\n", eval.accuracy, eval.n()));
    let c = eval.confusion;
    out.push_str(&format!("confusion       1->1 {}  1->2 {}  2->1 {}  2->2 {}\n", c[0][0], c[0][1], c[1][0], c[1][1]));
    Ok(Output {
        command: "train",
        stdout: out,
        config: json!({
            "select": sel.selected,
            "label": a.label,
            "policy": a.policy.to_string(),
            "test_fraction": a.test_fraction,
            "seed": a.seed,
        }),
        inputs: vec![a.data.clone()],
        outputs: vec![a.out.clone()],
    })
}

pub fn classify(a: &ClassifyArgs) -> Result<Output, CliError> {
    let text = fs::read_to_string(&a.model).map_err(|e| io_error(&a.model, e))?;
    let model = smffnn::parse_model_snapshot(&text)?;
    let header = dataset::read_header(&a.data)?;
    let present = model
        .attribute_names
        .iter()
        .filter(|n| header.contains(n))
        .count();
    if present != model.dimension() {
        return Err(SmffnnError::DimensionMismatch {
            expected: model.dimension(),
            got: present,
        }
        .into());
    }
    let ds = dataset::ingest_csv(&a.data, &SchemaSelection::new(model.attribute_names.clone()))?;
    let assigned = model.assign(&ds)?;
    let mut out = format!("{:<16} {:>16}  {}\n", "id", "score", "class");
    for (id, (score, class)) in ds.instance_ids().iter().zip(&assigned) {
        out.push_str(&format!("{id:<16} {score:>16.6}  {class}\n"));
    }
    Ok(Output {
        command: "classify",
        stdout: out,
        config: json!({"attributes": model.attribute_names}),
        inputs: vec![a.model.clone(), a.data.clone()],
        outputs: vec![],
    })
}

pub fn pipeline(a: &PipelineArgs) -> Result<Output, CliError> {
    let head: HeadPolicy = a.head_policy.parse()?;
    let report_path = a.report.clone().unwrap_or_else(|| {
        a.trace
            .parent()
            .unwrap_or_else(|| Path::new(""))
            .join("report.txt")
    });
    let mut cfg = PipelineConfig::new(&a.scenario, &report_path);
    if !a.select.is_empty() {
        cfg.selection = SchemaSelection::new(a.select.clone()).with_label(LABEL_COLUMN);
    }
    cfg.reduction = a.policy;
    cfg.test_fraction = a.test_fraction;
    cfg.seed = a.seed;
    cfg.head_policy = head;
    cfg.max_cycles = a.max_cycles;
    cfg.max_steps = a.max_steps;

    let run = org::execute_pipeline(&cfg)?;
    write(&a.trace, &trace_to_text(&run.trace))?;
    let reports = run.reports_delivered();
    let report = match (&run.outcome, run.report) {
        (Outcome::Approved, Some(r)) => r,
        (Outcome::Failed { kind, detail }, _) => return Err(CliError::domain(kind, detail)),
        (Outcome::Halted | Outcome::StepLimit, _) => {
            return Err(PipelineError::StepLimitExceeded {
                reports,
                trace: run.trace,
            }
            .into())
        }
        (Outcome::Approved, None) => unreachable!("approval implies a report"),
    };

    let mut outputs = vec![report_path.clone(), a.trace.clone()];
    let mut out = String::new();
    out.push_str(&format!("run        {}\n", report.run_id));
    out.push_str(&format!("outcome    {} after {} report(s), {} dispatches\n", run.outcome, reports, run.trace.len()));
    out.push_str(&format!("strong     {}\n", report.strong_attributes().join(",")));
    out.push_str(&format!(
        "model      theta {} {}; train {:.3}, test {:.3} ({} instances)\n",
        report.model.threshold,
        report.model.orientation,
        report.model.train_accuracy,
        report.model.test_accuracy,
        report.model.test_instances
    ));
    let mains: Vec<&str> = report
        .assignments
        .iter()
        .filter(|x| x.class == mas_classify::dataset::Class::One)
        .map(|x| x.id.as_str())
        .collect();
    out.push_str(&format!("main zones {}\n", mains.join(",")));
    if let Some(path) = &a.coverage {
        let positions = zones::read_positions(&a.scenario)?;
        let plan = org::coverage_for(&report, &positions)?;
        write(path, &zones::coverage_to_text(&plan))?;
        out.push_str(&format!("coverage   {} depended zones assigned\n", plan.assignments.len()));
        outputs.push(path.clone());
    }
    Ok(Output {
        command: "pipeline",
        stdout: out,
        config: json!({
            "head_policy": a.head_policy,
            "select": cfg.selection.selected,
            "policy": a.policy.to_string(),
            "test_fraction": a.test_fraction,
            "seed": a.seed,
            "max_cycles": a.max_cycles,
            "max_steps": a.max_steps,
        }),
        inputs: vec![a.scenario.clone()],
        outputs,
    })
}

pub fn scenario(a: &ScenarioArgs) -> Result<Output, CliError> {
    let s = zones::generate_zones(a.n, a.k_main, a.seed)?;
    zones::export_scenario(&s, &a.out)?;
    Ok(Output {
        command: "scenario",
        stdout: format!("{} zones, {} main, seed {} -> {}\n", a.n, a.k_main, a.seed, a.out.display()),
        config: json!({"n": a.n, "main": a.k_main, "seed": a.seed}),
        inputs: vec![],
        outputs: vec![a.out.clone()],
    })
}

pub fn verify(a: &VerifyArgs) -> Result<Output, CliError> {
    let m = manifest::RunManifest::read(&a.manifest).map_err(|e| io_error(&a.manifest, e))?;
    let bad = m.verify();
    if let Some(first) = bad.first() {
        return Err(CliError::domain(
            "DigestMismatch",
            format!("{} of {} files changed, first {}", bad.len(), m.inputs.len() + m.outputs.len(), first.path.display()),
        ));
    }
    Ok(Output {
        command: "verify",
        stdout: format!("{} digests match\n", m.inputs.len() + m.outputs.len()),
        config: json!({}),
        inputs: vec![a.manifest.clone()],
        outputs: vec![],
    })
}

/// Runs a parsed command line, printing output and writing the manifest.
/// Returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            if let Some(path) = &cli.manifest {
                let recorded = manifest::RunManifest::record(out.command, out.config, &out.inputs, &out.outputs)
                    .and_then(|m| m.write(path));
                if let Err(e) = recorded {
                    eprintln!("{}", io_error(path, e));
                    return EXIT_DOMAIN;
                }
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
