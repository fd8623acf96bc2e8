//! The acquisition, modeling and delivery agents, wired over the runtime.
//!
//! One cycle runs like this:
//!
//! 1. `acquisition` receives a percept (or feedback), ingests the sources,
//!    runs the potential-weight phases and informs `modeling`.
//! 2. `modeling` splits the data, trains the one-epoch classifier with the
//!    published weights, evaluates it and reports to `delivery`.
//! 3. `delivery` writes the report file and asks `head` for approval.
//! 4. `head` approves (the plan becomes the active rule set) or sends
//!    feedback, which `delivery` forwards to `acquisition` for another cycle.
//!
//! Two inert roles, `staff-management` and `facilities-management`, subscribe
//! to the `rules/` beliefs and only consume the resulting events.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::dataset::{self, Class, Dataset, SchemaSelection};
use crate::pwla::{self, PotentialWeights, ReductionPolicy};
use crate::runtime::{
    AgentContext, AgentMessage, BeliefWrite, Event, EventKind, Outgoing, Performative, Plan, Protocol, Runtime,
    RuntimeError, TraceRecord, Violation,
};
use crate::smffnn::{self, Orientation, SmffnnModel};
use crate::zones::{self, ChartType, CoveragePlan, Site, ZoneError};
use crate::Error as LibError;

pub const HEAD: &str = "head";
pub const ACQUISITION: &str = "acquisition";
pub const MODELING: &str = "modeling";
pub const DELIVERY: &str = "delivery";
pub const STAFF: &str = "staff-management";
pub const FACILITIES: &str = "facilities-management";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{kind}: {detail}")]
    Failed {
        kind: String,
        detail: String,
        trace: Vec<TraceRecord>,
    },
    #[error("StepLimitExceeded: {reports} reports delivered without approval")]
    StepLimitExceeded {
        reports: usize,
        trace: Vec<TraceRecord>,
    },
    #[error("InvalidHeadPolicy: {0}")]
    InvalidHeadPolicy(String),
    #[error("MalformedReport: {0}")]
    MalformedReport(String),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

impl PipelineError {
    pub fn kind(&self) -> &str {
        match self {
            PipelineError::Failed { kind, .. } => kind,
            PipelineError::StepLimitExceeded { .. } => "StepLimitExceeded",
            PipelineError::InvalidHeadPolicy(_) => "InvalidHeadPolicy",
            PipelineError::MalformedReport(_) => "MalformedReport",
            PipelineError::Runtime(e) => e.kind(),
        }
    }

    pub fn trace(&self) -> Option<&[TraceRecord]> {
        match self {
            PipelineError::Failed { trace, .. } | PipelineError::StepLimitExceeded { trace, .. } => {
                Some(trace)
            }
            _ => None,
        }
    }
}

/// The head's answer to an approval request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HeadDecision {
    Approve,
    /// Ask for another cycle, optionally over a revised attribute selection.
    Feedback { selection: Option<Vec<String>> },
}

/// How the head answers successive approval requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HeadPolicy {
    Approve,
    /// Send feedback `n` times, narrowing the selection to the strong
    /// attributes of the report under review, then approve.
    FeedbackThenApprove(usize),
    AlwaysFeedback,
    /// Decisions in request order; approve once the script runs out.
    Scripted(Vec<HeadDecision>),
}

impl HeadPolicy {
    /// Decision for the `cycle`-th request (1-based).
    pub fn decide(&self, cycle: usize, report: &Report) -> HeadDecision {
        match self {
            HeadPolicy::Approve => HeadDecision::Approve,
            HeadPolicy::FeedbackThenApprove(n) if cycle <= *n => HeadDecision::Feedback {
                selection: Some(report.strong_attributes()),
            },
            HeadPolicy::FeedbackThenApprove(_) => HeadDecision::Approve,
            HeadPolicy::AlwaysFeedback => HeadDecision::Feedback { selection: None },
            HeadPolicy::Scripted(script) => script
                .get(cycle.saturating_sub(1))
                .cloned()
                .unwrap_or(HeadDecision::Approve),
        }
    }
}

impl FromStr for HeadPolicy {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "approve" => Ok(HeadPolicy::Approve),
            None if s == "always-feedback" => Ok(HeadPolicy::AlwaysFeedback),
            Some(("feedback", n)) => n
                .parse()
                .map(HeadPolicy::FeedbackThenApprove)
                .map_err(|_| PipelineError::InvalidHeadPolicy(s.to_string())),
            _ => Err(PipelineError::InvalidHeadPolicy(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// `(tag, path)` pairs. A single source is read directly; several are
    /// inner-joined on instance id.
    pub sources: Vec<(String, PathBuf)>,
    pub selection: SchemaSelection,
    pub reduction: ReductionPolicy,
    /// Held-out share for evaluation; 0 evaluates on the training data.
    pub test_fraction: f64,
    pub seed: u64,
    pub report_path: PathBuf,
    pub head_policy: HeadPolicy,
    /// Acquisition refuses to start a cycle beyond this count.
    pub max_cycles: usize,
    pub max_steps: u64,
}

impl PipelineConfig {
    /// Case-study defaults over one scenario file.
    pub fn new(scenario: impl Into<PathBuf>, report_path: impl Into<PathBuf>) -> Self {
        let scenario = scenario.into();
        let tag = scenario
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        PipelineConfig {
            sources: vec![(tag, scenario)],
            selection: zones::default_selection(),
            reduction: ReductionPolicy::MeanThreshold,
            test_fraction: 0.3,
            seed: 1,
            report_path: report_path.into(),
            head_policy: HeadPolicy::Approve,
            max_cycles: 3,
            max_steps: 1_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub name: String,
    pub weight: f64,
    pub strong: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub attributes: Vec<String>,
    pub threshold: f64,
    pub orientation: Orientation,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub test_instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub id: String,
    pub score: f64,
    pub class: Class,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Approval {
    Pending,
    Approved,
    FeedbackRequested,
}

impl Approval {
    fn as_str(self) -> &'static str {
        match self {
            Approval::Pending => "pending",
            Approval::Approved => "approved",
            Approval::FeedbackRequested => "feedback",
        }
    }

    fn parse(s: &str) -> Option<Approval> {
        match s {
            "pending" => Some(Approval::Pending),
            "approved" => Some(Approval::Approved),
            "feedback" => Some(Approval::FeedbackRequested),
            _ => None,
        }
    }
}

/// The delivery artifact for one cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub run_id: String,
    pub cycle: usize,
    pub weights: Vec<WeightEntry>,
    pub model: ModelSummary,
    pub assignments: Vec<Assignment>,
    pub recommendations: Vec<(Class, ChartType)>,
    pub approval: Approval,
}

const REPORT_MAGIC: &str = "PIPELINE-REPORT v1";

impl Report {
    pub fn strong_attributes(&self) -> Vec<String> {
        self.weights
            .iter()
            .filter(|w| w.strong)
            .map(|w| w.name.clone())
            .collect()
    }

    pub fn class_of(&self, id: &str) -> Option<Class> {
        self.assignments.iter().find(|a| a.id == id).map(|a| a.class)
    }

    /// Fixed section order: header, weights, model, assignments,
    /// recommendations, approval. Tab-separated rows.
    pub fn to_text(&self) -> String {
        let mut out = format!("{REPORT_MAGIC}\nrun_id\t{}\ncycle\t{}\ninstances\t{}\n", self.run_id, self.cycle, self.assignments.len());
        out.push_str("[weights]\n");
        for w in &self.weights {
            let flag = if w.strong { "strong" } else { "weak" };
            out.push_str(&format!("{}\t{}\t{flag}\n", w.name, w.weight));
        }
        let m = &self.model;
        out.push_str("[model]\n");
        out.push_str(&format!("attributes\t{}\n", m.attributes.join(",")));
        out.push_str(&format!("threshold\t{}\n", m.threshold));
        out.push_str(&format!("orientation\t{}\n", m.orientation));
        out.push_str(&format!("train_accuracy\t{}\n", m.train_accuracy));
        out.push_str(&format!("test_accuracy\t{}\n", m.test_accuracy));
        out.push_str(&format!("test_instances\t{}\n", m.test_instances));
        out.push_str("[assignments]\n");
        for a in &self.assignments {
            out.push_str(&format!("{}\t{}\t{}\n", a.id, a.score, a.class));
        }
        out.push_str("[recommendations]\n");
        for (class, chart) in &self.recommendations {
            out.push_str(&format!("{class}\t{chart}\t{}\n", chart.description()));
        }
        out.push_str("[approval]\n");
        out.push_str(&format!("status\t{}\n", self.approval.as_str()));
        out
    }

    pub fn parse(text: &str) -> Result<Report, PipelineError> {
        let bad = |m: &str| PipelineError::MalformedReport(m.to_string());
        let mut lines = text.lines().peekable();
        if lines.next() != Some(REPORT_MAGIC) {
            return Err(bad("missing magic line"));
        }
        let mut kv = |key: &str| -> Result<String, PipelineError> {
            let line = lines.next().ok_or_else(|| bad(key))?;
            match line.split_once('\t') {
                Some((k, v)) if k == key => Ok(v.to_string()),
                _ => Err(bad(line)),
            }
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(s));
        let run_id = kv("run_id")?;
        let cycle = kv("cycle")?.parse().map_err(|_| bad("cycle"))?;
        let instances: usize = kv("instances")?.parse().map_err(|_| bad("instances"))?;

        let mut sections: Vec<(String, Vec<Vec<String>>)> = Vec::new();
        for line in lines {
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                sections.push((name.to_string(), Vec::new()));
            } else if let Some((_, rows)) = sections.last_mut() {
                rows.push(line.split('\t').map(str::to_string).collect());
            } else {
                return Err(bad(line));
            }
        }
        let names: Vec<&str> = sections.iter().map(|(n, _)| n.as_str()).collect();
        if names != ["weights", "model", "assignments", "recommendations", "approval"] {
            return Err(bad("section order"));
        }
        let rows = |i: usize, width: usize| -> Result<&Vec<Vec<String>>, PipelineError> {
            let r = &sections[i].1;
            if r.iter().any(|c| c.len() != width) {
                return Err(bad(&sections[i].0));
            }
            Ok(r)
        };

        let weights = rows(0, 3)?
            .iter()
            .map(|c| {
                Ok(WeightEntry {
                    name: c[0].clone(),
                    weight: num(&c[1])?,
                    strong: match c[2].as_str() {
                        "strong" => true,
                        "weak" => false,
                        other => return Err(bad(other)),
                    },
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        let model_rows = rows(1, 2)?;
        let field = |key: &str| -> Result<&str, PipelineError> {
            model_rows
                .iter()
                .find(|c| c[0] == key)
                .map(|c| c[1].as_str())
                .ok_or_else(|| bad(key))
        };
        let model = ModelSummary {
            attributes: field("attributes")?.split(',').map(str::to_string).collect(),
            threshold: num(field("threshold")?)?,
            orientation: Orientation::parse(field("orientation")?).ok_or_else(|| bad("orientation"))?,
            train_accuracy: num(field("train_accuracy")?)?,
            test_accuracy: num(field("test_accuracy")?)?,
            test_instances: field("test_instances")?.parse().map_err(|_| bad("test_instances"))?,
        };

        let class = |s: &str| {
            s.parse::<u8>()
                .ok()
                .and_then(Class::from_u8)
                .ok_or_else(|| bad(s))
        };
        let assignments = rows(2, 3)?
            .iter()
            .map(|c| {
                Ok::<_, PipelineError>(Assignment {
                    id: c[0].clone(),
                    score: num(&c[1])?,
                    class: class(&c[2])?,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if assignments.len() != instances {
            return Err(bad("instance count"));
        }
        let recommendations = rows(3, 3)?
            .iter()
            .map(|c| Ok::<_, PipelineError>((class(&c[0])?, ChartType::parse(&c[1]).ok_or_else(|| bad(&c[1]))?)))
            .collect::<Result<Vec<_>, _>>()?;
        let approval_rows = rows(4, 2)?;
        let approval = approval_rows
            .first()
            .filter(|c| c[0] == "status")
            .and_then(|c| Approval::parse(&c[1]))
            .ok_or_else(|| bad("approval"))?;

        Ok(Report {
            run_id,
            cycle,
            weights,
            model,
            assignments,
            recommendations,
            approval,
        })
    }
}

/// Recommendations for both classes.
pub fn recommendations() -> Vec<(Class, ChartType)> {
    [Class::One, Class::Two]
        .into_iter()
        .map(|c| (c, ChartType::for_class(c)))
        .collect()
}

/// Allowed traffic between the pipeline roles.
pub fn pipeline_protocol() -> Protocol {
    Protocol::new("clinical-pipeline")
        .allow(Performative::Inform, ACQUISITION, MODELING)
        .allow(Performative::Report, ACQUISITION, DELIVERY)
        .allow(Performative::Report, MODELING, DELIVERY)
        .allow(Performative::Request, DELIVERY, HEAD)
        .allow(Performative::Approve, HEAD, DELIVERY)
        .allow(Performative::Feedback, HEAD, DELIVERY)
        .allow(Performative::Feedback, DELIVERY, ACQUISITION)
        .require_reply(Performative::Request)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("pipeline types serialize")
}

fn belief_as<T: for<'de> Deserialize<'de>>(ctx: &AgentContext<'_>, key: &str) -> Result<T, LibError> {
    let belief = ctx
        .belief(key)
        .ok_or_else(|| LibError::Pipeline(format!("missing belief {key}")))?;
    serde_json::from_value(belief.value.clone())
        .map_err(|e| LibError::Pipeline(format!("belief {key}: {e}")))
}

fn failure(stage: &str, cycle: usize, e: &LibError) -> Value {
    json!({
        "status": "failed",
        "stage": stage,
        "cycle": cycle,
        "error": e.kind(),
        "detail": e.to_string(),
    })
}

fn acquisition_plan(cfg: Arc<PipelineConfig>) -> Plan {
    let trigger = |e: &Event| {
        e.kind() == EventKind::PerceptArrived || e.message_with(Performative::Feedback).is_some()
    };
    Plan::new("acquire", "publish normalized values and potential weights", trigger).step(
        move |ctx, event| {
            let cycle = ctx
                .belief("pipeline/cycle")
                .and_then(|b| b.value.as_u64())
                .unwrap_or(0) as usize
                + 1;
            if cycle > cfg.max_cycles {
                ctx.update_belief(
                    "pipeline/halt",
                    json!({"reason": "cycle cap", "max_cycles": cfg.max_cycles}),
                );
                return Ok(format!("cycle cap {} reached", cfg.max_cycles));
            }
            ctx.update_belief("pipeline/cycle", json!(cycle));

            let revised: Option<Vec<String>> = event
                .payload()
                .and_then(|p| p.get("selection"))
                .and_then(|s| serde_json::from_value(s.clone()).ok());
            let selection = match revised {
                Some(selected) => SchemaSelection {
                    selected,
                    ..cfg.selection.clone()
                },
                None => ctx
                    .belief("config/selection")
                    .and_then(|b| serde_json::from_value(b.value.clone()).ok())
                    .unwrap_or_else(|| cfg.selection.clone()),
            };
            ctx.update_belief("config/selection", to_value(&selection));

            let acquired = dataset::ingest_sources(&cfg.sources, &selection)
                .map_err(LibError::from)
                .and_then(|ds| Ok((pwla::pretrain(&ds, cfg.reduction)?, ds)));
            match acquired {
                Ok((pre, ds)) => {
                    ctx.update_belief("data/dataset", to_value(&ds));
                    ctx.update_belief("data/normalized", to_value(&pre.normalized));
                    ctx.update_belief("data/weights", to_value(&pre.weights));
                    let strong = pre.weights.strong_names();
                    let payload = json!({
                        "cycle": cycle,
                        "instances": ds.n_instances(),
                        "attributes": ds.n_attributes(),
                        "strong": strong,
                    });
                    ctx.send(Outgoing::new(MODELING, Performative::Inform, payload))?;
                    Ok(format!(
                        "cycle {cycle}: {}x{} ingested, {} strong; inform {MODELING}",
                        ds.n_instances(),
                        ds.n_attributes(),
                        strong.len()
                    ))
                }
                Err(e) => {
                    ctx.send(Outgoing::new(DELIVERY, Performative::Report, failure(ACQUISITION, cycle, &e)))?;
                    Ok(format!("cycle {cycle}: {}; failure report to {DELIVERY}", e.kind()))
                }
            }
        },
    )
}

struct Trained {
    model: SmffnnModel,
    test_accuracy: f64,
    test_instances: usize,
    assignments: Vec<Assignment>,
}

fn train_cycle(ctx: &AgentContext<'_>, cfg: &PipelineConfig) -> Result<Trained, LibError> {
    let ds: Dataset = belief_as(ctx, "data/dataset")?;
    let pw: PotentialWeights = belief_as(ctx, "data/weights")?;
    if ds.labels().is_none() {
        return Err(dataset::DatasetError::Unlabeled.into());
    }
    let (train, test) = if cfg.test_fraction > 0.0 {
        dataset::split_train_test(&ds, cfg.test_fraction, cfg.seed)?
    } else {
        (ds.clone(), ds.clone())
    };
    let strong = pw.strong_names();
    let nm = pwla::normalize(&train.select(&strong)?);
    let labels = train.labels().unwrap_or_default();
    let model = smffnn::train(&nm, &pw, labels)?;
    let eval = smffnn::evaluate(&model, &test)?;
    let assignments = model
        .assign(&ds)?
        .into_iter()
        .zip(ds.instance_ids())
        .map(|((score, class), id)| Assignment {
            id: id.clone(),
            score,
            class,
        })
        .collect();
    Ok(Trained {
        model,
        test_accuracy: eval.accuracy,
        test_instances: test.n_instances(),
        assignments,
    })
}

fn modeling_plan(cfg: Arc<PipelineConfig>) -> Plan {
    let trigger = |e: &Event| e.message_with(Performative::Inform).is_some();
    Plan::new("model", "classify and predict the desired output", trigger).step(move |ctx, event| {
        let cycle = event
            .payload()
            .and_then(|p| p.get("cycle"))
            .and_then(Value::as_u64)
            .unwrap_or(0) as usize;
        match train_cycle(ctx, &cfg) {
            Ok(t) => {
                let version = ctx.update_belief("model/current", to_value(&t.model));
                let summary = format!(
                    "model v{version}: theta {} {}, train {} test {}; report to {DELIVERY}",
                    t.model.threshold, t.model.orientation, t.model.train_accuracy, t.test_accuracy
                );
                let payload = json!({
                    "status": "ok",
                    "cycle": cycle,
                    "model": t.model,
                    "test_accuracy": t.test_accuracy,
                    "test_instances": t.test_instances,
                    "assignments": t.assignments,
                });
                ctx.send(Outgoing::new(DELIVERY, Performative::Report, payload))?;
                Ok(summary)
            }
            Err(e) => {
                ctx.send(Outgoing::new(DELIVERY, Performative::Report, failure(MODELING, cycle, &e)))?;
                Ok(format!("{}; failure report to {DELIVERY}", e.kind()))
            }
        }
    })
}

fn write_report(path: &Path, report: &Report) -> String {
    match fs::write(path, report.to_text()) {
        Ok(()) => format!("wrote report ({})", report.approval.as_str()),
        Err(e) => format!("report write failed: {}", e.kind()),
    }
}

fn decode_as<T: for<'de> Deserialize<'de>>(v: Value) -> Result<T, LibError> {
    serde_json::from_value(v).map_err(|e| LibError::Pipeline(e.to_string()))
}

fn build_report(ctx: &AgentContext<'_>, cfg: &PipelineConfig, payload: &Value) -> Result<Report, LibError> {
    let pw: PotentialWeights = belief_as(ctx, "data/weights")?;
    let decode = |key: &str| -> Result<Value, LibError> {
        payload
            .get(key)
            .cloned()
            .ok_or_else(|| LibError::Pipeline(format!("report payload lacks {key}")))
    };
    let model: SmffnnModel = decode_as(decode("model")?)?;
    let cycle: usize = decode_as(decode("cycle")?)?;
    Ok(Report {
        run_id: format!("seed-{}/cycle-{cycle}", cfg.seed),
        cycle,
        weights: pw
            .names()
            .iter()
            .enumerate()
            .map(|(j, name)| WeightEntry {
                name: name.clone(),
                weight: pw.weights()[j],
                strong: pw.is_strong(j),
            })
            .collect(),
        model: ModelSummary {
            attributes: model.attribute_names.clone(),
            threshold: model.threshold,
            orientation: model.orientation,
            train_accuracy: model.train_accuracy,
            test_accuracy: decode_as(decode("test_accuracy")?)?,
            test_instances: decode_as(decode("test_instances")?)?,
        },
        assignments: decode_as(decode("assignments")?)?,
        recommendations: recommendations(),
        approval: Approval::Pending,
    })
}

fn delivery_plans(cfg: Arc<PipelineConfig>) -> Vec<Plan> {
    let deliver_cfg = cfg.clone();
    let deliver = Plan::new(
        "deliver",
        "advanced report to the head",
        |e| e.message_with(Performative::Report).is_some(),
    )
    .step(move |ctx, event| {
        let payload = event.payload().cloned().unwrap_or_default();
        if payload.get("status").and_then(Value::as_str) == Some("failed") {
            ctx.update_belief("pipeline/failure", payload.clone());
            return Ok(format!(
                "recorded failure {}",
                payload.get("error").and_then(Value::as_str).unwrap_or("?")
            ));
        }
        let report = build_report(ctx, &deliver_cfg, &payload)
            .map_err(|e| RuntimeError::ActionFailed(e.to_string()))?;
        let written = write_report(&deliver_cfg.report_path, &report);
        ctx.update_belief("report/latest", to_value(&report));
        let request = json!({"cycle": report.cycle, "run_id": report.run_id, "report": report});
        let id = ctx.send(Outgoing::new(HEAD, Performative::Request, request))?;
        Ok(format!("{written}; approval request #{id}"))
    });

    let approve_cfg = cfg.clone();
    let approved = Plan::new(
        "activate",
        "apply approved rules",
        |e| e.message_with(Performative::Approve).is_some(),
    )
    .step(move |ctx, _| {
        let mut report: Report = belief_as(ctx, "report/latest")
            .map_err(|e| RuntimeError::ActionFailed(e.to_string()))?;
        report.approval = Approval::Approved;
        let written = write_report(&approve_cfg.report_path, &report);
        ctx.update_belief("report/latest", to_value(&report));
        let main_zones: Vec<&str> = report
            .assignments
            .iter()
            .filter(|a| a.class == Class::One)
            .map(|a| a.id.as_str())
            .collect();
        let version = ctx.update_belief(
            "rules/active-plan",
            json!({"run_id": report.run_id, "main": main_zones, "recommendations": report.recommendations}),
        );
        Ok(format!("{written}; rules/active-plan v{version}"))
    });

    let revise_cfg = cfg;
    let revise = Plan::new(
        "revise",
        "route feedback to acquisition",
        |e| e.message_with(Performative::Feedback).is_some(),
    )
    .step(move |ctx, event| {
        let mut report: Report = belief_as(ctx, "report/latest")
            .map_err(|e| RuntimeError::ActionFailed(e.to_string()))?;
        report.approval = Approval::FeedbackRequested;
        let written = write_report(&revise_cfg.report_path, &report);
        ctx.update_belief("report/latest", to_value(&report));
        let payload = event.payload().cloned().unwrap_or_default();
        let id = ctx.send(Outgoing::new(ACQUISITION, Performative::Feedback, payload))?;
        Ok(format!("{written}; feedback #{id} to {ACQUISITION}"))
    });
    vec![deliver, approved, revise]
}

fn head_plan(policy: HeadPolicy) -> Plan {
    Plan::new(
        "review",
        "confirm or send back",
        |e| e.message_with(Performative::Request).is_some(),
    )
    .step(move |ctx, event| {
        let request = event.message().cloned().expect("trigger matched a request");
        let report: Report = serde_json::from_value(request.payload["report"].clone())
            .map_err(|e| RuntimeError::ActionFailed(e.to_string()))?;
        match policy.decide(report.cycle, &report) {
            HeadDecision::Approve => {
                ctx.send(Outgoing::reply(&request, Performative::Approve, json!({"run_id": report.run_id})))?;
                Ok(format!("approve {}", report.run_id))
            }
            HeadDecision::Feedback { selection } => {
                let detail = selection
                    .as_ref()
                    .map_or_else(|| "same selection".to_string(), |s| s.join(","));
                let payload = match selection {
                    Some(s) => json!({"selection": s}),
                    None => json!({}),
                };
                ctx.send(Outgoing::reply(&request, Performative::Feedback, payload))?;
                Ok(format!("feedback on {}: {detail}", report.run_id))
            }
        }
    })
}

/// Builds the runtime with every role registered and the initial percept queued.
pub fn build_runtime(cfg: &PipelineConfig) -> Result<Runtime, RuntimeError> {
    let cfg = Arc::new(cfg.clone());
    let mut rt = Runtime::new(pipeline_protocol());
    rt.register_agent(HEAD, HEAD, vec![head_plan(cfg.head_policy.clone())])?;
    rt.register_agent(ACQUISITION, ACQUISITION, vec![acquisition_plan(cfg.clone())])?;
    rt.register_agent(MODELING, MODELING, vec![modeling_plan(cfg.clone())])?;
    rt.register_agent(DELIVERY, DELIVERY, delivery_plans(cfg.clone()))?;
    rt.register_agent(STAFF, STAFF, vec![])?;
    rt.register_agent(FACILITIES, FACILITIES, vec![])?;
    rt.subscribe(STAFF, "rules/")?;
    rt.subscribe(FACILITIES, "rules/")?;
    let sources: Vec<String> = cfg.sources.iter().map(|(t, _)| t.clone()).collect();
    rt.inject_percept(ACQUISITION, json!({"sources": sources}))?;
    Ok(rt)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Approved,
    /// The cycle cap stopped another round of feedback.
    Halted,
    Failed { kind: String, detail: String },
    /// The runtime itself ran out of steps.
    StepLimit,
}

/// Everything observable about a finished pipeline run.
#[derive(Debug)]
pub struct PipelineRun {
    pub outcome: Outcome,
    pub report: Option<Report>,
    pub trace: Vec<TraceRecord>,
    pub audit: Vec<Violation>,
    pub messages: Vec<AgentMessage>,
    pub belief_log: Vec<BeliefWrite>,
}

impl PipelineRun {
    /// Report messages that reached delivery.
    pub fn reports_delivered(&self) -> usize {
        count_reports(&self.trace)
    }
}

fn count_reports(trace: &[TraceRecord]) -> usize {
    trace
        .iter()
        .filter(|r| r.agent == DELIVERY && r.performative == Some(Performative::Report))
        .count()
}

/// Runs the pipeline and returns whatever happened, including the audit.
pub fn execute_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    let mut rt = build_runtime(cfg)?;
    let (trace, hit_limit) = match rt.run_until_quiescent(cfg.max_steps) {
        Ok(trace) => (trace, false),
        Err(RuntimeError::StepLimitExceeded { trace }) => (trace, true),
        Err(e) => return Err(e.into()),
    };
    let report: Option<Report> = rt
        .belief("report/latest")
        .and_then(|b| serde_json::from_value(b.value.clone()).ok());
    let outcome = if hit_limit {
        Outcome::StepLimit
    } else if let Some(f) = rt.belief("pipeline/failure") {
        let text = |k: &str| f.value.get(k).and_then(Value::as_str).unwrap_or("").to_string();
        Outcome::Failed {
            kind: text("error"),
            detail: text("detail"),
        }
    } else if rt.belief("pipeline/halt").is_some() {
        Outcome::Halted
    } else if rt.belief("rules/active-plan").is_some() {
        Outcome::Approved
    } else {
        Outcome::Failed {
            kind: "NoApproval".into(),
            detail: "run ended without an approved report".into(),
        }
    };
    Ok(PipelineRun {
        outcome,
        report,
        audit: rt.audit(),
        messages: rt.sent_messages().to_vec(),
        belief_log: rt.belief_log().to_vec(),
        trace,
    })
}

/// Runs the pipeline to an approved report.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<(Report, Vec<TraceRecord>), PipelineError> {
    let run = execute_pipeline(cfg)?;
    match run.outcome {
        Outcome::Approved => Ok((run.report.expect("approved run has a report"), run.trace)),
        Outcome::Halted | Outcome::StepLimit => Err(PipelineError::StepLimitExceeded {
            reports: count_reports(&run.trace),
            trace: run.trace,
        }),
        Outcome::Failed { kind, detail } => Err(PipelineError::Failed {
            kind,
            detail,
            trace: run.trace,
        }),
    }
}

/// Coverage over a report's predicted classes and the zones' positions.
pub fn coverage_for(report: &Report, positions: &[(String, (f64, f64))]) -> Result<CoveragePlan, ZoneError> {
    let sites = positions
        .iter()
        .map(|(id, pos)| {
            Ok(Site {
                id: id.clone(),
                position: *pos,
                class: report
                    .class_of(id)
                    .ok_or_else(|| ZoneError::UnlabeledZone(id.clone()))?,
            })
        })
        .collect::<Result<Vec<_>, ZoneError>>()?;
    zones::plan_coverage(&sites)
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Approved => f.write_str("approved"),
            Outcome::Halted => f.write_str("halted"),
            Outcome::Failed { kind, .. } => write!(f, "failed ({kind})"),
            Outcome::StepLimit => f.write_str("step limit"),
        }
    }
}
