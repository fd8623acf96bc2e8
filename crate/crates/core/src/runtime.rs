//! A small deterministic multi-agent kernel.
//!
//! Agents are named roles with a plan library. Everything that happens to an
//! agent arrives as an [`Event`]: a percept from the environment, a message
//! from another agent, a change to a subscribed belief, or a timer the agent
//! set for itself. The scheduler always dispatches the pending event with the
//! lowest id, runs the first plan whose trigger matches, and records what the
//! plan did. Because event ids are handed out in emission order, two runs that
//! start from the same state produce the same trace.
//!
//! Messages are checked against a [`Protocol`] before they are queued. The
//! runtime keeps enough history (sent messages, deliveries, belief writes,
//! event counts) for [`Runtime::audit`] to verify the kernel's guarantees
//! after a run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Structured message and belief payload.
pub type Payload = Value;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuntimeError {
    #[error("DuplicateAgent: {0}")]
    DuplicateAgent(String),
    #[error("UnknownAgent: {0}")]
    UnknownAgent(String),
    #[error("ProtocolViolation: {performative} from {from_role} to {to_role}")]
    ProtocolViolation {
        performative: Performative,
        from_role: String,
        to_role: String,
    },
    #[error("InvalidCorrelation: message {0} was not addressed to the replying agent")]
    InvalidCorrelation(u64),
    #[error("EmptyPlan: {0}")]
    EmptyPlan(String),
    #[error("InvalidStepLimit")]
    InvalidStepLimit,
    #[error("StepLimitExceeded after {} steps", trace.len())]
    StepLimitExceeded { trace: Vec<TraceRecord> },
    #[error("ActionFailed: {0}")]
    ActionFailed(String),
}

impl RuntimeError {
    pub fn kind(&self) -> &'static str {
        match self {
            RuntimeError::DuplicateAgent(_) => "DuplicateAgent",
            RuntimeError::UnknownAgent(_) => "UnknownAgent",
            RuntimeError::ProtocolViolation { .. } => "ProtocolViolation",
            RuntimeError::InvalidCorrelation(_) => "InvalidCorrelation",
            RuntimeError::EmptyPlan(_) => "EmptyPlan",
            RuntimeError::InvalidStepLimit => "InvalidStepLimit",
            RuntimeError::StepLimitExceeded { .. } => "StepLimitExceeded",
            RuntimeError::ActionFailed(_) => "ActionFailed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Performative {
    Request,
    Inform,
    Report,
    Approve,
    Feedback,
}

impl Performative {
    pub fn as_str(self) -> &'static str {
        match self {
            Performative::Request => "request",
            Performative::Inform => "inform",
            Performative::Report => "report",
            Performative::Approve => "approve",
            Performative::Feedback => "feedback",
        }
    }
}

impl fmt::Display for Performative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMessage {
    pub id: u64,
    pub correlation_id: Option<u64>,
    pub from: String,
    pub to: String,
    pub performative: Performative,
    pub payload: Payload,
}

/// A message before the runtime assigns it an id.
#[derive(Debug, Clone, PartialEq)]
pub struct Outgoing {
    pub to: String,
    pub performative: Performative,
    pub payload: Payload,
    pub correlation_id: Option<u64>,
}

impl Outgoing {
    pub fn new(to: impl Into<String>, performative: Performative, payload: Payload) -> Self {
        Outgoing {
            to: to.into(),
            performative,
            payload,
            correlation_id: None,
        }
    }

    /// Reply addressed to the sender of `request`.
    pub fn reply(request: &AgentMessage, performative: Performative, payload: Payload) -> Self {
        Outgoing {
            to: request.from.clone(),
            performative,
            payload,
            correlation_id: Some(request.id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub key: String,
    pub value: Payload,
    pub version: u64,
    pub updated_by: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    PerceptArrived,
    MessageArrived,
    BeliefChanged,
    Timer,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::PerceptArrived => "percept_arrived",
            EventKind::MessageArrived => "message_arrived",
            EventKind::BeliefChanged => "belief_changed",
            EventKind::Timer => "timer",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EventBody {
    Percept(Payload),
    Message(AgentMessage),
    BeliefChanged { key: String, version: u64 },
    Timer(Payload),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub id: u64,
    pub owner: String,
    pub body: EventBody,
}

impl Event {
    pub fn kind(&self) -> EventKind {
        match self.body {
            EventBody::Percept(_) => EventKind::PerceptArrived,
            EventBody::Message(_) => EventKind::MessageArrived,
            EventBody::BeliefChanged { .. } => EventKind::BeliefChanged,
            EventBody::Timer(_) => EventKind::Timer,
        }
    }

    pub fn message(&self) -> Option<&AgentMessage> {
        match &self.body {
            EventBody::Message(m) => Some(m),
            _ => None,
        }
    }

    /// The message, if this event delivers one with the given performative.
    pub fn message_with(&self, performative: Performative) -> Option<&AgentMessage> {
        self.message().filter(|m| m.performative == performative)
    }

    pub fn payload(&self) -> Option<&Payload> {
        match &self.body {
            EventBody::Percept(p) | EventBody::Timer(p) => Some(p),
            EventBody::Message(m) => Some(&m.payload),
            EventBody::BeliefChanged { .. } => None,
        }
    }
}

pub type Trigger = Arc<dyn Fn(&Event) -> bool + Send + Sync>;
/// One plan step. Returns a short summary for the trace.
pub type Step = Arc<dyn Fn(&mut AgentContext<'_>, &Event) -> Result<String, RuntimeError> + Send + Sync>;

/// A named recipe: when `trigger` matches an event, run `steps` in order.
#[derive(Clone)]
pub struct Plan {
    pub name: String,
    pub goal: String,
    trigger: Trigger,
    steps: Vec<Step>,
}

impl Plan {
    pub fn new(
        name: impl Into<String>,
        goal: impl Into<String>,
        trigger: impl Fn(&Event) -> bool + Send + Sync + 'static,
    ) -> Self {
        Plan {
            name: name.into(),
            goal: goal.into(),
            trigger: Arc::new(trigger),
            steps: Vec::new(),
        }
    }

    pub fn step(
        mut self,
        action: impl Fn(&mut AgentContext<'_>, &Event) -> Result<String, RuntimeError> + Send + Sync + 'static,
    ) -> Self {
        self.steps.push(Arc::new(action));
        self
    }

    pub fn matches(&self, event: &Event) -> bool {
        (self.trigger)(event)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl fmt::Debug for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Plan")
            .field("name", &self.name)
            .field("goal", &self.goal)
            .field("steps", &self.steps.len())
            .finish()
    }
}

/// Rules of interaction: which performatives may flow between which roles.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Protocol {
    pub name: String,
    allowed: BTreeSet<(Performative, String, String)>,
    requires_reply: BTreeSet<Performative>,
}

impl Protocol {
    pub fn new(name: impl Into<String>) -> Self {
        Protocol {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn allow(mut self, performative: Performative, from_role: &str, to_role: &str) -> Self {
        self.allowed
            .insert((performative, from_role.to_string(), to_role.to_string()));
        self
    }

    pub fn require_reply(mut self, performative: Performative) -> Self {
        self.requires_reply.insert(performative);
        self
    }

    pub fn permits(&self, performative: Performative, from_role: &str, to_role: &str) -> bool {
        self.allowed
            .contains(&(performative, from_role.to_string(), to_role.to_string()))
    }

    pub fn requires_reply(&self, performative: Performative) -> bool {
        self.requires_reply.contains(&performative)
    }
}

/// Returned by [`Runtime::register_agent`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AgentHandle {
    pub name: String,
}

/// One dispatch in the scheduler's log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    pub agent: String,
    pub event_id: u64,
    pub kind: EventKind,
    pub message_id: Option<u64>,
    pub correlation_id: Option<u64>,
    pub performative: Option<Performative>,
    pub plan: Option<String>,
    pub actions: Vec<String>,
}

/// Renders a trace as one tab-separated record per line with a fixed field order.
pub fn trace_to_text(trace: &[TraceRecord]) -> String {
    let opt = |v: Option<u64>| v.map_or_else(|| "-".to_string(), |x| x.to_string());
    let mut out = String::from("# step\tagent\tevent\tevent_id\tmessage\tcorrelation\tperformative\tplan\tactions\n");
    for r in trace {
        let actions: Vec<String> = r.actions.iter().map(|a| sanitize(a)).collect();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.step,
            r.agent,
            r.kind.as_str(),
            r.event_id,
            opt(r.message_id),
            opt(r.correlation_id),
            r.performative.map_or("-", Performative::as_str),
            r.plan.as_deref().unwrap_or("-"),
            if actions.is_empty() { "-".to_string() } else { actions.join(" | ") }
        ));
    }
    out
}

fn sanitize(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// A guarantee that did not hold, as found by [`Runtime::audit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Protocol { message: u64 },
    MissingReply { message: u64, replies: usize },
    FifoOrder { from: String, to: String },
    LostEvents { emitted: u64, dispatched: u64, pending: u64 },
    BeliefVersion { key: String, expected: u64, found: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Protocol { message } => write!(f, "message {message} breaks the protocol"),
            Violation::MissingReply { message, replies } => {
                write!(f, "message {message} has {replies} replies, expected 1")
            }
            Violation::FifoOrder { from, to } => write!(f, "{from}->{to} delivered out of order"),
            Violation::LostEvents {
                emitted,
                dispatched,
                pending,
            } => write!(f, "{emitted} emitted != {dispatched} dispatched + {pending} pending"),
            Violation::BeliefVersion { key, expected, found } => {
                write!(f, "belief {key}: version {found}, expected {expected}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefWrite {
    pub key: String,
    pub version: u64,
    pub updated_by: String,
}

#[derive(Debug, Clone)]
struct Member {
    role: String,
    subscriptions: Vec<String>,
}

/// Mutable runtime state reachable from plan steps.
#[derive(Debug, Default)]
struct Kernel {
    protocol: Protocol,
    roster: BTreeMap<String, Member>,
    pending: BTreeMap<u64, Event>,
    next_event: u64,
    next_message: u64,
    emitted: u64,
    dispatched: u64,
    step: u64,
    beliefs: BTreeMap<String, Belief>,
    belief_log: Vec<BeliefWrite>,
    sent: Vec<AgentMessage>,
    delivered: Vec<u64>,
}

impl Kernel {
    fn emit(&mut self, owner: &str, body: EventBody) -> u64 {
        self.next_event += 1;
        self.emitted += 1;
        let id = self.next_event;
        self.pending.insert(
            id,
            Event {
                id,
                owner: owner.to_string(),
                body,
            },
        );
        id
    }

    fn role(&self, name: &str) -> Result<&str, RuntimeError> {
        self.roster
            .get(name)
            .map(|m| m.role.as_str())
            .ok_or_else(|| RuntimeError::UnknownAgent(name.to_string()))
    }

    fn send(&mut self, from: &str, out: Outgoing) -> Result<u64, RuntimeError> {
        let from_role = self.role(from)?.to_string();
        let to_role = self.role(&out.to)?.to_string();
        if !self.protocol.permits(out.performative, &from_role, &to_role) {
            return Err(RuntimeError::ProtocolViolation {
                performative: out.performative,
                from_role,
                to_role,
            });
        }
        if let Some(c) = out.correlation_id {
            let ok = self.sent.iter().any(|m| m.id == c && m.to == from);
            if !ok {
                return Err(RuntimeError::InvalidCorrelation(c));
            }
        }
        self.next_message += 1;
        let msg = AgentMessage {
            id: self.next_message,
            correlation_id: out.correlation_id,
            from: from.to_string(),
            to: out.to,
            performative: out.performative,
            payload: out.payload,
        };
        self.sent.push(msg.clone());
        let to = msg.to.clone();
        self.emit(&to, EventBody::Message(msg.clone()));
        Ok(msg.id)
    }

    fn update_belief(&mut self, key: &str, value: Payload, agent: &str) -> u64 {
        let version = self.beliefs.get(key).map_or(1, |b| b.version + 1);
        self.beliefs.insert(
            key.to_string(),
            Belief {
                key: key.to_string(),
                value,
                version,
                updated_by: agent.to_string(),
            },
        );
        self.belief_log.push(BeliefWrite {
            key: key.to_string(),
            version,
            updated_by: agent.to_string(),
        });
        let subscribers: Vec<String> = self
            .roster
            .iter()
            .filter(|(_, m)| m.subscriptions.iter().any(|p| key.starts_with(p.as_str())))
            .map(|(name, _)| name.clone())
            .collect();
        for name in subscribers {
            self.emit(
                &name,
                EventBody::BeliefChanged {
                    key: key.to_string(),
                    version,
                },
            );
        }
        version
    }
}

/// What a plan step can see and do.
pub struct AgentContext<'a> {
    kernel: &'a mut Kernel,
    agent: &'a str,
}

impl AgentContext<'_> {
    pub fn name(&self) -> &str {
        self.agent
    }

    pub fn role(&self) -> &str {
        self.kernel.role(self.agent).unwrap_or_default()
    }

    pub fn send(&mut self, out: Outgoing) -> Result<u64, RuntimeError> {
        self.kernel.send(self.agent, out)
    }

    pub fn update_belief(&mut self, key: &str, value: Payload) -> u64 {
        self.kernel.update_belief(key, value, self.agent)
    }

    pub fn belief(&self, key: &str) -> Option<&Belief> {
        self.kernel.beliefs.get(key)
    }

    /// Queues a timer event for this agent.
    pub fn schedule_timer(&mut self, payload: Payload) -> u64 {
        let agent = self.agent.to_string();
        self.kernel.emit(&agent, EventBody::Timer(payload))
    }
}

/// The agent kernel. Single-threaded and deterministic.
#[derive(Default)]
pub struct Runtime {
    kernel: Kernel,
    plans: BTreeMap<String, Vec<Plan>>,
    history: Vec<TraceRecord>,
}

impl Runtime {
    pub fn new(protocol: Protocol) -> Self {
        Runtime {
            kernel: Kernel {
                protocol,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    pub fn protocol(&self) -> &Protocol {
        &self.kernel.protocol
    }

    /// Adds an agent with an empty inbox. An empty plan library is allowed;
    /// such an agent consumes its events and does nothing.
    pub fn register_agent(
        &mut self,
        name: &str,
        role: &str,
        plans: Vec<Plan>,
    ) -> Result<AgentHandle, RuntimeError> {
        if self.kernel.roster.contains_key(name) {
            return Err(RuntimeError::DuplicateAgent(name.to_string()));
        }
        if let Some(p) = plans.iter().find(|p| p.is_empty()) {
            return Err(RuntimeError::EmptyPlan(p.name.clone()));
        }
        self.kernel.roster.insert(
            name.to_string(),
            Member {
                role: role.to_string(),
                subscriptions: Vec::new(),
            },
        );
        self.plans.insert(name.to_string(), plans);
        Ok(AgentHandle {
            name: name.to_string(),
        })
    }

    /// Delivers `belief_changed` events to `agent` for keys starting with `prefix`.
    pub fn subscribe(&mut self, agent: &str, prefix: &str) -> Result<(), RuntimeError> {
        let member = self
            .kernel
            .roster
            .get_mut(agent)
            .ok_or_else(|| RuntimeError::UnknownAgent(agent.to_string()))?;
        member.subscriptions.push(prefix.to_string());
        Ok(())
    }

    pub fn roster(&self) -> Vec<(String, String)> {
        self.kernel
            .roster
            .iter()
            .map(|(n, m)| (n.clone(), m.role.clone()))
            .collect()
    }

    pub fn send(&mut self, from: &str, out: Outgoing) -> Result<u64, RuntimeError> {
        self.kernel.send(from, out)
    }

    pub fn update_belief(&mut self, key: &str, value: Payload, agent: &str) -> u64 {
        self.kernel.update_belief(key, value, agent)
    }

    pub fn belief(&self, key: &str) -> Option<&Belief> {
        self.kernel.beliefs.get(key)
    }

    pub fn beliefs(&self) -> impl Iterator<Item = &Belief> {
        self.kernel.beliefs.values()
    }

    pub fn belief_log(&self) -> &[BeliefWrite] {
        &self.kernel.belief_log
    }

    pub fn inject_percept(&mut self, agent: &str, payload: Payload) -> Result<u64, RuntimeError> {
        self.kernel.role(agent)?;
        Ok(self.kernel.emit(agent, EventBody::Percept(payload)))
    }

    pub fn schedule_timer(&mut self, agent: &str, payload: Payload) -> Result<u64, RuntimeError> {
        self.kernel.role(agent)?;
        Ok(self.kernel.emit(agent, EventBody::Timer(payload)))
    }

    /// Messages in send order.
    pub fn sent_messages(&self) -> &[AgentMessage] {
        &self.kernel.sent
    }

    /// Events queued in dispatch order.
    pub fn pending(&self) -> impl Iterator<Item = &Event> {
        self.kernel.pending.values()
    }

    /// Every dispatch since the runtime was created.
    pub fn history(&self) -> &[TraceRecord] {
        &self.history
    }

    /// Dispatches events, lowest id first, until none remain. Fails with the
    /// partial trace if events are still pending after `max_steps` dispatches.
    pub fn run_until_quiescent(&mut self, max_steps: u64) -> Result<Vec<TraceRecord>, RuntimeError> {
        if max_steps == 0 {
            return Err(RuntimeError::InvalidStepLimit);
        }
        let mut trace = Vec::new();
        while let Some((_, event)) = self.kernel.pending.pop_first() {
            if trace.len() as u64 == max_steps {
                self.kernel.pending.insert(event.id, event);
                return Err(RuntimeError::StepLimitExceeded { trace });
            }
            let record = self.dispatch(event);
            self.history.push(record.clone());
            trace.push(record);
        }
        Ok(trace)
    }

    fn dispatch(&mut self, event: Event) -> TraceRecord {
        self.kernel.dispatched += 1;
        self.kernel.step += 1;
        let msg = event.message().cloned();
        if let Some(m) = &msg {
            self.kernel.delivered.push(m.id);
        }
        let plan = self
            .plans
            .get(&event.owner)
            .and_then(|plans| plans.iter().find(|p| p.matches(&event)))
            .cloned();

        let mut actions = Vec::new();
        if let Some(plan) = &plan {
            let mut ctx = AgentContext {
                kernel: &mut self.kernel,
                agent: &event.owner,
            };
            for step in &plan.steps {
                match step(&mut ctx, &event) {
                    Ok(summary) => actions.push(summary),
                    Err(e) => {
                        actions.push(format!("failed: {e}"));
                        break;
                    }
                }
            }
        }
        TraceRecord {
            step: self.kernel.step,
            agent: event.owner.clone(),
            event_id: event.id,
            kind: event.kind(),
            message_id: msg.as_ref().map(|m| m.id),
            correlation_id: msg.as_ref().and_then(|m| m.correlation_id),
            performative: msg.as_ref().map(|m| m.performative),
            plan: plan.map(|p| p.name),
            actions,
        }
    }

    /// Checks protocol safety, reply completeness (only once quiescent),
    /// pairwise FIFO delivery, event conservation and belief versioning.
    pub fn audit(&self) -> Vec<Violation> {
        let k = &self.kernel;
        let mut out = Vec::new();

        for m in &k.sent {
            let ok = match (k.roster.get(&m.from), k.roster.get(&m.to)) {
                (Some(f), Some(t)) => k.protocol.permits(m.performative, &f.role, &t.role),
                _ => false,
            };
            if !ok {
                out.push(Violation::Protocol { message: m.id });
            }
        }

        if k.pending.is_empty() {
            for m in k.sent.iter().filter(|m| k.protocol.requires_reply(m.performative)) {
                let replies = k.sent.iter().filter(|r| r.correlation_id == Some(m.id)).count();
                if replies != 1 {
                    out.push(Violation::MissingReply {
                        message: m.id,
                        replies,
                    });
                }
            }
        }

        let by_id: BTreeMap<u64, &AgentMessage> = k.sent.iter().map(|m| (m.id, m)).collect();
        let mut sent_order: BTreeMap<(&str, &str), Vec<u64>> = BTreeMap::new();
        for m in &k.sent {
            sent_order.entry((&m.from, &m.to)).or_default().push(m.id);
        }
        let mut delivered_order: BTreeMap<(&str, &str), Vec<u64>> = BTreeMap::new();
        for id in &k.delivered {
            if let Some(m) = by_id.get(id) {
                delivered_order.entry((&m.from, &m.to)).or_default().push(*id);
            }
        }
        for (pair, delivered) in &delivered_order {
            let sent = &sent_order[pair];
            if !sent.starts_with(delivered) {
                out.push(Violation::FifoOrder {
                    from: pair.0.to_string(),
                    to: pair.1.to_string(),
                });
            }
        }

        let pending = k.pending.len() as u64;
        if k.emitted != k.dispatched + pending {
            out.push(Violation::LostEvents {
                emitted: k.emitted,
                dispatched: k.dispatched,
                pending,
            });
        }

        let mut last: BTreeMap<&str, u64> = BTreeMap::new();
        for w in &k.belief_log {
            let expected = last.get(w.key.as_str()).map_or(1, |v| v + 1);
            if w.version != expected {
                out.push(Violation::BeliefVersion {
                    key: w.key.clone(),
                    expected,
                    found: w.version,
                });
            }
            last.insert(&w.key, w.version);
        }
        out
    }
}
