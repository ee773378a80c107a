//! The daydreaming session: modes, input batches, the daydream cycle and
//! the event stream every observer sees.
//!
//! A [`Session`] owns working memory, the goal and emotion stores and
//! episodic memory. Every state change is reported as a [`SessionEvent`]
//! with a strictly increasing `seq`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::concept::{parse_concepts, unify, Bindings, Concept, Symbol, Term};
use crate::control::{
    apply_success, evaluate, select_strategy, trigger, ControlConfig, ControlGoalRecord, ControlKind, ControlTarget,
    EvalContext, Evaluation, Realization, Selection, StrategyDef,
};
use crate::domain::{Banner, Domain};
use crate::emotion::{appraise, appraise_threat, AppraisalKnowledge, EmotionConfig, EmotionId, EmotionKind, EmotionRecord, EmotionStore};
use crate::error::{Error, Result};
use crate::generator::{Form, Gender};
use crate::goals::{resolve_conflict, ConflictVerdict, GoalId, GoalKind, GoalStatus, GoalSystem, OutcomeId, OutcomeRecord};
use crate::memory::{
    Adaptation, EpisodeId, EpisodeRecord, EpisodicMemory, FuturePlanRecord, IndexContext, IndexKey, IndexKind, Reality,
    StrategyRecord,
};
use crate::planner::{assess, status_payload, EventKind, PlanOutcome, PlanRequest, PlanResult, RelaxLevel, ScenarioEvent};
use crate::plot_units::{elements, NodeKind, PuInstance};
use crate::store::{ActivationConfig, ContextId, EntryId, WorkingMemory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Performance,
    Daydreaming,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        match s.trim().to_ascii_lowercase().as_str() {
            "performance" => Some(Mode::Performance),
            "daydreaming" | "daydream" => Some(Mode::Daydreaming),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Mode::Performance => "performance",
            Mode::Daydreaming => "daydreaming",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum EventType {
    WmAdd,
    WmRemove,
    RuleFired,
    Goal,
    Emotion,
    ControlGoal,
    ScenarioEvent,
    Text,
    Mode,
    Prompt,
    Cycle,
    Error,
    Trace,
}

/// One entry of the session's event stream. `payload` is a string for
/// TEXT, RULE-FIRED, MODE, PROMPT, ERROR and TRACE events, the cycle
/// number for CYCLE, and an object otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    pub kind: EventType,
    pub payload: Value,
}

impl SessionEvent {
    pub fn text(&self) -> Option<&str> {
        self.payload.as_str()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceLevel {
    Quiet,
    Banner,
    Full,
}

impl TraceLevel {
    pub fn parse(s: &str) -> Option<TraceLevel> {
        match s {
            "quiet" => Some(TraceLevel::Quiet),
            "banner" => Some(TraceLevel::Banner),
            "full" => Some(TraceLevel::Full),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SessionConfig {
    pub activation: ActivationConfig,
    pub emotion: EmotionConfig,
    pub control: ControlConfig,
    /// Upper bound on cycles for a `run` without a count.
    pub max_cycles: usize,
    /// Upper bound on elaboration steps inside one scenario.
    pub elaboration_limit: usize,
    /// Seed for shuffling plan-rule order; `None` keeps declaration order.
    pub shuffle: Option<u64>,
    pub initial_mode: Mode,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            activation: ActivationConfig::default(),
            emotion: EmotionConfig::default(),
            control: ControlConfig::default(),
            max_cycles: 50,
            elaboration_limit: 8,
            shuffle: None,
            initial_mode: Mode::Daydreaming,
        }
    }
}

/// Emotions activated together under one rule banner.
#[derive(Clone, Debug)]
struct Group {
    banner: &'static str,
    outcome: Option<OutcomeId>,
    emotions: Vec<EmotionRecord>,
    store_episode: bool,
}

/// How much of a plan to put into words.
#[derive(Clone, Copy)]
struct Narration {
    active: bool,
    assumptions: bool,
}

type Sink = Box<dyn FnMut(&SessionEvent) + Send>;

pub struct Session {
    domain: Domain,
    cfg: SessionConfig,
    wm: WorkingMemory,
    goals: GoalSystem,
    emotions: EmotionStore,
    memory: EpisodicMemory,
    control_goals: Vec<ControlGoalRecord>,
    mode: Mode,
    queue: Vec<Concept>,
    events: Vec<SessionEvent>,
    sink: Option<Sink>,
    known: BTreeMap<EntryId, (Concept, ContextId)>,
    awaiting: Option<GoalId>,
    pending: VecDeque<Group>,
    emotion_entries: BTreeMap<EmotionId, (Concept, ContextId)>,
    causes: BTreeMap<OutcomeId, Concept>,
    real_log: Vec<ScenarioEvent>,
    real_stored: usize,
    scenario: Vec<ScenarioEvent>,
    scenario_seq: u64,
    pending_tick: bool,
    cycle: u64,
    interrupt: Arc<AtomicBool>,
    interrupt_seen: bool,
    stored_this_cycle: bool,
    adaptations: Vec<Adaptation>,
    plan_outcomes: Vec<PlanOutcome>,
}

/// `(affect neg me)` style text of a concept for trace lines.
pub fn upper(c: &Concept) -> String {
    let s = c.to_string();
    let inner = s.strip_prefix('(').and_then(|s| s.strip_suffix(')')).unwrap_or(&s);
    inner.to_uppercase()
}

fn outcome_banner(kind: EmotionKind) -> &'static str {
    match kind {
        EmotionKind::PosAffect => "goal-success-affect",
        EmotionKind::Anger => "anger",
        _ => "goal-failure-affect",
    }
}

fn trigger_banner(kind: ControlKind) -> &'static str {
    match kind {
        ControlKind::Rationalization => "rationalization-trigger",
        ControlKind::Revenge => "revenge-trigger",
        ControlKind::FailureReversal => "reversal-trigger",
        ControlKind::SuccessReversal => "success-reversal-trigger",
        ControlKind::Preparation => "preparation-trigger",
    }
}

fn concept_of(head: &str, args: Vec<Term>) -> Concept {
    Concept::new(head, args)
}

fn atom(s: &Symbol) -> Term {
    Term::Atom(s.clone())
}

fn wrap(c: &Concept) -> Term {
    Term::Concept(c.clone())
}

impl Session {
    /// A session over `domain`, optionally resuming from a saved memory.
    /// Seed episodes already present by name are not stored twice, and
    /// learned plan preconditions in memory are attached to the planner.
    pub fn new(mut domain: Domain, memory: Option<EpisodicMemory>, cfg: SessionConfig) -> Result<Session> {
        let mut memory = memory.unwrap_or_default();
        for s in memory.strategies() {
            domain.planner.attach(&s.rule, s.condition.clone(), s.precondition.clone())?;
        }
        let mut wm = WorkingMemory::new(cfg.activation);
        for (head, n) in &domain.functional {
            wm.declare_functional(head.clone(), *n);
        }
        let goals = GoalSystem::new(domain.goal_tree.clone());
        let emotions = EmotionStore::new(cfg.emotion);
        let seeds = domain.episodes.clone();
        let mode = cfg.initial_mode;
        let mut s = Session {
            domain,
            cfg,
            wm,
            goals,
            emotions,
            memory: EpisodicMemory::new(),
            control_goals: Vec::new(),
            mode,
            queue: Vec::new(),
            events: Vec::new(),
            sink: None,
            known: BTreeMap::new(),
            awaiting: None,
            pending: VecDeque::new(),
            emotion_entries: BTreeMap::new(),
            causes: BTreeMap::new(),
            real_log: Vec::new(),
            real_stored: 0,
            scenario: Vec::new(),
            scenario_seq: 0,
            pending_tick: false,
            cycle: 0,
            interrupt: Arc::new(AtomicBool::new(false)),
            interrupt_seen: false,
            stored_this_cycle: false,
            adaptations: Vec::new(),
            plan_outcomes: Vec::new(),
        };
        let ix = s.ix();
        for seed in seeds {
            if memory.by_name(seed.name.as_str()).is_some() {
                continue;
            }
            let imagined = seed.reality == Reality::Imagined;
            let real = s.wm.real();
            let events = seed.events.iter().map(|e| ScenarioEvent { context: real, ..e.clone() }).collect();
            let mut rec = EpisodeRecord::new(seed.reality, events);
            rec.name = Some(seed.name.clone());
            for (i, e) in seed.emotions.iter().enumerate() {
                rec.emotions.push(EmotionRecord {
                    id: EmotionId(i as u32 + 1),
                    kind: e.kind,
                    valence: e.kind.valence(),
                    intensity: e.intensity,
                    target: e.target.clone(),
                    source: None,
                    situation: None,
                    imagined,
                    cycle: 0,
                });
            }
            memory.store(rec, &ix)?;
        }
        s.memory = memory;
        let real = s.wm.real();
        for c in s.domain.persona.clone() {
            s.note_gender(&c);
            let id = s.wm.assert_entry(c, real)?;
            s.wm.pin(id)?;
        }
        s.flush_wm();
        s.emit(EventType::Mode, json!(s.mode.symbol()));
        Ok(s)
    }

    /// The built-in NUART domain with default settings.
    pub fn nuart() -> Session {
        Session::new(Domain::nuart(), None, SessionConfig::default()).expect("built-in domain is consistent")
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn wm(&self) -> &WorkingMemory {
        &self.wm
    }

    pub fn goals(&self) -> &GoalSystem {
        &self.goals
    }

    pub fn emotions(&self) -> &EmotionStore {
        &self.emotions
    }

    pub fn memory(&self) -> &EpisodicMemory {
        &self.memory
    }

    pub fn control_goals(&self) -> &[ControlGoalRecord] {
        &self.control_goals
    }

    /// Outcome of every planner run so far, in order.
    pub fn plan_outcomes(&self) -> &[PlanOutcome] {
        &self.plan_outcomes
    }

    /// The English lines produced so far.
    pub fn transcript(&self) -> Vec<String> {
        self.events
            .iter()
            .filter(|e| e.kind == EventType::Text)
            .filter_map(|e| e.text().map(str::to_string))
            .collect()
    }

    /// Analogies drawn so far, oldest first.
    pub fn adaptations(&self) -> &[Adaptation] {
        &self.adaptations
    }

    /// Receive each event as it is emitted.
    pub fn set_sink(&mut self, sink: impl FnMut(&SessionEvent) + Send + 'static) {
        self.sink = Some(Box::new(sink));
    }

    /// A flag another thread may raise to stop a running daydream.
    pub fn interrupt_handle(&self) -> Arc<AtomicBool> {
        self.interrupt.clone()
    }

    fn emit(&mut self, kind: EventType, payload: Value) {
        let ev = SessionEvent { seq: self.events.len() as u64, kind, payload };
        if let Some(sink) = self.sink.as_mut() {
            sink(&ev);
        }
        self.events.push(ev);
    }

    fn trace(&mut self, line: String) {
        self.emit(EventType::Trace, Value::String(line));
    }

    /// Report a problem with a request as an ERROR event.
    pub fn reject(&mut self, msg: impl Into<String>) {
        self.error(msg.into());
    }

    fn error(&mut self, msg: String) {
        self.emit(EventType::Error, Value::String(msg));
    }

    /// Put `c` into words as a TEXT event. Concepts without a sentence
    /// template stay silent.
    fn say(&mut self, c: &Concept) {
        if !self.domain.generator.has_sentence(c) {
            return;
        }
        let r = self.domain.generator.sentence(c);
        for w in r.warnings {
            self.trace(format!("WARNING {}", w));
        }
        self.emit(EventType::Text, Value::String(r.text));
    }

    fn say_form(&mut self, c: &Concept, form: Form) {
        let r = self.domain.generator.phrase(c, form);
        for w in r.warnings {
            self.trace(format!("WARNING {}", w));
        }
        let mut text = crate::generator::capitalize(&r.text);
        if !text.ends_with(['.', '!', '?']) {
            text.push('.');
        }
        self.emit(EventType::Text, Value::String(text));
    }

    fn note_gender(&mut self, c: &Concept) {
        if c.head().as_str() != "person" {
            return;
        }
        let (Some(who), Some(g)) = (c.atom_arg(0), c.args().filter_map(Term::as_atom).last()) else { return };
        if let Some(g) = Gender::parse(g.as_str()) {
            self.domain.generator.set_gender(who, g);
        }
    }

    fn ix(&self) -> IndexContext {
        IndexContext {
            catalog: self.domain.plot_units.clone(),
            agents: self.domain.agents(),
            mental_heads: self.domain.mental_heads.clone(),
        }
    }

    fn entry_payload(&self, id: EntryId, c: &Concept, ctx: ContextId, activation: f64) -> Value {
        json!({ "id": id.0, "concept": c.to_string(), "context": ctx.0, "activation": activation })
    }

    /// Report every working-memory entry added or deleted since the last
    /// call.
    fn flush_wm(&mut self) {
        let current: BTreeMap<EntryId, (Concept, ContextId, f64)> =
            self.wm.entries().map(|e| (e.id, (e.concept.clone(), e.context, e.activation))).collect();
        let gone: Vec<(EntryId, Concept, ContextId)> = self
            .known
            .iter()
            .filter(|(id, _)| !current.contains_key(id))
            .map(|(id, (c, ctx))| (*id, c.clone(), *ctx))
            .collect();
        for (id, c, ctx) in gone {
            self.known.remove(&id);
            let p = self.entry_payload(id, &c, ctx, 0.0);
            self.emit(EventType::WmRemove, p);
        }
        for (id, (c, ctx, act)) in current {
            if self.known.contains_key(&id) {
                continue;
            }
            let p = self.entry_payload(id, &c, ctx, act);
            self.known.insert(id, (c, ctx));
            self.emit(EventType::WmAdd, p);
        }
    }

    fn assert_fact(&mut self, c: Concept, ctx: ContextId) -> Option<EntryId> {
        match self.wm.assert_entry(c, ctx) {
            Ok(id) => {
                self.flush_wm();
                Some(id)
            }
            Err(e) => {
                self.error(e.to_string());
                None
            }
        }
    }

    /// One decay step over REAL. Emotions whose entry falls out of memory
    /// expire with it.
    fn tick(&mut self) {
        let real = self.wm.real();
        for e in self.wm.decay_cycle(real) {
            let line = format!("[^WM.{}: {}]", e.id.0, upper(&e.concept));
            self.trace(format!("ACTIVATION FALLS BELOW LIMIT {}", line));
            self.known.remove(&e.id);
            let p = self.entry_payload(e.id, &e.concept, e.context, e.activation);
            self.emit(EventType::WmRemove, p);
            let expired: Vec<EmotionId> = self
                .emotion_entries
                .iter()
                .filter(|(_, (c, ctx))| *c == e.concept && *ctx == e.context)
                .map(|(id, _)| *id)
                .collect();
            for id in expired {
                self.emotion_entries.remove(&id);
                self.emotions.expire(id);
                self.emit_emotion(id);
            }
        }
    }

    fn flush_tick(&mut self) {
        if self.pending_tick {
            self.pending_tick = false;
            self.tick();
        }
    }

    /// Announce a rule firing. The decay step owed by the previous rule
    /// is taken first, so each rule's actions run at one activation level.
    fn fire(&mut self, banner: Banner) {
        self.flush_tick();
        self.emit(EventType::RuleFired, Value::String(banner.render()));
        self.pending_tick = true;
    }

    fn fire_named(&mut self, name: &str) {
        let b = self.domain.banner(name);
        self.fire(b);
    }
}

impl Session {
    fn emit_goal(&mut self, id: GoalId) {
        let Ok(g) = self.goals.goal(id) else { return };
        let imagined = self.wm.is_imagined(g.context);
        let p = json!({
            "id": id.0,
            "objective": g.objective.to_string(),
            "kind": g.kind.to_string(),
            "status": g.status.to_string(),
            "importance": g.importance,
            "context": g.context.0,
            "causer": g.causer.as_ref().map(|c| c.to_string()),
            "imagined": imagined,
        });
        self.emit(EventType::Goal, p);
    }

    fn emit_emotion(&mut self, id: EmotionId) {
        let Some(e) = self.emotions.get(id) else { return };
        let p = json!({
            "id": id.0,
            "kind": e.kind.symbol(),
            "intensity": e.intensity,
            "target": e.target.as_ref().map(|t| t.to_string()),
            "source": e.source.map(|o| o.0),
            "imagined": e.imagined,
            "live": self.emotions.is_live(id),
        });
        self.emit(EventType::Emotion, p);
    }

    fn emit_control(&mut self, idx: usize) {
        let cg = &self.control_goals[idx];
        let target = match &cg.target {
            ControlTarget::Outcome(o) => json!({ "outcome": o.0 }),
            ControlTarget::Situation(c) => json!({ "situation": c.to_string() }),
        };
        let p = json!({
            "index": idx,
            "kind": cg.kind.symbol(),
            "target": target,
            "status": cg.status.to_string(),
            "strategy": cg.strategy.as_ref().map(|s| s.to_string()),
            "intensity": cg.intensity,
        });
        self.emit(EventType::ControlGoal, p);
    }

    /// Record an event of the scenario being generated.
    fn scene(&mut self, kind: EventKind, payload: Concept, ctx: ContextId) {
        self.scenario_seq += 1;
        let ev = ScenarioEvent { kind, payload, context: ctx, seq: self.scenario_seq };
        self.emit_scene(&ev);
        if ctx == self.wm.real() {
            self.real_log.push(ev);
        } else {
            self.scenario.push(ev);
        }
    }

    fn emit_scene(&mut self, ev: &ScenarioEvent) {
        let p = json!({
            "kind": ev.kind.symbol(),
            "payload": ev.payload.to_string(),
            "context": ev.context.0,
            "seq": ev.seq,
        });
        self.emit(EventType::ScenarioEvent, p);
    }

    /// The working-memory form of an emotion.
    fn emotion_concept(&self, e: &EmotionRecord) -> Concept {
        let me = atom(self.domain.generator.self_agent());
        let target = e.target.clone().or_else(|| {
            let o = e.source.and_then(|o| self.goals.outcome(o))?;
            o.objective.atoms().into_iter().find(|a| a != self.domain.generator.self_agent() && self.domain.generator.is_agent(a))
        });
        let with_target = |head: &str| match &target {
            Some(t) => concept_of(head, vec![me.clone(), atom(t)]),
            None => concept_of(head, vec![me.clone()]),
        };
        match e.kind {
            EmotionKind::NegAffect if e.intensity < 0.5 => {
                concept_of("affect", vec![Term::atom("neg"), me.clone(), Term::atom("low")])
            }
            EmotionKind::NegAffect => concept_of("affect", vec![Term::atom("neg"), me.clone()]),
            EmotionKind::PosAffect => concept_of("affect", vec![Term::atom("pos"), me.clone()]),
            EmotionKind::Fear => match &e.situation {
                Some(s) => concept_of("fear", vec![me.clone(), wrap(s)]),
                None => concept_of("fear", vec![me.clone()]),
            },
            EmotionKind::Embarrassment => concept_of("embarrassment", vec![me.clone()]),
            k => with_target(k.symbol()),
        }
    }

    /// Put a stored emotion into working memory and words.
    fn announce_emotion(&mut self, id: EmotionId) {
        let Some(rec) = self.emotions.get(id).cloned() else { return };
        let c = self.emotion_concept(&rec);
        let real = self.wm.real();
        self.emit_emotion(id);
        if self.assert_fact(c.clone(), real).is_some() {
            self.emotion_entries.insert(id, (c.clone(), real));
        }
        self.say(&c);
    }

    fn activate_emotion(&mut self, rec: EmotionRecord) -> EmotionId {
        let id = self.emotions.add(rec);
        self.announce_emotion(id);
        id
    }

    /// After an intensity change: swap the emotion's working-memory form
    /// and restore its activation.
    fn refresh_emotion(&mut self, id: EmotionId) {
        let Some(rec) = self.emotions.get(id).cloned() else { return };
        let new = self.emotion_concept(&rec);
        let real = self.wm.real();
        if let Some((old, ctx)) = self.emotion_entries.get(&id).cloned() {
            if old != new {
                let _ = self.wm.retract(&old, ctx);
            }
        }
        if let Ok(entry) = self.wm.assert_entry(new.clone(), real) {
            let _ = self.wm.replenish(entry);
            self.flush_wm();
            self.trace(format!("REPLENISH ACTIVATION OF [^WM.{}: {}]", entry.0, upper(&new)));
            self.emotion_entries.insert(id, (new.clone(), real));
        }
        self.emit_emotion(id);
        self.say(&new);
    }

    fn knowledge(&self) -> AppraisalKnowledge {
        AppraisalKnowledge {
            self_agent: self.domain.self_agent.clone(),
            relationships: self.domain.relationships.clone(),
            social_regard: self.domain.social_regard.clone(),
        }
    }

    /// Words for a terminal outcome: personal and delta goals either way,
    /// preservation goals only when they fail.
    fn narrate_outcome(&mut self, o: &OutcomeRecord) {
        let Ok(g) = self.goals.goal(o.goal) else { return };
        let speak = match g.kind {
            GoalKind::Personal | GoalKind::Delta => true,
            GoalKind::Preservation => o.status == GoalStatus::Failed,
            GoalKind::ControlLinked => false,
        };
        if !speak {
            return;
        }
        let head = if o.status == GoalStatus::Failed { "goal-failed" } else { "goal-succeeded" };
        let c = concept_of(head, vec![atom(&self.domain.self_agent), wrap(&o.objective)]);
        self.say(&c);
    }

    fn finish_goal(&mut self, id: GoalId, status: GoalStatus, causer: Option<Symbol>) -> Option<OutcomeRecord> {
        let ctx = self.goals.goal(id).ok()?.context;
        let imagined = self.wm.is_imagined(ctx);
        match self.goals.record_outcome(id, status, causer, self.cycle, imagined) {
            Ok(o) => {
                self.emit_goal(id);
                let rec = self.goals.outcome(o).cloned()?;
                self.narrate_outcome(&rec);
                Some(rec)
            }
            Err(e) => {
                self.error(e.to_string());
                None
            }
        }
    }

    /// A real goal reached a terminal state: log it and queue its
    /// emotions for the next daydream cycles.
    fn real_outcome(&mut self, id: GoalId, status: GoalStatus, causer: Option<Symbol>) {
        let Some(o) = self.finish_goal(id, status, causer) else { return };
        let real = self.wm.real();
        let word = if status == GoalStatus::Failed { "failed" } else { "succeeded" };
        self.trace(format!("TERMINATE PLANNING FOR [^G.{}: GOAL {} {}]", id.0, word.to_uppercase(), upper(&o.objective)));
        self.scene(EventKind::GoalChange, status_payload(word, &o.objective), real);
        let found = appraise(&o, &self.knowledge(), self.emotions.config());
        let mut groups: Vec<Group> = Vec::new();
        for e in found {
            let banner = match e.kind {
                EmotionKind::Rejection | EmotionKind::Embarrassment => {
                    groups.iter().find(|g| g.banner == "anger").map(|_| "anger").unwrap_or("social-emotion")
                }
                k => outcome_banner(k),
            };
            match groups.iter_mut().find(|g| g.banner == banner) {
                Some(g) => g.emotions.push(e),
                None => groups.push(Group {
                    banner,
                    outcome: Some(o.id),
                    emotions: vec![e],
                    store_episode: matches!(banner, "goal-failure-affect" | "goal-success-affect"),
                }),
            }
        }
        self.pending.extend(groups);
    }
}

impl Session {
    /// One script or console line: `mode X`, `run [N]`, `interrupt`, or
    /// an input. Blank lines and `#` comments are ignored.
    pub fn command(&mut self, line: &str) {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return;
        }
        let mut words = line.split_whitespace();
        match words.next() {
            Some("mode") => {
                let word = words.next().unwrap_or("");
                match Mode::parse(word) {
                    Some(m) => self.set_mode(m),
                    None => self.error(format!("unknown mode `{}`", word)),
                }
            }
            Some("run") => match words.next().map(str::parse::<usize>) {
                None => {
                    self.run(None);
                }
                Some(Ok(n)) => {
                    self.run(Some(n));
                }
                Some(Err(_)) => self.error(format!("bad cycle count in `{}`", line)),
            },
            Some("interrupt") if words.next().is_none() => self.interrupt(),
            _ => self.submit(line),
        }
    }

    /// Run every line of a script.
    pub fn run_script(&mut self, text: &str) {
        for line in text.lines() {
            self.command(line);
        }
    }

    /// The concepts an input line stands for: a canned phrase or concept
    /// syntax.
    pub fn read_input(&self, line: &str) -> Result<Vec<Concept>> {
        if let Some(p) = self.domain.lookup_phrase(line) {
            return Ok(p.concepts.clone());
        }
        let line = line.trim();
        if !line.starts_with('(') {
            return Err(Error::Validation(format!("unknown input phrase `{}`", line)));
        }
        let cs = parse_concepts(line)?;
        if let Some(bad) = cs.iter().find(|c| !c.is_ground()) {
            return Err(Error::PatternNotGround(bad.to_string()));
        }
        Ok(cs)
    }

    /// An input. In performance mode it is handled at once; while
    /// daydreaming it waits for the next switch to performance.
    pub fn submit(&mut self, line: &str) {
        match self.read_input(line) {
            Err(e) => self.error(e.to_string()),
            Ok(cs) if cs.is_empty() => {}
            Ok(cs) => match self.mode {
                Mode::Performance => self.batch(cs),
                Mode::Daydreaming => {
                    self.trace(format!("INPUT QUEUED {}", cs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")));
                    self.queue.extend(cs);
                }
            },
        }
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
        self.emit(EventType::Mode, json!(mode.symbol()));
        if mode == Mode::Performance && !self.queue.is_empty() {
            let queued = std::mem::take(&mut self.queue);
            self.batch(queued);
        }
    }

    /// Assert a batch of inputs into REAL and apply the outcome rules. In
    /// performance mode the agent then acts on them.
    fn batch(&mut self, inputs: Vec<Concept>) {
        self.flush_tick();
        self.tick();
        let real = self.wm.real();
        for c in &inputs {
            self.note_gender(c);
            if self.assert_fact(c.clone(), real).is_none() {
                continue;
            }
            self.scene(EventKind::Action, c.clone(), real);
            if c.head().as_str() == "threat" {
                self.threat(c);
            }
            self.apply_outcome_rules(c);
        }
        if self.mode == Mode::Performance {
            self.perform(&inputs);
        }
    }

    fn apply_outcome_rules(&mut self, input: &Concept) {
        let real = self.wm.real();
        for rule in self.domain.outcome_rules.clone() {
            let Some(b) = unify(&rule.pattern, input) else { continue };
            let causer = rule.causer.substitute(&b).as_atom().cloned();
            let goal = self.awaiting.take().or_else(|| self.goals.select_focus(real).map(|g| g.id));
            if let Some(g) = goal {
                self.real_outcome(g, rule.status, causer);
                if let Some(o) = self.goals.outcome_of(g).map(|o| o.id) {
                    self.causes.insert(o, input.clone());
                }
            }
            break;
        }
    }

    /// Inputs plus what follows from them in one inference step.
    fn consequences(&self, inputs: &[Concept]) -> Vec<Concept> {
        let real = self.wm.real();
        let mut out: Vec<Concept> = inputs.to_vec();
        for rule in &self.domain.planner.derive {
            for input in inputs {
                for p in &rule.premises {
                    let Some(b) = unify(p, input) else { continue };
                    let head = rule.conclusion.substitute(&b);
                    for pb in self.wm.prove(&head, real, &self.domain.planner.derive, &Bindings::new()) {
                        let c = head.substitute(&pb);
                        if c.is_ground() && !out.contains(&c) {
                            out.push(c);
                        }
                    }
                }
            }
        }
        out
    }

    /// Performance mode: notice opportunities, recall future plans, and
    /// plan for the goal in focus without relaxing anything.
    fn perform(&mut self, inputs: &[Concept]) {
        let real = self.wm.real();
        let facts = self.consequences(inputs);
        for opp in self.domain.opportunities.clone() {
            for f in &facts {
                let Some(b) = unify(&opp.trigger, f) else { continue };
                let mut frontier = vec![b];
                for cond in &opp.conditions {
                    frontier = frontier
                        .iter()
                        .flat_map(|b| self.wm.prove(cond, real, &self.domain.planner.derive, b))
                        .collect();
                }
                let Some(b) = frontier.into_iter().next() else { continue };
                let goal = opp.goal.substitute(&b);
                if !goal.is_ground()
                    || self.goals.find_active(&goal, real).is_some()
                    || self.wm.provable(&goal, real, &self.domain.planner.derive)
                {
                    continue;
                }
                match self.goals.activate_goal(goal, GoalKind::Delta, real) {
                    Ok(id) => self.emit_goal(id),
                    Err(e) => self.error(e.to_string()),
                }
            }
        }
        let recalled: Vec<Concept> = self.memory.consult(&facts).into_iter().map(|(_, a)| a).collect();
        if !recalled.is_empty() {
            for a in recalled {
                self.trace(format!("FUTURE PLAN [{}]", upper(&a)));
                if self.assert_fact(a.clone(), real).is_some() {
                    self.scene(EventKind::Action, a.clone(), real);
                    self.say(&a);
                }
            }
            return;
        }
        let focus = self
            .goals
            .select_focus(real)
            .filter(|g| matches!(g.kind, GoalKind::Personal | GoalKind::Delta))
            .map(|g| (g.id, g.objective.clone()));
        let Some((id, objective)) = focus else { return };
        if self.awaiting == Some(id) {
            return;
        }
        let mut req = PlanRequest::new(objective, RelaxLevel::None);
        req.awaiting = true;
        req.shuffle = self.cfg.shuffle;
        let Some(res) = self.plan(real, &req) else { return };
        match res.outcome {
            PlanOutcome::Awaiting | PlanOutcome::Succeeded => {
                self.adopt(&res, real, Narration { active: false, assumptions: false });
                if res.outcome == PlanOutcome::Awaiting {
                    self.awaiting = Some(id);
                } else {
                    self.real_outcome(id, GoalStatus::Succeeded, None);
                }
            }
            _ => {
                let why = res.diagnostic.clone().unwrap_or_default();
                self.trace(format!("NO PLAN FOR [^G.{}: {}]: {}", id.0, upper(&req.goal), why));
            }
        }
    }

    fn plan(&mut self, ctx: ContextId, req: &PlanRequest) -> Option<PlanResult> {
        self.trace(format!("START PLANNING FOR [{}] AT {}", upper(&req.goal), req.level.to_string().to_uppercase()));
        match self.domain.planner.run(&self.wm, ctx, req) {
            Ok(r) => {
                self.plan_outcomes.push(r.outcome);
                Some(r)
            }
            Err(e) => {
                self.error(e.to_string());
                None
            }
        }
    }

    /// Take over a plan's working memory and tell its events.
    fn adopt(&mut self, res: &PlanResult, ctx: ContextId, how: Narration) {
        self.wm = res.wm.clone();
        self.flush_wm();
        self.narrate(&res.events, ctx, how);
    }

    fn narrate(&mut self, events: &[ScenarioEvent], ctx: ContextId, how: Narration) {
        let me = self.domain.self_agent.clone();
        for ev in events {
            self.scene(ev.kind, ev.payload.clone(), ctx);
            match ev.kind {
                EventKind::Action => self.say(&ev.payload),
                EventKind::GoalChange if how.active => {
                    if let Some(("active", g)) = ev.goal_change() {
                        let c = concept_of("active-goal", vec![atom(&me), wrap(g)]);
                        self.say(&c);
                    }
                }
                EventKind::Assumption if how.assumptions => {
                    if let Some((_, c)) = ev.assumption() {
                        let c = c.clone();
                        self.say_form(&c, Form::Assumed);
                    }
                }
                _ => {}
            }
        }
    }
}

/// Whether elaboration may go on after a preservation goal was handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Flow {
    Go,
    Stop,
}

impl Session {
    /// Daydream for at most `limit` cycles (the configured maximum when
    /// `None`), stopping early once nothing is left to do or an interrupt
    /// arrives. Returns the number of cycles run.
    pub fn run(&mut self, limit: Option<usize>) -> usize {
        if self.mode != Mode::Daydreaming {
            self.error("run is only available in daydreaming mode".into());
            return 0;
        }
        if !self.queue.is_empty() {
            let queued = std::mem::take(&mut self.queue);
            self.batch(queued);
        }
        let limit = limit.unwrap_or(self.cfg.max_cycles);
        let mut n = 0;
        while n < limit {
            if self.interrupt.swap(false, Ordering::SeqCst) {
                self.trace("INTERRUPT...".into());
                self.interrupt_seen = true;
                break;
            }
            if !self.cycle_once() {
                break;
            }
            n += 1;
        }
        self.flush_tick();
        self.emit(EventType::Prompt, json!("Input?"));
        n
    }

    /// Stop daydreaming. When a run already stopped on the interrupt flag
    /// this only acknowledges it.
    pub fn interrupt(&mut self) {
        self.interrupt.store(false, Ordering::SeqCst);
        if self.interrupt_seen {
            self.interrupt_seen = false;
            return;
        }
        self.trace("INTERRUPT...".into());
        self.emit(EventType::Prompt, json!("Input?"));
    }

    /// Nothing queued for appraisal and no new control goal to pursue.
    pub fn is_quiescent(&self) -> bool {
        self.pending.is_empty() && self.candidates().is_empty()
    }

    fn candidates(&self) -> Vec<ControlGoalRecord> {
        let taken: BTreeSet<(ControlKind, ControlTarget)> = self.control_goals.iter().map(|c| c.key()).collect();
        trigger(self.emotions.live(), self.goals.outcomes(), &self.domain.self_agent, &self.cfg.control)
            .into_iter()
            .filter(|c| !taken.contains(&c.key()))
            .collect()
    }

    fn cycle_once(&mut self) -> bool {
        if self.is_quiescent() {
            return false;
        }
        self.cycle += 1;
        self.stored_this_cycle = false;
        self.emit(EventType::Cycle, json!(self.cycle));
        if let Some(group) = self.pending.pop_front() {
            self.activate_group(group);
        }
        if let Some(cg) = self.candidates().into_iter().next() {
            self.pursue(cg);
        }
        self.flush_tick();
        true
    }

    fn activate_group(&mut self, group: Group) {
        self.fire_named(group.banner);
        let ids: Vec<EmotionId> = group.emotions.into_iter().map(|e| self.activate_emotion(e)).collect();
        if !group.store_episode {
            return;
        }
        let events = self.real_log[self.real_stored..].to_vec();
        self.real_stored = self.real_log.len();
        let outcomes: Vec<OutcomeRecord> = group.outcome.and_then(|o| self.goals.outcome(o)).cloned().into_iter().collect();
        let emotions: Vec<EmotionRecord> = ids.iter().filter_map(|id| self.emotions.get(*id).cloned()).collect();
        self.store_episode(Reality::Personal, events, outcomes, emotions);
    }

    fn store_episode(
        &mut self,
        reality: Reality,
        events: Vec<ScenarioEvent>,
        outcomes: Vec<OutcomeRecord>,
        emotions: Vec<EmotionRecord>,
    ) -> Option<EpisodeId> {
        if reality == Reality::Imagined {
            if self.stored_this_cycle {
                self.trace("EPISODE NOT STORED: ONE IMAGINED EPISODE PER CYCLE".into());
                return None;
            }
            self.stored_this_cycle = true;
        }
        let mut rec = EpisodeRecord::new(reality, events);
        rec.outcomes = outcomes;
        rec.emotions = emotions;
        let ix = self.ix();
        match self.memory.store(rec, &ix) {
            Ok(id) => {
                let units: Vec<String> = self
                    .memory
                    .episode(id)
                    .map(|e| e.plot_units.iter().map(|u| u.to_string()).collect())
                    .unwrap_or_default();
                for u in units {
                    self.trace(format!("EPISODE INDEX: Plot Unit [^EPISODE.{}: {}]", id.0, u));
                }
                Some(id)
            }
            Err(e) => {
                self.error(e.to_string());
                None
            }
        }
    }

    /// The scenario generated so far in the current control goal, ready
    /// for storing.
    fn imagined_outcomes(&self, ctx: ContextId) -> Vec<OutcomeRecord> {
        self.goals.outcomes().iter().filter(|o| o.context == ctx).cloned().collect()
    }

    fn spawn(&mut self) -> Option<ContextId> {
        self.scenario.clear();
        let real = self.wm.real();
        match self.wm.spawn(real) {
            Ok(c) => Some(c),
            Err(e) => {
                self.error(e.to_string());
                None
            }
        }
    }

    fn drop_context(&mut self, ctx: ContextId) {
        self.wm.discard(ctx);
        self.flush_wm();
    }

    /// What the control goal is after, as a concept for words and goals.
    fn control_objective(&self, cg: &ControlGoalRecord) -> Concept {
        let me = atom(&self.domain.self_agent);
        let outcome = cg.outcome().and_then(|o| self.goals.outcome(o));
        let g = |o: Option<&OutcomeRecord>| o.map(|o| wrap(&o.objective)).unwrap_or_else(|| Term::atom("nothing"));
        match cg.kind {
            ControlKind::Rationalization => concept_of("rationalize-failure", vec![me, g(outcome)]),
            ControlKind::FailureReversal => concept_of("reverse-failure", vec![me, g(outcome)]),
            ControlKind::SuccessReversal => concept_of("reverse-success", vec![me, g(outcome)]),
            ControlKind::Revenge => {
                let b = outcome.and_then(|o| o.causer.clone()).map(|b| atom(&b)).unwrap_or_else(|| Term::atom("someone"));
                match outcome.and_then(|o| self.causes.get(&o.id)) {
                    Some(cause) => concept_of("revenge", vec![me, b, wrap(cause)]),
                    None => concept_of("revenge", vec![me, b]),
                }
            }
            ControlKind::Preparation => match &cg.target {
                ControlTarget::Situation(s) => concept_of("prepare", vec![me, wrap(s)]),
                ControlTarget::Outcome(_) => concept_of("prepare", vec![me, g(outcome)]),
            },
        }
    }

    fn pursue(&mut self, cg: ControlGoalRecord) {
        self.fire_named(trigger_banner(cg.kind));
        self.control_goals.push(cg);
        let idx = self.control_goals.len() - 1;
        self.emit_control(idx);
        let objective = self.control_objective(&self.control_goals[idx]);
        let me = atom(&self.domain.self_agent);
        self.say(&concept_of("active-goal", vec![me, wrap(&objective)]));
        match self.control_goals[idx].kind {
            ControlKind::Rationalization => self.rationalize(idx),
            ControlKind::Revenge => self.revenge(idx, objective),
            ControlKind::FailureReversal => self.reverse_failure(idx),
            ControlKind::SuccessReversal => self.reverse_success(idx),
            ControlKind::Preparation => self.prepare(idx),
        }
        if self.control_goals[idx].status == GoalStatus::Active {
            self.control_goals[idx].status = GoalStatus::Failed;
        }
        self.emit_control(idx);
    }

    fn cg_outcome(&self, idx: usize) -> Option<OutcomeRecord> {
        self.control_goals[idx].outcome().and_then(|o| self.goals.outcome(o)).cloned()
    }

    fn choose(&mut self, idx: usize, extra: &[IndexKey], tried: &BTreeSet<Symbol>, avoid: Option<&Concept>) -> Option<Selection> {
        let mut cg = self.control_goals[idx].clone();
        let skip = |e: &EpisodeRecord| match avoid {
            Some(g) => e.events.iter().any(|ev| ev.goal_change().map(|(_, x)| x == g).unwrap_or(false)),
            None => false,
        };
        let sel = select_strategy(&mut cg, &self.domain.strategies, &self.memory, extra, tried, &skip);
        self.control_goals[idx] = cg;
        if let Some(s) = &sel {
            self.trace(format!("STRATEGY {}", s.strategy.name.as_str().to_uppercase()));
        }
        sel
    }

    fn judge(&self, idx: usize, strategy: &StrategyDef, o: Option<&OutcomeRecord>) -> Evaluation {
        let agents = self.domain.agents();
        let goals = &self.goals;
        let importance = |c: &Concept| goals.tree().importance_of(c.head()).unwrap_or(0.0);
        let ctx = EvalContext {
            plot_units: &self.domain.plot_units,
            agents: &agents,
            mental_heads: &self.domain.mental_heads,
            self_agent: &self.domain.self_agent,
            objective: o.map(|o| &o.objective),
            causer: o.and_then(|o| o.causer.as_ref()),
            importance: &importance,
        };
        evaluate(&self.control_goals[idx], strategy, &self.scenario, &ctx)
    }

    /// Concept of node `node` of a recognized instance in the scenario.
    fn instance_node(&self, inst: &PuInstance, node: usize) -> Option<Concept> {
        let els = elements(&self.scenario, &self.domain.agents(), &self.domain.mental_heads);
        inst.node_map.get(node).and_then(|&e| els.get(e)).map(|e| e.concept.clone())
    }

    fn rationalize(&mut self, idx: usize) {
        let Some(o) = self.cg_outcome(idx) else { return };
        let g = o.objective.clone();
        let me = self.domain.self_agent.clone();
        let mut tried = BTreeSet::new();
        while let Some(sel) = self.choose(idx, &[], &tried, Some(&g)) {
            tried.insert(sel.strategy.name.clone());
            self.emit_control(idx);
            let Some(ctx) = self.spawn() else { return };
            match &sel.strategy.realization {
                Realization::PlotUnit(n) if n.as_str() == "mixed-blessing" => {
                    self.imagine_success(&g, ctx);
                    self.elaborate(ctx, sel.strategy.level, &g);
                }
                Realization::PlotUnit(_) => {
                    self.scene(EventKind::Recall, status_payload("failed", &g), ctx);
                    self.elaborate(ctx, sel.strategy.level, &g);
                }
                Realization::ExternalAttribution => {
                    for a in self.domain.attributions.clone() {
                        let Some(b) = unify(&a.pattern, &g) else { continue };
                        let cause = a.cause.substitute(&b);
                        let c = concept_of("external-cause", vec![wrap(&g), wrap(&cause)]);
                        self.scene(EventKind::Action, c.clone(), ctx);
                        self.say(&c);
                        break;
                    }
                }
                _ => {}
            }
            let ev = self.judge(idx, &sel.strategy, Some(&o));
            if ev.status != GoalStatus::Succeeded {
                self.drop_context(ctx);
                continue;
            }
            self.fire_named("rationalized");
            let outcomes = self.imagined_outcomes(ctx);
            let scenario = self.scenario.clone();
            self.store_episode(Reality::Imagined, scenario, outcomes, Vec::new());
            if let Some(g1) = ev.instance.as_ref().and_then(|i| self.instance_node(i, 1)) {
                if matches!(&sel.strategy.realization, Realization::PlotUnit(n) if n.as_str() == "mixed-blessing") {
                    self.say(&concept_of("rationalization", vec![atom(&me), wrap(&g), wrap(&g1)]));
                }
            }
            self.fire_named("rationalization-success");
            self.succeed(idx, &o);
            return;
        }
    }

    /// Emotional side of a control goal that worked.
    fn succeed(&mut self, idx: usize, o: &OutcomeRecord) {
        self.control_goals[idx].status = GoalStatus::Succeeded;
        let cg = self.control_goals[idx].clone();
        match apply_success(&cg, Some(o), &mut self.emotions, self.cycle) {
            Ok(Some(id)) if cg.kind == ControlKind::Rationalization => self.refresh_emotion(id),
            Ok(Some(id)) => self.announce_emotion(id),
            Ok(None) => {}
            Err(e) => self.error(e.to_string()),
        }
    }

    /// Imagine goal `g` had succeeded after all.
    fn imagine_success(&mut self, g: &Concept, ctx: ContextId) {
        match self.goals.activate_goal(g.clone(), GoalKind::Delta, ctx) {
            Ok(id) => {
                self.emit_goal(id);
                self.assert_fact(g.clone(), ctx);
                self.finish_goal(id, GoalStatus::Succeeded, None);
                self.scene(EventKind::GoalChange, status_payload("succeeded", g), ctx);
            }
            Err(e) => self.error(e.to_string()),
        }
    }

    /// Work out consequences of the scenario in `ctx`: first threatened
    /// preservation goals, then continuations suggested by episodes.
    fn elaborate(&mut self, ctx: ContextId, level: RelaxLevel, about: &Concept) {
        for _ in 0..self.cfg.elaboration_limit {
            let fired =
                self.goals.preservation_triggers(&self.wm, ctx, &self.domain.preservation, &self.domain.planner.derive);
            if fired.is_empty() {
                if !self.continue_by_analogy(ctx, about) {
                    break;
                }
                continue;
            }
            let mut flow = Flow::Go;
            for (gid, rule) in fired {
                if flow == Flow::Go {
                    flow = self.preserve(gid, rule, ctx, level);
                } else {
                    let _ = self.goals.record_outcome(gid, GoalStatus::Failed, None, self.cycle, true);
                }
            }
            if flow == Flow::Stop {
                break;
            }
        }
    }

    fn preserve(&mut self, gid: GoalId, rule: usize, ctx: ContextId, level: RelaxLevel) -> Flow {
        let r = self.domain.preservation[rule].clone();
        let if_lines: Vec<&str> = r.banner_if.iter().map(String::as_str).collect();
        let then_lines: Vec<&str> = r.banner_then.iter().map(String::as_str).collect();
        self.fire(Banner::new(&if_lines, &then_lines));
        self.emit_goal(gid);
        let Ok(goal) = self.goals.goal(gid).cloned() else { return Flow::Go };
        let me = atom(&self.domain.self_agent);
        self.say(&concept_of("p-goal", vec![me, wrap(&goal.objective)]));
        let Some(requirement) = goal.requirement.clone() else { return Flow::Go };
        let guards: Vec<(GoalId, Concept)> = self
            .goals
            .goals()
            .iter()
            .filter(|g| g.context == ctx && g.kind == GoalKind::Preservation && g.id != gid)
            .filter(|g| g.status != GoalStatus::Failed)
            .filter_map(|g| g.requirement.clone().map(|r| (g.id, r)))
            .collect();
        let mut req = PlanRequest::new(requirement, level);
        req.protected = guards.iter().map(|(_, c)| c.clone()).collect();
        req.shuffle = self.cfg.shuffle;
        let Some(res) = self.plan(ctx, &req) else { return Flow::Go };
        match res.outcome {
            PlanOutcome::Succeeded => {
                self.adopt(&res, ctx, Narration { active: true, assumptions: false });
                self.finish_goal(gid, GoalStatus::Succeeded, None);
                self.scene(EventKind::GoalChange, status_payload("succeeded", &goal.objective), ctx);
                Flow::Go
            }
            PlanOutcome::Conflict => {
                self.fire_named("conflict");
                let owner = res
                    .conflict
                    .as_ref()
                    .and_then(|c| guards.iter().find(|(_, r)| r == c))
                    .or(guards.first())
                    .and_then(|(id, _)| self.goals.goal(*id).ok().cloned());
                let verdict = owner.map(|p| resolve_conflict(&p, &goal)).unwrap_or(ConflictVerdict::Continue);
                self.trace(format!("CONFLICT RESOLVED: {:?}", verdict).to_uppercase());
                self.finish_goal(gid, GoalStatus::Failed, None);
                self.scene(EventKind::GoalChange, status_payload("failed", &goal.objective), ctx);
                match verdict {
                    ConflictVerdict::AbandonPursuit => Flow::Stop,
                    ConflictVerdict::Continue => Flow::Go,
                }
            }
            _ => {
                self.finish_goal(gid, GoalStatus::Failed, None);
                self.scene(EventKind::GoalChange, status_payload("failed", &goal.objective), ctx);
                Flow::Go
            }
        }
    }

    /// Let a remembered episode suggest what happens next. Episodes about
    /// `about` itself are left out.
    fn continue_by_analogy(&mut self, ctx: ContextId, about: &Concept) -> bool {
        let facts: Vec<Concept> = self.wm.visible(ctx).iter().map(|e| e.concept.clone()).collect();
        let heads: BTreeSet<String> = facts.iter().map(|c| c.head().as_str().to_string()).collect();
        let keys: Vec<IndexKey> = heads.iter().map(|h| IndexKey::new(IndexKind::Surface, h)).collect();
        let ix = self.ix();
        let found = {
            let wm = &self.wm;
            let derive = &self.domain.planner.derive;
            let holds = |c: &Concept| wm.provable(c, ctx, derive);
            let skip = |e: &EpisodeRecord| {
                e.events.iter().any(|ev| ev.goal_change().map(|(_, g)| g == about).unwrap_or(false))
            };
            self.memory.suggest_continuation(&keys, &facts, &ix, &skip, &holds)
        };
        let Some(cont) = found else { return false };
        self.fire_named("analogy");
        let label = self.memory.episode(cont.episode).map(|e| e.label()).unwrap_or_default();
        self.trace(format!("RECALL [^EPISODE.{}: {}]", cont.episode.0, label.to_uppercase()));
        self.say(&concept_of("time-when", vec![wrap(&cont.recalled)]));
        self.assert_fact(cont.suggested.clone(), ctx);
        self.scene(EventKind::Action, cont.suggested.clone(), ctx);
        self.say(&cont.suggested);
        true
    }
}

impl Session {
    /// Plan `goal` in `ctx` unless it already holds. True when it holds
    /// afterwards.
    fn achieve(&mut self, goal: &Concept, ctx: ContextId, level: RelaxLevel, how: Narration) -> bool {
        if self.wm.provable(goal, ctx, &self.domain.planner.derive) {
            return true;
        }
        let mut req = PlanRequest::new(goal.clone(), level);
        req.shuffle = self.cfg.shuffle;
        let Some(res) = self.plan(ctx, &req) else { return false };
        if res.outcome == PlanOutcome::Succeeded {
            self.adopt(&res, ctx, how);
            true
        } else {
            self.trace(format!("NO PLAN FOR [{}]", upper(goal)));
            false
        }
    }

    /// A goal serving control goal `idx`, as important as the outcome it
    /// is about.
    fn linked_goal(&mut self, idx: usize, objective: &Concept, ctx: ContextId) -> Option<GoalId> {
        let importance = self.cg_outcome(idx).map(|o| o.importance).unwrap_or(self.control_goals[idx].intensity);
        match self.goals.activate_with_importance(objective.clone(), GoalKind::ControlLinked, ctx, importance) {
            Ok(id) => {
                self.emit_goal(id);
                Some(id)
            }
            Err(e) => {
                self.error(e.to_string());
                None
            }
        }
    }

    fn revenge(&mut self, idx: usize, objective: Concept) {
        let Some(o) = self.cg_outcome(idx) else { return };
        let Some(b) = o.causer.clone() else { return };
        let me = self.domain.self_agent.clone();
        let extra = [IndexKey::new(IndexKind::Emotion, "anger"), IndexKey::new(IndexKind::Emotion, "rejection")];
        let mut tried = BTreeSet::new();
        while let Some(sel) = self.choose(idx, &extra, &tried, Some(&o.objective)) {
            tried.insert(sel.strategy.name.clone());
            self.emit_control(idx);
            let Realization::PlotUnit(unit) = sel.strategy.realization.clone() else { continue };
            let Some(ctx) = self.spawn() else { return };
            let Some(gid) = self.linked_goal(idx, &objective, ctx) else { return };
            self.scene(EventKind::Recall, status_payload("failed", &o.objective), ctx);
            let level = sel.strategy.level;
            let ix = self.ix();
            let adapted = sel.recalled.and_then(|ep| self.memory.adapt(ep, &unit, &o.objective, &ix, &[]).ok());
            let mut ok = true;
            if let Some(ad) = adapted {
                self.fire_named("analogy");
                let label = self.memory.episode(ad.episode).map(|e| e.label()).unwrap_or_default();
                self.trace(format!("RECALL [^EPISODE.{}: {}]", ad.episode.0, label.to_uppercase()));
                for (from, to) in &ad.map.agents {
                    self.trace(format!("CORRESPONDENCE {} -> {}", from.as_str().to_uppercase(), to.as_str().to_uppercase()));
                }
                self.adaptations.push(ad.clone());
                for (kind, c) in ad.steps.iter().skip(1) {
                    if *kind != NodeKind::Mental || !ok {
                        continue;
                    }
                    if c.atom_arg(0) != Some(&me) {
                        self.say(&concept_of("active-goal", vec![atom(&me), wrap(c)]));
                        ok = self.achieve(c, ctx, level, Narration { active: false, assumptions: true });
                        if ok {
                            self.scene(EventKind::GoalChange, status_payload("succeeded", c), ctx);
                        }
                    } else {
                        ok = self.achieve(c, ctx, level, Narration { active: false, assumptions: false });
                    }
                }
            } else {
                let Some(def) = self.domain.plot_units.iter().find(|d| d.name == unit).cloned() else { continue };
                let mut b_map = Bindings::new();
                b_map.insert(Symbol::new("a"), atom(&me));
                b_map.insert(Symbol::new("b"), atom(&b));
                let obj = self
                    .causes
                    .get(&o.id)
                    .and_then(|cause| cause.concept_arg(2))
                    .map(|x| swap_agents(x))
                    .unwrap_or_else(|| o.objective.clone());
                b_map.insert(Symbol::new("obj"), wrap(&obj));
                let steps = match def.skeleton(&b_map) {
                    Ok(s) => s,
                    Err(e) => {
                        self.error(e.to_string());
                        continue;
                    }
                };
                for step in steps {
                    let (NodeKind::Mental, Some(t)) = (step.kind, step.template) else { continue };
                    if !ok {
                        break;
                    }
                    if step.agent != me {
                        self.say(&concept_of("active-goal", vec![atom(&me), wrap(&t)]));
                        ok = self.achieve(&t, ctx, level, Narration { active: true, assumptions: false });
                        if ok {
                            self.scene(EventKind::GoalChange, status_payload("succeeded", &t), ctx);
                        }
                    } else {
                        ok = self.achieve(&t, ctx, level, Narration { active: true, assumptions: false });
                    }
                }
            }
            if !ok {
                self.finish_goal(gid, GoalStatus::Failed, None);
                self.drop_context(ctx);
                continue;
            }
            self.scene(EventKind::GoalChange, status_payload("succeeded", &objective), ctx);
            let done = self.finish_goal(gid, GoalStatus::Succeeded, None);
            let ev = self.judge(idx, &sel.strategy, Some(&o));
            if ev.status != GoalStatus::Succeeded {
                self.drop_context(ctx);
                continue;
            }
            self.control_goals[idx].status = GoalStatus::Succeeded;
            let mut felt: Vec<EmotionRecord> = self.emotions.get(self.control_goals[idx].emotion).cloned().into_iter().collect();
            if let Some(done) = &done {
                let rec = EmotionRecord {
                    id: EmotionId(0),
                    kind: EmotionKind::PosAffect,
                    valence: 1,
                    intensity: self.emotions.config().success,
                    target: None,
                    source: Some(done.id),
                    situation: None,
                    imagined: true,
                    cycle: self.cycle,
                };
                let id = self.activate_emotion(rec);
                felt.extend(self.emotions.get(id).cloned());
            }
            let outcomes = self.imagined_outcomes(ctx);
            let scenario = self.scenario.clone();
            self.store_episode(Reality::Imagined, scenario, outcomes, felt);
            return;
        }
    }

    fn reverse_failure(&mut self, idx: usize) {
        let Some(o) = self.cg_outcome(idx) else { return };
        let g = o.objective.clone();
        let me = self.domain.self_agent.clone();
        let how = Narration { active: true, assumptions: false };
        let mut tried = BTreeSet::new();
        while let Some(sel) = self.choose(idx, &[], &tried, None) {
            tried.insert(sel.strategy.name.clone());
            self.emit_control(idx);
            let level = sel.strategy.level;
            let Some(ctx) = self.spawn() else { return };
            let Some(gid) = self.linked_goal(idx, &g, ctx) else { return };
            self.scene(EventKind::Recall, status_payload("failed", &g), ctx);
            self.say(&concept_of("active-goal", vec![atom(&me), wrap(&g)]));
            self.scene(EventKind::GoalChange, status_payload("active", &g), ctx);
            let rule = self
                .domain
                .planner
                .rules
                .iter()
                .find(|r| !r.primitive && unify(&r.goal, &g).is_some())
                .map(|r| (r.name.clone(), unify(&r.goal, &g).unwrap_or_default()));
            let learned: Vec<StrategyRecord> = rule
                .as_ref()
                .map(|(name, _)| self.memory.strategies_for(name).cloned().collect())
                .unwrap_or_default();
            let mut situation = None;
            for s in &learned {
                let b = rule.as_ref().map(|(_, b)| b.clone()).unwrap_or_default();
                let condition = s.condition.substitute(&b);
                let pre = s.precondition.substitute(&b);
                if !condition.is_ground() || self.wm.provable(&pre, ctx, &self.domain.planner.derive) {
                    continue;
                }
                self.trace(format!("CONDITIONAL PRECONDITION [{}] WHEN [{}]", upper(&pre), upper(&condition)));
                let temporary = !self.wm.holds(&condition, ctx);
                if temporary {
                    let _ = self.wm.assert_entry(condition.clone(), ctx);
                }
                self.achieve(&pre, ctx, level, how);
                if temporary {
                    let _ = self.wm.retract(&condition, ctx);
                }
                self.flush_wm();
                situation = Some(condition);
            }
            let mut req = PlanRequest::new(g.clone(), level);
            req.shuffle = self.cfg.shuffle;
            let Some(res) = self.plan(ctx, &req) else { return };
            match res.outcome {
                PlanOutcome::Succeeded => {
                    self.adopt(&res, ctx, how);
                    self.scene(EventKind::GoalChange, status_payload("succeeded", &g), ctx);
                    self.finish_goal(gid, GoalStatus::Succeeded, None);
                }
                PlanOutcome::Loop if learned.is_empty() => {
                    self.learn_from_loop(idx, gid, ctx, &res);
                    return;
                }
                _ => {
                    self.narrate(&res.events, ctx, how);
                    self.finish_goal(gid, GoalStatus::Failed, None);
                    self.drop_context(ctx);
                    continue;
                }
            }
            let ev = self.judge(idx, &sel.strategy, Some(&o));
            if ev.status != GoalStatus::Succeeded {
                self.drop_context(ctx);
                continue;
            }
            self.succeed(idx, &o);
            let report = assess(&self.scenario, &self.wm, ctx, &me);
            if let Some(other) = &report.dampen_against {
                self.say(&concept_of("dampening", vec![atom(&me), atom(other)]));
            }
            let outcomes = self.imagined_outcomes(ctx);
            let scenario = self.scenario.clone();
            let source = self.store_episode(Reality::Imagined, scenario, outcomes, Vec::new());
            let first_act = self
                .scenario
                .iter()
                .find(|e| e.kind == EventKind::Action && e.payload.atom_arg(0) == Some(&me))
                .map(|e| e.payload.clone());
            if let (true, Some(situation), Some(action), Some(source)) = (report.realistic, situation, first_act, source) {
                self.trace(format!("FUTURE PLAN [{}] WHEN [{}]", upper(&action), upper(&situation)));
                self.memory.add_future_plan(FuturePlanRecord { situation, action, source });
            }
            return;
        }
    }

    /// The goal could not be reached because planning went in a circle:
    /// remember which precondition should have been achieved first.
    fn learn_from_loop(&mut self, idx: usize, gid: GoalId, ctx: ContextId, res: &PlanResult) {
        let how = Narration { active: true, assumptions: false };
        self.narrate(&res.events, ctx, how);
        let Some(info) = res.loop_info.clone() else { return };
        let g = self.goals.goal(gid).map(|g| g.objective.clone()).unwrap_or_else(|_| info.repeated.clone());
        self.trace(format!("GOAL FAILURE [^G.{}: ACTIVE ({})], PLANNING LOOP", gid.0, upper(&info.repeated)));
        self.finish_goal(gid, GoalStatus::Failed, None);
        self.scene(EventKind::GoalChange, status_payload("failed", &g), ctx);
        self.fire_named("loop-learning");
        let learned = match self.domain.planner.learn_conditional(res) {
            Ok(l) => l,
            Err(e) => {
                self.error(e.to_string());
                return;
            }
        };
        let outcomes = self.imagined_outcomes(ctx);
        let scenario = self.scenario.clone();
        let source = self.store_episode(Reality::Imagined, scenario, outcomes, Vec::new()).unwrap_or(EpisodeId(0));
        self.memory.add_strategy(StrategyRecord {
            rule: learned.rule.clone(),
            condition: learned.condition.clone(),
            precondition: learned.precondition.clone(),
            source,
        });
        self.trace(format!("INDEXING UNDER GOAL [^G.{}: {}]", gid.0, upper(&g)));
        self.trace(format!(" PLAN [{}]", learned.rule.as_str().to_uppercase()));
        self.trace(format!(" CONDITION [{}]", upper(&learned.condition)));
        self.trace(format!(" PRECONDITION [{}]", upper(&learned.precondition)));
        self.control_goals[idx].status = GoalStatus::Failed;
    }

    /// Imagine a real success going the other way, then how it could
    /// still have been reached.
    fn reverse_success(&mut self, idx: usize) {
        let Some(o) = self.cg_outcome(idx) else { return };
        let g = o.objective.clone();
        let mut tried = BTreeSet::new();
        while let Some(sel) = self.choose(idx, &[], &tried, None) {
            tried.insert(sel.strategy.name.clone());
            self.emit_control(idx);
            let Some(ctx) = self.spawn() else { return };
            let Some(gid) = self.linked_goal(idx, &g, ctx) else { return };
            self.scene(EventKind::Recall, status_payload("succeeded", &g), ctx);
            let _ = self.wm.retract(&g, ctx);
            self.flush_wm();
            let reached = self.achieve(&g, ctx, sel.strategy.level, Narration { active: true, assumptions: true });
            let status = if reached { GoalStatus::Succeeded } else { GoalStatus::Failed };
            if reached {
                self.scene(EventKind::GoalChange, status_payload("succeeded", &g), ctx);
            }
            self.finish_goal(gid, status, None);
            let ev = self.judge(idx, &sel.strategy, Some(&o));
            if ev.status == GoalStatus::Succeeded {
                self.control_goals[idx].status = GoalStatus::Succeeded;
                let outcomes = self.imagined_outcomes(ctx);
                let scenario = self.scenario.clone();
                self.store_episode(Reality::Imagined, scenario, outcomes, Vec::new());
                return;
            }
            self.drop_context(ctx);
        }
    }

    /// Rehearse a feared situation and what it would threaten.
    fn prepare(&mut self, idx: usize) {
        let ControlTarget::Situation(situation) = self.control_goals[idx].target.clone() else { return };
        let mut tried = BTreeSet::new();
        while let Some(sel) = self.choose(idx, &[], &tried, None) {
            tried.insert(sel.strategy.name.clone());
            self.emit_control(idx);
            let Some(ctx) = self.spawn() else { return };
            self.assert_fact(situation.clone(), ctx);
            self.scene(EventKind::Action, situation.clone(), ctx);
            self.say(&situation);
            self.elaborate(ctx, sel.strategy.level, &situation);
            let ev = self.judge(idx, &sel.strategy, None);
            if ev.status == GoalStatus::Succeeded {
                self.control_goals[idx].status = GoalStatus::Succeeded;
                let outcomes = self.imagined_outcomes(ctx);
                let scenario = self.scenario.clone();
                self.store_episode(Reality::Imagined, scenario, outcomes, Vec::new());
                return;
            }
            self.drop_context(ctx);
        }
    }

    /// `(threat S)` inputs: fear of the future situation `S`.
    fn threat(&mut self, input: &Concept) {
        let Some(situation) = input.concept_arg(0).cloned() else { return };
        let importance = self.goals.tree().importance_of(situation.head()).unwrap_or(0.5);
        let e = appraise_threat(situation, importance, self.cycle, self.emotions.config());
        self.pending.push_back(Group { banner: "fear", outcome: None, emotions: vec![e], store_episode: false });
    }
}

/// `(date debra me)` as seen from the other side: `(date me debra)`.
fn swap_agents(c: &Concept) -> Concept {
    let args: Vec<Term> = c.args().cloned().collect();
    if args.len() != 2 {
        return c.clone();
    }
    Concept::new(c.head().as_str(), vec![args[1].clone(), args[0].clone()])
}

impl Session {
    /// Everything an observer may want to inspect, as one JSON value.
    pub fn snapshot(&self) -> Value {
        let wm: Vec<Value> = self
            .wm
            .entries()
            .map(|e| self.entry_payload(e.id, &e.concept, e.context, e.activation))
            .collect();
        let goals: Vec<Value> = self
            .goals
            .goals()
            .iter()
            .map(|g| {
                json!({
                    "id": g.id.0,
                    "objective": g.objective.to_string(),
                    "kind": g.kind.to_string(),
                    "status": g.status.to_string(),
                    "importance": g.importance,
                    "context": g.context.0,
                })
            })
            .collect();
        let emotions: Vec<Value> = self
            .emotions
            .all()
            .iter()
            .map(|e| {
                json!({
                    "id": e.id.0,
                    "kind": e.kind.symbol(),
                    "intensity": e.intensity,
                    "target": e.target.as_ref().map(|t| t.to_string()),
                    "live": self.emotions.is_live(e.id),
                })
            })
            .collect();
        let control: Vec<Value> = self
            .control_goals
            .iter()
            .map(|c| {
                json!({
                    "kind": c.kind.symbol(),
                    "status": c.status.to_string(),
                    "strategy": c.strategy.as_ref().map(|s| s.to_string()),
                    "intensity": c.intensity,
                })
            })
            .collect();
        let episodes: Vec<Value> = self
            .memory
            .episodes()
            .iter()
            .map(|e| {
                json!({
                    "id": e.id.0,
                    "label": e.label(),
                    "reality": e.reality.symbol(),
                    "events": e.events.len(),
                    "plot_units": e.plot_units.iter().map(|u| u.to_string()).collect::<Vec<_>>(),
                })
            })
            .collect();
        let strategies: Vec<Value> = self
            .memory
            .strategies()
            .iter()
            .map(|s| {
                json!({
                    "rule": s.rule.to_string(),
                    "condition": s.condition.to_string(),
                    "precondition": s.precondition.to_string(),
                })
            })
            .collect();
        json!({
            "mode": self.mode.symbol(),
            "cycle": self.cycle,
            "wm": wm,
            "goals": goals,
            "emotions": emotions,
            "control_goals": control,
            "episodes": episodes,
            "strategies": strategies,
        })
    }

    /// Write episodic memory, with anything learned, to `path`.
    pub fn save_memory(&self, path: &std::path::Path) -> Result<()> {
        self.memory.save_to(path)
    }
}

/// The console form of an event at `level`; `None` when the level hides
/// it.
pub fn render_event(ev: &SessionEvent, level: TraceLevel) -> Option<String> {
    let text = || ev.payload.as_str().map(str::to_string).unwrap_or_else(|| ev.payload.to_string());
    let field = |k: &str| ev.payload.get(k).map(|v| v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string()));
    let full = level == TraceLevel::Full;
    match ev.kind {
        EventType::Text => Some(text()),
        EventType::Error => Some(format!("ERROR: {}", text())),
        EventType::RuleFired if level >= TraceLevel::Banner => Some(text()),
        EventType::Mode if level >= TraceLevel::Banner => Some(format!("Mode? {}", text())),
        EventType::Cycle => None,
        _ if !full => None,
        EventType::WmAdd => Some(format!("ADD TO WM [^WM.{}: {}]", field("id")?, wm_text(&field("concept")?))),
        EventType::WmRemove => Some(format!("REMOVE FROM WM [^WM.{}: {}]", field("id")?, wm_text(&field("concept")?))),
        EventType::Goal => Some(format!(
            "GOAL [^G.{}: {} {} {}]",
            field("id")?,
            field("status")?.to_uppercase(),
            wm_text(&field("objective")?),
            field("kind")?.to_uppercase()
        )),
        EventType::Emotion => Some(format!(
            "EMOTION [^E.{}: {} {}]",
            field("id")?,
            field("kind")?.to_uppercase(),
            field("intensity")?
        )),
        EventType::ControlGoal => Some(format!(
            "CONTROL GOAL [{} {}]",
            field("kind")?.to_uppercase(),
            field("status")?.to_uppercase()
        )),
        EventType::ScenarioEvent => Some(format!(
            "SCENARIO [{}: {}]",
            field("kind")?.to_uppercase(),
            wm_text(&field("payload")?)
        )),
        EventType::Trace | EventType::Prompt => Some(text()),
        _ => None,
    }
}

fn wm_text(concept: &str) -> String {
    let inner = concept.strip_prefix('(').and_then(|s| s.strip_suffix(')')).unwrap_or(concept);
    inner.to_uppercase()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nuart_run() -> Session {
        let mut s = Session::nuart();
        s.run_script(Domain::nuart_script());
        s
    }

    fn banner_first_lines(s: &Session) -> Vec<String> {
        s.events()
            .iter()
            .filter(|e| e.kind == EventType::RuleFired)
            .filter_map(|e| e.text().and_then(|t| t.lines().nth(1)).map(|l| l.trim_start_matches(" IF   ").to_string()))
            .collect()
    }

    #[test]
    fn nuart_script_tells_the_story() {
        let s = nuart_run();
        let t = s.transcript();
        assert_eq!(t.first().map(String::as_str), Some("I tell Debra that I want her and me to go out on a date."));
        assert_eq!(t.last().map(String::as_str), Some("I tell Debra that I want to know her telephone number."));
        for line in ["I feel displeased.", "I feel a bit displeased.", "I am angry at Debra.", "I feel pleased."] {
            assert!(t.iter().any(|l| l == line), "missing {line}");
        }
        assert!(!s.events().iter().any(|e| e.kind == EventType::Error));
    }

    #[test]
    fn banners_fire_in_story_order() {
        let s = nuart_run();
        let got = banner_first_lines(&s);
        let want = [
            "self goal failure",
            "negative emotion associated with failure",
            "active indices match episode indices",
            "positive interpersonal theme with person and",
            "have a job and requirement violated",
            "working on a goal causes a p-goal to be activated",
            "failure of goal G and success of G leads",
            "control goal to rationalize goal failure succeeds",
            "person caused a self goal failure",
            "negative affect directed toward person",
            "recalled goal failure",
            "top-level goal failure from planning loop",
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn first_inputs_decay_between_rationalization_and_anger() {
        let s = nuart_run();
        let ev = s.events();
        let pos = |p: &dyn Fn(&SessionEvent) -> bool| ev.iter().position(|e| p(e)).unwrap();
        let calmer = pos(&|e| e.text() == Some("I feel a bit displeased."));
        let anger = pos(&|e| e.kind == EventType::RuleFired && e.text().unwrap().contains("activate anger"));
        let removed = |needle: &str| {
            ev.iter()
                .position(|e| e.kind == EventType::WmRemove && e.payload["concept"].as_str().unwrap().contains(needle))
                .unwrap()
        };
        for needle in ["(ptrans me organization)", "(person debra", "(near me debra)"] {
            let at = removed(needle);
            assert!(calmer < at && at < anger, "{needle} removed at {at}");
        }
    }

    #[test]
    fn persona_facts_never_decay() {
        let s = nuart_run();
        let real = s.wm().real();
        assert!(s.wm().holds(&crate::concept::c("(crush me debra)"), real));
    }

    #[test]
    fn rationalization_halves_the_affect() {
        let s = nuart_run();
        let neg = s.emotions().all().iter().find(|e| e.kind == EmotionKind::NegAffect).unwrap();
        assert!((neg.intensity - 0.4).abs() < 1e-9);
    }

    #[test]
    fn loop_is_learned_as_a_strategy() {
        let s = nuart_run();
        let st = &s.memory().strategies()[0];
        assert_eq!(st.rule.as_str(), "ask-out");
        assert_eq!(st.condition.head().as_str(), "vprox");
        assert_eq!(st.precondition.head().as_str(), "know");
        assert!(s.plan_outcomes().contains(&PlanOutcome::Loop));
    }

    #[test]
    fn bad_input_is_an_error_event() {
        let mut s = Session::nuart();
        s.submit("(near me");
        s.submit("Hello there.");
        let errors = s.events().iter().filter(|e| e.kind == EventType::Error).count();
        assert_eq!(errors, 2);
    }

    #[test]
    fn run_outside_daydreaming_is_refused() {
        let mut s = Session::nuart();
        s.set_mode(Mode::Performance);
        assert_eq!(s.run(None), 0);
        assert_eq!(s.events().last().unwrap().kind, EventType::Error);
    }

    #[test]
    fn run_with_nothing_to_do_is_quiescent() {
        let mut s = Session::nuart();
        assert!(s.is_quiescent());
        assert_eq!(s.run(None), 0);
        assert_eq!(s.events().last().unwrap().kind, EventType::Prompt);
    }

    #[test]
    fn cycle_limit_is_respected() {
        let mut s = Session::nuart();
        s.command("mode performance");
        s.command("You are near Debra Winger.");
        s.command("She tells you that she does not want her and you to go out on a date.");
        s.command("mode daydreaming");
        assert_eq!(s.run(Some(1)), 1);
        assert!(!s.is_quiescent());
    }

    #[test]
    fn raised_interrupt_stops_the_run() {
        let mut s = Session::nuart();
        s.command("mode performance");
        s.command("You are near Debra Winger.");
        s.command("She tells you that she does not want her and you to go out on a date.");
        s.command("mode daydreaming");
        s.interrupt_handle().store(true, Ordering::SeqCst);
        assert_eq!(s.run(None), 0);
        assert!(s.events().iter().any(|e| e.text() == Some("INTERRUPT...")));
    }

    #[test]
    fn inputs_wait_while_daydreaming() {
        let mut s = Session::nuart();
        s.submit("You are near Debra Winger.");
        assert!(s.transcript().is_empty());
        s.set_mode(Mode::Performance);
        assert_eq!(s.transcript(), vec!["I tell Debra that I want her and me to go out on a date."]);
    }

    #[test]
    fn threat_leads_to_preparation() {
        let mut s = Session::nuart();
        s.command("(threat (at me paris))");
        s.run(None);
        let cg = s.control_goals().iter().find(|c| c.kind == ControlKind::Preparation);
        assert_eq!(cg.map(|c| c.status), Some(GoalStatus::Succeeded));
        assert!(s.emotions().all().iter().any(|e| e.kind == EmotionKind::Fear));
    }

    #[test]
    fn same_script_same_events() {
        let a = serde_json::to_string(nuart_run().events()).unwrap();
        let b = serde_json::to_string(nuart_run().events()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn quiet_level_shows_only_text_and_errors() {
        let s = nuart_run();
        let quiet: Vec<String> = s.events().iter().filter_map(|e| render_event(e, TraceLevel::Quiet)).collect();
        assert_eq!(quiet, s.transcript());
        let banner: Vec<String> = s.events().iter().filter_map(|e| render_event(e, TraceLevel::Banner)).collect();
        assert!(banner.iter().any(|l| l.starts_with("Mode? ")));
        assert!(!banner.iter().any(|l| l.starts_with("ADD TO WM")));
    }

    #[test]
    fn snapshot_lists_state() {
        let s = nuart_run();
        let snap = s.snapshot();
        assert_eq!(snap["mode"], "performance");
        assert!(snap["episodes"].as_array().unwrap().len() >= 4);
        assert_eq!(snap["strategies"].as_array().unwrap().len(), 1);
    }
}
