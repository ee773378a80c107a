//! Scenario generation as planning: depth-first backward chaining over plan
//! rules, with relaxation of unprovable preconditions at graded levels,
//! planning-loop detection, learned conditional preconditions and realism
//! assessment.
//!
//! The search works on a private copy of working memory and only hands the
//! surviving state back to the caller, so a failed branch never leaks facts
//! into the context it was planning in.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::concept::{unify_with, Bindings, Concept, Symbol, Term};
use crate::error::{Error, Result};
use crate::store::{ContextId, DeriveRule, WorkingMemory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelaxLevel {
    None,
    Low,
    High,
}

impl RelaxLevel {
    pub fn parse(s: &str) -> Option<RelaxLevel> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Some(RelaxLevel::None),
            "low" => Some(RelaxLevel::Low),
            "high" => Some(RelaxLevel::High),
            _ => None,
        }
    }

    pub const ALL: [RelaxLevel; 3] = [RelaxLevel::None, RelaxLevel::Low, RelaxLevel::High];
}

impl fmt::Display for RelaxLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelaxLevel::None => "none",
            RelaxLevel::Low => "low",
            RelaxLevel::High => "high",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintClass {
    OtherBehavior,
    SelfAttribute,
    Physical,
    Social,
}

impl ConstraintClass {
    pub fn symbol(self) -> &'static str {
        match self {
            ConstraintClass::OtherBehavior => "other-behavior",
            ConstraintClass::SelfAttribute => "self-attribute",
            ConstraintClass::Physical => "physical",
            ConstraintClass::Social => "social",
        }
    }

    pub fn parse(s: &str) -> Option<ConstraintClass> {
        match s {
            "other-behavior" => Some(ConstraintClass::OtherBehavior),
            "self-attribute" => Some(ConstraintClass::SelfAttribute),
            "physical" => Some(ConstraintClass::Physical),
            "social" => Some(ConstraintClass::Social),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelaxationRule {
    pub class: ConstraintClass,
    pub pattern: Concept,
    pub min_level: RelaxLevel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalPrecondition {
    pub condition: Concept,
    pub precondition: Concept,
}

/// A plan rule. Primitive rules describe actions: their goal is the action
/// concept itself, which is performed (and narrated) once the
/// preconditions hold.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanRule {
    pub name: Symbol,
    pub goal: Concept,
    pub preconditions: Vec<Concept>,
    pub subgoals: Vec<Concept>,
    pub effects: Vec<Concept>,
    pub conditional: Vec<ConditionalPrecondition>,
    pub primitive: bool,
}

impl PlanRule {
    pub fn new(name: &str, goal: Concept) -> Self {
        PlanRule {
            name: Symbol::new(name),
            goal,
            preconditions: Vec::new(),
            subgoals: Vec::new(),
            effects: Vec::new(),
            conditional: Vec::new(),
            primitive: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Action,
    GoalChange,
    Assumption,
    Emotion,
    Recall,
}

impl EventKind {
    pub fn symbol(self) -> &'static str {
        match self {
            EventKind::Action => "action",
            EventKind::GoalChange => "goal-change",
            EventKind::Assumption => "assumption",
            EventKind::Emotion => "emotion",
            EventKind::Recall => "recall",
        }
    }

    pub fn parse(s: &str) -> Option<EventKind> {
        Some(match s {
            "action" => EventKind::Action,
            "goal-change" => EventKind::GoalChange,
            "assumption" => EventKind::Assumption,
            "emotion" => EventKind::Emotion,
            "recall" => EventKind::Recall,
            _ => return None,
        })
    }
}

/// Unit of daydream content. GOAL-CHANGE payloads are `(active G)`,
/// `(succeeded G)`, `(failed G)` or `(await G)`; ASSUMPTION payloads are
/// `(assume <class> C)`; RECALL payloads wrap a recalled outcome the same
/// way GOAL-CHANGE does.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    pub kind: EventKind,
    pub payload: Concept,
    pub context: ContextId,
    pub seq: u64,
}

impl ScenarioEvent {
    pub fn new(kind: EventKind, payload: Concept, context: ContextId) -> Self {
        ScenarioEvent { kind, payload, context, seq: 0 }
    }

    /// `(status G)` for GOAL-CHANGE and RECALL events.
    pub fn goal_change(&self) -> Option<(&str, &Concept)> {
        match self.kind {
            EventKind::GoalChange | EventKind::Recall => {
                self.payload.concept_arg(0).map(|g| (self.payload.head().as_str(), g))
            }
            _ => None,
        }
    }

    pub fn assumption(&self) -> Option<(ConstraintClass, &Concept)> {
        if self.kind != EventKind::Assumption {
            return None;
        }
        let class = ConstraintClass::parse(self.payload.atom_arg(0)?.as_str())?;
        Some((class, self.payload.concept_arg(1)?))
    }
}

pub fn assumption_payload(class: ConstraintClass, c: &Concept) -> Concept {
    Concept::new("assume", vec![Term::atom(class.symbol()), Term::Concept(c.clone())])
}

pub fn status_payload(status: &str, g: &Concept) -> Concept {
    Concept::new(status, vec![Term::Concept(g.clone())])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanOutcome {
    Succeeded,
    Failed,
    Loop,
    Conflict,
    Awaiting,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanRequest {
    pub goal: Concept,
    pub level: RelaxLevel,
    pub budget: usize,
    pub max_depth: usize,
    /// Performance mode: stop at the first other-agent behaviour instead of
    /// assuming it.
    pub awaiting: bool,
    /// Requirements that must stay provable; an action breaking one aborts
    /// the search with a conflict.
    pub protected: Vec<Concept>,
    /// Shuffle rule order with this seed.
    pub shuffle: Option<u64>,
}

impl PlanRequest {
    pub fn new(goal: Concept, level: RelaxLevel) -> Self {
        PlanRequest {
            goal,
            level,
            budget: 200,
            max_depth: 12,
            awaiting: false,
            protected: Vec::new(),
            shuffle: None,
        }
    }
}

/// One frame of the goal stack: the goal and the rule expanding it.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub goal: Concept,
    pub rule: Symbol,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopInfo {
    pub frames: Vec<Frame>,
    pub repeated: Concept,
    /// Index in `frames` of the ancestor the repeated goal unified with.
    pub ancestor: usize,
}

#[derive(Clone, Debug)]
pub struct PlanResult {
    pub outcome: PlanOutcome,
    /// Surviving events on success, the whole attempt log otherwise.
    pub events: Vec<ScenarioEvent>,
    pub steps: usize,
    pub diagnostic: Option<String>,
    pub loop_info: Option<LoopInfo>,
    pub conflict: Option<Concept>,
    pub awaiting: Vec<Concept>,
    pub bindings: Bindings,
    /// Working memory after the surviving branch (unchanged input on
    /// failure).
    pub wm: WorkingMemory,
}

impl PlanResult {
    pub fn succeeded(&self) -> bool {
        matches!(self.outcome, PlanOutcome::Succeeded | PlanOutcome::Awaiting)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RealismReport {
    pub assumption_counts: BTreeMap<String, usize>,
    pub realistic: bool,
    /// Higher-status agent an assumption was made about.
    pub dampen_against: Option<Symbol>,
}

/// True iff `goal` unifies with one of its proper ancestors.
pub fn detect_loop(ancestors: &[Concept], goal: &Concept) -> bool {
    ancestors.iter().any(|a| unify_with(a, goal, &Bindings::new()).is_some())
}

/// What `learn_conditional` attached to which rule.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnedConditional {
    pub rule: Symbol,
    pub condition: Concept,
    pub precondition: Concept,
}

#[derive(Clone, Debug, Default)]
pub struct Planner {
    pub rules: Vec<PlanRule>,
    pub relaxations: Vec<RelaxationRule>,
    pub derive: Vec<DeriveRule>,
}

#[derive(Clone, Debug)]
enum Item {
    Achieve { goal: Concept, depth: usize, stack: Vec<Frame> },
    Apply { action: Option<Concept>, effects: Vec<Concept> },
}

#[derive(Clone)]
struct State {
    wm: WorkingMemory,
    events: Vec<ScenarioEvent>,
}

struct Search<'a> {
    planner: &'a Planner,
    req: &'a PlanRequest,
    ctx: ContextId,
    steps: usize,
    seq: u64,
    renames: usize,
    log: Vec<ScenarioEvent>,
    loop_info: Option<LoopInfo>,
    conflict: Option<Concept>,
    exhausted: bool,
    halted: bool,
    awaiting: Vec<Concept>,
    rng: Option<ChaCha8Rng>,
}

impl<'a> Search<'a> {
    fn aborted(&self) -> bool {
        self.exhausted || self.conflict.is_some()
    }

    fn emit(&mut self, st: &mut State, kind: EventKind, payload: Concept) {
        self.seq += 1;
        let ev = ScenarioEvent { kind, payload, context: self.ctx, seq: self.seq };
        st.events.push(ev.clone());
        self.log.push(ev);
    }

    fn solve(&mut self, agenda: &[Item], b: Bindings, st: State) -> Option<(Bindings, State)> {
        if self.aborted() {
            return None;
        }
        let Some((first, rest)) = agenda.split_first() else {
            return Some((b, st));
        };
        match first {
            Item::Apply { action, effects } => self.apply(action.as_ref(), effects, rest, b, st),
            Item::Achieve { goal, depth, stack } => self.achieve(goal, *depth, stack, rest, b, st),
        }
    }

    fn apply(
        &mut self,
        action: Option<&Concept>,
        effects: &[Concept],
        rest: &[Item],
        b: Bindings,
        mut st: State,
    ) -> Option<(Bindings, State)> {
        let action = action.map(|a| a.substitute(&b));
        let effects: Vec<Concept> = effects.iter().map(|e| e.substitute(&b)).filter(|e| e.is_ground()).collect();
        let facts: Vec<&Concept> = action
            .iter()
            .chain(effects.iter().filter(|e| !is_outcome_effect(e)))
            .filter(|c| c.is_ground())
            .collect();
        if !self.req.protected.is_empty() {
            let mut probe = st.wm.clone();
            for f in &facts {
                let _ = probe.assert_entry((*f).clone(), self.ctx);
            }
            for p in &self.req.protected {
                let before = st.wm.provable(p, self.ctx, &self.planner.derive);
                if before && !probe.provable(p, self.ctx, &self.planner.derive) {
                    self.conflict = Some(p.clone());
                    return None;
                }
            }
        }
        if let Some(a) = action.filter(|a| a.is_ground()) {
            self.emit(&mut st, EventKind::Action, a.clone());
            let _ = st.wm.assert_entry(a, self.ctx);
        }
        for e in effects {
            if is_outcome_effect(&e) {
                let status = if e.head().as_str() == "fails" { "failed" } else { "succeeded" };
                let g = e.concept_arg(0).cloned().unwrap_or_else(|| e.clone());
                self.emit(&mut st, EventKind::GoalChange, status_payload(status, &g));
            } else {
                let _ = st.wm.assert_entry(e, self.ctx);
            }
        }
        self.solve(rest, b, st)
    }

    fn candidates(&mut self, g: &Concept, b: &Bindings) -> Vec<(usize, Bindings, PlanRule)> {
        let mut out = Vec::new();
        for (i, rule) in self.planner.rules.iter().enumerate() {
            self.renames += 1;
            let suffix = format!("_r{}", self.renames);
            let renamed = rename_rule(rule, &suffix);
            if let Some(rb) = unify_with(&renamed.goal, g, b) {
                out.push((i, rb, renamed));
            }
        }
        if let Some(rng) = self.rng.as_mut() {
            out.shuffle(rng);
        }
        out
    }

    fn achieve(
        &mut self,
        goal: &Concept,
        depth: usize,
        stack: &[Frame],
        rest: &[Item],
        b: Bindings,
        mut st: State,
    ) -> Option<(Bindings, State)> {
        self.steps += 1;
        if self.steps > self.req.budget {
            self.exhausted = true;
            return None;
        }
        let g = goal.substitute(&b);
        if depth > self.req.max_depth {
            return None;
        }
        let proofs = st.wm.prove(&g, self.ctx, &self.planner.derive, &b);
        if !proofs.is_empty() {
            for pb in proofs {
                if let Some(r) = self.solve(rest, pb, st.clone()) {
                    return Some(r);
                }
                if self.aborted() {
                    return None;
                }
            }
            return None;
        }
        let candidates = self.candidates(&g, &b);
        let compound = candidates.iter().any(|(_, _, r)| !r.primitive);
        let ancestors: Vec<Concept> = stack.iter().map(|f| f.goal.clone()).collect();
        if let Some(i) = ancestors.iter().position(|a| unify_with(a, &g, &Bindings::new()).is_some()) {
            if compound {
                self.emit(&mut st, EventKind::GoalChange, status_payload("active", &g));
            }
            if self.loop_info.is_none() {
                self.loop_info = Some(LoopInfo { frames: stack.to_vec(), repeated: g.clone(), ancestor: i });
            }
            return None;
        }
        if compound && depth > 0 {
            self.emit(&mut st, EventKind::GoalChange, status_payload("active", &g));
        }
        for (_, rb, rule) in candidates {
            let mut items = Vec::new();
            let mut child_stack = stack.to_vec();
            child_stack.push(Frame { goal: g.clone(), rule: rule.name.clone() });
            let child = |c: &Concept| Item::Achieve { goal: c.clone(), depth: depth + 1, stack: child_stack.clone() };
            for cp in &rule.conditional {
                let cond = cp.condition.substitute(&rb);
                let foreseeable = st.wm.provable(&cond, self.ctx, &self.planner.derive)
                    || rule.subgoals.iter().any(|s| unify_with(s, &cond, &rb).is_some());
                if foreseeable {
                    items.push(child(&cp.precondition));
                }
            }
            items.extend(rule.preconditions.iter().map(&child));
            items.extend(rule.subgoals.iter().map(&child));
            items.push(Item::Apply {
                action: if rule.primitive { Some(rule.goal.clone()) } else { None },
                effects: rule.effects.clone(),
            });
            items.extend(rest.iter().cloned());
            if let Some(r) = self.solve(&items, rb, st.clone()) {
                return Some(r);
            }
            if self.aborted() {
                return None;
            }
        }
        if !g.is_ground() {
            return None;
        }
        if self.req.awaiting && self.planner.awaitable(&g) {
            self.emit(&mut st, EventKind::GoalChange, status_payload("await", &g));
            self.awaiting.push(g);
            self.halted = true;
            return Some((b, st));
        }
        if let Some(class) = self.planner.relax(&g, self.req.level) {
            self.emit(&mut st, EventKind::Assumption, assumption_payload(class, &g));
            let _ = st.wm.assert_entry(g, self.ctx);
            return self.solve(rest, b, st);
        }
        None
    }
}

fn is_outcome_effect(c: &Concept) -> bool {
    matches!(c.head().as_str(), "fails" | "succeeds")
}

fn rename_rule(rule: &PlanRule, suffix: &str) -> PlanRule {
    let r = |c: &Concept| c.rename_vars(suffix);
    PlanRule {
        name: rule.name.clone(),
        goal: r(&rule.goal),
        preconditions: rule.preconditions.iter().map(r).collect(),
        subgoals: rule.subgoals.iter().map(r).collect(),
        effects: rule.effects.iter().map(r).collect(),
        conditional: rule
            .conditional
            .iter()
            .map(|cp| ConditionalPrecondition { condition: r(&cp.condition), precondition: r(&cp.precondition) })
            .collect(),
        primitive: rule.primitive,
    }
}

impl Planner {
    pub fn new(rules: Vec<PlanRule>, relaxations: Vec<RelaxationRule>, derive: Vec<DeriveRule>) -> Self {
        Planner { rules, relaxations, derive }
    }

    /// Class of the first relaxation rule licensing `precondition` at
    /// `level`. Nothing is ever relaxed at NONE.
    pub fn relax(&self, precondition: &Concept, level: RelaxLevel) -> Option<ConstraintClass> {
        if level == RelaxLevel::None || !precondition.is_ground() {
            return None;
        }
        self.relaxations
            .iter()
            .find(|r| r.min_level <= level && unify_with(&r.pattern, precondition, &Bindings::new()).is_some())
            .map(|r| r.class)
    }

    /// The ASSUMPTION event `relax` would produce.
    pub fn relax_event(&self, precondition: &Concept, level: RelaxLevel, ctx: ContextId) -> Option<ScenarioEvent> {
        self.relax(precondition, level)
            .map(|class| ScenarioEvent::new(EventKind::Assumption, assumption_payload(class, precondition), ctx))
    }

    /// Behaviour of another agent: something performance mode waits for.
    pub fn awaitable(&self, c: &Concept) -> bool {
        self.relaxations.iter().any(|r| {
            r.class == ConstraintClass::OtherBehavior && unify_with(&r.pattern, c, &Bindings::new()).is_some()
        })
    }

    pub fn rule(&self, name: &Symbol) -> Option<&PlanRule> {
        self.rules.iter().find(|r| &r.name == name)
    }

    pub fn run(&self, wm: &WorkingMemory, ctx: ContextId, req: &PlanRequest) -> Result<PlanResult> {
        if req.budget == 0 {
            return Err(Error::Contract("planning budget must be positive".into()));
        }
        wm.context(ctx)?;
        let mut search = Search {
            planner: self,
            req,
            ctx,
            steps: 0,
            seq: 0,
            renames: 0,
            log: Vec::new(),
            loop_info: None,
            conflict: None,
            exhausted: false,
            halted: false,
            awaiting: Vec::new(),
            rng: req.shuffle.map(ChaCha8Rng::seed_from_u64),
        };
        let agenda = [Item::Achieve { goal: req.goal.clone(), depth: 0, stack: Vec::new() }];
        let start = State { wm: wm.clone(), events: Vec::new() };
        let found = search.solve(&agenda, Bindings::new(), start);
        let steps = search.steps;
        Ok(match found {
            Some((bindings, st)) => PlanResult {
                outcome: if search.halted { PlanOutcome::Awaiting } else { PlanOutcome::Succeeded },
                events: st.events,
                steps,
                diagnostic: None,
                loop_info: search.loop_info,
                conflict: None,
                awaiting: search.awaiting,
                bindings,
                wm: st.wm,
            },
            None => {
                let (outcome, diagnostic) = if let Some(p) = &search.conflict {
                    (PlanOutcome::Conflict, Some(format!("action would violate {}", p)))
                } else if search.exhausted {
                    (PlanOutcome::Failed, Some(format!("budget of {} steps exhausted", req.budget)))
                } else if let Some(l) = &search.loop_info {
                    (PlanOutcome::Loop, Some(format!("planning loop on {}", l.repeated)))
                } else {
                    (PlanOutcome::Failed, Some(format!("no plan for {}", req.goal)))
                };
                PlanResult {
                    outcome,
                    events: search.log,
                    steps,
                    diagnostic,
                    loop_info: search.loop_info,
                    conflict: search.conflict,
                    awaiting: Vec::new(),
                    bindings: Bindings::new(),
                    wm: wm.clone(),
                }
            }
        })
    }

    /// After a LOOP failure, attach to the top goal's rule the condition
    /// under which the missing precondition should be achieved first.
    pub fn learn_conditional(&mut self, result: &PlanResult) -> Result<LearnedConditional> {
        let info = match (&result.outcome, &result.loop_info) {
            (PlanOutcome::Loop, Some(info)) if !info.frames.is_empty() => info,
            _ => return Err(Error::Contract("learn_conditional needs a LOOP outcome".into())),
        };
        let condition = info.frames[info.ancestor].goal.clone();
        let precondition =
            info.frames.get(info.ancestor + 1).map(|f| f.goal.clone()).unwrap_or_else(|| info.repeated.clone());
        let top = &info.frames[0];
        let rule = self
            .rules
            .iter_mut()
            .find(|r| r.name == top.rule)
            .ok_or_else(|| Error::Contract(format!("no plan rule {}", top.rule)))?;
        let b = unify_with(&rule.goal, &top.goal, &Bindings::new())
            .ok_or_else(|| Error::Contract(format!("rule {} does not match {}", rule.name, top.goal)))?;
        let (mut condition, mut precondition) = (condition, precondition);
        for (var, value) in crate::concept::resolve(&b) {
            if let Term::Atom(a) = value {
                condition = condition.replace_atom(&a, &Term::Var(var.clone()));
                precondition = precondition.replace_atom(&a, &Term::Var(var));
            }
        }
        let cp = ConditionalPrecondition { condition: condition.clone(), precondition: precondition.clone() };
        if !rule.conditional.contains(&cp) {
            rule.conditional.push(cp);
        }
        Ok(LearnedConditional { rule: rule.name.clone(), condition, precondition })
    }

    /// Attach a conditional precondition learned earlier (loaded memory).
    pub fn attach(&mut self, rule: &Symbol, condition: Concept, precondition: Concept) -> Result<()> {
        let r = self
            .rules
            .iter_mut()
            .find(|r| &r.name == rule)
            .ok_or_else(|| Error::Validation(format!("strategy refers to unknown plan rule {}", rule)))?;
        let cp = ConditionalPrecondition { condition, precondition };
        if !r.conditional.contains(&cp) {
            r.conditional.push(cp);
        }
        Ok(())
    }
}

/// Count assumptions per class. Dampening is warranted when an assumption
/// concerns an agent ranked above `self_agent` by `(status-rank agent n)`.
pub fn assess(
    events: &[ScenarioEvent],
    wm: &WorkingMemory,
    ctx: ContextId,
    self_agent: &Symbol,
) -> RealismReport {
    let rank = |a: &Symbol| -> Option<f64> {
        let pat = Concept::new("status-rank", vec![Term::Atom(a.clone()), Term::var("n")]);
        wm.query(&pat, ctx).first().and_then(|(e, _)| e.concept.arg(1).and_then(|t| t.as_number()))
    };
    let mut report = RealismReport::default();
    for (class, c) in events.iter().filter_map(|e| e.assumption()) {
        *report.assumption_counts.entry(class.symbol().to_string()).or_default() += 1;
        if report.dampen_against.is_none()
            && matches!(class, ConstraintClass::OtherBehavior | ConstraintClass::SelfAttribute)
        {
            let mine = rank(self_agent).unwrap_or(0.0);
            report.dampen_against =
                c.atoms().into_iter().find(|a| a != self_agent && rank(a).map(|r| r > mine).unwrap_or(false));
        }
    }
    report.realistic = report.assumption_counts.is_empty();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concept::c;

    fn rule(name: &str, goal: &str, pre: &[&str], sub: &[&str], eff: &[&str], primitive: bool) -> PlanRule {
        PlanRule {
            name: Symbol::new(name),
            goal: c(goal),
            preconditions: pre.iter().map(|s| c(s)).collect(),
            subgoals: sub.iter().map(|s| c(s)).collect(),
            effects: eff.iter().map(|s| c(s)).collect(),
            conditional: Vec::new(),
            primitive,
        }
    }

    fn dating() -> Planner {
        Planner::new(
            vec![
                rule(
                    "ask-out",
                    "(ipt-lovers ?a ?p)",
                    &[],
                    &["(vprox ?a ?p)", "(ask ?a ?p (date ?a ?p))", "(accepts ?p (date ?a ?p))"],
                    &["(ipt-lovers ?a ?p)"],
                    false,
                ),
                rule("phone", "(vprox ?a ?p)", &[], &["(know ?a (phone-number ?p))", "(call ?a ?p)"], &["(vprox ?a ?p)"], false),
                rule(
                    "ask-number",
                    "(know ?a (phone-number ?p))",
                    &[],
                    &["(vprox ?a ?p)", "(ask ?a ?p (know ?a (phone-number ?p)))", "(gives ?p ?a (phone-number ?p))"],
                    &["(know ?a (phone-number ?p))"],
                    false,
                ),
                rule("ask", "(ask ?a ?p ?x)", &[], &[], &[], true),
                rule("call", "(call ?a ?p)", &[], &[], &[], true),
            ],
            vec![
                RelaxationRule { class: ConstraintClass::OtherBehavior, pattern: c("(accepts ?p ?x)"), min_level: RelaxLevel::Low },
                RelaxationRule { class: ConstraintClass::OtherBehavior, pattern: c("(gives ?p ?a ?x)"), min_level: RelaxLevel::Low },
                RelaxationRule { class: ConstraintClass::SelfAttribute, pattern: c("(occupation ?a director)"), min_level: RelaxLevel::High },
            ],
            vec![DeriveRule { conclusion: c("(vprox ?a ?p)"), premises: vec![c("(near ?a ?p)")] }],
        )
    }

    fn payloads(r: &PlanResult) -> Vec<String> {
        r.events.iter().map(|e| e.payload.to_string()).collect()
    }

    #[test]
    fn low_level_assumes_acceptance() {
        let p = dating();
        let mut wm = WorkingMemory::default();
        wm.assert_entry(c("(near me debra)"), wm.real()).unwrap();
        let ctx = wm.spawn(wm.real()).unwrap();
        let r = p.run(&wm, ctx, &PlanRequest::new(c("(ipt-lovers me debra)"), RelaxLevel::Low)).unwrap();
        assert_eq!(r.outcome, PlanOutcome::Succeeded);
        assert!(r.wm.holds(&c("(ipt-lovers me debra)"), ctx));
        assert!(!r.wm.holds(&c("(ipt-lovers me debra)"), wm.real()));
        let kinds: Vec<_> = r.events.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, vec![EventKind::Action, EventKind::Assumption]);
        assert_eq!(assess(&r.events, &r.wm, ctx, &Symbol::new("me")).assumption_counts["other-behavior"], 1);
    }

    #[test]
    fn none_level_fails_without_assumptions() {
        let p = dating();
        let mut wm = WorkingMemory::default();
        wm.assert_entry(c("(near me debra)"), wm.real()).unwrap();
        let r = p.run(&wm, wm.real(), &PlanRequest::new(c("(ipt-lovers me debra)"), RelaxLevel::None)).unwrap();
        assert_eq!(r.outcome, PlanOutcome::Failed);
        assert!(r.events.iter().all(|e| e.kind != EventKind::Assumption));
    }

    #[test]
    fn awaiting_stops_at_other_behaviour() {
        let p = dating();
        let mut wm = WorkingMemory::default();
        wm.assert_entry(c("(near me debra)"), wm.real()).unwrap();
        let mut req = PlanRequest::new(c("(ipt-lovers me debra)"), RelaxLevel::None);
        req.awaiting = true;
        let r = p.run(&wm, wm.real(), &req).unwrap();
        assert_eq!(r.outcome, PlanOutcome::Awaiting);
        assert_eq!(payloads(&r), vec!["(ask me debra (date me debra))", "(await (accepts debra (date me debra)))"]);
        assert!(r.wm.holds(&c("(ask me debra (date me debra))"), wm.real()));
    }

    #[test]
    fn phone_loop_then_learning() {
        let mut p = dating();
        let wm = WorkingMemory::default();
        let ctx = WorkingMemory::default().real();
        let r = p.run(&wm, ctx, &PlanRequest::new(c("(ipt-lovers me debra)"), RelaxLevel::Low)).unwrap();
        assert_eq!(r.outcome, PlanOutcome::Loop);
        assert_eq!(
            payloads(&r),
            vec![
                "(active (vprox me debra))",
                "(active (know me (phone-number debra)))",
                "(active (vprox me debra))"
            ]
        );
        let learned = p.learn_conditional(&r).unwrap();
        assert_eq!(learned.rule.as_str(), "ask-out");
        assert_eq!(learned.condition, c("(vprox ?a ?p)"));
        assert_eq!(learned.precondition, c("(know ?a (phone-number ?p))"));
        assert!(matches!(p.learn_conditional(&PlanResult { outcome: PlanOutcome::Succeeded, ..r.clone() }), Err(Error::Contract(_))));

        // near the person again: the learned precondition comes first
        let mut wm = WorkingMemory::default();
        wm.assert_entry(c("(near me debra)"), wm.real()).unwrap();
        let mut req = PlanRequest::new(c("(ipt-lovers me debra)"), RelaxLevel::None);
        req.awaiting = true;
        let r = p.run(&wm, wm.real(), &req).unwrap();
        assert_eq!(r.outcome, PlanOutcome::Awaiting);
        assert_eq!(payloads(&r)[1], "(ask me debra (know me (phone-number debra)))");
    }

    #[test]
    fn relax_by_level() {
        let p = dating();
        let occ = c("(occupation me director)");
        assert_eq!(p.relax(&occ, RelaxLevel::None), None);
        assert_eq!(p.relax(&occ, RelaxLevel::Low), None);
        assert_eq!(p.relax(&occ, RelaxLevel::High), Some(ConstraintClass::SelfAttribute));
        let ev = p.relax_event(&c("(gives debra me (phone-number debra))"), RelaxLevel::Low, ContextId(0)).unwrap();
        assert_eq!(ev.payload, c("(assume other-behavior (gives debra me (phone-number debra)))"));
    }

    #[test]
    fn loop_detection() {
        let stack = vec![c("(vprox me debra)"), c("(know me (phone-number debra))")];
        assert!(detect_loop(&stack, &c("(vprox me debra)")));
        assert!(!detect_loop(&stack, &c("(call me debra)")));
        assert!(detect_loop(&[c("(a)")], &c("(a)")));
    }

    #[test]
    fn protected_requirement_conflict() {
        let p = Planner::new(
            vec![
                rule("commute", "(at-work ?a)", &["(works-at ?a ?l)"], &["(ptrans ?a ?l)"], &[], false),
                rule("go", "(ptrans ?a ?l)", &[], &[], &["(at ?a ?l)"], true),
            ],
            vec![],
            vec![
                DeriveRule { conclusion: c("(at-work ?a)"), premises: vec![c("(works-at ?a ?l)"), c("(at ?a ?l)")] },
                DeriveRule { conclusion: c("(rprox ?a ?p)"), premises: vec![c("(at ?a ?l)"), c("(at ?p ?l)")] },
            ],
        );
        let mut wm = WorkingMemory::default();
        wm.declare_functional(Symbol::new("at"), 1);
        for f in ["(works-at me la)", "(at me paris)", "(at debra paris)"] {
            wm.assert_entry(c(f), wm.real()).unwrap();
        }
        let ctx = wm.spawn(wm.real()).unwrap();
        let mut req = PlanRequest::new(c("(at-work me)"), RelaxLevel::Low);
        let free = p.run(&wm, ctx, &req).unwrap();
        assert_eq!(free.outcome, PlanOutcome::Succeeded);
        req.protected = vec![c("(rprox me debra)")];
        let r = p.run(&wm, ctx, &req).unwrap();
        assert_eq!(r.outcome, PlanOutcome::Conflict);
        assert_eq!(r.conflict, Some(c("(rprox me debra)")));
    }

    #[test]
    fn budget_bounds_search() {
        let p = Planner::new(vec![rule("grow", "(n ?x)", &[], &["(n (s ?x))"], &[], false)], vec![], vec![]);
        let wm = WorkingMemory::default();
        let mut req = PlanRequest::new(c("(n z)"), RelaxLevel::High);
        req.budget = 5;
        req.max_depth = 100;
        let r = p.run(&wm, wm.real(), &req).unwrap();
        assert_eq!(r.outcome, PlanOutcome::Failed);
        assert!(r.steps <= 6);
        req.budget = 0;
        assert!(p.run(&wm, wm.real(), &req).is_err());
    }

    #[test]
    fn dampening_against_higher_status() {
        let mut wm = WorkingMemory::default();
        wm.assert_entry(c("(status-rank debra 9)"), wm.real()).unwrap();
        wm.assert_entry(c("(status-rank me 3)"), wm.real()).unwrap();
        let ev = vec![ScenarioEvent::new(
            EventKind::Assumption,
            c("(assume other-behavior (accepts debra (date me debra)))"),
            wm.real(),
        )];
        let rep = assess(&ev, &wm, wm.real(), &Symbol::new("me"));
        assert!(!rep.realistic);
        assert_eq!(rep.dampen_against.unwrap().as_str(), "debra");
        assert!(assess(&[], &wm, wm.real(), &Symbol::new("me")).realistic);
    }
}
