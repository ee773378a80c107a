//! Dynamic episodic memory: episodes indexed by plot units, emotions,
//! surface heads and themes; learned planning strategies; future plans.
//! Also analogical adaptation of a recalled episode and continuation
//! suggestion for an ongoing scenario.
//!
//! Memory is append-only during a session and persists as concept-syntax
//! text, one top-level form per record.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::concept::{parse_concepts, unify_with, Bindings, Concept, Slot, Symbol, Term};
use crate::emotion::{EmotionId, EmotionKind, EmotionRecord};
use crate::error::{Error, Result};
use crate::goals::{GoalId, GoalStatus, OutcomeId, OutcomeRecord};
use crate::planner::{EventKind, ScenarioEvent};
use crate::plot_units::{elements, recognize, PlotUnitDef, PuInstance};
use crate::store::ContextId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EpisodeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reality {
    Personal,
    Vicarious,
    Imagined,
}

impl Reality {
    pub fn symbol(self) -> &'static str {
        match self {
            Reality::Personal => "personal",
            Reality::Vicarious => "vicarious",
            Reality::Imagined => "imagined",
        }
    }

    pub fn parse(s: &str) -> Option<Reality> {
        match s {
            "personal" => Some(Reality::Personal),
            "vicarious" => Some(Reality::Vicarious),
            "imagined" => Some(Reality::Imagined),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IndexKind {
    PlotUnit,
    Emotion,
    Surface,
    Theme,
}

impl IndexKind {
    pub fn symbol(self) -> &'static str {
        match self {
            IndexKind::PlotUnit => "plot-unit",
            IndexKind::Emotion => "emotion",
            IndexKind::Surface => "surface",
            IndexKind::Theme => "theme",
        }
    }

    pub fn parse(s: &str) -> Option<IndexKind> {
        match s {
            "plot-unit" => Some(IndexKind::PlotUnit),
            "emotion" => Some(IndexKind::Emotion),
            "surface" => Some(IndexKind::Surface),
            "theme" => Some(IndexKind::Theme),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IndexKey {
    pub kind: IndexKind,
    pub value: Symbol,
}

impl IndexKey {
    pub fn new(kind: IndexKind, value: &str) -> Self {
        IndexKey { kind, value: Symbol::new(value) }
    }
}

impl fmt::Display for IndexKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.symbol(), self.value)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub id: EpisodeId,
    pub name: Option<Symbol>,
    pub events: Vec<ScenarioEvent>,
    pub outcomes: Vec<OutcomeRecord>,
    pub emotions: Vec<EmotionRecord>,
    pub reality: Reality,
    pub indices: Vec<IndexKey>,
    pub plot_units: Vec<PuInstance>,
}

impl EpisodeRecord {
    pub fn new(reality: Reality, events: Vec<ScenarioEvent>) -> Self {
        EpisodeRecord {
            id: EpisodeId(0),
            name: None,
            events,
            outcomes: Vec::new(),
            emotions: Vec::new(),
            reality,
            indices: Vec::new(),
            plot_units: Vec::new(),
        }
    }

    pub fn label(&self) -> String {
        match &self.name {
            Some(n) => n.as_str().to_uppercase(),
            None => format!("EPISODE.{}", self.id.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyRecord {
    pub rule: Symbol,
    pub condition: Concept,
    pub precondition: Concept,
    pub source: EpisodeId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuturePlanRecord {
    pub situation: Concept,
    pub action: Concept,
    pub source: EpisodeId,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceMap {
    /// Recalled agent to current agent.
    pub agents: Vec<(Symbol, Symbol)>,
    /// Recalled relation head to current relation head.
    pub relations: Vec<(Symbol, Symbol)>,
    /// What justified each pair.
    pub provenance: Vec<String>,
}

impl CorrespondenceMap {
    pub fn agent(&self, recalled: &Symbol) -> Option<&Symbol> {
        self.agents.iter().find(|(a, _)| a == recalled).map(|(_, b)| b)
    }

    /// Rewrite a recalled concept into the current situation.
    pub fn apply(&self, c: &Concept) -> Concept {
        let agents = c.map_symbols(&|s| self.agent(s).cloned().unwrap_or_else(|| s.clone()), false);
        agents.map_symbols(
            &|s| self.relations.iter().find(|(a, _)| a == s).map(|(_, b)| b.clone()).unwrap_or_else(|| s.clone()),
            true,
        )
    }
}

/// A recalled episode adapted to the current situation.
#[derive(Clone, Debug, PartialEq)]
pub struct Adaptation {
    pub episode: EpisodeId,
    pub map: CorrespondenceMap,
    /// The recalled instance's nodes with their events rewritten, in node
    /// order: `(node kind, concept)`.
    pub steps: Vec<(crate::plot_units::NodeKind, Concept)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Continuation {
    pub episode: EpisodeId,
    pub recalled: Concept,
    pub suggested: Concept,
    pub map: CorrespondenceMap,
}

/// Knowledge needed to compute index keys.
#[derive(Clone, Debug, Default)]
pub struct IndexContext {
    pub catalog: Vec<PlotUnitDef>,
    pub agents: BTreeSet<Symbol>,
    pub mental_heads: BTreeSet<Symbol>,
}

/// Head a SURFACE key is taken from: the goal for goal changes and
/// recalls, the payload itself otherwise.
fn surface_head(e: &ScenarioEvent) -> Option<&Symbol> {
    match e.kind {
        EventKind::GoalChange | EventKind::Recall => e.goal_change().map(|(_, g)| g.head()),
        EventKind::Assumption => e.assumption().map(|(_, c)| c.head()),
        _ => Some(e.payload.head()),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodicMemory {
    episodes: Vec<EpisodeRecord>,
    strategies: Vec<StrategyRecord>,
    future_plans: Vec<FuturePlanRecord>,
}

/// An episode found by index lookup.
#[derive(Clone, Debug, PartialEq)]
pub struct Retrieval {
    pub episode: EpisodeId,
    pub matched: Vec<IndexKey>,
}

impl EpisodicMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn episodes(&self) -> &[EpisodeRecord] {
        &self.episodes
    }

    pub fn episode(&self, id: EpisodeId) -> Option<&EpisodeRecord> {
        self.episodes.iter().find(|e| e.id == id)
    }

    pub fn by_name(&self, name: &str) -> Option<&EpisodeRecord> {
        self.episodes.iter().find(|e| e.name.as_ref().map(|n| n.as_str() == name).unwrap_or(false))
    }

    pub fn strategies(&self) -> &[StrategyRecord] {
        &self.strategies
    }

    pub fn future_plans(&self) -> &[FuturePlanRecord] {
        &self.future_plans
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty() && self.strategies.is_empty() && self.future_plans.is_empty()
    }

    /// Keys derivable from an episode's content: one PLOT-UNIT key per
    /// recognized unit, one EMOTION key per emotion kind and one SURFACE
    /// key per event head.
    pub fn derive_keys(rec: &EpisodeRecord, ix: &IndexContext) -> (Vec<IndexKey>, Vec<PuInstance>) {
        let els = elements(&rec.events, &ix.agents, &ix.mental_heads);
        let units = recognize(&ix.catalog, &els);
        let mut keys = BTreeSet::new();
        for u in &units {
            keys.insert(IndexKey { kind: IndexKind::PlotUnit, value: u.def.clone() });
        }
        for e in &rec.emotions {
            keys.insert(IndexKey::new(IndexKind::Emotion, e.kind.symbol()));
        }
        for e in &rec.events {
            if let Some(h) = surface_head(e) {
                keys.insert(IndexKey { kind: IndexKind::Surface, value: h.clone() });
            }
        }
        (keys.into_iter().collect(), units)
    }

    /// Index and append an episode. Caller-supplied THEME keys are kept
    /// as given; any other supplied key must be derivable from the
    /// content.
    pub fn store(&mut self, mut rec: EpisodeRecord, ix: &IndexContext) -> Result<EpisodeId> {
        if rec.events.is_empty() {
            return Err(Error::Validation("episode has no events".into()));
        }
        let (derived, units) = Self::derive_keys(&rec, ix);
        let mut keys: BTreeSet<IndexKey> = derived.iter().cloned().collect();
        for k in &rec.indices {
            if k.kind != IndexKind::Theme && !derived.contains(k) {
                return Err(Error::Validation(format!("index {} does not match episode content", k)));
            }
            keys.insert(k.clone());
        }
        if let Some(name) = &rec.name {
            if self.by_name(name.as_str()).is_some() {
                return Err(Error::Validation(format!("duplicate episode name {}", name)));
            }
        }
        let id = EpisodeId(self.episodes.iter().map(|e| e.id.0 + 1).max().unwrap_or(1));
        rec.id = id;
        rec.indices = keys.into_iter().collect();
        rec.plot_units = units;
        self.episodes.push(rec);
        Ok(id)
    }

    /// Episodes sharing at least one key with `keys`, ranked by number of
    /// shared keys, then most recent first.
    pub fn retrieve(&self, keys: &[IndexKey]) -> Vec<Retrieval> {
        let mut out: Vec<Retrieval> = self
            .episodes
            .iter()
            .filter_map(|e| {
                let matched: Vec<IndexKey> = e.indices.iter().filter(|k| keys.contains(k)).cloned().collect();
                (!matched.is_empty()).then_some(Retrieval { episode: e.id, matched })
            })
            .collect();
        out.sort_by(|a, b| b.matched.len().cmp(&a.matched.len()).then(b.episode.cmp(&a.episode)));
        out
    }

    pub fn add_strategy(&mut self, s: StrategyRecord) {
        if !self.strategies.contains(&s) {
            self.strategies.push(s);
        }
    }

    pub fn strategies_for(&self, rule: &Symbol) -> impl Iterator<Item = &StrategyRecord> {
        let rule = rule.clone();
        self.strategies.iter().filter(move |s| s.rule == rule)
    }

    pub fn add_future_plan(&mut self, p: FuturePlanRecord) {
        if !self.future_plans.contains(&p) {
            self.future_plans.push(p);
        }
    }

    /// Future plans whose situation matches one of `facts`, with the
    /// action instantiated.
    pub fn consult(&self, facts: &[Concept]) -> Vec<(&FuturePlanRecord, Concept)> {
        let mut out = Vec::new();
        for p in &self.future_plans {
            for f in facts {
                if let Some(b) = unify_with(&p.situation, f, &Bindings::new()) {
                    out.push((p, p.action.substitute(&b)));
                    break;
                }
            }
        }
        out
    }
}

fn bind_agent(map: &mut CorrespondenceMap, from: &Symbol, to: &Symbol, why: &str) -> bool {
    match map.agent(from) {
        Some(t) => t == to,
        None => {
            if map.agents.iter().any(|(_, t)| t == to) {
                return false;
            }
            map.agents.push((from.clone(), to.clone()));
            map.provenance.push(format!("{} -> {} ({})", from, to, why));
            true
        }
    }
}

/// Extend `map` so that `recalled` rewrites to `current`. Agents may be
/// substituted anywhere; a differing head is allowed only at the top.
fn align(recalled: &Concept, current: &Concept, agents: &BTreeSet<Symbol>, top: bool, map: &mut CorrespondenceMap) -> bool {
    if recalled.arity() != current.arity() {
        return false;
    }
    if recalled.head() != current.head() {
        if !top {
            return false;
        }
        map.relations.push((recalled.head().clone(), current.head().clone()));
        map.provenance.push(format!("{} -> {} (relation)", recalled.head(), current.head()));
    }
    let why = format!("role in {}", current.head());
    for (r, c) in recalled.args().zip(current.args()) {
        let ok = match (r, c) {
            (Term::Atom(a), Term::Atom(b)) if agents.contains(a) && agents.contains(b) => bind_agent(map, a, b, &why),
            (Term::Atom(a), Term::Atom(b)) => a == b,
            (Term::Concept(x), Term::Concept(y)) => align(x, y, agents, false, map),
            _ => false,
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Replace every agent atom with a variable so the concept matches the
/// same event about anyone else.
fn generalize(c: &Concept, agents: &BTreeSet<Symbol>) -> Concept {
    c.atoms()
        .into_iter()
        .filter(|a| agents.contains(a))
        .fold(c.clone(), |acc, a| acc.replace_atom(&a, &Term::var(a.as_str())))
}

impl EpisodicMemory {
    /// Carry the plot-unit instance `unit` of episode `id` over to the
    /// current situation, anchored on `recalled_anchor`'s counterpart
    /// `current`. With no anchor given the first node's concept is used.
    pub fn adapt(
        &self,
        id: EpisodeId,
        unit: &Symbol,
        current: &Concept,
        ix: &IndexContext,
        relations_known: &[(Symbol, Symbol)],
    ) -> Result<Adaptation> {
        let ep = self.episode(id).ok_or(Error::NoAnalogy)?;
        let inst = ep.plot_units.iter().find(|u| &u.def == unit).ok_or(Error::NoAnalogy)?;
        let def = ix.catalog.iter().find(|d| &d.name == unit).ok_or(Error::NoAnalogy)?;
        let els = elements(&ep.events, &ix.agents, &ix.mental_heads);
        let concept_of = |node: usize| inst.node_map.get(node).and_then(|&e| els.get(e)).map(|e| &e.concept);
        let anchor = concept_of(0).ok_or(Error::NoAnalogy)?;
        let mut map = CorrespondenceMap::default();
        if !align(anchor, current, &ix.agents, true, &mut map) {
            return Err(Error::NoAnalogy);
        }
        for (a, b) in relations_known {
            if !map.relations.iter().any(|(x, _)| x == a) {
                map.relations.push((a.clone(), b.clone()));
            }
        }
        // Roles not reached through the anchor keep their own agent.
        for agent in inst.bindings.values() {
            if map.agent(agent).is_none() && !map.agents.iter().any(|(_, t)| t == agent) {
                map.agents.push((agent.clone(), agent.clone()));
            }
        }
        let steps = def
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| concept_of(i).map(|c| (n.kind, map.apply(c))))
            .collect();
        Ok(Adaptation { episode: id, map, steps })
    }

    /// Find a retrieved episode with an event that matches one of `facts`
    /// up to agent renaming, and suggest its first later event (mapped)
    /// that does not already hold. `skip` filters out episodes, such as
    /// ones containing the outcome being worked on.
    pub fn suggest_continuation(
        &self,
        keys: &[IndexKey],
        facts: &[Concept],
        ix: &IndexContext,
        skip: &dyn Fn(&EpisodeRecord) -> bool,
        holds: &dyn Fn(&Concept) -> bool,
    ) -> Option<Continuation> {
        for r in self.retrieve(keys) {
            let ep = self.episode(r.episode)?;
            if skip(ep) {
                continue;
            }
            for (i, e) in ep.events.iter().enumerate() {
                let pattern = generalize(&e.payload, &ix.agents);
                for f in facts {
                    let Some(b) = unify_with(&pattern, f, &Bindings::new()) else { continue };
                    let mut map = CorrespondenceMap::default();
                    let mut ok = true;
                    for (var, val) in &b {
                        let Some(to) = val.as_atom() else { ok = false; break };
                        ok &= bind_agent(&mut map, var, to, &format!("matches {}", f));
                    }
                    if !ok || map.agents.iter().all(|(a, b)| a == b) {
                        continue;
                    }
                    for later in &ep.events[i + 1..] {
                        let suggested = map.apply(&later.payload);
                        if !holds(&suggested) {
                            return Some(Continuation {
                                episode: ep.id,
                                recalled: later.payload.clone(),
                                suggested,
                                map,
                            });
                        }
                    }
                }
            }
        }
        None
    }
}

fn slot(role: &str, filler: Term) -> Slot {
    Slot { role: Some(Symbol::new(role)), filler }
}

fn pos(filler: Term) -> Slot {
    Slot { role: None, filler }
}

fn num(n: impl fmt::Display) -> Term {
    Term::atom(&n.to_string())
}

fn form(head: &str, slots: Vec<Slot>) -> Concept {
    Concept::with_slots(Symbol::new(head), slots)
}

fn list(head: &str, items: Vec<Concept>) -> Concept {
    form(head, items.into_iter().map(|c| pos(Term::Concept(c))).collect())
}

fn corrupt(c: &Concept, why: &str) -> Error {
    Error::Validation(format!("bad memory record {}: {}", c, why))
}

fn positional(c: &Concept) -> Vec<&Term> {
    c.slots().iter().filter(|s| s.role.is_none()).map(|s| &s.filler).collect()
}

fn role_atom<'a>(c: &'a Concept, r: &str) -> Result<&'a Symbol> {
    c.role(r).and_then(Term::as_atom).ok_or_else(|| corrupt(c, &format!("missing :{}", r)))
}

fn role_num<T: std::str::FromStr>(c: &Concept, r: &str) -> Result<T> {
    role_atom(c, r)?.as_str().parse().map_err(|_| corrupt(c, &format!("bad :{}", r)))
}

fn opt_atom(c: &Concept, r: &str) -> Option<Symbol> {
    c.role(r).and_then(Term::as_atom).filter(|a| a.as_str() != "nil").cloned()
}

fn nth_concept<'a>(c: &'a Concept, i: usize) -> Result<&'a Concept> {
    positional(c).get(i).and_then(|t| t.as_concept()).ok_or_else(|| corrupt(c, "missing concept"))
}

fn sub_list<'a>(c: &'a Concept, head: &str) -> Vec<&'a Concept> {
    positional(c)
        .into_iter()
        .filter_map(Term::as_concept)
        .find(|s| s.head().as_str() == head)
        .map(|s| positional(s).into_iter().filter_map(Term::as_concept).collect())
        .unwrap_or_default()
}

fn atom_or_nil(s: &Option<Symbol>) -> Term {
    Term::Atom(s.clone().unwrap_or_else(|| Symbol::new("nil")))
}

fn status_symbol(s: GoalStatus) -> String {
    s.to_string()
}

fn parse_status(c: &Concept, s: &str) -> Result<GoalStatus> {
    match s {
        "active" => Ok(GoalStatus::Active),
        "succeeded" => Ok(GoalStatus::Succeeded),
        "failed" => Ok(GoalStatus::Failed),
        _ => Err(corrupt(c, "bad status")),
    }
}

fn event_form(e: &ScenarioEvent) -> Concept {
    form(
        "event",
        vec![
            slot("kind", Term::atom(e.kind.symbol())),
            slot("context", num(e.context.0)),
            slot("seq", num(e.seq)),
            pos(Term::Concept(e.payload.clone())),
        ],
    )
}

fn event_from(c: &Concept) -> Result<ScenarioEvent> {
    let kind = EventKind::parse(role_atom(c, "kind")?.as_str()).ok_or_else(|| corrupt(c, "bad kind"))?;
    Ok(ScenarioEvent {
        kind,
        payload: nth_concept(c, 0)?.clone(),
        context: ContextId(role_num(c, "context")?),
        seq: role_num(c, "seq")?,
    })
}

fn outcome_form(o: &OutcomeRecord) -> Concept {
    form(
        "outcome",
        vec![
            slot("id", num(o.id.0)),
            slot("goal", num(o.goal.0)),
            slot("status", Term::atom(&status_symbol(o.status))),
            slot("importance", num(o.importance)),
            slot("causer", atom_or_nil(&o.causer)),
            slot("context", num(o.context.0)),
            slot("cycle", num(o.cycle)),
            slot("imagined", num(o.imagined)),
            pos(Term::Concept(o.objective.clone())),
        ],
    )
}

fn outcome_from(c: &Concept) -> Result<OutcomeRecord> {
    Ok(OutcomeRecord {
        id: OutcomeId(role_num(c, "id")?),
        goal: GoalId(role_num(c, "goal")?),
        objective: nth_concept(c, 0)?.clone(),
        importance: role_num(c, "importance")?,
        status: parse_status(c, role_atom(c, "status")?.as_str())?,
        causer: opt_atom(c, "causer"),
        context: ContextId(role_num(c, "context")?),
        cycle: role_num(c, "cycle")?,
        imagined: role_num(c, "imagined")?,
    })
}

fn emotion_form(e: &EmotionRecord) -> Concept {
    let mut slots = vec![
        slot("id", num(e.id.0)),
        slot("kind", Term::atom(e.kind.symbol())),
        slot("valence", num(e.valence)),
        slot("intensity", num(e.intensity)),
        slot("target", atom_or_nil(&e.target)),
        slot("source", e.source.map(|s| num(s.0)).unwrap_or_else(|| Term::atom("nil"))),
        slot("imagined", num(e.imagined)),
        slot("cycle", num(e.cycle)),
    ];
    if let Some(s) = &e.situation {
        slots.push(pos(Term::Concept(s.clone())));
    }
    form("emotion", slots)
}

fn emotion_from(c: &Concept) -> Result<EmotionRecord> {
    let kind = EmotionKind::from_symbol(role_atom(c, "kind")?.as_str()).ok_or_else(|| corrupt(c, "bad kind"))?;
    let source = match opt_atom(c, "source") {
        Some(s) => Some(OutcomeId(s.as_str().parse().map_err(|_| corrupt(c, "bad :source"))?)),
        None => None,
    };
    Ok(EmotionRecord {
        id: EmotionId(role_num(c, "id")?),
        kind,
        valence: role_num(c, "valence")?,
        intensity: role_num(c, "intensity")?,
        target: opt_atom(c, "target"),
        source,
        situation: nth_concept(c, 0).ok().cloned(),
        imagined: role_num(c, "imagined")?,
        cycle: role_num(c, "cycle")?,
    })
}

fn unit_form(u: &PuInstance) -> Concept {
    let mut slots = vec![slot("def", Term::Atom(u.def.clone()))];
    for (r, a) in &u.bindings {
        slots.push(pos(Term::Concept(Concept::new("bind", vec![Term::Atom(r.clone()), Term::Atom(a.clone())]))));
    }
    slots.push(pos(Term::Concept(Concept::new("nodes", u.node_map.iter().map(num).collect()))));
    form("unit", slots)
}

fn unit_from(c: &Concept) -> Result<PuInstance> {
    let mut bindings = BTreeMap::new();
    let mut node_map = Vec::new();
    for t in positional(c) {
        let s = t.as_concept().ok_or_else(|| corrupt(c, "bad unit part"))?;
        match s.head().as_str() {
            "bind" => {
                let (Some(r), Some(a)) = (s.atom_arg(0), s.atom_arg(1)) else { return Err(corrupt(c, "bad bind")) };
                bindings.insert(r.clone(), a.clone());
            }
            "nodes" => {
                for n in s.args() {
                    let v = n.as_atom().and_then(|a| a.as_str().parse().ok()).ok_or_else(|| corrupt(c, "bad node"))?;
                    node_map.push(v);
                }
            }
            _ => return Err(corrupt(c, "bad unit part")),
        }
    }
    Ok(PuInstance { def: role_atom(c, "def")?.clone(), bindings, node_map })
}

fn episode_form(e: &EpisodeRecord) -> Concept {
    let mut slots = vec![slot("id", num(e.id.0)), slot("name", atom_or_nil(&e.name)), slot("reality", Term::atom(e.reality.symbol()))];
    let parts = [
        list("events", e.events.iter().map(event_form).collect()),
        list("outcomes", e.outcomes.iter().map(outcome_form).collect()),
        list("emotions", e.emotions.iter().map(emotion_form).collect()),
        list(
            "indices",
            e.indices
                .iter()
                .map(|k| Concept::new("index", vec![Term::atom(k.kind.symbol()), Term::Atom(k.value.clone())]))
                .collect(),
        ),
        list("units", e.plot_units.iter().map(unit_form).collect()),
    ];
    slots.extend(parts.into_iter().map(|p| pos(Term::Concept(p))));
    form("episode", slots)
}

fn episode_from(c: &Concept) -> Result<EpisodeRecord> {
    let reality = Reality::parse(role_atom(c, "reality")?.as_str()).ok_or_else(|| corrupt(c, "bad :reality"))?;
    let indices = sub_list(c, "indices")
        .into_iter()
        .map(|k| {
            let kind = k.atom_arg(0).and_then(|a| IndexKind::parse(a.as_str()));
            match (kind, k.atom_arg(1)) {
                (Some(kind), Some(v)) => Ok(IndexKey { kind, value: v.clone() }),
                _ => Err(corrupt(k, "bad index")),
            }
        })
        .collect::<Result<_>>()?;
    Ok(EpisodeRecord {
        id: EpisodeId(role_num(c, "id")?),
        name: opt_atom(c, "name"),
        events: sub_list(c, "events").into_iter().map(event_from).collect::<Result<_>>()?,
        outcomes: sub_list(c, "outcomes").into_iter().map(outcome_from).collect::<Result<_>>()?,
        emotions: sub_list(c, "emotions").into_iter().map(emotion_from).collect::<Result<_>>()?,
        reality,
        indices,
        plot_units: sub_list(c, "units").into_iter().map(unit_from).collect::<Result<_>>()?,
    })
}

impl EpisodicMemory {
    /// Concept-syntax text, one form per line.
    pub fn save(&self) -> String {
        let mut out = String::new();
        for e in &self.episodes {
            out.push_str(&episode_form(e).to_string());
            out.push('\n');
        }
        for s in &self.strategies {
            let f = form(
                "strategy",
                vec![
                    slot("rule", Term::Atom(s.rule.clone())),
                    slot("source", num(s.source.0)),
                    pos(Term::Concept(s.condition.clone())),
                    pos(Term::Concept(s.precondition.clone())),
                ],
            );
            out.push_str(&f.to_string());
            out.push('\n');
        }
        for p in &self.future_plans {
            let f = form(
                "future-plan",
                vec![
                    slot("source", num(p.source.0)),
                    pos(Term::Concept(p.situation.clone())),
                    pos(Term::Concept(p.action.clone())),
                ],
            );
            out.push_str(&f.to_string());
            out.push('\n');
        }
        out
    }

    pub fn load(text: &str) -> Result<EpisodicMemory> {
        let mut m = EpisodicMemory::new();
        for c in parse_concepts(text)? {
            match c.head().as_str() {
                "episode" => m.episodes.push(episode_from(&c)?),
                "strategy" => m.strategies.push(StrategyRecord {
                    rule: role_atom(&c, "rule")?.clone(),
                    source: EpisodeId(role_num(&c, "source")?),
                    condition: nth_concept(&c, 0)?.clone(),
                    precondition: nth_concept(&c, 1)?.clone(),
                }),
                "future-plan" => m.future_plans.push(FuturePlanRecord {
                    source: EpisodeId(role_num(&c, "source")?),
                    situation: nth_concept(&c, 0)?.clone(),
                    action: nth_concept(&c, 1)?.clone(),
                }),
                _ => return Err(corrupt(&c, "unknown record")),
            }
        }
        Ok(m)
    }

    pub fn save_to(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.save())?;
        Ok(())
    }

    pub fn load_from(path: &std::path::Path) -> Result<EpisodicMemory> {
        Self::load(&std::fs::read_to_string(path)?)
    }

    /// Add every record of `other`, renumbering its episodes after ours.
    pub fn merge(&mut self, other: EpisodicMemory) {
        let base = self.episodes.iter().map(|e| e.id.0).max().unwrap_or(0);
        let remap = |id: EpisodeId| EpisodeId(id.0 + base);
        for mut e in other.episodes {
            e.id = remap(e.id);
            self.episodes.push(e);
        }
        for mut s in other.strategies {
            s.source = remap(s.source);
            self.add_strategy(s);
        }
        for mut p in other.future_plans {
            p.source = remap(p.source);
            self.add_future_plan(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concept::c;
    use crate::plot_units::{builtin_catalog, NodeKind};

    fn ix() -> IndexContext {
        IndexContext {
            catalog: builtin_catalog(),
            agents: ["me", "debra", "interviewer", "jodie"].iter().map(|s| Symbol::new(s)).collect(),
            mental_heads: [Symbol::new("needs"), Symbol::new("likes")].into_iter().collect(),
        }
    }

    fn ev(kind: EventKind, text: &str) -> ScenarioEvent {
        ScenarioEvent::new(kind, c(text), ContextId(0))
    }

    fn job_daydream() -> EpisodeRecord {
        let mut rec = EpisodeRecord::new(
            Reality::Imagined,
            vec![
                ev(EventKind::Recall, "(failed (employer-employee me interviewer))"),
                ev(EventKind::GoalChange, "(succeeded (needs interviewer me))"),
                ev(EventKind::Action, "(refuse me interviewer (employ me interviewer))"),
                ev(EventKind::GoalChange, "(failed (m-job interviewer))"),
                ev(EventKind::GoalChange, "(succeeded (revenge me interviewer))"),
            ],
        );
        rec.name = Some(Symbol::new("job-daydream"));
        rec.emotions.push(EmotionRecord {
            id: EmotionId(1),
            kind: EmotionKind::Anger,
            valence: -1,
            intensity: 0.8,
            target: Some(Symbol::new("interviewer")),
            source: Some(OutcomeId(3)),
            situation: Some(c("(failed (m-job interviewer))")),
            imagined: true,
            cycle: 2,
        });
        rec.outcomes.push(OutcomeRecord {
            id: OutcomeId(3),
            goal: GoalId(4),
            objective: c("(m-job interviewer)"),
            importance: 0.8,
            status: GoalStatus::Failed,
            causer: Some(Symbol::new("me")),
            context: ContextId(2),
            cycle: 2,
            imagined: true,
        });
        rec
    }

    fn jodie() -> EpisodeRecord {
        let mut rec = EpisodeRecord::new(
            Reality::Vicarious,
            vec![ev(EventKind::Action, "(person jodie rt-actor female)"), ev(EventKind::Action, "(m-act jodie paris)")],
        );
        rec.name = Some(Symbol::new("jodie"));
        rec
    }

    #[test]
    fn store_derives_keys_and_units() {
        let mut m = EpisodicMemory::new();
        let id = m.store(job_daydream(), &ix()).unwrap();
        let ep = m.episode(id).unwrap();
        assert!(ep.indices.contains(&IndexKey::new(IndexKind::PlotUnit, "retaliation")));
        assert!(ep.indices.contains(&IndexKey::new(IndexKind::Emotion, "anger")));
        assert!(ep.indices.contains(&IndexKey::new(IndexKind::Surface, "needs")));
        assert_eq!(ep.plot_units.iter().find(|u| u.def.as_str() == "retaliation").unwrap().to_string(), "PU-RETALIATION INTERVIEWER ME");
    }

    #[test]
    fn store_rejects_empty_and_inconsistent() {
        let mut m = EpisodicMemory::new();
        let empty = EpisodeRecord::new(Reality::Personal, vec![]);
        assert!(matches!(m.store(empty, &ix()), Err(Error::Validation(_))));
        let mut bad = jodie();
        bad.indices.push(IndexKey::new(IndexKind::PlotUnit, "retaliation"));
        assert!(matches!(m.store(bad, &ix()), Err(Error::Validation(_))));
        let mut themed = jodie();
        themed.indices.push(IndexKey::new(IndexKind::Theme, "anything"));
        assert!(m.store(themed, &ix()).is_ok());
    }

    #[test]
    fn retrieve_ranks_by_matches_then_recency() {
        let mut m = EpisodicMemory::new();
        let a = m.store(jodie(), &ix()).unwrap();
        let mut other = jodie();
        other.name = Some(Symbol::new("jodie-2"));
        let b = m.store(other, &ix()).unwrap();
        let j = m.store(job_daydream(), &ix()).unwrap();
        let got = m.retrieve(&[IndexKey::new(IndexKind::Surface, "person"), IndexKey::new(IndexKind::Surface, "m-act")]);
        assert_eq!(got.iter().map(|r| r.episode).collect::<Vec<_>>(), vec![b, a]);
        let got = m.retrieve(&[IndexKey::new(IndexKind::Emotion, "anger"), IndexKey::new(IndexKind::Surface, "person")]);
        assert_eq!(got.iter().map(|r| r.episode).collect::<Vec<_>>(), vec![j, b, a]);
    }

    #[test]
    fn adapt_maps_agents_and_relation() {
        let mut m = EpisodicMemory::new();
        let id = m.store(job_daydream(), &ix()).unwrap();
        let ad = m.adapt(id, &Symbol::new("retaliation"), &c("(ipt-lovers me debra)"), &ix(), &[]).unwrap();
        assert_eq!(ad.map.agent(&Symbol::new("interviewer")).unwrap().as_str(), "debra");
        assert_eq!(ad.map.relations, vec![(Symbol::new("employer-employee"), Symbol::new("ipt-lovers"))]);
        assert_eq!(ad.steps[1], (NodeKind::Mental, c("(needs debra me)")));
        assert_eq!(ad.steps[2].1, c("(refuse me debra (employ me debra))"));
        assert!(matches!(
            m.adapt(id, &Symbol::new("retaliation"), &c("(near me)"), &ix(), &[]),
            Err(Error::NoAnalogy)
        ));
    }

    #[test]
    fn continuation_skips_what_holds() {
        let mut m = EpisodicMemory::new();
        m.store(jodie(), &ix()).unwrap();
        let keys = [IndexKey::new(IndexKind::Surface, "person")];
        let facts = [c("(person debra rt-actor female)")];
        let cont = m.suggest_continuation(&keys, &facts, &ix(), &|_| false, &|_| false).unwrap();
        assert_eq!(cont.recalled, c("(m-act jodie paris)"));
        assert_eq!(cont.suggested, c("(m-act debra paris)"));
        assert!(m.suggest_continuation(&keys, &facts, &ix(), &|_| false, &|_| true).is_none());
        assert!(m.suggest_continuation(&keys, &facts, &ix(), &|_| true, &|_| false).is_none());
    }

    #[test]
    fn save_load_is_content_identical() {
        let mut m = EpisodicMemory::new();
        let id = m.store(job_daydream(), &ix()).unwrap();
        m.store(jodie(), &ix()).unwrap();
        m.add_strategy(StrategyRecord {
            rule: Symbol::new("phone"),
            condition: c("(near ?a ?p)"),
            precondition: c("(vprox ?a ?p)"),
            source: id,
        });
        m.add_future_plan(FuturePlanRecord { situation: c("(near me ?p)"), action: c("(ask me ?p (know me (phone-number ?p)))"), source: id });
        let text = m.save();
        let back = EpisodicMemory::load(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.save(), text);
    }

    #[test]
    fn consult_instantiates_future_plans() {
        let mut m = EpisodicMemory::new();
        m.add_future_plan(FuturePlanRecord { situation: c("(near me ?p)"), action: c("(ask me ?p (know me (phone-number ?p)))"), source: EpisodeId(1) });
        let got = m.consult(&[c("(at me la)"), c("(near me debra)")]);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].1, c("(ask me debra (know me (phone-number debra)))"));
    }
}
