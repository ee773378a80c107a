//! Control goals: emotion-triggered meta-goals that direct daydreaming.
//!
//! Triggering is a pure function of live emotions and recorded outcomes.
//! Strategies come from a data catalog; each names one realization.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::concept::{parse_concepts, Concept, Symbol};
use crate::emotion::{EmotionId, EmotionKind, EmotionRecord, EmotionStore};
use crate::error::{Error, Result};
use crate::goals::{GoalStatus, OutcomeId, OutcomeRecord};
use crate::memory::{EpisodeId, EpisodeRecord, EpisodicMemory, IndexKey, IndexKind};
use crate::planner::{EventKind, RelaxLevel, ScenarioEvent};
use crate::plot_units::{elements, recognize_all, PlotUnitDef, PuInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ControlKind {
    Rationalization,
    Revenge,
    FailureReversal,
    SuccessReversal,
    Preparation,
}

impl ControlKind {
    pub const ALL: [ControlKind; 5] = [
        ControlKind::Rationalization,
        ControlKind::Revenge,
        ControlKind::FailureReversal,
        ControlKind::SuccessReversal,
        ControlKind::Preparation,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            ControlKind::Rationalization => "rationalization",
            ControlKind::Revenge => "revenge",
            ControlKind::FailureReversal => "failure-reversal",
            ControlKind::SuccessReversal => "success-reversal",
            ControlKind::Preparation => "preparation",
        }
    }

    pub fn parse(s: &str) -> Option<ControlKind> {
        ControlKind::ALL.into_iter().find(|k| k.symbol() == s)
    }

    /// Relaxation level a scenario for this kind is planned at.
    pub fn level(self) -> RelaxLevel {
        match self {
            ControlKind::Revenge => RelaxLevel::High,
            _ => RelaxLevel::Low,
        }
    }
}

impl fmt::Display for ControlKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol().to_uppercase())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ControlTarget {
    Outcome(OutcomeId),
    Situation(Concept),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlGoalRecord {
    pub kind: ControlKind,
    pub target: ControlTarget,
    pub status: GoalStatus,
    pub strategy: Option<Symbol>,
    /// The emotion that triggered the goal and its intensity then.
    pub emotion: EmotionId,
    pub intensity: f64,
}

impl ControlGoalRecord {
    pub fn outcome(&self) -> Option<OutcomeId> {
        match self.target {
            ControlTarget::Outcome(o) => Some(o),
            ControlTarget::Situation(_) => None,
        }
    }

    /// Identity used to avoid pursuing the same control goal twice.
    pub fn key(&self) -> (ControlKind, ControlTarget) {
        (self.kind, self.target.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Realization {
    PlotUnit(Symbol),
    ExternalAttribution,
    ReplanAltered,
    HypotheticalThreat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyDef {
    pub name: Symbol,
    pub kind: ControlKind,
    pub realization: Realization,
    pub level: RelaxLevel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlConfig {
    /// Negative affect below this is "not strong" and allows failure
    /// reversal.
    pub not_strong: f64,
    pub success_reversal: bool,
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig { not_strong: 0.7, success_reversal: false }
    }
}

impl StrategyDef {
    /// Read `(strategy NAME KIND REALIZATION LEVEL)`.
    pub fn from_concept(c: &Concept) -> Result<StrategyDef> {
        let bad = |why: &str| Error::Domain(format!("bad strategy {}: {}", c, why));
        let name = c.atom_arg(0).ok_or_else(|| bad("missing name"))?.clone();
        let kind = c.atom_arg(1).and_then(|k| ControlKind::parse(k.as_str())).ok_or_else(|| bad("unknown kind"))?;
        let realization = match (c.atom_arg(2), c.concept_arg(2)) {
            (Some(a), _) => match a.as_str() {
                "external-attribution" => Realization::ExternalAttribution,
                "replan-altered" => Realization::ReplanAltered,
                "hypothetical-threat" => Realization::HypotheticalThreat,
                _ => return Err(bad("unknown realization")),
            },
            (None, Some(pu)) if pu.head().as_str() == "plot-unit" => {
                Realization::PlotUnit(pu.atom_arg(0).ok_or_else(|| bad("plot-unit needs a name"))?.clone())
            }
            _ => return Err(bad("missing realization")),
        };
        let level = c.atom_arg(3).and_then(|l| RelaxLevel::parse(l.as_str())).ok_or_else(|| bad("bad level"))?;
        Ok(StrategyDef { name, kind, realization, level })
    }
}

/// Parse a strategy catalog; other heads are ignored.
pub fn parse_catalog(text: &str) -> Result<Vec<StrategyDef>> {
    parse_concepts(text)?.iter().filter(|c| c.head().as_str() == "strategy").map(StrategyDef::from_concept).collect()
}

pub fn builtin_strategies() -> Vec<StrategyDef> {
    parse_catalog(include_str!("../data/strategies.dd")).expect("built-in strategies are well formed")
}

fn record(kind: ControlKind, target: ControlTarget, e: &EmotionRecord) -> ControlGoalRecord {
    ControlGoalRecord { kind, target, status: GoalStatus::Active, strategy: None, emotion: e.id, intensity: e.intensity }
}

/// Control goals licensed by `emotions`, strongest triggering emotion
/// first. Only real (not imagined) outcomes trigger; each (kind, target)
/// pair appears once, at its strongest.
pub fn trigger<'a>(
    emotions: impl IntoIterator<Item = &'a EmotionRecord>,
    outcomes: &[OutcomeRecord],
    self_agent: &Symbol,
    cfg: &ControlConfig,
) -> Vec<ControlGoalRecord> {
    let find = |id: Option<OutcomeId>| id.and_then(|id| outcomes.iter().find(|o| o.id == id)).filter(|o| !o.imagined);
    let mut out: Vec<ControlGoalRecord> = Vec::new();
    for e in emotions {
        let outcome = find(e.source);
        let mut found = Vec::new();
        match (e.kind, outcome) {
            (EmotionKind::NegAffect, Some(o)) if o.status == GoalStatus::Failed => {
                found.push(record(ControlKind::Rationalization, ControlTarget::Outcome(o.id), e));
                if e.intensity < cfg.not_strong {
                    found.push(record(ControlKind::FailureReversal, ControlTarget::Outcome(o.id), e));
                }
            }
            (EmotionKind::Anger, Some(o))
                if e.target.as_ref().map(|t| t != self_agent).unwrap_or(false)
                    && o.causer.as_ref().map(|c| c != self_agent).unwrap_or(false) =>
            {
                found.push(record(ControlKind::Revenge, ControlTarget::Outcome(o.id), e));
            }
            (EmotionKind::PosAffect, Some(o)) if cfg.success_reversal && o.status == GoalStatus::Succeeded => {
                found.push(record(ControlKind::SuccessReversal, ControlTarget::Outcome(o.id), e));
            }
            (EmotionKind::Fear, _) => {
                if let Some(s) = &e.situation {
                    found.push(record(ControlKind::Preparation, ControlTarget::Situation(s.clone()), e));
                }
            }
            _ => {}
        }
        for f in found {
            match out.iter_mut().find(|o| o.key() == f.key()) {
                Some(prev) if prev.intensity < f.intensity => *prev = f,
                Some(_) => {}
                None => out.push(f),
            }
        }
    }
    out.sort_by(|a, b| b.intensity.total_cmp(&a.intensity));
    out
}

/// A chosen strategy, with the episode whose plot unit it retrieved.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub strategy: StrategyDef,
    pub recalled: Option<EpisodeId>,
}

/// First strategy for `cg.kind` not in `tried`, preferring one whose plot
/// unit retrieves an episode. `extra_keys` refine retrieval and `skip`
/// excludes episodes (such as the one the goal arose from). With nothing
/// left the goal is marked FAILED.
pub fn select_strategy(
    cg: &mut ControlGoalRecord,
    catalog: &[StrategyDef],
    memory: &EpisodicMemory,
    extra_keys: &[IndexKey],
    tried: &BTreeSet<Symbol>,
    skip: &dyn Fn(&EpisodeRecord) -> bool,
) -> Option<Selection> {
    if cg.status != GoalStatus::Active {
        return None;
    }
    let candidates: Vec<&StrategyDef> = catalog.iter().filter(|s| s.kind == cg.kind && !tried.contains(&s.name)).collect();
    let recalled = |s: &StrategyDef| {
        let Realization::PlotUnit(pu) = &s.realization else { return None };
        let unit = IndexKey { kind: IndexKind::PlotUnit, value: pu.clone() };
        let mut keys = vec![unit.clone()];
        keys.extend(extra_keys.iter().cloned());
        memory
            .retrieve(&keys)
            .into_iter()
            .filter(|r| r.matched.contains(&unit))
            .find(|r| memory.episode(r.episode).map(|e| !skip(e)).unwrap_or(false))
            .map(|r| r.episode)
    };
    let chosen = candidates
        .iter()
        .find_map(|s| recalled(s).map(|ep| Selection { strategy: (*s).clone(), recalled: Some(ep) }))
        .or_else(|| candidates.first().map(|s| Selection { strategy: (*s).clone(), recalled: None }));
    match &chosen {
        Some(sel) => cg.strategy = Some(sel.strategy.name.clone()),
        None => cg.status = GoalStatus::Failed,
    }
    chosen
}

/// What `evaluate` needs to know about the situation.
pub struct EvalContext<'a> {
    pub plot_units: &'a [PlotUnitDef],
    pub agents: &'a BTreeSet<Symbol>,
    pub mental_heads: &'a BTreeSet<Symbol>,
    pub self_agent: &'a Symbol,
    /// Objective of the outcome the control goal is about.
    pub objective: Option<&'a Concept>,
    pub causer: Option<&'a Symbol>,
    pub importance: &'a dyn Fn(&Concept) -> f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub status: GoalStatus,
    /// The plot-unit instance that made a plot-unit strategy succeed.
    pub instance: Option<PuInstance>,
}

impl Evaluation {
    fn failed() -> Self {
        Evaluation { status: GoalStatus::Failed, instance: None }
    }
}

fn goal_change<'e>(e: &'e ScenarioEvent, status: &str) -> Option<&'e Concept> {
    match e.kind {
        EventKind::GoalChange => e.goal_change().filter(|(s, _)| *s == status).map(|(_, g)| g),
        _ => None,
    }
}

/// Whether a finished scenario realizes `strategy` for `cg`.
pub fn evaluate(cg: &ControlGoalRecord, strategy: &StrategyDef, scenario: &[ScenarioEvent], ctx: &EvalContext) -> Evaluation {
    let succeeded = |g: &Concept| scenario.iter().any(|e| goal_change(e, "succeeded") == Some(g));
    match &strategy.realization {
        Realization::PlotUnit(name) => {
            let Some(def) = ctx.plot_units.iter().find(|d| &d.name == name) else { return Evaluation::failed() };
            let els = elements(scenario, ctx.agents, ctx.mental_heads);
            let role = |inst: &PuInstance, r: &str| inst.bindings.get(&Symbol::new(r)).cloned();
            let node = |inst: &PuInstance, i: usize| inst.node_map.get(i).map(|&e| &els[e].concept);
            let found = recognize_all(def, &els).into_iter().find(|inst| {
                if role(inst, "a").as_ref() != Some(ctx.self_agent) {
                    return false;
                }
                match (cg.kind, name.as_str()) {
                    (ControlKind::Rationalization, "mixed-blessing") => match (node(inst, 0), node(inst, 1), ctx.objective) {
                        (Some(g), Some(g1), Some(obj)) => g == obj && (ctx.importance)(g1) > (ctx.importance)(g),
                        _ => false,
                    },
                    (ControlKind::Rationalization, _) => node(inst, 0) == ctx.objective,
                    (ControlKind::Revenge, _) => role(inst, "b").as_ref() == ctx.causer,
                    _ => true,
                }
            });
            match found {
                Some(inst) => Evaluation { status: GoalStatus::Succeeded, instance: Some(inst) },
                None => Evaluation::failed(),
            }
        }
        Realization::ExternalAttribution => {
            let attributed = scenario.iter().any(|e| {
                e.payload.head().as_str() == "external-cause" && e.payload.concept_arg(0) == ctx.objective
            });
            if attributed {
                Evaluation { status: GoalStatus::Succeeded, instance: None }
            } else {
                Evaluation::failed()
            }
        }
        Realization::ReplanAltered => {
            let assumed = scenario.iter().any(|e| e.kind == EventKind::Assumption);
            match ctx.objective {
                Some(obj) if assumed && succeeded(obj) => Evaluation { status: GoalStatus::Succeeded, instance: None },
                _ => Evaluation::failed(),
            }
        }
        Realization::HypotheticalThreat => {
            if scenario.iter().any(|e| goal_change(e, "succeeded").is_some()) {
                Evaluation { status: GoalStatus::Succeeded, instance: None }
            } else {
                Evaluation::failed()
            }
        }
    }
}

/// Emotional consequence of a succeeded control goal: rationalization
/// scales the source negative affect down, failure reversal renews it as
/// regret. Returns the emotion changed or created.
pub fn apply_success(
    cg: &ControlGoalRecord,
    outcome: Option<&OutcomeRecord>,
    emotions: &mut EmotionStore,
    cycle: u64,
) -> Result<Option<EmotionId>> {
    match (cg.kind, outcome) {
        (ControlKind::Rationalization, Some(o)) => {
            let id = emotions.negative_for(o.id).map(|e| e.id).ok_or(Error::MissingSource(o.id.0))?;
            let factor = emotions.config().rationalization_factor;
            emotions.scale_affect(id, factor)?;
            Ok(Some(id))
        }
        (ControlKind::FailureReversal, Some(o)) => emotions.renew_negative(o, cycle).map(Some),
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concept::c;
    use crate::emotion::EmotionConfig;
    use crate::goals::GoalId;
    use crate::memory::{EpisodeRecord, IndexContext, Reality};
    use crate::plot_units::builtin_catalog;
    use crate::store::ContextId;

    fn me() -> Symbol {
        Symbol::new("me")
    }

    fn outcome(id: u32, status: GoalStatus, causer: Option<&str>, imagined: bool) -> OutcomeRecord {
        OutcomeRecord {
            id: OutcomeId(id),
            goal: GoalId(id),
            objective: c("(ipt-lovers me debra)"),
            importance: 0.6,
            status,
            causer: causer.map(Symbol::new),
            context: ContextId(0),
            cycle: 1,
            imagined,
        }
    }

    fn emotion(id: u32, kind: EmotionKind, intensity: f64, target: Option<&str>, source: u32) -> EmotionRecord {
        EmotionRecord {
            id: EmotionId(id),
            kind,
            valence: kind.valence(),
            intensity,
            target: target.map(Symbol::new),
            source: Some(OutcomeId(source)),
            situation: None,
            imagined: false,
            cycle: 1,
        }
    }

    #[test]
    fn catalog_parses_in_declared_order() {
        let cat = builtin_strategies();
        let rat: Vec<_> = cat.iter().filter(|s| s.kind == ControlKind::Rationalization).map(|s| s.name.as_str()).collect();
        assert_eq!(rat, ["mixed-blessing", "success-born-of-adversity", "external-attribution"]);
        assert_eq!(cat.iter().find(|s| s.kind == ControlKind::Revenge).unwrap().level, RelaxLevel::High);
        assert!(parse_catalog("(strategy x nonsense replan-altered low)").is_err());
    }

    #[test]
    fn trigger_orders_by_intensity_and_respects_threshold() {
        let outs = [outcome(1, GoalStatus::Failed, Some("debra"), false)];
        let cfg = ControlConfig::default();
        assert!(trigger(&[], &outs, &me(), &cfg).is_empty());
        let strong = [emotion(1, EmotionKind::NegAffect, 0.8, None, 1)];
        let kinds: Vec<_> = trigger(&strong, &outs, &me(), &cfg).iter().map(|g| g.kind).collect();
        assert_eq!(kinds, [ControlKind::Rationalization]);
        let weak = [emotion(1, EmotionKind::NegAffect, 0.4, None, 1), emotion(2, EmotionKind::Anger, 0.8, Some("debra"), 1)];
        let kinds: Vec<_> = trigger(&weak, &outs, &me(), &cfg).iter().map(|g| g.kind).collect();
        assert_eq!(kinds, [ControlKind::Revenge, ControlKind::Rationalization, ControlKind::FailureReversal]);
    }

    #[test]
    fn imagined_outcomes_and_self_anger_do_not_trigger() {
        let cfg = ControlConfig::default();
        let imagined = [outcome(1, GoalStatus::Failed, Some("debra"), true)];
        assert!(trigger(&[emotion(1, EmotionKind::NegAffect, 0.8, None, 1)], &imagined, &me(), &cfg).is_empty());
        let own = [outcome(1, GoalStatus::Failed, Some("me"), false)];
        assert!(trigger(&[emotion(1, EmotionKind::Anger, 0.8, Some("me"), 1)], &own, &me(), &cfg).is_empty());
    }

    #[test]
    fn selection_prefers_recalled_plot_unit() {
        let cat = builtin_strategies();
        let mut memory = EpisodicMemory::new();
        let ix = IndexContext {
            catalog: builtin_catalog(),
            agents: ["me", "interviewer"].iter().map(|s| Symbol::new(s)).collect(),
            mental_heads: [Symbol::new("needs")].into_iter().collect(),
        };
        let ev = |k, t: &str| ScenarioEvent::new(k, c(t), ContextId(0));
        let ep = memory
            .store(
                EpisodeRecord::new(
                    Reality::Imagined,
                    vec![
                        ev(EventKind::Recall, "(failed (employer-employee me interviewer))"),
                        ev(EventKind::GoalChange, "(succeeded (needs interviewer me))"),
                        ev(EventKind::Action, "(refuse me interviewer (employ me interviewer))"),
                        ev(EventKind::GoalChange, "(failed (m-job interviewer))"),
                        ev(EventKind::GoalChange, "(succeeded (revenge me interviewer))"),
                    ],
                ),
                &ix,
            )
            .unwrap();
        let e = emotion(1, EmotionKind::Anger, 0.8, Some("debra"), 1);
        let mut cg = record(ControlKind::Revenge, ControlTarget::Outcome(OutcomeId(1)), &e);
        let sel = select_strategy(&mut cg, &cat, &memory, &[], &BTreeSet::new(), &|_| false).unwrap();
        assert_eq!(sel.strategy.name.as_str(), "retaliation");
        assert_eq!(sel.recalled, Some(ep));
        let tried: BTreeSet<Symbol> = [Symbol::new("retaliation")].into_iter().collect();
        assert!(select_strategy(&mut cg, &cat, &memory, &[], &tried, &|_| false).is_none());
        assert_eq!(cg.status, GoalStatus::Failed);
    }

    #[test]
    fn mixed_blessing_needs_more_important_loss() {
        let cat = builtin_strategies();
        let mb = cat.iter().find(|s| s.name.as_str() == "mixed-blessing").unwrap();
        let scenario = vec![
            ScenarioEvent::new(EventKind::GoalChange, c("(succeeded (ipt-lovers me debra))"), ContextId(1)),
            ScenarioEvent::new(EventKind::GoalChange, c("(failed (m-job me))"), ContextId(1)),
        ];
        let pus = builtin_catalog();
        let agents: BTreeSet<Symbol> = [me(), Symbol::new("debra")].into_iter().collect();
        let obj = c("(ipt-lovers me debra)");
        let e = emotion(1, EmotionKind::NegAffect, 0.8, None, 1);
        let cg = record(ControlKind::Rationalization, ControlTarget::Outcome(OutcomeId(1)), &e);
        let eval_with = |job: f64| {
            let imp = move |g: &Concept| if g.head().as_str() == "m-job" { job } else { 0.6 };
            let ctx = EvalContext {
                plot_units: &pus,
                agents: &agents,
                mental_heads: &BTreeSet::new(),
                self_agent: &me(),
                objective: Some(&obj),
                causer: None,
                importance: &imp,
            };
            evaluate(&cg, mb, &scenario, &ctx).status
        };
        assert_eq!(eval_with(0.8), GoalStatus::Succeeded);
        assert_eq!(eval_with(0.3), GoalStatus::Failed);
    }

    #[test]
    fn success_effects() {
        let mut store = EmotionStore::new(EmotionConfig::default());
        let o = outcome(1, GoalStatus::Failed, Some("debra"), false);
        let id = store.add(emotion(0, EmotionKind::NegAffect, 0.8, None, 1));
        let e = store.get(id).unwrap().clone();
        let rat = record(ControlKind::Rationalization, ControlTarget::Outcome(o.id), &e);
        apply_success(&rat, Some(&o), &mut store, 2).unwrap();
        assert!((store.get(id).unwrap().intensity - 0.4).abs() < 1e-9);
        let rev = record(ControlKind::FailureReversal, ControlTarget::Outcome(o.id), &e);
        let regret = apply_success(&rev, Some(&o), &mut store, 3).unwrap().unwrap();
        assert_eq!(store.get(regret).unwrap().kind, EmotionKind::Regret);
    }
}
