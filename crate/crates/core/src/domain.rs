//! Domain knowledge loaded from concept-syntax files.
//!
//! A domain bundles plan rules, relaxations, inference rules, the goal
//! tree, preservation and outcome rules, the English templates, the input
//! lexicon, seed episodes and the persona. The built-in NUART domain ships
//! in `data/nuart/`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::concept::{parse_concepts, Concept, Symbol, Term};
use crate::control::{builtin_strategies, StrategyDef};
use crate::emotion::EmotionKind;
use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::goals::{GoalStatus, GoalTree, PreservationRule};
use crate::memory::Reality;
use crate::planner::{
    ConditionalPrecondition, ConstraintClass, EventKind, PlanRule, Planner, RelaxLevel, RelaxationRule, ScenarioEvent,
};
use crate::plot_units::{builtin_catalog, PlotUnitDef};
use crate::store::{ContextId, DeriveRule};

/// A boxed rule banner.
#[derive(Clone, Debug, PartialEq)]
pub struct Banner {
    pub if_lines: Vec<String>,
    pub then_lines: Vec<String>,
}

impl Banner {
    pub fn new(if_lines: &[&str], then_lines: &[&str]) -> Self {
        Banner {
            if_lines: if_lines.iter().map(|s| s.to_string()).collect(),
            then_lines: then_lines.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// ` IF   ...` and ` THEN ...` lines, continuations indented to the
    /// text column, between dashed rules as wide as the longest line
    /// plus one.
    pub fn render(&self) -> String {
        let mut lines = Vec::new();
        for (i, l) in self.if_lines.iter().enumerate() {
            lines.push(if i == 0 { format!(" IF   {}", l) } else { format!("      {}", l) });
        }
        for (i, l) in self.then_lines.iter().enumerate() {
            lines.push(if i == 0 { format!(" THEN {}", l) } else { format!("      {}", l) });
        }
        let width = lines.iter().map(|l| l.chars().count()).max().unwrap_or(0) + 1;
        let rule = "-".repeat(width);
        let mut out = rule.clone();
        for l in lines {
            out.push('\n');
            out.push_str(&l);
        }
        out.push('\n');
        out.push_str(&rule);
        out
    }
}

/// An input matching `pattern` ends the waiting goal with `status`,
/// caused by `causer`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeRule {
    pub pattern: Concept,
    pub status: GoalStatus,
    pub causer: Term,
}

/// A situation matching `trigger` while `conditions` hold suggests `goal`.
#[derive(Clone, Debug, PartialEq)]
pub struct Opportunity {
    pub trigger: Concept,
    pub goal: Concept,
    pub conditions: Vec<Concept>,
}

/// A failure matching `pattern` can be blamed on `cause`.
#[derive(Clone, Debug, PartialEq)]
pub struct Attribution {
    pub pattern: Concept,
    pub cause: Concept,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedEmotion {
    pub kind: EmotionKind,
    pub target: Option<Symbol>,
    pub intensity: f64,
}

/// An episode placed in memory when a session starts.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeSeed {
    pub name: Symbol,
    pub reality: Reality,
    pub events: Vec<ScenarioEvent>,
    pub emotions: Vec<SeedEmotion>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Phrase {
    pub text: String,
    pub concepts: Vec<Concept>,
}

/// Case- and spacing-insensitive form of an input phrase.
pub fn normalize_phrase(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").trim_end_matches(['.', '!', '?']).to_lowercase()
}

#[derive(Clone, Debug)]
pub struct Domain {
    pub self_agent: Symbol,
    pub planner: Planner,
    pub functional: Vec<(Symbol, usize)>,
    pub goal_tree: GoalTree,
    pub preservation: Vec<PreservationRule>,
    pub outcome_rules: Vec<OutcomeRule>,
    pub opportunities: Vec<Opportunity>,
    pub attributions: Vec<Attribution>,
    pub mental_heads: BTreeSet<Symbol>,
    pub relationships: BTreeSet<Symbol>,
    pub social_regard: BTreeSet<Symbol>,
    pub generator: Generator,
    pub phrases: Vec<Phrase>,
    pub episodes: Vec<EpisodeSeed>,
    pub persona: Vec<Concept>,
    pub plot_units: Vec<PlotUnitDef>,
    pub strategies: Vec<StrategyDef>,
    pub banners: BTreeMap<String, Banner>,
}

fn bad(c: &Concept, why: &str) -> Error {
    Error::Domain(format!("{}: {}", why, c))
}

fn strings(c: &Concept) -> Result<Vec<String>> {
    c.args().map(|t| t.as_atom().map(|a| a.as_str().to_string()).ok_or_else(|| bad(c, "expected strings"))).collect()
}

fn concepts(c: &Concept) -> Result<Vec<Concept>> {
    c.args().map(|t| t.as_concept().cloned().ok_or_else(|| bad(c, "expected concepts"))).collect()
}

/// Sub-forms after the first `skip` positional arguments, by head.
fn parts(c: &Concept, skip: usize) -> BTreeMap<String, &Concept> {
    c.args().skip(skip).filter_map(Term::as_concept).map(|p| (p.head().as_str().to_string(), p)).collect()
}

fn load_banners(text: &str) -> Result<BTreeMap<String, Banner>> {
    let mut out = BTreeMap::new();
    for f in parse_concepts(text)? {
        if f.head().as_str() != "banner" {
            continue;
        }
        let name = f.atom_arg(0).ok_or_else(|| bad(&f, "banner needs a name"))?;
        let p = parts(&f, 1);
        let lines = |k: &str| p.get(k).map(|c| strings(c)).transpose().map(|v| v.unwrap_or_default());
        out.insert(name.as_str().to_string(), Banner { if_lines: lines("if")?, then_lines: lines("then")? });
    }
    Ok(out)
}

impl Domain {
    /// No domain knowledge, only the built-in plot units, strategies and
    /// banners.
    pub fn empty() -> Domain {
        Domain {
            self_agent: Symbol::new("me"),
            planner: Planner::default(),
            functional: Vec::new(),
            goal_tree: GoalTree::default(),
            preservation: Vec::new(),
            outcome_rules: Vec::new(),
            opportunities: Vec::new(),
            attributions: Vec::new(),
            mental_heads: BTreeSet::new(),
            relationships: BTreeSet::new(),
            social_regard: BTreeSet::new(),
            generator: Generator::new("me"),
            phrases: Vec::new(),
            episodes: Vec::new(),
            persona: Vec::new(),
            plot_units: builtin_catalog(),
            strategies: builtin_strategies(),
            banners: load_banners(include_str!("../data/banners.dd")).expect("built-in banners are well formed"),
        }
    }

    /// The built-in Los Angeles dating domain with its persona.
    pub fn nuart() -> Domain {
        let mut d = Domain::empty();
        for text in [
            include_str!("../data/nuart/rules.dd"),
            include_str!("../data/nuart/templates.dd"),
            include_str!("../data/nuart/lexicon.dd"),
            include_str!("../data/nuart/episodes.dd"),
        ] {
            d.add_text(text).expect("built-in domain is well formed");
        }
        d.add_persona_text(include_str!("../data/nuart/persona.dd")).expect("built-in persona is well formed");
        d
    }

    /// The earlier revenge daydream used for analogical recall.
    pub fn job_daydream_text() -> &'static str {
        include_str!("../data/nuart/job-daydream.dd")
    }

    /// The built-in session script.
    pub fn nuart_script() -> &'static str {
        include_str!("../data/nuart/nuart.script")
    }

    /// Load domain files in order on top of the built-ins.
    pub fn from_files<P: AsRef<Path>>(paths: &[P]) -> Result<Domain> {
        let mut d = Domain::empty();
        for p in paths {
            d.add_text(&std::fs::read_to_string(p)?)?;
        }
        Ok(d)
    }

    pub fn banner(&self, name: &str) -> Banner {
        self.banners.get(name).cloned().unwrap_or_else(|| Banner::new(&[name], &[]))
    }

    /// Every atom known to name an agent.
    pub fn agents(&self) -> BTreeSet<Symbol> {
        let mut out = self.generator.agents();
        out.insert(self.self_agent.clone());
        out
    }

    pub fn lookup_phrase(&self, line: &str) -> Option<&Phrase> {
        let key = normalize_phrase(line);
        self.phrases.iter().find(|p| p.text == key)
    }

    /// Persona files hold bare concepts, each a standing fact.
    pub fn add_persona_text(&mut self, text: &str) -> Result<()> {
        self.persona.extend(parse_concepts(text)?);
        Ok(())
    }
}

fn event_kind_form(c: &Concept) -> Result<ScenarioEvent> {
    let kind = EventKind::parse(c.head().as_str()).ok_or_else(|| bad(c, "unknown event kind"))?;
    let payload = c.concept_arg(0).ok_or_else(|| bad(c, "event needs a payload"))?.clone();
    Ok(ScenarioEvent::new(kind, payload, ContextId(0)))
}

impl Domain {
    fn plan_rule(&self, f: &Concept, primitive: bool) -> Result<PlanRule> {
        let name = f.atom_arg(0).ok_or_else(|| bad(f, "plan needs a name"))?;
        let goal = f.concept_arg(1).ok_or_else(|| bad(f, "plan needs a goal"))?;
        let mut rule = PlanRule::new(name.as_str(), goal.clone());
        rule.primitive = primitive;
        for p in f.args().skip(2) {
            let p = p.as_concept().ok_or_else(|| bad(f, "plan parts must be forms"))?;
            match p.head().as_str() {
                "pre" => rule.preconditions = concepts(p)?,
                "subgoals" if !primitive => rule.subgoals = concepts(p)?,
                "effects" => rule.effects = concepts(p)?,
                "conditional" => {
                    let (Some(condition), Some(precondition)) = (p.concept_arg(0), p.concept_arg(1)) else {
                        return Err(bad(p, "conditional needs a condition and a precondition"));
                    };
                    rule.conditional.push(ConditionalPrecondition {
                        condition: condition.clone(),
                        precondition: precondition.clone(),
                    });
                }
                _ => return Err(bad(p, "unknown plan part")),
            }
        }
        Ok(rule)
    }

    fn seed(&self, f: &Concept) -> Result<EpisodeSeed> {
        let name = f.atom_arg(0).ok_or_else(|| bad(f, "episode needs a name"))?.clone();
        let reality = f.atom_arg(1).and_then(|r| Reality::parse(r.as_str())).ok_or_else(|| bad(f, "bad reality"))?;
        let p = parts(f, 2);
        let events = match p.get("events") {
            Some(evs) => concepts(evs)?.iter().map(event_kind_form).collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        let mut emotions = Vec::new();
        if let Some(es) = p.get("emotions") {
            for e in concepts(es)? {
                let kind = EmotionKind::from_symbol(e.head().as_str()).ok_or_else(|| bad(&e, "unknown emotion"))?;
                let target = e.atom_arg(0).cloned();
                let intensity = e.arg(1).and_then(Term::as_number).unwrap_or(0.5);
                emotions.push(SeedEmotion { kind, target, intensity });
            }
        }
        Ok(EpisodeSeed { name, reality, events, emotions })
    }

    /// Add every form in `text`. Unknown heads are an error so typos do
    /// not pass silently.
    pub fn add_text(&mut self, text: &str) -> Result<()> {
        let forms = parse_concepts(text)?;
        self.generator.load(&forms)?;
        for f in &forms {
            let head = f.head().as_str();
            match head {
                "template" | "name" => {}
                "self" => {
                    let s = f.atom_arg(0).ok_or_else(|| bad(f, "self needs an atom"))?;
                    self.self_agent = s.clone();
                    let mut g = Generator::new(s.as_str());
                    g.load(&forms)?;
                    for t in self.generator.templates() {
                        if !g.templates().contains(t) {
                            g.add_template(t.form, t.pattern.clone(), &t.text);
                        }
                    }
                    self.generator = g;
                }
                "plan" | "action" => {
                    let rule = self.plan_rule(f, head == "action")?;
                    self.planner.rules.retain(|r| r.name != rule.name);
                    self.planner.rules.push(rule);
                }
                "relax" => {
                    let class = f.atom_arg(0).and_then(|c| ConstraintClass::parse(c.as_str()));
                    let level = f.atom_arg(2).and_then(|l| RelaxLevel::parse(l.as_str()));
                    match (class, f.concept_arg(1), level) {
                        (Some(class), Some(pattern), Some(min_level)) => {
                            self.planner.relaxations.push(RelaxationRule { class, pattern: pattern.clone(), min_level })
                        }
                        _ => return Err(bad(f, "bad relaxation")),
                    }
                }
                "derive" => {
                    let all = concepts(f)?;
                    let (conclusion, premises) = all.split_first().ok_or_else(|| bad(f, "derive needs a conclusion"))?;
                    self.planner.derive.push(DeriveRule { conclusion: conclusion.clone(), premises: premises.to_vec() });
                }
                "functional" => {
                    let h = f.atom_arg(0).ok_or_else(|| bad(f, "functional needs a head"))?;
                    let n = f.arg(1).and_then(Term::as_number).ok_or_else(|| bad(f, "functional needs a key count"))?;
                    self.functional.push((h.clone(), n as usize));
                }
                "importance" => {
                    let class = f.atom_arg(0).ok_or_else(|| bad(f, "importance needs a class"))?;
                    let v = f.arg(1).and_then(Term::as_number).ok_or_else(|| bad(f, "importance needs a value"))?;
                    self.goal_tree.set_importance(class.as_str(), v)?;
                }
                "goal-class" => match (f.atom_arg(0), f.atom_arg(1)) {
                    (Some(h), Some(c)) => self.goal_tree.set_class(h.as_str(), c.as_str()),
                    _ => return Err(bad(f, "bad goal-class")),
                },
                "preserve" => {
                    let name = f.atom_arg(0).ok_or_else(|| bad(f, "preserve needs a name"))?;
                    let theme = f.concept_arg(1).ok_or_else(|| bad(f, "preserve needs a theme"))?;
                    let p = parts(f, 2);
                    let requirement = p
                        .get("requirement")
                        .and_then(|r| r.concept_arg(0))
                        .ok_or_else(|| bad(f, "preserve needs a requirement"))?;
                    let objective = p.get("objective").and_then(|o| o.concept_arg(0)).unwrap_or(theme);
                    let lines = |k: &str| p.get(k).map(|c| strings(c)).transpose().map(|v| v.unwrap_or_default());
                    self.preservation.push(PreservationRule {
                        name: name.clone(),
                        theme: theme.clone(),
                        evidence: p.get("evidence").map(|e| concepts(e)).transpose()?.unwrap_or_default(),
                        requirement: requirement.clone(),
                        objective: objective.clone(),
                        banner_if: lines("if")?,
                        banner_then: lines("then")?,
                    });
                }
                "outcome-rule" => {
                    let status = match f.atom_arg(1).map(|s| s.as_str()) {
                        Some("failed") => GoalStatus::Failed,
                        Some("succeeded") => GoalStatus::Succeeded,
                        _ => return Err(bad(f, "outcome-rule status must be failed or succeeded")),
                    };
                    match (f.concept_arg(0), f.arg(2)) {
                        (Some(p), Some(causer)) => {
                            self.outcome_rules.push(OutcomeRule { pattern: p.clone(), status, causer: causer.clone() })
                        }
                        _ => return Err(bad(f, "bad outcome-rule")),
                    }
                }
                "opportunity" => {
                    let all = concepts(f)?;
                    if all.len() < 2 {
                        return Err(bad(f, "opportunity needs a trigger and a goal"));
                    }
                    self.opportunities.push(Opportunity {
                        trigger: all[0].clone(),
                        goal: all[1].clone(),
                        conditions: all[2..].to_vec(),
                    });
                }
                "attribution" => match (f.concept_arg(0), f.concept_arg(1)) {
                    (Some(p), Some(c)) => self.attributions.push(Attribution { pattern: p.clone(), cause: c.clone() }),
                    _ => return Err(bad(f, "bad attribution")),
                },
                "mental" | "relationship" | "social-regard" => {
                    let set = match head {
                        "mental" => &mut self.mental_heads,
                        "relationship" => &mut self.relationships,
                        _ => &mut self.social_regard,
                    };
                    for a in f.args() {
                        set.insert(a.as_atom().ok_or_else(|| bad(f, "expected heads"))?.clone());
                    }
                }
                "phrase" => {
                    let text = f.atom_arg(0).ok_or_else(|| bad(f, "phrase needs text"))?;
                    let cs: Vec<Concept> = f.args().skip(1).filter_map(Term::as_concept).cloned().collect();
                    if cs.is_empty() {
                        return Err(bad(f, "phrase needs concepts"));
                    }
                    self.phrases.push(Phrase { text: normalize_phrase(text.as_str()), concepts: cs });
                }
                "episode" => {
                    let seed = self.seed(f)?;
                    self.episodes.retain(|e| e.name != seed.name);
                    self.episodes.push(seed);
                }
                "persona" => self.persona.extend(concepts(f)?),
                "plot-unit" => {
                    let def = PlotUnitDef::from_concept(f)?;
                    self.plot_units.retain(|d| d.name != def.name);
                    self.plot_units.push(def);
                }
                "strategy" => {
                    let s = StrategyDef::from_concept(f)?;
                    self.strategies.retain(|x| x.name != s.name);
                    self.strategies.push(s);
                }
                "banner" => self.banners.extend(load_banners(&f.to_string())?),
                _ => return Err(bad(f, "unknown domain form")),
            }
        }
        Ok(())
    }
}
