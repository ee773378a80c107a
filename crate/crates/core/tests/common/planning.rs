//! Brute-force planning checks over the micro-domains.
//!
//! The vault domain is restated here by hand as propositional rules, so the
//! reference search shares no parsing or unification code with the library.

use std::collections::BTreeSet;
use std::path::PathBuf;

use daydreamer::concept::Concept;
use daydreamer::domain::Domain;
use daydreamer::planner::{EventKind, PlanOutcome, PlanRequest, RelaxLevel};
use daydreamer::store::{ActivationConfig, WorkingMemory};

pub fn micro_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/micro").join(format!("{name}.dd"))
}

pub fn micro(name: &str) -> Domain {
    Domain::from_files(&[micro_path(name)]).expect("micro-domain loads")
}

pub fn concept(s: &str) -> Concept {
    Concept::parse(s).expect("well-formed concept")
}

struct Rule {
    goal: &'static str,
    pre: &'static [&'static str],
    sub: &'static [&'static str],
    effects: &'static [&'static str],
    primitive: bool,
}

const VAULT: &[Rule] = &[
    Rule {
        goal: "(rich me)",
        pre: &["(has me code)"],
        sub: &["(walk me vault)"],
        effects: &["(rich me)"],
        primitive: false,
    },
    Rule {
        goal: "(has me code)",
        pre: &["(has me money)"],
        sub: &["(tells guard me code)"],
        effects: &["(has me code)"],
        primitive: false,
    },
    Rule {
        goal: "(has me money)",
        pre: &["(employed me)"],
        sub: &["(has me code)", "(work me)"],
        effects: &["(has me money)"],
        primitive: false,
    },
    Rule { goal: "(walk me vault)", pre: &[], sub: &[], effects: &[], primitive: true },
];

pub const VAULT_FACTS: &[&str] = &[
    "(rich me)",
    "(has me code)",
    "(has me money)",
    "(employed me)",
    "(work me)",
    "(tells guard me code)",
    "(walk me vault)",
];

fn vault_relaxable(fact: &str, level: RelaxLevel) -> Option<&'static str> {
    let (class, min) = match fact {
        "(tells guard me code)" => ("other-behavior", RelaxLevel::Low),
        "(employed me)" => ("self-attribute", RelaxLevel::High),
        "(work me)" => ("physical", RelaxLevel::High),
        _ => return None,
    };
    (level != RelaxLevel::None && level >= min).then_some(class)
}

#[derive(Clone)]
enum Item {
    Achieve { goal: &'static str, depth: usize, stack: Vec<&'static str> },
    Apply { action: Option<&'static str>, effects: &'static [&'static str] },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub facts: BTreeSet<String>,
    pub actions: Vec<String>,
    pub assumptions: Vec<String>,
}

struct Reference {
    level: RelaxLevel,
    max_depth: usize,
    looped: bool,
}

impl Reference {
    fn solve(&mut self, agenda: &[Item], st: Trace) -> Option<Trace> {
        let Some((first, rest)) = agenda.split_first() else {
            return Some(st);
        };
        match first {
            Item::Apply { action, effects } => {
                let mut st = st;
                if let Some(a) = action {
                    st.actions.push(a.to_string());
                    st.facts.insert(a.to_string());
                }
                st.facts.extend(effects.iter().map(|e| e.to_string()));
                self.solve(rest, st)
            }
            Item::Achieve { goal, depth, stack } => {
                if *depth > self.max_depth {
                    return None;
                }
                if st.facts.contains(*goal) {
                    return self.solve(rest, st);
                }
                if stack.contains(goal) {
                    self.looped = true;
                    return None;
                }
                for r in VAULT.iter().filter(|r| r.goal == *goal) {
                    let mut child_stack = stack.clone();
                    child_stack.push(goal);
                    let child = |g: &&'static str| Item::Achieve { goal: g, depth: depth + 1, stack: child_stack.clone() };
                    let mut items: Vec<Item> = r.pre.iter().chain(r.sub.iter()).map(child).collect();
                    items.push(Item::Apply { action: r.primitive.then_some(r.goal), effects: r.effects });
                    items.extend(rest.iter().cloned());
                    if let Some(done) = self.solve(&items, st.clone()) {
                        return Some(done);
                    }
                }
                let class = vault_relaxable(goal, self.level)?;
                let mut st = st;
                st.assumptions.push(format!("({} {})", class, goal));
                st.facts.insert(goal.to_string());
                self.solve(rest, st)
            }
        }
    }
}

/// Outcome of the reference search: the final state on success, and
/// whether any branch hit a repeated goal.
pub fn reference(goal: &'static str, initial: &[&str], level: RelaxLevel, max_depth: usize) -> (Option<Trace>, bool) {
    let mut r = Reference { level, max_depth, looped: false };
    let start = Trace { facts: initial.iter().map(|s| s.to_string()).collect(), ..Trace::default() };
    let found = r.solve(&[Item::Achieve { goal, depth: 0, stack: Vec::new() }], start);
    (found, r.looped)
}

/// What the library planner reports for the same question.
pub fn library(domain: &Domain, goal: &str, initial: &[&str], level: RelaxLevel, max_depth: usize) -> (PlanOutcome, Trace) {
    let mut wm = WorkingMemory::new(ActivationConfig::default());
    let real = wm.real();
    for f in initial {
        wm.assert_entry(concept(f), real).unwrap();
    }
    let mut req = PlanRequest::new(concept(goal), level);
    req.budget = 1_000_000;
    req.max_depth = max_depth;
    let res = domain.planner.run(&wm, real, &req).unwrap();
    let mut t = Trace::default();
    t.facts = res.wm.visible(real).iter().map(|e| e.concept.to_string()).collect();
    for ev in &res.events {
        match ev.kind {
            EventKind::Action => t.actions.push(ev.payload.to_string()),
            EventKind::Assumption => {
                let (class, c) = ev.assumption().unwrap();
                t.assumptions.push(format!("({} {})", class.symbol(), c));
            }
            _ => {}
        }
    }
    (res.outcome, t)
}

fn subsets<'a, 'b>(items: &'b [&'a str]) -> impl Iterator<Item = Vec<&'a str>> + 'b {
    (0..1u32 << items.len()).map(move |mask| {
        items.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, s)| *s).collect()
    })
}

/// Compare the library against the reference for every goal, level and
/// starting subset of vault facts. Returns the number of cases checked.
pub fn vault_equivalence(max_depth: usize) -> Result<usize, String> {
    let domain = micro("vault");
    let mut cases = 0;
    for initial in subsets(VAULT_FACTS) {
        for goal in VAULT_FACTS {
            for level in RelaxLevel::ALL {
                cases += 1;
                let (want, looped) = reference(goal, &initial, level, max_depth);
                let (got, trace) = library(&domain, goal, &initial, level, max_depth);
                let ctx = || format!("goal {goal} level {level:?} from {initial:?}");
                match (&want, got) {
                    (Some(w), PlanOutcome::Succeeded) => {
                        if *w != trace {
                            return Err(format!("{}: reference {:?} vs library {:?}", ctx(), w, trace));
                        }
                    }
                    (None, PlanOutcome::Loop) if looped => {}
                    (None, PlanOutcome::Failed) if !looped => {}
                    _ => {
                        return Err(format!("{}: reference {:?} (loop {}) vs library {:?}", ctx(), want, looped, got));
                    }
                }
            }
        }
    }
    Ok(cases)
}

/// Ground concepts mentioned by a domain's plan rules, and the subset no
/// rule achieves.
fn atoms(domain: &Domain) -> (Vec<String>, Vec<String>) {
    let mut all = BTreeSet::new();
    let mut achieved = BTreeSet::new();
    for r in &domain.planner.rules {
        achieved.insert(r.goal.to_string());
        for c in std::iter::once(&r.goal).chain(&r.preconditions).chain(&r.subgoals).chain(&r.effects) {
            if c.is_ground() {
                all.insert(c.to_string());
            }
        }
    }
    let leaves = all.iter().filter(|a| !achieved.contains(*a)).cloned().collect();
    (all.into_iter().collect(), leaves)
}

/// For every goal and every starting subset of leaf facts: anything
/// achievable at a level stays achievable above it, and nothing is ever
/// assumed at NONE.
pub fn relaxation_monotonicity(names: &[&str]) -> Result<usize, String> {
    let mut cases = 0;
    for name in names {
        let domain = micro(name);
        let (goals, leaves) = atoms(&domain);
        let leaves: Vec<&str> = leaves.iter().map(String::as_str).collect();
        for initial in subsets(&leaves) {
            for goal in &goals {
                let mut prev = false;
                for level in RelaxLevel::ALL {
                    cases += 1;
                    let (outcome, trace) = library(&domain, goal, &initial, level, 12);
                    let ok = outcome == PlanOutcome::Succeeded;
                    if prev && !ok {
                        return Err(format!("{name}: {goal} from {initial:?} lost at {level:?}"));
                    }
                    if level == RelaxLevel::None && !trace.assumptions.is_empty() {
                        return Err(format!("{name}: assumption at NONE for {goal}: {:?}", trace.assumptions));
                    }
                    prev = ok;
                }
            }
        }
    }
    Ok(cases)
}
