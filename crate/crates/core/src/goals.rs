//! Personal, preservation and delta goals, the goal tree that ranks them,
//! outcome recording, focus selection and conflict resolution.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::concept::{Bindings, Concept, Symbol};
use crate::error::{Error, Result};
use crate::store::{ContextId, DeriveRule, WorkingMemory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GoalId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OutcomeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoalKind {
    Personal,
    Preservation,
    Delta,
    ControlLinked,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoalStatus {
    Active,
    Succeeded,
    Failed,
}

impl fmt::Display for GoalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GoalStatus::Active => "active",
            GoalStatus::Succeeded => "succeeded",
            GoalStatus::Failed => "failed",
        })
    }
}

impl fmt::Display for GoalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GoalKind::Personal => "personal",
            GoalKind::Preservation => "preservation",
            GoalKind::Delta => "delta",
            GoalKind::ControlLinked => "control",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoalRecord {
    pub id: GoalId,
    pub objective: Concept,
    pub kind: GoalKind,
    pub status: GoalStatus,
    pub importance: f64,
    pub context: ContextId,
    pub causer: Option<Symbol>,
    /// What the planner must re-establish for a preservation goal.
    pub requirement: Option<Concept>,
    activation_order: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub id: OutcomeId,
    pub goal: GoalId,
    pub objective: Concept,
    pub importance: f64,
    pub status: GoalStatus,
    pub causer: Option<Symbol>,
    pub context: ContextId,
    pub cycle: u64,
    pub imagined: bool,
}

/// Importance of each goal class, plus the mapping from concept heads to
/// classes (`ipt-lovers` is a `love` goal).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GoalTree {
    importance: BTreeMap<Symbol, f64>,
    class_of: BTreeMap<Symbol, Symbol>,
}

impl GoalTree {
    pub fn set_importance(&mut self, class: &str, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Domain(format!("importance of {} out of [0,1]: {}", class, value)));
        }
        self.importance.insert(Symbol::new(class), value);
        Ok(())
    }

    pub fn set_class(&mut self, head: &str, class: &str) {
        self.class_of.insert(Symbol::new(head), Symbol::new(class));
    }

    pub fn class_of(&self, head: &Symbol) -> Option<&Symbol> {
        if let Some((k, _)) = self.importance.get_key_value(head) {
            return Some(k);
        }
        self.class_of.get(head)
    }

    pub fn importance_of(&self, head: &Symbol) -> Option<f64> {
        self.class_of(head).and_then(|c| self.importance.get(c)).copied()
    }

    /// Classes by descending importance; ties broken by name.
    pub fn ranked(&self) -> Vec<(Symbol, f64)> {
        let mut v: Vec<_> = self.importance.iter().map(|(k, v)| (k.clone(), *v)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    }

    /// Read `(importance <class> <value>)` and `(goal-class <head> <class>)`
    /// forms; everything else is ignored.
    pub fn from_concepts<'a>(forms: impl IntoIterator<Item = &'a Concept>) -> Result<GoalTree> {
        let mut tree = GoalTree::default();
        for f in forms {
            match f.head().as_str() {
                "importance" => {
                    let class = f.atom_arg(0).ok_or_else(|| Error::Domain(format!("bad form {}", f)))?;
                    let v = f.arg(1).and_then(|t| t.as_number()).ok_or_else(|| Error::Domain(format!("bad form {}", f)))?;
                    tree.set_importance(class.as_str(), v)?;
                }
                "goal-class" => {
                    let (Some(h), Some(cl)) = (f.atom_arg(0), f.atom_arg(1)) else {
                        return Err(Error::Domain(format!("bad form {}", f)));
                    };
                    tree.set_class(h.as_str(), cl.as_str());
                }
                _ => {}
            }
        }
        Ok(tree)
    }
}

/// "Theme holds but its requirement is violated" triggers a preservation
/// goal on `objective`. A violation needs positive evidence: every
/// `evidence` pattern must be provable before the requirement is checked.
#[derive(Clone, Debug, PartialEq)]
pub struct PreservationRule {
    pub name: Symbol,
    pub theme: Concept,
    pub evidence: Vec<Concept>,
    pub requirement: Concept,
    pub objective: Concept,
    pub banner_if: Vec<String>,
    pub banner_then: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConflictVerdict {
    AbandonPursuit,
    Continue,
}

/// Pursuit yields only to a strictly more important threatened goal.
pub fn resolve_conflict(pursuing: &GoalRecord, threatened: &GoalRecord) -> ConflictVerdict {
    if threatened.importance > pursuing.importance {
        ConflictVerdict::AbandonPursuit
    } else {
        ConflictVerdict::Continue
    }
}

#[derive(Clone, Debug, Default)]
pub struct GoalSystem {
    tree: GoalTree,
    goals: Vec<GoalRecord>,
    outcomes: Vec<OutcomeRecord>,
    clock: u64,
}

impl GoalSystem {
    pub fn new(tree: GoalTree) -> Self {
        GoalSystem { tree, ..Default::default() }
    }

    pub fn tree(&self) -> &GoalTree {
        &self.tree
    }

    pub fn activate_goal(&mut self, objective: Concept, kind: GoalKind, context: ContextId) -> Result<GoalId> {
        let importance = self
            .tree
            .importance_of(objective.head())
            .ok_or_else(|| Error::UnknownGoalClass(objective.head().to_string()))?;
        self.activate_with_importance(objective, kind, context, importance)
    }

    /// Activation for goals outside the tree (control-linked goals inherit
    /// the importance of the outcome they serve).
    pub fn activate_with_importance(
        &mut self,
        objective: Concept,
        kind: GoalKind,
        context: ContextId,
        importance: f64,
    ) -> Result<GoalId> {
        if !(0.0..=1.0).contains(&importance) {
            return Err(Error::Domain(format!("importance out of [0,1]: {}", importance)));
        }
        let id = GoalId(self.goals.len() as u32 + 1);
        self.clock += 1;
        self.goals.push(GoalRecord {
            id,
            objective,
            kind,
            status: GoalStatus::Active,
            importance,
            context,
            causer: None,
            requirement: None,
            activation_order: self.clock,
        });
        Ok(id)
    }

    pub fn goal(&self, id: GoalId) -> Result<&GoalRecord> {
        self.goals.get((id.0 as usize).wrapping_sub(1)).ok_or(Error::MissingGoal(id.0))
    }

    fn goal_mut(&mut self, id: GoalId) -> Result<&mut GoalRecord> {
        self.goals.get_mut((id.0 as usize).wrapping_sub(1)).ok_or(Error::MissingGoal(id.0))
    }

    pub fn goals(&self) -> &[GoalRecord] {
        &self.goals
    }

    pub fn outcomes(&self) -> &[OutcomeRecord] {
        &self.outcomes
    }

    pub fn outcome(&self, id: OutcomeId) -> Option<&OutcomeRecord> {
        self.outcomes.get((id.0 as usize).wrapping_sub(1))
    }

    pub fn outcome_of(&self, goal: GoalId) -> Option<&OutcomeRecord> {
        self.outcomes.iter().find(|o| o.goal == goal)
    }

    pub fn set_requirement(&mut self, id: GoalId, requirement: Concept) -> Result<()> {
        self.goal_mut(id)?.requirement = Some(requirement);
        Ok(())
    }

    /// Terminal transition. `imagined` tags outcomes reached inside
    /// imagined contexts.
    pub fn record_outcome(
        &mut self,
        goal: GoalId,
        status: GoalStatus,
        causer: Option<Symbol>,
        cycle: u64,
        imagined: bool,
    ) -> Result<OutcomeId> {
        if status == GoalStatus::Active {
            return Err(Error::Contract("an outcome must be terminal".into()));
        }
        let next = OutcomeId(self.outcomes.len() as u32 + 1);
        let g = self.goal_mut(goal)?;
        if g.status != GoalStatus::Active {
            return Err(Error::IllegalTransition { goal: goal.0, status: g.status.to_string() });
        }
        g.status = status;
        g.causer = causer.clone();
        let rec = OutcomeRecord {
            id: next,
            goal,
            objective: g.objective.clone(),
            importance: g.importance,
            status,
            causer,
            context: g.context,
            cycle,
            imagined,
        };
        let id = rec.id;
        self.outcomes.push(rec);
        Ok(id)
    }

    /// Highest-importance active goal in `ctx`; the most recent wins ties.
    pub fn select_focus(&self, ctx: ContextId) -> Option<&GoalRecord> {
        self.goals
            .iter()
            .filter(|g| g.context == ctx && g.status == GoalStatus::Active)
            .max_by(|a, b| a.importance.total_cmp(&b.importance).then(a.activation_order.cmp(&b.activation_order)))
    }

    pub fn find_active(&self, objective: &Concept, ctx: ContextId) -> Option<&GoalRecord> {
        self.goals
            .iter()
            .rev()
            .find(|g| g.context == ctx && g.status == GoalStatus::Active && &g.objective == objective)
    }

    /// Activate one preservation goal per violated requirement. Returns the
    /// new goals with the index of the rule that fired. Idempotent: a
    /// violation already covered by a preservation goal in `ctx` is skipped.
    pub fn preservation_triggers(
        &mut self,
        wm: &WorkingMemory,
        ctx: ContextId,
        rules: &[PreservationRule],
        derive: &[DeriveRule],
    ) -> Vec<(GoalId, usize)> {
        let mut out = Vec::new();
        for (ri, rule) in rules.iter().enumerate() {
            let mut frontier = wm.prove(&rule.theme, ctx, derive, &Bindings::new());
            for ev in &rule.evidence {
                frontier = frontier.iter().flat_map(|b| wm.prove(ev, ctx, derive, b)).collect();
            }
            for b in frontier {
                let requirement = rule.requirement.substitute(&b);
                if wm.provable(&requirement, ctx, derive) {
                    continue;
                }
                let objective = rule.objective.substitute(&b);
                if !objective.is_ground() {
                    continue;
                }
                let covered = self.goals.iter().any(|g| {
                    g.context == ctx && g.kind == GoalKind::Preservation && g.objective == objective
                });
                if covered {
                    continue;
                }
                if let Ok(id) = self.activate_goal(objective, GoalKind::Preservation, ctx) {
                    let _ = self.set_requirement(id, requirement);
                    out.push((id, ri));
                }
            }
        }
        out
    }
}
