//! Working memory: ground concepts with activation, layered into one REAL
//! context and any number of IMAGINED children.
//!
//! Lookups in a child fall through to its ancestors unless the child has
//! retracted the fact locally (a tombstone). Imagined planning therefore
//! never mutates REAL.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::concept::{unify_with, Bindings, Concept, Symbol};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContextId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntryId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContextKind {
    Real,
    Imagined,
}

#[derive(Clone, Debug)]
pub struct ContextRef {
    pub id: ContextId,
    pub kind: ContextKind,
    pub parent: Option<ContextId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WmEntry {
    pub id: EntryId,
    pub concept: Concept,
    pub context: ContextId,
    pub activation: f64,
    pub created_cycle: u64,
}

/// Activation schedule. Defaults: start 1.0, step 0.1 per cycle, removal
/// below 0.2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationConfig {
    pub start: f64,
    pub decay_step: f64,
    pub removal_limit: f64,
}

impl Default for ActivationConfig {
    fn default() -> Self {
        ActivationConfig { start: 1.0, decay_step: 0.1, removal_limit: 0.2 }
    }
}

/// Horn-style inference used by `prove`: the conclusion holds when every
/// premise does.
#[derive(Clone, Debug, PartialEq)]
pub struct DeriveRule {
    pub conclusion: Concept,
    pub premises: Vec<Concept>,
}

// keeps 0.2 - 0.1 - 0.1 style arithmetic exact enough to compare with limits
fn tidy(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

#[derive(Clone, Debug)]
pub struct WorkingMemory {
    contexts: Vec<ContextRef>,
    entries: BTreeMap<EntryId, WmEntry>,
    tombstones: BTreeMap<ContextId, Vec<Concept>>,
    functional: BTreeMap<Symbol, usize>,
    pinned: BTreeSet<EntryId>,
    config: ActivationConfig,
    next_entry: u64,
    cycle: u64,
}

impl Default for WorkingMemory {
    fn default() -> Self {
        Self::new(ActivationConfig::default())
    }
}

impl WorkingMemory {
    pub fn new(config: ActivationConfig) -> Self {
        WorkingMemory {
            contexts: vec![ContextRef { id: ContextId(0), kind: ContextKind::Real, parent: None }],
            entries: BTreeMap::new(),
            tombstones: BTreeMap::new(),
            functional: BTreeMap::new(),
            pinned: BTreeSet::new(),
            config,
            next_entry: 1,
            cycle: 0,
        }
    }

    pub fn config(&self) -> ActivationConfig {
        self.config
    }

    pub fn real(&self) -> ContextId {
        ContextId(0)
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// Open an IMAGINED child of `parent`.
    pub fn spawn(&mut self, parent: ContextId) -> Result<ContextId> {
        self.context(parent)?;
        let id = ContextId(self.contexts.len() as u32);
        self.contexts.push(ContextRef { id, kind: ContextKind::Imagined, parent: Some(parent) });
        Ok(id)
    }

    pub fn context(&self, id: ContextId) -> Result<&ContextRef> {
        self.contexts.get(id.0 as usize).ok_or(Error::MissingContext(id.0))
    }

    pub fn is_imagined(&self, id: ContextId) -> bool {
        self.context(id).map(|c| c.kind == ContextKind::Imagined).unwrap_or(false)
    }

    /// Declare `head` functional on its first `key_args` arguments: asserting
    /// a new value retracts any other visible fact with the same key.
    pub fn declare_functional(&mut self, head: Symbol, key_args: usize) {
        self.functional.insert(head, key_args);
    }

    fn chain(&self, ctx: ContextId) -> Vec<ContextId> {
        let mut out = Vec::new();
        let mut cur = Some(ctx);
        while let Some(c) = cur {
            out.push(c);
            cur = self.contexts.get(c.0 as usize).and_then(|r| r.parent);
        }
        out
    }

    pub fn assert_entry(&mut self, concept: Concept, ctx: ContextId) -> Result<EntryId> {
        if !concept.is_ground() {
            return Err(Error::PatternNotGround(concept.to_string()));
        }
        self.context(ctx)?;
        if let Some(key) = self.functional.get(concept.head()).copied() {
            let stale: Vec<Concept> = self
                .visible(ctx)
                .into_iter()
                .map(|e| e.concept.clone())
                .filter(|old| {
                    old.head() == concept.head()
                        && old != &concept
                        && old.args().take(key).eq(concept.args().take(key))
                })
                .collect();
            for old in stale {
                self.retract(&old, ctx)?;
            }
        }
        if let Some(t) = self.tombstones.get_mut(&ctx) {
            t.retain(|x| x != &concept);
        }
        if let Some(e) = self.entries.values_mut().find(|e| e.context == ctx && e.concept == concept) {
            e.activation = self.config.start;
            return Ok(e.id);
        }
        let id = EntryId(self.next_entry);
        self.next_entry += 1;
        self.entries.insert(
            id,
            WmEntry { id, concept, context: ctx, activation: self.config.start, created_cycle: self.cycle },
        );
        Ok(id)
    }

    /// Remove a fact as seen from `ctx`. Local entries are deleted; facts
    /// inherited from an ancestor are shadowed with a tombstone.
    pub fn retract(&mut self, concept: &Concept, ctx: ContextId) -> Result<bool> {
        self.context(ctx)?;
        let local: Vec<EntryId> =
            self.entries.values().filter(|e| e.context == ctx && &e.concept == concept).map(|e| e.id).collect();
        let mut changed = !local.is_empty();
        for id in local {
            self.entries.remove(&id);
        }
        let inherited = self.visible(ctx).iter().any(|e| &e.concept == concept);
        if inherited {
            self.tombstones.entry(ctx).or_default().push(concept.clone());
            changed = true;
        }
        Ok(changed)
    }

    /// Entries visible from `ctx`, in insertion order.
    pub fn visible(&self, ctx: ContextId) -> Vec<&WmEntry> {
        let chain = self.chain(ctx);
        let depth_of = |c: ContextId| chain.iter().position(|x| *x == c);
        let mut out: Vec<&WmEntry> = Vec::new();
        for e in self.entries.values() {
            let Some(d) = depth_of(e.context) else { continue };
            // shadowed by a tombstone in a nearer context
            let shadowed = chain[..d]
                .iter()
                .any(|c| self.tombstones.get(c).map(|t| t.contains(&e.concept)).unwrap_or(false));
            if shadowed {
                continue;
            }
            // a nearer context holds its own copy
            let nearer_copy = self
                .entries
                .values()
                .any(|o| o.concept == e.concept && depth_of(o.context).map(|od| od < d).unwrap_or(false));
            if nearer_copy {
                continue;
            }
            out.push(e);
        }
        out
    }

    pub fn query(&self, pattern: &Concept, ctx: ContextId) -> Vec<(&WmEntry, Bindings)> {
        self.query_with(pattern, ctx, &Bindings::new())
    }

    pub fn query_with(&self, pattern: &Concept, ctx: ContextId, b: &Bindings) -> Vec<(&WmEntry, Bindings)> {
        self.visible(ctx)
            .into_iter()
            .filter_map(|e| unify_with(pattern, &e.concept, b).map(|nb| (e, nb)))
            .collect()
    }

    pub fn holds(&self, concept: &Concept, ctx: ContextId) -> bool {
        self.visible(ctx).iter().any(|e| &e.concept == concept)
    }

    /// All ways of proving `pattern` from facts plus derive rules.
    pub fn prove(&self, pattern: &Concept, ctx: ContextId, rules: &[DeriveRule], b: &Bindings) -> Vec<Bindings> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        self.prove_into(pattern, ctx, rules, b, 0, &mut out, &mut seen);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn prove_into(
        &self,
        pattern: &Concept,
        ctx: ContextId,
        rules: &[DeriveRule],
        b: &Bindings,
        depth: usize,
        out: &mut Vec<Bindings>,
        seen: &mut BTreeSet<String>,
    ) {
        for (_, nb) in self.query_with(pattern, ctx, b) {
            let key = format!("{}", pattern.substitute(&nb));
            if seen.insert(key) {
                out.push(nb);
            }
        }
        if depth >= 4 {
            return;
        }
        for (i, rule) in rules.iter().enumerate() {
            let suffix = format!("#d{}_{}", depth, i);
            let head = rule.conclusion.rename_vars(&suffix);
            let Some(nb) = unify_with(pattern, &head, b) else { continue };
            let mut frontier = vec![nb];
            for prem in &rule.premises {
                let prem = prem.rename_vars(&suffix);
                let mut next = Vec::new();
                for fb in &frontier {
                    let mut sub = Vec::new();
                    let mut sub_seen = BTreeSet::new();
                    self.prove_into(&prem, ctx, rules, fb, depth + 1, &mut sub, &mut sub_seen);
                    next.extend(sub);
                }
                frontier = next;
            }
            for fb in frontier {
                let key = format!("{}", pattern.substitute(&fb));
                if seen.insert(key) {
                    out.push(fb);
                }
            }
        }
    }

    pub fn provable(&self, pattern: &Concept, ctx: ContextId, rules: &[DeriveRule]) -> bool {
        !self.prove(pattern, ctx, rules, &Bindings::new()).is_empty()
    }

    /// Decay every entry of `ctx` by one step and remove those that fall
    /// below the limit. Returns the removed entries.
    pub fn decay_cycle(&mut self, ctx: ContextId) -> Vec<WmEntry> {
        self.cycle += 1;
        let step = self.config.decay_step;
        let limit = self.config.removal_limit;
        let mut removed = Vec::new();
        let pinned = &self.pinned;
        for e in self.entries.values_mut().filter(|e| e.context == ctx && !pinned.contains(&e.id)) {
            e.activation = tidy((e.activation - step).clamp(0.0, 1.0));
        }
        let dead: Vec<EntryId> =
            self.entries.values().filter(|e| e.context == ctx && e.activation < limit).map(|e| e.id).collect();
        for id in dead {
            if let Some(e) = self.entries.remove(&id) {
                removed.push(e);
            }
        }
        removed
    }

    /// Exempt an entry from decay (standing persona facts).
    pub fn pin(&mut self, id: EntryId) -> Result<()> {
        if !self.entries.contains_key(&id) {
            return Err(Error::MissingEntry(id.0));
        }
        self.pinned.insert(id);
        Ok(())
    }

    pub fn is_pinned(&self, id: EntryId) -> bool {
        self.pinned.contains(&id)
    }

    pub fn replenish(&mut self, id: EntryId) -> Result<f64> {
        let start = self.config.start;
        let e = self.entries.get_mut(&id).ok_or(Error::MissingEntry(id.0))?;
        e.activation = start;
        Ok(start)
    }

    pub fn get(&self, id: EntryId) -> Option<&WmEntry> {
        self.entries.get(&id)
    }

    pub fn find(&self, concept: &Concept, ctx: ContextId) -> Option<&WmEntry> {
        self.entries.values().find(|e| e.context == ctx && &e.concept == concept)
    }

    pub fn entries(&self) -> impl Iterator<Item = &WmEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Drop every entry and tombstone belonging to imagined context `ctx`.
    pub fn discard(&mut self, ctx: ContextId) {
        if ctx == self.real() {
            return;
        }
        self.entries.retain(|_, e| e.context != ctx);
        self.tombstones.remove(&ctx);
    }
}
