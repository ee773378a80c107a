//! Appraisal of goal outcomes into emotions, intensity scaling and
//! renewal, and selection of the strongest live emotion.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::concept::{Concept, Symbol};
use crate::error::{Error, Result};
use crate::goals::{GoalStatus, OutcomeId, OutcomeRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EmotionId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EmotionKind {
    PosAffect,
    NegAffect,
    Anger,
    Rejection,
    Embarrassment,
    Regret,
    Fear,
}

impl EmotionKind {
    pub fn valence(self) -> i8 {
        match self {
            EmotionKind::PosAffect => 1,
            _ => -1,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            EmotionKind::PosAffect => "pos-affect",
            EmotionKind::NegAffect => "neg-affect",
            EmotionKind::Anger => "anger",
            EmotionKind::Rejection => "rejection",
            EmotionKind::Embarrassment => "embarrassment",
            EmotionKind::Regret => "regret",
            EmotionKind::Fear => "fear",
        }
    }

    pub fn from_symbol(s: &str) -> Option<EmotionKind> {
        Some(match s {
            "pos-affect" => EmotionKind::PosAffect,
            "neg-affect" => EmotionKind::NegAffect,
            "anger" => EmotionKind::Anger,
            "rejection" => EmotionKind::Rejection,
            "embarrassment" => EmotionKind::Embarrassment,
            "regret" => EmotionKind::Regret,
            "fear" => EmotionKind::Fear,
            _ => return None,
        })
    }
}

impl fmt::Display for EmotionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotionRecord {
    pub id: EmotionId,
    pub kind: EmotionKind,
    pub valence: i8,
    pub intensity: f64,
    pub target: Option<Symbol>,
    pub source: Option<OutcomeId>,
    /// Future situation a FEAR is about.
    #[serde(skip)]
    pub situation: Option<Concept>,
    pub imagined: bool,
    pub cycle: u64,
}

/// Intensity constants: failures of important goals start at 0.8, others
/// at 0.5, successes at 0.6; rationalization halves; regret is x1.2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotionConfig {
    pub rationalization_factor: f64,
    pub regret_factor: f64,
    pub strong_failure: f64,
    pub weak_failure: f64,
    pub success: f64,
    pub importance_cut: f64,
}

impl Default for EmotionConfig {
    fn default() -> Self {
        EmotionConfig {
            rationalization_factor: 0.5,
            regret_factor: 1.2,
            strong_failure: 0.8,
            weak_failure: 0.5,
            success: 0.6,
            importance_cut: 0.5,
        }
    }
}

/// Domain facts appraisal needs beyond the outcome itself.
#[derive(Clone, Debug)]
pub struct AppraisalKnowledge {
    pub self_agent: Symbol,
    /// Heads of goals that activate a positive relationship.
    pub relationships: BTreeSet<Symbol>,
    /// Heads of social-regard goals.
    pub social_regard: BTreeSet<Symbol>,
}

fn record(kind: EmotionKind, intensity: f64, target: Option<Symbol>, o: &OutcomeRecord) -> EmotionRecord {
    EmotionRecord {
        id: EmotionId(0),
        kind,
        valence: kind.valence(),
        intensity,
        target,
        source: Some(o.id),
        situation: None,
        imagined: o.imagined,
        cycle: o.cycle,
    }
}

/// Map a terminal outcome to emotions. Ids are assigned when the records
/// are added to an [`EmotionStore`].
pub fn appraise(o: &OutcomeRecord, know: &AppraisalKnowledge, cfg: &EmotionConfig) -> Vec<EmotionRecord> {
    match o.status {
        GoalStatus::Active => Vec::new(),
        GoalStatus::Succeeded => vec![record(EmotionKind::PosAffect, cfg.success, None, o)],
        GoalStatus::Failed => {
            let intensity = if o.importance >= cfg.importance_cut { cfg.strong_failure } else { cfg.weak_failure };
            let mut out = vec![record(EmotionKind::NegAffect, intensity, None, o)];
            if let Some(causer) = o.causer.as_ref().filter(|c| **c != know.self_agent) {
                out.push(record(EmotionKind::Anger, intensity, Some(causer.clone()), o));
                let party = o.objective.atoms().contains(causer);
                if party && know.relationships.contains(o.objective.head()) {
                    out.push(record(EmotionKind::Rejection, intensity, Some(causer.clone()), o));
                }
            }
            if know.social_regard.contains(o.objective.head()) {
                out.push(record(EmotionKind::Embarrassment, intensity, None, o));
            }
            out
        }
    }
}

/// FEAR about an explicitly given future threat to a goal of `importance`.
pub fn appraise_threat(situation: Concept, importance: f64, cycle: u64, cfg: &EmotionConfig) -> EmotionRecord {
    let intensity = if importance >= cfg.importance_cut { cfg.strong_failure } else { cfg.weak_failure };
    EmotionRecord {
        id: EmotionId(0),
        kind: EmotionKind::Fear,
        valence: -1,
        intensity,
        target: None,
        source: None,
        situation: Some(situation),
        imagined: false,
        cycle,
    }
}

#[derive(Clone, Debug, Default)]
pub struct EmotionStore {
    records: Vec<EmotionRecord>,
    live: BTreeSet<EmotionId>,
    cfg: EmotionConfig,
}

impl EmotionStore {
    pub fn new(cfg: EmotionConfig) -> Self {
        EmotionStore { cfg, ..Default::default() }
    }

    pub fn config(&self) -> &EmotionConfig {
        &self.cfg
    }

    pub fn add(&mut self, mut rec: EmotionRecord) -> EmotionId {
        let id = EmotionId(self.records.len() as u32 + 1);
        rec.id = id;
        rec.intensity = rec.intensity.clamp(0.0, 1.0);
        self.records.push(rec);
        self.live.insert(id);
        id
    }

    pub fn get(&self, id: EmotionId) -> Option<&EmotionRecord> {
        self.records.get((id.0 as usize).wrapping_sub(1))
    }

    pub fn is_live(&self, id: EmotionId) -> bool {
        self.live.contains(&id)
    }

    /// Mark an emotion dead (its working-memory entry decayed away).
    pub fn expire(&mut self, id: EmotionId) {
        self.live.remove(&id);
    }

    pub fn all(&self) -> &[EmotionRecord] {
        &self.records
    }

    pub fn live(&self) -> impl Iterator<Item = &EmotionRecord> {
        self.records.iter().filter(|r| self.live.contains(&r.id))
    }

    pub fn scale_affect(&mut self, id: EmotionId, factor: f64) -> Result<&EmotionRecord> {
        if factor <= 0.0 || factor.is_nan() {
            return Err(Error::NonPositiveFactor(factor));
        }
        if !self.live.contains(&id) {
            return Err(Error::Contract(format!("emotion {} is not live", id.0)));
        }
        let r = &mut self.records[id.0 as usize - 1];
        r.intensity = (r.intensity * factor).clamp(0.0, 1.0);
        Ok(r)
    }

    /// REGRET after an imagined reversal of a real failure: the prior
    /// negative affect for `outcome`, intensified and clamped.
    pub fn renew_negative(&mut self, outcome: &OutcomeRecord, cycle: u64) -> Result<EmotionId> {
        let prior = self
            .records
            .iter()
            .rev()
            .find(|r| r.kind == EmotionKind::NegAffect && r.source == Some(outcome.id))
            .ok_or(Error::MissingSource(outcome.id.0))?;
        let intensity = (prior.intensity * self.cfg.regret_factor).min(1.0);
        let rec = EmotionRecord {
            id: EmotionId(0),
            kind: EmotionKind::Regret,
            valence: -1,
            intensity,
            target: None,
            source: Some(outcome.id),
            situation: None,
            imagined: false,
            cycle,
        };
        Ok(self.add(rec))
    }

    /// Live emotion of maximal intensity (optionally of one kind); the
    /// most recent wins ties.
    pub fn strongest(&self, filter: Option<EmotionKind>) -> Option<&EmotionRecord> {
        self.live()
            .filter(|r| filter.map(|k| r.kind == k).unwrap_or(true))
            .max_by(|a, b| a.intensity.total_cmp(&b.intensity).then(a.id.cmp(&b.id)))
    }

    pub fn negative_for(&self, outcome: OutcomeId) -> Option<&EmotionRecord> {
        self.records.iter().rev().find(|r| r.kind == EmotionKind::NegAffect && r.source == Some(outcome))
    }
}
