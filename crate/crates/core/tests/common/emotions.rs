//! Random operation sequences over the emotion store, checked against the
//! emotional dynamics invariants after every step.

use std::collections::BTreeSet;

use daydreamer::concept::{Concept, Symbol, Term};
use daydreamer::control::{apply_success, trigger, ControlConfig, ControlGoalRecord, ControlKind, ControlTarget};
use daydreamer::emotion::{appraise, AppraisalKnowledge, EmotionConfig, EmotionKind, EmotionStore};
use daydreamer::goals::{GoalId, GoalStatus, OutcomeId, OutcomeRecord};
use daydreamer::store::ContextId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const AGENTS: [&str; 3] = ["me", "debra", "sam"];
const HEADS: [&str; 3] = ["ipt-lovers", "m-job", "social-esteem"];

fn knowledge() -> AppraisalKnowledge {
    AppraisalKnowledge {
        self_agent: Symbol::new("me"),
        relationships: BTreeSet::from([Symbol::new("ipt-lovers")]),
        social_regard: BTreeSet::from([Symbol::new("social-esteem")]),
    }
}

fn outcome(rng: &mut ChaCha8Rng, id: u32, status: GoalStatus) -> OutcomeRecord {
    let other = AGENTS[rng.gen_range(0..3)];
    let causer = (rng.gen_range(0..4) < 3).then(|| Symbol::new(AGENTS[rng.gen_range(0..3)]));
    OutcomeRecord {
        id: OutcomeId(id),
        goal: GoalId(id),
        objective: Concept::new(HEADS[rng.gen_range(0..3)], vec![Term::atom("me"), Term::atom(other)]),
        importance: rng.gen_range(0.0..=1.0),
        status,
        causer,
        context: ContextId(0),
        cycle: id as u64,
        imagined: rng.gen_bool(0.2),
    }
}

fn check(store: &EmotionStore, outcomes: &[OutcomeRecord], cfg: &ControlConfig) -> Result<(), String> {
    let me = Symbol::new("me");
    for e in store.all() {
        if !(0.0..=1.0).contains(&e.intensity) {
            return Err(format!("intensity {} out of range for {:?}", e.intensity, e.kind));
        }
        if e.kind == EmotionKind::Anger && e.target.as_ref() == Some(&me) {
            return Err("anger directed at self".into());
        }
    }
    for cg in trigger(store.live(), outcomes, &me, cfg) {
        let e = store.get(cg.emotion).ok_or("control goal without emotion")?;
        match cg.kind {
            ControlKind::FailureReversal if e.intensity >= cfg.not_strong => {
                return Err(format!("reversal triggered by strong affect {}", e.intensity));
            }
            ControlKind::Revenge if e.target.as_ref() == Some(&me) => return Err("revenge against self".into()),
            _ => {}
        }
    }
    Ok(())
}

/// Run one random sequence of `len` operations from `seed`.
pub fn sequence(seed: u64, len: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ecfg = EmotionConfig::default();
    let ccfg = ControlConfig::default();
    let know = knowledge();
    let mut store = EmotionStore::new(ecfg);
    let mut outcomes: Vec<OutcomeRecord> = Vec::new();
    for step in 0..len {
        match rng.gen_range(0..6) {
            0 | 1 => {
                let status = if rng.gen_bool(0.7) { GoalStatus::Failed } else { GoalStatus::Succeeded };
                let o = outcome(&mut rng, outcomes.len() as u32 + 1, status);
                for e in appraise(&o, &know, &ecfg) {
                    store.add(e);
                }
                outcomes.push(o);
            }
            2 => {
                let live: Vec<_> = store
                    .live()
                    .filter(|e| e.kind == EmotionKind::NegAffect && e.intensity > 0.0)
                    .filter(|e| store.negative_for(e.source.unwrap()).map(|n| n.id) == Some(e.id))
                    .map(|e| (e.id, e.intensity, e.source.unwrap()))
                    .collect();
                if let Some(&(id, before, src)) = live.get(rng.gen_range(0..live.len().max(1))) {
                    let cg = ControlGoalRecord {
                        kind: ControlKind::Rationalization,
                        target: ControlTarget::Outcome(src),
                        status: GoalStatus::Succeeded,
                        strategy: None,
                        emotion: id,
                        intensity: before,
                    };
                    let o = outcomes.iter().find(|o| o.id == src);
                    apply_success(&cg, o, &mut store, step as u64).map_err(|e| e.to_string())?;
                    let after = store.get(id).unwrap().intensity;
                    if after >= before {
                        return Err(format!("rationalization did not reduce {before} (got {after})"));
                    }
                }
            }
            3 => {
                let failed: Vec<_> = outcomes.iter().filter(|o| store.negative_for(o.id).is_some()).cloned().collect();
                if let Some(o) = failed.get(rng.gen_range(0..failed.len().max(1))) {
                    store.renew_negative(o, step as u64).map_err(|e| e.to_string())?;
                }
            }
            4 => {
                let live: Vec<_> = store.live().map(|e| e.id).collect();
                if let Some(&id) = live.get(rng.gen_range(0..live.len().max(1))) {
                    store.scale_affect(id, rng.gen_range(0.01..3.0)).map_err(|e| e.to_string())?;
                }
            }
            _ => {
                let live: Vec<_> = store.live().map(|e| e.id).collect();
                if let Some(&id) = live.get(rng.gen_range(0..live.len().max(1))) {
                    store.expire(id);
                }
            }
        }
        check(&store, &outcomes, &ccfg).map_err(|e| format!("seed {seed} step {step}: {e}"))?;
    }
    Ok(())
}

/// `count` random sequences of length up to 40.
pub fn random_sequences(count: u64) -> Result<u64, String> {
    for seed in 0..count {
        sequence(seed, 1 + (seed as usize * 7) % 40)?;
    }
    Ok(count)
}
