//! Episodic memory properties over random memories and the story.

use std::collections::BTreeSet;

use daydreamer::concept::{Concept, Symbol, Term};
use daydreamer::domain::Domain;
use daydreamer::emotion::{EmotionId, EmotionKind, EmotionRecord};
use daydreamer::engine::{EventType, Session};
use daydreamer::memory::{EpisodeId, EpisodeRecord, EpisodicMemory, IndexContext, IndexKey, Reality};
use daydreamer::planner::{status_payload, EventKind, ScenarioEvent};
use daydreamer::plot_units::builtin_catalog;
use daydreamer::store::ContextId;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const AGENTS: [&str; 3] = ["me", "debra", "sam"];
const GOALS: [&str; 4] = ["ipt-lovers", "m-job", "revenge", "rationalization"];
const ACTS: [&str; 3] = ["ptrans", "mtrans", "call"];
const FEELINGS: [EmotionKind; 4] = [EmotionKind::NegAffect, EmotionKind::Anger, EmotionKind::PosAffect, EmotionKind::Rejection];

pub fn index_context() -> IndexContext {
    IndexContext {
        catalog: builtin_catalog(),
        agents: AGENTS.iter().map(|a| Symbol::new(a)).collect(),
        mental_heads: BTreeSet::from([Symbol::new("revenge"), Symbol::new("rationalization")]),
    }
}

fn random_episode(rng: &mut ChaCha8Rng) -> EpisodeRecord {
    let n = rng.gen_range(1..6);
    let events = (0..n)
        .map(|i| {
            let who = Term::atom(AGENTS[rng.gen_range(0..3)]);
            let other = Term::atom(AGENTS[rng.gen_range(0..3)]);
            let (kind, payload) = if rng.gen_bool(0.6) {
                let g = Concept::new(GOALS[rng.gen_range(0..4)], vec![who, other]);
                let status = ["succeeded", "failed", "active"][rng.gen_range(0..3)];
                (EventKind::GoalChange, status_payload(status, &g))
            } else {
                (EventKind::Action, Concept::new(ACTS[rng.gen_range(0..3)], vec![who, other]))
            };
            ScenarioEvent { kind, payload, context: ContextId(0), seq: i }
        })
        .collect();
    let mut rec = EpisodeRecord::new(if rng.gen_bool(0.5) { Reality::Personal } else { Reality::Imagined }, events);
    for i in 0..rng.gen_range(0..3) {
        let kind = FEELINGS[rng.gen_range(0..4)];
        rec.emotions.push(EmotionRecord {
            id: EmotionId(i + 1),
            kind,
            valence: kind.valence(),
            intensity: 0.5,
            target: None,
            source: None,
            situation: None,
            imagined: false,
            cycle: 0,
        });
    }
    rec
}

fn random_memory(rng: &mut ChaCha8Rng) -> Result<EpisodicMemory, String> {
    let ix = index_context();
    let mut m = EpisodicMemory::new();
    for _ in 0..rng.gen_range(1..10) {
        m.store(random_episode(rng), &ix).map_err(|e| e.to_string())?;
    }
    Ok(m)
}

/// Ranking computed directly from the definition: more shared keys first,
/// then the most recent episode.
fn expected_ranking(m: &EpisodicMemory, keys: &[IndexKey]) -> Vec<(EpisodeId, usize)> {
    let mut out: Vec<(EpisodeId, usize)> = m
        .episodes()
        .iter()
        .map(|e| (e.id, e.indices.iter().filter(|k| keys.contains(k)).count()))
        .filter(|(_, n)| *n > 0)
        .collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then(b.0.cmp(&a.0)));
    out
}

/// Round trip and ranking checks over `count` random memories.
pub fn indexing(count: u64) -> Result<(), String> {
    let ix = index_context();
    for seed in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_memory(&mut rng)?;
        let mut universe = BTreeSet::new();
        for e in m.episodes() {
            let (derived, _) = EpisodicMemory::derive_keys(e, &ix);
            for k in &derived {
                if !e.indices.contains(k) {
                    return Err(format!("seed {seed}: {k} derivable but not indexed"));
                }
            }
            for k in &e.indices {
                universe.insert(k.clone());
                if !m.retrieve(std::slice::from_ref(k)).iter().any(|r| r.episode == e.id) {
                    return Err(format!("seed {seed}: {k} does not retrieve {}", e.label()));
                }
            }
        }
        let universe: Vec<IndexKey> = universe.into_iter().collect();
        for _ in 0..5 {
            let n = rng.gen_range(0..=universe.len());
            let mut keys: Vec<IndexKey> = universe.choose_multiple(&mut rng, n).cloned().collect();
            let ranked: Vec<(EpisodeId, usize)> = m.retrieve(&keys).iter().map(|r| (r.episode, r.matched.len())).collect();
            if ranked != expected_ranking(&m, &keys) {
                return Err(format!("seed {seed}: ranking differs from definition for {keys:?}"));
            }
            let before = m.retrieve(&keys);
            keys.shuffle(&mut rng);
            if m.retrieve(&keys) != before {
                return Err(format!("seed {seed}: ranking depends on key order"));
            }
        }
        let reloaded = EpisodicMemory::load(&m.save()).map_err(|e| e.to_string())?;
        if reloaded != m {
            return Err(format!("seed {seed}: save and load differ"));
        }
    }
    Ok(())
}

/// Concepts the story ever added to the REAL context.
fn real_additions(s: &Session) -> BTreeSet<String> {
    s.events()
        .iter()
        .filter(|e| e.kind == EventType::WmAdd && e.payload["context"] == 0)
        .filter_map(|e| e.payload["concept"].as_str().map(str::to_string))
        .collect()
}

/// After the story, no action performed only in imagination reached the
/// REAL context, and the memory survives a save/load cycle unchanged.
pub fn story_memory() -> Result<(), String> {
    let mut s = Session::nuart();
    s.run_script(Domain::nuart_script());
    let real = real_additions(&s);
    let mut imagined_actions = 0;
    for e in s.memory().episodes().iter().filter(|e| e.reality == Reality::Imagined && e.name.is_none()) {
        for ev in e.events.iter().filter(|ev| ev.kind == EventKind::Action && ev.context != ContextId(0)) {
            imagined_actions += 1;
            if real.contains(&ev.payload.to_string()) {
                return Err(format!("imagined action {} reached REAL", ev.payload));
            }
        }
    }
    if imagined_actions == 0 {
        return Err("story stored no imagined actions".into());
    }
    let text = s.memory().save();
    let back = EpisodicMemory::load(&text).map_err(|e| e.to_string())?;
    if &back != s.memory() {
        return Err("story memory changed across save and load".into());
    }
    if back.save() != text {
        return Err("saving a loaded memory changed the text".into());
    }
    Ok(())
}
