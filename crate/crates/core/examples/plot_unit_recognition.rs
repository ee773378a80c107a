//! Recognize plot units in a hand-written event sequence: Debra refuses a
//! date, and later I refuse her in return.

use std::collections::BTreeSet;

use daydreamer::concept::{Concept, Symbol};
use daydreamer::planner::{EventKind, ScenarioEvent};
use daydreamer::plot_units::{builtin_catalog, elements, recognize};
use daydreamer::store::ContextId;

/// Goal changes are written `(STATUS GOAL)`, actions as the act itself.
fn event(kind: EventKind, text: &str) -> ScenarioEvent {
    ScenarioEvent::new(kind, Concept::parse(text).expect("well-formed event"), ContextId(0))
}

fn main() {
    let events = vec![
        event(EventKind::GoalChange, "(failed (ipt-lovers me debra))"),
        event(EventKind::GoalChange, "(succeeded (likes debra me))"),
        event(EventKind::Action, "(refuse me debra (ipt-lovers debra me))"),
        event(EventKind::GoalChange, "(failed (ipt-lovers debra me))"),
        event(EventKind::GoalChange, "(succeeded (revenge me debra))"),
    ];
    let agents: BTreeSet<Symbol> = ["me", "debra"].into_iter().map(Symbol::new).collect();
    let mental: BTreeSet<Symbol> = ["likes"].into_iter().map(Symbol::new).collect();
    let els = elements(&events, &agents, &mental);
    println!("elements:");
    for e in &els {
        println!("  #{} {:?} on {}: {}", e.event, e.kind, e.lane, e.concept);
    }
    println!("plot units:");
    for unit in recognize(&builtin_catalog(), &els) {
        println!("  {unit} nodes {:?}", unit.node_map);
    }
}
