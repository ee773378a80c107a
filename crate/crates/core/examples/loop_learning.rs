//! Learning from a planning loop and carrying the lesson into a new session.
//!
//! The first session daydreams about Debra, loops between being in touch
//! and knowing her number, and indexes a conditional precondition. The
//! memory is written to a file, and a second session started from it asks
//! for the number straight away.

use daydreamer::domain::Domain;
use daydreamer::engine::{Session, SessionConfig};
use daydreamer::memory::EpisodicMemory;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut first = Session::nuart();
    first.run_script(Domain::nuart_script());
    for s in first.memory().strategies() {
        println!("learned: before {} achieve {} (rule {})", s.condition, s.precondition, s.rule);
    }

    let path = std::env::temp_dir().join("daydreamer-loop-learning.dd");
    first.save_memory(&path)?;
    println!("memory saved to {}", path.display());

    let memory = EpisodicMemory::load_from(&path)?;
    let mut second = Session::new(Domain::nuart(), Some(memory), SessionConfig::default())?;
    second.command("mode performance");
    second.command("You are near Debra Winger.");
    for line in second.transcript() {
        println!("second session: {line}");
    }
    Ok(())
}
