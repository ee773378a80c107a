//! Revenge planned by analogy: an earlier daydream about a job
//! interviewer is recalled and carried over to Debra.

use daydreamer::domain::Domain;
use daydreamer::engine::{render_event, EventType, Session, SessionConfig, TraceLevel};

fn main() -> Result<(), daydreamer::error::Error> {
    let mut domain = Domain::nuart();
    domain.add_text(Domain::job_daydream_text())?;
    let mut session = Session::new(domain, None, SessionConfig::default())?;
    session.run_script(Domain::nuart_script());
    let start = session
        .events()
        .iter()
        .position(|e| e.kind == EventType::ControlGoal && e.payload["kind"] == "revenge")
        .unwrap_or(0);
    for ev in &session.events()[start..] {
        if let Some(line) = render_event(ev, TraceLevel::Full) {
            println!("{}", line);
        }
        if ev.kind == EventType::ControlGoal && ev.payload["kind"] == "revenge" && ev.payload["status"] != "active" {
            break;
        }
    }
    Ok(())
}
