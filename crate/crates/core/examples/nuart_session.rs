//! Replay the built-in NUART session: meet Debra, get turned down,
//! daydream about it, and meet her again.
//!
//! `cargo run --example nuart_session -- full` shows the whole trace.

use daydreamer::engine::{render_event, Session, TraceLevel};

fn main() {
    let level = std::env::args().nth(1).and_then(|a| TraceLevel::parse(&a)).unwrap_or(TraceLevel::Banner);
    let mut session = Session::nuart();
    session.run_script(daydreamer::domain::Domain::nuart_script());
    for ev in session.events() {
        if let Some(line) = render_event(ev, level) {
            println!("{}", line);
        }
    }
}
