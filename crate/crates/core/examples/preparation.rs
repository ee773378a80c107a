//! Worrying about a trip away from work: fear of a future situation triggers a
//! preparation daydream that rehearses what the trip would break.

use daydreamer::engine::{render_event, Session, TraceLevel};

fn main() {
    let mut session = Session::nuart();
    session.run_script("(threat (at me paris))\nrun\n");
    for ev in session.events() {
        if let Some(line) = render_event(ev, TraceLevel::Full) {
            println!("{}", line);
        }
    }
}
