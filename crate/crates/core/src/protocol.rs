//! Newline-delimited JSON over TCP.
//!
//! Every connected observer first receives the session's events from
//! `seq` 0 and then each new event as it happens, one JSON object per
//! line. Lines sent by a client are commands:
//!
//! ```text
//! {"command":"submit","text":"You are near Debra Winger."}
//! {"command":"set_mode","mode":"performance"}
//! {"command":"run","cycles":10}
//! {"command":"interrupt"}
//! {"command":"snapshot"}
//! ```
//!
//! A snapshot is answered to the asking client only, as
//! `{"snapshot":{...}}`. Malformed commands become ERROR events on the
//! shared stream.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::{Mode, Session, SessionEvent};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    Submit { text: String },
    SetMode { mode: String },
    Run { cycles: Option<usize> },
    Interrupt,
    Snapshot,
}

/// Parse one client line.
pub fn parse_command(line: &str) -> std::result::Result<Command, String> {
    serde_json::from_str(line).map_err(|e| format!("bad command `{}`: {}", line.trim(), e))
}

enum Job {
    Command(Command),
    Snapshot(Sender<Value>),
    Invalid(String),
}

/// Event lines seen so far plus the observers to copy new ones to.
#[derive(Default)]
struct Hub {
    backlog: Vec<String>,
    observers: Vec<Sender<String>>,
}

impl Hub {
    fn publish(&mut self, ev: &SessionEvent) {
        let line = serde_json::to_string(ev).expect("events serialize");
        self.observers.retain(|o| o.send(line.clone()).is_ok());
        self.backlog.push(line);
    }

    /// A new observer's feed, already holding the backlog, and a sender
    /// for lines meant for that observer alone.
    fn join(&mut self) -> (Sender<String>, Receiver<String>) {
        let (tx, rx) = mpsc::channel();
        for line in &self.backlog {
            let _ = tx.send(line.clone());
        }
        self.observers.push(tx.clone());
        (tx, rx)
    }
}

/// A running endpoint. Dropping it leaves the threads running; call
/// [`Server::shutdown`] to stop accepting connections.
pub struct Server {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl Server {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stop accepting and wait for the listener to close. Connected
    /// clients keep their stream until they disconnect.
    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    /// Block until the listener stops.
    pub fn wait(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

/// Serve `session` on `addr` (`127.0.0.1:0` picks a free port).
pub fn serve(mut session: Session, addr: &str) -> Result<Server> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    let hub = Arc::new(Mutex::new(Hub::default()));
    for ev in session.events() {
        hub.lock().expect("hub lock").publish(ev);
    }
    let sink_hub = hub.clone();
    session.set_sink(move |ev| sink_hub.lock().expect("hub lock").publish(ev));
    let interrupt = session.interrupt_handle();
    let (jobs, inbox) = mpsc::channel::<Job>();
    thread::spawn(move || engine_loop(session, inbox));
    let stop = Arc::new(AtomicBool::new(false));
    let stop_flag = stop.clone();
    let accept = thread::spawn(move || {
        for stream in listener.incoming() {
            if stop_flag.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let (own, feed) = hub.lock().expect("hub lock").join();
            let jobs = jobs.clone();
            let interrupt = interrupt.clone();
            thread::spawn(move || client(stream, own, feed, jobs, interrupt));
        }
    });
    log::info!("serving on {}", local);
    Ok(Server { addr: local, stop, accept: Some(accept) })
}

fn engine_loop(mut session: Session, inbox: Receiver<Job>) {
    for job in inbox {
        match job {
            Job::Command(c) => apply(&mut session, c),
            Job::Snapshot(reply) => {
                let _ = reply.send(session.snapshot());
            }
            Job::Invalid(msg) => session.reject(msg),
        }
    }
}

/// Carry out one command on a session.
pub fn apply(session: &mut Session, command: Command) {
    match command {
        Command::Submit { text } => session.submit(&text),
        Command::SetMode { mode } => match Mode::parse(&mode) {
            Some(m) => session.set_mode(m),
            None => session.reject(format!("unknown mode `{}`", mode)),
        },
        Command::Run { cycles } => {
            session.run(cycles);
        }
        Command::Interrupt => session.interrupt(),
        Command::Snapshot => {}
    }
}

fn client(stream: TcpStream, own: Sender<String>, feed: Receiver<String>, jobs: Sender<Job>, interrupt: Arc<AtomicBool>) {
    let Ok(mut out) = stream.try_clone() else { return };
    thread::spawn(move || {
        for line in feed {
            if writeln!(out, "{}", line).and_then(|_| out.flush()).is_err() {
                break;
            }
        }
    });
    for line in BufReader::new(stream).lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let job = match parse_command(&line) {
            Ok(Command::Snapshot) => {
                let (tx, rx) = mpsc::channel();
                if jobs.send(Job::Snapshot(tx)).is_err() {
                    break;
                }
                if let Ok(v) = rx.recv() {
                    let _ = own.send(serde_json::json!({ "snapshot": v }).to_string());
                }
                continue;
            }
            Ok(Command::Interrupt) => {
                interrupt.store(true, Ordering::SeqCst);
                Job::Command(Command::Interrupt)
            }
            Ok(c) => Job::Command(c),
            Err(msg) => Job::Invalid(msg),
        };
        if jobs.send(job).is_err() {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commands_round_trip() {
        let cs = [
            Command::Submit { text: "You are near Debra Winger.".into() },
            Command::SetMode { mode: "performance".into() },
            Command::Run { cycles: Some(3) },
            Command::Run { cycles: None },
            Command::Interrupt,
            Command::Snapshot,
        ];
        for c in cs {
            let line = serde_json::to_string(&c).unwrap();
            assert_eq!(parse_command(&line).unwrap(), c);
        }
    }

    #[test]
    fn run_without_count_parses() {
        assert_eq!(parse_command(r#"{"command":"run"}"#).unwrap(), Command::Run { cycles: None });
    }

    #[test]
    fn unknown_command_is_rejected() {
        assert!(parse_command(r#"{"command":"dance"}"#).is_err());
        assert!(parse_command("not json").is_err());
    }

    #[test]
    fn hub_replays_backlog_to_late_observers() {
        let mut hub = Hub::default();
        let (_, early) = hub.join();
        let mut s = Session::nuart();
        s.submit("(near me debra)");
        for ev in s.events() {
            hub.publish(ev);
        }
        let (_, late) = hub.join();
        let a: Vec<String> = early.try_iter().collect();
        let b: Vec<String> = late.try_iter().collect();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }
}
