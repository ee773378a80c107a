use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use daydreamer::domain::Domain;
use daydreamer::engine::{render_event, Mode, Session, SessionConfig, TraceLevel};
use daydreamer::memory::EpisodicMemory;

/// Run the daydreaming agent from a script, the console, or a TCP
/// endpoint.
#[derive(Parser, Debug)]
#[command(name = "daydreamer", version)]
struct Args {
    /// Starting mode: performance or daydreaming.
    #[arg(long, default_value = "daydreaming", value_parser = parse_mode)]
    mode: Mode,
    /// Run the commands in this file instead of reading the console.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Domain files to use instead of the built-in domain.
    #[arg(long, num_args = 1..)]
    domain: Vec<PathBuf>,
    /// Extra persona facts, pinned in working memory.
    #[arg(long)]
    persona: Option<PathBuf>,
    /// Episodic memory snapshot to start from.
    #[arg(long)]
    memory: Option<PathBuf>,
    /// Write episodic memory here when the session ends.
    #[arg(long)]
    save_memory: Option<PathBuf>,
    /// Shuffle plan-rule order with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Upper bound on cycles per run.
    #[arg(long, default_value_t = 50)]
    max_cycles: usize,
    /// Serve the newline-delimited JSON protocol on this address.
    #[arg(long)]
    serve: Option<String>,
    /// How much of the trace to print: quiet, banner or full.
    #[arg(long, default_value = "banner", value_parser = parse_level)]
    trace_level: TraceLevel,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).ok_or_else(|| format!("unknown mode `{}`", s))
}

fn parse_level(s: &str) -> Result<TraceLevel, String> {
    TraceLevel::parse(s).ok_or_else(|| format!("unknown trace level `{}`", s))
}

fn session(args: &Args) -> daydreamer::error::Result<Session> {
    let mut domain = if args.domain.is_empty() { Domain::nuart() } else { Domain::from_files(&args.domain)? };
    if let Some(p) = &args.persona {
        domain.add_persona_text(&std::fs::read_to_string(p)?)?;
    }
    let memory = args.memory.as_deref().map(EpisodicMemory::load_from).transpose()?;
    let cfg = SessionConfig {
        max_cycles: args.max_cycles,
        shuffle: args.seed,
        initial_mode: args.mode,
        ..SessionConfig::default()
    };
    Session::new(domain, memory, cfg)
}

fn main() -> ExitCode {
    env_logger::init();
    let args = Args::parse();
    let mut s = match session(&args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("daydreamer: {}", e);
            return ExitCode::from(2);
        }
    };
    let level = args.trace_level;
    let print = move |ev: &daydreamer::engine::SessionEvent| {
        if let Some(line) = render_event(ev, level) {
            println!("{}", line);
        }
    };
    for ev in s.events() {
        print(ev);
    }
    if args.serve.is_none() {
        s.set_sink(print);
    }
    if let Some(path) = &args.script {
        match std::fs::read_to_string(path) {
            Ok(text) => s.run_script(&text),
            Err(e) => {
                eprintln!("daydreamer: {}: {}", path.display(), e);
                return ExitCode::from(2);
            }
        }
    }
    if let Some(addr) = &args.serve {
        let save = args.save_memory.clone();
        if let Some(p) = &save {
            if let Err(e) = s.save_memory(p) {
                eprintln!("daydreamer: {}", e);
            }
        }
        return match daydreamer::protocol::serve(s, addr) {
            Ok(server) => {
                eprintln!("listening on {}", server.local_addr());
                server.wait();
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("daydreamer: {}", e);
                ExitCode::from(2)
            }
        };
    }
    if args.script.is_none() {
        let stdin = std::io::stdin();
        print!("Input? ");
        let _ = std::io::stdout().flush();
        for line in stdin.lock().lines() {
            let Ok(line) = line else { break };
            if matches!(line.trim(), "quit" | "exit") {
                break;
            }
            s.command(&line);
            print!("Input? ");
            let _ = std::io::stdout().flush();
        }
        println!();
    }
    if let Some(p) = &args.save_memory {
        if let Err(e) = s.save_memory(p) {
            eprintln!("daydreamer: {}", e);
            return ExitCode::FAILURE;
        }
    }
    if s.events().iter().any(|e| e.kind == daydreamer::engine::EventType::Error) {
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
