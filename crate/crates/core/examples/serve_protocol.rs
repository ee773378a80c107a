//! Serve a session over TCP and drive it from a client in the same process.
//! The client submits the opening of the story, asks for a snapshot and
//! prints every line the server sends until the snapshot arrives.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;

use daydreamer::engine::Session;
use daydreamer::protocol::serve;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let server = serve(Session::nuart(), "127.0.0.1:0")?;
    let mut conn = TcpStream::connect(server.local_addr())?;
    for cmd in [
        r#"{"command":"set_mode","mode":"performance"}"#,
        r#"{"command":"submit","text":"You are near Debra Winger."}"#,
        r#"{"command":"snapshot"}"#,
    ] {
        writeln!(conn, "{cmd}")?;
    }
    for line in BufReader::new(conn.try_clone()?).lines() {
        let line = line?;
        println!("{line}");
        if line.starts_with(r#"{"snapshot""#) {
            break;
        }
    }
    server.shutdown();
    Ok(())
}
