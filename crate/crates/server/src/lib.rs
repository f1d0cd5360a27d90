//! Newline-delimited JSON server exposing two-bridge environments over
//! stdio or TCP. One connection drives one environment.

pub mod protocol;
pub mod session;

use std::io::{self, BufRead, Write};
use std::net::{TcpListener, TcpStream};

use log::{info, warn};

pub use protocol::{Envelope, Request, Response, SpatialEncoding};
pub use session::{SeedPolicy, ServerConfig, Session};

/// Serves one connection until `close` or end of input.
pub fn serve<R: BufRead, W: Write>(input: R, mut output: W, config: &ServerConfig) -> io::Result<()> {
    let mut session = Session::new(config.clone());
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = session.handle_line(&line);
        output.write_all(reply.as_bytes())?;
        output.write_all(b"\n")?;
        output.flush()?;
        if session.is_closed() {
            break;
        }
    }
    Ok(())
}

pub fn serve_stdio(config: &ServerConfig) -> io::Result<()> {
    let stdin = io::stdin();
    serve(stdin.lock(), io::stdout().lock(), config)
}

fn serve_stream(stream: TcpStream, config: &ServerConfig) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let reader = io::BufReader::new(stream.try_clone()?);
    serve(reader, io::BufWriter::new(stream), config)
}

/// Accepts connections on `listener`, one thread each. Stops after
/// `max_connections` connections if given, waiting for them to finish.
pub fn serve_tcp(listener: TcpListener, config: &ServerConfig, max_connections: Option<usize>) -> io::Result<()> {
    info!("listening on {}", listener.local_addr()?);
    std::thread::scope(|scope| {
        for (n, stream) in listener.incoming().enumerate() {
            match stream {
                Ok(stream) => {
                    let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
                    info!("connection {n} from {peer}");
                    scope.spawn(move || {
                        if let Err(e) = serve_stream(stream, config) {
                            warn!("connection {n} ended with error: {e}");
                        }
                    });
                }
                Err(e) => warn!("accept failed: {e}"),
            }
            if max_connections.is_some_and(|m| n + 1 >= m) {
                break;
            }
        }
    });
    Ok(())
}
