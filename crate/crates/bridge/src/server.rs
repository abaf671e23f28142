use std::future::Future;
use std::io::BufWriter;
use std::fs::File;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use airship::scenario::TelemetryWriter;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc};

use crate::protocol::{Ack, Command, Outbound};
use crate::session::Session;

/// Longest idle sleep while paused, so commands are still picked up promptly.
const PAUSED_POLL: Duration = Duration::from_millis(5);

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("telemetry log: {0}")]
    Log(String),
    #[error("simulation thread panicked")]
    SimulationPanicked,
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    /// Frame broadcast rate, Hz.
    pub rate_hz: f64,
    /// Capacity of the inbound command queue.
    pub queue: usize,
    /// Every simulated frame is appended here as CSV.
    pub log: Option<PathBuf>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self { rate_hz: 20.0, queue: 256, log: None }
    }
}

/// An inbound message on its way to the simulation thread.
struct Inbound {
    command: Result<Command, String>,
    reply: mpsc::Sender<String>,
}

#[derive(Clone)]
struct AppState {
    commands: mpsc::Sender<Inbound>,
    frames: broadcast::Sender<Arc<str>>,
}

/// A bound but not yet running service.
pub struct Bridge {
    listener: TcpListener,
    session: Session,
    options: ServeOptions,
}

impl Bridge {
    pub async fn bind(addr: SocketAddr, session: Session, options: ServeOptions) -> Result<Self, BridgeError> {
        if !(options.rate_hz.is_finite() && options.rate_hz > 0.0) || options.queue == 0 {
            return Err(BridgeError::Io(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                "rate must be positive and the queue non-empty",
            )));
        }
        let listener = TcpListener::bind(addr).await.map_err(|source| BridgeError::Bind { addr, source })?;
        Ok(Self { listener, session, options })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    /// Serves `/ws` until `shutdown` resolves.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), BridgeError> {
        let log = match &self.options.log {
            Some(path) => Some(
                TelemetryWriter::new(BufWriter::new(File::create(path)?)).map_err(|e| BridgeError::Log(e.to_string()))?,
            ),
            None => None,
        };
        let (cmd_tx, cmd_rx) = mpsc::channel(self.options.queue);
        let (frame_tx, _) = broadcast::channel(64);
        let stop = Arc::new(AtomicBool::new(false));
        let sim = {
            let (frames, stop, session, rate) = (frame_tx.clone(), stop.clone(), self.session, self.options.rate_hz);
            std::thread::spawn(move || simulate(session, cmd_rx, frames, rate, log, &stop))
        };

        let app = Router::new().route("/ws", get(upgrade)).with_state(AppState { commands: cmd_tx, frames: frame_tx });
        let served = axum::serve(self.listener, app).with_graceful_shutdown(shutdown).await;
        stop.store(true, Ordering::Relaxed);
        let logged = tokio::task::spawn_blocking(move || sim.join()).await.map_err(|_| BridgeError::SimulationPanicked)?;
        served?;
        logged.map_err(|_| BridgeError::SimulationPanicked)?
    }
}

/// The simulation loop: sole owner of the session.
fn simulate(
    mut session: Session,
    mut commands: mpsc::Receiver<Inbound>,
    frames: broadcast::Sender<Arc<str>>,
    rate_hz: f64,
    mut log: Option<TelemetryWriter<BufWriter<File>>>,
    stop: &AtomicBool,
) -> Result<(), BridgeError> {
    let emit_every = Duration::from_secs_f64(1.0 / rate_hz);
    let mut anchor = (Instant::now(), session.time(), session.timescale());
    let mut next_emit = Instant::now();
    let mut last_emit = (Instant::now(), session.time());

    while !stop.load(Ordering::Relaxed) {
        while let Ok(inbound) = commands.try_recv() {
            let ack = match &inbound.command {
                Ok(cmd) => session.apply(cmd),
                Err(e) => Ack::error(e.clone()),
            };
            if inbound.reply.try_send(Outbound::Ack(ack).to_json()).is_err() {
                log::warn!("dropping acknowledgement for a slow or closed client");
            }
        }
        // Pausing or rescaling restarts the wall-clock pacing from now.
        if session.paused() || session.timescale() != anchor.2 {
            anchor = (Instant::now(), session.time(), session.timescale());
        }

        if let Some(frame) = session.advance() {
            if let Some(w) = log.as_mut() {
                w.push(&frame).map_err(|e| BridgeError::Log(e.to_string()))?;
            }
        } else if let Some(reason) = session.halted() {
            log::error!("simulation halted: {reason}");
        }

        let now = Instant::now();
        if now >= next_emit {
            let wall = (now - last_emit.0).as_secs_f64();
            let ratio = if wall > 0.0 { (session.time() - last_emit.1) / wall } else { 0.0 };
            if let Some(f) = session.stream_frame(ratio) {
                // No receivers is fine: the simulation does not depend on clients.
                let _ = frames.send(Outbound::Frame(f).to_json().into());
            }
            last_emit = (now, session.time());
            next_emit += emit_every;
            if next_emit < now {
                next_emit = now + emit_every;
            }
        }

        let deadline = if session.paused() {
            now + PAUSED_POLL.min(next_emit.saturating_duration_since(now))
        } else {
            // Behind schedule means no sleep: simulated time lags rather than skipping steps.
            anchor.0 + Duration::from_secs_f64((session.time() - anchor.1) / anchor.2)
        };
        let wait = deadline.saturating_duration_since(Instant::now());
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
    if let Some(w) = log.as_mut() {
        w.flush().map_err(|e| BridgeError::Log(e.to_string()))?;
    }
    Ok(())
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| client(socket, state))
}

async fn client(socket: WebSocket, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    let mut frames = state.frames.subscribe();
    let (reply_tx, mut replies) = mpsc::channel::<String>(256);

    let writer = tokio::spawn(async move {
        loop {
            let text: Arc<str> = tokio::select! {
                r = replies.recv() => match r {
                    Some(t) => t.into(),
                    None => break,
                },
                f = frames.recv() => match f {
                    Ok(t) => t,
                    Err(broadcast::error::RecvError::Lagged(_)) => continue,
                    Err(broadcast::error::RecvError::Closed) => break,
                },
            };
            if sink.send(Message::Text(text.as_ref().into())).await.is_err() {
                break;
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        let command = match msg {
            Message::Text(text) => Command::parse(text.as_str()),
            Message::Binary(_) => Err("binary messages are not supported".into()),
            Message::Close(_) => break,
            _ => continue,
        };
        if state.commands.send(Inbound { command, reply: reply_tx.clone() }).await.is_err() {
            break;
        }
    }
    writer.abort();
}
