use std::collections::VecDeque;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot};
use tower_http::services::ServeDir;

use super::protocol::{ClientCommand, CommandError, ErrorCode, ServerEvent, StateEvent};
use super::session::{FrameSnapshot, TeleopSession};

/// Frames kept available for `GET /frame/{seq}`.
pub const FRAME_HISTORY: usize = 16;
const EVENT_BUFFER: usize = 1024;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: String, source: std::io::Error },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub bind: String,
    pub tick_period: Duration,
    /// Directory served at `/` (the browser console), if any.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            tick_period: Duration::from_secs_f64(crate::simworld::TICK_DT),
            static_dir: None,
        }
    }
}

type ClientId = u64;

/// One outgoing message, either for everyone or for a single client.
#[derive(Debug, Clone)]
struct Outgoing {
    target: Option<ClientId>,
    text: Arc<str>,
}

#[derive(Default)]
struct Snapshots {
    state: Option<StateEvent>,
    frames: VecDeque<FrameSnapshot>,
}

#[derive(Clone)]
struct AppState {
    commands: mpsc::UnboundedSender<(ClientId, ClientCommand)>,
    events: broadcast::Sender<Outgoing>,
    snapshots: Arc<Mutex<Snapshots>>,
    next_client: Arc<AtomicU64>,
}

/// A running service. Dropping it leaves the server running; call
/// [`RunningServer::shutdown`] to stop it.
pub struct RunningServer {
    pub local_addr: SocketAddr,
    shutdown: oneshot::Sender<()>,
    task: tokio::task::JoinHandle<Result<(), ServeError>>,
}

impl RunningServer {
    pub async fn shutdown(self) -> Result<(), ServeError> {
        let _ = self.shutdown.send(());
        self.task.await.unwrap_or(Ok(()))
    }

    /// Runs until the server stops on its own.
    pub async fn wait(self) -> Result<(), ServeError> {
        self.task.await.unwrap_or(Ok(()))
    }
}

/// Binds the listener and starts the control loop and the HTTP/WebSocket
/// front end.
pub async fn start(session: TeleopSession, opts: ServeOptions) -> Result<RunningServer, ServeError> {
    let listener = TcpListener::bind(&opts.bind)
        .await
        .map_err(|source| ServeError::BindFailure { addr: opts.bind.clone(), source })?;
    let local_addr = listener.local_addr()?;

    let (cmd_tx, cmd_rx) = mpsc::unbounded_channel();
    let (events, _) = broadcast::channel(EVENT_BUFFER);
    let snapshots = Arc::new(Mutex::new(Snapshots::default()));
    {
        let mut snap = snapshots.lock().expect("snapshot lock");
        snap.state = Some(session.state());
        snap.frames.push_back(session.last_frame().clone());
    }
    let state = AppState { commands: cmd_tx, events: events.clone(), snapshots: snapshots.clone(), next_client: Arc::default() };

    let control = tokio::spawn(control_loop(session, cmd_rx, events, snapshots, opts.tick_period));

    let mut app = Router::new()
        .route("/ws", get(ws_handler))
        .route("/state", get(state_handler))
        .route("/frame/:seq", get(frame_handler))
        .with_state(state);
    if let Some(dir) = opts.static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }

    let (shutdown, shutdown_rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        let result = axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = shutdown_rx.await;
            })
            .await;
        control.abort();
        result.map_err(ServeError::from)
    });
    Ok(RunningServer { local_addr, shutdown, task })
}

/// Serves until the process is stopped.
pub async fn serve(session: TeleopSession, opts: ServeOptions) -> Result<(), ServeError> {
    let server = start(session, opts).await?;
    log::info!("listening on http://{}", server.local_addr);
    server.wait().await
}

fn publish(events: &broadcast::Sender<Outgoing>, target: Option<ClientId>, event: &ServerEvent) {
    // No subscribers is fine: nobody is watching.
    let _ = events.send(Outgoing { target, text: event.to_json().into() });
}

/// The single owner of the session: at most one command per tick, then the
/// tick itself, then publication.
async fn control_loop(
    mut session: TeleopSession,
    mut commands: mpsc::UnboundedReceiver<(ClientId, ClientCommand)>,
    events: broadcast::Sender<Outgoing>,
    snapshots: Arc<Mutex<Snapshots>>,
    period: Duration,
) {
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        interval.tick().await;
        let mut loaded = None;
        if let Ok((client, cmd)) = commands.try_recv() {
            match session.apply(&cmd) {
                Ok(()) if matches!(cmd, ClientCommand::LoadScenario { .. }) => loaded = Some(session.last_frame().clone()),
                Ok(()) => {}
                Err(e) => publish(&events, Some(client), &e.into()),
            }
        }
        let out = session.tick();
        let mut new_frames: Vec<FrameSnapshot> = loaded.into_iter().collect();
        new_frames.extend(out.frame);
        {
            let mut snap = snapshots.lock().expect("snapshot lock");
            snap.state = Some(out.state.clone());
            for f in &new_frames {
                snap.frames.push_back(f.clone());
                while snap.frames.len() > FRAME_HISTORY {
                    snap.frames.pop_front();
                }
            }
        }
        publish(&events, None, &ServerEvent::State(out.state));
        for f in new_frames {
            publish(&events, None, &ServerEvent::FrameReady { seq: f.frame.seq });
        }
    }
}

async fn state_handler(State(app): State<AppState>) -> Response {
    let state = app.snapshots.lock().expect("snapshot lock").state.clone();
    match state {
        Some(s) => Json(s).into_response(),
        None => StatusCode::SERVICE_UNAVAILABLE.into_response(),
    }
}

async fn frame_handler(State(app): State<AppState>, Path(seq): Path<u64>) -> Response {
    let frame = {
        let snap = app.snapshots.lock().expect("snapshot lock");
        snap.frames.iter().find(|f| f.frame.seq == seq).map(|f| f.frame.clone())
    };
    match frame {
        Some(f) => ([(header::CONTENT_TYPE, "image/png")], f.to_png()).into_response(),
        None => (StatusCode::NOT_FOUND, format!("frame {seq} is not available")).into_response(),
    }
}

async fn ws_handler(State(app): State<AppState>, upgrade: WebSocketUpgrade) -> Response {
    upgrade.on_upgrade(move |socket| client_session(app, socket))
}

async fn client_session(app: AppState, socket: WebSocket) {
    let id = app.next_client.fetch_add(1, Ordering::Relaxed);
    let mut events = app.events.subscribe();
    let (mut sink, mut stream) = socket.split();

    let send_task = tokio::spawn(async move {
        loop {
            match events.recv().await {
                Ok(out) if out.target.is_none_or(|t| t == id) => {
                    if sink.send(Message::Text(out.text.to_string())).await.is_err() {
                        break;
                    }
                }
                Ok(_) => {}
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    // The tick stream would have a gap; drop the client instead.
                    let e = CommandError::new(ErrorCode::Lagged, format!("missed {n} events"));
                    let _ = sink.send(Message::Text(ServerEvent::from(e).to_json())).await;
                    let _ = sink.close().await;
                    break;
                }
                Err(broadcast::error::RecvError::Closed) => break,
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        match msg {
            Message::Text(text) => match ClientCommand::parse(&text) {
                Ok(cmd) => {
                    if app.commands.send((id, cmd)).is_err() {
                        break;
                    }
                }
                Err(e) => publish(&app.events, Some(id), &e.into()),
            },
            Message::Binary(_) => {
                let e = CommandError::new(ErrorCode::InvalidCommand, "commands are JSON text messages");
                publish(&app.events, Some(id), &e.into());
            }
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => {}
        }
    }
    send_task.abort();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outgoing_targeting() {
        let (tx, mut rx) = broadcast::channel(4);
        publish(&tx, Some(3), &ServerEvent::FrameReady { seq: 1 });
        let got = rx.try_recv().unwrap();
        assert_eq!(got.target, Some(3));
        assert_eq!(&*got.text, r#"{"type":"frame_ready","seq":1}"#);
    }
}
