use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use sentinel_core::sim::Scenario;
use tokio::net::TcpListener;
use tokio::time::MissedTickBehavior;

use crate::protocol::ServerMessage;
use crate::session::GatewaySession;

/// Default tick period, the operator delay of the case study.
pub const DEFAULT_TICK_MS: u64 = 250;

#[derive(Clone, Debug)]
pub struct GatewayConfig {
    pub scenario: Scenario,
    pub tick: Duration,
    /// Seed of every connection's disturbance stream.
    pub seed: u64,
}

impl GatewayConfig {
    pub fn new(scenario: Scenario) -> Self {
        GatewayConfig {
            scenario,
            tick: Duration::from_millis(DEFAULT_TICK_MS),
            seed: 0,
        }
    }
}

/// Routes: `GET /ws` upgrades to the operator socket, `GET /health` answers `ok`.
pub fn router(cfg: GatewayConfig) -> Router {
    Router::new()
        .route("/ws", get(upgrade))
        .route("/health", get(|| async { "ok" }))
        .with_state(Arc::new(cfg))
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, cfg: GatewayConfig) -> std::io::Result<()> {
    axum::serve(listener, router(cfg)).await
}

async fn upgrade(ws: WebSocketUpgrade, State(cfg): State<Arc<GatewayConfig>>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, cfg))
}

async fn send(socket: &mut WebSocket, msg: &ServerMessage) -> bool {
    socket
        .send(Message::Text(msg.to_json().into()))
        .await
        .is_ok()
}

/// Message handling and ticks are driven from one loop, so they never interleave.
async fn connection(mut socket: WebSocket, cfg: Arc<GatewayConfig>) {
    let tick_ms = cfg.tick.as_millis() as u64;
    let mut session = match GatewaySession::new(cfg.scenario.clone(), cfg.seed, tick_ms) {
        Ok(s) => s,
        Err(e) => {
            send(
                &mut socket,
                &ServerMessage::Error {
                    message: e.to_string(),
                },
            )
            .await;
            return;
        }
    };
    if !send(&mut socket, &session.config_message()).await {
        return;
    }
    let mut ticker = tokio::time::interval(cfg.tick);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
    loop {
        tokio::select! {
            _ = ticker.tick() => {
                if let Some(msg) = session.tick() {
                    if !send(&mut socket, &msg).await {
                        return;
                    }
                }
            }
            incoming = socket.recv() => {
                let reply = match incoming {
                    Some(Ok(Message::Text(text))) => session.handle_text(&text),
                    Some(Ok(Message::Binary(_))) => {
                        ServerMessage::Error { message: "binary frames are not supported".into() }
                    }
                    Some(Ok(Message::Close(_))) | Some(Err(_)) | None => return,
                    Some(Ok(_)) => continue,
                };
                if !send(&mut socket, &reply).await {
                    return;
                }
            }
        }
    }
}
