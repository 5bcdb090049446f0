//! Operator gateway: one shielded simulation per WebSocket connection,
//! ticked at a fixed wall-clock rate and streamed as JSON frames.

pub mod protocol;
mod server;
mod session;

pub use protocol::{ClientMessage, ReachBox, ServerMessage, StateMessage, WireEvent};
pub use server::{router, serve, GatewayConfig, DEFAULT_TICK_MS};
pub use session::GatewaySession;
