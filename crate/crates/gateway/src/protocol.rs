//! Wire messages. Every frame is one JSON object tagged by `type`.

use sentinel_core::reach::IntervalBox;
use sentinel_core::shield::{Mode, Verdict};
use sentinel_core::sim::ScenarioDoc;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClientMessage {
    /// Normalized throttle in [-1, 1]; values outside are clamped.
    Throttle {
        value: f64,
    },
    Reset,
    Pause,
    Resume,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerMessage {
    State(StateMessage),
    Config {
        scenario: Box<ScenarioDoc>,
        tick_ms: u64,
    },
    Error {
        message: String,
    },
    /// Reply to a client message that was accepted.
    Ack {
        of: String,
        paused: bool,
    },
}

/// Snapshot at the start of a tick, with the decision the shield made for it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    pub tick: u64,
    pub x: f64,
    pub v: f64,
    pub q: String,
    pub mode: Mode,
    pub verdict: Verdict,
    pub in_sb: bool,
    pub reach: Vec<ReachBox>,
    pub events: Vec<WireEvent>,
}

/// One box of the verified reach tube, `step` ticks ahead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachBox {
    pub step: usize,
    pub q: String,
    #[serde(rename = "box")]
    pub bounds: IntervalBox,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireEvent {
    pub tick: u64,
    /// A shield event kind (`fault`, `recovery_step`, ...) or `warning`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ClientMessage {
    pub fn name(&self) -> &'static str {
        match self {
            ClientMessage::Throttle { .. } => "throttle",
            ClientMessage::Reset => "reset",
            ClientMessage::Pause => "pause",
            ClientMessage::Resume => "resume",
        }
    }
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}
