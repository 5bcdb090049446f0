use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sentinel_core::shield::{
    new_session, EventKind, FnSource, Proposal, ShieldError, ShieldSession,
};
use sentinel_core::sim::{draw_step_disturbance, Scenario};

use crate::protocol::{ClientMessage, ReachBox, ServerMessage, StateMessage, WireEvent};

/// One operator connection: a shield session plus the buffered throttle.
///
/// The throttle received between two ticks is held and proposed, as a
/// constant input over the whole lookahead, from the next tick on.
pub struct GatewaySession {
    scenario: Scenario,
    seed: u64,
    tick_ms: u64,
    rng: ChaCha8Rng,
    shield: ShieldSession,
    held: Vec<f64>,
    paused: bool,
    halted: bool,
    /// Shield events already forwarded.
    forwarded: usize,
    warnings: Vec<WireEvent>,
}

fn kind_name(kind: &EventKind) -> &'static str {
    match kind {
        EventKind::Accept => "accept",
        EventKind::Fault => "fault",
        EventKind::RecoveryStep => "recovery_step",
        EventKind::Backup => "backup",
        EventKind::Reengage => "reengage",
    }
}

impl GatewaySession {
    pub fn new(scenario: Scenario, seed: u64, tick_ms: u64) -> Result<Self, ShieldError> {
        if scenario.config.dynamics.n() != 2 {
            return Err(ShieldError::InvalidConfig(
                "the gateway streams (x, v) and needs a two-state plant".into(),
            ));
        }
        let shield = new_session(scenario.config.clone(), &scenario.doc.x0)?;
        let held = vec![0.0; scenario.config.dynamics.m()];
        Ok(GatewaySession {
            scenario,
            seed,
            tick_ms,
            rng: ChaCha8Rng::seed_from_u64(seed),
            shield,
            held,
            paused: false,
            halted: false,
            forwarded: 0,
            warnings: Vec::new(),
        })
    }

    pub fn config_message(&self) -> ServerMessage {
        ServerMessage::Config {
            scenario: Box::new(self.scenario.doc.clone()),
            tick_ms: self.tick_ms,
        }
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    /// Input proposed at the next tick.
    pub fn held_input(&self) -> &[f64] {
        &self.held
    }

    pub fn shield(&self) -> &ShieldSession {
        &self.shield
    }

    /// Parses and applies one client frame; malformed frames get an error reply.
    pub fn handle_text(&mut self, text: &str) -> ServerMessage {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => ServerMessage::Error {
                message: format!("malformed message: {e}"),
            },
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) -> ServerMessage {
        match &msg {
            ClientMessage::Throttle { value } => {
                if !value.is_finite() {
                    return ServerMessage::Error {
                        message: format!("throttle value {value} is not finite"),
                    };
                }
                let clamped = value.clamp(-1.0, 1.0);
                if clamped != *value {
                    self.warnings.push(WireEvent {
                        tick: self.shield.tick(),
                        kind: "warning".into(),
                        detail: Some(format!("throttle {value} clamped to {clamped}")),
                    });
                }
                let bounds = &self.scenario.config.dynamics.input_bounds;
                self.held = bounds
                    .0
                    .iter()
                    .map(|i| i.lo + (clamped + 1.0) / 2.0 * (i.hi - i.lo))
                    .collect();
            }
            ClientMessage::Reset => {
                match new_session(self.scenario.config.clone(), &self.scenario.doc.x0) {
                    Ok(s) => self.shield = s,
                    Err(e) => {
                        return ServerMessage::Error {
                            message: e.to_string(),
                        }
                    }
                }
                self.rng = ChaCha8Rng::seed_from_u64(self.seed);
                self.held.iter_mut().for_each(|u| *u = 0.0);
                self.forwarded = 0;
                self.warnings.clear();
                self.halted = false;
            }
            ClientMessage::Pause => self.paused = true,
            ClientMessage::Resume => self.paused = false,
        }
        ServerMessage::Ack {
            of: msg.name().into(),
            paused: self.paused,
        }
    }

    /// Runs one shield tick. Paused or halted sessions emit nothing; a shield
    /// error is reported once and halts the session until reset.
    pub fn tick(&mut self) -> Option<ServerMessage> {
        if self.paused || self.halted {
            return None;
        }
        match self.try_tick() {
            Ok(m) => Some(ServerMessage::State(m)),
            Err(e) => {
                self.halted = true;
                Some(ServerMessage::Error {
                    message: format!("session halted: {e}"),
                })
            }
        }
    }

    fn try_tick(&mut self) -> Result<StateMessage, ShieldError> {
        let cfg = self.scenario.config.clone();
        let monitor = &cfg.monitor;
        let (x, q, in_sb) = (
            self.shield.x().to_vec(),
            self.shield.q(),
            self.shield.in_sb(),
        );
        let u = self.held.clone();
        let mut src = FnSource::new(move |_, _, _| Some(Proposal::Input(u.clone())));
        let decision = self.shield.decide(&mut src)?;
        let d = draw_step_disturbance(
            self.scenario.doc.strategy,
            &cfg,
            &mut self.rng,
            decision.tick,
            &x,
            q,
            &decision.u,
        );
        self.shield.advance(&d)?;

        let reach = decision
            .tube
            .iter()
            .enumerate()
            .flat_map(|(i, set)| {
                set.iter().map(move |(q, b)| ReachBox {
                    step: i + 1,
                    q: monitor.state_name(q),
                    bounds: b.clone(),
                })
            })
            .collect();
        let mut events = std::mem::take(&mut self.warnings);
        events.extend(
            self.shield.events()[self.forwarded..]
                .iter()
                .filter(|e| e.kind != EventKind::Accept)
                .map(|e| WireEvent {
                    tick: e.tick,
                    kind: kind_name(&e.kind).into(),
                    detail: e.detail.clone(),
                }),
        );
        self.forwarded = self.shield.events().len();
        Ok(StateMessage {
            tick: decision.tick,
            x: x[0],
            v: x[1],
            q: monitor.state_name(q),
            mode: decision.mode,
            verdict: decision.verdict,
            in_sb,
            reach,
            events,
        })
    }
}
