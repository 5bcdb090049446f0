//! The assurance mechanism: recovery-sequence search and the shielded
//! control loop with its NOMINAL / RECOVERING / BACKUP mode machine.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::Formula;
use crate::monitor::{Compiler, Monitor, SafetyClass};
use crate::reach::{
    product_in_region, product_step, AffineDynamics, ControlLaw, GuardedRegion, LabelMap,
    ProductSet, ReachError,
};
use crate::CompileError;

pub const DEFAULT_N_MAX: usize = 8;

#[derive(Debug, Error)]
pub enum ShieldError {
    #[error("initial state {x:?} with monitor state {q} is outside the high assurance region")]
    NotInHighAssurance { x: Vec<f64>, q: usize },
    #[error("formula is not a safety property")]
    NotSafetyFormula,
    #[error("invalid shield configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// One item of a lookahead query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proposal {
    Input(Vec<f64>),
    Law(ControlLaw),
}

/// The performance controller, asked for a fresh lookahead every tick.
pub trait ProposalSource {
    /// Begins a query for the plan starting at `tick` from state `x`.
    fn start_query(&mut self, tick: u64, x: &[f64]);
    /// Next item of the current plan, or `None` when the controller has no more.
    fn next_item(&mut self) -> Option<Proposal>;
}

/// Adapts a closure `(tick, index, x) -> item` into a [`ProposalSource`].
pub struct FnSource<F> {
    f: F,
    tick: u64,
    index: usize,
    x: Vec<f64>,
}

impl<F> FnSource<F>
where
    F: FnMut(u64, usize, &[f64]) -> Option<Proposal>,
{
    pub fn new(f: F) -> Self {
        FnSource {
            f,
            tick: 0,
            index: 0,
            x: Vec::new(),
        }
    }
}

impl<F> ProposalSource for FnSource<F>
where
    F: FnMut(u64, usize, &[f64]) -> Option<Proposal>,
{
    fn start_query(&mut self, tick: u64, x: &[f64]) {
        self.tick = tick;
        self.index = 0;
        self.x = x.to_vec();
    }

    fn next_item(&mut self) -> Option<Proposal> {
        let item = (self.f)(self.tick, self.index, &self.x);
        self.index += 1;
        item
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceMode {
    Deterministic,
    #[default]
    Disturbed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Nominal,
    Recovering,
    Backup,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Nominal => "NOMINAL",
            Mode::Recovering => "RECOVERING",
            Mode::Backup => "BACKUP",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Accepted,
    Fault,
    Recovering,
    Backup,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Accepted => "ACCEPTED",
            Verdict::Fault => "FAULT",
            Verdict::Recovering => "RECOVERING",
            Verdict::Backup => "BACKUP",
        }
    }
}

/// Why a lookahead was rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Rejection {
    /// The plan did not return to the high assurance region within `N_max + 1` steps.
    Exhausted,
    EntersViolation {
        step: usize,
    },
    NoProposal {
        step: usize,
    },
    OutsideInputBounds {
        step: usize,
    },
    OutsideDomain {
        step: usize,
    },
    InvalidLaw {
        step: usize,
        message: String,
    },
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rejection::Exhausted => write!(f, "plan does not re-enter the high assurance region"),
            Rejection::EntersViolation { step } => {
                write!(f, "plan violates the specification at step {step}")
            }
            Rejection::NoProposal { step } => {
                write!(f, "controller ran out of proposals at step {step}")
            }
            Rejection::OutsideInputBounds { step } => {
                write!(f, "input outside bounds at step {step}")
            }
            Rejection::OutsideDomain { step } => {
                write!(f, "reach set leaves the law's domain at step {step}")
            }
            Rejection::InvalidLaw { step, message } => {
                write!(f, "invalid law at step {step}: {message}")
            }
        }
    }
}

/// A verified plan and the reach sets after each of its steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverySequence {
    pub laws: Vec<ControlLaw>,
    pub tube: Vec<ProductSet>,
}

#[derive(Clone, Debug)]
pub struct ShieldConfig {
    pub formula: Formula,
    pub monitor: Monitor,
    pub dynamics: AffineDynamics,
    pub labels: LabelMap,
    pub sb: GuardedRegion,
    pub backup: ControlLaw,
    pub n_max: usize,
    pub reengage: bool,
    pub disturbance_mode: DisturbanceMode,
    /// Accept formulas that are not safety properties.
    pub allow_non_safety: bool,
}

impl ShieldConfig {
    pub fn new(
        formula: Formula,
        monitor: Monitor,
        dynamics: AffineDynamics,
        labels: LabelMap,
        sb: GuardedRegion,
        backup: ControlLaw,
    ) -> Self {
        ShieldConfig {
            formula,
            monitor,
            dynamics,
            labels,
            sb,
            backup,
            n_max: DEFAULT_N_MAX,
            reengage: false,
            disturbance_mode: DisturbanceMode::Disturbed,
            allow_non_safety: false,
        }
    }

    pub fn validate(&self) -> Result<(), ShieldError> {
        self.dynamics.validate()?;
        self.backup.validate(&self.dynamics)?;
        if self.n_max == 0 {
            return Err(ShieldError::InvalidConfig(
                "n_max must be at least 1".into(),
            ));
        }
        if let Some(&q) = self
            .sb
            .regions
            .keys()
            .find(|&&q| q >= self.monitor.len() || self.monitor.is_bot(q))
        {
            return Err(ShieldError::InvalidConfig(format!(
                "high assurance region lists invalid state {q}"
            )));
        }
        let n = self.dynamics.n();
        if self.sb.regions.values().any(|p| !p.dims_match(n)) {
            return Err(ShieldError::InvalidConfig(
                "region constraint of wrong dimension".into(),
            ));
        }
        let letters = self.monitor.alphabet().letter_count();
        for r in &self.labels.regions {
            if r.letter.index() >= letters || !r.region.dims_match(n) {
                return Err(ShieldError::InvalidConfig(format!(
                    "bad label region for letter {}",
                    r.letter.0
                )));
            }
        }
        if self.disturbance_mode == DisturbanceMode::Deterministic
            && !self.dynamics.disturbance.is_point()
        {
            return Err(ShieldError::InvalidConfig(
                "deterministic mode requires a point disturbance".into(),
            ));
        }
        Ok(())
    }

    fn label(&self, x: &[f64]) -> Result<crate::ltl::Letter, ShieldError> {
        self.labels
            .label(x)
            .ok_or_else(|| ShieldError::Internal(format!("state {x:?} is in no label region")))
    }
}

/// Deterministic lookahead: simulate the proposed inputs point by point.
pub fn recovery(
    x: &[f64],
    q: usize,
    tick: u64,
    src: &mut dyn ProposalSource,
    cfg: &ShieldConfig,
) -> Result<Result<RecoverySequence, Rejection>, ShieldError> {
    let d = cfg.dynamics.disturbance.lo();
    let bounds = &cfg.dynamics.input_bounds;
    src.start_query(tick, x);
    let (mut xs, mut qs) = (x.to_vec(), q);
    let mut laws = Vec::new();
    let mut tube = Vec::new();
    let mut i = 0;
    while i <= cfg.n_max && !cfg.monitor.is_bot(qs) {
        let law = match src.next_item() {
            None => return Ok(Err(Rejection::NoProposal { step: i })),
            Some(Proposal::Input(u)) => ControlLaw::constant(u),
            Some(Proposal::Law(g)) => g,
        };
        if let Err(e) = law.validate(&cfg.dynamics) {
            return Ok(Err(match e {
                ReachError::InvalidLaw(_)
                    if matches!(law.kind, crate::reach::LawKind::Constant { .. }) =>
                {
                    Rejection::OutsideInputBounds { step: i }
                }
                e => Rejection::InvalidLaw {
                    step: i,
                    message: e.to_string(),
                },
            }));
        }
        if !law.domain.contains_point(&xs) {
            return Ok(Err(Rejection::OutsideDomain { step: i }));
        }
        let u = law.eval(&xs, bounds);
        if !bounds.contains_point(&u) {
            return Ok(Err(Rejection::OutsideInputBounds { step: i }));
        }
        xs = cfg.dynamics.step(&xs, &u, &d)?;
        qs = cfg.monitor.step(qs, cfg.label(&xs)?);
        laws.push(law);
        tube.push(ProductSet::point(qs, &xs));
        if cfg.sb.contains(qs, &xs) {
            return Ok(Ok(RecoverySequence { laws, tube }));
        }
        i += 1;
    }
    Ok(Err(if cfg.monitor.is_bot(qs) {
        Rejection::EntersViolation { step: i }
    } else {
        Rejection::Exhausted
    }))
}

/// Lookahead under disturbances: propagate box reach sets of the proposed laws.
pub fn recovery_d(
    x: &[f64],
    q: usize,
    tick: u64,
    src: &mut dyn ProposalSource,
    cfg: &ShieldConfig,
) -> Result<Result<RecoverySequence, Rejection>, ShieldError> {
    src.start_query(tick, x);
    let mut r = ProductSet::point(q, x);
    let mut laws = Vec::new();
    let mut tube = Vec::new();
    for i in 0..=cfg.n_max {
        let law = match src.next_item() {
            None => return Ok(Err(Rejection::NoProposal { step: i })),
            Some(Proposal::Input(u)) => ControlLaw::constant(u),
            Some(Proposal::Law(g)) => g,
        };
        if let Err(e) = law.validate(&cfg.dynamics) {
            return Ok(Err(match e {
                ReachError::InvalidLaw(_)
                    if matches!(law.kind, crate::reach::LawKind::Constant { .. }) =>
                {
                    Rejection::OutsideInputBounds { step: i }
                }
                e => Rejection::InvalidLaw {
                    step: i,
                    message: e.to_string(),
                },
            }));
        }
        if !r.iter().all(|(_, b)| law.domain.contains_box(b)) {
            return Ok(Err(Rejection::OutsideDomain { step: i }));
        }
        r = product_step(&r, &cfg.dynamics, &law, &cfg.labels, &cfg.monitor)?;
        laws.push(law);
        tube.push(r.clone());
        if product_in_region(&r, &cfg.sb) {
            return Ok(Ok(RecoverySequence { laws, tube }));
        }
        if r.states().all(|s| cfg.monitor.is_bot(s)) {
            return Ok(Err(Rejection::EntersViolation { step: i + 1 }));
        }
    }
    Ok(Err(Rejection::Exhausted))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Accept,
    Fault,
    RecoveryStep,
    Backup,
    Reengage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub tick: u64,
    pub kind: EventKind,
    pub mode: Mode,
    pub verdict: Verdict,
    pub u: Vec<f64>,
    pub q: usize,
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Outcome of one tick of the shield.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub tick: u64,
    pub u: Vec<f64>,
    pub mode: Mode,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fresh: Option<RecoverySequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection: Option<Rejection>,
    /// Reach sets of the plan being executed, starting one tick ahead.
    pub tube: Vec<ProductSet>,
}

#[derive(Clone, Debug)]
pub struct ShieldSession {
    cfg: Arc<ShieldConfig>,
    x: Vec<f64>,
    q: usize,
    mode: Mode,
    memory: VecDeque<ControlLaw>,
    tick: u64,
    pending: Option<Vec<f64>>,
    events: Vec<Event>,
}

/// Starts a session at `x0`, with the monitor having read `L(x0)`.
pub fn new_session(cfg: Arc<ShieldConfig>, x0: &[f64]) -> Result<ShieldSession, ShieldError> {
    cfg.validate()?;
    if x0.len() != cfg.dynamics.n() {
        return Err(ReachError::DimensionMismatch {
            what: "initial state",
            expected: cfg.dynamics.n(),
            got: x0.len(),
        }
        .into());
    }
    if !cfg.allow_non_safety {
        let class = Compiler::default().classify_safety(&cfg.formula, cfg.monitor.alphabet())?;
        if class != SafetyClass::Safety {
            return Err(ShieldError::NotSafetyFormula);
        }
    }
    let q0 = cfg.monitor.step(cfg.monitor.initial(), cfg.label(x0)?);
    if !cfg.sb.contains(q0, x0) {
        return Err(ShieldError::NotInHighAssurance {
            x: x0.to_vec(),
            q: q0,
        });
    }
    Ok(ShieldSession {
        cfg,
        x: x0.to_vec(),
        q: q0,
        mode: Mode::Nominal,
        memory: VecDeque::new(),
        tick: 0,
        pending: None,
        events: Vec::new(),
    })
}

impl ShieldSession {
    pub fn config(&self) -> &ShieldConfig {
        &self.cfg
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn memory(&self) -> impl Iterator<Item = &ControlLaw> {
        self.memory.iter()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn in_sb(&self) -> bool {
        self.cfg.sb.contains(self.q, &self.x)
    }

    /// Replays the memorized remainder under worst-case disturbances and
    /// checks that it still ends in the high assurance region.
    pub fn memory_is_valid(&self) -> Result<bool, ShieldError> {
        let mut r = ProductSet::point(self.q, &self.x);
        for law in &self.memory {
            r = product_step(
                &r,
                &self.cfg.dynamics,
                law,
                &self.cfg.labels,
                &self.cfg.monitor,
            )?;
        }
        Ok(product_in_region(&r, &self.cfg.sb))
    }

    fn lookahead(
        &self,
        src: &mut dyn ProposalSource,
    ) -> Result<Result<RecoverySequence, Rejection>, ShieldError> {
        match self.cfg.disturbance_mode {
            DisturbanceMode::Deterministic => recovery(&self.x, self.q, self.tick, src, &self.cfg),
            DisturbanceMode::Disturbed => recovery_d(&self.x, self.q, self.tick, src, &self.cfg),
        }
    }

    fn tube_of<'a>(
        &self,
        laws: impl IntoIterator<Item = &'a ControlLaw>,
    ) -> Result<Vec<ProductSet>, ShieldError> {
        let mut r = ProductSet::point(self.q, &self.x);
        let mut tube = Vec::new();
        for law in laws {
            r = product_step(
                &r,
                &self.cfg.dynamics,
                law,
                &self.cfg.labels,
                &self.cfg.monitor,
            )?;
            tube.push(r.clone());
        }
        Ok(tube)
    }

    /// Chooses the input for the current tick. Must be followed by [`ShieldSession::advance`].
    pub fn decide(&mut self, src: &mut dyn ProposalSource) -> Result<Decision, ShieldError> {
        if self.pending.is_some() {
            return Err(ShieldError::Internal(
                "decide called twice without advance".into(),
            ));
        }
        if self.cfg.monitor.is_bot(self.q) {
            return Err(ShieldError::Internal(format!(
                "monitor reached the violation state at tick {}",
                self.tick
            )));
        }
        if cfg!(debug_assertions) && self.mode == Mode::Nominal && self.tick > 0 {
            debug_assert!(
                self.memory_is_valid()?,
                "memorized plan no longer verifies at tick {}",
                self.tick
            );
        }
        let bounds = &self.cfg.dynamics.input_bounds;
        let query = self.mode == Mode::Nominal || self.cfg.reengage;
        let (outcome, rejection) = if query {
            match self.lookahead(src)? {
                Ok(seq) => (Some(seq), None),
                Err(why) => (None, Some(why)),
            }
        } else {
            (None, None)
        };

        let (u, verdict, kind, fresh, tube) = if let Some(seq) = outcome {
            let u = seq.laws[0].eval(&self.x, bounds);
            self.memory = seq.laws.iter().skip(1).cloned().collect();
            let kind = if self.mode == Mode::Nominal {
                EventKind::Accept
            } else {
                EventKind::Reengage
            };
            self.mode = Mode::Nominal;
            let tube = seq.tube.clone();
            (u, Verdict::Accepted, kind, Some(seq), tube)
        } else {
            let faulted = self.mode == Mode::Nominal;
            let (u, kind, tube) = match self.memory.pop_front() {
                Some(law) => {
                    self.mode = Mode::Recovering;
                    let u = law.eval(&self.x, bounds);
                    let tube = self.tube_of(std::iter::once(&law).chain(self.memory.iter()))?;
                    (u, EventKind::RecoveryStep, tube)
                }
                None => {
                    self.mode = Mode::Backup;
                    let u = self.cfg.backup.eval(&self.x, bounds);
                    let tube = self.tube_of(std::iter::once(&self.cfg.backup))?;
                    (u, EventKind::Backup, tube)
                }
            };
            let verdict = match (faulted, self.mode) {
                (true, _) => Verdict::Fault,
                (false, Mode::Recovering) => Verdict::Recovering,
                _ => Verdict::Backup,
            };
            let kind = if faulted { EventKind::Fault } else { kind };
            (u, verdict, kind, None, tube)
        };

        self.events.push(Event {
            tick: self.tick,
            kind,
            mode: self.mode,
            verdict,
            u: u.clone(),
            q: self.q,
            x: self.x.clone(),
            detail: rejection
                .as_ref()
                .filter(|_| verdict == Verdict::Fault)
                .map(|r| r.to_string()),
        });
        self.pending = Some(u.clone());
        Ok(Decision {
            tick: self.tick,
            u,
            mode: self.mode,
            verdict,
            fresh,
            rejection,
            tube,
        })
    }

    /// Applies the decided input with the environment's disturbance `d`.
    pub fn advance(&mut self, d: &[f64]) -> Result<(), ShieldError> {
        let u = self
            .pending
            .take()
            .ok_or_else(|| ShieldError::Internal("advance called without a decision".into()))?;
        let x = self.cfg.dynamics.step(&self.x, &u, d)?;
        let q = self.cfg.monitor.step(self.q, self.cfg.label(&x)?);
        self.x = x;
        self.q = q;
        self.tick += 1;
        if self.cfg.monitor.is_bot(q) {
            return Err(ShieldError::Internal(format!(
                "monitor reached the violation state at tick {} (x = {:?})",
                self.tick, self.x
            )));
        }
        Ok(())
    }

    pub fn step(
        &mut self,
        src: &mut dyn ProposalSource,
        d: &[f64],
    ) -> Result<Decision, ShieldError> {
        let decision = self.decide(src)?;
        self.advance(d)?;
        Ok(decision)
    }
}

/// One full tick: decide, then advance with the actual disturbance.
pub fn session_step(
    s: &mut ShieldSession,
    src: &mut dyn ProposalSource,
    d: &[f64],
) -> Result<Decision, ShieldError> {
    s.step(src, d)
}
