//! Seeded simulation of shielded (or bypassed) runs, scripted drivers,
//! disturbance strategies and trace export.

mod scenario;
mod trace;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::monitor::Monitor;
use crate::reach::{ControlLaw, GuardedRegion, IntervalBox, ReachError};
use crate::shield::{
    new_session, FnSource, Mode, Proposal, ProposalSource, ShieldConfig, ShieldError, Verdict,
};
use crate::CompileError;

pub use scenario::{delorean_scenario, LabelDoc, RegionDoc, Scenario, ScenarioDoc, DELOREAN_TOML};
pub use trace::{check_trace, Trace, TraceRecord, TraceSummary};

/// Ticks of full throttle before the faulty-late driver starts coasting.
pub const FAULTY_LATE_THROTTLE_TICKS: u64 = 3;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unknown driver profile `{0}`")]
    UnknownProfile(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Shield(#[from] ShieldError),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error("trace disagrees with the monitor at tick {tick}: recorded {recorded}, recomputed {recomputed}")]
    TraceMismatch {
        tick: u64,
        recorded: String,
        recomputed: String,
    },
    #[error("trace export failed: {0}")]
    Export(String),
}

/// Scripted performance controller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Driver {
    /// Drives toward x = 1 and stops there: `u = sat(2 (1 − x) − 2.5 v)`.
    Safe,
    /// Full throttle for a few ticks, then insists on coasting.
    FaultyLate,
    FullThrottle,
    /// Fixed input per tick; running out of inputs is a fault.
    Replay {
        inputs: Vec<Vec<f64>>,
    },
}

impl Driver {
    pub fn from_name(name: &str) -> Option<Driver> {
        match name {
            "safe" => Some(Driver::Safe),
            "faulty-late" => Some(Driver::FaultyLate),
            "full-throttle" => Some(Driver::FullThrottle),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Driver::Safe => "safe",
            Driver::FaultyLate => "faulty-late",
            Driver::FullThrottle => "full-throttle",
            Driver::Replay { .. } => "replay",
        }
    }

    /// Proposal stream for one run. Each query holds the input the driver
    /// intends for the current tick over the whole lookahead, except replay,
    /// which proposes its recorded future inputs.
    pub fn source(&self, input_bounds: &IntervalBox) -> Box<dyn ProposalSource + Send> {
        let hi = input_bounds.hi();
        let coast: Vec<f64> = input_bounds
            .0
            .iter()
            .map(|i| 0.0f64.max(i.lo).min(i.hi))
            .collect();
        match self.clone() {
            Driver::Safe => {
                let law = ControlLaw::affine(vec![vec![-2.0, -2.5]], vec![2.0]);
                Box::new(FnSource::new(move |_, _, _| {
                    Some(Proposal::Law(law.clone()))
                }))
            }
            Driver::FaultyLate => Box::new(FnSource::new(move |tick, _, _| {
                if tick < FAULTY_LATE_THROTTLE_TICKS {
                    Some(Proposal::Input(hi.clone()))
                } else {
                    Some(Proposal::Law(ControlLaw::constant(coast.clone())))
                }
            })),
            Driver::FullThrottle => Box::new(FnSource::new(move |_, _, _| {
                Some(Proposal::Input(hi.clone()))
            })),
            Driver::Replay { inputs } => Box::new(FnSource::new(move |tick, i, _| {
                inputs.get(tick as usize + i).cloned().map(Proposal::Input)
            })),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    Uniform,
    Extreme,
    Zero,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Uniform, Strategy::Extreme, Strategy::Zero];

    pub fn from_name(name: &str) -> Option<Strategy> {
        match name {
            "uniform" => Some(Strategy::Uniform),
            "extreme" => Some(Strategy::Extreme),
            "zero" => Some(Strategy::Zero),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Uniform => "uniform",
            Strategy::Extreme => "extreme",
            Strategy::Zero => "zero",
        }
    }
}

/// Ticks during which the extreme strategy alternates between the lowest
/// and highest corner before turning greedy.
const EXTREME_ALTERNATION: u64 = 4;

/// Samples a disturbance from `d`.
///
/// `score` rates a candidate by how close it pushes the next state to
/// leaving the high assurance region; only the extreme strategy uses it.
pub fn draw_disturbance(
    strategy: Strategy,
    d: &IntervalBox,
    rng: &mut ChaCha8Rng,
    tick: u64,
    score: &dyn Fn(&[f64]) -> f64,
) -> Vec<f64> {
    match strategy {
        Strategy::Zero => d.center(),
        Strategy::Uniform => {
            d.0.iter()
                .map(|i| {
                    if i.lo < i.hi {
                        rng.random_range(i.lo..=i.hi)
                    } else {
                        i.lo
                    }
                })
                .collect()
        }
        Strategy::Extreme => {
            if tick < EXTREME_ALTERNATION {
                let flip = rng.random::<bool>();
                if tick.is_multiple_of(2) ^ flip {
                    d.lo()
                } else {
                    d.hi()
                }
            } else {
                let vertices = d.vertices();
                let scores: Vec<f64> = vertices.iter().map(|v| score(v)).collect();
                let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let ties: Vec<usize> = (0..vertices.len()).filter(|&i| scores[i] == best).collect();
                let pick = ties[rng.random_range(0..ties.len())];
                vertices[pick].clone()
            }
        }
    }
}

/// How far `x` at monitor state `q` is from leaving the region: positive
/// means outside, infinite means excluded altogether.
pub fn violation_score(sb: &GuardedRegion, monitor: &Monitor, q: usize, x: &[f64]) -> f64 {
    if monitor.is_bot(q) {
        return f64::INFINITY;
    }
    match sb.get(q) {
        None => f64::MAX,
        Some(p) => p
            .halfspaces
            .iter()
            .map(|h| h.value(x) - h.b)
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Draws the disturbance for one tick from plant state `x` at monitor state
/// `q` under the applied input `u`.
pub fn draw_step_disturbance(
    strategy: Strategy,
    cfg: &ShieldConfig,
    rng: &mut ChaCha8Rng,
    tick: u64,
    x: &[f64],
    q: usize,
    u: &[f64],
) -> Vec<f64> {
    let monitor = &cfg.monitor;
    let score = |d: &[f64]| match cfg.dynamics.step(x, u, d) {
        Ok(next) => match cfg.labels.label(&next) {
            Some(l) => violation_score(&cfg.sb, monitor, monitor.step(q, l), &next),
            None => f64::INFINITY,
        },
        Err(_) => f64::NEG_INFINITY,
    };
    draw_disturbance(strategy, &cfg.dynamics.disturbance, rng, tick, &score)
}

/// Runs one seeded episode of `ticks` ticks, shielded or with the shield bypassed.
pub fn simulate(sc: &Scenario, seed: u64, ticks: u64, shielded: bool) -> Result<Trace, SimError> {
    let cfg = &sc.config;
    let dynamics = &cfg.dynamics;
    let monitor = &cfg.monitor;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut src = sc.doc.driver.source(&dynamics.input_bounds);
    let mut records = Vec::with_capacity(ticks as usize);

    let label = |x: &[f64]| {
        cfg.labels
            .label(x)
            .ok_or_else(|| SimError::Invalid(format!("state {x:?} is in no label region")))
    };
    let draw = |rng: &mut ChaCha8Rng,
                tick: u64,
                x: &[f64],
                q: usize,
                u: &[f64]|
     -> Result<Vec<f64>, SimError> {
        let d = draw_step_disturbance(sc.doc.strategy, cfg, rng, tick, x, q, u);
        if !dynamics.disturbance.contains_point(&d) {
            return Err(SimError::Invalid(format!(
                "drawn disturbance {d:?} outside D"
            )));
        }
        Ok(d)
    };

    let (final_x, final_q) = if shielded {
        let mut session = new_session(cfg.clone(), &sc.doc.x0)?;
        for tick in 0..ticks {
            let (x, q) = (session.x().to_vec(), session.q());
            let letter = label(&x)?;
            let decision = session.decide(src.as_mut())?;
            let d = draw(&mut rng, tick, &x, q, &decision.u)?;
            session.advance(&d)?;
            records.push(TraceRecord::new(
                monitor,
                tick,
                x,
                q,
                letter,
                decision.mode,
                decision.verdict,
                decision.u,
                d,
            ));
        }
        (session.x().to_vec(), session.q())
    } else {
        let mut x = sc.doc.x0.clone();
        let mut q = monitor.step(monitor.initial(), label(&x)?);
        for tick in 0..ticks {
            let letter = label(&x)?;
            src.start_query(tick, &x);
            let law = match src.next_item() {
                Some(Proposal::Input(u)) => ControlLaw::constant(u),
                Some(Proposal::Law(g)) => g,
                None => cfg.backup.clone(),
            };
            let u: Vec<f64> = law
                .eval(&x, &dynamics.input_bounds)
                .iter()
                .zip(&dynamics.input_bounds.0)
                .map(|(&v, i)| v.max(i.lo).min(i.hi))
                .collect();
            let d = draw(&mut rng, tick, &x, q, &u)?;
            let next = dynamics.step(&x, &u, &d)?;
            records.push(TraceRecord::new(
                monitor,
                tick,
                x,
                q,
                letter,
                Mode::Nominal,
                Verdict::Accepted,
                u,
                d,
            ));
            q = monitor.step(q, label(&next)?);
            x = next;
        }
        (x, q)
    };

    Ok(Trace::new(sc, seed, shielded, records, final_x, final_q))
}

/// Runs `simulate` for every seed in parallel; results are ordered by seed.
pub fn batch(
    sc: &Scenario,
    seeds: &[u64],
    ticks: u64,
    shielded: bool,
) -> Result<Vec<Trace>, SimError> {
    seeds
        .par_iter()
        .map(|&seed| simulate(sc, seed, ticks, shielded))
        .collect()
}
