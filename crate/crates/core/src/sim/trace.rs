use serde::{Deserialize, Serialize};

use crate::ltl::Letter;
use crate::monitor::{Monitor, TruthValue};
use crate::shield::{Mode, Verdict};

use super::{Scenario, SimError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tick: u64,
    /// State at the start of the tick.
    pub x: Vec<f64>,
    pub q: usize,
    pub state: String,
    /// Atoms true at `x`.
    pub letter: Vec<String>,
    pub mode: Mode,
    pub verdict: Verdict,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
}

impl TraceRecord {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        monitor: &Monitor,
        tick: u64,
        x: Vec<f64>,
        q: usize,
        letter: Letter,
        mode: Mode,
        verdict: Verdict,
        u: Vec<f64>,
        d: Vec<f64>,
    ) -> Self {
        TraceRecord {
            tick,
            x,
            q,
            state: monitor.state_name(q),
            letter: monitor.alphabet().letter_names(letter),
            mode,
            verdict,
            u,
            d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub ticks: u64,
    pub bot_reached: bool,
    pub first_fault_tick: Option<u64>,
    /// Ticks whose applied input did not come from a freshly verified proposal.
    pub interventions: u64,
    pub watch: Option<String>,
    /// First tick at which the watched atom holds, and the state there.
    pub crossing_tick: Option<u64>,
    pub crossing_state: Option<Vec<f64>>,
    pub final_x: Vec<f64>,
    pub final_state: String,
    pub final_verdict: TruthValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub scenario: String,
    pub driver: String,
    pub strategy: String,
    pub seed: u64,
    pub shielded: bool,
    pub records: Vec<TraceRecord>,
    pub summary: TraceSummary,
}

impl Trace {
    pub(crate) fn new(
        sc: &Scenario,
        seed: u64,
        shielded: bool,
        records: Vec<TraceRecord>,
        final_x: Vec<f64>,
        final_q: usize,
    ) -> Self {
        let monitor = sc.monitor();
        let watch = sc.doc.watch.clone();
        let crossing = watch
            .as_ref()
            .and_then(|w| records.iter().find(|r| r.letter.iter().any(|a| a == w)));
        let summary = TraceSummary {
            ticks: records.len() as u64,
            bot_reached: records.iter().any(|r| monitor.is_bot(r.q)),
            first_fault_tick: records
                .iter()
                .find(|r| r.verdict == Verdict::Fault)
                .map(|r| r.tick),
            interventions: records
                .iter()
                .filter(|r| r.verdict != Verdict::Accepted)
                .count() as u64,
            crossing_tick: crossing.map(|r| r.tick),
            crossing_state: crossing.map(|r| r.x.clone()),
            watch,
            final_x,
            final_state: monitor.state_name(final_q),
            final_verdict: monitor.output(final_q),
        };
        Trace {
            scenario: sc.doc.name.clone(),
            driver: sc.doc.driver.name().to_string(),
            strategy: sc.doc.strategy.name().to_string(),
            seed,
            shielded,
            records,
            summary,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("traces always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Parse(e.to_string()))
    }

    /// One row per tick, followed by `#`-prefixed summary lines.
    pub fn to_csv(&self) -> Result<String, SimError> {
        let n = self.records.first().map_or(0, |r| r.x.len());
        let m = self.records.first().map_or(0, |r| r.u.len());
        let p = self.records.first().map_or(0, |r| r.d.len());
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["tick".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend(["q", "state", "letter", "mode", "verdict"].map(String::from));
        header.extend((0..m).map(|i| format!("u{i}")));
        header.extend((0..p).map(|i| format!("d{i}")));
        let export = |e: csv::Error| SimError::Export(e.to_string());
        w.write_record(&header).map_err(export)?;
        for r in &self.records {
            let mut row = vec![r.tick.to_string()];
            row.extend(r.x.iter().map(f64::to_string));
            row.push(r.q.to_string());
            row.push(r.state.clone());
            row.push(format!("{{{}}}", r.letter.join(",")));
            row.push(r.mode.as_str().to_string());
            row.push(r.verdict.as_str().to_string());
            row.extend(r.u.iter().map(f64::to_string));
            row.extend(r.d.iter().map(f64::to_string));
            w.write_record(&row).map_err(export)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| SimError::Export(e.to_string()))?;
        let mut out = String::from_utf8(bytes).map_err(|e| SimError::Export(e.to_string()))?;
        let s = &self.summary;
        let opt = |v: Option<u64>| v.map_or("none".to_string(), |t| t.to_string());
        out.push_str(&format!("# ticks={}\n", s.ticks));
        out.push_str(&format!("# bot_reached={}\n", s.bot_reached));
        out.push_str(&format!("# first_fault_tick={}\n", opt(s.first_fault_tick)));
        out.push_str(&format!("# interventions={}\n", s.interventions));
        if let Some(w) = &s.watch {
            out.push_str(&format!("# {w}_tick={}\n", opt(s.crossing_tick)));
            if let Some(x) = &s.crossing_state {
                out.push_str(&format!("# {w}_state={x:?}\n"));
            }
        }
        out.push_str(&format!("# final_state={}\n", s.final_state));
        out.push_str(&format!("# final_verdict={}\n", s.final_verdict.as_str()));
        Ok(out)
    }
}

/// Re-runs `monitor` over the recorded letters, checking every recorded
/// state, and returns the verdict after the last record.
pub fn check_trace(t: &Trace, monitor: &Monitor) -> Result<TruthValue, SimError> {
    let alphabet = monitor.alphabet();
    let mut q = monitor.initial();
    for r in &t.records {
        let letter = alphabet
            .letter(&r.letter)
            .map_err(|e| SimError::Invalid(format!("tick {}: {e}", r.tick)))?;
        q = monitor.step(q, letter);
        if q != r.q {
            return Err(SimError::TraceMismatch {
                tick: r.tick,
                recorded: monitor.state_name(r.q),
                recomputed: monitor.state_name(q),
            });
        }
    }
    Ok(monitor.output(q))
}
