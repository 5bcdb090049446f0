//! Three-valued monitors.
//!
//! A monitor is a total deterministic machine over 2^AP whose state output
//! is the verdict of the word read so far: `Top` when every infinite
//! extension satisfies the formula, `Bot` when none does, `Inc` otherwise.
//! It is compiled from the Büchi automata of the formula and of its
//! negation: both are determinized by subset construction over their live
//! states, the two machines run in product, and the pair of "still alive"
//! flags decides the output. The product is then Moore-minimized.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::ltl::{Alphabet, Formula, Letter};
use crate::nba::{formula_to_nba, live_states, Nba};
use crate::CompileError;

/// Default bound on automaton sizes during compilation.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthValue {
    Top,
    Bot,
    Inc,
}

impl TruthValue {
    pub fn symbol(self) -> &'static str {
        match self {
            TruthValue::Top => "⊤",
            TruthValue::Bot => "⊥",
            TruthValue::Inc => "?",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TruthValue::Top => "top",
            TruthValue::Bot => "bot",
            TruthValue::Inc => "inc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SafetyClass {
    Safety,
    NotSafety,
}

impl std::fmt::Display for SafetyClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SafetyClass::Safety => "Safety",
            SafetyClass::NotSafety => "NotSafety",
        })
    }
}

/// A deterministic, total Moore machine with three-valued outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monitor {
    alphabet: Alphabet,
    outputs: Vec<TruthValue>,
    initial: usize,
    delta: Vec<Vec<usize>>,
    names: Vec<String>,
}

impl Monitor {
    /// Checks shape and totality; state names default to `q<i>`.
    pub fn new(
        alphabet: Alphabet,
        outputs: Vec<TruthValue>,
        initial: usize,
        delta: Vec<Vec<usize>>,
    ) -> Result<Self, CompileError> {
        let n = outputs.len();
        if n == 0 || initial >= n {
            return Err(CompileError::InvalidMonitor(
                "initial state out of range".into(),
            ));
        }
        if delta.len() != n {
            return Err(CompileError::InvalidMonitor(
                "one transition row per state required".into(),
            ));
        }
        for (q, row) in delta.iter().enumerate() {
            if row.len() != alphabet.letter_count() {
                return Err(CompileError::InvalidMonitor(format!(
                    "state {q} has {} transitions, expected {}",
                    row.len(),
                    alphabet.letter_count()
                )));
            }
            if let Some(t) = row.iter().find(|&&t| t >= n) {
                return Err(CompileError::InvalidMonitor(format!(
                    "state {q} targets missing state {t}"
                )));
            }
        }
        let names = (0..n).map(|i| format!("q{i}")).collect();
        Ok(Monitor {
            alphabet,
            outputs,
            initial,
            delta,
            names,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn output(&self, q: usize) -> TruthValue {
        self.outputs[q]
    }

    pub fn step(&self, q: usize, l: Letter) -> usize {
        self.delta[q][l.index()]
    }

    pub fn run_from(&self, q: usize, word: &[Letter]) -> usize {
        word.iter().fold(q, |q, &l| self.step(q, l))
    }

    pub fn run_word(&self, word: &[Letter]) -> TruthValue {
        self.output(self.run_from(self.initial, word))
    }

    pub fn states_with(&self, v: TruthValue) -> Vec<usize> {
        (0..self.len()).filter(|&q| self.outputs[q] == v).collect()
    }

    pub fn top_state(&self) -> Option<usize> {
        self.states_with(TruthValue::Top).first().copied()
    }

    pub fn bot_state(&self) -> Option<usize> {
        self.states_with(TruthValue::Bot).first().copied()
    }

    pub fn is_bot(&self, q: usize) -> bool {
        self.outputs[q] == TruthValue::Bot
    }

    pub fn is_trap(&self, q: usize) -> bool {
        self.delta[q].iter().all(|&t| t == q)
    }

    /// Construction-time name (subset members for unminimized machines).
    pub fn internal_name(&self, q: usize) -> &str {
        &self.names[q]
    }

    /// Stable user-facing name: `top`/`bot` for the verdict states, `inc`
    /// when exactly one inconclusive state exists, `q<i>` otherwise.
    pub fn state_name(&self, q: usize) -> String {
        let v = self.outputs[q];
        if self.states_with(v).len() == 1 {
            v.as_str().to_string()
        } else {
            format!("q{q}")
        }
    }

    /// Inverse of [`Monitor::state_name`]; also accepts `q<i>` and `<i>`.
    pub fn resolve_state(&self, name: &str) -> Option<usize> {
        let name = name.trim();
        for v in [TruthValue::Top, TruthValue::Bot, TruthValue::Inc] {
            if name == v.as_str() {
                let states = self.states_with(v);
                return if states.len() == 1 {
                    Some(states[0])
                } else {
                    None
                };
            }
        }
        let digits = name.strip_prefix('q').unwrap_or(name);
        digits.parse::<usize>().ok().filter(|&q| q < self.len())
    }

    pub fn to_document(&self) -> MonitorDocument {
        let mut transitions = Vec::new();
        for q in 0..self.len() {
            for l in self.alphabet.letters() {
                transitions.push(TransitionRow {
                    state: q,
                    letter: self.alphabet.letter_names(l),
                    successor: self.step(q, l),
                });
            }
        }
        MonitorDocument {
            ap: self.alphabet.names().to_vec(),
            initial: self.initial,
            states: (0..self.len())
                .map(|q| StateRow {
                    id: q,
                    output: self.outputs[q],
                })
                .collect(),
            transitions,
        }
    }

    pub fn from_document(doc: &MonitorDocument) -> Result<Self, CompileError> {
        let alphabet = Alphabet::new(&doc.ap)?;
        let n = doc.states.len();
        let mut outputs = vec![None; n];
        for row in &doc.states {
            match outputs.get_mut(row.id) {
                Some(slot @ None) => *slot = Some(row.output),
                Some(Some(_)) => {
                    return Err(CompileError::InvalidMonitor(format!(
                        "state {} listed twice",
                        row.id
                    )))
                }
                None => {
                    return Err(CompileError::InvalidMonitor(format!(
                        "state id {} out of range",
                        row.id
                    )))
                }
            }
        }
        let outputs: Vec<TruthValue> = outputs
            .into_iter()
            .map(|o| o.expect("ids are a permutation"))
            .collect();
        let mut delta = vec![vec![usize::MAX; alphabet.letter_count()]; n];
        for row in &doc.transitions {
            let l = alphabet.letter(&row.letter)?;
            let slot = delta.get_mut(row.state).ok_or_else(|| {
                CompileError::InvalidMonitor(format!("unknown state {}", row.state))
            })?;
            if slot[l.index()] != usize::MAX {
                return Err(CompileError::InvalidMonitor(format!(
                    "duplicate transition for state {} on {}",
                    row.state,
                    alphabet.format_letter(l)
                )));
            }
            slot[l.index()] = row.successor;
        }
        if delta.iter().flatten().any(|&t| t == usize::MAX) {
            return Err(CompileError::InvalidMonitor(
                "transition table is not total".into(),
            ));
        }
        Monitor::new(alphabet, outputs, doc.initial, delta)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_document()).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CompileError> {
        let doc: MonitorDocument =
            serde_json::from_str(text).map_err(|e| CompileError::InvalidMonitor(e.to_string()))?;
        Monitor::from_document(&doc)
    }

    /// Graphviz rendering; ⊤ states get a double border, ⊥ states a dashed one.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph monitor {\n  rankdir=LR;\n  node [shape=circle];\n");
        out.push_str("  __start [shape=point];\n");
        for q in 0..self.len() {
            let style = match self.outputs[q] {
                TruthValue::Top => ", peripheries=2",
                TruthValue::Bot => ", style=dashed",
                TruthValue::Inc => "",
            };
            let _ = writeln!(
                out,
                "  q{q} [label=\"{}\"{style}];",
                self.outputs[q].symbol()
            );
        }
        let _ = writeln!(out, "  __start -> q{};", self.initial);
        for q in 0..self.len() {
            let mut edges: BTreeMap<usize, Vec<String>> = BTreeMap::new();
            for l in self.alphabet.letters() {
                edges
                    .entry(self.step(q, l))
                    .or_default()
                    .push(self.alphabet.format_letter(l));
            }
            for (t, letters) in edges {
                let _ = writeln!(out, "  q{q} -> q{t} [label=\"{}\"];", letters.join(" "));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Serialized form of a monitor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorDocument {
    pub ap: Vec<String>,
    pub initial: usize,
    pub states: Vec<StateRow>,
    pub transitions: Vec<TransitionRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateRow {
    pub id: usize,
    pub output: TruthValue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub state: usize,
    /// Atoms true in the letter, sorted.
    pub letter: Vec<String>,
    pub successor: usize,
}

/// Monitor compilation settings.
#[derive(Clone, Copy, Debug)]
pub struct Compiler {
    pub state_cap: usize,
}

impl Default for Compiler {
    fn default() -> Self {
        Compiler {
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

struct Determinized<'a> {
    nba: &'a Nba,
    live: BTreeSet<usize>,
}

impl Determinized<'_> {
    fn start(&self) -> BTreeSet<usize> {
        self.nba
            .initial()
            .iter()
            .copied()
            .filter(|s| self.live.contains(s))
            .collect()
    }

    fn step(&self, set: &BTreeSet<usize>, l: Letter) -> BTreeSet<usize> {
        set.iter()
            .flat_map(|&s| self.nba.successors(s, l).iter().copied())
            .filter(|s| self.live.contains(s))
            .collect()
    }
}

impl Compiler {
    /// The raw product of the two determinized automata, before minimization.
    /// States are numbered in breadth-first discovery order (letters
    /// ascending) and named after their sorted subset members.
    pub fn compile_unminimized(
        &self,
        f: &Formula,
        alphabet: &Alphabet,
    ) -> Result<Monitor, CompileError> {
        let pos = formula_to_nba(f, alphabet, self.state_cap)?;
        let neg = formula_to_nba(&Formula::not(f.clone()), alphabet, self.state_cap)?;
        let dp = Determinized {
            live: live_states(&pos),
            nba: &pos,
        };
        let dn = Determinized {
            live: live_states(&neg),
            nba: &neg,
        };

        type Key = (BTreeSet<usize>, BTreeSet<usize>);
        let mut ids: HashMap<Key, usize> = HashMap::new();
        let mut keys: Vec<Key> = Vec::new();
        let mut delta: Vec<Vec<usize>> = Vec::new();
        let start = (dp.start(), dn.start());
        ids.insert(start.clone(), 0);
        keys.push(start);
        let mut q = 0;
        while q < keys.len() {
            let (a, b) = keys[q].clone();
            let mut row = Vec::with_capacity(alphabet.letter_count());
            for l in alphabet.letters() {
                let key = (dp.step(&a, l), dn.step(&b, l));
                let t = match ids.get(&key) {
                    Some(&t) => t,
                    None => {
                        let t = keys.len();
                        if t >= self.state_cap {
                            return Err(CompileError::ResourceLimit {
                                cap: self.state_cap,
                                what: "monitor states",
                            });
                        }
                        ids.insert(key.clone(), t);
                        keys.push(key);
                        t
                    }
                };
                row.push(t);
            }
            delta.push(row);
            q += 1;
        }

        let mut outputs = Vec::with_capacity(keys.len());
        for (a, b) in &keys {
            outputs.push(match (a.is_empty(), b.is_empty()) {
                (false, false) => TruthValue::Inc,
                (false, true) => TruthValue::Top,
                (true, false) => TruthValue::Bot,
                (true, true) => {
                    return Err(CompileError::Internal(
                        "a finite word with no extension on either side".into(),
                    ))
                }
            });
        }
        let mut m = Monitor::new(alphabet.clone(), outputs, 0, delta)?;
        m.names = keys
            .iter()
            .map(|(a, b)| format!("{}|{}", join_set(a), join_set(b)))
            .collect();
        Ok(m)
    }

    pub fn build_monitor(&self, f: &Formula, alphabet: &Alphabet) -> Result<Monitor, CompileError> {
        Ok(minimize_dfa(&self.compile_unminimized(f, alphabet)?))
    }

    /// Safety iff no word violating `f` keeps the monitor out of ⊥ forever,
    /// i.e. iff the product of the Büchi automaton of `!f` with the monitor
    /// restricted to non-⊥ states has empty language.
    pub fn classify_safety(
        &self,
        f: &Formula,
        alphabet: &Alphabet,
    ) -> Result<SafetyClass, CompileError> {
        let m = self.build_monitor(f, alphabet)?;
        let neg = formula_to_nba(&Formula::not(f.clone()), alphabet, self.state_cap)?;
        if m.is_bot(m.initial()) {
            return Ok(SafetyClass::Safety);
        }
        let mut ids: HashMap<(usize, usize), NodeIndex> = HashMap::new();
        let mut g: DiGraph<bool, ()> = DiGraph::new();
        let mut queue = VecDeque::new();
        for &s in neg.initial() {
            let key = (s, m.initial());
            let v = g.add_node(neg.is_accepting(s));
            ids.insert(key, v);
            queue.push_back(key);
        }
        while let Some((s, q)) = queue.pop_front() {
            let from = ids[&(s, q)];
            for l in alphabet.letters() {
                let q2 = m.step(q, l);
                if m.is_bot(q2) {
                    continue;
                }
                for &s2 in neg.successors(s, l) {
                    let key = (s2, q2);
                    let to = match ids.get(&key) {
                        Some(&v) => v,
                        None => {
                            if ids.len() >= self.state_cap {
                                return Err(CompileError::ResourceLimit {
                                    cap: self.state_cap,
                                    what: "safety product states",
                                });
                            }
                            let v = g.add_node(neg.is_accepting(s2));
                            ids.insert(key, v);
                            queue.push_back(key);
                            v
                        }
                    };
                    g.update_edge(from, to, ());
                }
            }
        }
        let nonempty = tarjan_scc(&g).into_iter().any(|scc| {
            let cyclic = scc.len() > 1 || g.contains_edge(scc[0], scc[0]);
            cyclic && scc.iter().any(|&v| g[v])
        });
        Ok(if nonempty {
            SafetyClass::NotSafety
        } else {
            SafetyClass::Safety
        })
    }
}

fn join_set(s: &BTreeSet<usize>) -> String {
    let v: Vec<String> = s.iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

/// Compiles `f` over `alphabet` with default settings.
pub fn build_monitor(f: &Formula, alphabet: &Alphabet) -> Result<Monitor, CompileError> {
    Compiler::default().build_monitor(f, alphabet)
}

/// Classifies `f` over the alphabet of its own atoms.
pub fn classify_safety(f: &Formula) -> Result<SafetyClass, CompileError> {
    let atoms: Vec<String> = f.atoms().into_iter().collect();
    Compiler::default().classify_safety(f, &Alphabet::new(&atoms)?)
}

/// Moore partition refinement: drops unreachable states and merges
/// output-equivalent ones. The result is renumbered breadth-first from the
/// initial state with letters in ascending order.
pub fn minimize_dfa(m: &Monitor) -> Monitor {
    let letters: Vec<Letter> = m.alphabet.letters().collect();
    let reachable = bfs_order(m.initial, |q| letters.iter().map(move |&l| m.step(q, l)));

    let mut class: HashMap<usize, usize> = HashMap::new();
    let mut seen: HashMap<TruthValue, usize> = HashMap::new();
    for &q in &reachable {
        let next = seen.len();
        class.insert(q, *seen.entry(m.outputs[q]).or_insert(next));
    }
    let mut count = seen.len();
    loop {
        let mut sigs: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let mut refined: HashMap<usize, usize> = HashMap::new();
        for &q in &reachable {
            let sig = (
                class[&q],
                letters.iter().map(|&l| class[&m.step(q, l)]).collect(),
            );
            let next = sigs.len();
            refined.insert(q, *sigs.entry(sig).or_insert(next));
        }
        let done = sigs.len() == count;
        count = sigs.len();
        class = refined;
        if done {
            break;
        }
    }

    let mut rep: Vec<usize> = vec![usize::MAX; count];
    for &q in &reachable {
        if rep[class[&q]] == usize::MAX {
            rep[class[&q]] = q;
        }
    }
    let order = bfs_order(class[&m.initial], |c| {
        letters
            .iter()
            .map(|&l| class[&m.step(rep[c], l)])
            .collect::<Vec<_>>()
    });
    let mut renum = vec![0usize; count];
    for (i, &c) in order.iter().enumerate() {
        renum[c] = i;
    }
    let outputs = order.iter().map(|&c| m.outputs[rep[c]]).collect();
    let delta = order
        .iter()
        .map(|&c| {
            letters
                .iter()
                .map(|&l| renum[class[&m.step(rep[c], l)]])
                .collect()
        })
        .collect();
    Monitor::new(m.alphabet.clone(), outputs, 0, delta)
        .expect("quotient of a valid monitor is valid")
}

fn bfs_order<I: IntoIterator<Item = usize>>(start: usize, succ: impl Fn(usize) -> I) -> Vec<usize> {
    let mut seen = BTreeSet::from([start]);
    let mut order = vec![start];
    let mut i = 0;
    while i < order.len() {
        for t in succ(order[i]) {
            if seen.insert(t) {
                order.push(t);
            }
        }
        i += 1;
    }
    order
}
