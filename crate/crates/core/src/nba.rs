//! LTL to Büchi automaton by declarative tableau.
//!
//! A tableau state is a set of NNF subformulas that must hold from the
//! current position on (an obligation set). Expanding an obligation set
//! yields the locally consistent ways of meeting it: a literal guard for the
//! current letter plus the obligation set for the next position. Until
//! fulfilment gives a generalized Büchi condition on transitions, which is
//! degeneralized with a level counter so the result has plain accepting
//! states.

use std::collections::{BTreeSet, HashMap, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::ltl::{to_nnf, Alphabet, Formula, Letter};
use crate::CompileError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Node {
    True,
    False,
    Lit(usize, bool),
    And(u32, u32),
    Or(u32, u32),
    Next(u32),
    Until(u32, u32),
    Release(u32, u32),
}

/// Hash-consed NNF subformulas.
struct Arena {
    nodes: Vec<Node>,
    index: HashMap<Node, u32>,
}

impl Arena {
    fn intern(&mut self, n: Node) -> u32 {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(n);
        self.index.insert(n, id);
        id
    }

    fn build(&mut self, f: &Formula, ab: &Alphabet) -> Result<u32, CompileError> {
        use Formula::*;
        let node = match f {
            True => Node::True,
            False => Node::False,
            Atom(name) => Node::Lit(atom_index(ab, name)?, true),
            Not(inner) => match &**inner {
                Atom(name) => Node::Lit(atom_index(ab, name)?, false),
                _ => return Err(CompileError::Internal("tableau input is not in NNF".into())),
            },
            And(a, b) => Node::And(self.build(a, ab)?, self.build(b, ab)?),
            Or(a, b) => Node::Or(self.build(a, ab)?, self.build(b, ab)?),
            Next(a) => Node::Next(self.build(a, ab)?),
            Until(a, b) => Node::Until(self.build(a, ab)?, self.build(b, ab)?),
            Release(a, b) => Node::Release(self.build(a, ab)?, self.build(b, ab)?),
            WeakUntil(..) | Globally(_) | Finally(_) => {
                return Err(CompileError::Internal("tableau input is not in NNF".into()))
            }
        };
        Ok(self.intern(node))
    }
}

fn atom_index(ab: &Alphabet, name: &str) -> Result<usize, CompileError> {
    ab.index_of(name)
        .ok_or_else(|| CompileError::UndeclaredAtom(name.to_string()))
}

/// One way of discharging an obligation set at the current position.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Branch {
    pos: u32,
    neg: u32,
    next: BTreeSet<u32>,
    /// Bit k set when the k-th until is not pending or is fulfilled now.
    acc: u64,
}

impl Branch {
    fn admits(&self, l: Letter) -> bool {
        l.0 & self.pos == self.pos && l.0 & self.neg == 0
    }
}

struct Tableau {
    arena: Arena,
    /// Until node ids; position = acceptance index.
    untils: Vec<u32>,
}

impl Tableau {
    fn expand(&self, obligations: &BTreeSet<u32>) -> Vec<Branch> {
        let mut out = BTreeSet::new();
        let todo: Vec<u32> = obligations.iter().rev().copied().collect();
        self.expand_rec(todo, BTreeSet::new(), 0, 0, BTreeSet::new(), &mut out);
        out.into_iter().collect()
    }

    fn expand_rec(
        &self,
        mut todo: Vec<u32>,
        mut old: BTreeSet<u32>,
        mut pos: u32,
        mut neg: u32,
        mut next: BTreeSet<u32>,
        out: &mut BTreeSet<Branch>,
    ) {
        while let Some(id) = todo.pop() {
            if !old.insert(id) {
                continue;
            }
            match self.arena.nodes[id as usize] {
                Node::True => {}
                Node::False => return,
                Node::Lit(i, true) => {
                    if neg & (1 << i) != 0 {
                        return;
                    }
                    pos |= 1 << i;
                }
                Node::Lit(i, false) => {
                    if pos & (1 << i) != 0 {
                        return;
                    }
                    neg |= 1 << i;
                }
                Node::And(a, b) => {
                    todo.push(b);
                    todo.push(a);
                }
                Node::Next(a) => {
                    next.insert(a);
                }
                Node::Or(a, b) => {
                    let mut left = todo.clone();
                    left.push(a);
                    self.expand_rec(left, old.clone(), pos, neg, next.clone(), out);
                    todo.push(b);
                }
                Node::Until(a, b) => {
                    let mut now = todo.clone();
                    now.push(b);
                    self.expand_rec(now, old.clone(), pos, neg, next.clone(), out);
                    todo.push(a);
                    next.insert(id);
                }
                Node::Release(a, b) => {
                    let mut now = todo.clone();
                    now.push(b);
                    now.push(a);
                    self.expand_rec(now, old.clone(), pos, neg, next.clone(), out);
                    todo.push(b);
                    next.insert(id);
                }
            }
        }
        let mut acc = 0u64;
        for (k, &u) in self.untils.iter().enumerate() {
            let Node::Until(_, b) = self.arena.nodes[u as usize] else {
                unreachable!()
            };
            if !old.contains(&u) || old.contains(&b) {
                acc |= 1 << k;
            }
        }
        out.insert(Branch {
            pos,
            neg,
            next,
            acc,
        });
    }
}

/// A nondeterministic Büchi automaton over 2^AP with state-based acceptance.
#[derive(Clone, Debug)]
pub struct Nba {
    alphabet: Alphabet,
    names: Vec<String>,
    initial: Vec<usize>,
    accepting: Vec<bool>,
    /// `delta[state][letter]` is the sorted successor list.
    delta: Vec<Vec<Vec<usize>>>,
}

impl Nba {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn is_accepting(&self, s: usize) -> bool {
        self.accepting[s]
    }

    pub fn successors(&self, s: usize, l: Letter) -> &[usize] {
        &self.delta[s][l.index()]
    }

    /// Tableau description of a state: obligation set and level.
    pub fn state_name(&self, s: usize) -> &str {
        &self.names[s]
    }
}

/// Builds a Büchi automaton accepting exactly the models of `f`.
pub fn formula_to_nba(
    f: &Formula,
    alphabet: &Alphabet,
    state_cap: usize,
) -> Result<Nba, CompileError> {
    let nnf = to_nnf(f);
    let mut arena = Arena {
        nodes: Vec::new(),
        index: HashMap::new(),
    };
    let root = arena.build(&nnf, alphabet)?;
    let untils: Vec<u32> = (0..arena.nodes.len() as u32)
        .filter(|&i| matches!(arena.nodes[i as usize], Node::Until(..)))
        .collect();
    if untils.len() > 63 {
        return Err(CompileError::ResourceLimit {
            cap: 63,
            what: "until subformulas",
        });
    }
    let tab = Tableau { arena, untils };
    let k = tab.untils.len();

    let mut ids: HashMap<(BTreeSet<u32>, usize), usize> = HashMap::new();
    let mut keys: Vec<(BTreeSet<u32>, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    let mut expansions: HashMap<BTreeSet<u32>, Vec<Branch>> = HashMap::new();
    let mut delta: Vec<Vec<Vec<usize>>> = Vec::new();

    let start = (BTreeSet::from([root]), 0usize);
    ids.insert(start.clone(), 0);
    keys.push(start);
    queue.push_back(0usize);
    delta.push(vec![Vec::new(); alphabet.letter_count()]);

    while let Some(s) = queue.pop_front() {
        let (obl, level) = keys[s].clone();
        let branches = expansions
            .entry(obl.clone())
            .or_insert_with(|| tab.expand(&obl))
            .clone();
        for br in &branches {
            let mut lvl = if level == k { 0 } else { level };
            while lvl < k && br.acc & (1 << lvl) != 0 {
                lvl += 1;
            }
            let key = (br.next.clone(), lvl);
            let t = match ids.get(&key) {
                Some(&t) => t,
                None => {
                    let t = keys.len();
                    if t >= state_cap {
                        return Err(CompileError::ResourceLimit {
                            cap: state_cap,
                            what: "Büchi states",
                        });
                    }
                    ids.insert(key.clone(), t);
                    keys.push(key);
                    delta.push(vec![Vec::new(); alphabet.letter_count()]);
                    queue.push_back(t);
                    t
                }
            };
            for l in alphabet.letters() {
                if br.admits(l) {
                    delta[s][l.index()].push(t);
                }
            }
        }
    }
    for row in &mut delta {
        for succ in row.iter_mut() {
            succ.sort_unstable();
            succ.dedup();
        }
    }
    let names = keys
        .iter()
        .map(|(obl, lvl)| {
            let members: Vec<String> = obl.iter().map(|i| i.to_string()).collect();
            format!("{{{}}}@{}", members.join(","), lvl)
        })
        .collect();
    let accepting = keys.iter().map(|(_, lvl)| *lvl == k).collect();
    Ok(Nba {
        alphabet: alphabet.clone(),
        names,
        initial: vec![0],
        accepting,
        delta,
    })
}

/// States with a nonempty language: those that can reach a cycle through an
/// accepting state.
pub fn live_states(a: &Nba) -> BTreeSet<usize> {
    let n = a.len();
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        let mut succ: BTreeSet<usize> = BTreeSet::new();
        for row in &a.delta[s] {
            succ.extend(row.iter().copied());
        }
        for t in succ {
            g.add_edge(nodes[s], nodes[t], ());
            rev[t].push(s);
        }
    }
    let mut live = vec![false; n];
    let mut stack = Vec::new();
    for scc in tarjan_scc(&g) {
        let idx: Vec<usize> = scc.iter().map(|v| v.index()).collect();
        let cyclic = idx.len() > 1 || g.contains_edge(scc[0], scc[0]);
        if cyclic && idx.iter().any(|&s| a.accepting[s]) {
            for s in idx {
                if !live[s] {
                    live[s] = true;
                    stack.push(s);
                }
            }
        }
    }
    while let Some(t) = stack.pop() {
        for &s in &rev[t] {
            if !live[s] {
                live[s] = true;
                stack.push(s);
            }
        }
    }
    (0..n).filter(|&s| live[s]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse_formula;

    const CAP: usize = 1_000_000;

    fn nba(text: &str) -> Nba {
        let ab = Alphabet::new(&["a"]).unwrap();
        let f = parse_formula(text, ab.names()).unwrap();
        formula_to_nba(&f, &ab, CAP).unwrap()
    }

    #[test]
    fn false_has_no_live_state() {
        let a = nba("false");
        assert!(live_states(&a).is_empty());
    }

    #[test]
    fn globally_initial_state_is_live() {
        let a = nba("G a");
        assert!(live_states(&a).contains(&a.initial()[0]));
        // the empty letter kills every run
        assert!(a.successors(a.initial()[0], Letter::EMPTY).is_empty());
    }

    #[test]
    fn true_reaches_an_accepting_loop() {
        let a = nba("true");
        // {true} then the empty obligation set looping on every letter
        assert_eq!(a.len(), 2);
        assert!(a.is_accepting(1));
        assert_eq!(a.successors(0, Letter(1)), &[1]);
        assert_eq!(a.successors(1, Letter::EMPTY), &[1]);
        assert_eq!(live_states(&a).len(), 2);
    }

    #[test]
    fn dead_end_state_is_not_live() {
        // X false: the initial state has successors, the successor none.
        let a = nba("X false");
        let live = live_states(&a);
        assert!(live.is_empty());
        assert_eq!(a.successors(0, Letter::EMPTY).len(), 1);
    }

    #[test]
    fn state_cap_is_enforced() {
        let ab = Alphabet::new(&["a"]).unwrap();
        let f = parse_formula("F a & F !a", ab.names()).unwrap();
        let err = formula_to_nba(&f, &ab, 1).unwrap_err();
        assert!(matches!(err, CompileError::ResourceLimit { cap: 1, .. }));
    }
}
