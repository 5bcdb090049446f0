//! LTL syntax: the formula tree, the concrete-syntax parser, negation normal
//! form and a direct lasso-word evaluator used as a semantic oracle.
//!
//! Concrete grammar, loosest binding first:
//!
//! ```text
//! implies := or ( "->" implies )?          right associative
//! or      := and ( "|" and )*
//! and     := binary ( "&" binary )*
//! binary  := unary ( ("U" | "W" | "R") binary )?   right associative
//! unary   := ("!" | "X" | "G" | "F") unary | primary
//! primary := "(" implies ")" | "true" | "false" | identifier
//! ```
//!
//! `a -> b` is sugar for `!a | b`. The single capitals `X G F U W R` are
//! reserved; every other identifier is an atomic proposition and must be
//! declared in the alphabet handed to [`parse_formula`].

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An LTL formula over named atomic propositions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    WeakUntil(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    Globally(Box<Formula>),
    Finally(Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn weak_until(a: Formula, b: Formula) -> Self {
        Formula::WeakUntil(Box::new(a), Box::new(b))
    }

    pub fn release(a: Formula, b: Formula) -> Self {
        Formula::Release(Box::new(a), Box::new(b))
    }

    pub fn globally(f: Formula) -> Self {
        Formula::Globally(Box::new(f))
    }

    pub fn finally(f: Formula) -> Self {
        Formula::Finally(Box::new(f))
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn children(&self) -> Vec<&Formula> {
        use Formula::*;
        match self {
            True | False | Atom(_) => vec![],
            Not(a) | Next(a) | Globally(a) | Finally(a) => vec![a],
            And(a, b) | Or(a, b) | Until(a, b) | WeakUntil(a, b) | Release(a, b) => vec![a, b],
        }
    }

    /// Atom names occurring in the formula, sorted.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        if let Formula::Atom(name) = self {
            out.insert(name.clone());
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }

    /// True when negations only sit on atoms and the only temporal
    /// operators are Next, Until and Release.
    pub fn is_nnf(&self) -> bool {
        use Formula::*;
        match self {
            True | False | Atom(_) => true,
            Not(a) => matches!(**a, Atom(_)),
            And(a, b) | Or(a, b) | Until(a, b) | Release(a, b) => a.is_nnf() && b.is_nnf(),
            Next(a) => a.is_nnf(),
            WeakUntil(..) | Globally(_) | Finally(_) => false,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Formula::*;
        match self {
            True => write!(f, "true"),
            False => write!(f, "false"),
            Atom(n) => write!(f, "{n}"),
            Not(a) => write!(f, "!({a})"),
            Next(a) => write!(f, "X ({a})"),
            Globally(a) => write!(f, "G ({a})"),
            Finally(a) => write!(f, "F ({a})"),
            And(a, b) => write!(f, "({a}) & ({b})"),
            Or(a, b) => write!(f, "({a}) | ({b})"),
            Until(a, b) => write!(f, "({a}) U ({b})"),
            WeakUntil(a, b) => write!(f, "({a}) W ({b})"),
            Release(a, b) => write!(f, "({a}) R ({b})"),
        }
    }
}

/// A letter of the alphabet 2^AP, stored as a bit set over atom indices.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct Letter(pub u32);

impl Letter {
    pub const EMPTY: Letter = Letter(0);

    pub fn contains(self, atom: usize) -> bool {
        self.0 & (1 << atom) != 0
    }

    pub fn with(self, atom: usize) -> Letter {
        Letter(self.0 | (1 << atom))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Largest supported number of atomic propositions.
pub const MAX_ATOMS: usize = 16;

/// The declared set of atomic propositions, in declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    names: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("atomic proposition `{0}` declared twice")]
    Duplicate(String),
    #[error("`{0}` is not a valid atomic proposition name")]
    BadName(String),
    #[error("at most {MAX_ATOMS} atomic propositions are supported, got {0}")]
    TooMany(usize),
    #[error("`{0}` is not a declared atomic proposition")]
    Unknown(String),
}

impl Alphabet {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self, AlphabetError> {
        if names.len() > MAX_ATOMS {
            return Err(AlphabetError::TooMany(names.len()));
        }
        let mut out: Vec<String> = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref().trim();
            if !is_identifier(n) || is_reserved(n) {
                return Err(AlphabetError::BadName(n.to_string()));
            }
            if out.iter().any(|m| m == n) {
                return Err(AlphabetError::Duplicate(n.to_string()));
            }
            out.push(n.to_string());
        }
        Ok(Alphabet { names: out })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Number of letters, 2^|AP|.
    pub fn letter_count(&self) -> usize {
        1 << self.names.len()
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + Clone {
        (0..self.letter_count() as u32).map(Letter)
    }

    pub fn letter<S: AsRef<str>>(&self, names: &[S]) -> Result<Letter, AlphabetError> {
        let mut l = Letter::EMPTY;
        for n in names {
            let i = self
                .index_of(n.as_ref())
                .ok_or_else(|| AlphabetError::Unknown(n.as_ref().to_string()))?;
            l = l.with(i);
        }
        Ok(l)
    }

    /// Names of the atoms in `l`, sorted lexicographically.
    pub fn letter_names(&self, l: Letter) -> Vec<String> {
        let mut v: Vec<String> = (0..self.len())
            .filter(|&i| l.contains(i))
            .map(|i| self.names[i].clone())
            .collect();
        v.sort();
        v
    }

    /// `{a,b}` rendering used in traces and graph exports.
    pub fn format_letter(&self, l: Letter) -> String {
        format!("{{{}}}", self.letter_names(l).join(","))
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_reserved(s: &str) -> bool {
    matches!(s, "X" | "G" | "F" | "U" | "W" | "R" | "true" | "false")
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {}: expected {expected}", at(*.position))]
    Syntax {
        /// Byte offset, `None` for end of input.
        position: Option<usize>,
        expected: &'static str,
    },
    #[error("undeclared atomic proposition `{name}` at offset {position}")]
    UndeclaredAtom { name: String, position: usize },
    #[error("unexpected character `{ch}` at offset {position}")]
    BadChar { ch: char, position: usize },
}

fn at(p: Option<usize>) -> String {
    match p {
        Some(p) => format!("offset {p}"),
        None => "end of input".to_string(),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            _ if c.is_ascii_whitespace() => i += 1,
            '!' => {
                out.push((Tok::Not, i));
                i += 1;
            }
            '&' => {
                out.push((Tok::And, i));
                i += 1;
            }
            '|' => {
                out.push((Tok::Or, i));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            '-' if bytes.get(i + 1) == Some(&b'>') => {
                out.push((Tok::Implies, i));
                i += 2;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or(c);
                return Err(ParseError::BadChar { ch, position: i });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    ap: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> Option<usize> {
        self.toks.get(self.pos).map(|(_, p)| *p)
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn err(&self, expected: &'static str) -> ParseError {
        ParseError::Syntax {
            position: self.offset(),
            expected,
        }
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Implies) {
            self.pos += 1;
            let rhs = self.implies()?;
            return Ok(Formula::or(Formula::not(lhs), rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.binary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.binary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn binary(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        for (kw, build) in [
            ("U", Formula::until as fn(Formula, Formula) -> Formula),
            ("W", Formula::weak_until),
            ("R", Formula::release),
        ] {
            if self.peek_keyword(kw) {
                self.pos += 1;
                let rhs = self.binary()?;
                return Ok(build(lhs, rhs));
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Ident(s)) if matches!(s.as_str(), "X" | "G" | "F") => {
                let op = s.clone();
                self.pos += 1;
                let inner = self.unary()?;
                Ok(match op.as_str() {
                    "X" => Formula::next(inner),
                    "G" => Formula::globally(inner),
                    _ => Formula::finally(inner),
                })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.implies()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.err("`)`"));
                }
                self.pos += 1;
                Ok(f)
            }
            Some(Tok::Ident(s)) => {
                if is_reserved(s.as_str()) && s != "true" && s != "false" {
                    return Err(self.err("formula"));
                }
                self.pos += 1;
                match s.as_str() {
                    "true" => Ok(Formula::True),
                    "false" => Ok(Formula::False),
                    _ if self.ap.contains(&s) => Ok(Formula::Atom(s)),
                    _ => Err(ParseError::UndeclaredAtom {
                        name: s,
                        position: offset.unwrap_or(0),
                    }),
                }
            }
            _ => Err(self.err("formula")),
        }
    }
}

/// Parses `text` against the declared atomic propositions `ap`.
pub fn parse_formula<S: AsRef<str>>(text: &str, ap: &[S]) -> Result<Formula, ParseError> {
    let ap: Vec<String> = ap.iter().map(|s| s.as_ref().to_string()).collect();
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        ap: &ap,
    };
    let f = p.implies()?;
    if p.pos != p.toks.len() {
        return Err(p.err("end of input"));
    }
    Ok(f)
}

/// Rewrites `f` into negation normal form: negation only on atoms, and the
/// temporal operators restricted to Next, Until and Release.
pub fn to_nnf(f: &Formula) -> Formula {
    nnf(f, false)
}

fn nnf(f: &Formula, neg: bool) -> Formula {
    use Formula::*;
    match f {
        True if neg => False,
        True => True,
        False if neg => True,
        False => False,
        Atom(_) if neg => Formula::not(f.clone()),
        Atom(_) => f.clone(),
        Not(a) => nnf(a, !neg),
        And(a, b) if neg => Formula::or(nnf(a, true), nnf(b, true)),
        And(a, b) => Formula::and(nnf(a, false), nnf(b, false)),
        Or(a, b) if neg => Formula::and(nnf(a, true), nnf(b, true)),
        Or(a, b) => Formula::or(nnf(a, false), nnf(b, false)),
        Next(a) => Formula::next(nnf(a, neg)),
        Until(a, b) if neg => Formula::release(nnf(a, true), nnf(b, true)),
        Until(a, b) => Formula::until(nnf(a, false), nnf(b, false)),
        Release(a, b) if neg => Formula::until(nnf(a, true), nnf(b, true)),
        Release(a, b) => Formula::release(nnf(a, false), nnf(b, false)),
        // a W b == b R (a | b)
        WeakUntil(a, b) if neg => {
            Formula::until(nnf(b, true), Formula::and(nnf(a, true), nnf(b, true)))
        }
        WeakUntil(a, b) => {
            Formula::release(nnf(b, false), Formula::or(nnf(a, false), nnf(b, false)))
        }
        Globally(a) if neg => Formula::until(True, nnf(a, true)),
        Globally(a) => Formula::release(False, nnf(a, false)),
        Finally(a) if neg => Formula::release(False, nnf(a, true)),
        Finally(a) => Formula::until(True, nnf(a, false)),
    }
}

/// Decides whether the lasso word `prefix · cycle^ω` satisfies `f`.
///
/// Evaluates every subformula at every lasso position directly from the
/// fixpoint characterisation of the temporal operators; it shares no code
/// with the automaton pipeline.
///
/// # Panics
///
/// If `cycle` is empty or `f` mentions an atom missing from `alphabet`.
pub fn lasso_satisfies(
    f: &Formula,
    alphabet: &Alphabet,
    prefix: &[Letter],
    cycle: &[Letter],
) -> bool {
    assert!(!cycle.is_empty(), "lasso cycle must be nonempty");
    let word: Vec<Letter> = prefix.iter().chain(cycle).copied().collect();
    let lasso = Lasso {
        word: &word,
        loop_start: prefix.len(),
    };
    lasso.eval(f, alphabet)[0]
}

struct Lasso<'a> {
    word: &'a [Letter],
    loop_start: usize,
}

impl Lasso<'_> {
    fn succ(&self, i: usize) -> usize {
        if i + 1 < self.word.len() {
            i + 1
        } else {
            self.loop_start
        }
    }

    /// Iterates `step` from `init` at every position until nothing changes.
    fn fixpoint(&self, init: bool, step: impl Fn(usize, &[bool]) -> bool) -> Vec<bool> {
        let mut cur = vec![init; self.word.len()];
        loop {
            let mut changed = false;
            for i in (0..self.word.len()).rev() {
                let v = step(i, &cur);
                if v != cur[i] {
                    cur[i] = v;
                    changed = true;
                }
            }
            if !changed {
                return cur;
            }
        }
    }

    fn eval(&self, f: &Formula, ab: &Alphabet) -> Vec<bool> {
        use Formula::*;
        let n = self.word.len();
        match f {
            True => vec![true; n],
            False => vec![false; n],
            Atom(name) => {
                let i = ab
                    .index_of(name)
                    .unwrap_or_else(|| panic!("atom `{name}` not in alphabet"));
                self.word.iter().map(|l| l.contains(i)).collect()
            }
            Not(a) => self.eval(a, ab).into_iter().map(|v| !v).collect(),
            And(a, b) => zip_with(self.eval(a, ab), self.eval(b, ab), |x, y| x && y),
            Or(a, b) => zip_with(self.eval(a, ab), self.eval(b, ab), |x, y| x || y),
            Next(a) => {
                let va = self.eval(a, ab);
                (0..n).map(|i| va[self.succ(i)]).collect()
            }
            Until(a, b) => {
                let (va, vb) = (self.eval(a, ab), self.eval(b, ab));
                self.fixpoint(false, |i, cur| vb[i] || (va[i] && cur[self.succ(i)]))
            }
            WeakUntil(a, b) => {
                let (va, vb) = (self.eval(a, ab), self.eval(b, ab));
                self.fixpoint(true, |i, cur| vb[i] || (va[i] && cur[self.succ(i)]))
            }
            Release(a, b) => {
                let (va, vb) = (self.eval(a, ab), self.eval(b, ab));
                self.fixpoint(true, |i, cur| vb[i] && (va[i] || cur[self.succ(i)]))
            }
            Globally(a) => {
                let va = self.eval(a, ab);
                self.fixpoint(true, |i, cur| va[i] && cur[self.succ(i)])
            }
            Finally(a) => {
                let va = self.eval(a, ab);
                self.fixpoint(false, |i, cur| va[i] || cur[self.succ(i)])
            }
        }
    }
}

fn zip_with(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use Formula as F;

    fn a() -> Formula {
        F::atom("a")
    }

    #[test]
    fn parses_tower_formula() {
        let f = parse_formula("(!tower) U (tower & fast)", &["tower", "fast"]).unwrap();
        assert_eq!(
            f,
            F::until(
                F::not(F::atom("tower")),
                F::and(F::atom("tower"), F::atom("fast"))
            )
        );
    }

    #[test]
    fn unary_binds_tighter_than_or() {
        let f = parse_formula("G !a | X a", &["a"]).unwrap();
        assert_eq!(f, F::or(F::globally(F::not(a())), F::next(a())));
    }

    #[test]
    fn dangling_until_is_error_at_end() {
        let err = parse_formula("a U", &["a"]).unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax {
                position: None,
                expected: "formula"
            }
        );
        assert!(err.to_string().contains("end of input"));
    }

    #[test]
    fn precedence_and_associativity() {
        let ap = ["a", "b", "c"];
        let p = |s| parse_formula(s, &ap).unwrap();
        // U is right associative and binds tighter than &.
        assert_eq!(
            p("a U b U c"),
            F::until(a(), F::until(F::atom("b"), F::atom("c")))
        );
        assert_eq!(
            p("a & b U c"),
            F::and(a(), F::until(F::atom("b"), F::atom("c")))
        );
        assert_eq!(
            p("a | b & c"),
            F::or(a(), F::and(F::atom("b"), F::atom("c")))
        );
        assert_eq!(
            p("a -> b -> c"),
            F::or(F::not(a()), F::or(F::not(F::atom("b")), F::atom("c")))
        );
        assert_eq!(p("!a U b"), F::until(F::not(a()), F::atom("b")));
    }

    #[test]
    fn undeclared_atom_is_reported() {
        let err = parse_formula("a & zz", &["a"]).unwrap_err();
        assert_eq!(
            err,
            ParseError::UndeclaredAtom {
                name: "zz".into(),
                position: 4
            }
        );
    }

    #[test]
    fn other_syntax_errors() {
        assert!(matches!(
            parse_formula("(a", &["a"]),
            Err(ParseError::Syntax {
                position: None,
                expected: "`)`"
            })
        ));
        assert!(matches!(
            parse_formula("a b", &["a", "b"]),
            Err(ParseError::Syntax {
                position: Some(2),
                ..
            })
        ));
        assert!(matches!(
            parse_formula("a $ b", &["a"]),
            Err(ParseError::BadChar { ch: '$', .. })
        ));
        assert!(parse_formula("U a", &["a"]).is_err());
    }

    #[test]
    fn display_reparses() {
        let ap = ["a", "b"];
        for s in [
            "G !a | X a",
            "(!a) W (a & b)",
            "a R F b -> true",
            "X X !false",
        ] {
            let f = parse_formula(s, &ap).unwrap();
            assert_eq!(parse_formula(&f.to_string(), &ap).unwrap(), f);
        }
    }

    #[test]
    fn nnf_dualities() {
        let b = F::atom("b");
        assert_eq!(
            to_nnf(&F::not(F::until(a(), b.clone()))),
            F::release(F::not(a()), F::not(b))
        );
        assert_eq!(to_nnf(&F::not(F::not(a()))), a());
        assert_eq!(
            to_nnf(&F::not(F::globally(a()))),
            F::until(F::True, F::not(a()))
        );
        assert!(to_nnf(&F::not(F::weak_until(a(), F::finally(a())))).is_nnf());
    }

    #[test]
    fn lasso_examples() {
        let ab = Alphabet::new(&["a"]).unwrap();
        let empty = Letter::EMPTY;
        assert!(lasso_satisfies(
            &F::globally(F::not(a())),
            &ab,
            &[],
            &[empty]
        ));
        assert!(!lasso_satisfies(&F::finally(a()), &ab, &[], &[empty]));

        let tf = Alphabet::new(&["t", "f"]).unwrap();
        let phi = F::until(F::not(F::atom("t")), F::and(F::atom("t"), F::atom("f")));
        let both = tf.letter(&["t", "f"]).unwrap();
        assert!(lasso_satisfies(&phi, &tf, &[empty], &[both]));
        let t_only = tf.letter(&["t"]).unwrap();
        assert!(!lasso_satisfies(&phi, &tf, &[empty], &[t_only]));
        // strong until fails on the all-empty word, weak until holds
        assert!(!lasso_satisfies(&phi, &tf, &[], &[empty]));
        let weak = F::weak_until(F::not(F::atom("t")), F::and(F::atom("t"), F::atom("f")));
        assert!(lasso_satisfies(&weak, &tf, &[], &[empty]));
    }

    #[test]
    fn lasso_nested_fixpoints() {
        let ab = Alphabet::new(&["a"]).unwrap();
        let (e, x) = (Letter::EMPTY, Letter(1));
        let gfa = F::globally(F::finally(a()));
        let fga = F::finally(F::globally(a()));
        assert!(lasso_satisfies(&gfa, &ab, &[x, x], &[e, x]));
        assert!(!lasso_satisfies(&fga, &ab, &[x, x], &[e, x]));
        assert!(lasso_satisfies(&fga, &ab, &[e, e], &[x]));
        assert!(!lasso_satisfies(&gfa, &ab, &[x], &[e]));
    }

    #[test]
    fn alphabet_letters() {
        let ab = Alphabet::new(&["tower", "fast"]).unwrap();
        assert_eq!(ab.letter_count(), 4);
        let l = ab.letter(&["fast", "tower"]).unwrap();
        assert_eq!(l, Letter(3));
        assert_eq!(ab.format_letter(l), "{fast,tower}");
        assert!(ab.letter(&["slow"]).is_err());
        assert!(Alphabet::new(&["a", "a"]).is_err());
        assert!(Alphabet::new(&["U"]).is_err());
    }
}
