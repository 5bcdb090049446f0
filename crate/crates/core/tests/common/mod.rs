//! Oracles shared by the property and acceptance suites. None of them use
//! the automata code under test.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sentinel_core::ltl::{lasso_satisfies, Alphabet, Formula, Letter};
use sentinel_core::monitor::{Monitor, TruthValue};

/// Random formula with at most `size` nodes over `ap`.
pub fn random_formula(rng: &mut ChaCha8Rng, ap: &[&str], size: usize) -> Formula {
    if size <= 1 {
        return match rng.random_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::atom(ap[rng.random_range(0..ap.len())]),
        };
    }
    let unary = |rng: &mut ChaCha8Rng, op: u32| {
        let c = random_formula(rng, ap, size - 1);
        match op {
            0 => Formula::not(c),
            1 => Formula::next(c),
            2 => Formula::globally(c),
            _ => Formula::finally(c),
        }
    };
    match rng.random_range(0..9) {
        op @ 0..=3 => unary(rng, op),
        op => {
            if size < 3 {
                return unary(rng, op % 4);
            }
            let left = rng.random_range(1..size - 1);
            let a = random_formula(rng, ap, left);
            let b = random_formula(rng, ap, size - 1 - left);
            match op {
                4 => Formula::and(a, b),
                5 => Formula::or(a, b),
                6 => Formula::until(a, b),
                7 => Formula::weak_until(a, b),
                _ => Formula::release(a, b),
            }
        }
    }
}

/// All words over `letters` letters of length at most `max_len`, shortest first.
pub fn words(letters: usize, max_len: usize) -> Vec<Vec<Letter>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for l in 0..letters {
                let mut w2: Vec<Letter> = w.clone();
                w2.push(Letter(l as u32));
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Bounded lasso extensions `(u, v)` with `|u| ≤ max_u`, `1 ≤ |v| ≤ max_v`.
pub fn extensions(letters: usize, max_u: usize, max_v: usize) -> Vec<(Vec<Letter>, Vec<Letter>)> {
    let us = words(letters, max_u);
    let vs: Vec<Vec<Letter>> = words(letters, max_v)
        .into_iter()
        .filter(|v| !v.is_empty())
        .collect();
    us.iter()
        .flat_map(|u| vs.iter().map(move |v| (u.clone(), v.clone())))
        .collect()
}

/// Checks the monitor verdict on `w` against the bounded lasso oracle:
/// ⊤ requires every extension to satisfy `f`, ⊥ requires none to.
pub fn check_verdict(
    f: &Formula,
    alphabet: &Alphabet,
    verdict: TruthValue,
    w: &[Letter],
    exts: &[(Vec<Letter>, Vec<Letter>)],
) -> Result<(), String> {
    let expect = match verdict {
        TruthValue::Top => true,
        TruthValue::Bot => false,
        TruthValue::Inc => return Ok(()),
    };
    for (u, v) in exts {
        let mut prefix = w.to_vec();
        prefix.extend(u);
        if lasso_satisfies(f, alphabet, &prefix, v) != expect {
            return Err(format!(
                "{f}: verdict {verdict:?} on {w:?} contradicted by {prefix:?}({v:?})^w"
            ));
        }
    }
    Ok(())
}

/// A pair of states that no word distinguishes by output, if any.
pub fn indistinguishable_pair(m: &Monitor) -> Option<(usize, usize)> {
    let letters = m.alphabet().letter_count();
    for p in 0..m.len() {
        for q in p + 1..m.len() {
            let mut seen = BTreeSet::from([(p, q)]);
            let mut queue = VecDeque::from([(p, q)]);
            let mut distinguished = false;
            while let Some((a, b)) = queue.pop_front() {
                if m.output(a) != m.output(b) {
                    distinguished = true;
                    break;
                }
                for l in 0..letters {
                    let next = (m.step(a, Letter(l as u32)), m.step(b, Letter(l as u32)));
                    if seen.insert(next) {
                        queue.push_back(next);
                    }
                }
            }
            if !distinguished {
                return Some((p, q));
            }
        }
    }
    None
}
