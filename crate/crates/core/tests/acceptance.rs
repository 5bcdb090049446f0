//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
//! run with `cargo test -p sentinel-core --test acceptance -- --nocapture`.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sentinel_core::ltl::{parse_formula, Alphabet, Letter};
use sentinel_core::monitor::{Compiler, SafetyClass, TruthValue};
use sentinel_core::reach::{
    product_step, validate_high_assurance, ControlLaw, GuardedRegion, Halfspace, IntervalBox,
    Polyhedron, ProductSet,
};
use sentinel_core::shield::DisturbanceMode;
use sentinel_core::sim::{batch, delorean_scenario, simulate, Scenario, Strategy};

use common::{check_verdict, extensions, indistinguishable_pair, random_formula, words};

type Outcome = Result<String, String>;

/// Name, time budget and check.
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn disjunction_monitor() -> Outcome {
    let alphabet = Alphabet::new(&["a"]).unwrap();
    let f = parse_formula("G !a | X a", &["a"]).unwrap();
    let m = Compiler::default().build_monitor(&f, &alphabet).unwrap();
    ensure(m.len() == 6, || format!("{} states", m.len()))?;
    for v in [TruthValue::Top, TruthValue::Bot] {
        let s = m.states_with(v);
        ensure(s.len() == 1 && m.is_trap(s[0]), || {
            format!("{v:?} states {s:?}")
        })?;
    }
    let (e, a) = (Letter(0), Letter(1));
    for (w, v) in [
        (vec![e, a], TruthValue::Top),
        (vec![a, e], TruthValue::Bot),
        (vec![e, e], TruthValue::Inc),
    ] {
        ensure(m.run_word(&w) == v, || {
            format!("{w:?} gave {:?}", m.run_word(&w))
        })?;
    }
    let exts = extensions(2, 2, 3);
    for w in words(2, 4) {
        check_verdict(&f, &alphabet, m.run_word(&w), &w, &exts)?;
    }
    Ok("6 states, one top trap, one bot trap".into())
}

fn tower_monitor() -> Outcome {
    let ap = ["t", "f"];
    let alphabet = Alphabet::new(&ap).unwrap();
    let letter = |names: &[&str]| alphabet.letter(names).unwrap();
    for text in ["!t U (t & f)", "!t W (t & f)"] {
        let m = Compiler::default()
            .build_monitor(&parse_formula(text, &ap).unwrap(), &alphabet)
            .unwrap();
        ensure(m.len() == 3, || format!("{text}: {} states", m.len()))?;
        let q = m.initial();
        ensure(m.output(q) == TruthValue::Inc, || {
            format!("{text}: initial output {:?}", m.output(q))
        })?;
        let bot = m.bot_state().ok_or(format!("{text}: no bot state"))?;
        let top = m.top_state().ok_or(format!("{text}: no top state"))?;
        let table = [
            (letter(&["t"]), bot),
            (letter(&["t", "f"]), top),
            (letter(&[]), q),
            (letter(&["f"]), q),
        ];
        for (l, expect) in table {
            ensure(m.step(q, l) == expect, || {
                format!("{text}: wrong successor on {}", alphabet.format_letter(l))
            })?;
        }
    }
    Ok("U and W variants: 3 states, transition table matches".into())
}

fn verdict_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let compiler = Compiler::default();
    let mut checked = 0usize;
    for i in 0..100 {
        let ap: &[&str] = if i % 4 == 0 { &["a"] } else { &["a", "b"] };
        let alphabet = Alphabet::new(ap).unwrap();
        let size = rng.random_range(1..=6);
        let f = random_formula(&mut rng, ap, size);
        let m = compiler.build_monitor(&f, &alphabet).unwrap();
        let exts = extensions(alphabet.letter_count(), 2, 3);
        for w in words(alphabet.letter_count(), 4) {
            check_verdict(&f, &alphabet, m.run_word(&w), &w, &exts)?;
            checked += 1;
        }
    }
    Ok(format!("100 formulas, {checked} words, 0 violations"))
}

fn safety_suite() -> Outcome {
    let cases = [
        ("G a", &["a"][..], SafetyClass::Safety),
        ("F a", &["a"], SafetyClass::NotSafety),
        ("G F a", &["a"], SafetyClass::NotSafety),
        ("!t U (t & f)", &["t", "f"], SafetyClass::NotSafety),
        ("!t W (t & f)", &["t", "f"], SafetyClass::Safety),
        ("G !a | X a", &["a"], SafetyClass::Safety),
    ];
    for (text, ap, expect) in cases {
        let alphabet = Alphabet::new(ap).unwrap();
        let got = Compiler::default()
            .classify_safety(&parse_formula(text, ap).unwrap(), &alphabet)
            .unwrap();
        ensure(got == expect, || {
            format!("{text}: {got:?}, expected {expect:?}")
        })?;
    }
    Ok("6/6 classifications exact".into())
}

fn minimization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let compiler = Compiler::default();
    for i in 0..60 {
        let ap: &[&str] = if i % 3 == 0 { &["a"] } else { &["a", "b"] };
        let alphabet = Alphabet::new(ap).unwrap();
        let size = rng.random_range(1..=6);
        let f = random_formula(&mut rng, ap, size);
        let raw = compiler.compile_unminimized(&f, &alphabet).unwrap();
        let min = compiler.build_monitor(&f, &alphabet).unwrap();
        for w in words(alphabet.letter_count(), 6) {
            ensure(raw.run_word(&w) == min.run_word(&w), || {
                format!("{f}: disagree on {w:?}")
            })?;
        }
        if let Some((p, q)) = indistinguishable_pair(&min) {
            return Err(format!("{f}: states {p} and {q} are equivalent"));
        }
    }
    Ok(
        "60 formulas agree on all words up to length 6; minimized states pairwise distinguishable"
            .into(),
    )
}

/// One propagation run: a start box and a law per step.
struct ReachCase {
    start: IntervalBox,
    laws: Vec<ControlLaw>,
}

fn reach_soundness() -> Outcome {
    let sc = delorean_scenario("faulty-late").unwrap();
    let cfg = &sc.config;
    let (dynamics, labels, m) = (&cfg.dynamics, &cfg.labels, sc.monitor());
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let safe = ControlLaw::affine(vec![vec![-2.0, -2.5]], vec![2.0]);
    let starts = [
        IntervalBox::from_bounds(&[[0.0, 0.3], [0.0, 0.3]]),
        IntervalBox::from_bounds(&[[1.5, 1.8], [1.2, 1.6]]),
        IntervalBox::from_bounds(&[[2.0, 2.3], [1.8, 2.4]]),
        IntervalBox::from_bounds(&[[2.2, 2.5], [0.5, 1.0]]),
    ];
    let mut cases = Vec::new();
    for start in &starts {
        cases.push(ReachCase {
            start: start.clone(),
            laws: vec![safe.clone(); 8],
        });
        cases.push(ReachCase {
            start: start.clone(),
            laws: vec![cfg.backup.clone(); 8],
        });
        for _ in 0..3 {
            let laws = (0..8)
                .map(|_| ControlLaw::constant(vec![rng.random_range(-2.0..=2.0)]))
                .collect();
            cases.push(ReachCase {
                start: start.clone(),
                laws,
            });
        }
    }
    let per_case = 10_000usize.div_ceil(cases.len());
    let mut points = 0usize;
    let mut states_seen = std::collections::BTreeSet::new();
    for case in &cases {
        let q0 = m.initial();
        let mut sets = vec![ProductSet::singleton(q0, case.start.clone())];
        for law in &case.laws {
            let next = product_step(sets.last().unwrap(), dynamics, law, labels, m)
                .map_err(|e| e.to_string())?;
            sets.push(next);
        }
        for _ in 0..per_case {
            let mut x: Vec<f64> = case
                .start
                .0
                .iter()
                .map(|i| rng.random_range(i.lo..=i.hi))
                .collect();
            let mut q = q0;
            for (i, law) in case.laws.iter().enumerate() {
                let u = law.eval(&x, &dynamics.input_bounds);
                let d: Vec<f64> = dynamics
                    .disturbance
                    .0
                    .iter()
                    .map(|i| rng.random_range(i.lo..=i.hi))
                    .collect();
                x = dynamics.step(&x, &u, &d).unwrap();
                q = m.step(q, labels.label(&x).ok_or("unlabelled state")?);
                states_seen.insert(q);
                ensure(sets[i + 1].contains(q, &x), || {
                    format!("({q}, {x:?}) escaped at step {}", i + 1)
                })?;
            }
            points += 1;
        }
    }
    ensure(states_seen.len() == 3, || {
        format!("runs only visited monitor states {states_seen:?}")
    })?;
    Ok(format!(
        "{points} trajectories x 8 steps contained (monitor states visited: {})",
        states_seen.len()
    ))
}

fn sb_validation() -> Outcome {
    let sc = delorean_scenario("faulty-late").unwrap();
    let cfg = &sc.config;
    let m = sc.monitor();
    let frame = sc.doc.frame.clone().ok_or("scenario has no frame")?;
    let region = |intercept: f64| {
        GuardedRegion::new(BTreeMap::from([
            (m.top_state().unwrap(), Polyhedron::everything()),
            (
                m.resolve_state("inc").unwrap(),
                Polyhedron::new(vec![
                    Halfspace::new(vec![0.69, 1.0], intercept),
                    Halfspace::new(vec![-1.0, 0.0], 0.0),
                    Halfspace::new(vec![0.0, -1.0], 0.0),
                ]),
            ),
        ]))
    };
    let brake = ControlLaw::constant(vec![-2.0]);
    let run = |c: f64| {
        validate_high_assurance(
            &region(c),
            &brake,
            &cfg.dynamics,
            &cfg.labels,
            m,
            0.05,
            Some(&frame),
        )
        .map_err(|e| e.to_string())
    };
    let good = run(1.66)?;
    ensure(good.passed(), || {
        format!("1.66 triangle has {} witnesses", good.witnesses.len())
    })?;
    let bad = run(3.0)?;
    ensure(!bad.witnesses.is_empty(), || {
        "3.0 triangle reported no witness".into()
    })?;
    Ok(format!(
        "1.66: {} cells, 0 witnesses; 3.0: {} witnesses",
        good.cells_checked,
        bad.witnesses.len()
    ))
}

fn shielded_case_study() -> Outcome {
    let sc = delorean_scenario("faulty-late").unwrap();
    let seeds: Vec<u64> = (0..1000).collect();
    let mut crossings = 0usize;
    for strategy in Strategy::ALL {
        let traces =
            batch(&sc.with_strategy(strategy), &seeds, 200, true).map_err(|e| e.to_string())?;
        for t in &traces {
            let tag = format!("{} seed {}", strategy.name(), t.seed);
            ensure(!t.summary.bot_reached, || format!("{tag}: reached bot"))?;
            ensure(t.records.iter().all(|r| !sc.monitor().is_bot(r.q)), || {
                format!("{tag}: bot record")
            })?;
            if let Some(r) = t
                .records
                .iter()
                .find(|r| r.letter.iter().any(|a| a == "tower"))
            {
                ensure(
                    r.letter.iter().any(|a| a == "fast") && r.x[1] >= 2.0,
                    || format!("{tag}: crossed the tower at {:?}", r.x),
                )?;
                crossings += 1;
            }
        }
    }
    let contrast =
        batch(&sc, &(0..20).collect::<Vec<_>>(), 200, false).map_err(|e| e.to_string())?;
    let failed = contrast.iter().filter(|t| t.summary.bot_reached).count();
    ensure(failed >= 1, || {
        "unshielded contrast never reached bot".into()
    })?;
    Ok(format!("3000 shielded runs safe ({crossings} fast crossings); unshielded reached bot in {failed}/20"))
}

fn deterministic_subsumption() -> Outcome {
    let base = delorean_scenario("faulty-late").unwrap();
    let with_mode = |mode: DisturbanceMode| {
        let mut doc = base.doc.clone();
        doc.dynamics.disturbance = IntervalBox::point(&[0.1]);
        doc.disturbance_mode = mode;
        Scenario::from_doc(doc).map_err(|e| e.to_string())
    };
    let det = with_mode(DisturbanceMode::Deterministic)?;
    let dist = with_mode(DisturbanceMode::Disturbed)?;
    for seed in 0..50 {
        let strategy = Strategy::ALL[seed as usize % Strategy::ALL.len()];
        let a =
            simulate(&det.with_strategy(strategy), seed, 200, true).map_err(|e| e.to_string())?;
        let b =
            simulate(&dist.with_strategy(strategy), seed, 200, true).map_err(|e| e.to_string())?;
        ensure(a.records == b.records, || {
            let i = a
                .records
                .iter()
                .zip(&b.records)
                .position(|(x, y)| x != y)
                .unwrap_or(0);
            format!("seed {seed}: traces diverge at tick {i}")
        })?;
    }
    Ok("50 seeds, identical traces".into())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        (
            "golden monitor G !a | X a",
            Duration::from_secs(1),
            disjunction_monitor,
        ),
        (
            "golden monitor !t U (t & f)",
            Duration::from_secs(1),
            tower_monitor,
        ),
        (
            "verdict soundness",
            Duration::from_secs(300),
            verdict_soundness,
        ),
        (
            "safety classification",
            Duration::from_secs(10),
            safety_suite,
        ),
        ("minimization", Duration::from_secs(60), minimization),
        (
            "reachability soundness",
            Duration::from_secs(60),
            reach_soundness,
        ),
        (
            "high assurance region validation",
            Duration::from_secs(60),
            sb_validation,
        ),
        (
            "shielded case study never violates",
            Duration::from_secs(300),
            shielded_case_study,
        ),
        (
            "deterministic subsumption",
            Duration::from_secs(60),
            deterministic_subsumption,
        ),
    ];
    let mut failed = Vec::new();
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > budget => {
                Err(format!("{msg}; took {elapsed:.2?}, budget {budget:?}"))
            }
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {name}: {msg} ({elapsed:.2?})"),
            Err(msg) => {
                println!("FAIL {name}: {msg} ({elapsed:.2?})");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
