use proptest::prelude::*;
use sentinel_core::reach::{
    box_in_polyhedron, box_step_affine, product_step, AffineDynamics, Clamp, ControlLaw, Halfspace,
    Interval, IntervalBox, Polyhedron, ProductSet,
};
use sentinel_core::sim::delorean_scenario;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-2.0..2.0f64, cols), rows)
}

fn interval(lo: f64, hi: f64) -> impl Strategy<Value = Interval> {
    (lo..hi, 0.0..(hi - lo)).prop_map(move |(a, w)| Interval::new(a, (a + w).min(hi)))
}

fn boxes(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = IntervalBox> {
    prop::collection::vec(interval(lo, hi), n).prop_map(IntervalBox::new)
}

/// A fraction in [0, 1] per dimension, used to pick points inside boxes.
fn fractions(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..=1.0f64, n)
}

fn inside(b: &IntervalBox, t: &[f64]) -> Vec<f64> {
    b.0.iter()
        .zip(t)
        .map(|(i, t)| (i.lo + t * (i.hi - i.lo)).clamp(i.lo, i.hi))
        .collect()
}

#[derive(Debug, Clone)]
struct Setup {
    dynamics: AffineDynamics,
    law: ControlLaw,
    x: IntervalBox,
}

fn setup() -> impl Strategy<Value = Setup> {
    (1usize..=3, 1usize..=2, 1usize..=2).prop_flat_map(|(n, m, p)| {
        (
            matrix(n, n),
            matrix(n, m),
            matrix(n, p),
            prop::collection::vec(-1.0..1.0f64, n),
            boxes(m, -2.0, 2.0),
            boxes(p, -0.5, 0.5),
            prop::option::of((0..n, -1.0..0.0f64, 0.0..1.0f64)),
            prop::option::of((matrix(m, n), prop::collection::vec(-1.0..1.0f64, m))),
            boxes(n, -3.0, 3.0),
        )
            .prop_map(|(a, b, e, c, u, d, clamp, k, x)| {
                let dynamics = AffineDynamics {
                    a,
                    b,
                    e,
                    c,
                    input_bounds: u.clone(),
                    disturbance: d,
                    clamp: clamp
                        .map(|(dim, lo, hi)| {
                            vec![Clamp {
                                dim,
                                lo: Some(lo),
                                hi: Some(hi),
                            }]
                        })
                        .unwrap_or_default(),
                };
                let law = match k {
                    Some((k, c)) => ControlLaw::affine(k, c),
                    None => ControlLaw::constant(u.center()),
                };
                Setup { dynamics, law, x }
            })
    })
}

fn point_successor(s: &Setup, x: &[f64], d: &[f64]) -> Vec<f64> {
    let u = s.law.eval(x, &s.dynamics.input_bounds);
    s.dynamics.step(x, &u, d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn sampled_successors_lie_in_box_successor(
        s in setup(),
        tx in prop::collection::vec(fractions(3), 8),
        td in prop::collection::vec(fractions(2), 8),
    ) {
        let reach = box_step_affine(&s.dynamics, &s.x, &s.law, &s.dynamics.disturbance).unwrap();
        for (tx, td) in tx.iter().zip(&td) {
            let x = inside(&s.x, tx);
            let d = inside(&s.dynamics.disturbance, td);
            let next = point_successor(&s, &x, &d);
            prop_assert!(reach.contains_point(&next), "{next:?} outside {reach:?}");
        }
    }

    #[test]
    fn box_successor_is_monotone(s in setup(), a in fractions(3), b in fractions(3)) {
        let sub = IntervalBox::new(
            s.x.0
                .iter()
                .zip(a.iter().zip(&b))
                .map(|(i, (&a, &b))| {
                    let (p, q) = (i.lo + a.min(b) * i.width(), i.lo + a.max(b) * i.width());
                    Interval::new(p.clamp(i.lo, i.hi), q.clamp(i.lo, i.hi))
                })
                .collect(),
        );
        let d = &s.dynamics.disturbance;
        let big = box_step_affine(&s.dynamics, &s.x, &s.law, d).unwrap();
        let small = box_step_affine(&s.dynamics, &sub, &s.law, d).unwrap();
        prop_assert!(big.contains_box(&small), "{small:?} not in {big:?}");
    }

    #[test]
    fn point_boxes_step_exactly(s in setup(), tx in fractions(3), td in fractions(2)) {
        let x = inside(&s.x, &tx);
        let d = inside(&s.dynamics.disturbance, &td);
        let next = point_successor(&s, &x, &d);
        let boxed = box_step_affine(&s.dynamics, &IntervalBox::point(&x), &s.law, &IntervalBox::point(&d)).unwrap();
        prop_assert_eq!(boxed, IntervalBox::point(&next));
    }

    /// Integer data keeps every evaluation exact, so the two checks must agree.
    #[test]
    fn box_containment_matches_vertex_enumeration(
        n in 1usize..=3,
        raw in prop::collection::vec((prop::collection::vec(-3i32..=3, 3), -6i32..=6), 1..5),
        bounds in prop::collection::vec((-4i32..=4, 0i32..=3), 3),
    ) {
        let poly = Polyhedron::new(
            raw.iter()
                .map(|(a, b)| Halfspace::new(a[..n].iter().map(|&v| v as f64).collect(), *b as f64))
                .collect(),
        );
        let x = IntervalBox::new(bounds[..n].iter().map(|&(lo, w)| Interval::new(lo as f64, (lo + w) as f64)).collect());
        let by_vertices = x.vertices().iter().all(|v| {
            raw.iter().all(|(a, b)| a[..n].iter().zip(v).map(|(&a, &x)| a as f64 * x).sum::<f64>() <= *b as f64)
        });
        prop_assert_eq!(box_in_polyhedron(&x, &poly), by_vertices);
    }

    #[test]
    fn product_step_covers_sampled_runs(
        x0 in 0.0..3.0f64, v0 in 0.0..3.0f64, w in 0.0..0.3f64,
        u in -2.0..2.0f64, t in fractions(2), td in 0.0..=1.0f64,
    ) {
        let sc = delorean_scenario("faulty-late").unwrap();
        let cfg = &sc.config;
        let m = sc.monitor();
        let b = IntervalBox::from_bounds(&[[x0, x0 + w], [v0, v0 + w]]);
        let x = inside(&b, &t);
        let q = m.initial();
        let law = ControlLaw::constant(vec![u]);
        let r = product_step(&ProductSet::singleton(q, b), &cfg.dynamics, &law, &cfg.labels, m).unwrap();
        let d = inside(&cfg.dynamics.disturbance, &[td]);
        let next = cfg.dynamics.step(&x, &[u], &d).unwrap();
        let q2 = m.step(q, cfg.labels.label(&next).unwrap());
        prop_assert!(r.contains(q2, &next), "({q2}, {next:?}) not covered by {r:?}");
    }
}
