use serde::{Deserialize, Serialize};

use super::geometry::{Interval, IntervalBox, Polyhedron};
use super::ReachError;

/// Clamp one state coordinate after each step (e.g. `v ≥ 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clamp {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

impl Clamp {
    fn interval(&self) -> Interval {
        Interval::new(
            self.lo.unwrap_or(f64::NEG_INFINITY),
            self.hi.unwrap_or(f64::INFINITY),
        )
    }
}

/// `x⁺ = clamp(A x + B u + E d + c)` with `u ∈ U`, `d ∈ D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineDynamics {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "E")]
    pub e: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    #[serde(rename = "U")]
    pub input_bounds: IntervalBox,
    #[serde(rename = "D")]
    pub disturbance: IntervalBox,
    #[serde(default)]
    pub clamp: Vec<Clamp>,
}

fn check_matrix(
    what: &'static str,
    m: &[Vec<f64>],
    rows: usize,
    cols: usize,
) -> Result<(), ReachError> {
    if m.len() != rows {
        return Err(ReachError::DimensionMismatch {
            what,
            expected: rows,
            got: m.len(),
        });
    }
    for row in m {
        if row.len() != cols {
            return Err(ReachError::DimensionMismatch {
                what,
                expected: cols,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ReachError::InvalidDynamics(format!(
                "{what} has a non-finite entry"
            )));
        }
    }
    Ok(())
}

fn affine_row(acc: f64, coefs: &[f64], v: &[f64]) -> f64 {
    coefs.iter().zip(v).fold(
        acc,
        |acc, (&a, &x)| if a == 0.0 { acc } else { acc + a * x },
    )
}

fn affine_row_box(acc: Interval, coefs: &[f64], v: &IntervalBox) -> Interval {
    coefs.iter().zip(&v.0).fold(acc, |acc, (&a, x)| {
        if a == 0.0 {
            acc
        } else {
            let t = x.scale(a);
            Interval::new(acc.lo + t.lo, acc.hi + t.hi)
        }
    })
}

impl AffineDynamics {
    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn m(&self) -> usize {
        self.input_bounds.dim()
    }

    pub fn p(&self) -> usize {
        self.disturbance.dim()
    }

    pub fn validate(&self) -> Result<(), ReachError> {
        let (n, m, p) = (self.n(), self.m(), self.p());
        check_matrix("A", &self.a, n, n)?;
        check_matrix("B", &self.b, n, m)?;
        check_matrix("E", &self.e, n, p)?;
        if self.c.len() != n {
            return Err(ReachError::DimensionMismatch {
                what: "c",
                expected: n,
                got: self.c.len(),
            });
        }
        if !self.input_bounds.is_valid() || !self.disturbance.is_valid() {
            return Err(ReachError::InvalidDynamics(
                "input or disturbance bounds have lo > hi".into(),
            ));
        }
        for cl in &self.clamp {
            if cl.dim >= n {
                return Err(ReachError::InvalidDynamics(format!(
                    "clamp on dimension {} of {n}",
                    cl.dim
                )));
            }
            if !cl.interval().is_valid() {
                return Err(ReachError::InvalidDynamics(format!(
                    "empty clamp on dimension {}",
                    cl.dim
                )));
            }
        }
        Ok(())
    }

    fn check_dims(&self, x: usize, u: usize, d: usize) -> Result<(), ReachError> {
        if x != self.n() {
            return Err(ReachError::DimensionMismatch {
                what: "state",
                expected: self.n(),
                got: x,
            });
        }
        if u != self.m() {
            return Err(ReachError::DimensionMismatch {
                what: "input",
                expected: self.m(),
                got: u,
            });
        }
        if d != self.p() {
            return Err(ReachError::DimensionMismatch {
                what: "disturbance",
                expected: self.p(),
                got: d,
            });
        }
        Ok(())
    }

    /// Exact successor of one point.
    pub fn step(&self, x: &[f64], u: &[f64], d: &[f64]) -> Result<Vec<f64>, ReachError> {
        self.check_dims(x.len(), u.len(), d.len())?;
        let mut next: Vec<f64> = (0..self.n())
            .map(|i| {
                let acc = affine_row(0.0, &self.a[i], x);
                let acc = affine_row(acc, &self.b[i], u);
                let acc = affine_row(acc, &self.e[i], d);
                acc + self.c[i]
            })
            .collect();
        for cl in &self.clamp {
            let iv = cl.interval();
            next[cl.dim] = next[cl.dim].max(iv.lo).min(iv.hi);
        }
        Ok(next)
    }

    /// Interval image of a box of states, inputs and disturbances.
    ///
    /// Endpoints are accumulated in the same order as [`AffineDynamics::step`],
    /// so every floating-point successor of a contained point is contained.
    pub fn step_box(
        &self,
        x: &IntervalBox,
        u: &IntervalBox,
        d: &IntervalBox,
    ) -> Result<IntervalBox, ReachError> {
        self.check_dims(x.dim(), u.dim(), d.dim())?;
        let mut next: Vec<Interval> = (0..self.n())
            .map(|i| {
                let acc = affine_row_box(Interval::point(0.0), &self.a[i], x);
                let acc = affine_row_box(acc, &self.b[i], u);
                let acc = affine_row_box(acc, &self.e[i], d);
                Interval::new(acc.lo + self.c[i], acc.hi + self.c[i])
            })
            .collect();
        for cl in &self.clamp {
            next[cl.dim] = next[cl.dim].clip(&cl.interval());
        }
        Ok(IntervalBox(next))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawKind {
    Constant {
        u: Vec<f64>,
    },
    /// `u = sat_U(K x + c)`.
    Affine {
        k: Vec<Vec<f64>>,
        c: Vec<f64>,
    },
}

/// A control law together with the state region where it may be applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlLaw {
    #[serde(flatten)]
    pub kind: LawKind,
    #[serde(default)]
    pub domain: Polyhedron,
}

impl ControlLaw {
    pub fn constant(u: Vec<f64>) -> Self {
        ControlLaw {
            kind: LawKind::Constant { u },
            domain: Polyhedron::everything(),
        }
    }

    pub fn affine(k: Vec<Vec<f64>>, c: Vec<f64>) -> Self {
        ControlLaw {
            kind: LawKind::Affine { k, c },
            domain: Polyhedron::everything(),
        }
    }

    pub fn with_domain(mut self, domain: Polyhedron) -> Self {
        self.domain = domain;
        self
    }

    pub fn validate(&self, dynamics: &AffineDynamics) -> Result<(), ReachError> {
        let (n, m) = (dynamics.n(), dynamics.m());
        match &self.kind {
            LawKind::Constant { u } => {
                if u.len() != m {
                    return Err(ReachError::DimensionMismatch {
                        what: "constant input",
                        expected: m,
                        got: u.len(),
                    });
                }
                if !dynamics.input_bounds.contains_point(u) {
                    return Err(ReachError::InvalidLaw(format!(
                        "constant input {u:?} outside U"
                    )));
                }
            }
            LawKind::Affine { k, c } => {
                check_matrix("K", k, m, n)?;
                if c.len() != m {
                    return Err(ReachError::DimensionMismatch {
                        what: "feedback offset",
                        expected: m,
                        got: c.len(),
                    });
                }
            }
        }
        if !self.domain.dims_match(n) {
            return Err(ReachError::InvalidLaw(
                "domain constraint of wrong dimension".into(),
            ));
        }
        Ok(())
    }

    /// Input applied at a point, saturated to `U`.
    pub fn eval(&self, x: &[f64], input_bounds: &IntervalBox) -> Vec<f64> {
        match &self.kind {
            LawKind::Constant { u } => u.clone(),
            LawKind::Affine { k, c } => k
                .iter()
                .zip(c)
                .zip(&input_bounds.0)
                .map(|((row, &ck), lim)| (affine_row(0.0, row, x) + ck).max(lim.lo).min(lim.hi))
                .collect(),
        }
    }

    /// Interval enclosure of the inputs over a box of states.
    pub fn eval_box(&self, x: &IntervalBox, input_bounds: &IntervalBox) -> IntervalBox {
        match &self.kind {
            LawKind::Constant { u } => IntervalBox::point(u),
            LawKind::Affine { k, c } => IntervalBox(
                k.iter()
                    .zip(c)
                    .zip(&input_bounds.0)
                    .map(|((row, &ck), lim)| {
                        let acc = affine_row_box(Interval::point(0.0), row, x);
                        Interval::new(acc.lo + ck, acc.hi + ck).clip(lim)
                    })
                    .collect(),
            ),
        }
    }
}

/// Closed-loop interval successor of `x` under `law` for disturbances in `d`.
pub fn box_step_affine(
    dynamics: &AffineDynamics,
    x: &IntervalBox,
    law: &ControlLaw,
    d: &IntervalBox,
) -> Result<IntervalBox, ReachError> {
    if x.dim() != dynamics.n() {
        return Err(ReachError::DimensionMismatch {
            what: "state",
            expected: dynamics.n(),
            got: x.dim(),
        });
    }
    let u = law.eval_box(x, &dynamics.input_bounds);
    dynamics.step_box(x, &u, d)
}
