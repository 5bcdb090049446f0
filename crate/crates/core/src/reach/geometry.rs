use serde::{Deserialize, Serialize};

/// Closed interval `[lo, hi]`; serialized as a two-element array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Interval {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Interval { lo, hi }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn is_valid(&self) -> bool {
        self.lo <= self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `coef * self`, endpoints rounded the same way as `coef * v`.
    pub(crate) fn scale(&self, coef: f64) -> Interval {
        if coef >= 0.0 {
            Interval {
                lo: coef * self.lo,
                hi: coef * self.hi,
            }
        } else {
            Interval {
                lo: coef * self.hi,
                hi: coef * self.lo,
            }
        }
    }

    pub fn clip(&self, to: &Interval) -> Interval {
        Interval {
            lo: self.lo.max(to.lo).min(to.hi),
            hi: self.hi.min(to.hi).max(to.lo),
        }
    }
}

/// Axis-aligned box: one closed interval per state dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalBox(pub Vec<Interval>);

impl IntervalBox {
    pub fn new(bounds: Vec<Interval>) -> Self {
        IntervalBox(bounds)
    }

    pub fn from_bounds(bounds: &[[f64; 2]]) -> Self {
        IntervalBox(bounds.iter().map(|&b| Interval::from(b)).collect())
    }

    pub fn point(x: &[f64]) -> Self {
        IntervalBox(x.iter().map(|&v| Interval::point(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(Interval::is_valid)
    }

    pub fn is_point(&self) -> bool {
        self.0.iter().all(|i| i.lo == i.hi)
    }

    pub fn lo(&self) -> Vec<f64> {
        self.0.iter().map(|i| i.lo).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        self.0.iter().map(|i| i.hi).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.0.iter().map(|i| 0.5 * (i.lo + i.hi)).collect()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.0.iter().zip(x).all(|(i, &v)| i.contains(v))
    }

    pub fn contains_box(&self, other: &IntervalBox) -> bool {
        other.dim() == self.dim()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.lo <= b.lo && b.hi <= a.hi)
    }

    pub fn hull(&self, other: &IntervalBox) -> IntervalBox {
        IntervalBox(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| Interval::new(a.lo.min(b.lo), a.hi.max(b.hi)))
                .collect(),
        )
    }

    /// All 2^n corners.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|j| {
                        if mask & (1 << j) != 0 {
                            self.0[j].hi
                        } else {
                            self.0[j].lo
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// `a·x ≤ b`, or `a·x < b` when `strict`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub a: Vec<f64>,
    pub b: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub strict: bool,
}

impl Halfspace {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        Halfspace {
            a,
            b,
            strict: false,
        }
    }

    pub fn strict(a: Vec<f64>, b: f64) -> Self {
        Halfspace { a, b, strict: true }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(x).fold(0.0, |acc, (&a, &v)| acc + a * v)
    }

    fn admits(&self, v: f64) -> bool {
        if self.strict {
            v < self.b
        } else {
            v <= self.b
        }
    }

    pub fn holds(&self, x: &[f64]) -> bool {
        self.admits(self.value(x))
    }

    /// Maximum of `a·x` over the box: the corner taking `hi` where `a_i > 0`.
    /// On a point box this is bit-identical to [`Halfspace::value`].
    pub fn max_over(&self, x: &IntervalBox) -> f64 {
        self.a.iter().zip(&x.0).fold(0.0, |acc, (&a, i)| match a {
            a if a > 0.0 => acc + a * i.hi,
            a if a < 0.0 => acc + a * i.lo,
            _ => acc,
        })
    }

    pub fn min_over(&self, x: &IntervalBox) -> f64 {
        self.a.iter().zip(&x.0).fold(0.0, |acc, (&a, i)| match a {
            a if a > 0.0 => acc + a * i.lo,
            a if a < 0.0 => acc + a * i.hi,
            _ => acc,
        })
    }

    pub fn holds_on_box(&self, x: &IntervalBox) -> bool {
        self.admits(self.max_over(x))
    }

    pub fn meets_box(&self, x: &IntervalBox) -> bool {
        self.admits(self.min_over(x))
    }
}

/// Intersection of finitely many half-spaces; no constraints means all of ℝⁿ.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polyhedron {
    pub halfspaces: Vec<Halfspace>,
}

impl Polyhedron {
    pub fn new(halfspaces: Vec<Halfspace>) -> Self {
        Polyhedron { halfspaces }
    }

    pub fn everything() -> Self {
        Polyhedron::default()
    }

    pub fn is_trivial(&self) -> bool {
        self.halfspaces.is_empty()
    }

    /// Polyhedron equal to the closed box.
    pub fn from_box(x: &IntervalBox) -> Self {
        let n = x.dim();
        let mut hs = Vec::new();
        for (j, i) in x.0.iter().enumerate() {
            let mut up = vec![0.0; n];
            up[j] = 1.0;
            let mut down = vec![0.0; n];
            down[j] = -1.0;
            if i.hi.is_finite() {
                hs.push(Halfspace::new(up, i.hi));
            }
            if i.lo.is_finite() {
                hs.push(Halfspace::new(down, -i.lo));
            }
        }
        Polyhedron::new(hs)
    }

    pub fn dims_match(&self, n: usize) -> bool {
        self.halfspaces.iter().all(|h| h.a.len() == n)
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.halfspaces.iter().all(|h| h.holds(x))
    }

    /// Exact box containment: every constraint holds at its maximizing corner.
    pub fn contains_box(&self, x: &IntervalBox) -> bool {
        self.halfspaces.iter().all(|h| h.holds_on_box(x))
    }

    /// Bounding box of `x ∩ self`, or `None` when they do not meet.
    ///
    /// Each constraint tightens one coordinate at a time against the
    /// minimum of the others. Axis-aligned unit constraints clip exactly;
    /// other bounds are widened by a relative 1e-12 so division rounding
    /// cannot cut off feasible points.
    pub fn clip_box(&self, x: &IntervalBox) -> Option<IntervalBox> {
        let mut out = x.clone();
        for _ in 0..8 {
            let mut changed = false;
            for h in &self.halfspaces {
                let nonzero = h.a.iter().filter(|&&a| a != 0.0).count();
                for j in 0..out.dim() {
                    let aj = h.a[j];
                    if aj == 0.0 {
                        continue;
                    }
                    let rest =
                        h.a.iter()
                            .zip(&out.0)
                            .enumerate()
                            .filter(|&(i, (&a, _))| i != j && a != 0.0)
                            .fold(0.0, |acc, (_, (&a, iv))| {
                                acc + if a > 0.0 { a * iv.lo } else { a * iv.hi }
                            });
                    if !rest.is_finite() {
                        continue;
                    }
                    let mut bound = (h.b - rest) / aj;
                    let exact = nonzero == 1 && aj.abs() == 1.0;
                    let slack = if exact {
                        0.0
                    } else {
                        1e-12 * (1.0 + bound.abs())
                    };
                    let iv = &mut out.0[j];
                    if aj > 0.0 {
                        bound += slack;
                        if bound < iv.hi {
                            iv.hi = bound;
                            changed = true;
                        }
                    } else {
                        bound -= slack;
                        if bound > iv.lo {
                            iv.lo = bound;
                            changed = true;
                        }
                    }
                    if iv.lo > iv.hi {
                        return None;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if self.halfspaces.iter().all(|h| h.meets_box(&out)) {
            Some(out)
        } else {
            None
        }
    }

    /// Bounding box of the polyhedron, optionally intersected with `frame`.
    /// `None` if empty; `Some(Err(()))` if unbounded.
    pub fn bounding_box(
        &self,
        n: usize,
        frame: Option<&IntervalBox>,
    ) -> Option<Result<IntervalBox, ()>> {
        let start = frame.cloned().unwrap_or_else(|| {
            IntervalBox(vec![Interval::new(f64::NEG_INFINITY, f64::INFINITY); n])
        });
        let b = self.clip_box(&start)?;
        if b.0.iter().all(|i| i.lo.is_finite() && i.hi.is_finite()) {
            Some(Ok(b))
        } else {
            Some(Err(()))
        }
    }
}
