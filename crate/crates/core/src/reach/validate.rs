use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dynamics::LawKind;
use super::{
    product_in_region, product_step, AffineDynamics, ControlLaw, GuardedRegion, Halfspace,
    Interval, IntervalBox, LabelMap, Polyhedron, ProductSet, ReachError,
};
use crate::monitor::Monitor;

const VERTEX_TOL: f64 = 1e-9;

/// A grid cell whose one-step image leaves the guarded region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub q: usize,
    pub cell_index: usize,
    pub cell: IntervalBox,
    /// Monitor states reached by points that end up outside the region.
    pub escapes_to: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub cells_checked: usize,
    pub witnesses: Vec<Witness>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.witnesses.is_empty()
    }
}

/// Checks that one step of the backup law keeps every state of `sb` in `sb`.
///
/// Each region is covered by grid cells of side at most `cell`. A cell
/// passes if its interval image fits; otherwise its exact image is checked
/// vertex by vertex, split by clamping, saturation and label regions.
/// Unbounded regions need a `frame` to be intersected with.
#[allow(clippy::too_many_arguments)]
pub fn validate_high_assurance(
    sb: &GuardedRegion,
    backup: &ControlLaw,
    dynamics: &AffineDynamics,
    labels: &LabelMap,
    monitor: &Monitor,
    cell: f64,
    frame: Option<&IntervalBox>,
) -> Result<ValidationReport, ReachError> {
    if !(cell > 0.0 && cell.is_finite()) {
        return Err(ReachError::BadCell(cell));
    }
    dynamics.validate()?;
    backup.validate(dynamics)?;
    let n = dynamics.n();
    let mut jobs = Vec::new();
    for (&q, region) in &sb.regions {
        if monitor.is_bot(q) {
            return Err(ReachError::BotInRegion(q));
        }
        let bounds = match region.bounding_box(n, frame) {
            None => continue,
            Some(Err(())) => return Err(ReachError::Unbounded { q }),
            Some(Ok(b)) => b,
        };
        for (index, c) in grid(&bounds, cell).into_iter().enumerate() {
            if let Some(clipped) = region.clip_box(&c) {
                jobs.push((q, index, clipped));
            }
        }
    }
    let checker = CellCheck {
        sb,
        backup,
        dynamics,
        labels,
        monitor,
    };
    let results: Vec<Result<Option<Witness>, ReachError>> = jobs
        .par_iter()
        .map(|(q, index, c)| {
            checker.escapes(*q, c).map(|esc| {
                esc.map(|escapes_to| Witness {
                    q: *q,
                    cell_index: *index,
                    cell: c.clone(),
                    escapes_to,
                })
            })
        })
        .collect();
    let mut witnesses = Vec::new();
    for r in results {
        witnesses.extend(r?);
    }
    witnesses.sort_by_key(|w| (w.q, w.cell_index));
    Ok(ValidationReport {
        cells_checked: jobs.len(),
        witnesses,
    })
}

fn grid(bounds: &IntervalBox, cell: f64) -> Vec<IntervalBox> {
    let axes: Vec<Vec<Interval>> = bounds
        .0
        .iter()
        .map(|iv| {
            let k = ((iv.width() / cell).ceil() as usize).max(1);
            let w = iv.width() / k as f64;
            (0..k)
                .map(|i| {
                    let lo = iv.lo + i as f64 * w;
                    let hi = if i + 1 == k {
                        iv.hi
                    } else {
                        iv.lo + (i + 1) as f64 * w
                    };
                    Interval::new(lo, hi)
                })
                .collect()
        })
        .collect();
    axes.into_iter()
        .multi_cartesian_product()
        .map(IntervalBox::new)
        .collect()
}

/// Affine function `coef · z + offset` of the stacked variable `z = (x, d)`.
#[derive(Clone, Debug)]
struct Affine {
    coef: Vec<f64>,
    offset: f64,
}

impl Affine {
    fn constant(dim: usize, v: f64) -> Self {
        Affine {
            coef: vec![0.0; dim],
            offset: v,
        }
    }

    fn eval(&self, z: &[f64]) -> f64 {
        self.coef
            .iter()
            .zip(z)
            .fold(self.offset, |acc, (a, v)| acc + a * v)
    }

    fn add_scaled(&mut self, s: f64, other: &Affine) {
        for (a, b) in self.coef.iter_mut().zip(&other.coef) {
            *a += s * b;
        }
        self.offset += s * other.offset;
    }

    /// `self ≤ b` as a half-space in z.
    fn le(&self, b: f64) -> Halfspace {
        Halfspace::new(self.coef.clone(), b - self.offset)
    }

    fn ge(&self, b: f64) -> Halfspace {
        Halfspace::new(self.coef.iter().map(|a| -a).collect(), self.offset - b)
    }
}

/// One piece of a piecewise-affine map: where it applies and what it is.
type Piece = (Vec<Halfspace>, Option<f64>);

fn bound_cases(value: &Affine, lo: f64, hi: f64) -> Vec<Piece> {
    let mut cases = Vec::new();
    let mut free = Vec::new();
    if lo.is_finite() {
        free.push(value.ge(lo));
        cases.push((vec![value.le(lo)], Some(lo)));
    }
    if hi.is_finite() {
        free.push(value.le(hi));
        cases.push((vec![value.ge(hi)], Some(hi)));
    }
    cases.insert(0, (free, None));
    cases
}

struct CellCheck<'a> {
    sb: &'a GuardedRegion,
    backup: &'a ControlLaw,
    dynamics: &'a AffineDynamics,
    labels: &'a LabelMap,
    monitor: &'a Monitor,
}

impl CellCheck<'_> {
    fn escapes(&self, q: usize, cell: &IntervalBox) -> Result<Option<Vec<usize>>, ReachError> {
        let image = product_step(
            &ProductSet::singleton(q, cell.clone()),
            self.dynamics,
            self.backup,
            self.labels,
            self.monitor,
        )?;
        if product_in_region(&image, self.sb) {
            return Ok(None);
        }
        let escapes = self.exact_escapes(q, cell);
        Ok(if escapes.is_empty() {
            None
        } else {
            Some(escapes)
        })
    }

    fn exact_escapes(&self, q: usize, cell: &IntervalBox) -> Vec<usize> {
        let dynamics = self.dynamics;
        let (n, p) = (dynamics.n(), dynamics.p());
        let dim = n + p;
        let var = |i: usize| {
            let mut f = Affine::constant(dim, 0.0);
            f.coef[i] = 1.0;
            f
        };
        let pad = |h: &Halfspace| {
            let mut a = h.a.clone();
            a.resize(dim, 0.0);
            Halfspace::new(a, h.b)
        };

        let mut base: Vec<Halfspace> = Vec::new();
        if let Some(region) = self.sb.get(q) {
            base.extend(region.halfspaces.iter().map(pad));
        }
        base.extend(Polyhedron::from_box(cell).halfspaces.iter().map(pad));
        for (l, iv) in dynamics.disturbance.0.iter().enumerate() {
            base.push(var(n + l).le(iv.hi));
            base.push(var(n + l).ge(iv.lo));
        }

        let inputs: Vec<Affine> = match &self.backup.kind {
            LawKind::Constant { u } => u.iter().map(|&v| Affine::constant(dim, v)).collect(),
            LawKind::Affine { k, c } => k
                .iter()
                .zip(c)
                .map(|(row, &ck)| {
                    let mut f = Affine::constant(dim, ck);
                    for (j, &kj) in row.iter().enumerate() {
                        f.coef[j] = kj;
                    }
                    f
                })
                .collect(),
        };
        let input_cases: Vec<Vec<Piece>> = match &self.backup.kind {
            LawKind::Constant { .. } => vec![],
            LawKind::Affine { .. } => inputs
                .iter()
                .zip(&dynamics.input_bounds.0)
                .map(|(f, lim)| bound_cases(f, lim.lo, lim.hi))
                .collect(),
        };

        let mut escapes = Vec::new();
        for input_choice in choices(&input_cases) {
            let mut cons = base.clone();
            let mut u = inputs.clone();
            for (k, (extra, fixed)) in input_choice.iter().enumerate() {
                cons.extend(extra.iter().cloned());
                if let Some(v) = fixed {
                    u[k] = Affine::constant(dim, *v);
                }
            }
            let raw: Vec<Affine> = (0..n)
                .map(|i| {
                    let mut f = Affine::constant(dim, dynamics.c[i]);
                    for j in 0..n {
                        f.add_scaled(dynamics.a[i][j], &var(j));
                    }
                    for (k, uk) in u.iter().enumerate() {
                        f.add_scaled(dynamics.b[i][k], uk);
                    }
                    for l in 0..p {
                        f.add_scaled(dynamics.e[i][l], &var(n + l));
                    }
                    f
                })
                .collect();
            let clamp_cases: Vec<Vec<Piece>> = dynamics
                .clamp
                .iter()
                .map(|cl| {
                    bound_cases(
                        &raw[cl.dim],
                        cl.lo.unwrap_or(f64::NEG_INFINITY),
                        cl.hi.unwrap_or(f64::INFINITY),
                    )
                })
                .collect();
            for clamp_choice in choices(&clamp_cases) {
                let mut cons = cons.clone();
                let mut next = raw.clone();
                for (cl, (extra, fixed)) in dynamics.clamp.iter().zip(&clamp_choice) {
                    cons.extend(extra.iter().cloned());
                    if let Some(v) = fixed {
                        next[cl.dim] = Affine::constant(dim, *v);
                    }
                }
                for region in &self.labels.regions {
                    let mut cons = cons.clone();
                    for h in &region.region.halfspaces {
                        let mut f = Affine::constant(dim, 0.0);
                        for (i, &ai) in h.a.iter().enumerate() {
                            f.add_scaled(ai, &next[i]);
                        }
                        cons.push(f.le(h.b));
                    }
                    let vertices = polytope_vertices(&cons, dim);
                    if vertices.is_empty() {
                        continue;
                    }
                    let q_next = self.monitor.step(q, region.letter);
                    let inside = self.sb.get(q_next).is_some_and(|target| {
                        vertices.iter().all(|z| {
                            let y: Vec<f64> = next.iter().map(|f| f.eval(z)).collect();
                            target
                                .halfspaces
                                .iter()
                                .all(|h| h.value(&y) <= h.b + VERTEX_TOL)
                        })
                    });
                    if !inside && !escapes.contains(&q_next) {
                        escapes.push(q_next);
                    }
                }
            }
        }
        escapes.sort_unstable();
        escapes
    }
}

/// Every way of picking one piece per factor; no factors gives one empty pick.
fn choices(factors: &[Vec<Piece>]) -> Vec<Vec<&Piece>> {
    if factors.is_empty() {
        return vec![Vec::new()];
    }
    factors
        .iter()
        .map(|f| f.iter())
        .multi_cartesian_product()
        .collect()
}

/// Vertices of the bounded polyhedron `{z | a·z ≤ b}` in `dim` dimensions,
/// found by solving every `dim`-subset of constraints as equalities.
/// Strictness is ignored; feasibility uses a 1e-9 tolerance.
pub fn polytope_vertices(halfspaces: &[Halfspace], dim: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for subset in (0..halfspaces.len()).combinations(dim) {
        let rows: Vec<&Halfspace> = subset.iter().map(|&i| &halfspaces[i]).collect();
        let Some(z) = solve(&rows, dim) else { continue };
        let feasible = halfspaces
            .iter()
            .all(|h| h.value(&z) <= h.b + VERTEX_TOL * (1.0 + h.b.abs()));
        if feasible
            && !out
                .iter()
                .any(|v| v.iter().zip(&z).all(|(a, b)| (a - b).abs() <= VERTEX_TOL))
        {
            out.push(z);
        }
    }
    out
}

fn solve(rows: &[&Halfspace], dim: usize) -> Option<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = rows
        .iter()
        .map(|h| {
            let mut r = h.a.clone();
            r.push(h.b);
            r
        })
        .collect();
    for col in 0..dim {
        let pivot = (col..dim).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot_row[col];
                if f != 0.0 {
                    for (v, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                        *v -= f * p;
                    }
                }
            }
        }
    }
    Some((0..dim).map(|i| m[i][dim] / m[i][i]).collect())
}
