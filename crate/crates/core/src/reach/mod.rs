//! Box reachability for clamped affine systems, lifted through the labeling
//! function into monitor-product sets.

mod dynamics;
mod geometry;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::Letter;
use crate::monitor::Monitor;

pub use dynamics::{box_step_affine, AffineDynamics, Clamp, ControlLaw, LawKind};
pub use geometry::{Halfspace, Interval, IntervalBox, Polyhedron};
pub use validate::{polytope_vertices, validate_high_assurance, ValidationReport, Witness};

/// Per-state box lists are hulled into one box past this size.
pub const MAX_BOXES_PER_STATE: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReachError {
    #[error("{what} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid dynamics: {0}")]
    InvalidDynamics(String),
    #[error("invalid control law: {0}")]
    InvalidLaw(String),
    #[error("box {0:?} lies in no label region")]
    Unlabelled(IntervalBox),
    #[error("region for monitor state {q} is unbounded; supply a bounding frame")]
    Unbounded { q: usize },
    #[error("guarded region admits the violation state {0}")]
    BotInRegion(usize),
    #[error("grid cell size must be positive, got {0}")]
    BadCell(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelRegion {
    pub letter: Letter,
    pub region: Polyhedron,
}

/// Labeling function `L: X → 2^AP` given by a polyhedral partition.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelMap {
    pub regions: Vec<LabelRegion>,
}

impl LabelMap {
    pub fn new(regions: Vec<LabelRegion>) -> Self {
        LabelMap { regions }
    }

    /// Letter of the first region containing `x`.
    pub fn label(&self, x: &[f64]) -> Option<Letter> {
        self.regions
            .iter()
            .find(|r| r.region.contains_point(x))
            .map(|r| r.letter)
    }

    pub fn split(&self, x: &IntervalBox) -> Vec<(Letter, IntervalBox)> {
        split_by_labels(x, self)
    }
}

/// Bounding box of `x` within each label region it touches.
pub fn split_by_labels(x: &IntervalBox, labels: &LabelMap) -> Vec<(Letter, IntervalBox)> {
    labels
        .regions
        .iter()
        .filter_map(|r| r.region.clip_box(x).map(|b| (r.letter, b)))
        .collect()
}

/// Over-approximation of a set of (state, monitor state) pairs.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProductSet {
    boxes: BTreeMap<usize, Vec<IntervalBox>>,
}

impl ProductSet {
    pub fn new() -> Self {
        ProductSet::default()
    }

    pub fn singleton(q: usize, x: IntervalBox) -> Self {
        let mut r = ProductSet::new();
        r.insert(q, x);
        r
    }

    pub fn point(q: usize, x: &[f64]) -> Self {
        ProductSet::singleton(q, IntervalBox::point(x))
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        self.boxes.keys().copied()
    }

    pub fn boxes(&self, q: usize) -> &[IntervalBox] {
        self.boxes.get(&q).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &IntervalBox)> {
        self.boxes
            .iter()
            .flat_map(|(&q, bs)| bs.iter().map(move |b| (q, b)))
    }

    pub fn len(&self) -> usize {
        self.boxes.values().map(Vec::len).sum()
    }

    /// Adds a box, skipping it if already covered and dropping boxes it covers.
    pub fn insert(&mut self, q: usize, x: IntervalBox) {
        let list = self.boxes.entry(q).or_default();
        if list.iter().any(|b| b.contains_box(&x)) {
            return;
        }
        list.retain(|b| !x.contains_box(b));
        list.push(x);
        if list.len() > MAX_BOXES_PER_STATE {
            let hull = list.iter().skip(1).fold(list[0].clone(), |h, b| h.hull(b));
            *list = vec![hull];
        }
    }

    pub fn contains(&self, q: usize, x: &[f64]) -> bool {
        self.boxes(q).iter().any(|b| b.contains_point(x))
    }

    /// Projection onto the state space as a list of boxes.
    pub fn state_boxes(&self) -> Vec<IntervalBox> {
        self.iter().map(|(_, b)| b.clone()).collect()
    }
}

/// Admissible region per monitor state; absent states are excluded.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GuardedRegion {
    pub regions: BTreeMap<usize, Polyhedron>,
}

impl GuardedRegion {
    pub fn new(regions: BTreeMap<usize, Polyhedron>) -> Self {
        GuardedRegion { regions }
    }

    pub fn get(&self, q: usize) -> Option<&Polyhedron> {
        self.regions.get(&q)
    }

    pub fn contains(&self, q: usize, x: &[f64]) -> bool {
        self.regions.get(&q).is_some_and(|p| p.contains_point(x))
    }

    pub fn contains_box(&self, q: usize, x: &IntervalBox) -> bool {
        self.regions.get(&q).is_some_and(|p| p.contains_box(x))
    }
}

pub fn box_in_polyhedron(x: &IntervalBox, p: &Polyhedron) -> bool {
    p.contains_box(x)
}

pub fn product_in_region(r: &ProductSet, g: &GuardedRegion) -> bool {
    r.iter().all(|(q, b)| g.contains_box(q, b))
}

/// One step of the lifted reach set under `law`, for all disturbances in `D`.
///
/// Pieces of one parent box that land in the same monitor state are hulled.
pub fn product_step(
    r: &ProductSet,
    dynamics: &AffineDynamics,
    law: &ControlLaw,
    labels: &LabelMap,
    monitor: &Monitor,
) -> Result<ProductSet, ReachError> {
    let mut out = ProductSet::new();
    for (q, b) in r.iter() {
        let succ = box_step_affine(dynamics, b, law, &dynamics.disturbance)?;
        let pieces = split_by_labels(&succ, labels);
        if pieces.is_empty() {
            return Err(ReachError::Unlabelled(succ));
        }
        let mut by_state: BTreeMap<usize, IntervalBox> = BTreeMap::new();
        for (letter, piece) in pieces {
            let next = monitor.step(q, letter);
            by_state
                .entry(next)
                .and_modify(|h| *h = h.hull(&piece))
                .or_insert(piece);
        }
        for (next, piece) in by_state {
            out.insert(next, piece);
        }
    }
    Ok(out)
}
