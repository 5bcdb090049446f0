use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ltl::{parse_formula, Alphabet};
use crate::monitor::{Compiler, Monitor};
use crate::reach::{
    AffineDynamics, Clamp, ControlLaw, GuardedRegion, Halfspace, IntervalBox, LabelMap,
    LabelRegion, Polyhedron,
};
use crate::shield::{DisturbanceMode, ShieldConfig, DEFAULT_N_MAX};

use super::{Driver, SimError, Strategy};

pub const DELOREAN_TOML: &str = include_str!("../../scenarios/delorean.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelDoc {
    /// Atomic propositions true in this region.
    pub letter: Vec<String>,
    pub halfspaces: Vec<Halfspace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionDoc {
    /// Monitor state name: `top`, `inc`, `bot` or `q<id>`.
    pub q: String,
    #[serde(default)]
    pub halfspaces: Vec<Halfspace>,
}

/// The scenario file as written on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub name: String,
    pub ap: Vec<String>,
    pub formula: String,
    pub x0: Vec<f64>,
    #[serde(default = "default_n_max")]
    pub nmax: usize,
    #[serde(default)]
    pub reengage: bool,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    pub driver: Driver,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub disturbance_mode: DisturbanceMode,
    #[serde(default)]
    pub allow_non_safety: bool,
    /// Bounding box used to grid unbounded regions during validation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<IntervalBox>,
    /// Atom whose first appearance is reported in trace summaries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub watch: Option<String>,
    pub dynamics: AffineDynamics,
    pub labels: Vec<LabelDoc>,
    pub sb: Vec<RegionDoc>,
    pub backup: ControlLaw,
}

fn default_n_max() -> usize {
    DEFAULT_N_MAX
}

fn default_horizon() -> u64 {
    200
}

/// A parsed scenario with its compiled shield configuration.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub doc: ScenarioDoc,
    pub config: Arc<ShieldConfig>,
}

impl Scenario {
    pub fn from_doc(doc: ScenarioDoc) -> Result<Self, SimError> {
        let alphabet = Alphabet::new(&doc.ap).map_err(|e| SimError::Invalid(e.to_string()))?;
        let formula =
            parse_formula(&doc.formula, &doc.ap).map_err(|e| SimError::Invalid(e.to_string()))?;
        let monitor = Compiler::default().build_monitor(&formula, &alphabet)?;
        let labels = LabelMap::new(
            doc.labels
                .iter()
                .map(|l| {
                    let letter = alphabet
                        .letter(&l.letter)
                        .map_err(|e| SimError::Invalid(e.to_string()))?;
                    Ok(LabelRegion {
                        letter,
                        region: Polyhedron::new(l.halfspaces.clone()),
                    })
                })
                .collect::<Result<_, SimError>>()?,
        );
        let mut sb = GuardedRegion::default();
        for r in &doc.sb {
            let q = monitor.resolve_state(&r.q).ok_or_else(|| {
                SimError::Invalid(format!("unknown monitor state `{}` in sb", r.q))
            })?;
            if sb
                .regions
                .insert(q, Polyhedron::new(r.halfspaces.clone()))
                .is_some()
            {
                return Err(SimError::Invalid(format!(
                    "monitor state `{}` listed twice in sb",
                    r.q
                )));
            }
        }
        if let Some(w) = &doc.watch {
            if alphabet.index_of(w).is_none() {
                return Err(SimError::Invalid(format!(
                    "watched atom `{w}` is not declared"
                )));
            }
        }
        if let Driver::Replay { inputs } = &doc.driver {
            if inputs.iter().any(|u| u.len() != doc.dynamics.m()) {
                return Err(SimError::Invalid("replay input of wrong dimension".into()));
            }
        }
        let mut config = ShieldConfig::new(
            formula,
            monitor,
            doc.dynamics.clone(),
            labels,
            sb,
            doc.backup.clone(),
        );
        config.n_max = doc.nmax;
        config.reengage = doc.reengage;
        config.disturbance_mode = doc.disturbance_mode;
        config.allow_non_safety = doc.allow_non_safety;
        config.validate()?;
        Ok(Scenario {
            doc,
            config: Arc::new(config),
        })
    }

    /// Parses a scenario file; syntax errors carry line context.
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let doc: ScenarioDoc = toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
        Scenario::from_doc(doc)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.doc).expect("scenario documents always serialize")
    }

    pub fn monitor(&self) -> &Monitor {
        &self.config.monitor
    }

    pub fn with_driver(&self, driver: Driver) -> Result<Self, SimError> {
        let mut doc = self.doc.clone();
        doc.driver = driver;
        Scenario::from_doc(doc)
    }

    pub fn with_strategy(&self, strategy: Strategy) -> Self {
        let mut s = self.clone();
        s.doc.strategy = strategy;
        s
    }
}

/// The case study: a car on a straight road must pass the clock tower
/// at 2.54 m at 2 m/s or more.
pub fn delorean_scenario(profile: &str) -> Result<Scenario, SimError> {
    let driver =
        Driver::from_name(profile).ok_or_else(|| SimError::UnknownProfile(profile.to_string()))?;
    let base = delorean_doc();
    let mut doc = base;
    doc.driver = driver;
    Scenario::from_doc(doc)
}

fn delorean_doc() -> ScenarioDoc {
    let below = Halfspace::strict(vec![1.0, 0.0], 2.54);
    let at_tower = Halfspace::new(vec![-1.0, 0.0], -2.54);
    let slow = Halfspace::strict(vec![0.0, 1.0], 2.0);
    let fast = Halfspace::new(vec![0.0, -1.0], -2.0);
    let label = |atoms: &[&str], hs: [&Halfspace; 2]| LabelDoc {
        letter: atoms.iter().map(|s| s.to_string()).collect(),
        halfspaces: hs.into_iter().cloned().collect(),
    };
    ScenarioDoc {
        name: "delorean".into(),
        ap: vec!["tower".into(), "fast".into()],
        formula: "(!tower) W (tower & fast)".into(),
        x0: vec![0.0, 0.0],
        nmax: DEFAULT_N_MAX,
        reengage: false,
        horizon: 200,
        driver: Driver::FaultyLate,
        strategy: Strategy::Uniform,
        disturbance_mode: DisturbanceMode::Disturbed,
        allow_non_safety: false,
        frame: Some(IntervalBox::from_bounds(&[[0.0, 5.0], [0.0, 4.0]])),
        watch: Some("tower".into()),
        dynamics: AffineDynamics {
            a: vec![vec![1.0, 0.25], vec![0.0, 1.0]],
            b: vec![vec![0.0], vec![0.25]],
            e: vec![vec![0.0], vec![-0.25]],
            c: vec![0.0, 0.0],
            input_bounds: IntervalBox::from_bounds(&[[-2.0, 2.0]]),
            disturbance: IntervalBox::from_bounds(&[[0.0, 0.2]]),
            clamp: vec![Clamp {
                dim: 1,
                lo: Some(0.0),
                hi: None,
            }],
        },
        labels: vec![
            label(&[], [&below, &slow]),
            label(&["tower"], [&at_tower, &slow]),
            label(&["fast"], [&below, &fast]),
            label(&["tower", "fast"], [&at_tower, &fast]),
        ],
        sb: vec![
            RegionDoc {
                q: "top".into(),
                halfspaces: vec![],
            },
            RegionDoc {
                q: "inc".into(),
                halfspaces: vec![
                    Halfspace::new(vec![0.69, 1.0], 1.66),
                    Halfspace::new(vec![-1.0, 0.0], 0.0),
                    Halfspace::new(vec![0.0, -1.0], 0.0),
                ],
            },
        ],
        backup: ControlLaw::constant(vec![-2.0]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_file_matches_builtin() {
        let sc = Scenario::from_toml(DELOREAN_TOML).unwrap();
        assert_eq!(sc.doc, delorean_doc());
    }

    #[test]
    fn toml_round_trip() {
        let sc = delorean_scenario("safe").unwrap();
        let back = Scenario::from_toml(&sc.to_toml()).unwrap();
        assert_eq!(back.doc, sc.doc);
    }

    #[test]
    fn case_study_parameters() {
        let sc = delorean_scenario("faulty-late").unwrap();
        let cfg = &sc.config;
        assert_eq!(cfg.dynamics.a[0][1], 0.25);
        let q = cfg.monitor.resolve_state("inc").unwrap();
        assert_eq!(
            cfg.sb.get(q).unwrap().halfspaces[0],
            Halfspace::new(vec![0.69, 1.0], 1.66)
        );
        assert!(sc.doc.labels[1].halfspaces.iter().any(|h| h.b == -2.54));
    }

    #[test]
    fn unknown_profile() {
        assert!(matches!(
            delorean_scenario("reckless"),
            Err(SimError::UnknownProfile(_))
        ));
    }

    #[test]
    fn syntax_errors_have_line_context() {
        let broken = DELOREAN_TOML.replace("nmax = 8", "nmax = = 8");
        let err = Scenario::from_toml(&broken).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn unknown_state_in_region() {
        let broken = DELOREAN_TOML.replace("q = \"inc\"", "q = \"q9\"");
        assert!(matches!(
            Scenario::from_toml(&broken),
            Err(SimError::Invalid(_))
        ));
    }
}
