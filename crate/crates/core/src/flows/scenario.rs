//! JSON scenario files: a cover, a list of bumps and a program of
//! translations and commutators.
//!
//! ```json
//! {"cover": {"kind": "finite", "n": 3},
//!  "bumps": [{"r": 1.5, "theta_lift": 0.785, "radius": 0.3, "weight": 1.0}],
//!  "program": [{"op": "U", "axis": 1, "t": 0.5}, {"op": "C", "s": 2.5, "t": 2.5}]}
//! ```
//!
//! Weights are a real number or a `[re, im]` pair.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{commutator_apply, inner_product, translate_state, Bump, StateFn};
use crate::cover::{Axis, CoverSpec, SurfacePoint};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Real(f64),
    Complex([f64; 2]),
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Real(1.0)
    }
}

impl From<WeightSpec> for Complex64 {
    fn from(w: WeightSpec) -> Self {
        match w {
            WeightSpec::Real(x) => Complex64::new(x, 0.0),
            WeightSpec::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub r: f64,
    pub theta_lift: f64,
    pub radius: f64,
    #[serde(default)]
    pub weight: WeightSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum Step {
    #[serde(rename = "U")]
    Translate { axis: Axis, t: f64 },
    #[serde(rename = "C")]
    Commutator { s: f64, t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub cover: CoverSpec,
    pub bumps: Vec<BumpSpec>,
    #[serde(default)]
    pub program: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpRecord {
    pub r: f64,
    pub theta_lift: f64,
    pub sheet: i64,
    pub radius: f64,
    pub weight: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// `None` for the initial state.
    pub step: Option<Step>,
    pub bumps: Vec<BumpRecord>,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub cover: CoverSpec,
    pub trace: Vec<StepRecord>,
    /// `⟨initial, final⟩`.
    pub overlap_initial_final: [f64; 2],
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn initial_state(&self) -> Result<StateFn> {
        let bumps = self
            .bumps
            .iter()
            .enumerate()
            .map(|(i, b)| {
                SurfacePoint::new(b.r, b.theta_lift, self.cover)
                    .and_then(|c| Bump::new(c, b.radius, b.weight.into()))
                    .map_err(|e| Error::Scenario(format!("bump {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        StateFn::new(self.cover, bumps)
    }

    pub fn run(&self) -> Result<ScenarioReport> {
        let initial = self.initial_state()?;
        let mut trace = vec![record(None, &initial)];
        let mut cur = initial.clone();
        for (k, step) in self.program.iter().enumerate() {
            cur = match *step {
                Step::Translate { axis, t } => translate_state(&cur, axis, t),
                Step::Commutator { s, t } => commutator_apply(&cur, s, t),
            }
            .map_err(|e| match e {
                Error::Puncture {
                    min_clearance,
                    clearance,
                    context,
                } => Error::Puncture {
                    min_clearance,
                    clearance,
                    context: format!("{context} in program step {k}"),
                },
                other => other,
            })?;
            trace.push(record(Some(*step), &cur));
        }
        let z = inner_product(&initial, &cur);
        Ok(ScenarioReport {
            cover: self.cover,
            trace,
            overlap_initial_final: [z.re, z.im],
        })
    }
}

fn record(step: Option<Step>, f: &StateFn) -> StepRecord {
    StepRecord {
        step,
        bumps: f
            .bumps()
            .iter()
            .map(|b| BumpRecord {
                r: b.center.r(),
                theta_lift: b.center.theta_lift(),
                sheet: b.sheet(),
                radius: b.radius,
                weight: [b.weight.re, b.weight.im],
            })
            .collect(),
        norm: f.norm(),
    }
}

/// Parse and run a scenario in one go.
pub fn run_scenario_json(text: &str) -> Result<ScenarioReport> {
    Scenario::from_json(text)?.run()
}
