//! Declarative scenario description and its JSON schema (version 1).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectral::{Grid, RealField};
use crate::stepper::StepControl;

use super::checks::CheckSpec;

pub const SCHEMA_VERSION: u32 = 1;

fn default_cadence() -> usize {
    10
}

fn default_snapshots() -> usize {
    4
}

/// Initial-condition catalog. Every kind is nonnegative after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Constant {
        a: f64,
    },
    /// `a + b cos(k x)`.
    Cosine {
        a: f64,
        b: f64,
        #[serde(default = "one")]
        k: i64,
    },
    /// Mollified spike `floor + height exp(-sin^2(x/2)/width^2)`, smoothed
    /// by the heat kernel of width `mollify`.
    Bump {
        height: f64,
        width: f64,
        #[serde(default)]
        floor: f64,
        #[serde(default)]
        mollify: f64,
    },
    /// `1 + sum_{1<=k<=band} a_k cos(kx + phi_k)` with `a_k ~ U(-1,1)/k`,
    /// clamped from below at `min_clamp`.
    RandomBandLimited {
        seed: u64,
        band: i64,
        #[serde(default)]
        min_clamp: f64,
    },
}

fn one() -> i64 {
    1
}

/// One experiment: initial data, model parameters, grid, horizon, observer
/// cadence, and the named checks to evaluate on the trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub schema_version: u32,
    pub name: String,
    pub initial_condition: InitialCondition,
    pub params: ModelParams,
    #[serde(default)]
    pub ctrl: StepControl,
    pub grid_n: usize,
    pub horizon: f64,
    /// Observer cadence in steps (records and state snapshots).
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    /// Heat-kernel mollification applied to the constructed initial data.
    #[serde(default)]
    pub mollify_width: f64,
    /// Number of equispaced snapshot files to persist (the final state is
    /// always included).
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

impl ScenarioSpec {
    /// Parse and validate a scenario document, reporting every offending
    /// field.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScenarioSpec =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            bad.push(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            ));
        }
        if self.name.is_empty() {
            bad.push("name: must be non-empty".into());
        }
        if Grid::new(self.grid_n).is_err() {
            bad.push(format!(
                "grid_n: {} is not a power of two >= 8",
                self.grid_n
            ));
        }
        if !(self.horizon > 0.0) {
            bad.push(format!("horizon: {} must be > 0", self.horizon));
        }
        if self.cadence == 0 {
            bad.push("cadence: must be >= 1".into());
        }
        if !(self.mollify_width >= 0.0) {
            bad.push(format!("mollify_width: {} must be >= 0", self.mollify_width));
        }
        if let Err(e) = self.params.validate() {
            bad.push(format!("params: {e}"));
        }
        if let Err(e) = self.ctrl.validate() {
            bad.push(format!("ctrl: {e}"));
        }
        match self.initial_condition {
            InitialCondition::Constant { a } => {
                if !(a >= 0.0) {
                    bad.push(format!("initial_condition.a: {a} must be >= 0"));
                }
            }
            InitialCondition::Cosine { a, b, k } => {
                if !(a >= b.abs()) {
                    bad.push(format!(
                        "initial_condition: a={a} must dominate |b|={} for nonnegativity",
                        b.abs()
                    ));
                }
                if k <= 0 || k as usize >= self.grid_n / 2 {
                    bad.push(format!("initial_condition.k: {k} outside (0, n/2)"));
                }
            }
            InitialCondition::Bump {
                height,
                width,
                floor,
                mollify,
            } => {
                if !(height > 0.0) {
                    bad.push(format!("initial_condition.height: {height} must be > 0"));
                }
                if !(width > 0.0) {
                    bad.push(format!("initial_condition.width: {width} must be > 0"));
                }
                if !(floor >= 0.0) {
                    bad.push(format!("initial_condition.floor: {floor} must be >= 0"));
                }
                if !(mollify >= 0.0) {
                    bad.push(format!("initial_condition.mollify: {mollify} must be >= 0"));
                }
            }
            InitialCondition::RandomBandLimited {
                band, min_clamp, ..
            } => {
                if band < 1 || band as usize > self.grid_n / 3 {
                    bad.push(format!(
                        "initial_condition.band: {band} outside [1, n/3]"
                    ));
                }
                if !(min_clamp >= 0.0) {
                    bad.push(format!(
                        "initial_condition.min_clamp: {min_clamp} must be >= 0"
                    ));
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(bad.join("; ")))
        }
    }

    /// Construct the initial data on the scenario grid, apply the
    /// kind-specific and scenario-level mollifications, and verify
    /// nonnegativity.
    pub fn build_initial(&self) -> Result<RealField> {
        let grid = Grid::new(self.grid_n)?;
        let raw = match self.initial_condition {
            InitialCondition::Constant { a } => RealField::constant(grid, a),
            InitialCondition::Cosine { a, b, k } => {
                RealField::from_fn(grid, |x| a + b * (k as f64 * x).cos())
            }
            InitialCondition::Bump {
                height,
                width,
                floor,
                mollify,
            } => {
                let base = RealField::from_fn(grid, |x| {
                    let s = (0.5 * x).sin();
                    floor + height * (-(s * s) / (width * width)).exp()
                });
                base.mollify(mollify)
            }
            InitialCondition::RandomBandLimited {
                seed,
                band,
                min_clamp,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let modes: Vec<(f64, f64)> = (1..=band)
                    .map(|k| {
                        (
                            rng.gen_range(-1.0..1.0) / k as f64,
                            rng.gen_range(0.0..2.0 * std::f64::consts::PI),
                        )
                    })
                    .collect();
                RealField::from_fn(grid, |x| {
                    let mut v = 1.0;
                    for (k, (a, phi)) in modes.iter().enumerate() {
                        v += a * ((k as f64 + 1.0) * x + phi).cos();
                    }
                    v.max(min_clamp)
                })
            }
        };
        let u0 = raw.mollify(self.mollify_width);
        if u0.min() < 0.0 {
            return Err(Error::Schema(format!(
                "initial_condition: negative after construction (min {})",
                u0.min()
            )));
        }
        Ok(u0)
    }
}

/// Apply one `dotted.path=value` override to a raw JSON document. Every
/// path segment must already exist in the document; the value is parsed as
/// JSON when possible and as a bare string otherwise.
pub fn apply_override(doc: &mut serde_json::Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Schema(format!("override '{assignment}' is not key=value")))?;
    let new_value: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut cursor = doc;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let map = cursor.as_object_mut().ok_or_else(|| {
            Error::Schema(format!("override path '{path}': '{seg}' is not an object field"))
        })?;
        if !map.contains_key(*seg) {
            return Err(Error::Schema(format!(
                "override path '{path}': unknown field '{seg}'"
            )));
        }
        if i + 1 == segments.len() {
            map.insert((*seg).to_string(), new_value);
            return Ok(());
        }
        cursor = map.get_mut(*seg).expect("checked presence");
    }
    unreachable!("empty override path rejected by split")
}
