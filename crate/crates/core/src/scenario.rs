//! Strict JSON scenario files and parameter sweeps.
//!
//! ```json
//! {
//!   "cosmology": {"n": 1, "c": 1, "a0": 1, "H": 0, "sigma": 0, "m_squared": 0},
//!   "cone": {"r0": 1},
//!   "theorem": {"N": 2, "epsilon": 0.5, "theta": 0.5, "lambda": 1, "p": 3, "w0": 16, "w1": 64},
//!   "run": {"t_end": 1.0}
//! }
//! ```
//!
//! Only the `run` block may be omitted, and only its fields have defaults.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::certificate::{TheoremInputs, TheoremParams, DEFAULT_NODES};
use crate::cone::ConeGeometry;
use crate::cosmology::CosmologyParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeBlock {
    pub r0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridChoice {
    #[default]
    Radial,
    Line,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunBlock {
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub grid_h: f64,
    pub r_max_factor: f64,
    /// Output directory; the `--out` flag takes precedence.
    pub output: Option<String>,
    pub max_steps: usize,
    /// Interval between PDE observable records.
    pub output_dt: f64,
    pub snapshot_times: Vec<f64>,
    pub grid: GridChoice,
    /// Apex of the full-line grid.
    pub center: f64,
    /// Grid size of the certificate extremum search.
    pub search_nodes: usize,
    /// Relative slack of the growth-property report.
    pub check_tolerance: f64,
}

impl Default for RunBlock {
    fn default() -> Self {
        RunBlock {
            t_end: 2.0,
            rtol: 1e-10,
            atol: 1e-12,
            grid_h: 1e-3,
            r_max_factor: 1.25,
            output: None,
            max_steps: 2_000_000,
            output_dt: 0.01,
            snapshot_times: vec![],
            grid: GridChoice::Radial,
            center: 0.0,
            search_nodes: DEFAULT_NODES,
            check_tolerance: 1e-6,
        }
    }
}

impl RunBlock {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("{name} must be positive and finite")))
            }
        };
        positive("t_end", self.t_end)?;
        positive("rtol", self.rtol)?;
        positive("atol", self.atol)?;
        positive("grid_h", self.grid_h)?;
        positive("output_dt", self.output_dt)?;
        positive("check_tolerance", self.check_tolerance)?;
        if !(self.r_max_factor.is_finite() && self.r_max_factor >= 1.0) {
            return Err(Error::invalid("r_max_factor", "outer radius factor must be at least 1"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "step budget must be positive"));
        }
        if self.search_nodes < 16 {
            return Err(Error::invalid(
                "search_nodes",
                "extremum search needs at least 16 nodes",
            ));
        }
        if !self.center.is_finite() {
            return Err(Error::invalid("center", "grid centre must be finite"));
        }
        if self.snapshot_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::invalid(
                "snapshot_times",
                "snapshot times must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub cosmology: CosmologyParams,
    pub cone: ConeBlock,
    pub theorem: TheoremParams,
    #[serde(default)]
    pub run: RunBlock,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.cosmology.validate()?;
        if !(self.cone.r0.is_finite() && self.cone.r0 > 0.0) {
            return Err(Error::invalid("r0", "initial support radius must be positive"));
        }
        self.theorem.validate()?;
        self.run.validate()
    }

    pub fn geometry(&self) -> Result<ConeGeometry> {
        ConeGeometry::new(self.cosmology, self.cone.r0)
    }

    pub fn inputs(&self) -> Result<TheoremInputs> {
        TheoremInputs::new(self.geometry()?, self.theorem)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let s: Scenario = parse_strict(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let s: Scenario = serde_path_to_error::deserialize(value)
            .map_err(|e| Error::Scenario(format!("at `{}`: {}", e.path(), e.inner())))?;
        s.validate()?;
        Ok(s)
    }
}

/// Parses with key-path and line/column diagnostics.
fn parse_strict<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        Error::Scenario(format!(
            "at `{}` (line {}, column {}): {}",
            e.path(),
            inner.line(),
            inner.column(),
            inner
        ))
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::from_json_str(&read(path)?).map_err(|e| match e {
        Error::Scenario(m) => Error::Scenario(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Default cap on the number of sweep points.
pub const DEFAULT_MAX_COMBINATIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted path into the scenario, e.g. `cosmology.H` or `theorem.w0`.
    pub path: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: Scenario,
    pub axes: Vec<SweepAxis>,
    #[serde(default)]
    pub parallelism: Option<usize>,
    #[serde(default = "default_max_combinations")]
    pub max_combinations: usize,
    /// Also integrate the comparison equation at each point.
    #[serde(default)]
    pub ode: bool,
}

fn default_max_combinations() -> usize {
    DEFAULT_MAX_COMBINATIONS
}

impl SweepSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let s: SweepSpec = parse_strict(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.axes.is_empty() {
            return Err(Error::Scenario("sweep needs at least one axis".into()));
        }
        let base = serde_json::to_value(&self.base)?;
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(Error::Scenario(format!("axis `{}` has no values", axis.path)));
            }
            if axis.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Scenario(format!("axis `{}` has a non-finite value", axis.path)));
            }
            match base.pointer(&pointer(&axis.path)) {
                Some(Value::Number(_)) => {}
                _ => {
                    return Err(Error::Scenario(format!(
                        "`{}` is not a numeric scenario field",
                        axis.path
                    )))
                }
            }
        }
        if self.parallelism == Some(0) {
            return Err(Error::Scenario("parallelism must be at least 1".into()));
        }
        let total = self.combinations();
        if total.is_none_or(|t| t > self.max_combinations) {
            return Err(Error::Scenario(format!(
                "sweep exceeds the cap of {} combinations",
                self.max_combinations
            )));
        }
        Ok(())
    }

    /// Number of grid points, `None` on overflow.
    pub fn combinations(&self) -> Option<usize> {
        self.axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.values.len()))
    }

    /// Axis values of point `index`, last axis fastest.
    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            let len = axis.values.len();
            out[k] = axis.values[index % len];
            index /= len;
        }
        out
    }

    /// The base scenario with the values of point `index` substituted.
    pub fn scenario_at(&self, index: usize) -> Result<Scenario> {
        let mut value = serde_json::to_value(&self.base)?;
        for (axis, v) in self.axes.iter().zip(self.point(index)) {
            let slot = value
                .pointer_mut(&pointer(&axis.path))
                .ok_or_else(|| Error::Scenario(format!("unknown path `{}`", axis.path)))?;
            *slot = if axis.path == "cosmology.n" {
                if v.fract() != 0.0 || v < 1.0 {
                    return Err(Error::invalid("n", "spatial dimension must be a positive integer"));
                }
                Value::from(v as u64)
            } else {
                serde_json::Number::from_f64(v)
                    .map(Value::Number)
                    .ok_or_else(|| Error::Scenario(format!("non-finite value on `{}`", axis.path)))?
            };
        }
        Scenario::from_value(value)
    }
}

fn pointer(path: &str) -> String {
    path.split('.').fold(String::new(), |mut acc, seg| {
        acc.push('/');
        acc.push_str(seg);
        acc
    })
}

pub fn load_sweep(path: &Path) -> Result<SweepSpec> {
    SweepSpec::from_json_str(&read(path)?).map_err(|e| match e {
        Error::Scenario(m) => Error::Scenario(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "cosmology": {"n": 1, "c": 1, "a0": 1, "H": 0, "sigma": 0, "m_squared": 0},
        "cone": {"r0": 1},
        "theorem": {"N": 2, "epsilon": 0.5, "theta": 0.5, "lambda": 1, "p": 3, "w0": 16, "w1": 64}
    }"#;

    #[test]
    fn minimal_gets_default_run() {
        let s = Scenario::from_json_str(MINIMAL).unwrap();
        assert_eq!(s.run, RunBlock::default());
    }

    #[test]
    fn epsilon_out_of_range() {
        let text = MINIMAL.replace("\"epsilon\": 0.5", "\"epsilon\": 1.5");
        let err = Scenario::from_json_str(&text).unwrap_err().to_string();
        assert!(err.contains("(0,1)"), "{err}");
    }

    #[test]
    fn unknown_key_names_path() {
        let text = MINIMAL.replace("\"r0\": 1", "\"r0\": 1, \"radius\": 2");
        let err = Scenario::from_json_str(&text).unwrap_err().to_string();
        assert!(
            err.contains("cone") && err.contains("radius") && err.contains("line"),
            "{err}"
        );
    }

    #[test]
    fn missing_block_rejected() {
        assert!(Scenario::from_json_str(r#"{"cone": {"r0": 1}}"#).is_err());
    }

    #[test]
    fn excluded_region_loads() {
        let text = MINIMAL.replace("\"H\": 0, \"sigma\": 0", "\"H\": 1, \"sigma\": -2");
        assert!(Scenario::from_json_str(&text).is_ok());
    }

    fn sweep(axes: &str) -> Result<SweepSpec> {
        SweepSpec::from_json_str(&format!(r#"{{"base": {MINIMAL}, "axes": {axes}}}"#))
    }

    #[test]
    fn sweep_validation() {
        assert!(sweep("[]").is_err());
        assert!(sweep(r#"[{"path": "cosmology.Hubble", "values": [1]}]"#).is_err());
        assert!(sweep(r#"[{"path": "cosmology.H", "values": []}]"#).is_err());
        let s = sweep(r#"[{"path": "cosmology.H", "values": [-1, 0, 1]}, {"path": "theorem.w0", "values": [1, 2]}]"#)
            .unwrap();
        assert_eq!(s.combinations(), Some(6));
        assert_eq!(s.point(0), vec![-1.0, 1.0]);
        assert_eq!(s.point(3), vec![0.0, 2.0]);
        let sc = s.scenario_at(5).unwrap();
        assert_eq!((sc.cosmology.hubble, sc.theorem.w0), (1.0, 2.0));
    }

    #[test]
    fn sweep_cap() {
        let text = format!(
            r#"{{"base": {MINIMAL}, "axes": [{{"path": "theorem.w0", "values": [1, 2, 3]}}], "max_combinations": 2}}"#
        );
        assert!(SweepSpec::from_json_str(&text).is_err());
    }

    #[test]
    fn sweep_point_validation_is_per_point() {
        let s = sweep(r#"[{"path": "theorem.epsilon", "values": [0.5, 2.0]}]"#).unwrap();
        assert!(s.scenario_at(0).is_ok());
        assert!(s.scenario_at(1).is_err());
    }
}
