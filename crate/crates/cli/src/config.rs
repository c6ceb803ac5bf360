//! Run configuration: defaults, JSON config file and command-line flags are
//! merged as JSON documents (later layers win), then validated once.

use std::path::{Path, PathBuf};

use fhd_core::pde::{DEFAULT_CFL, DEFAULT_FLOOR_REL};
use fhd_core::zero_curvature::DEFAULT_LAMBDA_SPEC;
use fhd_core::{make_grid, Grid1D, SolitonParams};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::CliError;

/// Frames kept by an evolution run when no output stride is given.
pub const AUTO_FRAMES: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    ScanExistence,
    Potential,
    Profile,
    Evolve,
    VerifyLax,
    ReduceCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::ScanExistence => "scan-existence",
            Command::Potential => "potential",
            Command::Profile => "profile",
            Command::Evolve => "evolve",
            Command::VerifyLax => "verify-lax",
            Command::ReduceCheck => "reduce-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub periodic: bool,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid1D, CliError> {
        Ok(make_grid(self.x_min, self.x_max, self.n, self.periodic)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSpec {
    pub t_final: f64,
    pub cfl_constant: f64,
    /// `null` picks a stride that keeps about fifty frames.
    pub output_stride: Option<usize>,
    /// `null` means one percent of `v0`.
    pub positivity_floor: Option<f64>,
    /// Write one CSV per stored frame instead of a single trajectory file.
    pub per_frame: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub lambda_min: f64,
    /// `null` means `2 v0³`.
    pub lambda_max: Option<f64>,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub samples: usize,
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub params: SolitonParams,
    pub grid: GridSpec,
    pub evolve: EvolveSpec,
    pub lambda_spec: f64,
    pub scan: ScanSpec,
    pub potential: PotentialSpec,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
}

/// Built-in defaults as a JSON document.
pub fn defaults() -> Value {
    json!({
        "params": { "lambda_speed": 0.5, "v0": 1.0 },
        "grid": { "x_min": -40.0, "x_max": 40.0, "n": 2048, "periodic": true },
        "evolve": {
            "t_final": 5.0,
            "cfl_constant": DEFAULT_CFL,
            "output_stride": null,
            "positivity_floor": null,
            "per_frame": false
        },
        "lambda_spec": DEFAULT_LAMBDA_SPEC,
        "scan": { "lambda_min": 0.0, "lambda_max": null, "steps": 41 },
        "potential": { "samples": 401 },
        "output_dir": "fhd-output",
        "emit_plots": false
    })
}

/// Recursively overlays `top` onto `base`; objects merge, everything else
/// replaces.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, t) => *slot = t,
    }
}

/// Sets `value` at the dotted `path`, creating intermediate objects.
pub fn set_path(doc: &mut Value, path: &str, value: Value) {
    let mut cur = doc;
    let mut parts = path.split('.').peekable();
    while let Some(key) = parts.next() {
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        let obj = cur.as_object_mut().expect("object");
        if parts.peek().is_none() {
            obj.insert(key.to_string(), value);
            return;
        }
        cur = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
}

pub fn read_config_file(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| {
        CliError::Validation(format!("config {} is not valid JSON: {e}", path.display()))
    })?;
    if !value.is_object() {
        return Err(CliError::Validation(format!(
            "config {} must be a JSON object",
            path.display()
        )));
    }
    Ok(value)
}

impl RunConfig {
    /// Deserializes a merged document, fills the derived defaults and checks
    /// every section.
    pub fn from_value(doc: Value) -> Result<Self, CliError> {
        let mut cfg: RunConfig = serde_json::from_value(doc)
            .map_err(|e| CliError::Validation(format!("invalid configuration: {e}")))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    fn resolve(&mut self) -> Result<(), CliError> {
        self.params.validate()?;
        let grid = self.grid.build()?;
        let v0 = self.params.v0;

        let ev = &mut self.evolve;
        if ev.positivity_floor.is_none() {
            ev.positivity_floor = Some(DEFAULT_FLOOR_REL * v0);
        }
        if ev.output_stride.is_none() {
            // The depression never exceeds v0, so this matches the solver's
            // step size up to the final clipped step.
            let dt = ev.cfl_constant * grid.dx().powi(3) / v0.powi(3);
            let steps = (ev.t_final / dt).ceil();
            let stride = if steps.is_finite() && steps > 0.0 {
                (steps / AUTO_FRAMES).ceil().max(1.0) as usize
            } else {
                1
            };
            ev.output_stride = Some(stride);
        }
        if self.scan.lambda_max.is_none() {
            self.scan.lambda_max = Some(2.0 * v0.powi(3));
        }

        match self.command {
            Command::Evolve => self.evolve_config()?.validate()?,
            Command::ScanExistence => {
                let (lo, hi) = (self.scan.lambda_min, self.scan.lambda_max.unwrap_or(0.0));
                if !(lo.is_finite() && hi.is_finite() && hi > lo) || self.scan.steps < 2 {
                    return Err(CliError::Validation(format!(
                        "scan needs finite lambda_min < lambda_max and >= 2 steps, got [{lo}, {hi}] x {}",
                        self.scan.steps
                    )));
                }
            }
            Command::Potential => {
                if self.potential.samples < 2 {
                    return Err(CliError::Validation(
                        "potential.samples must be >= 2".into(),
                    ));
                }
            }
            Command::VerifyLax | Command::ReduceCheck => {
                if !(self.lambda_spec.is_finite() && self.lambda_spec > 0.0) {
                    return Err(CliError::Validation(format!(
                        "lambda_spec must be real and positive, got {}",
                        self.lambda_spec
                    )));
                }
                if !grid.is_periodic() {
                    return Err(CliError::Validation(format!(
                        "{} needs a periodic grid",
                        self.command.name()
                    )));
                }
            }
            Command::Profile => {}
        }
        Ok(())
    }

    pub fn evolve_config(&self) -> Result<fhd_core::pde::EvolveConfig, CliError> {
        let ev = &self.evolve;
        Ok(fhd_core::pde::EvolveConfig {
            t_final: ev.t_final,
            cfl_constant: ev.cfl_constant,
            output_stride: ev
                .output_stride
                .ok_or_else(|| CliError::Validation("output_stride unresolved".into()))?,
            positivity_floor: ev
                .positivity_floor
                .ok_or_else(|| CliError::Validation("positivity_floor unresolved".into()))?,
        })
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolved(cmd: &str, overlay: Value) -> Result<RunConfig, CliError> {
        let mut doc = defaults();
        merge(&mut doc, overlay);
        set_path(&mut doc, "command", json!(cmd));
        RunConfig::from_value(doc)
    }

    #[test]
    fn defaults_resolve_for_every_command() {
        for cmd in [
            "scan-existence",
            "potential",
            "profile",
            "evolve",
            "verify-lax",
            "reduce-check",
        ] {
            let cfg = resolved(cmd, json!({})).unwrap();
            assert_eq!(cfg.command.name(), cmd);
            assert_eq!(cfg.grid.n, 2048);
            assert_eq!(cfg.evolve.positivity_floor, Some(0.01));
            assert_eq!(cfg.scan.lambda_max, Some(2.0));
        }
    }

    #[test]
    fn nested_overlay_keeps_siblings() {
        let cfg = resolved("profile", json!({"params": {"lambda_speed": 0.2}})).unwrap();
        assert_eq!(cfg.params.lambda_speed, 0.2);
        assert_eq!(cfg.params.v0, 1.0);
    }

    #[test]
    fn set_path_creates_objects() {
        let mut doc = json!({});
        set_path(&mut doc, "grid.n", json!(64));
        set_path(&mut doc, "emit_plots", json!(true));
        assert_eq!(doc, json!({"grid": {"n": 64}, "emit_plots": true}));
    }

    #[test]
    fn auto_stride_keeps_about_fifty_frames() {
        let cfg = resolved(
            "evolve",
            json!({"grid": {"n": 256}, "evolve": {"t_final": 1.0}}),
        )
        .unwrap();
        let dx: f64 = 80.0 / 256.0;
        let steps = (1.0 / (0.1 * dx.powi(3))).ceil();
        assert_eq!(
            cfg.evolve.output_stride,
            Some((steps / 50.0).ceil() as usize)
        );
    }

    #[test]
    fn rejects_unknown_keys_and_bad_sections() {
        assert!(resolved("profile", json!({"bogus": 1})).is_err());
        assert!(resolved("profile", json!({"params": {"v0": -1.0}})).is_err());
        assert!(resolved("evolve", json!({"evolve": {"cfl_constant": 2.0}})).is_err());
        assert!(resolved("verify-lax", json!({"lambda_spec": -1.0})).is_err());
        assert!(resolved("reduce-check", json!({"grid": {"periodic": false}})).is_err());
        assert!(resolved("scan-existence", json!({"scan": {"steps": 1}})).is_err());
        assert!(resolved("profile", json!({"grid": {"n": 4}})).is_err());
    }
}
