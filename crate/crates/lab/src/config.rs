//! Experiment configuration files.
//!
//! Configs are TOML with a schema version and no unknown keys. Angles are
//! given in turns (fractions of a full turn) so that values like a quarter
//! turn are exact in the file.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use minrays::asymptotic::TailWindow;
use minrays::engine::EngineOptions;
use minrays::{BoundaryPoint, DiscPoint, R_MAX};
use serde::{Deserialize, Serialize};

use crate::LabError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Group,
    Geodesic,
    Ray,
    Morse,
    Horofunction,
    Widths,
    Periodic,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricFamily {
    Hyperbolic,
    Conformal,
    Randers,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub kind: MetricFamily,
    #[serde(default = "defaults::amplitude")]
    pub amplitude: f64,
    #[serde(default = "defaults::shape")]
    pub shape: f64,
    /// Word-length truncation of the invariant field.
    #[serde(default = "defaults::level")]
    pub level: usize,
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
}

/// A disc point as (angle in turns, hyperbolic radius).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub theta: f64,
    pub rho: f64,
}

impl PointSpec {
    pub fn to_point(self) -> Result<DiscPoint, LabError> {
        Ok(DiscPoint::new(TAU * self.theta, self.rho)?)
    }
}

pub fn direction(turns: f64) -> BoundaryPoint {
    BoundaryPoint::from_turns(turns)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    #[serde(default)]
    pub points: Vec<PointSpec>,
    /// Boundary directions in turns.
    #[serde(default)]
    pub directions: Vec<f64>,
    #[serde(default = "defaults::radius")]
    pub radius: f64,
    #[serde(default = "defaults::radii")]
    pub radii: Vec<f64>,
    #[serde(default = "defaults::word")]
    pub word: String,
    #[serde(default = "defaults::delta")]
    pub delta: f64,
    /// Number of random instances where an experiment draws its own.
    #[serde(default = "defaults::count")]
    pub count: usize,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            points: Vec::new(),
            directions: Vec::new(),
            radius: defaults::radius(),
            radii: defaults::radii(),
            word: defaults::word(),
            delta: defaults::delta(),
            count: defaults::count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericSpec {
    #[serde(default = "defaults::n_initial")]
    pub n_initial: usize,
    #[serde(default = "defaults::n_max")]
    pub n_max: usize,
    #[serde(default = "defaults::rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "defaults::grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "defaults::stability_tol")]
    pub stability_tol: f64,
    #[serde(default = "defaults::distinct_tol")]
    pub distinct_tol: f64,
    #[serde(default = "defaults::nested_check")]
    pub nested_check: bool,
    #[serde(default = "defaults::grid_radius")]
    pub grid_radius: f64,
    #[serde(default = "defaults::grid_spacing")]
    pub grid_spacing: f64,
}

impl Default for NumericSpec {
    fn default() -> Self {
        Self {
            n_initial: defaults::n_initial(),
            n_max: defaults::n_max(),
            rel_tol: defaults::rel_tol(),
            grad_tol: defaults::grad_tol(),
            stability_tol: defaults::stability_tol(),
            distinct_tol: defaults::distinct_tol(),
            nested_check: defaults::nested_check(),
            grid_radius: defaults::grid_radius(),
            grid_spacing: defaults::grid_spacing(),
        }
    }
}

impl NumericSpec {
    pub fn engine_options(&self) -> EngineOptions {
        EngineOptions {
            n_initial: self.n_initial,
            n_max: self.n_max,
            rel_tol: self.rel_tol,
            grad_tol: self.grad_tol,
            stability_tol: self.stability_tol,
            distinct_tol: self.distinct_tol,
            nested_check: self.nested_check,
            ..EngineOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "defaults::out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: defaults::out_dir(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default = "defaults::level_quick")]
    pub level: Level,
    pub metric: MetricSpec,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub numerics: NumericSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

mod defaults {
    use super::Level;
    use std::path::PathBuf;

    pub fn amplitude() -> f64 {
        0.5
    }
    pub fn shape() -> f64 {
        1.0
    }
    pub fn level() -> usize {
        6
    }
    pub fn epsilon() -> f64 {
        0.3
    }
    pub fn radius() -> f64 {
        16.0
    }
    pub fn radii() -> Vec<f64> {
        vec![8.0, 12.0, 16.0]
    }
    pub fn word() -> String {
        "a".into()
    }
    pub fn delta() -> f64 {
        0.3
    }
    pub fn count() -> usize {
        5
    }
    pub fn n_initial() -> usize {
        32
    }
    pub fn n_max() -> usize {
        16384
    }
    pub fn rel_tol() -> f64 {
        1e-7
    }
    pub fn grad_tol() -> f64 {
        1e-8
    }
    pub fn stability_tol() -> f64 {
        1e-3
    }
    pub fn distinct_tol() -> f64 {
        1e-3
    }
    pub fn nested_check() -> bool {
        true
    }
    pub fn grid_radius() -> f64 {
        4.0
    }
    pub fn grid_spacing() -> f64 {
        0.25
    }
    pub fn out_dir() -> PathBuf {
        PathBuf::from("out")
    }
    pub fn level_quick() -> Level {
        Level::Quick
    }
}

fn invalid(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl ExperimentConfig {
    /// Built-in config for an experiment kind.
    pub fn builtin(kind: ExperimentKind, seed: u64) -> Self {
        let mut geometry = GeometrySpec::default();
        match kind {
            ExperimentKind::Geodesic => {
                geometry.points = vec![
                    PointSpec {
                        theta: 0.1,
                        rho: 3.0,
                    },
                    PointSpec {
                        theta: 0.55,
                        rho: 4.0,
                    },
                ];
            }
            ExperimentKind::Ray | ExperimentKind::Horofunction => {
                geometry.points = vec![PointSpec {
                    theta: 0.0,
                    rho: 0.0,
                }];
                geometry.directions = vec![0.1459];
            }
            ExperimentKind::Widths => {
                geometry.points = vec![
                    PointSpec {
                        theta: 0.0,
                        rho: 0.0,
                    },
                    PointSpec {
                        theta: 0.4,
                        rho: 1.0,
                    },
                ];
                geometry.directions = vec![0.1459];
            }
            ExperimentKind::Morse => {
                geometry.radii = vec![4.0, 8.0, 12.0, 16.0];
            }
            ExperimentKind::Periodic => {
                geometry.points = vec![PointSpec {
                    theta: 0.4,
                    rho: 1.5,
                }];
            }
            _ => {}
        }
        Self {
            schema: SCHEMA_VERSION,
            experiment: kind,
            seed,
            level: Level::Quick,
            metric: MetricSpec {
                kind: MetricFamily::Conformal,
                amplitude: defaults::amplitude(),
                shape: defaults::shape(),
                level: defaults::level(),
                epsilon: defaults::epsilon(),
            },
            geometry,
            numerics: NumericSpec {
                // The sparser default keeps conformal horofunction runs short.
                grid_radius: if kind == ExperimentKind::Horofunction {
                    1.5
                } else {
                    defaults::grid_radius()
                },
                grid_spacing: if kind == ExperimentKind::Horofunction {
                    0.5
                } else {
                    defaults::grid_spacing()
                },
                ..NumericSpec::default()
            },
            output: OutputSpec::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, LabError> {
        let config: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), LabError> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid(format!(
                "schema {} is not supported (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        let m = &self.metric;
        if !(m.amplitude >= 0.0 && m.amplitude.is_finite())
            || !(m.shape > 0.0 && m.shape.is_finite())
        {
            return Err(invalid("metric amplitude must be >= 0 and shape > 0"));
        }
        if m.level > 7 {
            return Err(invalid("metric level must be at most 7"));
        }
        if !(m.epsilon >= 0.0 && m.epsilon.is_finite()) {
            return Err(invalid("metric epsilon must be >= 0"));
        }
        let n = &self.numerics;
        for (name, v) in [
            ("rel_tol", n.rel_tol),
            ("grad_tol", n.grad_tol),
            ("stability_tol", n.stability_tol),
            ("distinct_tol", n.distinct_tol),
            ("grid_spacing", n.grid_spacing),
            ("grid_radius", n.grid_radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("numerics.{name} must be positive")));
            }
        }
        if !n.n_initial.is_power_of_two() || n.n_initial < 32 || n.n_max < n.n_initial {
            return Err(invalid(
                "numerics.n_initial must be a power of two >= 32 and <= n_max",
            ));
        }
        let g = &self.geometry;
        let r_cap = R_MAX - 2.0;
        if !(g.radius > 0.0 && g.radius <= r_cap)
            || g.radii.iter().any(|&r| !(r > 0.0 && r <= r_cap))
        {
            return Err(invalid(format!("radii must lie in (0, {r_cap}]")));
        }
        let margin = TailWindow::default().margin;
        if matches!(
            self.experiment,
            ExperimentKind::Widths | ExperimentKind::Periodic
        ) && g.radii.iter().any(|&r| r + margin > r_cap)
        {
            return Err(invalid(format!(
                "ray radii plus the window margin {margin} must not exceed {r_cap}"
            )));
        }
        if g.points
            .iter()
            .any(|p| !(p.rho >= 0.0 && p.rho <= R_MAX) || !p.theta.is_finite())
        {
            return Err(invalid("points need finite angles and 0 <= rho <= R_MAX"));
        }
        if g.directions.iter().any(|d| !d.is_finite()) {
            return Err(invalid("directions must be finite"));
        }
        if !(g.delta > 0.0 && g.delta <= 0.5) {
            return Err(invalid("geometry.delta must lie in (0, 0.5]"));
        }
        let need = |points: usize, directions: usize| -> Result<(), LabError> {
            if g.points.len() < points || g.directions.len() < directions {
                return Err(invalid(format!(
                    "{:?} needs {points} point(s) and {directions} direction(s)",
                    self.experiment
                )));
            }
            Ok(())
        };
        match self.experiment {
            ExperimentKind::Geodesic => need(2, 0),
            ExperimentKind::Ray | ExperimentKind::Horofunction => need(1, 1),
            ExperimentKind::Widths => need(2, 1),
            ExperimentKind::Periodic => need(1, 0),
            _ => Ok(()),
        }
    }

    /// Canonical text: the config re-serialized with defaults filled in and
    /// the output directory left out.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSpec::default();
        toml::to_string(&c).expect("configs serialize")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema = 1
experiment = "geodesic"
seed = 3

[metric]
kind = "hyperbolic"

[geometry]
points = [{ theta = 0.0, rho = 1.0 }, { theta = 0.5, rho = 2.0 }]
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.metric.kind, MetricFamily::Hyperbolic);
        assert_eq!(c.numerics.rel_tol, 1e-7);
        assert_eq!(
            c.geometry.points[1].to_point().unwrap().theta(),
            std::f64::consts::PI
        );
    }

    #[test]
    fn rejects_unknown_keys_and_missing_seed() {
        let bad = MINIMAL.replace("seed = 3", "seed = 3\ncolour = 1");
        assert!(matches!(
            ExperimentConfig::parse(&bad),
            Err(LabError::Config(_))
        ));
        let unseeded = MINIMAL.replace("seed = 3", "");
        assert!(ExperimentConfig::parse(&unseeded).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [
            ("schema = 1", "schema = 2"),
            (
                "kind = \"hyperbolic\"",
                "kind = \"hyperbolic\"\nepsilon = -1.0",
            ),
            ("seed = 3", "seed = 3\n[numerics]\nrel_tol = 0.0"),
        ] {
            assert!(
                ExperimentConfig::parse(&MINIMAL.replace(from, to)).is_err(),
                "{to}"
            );
        }
        let one_point = MINIMAL.replace(", { theta = 0.5, rho = 2.0 }", "");
        assert!(ExperimentConfig::parse(&one_point).is_err());
    }

    #[test]
    fn canonical_form_ignores_layout_and_output() {
        let a = ExperimentConfig::parse(MINIMAL).unwrap();
        let reordered = MINIMAL.replace("seed = 3\n", "") + "\n[output]\ndir = \"elsewhere\"\n";
        let reordered = reordered.replace("schema = 1", "seed = 3\nschema = 1");
        let b = ExperimentConfig::parse(&reordered).unwrap();
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(ExperimentConfig::parse(&a.to_toml()).unwrap(), a);
    }

    #[test]
    fn builtins_validate() {
        for kind in [
            ExperimentKind::Group,
            ExperimentKind::Geodesic,
            ExperimentKind::Ray,
            ExperimentKind::Morse,
            ExperimentKind::Horofunction,
            ExperimentKind::Widths,
            ExperimentKind::Periodic,
            ExperimentKind::Verify,
        ] {
            ExperimentConfig::builtin(kind, 1).validate().unwrap();
        }
    }
}
