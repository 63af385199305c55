//! Scenario files and their resolution into validated domain specs.
//!
//! The dialect is TOML. Every table is mirrored by a raw struct with
//! `deny_unknown_fields`, so a typo fails the parse instead of silently
//! acquiring a default, and fields that belong to a different `kind` are
//! rejected explicitly. A scenario can also be re-loaded from the
//! `metadata.json` written next to the artifacts it produced; the embedded
//! config reproduces those artifacts byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use recloop_core::{
    AgentPolicy, BlockGeometry, DistSpec, DynamicsParams, Opinion, PlatformPolicy,
    PopulationSpec, RewardFn, RunSpec, SweepBase, SweepParameter, SweepSpec,
};

use crate::error::{CliError, CliResult};

fn need<T>(value: Option<T>, key: &str, table: &str, kind: &str) -> CliResult<T> {
    value.ok_or_else(|| {
        CliError::validation(format!("{table} kind {kind:?} requires `{key}`"))
    })
}

fn refuse<T>(value: &Option<T>, key: &str, table: &str, kind: &str) -> CliResult<()> {
    if value.is_some() {
        return Err(CliError::validation(format!(
            "`{key}` does not apply to {table} kind {kind:?}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsTable {
    pub alpha: f64,
    pub beta: f64,
}

impl DynamicsTable {
    pub fn build(&self) -> CliResult<DynamicsParams> {
        Ok(DynamicsParams::new(self.alpha, self.beta)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryTable {
    pub s: u32,
    pub n: u32,
}

impl GeometryTable {
    pub fn build(&self) -> CliResult<BlockGeometry> {
        Ok(BlockGeometry::new(self.s, self.n)?)
    }
}

/// Agent block: `kind` is one of `fixed`, `decreasing`, `adaptive`, or the
/// sugar `all`, which expands to all three policies sharing `t0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentTable {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_drift: Option<f64>,
}

impl AgentTable {
    pub fn policies(&self) -> CliResult<Vec<AgentPolicy>> {
        let kind = self.kind.as_str();
        match kind {
            "fixed" => {
                refuse(&self.kappa, "kappa", "agent", kind)?;
                refuse(&self.tau, "tau", "agent", kind)?;
                refuse(&self.x_drift, "x_drift", "agent", kind)?;
                Ok(vec![AgentPolicy::Fixed { t0: need(self.t0, "t0", "agent", kind)? }])
            }
            "decreasing" => {
                refuse(&self.tau, "tau", "agent", kind)?;
                refuse(&self.x_drift, "x_drift", "agent", kind)?;
                Ok(vec![AgentPolicy::Decreasing {
                    t0: need(self.t0, "t0", "agent", kind)?,
                    kappa: need(self.kappa, "kappa", "agent", kind)?,
                }])
            }
            "adaptive" => {
                refuse(&self.kappa, "kappa", "agent", kind)?;
                Ok(vec![AgentPolicy::AdaptiveDecreasing {
                    t0: need(self.t0, "t0", "agent", kind)?,
                    tau: need(self.tau, "tau", "agent", kind)?,
                    x_drift: need(self.x_drift, "x_drift", "agent", kind)?,
                }])
            }
            "all" => {
                let t0 = need(self.t0, "t0", "agent", kind)?;
                Ok(vec![
                    AgentPolicy::Fixed { t0 },
                    AgentPolicy::Decreasing {
                        t0,
                        kappa: need(self.kappa, "kappa", "agent", kind)?,
                    },
                    AgentPolicy::AdaptiveDecreasing {
                        t0,
                        tau: need(self.tau, "tau", "agent", kind)?,
                        x_drift: need(self.x_drift, "x_drift", "agent", kind)?,
                    },
                ])
            }
            other => Err(CliError::validation(format!(
                "unknown agent kind {other:?} (expected fixed, decreasing, adaptive, or all)"
            ))),
        }
    }
}

/// Distribution over [-1, 1]. Gaussian defaults to mean 0, stddev 0.5 and is
/// truncated by resampling; both defaults land in the resolved metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistTable {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stddev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl DistTable {
    pub fn build(&self, table: &str) -> CliResult<DistSpec> {
        let kind = self.kind.as_str();
        match kind {
            "uniform" => {
                refuse(&self.mean, "mean", table, kind)?;
                refuse(&self.stddev, "stddev", table, kind)?;
                refuse(&self.value, "value", table, kind)?;
                Ok(DistSpec::Uniform)
            }
            "gaussian" => {
                refuse(&self.value, "value", table, kind)?;
                Ok(DistSpec::Gaussian {
                    mean: self.mean.unwrap_or(0.0),
                    stddev: self.stddev.unwrap_or(0.5),
                })
            }
            "point" => {
                refuse(&self.mean, "mean", table, kind)?;
                refuse(&self.stddev, "stddev", table, kind)?;
                Ok(DistSpec::Point { value: need(self.value, "value", table, kind)? })
            }
            other => Err(CliError::validation(format!(
                "unknown {table} distribution kind {other:?} (expected uniform, gaussian, or point)"
            ))),
        }
    }

    fn normalized(&self, table: &str) -> CliResult<Self> {
        let mut out = self.clone();
        if let DistSpec::Gaussian { mean, stddev } = self.build(table)? {
            out.mean = Some(mean);
            out.stddev = Some(stddev);
        }
        Ok(out)
    }
}

fn uniform_table() -> DistTable {
    DistTable { kind: "uniform".into(), mean: None, stddev: None, value: None }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformTable {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explore: Option<DistTable>,
}

impl PlatformTable {
    pub fn build(&self) -> CliResult<PlatformPolicy> {
        let kind = self.kind.as_str();
        match kind {
            "fixed-recommendation" => {
                refuse(&self.delta, "delta", "platform", kind)?;
                refuse(&self.explore, "explore", "platform", kind)?;
                Ok(PlatformPolicy::FixedRecommendation {
                    u0: need(self.u0, "u0", "platform", kind)?,
                })
            }
            "explore-periodically" => {
                refuse(&self.u0, "u0", "platform", kind)?;
                let explore_dist = match &self.explore {
                    Some(d) => d.build("explore")?,
                    None => DistSpec::Uniform,
                };
                Ok(PlatformPolicy::ExplorePeriodically {
                    delta: need(self.delta, "delta", "platform", kind)?,
                    explore_dist,
                })
            }
            other => Err(CliError::validation(format!(
                "unknown platform kind {other:?} (expected fixed-recommendation or explore-periodically)"
            ))),
        }
    }

    fn normalized(&self) -> CliResult<Self> {
        let mut out = self.clone();
        if self.kind == "explore-periodically" {
            out.explore = Some(match &self.explore {
                Some(d) => d.normalized("explore")?,
                None => uniform_table(),
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardTable {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl RewardTable {
    pub fn build(&self) -> CliResult<RewardFn> {
        let kind = self.kind.as_str();
        match kind {
            "constant" => {
                refuse(&self.c, "c", "reward", kind)?;
                Ok(RewardFn::Constant)
            }
            "linear-distance" => {
                Ok(RewardFn::LinearDistance { c: need(self.c, "c", "reward", kind)? })
            }
            other => Err(CliError::validation(format!(
                "unknown reward kind {other:?} (expected constant or linear-distance)"
            ))),
        }
    }
}

/// Grid as either an explicit `values` list or an inclusive
/// `start`/`stop`/`step` progression whose last point is forced onto `stop`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridTable {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl GridTable {
    pub fn expand(&self) -> CliResult<Vec<f64>> {
        match (&self.values, self.start, self.stop, self.step) {
            (Some(values), None, None, None) => {
                if values.is_empty() {
                    return Err(CliError::validation("grid `values` must be non-empty"));
                }
                Ok(values.clone())
            }
            (None, Some(start), Some(stop), Some(step)) => {
                if !step.is_finite() || step <= 0.0 {
                    return Err(CliError::validation(format!(
                        "grid `step` must be positive, got {step}"
                    )));
                }
                if !start.is_finite() || !stop.is_finite() {
                    return Err(CliError::validation(format!(
                        "grid bounds must be finite, got [{start}, {stop}]"
                    )));
                }
                if stop < start {
                    return Err(CliError::validation(format!(
                        "grid needs `stop` >= `start`, got [{start}, {stop}]"
                    )));
                }
                let count = ((stop - start) / step).round() as i64 + 1;
                let span = (count - 1) as f64 * step;
                if (span - (stop - start)).abs() > step * 1e-6 {
                    return Err(CliError::validation(format!(
                        "grid step {step} does not land on stop {stop} from start {start}"
                    )));
                }
                Ok((0..count)
                    .map(|k| if k == count - 1 { stop } else { start + k as f64 * step })
                    .collect())
            }
            _ => Err(CliError::validation(
                "grid needs either `values` or all of `start`/`stop`/`step`",
            )),
        }
    }
}

/// One scenario for `recloop run`: a single trace per agent policy against
/// one platform policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub lambda: f64,
    pub x0: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    pub dynamics: DynamicsTable,
    pub geometry: GeometryTable,
    pub agent: AgentTable,
    pub platform: PlatformTable,
    pub reward: RewardTable,
}

pub struct RunScenario {
    pub runs: Vec<(String, RunSpec)>,
    pub out_dir: Option<PathBuf>,
    pub resolved: RunFile,
}

impl RunFile {
    pub fn resolve(&self) -> CliResult<RunScenario> {
        let params = self.dynamics.build()?;
        let geometry = self.geometry.build()?;
        let platform = self.platform.build()?;
        let reward = self.reward.build()?;
        let x0 = Opinion::new(self.x0)?;
        let mut runs = Vec::new();
        for agent in self.agent.policies()? {
            let spec = RunSpec {
                params,
                geometry,
                agent,
                platform,
                reward,
                lambda: self.lambda,
                x0,
                seed: self.seed,
            };
            spec.validate()?;
            runs.push((agent.name().to_string(), spec));
        }
        let mut resolved = self.clone();
        resolved.platform = self.platform.normalized()?;
        resolved.out_dir = None;
        Ok(RunScenario { runs, out_dir: self.out_dir.clone().map(PathBuf::from), resolved })
    }
}

/// One scenario for `recloop sweep`: a value grid for one parameter, crossed
/// with every configured agent policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub parameter: String,
    pub lambda: f64,
    pub x0: f64,
    pub u0: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    pub grid: GridTable,
    pub dynamics: DynamicsTable,
    pub geometry: GeometryTable,
    pub agent: AgentTable,
    pub reward: RewardTable,
}

pub struct SweepScenario {
    pub spec: SweepSpec,
    pub out_dir: Option<PathBuf>,
    pub resolved: SweepFile,
}

impl SweepFile {
    pub fn resolve(&self) -> CliResult<SweepScenario> {
        let parameter = match self.parameter.as_str() {
            "alpha" => SweepParameter::Alpha,
            "x0" => SweepParameter::X0,
            "u0" => SweepParameter::U0,
            "lambda" => SweepParameter::Lambda,
            other => {
                return Err(CliError::validation(format!(
                    "unknown sweep parameter {other:?} (expected alpha, x0, u0, or lambda)"
                )))
            }
        };
        let spec = SweepSpec {
            parameter,
            grid: self.grid.expand()?,
            base: SweepBase {
                params: self.dynamics.build()?,
                geometry: self.geometry.build()?,
                policies: self.agent.policies()?,
                reward: self.reward.build()?,
                lambda: self.lambda,
                x0: self.x0,
                u0: self.u0,
                seed: self.seed,
            },
        };
        let mut resolved = self.clone();
        resolved.out_dir = None;
        Ok(SweepScenario { spec, out_dir: self.out_dir.clone().map(PathBuf::from), resolved })
    }
}

fn default_histogram_nodes() -> u32 {
    40
}

/// One scenario for `recloop population`: independent agents with innate
/// opinions and per-agent fixed recommendations drawn from two distributions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationFile {
    pub lambda: f64,
    pub count: u32,
    pub base_seed: u64,
    #[serde(default = "default_histogram_nodes")]
    pub histogram_nodes: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    pub dynamics: DynamicsTable,
    pub geometry: GeometryTable,
    pub agent: AgentTable,
    pub reward: RewardTable,
    pub innate: DistTable,
    pub recommendation: DistTable,
}

pub struct PopulationScenario {
    pub populations: Vec<(String, PopulationSpec)>,
    pub out_dir: Option<PathBuf>,
    pub resolved: PopulationFile,
}

impl PopulationFile {
    pub fn resolve(&self) -> CliResult<PopulationScenario> {
        let params = self.dynamics.build()?;
        let geometry = self.geometry.build()?;
        let reward = self.reward.build()?;
        let innate_dist = self.innate.build("innate")?;
        let rec_dist = self.recommendation.build("recommendation")?;
        let mut populations = Vec::new();
        for agent in self.agent.policies()? {
            let spec = PopulationSpec {
                params,
                geometry,
                agent,
                reward,
                lambda: self.lambda,
                count: self.count,
                innate_dist,
                rec_dist,
                base_seed: self.base_seed,
                histogram_nodes: self.histogram_nodes,
            };
            spec.validate()?;
            populations.push((agent.name().to_string(), spec));
        }
        let mut resolved = self.clone();
        resolved.innate = self.innate.normalized("innate")?;
        resolved.recommendation = self.recommendation.normalized("recommendation")?;
        resolved.out_dir = None;
        Ok(PopulationScenario {
            populations,
            out_dir: self.out_dir.clone().map(PathBuf::from),
            resolved,
        })
    }
}

/// Parses scenario text. JSON input may be either a bare config or a
/// `metadata.json` wrapper, in which case the embedded `config` is used.
pub fn parse_scenario<T: DeserializeOwned>(text: &str, json: bool) -> CliResult<T> {
    if json {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::validation(format!("invalid JSON scenario: {e}")))?;
        let config = match value.get("config") {
            Some(inner) => inner.clone(),
            None => value,
        };
        serde_json::from_value(config)
            .map_err(|e| CliError::validation(format!("invalid scenario: {e}")))
    } else {
        toml::from_str(text).map_err(|e| CliError::validation(format!("invalid scenario: {e}")))
    }
}

pub fn load_scenario<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    let json = path.extension().is_some_and(|ext| ext == "json");
    parse_scenario(&text, json)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RUN_TOML: &str = r#"
lambda = 0.5
x0 = -1.0
seed = 3

[dynamics]
alpha = 0.25
beta = 0.2

[geometry]
s = 8
n = 4

[agent]
kind = "fixed"
t0 = 8

[platform]
kind = "fixed-recommendation"
u0 = 1.0

[reward]
kind = "constant"
"#;

    #[test]
    fn run_file_parses_and_resolves() {
        let file: RunFile = parse_scenario(RUN_TOML, false).unwrap();
        let scenario = file.resolve().unwrap();
        assert_eq!(scenario.runs.len(), 1);
        assert_eq!(scenario.runs[0].0, "fixed");
    }

    #[test]
    fn agent_all_expands_to_three_policies() {
        let table = AgentTable {
            kind: "all".into(),
            t0: Some(8),
            kappa: Some(2.0),
            tau: Some(3),
            x_drift: Some(0.1),
        };
        let policies = table.policies().unwrap();
        assert_eq!(policies.len(), 3);
        assert_eq!(policies[0].name(), "fixed");
        assert_eq!(policies[1].name(), "decreasing");
        assert_eq!(policies[2].name(), "adaptive");
    }

    #[test]
    fn foreign_fields_for_a_kind_are_refused() {
        let table = AgentTable {
            kind: "fixed".into(),
            t0: Some(8),
            kappa: Some(2.0),
            tau: None,
            x_drift: None,
        };
        let err = table.policies().unwrap_err();
        assert!(err.message.contains("kappa"), "{}", err.message);

        let missing = AgentTable {
            kind: "adaptive".into(),
            t0: Some(8),
            kappa: None,
            tau: None,
            x_drift: Some(0.1),
        };
        let err = missing.policies().unwrap_err();
        assert!(err.message.contains("tau"), "{}", err.message);
    }

    #[test]
    fn unknown_top_level_key_fails_the_parse() {
        let text = format!("{RUN_TOML}\nmystery = 1\n");
        let err = parse_scenario::<RunFile>(&text, false).unwrap_err();
        assert!(err.message.contains("mystery"), "{}", err.message);
    }

    #[test]
    fn unknown_nested_key_fails_the_parse() {
        let text = RUN_TOML.replace("kind = \"constant\"", "kind = \"constant\"\nslope = 2.0");
        assert!(parse_scenario::<RunFile>(&text, false).is_err());
    }

    #[test]
    fn grid_progression_lands_exactly_on_stop() {
        let grid = GridTable {
            values: None,
            start: Some(0.0),
            stop: Some(1.0),
            step: Some(0.05),
        };
        let values = grid.expand().unwrap();
        assert_eq!(values.len(), 21);
        assert_eq!(values[0], 0.0);
        assert_eq!(values[20], 1.0);

        let alpha = GridTable {
            values: None,
            start: Some(0.105),
            stop: Some(0.895),
            step: Some(0.01),
        };
        assert_eq!(alpha.expand().unwrap().len(), 80);
    }

    #[test]
    fn grid_rejects_mixed_and_inconsistent_forms() {
        let mixed = GridTable {
            values: Some(vec![0.1]),
            start: Some(0.0),
            stop: Some(1.0),
            step: Some(0.1),
        };
        assert!(mixed.expand().is_err());

        let off = GridTable {
            values: None,
            start: Some(0.0),
            stop: Some(1.0),
            step: Some(0.3),
        };
        assert!(off.expand().is_err());
    }

    #[test]
    fn gaussian_defaults_are_filled_in_normalized_form() {
        let table = DistTable { kind: "gaussian".into(), mean: None, stddev: None, value: None };
        let resolved = table.normalized("recommendation").unwrap();
        assert_eq!(resolved.mean, Some(0.0));
        assert_eq!(resolved.stddev, Some(0.5));
        assert_eq!(table.build("recommendation").unwrap(), DistSpec::Gaussian {
            mean: 0.0,
            stddev: 0.5,
        });
    }

    #[test]
    fn metadata_wrapper_json_round_trips() {
        let file: RunFile = parse_scenario(RUN_TOML, false).unwrap();
        let resolved = file.resolve().unwrap().resolved;
        let wrapper = serde_json::json!({
            "command": "run",
            "config": serde_json::to_value(&resolved).unwrap(),
            "artifacts": ["trace_fixed.csv"],
        });
        let reparsed: RunFile = parse_scenario(&wrapper.to_string(), true).unwrap();
        let again = reparsed.resolve().unwrap();
        assert_eq!(again.runs[0].1, file.resolve().unwrap().runs[0].1);
    }

    #[test]
    fn bare_json_config_is_accepted() {
        let file: RunFile = parse_scenario(RUN_TOML, false).unwrap();
        let json = serde_json::to_string(&file).unwrap();
        let reparsed: RunFile = parse_scenario(&json, true).unwrap();
        assert_eq!(reparsed.seed, 3);
    }
}
