//! Run configuration: a TOML file (flat dotted keys or sections), the config
//! echo of a previous `report.json`, and `--section.key=value` overrides.

use std::fs;
use std::path::{Path, PathBuf};

use liftdescent::benchmarks::{Benchmark, Overrides};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "GridSection::is_empty")]
    pub grid: GridSection,
    #[serde(default, skip_serializing_if = "SystemSection::is_empty")]
    pub system: SystemSection,
    #[serde(default, skip_serializing_if = "DescentSection::is_empty")]
    pub descent: DescentSection,
    #[serde(default, skip_serializing_if = "CostSection::is_empty")]
    pub cost: CostSection,
    #[serde(default, skip_serializing_if = "SnapshotSection::is_empty")]
    pub snapshots: SnapshotSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
    /// RK4 step of the ODE problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescentSection {
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub windows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(rename = "N_iter", default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighted: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize_target: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

macro_rules! empty_check {
    ($($t:ty => $($f:ident),+);+ $(;)?) => {
        $(impl $t {
            fn is_empty(&self) -> bool {
                $(self.$f.is_none())&&+
            }
        })+
    };
}

empty_check! {
    GridSection => cells;
    SystemSection => horizon, kappa, cfl, dt_max, dt;
    DescentSection => windows, epsilon, iterations;
    CostSection => weighted, normalize_target;
    SnapshotSection => times;
}

fn overlay<T>(base: &mut Option<T>, top: Option<T>) {
    if top.is_some() {
        *base = top;
    }
}

impl RunConfig {
    /// Reads a TOML config, or the `config` object of a JSON run report.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        if is_json {
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let cfg = value.get("config").cloned().unwrap_or(value);
            serde_json::from_value(cfg).map_err(|e| CliError::Config(format!("{}: config: {e}", path.display())))
        } else {
            Self::from_toml(&text).map_err(|e| match e {
                CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
                other => other,
            })
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
    }

    /// Parses `section.key=value` override strings (without the leading
    /// dashes). Values are read as TOML literals, falling back to strings.
    pub fn from_overrides(pairs: &[String]) -> Result<Self, CliError> {
        let mut seen = std::collections::HashSet::new();
        let mut cfg = RunConfig::default();
        for pair in pairs {
            let (key, raw) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--{pair}: expected --key=value")))?;
            if !seen.insert(key) {
                return Err(CliError::Config(format!("--{key}: given more than once")));
            }
            let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.to_string()));
            let mut parts: Vec<&str> = key.split('.').collect();
            let leaf = parts.pop().unwrap_or_default();
            let mut node = toml::Table::new();
            node.insert(leaf.to_string(), value);
            for p in parts.iter().rev() {
                let mut parent = toml::Table::new();
                parent.insert(p.to_string(), toml::Value::Table(node));
                node = parent;
            }
            let one: RunConfig = node
                .try_into()
                .map_err(|e: toml::de::Error| CliError::Config(format!("--{key}: {}", e.message())))?;
            cfg = cfg.merge(one);
        }
        Ok(cfg)
    }

    /// Fields set in `top` replace those in `self`.
    pub fn merge(mut self, top: RunConfig) -> Self {
        overlay(&mut self.benchmark, top.benchmark);
        overlay(&mut self.out, top.out);
        overlay(&mut self.grid.cells, top.grid.cells);
        overlay(&mut self.system.horizon, top.system.horizon);
        overlay(&mut self.system.kappa, top.system.kappa);
        overlay(&mut self.system.cfl, top.system.cfl);
        overlay(&mut self.system.dt_max, top.system.dt_max);
        overlay(&mut self.system.dt, top.system.dt);
        overlay(&mut self.descent.windows, top.descent.windows);
        overlay(&mut self.descent.epsilon, top.descent.epsilon);
        overlay(&mut self.descent.iterations, top.descent.iterations);
        overlay(&mut self.cost.weighted, top.cost.weighted);
        overlay(&mut self.cost.normalize_target, top.cost.normalize_target);
        overlay(&mut self.snapshots.times, top.snapshots.times);
        self
    }

    pub fn benchmark(&self) -> Result<Benchmark, CliError> {
        let name = self
            .benchmark
            .as_deref()
            .ok_or_else(|| CliError::Config("benchmark: no benchmark given (use --benchmark or 'benchmark = ...')".into()))?;
        Benchmark::from_name(name).map_err(|e| CliError::Config(format!("benchmark: {e}")))
    }

    /// Range checks that do not need the benchmark defaults.
    pub fn validate(&self) -> Result<(), CliError> {
        fn positive(field: &str, v: Option<f64>) -> Result<(), CliError> {
            match v {
                Some(x) if !(x > 0.0 && x.is_finite()) => {
                    Err(CliError::Config(format!("{field}: must be positive and finite, got {x}")))
                }
                _ => Ok(()),
            }
        }
        if let Some(g) = self.grid.cells {
            if g < 3 {
                return Err(CliError::Config(format!("grid.G: need at least 3 cells, got {g}")));
            }
        }
        positive("system.T", self.system.horizon)?;
        positive("system.kappa", self.system.kappa)?;
        positive("system.dt_max", self.system.dt_max)?;
        positive("system.dt", self.system.dt)?;
        positive("descent.epsilon", self.descent.epsilon)?;
        if let Some(c) = self.system.cfl {
            if !(c > 0.0 && c < 1.0) {
                return Err(CliError::Config(format!("system.cfl: must lie in (0, 1), got {c}")));
            }
        }
        if self.descent.windows == Some(0) {
            return Err(CliError::Config("descent.N: must be at least 1".into()));
        }
        if self.descent.iterations == Some(0) {
            return Err(CliError::Config("descent.N_iter: must be at least 1".into()));
        }
        if let Some(times) = &self.snapshots.times {
            if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return Err(CliError::Config("snapshots.times: times must be finite and non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn overrides(&self) -> Overrides {
        Overrides {
            grid: self.grid.cells,
            horizon: self.system.horizon,
            windows: self.descent.windows,
            epsilon: self.descent.epsilon,
            iterations: self.descent.iterations,
            kappa: self.system.kappa,
            weighted: self.cost.weighted,
            normalize_target: self.cost.normalize_target,
            cfl: self.system.cfl,
            dt_max: self.system.dt_max,
            ode_dt: self.system.dt,
        }
    }
}
