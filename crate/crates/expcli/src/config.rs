//! Experiment configuration: a TOML document with kebab-case keys, resolved
//! against per-experiment defaults into a [`RunConfig`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixtures::{Fixture, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Fidelity,
    Nmin,
    Montecarlo,
    Embezzle,
    Consumption,
    QutritMap,
    Distill,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Fidelity,
        ExperimentKind::Nmin,
        ExperimentKind::Montecarlo,
        ExperimentKind::Embezzle,
        ExperimentKind::Consumption,
        ExperimentKind::QutritMap,
        ExperimentKind::Distill,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Fidelity => "fidelity",
            ExperimentKind::Nmin => "nmin",
            ExperimentKind::Montecarlo => "montecarlo",
            ExperimentKind::Embezzle => "embezzle",
            ExperimentKind::Consumption => "consumption",
            ExperimentKind::QutritMap => "qutrit-map",
            ExperimentKind::Distill => "distill",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Invalid configuration, tagged with the offending key path.
#[derive(Clone, Debug, Error, PartialEq)]
#[error("config error at `{path}`: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// The document as written. Every key is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub d: Option<usize>,
    pub epsilon: Option<f64>,
    pub epsilon_grid: Option<Vec<f64>>,
    /// Number of random catalyst candidates.
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub state_source: Option<String>,
    pub output_path: Option<PathBuf>,
    pub resolution: Option<usize>,
    pub threshold: Option<f64>,
    pub margin: Option<f64>,
    pub m_max: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let message = inner.message().to_string();
            ConfigError::new(if path == "." { String::new() } else { path }, message)
        })
    }
}

/// Which fixtures to run on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FixtureSelection {
    All,
    Table(Table),
    One(Fixture),
}

impl FixtureSelection {
    pub fn fixtures(&self) -> Vec<Fixture> {
        match self {
            FixtureSelection::All => Fixture::all(),
            FixtureSelection::Table(t) => (1..=t.rows()).map(|r| Fixture::Row(*t, r)).collect(),
            FixtureSelection::One(f) => vec![*f],
        }
    }
}

/// `fixture:<table>[:<row>]`, `fixture:all`, `fixture:showcase`,
/// `file:<path>` or `random`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StateSource {
    Fixture(FixtureSelection),
    File(PathBuf),
    Random,
}

impl FromStr for StateSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "random" {
            return Ok(StateSource::Random);
        }
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err("file source needs a path".into());
            }
            return Ok(StateSource::File(PathBuf::from(path)));
        }
        let Some(rest) = s.strip_prefix("fixture:") else {
            return Err(format!("unknown state source {s:?}"));
        };
        let sel = match rest.split(':').collect::<Vec<_>>().as_slice() {
            ["all"] => FixtureSelection::All,
            ["showcase"] => FixtureSelection::One(Fixture::Showcase),
            [t] => FixtureSelection::Table(t.parse()?),
            [t, r] => {
                let table: Table = t.parse()?;
                let row: usize = r.parse().map_err(|_| format!("bad row {r:?}"))?;
                if row == 0 || row > table.rows() {
                    return Err(format!("table {table} has rows 1..={}", table.rows()));
                }
                FixtureSelection::One(Fixture::Row(table, row))
            }
            _ => return Err(format!("bad fixture source {s:?}")),
        };
        Ok(StateSource::Fixture(sel))
    }
}

impl fmt::Display for StateSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSource::Random => f.write_str("random"),
            StateSource::File(p) => write!(f, "file:{}", p.display()),
            StateSource::Fixture(FixtureSelection::All) => f.write_str("fixture:all"),
            StateSource::Fixture(FixtureSelection::Table(t)) => write!(f, "fixture:{t}"),
            StateSource::Fixture(FixtureSelection::One(Fixture::Showcase)) => f.write_str("fixture:showcase"),
            StateSource::Fixture(FixtureSelection::One(Fixture::Row(t, r))) => write!(f, "fixture:{t}:{r}"),
        }
    }
}

pub const DEFAULT_SEED: u64 = 2024;

/// Fully resolved settings. This is what the manifest records and what a
/// replay re-runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub d: usize,
    pub epsilon_grid: Vec<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub state_source: String,
    pub output_path: PathBuf,
    pub resolution: usize,
    pub threshold: f64,
    pub margin: f64,
    pub m_max: usize,
}

impl RunConfig {
    pub fn source(&self) -> StateSource {
        self.state_source.parse().expect("validated on resolve")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::new(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| ConfigError::new(e.path().to_string(), e.into_inner().message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        use ExperimentKind::*;
        let kind = self.experiment;
        if self.d < 2 {
            return Err(ConfigError::new("d", format!("local dimension must be at least 2, got {}", self.d)));
        }
        let uses_grid = matches!(kind, Nmin | Distill);
        if uses_grid && self.epsilon_grid.is_empty() {
            return Err(ConfigError::new("epsilon-grid", "grid must be nonempty"));
        }
        for (i, &e) in self.epsilon_grid.iter().enumerate() {
            if !(e > 0.0 && e < 1.0) {
                return Err(ConfigError::new(format!("epsilon-grid[{i}]"), format!("{e} is outside (0, 1)")));
            }
        }
        if kind == Montecarlo && self.samples < 1 {
            return Err(ConfigError::new("samples", "need at least one sample"));
        }
        if kind == Fidelity && self.samples != 0 && self.samples < embezzle_core::teleport::MIN_MC_SAMPLES {
            return Err(ConfigError::new(
                "samples",
                format!("Monte Carlo needs 0 or at least {} samples", embezzle_core::teleport::MIN_MC_SAMPLES),
            ));
        }
        if matches!(kind, Nmin | Montecarlo) && self.n < 1 {
            return Err(ConfigError::new("N", "need at least one candidate"));
        }
        let source: StateSource = self
            .state_source
            .parse()
            .map_err(|m: String| ConfigError::new("state-source", m))?;
        if kind == Montecarlo && source != StateSource::Random {
            return Err(ConfigError::new("state-source", "montecarlo draws its own random states"));
        }
        if kind == QutritMap {
            if self.resolution < embezzle_core::duan::MIN_RESOLUTION {
                return Err(ConfigError::new(
                    "resolution",
                    format!("must be at least {}", embezzle_core::duan::MIN_RESOLUTION),
                ));
            }
            if !(self.threshold > 0.0 && self.threshold < 1.0) {
                return Err(ConfigError::new("threshold", "must lie in (0, 1)"));
            }
            if !(self.margin >= 0.0 && self.threshold + self.margin < 1.0) {
                return Err(ConfigError::new("margin", "need margin >= 0 and threshold + margin < 1"));
            }
        }
        if matches!(kind, Embezzle | Consumption) && self.m_max < self.d.max(4) {
            return Err(ConfigError::new("m-max", format!("must be at least {}", self.d.max(4))));
        }
        Ok(())
    }
}

impl ExperimentConfig {
    /// Fills defaults for `kind` and validates. A config naming a different
    /// experiment is rejected.
    pub fn resolve(&self, kind: ExperimentKind) -> Result<RunConfig, ConfigError> {
        use ExperimentKind::*;
        if let Some(k) = self.experiment {
            if k != kind {
                return Err(ConfigError::new("experiment", format!("config is for {k}, not {kind}")));
            }
        }
        if self.epsilon.is_some() && self.epsilon_grid.is_some() {
            return Err(ConfigError::new("epsilon", "give either epsilon or epsilon-grid, not both"));
        }
        let default_grid: Vec<f64> = match kind {
            Nmin => vec![0.05, 0.075, 0.1, 0.125, 0.15],
            Distill => vec![0.1, 0.2, 0.3],
            _ => Vec::new(),
        };
        let epsilon_grid = match (self.epsilon, &self.epsilon_grid) {
            (Some(e), _) => vec![e],
            (None, Some(g)) => g.clone(),
            (None, None) => default_grid,
        };
        let default_source = match kind {
            Fidelity => "fixture:all",
            Nmin => "fixture:showcase",
            Distill => "fixture:III",
            _ => "random",
        };
        let cfg = RunConfig {
            experiment: kind,
            d: self.d.unwrap_or(match kind {
                QutritMap => 3,
                _ => 2,
            }),
            epsilon_grid,
            n: self.n.unwrap_or(100),
            samples: self.samples.unwrap_or(match kind {
                Montecarlo => 200,
                _ => 0,
            }),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            state_source: self.state_source.clone().unwrap_or_else(|| default_source.to_string()),
            output_path: self
                .output_path
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("results/{}.csv", kind.name()))),
            resolution: self.resolution.unwrap_or(100),
            threshold: self.threshold.unwrap_or(0.9),
            margin: self.margin.unwrap_or(0.01),
            m_max: self.m_max.unwrap_or(match kind {
                Consumption => 64,
                _ => 1024,
            }),
        };
        if kind == QutritMap && cfg.d != 3 {
            return Err(ConfigError::new("d", "the region map is defined for qutrits only"));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
