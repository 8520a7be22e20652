//! Run configuration, loadable from TOML.

use serde::{Deserialize, Serialize};

use crate::characteristics::SolverConfig;
use crate::error::{Error, Result};
use crate::measures::{ArmMeasure, MassMeasure};
use crate::models::{InitialData, Model, Solver};
use crate::oracle::Flavor;

/// Initial condition as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Monodisperse,
    Discrete {
        atoms: Vec<(f64, f64)>,
    },
    Exponential,
    PowerLaw {
        p: f64,
    },
    /// `(arms, mass, weight)` triples.
    Arms {
        weights: Vec<(u32, u32, f64)>,
    },
    /// Arm law `μ(a)`, `a = 0, 1, ...`, all particles of mass one.
    ArmsMonodisperse {
        mu: Vec<f64>,
    },
}

impl InitialSpec {
    pub fn build(&self) -> Result<InitialData> {
        Ok(match self {
            InitialSpec::Monodisperse => InitialData::Mass(MassMeasure::Monodisperse),
            InitialSpec::Discrete { atoms } => InitialData::Mass(MassMeasure::discrete(atoms.clone())?),
            InitialSpec::Exponential => InitialData::Mass(MassMeasure::Exponential),
            InitialSpec::PowerLaw { p } => InitialData::Mass(MassMeasure::power_law(*p)?),
            InitialSpec::Arms { weights } => InitialData::Arms(ArmMeasure::new(weights.clone())?),
            InitialSpec::ArmsMonodisperse { mu } => InitialData::Arms(ArmMeasure::monodisperse(mu)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub count: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::Linear
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid { start: 0.0, end: 4.0, count: 81, spacing: Spacing::Linear }
    }
}

impl TimeGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.start >= 0.0 && self.end > self.start && self.end.is_finite()) {
            return Err(Error::Config(format!("time grid needs end > start >= 0, got [{}, {}]", self.start, self.end)));
        }
        if self.count < 2 {
            return Err(Error::Config(format!("time grid needs count >= 2, got {}", self.count)));
        }
        if self.spacing == Spacing::Geometric && self.start <= 0.0 {
            return Err(Error::Config("geometric time grid needs start > 0".into()));
        }
        Ok(())
    }

    /// Grid points; the last one is exactly `end`.
    pub fn points(&self) -> Vec<f64> {
        let n = self.count - 1;
        (0..=n)
            .map(|i| {
                if i == n {
                    return self.end;
                }
                let f = i as f64 / n as f64;
                match self.spacing {
                    Spacing::Linear => self.start + (self.end - self.start) * f,
                    Spacing::Geometric => self.start * (self.end / self.start).powf(f),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Output {
    Moments,
    Trajectory,
    Concentrations,
    Limits,
    Validate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Defaults to the truncation matching the model.
    pub flavor: Option<Flavor>,
    pub m_max: usize,
    pub a_max: usize,
    pub dt: f64,
    pub tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { flavor: None, m_max: 200, a_max: 120, dt: 1e-3, tol: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesConfig {
    /// Truncation order `N` of the classic series.
    pub order: usize,
    pub a_max: usize,
    pub m_max: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig { order: 64, a_max: 10, m_max: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    pub initial: InitialSpec,
    #[serde(default)]
    pub time_grid: TimeGrid,
    #[serde(default)]
    pub outputs: Vec<Output>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub series: SeriesConfig,
}

impl RunConfig {
    pub fn new(model: Model, initial: InitialSpec) -> Self {
        RunConfig {
            model,
            initial,
            time_grid: TimeGrid::default(),
            outputs: Vec::new(),
            solver: SolverConfig::default(),
            oracle: OracleConfig::default(),
            series: SeriesConfig::default(),
        }
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks the grid and solver settings and builds the solver, which
    /// rejects incompatible model/measure pairs.
    pub fn validate(&self) -> Result<Solver> {
        self.time_grid.validate()?;
        self.solver.validate()?;
        if !(self.oracle.dt > 0.0) || self.oracle.m_max < 2 || self.oracle.a_max < 1 {
            return Err(Error::Config("oracle needs dt > 0, m_max >= 2, a_max >= 1".into()));
        }
        let initial = self.initial.build().map_err(|e| Error::Config(e.to_string()))?;
        Solver::new(self.model, initial, self.solver).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_is_idempotent() {
        let mut c = RunConfig::new(Model::FloryArms, InitialSpec::ArmsMonodisperse { mu: vec![0.5, 0.25, 0.0, 0.25] });
        c.outputs = vec![Output::Trajectory, Output::Limits];
        c.oracle.flavor = Some(Flavor::GelInteracting);
        let s1 = c.to_toml().unwrap();
        let parsed = RunConfig::from_toml(&s1).unwrap();
        assert_eq!(parsed, c);
        assert_eq!(parsed.to_toml().unwrap(), s1);
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let c = RunConfig::from_toml(
            "model = \"smoluchowski\"\n[initial]\nkind = \"discrete\"\natoms = [[1.0, 0.5], [2.0, 0.25]]\n",
        )
        .unwrap();
        assert_eq!(c.time_grid, TimeGrid::default());
        assert_eq!(c.solver, SolverConfig::default());
        assert!(c.validate().is_ok());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = RunConfig::new(Model::Flory, InitialSpec::PowerLaw { p: 1.5 });
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.model = Model::Smoluchowski;
        assert!(c.validate().is_ok());
        c.time_grid.count = 0;
        assert!(c.validate().is_err());
        c.time_grid = TimeGrid { start: 0.0, end: 1.0, count: 5, spacing: Spacing::Geometric };
        assert!(c.validate().is_err());
        assert!(RunConfig::from_toml("model = \"nope\"").is_err());
    }

    #[test]
    fn grid_points() {
        let g = TimeGrid { start: 0.0, end: 4.0, count: 81, spacing: Spacing::Linear };
        let p = g.points();
        assert_eq!(p.len(), 81);
        assert_eq!(p[20], 1.0);
        assert_eq!(p[80], 4.0);
        let g = TimeGrid { start: 1.0, end: 100.0, count: 3, spacing: Spacing::Geometric };
        assert_eq!(g.points(), vec![1.0, 10.0, 100.0]);
    }
}
