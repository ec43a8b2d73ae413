use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ResilienceWeights;
use crate::sca::{ScaSettings, SyntheticCosts};
use crate::system::SystemConfig;

/// How the RIS takes part in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// The RIS is absent.
    NoRis,
    /// Uniformly random fixed phases; only beamformers are optimized.
    RandomRis,
    /// Beamformers and phases are optimized alternately.
    OptimizedRis,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::NoRis, Mode::RandomRis, Mode::OptimizedRis];

    pub fn name(self) -> &'static str {
        match self {
            Mode::NoRis => "no-ris",
            Mode::RandomRis => "random-ris",
            Mode::OptimizedRis => "optimized-ris",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s || m.name().replace('-', "_") == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown mode `{s}`")))
    }
}

/// Source of post-outage timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeModel {
    /// Measured wall-clock time; machine dependent.
    Wall,
    /// Fixed cost per operation; deterministic.
    Synthetic(SyntheticCosts),
}

impl TimeModel {
    pub fn name(&self) -> &'static str {
        match self {
            TimeModel::Wall => "wall",
            TimeModel::Synthetic(_) => "synthetic",
        }
    }
}

/// One experiment: a system, a RIS mode, optimizer settings and the outage
/// timeline, replicated over independent seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: SystemConfig,
    pub mode: Mode,
    /// Post-outage mechanism.
    pub settings: ScaSettings,
    /// Pre-outage optimization, run to convergence and not timed.
    pub pre_outage: ScaSettings,
    /// `t_0`.
    pub outage_time_s: f64,
    pub weights: ResilienceWeights,
    pub replications: usize,
    pub time_model: TimeModel,
}

impl Scenario {
    /// Optimized RIS with the alternating schedule after the outage, one
    /// replication, synthetic time and an outage at `t_0 = 1 s`.
    pub fn new(config: SystemConfig) -> Self {
        let k = config.n_users;
        Self {
            config,
            mode: Mode::OptimizedRis,
            settings: ScaSettings::for_users(k),
            pre_outage: ScaSettings::for_users(k).converged(1e-4),
            outage_time_s: 1.0,
            weights: ResilienceWeights::default(),
            replications: 1,
            time_model: TimeModel::Synthetic(SyntheticCosts::default()),
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.settings.validate()?;
        self.pre_outage.validate()?;
        self.weights.validate()?;
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        if !self.outage_time_s.is_finite() {
            return Err(Error::InvalidConfig("outage_time_s must be finite".into()));
        }
        if let TimeModel::Synthetic(c) = &self.time_model {
            c.validate()?;
        }
        Ok(())
    }
}
