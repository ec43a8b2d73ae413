//! Run configuration files.
//!
//! A run file is TOML. Every key is optional and unknown keys are rejected.
//! Powers may be given in watts (`*_w`) or dBm (`*_dbm`), QoS targets in
//! bit/s (`qos_rate_bps`) or Mbit/s (`qos_rate_mbps`); per-AP and per-user
//! values accept a scalar (broadcast) or a list.
//!
//! ```toml
//! seed = 7
//! replications = 50
//! mode = "optimized-ris"        # no-ris | random-ris | optimized-ris
//! time_model = "synthetic"      # wall | synthetic
//! outage_time_s = 1.0
//!
//! [system]
//! n_aps = 2
//! antennas_per_ap = 4
//! n_users = 4
//! n_ris_elements = 16
//! noise_power_dbm = -100.0
//! max_power_dbm_per_ap = 40.0
//! qos_rate_mbps = 12.0
//!
//! [sca]                         # post-outage loop
//! first_subproblem = "beamforming"
//! inner_tol = false             # false disables a tolerance
//!
//! [pre_outage]                  # pre-outage loop, run to convergence
//! [synthetic_costs]
//! [weights]
//! [sweep]
//! ```
//!
//! [`RunConfig::echo`] writes the fully resolved configuration in linear
//! units; parsing the echo gives back the same [`RunConfig`].

use serde::{Deserialize, Serialize};

use crate::conic::{SolveLimits, SolveOptions};
use crate::error::{Error, Result};
use crate::metrics::ResilienceWeights;
use crate::sca::{ScaSettings, Subproblem, SyntheticCosts};
use crate::sim::{Mode, Scenario, TimeModel};
use crate::system::{dbm_to_watts, PowerLaw, SystemConfig};

/// A scalar broadcast to every AP or user, or one value each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn resolve(&self, n: usize, key: &str) -> Result<Vec<f64>> {
        match self {
            OneOrMany::One(x) => Ok(vec![*x; n]),
            OneOrMany::Many(v) if v.len() == n => Ok(v.clone()),
            OneOrMany::Many(v) => Err(Error::InvalidConfig(format!(
                "{key} has {} entries, expected {n}",
                v.len()
            ))),
        }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        match self {
            OneOrMany::One(x) => OneOrMany::One(f(*x)),
            OneOrMany::Many(v) => OneOrMany::Many(v.iter().map(|x| f(*x)).collect()),
        }
    }
}

/// An optional numeric setting; `false` switches it off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Toggle {
    Flag(bool),
    Value(f64),
}

impl Toggle {
    fn resolve(self, key: &str) -> Result<Option<f64>> {
        match self {
            Toggle::Flag(false) => Ok(None),
            Toggle::Flag(true) => Err(Error::InvalidConfig(format!(
                "{key} = true is meaningless; give a number or false"
            ))),
            Toggle::Value(v) => Ok(Some(v)),
        }
    }

    fn from_option(v: Option<f64>) -> Self {
        v.map_or(Toggle::Flag(false), Toggle::Value)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_aps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antennas_per_ap: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_users: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_ris_elements: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_power_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_power_w_per_ap: Option<OneOrMany>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_power_dbm_per_ap: Option<OneOrMany>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qos_rate_bps: Option<OneOrMany>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qos_rate_mbps: Option<OneOrMany>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ris_element_spacing_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area_half_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shadowing_std_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blockage_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_distance_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direct_pathloss: Option<PowerLaw>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ap_ris_pathloss: Option<PowerLaw>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ris_user_pathloss: Option<PowerLaw>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_budget_w: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_budget_v: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty_initial: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty_growth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty_restarts: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_subproblem: Option<Subproblem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_outer_rounds: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emit_intermediate: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_tol: Option<Toggle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outer_tol: Option<Toggle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_consecutive_failures: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_feas: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_obj: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_limit_s: Option<Toggle>,
}

impl ScaFile {
    fn apply(&self, mut s: ScaSettings, section: &str) -> Result<ScaSettings> {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { s.$f = v; })* };
        }
        set!(
            inner_budget_w,
            inner_budget_v,
            gap_threshold,
            penalty_weight,
            penalty_initial,
            penalty_growth,
            penalty_restarts,
            first_subproblem,
            max_outer_rounds,
            emit_intermediate,
            max_consecutive_failures
        );
        if let Some(t) = self.inner_tol {
            s.inner_tol = t.resolve(&format!("{section}.inner_tol"))?;
        }
        if let Some(t) = self.outer_tol {
            s.outer_tol = t.resolve(&format!("{section}.outer_tol"))?;
        }
        if let Some(v) = self.eps_feas {
            s.solve.eps_feas = v;
        }
        if let Some(v) = self.eps_obj {
            s.solve.eps_obj = v;
        }
        if let Some(v) = self.max_iterations {
            s.solve.limits.max_iterations = v;
        }
        if let Some(t) = self.time_limit_s {
            s.solve.limits.time_limit_s = t.resolve(&format!("{section}.time_limit_s"))?;
        }
        Ok(s)
    }

    fn normalized(s: &ScaSettings) -> Self {
        let SolveOptions {
            eps_feas,
            eps_obj,
            limits: SolveLimits {
                max_iterations,
                time_limit_s,
            },
        } = s.solve;
        Self {
            inner_budget_w: Some(s.inner_budget_w),
            inner_budget_v: Some(s.inner_budget_v),
            gap_threshold: Some(s.gap_threshold),
            penalty_weight: Some(s.penalty_weight),
            penalty_initial: Some(s.penalty_initial),
            penalty_growth: Some(s.penalty_growth),
            penalty_restarts: Some(s.penalty_restarts),
            first_subproblem: Some(s.first_subproblem),
            max_outer_rounds: Some(s.max_outer_rounds),
            emit_intermediate: Some(s.emit_intermediate),
            inner_tol: Some(Toggle::from_option(s.inner_tol)),
            outer_tol: Some(Toggle::from_option(s.outer_tol)),
            max_consecutive_failures: Some(s.max_consecutive_failures),
            eps_feas: Some(eps_feas),
            eps_obj: Some(eps_obj),
            max_iterations: Some(max_iterations),
            time_limit_s: Some(Toggle::from_option(time_limit_s)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_adaption_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beamforming_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_abs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_ada: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_rec: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0_tolerable_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights_lambda_ada: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elements_lambda_ada: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeModelName {
    Wall,
    Synthetic,
}

impl std::str::FromStr for TimeModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wall" => Ok(TimeModelName::Wall),
            "synthetic" => Ok(TimeModelName::Synthetic),
            _ => Err(Error::InvalidConfig(format!("unknown time model `{s}`"))),
        }
    }
}

/// The document as written, before defaults are filled in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_model: Option<TimeModelName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outage_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sca: Option<ScaFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pre_outage: Option<ScaFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic_costs: Option<CostsFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepFile>,
}

/// Converts a byte offset into 1-based line and column.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl RunConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let sys = self.system.clone().unwrap_or_default();
        let base = SystemConfig::default();
        let mut config = base.clone().with_dimensions(
            sys.n_aps.unwrap_or(base.n_aps),
            sys.antennas_per_ap.unwrap_or(base.antennas_per_ap),
            sys.n_users.unwrap_or(base.n_users),
            sys.n_ris_elements.unwrap_or(base.n_ris_elements),
        );
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = sys.$f { config.$f = v; })* };
        }
        set!(
            bandwidth_hz,
            wavelength_m,
            ris_element_spacing_m,
            area_half_m,
            shadowing_std_db,
            blockage_prob,
            min_distance_m,
            direct_pathloss,
            ap_ris_pathloss,
            ris_user_pathloss
        );
        config.noise_power_w = match (sys.noise_power_w, sys.noise_power_dbm) {
            (Some(_), Some(_)) => return Err(both("noise_power_w", "noise_power_dbm")),
            (Some(w), None) => w,
            (None, Some(dbm)) => dbm_to_watts(dbm),
            (None, None) => config.noise_power_w,
        };
        let n = config.n_aps;
        config.max_power_w_per_ap = match (&sys.max_power_w_per_ap, &sys.max_power_dbm_per_ap) {
            (Some(_), Some(_)) => return Err(both("max_power_w_per_ap", "max_power_dbm_per_ap")),
            (Some(w), None) => w.resolve(n, "max_power_w_per_ap")?,
            (None, Some(d)) => d.map(dbm_to_watts).resolve(n, "max_power_dbm_per_ap")?,
            (None, None) => config.max_power_w_per_ap,
        };
        let k = config.n_users;
        config.qos_rate_bps = match (&sys.qos_rate_bps, &sys.qos_rate_mbps) {
            (Some(_), Some(_)) => return Err(both("qos_rate_bps", "qos_rate_mbps")),
            (Some(r), None) => r.resolve(k, "qos_rate_bps")?,
            (None, Some(r)) => r.map(|x| x * 1e6).resolve(k, "qos_rate_mbps")?,
            (None, None) => config.qos_rate_bps,
        };
        if let Some(s) = self.seed {
            config.rng_seed = s;
        }

        let mut scenario = Scenario::new(config);
        if let Some(m) = self.mode {
            scenario.mode = m;
        }
        if let Some(r) = self.replications {
            scenario.replications = r;
        }
        if let Some(t) = self.outage_time_s {
            scenario.outage_time_s = t;
        }
        if let Some(s) = &self.sca {
            scenario.settings = s.apply(scenario.settings, "sca")?;
        }
        if let Some(s) = &self.pre_outage {
            scenario.pre_outage = s.apply(scenario.pre_outage, "pre_outage")?;
        }
        let c = self.synthetic_costs.clone().unwrap_or_default();
        let d = SyntheticCosts::default();
        let costs = SyntheticCosts {
            rate_adaption_s: c.rate_adaption_s.unwrap_or(d.rate_adaption_s),
            beamforming_s: c.beamforming_s.unwrap_or(d.beamforming_s),
            phase_s: c.phase_s.unwrap_or(d.phase_s),
        };
        scenario.time_model = match self.time_model.unwrap_or(TimeModelName::Synthetic) {
            TimeModelName::Wall => TimeModel::Wall,
            TimeModelName::Synthetic => TimeModel::Synthetic(costs),
        };
        let w = self.weights.clone().unwrap_or_default();
        let dw = scenario.weights;
        // A lone λ2 implies the reactionary split λ1 = 0, λ3 = 1 − λ2.
        let lambda_ada = w.lambda_ada.unwrap_or(dw.lambda_ada);
        let (lambda_abs, lambda_rec) = match (w.lambda_abs, w.lambda_rec) {
            (None, None) => (0.0, 1.0 - lambda_ada),
            (a, r) => (a.unwrap_or(dw.lambda_abs), r.unwrap_or(dw.lambda_rec)),
        };
        scenario.weights = ResilienceWeights {
            lambda_abs,
            lambda_ada,
            lambda_rec,
            t0_tolerable_s: w.t0_tolerable_s.unwrap_or(dw.t0_tolerable_s),
        };

        let sw = self.sweep.clone().unwrap_or_default();
        let defaults = SweepGrid::default();
        let sweep = SweepGrid {
            weights_lambda_ada: sw.weights_lambda_ada.unwrap_or(defaults.weights_lambda_ada),
            elements: sw.elements.unwrap_or(defaults.elements),
            elements_lambda_ada: sw.elements_lambda_ada.unwrap_or(defaults.elements_lambda_ada),
        };
        let run = RunConfig {
            scenario,
            sweep,
            synthetic_costs: costs,
        };
        run.validate()?;
        Ok(run)
    }
}

fn both(a: &str, b: &str) -> Error {
    Error::InvalidConfig(format!("give either {a} or {b}, not both"))
}

/// Weight points of the sweeps (`λ1 = 0`, `λ3 = 1 − λ2`, `T_0` from the
/// scenario weights) and the RIS sizes of the element sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub weights_lambda_ada: Vec<f64>,
    pub elements: Vec<usize>,
    pub elements_lambda_ada: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            weights_lambda_ada: (0..=10).map(|i| i as f64 / 10.0).collect(),
            elements: vec![4, 16, 64],
            elements_lambda_ada: vec![0.15, 0.5, 0.85],
        }
    }
}

fn reactionary_grid(lambdas: &[f64], t0: f64) -> Result<Vec<ResilienceWeights>> {
    if lambdas.is_empty() {
        return Err(Error::InvalidConfig("sweep weight list is empty".into()));
    }
    lambdas.iter().map(|l| ResilienceWeights::reactionary(*l, t0)).collect()
}

impl SweepGrid {
    pub fn weight_points(&self, t0_tolerable_s: f64) -> Result<Vec<ResilienceWeights>> {
        reactionary_grid(&self.weights_lambda_ada, t0_tolerable_s)
    }

    pub fn element_points(&self, t0_tolerable_s: f64) -> Result<Vec<ResilienceWeights>> {
        reactionary_grid(&self.elements_lambda_ada, t0_tolerable_s)
    }
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub sweep: SweepGrid,
    /// Kept even under the wall clock so that a time-model override can
    /// switch back.
    pub synthetic_costs: SyntheticCosts,
}

/// Command-line overrides applied on top of a run file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub time_model: Option<TimeModelName>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfigFile::default().resolve().expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        RunConfigFile::parse(text)?.resolve()
    }

    /// Reads and resolves a run file.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Self {
        if let Some(seed) = o.seed {
            self.scenario.config.rng_seed = seed;
        }
        if let Some(m) = o.mode {
            self.scenario.mode = m;
        }
        match o.time_model {
            Some(TimeModelName::Wall) => self.scenario.time_model = TimeModel::Wall,
            Some(TimeModelName::Synthetic) => {
                self.scenario.time_model = TimeModel::Synthetic(self.synthetic_costs)
            }
            None => {}
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let t0 = self.scenario.weights.t0_tolerable_s;
        self.sweep.weight_points(t0)?;
        self.sweep.element_points(t0)?;
        if self.sweep.elements.is_empty() {
            return Err(Error::InvalidConfig("sweep.elements is empty".into()));
        }
        for &m in &self.sweep.elements {
            let side = (m as f64).sqrt().round() as usize;
            if side * side != m {
                return Err(Error::InvalidConfig(format!(
                    "sweep.elements: {m} is not a perfect square"
                )));
            }
        }
        Ok(())
    }

    /// Every setting spelled out, powers in watts and rates in bit/s.
    pub fn normalized(&self) -> RunConfigFile {
        let s = &self.scenario;
        let c = &s.config;
        let costs = self.synthetic_costs;
        RunConfigFile {
            seed: Some(c.rng_seed),
            replications: Some(s.replications),
            mode: Some(s.mode),
            time_model: Some(match s.time_model {
                TimeModel::Wall => TimeModelName::Wall,
                TimeModel::Synthetic(_) => TimeModelName::Synthetic,
            }),
            outage_time_s: Some(s.outage_time_s),
            system: Some(SystemFile {
                n_aps: Some(c.n_aps),
                antennas_per_ap: Some(c.antennas_per_ap),
                n_users: Some(c.n_users),
                n_ris_elements: Some(c.n_ris_elements),
                bandwidth_hz: Some(c.bandwidth_hz),
                noise_power_w: Some(c.noise_power_w),
                max_power_w_per_ap: Some(OneOrMany::Many(c.max_power_w_per_ap.clone())),
                qos_rate_bps: Some(OneOrMany::Many(c.qos_rate_bps.clone())),
                wavelength_m: Some(c.wavelength_m),
                ris_element_spacing_m: Some(c.ris_element_spacing_m),
                area_half_m: Some(c.area_half_m),
                shadowing_std_db: Some(c.shadowing_std_db),
                blockage_prob: Some(c.blockage_prob),
                min_distance_m: Some(c.min_distance_m),
                direct_pathloss: Some(c.direct_pathloss),
                ap_ris_pathloss: Some(c.ap_ris_pathloss),
                ris_user_pathloss: Some(c.ris_user_pathloss),
                ..SystemFile::default()
            }),
            sca: Some(ScaFile::normalized(&s.settings)),
            pre_outage: Some(ScaFile::normalized(&s.pre_outage)),
            synthetic_costs: Some(CostsFile {
                rate_adaption_s: Some(costs.rate_adaption_s),
                beamforming_s: Some(costs.beamforming_s),
                phase_s: Some(costs.phase_s),
            }),
            weights: Some(WeightsFile {
                lambda_abs: Some(s.weights.lambda_abs),
                lambda_ada: Some(s.weights.lambda_ada),
                lambda_rec: Some(s.weights.lambda_rec),
                t0_tolerable_s: Some(s.weights.t0_tolerable_s),
            }),
            sweep: Some(SweepFile {
                weights_lambda_ada: Some(self.sweep.weights_lambda_ada.clone()),
                elements: Some(self.sweep.elements.clone()),
                elements_lambda_ada: Some(self.sweep.elements_lambda_ada.clone()),
            }),
        }
    }

    /// The normalized configuration as TOML.
    pub fn echo(&self) -> String {
        let text = toml::to_string(&self.normalized()).expect("config serializes");
        text.lines().map(|l| compact_floats(l) + "\n").collect()
    }
}

/// Rewrites very small or large floats of a `key = value` line in exponent
/// form (`1e-13` instead of `0.0000000000001`).
fn compact_floats(line: &str) -> String {
    let Some((key, value)) = line.split_once(" = ") else {
        return line.to_string();
    };
    if value.contains('"') {
        return line.to_string();
    }
    let mut out = format!("{key} = ");
    let mut token = String::new();
    let flush = |token: &mut String, out: &mut String| {
        match token.parse::<f64>() {
            Ok(x) if token.contains('.') && x != 0.0 && !(1e-3..1e6).contains(&x.abs()) => {
                out.push_str(&format!("{x:e}"))
            }
            _ => out.push_str(token),
        }
        token.clear();
    };
    for c in value.chars() {
        if matches!(c, '[' | ']' | ',' | ' ') {
            flush(&mut token, &mut out);
            out.push(c);
        } else {
            token.push(c);
        }
    }
    flush(&mut token, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_full_scale_defaults() {
        let c = RunConfig::parse("").unwrap();
        let s = &c.scenario.config;
        assert_eq!((s.n_aps, s.antennas_per_ap, s.n_users, s.n_ris_elements), (3, 14, 14, 196));
        assert_eq!(s.bandwidth_hz, 1.0e7);
        assert_eq!(s.noise_power_w, 1.0e-13);
        assert_eq!(s.max_power_w_per_ap, vec![10.0; 3]);
        assert_eq!(s.qos_rate_bps, vec![12e6; 14]);
        assert_eq!(c.scenario.mode, Mode::OptimizedRis);
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn dbm_and_mbps_are_converted() {
        let c = RunConfig::parse(
            "[system]\nn_aps = 2\nn_users = 3\nnoise_power_dbm = -90\n\
             max_power_dbm_per_ap = [30, 20]\nqos_rate_mbps = 2.5\n",
        )
        .unwrap();
        let s = &c.scenario.config;
        assert_eq!(s.noise_power_w, 1e-12);
        assert_eq!(s.max_power_w_per_ap, vec![1.0, 0.1]);
        assert_eq!(s.qos_rate_bps, vec![2.5e6; 3]);
    }

    #[test]
    fn watts_and_dbm_agree() {
        let a = RunConfig::parse("[system]\nmax_power_dbm_per_ap = 33\nnoise_power_dbm = -104").unwrap();
        let b = RunConfig::parse("[system]\nmax_power_w_per_ap = 1.9952623149688795\nnoise_power_w = 3.981071705534973e-14")
            .unwrap();
        for (x, y) in a.scenario.config.max_power_w_per_ap.iter().zip(&b.scenario.config.max_power_w_per_ap) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!((a.scenario.config.noise_power_w - b.scenario.config.noise_power_w).abs() < 1e-27);
    }

    #[test]
    fn conflicting_units_are_rejected() {
        let e = RunConfig::parse("[system]\nnoise_power_w = 1e-13\nnoise_power_dbm = -100").unwrap_err();
        assert!(matches!(e, Error::InvalidConfig(_)));
    }

    #[test]
    fn wrong_list_length_is_rejected() {
        let e = RunConfig::parse("[system]\nn_aps = 2\nmax_power_w_per_ap = [1, 2, 3]").unwrap_err();
        assert!(e.to_string().contains("expected 2"));
    }

    #[test]
    fn unknown_key_reports_position() {
        let e = RunConfig::parse("seed = 1\n\n[system]\nn_ap = 2\n").unwrap_err();
        match e {
            Error::Parse { line, column, message } => {
                assert_eq!((line, column), (4, 1));
                assert!(message.contains("n_ap"), "{message}");
            }
            other => panic!("{other}"),
        }
        let e = RunConfig::parse("[sca]\ninner_budget_w = \"x\"").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn echo_round_trips() {
        let text = "seed = 9\nmode = \"random-ris\"\ntime_model = \"wall\"\nreplications = 3\n\
                    [system]\nn_aps = 2\nantennas_per_ap = 4\nn_users = 4\nn_ris_elements = 16\n\
                    max_power_dbm_per_ap = 37\n[sca]\ninner_tol = 1e-3\nfirst_subproblem = \"phase\"\n\
                    [pre_outage]\nouter_tol = false\ntime_limit_s = 5\n\
                    [weights]\nlambda_ada = 0.85\nt0_tolerable_s = 0.2\n[sweep]\nelements = [0, 9]\n";
        let c = RunConfig::parse(text).unwrap();
        let echo = c.echo();
        assert_eq!(RunConfig::parse(&echo).unwrap(), c);
        assert_eq!(RunConfig::parse(&echo).unwrap().echo(), echo);
        let d = RunConfig::default();
        assert_eq!(RunConfig::parse(&d.echo()).unwrap(), d);
    }

    #[test]
    fn default_echo_lists_linear_units() {
        let f = RunConfig::default().normalized();
        let s = f.system.unwrap();
        assert_eq!(s.bandwidth_hz, Some(1.0e7));
        assert_eq!(s.noise_power_w, Some(1.0e-13));
        assert_eq!(s.max_power_w_per_ap, Some(OneOrMany::Many(vec![10.0; 3])));
        assert!(s.noise_power_dbm.is_none() && s.max_power_dbm_per_ap.is_none());
        let echo = RunConfig::default().echo();
        assert!(echo.contains("bandwidth_hz = 1e7\n"), "{echo}");
        assert!(echo.contains("noise_power_w = 1e-13\n"));
        assert!(echo.contains("max_power_w_per_ap = [10.0, 10.0, 10.0]\n"));
    }

    #[test]
    fn compact_floats_keeps_values() {
        assert_eq!(compact_floats("a = [0.0000001, 2.5, 12000000.0, 3]"), "a = [1e-7, 2.5, 1.2e7, 3]");
        assert_eq!(compact_floats("mode = \"no-ris\""), "mode = \"no-ris\"");
        assert_eq!(compact_floats("[system]"), "[system]");
    }

    #[test]
    fn lone_lambda_ada_is_reactionary() {
        let c = RunConfig::parse("[weights]\nlambda_ada = 0.15").unwrap();
        let w = c.scenario.weights;
        assert_eq!((w.lambda_abs, w.lambda_ada), (0.0, 0.15));
        assert!((w.lambda_rec - 0.85).abs() < 1e-15);
        assert!(RunConfig::parse("[weights]\nlambda_ada = 0.5\nlambda_rec = 0.7").is_err());
    }

    #[test]
    fn sca_overrides_keep_scaled_penalty() {
        let c = RunConfig::parse("[system]\nn_users = 4\n[sca]\ngap_threshold = 0.01\ninner_tol = false").unwrap();
        assert_eq!(c.scenario.settings.gap_threshold, 0.01);
        assert_eq!(c.scenario.settings.penalty_weight, 400.0);
        assert_eq!(c.scenario.settings.inner_tol, None);
        assert_eq!(c.scenario.pre_outage.inner_tol, Some(1e-4));
        assert!(RunConfig::parse("[sca]\ninner_tol = true").is_err());
    }

    #[test]
    fn overrides_replace_file_values() {
        let c = RunConfig::parse("seed = 1\ntime_model = \"wall\"\n[synthetic_costs]\nphase_s = 0.5").unwrap();
        let o = Overrides {
            seed: Some(7),
            mode: Some(Mode::NoRis),
            time_model: Some(TimeModelName::Synthetic),
        };
        let c = c.with_overrides(&o);
        assert_eq!(c.scenario.config.rng_seed, 7);
        assert_eq!(c.scenario.mode, Mode::NoRis);
        match c.scenario.time_model {
            TimeModel::Synthetic(k) => assert_eq!(k.phase_s, 0.5),
            TimeModel::Wall => panic!("expected synthetic"),
        }
        assert_eq!(RunConfig::parse(&c.echo()).unwrap(), c);
    }

    #[test]
    fn bad_sweep_sizes_are_rejected() {
        assert!(RunConfig::parse("[sweep]\nelements = [10]").is_err());
        assert!(RunConfig::parse("[sweep]\nweights_lambda_ada = []").is_err());
    }
}
