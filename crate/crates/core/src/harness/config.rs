//! TOML experiment configuration.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{EmsError, Result};
use crate::metrics::TrainingParams;
use crate::model::{
    dbm_to_mw, mw_to_dbm, ChannelParams, MulticastDemand, DEFAULT_GROUP_SIZE, DEFAULT_H_MAX, DEFAULT_REGION_SIDE_M,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "EMS", alias = "ems")]
    Ems,
    #[serde(rename = "D2D", alias = "d2d")]
    D2d,
    #[serde(rename = "FDMAC", alias = "fdmac")]
    Fdmac,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Ems, Scheme::D2d, Scheme::Fdmac];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ems => "EMS",
            Scheme::D2d => "D2D",
            Scheme::Fdmac => "FDMAC",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = EmsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "EMS" => Ok(Scheme::Ems),
            "D2D" => Ok(Scheme::D2d),
            "FDMAC" => Ok(Scheme::Fdmac),
            _ => Err(EmsError::Config(format!("unknown scheme `{s}`"))),
        }
    }
}

/// Parameter varied across the points of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Multicast data size in bits.
    Demand,
    GroupSize,
    /// P_max in dBm.
    PMaxDbm,
    /// Side of the square region in meters.
    RegionSide,
    /// Half-power beamwidth in degrees.
    #[serde(rename = "theta_3db", alias = "theta3db")]
    Theta3db,
    HMax,
    Sigma,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Demand => "demand",
            SweepVariable::GroupSize => "group_size",
            SweepVariable::PMaxDbm => "p_max_dbm",
            SweepVariable::RegionSide => "region_side",
            SweepVariable::Theta3db => "theta_3db",
            SweepVariable::HMax => "h_max",
            SweepVariable::Sigma => "sigma",
        }
    }

    fn is_integral(self) -> bool {
        matches!(self, SweepVariable::GroupSize | SweepVariable::HMax)
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub region_side_m: f64,
    pub group_size: usize,
    pub h_max: usize,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            region_side_m: DEFAULT_REGION_SIDE_M,
            group_size: DEFAULT_GROUP_SIZE,
            h_max: DEFAULT_H_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Experiment {
    pub name: String,
    pub sweep_variable: SweepVariable,
    /// Empty means a single point at the base value.
    pub sweep_values: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    /// Explicit per-trial seeds; derived from `master_seed` when empty.
    pub seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            name: "run".into(),
            sweep_variable: SweepVariable::Demand,
            sweep_values: Vec::new(),
            trials: 50,
            master_seed: 1,
            seeds: Vec::new(),
            schemes: Scheme::ALL.to_vec(),
        }
    }
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `i`: `splitmix64(master + i·0x9E3779B97F4A7C15)`.
///
/// It depends only on the master seed and the trial index, so every sweep point
/// sees the same trial seeds and adding points leaves existing trials unchanged.
pub fn trial_seed(master: u64, i: usize) -> u64 {
    splitmix64(master.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

impl Experiment {
    pub fn trial_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.trials).map(|i| trial_seed(self.master_seed, i)).collect()
        } else {
            self.seeds.clone()
        }
    }
}

/// Everything needed to run one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub channel: ChannelParams,
    pub demand_bits: f64,
    pub topology: TopologyConfig,
    pub training: TrainingParams,
    pub experiment: Experiment,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            channel: ChannelParams::default(),
            demand_bits: MulticastDemand::default().bits(),
            topology: TopologyConfig::default(),
            training: TrainingParams::default(),
            experiment: Experiment::default(),
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(s).map_err(|e| EmsError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| EmsError::Config(e.to_string()))
    }

    pub fn demand(&self) -> Result<MulticastDemand> {
        MulticastDemand::new(self.demand_bits)
    }

    /// Current base value of a sweep variable.
    pub fn get(&self, var: SweepVariable) -> f64 {
        match var {
            SweepVariable::Demand => self.demand_bits,
            SweepVariable::GroupSize => self.topology.group_size as f64,
            SweepVariable::PMaxDbm => mw_to_dbm(self.channel.p_max_mw),
            SweepVariable::RegionSide => self.topology.region_side_m,
            SweepVariable::Theta3db => self.channel.theta_3db_deg,
            SweepVariable::HMax => self.topology.h_max as f64,
            SweepVariable::Sigma => self.channel.sigma,
        }
    }

    /// Copy with one variable overridden.
    pub fn with(&self, var: SweepVariable, value: f64) -> Result<Self> {
        if var.is_integral() && !(value >= 1.0 && value.fract() == 0.0) {
            return Err(EmsError::Config(format!("{var} must be a positive integer, got {value}")));
        }
        let mut c = self.clone();
        match var {
            SweepVariable::Demand => c.demand_bits = value,
            SweepVariable::GroupSize => c.topology.group_size = value as usize,
            SweepVariable::PMaxDbm => c.channel.p_max_mw = dbm_to_mw(value),
            SweepVariable::RegionSide => c.topology.region_side_m = value,
            SweepVariable::Theta3db => c.channel.theta_3db_deg = value,
            SweepVariable::HMax => c.topology.h_max = value as usize,
            SweepVariable::Sigma => c.channel.sigma = value,
        }
        Ok(c)
    }

    /// Sweep points after filling in the base value when none are listed.
    pub fn sweep_points(&self) -> Vec<f64> {
        if self.experiment.sweep_values.is_empty() {
            vec![self.get(self.experiment.sweep_variable)]
        } else {
            self.experiment.sweep_values.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let exp = &self.experiment;
        if exp.schemes.is_empty() {
            return Err(EmsError::Config("scheme set is empty".into()));
        }
        if exp.trials == 0 {
            return Err(EmsError::Config("trials must be at least 1".into()));
        }
        if !exp.seeds.is_empty() && exp.seeds.len() != exp.trials {
            return Err(EmsError::Config(format!(
                "{} seeds listed for {} trials",
                exp.seeds.len(),
                exp.trials
            )));
        }
        if exp.name.is_empty() || exp.name.contains(['/', '\\']) {
            return Err(EmsError::Config(format!("experiment name `{}` is not a file stem", exp.name)));
        }
        for v in self.sweep_points() {
            let point = self.with(exp.sweep_variable, v)?;
            point.channel.validate()?;
            point.demand()?;
            if !(point.topology.region_side_m > 0.0 && point.topology.region_side_m.is_finite()) {
                return Err(EmsError::Config("region_side_m must be positive".into()));
            }
            if point.topology.group_size == 0 {
                return Err(EmsError::EmptyGroup);
            }
            if point.topology.h_max == 0 {
                return Err(EmsError::Config("h_max must be at least 1".into()));
            }
        }
        Ok(())
    }
}
