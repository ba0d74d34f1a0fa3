//! Scenario configuration, read from and written to JSON.
//!
//! Field names follow the usual notation: `L` APs with `M` antennas each and
//! `K` UEs with `N` antennas each. Everything except those four counts has a
//! default matching the reference deployment (0.5 km square, 50 MHz, 9 dB
//! noise figure, 1 W per AP, 200 m reference distance).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::SweepSpec;
use crate::wmmse::SolverConfig;

/// How the APs are grouped into phase-aligned clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    /// Fully coherent: one cluster holding every AP.
    Fc,
    /// Fully non-coherent: every AP is its own cluster.
    Fnc,
    /// Zone-based phase-aligned clustering.
    #[default]
    Pcnc,
    /// Nearest-neighbour clusters of equal size (baseline).
    EvenCluster,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Fc => "FC",
            Mode::Fnc => "FNC",
            Mode::Pcnc => "PCNC",
            Mode::EvenCluster => "EVEN_CLUSTER",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "FC" => Ok(Mode::Fc),
            "FNC" => Ok(Mode::Fnc),
            "PCNC" => Ok(Mode::Pcnc),
            "EVEN_CLUSTER" => Ok(Mode::EvenCluster),
            other => Err(Error::config("mode", format!("unknown mode `{other}`"))),
        }
    }
}

/// Stream allocation policy for every (UE, cluster) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AllocationMode {
    Fixed(usize),
    Greedy,
    Even(usize),
    Random,
    /// `d = min(M, N)` for every pair.
    Full,
}

impl Default for AllocationMode {
    fn default() -> Self {
        AllocationMode::Fixed(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Precoding {
    #[default]
    Wmmse,
    /// Maximum-ratio precoding on the dominant right singular vectors.
    Mr,
}

fn default_area_side() -> f64 {
    500.0
}
fn default_min_ap_spacing() -> f64 {
    50.0
}
fn default_bandwidth() -> f64 {
    5e7
}
fn default_noise_figure_db() -> f64 {
    9.0
}
fn default_tx_power() -> f64 {
    1.0
}
fn default_ref_distance() -> f64 {
    200.0
}
fn default_trials() -> usize {
    100
}
fn default_min_streams() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "L")]
    pub num_aps: usize,
    #[serde(rename = "M")]
    pub ap_antennas: usize,
    #[serde(rename = "K")]
    pub num_ues: usize,
    #[serde(rename = "N")]
    pub ue_antennas: usize,
    /// Side of the square (wrap-around) deployment area, meters.
    #[serde(default = "default_area_side")]
    pub area_side: f64,
    #[serde(default = "default_min_ap_spacing")]
    pub min_ap_spacing: f64,
    /// Hz.
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    #[serde(default = "default_noise_figure_db")]
    pub noise_figure_db: f64,
    /// Maximum transmit power per AP, watts.
    #[serde(default = "default_tx_power")]
    pub tx_power: f64,
    /// Reference distance `D` for phase alignment, meters.
    #[serde(default = "default_ref_distance")]
    pub ref_distance: f64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub allocation: AllocationMode,
    #[serde(default)]
    pub precoding: Precoding,
    /// Cluster size for `EVEN_CLUSTER`; defaults per realization to
    /// `ceil(L / Lc)` where `Lc` is the zone-based cluster count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub even_cluster_size: Option<usize>,
    /// Lower bound on streams per pair for greedy allocation.
    #[serde(default = "default_min_streams")]
    pub min_streams: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

/// Converts a deserialization error into a field-level config error.
pub fn schema_error(e: serde_json::Error) -> Error {
    let message = e.to_string();
    let field = message
        .split('`')
        .nth(1)
        .filter(|_| message.contains("field"))
        .unwrap_or("<document>")
        .to_string();
    Error::InvalidConfig { field, message }
}

impl ScenarioConfig {
    /// Reference deployment with the given counts and all other fields at their defaults.
    pub fn new(num_aps: usize, ap_antennas: usize, num_ues: usize, ue_antennas: usize) -> Self {
        Self {
            num_aps,
            ap_antennas,
            num_ues,
            ue_antennas,
            area_side: default_area_side(),
            min_ap_spacing: default_min_ap_spacing(),
            bandwidth: default_bandwidth(),
            noise_figure_db: default_noise_figure_db(),
            tx_power: default_tx_power(),
            ref_distance: default_ref_distance(),
            mode: Mode::default(),
            allocation: AllocationMode::default(),
            precoding: Precoding::default(),
            even_cluster_size: None,
            min_streams: default_min_streams(),
            seed: 0,
            trials: default_trials(),
            solver: SolverConfig::default(),
            sweep: None,
        }
    }

    /// Parses and validates. Syntax and schema errors name the offending field
    /// when serde reports one.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(schema_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn max_streams(&self) -> usize {
        self.ap_antennas.min(self.ue_antennas)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("L", self.num_aps),
            ("M", self.ap_antennas),
            ("K", self.num_ues),
            ("N", self.ue_antennas),
            ("trials", self.trials),
            ("min_streams", self.min_streams),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if !(self.area_side > 0.0) || !self.area_side.is_finite() {
            return Err(Error::config("area_side", "must be positive"));
        }
        if !(self.min_ap_spacing >= 0.0) || self.min_ap_spacing >= self.area_side {
            return Err(Error::config(
                "min_ap_spacing",
                "must be non-negative and smaller than area_side",
            ));
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::config("bandwidth", "must be positive"));
        }
        if !self.noise_figure_db.is_finite() {
            return Err(Error::config("noise_figure_db", "must be finite"));
        }
        if !(self.tx_power > 0.0) || !self.tx_power.is_finite() {
            return Err(Error::config("tx_power", "must be positive"));
        }
        if !(self.ref_distance >= 0.0) {
            return Err(Error::config("ref_distance", "must be non-negative"));
        }
        match self.allocation {
            AllocationMode::Fixed(d) | AllocationMode::Even(d) => {
                if d == 0 || d > self.ue_antennas {
                    return Err(Error::config(
                        "allocation",
                        format!("stream count {d} must lie in 1..={}", self.ue_antennas),
                    ));
                }
            }
            AllocationMode::Greedy | AllocationMode::Random | AllocationMode::Full => {}
        }
        if self.min_streams > self.max_streams() {
            return Err(Error::config(
                "min_streams",
                format!("must not exceed min(M, N) = {}", self.max_streams()),
            ));
        }
        if let Some(0) = self.even_cluster_size {
            return Err(Error::config("even_cluster_size", "must be at least 1"));
        }
        self.solver.validate()?;
        Ok(())
    }
}
