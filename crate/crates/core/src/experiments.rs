//! Monte Carlo harness: realization → clusters → stream allocation → solve,
//! repeated over seeded trials, plus parameter sweeps.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{greedy_allocate, random_allocation};
use crate::channel::{noise_power, NetworkRealization};
use crate::clustering::{ap_channel_gains, build_zones, cluster_aps, even_distance_clustering, ClusterSet};
use crate::config::{AllocationMode, Mode, Precoding, ScenarioConfig};
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::rates::{RateReport, StreamAllocation, System};
use crate::rng::{substream, Role};
use crate::wmmse::{mr_precoder, wmmse_solve};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parameter sweep: one scenario run per value of `axis`, for each mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: String,
    pub values: Vec<f64>,
    /// Defaults to the scenario's own mode.
    #[serde(default)]
    pub modes: Vec<Mode>,
}

/// Sweepable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    RefDistance,
    NumAps,
    ApAntennas,
    UeAntennas,
    RhoDb,
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "D" => Ok(Axis::RefDistance),
            "L" => Ok(Axis::NumAps),
            "M" => Ok(Axis::ApAntennas),
            "N" => Ok(Axis::UeAntennas),
            "rho_db" => Ok(Axis::RhoDb),
            _ => Err(Error::config("sweep.axis", format!("unknown axis `{s}` (expected D, L, M, N or rho_db)"))),
        }
    }
}

impl Axis {
    /// `cfg` with the axis set to `value`. Counts must be positive integers.
    pub fn apply(self, cfg: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut out = cfg.clone();
        let count = |field: &str| -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 && value < 1e9 {
                Ok(value as usize)
            } else {
                Err(Error::config("sweep.values", format!("{field} must be a positive integer, got {value}")))
            }
        };
        match self {
            Axis::RefDistance => out.ref_distance = value,
            Axis::NumAps => out.num_aps = count("L")?,
            Axis::ApAntennas => out.ap_antennas = count("M")?,
            Axis::UeAntennas => out.ue_antennas = count("N")?,
            Axis::RhoDb => out.tx_power = noise_power(cfg.bandwidth, cfg.noise_figure_db) * 10f64.powf(value / 10.0),
        }
        out.validate()?;
        Ok(out)
    }
}

/// Clusters for `cfg.mode` on one realization.
pub fn build_clusters(cfg: &ScenarioConfig, net: &NetworkRealization) -> ClusterSet {
    let zone_clusters = || {
        let zones = build_zones(&net.ap_positions, cfg.ref_distance, cfg.area_side);
        cluster_aps(&zones, &ap_channel_gains(net))
    };
    match cfg.mode {
        Mode::Fc => ClusterSet::fully_coherent(cfg.num_aps),
        Mode::Fnc => ClusterSet::non_coherent(cfg.num_aps),
        Mode::Pcnc => zone_clusters(),
        Mode::EvenCluster => {
            let size = cfg
                .even_cluster_size
                .unwrap_or_else(|| cfg.num_aps.div_ceil(zone_clusters().len()));
            even_distance_clustering(&net.ap_positions, cfg.ref_distance, size, cfg.area_side)
        }
    }
}

/// Stream allocation for `cfg.allocation`. Fixed counts are clamped to
/// `min(M |C_c|, N)` per pair.
pub fn build_allocation(
    cfg: &ScenarioConfig,
    net: &NetworkRealization,
    clusters: &ClusterSet,
    trial: u64,
) -> Result<StreamAllocation> {
    let (kk, cc) = (cfg.num_ues, clusters.len());
    let capped = |d: usize| StreamAllocation {
        d: (0..kk)
            .map(|_| {
                (0..cc)
                    .map(|c| d.min(cfg.ap_antennas * clusters.members(c).len()).min(cfg.ue_antennas))
                    .collect()
            })
            .collect(),
    };
    Ok(match cfg.allocation {
        AllocationMode::Fixed(d) | AllocationMode::Even(d) => capped(d),
        AllocationMode::Full => capped(cfg.max_streams()),
        AllocationMode::Random => {
            let mut rng = substream(cfg.seed, trial, Role::Allocation);
            random_allocation(kk, cc, cfg.ap_antennas, cfg.ue_antennas, &mut rng)
        }
        AllocationMode::Greedy => {
            let d_min = StreamAllocation::uniform(kk, cc, cfg.min_streams);
            greedy_allocate(net, clusters, &d_min, &cfg.solver, || {
                substream(cfg.seed, trial, Role::SolverInit)
            })?
        }
    })
}

/// Everything one trial produces, before reduction to a record.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub realization: NetworkRealization,
    pub clusters: ClusterSet,
    pub allocation: StreamAllocation,
    pub report: RateReport,
}

/// Runs trial `trial` of `cfg` end to end.
pub fn run_trial(cfg: &ScenarioConfig, trial: u64) -> Result<TrialOutput> {
    let realization = NetworkRealization::generate(cfg, cfg.seed, trial)?;
    let clusters = build_clusters(cfg, &realization);
    let allocation = build_allocation(cfg, &realization, &clusters, trial)?;
    let sys = System::new(&realization, &clusters, &allocation)?;
    let report = match cfg.precoding {
        Precoding::Wmmse => wmmse_solve(&sys, &cfg.solver, &mut substream(cfg.seed, trial, Role::SolverInit))?.1,
        Precoding::Mr => mr_precoder(&sys).1,
    };
    Ok(TrialOutput {
        realization,
        clusters,
        allocation,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub num_clusters: usize,
    pub max_cluster_diameter: f64,
    pub total_streams: usize,
    pub sum_rate: f64,
    pub ue_rates: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub regularized: bool,
    /// Seconds; not serialized so that reports are reproducible byte for byte.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub numerical: bool,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p5: f64,
    pub p10: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
    pub p95: f64,
}

/// Linear interpolation between order statistics at rank `q (n - 1)`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

impl Percentiles {
    pub fn of(values: &[f64]) -> Self {
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let p = |q| percentile(&s, q);
        Self {
            p5: p(0.05),
            p10: p(0.10),
            p25: p(0.25),
            p50: p(0.50),
            p75: p(0.75),
            p90: p(0.90),
            p95: p(0.95),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Successful trials.
    pub trials: usize,
    pub mean_sum_rate: f64,
    /// Sample standard deviation over `sqrt(trials)`; 0 for a single trial.
    pub stderr: f64,
    pub mean_clusters: f64,
    /// Pooled over every UE of every successful trial.
    pub ue_rate_percentiles: Percentiles,
}

impl Aggregate {
    pub fn of(records: &[TrialRecord]) -> Self {
        let n = records.len();
        let rates: Vec<f64> = records.iter().map(|r| r.sum_rate).collect();
        let (mean, stderr) = mean_stderr(&rates);
        let pooled: Vec<f64> = records.iter().flat_map(|r| r.ue_rates.iter().copied()).collect();
        Self {
            trials: n,
            mean_sum_rate: mean,
            stderr,
            mean_clusters: records.iter().map(|r| r.num_clusters as f64).sum::<f64>() / n.max(1) as f64,
            ue_rate_percentiles: Percentiles::of(&pooled),
        }
    }
}

/// Mean and standard error of the mean.
pub fn mean_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub metadata: Metadata,
    pub aggregate: Aggregate,
    pub per_trial: Vec<TrialRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<TrialFailure>,
}

impl ExperimentResult {
    /// `trial,num_clusters,total_streams,sum_rate,iterations,converged` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,num_clusters,total_streams,sum_rate,iterations,converged\n");
        for r in &self.per_trial {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.trial,
                r.num_clusters,
                r.total_streams,
                sig9(r.sum_rate),
                r.iterations,
                r.converged
            ));
        }
        out
    }

    /// First failure caused by the numerical pipeline, if any.
    pub fn numerical_failure(&self) -> Option<&TrialFailure> {
        self.failures.iter().find(|f| f.numerical)
    }
}

/// Runs `cfg.trials` trials in parallel. Trial failures are recorded, not fatal.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let outcomes: Vec<std::result::Result<TrialRecord, TrialFailure>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let start = Instant::now();
            match run_trial(cfg, t as u64) {
                Ok(out) => Ok(TrialRecord {
                    trial: t,
                    seed: cfg.seed,
                    num_clusters: out.clusters.len(),
                    max_cluster_diameter: out.clusters.max_diameter(&out.realization.ap_positions, cfg.area_side),
                    total_streams: out.allocation.total_streams(),
                    sum_rate: out.report.sum_rate,
                    ue_rates: out.report.ue_rates,
                    iterations: out.report.iterations,
                    converged: out.report.converged,
                    regularized: out.report.regularized,
                    wall_time: start.elapsed().as_secs_f64(),
                }),
                Err(e) => Err(TrialFailure {
                    trial: t,
                    numerical: e.is_numerical(),
                    error: e.to_string(),
                }),
            }
        })
        .collect();
    let mut per_trial = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => per_trial.push(r),
            Err(f) => failures.push(f),
        }
    }
    Ok(ExperimentResult {
        metadata: Metadata {
            version: VERSION.to_string(),
            config: cfg.clone(),
        },
        aggregate: Aggregate::of(&per_trial),
        per_trial,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub mode: Mode,
    pub mean_sum_rate: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// One scenario run per (value, mode). All points share `cfg.seed`, so trial
/// `t` sees the same random draws at every point.
pub fn sweep(cfg: &ScenarioConfig, spec: &SweepSpec) -> Result<(Vec<SweepRow>, Vec<ExperimentResult>)> {
    let axis: Axis = spec.axis.parse()?;
    let modes = if spec.modes.is_empty() { vec![cfg.mode] } else { spec.modes.clone() };
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for &value in &spec.values {
        for &mode in &modes {
            let mut point = axis.apply(cfg, value)?;
            point.mode = mode;
            point.sweep = None;
            let result = run_scenario(&point)?;
            rows.push(SweepRow {
                axis_value: value,
                mode,
                mean_sum_rate: result.aggregate.mean_sum_rate,
                stderr: result.aggregate.stderr,
                trials: result.aggregate.trials,
            });
            results.push(result);
        }
    }
    Ok((rows, results))
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("axis_value,mode,mean_sum_rate,stderr,trials\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            sig9(r.axis_value),
            r.mode.name(),
            sig9(r.mean_sum_rate),
            sig9(r.stderr),
            r.trials
        ));
    }
    out
}
