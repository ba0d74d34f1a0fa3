//! Network geometry and channel generation.
//!
//! APs and UEs live on a square torus. Large-scale gains combine a log-distance
//! path loss with per-AP shadowing that is spatially correlated across UEs;
//! small-scale fading is uncorrelated Rayleigh.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::linalg::{c, cn_matrix, CMat};
use crate::rng::{substream, Role};

pub type Point = [f64; 2];

pub const BOLTZMANN: f64 = 1.381e-23;
pub const NOISE_TEMPERATURE: f64 = 290.0;
pub const SHADOWING_VAR_DB2: f64 = 16.0;
/// Decorrelation distance for shadowing, meters.
pub const SHADOWING_DECORR: f64 = 9.0;
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1_000_000;
const SHADOWING_JITTER: f64 = 1e-9;
const MIN_DISTANCE: f64 = 1.0;

/// Toroidal distance between two points of the square `[0, side)²`.
pub fn wrap_distance(p: Point, q: Point, side: f64) -> f64 {
    let axis = |a: f64, b: f64| {
        let d = (a - b).abs();
        d.min(side - d)
    };
    axis(p[0], q[0]).hypot(axis(p[1], q[1]))
}

/// Thermal noise power in watts.
pub fn noise_power(bandwidth: f64, noise_figure_db: f64) -> f64 {
    BOLTZMANN * NOISE_TEMPERATURE * bandwidth * 10f64.powf(noise_figure_db / 10.0)
}

/// Path loss in dB for a distance in meters (referenced to 1 m).
pub fn path_loss_db(distance: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::Domain(format!(
            "path loss needs a positive distance, got {distance}"
        )));
    }
    Ok(-30.5 - 36.7 * distance.log10())
}

/// AP positions by rejection sampling under the minimum spacing, then UE
/// positions uniformly.
pub fn place_network<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<(Vec<Point>, Vec<Point>)> {
    let side = config.area_side;
    let mut aps: Vec<Point> = Vec::with_capacity(config.num_aps);
    let mut attempts = 0usize;
    while aps.len() < config.num_aps {
        if attempts >= MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::InfeasiblePlacement {
                attempts,
                aps: config.num_aps,
                side,
                spacing: config.min_ap_spacing,
            });
        }
        attempts += 1;
        let p = uniform_point(rng, side);
        if aps
            .iter()
            .all(|&q| wrap_distance(p, q, side) >= config.min_ap_spacing)
        {
            aps.push(p);
        }
    }
    let ues = (0..config.num_ues).map(|_| uniform_point(rng, side)).collect();
    Ok((aps, ues))
}

fn uniform_point<R: Rng + ?Sized>(rng: &mut R, side: f64) -> Point {
    let x = rng.random::<f64>() * side;
    let y = rng.random::<f64>() * side;
    [x, y]
}

/// Shadowing covariance between UEs, dB².
pub fn shadowing_covariance(ue_positions: &[Point], side: f64) -> DMatrix<f64> {
    let k = ue_positions.len();
    DMatrix::from_fn(k, k, |i, j| {
        let delta = wrap_distance(ue_positions[i], ue_positions[j], side);
        SHADOWING_VAR_DB2 * 2f64.powf(-delta / SHADOWING_DECORR)
    })
}

/// Shadowing in dB as a K×L matrix; columns (APs) are independent.
pub fn sample_shadowing<R: Rng + ?Sized>(
    ue_positions: &[Point],
    num_aps: usize,
    side: f64,
    rng: &mut R,
) -> DMatrix<f64> {
    let k = ue_positions.len();
    let mut cov = shadowing_covariance(ue_positions, side);
    for i in 0..k {
        cov[(i, i)] += SHADOWING_JITTER;
    }
    // Distinct UEs give a positive definite kernel; the jitter covers co-location.
    let chol = cov
        .cholesky()
        .expect("jittered shadowing covariance is positive definite");
    let factor = chol.l();
    let mut out = DMatrix::zeros(k, num_aps);
    for l in 0..num_aps {
        let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        out.set_column(l, &(&factor * z));
    }
    out
}

/// Linear large-scale gains `β_kl` (K×L).
pub fn large_scale(
    ap_positions: &[Point],
    ue_positions: &[Point],
    shadowing_db: &DMatrix<f64>,
    side: f64,
) -> Result<DMatrix<f64>> {
    let mut beta = DMatrix::zeros(ue_positions.len(), ap_positions.len());
    for (k, &u) in ue_positions.iter().enumerate() {
        for (l, &a) in ap_positions.iter().enumerate() {
            let d = wrap_distance(u, a, side).max(MIN_DISTANCE);
            let pl = path_loss_db(d)?;
            beta[(k, l)] = 10f64.powf((pl + shadowing_db[(k, l)]) / 10.0);
        }
    }
    Ok(beta)
}

/// Rayleigh channels `G_kl = √β_kl · G̃_kl`, each N×M.
pub fn sample_channels<R: Rng + ?Sized>(
    beta: &DMatrix<f64>,
    ue_antennas: usize,
    ap_antennas: usize,
    rng: &mut R,
) -> Vec<Vec<CMat>> {
    (0..beta.nrows())
        .map(|k| {
            (0..beta.ncols())
                .map(|l| cn_matrix(rng, ue_antennas, ap_antennas, beta[(k, l)]))
                .collect()
        })
        .collect()
}

/// One drawn network: geometry, large-scale gains and channel matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RealizationDoc", try_from = "RealizationDoc")]
pub struct NetworkRealization {
    pub area_side: f64,
    pub ap_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
    /// K×L linear gains.
    pub beta: DMatrix<f64>,
    /// `channels[k][l]` is the N×M matrix `G_kl`.
    pub channels: Vec<Vec<CMat>>,
    pub rho: f64,
}

impl NetworkRealization {
    /// Draws trial `trial` of the scenario from its seeded substreams.
    pub fn generate(config: &ScenarioConfig, seed: u64, trial: u64) -> Result<Self> {
        let mut placement = substream(seed, trial, Role::Placement);
        let (aps, ues) = place_network(config, &mut placement)?;
        let mut shadow_rng = substream(seed, trial, Role::Shadowing);
        let shadowing = sample_shadowing(&ues, config.num_aps, config.area_side, &mut shadow_rng);
        let beta = large_scale(&aps, &ues, &shadowing, config.area_side)?;
        let mut fading = substream(seed, trial, Role::Fading);
        let channels = sample_channels(&beta, config.ue_antennas, config.ap_antennas, &mut fading);
        Ok(Self {
            area_side: config.area_side,
            ap_positions: aps,
            ue_positions: ues,
            beta,
            channels,
            rho: config.tx_power / noise_power(config.bandwidth, config.noise_figure_db),
        })
    }

    /// Builds a realization from explicit channels. Positions are unspecified
    /// (all at the origin) and `β` is set to the mean entry power of each block.
    pub fn from_channels(channels: Vec<Vec<CMat>>, rho: f64) -> Self {
        let k = channels.len();
        let l = channels.first().map(|row| row.len()).unwrap_or(0);
        let beta = DMatrix::from_fn(k, l, |i, j| {
            let g = &channels[i][j];
            let n = (g.nrows() * g.ncols()).max(1) as f64;
            g.iter().map(|z| z.norm_sqr()).sum::<f64>() / n
        });
        Self {
            area_side: 1.0,
            ap_positions: vec![[0.0, 0.0]; l],
            ue_positions: vec![[0.0, 0.0]; k],
            beta,
            channels,
            rho,
        }
    }

    pub fn num_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn ap_antennas(&self) -> usize {
        self.channels[0][0].ncols()
    }

    pub fn ue_antennas(&self) -> usize {
        self.channels[0][0].nrows()
    }

    pub fn g(&self, k: usize, l: usize) -> &CMat {
        &self.channels[k][l]
    }
}

/// Wire form: channel matrices are row-major lists of `[re, im, re, im, ...]`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RealizationDoc {
    area_side: f64,
    rho: f64,
    ap_positions: Vec<Point>,
    ue_positions: Vec<Point>,
    beta: Vec<Vec<f64>>,
    ue_antennas: usize,
    ap_antennas: usize,
    channels: Vec<Vec<Vec<f64>>>,
}

impl From<NetworkRealization> for RealizationDoc {
    fn from(r: NetworkRealization) -> Self {
        let beta = (0..r.beta.nrows())
            .map(|k| r.beta.row(k).iter().copied().collect())
            .collect();
        let channels = r
            .channels
            .iter()
            .map(|row| {
                row.iter()
                    .map(|g| {
                        let mut flat = Vec::with_capacity(2 * g.len());
                        for i in 0..g.nrows() {
                            for j in 0..g.ncols() {
                                flat.push(g[(i, j)].re);
                                flat.push(g[(i, j)].im);
                            }
                        }
                        flat
                    })
                    .collect()
            })
            .collect();
        let (n, m) = r.channels.first().and_then(|row| row.first()).map(|g| g.shape()).unwrap_or((0, 0));
        RealizationDoc {
            area_side: r.area_side,
            rho: r.rho,
            ap_positions: r.ap_positions,
            ue_positions: r.ue_positions,
            beta,
            ue_antennas: n,
            ap_antennas: m,
            channels,
        }
    }
}

impl TryFrom<RealizationDoc> for NetworkRealization {
    type Error = String;

    fn try_from(d: RealizationDoc) -> std::result::Result<Self, String> {
        let k = d.ue_positions.len();
        let l = d.ap_positions.len();
        if d.beta.len() != k || d.beta.iter().any(|row| row.len() != l) {
            return Err(format!("beta must be {k}×{l}"));
        }
        if d.channels.len() != k || d.channels.iter().any(|row| row.len() != l) {
            return Err(format!("channels must be a {k}×{l} grid"));
        }
        let (n, m) = (d.ue_antennas, d.ap_antennas);
        let mut channels = Vec::with_capacity(k);
        for row in &d.channels {
            let mut out = Vec::with_capacity(l);
            for flat in row {
                if flat.len() != 2 * n * m {
                    return Err(format!("each channel needs {} numbers", 2 * n * m));
                }
                out.push(CMat::from_fn(n, m, |i, j| {
                    let at = 2 * (i * m + j);
                    c(flat[at], flat[at + 1])
                }));
            }
            channels.push(out);
        }
        Ok(NetworkRealization {
            area_side: d.area_side,
            ap_positions: d.ap_positions,
            ue_positions: d.ue_positions,
            beta: DMatrix::from_fn(k, l, |i, j| d.beta[i][j]),
            channels,
            rho: d.rho,
        })
    }
}
