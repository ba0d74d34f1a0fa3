//! Achievable rates of the clustered downlink.
//!
//! Notation: `F[k][k'][c'] = Ḡ_kc' W̄_k'c'` is what UE `k` receives (before
//! noise) of the streams sent to UE `k'` by cluster `c'`. With it,
//!
//! * `T_k = I + ρ Σ_{k',c'} F Fᴴ` is the total received covariance at UE `k`;
//! * `A_kc = T_k - ρ F_kkc F_kkcᴴ` is the interference-plus-noise covariance of
//!   the streams from cluster `c`, treating everything else as noise.

use serde::{Deserialize, Serialize};

use crate::channel::NetworkRealization;
use crate::clustering::ClusterSet;
use crate::error::{Error, Result};
use crate::linalg::{eye, frob2, hermitian_part, logdet_hpd, real, solve_hpd, vcat, CMat, HermEig, LN2};

/// Regularization added to a non-positive-definite interference covariance.
pub const Q_REGULARIZATION: f64 = 1e-10;
/// `Q̄` counts as singular when its eigenvalue spread exceeds `1 / RANK_TOL`.
const RANK_TOL: f64 = 1e-12;

/// Number of streams `d_kc` for every (UE, cluster) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StreamAllocation {
    pub d: Vec<Vec<usize>>,
}

impl StreamAllocation {
    pub fn uniform(num_ues: usize, num_clusters: usize, d: usize) -> Self {
        Self {
            d: vec![vec![d; num_clusters]; num_ues],
        }
    }

    pub fn get(&self, k: usize, c: usize) -> usize {
        self.d[k][c]
    }

    pub fn set(&mut self, k: usize, c: usize, d: usize) {
        self.d[k][c] = d;
    }

    pub fn total_streams(&self) -> usize {
        self.d.iter().flatten().sum()
    }

    /// Checks shape `K×Lc` and `1 ≤ d_kc ≤ min(M |C_c|, N)`.
    pub fn validate(&self, net: &NetworkRealization, clusters: &ClusterSet) -> Result<()> {
        let (m, n) = (net.ap_antennas(), net.ue_antennas());
        if self.d.len() != net.num_ues() {
            return Err(Error::InvalidAllocation(format!(
                "expected {} rows (UEs), got {}",
                net.num_ues(),
                self.d.len()
            )));
        }
        for (k, row) in self.d.iter().enumerate() {
            if row.len() != clusters.len() {
                return Err(Error::InvalidAllocation(format!(
                    "row {k}: expected {} entries (clusters), got {}",
                    clusters.len(),
                    row.len()
                )));
            }
            for (c, &d) in row.iter().enumerate() {
                let cap = (m * clusters.members(c).len()).min(n);
                if d == 0 || d > cap {
                    return Err(Error::InvalidAllocation(format!(
                        "d[{k}][{c}] = {d} outside 1..={cap}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Precoders, combiners and MSE weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingState {
    /// `precoders[k][l]`: M × d_{k,c(l)}.
    pub precoders: Vec<Vec<CMat>>,
    /// `combiners[k][c]`: N × d_kc.
    pub combiners: Vec<Vec<CMat>>,
    /// `weights[k][c]`: d_kc × d_kc, Hermitian.
    pub weights: Vec<Vec<CMat>>,
}

impl BeamformingState {
    /// All-zero precoders and combiners, identity weights.
    pub fn zeros(sys: &System) -> Self {
        let (m, n) = (sys.net.ap_antennas(), sys.net.ue_antennas());
        let precoders = (0..sys.num_ues())
            .map(|k| {
                (0..sys.num_aps())
                    .map(|l| CMat::zeros(m, sys.d(k, sys.clusters.cluster_of(l))))
                    .collect()
            })
            .collect();
        let combiners = (0..sys.num_ues())
            .map(|k| (0..sys.num_clusters()).map(|c| CMat::zeros(n, sys.d(k, c))).collect())
            .collect();
        let weights = (0..sys.num_ues())
            .map(|k| (0..sys.num_clusters()).map(|c| eye(sys.d(k, c))).collect())
            .collect();
        Self {
            precoders,
            combiners,
            weights,
        }
    }
}

/// A realization together with its clustering and stream allocation.
#[derive(Debug, Clone, Copy)]
pub struct System<'a> {
    pub net: &'a NetworkRealization,
    pub clusters: &'a ClusterSet,
    pub alloc: &'a StreamAllocation,
}

impl<'a> System<'a> {
    pub fn new(
        net: &'a NetworkRealization,
        clusters: &'a ClusterSet,
        alloc: &'a StreamAllocation,
    ) -> Result<Self> {
        if clusters.num_aps() != net.num_aps() {
            return Err(Error::Dimension(format!(
                "clusters cover {} APs, realization has {}",
                clusters.num_aps(),
                net.num_aps()
            )));
        }
        alloc.validate(net, clusters)?;
        Ok(Self {
            net,
            clusters,
            alloc,
        })
    }

    pub fn num_ues(&self) -> usize {
        self.net.num_ues()
    }

    pub fn num_aps(&self) -> usize {
        self.net.num_aps()
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn d(&self, k: usize, c: usize) -> usize {
        self.alloc.get(k, c)
    }

    pub fn rho(&self) -> f64 {
        self.net.rho
    }

    pub fn ue_antennas(&self) -> usize {
        self.net.ue_antennas()
    }
}

/// `W̄_kc`: the cluster's per-AP precoders for UE `k`, stacked vertically.
pub fn stack_precoder(sys: &System, state: &BeamformingState, k: usize, c: usize) -> Result<CMat> {
    let members = sys.clusters.members(c);
    let blocks: Vec<&CMat> = members.iter().map(|&l| &state.precoders[k][l]).collect();
    let d = blocks[0].ncols();
    if blocks.iter().any(|b| b.ncols() != d) {
        return Err(Error::Dimension(format!(
            "precoders of UE {k} in cluster {c} have different stream counts"
        )));
    }
    Ok(vcat(&blocks))
}

/// `Σ_{l ∈ C_c} G_kl W_k'l`.
pub fn received(sys: &System, precoders: &[Vec<CMat>], k: usize, kp: usize, c: usize) -> CMat {
    let members = sys.clusters.members(c);
    let mut acc = sys.net.g(k, members[0]) * &precoders[kp][members[0]];
    for &l in &members[1..] {
        acc += sys.net.g(k, l) * &precoders[kp][l];
    }
    acc
}

/// All received products `F[k][k'][c']` for one set of precoders.
#[derive(Debug, Clone)]
pub struct Products {
    num_ues: usize,
    num_clusters: usize,
    f: Vec<CMat>,
}

impl Products {
    pub fn new(sys: &System, precoders: &[Vec<CMat>]) -> Self {
        let (kk, cc) = (sys.num_ues(), sys.num_clusters());
        let mut f = Vec::with_capacity(kk * kk * cc);
        for k in 0..kk {
            for kp in 0..kk {
                for c in 0..cc {
                    f.push(received(sys, precoders, k, kp, c));
                }
            }
        }
        Self {
            num_ues: kk,
            num_clusters: cc,
            f,
        }
    }

    /// What UE `k` receives of the streams for UE `kp` from cluster `c`.
    pub fn get(&self, k: usize, kp: usize, c: usize) -> &CMat {
        &self.f[(k * self.num_ues + kp) * self.num_clusters + c]
    }

    /// `F_kkc`, the desired-signal channel.
    pub fn desired(&self, k: usize, c: usize) -> &CMat {
        self.get(k, k, c)
    }

    /// `T_k`, with an optional `(k', c')` term left out.
    fn covariance(&self, rho: f64, k: usize, skip: Option<(usize, usize)>) -> CMat {
        let n = self.f[k * self.num_ues * self.num_clusters].nrows();
        let mut acc = CMat::zeros(n, n);
        for kp in 0..self.num_ues {
            for c in 0..self.num_clusters {
                if skip == Some((kp, c)) {
                    continue;
                }
                let f = self.get(k, kp, c);
                acc += f * f.adjoint();
            }
        }
        hermitian_part(&(acc * real(rho))) + eye(n)
    }

    pub fn total_covariance(&self, rho: f64, k: usize) -> CMat {
        self.covariance(rho, k, None)
    }

    /// `A_kc`, the interference-plus-noise covariance for the streams of cluster `c`.
    pub fn interference_plus_noise(&self, rho: f64, k: usize, c: usize) -> CMat {
        self.covariance(rho, k, Some((k, c)))
    }
}

/// `Q̄_kc = V̄ᴴ A_kc V̄`.
pub fn interference_covariance(sys: &System, state: &BeamformingState, k: usize, c: usize) -> CMat {
    let products = Products::new(sys, &state.precoders);
    let v = &state.combiners[k][c];
    hermitian_part(&(v.adjoint() * products.interference_plus_noise(sys.rho(), k, c) * v))
}

/// Rate of one stream group and whether `Q̄` had to be regularized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamRate {
    pub rate: f64,
    pub regularized: bool,
}

/// `log2 |I + ρ H̄ᴴ Q̄⁻¹ H̄|` with `H̄ = V̄ᴴ F_kkc`, from cached products.
pub fn stream_rate_with(products: &Products, rho: f64, v: &CMat, k: usize, c: usize) -> StreamRate {
    let f = products.desired(k, c);
    let d = f.ncols();
    let h = v.adjoint() * f;
    let mut q = hermitian_part(&(v.adjoint() * products.interference_plus_noise(rho, k, c) * v));
    let eig = HermEig::new(&q);
    let regularized = eig.min_value() <= RANK_TOL * eig.values[0].max(f64::MIN_POSITIVE);
    if regularized {
        q += eye(q.nrows()) * real(Q_REGULARIZATION);
    }
    let qinv_h = solve_hpd(&q, &h).unwrap_or_else(|| CMat::zeros(h.nrows(), h.ncols()));
    let m = eye(d) + hermitian_part(&(h.adjoint() * qinv_h)) * real(rho);
    let rate = logdet_hpd(&m).map(|x| (x / LN2).max(0.0)).unwrap_or(0.0);
    StreamRate { rate, regularized }
}

pub fn stream_rate(sys: &System, state: &BeamformingState, k: usize, c: usize) -> StreamRate {
    let products = Products::new(sys, &state.precoders);
    stream_rate_with(&products, sys.rho(), &state.combiners[k][c], k, c)
}

/// `√ρ T_k⁻¹ F_kkc`.
pub fn mmse_combiner_with(products: &Products, rho: f64, k: usize, c: usize) -> CMat {
    let t = products.total_covariance(rho, k);
    solve_hpd(&t, products.desired(k, c)).expect("I + PSD is positive definite") * real(rho.sqrt())
}

pub fn mmse_combiner(sys: &System, state: &BeamformingState, k: usize, c: usize) -> CMat {
    mmse_combiner_with(&Products::new(sys, &state.precoders), sys.rho(), k, c)
}

/// `√ρ A_kc⁻¹ F_kkc`: matched filtering after whitening the interference.
pub fn whitened_mrc_combiner(sys: &System, state: &BeamformingState, k: usize, c: usize) -> CMat {
    let products = Products::new(sys, &state.precoders);
    let a = products.interference_plus_noise(sys.rho(), k, c);
    solve_hpd(&a, products.desired(k, c)).expect("I + PSD is positive definite") * real(sys.rho().sqrt())
}

/// Rate reached by the optimal linear receiver, `log2 |I + ρ Fᴴ A⁻¹ F|`.
pub fn optimal_stream_rate(products: &Products, rho: f64, k: usize, c: usize) -> f64 {
    let f = products.desired(k, c);
    let a = products.interference_plus_noise(rho, k, c);
    let ainv_f = solve_hpd(&a, f).expect("I + PSD is positive definite");
    let m = eye(f.ncols()) + hermitian_part(&(f.adjoint() * ainv_f)) * real(rho);
    logdet_hpd(&m).map(|x| (x / LN2).max(0.0)).unwrap_or(0.0)
}

/// `Σ_k ‖W_kl‖²`.
pub fn per_ap_power(state: &BeamformingState, l: usize) -> f64 {
    state.precoders.iter().map(|row| frob2(&row[l])).sum()
}

pub fn max_ap_power(state: &BeamformingState) -> f64 {
    let num_aps = state.precoders.first().map(|r| r.len()).unwrap_or(0);
    (0..num_aps).map(|l| per_ap_power(state, l)).fold(0.0, f64::max)
}

/// One outer iteration of the precoder optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub sum_rate: f64,
    /// Weighted-MSE objective after the iteration.
    pub objective: f64,
    pub max_power: f64,
    pub max_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// `stream_rates[k][c]`, bits per channel use.
    pub stream_rates: Vec<Vec<f64>>,
    pub ue_rates: Vec<f64>,
    pub sum_rate: f64,
    /// True when some `Q̄` needed regularization.
    pub regularized: bool,
    #[serde(default)]
    pub iterations: usize,
    #[serde(default)]
    pub converged: bool,
    #[serde(default)]
    pub trace: Vec<TraceEntry>,
}

impl RateReport {
    pub fn from_stream_rates(stream_rates: Vec<Vec<f64>>, regularized: bool) -> Self {
        let ue_rates: Vec<f64> = stream_rates.iter().map(|r| r.iter().sum()).collect();
        let sum_rate = ue_rates.iter().sum();
        Self {
            stream_rates,
            ue_rates,
            sum_rate,
            regularized,
            iterations: 0,
            converged: false,
            trace: Vec::new(),
        }
    }

    /// `trial,k,c,R` rows (no header).
    pub fn csv_rows(&self, trial: usize) -> Vec<String> {
        let mut rows = Vec::new();
        for (k, row) in self.stream_rates.iter().enumerate() {
            for (c, r) in row.iter().enumerate() {
                rows.push(format!("{trial},{k},{c},{}", crate::format::sig9(*r)));
            }
        }
        rows
    }
}

/// Rates of every stream group with the combiners stored in `state`.
pub fn sum_rate(sys: &System, state: &BeamformingState) -> RateReport {
    let products = Products::new(sys, &state.precoders);
    let mut regularized = false;
    let rates = (0..sys.num_ues())
        .map(|k| {
            (0..sys.num_clusters())
                .map(|c| {
                    let r = stream_rate_with(&products, sys.rho(), &state.combiners[k][c], k, c);
                    regularized |= r.regularized;
                    r.rate
                })
                .collect()
        })
        .collect();
    RateReport::from_stream_rates(rates, regularized)
}

/// Rates with the optimal receivers for the given precoders.
pub fn optimal_sum_rate(sys: &System, precoders: &[Vec<CMat>]) -> RateReport {
    let products = Products::new(sys, precoders);
    let rates = (0..sys.num_ues())
        .map(|k| {
            (0..sys.num_clusters())
                .map(|c| optimal_stream_rate(&products, sys.rho(), k, c))
                .collect()
        })
        .collect();
    RateReport::from_stream_rates(rates, false)
}

/// `log2 |X|` for Hermitian positive-definite `X`.
pub fn log2det(x: &CMat) -> Option<f64> {
    logdet_hpd(x).map(|v| v / LN2)
}

/// `B = I + ρ Fᴴ A⁻¹ F`, so that the whitened matched filter equals `V_mmse · B`.
///
/// Follows from `T = A + ρ F Fᴴ` and `A⁻¹ F = T⁻¹ F (I + ρ Fᴴ A⁻¹ F)`.
pub fn whitening_factor(sys: &System, state: &BeamformingState, k: usize, c: usize) -> CMat {
    let products = Products::new(sys, &state.precoders);
    let f = products.desired(k, c);
    let a = products.interference_plus_noise(sys.rho(), k, c);
    let ainv_f = solve_hpd(&a, f).expect("I + PSD is positive definite");
    hermitian_part(&(eye(f.ncols()) + f.adjoint() * ainv_f * real(sys.rho())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c as cx, cn_matrix, inverse_hpd, max_abs_diff};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_net(g: f64, rho: f64) -> NetworkRealization {
        NetworkRealization::from_channels(vec![vec![CMat::from_element(1, 1, real(g))]], rho)
    }

    fn random_instance(seed: u64) -> (NetworkRealization, ClusterSet, StreamAllocation, BeamformingState) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (kk, ll, m, n) = (2, 3, 2, 2);
        let channels = (0..kk)
            .map(|_| (0..ll).map(|_| cn_matrix(&mut rng, n, m, 1.0)).collect())
            .collect();
        let net = NetworkRealization::from_channels(channels, 3.0);
        let clusters = ClusterSet::new(vec![vec![0, 2], vec![1]], ll).unwrap();
        let alloc = StreamAllocation {
            d: vec![vec![2, 1], vec![1, 2]],
        };
        let sys = System::new(&net, &clusters, &alloc).unwrap();
        let mut state = BeamformingState::zeros(&sys);
        for k in 0..kk {
            for l in 0..ll {
                let d = alloc.get(k, clusters.cluster_of(l));
                state.precoders[k][l] = cn_matrix(&mut rng, m, d, 0.2);
            }
            for c in 0..clusters.len() {
                state.combiners[k][c] = cn_matrix(&mut rng, n, alloc.get(k, c), 1.0);
            }
        }
        (net, clusters, alloc, state)
    }

    #[test]
    fn scalar_link_rate() {
        let net = scalar_net(1.0, 10.0);
        let clusters = ClusterSet::fully_coherent(1);
        let alloc = StreamAllocation::uniform(1, 1, 1);
        let sys = System::new(&net, &clusters, &alloc).unwrap();
        let mut state = BeamformingState::zeros(&sys);
        state.precoders[0][0][(0, 0)] = real(1.0);
        state.combiners[0][0][(0, 0)] = real(1.0);
        let report = sum_rate(&sys, &state);
        assert!((report.sum_rate - 11f64.log2()).abs() < 1e-12);
        let q = interference_covariance(&sys, &state, 0, 0);
        assert!((q[(0, 0)].re - 1.0).abs() < 1e-15);

        state.precoders[0][0][(0, 0)] = real(0.0);
        assert_eq!(sum_rate(&sys, &state).sum_rate, 0.0);
    }

    #[test]
    fn stacking_matches_per_ap_sum() {
        let (net, clusters, alloc, state) = random_instance(1);
        let sys = System::new(&net, &clusters, &alloc).unwrap();
        let w = stack_precoder(&sys, &state, 0, 0).unwrap();
        let g = crate::clustering::collective_channel(&net, clusters.members(0), 1);
        assert!(max_abs_diff(&(g * &w), &received(&sys, &state.precoders, 1, 0, 0)) < 1e-12);
        let parts = frob2(&state.precoders[0][0]) + frob2(&state.precoders[0][2]);
        assert!((frob2(&w) - parts).abs() < 1e-12);
        assert_eq!(stack_precoder(&sys, &state, 1, 1).unwrap(), state.precoders[1][1]);
    }

    #[test]
    fn noise_only_covariance_without_interference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = NetworkRealization::from_channels(vec![vec![cn_matrix(&mut rng, 2, 3, 1.0)]], 5.0);
        let clusters = ClusterSet::fully_coherent(1);
        let alloc = StreamAllocation::uniform(1, 1, 2);
        let sys = System::new(&net, &clusters, &alloc).unwrap();
        let mut state = BeamformingState::zeros(&sys);
        state.precoders[0][0] = cn_matrix(&mut rng, 3, 2, 1.0);
        state.combiners[0][0] = cn_matrix(&mut rng, 2, 2, 1.0);
        let v = &state.combiners[0][0];
        let q = interference_covariance(&sys, &state, 0, 0);
        assert!(max_abs_diff(&q, &(v.adjoint() * v)) < 1e-12);
    }

    #[test]
    fn single_stream_rate_matches_scalar_sinr() {
        let (net, clusters, _, _) = random_instance(3);
        let alloc = StreamAllocation::uniform(2, 2, 1);
        let sys = System::new(&net, &clusters, &alloc).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut state = BeamformingState::zeros(&sys);
        for k in 0..2 {
            for l in 0..3 {
                state.precoders[k][l] = cn_matrix(&mut rng, 2, 1, 0.3);
            }
            for c in 0..2 {
                state.combiners[k][c] = cn_matrix(&mut rng, 2, 1, 1.0);
            }
        }
        let rho = net.rho;
        for k in 0..2 {
            for c in 0..2 {
                let v = &state.combiners[k][c];
                let gain = |kp: usize, cp: usize| {
                    let h = received(&sys, &state.precoders, k, kp, cp);
                    (v.adjoint() * h)[(0, 0)].norm_sqr()
                };
                let mut interference = 0.0;
                for kp in 0..2 {
                    for cp in 0..2 {
                        if (kp, cp) != (k, c) {
                            interference += rho * gain(kp, cp);
                        }
                    }
                }
                let noise = frob2(v);
                let sinr = rho * gain(k, c) / (interference + noise);
                let r = stream_rate(&sys, &state, k, c);
                assert!((r.rate - (1.0 + sinr).log2()).abs() < 1e-12);
                assert!(!r.regularized);
            }
        }
    }

    #[test]
    fn rank_deficient_combiner_is_regularized() {
        let (net, clusters, alloc, mut state) = random_instance(5);
        let sys = System::new(&net, &clusters, &alloc).unwrap();
        let col = state.combiners[0][0].column(0).into_owned();
        state.combiners[0][0].set_column(1, &col);
        let r = stream_rate(&sys, &state, 0, 0);
        assert!(r.regularized);
        assert!(r.rate.is_finite() && r.rate >= 0.0);
        assert!(sum_rate(&sys, &state).regularized);
    }

    #[test]
    fn mmse_beats_random_combiners_and_matches_closed_form() {
        let (net, clusters, alloc, mut state) = random_instance(6);
        let sys = System::new(&net, &clusters, &alloc).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let products = Products::new(&sys, &state.precoders);
        for k in 0..2 {
            for c in 0..2 {
                let v = mmse_combiner(&sys, &state, k, c);
                let best = stream_rate_with(&products, net.rho, &v, k, c).rate;
                assert!((best - optimal_stream_rate(&products, net.rho, k, c)).abs() < 1e-9);
                for _ in 0..200 {
                    let rv = cn_matrix(&mut rng, 2, alloc.get(k, c), 1.0);
                    assert!(best >= stream_rate_with(&products, net.rho, &rv, k, c).rate - 1e-9);
                }
                // Whitened matched filter: same rate, differs by the factor B.
                let vt = whitened_mrc_combiner(&sys, &state, k, c);
                let b = whitening_factor(&sys, &state, k, c);
                assert!(max_abs_diff(&vt, &(&v * &b)) < 1e-9);
                // The inverse of that factor does not relate the two.
                let binv = inverse_hpd(&b).unwrap();
                assert!(max_abs_diff(&vt, &(&v * &binv)) > 1e-3);
                state.combiners[k][c] = vt;
                assert!((stream_rate(&sys, &state, k, c).rate - best).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn scalar_combiner_is_matched_filter() {
        let net = NetworkRealization::from_channels(vec![vec![CMat::from_element(1, 1, cx(0.3, -0.4))]], 7.0);
        let clusters = ClusterSet::fully_coherent(1);
        let alloc = StreamAllocation::uniform(1, 1, 1);
        let sys = System::new(&net, &clusters, &alloc).unwrap();
        let mut state = BeamformingState::zeros(&sys);
        state.precoders[0][0][(0, 0)] = cx(0.6, 0.8);
        let v = mmse_combiner(&sys, &state, 0, 0)[(0, 0)];
        let gw = cx(0.3, -0.4) * cx(0.6, 0.8);
        // Same phase as g w, positive scaling.
        let ratio = v / gw;
        assert!(ratio.im.abs() < 1e-12 && ratio.re > 0.0);
        let vt = whitened_mrc_combiner(&sys, &state, 0, 0)[(0, 0)];
        assert!((vt - gw * 7f64.sqrt()).norm() < 1e-12);
    }

    #[test]
    fn interference_covariance_is_hermitian_psd() {
        for seed in 0..10 {
            let (net, clusters, alloc, state) = random_instance(100 + seed);
            let sys = System::new(&net, &clusters, &alloc).unwrap();
            for k in 0..2 {
                for c in 0..2 {
                    let products = Products::new(&sys, &state.precoders);
                    let v = &state.combiners[k][c];
                    let raw = v.adjoint() * products.interference_plus_noise(net.rho, k, c) * v;
                    assert!(max_abs_diff(&raw, &raw.adjoint()) < 1e-12);
                    let e = crate::linalg::HermEig::new(&raw);
                    assert!(e.min_value() >= -1e-10);
                }
            }
        }
    }

    #[test]
    fn allocation_validation() {
        let (net, clusters, _, _) = random_instance(8);
        assert!(StreamAllocation::uniform(2, 2, 2).validate(&net, &clusters).is_ok());
        assert!(StreamAllocation::uniform(2, 2, 3).validate(&net, &clusters).is_err());
        assert!(StreamAllocation::uniform(2, 2, 0).validate(&net, &clusters).is_err());
        assert!(StreamAllocation::uniform(2, 3, 1).validate(&net, &clusters).is_err());
        assert!(StreamAllocation::uniform(1, 2, 1).validate(&net, &clusters).is_err());
    }

    #[test]
    fn report_totals_and_rows() {
        let r = RateReport::from_stream_rates(vec![vec![1.0, 2.5], vec![0.25, 0.0]], false);
        assert_eq!(r.ue_rates, vec![3.5, 0.25]);
        assert_eq!(r.sum_rate, 3.75);
        assert_eq!(r.csv_rows(4)[1], "4,0,1,2.5");
    }
}
