//! Number of data streams per (UE, cluster) pair.
//!
//! The greedy allocator visits pairs in decreasing channel-to-interference-
//! plus-noise ratio (CINR) and, for each, keeps the stream count that gives
//! the highest optimized sum rate.

use rand::Rng;
use rayon::prelude::*;

use crate::channel::NetworkRealization;
use crate::clustering::{collective_channel, ClusterSet};
use crate::error::Result;
use crate::linalg::{column_space_basis, frob2, CMat};
use crate::rates::{StreamAllocation, System};
use crate::rng::SimRng;
use crate::wmmse::{wmmse_solve, SolverConfig};

/// Singular values below this fraction of the largest do not span the channel.
pub const BASIS_CUTOFF: f64 = 1e-10;

/// `S[k][c] = ρ‖Ḡ_kc‖² / (1 + ρ Σ_{k'≠k} ‖P_kcᴴ Ḡ_k'c‖² + ρ Σ_{c'≠c} ‖P_kcᴴ Ḡ_kc'‖²)`
/// where `P_kc` is an orthonormal basis of the column space of `Ḡ_kc`.
pub fn cinr_matrix(net: &NetworkRealization, clusters: &ClusterSet) -> Vec<Vec<f64>> {
    cinr_matrix_with(net, clusters, |g| column_space_basis(g, BASIS_CUTOFF))
}

/// Same as [`cinr_matrix`] with a caller-supplied orthonormal basis routine.
pub fn cinr_matrix_with(
    net: &NetworkRealization,
    clusters: &ClusterSet,
    basis: impl Fn(&CMat) -> CMat,
) -> Vec<Vec<f64>> {
    let (kk, cc) = (net.num_ues(), clusters.len());
    let rho = net.rho;
    let gbar: Vec<Vec<CMat>> = (0..kk)
        .map(|k| (0..cc).map(|c| collective_channel(net, clusters.members(c), k)).collect())
        .collect();
    (0..kk)
        .map(|k| {
            (0..cc)
                .map(|c| {
                    let g = &gbar[k][c];
                    let p = basis(g);
                    if p.ncols() == 0 {
                        return 0.0;
                    }
                    let ph = p.adjoint();
                    let intra: f64 = (0..kk).filter(|&kp| kp != k).map(|kp| frob2(&(&ph * &gbar[kp][c]))).sum();
                    let inter: f64 = (0..cc).filter(|&cp| cp != c).map(|cp| frob2(&(&ph * &gbar[k][cp]))).sum();
                    rho * frob2(g) / (1.0 + rho * intra + rho * inter)
                })
                .collect()
        })
        .collect()
}

/// Greedy allocation starting from `d_min`.
///
/// Every candidate solve starts from a fresh generator produced by `init_rng`,
/// so candidates differ only in their stream counts. Pairs not yet visited
/// stay at their `d_min` value. A candidate whose solve fails is skipped.
pub fn greedy_allocate<F>(
    net: &NetworkRealization,
    clusters: &ClusterSet,
    d_min: &StreamAllocation,
    solver: &SolverConfig,
    init_rng: F,
) -> Result<StreamAllocation>
where
    F: Fn() -> SimRng + Sync,
{
    let (kk, cc) = (net.num_ues(), clusters.len());
    let ceiling = net.ap_antennas().min(net.ue_antennas());
    let mut s = cinr_matrix(net, clusters);
    let mut alloc = d_min.clone();
    System::new(net, clusters, &alloc)?;
    for _ in 0..kk * cc {
        let (mut kh, mut ch) = (usize::MAX, usize::MAX);
        let mut best = f64::NEG_INFINITY;
        for (k, row) in s.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v > best {
                    best = v;
                    (kh, ch) = (k, c);
                }
            }
        }
        let scores: Vec<f64> = (1..=ceiling)
            .into_par_iter()
            .map(|d| {
                let mut trial = alloc.clone();
                trial.set(kh, ch, d);
                let run = || -> Result<f64> {
                    let sys = System::new(net, clusters, &trial)?;
                    let (_, report) = wmmse_solve(&sys, solver, &mut init_rng())?;
                    Ok(report.sum_rate)
                };
                run().unwrap_or(f64::NEG_INFINITY)
            })
            .collect();
        let mut d_star = None;
        let mut top = f64::NEG_INFINITY;
        for (i, &r) in scores.iter().enumerate() {
            if r > top {
                top = r;
                d_star = Some(i + 1);
            }
        }
        let floor = d_min.get(kh, ch);
        let chosen = match d_star {
            Some(d) if d >= floor => d,
            _ => floor,
        };
        alloc.set(kh, ch, chosen);
        s[kh][ch] = f64::NEG_INFINITY;
    }
    Ok(alloc)
}

/// The same `d` for every pair.
pub fn even_allocation(num_ues: usize, num_clusters: usize, d: usize) -> StreamAllocation {
    StreamAllocation::uniform(num_ues, num_clusters, d)
}

/// Independent uniform draws from `1..=min(M, N)`.
pub fn random_allocation<R: Rng + ?Sized>(
    num_ues: usize,
    num_clusters: usize,
    ap_antennas: usize,
    ue_antennas: usize,
    rng: &mut R,
) -> StreamAllocation {
    let top = ap_antennas.min(ue_antennas);
    StreamAllocation {
        d: (0..num_ues)
            .map(|_| (0..num_clusters).map(|_| rng.random_range(1..=top)).collect())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cn_matrix, real};
    use crate::rng::{substream, Role};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_net(seed: u64, kk: usize, ll: usize, m: usize, n: usize, rho: f64) -> NetworkRealization {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let channels = (0..kk)
            .map(|_| (0..ll).map(|_| cn_matrix(&mut rng, n, m, 1.0)).collect())
            .collect();
        NetworkRealization::from_channels(channels, rho)
    }

    /// Orthonormal basis by modified Gram-Schmidt on the columns.
    fn gram_schmidt(g: &CMat) -> CMat {
        let mut cols: Vec<CMat> = Vec::new();
        let scale = g.norm();
        for j in 0..g.ncols() {
            let mut v: CMat = g.columns(j, 1).into_owned();
            for q in &cols {
                let proj = (q.adjoint() * &v)[(0, 0)];
                v -= q * proj;
            }
            let n = v.norm();
            if n > 1e-9 * scale {
                cols.push(v * real(1.0 / n));
            }
        }
        let refs: Vec<&CMat> = cols.iter().collect();
        crate::linalg::hcat(&refs)
    }

    #[test]
    fn single_pair_reduces_to_channel_gain() {
        let net = random_net(1, 1, 2, 3, 2, 1.0);
        let clusters = ClusterSet::fully_coherent(2);
        let s = cinr_matrix(&net, &clusters);
        let g = collective_channel(&net, &[0, 1], 0);
        assert!((s[0][0] - frob2(&g)).abs() < 1e-12 * frob2(&g));
    }

    #[test]
    fn interference_scales_quadratically() {
        let net = random_net(2, 2, 3, 2, 2, 1.0);
        let clusters = ClusterSet::new(vec![vec![0, 1], vec![2]], 3).unwrap();
        let s = cinr_matrix(&net, &clusters);
        // Scale every channel except UE 0's link to cluster 0.
        let mut loud = net.clone();
        for k in 0..2 {
            for l in 0..3 {
                if !(k == 0 && l < 2) {
                    loud.channels[k][l] *= real(10.0);
                }
            }
        }
        let s2 = cinr_matrix(&loud, &clusters);
        let g = frob2(&collective_channel(&net, &[0, 1], 0));
        let denom = g / s[0][0] - 1.0;
        let denom2 = g / s2[0][0] - 1.0;
        assert!((denom2 / denom - 100.0).abs() < 1e-9);
    }

    #[test]
    fn cinr_is_basis_invariant() {
        for seed in 0..20 {
            let net = random_net(seed, 3, 4, 2, 3, 5.0);
            let clusters = ClusterSet::new(vec![vec![0, 3], vec![1], vec![2]], 4).unwrap();
            let a = cinr_matrix(&net, &clusters);
            let b = cinr_matrix_with(&net, &clusters, gram_schmidt);
            for (ra, rb) in a.iter().zip(&b) {
                for (x, y) in ra.iter().zip(rb) {
                    assert!((x - y).abs() <= 1e-8 * x.abs().max(1e-300), "{x} {y}");
                }
            }
        }
    }

    #[test]
    fn zero_channel_scores_zero() {
        let mut net = random_net(3, 2, 1, 2, 2, 1.0);
        net.channels[1][0] = CMat::zeros(2, 2);
        let s = cinr_matrix(&net, &ClusterSet::fully_coherent(1));
        assert_eq!(s[1][0], 0.0);
        assert!(s[0][0] > 0.0);
    }

    #[test]
    fn baselines() {
        assert_eq!(even_allocation(2, 2, 2).d, vec![vec![2, 2], vec![2, 2]]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(random_allocation(3, 4, 1, 1, &mut rng).d.iter().flatten().all(|&d| d == 1));
        let mut counts = [0usize; 3];
        let draws = random_allocation(100, 100, 3, 5, &mut rng);
        for &d in draws.d.iter().flatten() {
            counts[d - 1] += 1;
        }
        for c in counts {
            let freq = c as f64 / 10_000.0;
            assert!((freq - 1.0 / 3.0).abs() < 0.05 / 3.0 + 0.01, "{counts:?}");
        }
    }

    #[test]
    fn greedy_single_antenna_is_trivial() {
        let net = random_net(5, 1, 1, 1, 1, 10.0);
        let clusters = ClusterSet::fully_coherent(1);
        let d_min = StreamAllocation::uniform(1, 1, 1);
        let out = greedy_allocate(&net, &clusters, &d_min, &SolverConfig::default(), || {
            substream(0, 0, Role::SolverInit)
        })
        .unwrap();
        assert_eq!(out, d_min);
    }

    #[test]
    fn greedy_keeps_one_stream_on_a_rank_one_channel() {
        // Rank-one link: a second stream carries no signal, only interference.
        let u = CMat::from_column_slice(2, 1, &[real(1.0), real(0.5)]);
        let v = CMat::from_row_slice(1, 2, &[real(0.8), real(-0.3)]);
        let net = NetworkRealization::from_channels(vec![vec![&u * &v]], 100.0);
        let clusters = ClusterSet::fully_coherent(1);
        let d_min = StreamAllocation::uniform(1, 1, 1);
        let cfg = SolverConfig::default();
        let rate = |d: usize| {
            let alloc = StreamAllocation::uniform(1, 1, d);
            let sys = System::new(&net, &clusters, &alloc).unwrap();
            wmmse_solve(&sys, &cfg, &mut substream(0, 0, Role::SolverInit)).unwrap().1.sum_rate
        };
        assert!(rate(1) > rate(2));
        let out = greedy_allocate(&net, &clusters, &d_min, &cfg, || substream(0, 0, Role::SolverInit)).unwrap();
        assert_eq!(out.d, vec![vec![1]]);
    }

    #[test]
    fn greedy_visits_every_pair_and_respects_bounds() {
        let net = random_net(6, 3, 3, 2, 2, 20.0);
        let clusters = ClusterSet::new(vec![vec![0, 1], vec![2]], 3).unwrap();
        let d_min = StreamAllocation {
            d: vec![vec![1, 2], vec![1, 1], vec![2, 1]],
        };
        let cfg = SolverConfig {
            max_outer_iters: 30,
            ..Default::default()
        };
        let out = greedy_allocate(&net, &clusters, &d_min, &cfg, || substream(1, 0, Role::SolverInit)).unwrap();
        for k in 0..3 {
            for c in 0..2 {
                assert!(out.get(k, c) >= d_min.get(k, c) && out.get(k, c) <= 2);
            }
        }
    }
}
