//! Phase-aligned zones and the partition of APs into clusters.
//!
//! AP indices are 0-based throughout. Within a cluster APs are kept in
//! ascending order, which is the stacking order for collective channels and
//! precoders.

use serde::{Deserialize, Serialize};

use crate::channel::{wrap_distance, NetworkRealization, Point};
use crate::error::{Error, Result};
use crate::linalg::{frob2, hcat, CMat};

/// `zones[l]`: APs within the reference distance of AP `l` (including `l`), ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneSet {
    pub zones: Vec<Vec<usize>>,
}

impl ZoneSet {
    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }
}

pub fn build_zones(ap_positions: &[Point], ref_distance: f64, area_side: f64) -> ZoneSet {
    let zones = ap_positions
        .iter()
        .map(|&p| {
            (0..ap_positions.len())
                .filter(|&j| wrap_distance(p, ap_positions[j], area_side) <= ref_distance)
                .collect()
        })
        .collect();
    ZoneSet { zones }
}

/// Disjoint AP clusters covering every AP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSet {
    clusters: Vec<Vec<usize>>,
    cluster_of: Vec<usize>,
}

impl ClusterSet {
    /// Validates and normalizes (ascending order inside each cluster) a partition of `0..num_aps`.
    pub fn new(mut clusters: Vec<Vec<usize>>, num_aps: usize) -> Result<Self> {
        let mut cluster_of = vec![usize::MAX; num_aps];
        for (c, members) in clusters.iter_mut().enumerate() {
            if members.is_empty() {
                return Err(Error::InvalidClusters(format!("cluster {c} is empty")));
            }
            members.sort_unstable();
            for &l in members.iter() {
                if l >= num_aps {
                    return Err(Error::InvalidClusters(format!(
                        "AP index {l} out of range for {num_aps} APs"
                    )));
                }
                if cluster_of[l] != usize::MAX {
                    return Err(Error::InvalidClusters(format!("AP {l} appears twice")));
                }
                cluster_of[l] = c;
            }
        }
        if let Some(l) = cluster_of.iter().position(|&c| c == usize::MAX) {
            return Err(Error::InvalidClusters(format!("AP {l} is not assigned")));
        }
        Ok(Self {
            clusters,
            cluster_of,
        })
    }

    /// One cluster holding every AP.
    pub fn fully_coherent(num_aps: usize) -> Self {
        Self::new(vec![(0..num_aps).collect()], num_aps).expect("valid partition")
    }

    /// Every AP on its own.
    pub fn non_coherent(num_aps: usize) -> Self {
        Self::new((0..num_aps).map(|l| vec![l]).collect(), num_aps).expect("valid partition")
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn num_aps(&self) -> usize {
        self.cluster_of.len()
    }

    pub fn members(&self, c: usize) -> &[usize] {
        &self.clusters[c]
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn cluster_of(&self, l: usize) -> usize {
        self.cluster_of[l]
    }

    /// Position of AP `l` inside its cluster's stacking order.
    pub fn slot_of(&self, l: usize) -> usize {
        let c = self.cluster_of[l];
        self.clusters[c].binary_search(&l).expect("AP is in its cluster")
    }

    /// Largest pairwise toroidal distance between APs sharing a cluster.
    pub fn max_diameter(&self, ap_positions: &[Point], area_side: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for members in &self.clusters {
            for (i, &a) in members.iter().enumerate() {
                for &b in &members[..i] {
                    worst = worst.max(wrap_distance(ap_positions[a], ap_positions[b], area_side));
                }
            }
        }
        worst
    }
}

impl Serialize for ClusterSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.clusters.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClusterSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let clusters = Vec::<Vec<usize>>::deserialize(d)?;
        let num_aps = clusters.iter().map(|c| c.len()).sum();
        ClusterSet::new(clusters, num_aps).map_err(serde::de::Error::custom)
    }
}

/// Total channel gain `Σ_k ‖G_kl‖²` of every AP.
pub fn ap_channel_gains(realization: &NetworkRealization) -> Vec<f64> {
    (0..realization.num_aps())
        .map(|l| {
            (0..realization.num_ues())
                .map(|k| frob2(realization.g(k, l)))
                .sum()
        })
        .collect()
}

/// A selected zone: the AP whose zone spawned the cluster and its members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeededCluster {
    pub seed: usize,
    pub members: Vec<usize>,
}

/// Zone-based clustering with the seed AP of every cluster.
///
/// Repeatedly takes the largest remaining zone (ties: larger total channel gain
/// of its remaining members, then lower AP index) and removes its APs from
/// every zone. Once only single-AP zones remain, each leftover AP becomes its
/// own cluster.
pub fn cluster_aps_seeded(zones: &ZoneSet, ap_gains: &[f64]) -> Vec<SeededCluster> {
    let num_aps = zones.len();
    assert_eq!(ap_gains.len(), num_aps, "one gain per AP");
    let mut remaining: Vec<Vec<usize>> = zones.zones.clone();
    let mut taken = vec![false; num_aps];
    let mut out = Vec::new();
    loop {
        let largest = remaining.iter().map(|z| z.len()).max().unwrap_or(0);
        if largest <= 1 {
            break;
        }
        let gain = |z: &[usize]| z.iter().map(|&l| ap_gains[l]).sum::<f64>();
        let mut best: Option<usize> = None;
        for (l, z) in remaining.iter().enumerate() {
            if z.len() != largest {
                continue;
            }
            match best {
                None => best = Some(l),
                Some(b) if gain(z) > gain(&remaining[b]) => best = Some(l),
                _ => {}
            }
        }
        let seed = best.expect("a zone of maximal size exists");
        let mut members = remaining[seed].clone();
        members.sort_unstable();
        for &l in &members {
            taken[l] = true;
        }
        for z in remaining.iter_mut() {
            z.retain(|&l| !taken[l]);
        }
        out.push(SeededCluster { seed, members });
    }
    // Leftover zones are singletons {l} for each untaken AP.
    for (l, z) in remaining.iter().enumerate() {
        if !taken[l] {
            debug_assert!(z.len() == 1 && z[0] == l);
            taken[l] = true;
            out.push(SeededCluster {
                seed: l,
                members: vec![l],
            });
        }
    }
    out
}

pub fn cluster_aps(zones: &ZoneSet, ap_gains: &[f64]) -> ClusterSet {
    let seeded = cluster_aps_seeded(zones, ap_gains);
    ClusterSet::new(seeded.into_iter().map(|s| s.members).collect(), zones.len())
        .expect("zone clustering yields a partition")
}

/// Baseline: each unassigned AP in index order seeds a group and absorbs its
/// nearest unassigned APs within `ref_distance` until the group has
/// `target_size` members.
pub fn even_distance_clustering(
    ap_positions: &[Point],
    ref_distance: f64,
    target_size: usize,
    area_side: f64,
) -> ClusterSet {
    let num_aps = ap_positions.len();
    let mut assigned = vec![false; num_aps];
    let mut clusters = Vec::new();
    for seed in 0..num_aps {
        if assigned[seed] {
            continue;
        }
        assigned[seed] = true;
        let mut candidates: Vec<(f64, usize)> = (0..num_aps)
            .filter(|&j| !assigned[j])
            .map(|j| (wrap_distance(ap_positions[seed], ap_positions[j], area_side), j))
            .filter(|&(d, _)| d <= ref_distance)
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut members = vec![seed];
        for (_, j) in candidates.into_iter().take(target_size.saturating_sub(1)) {
            assigned[j] = true;
            members.push(j);
        }
        clusters.push(members);
    }
    ClusterSet::new(clusters, num_aps).expect("greedy grouping yields a partition")
}

/// `Ḡ_kc`: the channels from the cluster's APs to UE `k`, side by side.
pub fn collective_channel(realization: &NetworkRealization, members: &[usize], k: usize) -> CMat {
    let blocks: Vec<&CMat> = members.iter().map(|&l| realization.g(k, l)).collect();
    hcat(&blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use crate::linalg::max_abs_diff;
    use proptest::prelude::*;

    /// Zones of a ten-AP layout, 1-based as drawn.
    fn worked_example_zones() -> ZoneSet {
        let one_based: [&[usize]; 10] = [
            &[1, 8, 9],
            &[2, 8],
            &[3, 9, 10],
            &[4, 5],
            &[4, 5, 6],
            &[5, 6, 9],
            &[7],
            &[1, 2, 8, 9],
            &[1, 3, 6, 8, 9, 10],
            &[3, 9, 10],
        ];
        ZoneSet {
            zones: one_based
                .iter()
                .map(|z| z.iter().map(|&l| l - 1).collect())
                .collect(),
        }
    }

    fn to_one_based(cs: &ClusterSet) -> Vec<Vec<usize>> {
        cs.clusters()
            .iter()
            .map(|c| c.iter().map(|&l| l + 1).collect())
            .collect()
    }

    #[test]
    fn worked_example_zones_are_symmetric() {
        let z = worked_example_zones();
        for (l, zone) in z.zones.iter().enumerate() {
            assert!(zone.contains(&l));
            for &j in zone {
                assert!(z.zones[j].contains(&l), "{l} in zone of {j}");
            }
        }
    }

    #[test]
    fn worked_example_clusters() {
        let z = worked_example_zones();
        let cs = cluster_aps(&z, &[1.0; 10]);
        assert_eq!(
            to_one_based(&cs),
            vec![vec![1, 3, 6, 8, 9, 10], vec![4, 5], vec![2], vec![7]]
        );
        let seeded = cluster_aps_seeded(&z, &[1.0; 10]);
        assert_eq!(seeded[0].seed, 8);
    }

    #[test]
    fn tie_break_prefers_stronger_zone_then_lower_index() {
        // Two disjoint zones of size 2: {0,1} and {2,3}.
        let z = ZoneSet {
            zones: vec![vec![0, 1], vec![0, 1], vec![2, 3], vec![2, 3]],
        };
        let weak_first = cluster_aps_seeded(&z, &[1.0, 1.0, 5.0, 5.0]);
        assert_eq!(weak_first[0].members, vec![2, 3]);
        assert_eq!(weak_first[0].seed, 2);
        let equal = cluster_aps_seeded(&z, &[1.0; 4]);
        assert_eq!(equal[0].seed, 0);
    }

    #[test]
    fn reference_distance_limits() {
        let cfg = ScenarioConfig::new(8, 1, 1, 1);
        let r = NetworkRealization::generate(&cfg, 3, 0).unwrap();
        let gains = ap_channel_gains(&r);
        let fnc = cluster_aps(&build_zones(&r.ap_positions, 0.0, 500.0), &gains);
        assert_eq!(fnc, ClusterSet::non_coherent(8));
        let below_spacing = cluster_aps(&build_zones(&r.ap_positions, 49.9, 500.0), &gains);
        assert_eq!(below_spacing, ClusterSet::non_coherent(8));
        let fc = cluster_aps(&build_zones(&r.ap_positions, 500.0 * 0.75, 500.0), &gains);
        assert_eq!(fc, ClusterSet::fully_coherent(8));
    }

    #[test]
    fn even_distance_groups_two_tight_blobs() {
        let mut pos = Vec::new();
        for i in 0..5 {
            pos.push([10.0 + i as f64, 10.0]);
        }
        for i in 0..5 {
            pos.push([250.0 + i as f64, 250.0]);
        }
        // Interleave so index order alone does not give the answer.
        let order = [0, 5, 1, 6, 2, 7, 3, 8, 4, 9];
        let shuffled: Vec<Point> = order.iter().map(|&i| pos[i]).collect();
        let cs = even_distance_clustering(&shuffled, 100.0, 5, 500.0);
        assert_eq!(cs.clusters(), &[vec![0, 2, 4, 6, 8], vec![1, 3, 5, 7, 9]]);
        assert_eq!(
            even_distance_clustering(&shuffled, 100.0, 1, 500.0),
            ClusterSet::non_coherent(10)
        );
        assert_eq!(
            even_distance_clustering(&shuffled, 0.0, 5, 500.0),
            ClusterSet::non_coherent(10)
        );
    }

    #[test]
    fn collective_channel_concatenates_in_cluster_order() {
        let cfg = ScenarioConfig::new(3, 2, 2, 2);
        let r = NetworkRealization::generate(&cfg, 1, 0).unwrap();
        assert_eq!(collective_channel(&r, &[1], 0), r.g(0, 1).clone());
        let g = collective_channel(&r, &[0, 2], 1);
        assert_eq!(g.shape(), (2, 4));
        assert!(max_abs_diff(&g.columns(0, 2).into_owned(), r.g(1, 0)) == 0.0);
        assert!(max_abs_diff(&g.columns(2, 2).into_owned(), r.g(1, 2)) == 0.0);
        let total = frob2(r.g(1, 0)) + frob2(r.g(1, 2));
        assert!((frob2(&g) - total).abs() <= 1e-12 * total);
    }

    #[test]
    fn cluster_set_validation_and_json() {
        assert!(ClusterSet::new(vec![vec![0], vec![0, 1]], 2).is_err());
        assert!(ClusterSet::new(vec![vec![0]], 2).is_err());
        assert!(ClusterSet::new(vec![vec![], vec![0, 1]], 2).is_err());
        let cs = ClusterSet::new(vec![vec![2, 0], vec![1]], 3).unwrap();
        assert_eq!(cs.members(0), &[0, 2]);
        assert_eq!(cs.slot_of(2), 1);
        assert_eq!(cs.cluster_of(1), 1);
        let text = serde_json::to_string(&cs).unwrap();
        assert_eq!(text, "[[0,2],[1]]");
        assert_eq!(serde_json::from_str::<ClusterSet>(&text).unwrap(), cs);
        assert!(serde_json::from_str::<ClusterSet>("[[0,0]]").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn zone_clustering_partitions_within_radius(
            seed in 0u64..1000, num_aps in 1usize..16, d in 0.0..400.0f64,
        ) {
            let cfg = ScenarioConfig::new(num_aps, 1, 2, 1);
            let r = NetworkRealization::generate(&cfg, seed, 0).unwrap();
            let zones = build_zones(&r.ap_positions, d, 500.0);
            for (l, z) in zones.zones.iter().enumerate() {
                prop_assert!(z.contains(&l));
                for &j in z {
                    prop_assert!(zones.zones[j].contains(&l));
                }
            }
            let gains = ap_channel_gains(&r);
            let seeded = cluster_aps_seeded(&zones, &gains);
            let cs = cluster_aps(&zones, &gains);
            prop_assert_eq!(cs.num_aps(), num_aps);
            let largest = zones.zones.iter().map(|z| z.len()).max().unwrap();
            prop_assert_eq!(seeded[0].members.len(), largest);
            for s in &seeded {
                for &l in &s.members {
                    prop_assert!(wrap_distance(r.ap_positions[s.seed], r.ap_positions[l], 500.0) <= d);
                }
            }
            prop_assert!(cs.max_diameter(&r.ap_positions, 500.0) <= 2.0 * d + 1e-9);
            prop_assert_eq!(cluster_aps(&zones, &gains), cs);
        }

        #[test]
        fn even_clustering_partitions_within_radius(
            seed in 0u64..1000, num_aps in 1usize..16, d in 0.0..400.0f64, size in 1usize..6,
        ) {
            let cfg = ScenarioConfig::new(num_aps, 1, 1, 1);
            let r = NetworkRealization::generate(&cfg, seed, 0).unwrap();
            let cs = even_distance_clustering(&r.ap_positions, d, size, 500.0);
            prop_assert_eq!(cs.num_aps(), num_aps);
            for members in cs.clusters() {
                prop_assert!(members.len() <= size);
                let lead = members[0];
                for &l in members {
                    prop_assert!(wrap_distance(r.ap_positions[lead], r.ap_positions[l], 500.0) <= d);
                }
            }
        }
    }
}
